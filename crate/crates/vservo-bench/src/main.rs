//! Benchmark CLI: seeded, reproducible experiments over the visual
//! servoing suite. Every command writes its outputs (plus a config
//! snapshot) into the --out directory; reruns with the same config and
//! seed produce byte-identical files.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vservo_bench::ablate::{run_ibvs_ablation, run_reward_ablation};
use vservo_bench::config::BenchConfig;
use vservo_bench::hardcase::{lvs_steps_after_overlap_loss, run_hardcase};
use vservo_bench::plot::{sweep_svg, trajectory_svg};
use vservo_bench::runner::{lvs_trace_csv, run_lvs_row};
use vservo_bench::suite::{build_scenes, build_suite};
use vservo_bench::sweep::{run_noise_sweep, COVERAGE_GRID, SIGMA_GRID};
use vservo_bench::table::ResultTable;
use vservo_core::dqn::{learning_curve_csv, train, QNetwork, TrainConfig};
use vservo_core::env::sample_episode_seeded;
use vservo_core::geom::CameraIntrinsics;
use vservo_core::metrics::RewardSpec;
use vservo_core::servo::{ibvs_episode, trajectory_csv, DepthPolicy, IbvsConfig};
use vservo_core::worldsim::Scene;

#[derive(Parser)]
#[command(name = "vservo-bench", about = "Visual servoing benchmark harness")]
struct Cli {
    /// JSON config file; unset fields fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "bench-out")]
    out: PathBuf,
    /// Worker threads for episode execution.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a room, sample one episode, and run classical IBVS on it.
    Simulate,
    /// Train a Q-network on the suite's scenes and save a checkpoint.
    Train,
    /// Evaluate a trained checkpoint on a seeded episode suite.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Feed raw (unsmoothed) correspondence maps to the policy.
        #[arg(long)]
        no_smoothing: bool,
    },
    /// Depth-policy ablation for classical IBVS (paired suite).
    AblateIbvs {
        /// Adds a learned-policy row to the table.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Exit 2 unless gt-depth >= const-depth >= no-depth.
        #[arg(long)]
        assert_orderings: bool,
    },
    /// Reward-structure ablation: trains one policy per reward variant.
    AblateReward {
        #[arg(long)]
        assert_orderings: bool,
    },
    /// Offset-noise and coverage sweeps for a trained policy.
    SweepNoise {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        assert_orderings: bool,
    },
    /// Constructed overlap-loss scenario: IBVS vs learned policy.
    Hardcase {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Re-render a stored trace or sweep table as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        output: PathBuf,
        /// Scene JSON for trace plots (walls drawn when given).
        #[arg(long)]
        scene: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Trace,
    Sweep,
}

fn load_config(cli: &Cli) -> Result<BenchConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            BenchConfig::from_json(&text).context("parsing config JSON")?
        }
        None => BenchConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| anyhow!(e))?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_net(path: &Path, resolution: u32) -> Result<QNetwork> {
    let net = QNetwork::load(path)
        .with_context(|| format!("loading checkpoint {}", path.display()))?;
    if net.input_size != resolution as usize {
        bail!(
            "checkpoint input size {} does not match resolution {resolution}",
            net.input_size
        );
    }
    Ok(net)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    std::fs::create_dir_all(&cli.out)?;
    write(&cli.out.join("config.json"), &cfg.to_json_pretty())?;

    match &cli.cmd {
        Cmd::Simulate => simulate(&cfg, &cli.out),
        Cmd::Train => cmd_train(&cfg, &cli.out),
        Cmd::Eval {
            checkpoint,
            no_smoothing,
        } => cmd_eval(&cfg, &cli.out, checkpoint, *no_smoothing, cli.jobs),
        Cmd::AblateIbvs {
            checkpoint,
            assert_orderings,
        } => cmd_ablate_ibvs(&cfg, &cli.out, checkpoint.as_deref(), *assert_orderings, cli.jobs),
        Cmd::AblateReward { assert_orderings } => {
            cmd_ablate_reward(&cfg, &cli.out, *assert_orderings, cli.jobs)
        }
        Cmd::SweepNoise {
            checkpoint,
            assert_orderings,
        } => cmd_sweep(&cfg, &cli.out, checkpoint, *assert_orderings, cli.jobs),
        Cmd::Hardcase { checkpoint } => cmd_hardcase(&cfg, &cli.out, checkpoint),
        Cmd::Plot {
            input,
            kind,
            output,
            scene,
        } => cmd_plot(input, *kind, output, scene.as_deref()),
    }
}

fn simulate(cfg: &BenchConfig, out: &Path) -> Result<ExitCode> {
    let scene = build_scenes(cfg, cfg.seed)?.remove(0);
    let cam = CameraIntrinsics::desk_default(cfg.resolution);
    let spec = sample_episode_seeded(
        &scene,
        &cam,
        &cfg.sample,
        cfg.max_steps,
        vservo_core::worldsim::NoiseSpec::clean(cfg.seed),
        cfg.smoothing,
        cfg.seed,
    )?;
    let ep = ibvs_episode(
        &scene,
        &spec.start,
        &spec.goal,
        &cam,
        &IbvsConfig {
            depth: DepthPolicy::GroundTruth,
            ..cfg.ibvs
        },
    )?;
    write(&out.join("scene.json"), &scene.to_json())?;
    write(&out.join("trajectory.csv"), &trajectory_csv(&ep))?;
    let path: Vec<(f64, f64)> = ep.steps.iter().map(|s| (s.pose.x, s.pose.y)).collect();
    let path = if path.is_empty() {
        vec![(spec.start.x, spec.start.y)]
    } else {
        path
    };
    write(
        &out.join("trajectory.svg"),
        &trajectory_svg(&scene, &spec.start, &spec.goal, &path)?,
    )?;
    write(
        &out.join("result.json"),
        &serde_json::to_string_pretty(&serde_json::json!({
            "outcome": format!("{}", ep.outcome),
            "steps": ep.steps.len(),
            "final_d_polar": ep.final_d_polar,
        }))?,
    )?;
    println!("simulate: {} in {} steps", ep.outcome, ep.steps.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(cfg: &BenchConfig, out: &Path) -> Result<ExitCode> {
    let scenes = build_scenes(cfg, cfg.seed)?;
    let cam = CameraIntrinsics::desk_default(cfg.resolution);
    let train_cfg = TrainConfig {
        sample: cfg.sample,
        max_steps: cfg.max_steps,
        ..cfg.train
    };
    let mut result = train(&scenes, &cam, &train_cfg, cfg.seed)?;
    result.net.save(&out.join("checkpoint.qnet"))?;
    write(
        &out.join("learning_curve.csv"),
        &learning_curve_csv(&result.curve),
    )?;
    if let Some(last) = result.curve.last() {
        println!(
            "train: {} iterations, final eval success {:.2}",
            train_cfg.iterations, last.eval_success_rate
        );
    } else {
        println!("train: {} iterations", train_cfg.iterations);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(
    cfg: &BenchConfig,
    out: &Path,
    checkpoint: &Path,
    no_smoothing: bool,
    jobs: usize,
) -> Result<ExitCode> {
    let net = load_net(checkpoint, cfg.resolution)?;
    let suite = build_suite(cfg, cfg.seed)?;
    let (label, smoothing) = if no_smoothing {
        ("learned-raw", Some(1))
    } else {
        ("learned", Some(cfg.smoothing))
    };
    let row = run_lvs_row(
        &suite,
        label,
        &net,
        RewardSpec::default(),
        None,
        smoothing,
        jobs,
    )?;
    let table = ResultTable { rows: vec![row] };
    write(&out.join("eval.csv"), &table.to_csv())?;
    println!(
        "eval: success rate {:.4} over {} episodes",
        table.rows[0].success_rate(),
        table.rows[0].episodes
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_ablate_ibvs(
    cfg: &BenchConfig,
    out: &Path,
    checkpoint: Option<&Path>,
    assert_orderings: bool,
    jobs: usize,
) -> Result<ExitCode> {
    let net = checkpoint
        .map(|p| load_net(p, cfg.resolution))
        .transpose()?;
    let suite = build_suite(cfg, cfg.seed)?;
    let table = run_ibvs_ablation(cfg, &suite, net.as_ref(), jobs)?;
    write(&out.join("ablate_ibvs.csv"), &table.to_csv())?;
    print!("{}", table.to_csv());
    if assert_orderings {
        let gt = table.success_rate("gt-depth").unwrap();
        let constant = table.success_rate("const-depth-4.0").unwrap();
        let nodepth = table.success_rate("no-depth").unwrap();
        if !(gt >= constant && constant >= nodepth && gt - nodepth >= 0.15) {
            eprintln!(
                "ordering violated: gt {gt:.4}, const {constant:.4}, no-depth {nodepth:.4}"
            );
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ablate_reward(
    cfg: &BenchConfig,
    out: &Path,
    assert_orderings: bool,
    jobs: usize,
) -> Result<ExitCode> {
    let suite = build_suite(cfg, cfg.seed)?;
    let table = run_reward_ablation(cfg, &suite, jobs)?;
    write(&out.join("ablate_reward.csv"), &table.to_csv())?;
    print!("{}", table.to_csv());
    if assert_orderings {
        let dist = table.success_rate("dist-minimize_d-polar");
        let pose = table.success_rate("progress_d-pose");
        match (dist, pose) {
            (Some(d), Some(p)) if d >= p => {}
            _ => {
                eprintln!("ordering violated or a run diverged");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    cfg: &BenchConfig,
    out: &Path,
    checkpoint: &Path,
    assert_orderings: bool,
    jobs: usize,
) -> Result<ExitCode> {
    let net = load_net(checkpoint, cfg.resolution)?;
    let suite = build_suite(cfg, cfg.seed)?;
    let table = run_noise_sweep(cfg, &suite, &net, jobs)?;
    write(&out.join("sweep_noise.csv"), &table.to_csv())?;
    print!("{}", table.to_csv());

    let sigma_pts: Vec<(f64, f64)> = SIGMA_GRID
        .iter()
        .map(|s| (*s, table.success_rate(&format!("sigma-{s:.0}")).unwrap()))
        .collect();
    let cov_pts: Vec<(f64, f64)> = COVERAGE_GRID
        .iter()
        .map(|c| (*c, table.success_rate(&format!("coverage-{c:.1}")).unwrap()))
        .collect();
    write(
        &out.join("sweep_sigma.svg"),
        &sweep_svg("success vs offset noise sigma (px)", &sigma_pts)?,
    )?;
    write(
        &out.join("sweep_coverage.svg"),
        &sweep_svg("success vs correspondence coverage", &cov_pts)?,
    )?;

    if assert_orderings {
        let clean = table.success_rate("sigma-0").unwrap();
        let s32 = table.success_rate("sigma-32").unwrap();
        let c50 = table.success_rate("coverage-0.5").unwrap();
        if !(s32 >= clean - 0.15 && c50 >= clean - 0.15) {
            eprintln!(
                "degradation too large: clean {clean:.4}, sigma-32 {s32:.4}, coverage-0.5 {c50:.4}"
            );
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_hardcase(cfg: &BenchConfig, out: &Path, checkpoint: &Path) -> Result<ExitCode> {
    let net = load_net(checkpoint, cfg.resolution)?;
    let result = run_hardcase(cfg, &net)?;
    write(&out.join("ibvs_trace.csv"), &trajectory_csv(&result.ibvs))?;
    write(&out.join("lvs_trace.csv"), &lvs_trace_csv(&result.lvs))?;

    let fallback = vec![(result.start.x, result.start.y)];
    let mut ibvs_path: Vec<(f64, f64)> = result
        .ibvs
        .steps
        .iter()
        .map(|s| (s.pose.x, s.pose.y))
        .collect();
    if ibvs_path.is_empty() {
        ibvs_path = fallback.clone();
    }
    let mut lvs_path: Vec<(f64, f64)> = result
        .lvs
        .steps
        .iter()
        .map(|s| (s.pose.x, s.pose.y))
        .collect();
    if lvs_path.is_empty() {
        lvs_path = fallback;
    }
    write(
        &out.join("hardcase_ibvs.svg"),
        &trajectory_svg(&result.scene, &result.start, &result.goal, &ibvs_path)?,
    )?;
    write(
        &out.join("hardcase_lvs.svg"),
        &trajectory_svg(&result.scene, &result.start, &result.goal, &lvs_path)?,
    )?;
    let after = lvs_steps_after_overlap_loss(&result.lvs, cfg.ibvs.min_overlap);
    write(
        &out.join("outcomes.json"),
        &serde_json::to_string_pretty(&serde_json::json!({
            "ibvs_outcome": format!("{}", result.ibvs.outcome),
            "ibvs_final_d_polar": result.ibvs.final_d_polar,
            "lvs_success": result.lvs.success,
            "lvs_final_d_polar": result.lvs.final_d_polar,
            "lvs_steps_after_overlap_loss": after,
        }))?,
    )?;
    println!(
        "hardcase: ibvs {} (d={:.3}), learned d={:.3}, {} steps after overlap loss",
        result.ibvs.outcome, result.ibvs.final_d_polar, result.lvs.final_d_polar, after
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(input: &Path, kind: PlotKind, output: &Path, scene: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let svg = match kind {
        PlotKind::Trace => {
            let mut xs = Vec::new();
            for line in text.lines().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 3 {
                    continue;
                }
                xs.push((cols[1].parse::<f64>()?, cols[2].parse::<f64>()?));
            }
            if xs.is_empty() {
                bail!("trace has no points");
            }
            let scene = match scene {
                Some(p) => Scene::from_json(&std::fs::read_to_string(p)?)?,
                None => {
                    let span = xs
                        .iter()
                        .flat_map(|(x, y)| [*x, *y])
                        .fold(1.0_f64, f64::max);
                    Scene::empty_room(span + 1.0, span + 1.0, 2.5)
                }
            };
            let first = vservo_core::geom::Pose2D::new(xs[0].0, xs[0].1, 0.0);
            let last_pt = *xs.last().unwrap();
            let last = vservo_core::geom::Pose2D::new(last_pt.0, last_pt.1, 0.0);
            trajectory_svg(&scene, &first, &last, &xs)?
        }
        PlotKind::Sweep => {
            let mut pts = Vec::new();
            for (i, line) in text.lines().skip(1).enumerate() {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 2 {
                    continue;
                }
                pts.push((i as f64, cols[1].parse::<f64>()?));
            }
            sweep_svg("sweep", &pts)?
        }
    };
    write(output, &svg)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
