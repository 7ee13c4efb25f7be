//! Q-learning training loop: ε-greedy rollouts feeding a replay
//! memory, Huber-loss minibatch updates with RMSprop, and a
//! periodically synced target network.

use super::network::QNetwork;
use super::replay::ReplayMemory;
use super::DqnError;
use crate::env::{sample_episode, Episode, SampleParams, NUM_ACTIONS};
use crate::geom::CameraIntrinsics;
use crate::metrics::RewardSpec;
use crate::worldsim::{NoiseSpec, Scene};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub gamma: f64,
    /// Exploration: linear from eps_start to eps_end over the first
    /// eps_fraction of iterations, then flat.
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_fraction: f64,
    pub target_sync: u64,
    pub replay_capacity: usize,
    /// Random-policy transitions collected before the first update.
    pub warmup: usize,
    /// Evaluation/curve checkpoint period; 0 disables checkpoints.
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub max_steps: u32,
    pub sample: SampleParams,
    pub reward: RewardSpec,
    pub noise: NoiseSpec,
    pub smoothing: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            batch_size: 128,
            learning_rate: 1e-5,
            rms_decay: 0.99,
            rms_eps: 1e-8,
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.1,
            eps_fraction: 0.5,
            target_sync: 1000,
            replay_capacity: 10_000,
            warmup: 500,
            eval_every: 1000,
            eval_episodes: 20,
            max_steps: 50,
            sample: SampleParams::default(),
            reward: RewardSpec::default(),
            noise: NoiseSpec::clean(0),
            smoothing: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        if self.learning_rate <= 0.0 {
            return Err(DqnError::BadConfig("learning rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(DqnError::BadConfig("gamma must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(DqnError::BadConfig("batch size must be > 0".into()));
        }
        if self.target_sync == 0 {
            return Err(DqnError::BadConfig("target sync period must be > 0".into()));
        }
        Ok(())
    }

    pub fn epsilon(&self, iteration: u64) -> f64 {
        let ramp = (self.iterations as f64 * self.eps_fraction).max(1.0);
        let t = (iteration as f64 / ramp).min(1.0);
        self.eps_start + t * (self.eps_end - self.eps_start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: u64,
    pub loss: f64,
    pub eval_success_rate: f64,
}

pub struct TrainResult {
    pub net: QNetwork,
    pub curve: Vec<CurvePoint>,
}

/// Learning curve CSV: iteration,loss,eval_success_rate.
pub fn learning_curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("iteration,loss,eval_success_rate\n");
    for p in curve {
        out.push_str(&format!(
            "{},{:.6},{:.4}\n",
            p.iteration, p.loss, p.eval_success_rate
        ));
    }
    out
}

/// One-step Q-learning target: r for terminal transitions, otherwise
/// r + γ·max_a target_net(next_obs)[a].
pub fn td_target(
    reward: f64,
    terminal: bool,
    next_q: &[f64],
    gamma: f64,
) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Huber (delta = 1) value and derivative of the prediction error.
fn huber(err: f64) -> (f64, f64) {
    if err.abs() <= 1.0 {
        (0.5 * err * err, err)
    } else {
        (err.abs() - 0.5, err.signum())
    }
}

struct RmsProp {
    mean_square: HashMap<String, Vec<f64>>,
    lr: f64,
    decay: f64,
    eps: f64,
}

impl RmsProp {
    fn new(cfg: &TrainConfig) -> Self {
        Self {
            mean_square: HashMap::new(),
            lr: cfg.learning_rate,
            decay: cfg.rms_decay,
            eps: cfg.rms_eps,
        }
    }

    fn step(&mut self, net: &mut QNetwork) {
        for (name, params, grads) in net.trainable_mut() {
            let ms = self
                .mean_square
                .entry(name)
                .or_insert_with(|| vec![0.0; params.len()]);
            for i in 0..params.len() {
                ms[i] = self.decay * ms[i] + (1.0 - self.decay) * grads[i] * grads[i];
                params[i] -= self.lr * grads[i] / (ms[i].sqrt() + self.eps);
            }
        }
    }
}

/// Round-robin episode source over the training scenes.
struct EpisodeSource<'a> {
    scenes: &'a [Scene],
    cam: &'a CameraIntrinsics,
    cfg: &'a TrainConfig,
    next_scene: usize,
}

impl<'a> EpisodeSource<'a> {
    fn next(&mut self, rng: &mut ChaCha20Rng) -> Result<Episode, DqnError> {
        let scene = &self.scenes[self.next_scene % self.scenes.len()];
        self.next_scene += 1;
        let noise = NoiseSpec {
            rng_seed: rng.gen(),
            ..self.cfg.noise
        };
        let spec = sample_episode(
            scene,
            self.cam,
            &self.cfg.sample,
            self.cfg.max_steps,
            noise,
            self.cfg.smoothing,
            rng,
        )?;
        Ok(Episode::start(scene, self.cam, spec, self.cfg.reward)?)
    }
}

/// Greedy success rate of `net` over a fixed episode suite.
pub fn evaluate(
    net: &mut QNetwork,
    scenes: &[Scene],
    cam: &CameraIntrinsics,
    cfg: &TrainConfig,
    suite_seed: u64,
) -> Result<f64, DqnError> {
    let mut rng = ChaCha20Rng::seed_from_u64(suite_seed);
    let mut source = EpisodeSource {
        scenes,
        cam,
        cfg,
        next_scene: 0,
    };
    let mut successes = 0usize;
    for _ in 0..cfg.eval_episodes {
        let mut ep = source.next(&mut rng)?;
        while !ep.terminal {
            let obs = ep.observe()?;
            let action = net.act_greedy(&obs);
            ep.step(action)?;
        }
        if ep.succeeded {
            successes += 1;
        }
    }
    Ok(successes as f64 / cfg.eval_episodes as f64)
}

/// Uniform-random-policy success rate over the same suite layout.
pub fn evaluate_random(
    scenes: &[Scene],
    cam: &CameraIntrinsics,
    cfg: &TrainConfig,
    suite_seed: u64,
) -> Result<f64, DqnError> {
    let mut rng = ChaCha20Rng::seed_from_u64(suite_seed);
    let mut source = EpisodeSource {
        scenes,
        cam,
        cfg,
        next_scene: 0,
    };
    let mut action_rng = ChaCha20Rng::seed_from_u64(suite_seed ^ 0xACAC_ACAC);
    let mut successes = 0usize;
    for _ in 0..cfg.eval_episodes {
        let mut ep = source.next(&mut rng)?;
        while !ep.terminal {
            ep.step(action_rng.gen_range(0..NUM_ACTIONS))?;
        }
        if ep.succeeded {
            successes += 1;
        }
    }
    Ok(successes as f64 / cfg.eval_episodes as f64)
}

const EVAL_SUITE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Train a Q-network from scratch. Fully deterministic given the seed;
/// aborts with an error if the loss goes non-finite.
pub fn train(
    scenes: &[Scene],
    cam: &CameraIntrinsics,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainResult, DqnError> {
    cfg.validate()?;
    assert!(!scenes.is_empty(), "at least one scene required");
    let side = cam.width as usize;
    let mut net = QNetwork::new(side, seed);
    let mut curve = Vec::new();
    if cfg.iterations == 0 {
        return Ok(TrainResult { net, curve });
    }

    let mut target = QNetwork::new(side, seed);
    target.copy_from(&mut net);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut replay = ReplayMemory::new(cfg.replay_capacity);
    let mut source = EpisodeSource {
        scenes,
        cam,
        cfg,
        next_scene: 0,
    };
    let mut opt = RmsProp::new(cfg);
    let suite_seed = seed ^ EVAL_SUITE_SALT;

    let mut episode = source.next(&mut rng)?;
    let warmup = cfg.warmup.min(cfg.replay_capacity).max(cfg.batch_size);
    while replay.len() < warmup {
        let action = rng.gen_range(0..NUM_ACTIONS);
        let t = episode.step(action)?;
        let terminal = t.terminal;
        replay.push(t);
        if terminal {
            episode = source.next(&mut rng)?;
        }
    }

    let mut loss_accum = 0.0;
    let mut loss_count = 0u64;
    for iteration in 0..cfg.iterations {
        // one ε-greedy environment step per parameter update
        let eps = cfg.epsilon(iteration);
        let action = if rng.gen::<f64>() < eps {
            rng.gen_range(0..NUM_ACTIONS)
        } else {
            let obs = episode.observe()?;
            net.act_greedy(&obs)
        };
        let t = episode.step(action)?;
        let terminal = t.terminal;
        replay.push(t);
        if terminal {
            episode = source.next(&mut rng)?;
        }

        // minibatch update against the frozen target network
        let idxs = replay.sample_indices(cfg.batch_size, &mut rng);
        let obs: Vec<_> = idxs.iter().map(|&i| &replay.get(i).observation).collect();
        let next_obs: Vec<_> = idxs
            .iter()
            .map(|&i| &replay.get(i).next_observation)
            .collect();
        let xn = target.encode_batch(&next_obs);
        let next_q = target.forward_eval(&xn);
        let x = net.encode_batch(&obs);
        let (q, cache) = net.forward_train(&x);

        let mut dq = Array2::<f64>::zeros(q.dim());
        let mut loss = 0.0;
        for (row, &i) in idxs.iter().enumerate() {
            let tr = replay.get(i);
            let next_row: Vec<f64> = next_q.row(row).to_vec();
            let target_value = td_target(tr.reward, tr.terminal, &next_row, cfg.gamma);
            let err = q[(row, tr.action)] - target_value;
            let (l, g) = huber(err);
            loss += l;
            dq[(row, tr.action)] = g / cfg.batch_size as f64;
        }
        loss /= cfg.batch_size as f64;
        if !loss.is_finite() {
            return Err(DqnError::Diverged(iteration, loss));
        }
        loss_accum += loss;
        loss_count += 1;

        net.zero_grads();
        net.backward(&cache, &dq);
        opt.step(&mut net);

        if (iteration + 1) % cfg.target_sync == 0 {
            target.copy_from(&mut net);
        }
        if cfg.eval_every > 0 && (iteration + 1) % cfg.eval_every == 0 {
            let rate = evaluate(&mut net, scenes, cam, cfg, suite_seed)?;
            curve.push(CurvePoint {
                iteration: iteration + 1,
                loss: loss_accum / loss_count as f64,
                eval_success_rate: rate,
            });
            loss_accum = 0.0;
            loss_count = 0;
        }
    }

    Ok(TrainResult { net, curve })
}
