//! Self-contained SVG output: top-down trajectory plots and sweep
//! line charts. No external assets, fixed float formatting so output
//! is byte-stable.

use anyhow::{bail, Result};
use vservo_core::geom::Pose2D;
use vservo_core::worldsim::Scene;

const TRAJ_SIZE: f64 = 500.0;
const MARGIN: f64 = 30.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Top-down view: room walls, start/goal markers, trajectory polyline.
pub fn trajectory_svg(scene: &Scene, start: &Pose2D, goal: &Pose2D, path: &[(f64, f64)]) -> Result<String> {
    if path.is_empty() {
        bail!("empty trajectory");
    }
    let [[x0, y0], [x1, y1]] = scene.bounds;
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (TRAJ_SIZE - 2.0 * MARGIN) / span;
    let px = |x: f64| MARGIN + (x - x0) * scale;
    // world y up, svg y down
    let py = |y: f64| TRAJ_SIZE - MARGIN - (y - y0) * scale;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        TRAJ_SIZE as u32
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for w in &scene.walls {
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>\n",
            fmt(px(w.a[0])),
            fmt(py(w.a[1])),
            fmt(px(w.b[0])),
            fmt(py(w.b[1]))
        ));
    }
    let pts: Vec<String> = path
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(px(*x)), fmt(py(*y))))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    for (x, y) in path {
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.5\" fill=\"steelblue\"/>\n",
            fmt(px(*x)),
            fmt(py(*y))
        ));
    }
    // start/goal markers with heading ticks
    for (pose, color) in [(start, "green"), (goal, "red")] {
        let (cx, cy) = (px(pose.x), py(pose.y));
        let (hx, hy) = (
            px(pose.x + 0.4 * pose.theta.cos()),
            py(pose.y + 0.4 * pose.theta.sin()),
        );
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{color}\"/>\n",
            fmt(cx),
            fmt(cy)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fmt(cx),
            fmt(cy),
            fmt(hx),
            fmt(hy)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Line chart of success rate against a swept parameter.
pub fn sweep_svg(title: &str, points: &[(f64, f64)]) -> Result<String> {
    if points.is_empty() {
        bail!("empty sweep");
    }
    let (w, h) = (500.0, 300.0);
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(1e-9);
    let px = |x: f64| MARGIN + (x - xmin) / span * (w - 2.0 * MARGIN);
    let py = |y: f64| h - MARGIN - y.clamp(0.0, 1.0) * (h - 2.0 * MARGIN);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">{title}</text>\n",
        fmt(MARGIN)
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = fmt(MARGIN),
        b = fmt(h - MARGIN),
        r = fmt(w - MARGIN),
        t = fmt(MARGIN)
    ));
    let pts: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(px(*x)), fmt(py(*y))))
        .collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    ));
    for (x, y) in points {
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"steelblue\"/>\n",
            fmt(px(*x)),
            fmt(py(*y))
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{x:.0}</text>\n",
            fmt(px(*x) - 5.0),
            fmt(h - MARGIN + 14.0)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
