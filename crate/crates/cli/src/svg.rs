//! Deterministic SVG figures: fixed float precision, no timestamps, no
//! external resources. Re-running a plot command reproduces the file byte
//! for byte.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write;

use spiralcvx_core::dynamics::{self, TrajectorySample};
use spiralcvx_core::foliation::FoliationParams;

fn header(out: &mut String, width: u32, height: u32) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    );
}

/// Nested rotated ellipses, one per requested leaf parameter.
pub fn foliation_svg(p: &FoliationParams, t_values: &[f64]) -> String {
    const S: f64 = 800.0;
    let t_max = t_values.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
    let world = 1.1 * p.mu() * (p.nu() * t_max).exp();
    let scale = S / 2.0 / world;
    let c = S / 2.0;

    let mut out = String::new();
    header(&mut out, S as u32, S as u32);
    let _ = write!(
        out,
        "<line x1=\"0\" y1=\"{c}\" x2=\"{S}\" y2=\"{c}\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n\
         <line x1=\"{c}\" y1=\"0\" x2=\"{c}\" y2=\"{S}\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n"
    );
    for &t in t_values {
        let rx = scale * p.mu() * (p.nu() * t).exp();
        let ry = scale * (p.nu() * t).exp();
        // Screen y points down, so a mathematically counterclockwise leaf
        // rotation is a negative SVG rotation.
        let deg = -t.to_degrees();
        let _ = write!(
            out,
            "<ellipse cx=\"{c}\" cy=\"{c}\" rx=\"{rx:.3}\" ry=\"{ry:.3}\" \
             transform=\"rotate({deg:.3} {c} {c})\" \
             fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"1.5\"/>\n",
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Orbit spiral: a main panel plus two inset panels zooming toward the
/// origin, since the curve is self-similar across decades of radius.
pub fn orbit_svg(samples: &[TrajectorySample], start_norm: f64) -> String {
    const S: f64 = 800.0;
    const INSET: f64 = 236.0;
    let mut out = String::new();
    header(&mut out, S as u32, S as u32);

    let r_main = 2.0 * start_norm.max(f64::MIN_POSITIVE);
    let panels = [
        (0.0, 0.0, S, r_main),
        (S - INSET - 12.0, 12.0, INSET, r_main * 1e-2),
        (S - INSET - 12.0, 2.0 * 12.0 + INSET, INSET, r_main * 1e-4),
    ];
    for (i, &(px, py, size, radius)) in panels.iter().enumerate() {
        let _ = write!(
            out,
            "<rect x=\"{px:.1}\" y=\"{py:.1}\" width=\"{size:.1}\" height=\"{size:.1}\" \
             fill=\"#ffffff\" stroke=\"#888888\" stroke-width=\"1\"/>\n"
        );
        let cx = px + size / 2.0;
        let cy = py + size / 2.0;
        let scale = size / 2.0 / radius;
        // Crosshair for the origin.
        let _ = write!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{cy:.1}\" x2=\"{:.1}\" y2=\"{cy:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n\
             <line x1=\"{cx:.1}\" y1=\"{py:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            px + size,
            py + size
        );
        // Polylines broken wherever the orbit leaves the panel window.
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run
                    .iter()
                    .map(|&(x, y)| format!("{x:.2},{y:.2}"))
                    .collect();
                let _ = write!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"#b03030\" stroke-width=\"1.2\"/>\n",
                    pts.join(" ")
                );
            }
            run.clear();
        };
        for s in samples {
            if s.norm <= radius * 0.98 {
                run.push((cx + scale * s.x, cy - scale * s.y));
            } else {
                flush(&mut run, &mut out);
            }
        }
        flush(&mut run, &mut out);
        let label = if i == 0 {
            format!("|q| &#8804; {radius:.2}")
        } else {
            format!("|q| &#8804; {radius:.1e}")
        };
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"14\" fill=\"#333333\">{label}</text>\n",
            px + 8.0,
            py + 20.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Graph of the winding rate over one period, with its zeros marked.
pub fn h_graph_svg(n: usize) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const ML: f64 = 60.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 40.0;

    let values: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let theta = TAU * i as f64 / n as f64;
            (theta, dynamics::winding_rate(theta))
        })
        .collect();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &(_, h) in &values {
        lo = lo.min(h);
        hi = hi.max(h);
    }
    let pad = 0.1 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let sx = |theta: f64| ML + (W - ML - MR) * theta / TAU;
    let sy = |h: f64| MT + (H - MT - MB) * (hi - h) / (hi - lo);

    let mut out = String::new();
    header(&mut out, W as u32, H as u32);
    // Zero line and frame.
    let _ = write!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999999\" stroke-width=\"1\"/>\n",
        sx(0.0),
        sy(0.0),
        sx(TAU),
        sy(0.0)
    );
    for (tick, label) in [
        (0.0, "0"),
        (FRAC_PI_2, "pi/2"),
        (PI, "pi"),
        (1.5 * PI, "3pi/2"),
        (TAU, "2pi"),
    ] {
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"13\" fill=\"#333333\" text-anchor=\"middle\">{label}</text>\n",
            MT,
            H - MB,
            H - MB + 18.0,
            x = sx(tick)
        );
    }
    let pts: Vec<String> = values
        .iter()
        .map(|&(theta, h)| format!("{:.2},{:.2}", sx(theta), sy(h)))
        .collect();
    let _ = write!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    );
    // The zeros of h sit exactly at multiples of pi/2.
    for k in 0..=4 {
        let theta = k as f64 * FRAC_PI_2;
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"none\" stroke=\"#b03030\" stroke-width=\"1.5\" class=\"zero\"/>\n",
            sx(theta),
            sy(dynamics::winding_rate(theta))
        );
    }
    out.push_str("</svg>\n");
    out
}
