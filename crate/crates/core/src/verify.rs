//! Seeded verification battery with a serializable, deterministic report.
//!
//! Every inequality the construction is supposed to satisfy gets a named row:
//! randomized rows draw their samples from a counter-based generator (ChaCha8)
//! seeded per row from the configured seed, so the whole report is a pure
//! function of the config. A row passes iff its worst residual is within the
//! row's tolerance; both numbers and the worst witness are part of the report.

use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convexity::{self, CONCAVITY_SLACK};
use crate::dynamics::{self, Direction, FlowControls, Termination};
use crate::foliation::{self, ChartPoint, PlanePoint};
use crate::function::{self, FunctionParams};
use crate::Error;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub tau: f64,
    pub seed: u64,
    /// Base sample count; heavier rows use a documented fraction of it.
    pub samples: usize,
    /// (alpha, lambda) grid for the support-concavity scan.
    pub scan_grid: [usize; 2],
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tau: function::DEFAULT_TAU,
            seed: 42,
            samples: 100_000,
            scan_grid: [256, 256],
        }
    }
}

/// Which part of the battery to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Foliation,
    Lojasiewicz,
    Convexity,
    Smoothness,
    Dynamics,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = [
        "all",
        "foliation",
        "lojasiewicz",
        "convexity",
        "smoothness",
        "dynamics",
    ];
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "all" => Ok(Suite::All),
            "foliation" => Ok(Suite::Foliation),
            "lojasiewicz" => Ok(Suite::Lojasiewicz),
            "convexity" => Ok(Suite::Convexity),
            "smoothness" => Ok(Suite::Smoothness),
            "dynamics" => Ok(Suite::Dynamics),
            other => Err(Error::Argument(format!(
                "unknown suite {other:?}; expected one of {}",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Suite::All => "all",
            Suite::Foliation => "foliation",
            Suite::Lojasiewicz => "lojasiewicz",
            Suite::Convexity => "convexity",
            Suite::Smoothness => "smoothness",
            Suite::Dynamics => "dynamics",
        };
        f.write_str(name)
    }
}

/// One named check. `pass` is exactly `worst_residual <= tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    pub samples: usize,
    pub worst_residual: f64,
    /// Input values at the worst sample.
    pub worst_witness: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub config: VerifyConfig,
    pub suites: Vec<SuiteRow>,
    pub all_pass: bool,
}

pub fn run(cfg: &VerifyConfig, suite: Suite) -> Result<VerificationReport, Error> {
    let rows = run_suite(cfg, suite)?;
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(VerificationReport {
        config: cfg.clone(),
        suites: rows,
        all_pass,
    })
}

/// Runs one suite (or all of them, in a fixed order) and returns the rows.
pub fn run_suite(cfg: &VerifyConfig, suite: Suite) -> Result<Vec<SuiteRow>, Error> {
    if cfg.samples == 0 {
        return Err(Error::Argument("sample count must be positive".into()));
    }
    if cfg.scan_grid[0] == 0 || cfg.scan_grid[1] == 0 {
        return Err(Error::Argument("scan grid must be non-empty".into()));
    }
    let p = FunctionParams::unrestricted(cfg.tau)?;
    match suite {
        Suite::All => {
            let mut rows = foliation_rows(cfg, &p)?;
            rows.extend(lojasiewicz_rows(cfg, &p)?);
            rows.extend(convexity_rows(cfg, &p)?);
            rows.extend(smoothness_rows(cfg, &p)?);
            rows.extend(dynamics_rows(&p)?);
            Ok(rows)
        }
        Suite::Foliation => foliation_rows(cfg, &p),
        Suite::Lojasiewicz => lojasiewicz_rows(cfg, &p),
        Suite::Convexity => convexity_rows(cfg, &p),
        Suite::Smoothness => smoothness_rows(cfg, &p),
        Suite::Dynamics => dynamics_rows(&p),
    }
}

// Per-row seed salts. Rows must not share streams, or trimming one would
// silently reshuffle another.
const SALT_ROUND_TRIP: u64 = 0x101;
const SALT_RESIDUAL_IDENTITY: u64 = 0x102;
const SALT_JACOBIAN_BAND: u64 = 0x103;
const SALT_NESTING: u64 = 0x104;
const SALT_LOJA: u64 = 0x201;
const SALT_KL: u64 = 0x202;
const SALT_SANDWICH: u64 = 0x203;
const SALT_SANDWICH_EQ: u64 = 0x204;
const SALT_HESSIAN: u64 = 0x301;
const SALT_MIDPOINT: u64 = 0x302;
const SALT_GRAD_FD: u64 = 0x401;

fn rng_for(cfg: &VerifyConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(salt))
}

/// Point with log-uniform norm in `[10^lo, 10^hi]` and uniform angle.
fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PlanePoint {
    let r = 10f64.powf(rng.random_range(lo..hi));
    let phi = rng.random_range(0.0..TAU);
    PlanePoint::new(r * phi.cos(), r * phi.sin())
}

struct Worst {
    value: f64,
    witness: Vec<f64>,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            witness: Vec::new(),
        }
    }

    fn observe(&mut self, value: f64, witness: &[f64]) {
        if value > self.value {
            self.value = value;
            self.witness = witness.to_vec();
        }
    }

    fn row(self, name: &str, samples: usize, tolerance: f64) -> SuiteRow {
        SuiteRow {
            suite: name.to_string(),
            samples,
            worst_residual: self.value,
            worst_witness: self.witness,
            tolerance,
            pass: self.value <= tolerance,
        }
    }
}

fn foliation_rows(cfg: &VerifyConfig, p: &FunctionParams) -> Result<Vec<SuiteRow>, Error> {
    let fol = *p.foliation();
    let n = cfg.samples;
    let mut rows = Vec::new();

    // Chart round trip over the span where leaves stay far from fp extremes.
    let mut rng = rng_for(cfg, SALT_ROUND_TRIP);
    let mut w = Worst::new();
    for _ in 0..n {
        let t = rng.random_range(-20.0..20.0);
        let theta = rng.random_range(0.0..TAU);
        let q = foliation::chart_to_plane(&fol, ChartPoint::new(t, theta));
        let inv = foliation::plane_to_chart(&fol, q)?;
        let err = (inv.chart.t - t)
            .abs()
            .max(foliation::angle_distance(inv.chart.theta, theta));
        w.observe(err, &[t, theta]);
    }
    rows.push(w.row("foliation/round-trip", n, 1e-9));

    // Transversality certificate against its closed form 7 e^{4 t}.
    let mut rng = rng_for(cfg, SALT_RESIDUAL_IDENTITY);
    let mut w = Worst::new();
    for _ in 0..n {
        let t: f64 = rng.random_range(-20.0..20.0);
        let expected = 7.0 * (4.0 * t).exp();
        let rel = ((foliation::foliation_residual(&fol, t) - expected) / expected).abs();
        w.observe(rel, &[t]);
    }
    rows.push(w.row("foliation/residual-identity", n, 1e-14));

    // Normalized Jacobian determinant stays inside its analytic band.
    let mut rng = rng_for(cfg, SALT_JACOBIAN_BAND);
    let mut w = Worst::new();
    let (band_lo, band_hi) = (SQRT_2 - 0.5, SQRT_2 + 0.5);
    for _ in 0..n {
        let t = rng.random_range(-20.0..20.0);
        let theta = rng.random_range(0.0..TAU);
        let v = foliation::jacobian_det(&fol, ChartPoint::new(t, theta)) * (-2.0 * t).exp();
        w.observe((band_lo - v).max(v - band_hi), &[t, theta]);
    }
    rows.push(w.row("foliation/jacobian-band", n, 1e-13));

    // Strict nesting: every point of an inner leaf sits strictly inside any
    // outer leaf, from nearly coincident to widely separated pairs. The
    // level function is the global containment test; the transversal chord
    // witness is only local.
    let m = (n / 10).max(1);
    let mut rng = rng_for(cfg, SALT_NESTING);
    let mut w = Worst::new();
    for _ in 0..m {
        let t = rng.random_range(-20.0..20.0);
        let delta = 10f64.powf(rng.random_range(-6.0..0.5));
        let theta = rng.random_range(0.0..TAU);
        let inner = foliation::chart_to_plane(&fol, ChartPoint::new(t, theta));
        let level = foliation::ellipse_level(&fol, inner, t + delta)?;
        w.observe(level - 1.0, &[t, delta, theta]);
    }
    rows.push(w.row("foliation/nesting", m, 0.0));

    Ok(rows)
}

fn lojasiewicz_rows(cfg: &VerifyConfig, p: &FunctionParams) -> Result<Vec<SuiteRow>, Error> {
    let n = cfg.samples;
    let tau = p.tau();
    let mut rows = Vec::new();

    // Gradient inequality |grad f| >= (tau/sqrt2) f^{1-tau}, scaled by the
    // larger side so the tolerance means relative defect.
    let mut rng = rng_for(cfg, SALT_LOJA);
    let mut w = Worst::new();
    for _ in 0..n {
        let q = random_point(&mut rng, -6.0, 6.0);
        let res = function::lojasiewicz_residual(p, q)?;
        let g = function::f_gradient(p, q)?;
        let f = function::f_value(p, q)?;
        let scale = g.norm().max((tau / SQRT_2) * f.powf(1.0 - tau));
        w.observe(-res / scale, &[q.x, q.y]);
    }
    rows.push(w.row("lojasiewicz/gradient-bound", n, 1e-12));

    // Desingularized form sqrt2 f^{tau-1} |grad f| >= 1.
    let mut rng = rng_for(cfg, SALT_KL);
    let mut w = Worst::new();
    for _ in 0..n {
        let q = random_point(&mut rng, -6.0, 6.0);
        let res = function::kl_residual(p, q)?;
        let scale = (res + 1.0).max(1.0);
        w.observe(-res / scale, &[q.x, q.y]);
    }
    rows.push(w.row("lojasiewicz/kl-bound", n, 1e-12));

    // Norm sandwich on f, relative to f.
    let mut rng = rng_for(cfg, SALT_SANDWICH);
    let mut w = Worst::new();
    for _ in 0..n {
        let q = random_point(&mut rng, -6.0, 6.0);
        let f = function::f_value(p, q)?;
        let (lo, hi) = function::sandwich_bounds(p, q);
        w.observe((lo - f).max(f - hi) / f, &[q.x, q.y]);
    }
    rows.push(w.row("lojasiewicz/sandwich-bounds", n, 1e-12));

    // The sandwich is tight: equality at the major tips (lower bound) and the
    // minor tips (upper bound) of every leaf.
    let m = (n / 10).max(1);
    let mut rng = rng_for(cfg, SALT_SANDWICH_EQ);
    let mut w = Worst::new();
    for _ in 0..m {
        let t = rng.random_range(-20.0..20.0);
        let fol = p.foliation();
        let major = foliation::chart_to_plane(fol, ChartPoint::new(t, 0.0));
        let minor = foliation::chart_to_plane(fol, ChartPoint::new(t, FRAC_PI_2));
        let (lo, _) = function::sandwich_bounds(p, major);
        let (_, hi) = function::sandwich_bounds(p, minor);
        let rel_major = ((function::f_value(p, major)? - lo) / lo).abs();
        let rel_minor = ((function::f_value(p, minor)? - hi) / hi).abs();
        w.observe(rel_major.max(rel_minor), &[t]);
    }
    rows.push(w.row("lojasiewicz/sandwich-equality", m, 1e-12));

    Ok(rows)
}

fn convexity_rows(cfg: &VerifyConfig, p: &FunctionParams) -> Result<Vec<SuiteRow>, Error> {
    let tau = p.tau();
    let mut rows = Vec::new();

    // Support-function concavity scan on an (alpha, lambda) log-grid.
    let [na, nl] = cfg.scan_grid;
    let alphas: Vec<f64> = (0..na).map(|i| TAU * i as f64 / na as f64).collect();
    let lambdas: Vec<f64> = (0..nl)
        .map(|i| 10f64.powf(-60.0 + 120.0 * i as f64 / (nl - 1).max(1) as f64))
        .collect();
    let scan = convexity::concavity_scan(tau, &alphas, &lambdas)?;
    rows.push(SuiteRow {
        suite: "convexity/support-concavity".into(),
        samples: na * nl,
        worst_residual: scan.worst_scaled,
        worst_witness: vec![scan.witness_alpha, scan.witness_lambda],
        tolerance: CONCAVITY_SLACK,
        pass: scan.worst_scaled <= CONCAVITY_SLACK,
    });

    // The t-independent certificate 2 tau (10 tau - 1) < 0. This is the row
    // that goes red when tau leaves the certified range, whatever the scan
    // happens to say pointwise.
    rows.push(SuiteRow {
        suite: "convexity/certified-range".into(),
        samples: 1,
        worst_residual: scan.bound_coefficient,
        worst_witness: vec![tau],
        tolerance: 0.0,
        pass: scan.bound_coefficient <= 0.0,
    });

    // Finite-difference Hessian is PSD up to FD noise, relative to its size.
    let m = (cfg.samples / 10).max(1);
    let mut rng = rng_for(cfg, SALT_HESSIAN);
    let mut w = Worst::new();
    for _ in 0..m {
        let q = random_point(&mut rng, -3.0, 3.0);
        let probe = convexity::hessian_fd(p, q)?;
        w.observe(-probe.min_eigenvalue / probe.frobenius, &[q.x, q.y]);
    }
    rows.push(w.row("convexity/hessian-psd", m, 1e-8));

    // Midpoint convexity on random segments, scaled by the mean value.
    let mut rng = rng_for(cfg, SALT_MIDPOINT);
    let mut w = Worst::new();
    for _ in 0..m {
        let a = random_point(&mut rng, -3.0, 3.0);
        let b = random_point(&mut rng, -3.0, 3.0);
        let gap = convexity::midpoint_check(p, a, b)?;
        let scale = 0.5 * (function::f_value(p, a)? + function::f_value(p, b)?);
        w.observe(gap / scale, &[a.x, a.y, b.x, b.y]);
    }
    rows.push(w.row("convexity/midpoint", m, 1e-12));

    Ok(rows)
}

fn smoothness_rows(cfg: &VerifyConfig, p: &FunctionParams) -> Result<Vec<SuiteRow>, Error> {
    let tau = p.tau();
    let mut rows = Vec::new();

    // Analytic gradient against radius-scaled central differences.
    let m = (cfg.samples / 10).max(1);
    let mut rng = rng_for(cfg, SALT_GRAD_FD);
    let mut w = Worst::new();
    for _ in 0..m {
        let q = random_point(&mut rng, -3.0, 3.0);
        let h = 1e-6 * q.norm();
        let g = function::f_gradient(p, q)?;
        let fd_x = (function::f_value(p, PlanePoint::new(q.x + h, q.y))?
            - function::f_value(p, PlanePoint::new(q.x - h, q.y))?)
            / (2.0 * h);
        let fd_y = (function::f_value(p, PlanePoint::new(q.x, q.y + h))?
            - function::f_value(p, PlanePoint::new(q.x, q.y - h))?)
            / (2.0 * h);
        let rel = (g.gx - fd_x).hypot(g.gy - fd_y) / g.norm();
        w.observe(rel, &[q.x, q.y]);
    }
    rows.push(w.row("smoothness/gradient-fd", m, 1e-6));

    // Derivative magnitudes scale like r^{1/tau - order} near the origin.
    let radii: Vec<f64> = (5..=20).map(|k| 2f64.powi(-k)).collect();
    for (order, tol) in [(1u32, 0.05), (2, 0.1)] {
        let est = function::derivative_scaling(p, order, &radii)?;
        let target = 1.0 / tau - order as f64;
        rows.push(SuiteRow {
            suite: format!("smoothness/scaling-order-{order}"),
            samples: radii.len(),
            worst_residual: (est.slope - target).abs(),
            worst_witness: vec![est.slope, target],
            tolerance: tol,
            pass: (est.slope - target).abs() <= tol,
        });
    }

    Ok(rows)
}

fn dynamics_rows(p: &FunctionParams) -> Result<Vec<SuiteRow>, Error> {
    let controls = FlowControls::default();
    let mut rows = Vec::new();

    // Mean winding rate: quadrature window and self-convergence.
    let a0 = dynamics::winding_constant(4096)?;
    rows.push(SuiteRow {
        suite: "dynamics/fourier-window".into(),
        samples: 4096,
        worst_residual: (-0.85 - a0).max(a0 + 0.83),
        worst_witness: vec![a0],
        tolerance: 0.0,
        pass: (-0.85..=-0.83).contains(&a0),
    });
    let a0_fine = dynamics::winding_constant(8192)?;
    rows.push(SuiteRow {
        suite: "dynamics/fourier-convergence".into(),
        samples: 8192,
        worst_residual: (a0_fine - a0).abs(),
        worst_witness: vec![a0, a0_fine],
        tolerance: 1e-12,
        pass: (a0_fine - a0).abs() <= 1e-12,
    });

    // Forward blow-up from (2, 0): event time under the analytic bound and
    // norms over the comparison solution.
    let start = PlanePoint::new(2.0, 0.0);
    let forward = dynamics::gradient_flow(p, start, Direction::Forward, &controls)?;
    let reached_outer = matches!(
        forward.termination,
        Termination::NormThreshold { threshold } if threshold == controls.r_max
    );
    let t_event = forward.samples.last().map_or(f64::MAX, |s| s.param);
    let bound = dynamics::blowup_bound(p, start)?;
    rows.push(SuiteRow {
        suite: "dynamics/blowup-time".into(),
        samples: forward.samples.len(),
        worst_residual: if reached_outer { t_event - bound } else { f64::MAX },
        worst_witness: vec![t_event, bound],
        tolerance: 0.0,
        pass: reached_outer && t_event <= bound,
    });
    let mut w = Worst::new();
    for s in &forward.samples {
        let z = dynamics::norm_lower_bound(p, start.norm(), s.param)?;
        w.observe((z - s.norm) / z, &[s.param]);
    }
    rows.push(w.row("dynamics/norm-floor", forward.samples.len(), 1e-6));

    // Backward decay to the inner threshold, monotonically.
    let backward = dynamics::gradient_flow(p, start, Direction::Backward, &controls)?;
    let reached_inner = matches!(
        backward.termination,
        Termination::NormThreshold { threshold } if threshold == controls.r_min
    );
    let mut w = Worst::new();
    for pair in backward.samples.windows(2) {
        w.observe(
            (pair[1].norm - pair[0].norm) / pair[0].norm,
            &[pair[0].param],
        );
    }
    if !reached_inner {
        w.observe(f64::MAX, &[]);
    }
    rows.push(w.row("dynamics/backward-decay", backward.samples.len(), 0.0));

    // Chart-orbit spiraling over t in [-50, 50] and gap stability when the
    // span doubles.
    let short = dynamics::winding_report(&dynamics::chart_orbit(p, 0.0, (-50.0, 50.0), &controls)?)?;
    let long = dynamics::winding_report(&dynamics::chart_orbit(p, 0.0, (-100.0, 100.0), &controls)?)?;
    rows.push(SuiteRow {
        suite: "dynamics/spiral-theta".into(),
        samples: 1,
        worst_residual: short.delta_theta + 45.0,
        worst_witness: vec![short.delta_theta],
        tolerance: 0.0,
        pass: short.delta_theta <= -45.0,
    });
    rows.push(SuiteRow {
        suite: "dynamics/spiral-alpha".into(),
        samples: 1,
        worst_residual: -short.delta_alpha,
        worst_witness: vec![short.delta_alpha],
        tolerance: 0.0,
        pass: short.delta_alpha > 0.0,
    });
    rows.push(SuiteRow {
        suite: "dynamics/gap-bounded".into(),
        samples: 2,
        worst_residual: long.bounded_gap / short.bounded_gap - 1.2,
        worst_witness: vec![short.bounded_gap, long.bounded_gap],
        tolerance: 0.0,
        pass: long.bounded_gap / short.bounded_gap < 1.2,
    });

    // Ergodic consistency: measured mean drift against the quadrature, and
    // the alpha rate per unit t inside the band from the chart-rate bounds.
    let measured = short.delta_alpha / short.delta_theta;
    let predicted = short.a0 / TAU;
    rows.push(SuiteRow {
        suite: "dynamics/turn-rate".into(),
        samples: 1,
        worst_residual: ((measured - predicted) / predicted).abs(),
        worst_witness: vec![measured, predicted],
        tolerance: 0.01,
        pass: ((measured - predicted) / predicted).abs() <= 0.01,
    });
    let rate = short.delta_alpha / 100.0;
    let rate_lo = short.a0.abs() / TAU * (SQRT_2 - 0.5) / 2.0;
    let rate_hi = short.a0.abs() / TAU * (SQRT_2 + 0.5);
    rows.push(SuiteRow {
        suite: "dynamics/alpha-rate".into(),
        samples: 1,
        worst_residual: (rate_lo - rate).max(rate - rate_hi),
        worst_witness: vec![rate, rate_lo, rate_hi],
        tolerance: 0.0,
        pass: (rate_lo..=rate_hi).contains(&rate),
    });

    // The two orbit representations agree: secant rates against the chart
    // ODE, and the traced curves themselves.
    let ratio = dynamics::dt_dtheta_consistency(&forward).unwrap_or(f64::MAX);
    rows.push(SuiteRow {
        suite: "dynamics/chart-consistency".into(),
        samples: forward.samples.len(),
        worst_residual: ratio,
        worst_witness: Vec::new(),
        tolerance: 1e-3,
        pass: ratio <= 1e-3,
    });
    let t_lo = forward.samples.first().map_or(0.0, |s| s.t);
    let t_hi = forward.samples.last().map_or(0.0, |s| s.t);
    let anchor = foliation::plane_to_chart(p.foliation(), start)?.chart;
    let chart = dynamics::chart_orbit_through(p, anchor, (t_lo - 0.01, t_hi + 0.01), &controls)?;
    let agreement = dynamics::curve_agreement(&forward, &chart)?;
    rows.push(SuiteRow {
        suite: "dynamics/curve-agreement".into(),
        samples: forward.samples.len(),
        worst_residual: agreement,
        worst_witness: Vec::new(),
        tolerance: 1e-4,
        pass: agreement <= 1e-4,
    });

    Ok(rows)
}
