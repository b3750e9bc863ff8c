//! Command-line surface: pointwise evaluation, chart inversion, the
//! verification battery, orbit traces, winding summaries, the mean-drift
//! quadrature, and SVG figures.
//!
//! Exit codes: 0 success, 1 verification or integration failure, 2 usage
//! error. All outputs are deterministic for fixed flags and seed; reports
//! carry no timestamps (timings go to stderr).

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spiralcvx_core::dynamics::{self, Direction, FlowControls, Termination, Trajectory};
use spiralcvx_core::foliation::{self, PlanePoint};
use spiralcvx_core::function::{self, FunctionParams};
use spiralcvx_core::verify::{self, Suite, VerificationReport, VerifyConfig};
use spiralcvx_core::Error as CoreError;

mod svg;

#[derive(Parser)]
#[command(
    name = "spiralcvx",
    version,
    about = "An explicit planar convex function whose gradient orbits spiral at the origin and at infinity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate f, its gradient, the norm sandwich, and inequality residuals at (x, y)
    Eval {
        #[arg(allow_negative_numbers = true)]
        x: f64,
        #[arg(allow_negative_numbers = true)]
        y: f64,
        #[command(flatten)]
        tau: TauOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert the chart at (x, y): which leaf, and where on it
    Invert {
        #[arg(allow_negative_numbers = true)]
        x: f64,
        #[arg(allow_negative_numbers = true)]
        y: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites and emit a JSON report (exit 1 if any row fails)
    Verify {
        /// all, foliation, lojasiewicz, convexity, smoothness, or dynamics
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        tau: TauOpt,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace an orbit to CSV, one row per accepted step
    Trace {
        #[arg(allow_negative_numbers = true)]
        x0: f64,
        #[arg(allow_negative_numbers = true)]
        y0: f64,
        /// time: forward gradient flow to the outer norm threshold;
        /// chart: leaf-parameter orbit over the span through (x0, y0)
        #[arg(long, value_enum, default_value_t = Mode::Time)]
        mode: Mode,
        #[arg(long, default_value_t = -50.0, allow_negative_numbers = true)]
        span_lo: f64,
        #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
        span_hi: f64,
        #[command(flatten)]
        flow: FlowOpt,
        #[command(flatten)]
        tau: TauOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Winding summary of an orbit as JSON
    Winding {
        #[arg(long, value_enum, default_value_t = Mode::Chart)]
        mode: Mode,
        /// Chart mode: starting angle at span_lo
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta0: f64,
        /// Time mode: starting point of the forward flow
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        y0: f64,
        #[arg(long, default_value_t = -50.0, allow_negative_numbers = true)]
        span_lo: f64,
        #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
        span_hi: f64,
        #[command(flatten)]
        flow: FlowOpt,
        #[command(flatten)]
        tau: TauOpt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quadrature of the mean winding rate, with a convergence history
    Fourier {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit an SVG figure
    Plot {
        #[arg(value_enum)]
        what: PlotKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        span_lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        span_hi: Option<f64>,
        /// Leaf count for foliation, graph points for h
        #[arg(long)]
        samples: Option<usize>,
        /// Orbit start point
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        y0: f64,
        #[command(flatten)]
        tau: TauOpt,
    },
}

#[derive(Args)]
struct TauOpt {
    /// Sharpness exponent of f = exp(t / tau)
    #[arg(long, default_value_t = function::DEFAULT_TAU)]
    tau: f64,
    /// Accept tau up to 1/2, past the range where convexity is certified
    #[arg(long)]
    allow_unsafe_tau: bool,
}

impl TauOpt {
    fn params(&self) -> Result<FunctionParams, AppError> {
        let r = if self.allow_unsafe_tau {
            FunctionParams::unrestricted(self.tau)
        } else {
            FunctionParams::new(self.tau)
        };
        r.map_err(AppError::Core)
    }
}

#[derive(Args)]
struct FlowOpt {
    #[arg(long, default_value_t = 1e6)]
    r_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    r_min: f64,
}

impl FlowOpt {
    fn controls(&self) -> FlowControls {
        FlowControls {
            r_max: self.r_max,
            r_min: self.r_min,
            ..FlowControls::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Time,
    Chart,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Foliation,
    Orbit,
    H,
}

#[derive(Debug)]
enum AppError {
    Core(CoreError),
    Io(io::Error),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Core(e) => e.fmt(f),
            AppError::Io(e) => e.fmt(f),
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Core(e)
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

impl AppError {
    /// 1 for numeric failures inside a well-posed run, 2 for everything the
    /// caller got wrong (arguments, domains, paths).
    fn code(&self) -> u8 {
        match self {
            AppError::Core(CoreError::NoConvergence { .. }) => 1,
            AppError::Core(_) | AppError::Io(_) => 2,
        }
    }
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.code().into()
        }
    }
}

fn run(command: Command) -> Result<u8, AppError> {
    match command {
        Command::Eval { x, y, tau, out } => cmd_eval(x, y, &tau, &out),
        Command::Invert { x, y, out } => cmd_invert(x, y, &out),
        Command::Verify {
            suite,
            tau,
            seed,
            samples,
            out,
        } => cmd_verify(&suite, &tau, seed, samples, &out),
        Command::Trace {
            x0,
            y0,
            mode,
            span_lo,
            span_hi,
            flow,
            tau,
            out,
        } => cmd_trace(x0, y0, mode, (span_lo, span_hi), &flow, &tau, &out),
        Command::Winding {
            mode,
            theta0,
            x0,
            y0,
            span_lo,
            span_hi,
            flow,
            tau,
            out,
        } => cmd_winding(mode, theta0, x0, y0, (span_lo, span_hi), &flow, &tau, &out),
        Command::Fourier { n, out } => cmd_fourier(n, &out),
        Command::Plot {
            what,
            out,
            span_lo,
            span_hi,
            samples,
            x0,
            y0,
            tau,
        } => cmd_plot(what, &out, span_lo, span_hi, samples, x0, y0, &tau),
    }
}

fn write_output(text: &str, out: &Option<PathBuf>) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_output(&text, out)
}

#[derive(Serialize)]
struct ChartOut {
    t: f64,
    theta: f64,
}

#[derive(Serialize)]
struct EvalOut {
    f: f64,
    grad: [f64; 2],
    chart: Option<ChartOut>,
    bounds: BoundsOut,
    residuals: ResidualsOut,
}

#[derive(Serialize)]
struct BoundsOut {
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct ResidualsOut {
    lojasiewicz: f64,
    kl: Option<f64>,
}

fn cmd_eval(x: f64, y: f64, tau: &TauOpt, out: &Option<PathBuf>) -> Result<u8, AppError> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(CoreError::Argument(format!("point must be finite, got ({x}, {y})")).into());
    }
    let p = tau.params()?;
    let q = PlanePoint::new(x, y);
    let g = function::f_gradient(&p, q)?;
    let (lower, upper) = function::sandwich_bounds(&p, q);
    let record = EvalOut {
        f: function::f_value(&p, q)?,
        grad: [g.gx, g.gy],
        chart: g.chart.map(|c| ChartOut {
            t: c.t,
            theta: c.theta,
        }),
        bounds: BoundsOut { lower, upper },
        residuals: ResidualsOut {
            lojasiewicz: function::lojasiewicz_residual(&p, q)?,
            kl: if q.is_origin() {
                None
            } else {
                Some(function::kl_residual(&p, q)?)
            },
        },
    };
    write_json(&record, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct InvertOut {
    t: f64,
    theta: f64,
    iterations: u32,
    residual: f64,
}

fn cmd_invert(x: f64, y: f64, out: &Option<PathBuf>) -> Result<u8, AppError> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(CoreError::Argument(format!("point must be finite, got ({x}, {y})")).into());
    }
    let inv = foliation::plane_to_chart(
        &foliation::FoliationParams::canonical(),
        PlanePoint::new(x, y),
    )?;
    write_json(
        &InvertOut {
            t: inv.chart.t,
            theta: inv.chart.theta,
            iterations: inv.iterations,
            residual: inv.residual,
        },
        out,
    )?;
    Ok(0)
}

fn cmd_verify(
    suite: &str,
    tau: &TauOpt,
    seed: u64,
    samples: usize,
    out: &Option<PathBuf>,
) -> Result<u8, AppError> {
    let suite: Suite = suite.parse()?;
    tau.params()?;
    let cfg = VerifyConfig {
        tau: tau.tau,
        seed,
        samples,
        ..VerifyConfig::default()
    };
    let parts = match suite {
        Suite::All => vec![
            Suite::Foliation,
            Suite::Lojasiewicz,
            Suite::Convexity,
            Suite::Smoothness,
            Suite::Dynamics,
        ],
        single => vec![single],
    };
    let mut rows = Vec::new();
    for part in parts {
        let started = Instant::now();
        rows.extend(verify::run_suite(&cfg, part)?);
        // Wall time never goes in the report; reruns must be byte-identical.
        eprintln!(
            "{part}: {:.1} ms",
            started.elapsed().as_secs_f64() * 1e3
        );
    }
    let report = VerificationReport {
        config: cfg,
        all_pass: rows.iter().all(|r| r.pass),
        suites: rows,
    };
    write_json(&report, out)?;
    Ok(if report.all_pass { 0 } else { 1 })
}

fn termination_label(t: &Termination) -> &'static str {
    match t {
        Termination::NormThreshold { .. } => "norm_threshold",
        Termination::SpanEnd => "span_end",
        Termination::MaxSteps => "max_steps",
        Termination::StepUnderflow => "step_underflow",
    }
}

fn make_trajectory(
    p: &FunctionParams,
    mode: Mode,
    start: PlanePoint,
    theta0: Option<f64>,
    span: (f64, f64),
    controls: &FlowControls,
) -> Result<Trajectory, AppError> {
    let traj = match mode {
        Mode::Time => dynamics::gradient_flow(p, start, Direction::Forward, controls)?,
        Mode::Chart => match theta0 {
            Some(theta0) => dynamics::chart_orbit(p, theta0, span, controls)?,
            None => {
                let anchor = foliation::plane_to_chart(p.foliation(), start)?.chart;
                dynamics::chart_orbit_through(p, anchor, span, controls)?
            }
        },
    };
    Ok(traj)
}

fn trajectory_succeeded(mode: Mode, traj: &Trajectory) -> bool {
    match mode {
        Mode::Time => matches!(traj.termination, Termination::NormThreshold { .. }),
        Mode::Chart => matches!(traj.termination, Termination::SpanEnd),
    }
}

fn cmd_trace(
    x0: f64,
    y0: f64,
    mode: Mode,
    span: (f64, f64),
    flow: &FlowOpt,
    tau: &TauOpt,
    out: &Option<PathBuf>,
) -> Result<u8, AppError> {
    let p = tau.params()?;
    let controls = flow.controls();
    let traj = make_trajectory(&p, mode, PlanePoint::new(x0, y0), None, span, &controls)?;

    let mut text = String::from("param,x,y,t,theta,alpha,f,norm\n");
    for s in &traj.samples {
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.param, s.x, s.y, s.t, s.theta, s.alpha, s.f, s.norm
        ));
    }
    write_output(&text, out)?;

    if trajectory_succeeded(mode, &traj) {
        Ok(0)
    } else {
        eprintln!(
            "integration stopped early: {}",
            termination_label(&traj.termination)
        );
        Ok(1)
    }
}

#[derive(Serialize)]
struct WindingOut {
    mode: &'static str,
    delta_alpha: f64,
    turns: f64,
    delta_theta: f64,
    a0: f64,
    bounded_gap: f64,
    samples: usize,
    termination: &'static str,
    /// Time mode only: when the forward flow hit the outer threshold.
    t_event: Option<f64>,
    /// Time mode only: event time plus the analytic tail bound from the
    /// threshold outward, an upper estimate for the true blow-up time.
    blowup_estimate: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_winding(
    mode: Mode,
    theta0: f64,
    x0: f64,
    y0: f64,
    span: (f64, f64),
    flow: &FlowOpt,
    tau: &TauOpt,
    out: &Option<PathBuf>,
) -> Result<u8, AppError> {
    let p = tau.params()?;
    let controls = flow.controls();
    let traj = make_trajectory(
        &p,
        mode,
        PlanePoint::new(x0, y0),
        if mode == Mode::Chart { Some(theta0) } else { None },
        span,
        &controls,
    )?;
    let report = dynamics::winding_report(&traj)?;

    let (t_event, blowup_estimate) = match (mode, &traj.termination) {
        (Mode::Time, Termination::NormThreshold { .. }) => {
            let t_event = traj.samples.last().expect("non-empty trajectory").param;
            let tail = dynamics::blowup_bound_from_norm(&p, controls.r_max)?;
            (Some(t_event), Some(t_event + tail))
        }
        _ => (None, None),
    };

    write_json(
        &WindingOut {
            mode: match mode {
                Mode::Time => "time",
                Mode::Chart => "chart",
            },
            delta_alpha: report.delta_alpha,
            turns: report.turns,
            delta_theta: report.delta_theta,
            a0: report.a0,
            bounded_gap: report.bounded_gap,
            samples: traj.samples.len(),
            termination: termination_label(&traj.termination),
            t_event,
            blowup_estimate,
        },
        out,
    )?;
    Ok(if trajectory_succeeded(mode, &traj) { 0 } else { 1 })
}

#[derive(Serialize)]
struct FourierOut {
    a0: f64,
    convergence_history: Vec<FourierEntry>,
}

#[derive(Serialize)]
struct FourierEntry {
    n: usize,
    a0: f64,
}

fn cmd_fourier(n: usize, out: &Option<PathBuf>) -> Result<u8, AppError> {
    let history: Vec<FourierEntry> = [n, 2 * n, 4 * n]
        .into_iter()
        .map(|k| {
            Ok(FourierEntry {
                n: k,
                a0: dynamics::winding_constant(k)?,
            })
        })
        .collect::<Result<_, CoreError>>()?;
    write_json(
        &FourierOut {
            a0: history[0].a0,
            convergence_history: history,
        },
        out,
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_plot(
    what: PlotKind,
    out: &PathBuf,
    span_lo: Option<f64>,
    span_hi: Option<f64>,
    samples: Option<usize>,
    x0: f64,
    y0: f64,
    tau: &TauOpt,
) -> Result<u8, AppError> {
    let p = tau.params()?;
    let text = match what {
        PlotKind::Foliation => {
            let lo = span_lo.unwrap_or(-1.0);
            let hi = span_hi.unwrap_or(1.0);
            let k = samples.unwrap_or(7);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || k == 0 {
                return Err(CoreError::Argument(format!(
                    "foliation grid needs a finite span and a positive leaf count, got [{lo}, {hi}] x {k}"
                ))
                .into());
            }
            let ts: Vec<f64> = if k == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..k)
                    .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
                    .collect()
            };
            svg::foliation_svg(p.foliation(), &ts)
        }
        PlotKind::Orbit => {
            // The default span gives the spiral more than three full turns.
            let lo = span_lo.unwrap_or(-90.0);
            let hi = span_hi.unwrap_or(90.0);
            let traj = make_trajectory(
                &p,
                Mode::Chart,
                PlanePoint::new(x0, y0),
                None,
                (lo, hi),
                &FlowControls::default(),
            )?;
            svg::orbit_svg(&traj.samples, PlanePoint::new(x0, y0).norm())
        }
        PlotKind::H => {
            let n = samples.unwrap_or(720);
            if n < 8 {
                return Err(
                    CoreError::Argument(format!("h graph needs at least 8 points, got {n}")).into(),
                );
            }
            svg::h_graph_svg(n)
        }
    };
    fs::write(out, text)?;
    Ok(0)
}
