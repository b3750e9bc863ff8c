//! Gradient-flow dynamics: orbits, winding, and blow-up certificates.
//!
//! Two representations of the same orbit family are integrated and cross
//! checked. The Cartesian representation follows `gamma' = grad f` directly
//! (parametrized by arclength so that the finite-time blow-up does not stall
//! the stepper) and validates the analytic blow-up bound. The chart
//! representation reduces the orbit to the scalar autonomous ODE
//! `dtheta/dt = -(sqrt2 - cos sin)/(1 + sin^2)`, which has no stiffness and
//! tracks spiraling over arbitrarily large leaf spans.
//!
//! The winding angle `alpha = t + phi(theta)` is the actual polar angle of
//! the moving point, accumulated continuously; its drift rate against theta
//! is `h(theta)`, whose mean over a period is the constant the whole
//! spiraling argument hinges on.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::foliation::{self, ChartPoint, FoliationParams, PlanePoint};
use crate::function::{self, FunctionParams};
use crate::ode::{Dopri5, Outcome, StepControl};
use crate::Error;

/// Controls shared by both orbit representations.
#[derive(Debug, Clone, Copy)]
pub struct FlowControls {
    /// Outer norm threshold; forward flows stop here.
    pub r_max: f64,
    /// Inner norm threshold; backward flows stop here.
    pub r_min: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Per-step cap on the chart angle change. Keeps the incremental
    /// unwrapping unambiguous and the per-step secants accurate.
    pub theta_step_max: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            r_max: 1e6,
            r_min: 1e-6,
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 500_000,
            theta_step_max: 0.03,
        }
    }
}

impl FlowControls {
    fn validate(&self) -> Result<(), Error> {
        if !(self.r_min.is_finite() && self.r_max.is_finite() && 0.0 < self.r_min && self.r_min < self.r_max)
        {
            return Err(Error::Param(format!(
                "norm thresholds must satisfy 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if !(self.theta_step_max > 0.0 && self.theta_step_max < PI) {
            return Err(Error::Param(format!(
                "theta step cap must lie in (0, pi), got {}",
                self.theta_step_max
            )));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Param("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Why an orbit ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Crossed a norm threshold; the final sample sits on it.
    NormThreshold { threshold: f64 },
    /// Ran the requested span to its end.
    SpanEnd,
    MaxSteps,
    StepUnderflow,
}

/// One record of an orbit. `param` is physical time for gradient flows and
/// the leaf parameter `t` for chart orbits. `theta` is continuous
/// (unwrapped), not reduced mod 2 pi; `alpha` is the continuous polar angle
/// of the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub param: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub theta: f64,
    pub alpha: f64,
    pub f: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
}

/// `dtheta/dt` along gradient orbits in the chart.
pub fn chart_rhs(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -(SQRT_2 - c * s) / (1.0 + s * s)
}

/// `dt/dtheta` along gradient orbits; reciprocal of [`chart_rhs`].
pub fn dt_dtheta(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -(1.0 + s * s) / (SQRT_2 - c * s)
}

/// Polar angle of the point at parameter angle `theta` on the unrotated
/// canonical ellipse, extended continuously to all of `R` (plain `atan2`
/// would jump at the vertical tangents).
pub fn ellipse_polar_angle(theta: f64) -> f64 {
    let k = (theta / PI).round();
    let psi = theta - k * PI;
    k * PI + psi.sin().atan2(SQRT_2 * psi.cos())
}

/// Continuous polar angle of the chart point: leaf rotation plus the
/// in-leaf polar angle.
pub fn secant_angle(t: f64, theta: f64) -> f64 {
    t + ellipse_polar_angle(theta)
}

/// Winding rate `dalpha/dtheta` along orbits:
/// `sqrt2/(1 + cos^2) - (1 + sin^2)/(sqrt2 - cos sin)`.
/// Vanishes at 0 and pi/2; its nonzero mean is what makes orbits spiral.
pub fn winding_rate(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    SQRT_2 / (1.0 + c * c) - (1.0 + s * s) / (SQRT_2 - c * s)
}

/// Mean-drift constant: the periodic-trapezoid quadrature of
/// [`winding_rate`] over one period. Spectrally convergent; `n = 4096` is
/// already at the fp floor. Closed form: `2 pi (1 - 3/sqrt 7)`.
pub fn winding_constant(n_points: usize) -> Result<f64, Error> {
    if n_points < 16 {
        return Err(Error::Argument(format!(
            "quadrature needs at least 16 points, got {n_points}"
        )));
    }
    let mut sum = 0.0;
    for i in 0..n_points {
        sum += winding_rate(TAU * i as f64 / n_points as f64);
    }
    Ok(sum * TAU / n_points as f64)
}

/// Upper bound on the remaining lifetime of the forward orbit through a
/// point with norm `n`:
/// `2^{1/(2 tau)} / ((1/tau - 2) n^{1/tau - 2})`.
pub fn blowup_bound_from_norm(p: &FunctionParams, n: f64) -> Result<f64, Error> {
    if n == 0.0 {
        return Err(Error::Origin);
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Argument(format!("norm must be positive and finite, got {n}")));
    }
    let inv = 1.0 / p.tau();
    Ok((std::f64::consts::LN_2 * inv / 2.0).exp() / ((inv - 2.0) * n.powf(inv - 2.0)))
}

/// [`blowup_bound_from_norm`] at a starting point.
pub fn blowup_bound(p: &FunctionParams, start: PlanePoint) -> Result<f64, Error> {
    blowup_bound_from_norm(p, start.norm())
}

/// Exact solution of the comparison equation `z' = 2^{-1/(2 tau)} z^{1/tau - 1}`
/// with `z(0) = start_norm`; a lower bound for the orbit norm at `time`.
/// Rejected at and after the comparison blow-up time.
pub fn norm_lower_bound(p: &FunctionParams, start_norm: f64, time: f64) -> Result<f64, Error> {
    if !(start_norm.is_finite() && start_norm > 0.0) {
        return Err(Error::Argument(format!(
            "start norm must be positive and finite, got {start_norm}"
        )));
    }
    let inv = 1.0 / p.tau();
    let shrink = (-std::f64::consts::LN_2 * inv / 2.0).exp();
    let base = start_norm.powf(2.0 - inv) - shrink * (inv - 2.0) * time;
    if !(base > 0.0) {
        return Err(Error::Argument(format!(
            "time {time} is at or past the comparison blow-up"
        )));
    }
    Ok(base.powf(-p.tau() / (1.0 - 2.0 * p.tau())))
}

fn principal_angle(d: f64) -> f64 {
    let m = d.rem_euclid(TAU);
    if m > PI {
        m - TAU
    } else {
        m
    }
}

/// Integrates `gamma' = +-grad f / |grad f|` (arclength parametrization, so
/// the finite-time blow-up cannot stall the stepper) together with physical
/// time `dt/dsigma = +-1/|grad f|`. Samples one row per accepted step and
/// stops on the norm threshold appropriate to the direction, located by
/// bisection on the dense output.
pub fn gradient_flow(
    p: &FunctionParams,
    start: PlanePoint,
    direction: Direction,
    controls: &FlowControls,
) -> Result<Trajectory, Error> {
    controls.validate()?;
    if start.is_origin() {
        return Err(Error::Origin);
    }
    let n0 = start.norm();
    if !n0.is_finite() {
        return Err(Error::Argument("start point must be finite".into()));
    }
    if !(controls.r_min < n0 && n0 < controls.r_max) {
        return Err(Error::Argument(format!(
            "start norm {n0} must lie strictly inside [{}, {}]",
            controls.r_min, controls.r_max
        )));
    }

    let fol = *p.foliation();
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let tau = p.tau();

    let start_inv = foliation::plane_to_chart(&fol, start)?;
    let mut theta_mod_prev = start_inv.chart.theta;
    let mut theta_unwrapped = start_inv.chart.theta;
    let mut samples = Vec::new();
    samples.push(TrajectorySample {
        param: 0.0,
        x: start.x,
        y: start.y,
        t: start_inv.chart.t,
        theta: theta_unwrapped,
        alpha: secant_angle(start_inv.chart.t, theta_unwrapped),
        f: (start_inv.chart.t / tau).exp(),
        norm: n0,
    });

    let rhs = |_s: f64, y: &[f64; 3]| -> [f64; 3] {
        match function::f_gradient(p, PlanePoint::new(y[0], y[1])) {
            Ok(g) => {
                let gn = g.norm();
                if gn > 0.0 && gn.is_finite() {
                    [sign * g.gx / gn, sign * g.gy / gn, sign / gn]
                } else {
                    [f64::NAN; 3]
                }
            }
            // Out-of-range stage point: poison the step so it shrinks.
            Err(_) => [f64::NAN; 3],
        }
    };

    let threshold = match direction {
        Direction::Forward => controls.r_max,
        Direction::Backward => controls.r_min,
    };
    let crossed = |n: f64| match direction {
        Direction::Forward => n >= threshold,
        Direction::Backward => n <= threshold,
    };

    let mut termination = None;
    let solver = Dopri5 {
        rtol: controls.rtol,
        atol: controls.atol,
        h_max: f64::INFINITY,
        max_steps: controls.max_steps,
    };
    // Generous arclength budget: the orbit spirals gently, so its length is
    // a small multiple of the radius range.
    let sigma_end = 8.0 * (controls.r_max + n0);

    let outcome = solver.integrate(
        0.0,
        [start.x, start.y, 0.0],
        sigma_end,
        rhs,
        |dense| {
            let y1 = dense.y1;
            let q1 = PlanePoint::new(y1[0], y1[1]);
            let inv1 = match foliation::plane_to_chart(&fol, q1) {
                Ok(inv) => inv,
                Err(_) => return StepControl::Reject,
            };
            let delta = principal_angle(inv1.chart.theta - theta_mod_prev);
            if delta.abs() > controls.theta_step_max {
                return StepControl::Reject;
            }

            if crossed(q1.norm()) {
                // Norm is monotone along the orbit; bisect the dense output
                // for the crossing.
                let mut lo = dense.s0;
                let mut hi = dense.s1();
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let ym = dense.eval(mid);
                    if crossed(ym[0].hypot(ym[1])) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if (hi - lo).abs() <= f64::EPSILON * hi.abs().max(1.0) {
                        break;
                    }
                }
                let ye = dense.eval(hi);
                let qe = PlanePoint::new(ye[0], ye[1]);
                if let Ok(inv_e) = foliation::plane_to_chart(&fol, qe) {
                    let d = principal_angle(inv_e.chart.theta - theta_mod_prev);
                    let theta_e = theta_unwrapped + d;
                    samples.push(TrajectorySample {
                        param: ye[2],
                        x: qe.x,
                        y: qe.y,
                        t: inv_e.chart.t,
                        theta: theta_e,
                        alpha: secant_angle(inv_e.chart.t, theta_e),
                        f: (inv_e.chart.t / tau).exp(),
                        norm: qe.norm(),
                    });
                }
                termination = Some(Termination::NormThreshold { threshold });
                return StepControl::Halt;
            }

            theta_unwrapped += delta;
            theta_mod_prev = inv1.chart.theta;
            samples.push(TrajectorySample {
                param: y1[2],
                x: q1.x,
                y: q1.y,
                t: inv1.chart.t,
                theta: theta_unwrapped,
                alpha: secant_angle(inv1.chart.t, theta_unwrapped),
                f: (inv1.chart.t / tau).exp(),
                norm: q1.norm(),
            });
            StepControl::Continue
        },
    );

    let termination = termination.unwrap_or(match outcome {
        Outcome::Reached { .. } | Outcome::Halted { .. } => Termination::SpanEnd,
        Outcome::MaxSteps { .. } => Termination::MaxSteps,
        Outcome::StepUnderflow { .. } => Termination::StepUnderflow,
    });
    Ok(Trajectory {
        samples,
        termination,
    })
}

/// Chart orbit anchored at the low end of the span: integrates the scalar
/// chart ODE for `theta(t)` from `(span.0, theta0)` to `span.1`.
pub fn chart_orbit(
    p: &FunctionParams,
    theta0: f64,
    span: (f64, f64),
    controls: &FlowControls,
) -> Result<Trajectory, Error> {
    chart_orbit_through(p, ChartPoint::new(span.0, theta0), span, controls)
}

/// Chart orbit through a given chart point, covering a span that must
/// contain it. The orbit is integrated backward to the low end and forward
/// to the high end, then stitched.
pub fn chart_orbit_through(
    p: &FunctionParams,
    anchor: ChartPoint,
    span: (f64, f64),
    controls: &FlowControls,
) -> Result<Trajectory, Error> {
    controls.validate()?;
    let (lo, hi) = span;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Argument(format!(
            "span must be a finite increasing interval, got [{lo}, {hi}]"
        )));
    }
    if !(lo <= anchor.t && anchor.t <= hi) {
        return Err(Error::Argument(format!(
            "span [{lo}, {hi}] does not contain the anchor t = {}",
            anchor.t
        )));
    }

    let backward = integrate_chart_leg(p, anchor, lo, controls)?;
    let forward = integrate_chart_leg(p, anchor, hi, controls)?;

    let mut samples = Vec::with_capacity(backward.0.len() + forward.0.len() + 1);
    samples.extend(backward.0.into_iter().rev());
    samples.push(chart_sample(p, anchor.t, anchor.theta));
    samples.extend(forward.0);

    // The orbit fails SpanEnd only if either leg did.
    let termination = match (backward.1, forward.1) {
        (Termination::SpanEnd, Termination::SpanEnd) => Termination::SpanEnd,
        (Termination::SpanEnd, other) => other,
        (other, _) => other,
    };
    Ok(Trajectory {
        samples,
        termination,
    })
}

fn chart_sample(p: &FunctionParams, t: f64, theta: f64) -> TrajectorySample {
    let q = foliation::chart_to_plane(p.foliation(), ChartPoint::new(t, theta));
    TrajectorySample {
        param: t,
        x: q.x,
        y: q.y,
        t,
        theta,
        alpha: secant_angle(t, theta),
        f: (t / p.tau()).exp(),
        norm: q.norm(),
    }
}

/// One leg of a chart orbit, excluding the anchor sample. Samples are pushed
/// in integration order (reversed later for the backward leg).
fn integrate_chart_leg(
    p: &FunctionParams,
    anchor: ChartPoint,
    t_end: f64,
    controls: &FlowControls,
) -> Result<(Vec<TrajectorySample>, Termination), Error> {
    if t_end == anchor.t {
        return Ok((Vec::new(), Termination::SpanEnd));
    }
    let solver = Dopri5 {
        rtol: controls.rtol,
        atol: controls.atol,
        // The rate is bounded by sqrt2 + 1/2, so this step cap keeps the
        // angle change per step under the configured maximum on its own.
        h_max: controls.theta_step_max / (SQRT_2 + 0.5),
        max_steps: controls.max_steps,
    };
    let mut samples = Vec::new();
    let outcome = solver.integrate(
        anchor.t,
        [anchor.theta],
        t_end,
        |_t, y| [chart_rhs(y[0])],
        |dense| {
            if (dense.y1[0] - dense.y0[0]).abs() > controls.theta_step_max {
                return StepControl::Reject;
            }
            samples.push(chart_sample(p, dense.s1(), dense.y1[0]));
            StepControl::Continue
        },
    );
    let termination = match outcome {
        Outcome::Reached { .. } | Outcome::Halted { .. } => Termination::SpanEnd,
        Outcome::MaxSteps { .. } => Termination::MaxSteps,
        Outcome::StepUnderflow { .. } => Termination::StepUnderflow,
    };
    Ok((samples, termination))
}

/// Winding summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingReport {
    pub delta_alpha: f64,
    /// Net revolutions of the point around the origin: `delta_alpha / 2 pi`.
    pub turns: f64,
    pub delta_theta: f64,
    /// Converged quadrature value of [`winding_constant`].
    pub a0: f64,
    /// Max over samples of `|(alpha - alpha_0) - a0/(2 pi) (theta - theta_0)|`:
    /// how far the winding strays from its mean drift line. Bounded uniformly
    /// in the span, which is the O(1) part of the spiraling claim.
    pub bounded_gap: f64,
}

pub fn winding_report(traj: &Trajectory) -> Result<WindingReport, Error> {
    if traj.samples.len() < 2 {
        return Err(Error::Argument(format!(
            "winding needs at least two samples, got {}",
            traj.samples.len()
        )));
    }
    let a0 = winding_constant(4096)?;
    let first = &traj.samples[0];
    let last = &traj.samples[traj.samples.len() - 1];
    let slope = a0 / TAU;
    let mut gap: f64 = 0.0;
    for s in &traj.samples {
        gap = gap.max(((s.alpha - first.alpha) - slope * (s.theta - first.theta)).abs());
    }
    Ok(WindingReport {
        delta_alpha: last.alpha - first.alpha,
        turns: (last.alpha - first.alpha) / TAU,
        delta_theta: last.theta - first.theta,
        a0,
        bounded_gap: gap,
    })
}

/// Worst relative error between per-step secants `dt/dtheta` and the
/// closed-form rate at the midpoint angle. `None` when the trajectory has no
/// usable angle increments (fewer than two samples, or no theta motion).
pub fn dt_dtheta_consistency(traj: &Trajectory) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for w in traj.samples.windows(2) {
        let d_theta = w[1].theta - w[0].theta;
        if d_theta.abs() < 1e-12 {
            continue;
        }
        let secant = (w[1].t - w[0].t) / d_theta;
        let formula = dt_dtheta(0.5 * (w[0].theta + w[1].theta));
        let rel = (secant - formula).abs() / formula.abs();
        worst = Some(worst.map_or(rel, |v: f64| v.max(rel)));
    }
    worst
}

/// Maximum over time-orbit samples of the plane distance to the chart orbit
/// through the same points, relative to the sample norm. The chart orbit
/// must cover the time orbit's `t`-range.
pub fn curve_agreement(time_traj: &Trajectory, chart_traj: &Trajectory) -> Result<f64, Error> {
    let cs = &chart_traj.samples;
    if cs.len() < 2 {
        return Err(Error::Argument("chart orbit too short to interpolate".into()));
    }
    let (t_lo, t_hi) = (cs[0].t, cs[cs.len() - 1].t);
    let mut worst: f64 = 0.0;
    for s in &time_traj.samples {
        if !(t_lo <= s.t && s.t <= t_hi) {
            return Err(Error::Argument(format!(
                "chart orbit [{t_lo}, {t_hi}] does not cover time sample t = {}",
                s.t
            )));
        }
        // Hermite interpolation of theta(t) between bracketing chart samples,
        // with slopes from the chart ODE itself.
        let idx = cs.partition_point(|c| c.t <= s.t).min(cs.len() - 1).max(1);
        let (c0, c1) = (&cs[idx - 1], &cs[idx]);
        let h = c1.t - c0.t;
        let theta_hat = if h.abs() < 1e-300 {
            c0.theta
        } else {
            let th = (s.t - c0.t) / h;
            let th2 = th * th;
            let th3 = th2 * th;
            (2.0 * th3 - 3.0 * th2 + 1.0) * c0.theta
                + (th3 - 2.0 * th2 + th) * h * chart_rhs(c0.theta)
                + (-2.0 * th3 + 3.0 * th2) * c1.theta
                + (th3 - th2) * h * chart_rhs(c1.theta)
        };
        let q_hat = foliation::chart_to_plane(
            &FoliationParams::canonical(),
            ChartPoint::new(s.t, theta_hat),
        );
        let dist = (s.x - q_hat.x).hypot(s.y - q_hat.y);
        worst = worst.max(dist / s.norm);
    }
    Ok(worst)
}
