//! Foliation of the punctured plane by rotating ellipses.
//!
//! The leaf at parameter `t` is the ellipse with semi-axes `a(t) = mu e^{nu t}`
//! and `b(t) = e^{nu t}`, rotated by angle `t`. When `2 mu nu > mu^2 - 1` the
//! leaves are strictly nested, sweep out every nonzero point exactly once, and
//! `(t, theta) -> M(t, theta)` is a diffeomorphism onto the punctured plane.
//! `theta` is the parameter angle on the unrotated ellipse, not the polar
//! angle of the image point.

use std::f64::consts::TAU;

use crate::Error;

/// Absolute tolerance on `|level - 1|` for the chart inversion.
pub const INVERSION_TOL: f64 = 1e-13;

/// Iteration budget for the chart inversion. Bisection alone needs about 53
/// steps to exhaust an `f64` bracket, so this leaves ample slack.
pub const INVERSION_MAX_ITER: u32 = 100;

/// Shape parameters of the ellipse family.
///
/// `mu > 1` is the axis ratio, `nu > 0` the exponential growth rate of both
/// axes. [`FoliationParams::new`] additionally requires `2 mu nu > mu^2 - 1`,
/// which is exactly the condition for the leaves to be strictly nested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationParams {
    mu: f64,
    nu: f64,
}

impl FoliationParams {
    /// Validated constructor: requires the strict-nesting condition.
    pub fn new(mu: f64, nu: f64) -> Result<Self, Error> {
        let p = Self::relaxed(mu, nu)?;
        if !p.leaves_nested() {
            return Err(Error::Param(format!(
                "axis ratio {mu} and growth rate {nu} violate 2*mu*nu > mu^2 - 1; leaves would intersect"
            )));
        }
        Ok(p)
    }

    /// Skips the nesting condition so degenerate families can still be probed
    /// (their residual is reported negative by [`foliation_residual`]).
    pub fn relaxed(mu: f64, nu: f64) -> Result<Self, Error> {
        if !(mu.is_finite() && mu > 1.0) {
            return Err(Error::Param(format!("axis ratio must be finite and > 1, got {mu}")));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Param(format!("growth rate must be finite and > 0, got {nu}")));
        }
        Ok(Self { mu, nu })
    }

    /// The `(sqrt 2, 1)` family used by the convex function.
    pub fn canonical() -> Self {
        Self {
            mu: std::f64::consts::SQRT_2,
            nu: 1.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Strict-nesting test, independent of `t` because both axes scale by the
    /// same exponential.
    pub fn leaves_nested(&self) -> bool {
        2.0 * self.mu * self.nu > self.mu * self.mu - 1.0
    }
}

/// Chart coordinates: leaf parameter `t` and ellipse parameter angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub t: f64,
    pub theta: f64,
}

impl ChartPoint {
    pub fn new(t: f64, theta: f64) -> Self {
        Self { t, theta }
    }
}

/// A point of the plane in Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_origin(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

/// Semi-axes of the leaf at `t`, with their `t`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
}

pub fn axes(p: &FoliationParams, t: f64) -> Axes {
    let e = (p.nu * t).exp();
    let a = p.mu * e;
    let b = e;
    Axes {
        a,
        b,
        a_prime: p.nu * a,
        b_prime: p.nu * b,
    }
}

/// Partial derivatives of the chart map, row order `(x, y)`, column order
/// `(t, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub x_t: f64,
    pub x_theta: f64,
    pub y_t: f64,
    pub y_theta: f64,
}

impl Jacobian {
    pub fn det(&self) -> f64 {
        self.x_t * self.y_theta - self.y_t * self.x_theta
    }
}

/// The chart map `M(t, theta)`: the point at parameter angle `theta` on the
/// leaf at `t`.
pub fn chart_to_plane(p: &FoliationParams, c: ChartPoint) -> PlanePoint {
    let ax = axes(p, c.t);
    let (st, ct) = c.t.sin_cos();
    let (sth, cth) = c.theta.sin_cos();
    PlanePoint {
        x: ax.a * ct * cth - ax.b * st * sth,
        y: ax.a * st * cth + ax.b * ct * sth,
    }
}

pub fn jacobian(p: &FoliationParams, c: ChartPoint) -> Jacobian {
    let ax = axes(p, c.t);
    let (st, ct) = c.t.sin_cos();
    let (sth, cth) = c.theta.sin_cos();
    Jacobian {
        x_t: (ax.a_prime * ct - ax.a * st) * cth - (ax.b_prime * st + ax.b * ct) * sth,
        x_theta: -ax.a * ct * sth - ax.b * st * cth,
        y_t: (ax.a_prime * st + ax.a * ct) * cth + (ax.b_prime * ct - ax.b * st) * sth,
        y_theta: -ax.a * st * sth + ax.b * ct * cth,
    }
}

/// Closed form of the Jacobian determinant. The rotation drops out:
/// `det = a' b cos^2 + a b' sin^2 + (a^2 - b^2) cos sin`.
pub fn jacobian_det(p: &FoliationParams, c: ChartPoint) -> f64 {
    let ax = axes(p, c.t);
    let (s, c) = c.theta.sin_cos();
    ax.a_prime * ax.b * c * c + ax.a * ax.b_prime * s * s + (ax.a * ax.a - ax.b * ax.b) * c * s
}

/// Pointwise transversality certificate `4 a b a' b' - (a^2 - b^2)^2`,
/// positive exactly when the determinant has no zero in `theta`. Scales as
/// `e^{4 nu t}` with the `t`-independent sign `4 mu^2 nu^2 - (mu^2 - 1)^2`.
pub fn foliation_residual(p: &FoliationParams, t: f64) -> f64 {
    let ax = axes(p, t);
    4.0 * ax.a * ax.b * ax.a_prime * ax.b_prime - (ax.a * ax.a - ax.b * ax.b).powi(2)
}

/// Signed progress of the leaf at `s` past the leaf at `t` along the outward
/// transversal at `(t, theta)`. For nearby leaves its positivity witnesses
/// strict nesting, and `witness / (s - t) -> jacobian_det` as `s -> t`. It is
/// a local certificate only: once `s - t` is large the rotation carries the
/// same-`theta` point far around the outer leaf and the chord can point
/// behind the local tangent plane even though the leaves nest. Containment of
/// distant leaves is [`ellipse_level`]`< 1`. `s <= t` is rejected.
pub fn nesting_witness(p: &FoliationParams, t: f64, s: f64, theta: f64) -> Result<f64, Error> {
    if !(s > t) {
        return Err(Error::Argument(format!(
            "outer leaf parameter must exceed inner, got s = {s} <= t = {t}"
        )));
    }
    let inner = chart_to_plane(p, ChartPoint::new(t, theta));
    let outer = chart_to_plane(p, ChartPoint::new(s, theta));
    let j = jacobian(p, ChartPoint::new(t, theta));
    // Outward transversal: the leaf tangent (x_theta, y_theta) rotated by -90 degrees.
    Ok((outer.x - inner.x) * j.y_theta - (outer.y - inner.y) * j.x_theta)
}

/// Body coordinates of `q` relative to the leaf at `t`: rotate back by `t`,
/// divide out the axes. The leaf is the locus `u^2 + v^2 = 1`.
fn body_coords(p: &FoliationParams, q: PlanePoint, t: f64) -> (f64, f64) {
    let ax = axes(p, t);
    let (st, ct) = t.sin_cos();
    let u = (q.x * ct + q.y * st) / ax.a;
    let v = (-q.x * st + q.y * ct) / ax.b;
    (u, v)
}

/// Leaf-level function `u^2 + v^2`: equal to 1 on the leaf at `t`, above 1
/// outside it, below 1 inside.
pub fn ellipse_level(p: &FoliationParams, q: PlanePoint, t: f64) -> Result<f64, Error> {
    if q.is_origin() {
        return Err(Error::Origin);
    }
    let (u, v) = body_coords(p, q, t);
    Ok(u * u + v * v)
}

/// `t`-derivative of [`ellipse_level`] at fixed `q`:
/// `-2 (nu (u^2 + v^2) + ((mu^2 - 1)/mu) u v)`.
/// Strictly negative everywhere iff the leaves are nested, which is what makes
/// the level function monotone and the chart inversion a bracketed root find.
pub fn ellipse_level_deriv(p: &FoliationParams, q: PlanePoint, t: f64) -> Result<f64, Error> {
    if q.is_origin() {
        return Err(Error::Origin);
    }
    let (u, v) = body_coords(p, q, t);
    Ok(-2.0 * (p.nu * (u * u + v * v) + ((p.mu * p.mu - 1.0) / p.mu) * u * v))
}

/// Outcome of the chart inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionResult {
    pub chart: ChartPoint,
    pub iterations: u32,
    /// Final `|level - 1|` at the returned `t`.
    pub residual: f64,
}

/// Inverts the chart: finds the unique leaf through `q` and the parameter
/// angle on it.
///
/// The norm of a point on the leaf at `t` is pinched between the axes,
/// `b(t) <= |q| <= a(t)`, so the leaf parameter is bracketed by
/// `[(ln|q| - ln mu)/nu, ln|q|/nu]`. Within that bracket the level function is
/// strictly decreasing (for nested leaves), and a Newton iteration safeguarded
/// by bisection converges quadratically. One extra Newton step is taken after
/// the tolerance is first met, so the returned residual is usually at the
/// floating-point floor rather than merely under [`INVERSION_TOL`]. At
/// extreme radii (|t| beyond ~160) one ulp of `t` already moves the level by
/// more than the tolerance; exhausting the bracket at fp resolution then
/// counts as convergence and the residual reports what was achieved.
///
/// Returned `theta` is normalized to `[0, 2 pi)`.
pub fn plane_to_chart(p: &FoliationParams, q: PlanePoint) -> Result<InversionResult, Error> {
    let n = q.norm();
    if n == 0.0 {
        return Err(Error::Origin);
    }
    if !n.is_finite() {
        return Err(Error::Argument(format!(
            "point must be finite, got ({}, {})",
            q.x, q.y
        )));
    }

    let ln_n = n.ln();
    let mut lo = (ln_n - p.mu.ln()) / p.nu;
    let mut hi = ln_n / p.nu;
    let mut t = 0.5 * (lo + hi);
    let mut best_t = t;
    let mut best_r = f64::INFINITY;
    let mut iterations = 0;
    let mut polishing = false;
    let mut exhausted = false;

    while iterations < INVERSION_MAX_ITER {
        iterations += 1;
        let (u, v) = body_coords(p, q, t);
        let r = u * u + v * v - 1.0;
        if r.abs() < best_r {
            best_r = r.abs();
            best_t = t;
        }
        if r.abs() <= INVERSION_TOL {
            if polishing {
                break;
            }
            polishing = true;
        }
        if r > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = -2.0 * (p.nu * (r + 1.0) + ((p.mu * p.mu - 1.0) / p.mu) * u * v);
        let newton = t - r / d;
        t = if d.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // Bracket exhausted at fp resolution: the root is within an ulp of t,
        // which counts as converged even if |level - 1| cannot reach the
        // nominal tolerance (one ulp of a large t moves the level by more).
        if hi - lo <= f64::EPSILON * t.abs().max(1.0) {
            let (u, v) = body_coords(p, q, t);
            let r = (u * u + v * v - 1.0).abs();
            if r < best_r {
                best_r = r;
                best_t = t;
            }
            exhausted = true;
            break;
        }
    }

    if best_r > INVERSION_TOL && !exhausted {
        return Err(Error::NoConvergence {
            iterations,
            residual: best_r,
            t: best_t,
        });
    }

    let (u, v) = body_coords(p, q, best_t);
    let mut theta = v.atan2(u).rem_euclid(TAU);
    if theta >= TAU {
        theta = 0.0;
    }
    Ok(InversionResult {
        chart: ChartPoint::new(best_t, theta),
        iterations,
        residual: best_r,
    })
}

/// Shortest angular distance between two angles.
pub fn angle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}
