//! The convex function built on the canonical foliation.
//!
//! `f` is constant on each leaf: `f = exp(t/tau)` on the leaf at `t`, and 0 at
//! the origin. Because the leaf norms are pinched between `e^t` and
//! `sqrt(2) e^t`, `f` is pinched between powers of the norm (the sandwich
//! bounds), grows like `|q|^{1/tau}`, and is `C^k` for `k` the largest integer
//! below `1/tau`.

use std::f64::consts::{LN_2, SQRT_2};

use crate::foliation::{
    self, ChartPoint, FoliationParams, PlanePoint,
};
use crate::Error;

/// Default exponent parameter; gives smoothness class k = 11.
pub const DEFAULT_TAU: f64 = 0.09;

/// Exclusive upper bound of the certified exponent range. Above it the
/// concavity margin `2 tau (10 tau - 1)` changes sign.
pub const CERTIFIED_TAU_SUP: f64 = 0.1;

/// Exclusive upper bound for [`FunctionParams::unrestricted`]. At `tau = 1/2`
/// the support-function audit itself breaks down, and the blow-up window
/// needs `1/tau > 2`.
pub const UNRESTRICTED_TAU_SUP: f64 = 0.5;

/// Exponent parameter `tau` plus derived data. Constructed values always
/// carry the canonical foliation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionParams {
    tau: f64,
    k: u32,
    foliation: FoliationParams,
}

fn smoothness_class(tau: f64) -> u32 {
    let inv = 1.0 / tau;
    let floor = inv.floor();
    let k = if floor == inv { floor - 1.0 } else { floor };
    k as u32
}

impl FunctionParams {
    /// Certified range: `0 < tau < 0.1`.
    pub fn new(tau: f64) -> Result<Self, Error> {
        if !(tau.is_finite() && tau > 0.0 && tau < CERTIFIED_TAU_SUP) {
            return Err(Error::Param(format!(
                "exponent parameter must lie in (0, {CERTIFIED_TAU_SUP}), got {tau}"
            )));
        }
        Ok(Self {
            tau,
            k: smoothness_class(tau),
            foliation: FoliationParams::canonical(),
        })
    }

    /// Extended range `0 < tau < 0.5` for demonstrations outside the certified
    /// window. Convexity still holds here, but the audit's sufficient bound
    /// does not certify it.
    pub fn unrestricted(tau: f64) -> Result<Self, Error> {
        if !(tau.is_finite() && tau > 0.0 && tau < UNRESTRICTED_TAU_SUP) {
            return Err(Error::Param(format!(
                "exponent parameter must lie in (0, {UNRESTRICTED_TAU_SUP}), got {tau}"
            )));
        }
        Ok(Self {
            tau,
            k: smoothness_class(tau),
            foliation: FoliationParams::canonical(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Largest integer strictly below `1/tau`; the function is `C^k` but not
    /// `C^{k+1}`.
    pub fn smoothness_class(&self) -> u32 {
        self.k
    }

    pub fn foliation(&self) -> &FoliationParams {
        &self.foliation
    }

    /// Whether `tau` lies in the certified range (relevant when constructed
    /// via [`FunctionParams::unrestricted`]).
    pub fn certified(&self) -> bool {
        self.tau < CERTIFIED_TAU_SUP
    }
}

impl Default for FunctionParams {
    fn default() -> Self {
        Self::new(DEFAULT_TAU).expect("default tau is in range")
    }
}

/// Gradient of `f` at a point. `chart` is `None` only at the origin, where
/// the gradient is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientValue {
    pub gx: f64,
    pub gy: f64,
    pub chart: Option<ChartPoint>,
}

impl GradientValue {
    pub fn norm(&self) -> f64 {
        self.gx.hypot(self.gy)
    }
}

/// `f(q)`: `exp(t/tau)` on the leaf through `q`, zero at the origin.
/// Overflows to infinity once `t/tau` exceeds about 709, i.e. for norms
/// beyond roughly `e^{709 tau}`; use [`f_log`] past that.
pub fn f_value(p: &FunctionParams, q: PlanePoint) -> Result<f64, Error> {
    if q.is_origin() {
        return Ok(0.0);
    }
    let inv = foliation::plane_to_chart(&p.foliation, q)?;
    Ok((inv.chart.t / p.tau).exp())
}

/// `ln f(q)`, exact in the leaf parameter: `t/tau`. Negative infinity at the
/// origin. This is the overflow-free route to `f` at extreme radii.
pub fn f_log(p: &FunctionParams, q: PlanePoint) -> Result<f64, Error> {
    if q.is_origin() {
        return Ok(f64::NEG_INFINITY);
    }
    let inv = foliation::plane_to_chart(&p.foliation, q)?;
    Ok(inv.chart.t / p.tau)
}

/// Gradient of `f`. Since `f` is constant on leaves, the gradient points
/// along the outward leaf transversal: `(1/tau) e^{t/tau} / det * (y_theta,
/// -x_theta)`.
pub fn f_gradient(p: &FunctionParams, q: PlanePoint) -> Result<GradientValue, Error> {
    if q.is_origin() {
        // The sandwich bounds force |grad f| <= C |q|^{1/tau - 1} -> 0.
        return Ok(GradientValue {
            gx: 0.0,
            gy: 0.0,
            chart: None,
        });
    }
    let inv = foliation::plane_to_chart(&p.foliation, q)?;
    let c = inv.chart;
    let j = foliation::jacobian(&p.foliation, c);
    let det = foliation::jacobian_det(&p.foliation, c);
    let scale = (c.t / p.tau).exp() / (p.tau * det);
    Ok(GradientValue {
        gx: scale * j.y_theta,
        gy: scale * -j.x_theta,
        chart: Some(c),
    })
}

/// Angular profile of the gradient magnitude:
/// `|grad f| = (1/tau) e^{(1/tau - 1) t} * gradient_profile(theta)`.
/// Range roughly [0.6038, 1.3708] over a full turn.
pub fn gradient_profile(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (1.0 + s * s).sqrt() / (SQRT_2 + s * c)
}

/// `ln |grad f|` straight from chart coordinates, usable when the magnitude
/// itself would overflow.
pub(crate) fn gradient_log_norm(p: &FunctionParams, c: ChartPoint) -> f64 {
    (1.0 / p.tau - 1.0) * c.t - p.tau.ln() + gradient_profile(c.theta).ln()
}

/// Norm envelope of `f`:
/// `2^{-1/(2 tau)} |q|^{1/tau} <= f(q) <= |q|^{1/tau}`.
/// Lower equality on the rotated major axis, upper on the rotated minor axis.
pub fn sandwich_bounds(p: &FunctionParams, q: PlanePoint) -> (f64, f64) {
    let upper = q.norm().powf(1.0 / p.tau);
    ((-LN_2 / (2.0 * p.tau)).exp() * upper, upper)
}

/// Gradient-inequality residual `|grad f| - (tau / sqrt 2) f^{1 - tau}`,
/// nonnegative everywhere (zero only at the origin by convention).
pub fn lojasiewicz_residual(p: &FunctionParams, q: PlanePoint) -> Result<f64, Error> {
    if q.is_origin() {
        return Ok(0.0);
    }
    let g = f_gradient(p, q)?;
    let c = g.chart.expect("nonzero point carries a chart");
    let lhs = g.norm();
    let f = (c.t / p.tau).exp();
    let rhs = (p.tau / SQRT_2) * f.powf(1.0 - p.tau);
    if lhs.is_finite() && rhs.is_finite() && lhs > 0.0 && rhs > 0.0 {
        return Ok(lhs - rhs);
    }
    // Magnitudes past the f64 range: difference of exponentials in log form.
    let log_lhs = gradient_log_norm(p, c);
    let log_rhs = (p.tau / SQRT_2).ln() + (1.0 - p.tau) * (c.t / p.tau);
    let m = log_lhs.max(log_rhs);
    Ok(m.exp() * ((log_lhs - m).exp() - (log_rhs - m).exp()))
}

/// Desingularized gradient-inequality residual
/// `sqrt 2 f^{tau - 1} |grad f| - 1`, nonnegative and bounded away from zero.
/// Undefined at the origin.
pub fn kl_residual(p: &FunctionParams, q: PlanePoint) -> Result<f64, Error> {
    if q.is_origin() {
        return Err(Error::Origin);
    }
    let g = f_gradient(p, q)?;
    let c = g.chart.expect("nonzero point carries a chart");
    let gn = g.norm();
    let f = (c.t / p.tau).exp();
    if f.is_finite() && gn.is_finite() && f > 0.0 && gn > 0.0 {
        let value = SQRT_2 * f.powf(p.tau - 1.0) * gn;
        if value.is_finite() && value > 0.0 {
            return Ok(value - 1.0);
        }
    }
    let log_value = 0.5 * LN_2 + (p.tau - 1.0) * (c.t / p.tau) + gradient_log_norm(p, c);
    Ok(log_value.exp() - 1.0)
}

/// Log-log regression of finite-difference derivative magnitudes against the
/// radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingEstimate {
    /// Least-squares slope of `ln max-magnitude` against `ln r`; close to
    /// `1/tau - order` when the derivatives scale like a power of the radius.
    pub slope: f64,
    /// The regression points `(ln r, ln max-magnitude)`.
    pub samples: Vec<(f64, f64)>,
}

const SCALING_GRID: usize = 128;
const SCALING_R_MIN: f64 = 1e-7;
const SCALING_R_MAX: f64 = 1.0;

/// Probes how fast derivatives of `f` blow up toward the origin: for each
/// radius, takes the max over a polar grid of a rotation-invariant
/// finite-difference derivative magnitude of the given order, then fits the
/// log-log slope. Step size `1e-4 * r` keeps relative truncation error
/// uniform across decades.
///
/// Orders beyond 3 are rejected: the difference stencils lose too many digits
/// to be meaningful.
pub fn derivative_scaling(
    p: &FunctionParams,
    order: u32,
    radii: &[f64],
) -> Result<ScalingEstimate, Error> {
    if !(1..=3).contains(&order) {
        return Err(Error::Argument(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    if radii.len() < 2 {
        return Err(Error::Argument(format!(
            "need at least two radii for a slope, got {}",
            radii.len()
        )));
    }
    for w in radii.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Argument(format!(
                "radii must be strictly decreasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    for &r in radii {
        if !(r.is_finite() && (SCALING_R_MIN..=SCALING_R_MAX).contains(&r)) {
            return Err(Error::Argument(format!(
                "radii must lie in [{SCALING_R_MIN}, {SCALING_R_MAX}], got {r}"
            )));
        }
    }

    let fv = |x: f64, y: f64| -> Result<f64, Error> { f_value(p, PlanePoint::new(x, y)) };

    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let h = 1e-4 * r;
        let mut worst: f64 = 0.0;
        for i in 0..SCALING_GRID {
            let ang = std::f64::consts::TAU * i as f64 / SCALING_GRID as f64;
            let (x, y) = (r * ang.cos(), r * ang.sin());
            let mag = match order {
                1 => {
                    let fx = (fv(x + h, y)? - fv(x - h, y)?) / (2.0 * h);
                    let fy = (fv(x, y + h)? - fv(x, y - h)?) / (2.0 * h);
                    fx.hypot(fy)
                }
                2 => {
                    let f0 = fv(x, y)?;
                    let fxx = (fv(x + h, y)? - 2.0 * f0 + fv(x - h, y)?) / (h * h);
                    let fyy = (fv(x, y + h)? - 2.0 * f0 + fv(x, y - h)?) / (h * h);
                    let fxy = (fv(x + h, y + h)? - fv(x + h, y - h)? - fv(x - h, y + h)?
                        + fv(x - h, y - h)?)
                        / (4.0 * h * h);
                    // Frobenius norm of the Hessian: rotation invariant.
                    (fxx * fxx + 2.0 * fxy * fxy + fyy * fyy).sqrt()
                }
                _ => {
                    let h3 = h * h * h;
                    let fxxx = (fv(x + 2.0 * h, y)? - 2.0 * fv(x + h, y)? + 2.0 * fv(x - h, y)?
                        - fv(x - 2.0 * h, y)?)
                        / (2.0 * h3);
                    let fyyy = (fv(x, y + 2.0 * h)? - 2.0 * fv(x, y + h)? + 2.0 * fv(x, y - h)?
                        - fv(x, y - 2.0 * h)?)
                        / (2.0 * h3);
                    let xx_at = |yy: f64| -> Result<f64, Error> {
                        Ok((fv(x + h, yy)? - 2.0 * fv(x, yy)? + fv(x - h, yy)?) / (h * h))
                    };
                    let yy_at = |xx: f64| -> Result<f64, Error> {
                        Ok((fv(xx, y + h)? - 2.0 * fv(xx, y)? + fv(xx, y - h)?) / (h * h))
                    };
                    let fxxy = (xx_at(y + h)? - xx_at(y - h)?) / (2.0 * h);
                    let fxyy = (yy_at(x + h)? - yy_at(x - h)?) / (2.0 * h);
                    // Invariant norm of the symmetric 3-tensor.
                    (fxxx * fxxx + 3.0 * fxxy * fxxy + 3.0 * fxyy * fxyy + fyyy * fyyy).sqrt()
                }
            };
            worst = worst.max(mag);
        }
        samples.push((r.ln(), worst.ln()));
    }

    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in &samples {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(ScalingEstimate {
        slope: num / den,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn params() -> FunctionParams {
        FunctionParams::default()
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(params().tau(), 0.09);
        assert_eq!(params().smoothness_class(), 11);
        assert!(FunctionParams::new(0.1).is_err());
        assert!(FunctionParams::new(0.0).is_err());
        assert!(FunctionParams::new(-0.05).is_err());
        assert!(FunctionParams::new(f64::NAN).is_err());
        assert!(FunctionParams::new(0.2).is_err());
        let loose = FunctionParams::unrestricted(0.2).unwrap();
        assert_eq!(loose.smoothness_class(), 4);
        assert!(!loose.certified());
        assert!(FunctionParams::unrestricted(0.5).is_err());
        // Exact reciprocal: k must stay strictly below 1/tau.
        assert_eq!(FunctionParams::new(0.0625).unwrap().smoothness_class(), 15);
    }

    #[test]
    fn value_known_points() {
        let p = params();
        assert_eq!(f_value(&p, PlanePoint::new(0.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(
            f_value(&p, PlanePoint::new(SQRT_2, 0.0)).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f_value(&p, PlanePoint::new(2.0, 0.0)).unwrap(),
            112.56335315721937,
            max_relative = 1e-11
        );
        // Constant on leaves: the whole leaf through (2, 0) shares its value.
        let fol = FoliationParams::canonical();
        let t = foliation::plane_to_chart(&fol, PlanePoint::new(2.0, 0.0))
            .unwrap()
            .chart
            .t;
        for i in 0..32 {
            let q = foliation::chart_to_plane(&fol, ChartPoint::new(t, TAU * i as f64 / 32.0));
            assert_relative_eq!(
                f_value(&p, q).unwrap(),
                112.56335315721937,
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn log_value_handles_extreme_radii() {
        let p = params();
        assert_eq!(f_log(&p, PlanePoint::new(0.0, 0.0)).unwrap(), f64::NEG_INFINITY);
        let lf = f_log(&p, PlanePoint::new(1e300, 0.0)).unwrap();
        assert!(lf.is_finite());
        // t is within [ln n - ln sqrt2, ln n], so ln f = t / tau is pinched.
        let ln_n = 1e300f64.ln();
        assert!(lf >= (ln_n - SQRT_2.ln()) / 0.09 - 1e-6);
        assert!(lf <= ln_n / 0.09 + 1e-6);
        // And f itself has overflowed there.
        assert_eq!(f_value(&p, PlanePoint::new(1e300, 0.0)).unwrap(), f64::INFINITY);
        assert_relative_eq!(
            f_log(&p, PlanePoint::new(2.0, 0.0)).unwrap(),
            112.56335315721937f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gradient_known_points() {
        let p = params();
        let g0 = f_gradient(&p, PlanePoint::new(0.0, 0.0)).unwrap();
        assert_eq!((g0.gx, g0.gy), (0.0, 0.0));
        assert!(g0.chart.is_none());

        // At (sqrt2, 0): t = 0, theta = 0, det = sqrt2, transversal (1, 0).
        let g = f_gradient(&p, PlanePoint::new(SQRT_2, 0.0)).unwrap();
        assert_relative_eq!(g.gx, 1.0 / (0.09 * SQRT_2), max_relative = 1e-12);
        assert!(g.gy.abs() < 1e-12 * g.gx);
        assert!(g.chart.is_some());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params();
        for i in 0..200 {
            let ang = 0.37 * i as f64;
            let r = 10f64.powf(-3.0 + 6.0 * (i as f64 / 199.0));
            let (x, y) = (r * ang.cos(), r * ang.sin());
            let g = f_gradient(&p, PlanePoint::new(x, y)).unwrap();
            let h = 1e-4 * r;
            let fd_x = (f_value(&p, PlanePoint::new(x + h, y)).unwrap()
                - f_value(&p, PlanePoint::new(x - h, y)).unwrap())
                / (2.0 * h);
            let fd_y = (f_value(&p, PlanePoint::new(x, y + h)).unwrap()
                - f_value(&p, PlanePoint::new(x, y - h)).unwrap())
                / (2.0 * h);
            let scale = g.norm();
            assert!(
                (g.gx - fd_x).hypot(g.gy - fd_y) <= 1e-6 * scale,
                "gradient mismatch at r={r}, ang={ang}"
            );
        }
    }

    #[test]
    fn gradient_profile_range() {
        // Frozen extremes of the angular profile.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..200_000 {
            let w = gradient_profile(TAU * i as f64 / 200_000.0);
            lo = lo.min(w);
            hi = hi.max(w);
        }
        assert!((lo - 0.6038110379684039).abs() < 1e-9);
        assert!((hi - 1.3708199246084896).abs() < 1e-9);

        // Profile times the chart factor reproduces the gradient norm.
        let p = params();
        for i in 0..60 {
            let q = PlanePoint::new(0.2 + 0.3 * i as f64, -4.0 + 0.21 * i as f64);
            let g = f_gradient(&p, q).unwrap();
            let c = g.chart.unwrap();
            let predicted =
                (1.0 / p.tau()) * ((1.0 / p.tau() - 1.0) * c.t).exp() * gradient_profile(c.theta);
            assert_relative_eq!(g.norm(), predicted, max_relative = 1e-10);
        }
    }

    #[test]
    fn sandwich_holds_with_equality_cases() {
        let p = params();
        assert_eq!(sandwich_bounds(&p, PlanePoint::new(0.0, 0.0)), (0.0, 0.0));

        for i in 0..80 {
            let t = -6.0 + 0.15 * i as f64;
            // Rotated major-axis tip: lower bound is attained.
            let tip = foliation::chart_to_plane(&FoliationParams::canonical(), ChartPoint::new(t, 0.0));
            let f = f_value(&p, tip).unwrap();
            let (lo, _) = sandwich_bounds(&p, tip);
            assert_relative_eq!(f, lo, max_relative = 1e-12);
            // Rotated minor-axis tip: upper bound is attained.
            let tip = foliation::chart_to_plane(
                &FoliationParams::canonical(),
                ChartPoint::new(t, std::f64::consts::FRAC_PI_2),
            );
            let f = f_value(&p, tip).unwrap();
            let (_, hi) = sandwich_bounds(&p, tip);
            assert_relative_eq!(f, hi, max_relative = 1e-12);
        }

        for i in 0..200 {
            let ang = 0.71 * i as f64;
            let r = 10f64.powf(-5.0 + 10.0 * (i as f64 / 199.0));
            let q = PlanePoint::new(r * ang.cos(), r * ang.sin());
            let f = f_value(&p, q).unwrap();
            let (lo, hi) = sandwich_bounds(&p, q);
            assert!(f >= lo * (1.0 - 1e-12));
            assert!(f <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lojasiewicz_residual_known_and_positive() {
        let p = params();
        assert_eq!(lojasiewicz_residual(&p, PlanePoint::new(0.0, 0.0)).unwrap(), 0.0);
        let expected = (1.0 - 0.09 * 0.09) / (0.09 * SQRT_2);
        assert_relative_eq!(
            lojasiewicz_residual(&p, PlanePoint::new(SQRT_2, 0.0)).unwrap(),
            expected,
            max_relative = 1e-12
        );
        for i in 0..300 {
            let ang = 0.41 * i as f64;
            let r = 10f64.powf(-6.0 + 12.0 * (i as f64 / 299.0));
            let q = PlanePoint::new(r * ang.cos(), r * ang.sin());
            assert!(lojasiewicz_residual(&p, q).unwrap() > 0.0);
        }
        // Log-stable branch far past the overflow point.
        let big = lojasiewicz_residual(&p, PlanePoint::new(1e300, 0.0)).unwrap();
        assert_eq!(big, f64::INFINITY);
        let tiny = lojasiewicz_residual(&p, PlanePoint::new(1e-300, 0.0)).unwrap();
        assert!(tiny >= 0.0);
    }

    #[test]
    fn kl_residual_known_and_bounded_below() {
        let p = params();
        assert_eq!(kl_residual(&p, PlanePoint::new(0.0, 0.0)), Err(Error::Origin));
        // (0, 1) sits at t = 0, theta = pi/2 where the profile equals 1.
        assert_relative_eq!(
            kl_residual(&p, PlanePoint::new(0.0, 1.0)).unwrap(),
            SQRT_2 / 0.09 - 1.0,
            max_relative = 1e-12
        );
        // (sqrt2, 0) sits at theta = 0 where the profile equals 1/sqrt2.
        assert_relative_eq!(
            kl_residual(&p, PlanePoint::new(SQRT_2, 0.0)).unwrap(),
            1.0 / 0.09 - 1.0,
            max_relative = 1e-12
        );
        // Residual never drops below sqrt2 * min-profile / tau - 1.
        let floor = SQRT_2 * 0.6038110379684039 / 0.09 - 1.0;
        for i in 0..300 {
            let ang = 0.53 * i as f64;
            let r = 10f64.powf(-6.0 + 12.0 * (i as f64 / 299.0));
            let q = PlanePoint::new(r * ang.cos(), r * ang.sin());
            let kl = kl_residual(&p, q).unwrap();
            assert!(kl >= floor - 1e-9, "kl {kl} below floor {floor}");
        }
        // Log-stable branch: the value stays in the profile window even where
        // f and the gradient norm both overflow.
        let kl = kl_residual(&p, PlanePoint::new(1e280, 1e280)).unwrap();
        assert!(kl.is_finite());
        assert!(kl >= floor - 1e-6);
        assert!(kl <= SQRT_2 * 1.3708199246084896 / 0.09 - 1.0 + 1e-6);
    }

    #[test]
    fn derivative_scaling_slopes() {
        let p = params();
        let radii: Vec<f64> = (5..=20).map(|j| 2f64.powi(-j)).collect();

        let est = derivative_scaling(&p, 1, &radii).unwrap();
        assert!((est.slope - (1.0 / 0.09 - 1.0)).abs() < 0.05, "slope {}", est.slope);
        assert_eq!(est.samples.len(), radii.len());

        let est = derivative_scaling(&p, 2, &radii).unwrap();
        assert!((est.slope - (1.0 / 0.09 - 2.0)).abs() < 0.1, "slope {}", est.slope);

        let est = derivative_scaling(&p, 3, &radii).unwrap();
        assert!((est.slope - (1.0 / 0.09 - 3.0)).abs() < 0.2, "slope {}", est.slope);

        let sharp = FunctionParams::new(0.05).unwrap();
        let est = derivative_scaling(&sharp, 1, &radii).unwrap();
        assert!((est.slope - 19.0).abs() < 0.1, "slope {}", est.slope);
    }

    #[test]
    fn derivative_scaling_rejects_bad_input() {
        let p = params();
        let radii: Vec<f64> = (5..=20).map(|j| 2f64.powi(-j)).collect();
        assert!(derivative_scaling(&p, 0, &radii).is_err());
        assert!(derivative_scaling(&p, 4, &radii).is_err());
        assert!(derivative_scaling(&p, 1, &radii[..1]).is_err());
        assert!(derivative_scaling(&p, 1, &[0.25, 0.25]).is_err());
        assert!(derivative_scaling(&p, 1, &[0.125, 0.25]).is_err());
        assert!(derivative_scaling(&p, 1, &[2.0, 0.5]).is_err());
        assert!(derivative_scaling(&p, 1, &[0.5, 1e-9]).is_err());
    }

    #[test]
    fn gradient_vanishing_rate_near_origin() {
        // |grad f| <= (1/tau) * max-profile * |q|^{1/tau - 1} with the norm
        // pinched by the sandwich; check the fitted constant stays sane.
        let p = params();
        for i in 0..100 {
            let ang = 2.13 * i as f64;
            let r = 10f64.powf(-6.0 + 5.0 * (i as f64 / 99.0));
            let q = PlanePoint::new(r * ang.cos(), r * ang.sin());
            let g = f_gradient(&p, q).unwrap().norm();
            let cap = (1.0 / 0.09) * 1.3708199246084897 * r.powf(1.0 / 0.09 - 1.0);
            assert!(g <= cap * (1.0 + 1e-9), "g {g} above cap {cap} at r {r}");
            assert!(g > 0.0);
        }
    }
}
