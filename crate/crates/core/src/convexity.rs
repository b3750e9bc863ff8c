//! Convexity audit of the sublevel sets.
//!
//! The sublevel set `{f <= lambda}` is the region enclosed by the leaf at
//! `t = tau ln lambda`, so its support function in direction `alpha` has the
//! closed form `G = e^t sqrt(1 + cos^2(t - alpha))`. Convexity of `f` is
//! equivalent to concavity of `lambda -> G(lambda)` for every fixed `alpha`,
//! which in turn is the sign condition `2 g'' g - (g')^2 <= 0` for `g = G^2`.
//! That sign is scale-invariant: dividing by `e^{4t}/lambda^2` leaves the
//! `t`-free profile `4 (tau^2 A - tau B)` in the relative angle, which is what
//! the scan maximizes.

use crate::foliation::PlanePoint;
use crate::function::{self, FunctionParams};
use crate::Error;

/// Slack for the scaled concavity residual: it must stay below this.
pub const CONCAVITY_SLACK: f64 = 1e-12;

/// Support-function data of the sublevel set `{f <= lambda}` at direction
/// `alpha`, with `lambda`-derivatives of `g = G^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEval {
    pub alpha: f64,
    pub lambda: f64,
    /// Squared support value `G^2`.
    pub g: f64,
    pub g_prime: f64,
    pub g_double_prime: f64,
    /// Concavity residual `2 g'' g - (g')^2`; nonpositive iff `G` is concave
    /// at this point.
    pub residual: f64,
    /// `residual * lambda^2 / e^{4t}`, free of the exponential scale:
    /// `4 (tau^2 A - tau B)` in the relative angle `t - alpha`.
    pub scaled_residual: f64,
}

fn check_tau(tau: f64) -> Result<(), Error> {
    if !(tau.is_finite() && tau > 0.0 && tau < 1.0) {
        return Err(Error::Param(format!(
            "support audit needs an exponent parameter in (0, 1), got {tau}"
        )));
    }
    Ok(())
}

/// Evaluates the squared support function and its concavity residual.
pub fn support_squared(tau: f64, alpha: f64, lambda: f64) -> Result<SupportEval, Error> {
    check_tau(tau)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Argument(format!(
            "level must be finite and positive, got {lambda}"
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::Argument(format!("direction must be finite, got {alpha}")));
    }

    let t = tau * lambda.ln();
    let (s, c) = (t - alpha).sin_cos();
    let w = 1.0 + c * c;
    let u = c * s;
    let e2t = (2.0 * t).exp();
    let t_p = tau / lambda;
    let t_pp = -tau / (lambda * lambda);

    let g = e2t * w;
    let g_prime = 2.0 * e2t * t_p * (w - u);
    let g_double_prime = 2.0 * e2t * (t_p * t_p * (3.0 - 4.0 * u) + t_pp * (w - u));
    let residual = 2.0 * g_double_prime * g - g_prime * g_prime;

    let a_profile = w * (3.0 - 4.0 * u) - (w - u) * (w - u);
    let b_profile = w * (w - u);
    let scaled_residual = 4.0 * (tau * tau * a_profile - tau * b_profile);

    Ok(SupportEval {
        alpha,
        lambda,
        g,
        g_prime,
        g_double_prime,
        residual,
        scaled_residual,
    })
}

/// Support value `G(lambda) = sqrt(g)`.
pub fn support_value(tau: f64, alpha: f64, lambda: f64) -> Result<f64, Error> {
    Ok(support_squared(tau, alpha, lambda)?.g.sqrt())
}

/// Growth of the support value from level `l1` to `l2 > l1`; positive for all
/// directions exactly because the sublevel sets are nested.
pub fn support_growth(tau: f64, alpha: f64, l1: f64, l2: f64) -> Result<f64, Error> {
    if !(l1 < l2) {
        return Err(Error::Argument(format!(
            "levels must be increasing, got {l1} then {l2}"
        )));
    }
    Ok(support_value(tau, alpha, l2)? - support_value(tau, alpha, l1)?)
}

/// Worst case of a concavity scan over a direction/level grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOutcome {
    pub worst_scaled: f64,
    pub witness_alpha: f64,
    pub witness_lambda: f64,
    /// The sufficient-bound coefficient `2 tau (10 tau - 1)`. The scan's
    /// scaled residual is guaranteed below it only when it is negative,
    /// i.e. for `tau < 1/10`.
    pub bound_coefficient: f64,
    /// Whether the bound coefficient certifies concavity by sign alone.
    pub certified: bool,
    /// Scan verdict: worst scaled residual within [`CONCAVITY_SLACK`].
    pub pass: bool,
}

/// Maximizes the scaled concavity residual over the grid. Passing means the
/// squared-support residual stayed nonpositive up to the documented slack.
pub fn concavity_scan(
    tau: f64,
    alpha_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<ScanOutcome, Error> {
    check_tau(tau)?;
    if alpha_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::Argument("scan grids must be non-empty".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = (f64::NAN, f64::NAN);
    for &alpha in alpha_grid {
        for &lambda in lambda_grid {
            let ev = support_squared(tau, alpha, lambda)?;
            if ev.scaled_residual > worst {
                worst = ev.scaled_residual;
                witness = (alpha, lambda);
            }
        }
    }
    let bound = 2.0 * tau * (10.0 * tau - 1.0);
    Ok(ScanOutcome {
        worst_scaled: worst,
        witness_alpha: witness.0,
        witness_lambda: witness.1,
        bound_coefficient: bound,
        certified: bound < 0.0,
        pass: worst <= CONCAVITY_SLACK,
    })
}

/// Finite-difference Hessian data at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianProbe {
    pub h_xx: f64,
    pub h_xy: f64,
    pub h_yy: f64,
    pub min_eigenvalue: f64,
    pub frobenius: f64,
}

/// Second-difference Hessian with radius-scaled step `h = 1e-4 |q|`.
/// Rejected at the origin, where second differences of a `|q|^{1/tau}`-sized
/// function are pure noise.
pub fn hessian_fd(p: &FunctionParams, q: PlanePoint) -> Result<HessianProbe, Error> {
    if q.is_origin() {
        return Err(Error::Origin);
    }
    let h = 1e-4 * q.norm();
    let fv = |x: f64, y: f64| -> Result<f64, Error> { function::f_value(p, PlanePoint::new(x, y)) };
    let f0 = fv(q.x, q.y)?;
    let h_xx = (fv(q.x + h, q.y)? - 2.0 * f0 + fv(q.x - h, q.y)?) / (h * h);
    let h_yy = (fv(q.x, q.y + h)? - 2.0 * f0 + fv(q.x, q.y - h)?) / (h * h);
    let h_xy = (fv(q.x + h, q.y + h)? - fv(q.x + h, q.y - h)? - fv(q.x - h, q.y + h)?
        + fv(q.x - h, q.y - h)?)
        / (4.0 * h * h);
    let mean = 0.5 * (h_xx + h_yy);
    let spread = (0.25 * (h_xx - h_yy) * (h_xx - h_yy) + h_xy * h_xy).sqrt();
    Ok(HessianProbe {
        h_xx,
        h_xy,
        h_yy,
        min_eigenvalue: mean - spread,
        frobenius: (h_xx * h_xx + 2.0 * h_xy * h_xy + h_yy * h_yy).sqrt(),
    })
}

/// Midpoint convexity gap `f((a+b)/2) - (f(a) + f(b))/2`; nonpositive for a
/// convex function.
pub fn midpoint_check(p: &FunctionParams, a: PlanePoint, b: PlanePoint) -> Result<f64, Error> {
    let mid = PlanePoint::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    Ok(function::f_value(p, mid)?
        - 0.5 * (function::f_value(p, a)? + function::f_value(p, b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{SQRT_2, TAU};

    #[test]
    fn support_known_values() {
        let ev = support_squared(0.09, 0.0, 1.0).unwrap();
        assert_relative_eq!(ev.g, 2.0, max_relative = 1e-15);
        assert_relative_eq!(ev.g_prime, 0.36, max_relative = 1e-14);
        assert_relative_eq!(ev.g_double_prime, 2.0 * (3.0 * 0.09 * 0.09 - 2.0 * 0.09), max_relative = 1e-13);
        // residual = 8 tau^2 - 16 tau at this point, and lambda = 1 makes the
        // scaled residual literally equal to it.
        assert_relative_eq!(ev.residual, 8.0 * 0.09 * 0.09 - 16.0 * 0.09, max_relative = 1e-13);
        assert_relative_eq!(ev.scaled_residual, ev.residual, max_relative = 1e-13);

        assert_relative_eq!(
            support_value(0.09, 0.0, 1.0).unwrap(),
            SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn support_derivatives_match_finite_differences() {
        for i in 0..60 {
            let tau = 0.03 + 0.004 * (i % 10) as f64;
            let alpha = 0.37 * i as f64;
            let lambda = 10f64.powf(-3.0 + 6.0 * (i as f64 / 59.0));
            let h = 1e-4 * lambda;
            let g = |l: f64| support_squared(tau, alpha, l).unwrap().g;
            let ev = support_squared(tau, alpha, lambda).unwrap();
            let fd1 = (g(lambda + h) - g(lambda - h)) / (2.0 * h);
            let fd2 = (g(lambda + h) - 2.0 * g(lambda) + g(lambda - h)) / (h * h);
            assert_relative_eq!(ev.g_prime, fd1, max_relative = 1e-7);
            assert_relative_eq!(ev.g_double_prime, fd2, max_relative = 1e-5);
        }
    }

    #[test]
    fn scaled_residual_depends_only_on_relative_angle() {
        let tau = 0.09;
        let base = support_squared(tau, 0.3, 2.0).unwrap();
        // Quadruple the level and shift the direction by the induced t-shift.
        let shifted = support_squared(tau, 0.3 + tau * 2.0f64.ln(), 4.0).unwrap();
        assert_relative_eq!(base.scaled_residual, shifted.scaled_residual, max_relative = 1e-12);
    }

    #[test]
    fn scan_certifies_default_tau() {
        let alphas: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
        let lambdas: Vec<f64> = (0..64)
            .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 63.0))
            .collect();
        let out = concavity_scan(0.09, &alphas, &lambdas).unwrap();
        assert!(out.pass);
        assert!(out.certified);
        assert!(out.worst_scaled < -0.1, "worst {}", out.worst_scaled);
        assert!(out.worst_scaled <= out.bound_coefficient + CONCAVITY_SLACK);
        assert_relative_eq!(out.bound_coefficient, 2.0 * 0.09 * (0.9 - 1.0), max_relative = 1e-15);
    }

    #[test]
    fn scan_outside_certified_range_still_concave_but_uncertified() {
        let alphas: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
        let lambdas: Vec<f64> = (0..64)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 63.0))
            .collect();
        let out = concavity_scan(0.2, &alphas, &lambdas).unwrap();
        // Concavity itself persists up to tau = 1/2...
        assert!(out.pass);
        assert!(out.worst_scaled < 0.0);
        // ...but the sign bound no longer certifies anything.
        assert!(!out.certified);
        assert!(out.bound_coefficient > 0.0);
    }

    #[test]
    fn validation_errors() {
        assert!(support_squared(0.0, 0.0, 1.0).is_err());
        assert!(support_squared(1.0, 0.0, 1.0).is_err());
        assert!(support_squared(f64::NAN, 0.0, 1.0).is_err());
        assert!(support_squared(0.09, 0.0, 0.0).is_err());
        assert!(support_squared(0.09, 0.0, -2.0).is_err());
        assert!(support_squared(0.09, f64::INFINITY, 1.0).is_err());
        assert!(concavity_scan(0.09, &[], &[1.0]).is_err());
        assert!(concavity_scan(0.09, &[0.0], &[]).is_err());
        assert!(support_growth(0.09, 0.0, 2.0, 1.0).is_err());
        assert!(support_growth(0.09, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn support_growth_known_value_and_positivity() {
        // From level 1 to level e^{1/tau}, i.e. leaf t = 0 to t = 1.
        let grown = support_growth(0.09, 0.0, 1.0, (1.0 / 0.09f64).exp()).unwrap();
        let expected = 1f64.exp() * (1.0 + 1f64.cos().powi(2)).sqrt() - SQRT_2;
        assert_relative_eq!(grown, expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 1.6754657070780718, max_relative = 1e-14);

        for i in 0..100 {
            let alpha = 0.41 * i as f64;
            let l1 = 10f64.powf(-4.0 + 7.0 * (i as f64 / 99.0));
            let g = support_growth(0.09, alpha, l1, l1 * 1.7).unwrap();
            assert!(g > 0.0);
        }
    }

    #[test]
    fn hessian_positive_semidefinite_with_margin() {
        let p = FunctionParams::default();
        for i in 0..100 {
            let ang = 0.59 * i as f64;
            let r = 10f64.powf(-3.0 + 6.0 * (i as f64 / 99.0));
            let q = PlanePoint::new(r * ang.cos(), r * ang.sin());
            let probe = hessian_fd(&p, q).unwrap();
            assert!(
                probe.min_eigenvalue > 0.01 * probe.frobenius,
                "thin eigenvalue {} vs frobenius {} at r {r}",
                probe.min_eigenvalue,
                probe.frobenius
            );
        }
        assert_eq!(hessian_fd(&p, PlanePoint::new(0.0, 0.0)), Err(Error::Origin));
    }

    #[test]
    fn midpoint_gap_nonpositive() {
        let p = FunctionParams::default();
        let gap = midpoint_check(&p, PlanePoint::new(SQRT_2, 0.0), PlanePoint::new(-SQRT_2, 0.0))
            .unwrap();
        assert_relative_eq!(gap, -1.0, max_relative = 1e-12);

        for i in 0..200 {
            let a1 = 0.37 * i as f64;
            let a2 = 1.93 * i as f64;
            let r1 = 10f64.powf(-2.0 + 4.0 * (i as f64 / 199.0));
            let r2 = 10f64.powf(2.0 - 4.0 * (i as f64 / 199.0));
            let a = PlanePoint::new(r1 * a1.cos(), r1 * a1.sin());
            let b = PlanePoint::new(r2 * a2.cos(), r2 * a2.sin());
            let gap = midpoint_check(&p, a, b).unwrap();
            let scale = function::f_value(&p, a)
                .unwrap()
                .max(function::f_value(&p, b).unwrap());
            assert!(gap <= 1e-12 * scale, "gap {gap} vs scale {scale}");
        }
    }
}
