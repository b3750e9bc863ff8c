//! Embedded Dormand-Prince 5(4) integrator.
//!
//! Fifth-order propagation with a fourth-order error estimate, FSAL, PI
//! step-size control, and cubic-Hermite dense output on the last accepted
//! step. The acceptance callback lets callers veto a step (it is retried at
//! half size) or stop the run after locating an event inside the step, which
//! is everything the dynamics module needs.

/// Pointwise scale for the error norm: `atol + rtol * max(|y0|, |y1|)`.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on |step|; infinity disables it.
    pub h_max: f64,
    /// Bound on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 500_000,
        }
    }
}

/// Caller verdict on a tentatively accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    /// Retry the same step at half size (used for geometric guards that the
    /// error estimate knows nothing about).
    Reject,
    /// Stop integrating; the caller has recorded what it needs.
    Halt,
}

/// One accepted step with enough data for cubic-Hermite interpolation.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<'a, const N: usize> {
    pub s0: f64,
    pub h: f64,
    pub y0: &'a [f64; N],
    pub y1: &'a [f64; N],
    pub f0: &'a [f64; N],
    pub f1: &'a [f64; N],
}

impl<const N: usize> DenseStep<'_, N> {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    /// Hermite cubic through the step endpoints and slopes; `s` inside the
    /// step. Fourth-order accurate, matching the integrator's local error up
    /// to a constant.
    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = (s - self.s0) / self.h;
        let th2 = th * th;
        let th3 = th2 * th;
        let c0 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let c1 = th3 - 2.0 * th2 + th;
        let c2 = -2.0 * th3 + 3.0 * th2;
        let c3 = th3 - th2;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = c0 * self.y0[i]
                + c1 * self.h * self.f0[i]
                + c2 * self.y1[i]
                + c3 * self.h * self.f1[i];
        }
        out
    }
}

/// How an integration ended. All variants carry the final state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<const N: usize> {
    /// Ran to `s_end`.
    Reached { s: f64, y: [f64; N] },
    /// The callback said stop.
    Halted { s: f64, y: [f64; N] },
    /// Step budget exhausted.
    MaxSteps { s: f64, y: [f64; N] },
    /// Step size shrank below the fp resolution of `s`.
    StepUnderflow { s: f64, y: [f64; N] },
}

impl<const N: usize> Outcome<N> {
    pub fn state(&self) -> (f64, [f64; N]) {
        match *self {
            Outcome::Reached { s, y }
            | Outcome::Halted { s, y }
            | Outcome::MaxSteps { s, y }
            | Outcome::StepUnderflow { s, y } => (s, y),
        }
    }
}

// Butcher tableau (Dormand-Prince 1980).
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Error coefficients: fifth-order weights minus the embedded fourth-order.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// PI controller constants from the standard dopri5 implementation.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - 0.75 * BETA;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROWTH: f64 = 10.0;

impl Dopri5 {
    /// Integrates `y' = rhs(s, y)` from `(s0, y0)` to `s_end` (either
    /// direction). `on_accept` sees every accepted step before it is
    /// committed.
    pub fn integrate<const N: usize>(
        &self,
        s0: f64,
        y0: [f64; N],
        s_end: f64,
        mut rhs: impl FnMut(f64, &[f64; N]) -> [f64; N],
        mut on_accept: impl FnMut(&DenseStep<'_, N>) -> StepControl,
    ) -> Outcome<N> {
        let mut s = s0;
        let mut y = y0;
        if s_end == s0 {
            return Outcome::Reached { s, y };
        }
        let dir = (s_end - s0).signum();
        let mut f0 = rhs(s, &y);
        let mut h = dir * self.initial_step(s0, &y, &f0, s_end, &mut rhs);

        let mut facold: f64 = 1e-4;
        let mut rejected = false;
        let mut steps = 0;

        while steps < self.max_steps {
            steps += 1;

            let mut last = false;
            if (s + 1.01 * h - s_end) * dir > 0.0 {
                h = s_end - s;
                last = true;
            }
            if !last && h.abs() <= s.abs().max(1.0) * f64::EPSILON {
                return Outcome::StepUnderflow { s, y };
            }

            // Stages. k1 is the FSAL slope carried over from the last step.
            let k1 = f0;
            let mut yt = [0.0; N];
            for i in 0..N {
                yt[i] = y[i] + h * A2[0] * k1[i];
            }
            let k2 = rhs(s + C[0] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A3[0] * k1[i] + A3[1] * k2[i]);
            }
            let k3 = rhs(s + C[1] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A4[0] * k1[i] + A4[1] * k2[i] + A4[2] * k3[i]);
            }
            let k4 = rhs(s + C[2] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A5[0] * k1[i] + A5[1] * k2[i] + A5[2] * k3[i] + A5[3] * k4[i]);
            }
            let k5 = rhs(s + C[3] * h, &yt);
            for i in 0..N {
                yt[i] = y[i]
                    + h * (A6[0] * k1[i]
                        + A6[1] * k2[i]
                        + A6[2] * k3[i]
                        + A6[3] * k4[i]
                        + A6[4] * k5[i]);
            }
            let k6 = rhs(s + C[4] * h, &yt);
            let mut y1 = [0.0; N];
            for i in 0..N {
                y1[i] = y[i]
                    + h * (A7[0] * k1[i]
                        + A7[2] * k3[i]
                        + A7[3] * k4[i]
                        + A7[4] * k5[i]
                        + A7[5] * k6[i]);
            }
            let k7 = rhs(s + h, &y1);

            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h
                    * (E[0] * k1[i]
                        + E[2] * k3[i]
                        + E[3] * k4[i]
                        + E[4] * k5[i]
                        + E[5] * k6[i]
                        + E[6] * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / N as f64).sqrt();

            if !err.is_finite() {
                // Stage blew past the fp range; only shrinking can help.
                h *= 0.5;
                rejected = true;
                continue;
            }

            if err <= 1.0 {
                let dense = DenseStep {
                    s0: s,
                    h,
                    y0: &y,
                    y1: &y1,
                    f0: &k1,
                    f1: &k7,
                };
                match on_accept(&dense) {
                    StepControl::Continue => {}
                    StepControl::Reject => {
                        h *= 0.5;
                        rejected = true;
                        continue;
                    }
                    StepControl::Halt => {
                        return Outcome::Halted { s: s + h, y: y1 };
                    }
                }

                // PI control: the memory term uses the previous accepted
                // error, not the current one.
                let fac = (err.powf(EXPO1) / facold.powf(BETA) / SAFETY)
                    .clamp(1.0 / MAX_GROWTH, MAX_SHRINK);
                facold = err.max(1e-4);
                s += h;
                y = y1;
                f0 = k7;
                if last || (s_end - s) * dir <= 0.0 {
                    return Outcome::Reached { s: s_end, y };
                }
                let mut h_new = h / fac;
                if rejected {
                    // No growth right after a rejection.
                    h_new = dir * h_new.abs().min(h.abs());
                    rejected = false;
                }
                h = dir * h_new.abs().min(self.h_max);
            } else {
                let fac = (err.powf(EXPO1) / SAFETY).min(MAX_SHRINK);
                h /= fac;
                rejected = true;
            }
        }
        Outcome::MaxSteps { s, y }
    }

    /// Standard two-evaluation starting-step heuristic.
    fn initial_step<const N: usize>(
        &self,
        s0: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        s_end: f64,
        rhs: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    ) -> f64 {
        let span = (s_end - s0).abs();
        let dir = (s_end - s0).signum();
        let sc = |i: usize| self.atol + self.rtol * y0[i].abs();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            d0 += (y0[i] / sc(i)).powi(2);
            d1 += (f0[i] / sc(i)).powi(2);
        }
        let d0 = (d0 / N as f64).sqrt();
        let d1 = (d1 / N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);

        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y0[i] + dir * h0 * f0[i];
        }
        let f1 = rhs(s0 + dir * h0, &y1);
        let mut d2 = 0.0;
        for i in 0..N {
            d2 += ((f1[i] - f0[i]) / sc(i)).powi(2);
        }
        let d2 = (d2 / N as f64).sqrt() / h0;

        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }
}
