//! An explicit convex function on the plane whose gradient orbits spiral
//! infinitely often into the origin and out to infinity.
//!
//! The construction rests on a foliation of the punctured plane by nested
//! rotating ellipses: the leaf at parameter `t` is the ellipse with semi-axes
//! `(mu e^{nu t}, e^{nu t})` rotated by angle `t`. Every nonzero point lies on
//! exactly one leaf, which makes `(t, theta)` a global chart. The function is
//! constant on leaves, `f = exp(t/tau)`, extended by `f(0) = 0`.
//!
//! Module map:
//! - [`foliation`]: the chart itself, its Jacobian, and the numeric inversion.
//! - [`function`]: the convex function, its gradient, growth envelopes, and
//!   sharpness residuals.
//! - [`convexity`]: support-function concavity audit and direct second-order
//!   probes.
//! - [`ode`]: embedded Runge-Kutta integrator used by the dynamics module.
//! - [`dynamics`]: gradient-flow orbits, winding bookkeeping, blow-up bounds.
//! - [`verify`]: seeded, deterministic verification suites over all of the
//!   above.

pub mod convexity;
pub mod dynamics;
pub mod foliation;
pub mod function;
pub mod ode;
pub mod verify;

mod error;

pub use error::Error;
