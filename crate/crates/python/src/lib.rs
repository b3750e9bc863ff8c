//! Python bindings: scalar entry points mirroring the CLI surface.
//! Everything returns plain floats and tuples; the verification report
//! crosses the boundary as a JSON string.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use spiralcvx_core::dynamics;
use spiralcvx_core::foliation::{ChartPoint, PlanePoint};
use spiralcvx_core::function::{self, FunctionParams};
use spiralcvx_core::verify::{self, Suite, VerifyConfig};
use spiralcvx_core::Error;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn params(tau: f64) -> PyResult<FunctionParams> {
    FunctionParams::unrestricted(tau).map_err(err)
}

/// f(x, y) for the given sharpness exponent.
#[pyfunction]
#[pyo3(signature = (x, y, tau = function::DEFAULT_TAU))]
fn value(x: f64, y: f64, tau: f64) -> PyResult<f64> {
    function::f_value(&params(tau)?, PlanePoint::new(x, y)).map_err(err)
}

/// Gradient of f at (x, y).
#[pyfunction]
#[pyo3(signature = (x, y, tau = function::DEFAULT_TAU))]
fn gradient(x: f64, y: f64, tau: f64) -> PyResult<(f64, f64)> {
    let g = function::f_gradient(&params(tau)?, PlanePoint::new(x, y)).map_err(err)?;
    Ok((g.gx, g.gy))
}

/// Chart coordinates (t, theta) of a point off the origin.
#[pyfunction]
fn invert(x: f64, y: f64) -> PyResult<(f64, f64)> {
    let inv = spiralcvx_core::foliation::plane_to_chart(
        &spiralcvx_core::foliation::FoliationParams::canonical(),
        PlanePoint::new(x, y),
    )
    .map_err(err)?;
    Ok((inv.chart.t, inv.chart.theta))
}

/// Plane point of chart coordinates (t, theta).
#[pyfunction]
fn leaf_point(t: f64, theta: f64) -> PyResult<(f64, f64)> {
    let q = spiralcvx_core::foliation::chart_to_plane(
        &spiralcvx_core::foliation::FoliationParams::canonical(),
        ChartPoint::new(t, theta),
    );
    Ok((q.x, q.y))
}

/// Two-sided norm bound (lower, upper) on f at (x, y).
#[pyfunction]
#[pyo3(signature = (x, y, tau = function::DEFAULT_TAU))]
fn sandwich(x: f64, y: f64, tau: f64) -> PyResult<(f64, f64)> {
    Ok(function::sandwich_bounds(&params(tau)?, PlanePoint::new(x, y)))
}

/// Mean winding rate from an n-point periodic quadrature.
#[pyfunction]
#[pyo3(signature = (n = 4096))]
fn winding_constant(n: usize) -> PyResult<f64> {
    dynamics::winding_constant(n).map_err(err)
}

/// Upper bound on the forward blow-up time of the orbit through (x, y).
#[pyfunction]
#[pyo3(signature = (x, y, tau = function::DEFAULT_TAU))]
fn blowup_bound(x: f64, y: f64, tau: f64) -> PyResult<f64> {
    dynamics::blowup_bound(&params(tau)?, PlanePoint::new(x, y)).map_err(err)
}

/// Full verification report as a JSON string.
#[pyfunction]
#[pyo3(signature = (tau = function::DEFAULT_TAU, seed = 42, samples = 10_000, suite = "all"))]
fn verify_json(tau: f64, seed: u64, samples: usize, suite: &str) -> PyResult<String> {
    let parsed: Suite = suite.parse().map_err(err)?;
    let cfg = VerifyConfig {
        tau,
        seed,
        samples,
        ..VerifyConfig::default()
    };
    let report = verify::run(&cfg, parsed).map_err(err)?;
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

#[pymodule]
fn spiralcvx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(value, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(leaf_point, m)?)?;
    m.add_function(wrap_pyfunction!(sandwich, m)?)?;
    m.add_function(wrap_pyfunction!(winding_constant, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_json, m)?)?;
    Ok(())
}
