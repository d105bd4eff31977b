//! Python bindings for the optoent steady-state entanglement pipeline.
//!
//! Matrices cross the boundary as nested lists; parameters are SI keyword
//! overrides on top of the baseline defaults.

use optoent_core::entanglement::{logarithmic_negativity as log_neg, BipartitePair, EntanglementReport};
use optoent_core::lyapunov::solve_lyapunov as solve;
use optoent_core::sweep::{
    csv_string, evaluate_point as evaluate, find_critical_temperature, run_sweep, PointResult, PointStatus,
    SweepAxis, SweepSpec, TcritError, DEFAULT_TCRIT_MAX, DEFAULT_TCRIT_TOLERANCE,
};
use optoent_core::{DetuningSpec, PhysicalParams};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(optoent, UnstableError, PyRuntimeError, "No stationary state: the drift matrix has an eigenvalue with non-negative real part.");
create_exception!(optoent, NoCrossingError, PyRuntimeError, "E_N does not reach zero below t_max.");

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn params_from(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PhysicalParams> {
    let mut p = PhysicalParams::baseline();
    let (mut delta, mut delta1, mut delta2) = (None, None, None);
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let x: f64 = v.extract()?;
            match key.as_str() {
                "cavity_length" => p.cavity_length = x,
                "cavity_decay" => p.cavity_decay = x,
                "wavelength" => p.wavelength = x,
                "drive_power" => p.drive_power = x,
                "mech_freq" => p.mech_freq = x,
                "mech_mass" => p.mech_mass = x,
                "mech_damping" => p.mech_damping = x,
                "atom_decay" => p.atom_decay = x,
                "atom_coupling" => p.atom_coupling = x,
                "cavity_coupling" => p.cavity_coupling = x,
                "atom_detuning" => p.atom_detuning = x,
                "temperature" => p.temperature = x,
                "atom_number" => p.atom_number = x,
                "delta" => delta = Some(x),
                "delta1" => delta1 = Some(x),
                "delta2" => delta2 = Some(x),
                other => return Err(PyValueError::new_err(format!("unknown parameter `{other}`"))),
            }
        }
    }
    p.detuning = match (delta, delta1, delta2) {
        (None, None, None) => DetuningSpec::Effective { delta: p.mech_freq },
        (Some(delta), None, None) => DetuningSpec::Effective { delta },
        (None, Some(delta1), Some(delta2)) => DetuningSpec::Bare { delta1, delta2 },
        _ => return Err(PyValueError::new_err("give either `delta`, or both `delta1` and `delta2`")),
    };
    p.validate().map_err(value_err)?;
    Ok(p)
}

fn pair_from(name: &str) -> PyResult<BipartitePair> {
    name.parse().map_err(|_| PyValueError::new_err(format!("unknown pair `{name}`")))
}

fn matrix<const N: usize>(rows: Vec<Vec<f64>>) -> PyResult<nalgebra::SMatrix<f64, N, N>> {
    if rows.len() != N || rows.iter().any(|r| r.len() != N) {
        return Err(PyValueError::new_err(format!("expected a {N}x{N} matrix")));
    }
    Ok(nalgebra::SMatrix::from_fn(|i, j| rows[i][j]))
}

fn rows<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> Vec<Vec<f64>> {
    (0..N).map(|i| (0..N).map(|j| m[(i, j)]).collect()).collect()
}

fn report_dict<'py>(py: Python<'py>, r: &EntanglementReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("log_negativity", r.log_negativity)?;
    d.set_item("nu_minus", r.nu_minus)?;
    d.set_item("nu_plus", r.nu_plus)?;
    d.set_item("sigma", r.sigma)?;
    d.set_item("entangled", r.entangled)?;
    d.set_item("physical", r.physical)?;
    Ok(d)
}

fn point_dict<'py>(py: Python<'py>, r: &PointResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let status = match &r.status {
        PointStatus::Ok => "ok".to_string(),
        PointStatus::Unstable => "unstable".to_string(),
        PointStatus::Failed(m) => format!("failed: {m}"),
    };
    d.set_item("status", status)?;
    d.set_item("stable", r.is_stable())?;
    d.set_item("spectral_abscissa_over_omega_m", r.spectral_abscissa.map(|x| x / r.mech_freq))?;
    for (k, pair) in BipartitePair::ALL.iter().enumerate() {
        d.set_item(format!("EN{}", k + 1), r.log_negativity(*pair))?;
        d.set_item(format!("nu{}", k + 1), r.nu_minus(*pair))?;
    }
    if let Some(s) = &r.steady {
        d.set_item("q_s", s.q_s)?;
        d.set_item("abs_a1", s.abs_a1)?;
        d.set_item("abs_a2", s.abs_a2)?;
        d.set_item("Delta2_eff_over_omega_m", s.delta2_eff / r.mech_freq)?;
        d.set_item("G_over_omega_m", s.coupling / r.mech_freq)?;
        d.set_item("multivalued", s.multivalued)?;
    }
    if let Some(v) = &r.validity {
        d.set_item("excitation_prob", v.excitation_prob)?;
        d.set_item("low_excitation_ok", v.low_excitation_ok)?;
        d.set_item("strong_drive_ok", v.strong_drive_ok)?;
    }
    Ok(d)
}

/// Baseline defaults as a dict of SI values (detuning under `delta`).
#[pyfunction]
fn baseline(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let p = PhysicalParams::baseline();
    let d = PyDict::new(py);
    d.set_item("cavity_length", p.cavity_length)?;
    d.set_item("cavity_decay", p.cavity_decay)?;
    d.set_item("wavelength", p.wavelength)?;
    d.set_item("drive_power", p.drive_power)?;
    d.set_item("mech_freq", p.mech_freq)?;
    d.set_item("mech_mass", p.mech_mass)?;
    d.set_item("mech_damping", p.mech_damping)?;
    d.set_item("atom_decay", p.atom_decay)?;
    d.set_item("atom_coupling", p.atom_coupling)?;
    d.set_item("cavity_coupling", p.cavity_coupling)?;
    d.set_item("atom_detuning", p.atom_detuning)?;
    d.set_item("temperature", p.temperature)?;
    d.set_item("atom_number", p.atom_number)?;
    d.set_item("delta", p.detuning.delta1().abs())?;
    Ok(d)
}

/// Evaluate one point; unstable points return `EN*` as `None`.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn evaluate_point<'py>(py: Python<'py>, kwargs: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyDict>> {
    let p = params_from(kwargs)?;
    let r = py.detach(|| evaluate(&p));
    point_dict(py, &r)
}

/// Solve `A V + V Aᵀ = −D` for an 8×8 stable `A`.
#[pyfunction]
fn solve_lyapunov(a: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let a = matrix::<8>(a)?;
    let d = matrix::<8>(d)?;
    match solve(&a, &d) {
        Ok(v) => Ok(rows(&v.v)),
        Err(optoent_core::lyapunov::LyapunovError::Stability(e)) => Err(UnstableError::new_err(e.to_string())),
        Err(e) => Err(value_err(e)),
    }
}

/// Log-negativity of a 4×4 two-mode covariance matrix.
#[pyfunction]
fn logarithmic_negativity<'py>(py: Python<'py>, vs: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let vs = matrix::<4>(vs)?;
    report_dict(py, &log_neg(&vs).map_err(value_err)?)
}

#[pyfunction]
#[pyo3(signature = (pair = "mirror-atoms", t_max = DEFAULT_TCRIT_MAX, tolerance = DEFAULT_TCRIT_TOLERANCE, **kwargs))]
fn critical_temperature<'py>(
    py: Python<'py>,
    pair: &str,
    t_max: f64,
    tolerance: f64,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params_from(kwargs)?;
    let pair = pair_from(pair)?;
    let r = py.detach(|| find_critical_temperature(&p, pair, t_max, tolerance)).map_err(|e| match e {
        TcritError::NoCrossing { .. } => NoCrossingError::new_err(e.to_string()),
        TcritError::Unstable { .. } => UnstableError::new_err(e.to_string()),
        TcritError::Pipeline(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_err(e),
    })?;
    let d = PyDict::new(py);
    d.set_item("critical_temperature", r.critical_temperature)?;
    d.set_item("bracket", r.bracket)?;
    d.set_item("monotone", r.monotone)?;
    d.set_item("tolerance", r.tolerance)?;
    Ok(d)
}

/// Run a sweep and return the CSV text.
#[pyfunction]
#[pyo3(signature = (axis, start, stop, points = 201, overlay_axis = None, overlays = Vec::new(), **kwargs))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    axis: &str,
    start: f64,
    stop: f64,
    points: usize,
    overlay_axis: Option<&str>,
    overlays: Vec<f64>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<String> {
    let axis: SweepAxis = axis.parse().map_err(value_err)?;
    let overlay_axis = overlay_axis.map(|a| a.parse::<SweepAxis>()).transpose().map_err(value_err)?;
    let spec = SweepSpec { axis, start, stop, points, overlay_axis, overlays, base: params_from(kwargs)? };
    let rows = py.detach(|| run_sweep(&spec)).map_err(value_err)?;
    Ok(csv_string(&spec, &rows))
}

#[pymodule]
fn optoent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("UnstableError", m.py().get_type::<UnstableError>())?;
    m.add("NoCrossingError", m.py().get_type::<NoCrossingError>())?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_point, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(logarithmic_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(critical_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
