//! Python bindings for squeezekit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::squeezekit as sk;
use sk::coupled_equivalence::{format_report, src_arm_feasibility, two_to_coupled_params};
use sk::epr_scheme::{sensitivity_curve, solve_epr_params, SchemeKind};
use sk::filter_synthesis::{synthesize_filters as synth, FilterCavity};
use sk::ifo_model::IfoModel;
use sk::metrics_cli::table::noise_table;
use sk::metrics_cli::{build_scheme, design_filters, horizon_reach, HorizonSettings};

type Columns = BTreeMap<String, Vec<f64>>;
/// (gamma_hz, detuning_hz, length_m) per cavity and the injection angle.
type FilterTable = (Vec<(f64, f64, f64)>, f64);

fn to_py(e: sk::Error) -> PyErr {
    match e {
        sk::Error::Config(_) | sk::Error::Io(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Interferometer, squeezer and loss parameters (ET-LF by default).
#[pyclass(name = "IfoConfig", from_py_object)]
#[derive(Clone)]
struct PyIfoConfig {
    inner: sk::IfoConfig,
}

#[pymethods]
impl PyIfoConfig {
    #[new]
    fn new() -> Self {
        Self { inner: sk::IfoConfig::et_lf() }
    }

    /// Parse `key = value` text; unknown keys raise ValueError.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: sk::IfoConfig::parse(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: sk::IfoConfig::load(path.as_ref()).map_err(to_py)? })
    }

    fn get(&self, key: &str) -> PyResult<f64> {
        self.inner.get(key).ok_or_else(|| PyValueError::new_err(format!("unknown key '{key}'")))
    }

    fn set(&mut self, key: &str, value: f64) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    /// Copy with squeezing level given in dB.
    fn with_db(&self, db: f64) -> Self {
        Self { inner: sk::IfoConfig { r: sk::two_photon_core::db_to_r(db), ..self.inner.clone() } }
    }

    fn lossless(&self) -> Self {
        Self { inner: self.inner.lossless() }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("IfoConfig(L_SRC={}, L_arm={}, r={})", self.inner.l_src, self.inner.l_arm, self.inner.r)
    }
}

fn grid(fmin: f64, fmax: f64, points: usize) -> PyResult<Vec<f64>> {
    if !(fmin > 0.0 && fmax > fmin) || points < 2 {
        return Err(PyValueError::new_err("invalid frequency grid"));
    }
    Ok(sk::log_grid(fmin, fmax, points))
}

fn scheme_kind(name: &str) -> PyResult<SchemeKind> {
    name.parse().map_err(to_py)
}

/// Filter cavities as (gamma_hz, detuning_hz, length_m) plus the injection angle.
#[pyfunction]
#[pyo3(signature = (cfg, degree=2, fmin=1.0, fmax=100.0, points=200, exact=false))]
fn synthesize_filters(
    cfg: &PyIfoConfig,
    degree: usize,
    fmin: f64,
    fmax: f64,
    points: usize,
    exact: bool,
) -> PyResult<FilterTable> {
    let model = if exact { IfoModel::Exact } else { IfoModel::SingleMode };
    let (_, sol) = synth(&cfg.inner, &grid(fmin, fmax, points)?, degree, model).map_err(to_py)?;
    let cav = sol.cavities.iter().map(|c| (c.gamma / (2.0 * PI), c.detuning / (2.0 * PI), c.length)).collect();
    Ok((cav, sol.injection_angle))
}

/// Coupled-cavity parameters equivalent to two filter cavities (Hz).
#[pyfunction]
#[pyo3(signature = (gamma1_hz, detuning1_hz, gamma2_hz, detuning2_hz, length=1000.0))]
fn coupled_map(gamma1_hz: f64, detuning1_hz: f64, gamma2_hz: f64, detuning2_hz: f64, length: f64) -> Columns {
    let c = |g: f64, d: f64| FilterCavity { gamma: 2.0 * PI * g, detuning: 2.0 * PI * d, length };
    let (s, ws) = two_to_coupled_params(&c(gamma1_hz, detuning1_hz), &c(gamma2_hz, detuning2_hz));
    let hz = |x: f64| vec![x / (2.0 * PI)];
    BTreeMap::from([
        ("detuning1_hz".into(), hz(s.detuning1)),
        ("detuning2_hz".into(), hz(s.detuning2)),
        ("gamma1_hz".into(), hz(s.gamma1())),
        ("splitting_hz".into(), hz(ws)),
        ("t1".into(), vec![s.t1]),
        ("t2".into(), vec![s.t2]),
    ])
}

/// Human-readable SRC-arm feasibility report.
#[pyfunction]
fn src_arm_report(cfg: &PyIfoConfig) -> PyResult<(bool, String)> {
    let target = design_filters(&cfg.inner, 2).map_err(to_py)?;
    let rep = src_arm_feasibility(&cfg.inner, &target, &sk::default_grid()).map_err(to_py)?;
    Ok((rep.feasible, format_report(&rep)))
}

/// EPR solutions as dictionaries (Hz, m, rad).
#[pyfunction]
#[pyo3(signature = (cfg, max_lsrc=200.0))]
fn epr_solve(cfg: &PyIfoConfig, max_lsrc: f64) -> PyResult<Vec<BTreeMap<String, f64>>> {
    let target = design_filters(&cfg.inner, 2).map_err(to_py)?;
    let sols = solve_epr_params(&cfg.inner, &target, max_lsrc).map_err(to_py)?;
    Ok(sols
        .iter()
        .map(|p| {
            BTreeMap::from([
                ("delta_hz".into(), p.delta / (2.0 * PI)),
                ("half_fsr".into(), p.half_fsr as f64),
                ("anti_resonant".into(), if p.is_anti_resonant() { 1.0 } else { 0.0 }),
                ("l_src".into(), p.l_src),
                ("l_arm".into(), p.l_arm),
                ("filter_residual".into(), p.filter_residual),
                ("arm_residual".into(), p.arm_residual),
            ])
        })
        .collect())
}

fn curve(cfg: &PyIfoConfig, scheme: &str, g: &[f64]) -> PyResult<sk::epr_scheme::NoiseCurve> {
    let (c, s) = build_scheme(&cfg.inner, scheme_kind(scheme)?, sk::epr_scheme::DEFAULT_MAX_LSRC).map_err(to_py)?;
    sensitivity_curve(&c, &s, g).map_err(to_py)
}

/// Noise budget columns (strain ASD) keyed by CSV column name.
#[pyfunction]
#[pyo3(signature = (cfg, scheme="epr", fmin=1.0, fmax=100.0, points=200))]
fn sensitivity(cfg: &PyIfoConfig, scheme: &str, fmin: f64, fmax: f64, points: usize) -> PyResult<Columns> {
    let t = noise_table(&curve(cfg, scheme, &grid(fmin, fmax, points)?)?, true);
    Ok(t.columns.iter().map(|c| (c.clone(), t.column(c).unwrap())).collect())
}

/// Horizon redshift and luminosity distance [Mpc] for each total mass.
#[pyfunction]
#[pyo3(signature = (cfg, masses, scheme="epr"))]
fn horizon(cfg: &PyIfoConfig, masses: Vec<f64>, scheme: &str) -> PyResult<Columns> {
    let c = curve(cfg, scheme, &sk::default_grid())?;
    let h = horizon_reach(&c, &masses, &HorizonSettings::default(), scheme).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("mass_msun".into(), masses),
        ("redshift".into(), h.redshift),
        ("distance_mpc".into(), h.distance_mpc),
    ]))
}

#[pymodule]
fn squeezekit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIfoConfig>()?;
    m.add_function(wrap_pyfunction!(synthesize_filters, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_map, m)?)?;
    m.add_function(wrap_pyfunction!(src_arm_report, m)?)?;
    m.add_function(wrap_pyfunction!(epr_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(horizon, m)?)?;
    Ok(())
}
