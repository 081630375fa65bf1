//! Python bindings: `import pycapnoise`.

use std::path::PathBuf;

use capnoise::noise::log_grid as core_log_grid;
use capnoise::servo::{design_for_cutoff, stability_grid, verify_stability, DesignTargets};
use capnoise::weighting::self_noise_report_with_grid;
use capnoise::{BiasElement, Calibration, Error, FrontEndConfig, InputCapMode, InputCapModel, JfetNoise, ServoPlant};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Thermal voltage noise density of a resistor, V/√Hz.
#[pyfunction]
#[pyo3(signature = (resistance, temperature = 300.0))]
fn thermal_voltage_density(resistance: f64, temperature: f64) -> PyResult<f64> {
    capnoise::thermal_voltage_density(resistance, temperature).map_err(py_err)
}

/// Thermal current noise density of a resistor, A/√Hz.
#[pyfunction]
#[pyo3(signature = (resistance, temperature = 300.0))]
fn thermal_current_density(resistance: f64, temperature: f64) -> PyResult<f64> {
    capnoise::thermal_current_density(resistance, temperature).map_err(py_err)
}

/// Shot noise density of a DC current, A/√Hz.
#[pyfunction]
fn shot_current_density(current: f64) -> PyResult<f64> {
    capnoise::shot_current_density(current).map_err(py_err)
}

#[pyfunction]
fn cutoff_frequency(resistance: f64, capacitance: f64) -> PyResult<f64> {
    capnoise::cutoff_frequency(resistance, capacitance).map(|f| f.hz()).map_err(py_err)
}

/// Log-spaced grid with exact endpoints.
#[pyfunction]
#[pyo3(signature = (start, stop, points_per_decade = 64))]
fn log_grid(start: f64, stop: f64, points_per_decade: usize) -> PyResult<Vec<f64>> {
    core_log_grid(start, stop, points_per_decade).map_err(py_err)
}

#[pyfunction]
fn a_weight(freq: f64) -> f64 {
    capnoise::a_weight(freq)
}

#[pyfunction]
fn a_weight_db(freq: f64) -> f64 {
    capnoise::weighting::a_weight_db(freq)
}

/// Equivalent SPL in dB of an rms voltage; `None` for zero input.
#[pyfunction]
fn to_dba_spl(rms: f64, sensitivity: f64) -> PyResult<Option<f64>> {
    let cal = Calibration::new(sensitivity).map_err(py_err)?;
    Ok(capnoise::to_dba_spl(rms, &cal).map_err(py_err)?.db())
}

/// Divider ratio C_m/(C_m + C_in) and its value in dB.
#[pyfunction]
fn divider_ratio(c_m: f64, c_in: f64) -> PyResult<(f64, f64)> {
    let d = capnoise::divider_ratio(c_m, c_in).map_err(py_err)?;
    Ok((d.ratio, d.db))
}

fn input_cap_mode(mode: &str, gain: Option<f64>) -> PyResult<InputCapMode> {
    Ok(match mode {
        "ideal-bootstrap" => InputCapMode::IdealBootstrap,
        "cascode" => InputCapMode::Cascode,
        "constant-current-cascode" => InputCapMode::ConstantCurrentCascode,
        "single-stage" => {
            InputCapMode::SingleStage { gain: gain.ok_or_else(|| PyValueError::new_err("single-stage needs gain"))? }
        }
        other => return Err(PyValueError::new_err(format!("unknown input_cap mode `{other}`"))),
    })
}

/// Effective amplifier input capacitance, F.
#[pyfunction]
#[pyo3(signature = (mode, c_gs = 11.8e-12, c_gd = 1.2e-12, gain = None))]
fn effective_input_capacitance(mode: &str, c_gs: f64, c_gd: f64, gain: Option<f64>) -> PyResult<f64> {
    let m = InputCapModel::new(input_cap_mode(mode, gain)?, c_gs, c_gd).map_err(py_err)?;
    Ok(capnoise::effective_input_capacitance(&m))
}

/// Capsule, bias element and JFET front end.
#[pyclass(name = "FrontEnd", module = "pycapnoise")]
struct PyFrontEnd {
    inner: FrontEndConfig,
}

#[pymethods]
impl PyFrontEnd {
    /// Resistor-biased front end on an ideally bootstrapped JFET.
    #[staticmethod]
    #[pyo3(signature = (c_m, resistance, jfet_noise = 2e-9, temperature = 300.0))]
    fn resistor(c_m: f64, resistance: f64, jfet_noise: f64, temperature: f64) -> PyResult<Self> {
        let mut cfg = FrontEndConfig::resistor_biased(c_m, resistance).map_err(py_err)?;
        Self::finish(&mut cfg, jfet_noise, temperature)?;
        Ok(PyFrontEnd { inner: cfg })
    }

    /// Photocurrent-biased front end on an ideally bootstrapped JFET.
    #[staticmethod]
    #[pyo3(signature = (c_m, current, jfet_noise = 2e-9, temperature = 300.0, gate_leak = 0.0))]
    fn photocurrent(c_m: f64, current: f64, jfet_noise: f64, temperature: f64, gate_leak: f64) -> PyResult<Self> {
        let mut cfg = FrontEndConfig::photocurrent_biased(c_m, current).map_err(py_err)?;
        cfg.gate_leak = gate_leak;
        Self::finish(&mut cfg, jfet_noise, temperature)?;
        Ok(PyFrontEnd { inner: cfg })
    }

    /// Replaces the amplifier input stage.
    #[pyo3(signature = (mode, c_gs = 11.8e-12, c_gd = 1.2e-12, gain = None))]
    fn with_input_cap(&self, mode: &str, c_gs: f64, c_gd: f64, gain: Option<f64>) -> PyResult<Self> {
        let mut cfg = self.inner;
        cfg.input_cap = InputCapModel::new(input_cap_mode(mode, gain)?, c_gs, c_gd).map_err(py_err)?;
        cfg.validate().map_err(py_err)?;
        Ok(PyFrontEnd { inner: cfg })
    }

    #[getter]
    fn gate_capacitance(&self) -> f64 {
        self.inner.gate_capacitance()
    }

    #[getter]
    fn divider(&self) -> (f64, f64) {
        let d = self.inner.divider();
        (d.ratio, d.db)
    }

    #[getter]
    fn bias_cutoff(&self) -> PyResult<Option<f64>> {
        match self.inner.bias {
            BiasElement::Resistor { resistance } => {
                capnoise::cutoff_frequency(resistance, self.inner.gate_capacitance())
                    .map(|f| Some(f.hz()))
                    .map_err(py_err)
            }
            BiasElement::Photocurrent { .. } => Ok(None),
        }
    }

    /// Gate noise density (V/√Hz) at each frequency.
    fn gate_noise(&self, freqs: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(capnoise::gate_noise_spectrum(&self.inner, &freqs).map_err(py_err)?.values().to_vec())
    }

    /// Noise density at the gate with the bias network alone, solved by MNA.
    fn mna_gate_noise(&self, freqs: Vec<f64>) -> PyResult<Vec<f64>> {
        let net = self.inner.bias_network().map_err(py_err)?;
        freqs
            .iter()
            .map(|&f| net.noise_solve(capnoise::Frequency::new(f)?))
            .collect::<capnoise::Result<Vec<_>>>()
            .map_err(py_err)
    }

    /// (A-weighted rms in V, dB SPL or None) for a capsule sensitivity in V/Pa.
    #[pyo3(signature = (sensitivity, band = (20.0, 20e3), points_per_decade = 64))]
    fn self_noise(&self, sensitivity: f64, band: (f64, f64), points_per_decade: usize) -> PyResult<(f64, Option<f64>)> {
        let cal = Calibration::new(sensitivity).map_err(py_err)?;
        let r = self_noise_report_with_grid(&self.inner, &cal, band, points_per_decade).map_err(py_err)?;
        Ok((r.a_weighted_rms, r.equivalent_spl.db()))
    }

    fn __repr__(&self) -> String {
        match self.inner.bias {
            BiasElement::Resistor { resistance } => {
                format!("FrontEnd.resistor(c_m={:e}, resistance={:e})", self.inner.ecm.c_m, resistance)
            }
            BiasElement::Photocurrent { current } => {
                format!("FrontEnd.photocurrent(c_m={:e}, current={:e})", self.inner.ecm.c_m, current)
            }
        }
    }
}

impl PyFrontEnd {
    fn finish(cfg: &mut FrontEndConfig, jfet_noise: f64, temperature: f64) -> PyResult<()> {
        cfg.jfet_noise = JfetNoise::white(jfet_noise).map_err(py_err)?;
        cfg.temperature = temperature;
        cfg.validate().map_err(py_err)
    }
}

/// Result of a servo design and its verification.
#[pyclass(name = "ServoDesign", module = "pycapnoise", get_all, frozen)]
struct PyServoDesign {
    gain: f64,
    f_zero: f64,
    f_pole: f64,
    crossover: f64,
    phase_margin: f64,
    hpf_cutoff: Option<f64>,
    stable: bool,
}

#[pymethods]
impl PyServoDesign {
    fn __repr__(&self) -> String {
        format!(
            "ServoDesign(crossover={:.4}, phase_margin={:.2}, hpf_cutoff={:?}, stable={})",
            self.crossover, self.phase_margin, self.hpf_cutoff, self.stable
        )
    }
}

/// Designs a lag-lead servo and checks it.
///
/// With `place_cutoff` the closed-loop corner lands on `target_hz`;
/// otherwise the loop crossover does.
#[pyfunction]
#[pyo3(signature = (g_opto, c_node, target_hz, phase_margin = 60.0, a_pre = 1.0, place_cutoff = false))]
fn design_servo(
    g_opto: f64,
    c_node: f64,
    target_hz: f64,
    phase_margin: f64,
    a_pre: f64,
    place_cutoff: bool,
) -> PyResult<PyServoDesign> {
    let plant = ServoPlant::new(g_opto, c_node, a_pre).map_err(py_err)?;
    let c = if place_cutoff {
        design_for_cutoff(&plant, target_hz, phase_margin)
    } else {
        capnoise::servo::design_lag_lead_with(&plant, &DesignTargets::new(target_hz, phase_margin))
    }
    .map_err(py_err)?;
    let rep = verify_stability(&plant, &c, &stability_grid(target_hz).map_err(py_err)?).map_err(py_err)?;
    Ok(PyServoDesign {
        gain: c.gain,
        f_zero: c.f_zero,
        f_pole: c.f_pole,
        crossover: rep.crossover,
        phase_margin: rep.phase_margin,
        hpf_cutoff: rep.closed_loop_hpf_cutoff,
        stable: rep.stable,
    })
}

/// Runs a scenario file and returns the paths written.
#[pyfunction]
fn run_scenario(path: PathBuf, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
    let s = capnoise::parse_scenario(&path).map_err(py_err)?;
    Ok(capnoise::run_scenario(&s, &out_dir).map_err(py_err)?.files)
}

/// Runs the built-in reference checks; returns (all passed, table).
#[pyfunction]
fn selftest() -> PyResult<(bool, String)> {
    let checks = capnoise::selftest::run_checks(&capnoise::PhysicalConstants::CODATA).map_err(py_err)?;
    Ok((checks.iter().all(|c| c.passed()), capnoise::selftest::render(&checks)))
}

#[pymodule]
fn pycapnoise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(thermal_voltage_density, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_current_density, m)?)?;
    m.add_function(wrap_pyfunction!(shot_current_density, m)?)?;
    m.add_function(wrap_pyfunction!(cutoff_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(log_grid, m)?)?;
    m.add_function(wrap_pyfunction!(a_weight, m)?)?;
    m.add_function(wrap_pyfunction!(a_weight_db, m)?)?;
    m.add_function(wrap_pyfunction!(to_dba_spl, m)?)?;
    m.add_function(wrap_pyfunction!(divider_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(effective_input_capacitance, m)?)?;
    m.add_function(wrap_pyfunction!(design_servo, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_class::<PyFrontEnd>()?;
    m.add_class::<PyServoDesign>()?;
    Ok(())
}
