//! Built-in reference checks.
//!
//! Each check recomputes a reference design number through the library and
//! compares it with the expected value. Physical constants are an input so a
//! deliberately wrong constant can be shown to break the checks.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::Result;
use crate::frontend::{divider_ratio, effective_input_capacitance, FrontEndConfig, InputCapMode, InputCapModel};
use crate::noise::{integrate_power, log_grid, AnalyticTail, DensityUnit, Frequency, PhysicalConstants, Spectrum};
use crate::servo::{design_lag_lead, stability_grid, verify_stability, PureIntegrator, ServoPlant};
use crate::weighting::{a_weight_db, to_dba_spl, Calibration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Relative(f64),
    Absolute(f64),
    /// Computed value rounds to `expected` at this many significant digits.
    SignificantDigits(u32),
    /// Computed value must not exceed `expected`.
    AtMost,
}

impl Tolerance {
    fn accepts(self, expected: f64, computed: f64) -> bool {
        match self {
            Tolerance::Relative(r) => ((computed - expected) / expected).abs() <= r,
            Tolerance::Absolute(a) => (computed - expected).abs() <= a,
            Tolerance::SignificantDigits(n) => {
                let round = |x: f64| format!("{:.*e}", n.saturating_sub(1) as usize, x);
                round(computed) == round(expected)
            }
            Tolerance::AtMost => computed <= expected,
        }
    }
}

impl std::fmt::Display for Tolerance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tolerance::Relative(r) => write!(f, "rel {r:.0e}"),
            Tolerance::Absolute(a) if *a >= 1e-3 => write!(f, "abs {a}"),
            Tolerance::Absolute(a) => write!(f, "abs {a:e}"),
            Tolerance::SignificantDigits(n) => write!(f, "{n} sig. digits"),
            Tolerance::AtMost => f.write_str("at most"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub unit: &'static str,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: Tolerance,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.computed.is_finite() && self.tolerance.accepts(self.expected, self.computed)
    }
}

fn check(name: impl Into<String>, unit: &'static str, expected: f64, computed: f64, tolerance: Tolerance) -> Check {
    Check { name: name.into(), unit, expected, computed, tolerance }
}

/// Integrated gate noise of a resistor-biased 12 pF node, V².
///
/// Goes through the MNA solver so the constants reach every term.
fn integrated_gate_noise(k: &PhysicalConstants, r: f64, c: f64, t: f64) -> Result<f64> {
    let mut cfg = FrontEndConfig::resistor_biased(c, r)?;
    cfg.temperature = t;
    let net = cfg.bias_network()?;
    let grid = log_grid(1e-4, 1e8, 64)?;
    let values = grid.iter().map(|&f| net.noise_solve_with(k, Frequency::new(f)?)).collect::<Result<Vec<_>>>()?;
    let s = Spectrum::new(grid, values, DensityUnit::VoltsPerRootHz)?;
    integrate_power(&s, Some(AnalyticTail::FirstOrderLowPass))
}

/// Runs all reference checks with the given constants.
pub fn run_checks(k: &PhysicalConstants) -> Result<Vec<Check>> {
    use Tolerance::*;
    let mut out = Vec::new();
    let (c, t) = (12e-12, 300.0);

    for r in [1e9, 10e9, 100e9] {
        let v2 = integrated_gate_noise(k, r, c, t)?;
        out.push(check(format!("kT/C, R = {:.0} GOhm", r / 1e9), "V^2", 3.452e-10, v2, Relative(1e-3)));
    }

    let fc = |r: f64| 1.0 / (2.0 * PI * r * c);
    out.push(check("RC cutoff, 1 GOhm", "Hz", 13.26, fc(1e9), SignificantDigits(4)));
    out.push(check("RC cutoff, 10 GOhm", "Hz", 1.33, fc(10e9), SignificantDigits(3)));
    out.push(check("R for 20 Hz cutoff", "GOhm", 0.663, 1.0 / (2.0 * PI * 20.0 * c) / 1e9, SignificantDigits(3)));

    out.push(check(
        "thermal current, 1 GOhm",
        "fA/rtHz",
        4.1,
        k.thermal_current_density(1e9, t)? * 1e15,
        SignificantDigits(2),
    ));
    out.push(check(
        "thermal current, 10 GOhm",
        "fA/rtHz",
        1.3,
        k.thermal_current_density(10e9, t)? * 1e15,
        SignificantDigits(2),
    ));
    out.push(check("shot noise, 1 pA", "fA/rtHz", 0.57, k.shot_current_density(1e-12)? * 1e15, SignificantDigits(2)));
    out.push(check(
        "5 pA/rtHz into 12 pF at 1 kHz",
        "uV/rtHz",
        66.0,
        5e-12 / (2.0 * PI * 1e3 * c) * 1e6,
        SignificantDigits(2),
    ));

    let (c_gs, c_gd) = (11.8e-12, 1.2e-12);
    let modes = [
        ("single stage, A_v = 10", InputCapMode::SingleStage { gain: 10.0 }, 25.0, Some((0.32, -9.8))),
        ("cascode", InputCapMode::Cascode, 13.0, Some((0.48, -6.4))),
        ("constant-current cascode", InputCapMode::ConstantCurrentCascode, 1.2, Some((0.91, -0.8))),
        ("ideal bootstrap", InputCapMode::IdealBootstrap, 0.0, None),
    ];
    for (name, mode, pf, div) in modes {
        let c_in = effective_input_capacitance(&InputCapModel::new(mode, c_gs, c_gd)?);
        out.push(check(format!("C_in, {name}"), "pF", pf, c_in * 1e12, Absolute(0.05)));
        if let Some((ratio, db)) = div {
            let d = divider_ratio(c, c_in)?;
            out.push(check(format!("divider, {name}"), "", ratio, d.ratio, Absolute(0.01)));
            out.push(check(format!("divider, {name}"), "dB", db, d.db, Absolute(0.05)));
        }
    }

    let plant = ServoPlant::new(1e-9, 12e-12, 1.0)?;
    for hpf in [10.0, 20.0] {
        let comp = design_lag_lead(&plant, hpf, 60.0)?;
        let rep = verify_stability(&plant, &comp, &stability_grid(hpf)?)?;
        out.push(check(format!("servo crossover, {hpf} Hz target"), "Hz", hpf, rep.crossover, Relative(0.02)));
        out.push(check(format!("servo phase margin, {hpf} Hz target"), "deg", 60.0, rep.phase_margin, Absolute(1.0)));
    }
    let rep = verify_stability(&plant, &PureIntegrator { unity_hz: 15.0 }, &stability_grid(15.0)?)?;
    out.push(check("pure integrator phase margin", "deg", 5.0, rep.phase_margin, AtMost));

    let grid = log_grid(20.0, 20e3, 64)?;
    let one = Spectrum::from_fn(&grid, DensityUnit::VoltsPerRootHz, |_| 1e-8)?;
    let two = one.combine_uncorrelated(&one)?;
    let ratio = two.values()[0] / one.values()[0];
    out.push(check("two equal uncorrelated sources", "dB", 3.01, 20.0 * ratio.log10(), Absolute(0.005)));

    let cal = Calibration::from_calibrator_reading(10e-3)?;
    out.push(check(
        "calibrator reading",
        "dB SPL",
        94.0,
        to_dba_spl(10e-3, &cal)?.db().unwrap_or(f64::NAN),
        Absolute(1e-9),
    ));

    out.push(check("A-weight, 1 kHz", "dB", 0.0, a_weight_db(1e3), Absolute(0.01)));
    out.push(check("A-weight, 100 Hz", "dB", -19.1, a_weight_db(100.0), Absolute(0.1)));
    out.push(check("A-weight, 10 kHz", "dB", -2.5, a_weight_db(10e3), Absolute(0.1)));
    Ok(out)
}

/// Fixed-width table of all checks followed by a pass count.
pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>14}  {:>14}  {:<14}  {:<8}  result",
        "check", "expected", "computed", "tolerance", "unit"
    );
    for c in checks {
        let _ = writeln!(
            out,
            "{:<width$}  {:>14.6e}  {:>14.6e}  {:<14}  {:<8}  {}",
            c.name,
            c.expected,
            c.computed,
            c.tolerance.to_string(),
            c.unit,
            if c.passed() { "pass" } else { "FAIL" }
        );
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let _ = writeln!(out, "{passed}/{} checks passed", checks.len());
    out
}
