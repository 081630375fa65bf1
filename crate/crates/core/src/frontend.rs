//! Capacitive sensor front end: the electret capsule as a charged capacitor,
//! its bias element (gate resistor or photocurrent), the preamplifier input
//! capacitance and the resulting gate-node noise.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mna::{Network, GROUND};
use crate::noise::{
    shot_current_density, thermal_voltage_density, DensityUnit, Frequency, NoiseSource, Spectrum, DEFAULT_TEMPERATURE,
};

/// Largest |c_tilde|/C_m accepted by the linearised source model.
pub const SMALL_SIGNAL_LIMIT: f64 = 0.01;

/// JFET white input noise used when none is configured, V/√Hz.
pub const DEFAULT_JFET_NOISE: f64 = 2e-9;

/// Capsule model: quiescent capacitance, electret voltage and capacitance modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcmModel {
    pub c_m: f64,
    pub e_el: f64,
    pub c_tilde: f64,
}

impl EcmModel {
    pub fn new(c_m: f64, e_el: f64) -> Result<Self> {
        if !(c_m > 0.0) || !c_m.is_finite() {
            return Err(Error::Domain(format!("C_m must be > 0 F, got {c_m:e}")));
        }
        if !e_el.is_finite() {
            return Err(Error::Domain("electret voltage must be finite".into()));
        }
        Ok(EcmModel { c_m, e_el, c_tilde: 0.0 })
    }

    pub fn with_modulation(mut self, c_tilde: f64) -> Self {
        self.c_tilde = c_tilde;
        self
    }

    /// Stored charge Q_0 = C_m·E_el.
    pub fn q0(&self) -> f64 {
        self.c_m * self.e_el
    }
}

/// Small-signal source voltage −(Q_0/C_m²)·c_tilde of a constant-charge capsule.
pub fn equivalent_source_voltage(ecm: &EcmModel) -> Result<f64> {
    if ecm.c_tilde.abs() > SMALL_SIGNAL_LIMIT * ecm.c_m {
        return Err(Error::SmallSignal { c_tilde: ecm.c_tilde, c_m: ecm.c_m });
    }
    Ok(-(ecm.q0() / (ecm.c_m * ecm.c_m)) * ecm.c_tilde)
}

fn check_rc(r: f64, c: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("R must be > 0 Ω, got {r:e}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("C must be > 0 F, got {c:e}")));
    }
    Ok(())
}

/// 1/(1 + j·2πfRC)
pub fn rc_lowpass(f: Frequency, r: f64, c: f64) -> Result<Complex64> {
    check_rc(r, c)?;
    Ok(Complex64::new(1.0, f.omega() * r * c).inv())
}

/// 1/(2πRC)
pub fn cutoff_frequency(r: f64, c: f64) -> Result<Frequency> {
    check_rc(r, c)?;
    Frequency::new(1.0 / (2.0 * PI * r * c))
}

/// Smallest bias resistance keeping the RC cutoff at or below `f_max`.
pub fn min_resistance_for_cutoff(f_max: Frequency, c: f64) -> Result<f64> {
    check_rc(1.0, c)?;
    Ok(1.0 / (2.0 * PI * f_max.hz() * c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasElement {
    Resistor { resistance: f64 },
    Photocurrent { current: f64 },
}

impl BiasElement {
    fn validate(&self) -> Result<()> {
        match *self {
            BiasElement::Resistor { resistance } if !(resistance > 0.0) || !resistance.is_finite() => {
                Err(Error::Domain(format!("bias resistance must be > 0 Ω, got {resistance:e}")))
            }
            BiasElement::Photocurrent { current } if !(current >= 0.0) || !current.is_finite() => {
                Err(Error::Domain(format!("bias photocurrent must be >= 0 A, got {current:e}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputCapMode {
    /// Common-source stage with voltage gain `gain`; C_gd is Miller-multiplied.
    SingleStage {
        gain: f64,
    },
    Cascode,
    /// Drain held fixed, source at constant current: only C_gd remains.
    ConstantCurrentCascode,
    /// Gate, source and drain move together: nothing remains.
    IdealBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputCapModel {
    pub mode: InputCapMode,
    pub c_gs: f64,
    pub c_gd: f64,
}

impl InputCapModel {
    pub fn new(mode: InputCapMode, c_gs: f64, c_gd: f64) -> Result<Self> {
        let m = InputCapModel { mode, c_gs, c_gd };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_gs >= 0.0 && self.c_gd >= 0.0) || !(self.c_gs + self.c_gd).is_finite() {
            return Err(Error::Domain("C_gs and C_gd must be finite and >= 0".into()));
        }
        if let InputCapMode::SingleStage { gain } = self.mode {
            if !(gain > 0.0) || !gain.is_finite() {
                return Err(Error::Domain(format!("single-stage gain must be > 0, got {gain}")));
            }
        }
        Ok(())
    }
}

/// Input capacitance seen at the gate for the configured stage topology.
pub fn effective_input_capacitance(m: &InputCapModel) -> f64 {
    match m.mode {
        InputCapMode::SingleStage { gain } => m.c_gs + (1.0 + gain) * m.c_gd,
        InputCapMode::Cascode => m.c_gs + m.c_gd,
        InputCapMode::ConstantCurrentCascode => m.c_gd,
        InputCapMode::IdealBootstrap => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividerRatio {
    pub ratio: f64,
    pub db: f64,
}

/// Capacitive divider C_m/(C_m + C_in) between capsule and amplifier input.
pub fn divider_ratio(c_m: f64, c_in: f64) -> Result<DividerRatio> {
    if !(c_m > 0.0) || !c_m.is_finite() {
        return Err(Error::Domain(format!("C_m must be > 0 F, got {c_m:e}")));
    }
    if !(c_in >= 0.0) || !c_in.is_finite() {
        return Err(Error::Domain(format!("C_in must be >= 0 F, got {c_in:e}")));
    }
    let ratio = c_m / (c_m + c_in);
    Ok(DividerRatio { ratio, db: 20.0 * ratio.log10() })
}

/// JFET input voltage noise: white floor plus optional flicker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JfetNoise {
    pub white: f64,
    pub flicker: Option<NoiseSource>,
}

impl JfetNoise {
    pub fn white(density: f64) -> Result<Self> {
        NoiseSource::flat_voltage(density)?;
        Ok(JfetNoise { white: density, flicker: None })
    }

    pub fn zero() -> Self {
        JfetNoise { white: 0.0, flicker: None }
    }

    pub fn with_flicker(mut self, density: f64, pivot: f64, exponent: f64) -> Result<Self> {
        self.flicker = Some(NoiseSource::flicker_voltage(density, pivot, exponent)?);
        Ok(self)
    }

    pub fn density(&self, f: Frequency) -> f64 {
        match self.flicker {
            Some(fl) => self.white.hypot(fl.density(f)),
            None => self.white,
        }
    }
}

impl Default for JfetNoise {
    fn default() -> Self {
        JfetNoise { white: DEFAULT_JFET_NOISE, flicker: None }
    }
}

/// Complete sensor + preamplifier description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndConfig {
    pub ecm: EcmModel,
    pub bias: BiasElement,
    pub input_cap: InputCapModel,
    pub jfet_noise: JfetNoise,
    /// JFET gate leakage current, A.
    pub gate_leak: f64,
    pub temperature: f64,
}

impl FrontEndConfig {
    /// Resistor-biased capsule on an ideally bootstrapped JFET with default noise.
    pub fn resistor_biased(c_m: f64, resistance: f64) -> Result<Self> {
        Self::with_bias(c_m, BiasElement::Resistor { resistance })
    }

    /// Photocurrent-biased capsule on an ideally bootstrapped JFET with default noise.
    pub fn photocurrent_biased(c_m: f64, current: f64) -> Result<Self> {
        Self::with_bias(c_m, BiasElement::Photocurrent { current })
    }

    fn with_bias(c_m: f64, bias: BiasElement) -> Result<Self> {
        let cfg = FrontEndConfig {
            ecm: EcmModel::new(c_m, 1.0)?,
            bias,
            input_cap: InputCapModel { mode: InputCapMode::IdealBootstrap, c_gs: 11.8e-12, c_gd: 1.2e-12 },
            jfet_noise: JfetNoise::default(),
            gate_leak: 0.0,
            temperature: DEFAULT_TEMPERATURE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        EcmModel::new(self.ecm.c_m, self.ecm.e_el)?;
        self.bias.validate()?;
        self.input_cap.validate()?;
        NoiseSource::flat_voltage(self.jfet_noise.white)?;
        if !(self.gate_leak >= 0.0) || !self.gate_leak.is_finite() {
            return Err(Error::Domain(format!("gate leakage must be >= 0 A, got {:e}", self.gate_leak)));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Domain(format!("temperature must be > 0 K, got {}", self.temperature)));
        }
        Ok(())
    }

    /// C_m plus the effective amplifier input capacitance.
    pub fn gate_capacitance(&self) -> f64 {
        self.ecm.c_m + effective_input_capacitance(&self.input_cap)
    }

    pub fn divider(&self) -> DividerRatio {
        divider_ratio(self.ecm.c_m, effective_input_capacitance(&self.input_cap)).expect("validated config")
    }

    /// Noise current density driving the gate node in the photocurrent case.
    pub fn bias_current_noise(&self) -> Result<f64> {
        match self.bias {
            BiasElement::Photocurrent { current } => {
                Ok(shot_current_density(current)?.hypot(shot_current_density(self.gate_leak)?))
            }
            BiasElement::Resistor { .. } => Err(Error::Domain("resistor bias has no current-noise term".into())),
        }
    }

    /// Gate noise from the bias network only (no JFET term).
    fn bias_noise_at(&self, f: Frequency) -> Result<f64> {
        let c_total = self.gate_capacitance();
        match self.bias {
            BiasElement::Resistor { resistance } => {
                let e_n = thermal_voltage_density(resistance, self.temperature)?;
                Ok(e_n * rc_lowpass(f, resistance, c_total)?.norm())
            }
            BiasElement::Photocurrent { .. } => Ok(self.bias_current_noise()? / (f.omega() * c_total)),
        }
    }

    /// Builds the bias network as an MNA circuit with the gate as output.
    /// The JFET voltage noise is not part of it.
    pub fn bias_network(&self) -> Result<Network> {
        self.validate()?;
        let mut net = Network::new();
        let gate = net.node("gate");
        net.add_capacitor("c_gate", gate, GROUND, self.gate_capacitance())?;
        match self.bias {
            BiasElement::Resistor { resistance } => {
                net.add_resistor("r_bias", gate, GROUND, resistance)?;
                net.attach_noise("r_bias", NoiseSource::thermal_current(resistance, self.temperature)?)?;
            }
            BiasElement::Photocurrent { current } => {
                net.add_current_port("i_bias", gate, GROUND)?;
                net.attach_noise("i_bias", NoiseSource::shot(current)?)?;
                net.add_current_port("i_leak", gate, GROUND)?;
                net.attach_noise("i_leak", NoiseSource::shot(self.gate_leak)?)?;
            }
        }
        net.set_output(gate, GROUND)?;
        Ok(net)
    }
}

/// Voltage noise density at the JFET gate.
///
/// Resistor bias gives the first-order low-pass thermal shape, photocurrent bias
/// converts the shot current of bias and gate leakage through the gate capacitance.
/// The JFET input noise is added in power in both cases.
pub fn gate_noise_spectrum(cfg: &FrontEndConfig, grid: &[f64]) -> Result<Spectrum> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::Shape("empty frequency grid".into()));
    }
    let values = grid
        .iter()
        .map(|&hz| {
            let f = Frequency::new(hz)?;
            Ok(cfg.bias_noise_at(f)?.hypot(cfg.jfet_noise.density(f)))
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(grid.to_vec(), values, DensityUnit::VoltsPerRootHz)
}

/// Gate noise referred back to the capsule source through the capacitive divider.
pub fn input_referred_spectrum(cfg: &FrontEndConfig, grid: &[f64]) -> Result<Spectrum> {
    let gate = gate_noise_spectrum(cfg, grid)?;
    gate.scaled(1.0 / cfg.divider().ratio)
}
