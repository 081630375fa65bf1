//! Photoelectric DC servo loop.
//!
//! The loop runs preamp → controller → LED/photoelement transconductance →
//! gate capacitance, which integrates the photocurrent. With a lag-lead
//! controller the loop keeps high gain at DC and a usable phase margin at
//! crossover; the closed-loop signal path is a high-pass whose corner sits
//! near the crossover frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::Frequency;

/// Phase margin used when none is requested, degrees.
pub const DEFAULT_PHASE_MARGIN: f64 = 60.0;

/// Default zero/pole frequency ratio of the lag-lead network.
pub const DEFAULT_POLE_RATIO: f64 = 20.0;

/// Anything that can sit in the controller slot of the loop.
pub trait Controller {
    fn response(&self, f: Frequency) -> Complex64;
}

/// K·(1 + jf/f_z)/(1 + jf/f_p) with f_p < f_z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagLeadCompensator {
    pub gain: f64,
    pub f_zero: f64,
    pub f_pole: f64,
}

impl LagLeadCompensator {
    pub fn new(gain: f64, f_zero: f64, f_pole: f64) -> Result<Self> {
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::Domain(format!("compensator gain must be > 0, got {gain}")));
        }
        Frequency::new(f_zero)?;
        Frequency::new(f_pole)?;
        if !(f_pole < f_zero) {
            return Err(Error::Domain(format!("lag-lead needs f_pole < f_zero, got {f_pole} Hz / {f_zero} Hz")));
        }
        Ok(LagLeadCompensator { gain, f_zero, f_pole })
    }

    /// Gain above both corners, K·f_p/f_z.
    pub fn high_frequency_gain(&self) -> f64 {
        self.gain * self.f_pole / self.f_zero
    }

    /// Frequency of largest phase lag, √(f_z·f_p).
    pub fn max_lag_frequency(&self) -> f64 {
        (self.f_zero * self.f_pole).sqrt()
    }
}

impl Controller for LagLeadCompensator {
    fn response(&self, f: Frequency) -> Complex64 {
        compensator_response(self, f)
    }
}

pub fn compensator_response(c: &LagLeadCompensator, f: Frequency) -> Complex64 {
    let f = f.hz();
    c.gain * Complex64::new(1.0, f / c.f_zero) / Complex64::new(1.0, f / c.f_pole)
}

/// ω_i/(jω): the controller that the lag-lead replaces. In series with the
/// integrating gate node it leaves no phase margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureIntegrator {
    /// Unity-gain frequency of the controller alone, Hz.
    pub unity_hz: f64,
}

impl Controller for PureIntegrator {
    fn response(&self, f: Frequency) -> Complex64 {
        Complex64::new(0.0, -self.unity_hz / f.hz())
    }
}

/// A frequency-flat controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportional(pub f64);

impl Controller for Proportional {
    fn response(&self, _f: Frequency) -> Complex64 {
        Complex64::new(self.0, 0.0)
    }
}

/// Loop plant around the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoPlant {
    /// Controller output to photocurrent, A/V (LED drive and photoelement lumped).
    pub g_opto: f64,
    /// Total gate-node capacitance, F.
    pub c_node: f64,
    /// Flat preamplifier gain.
    pub a_pre: f64,
}

impl ServoPlant {
    pub fn new(g_opto: f64, c_node: f64, a_pre: f64) -> Result<Self> {
        for (name, v) in [("g_opto", g_opto), ("C_node", c_node), ("A_pre", a_pre)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v:e}")));
            }
        }
        Ok(ServoPlant { g_opto, c_node, a_pre })
    }

    /// Everything in the loop except the controller: A_pre·g_opto/(jωC_node).
    pub fn response(&self, f: Frequency) -> Complex64 {
        Complex64::new(0.0, -self.a_pre * self.g_opto / (f.omega() * self.c_node))
    }
}

/// Loop gain L(jf) = A_pre·C(jf)·g_opto/(j2πf·C_node).
pub fn loop_gain(plant: &ServoPlant, c: &impl Controller, f: Frequency) -> Complex64 {
    plant.response(f) * c.response(f)
}

/// Sensor-to-output transfer A_pre/(1 + L) with the servo closed.
pub fn closed_loop_signal_transfer(plant: &ServoPlant, c: &impl Controller, f: Frequency) -> Complex64 {
    plant.a_pre / (1.0 + loop_gain(plant, c, f))
}

/// Design targets and the one tuning knob of the synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTargets {
    pub crossover_hz: f64,
    pub phase_margin_deg: f64,
    /// f_z/f_p ratio tried first.
    pub pole_ratio: f64,
}

impl DesignTargets {
    pub fn new(crossover_hz: f64, phase_margin_deg: f64) -> Self {
        DesignTargets { crossover_hz, phase_margin_deg, pole_ratio: DEFAULT_POLE_RATIO }
    }
}

/// Synthesises a lag-lead compensator whose loop crosses unity gain at
/// `target_hpf` with phase margin `target_pm` (degrees).
pub fn design_lag_lead(plant: &ServoPlant, target_hpf: f64, target_pm: f64) -> Result<LagLeadCompensator> {
    design_lag_lead_with(plant, &DesignTargets::new(target_hpf, target_pm))
}

pub fn design_lag_lead_with(plant: &ServoPlant, t: &DesignTargets) -> Result<LagLeadCompensator> {
    check_targets(plant, t)?;
    synthesize(plant, t)
}

/// Like [`design_lag_lead`], but places the closed-loop −3 dB corner rather
/// than the loop crossover at `target_cutoff`.
///
/// Cutoff/crossover depends only on the phase margin and pole ratio, so one
/// rescale of the crossover lands the corner on target.
pub fn design_for_cutoff(plant: &ServoPlant, target_cutoff: f64, target_pm: f64) -> Result<LagLeadCompensator> {
    design_for_cutoff_with(plant, &DesignTargets::new(target_cutoff, target_pm))
}

/// [`design_for_cutoff`] with an explicit pole ratio; `crossover_hz` is read as the cutoff.
pub fn design_for_cutoff_with(plant: &ServoPlant, t: &DesignTargets) -> Result<LagLeadCompensator> {
    let t = *t;
    let target_cutoff = t.crossover_hz;
    check_targets(plant, &t)?;
    let mut crossover = target_cutoff;
    let mut c = synthesize(plant, &t)?;
    for _ in 0..4 {
        let report = verify_stability(plant, &c, &stability_grid(crossover)?)?;
        let cutoff =
            report.closed_loop_hpf_cutoff.ok_or_else(|| Error::Design("closed loop has no -3 dB corner".into()))?;
        if (cutoff / target_cutoff - 1.0).abs() < 1e-9 {
            break;
        }
        crossover *= target_cutoff / cutoff;
        c = synthesize(plant, &DesignTargets { crossover_hz: crossover, ..t })?;
    }
    Ok(c)
}

fn check_targets(plant: &ServoPlant, t: &DesignTargets) -> Result<()> {
    ServoPlant::new(plant.g_opto, plant.c_node, plant.a_pre)?;
    let (fc, pm) = (t.crossover_hz, t.phase_margin_deg);
    if !(1.0..=100.0).contains(&fc) {
        return Err(Error::Domain(format!("target HPF cutoff must be within 1..100 Hz, got {fc}")));
    }
    if !(30.0..=90.0).contains(&pm) {
        return Err(Error::Domain(format!("target phase margin must be within 30..90 deg, got {pm}")));
    }
    if !(t.pole_ratio > 1.0) || !t.pole_ratio.is_finite() {
        return Err(Error::Domain(format!("pole ratio must be > 1, got {}", t.pole_ratio)));
    }
    Ok(())
}

fn synthesize(plant: &ServoPlant, t: &DesignTargets) -> Result<LagLeadCompensator> {
    let fc = t.crossover_hz;
    let pm = t.phase_margin_deg;
    // An exact 90° margin needs f_z → 0; stop a hair short.
    let pm = pm.min(90.0 - 1e-3);

    // Integrator plant contributes −90°, so the controller may lag by 90° − PM
    // at crossover. With x = fc/f_z and ρ = f_z/f_p the controller phase is
    // atan(x) − atan(ρx), which rises monotonically to 0 for x > 1/√ρ.
    let rho = t.pole_ratio;
    let margin = |x: f64| 90.0 + (x.atan() - (rho * x).atan()).to_degrees();
    let mut lo = 1.0 / rho.sqrt();
    let mut hi = lo;
    while margin(hi) < pm {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Design(format!("cannot reach {pm} deg phase margin")));
        }
    }
    if margin(lo) > pm {
        return Err(Error::Design(format!(
            "phase margin {pm} deg is below the {:.1} deg floor of a 1:{rho} lag-lead",
            margin(lo)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) < pm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let (mut f_zero, mut f_pole) = (fc / x, fc / (x * rho));

    // Keep at least a decade between the pole and crossover.
    if f_pole > fc / 10.0 {
        f_pole = fc / 10.0;
        let zero_phase = pm - 90.0 + (fc / f_pole).atan().to_degrees();
        if zero_phase <= 0.0 {
            return Err(Error::Design(format!("no zero placement gives {pm} deg with the pole at {f_pole} Hz")));
        }
        f_zero = fc / zero_phase.to_radians().tan();
        if f_zero <= f_pole {
            return Err(Error::Design(format!("required zero {f_zero} Hz falls below the pole {f_pole} Hz")));
        }
    }

    let unit = LagLeadCompensator::new(1.0, f_zero, f_pole)?;
    let at_fc = loop_gain(plant, &unit, Frequency::new(fc)?).norm();
    LagLeadCompensator::new(1.0 / at_fc, f_zero, f_pole)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    pub crossover: f64,
    pub phase_margin: f64,
    /// −3 dB point of the closed-loop signal transfer relative to A_pre, Hz.
    /// `None` if the response stays above −3 dB across the grid.
    pub closed_loop_hpf_cutoff: Option<f64>,
    pub stable: bool,
    pub warnings: Vec<String>,
}

fn bisect_log(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    // g(lo) and g(hi) lie on opposite sides of zero; zero counts as positive
    let lo_positive = g(lo) >= 0.0;
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if (g(mid) >= 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// Locates the unity-gain crossover, phase margin and closed-loop cutoff on `grid`.
pub fn verify_stability(plant: &ServoPlant, c: &impl Controller, grid: &[f64]) -> Result<LoopReport> {
    if grid.len() < 2 {
        return Err(Error::Shape("stability grid needs at least two points".into()));
    }
    let freqs = grid.iter().map(|&f| Frequency::new(f)).collect::<Result<Vec<_>>>()?;
    let mag_db = |f: f64| 20.0 * loop_gain(plant, c, Frequency::new(f).unwrap()).norm().log10();

    let crossings: Vec<usize> = (0..freqs.len() - 1)
        .filter(|&i| {
            let (a, b) = (mag_db(freqs[i].hz()), mag_db(freqs[i + 1].hz()));
            (a >= 0.0 && b < 0.0) || (a < 0.0 && b >= 0.0)
        })
        .collect();
    let Some(&last) = crossings.last() else {
        return Err(Error::Range(format!("no gain crossover between {} Hz and {} Hz", grid[0], grid[grid.len() - 1])));
    };
    let mut warnings = Vec::new();
    if crossings.len() > 1 {
        warnings.push(format!("{} gain crossovers found; reporting the highest", crossings.len()));
    }
    let crossover = bisect_log(freqs[last].hz(), freqs[last + 1].hz(), mag_db);
    let l = loop_gain(plant, c, Frequency::new(crossover)?);
    let phase_margin = 180.0 + l.arg().to_degrees();

    let rel_db = |f: f64| {
        let t = closed_loop_signal_transfer(plant, c, Frequency::new(f).unwrap()).norm() / plant.a_pre;
        20.0 * t.log10() + 10.0 * 2f64.log10()
    };
    let closed_loop_hpf_cutoff = (0..freqs.len() - 1)
        .rev()
        .find(|&i| rel_db(freqs[i].hz()) < 0.0 && rel_db(freqs[i + 1].hz()) >= 0.0)
        .map(|i| bisect_log(freqs[i].hz(), freqs[i + 1].hz(), rel_db));

    Ok(LoopReport { crossover, phase_margin, closed_loop_hpf_cutoff, stable: phase_margin > 0.0, warnings })
}

/// Grid spanning three decades either side of `center` at 64 points/decade.
pub fn stability_grid(center: f64) -> Result<Vec<f64>> {
    crate::noise::log_grid(center * 1e-3, center * 1e3, 64)
}

/// Unity-gain frequency of the plant with a flat controller of gain `k`.
pub fn integrator_crossover(plant: &ServoPlant, k: f64) -> f64 {
    plant.a_pre * k * plant.g_opto / (2.0 * PI * plant.c_node)
}
