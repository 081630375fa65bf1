//! A-weighting and conversion of noise spectra to equivalent sound pressure level.

use crate::error::{Error, Result};
use crate::frontend::{input_referred_spectrum, FrontEndConfig};
use crate::noise::{log_grid, Spectrum, DEFAULT_POINTS_PER_DECADE};

/// Pole frequencies of the A-weighting response, Hz.
pub const F1: f64 = 20.598997;
pub const F2: f64 = 107.65265;
pub const F3: f64 = 737.86223;
pub const F4: f64 = 12194.217;

/// Reference pressure for dB SPL, Pa.
pub const P_REF: f64 = 20e-6;

/// Acoustic calibrator level (about 1 Pa RMS), dB SPL.
pub const CALIBRATOR_DB_SPL: f64 = 94.0;

/// Default evaluation band, Hz.
pub const DEFAULT_BAND: (f64, f64) = (20.0, 20e3);

fn unnormalized(f: f64) -> f64 {
    let f2 = f * f;
    F4 * F4 * f2 * f2 / ((f2 + F1 * F1) * ((f2 + F2 * F2) * (f2 + F3 * F3)).sqrt() * (f2 + F4 * F4))
}

/// A-weighting amplitude factor, exactly 1 at 1 kHz.
pub fn a_weight(f: f64) -> f64 {
    unnormalized(f) / unnormalized(1000.0)
}

pub fn a_weight_db(f: f64) -> f64 {
    20.0 * a_weight(f).log10()
}

/// √(∫ (A(f)·density(f))² df) over `band`.
pub fn a_weighted_rms(s: &Spectrum, band: (f64, f64)) -> Result<f64> {
    Ok(s.band_power(band.0, band.1, a_weight)?.sqrt())
}

/// Capsule sensitivity referenced to the acoustic calibrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Open-circuit source sensitivity at 1 kHz, V/Pa.
    pub sensitivity: f64,
}

impl Calibration {
    pub fn new(sensitivity: f64) -> Result<Self> {
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(Error::Domain(format!("sensitivity must be > 0 V/Pa, got {sensitivity:e}")));
        }
        Ok(Calibration { sensitivity })
    }

    /// Sensitivity from the voltage recorded with the 94 dB SPL calibrator fitted.
    pub fn from_calibrator_reading(v_rms_at_94db: f64) -> Result<Self> {
        Self::new(v_rms_at_94db / (P_REF * 10f64.powf(CALIBRATOR_DB_SPL / 20.0)))
    }
}

/// A sound pressure level, or nothing to measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplLevel {
    Db(f64),
    BelowFloor,
}

impl SplLevel {
    pub fn db(self) -> Option<f64> {
        match self {
            SplLevel::Db(v) => Some(v),
            SplLevel::BelowFloor => None,
        }
    }
}

impl std::fmt::Display for SplLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplLevel::Db(v) => write!(f, "{v:.2}"),
            SplLevel::BelowFloor => f.write_str("below-floor"),
        }
    }
}

/// Equivalent sound pressure level of an rms voltage.
pub fn to_dba_spl(rms: f64, cal: &Calibration) -> Result<SplLevel> {
    Calibration::new(cal.sensitivity)?;
    if !(rms >= 0.0) || !rms.is_finite() {
        return Err(Error::Domain(format!("rms voltage must be finite and >= 0, got {rms:e}")));
    }
    if rms == 0.0 {
        return Ok(SplLevel::BelowFloor);
    }
    let pressure = rms / cal.sensitivity;
    Ok(SplLevel::Db(20.0 * (pressure / P_REF).log10()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFloorResult {
    /// A-weighted noise referred to the capsule source, V rms.
    pub a_weighted_rms: f64,
    pub equivalent_spl: SplLevel,
    pub band: (f64, f64),
}

/// Self-noise of a front end in dBA SPL.
///
/// The gate noise is referred back to the capsule source through the
/// capacitive divider, A-weighted over `band` and divided by the source
/// sensitivity. Amplifier gain cancels between signal and noise.
pub fn self_noise_report(cfg: &FrontEndConfig, cal: &Calibration, band: (f64, f64)) -> Result<NoiseFloorResult> {
    self_noise_report_with_grid(cfg, cal, band, DEFAULT_POINTS_PER_DECADE)
}

pub fn self_noise_report_with_grid(
    cfg: &FrontEndConfig,
    cal: &Calibration,
    band: (f64, f64),
    points_per_decade: usize,
) -> Result<NoiseFloorResult> {
    let grid = log_grid(band.0, band.1, points_per_decade)?;
    let spectrum = input_referred_spectrum(cfg, &grid)?;
    let rms = a_weighted_rms(&spectrum, band)?;
    Ok(NoiseFloorResult { a_weighted_rms: rms, equivalent_spl: to_dba_spl(rms, cal)?, band })
}
