//! Elementary noise densities, spectrum containers and noise-power quadrature.
//!
//! All densities are amplitude spectral densities (V/√Hz or A/√Hz). Power
//! densities only appear transiently inside the integrators.

use std::fmt;

use crate::error::{Error, Result};

/// Default evaluation temperature in kelvin.
pub const DEFAULT_TEMPERATURE: f64 = 300.0;

/// Default grid density in points per decade.
pub const DEFAULT_POINTS_PER_DECADE: usize = 64;

/// Largest ratio between adjacent grid frequencies accepted by the integrators.
pub const MAX_GRID_RATIO: f64 = 1.3;

/// Boltzmann constant and elementary charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J/K
    pub k_b: f64,
    /// C
    pub q: f64,
}

impl PhysicalConstants {
    /// Exact SI (2019) values.
    pub const CODATA: PhysicalConstants = PhysicalConstants { k_b: 1.380649e-23, q: 1.602176634e-19 };

    pub fn thermal_voltage_density(&self, r: f64, t: f64) -> Result<f64> {
        check_resistor(r, t)?;
        Ok((4.0 * self.k_b * t * r).sqrt())
    }

    pub fn thermal_current_density(&self, r: f64, t: f64) -> Result<f64> {
        check_resistor(r, t)?;
        Ok((4.0 * self.k_b * t / r).sqrt())
    }

    pub fn shot_current_density(&self, i: f64) -> Result<f64> {
        if !(i >= 0.0) || !i.is_finite() {
            return Err(Error::Domain(format!("shot noise needs a current >= 0 A, got {i:e}")));
        }
        Ok((2.0 * self.q * i).sqrt())
    }

    /// Total thermal noise power k_B·T/C of an RC network, in V².
    pub fn kt_over_c(&self, t: f64, c: f64) -> f64 {
        self.k_b * t / c
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

fn check_resistor(r: f64, t: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("resistance must be > 0 Ω, got {r:e}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("temperature must be > 0 K, got {t:e}")));
    }
    Ok(())
}

/// √(4 k_B T R) in V/√Hz.
pub fn thermal_voltage_density(r: f64, t: f64) -> Result<f64> {
    PhysicalConstants::CODATA.thermal_voltage_density(r, t)
}

/// √(4 k_B T / R) in A/√Hz.
pub fn thermal_current_density(r: f64, t: f64) -> Result<f64> {
    PhysicalConstants::CODATA.thermal_current_density(r, t)
}

/// √(2 q I) in A/√Hz.
pub fn shot_current_density(i: f64) -> Result<f64> {
    PhysicalConstants::CODATA.shot_current_density(i)
}

/// A strictly positive frequency in hertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(hz: f64) -> Result<Self> {
        if hz > 0.0 && hz.is_finite() {
            Ok(Frequency(hz))
        } else {
            Err(Error::Domain(format!("frequency must be finite and > 0 Hz, got {hz}")))
        }
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn omega(self) -> f64 {
        2.0 * std::f64::consts::PI * self.0
    }
}

impl TryFrom<f64> for Frequency {
    type Error = Error;

    fn try_from(hz: f64) -> Result<Self> {
        Frequency::new(hz)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Hz", self.0)
    }
}

/// Log-spaced grid from `start` to `stop` inclusive with at least `points_per_decade`
/// points per decade. Both endpoints are exact.
pub fn log_grid(start: f64, stop: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    Frequency::new(start)?;
    Frequency::new(stop)?;
    if stop <= start {
        return Err(Error::Range(format!("empty band: {start} Hz .. {stop} Hz")));
    }
    if points_per_decade == 0 {
        return Err(Error::Domain("points per decade must be >= 1".into()));
    }
    let decades = (stop / start).log10();
    let steps = (decades * points_per_decade as f64 - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| start * (stop / start).powf(i as f64 / steps as f64)).collect();
    grid[0] = start;
    grid[steps] = stop;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityUnit {
    VoltsPerRootHz,
    AmpsPerRootHz,
}

impl DensityUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            DensityUnit::VoltsPerRootHz => "V/√Hz",
            DensityUnit::AmpsPerRootHz => "A/√Hz",
        }
    }
}

/// A one-port stochastic source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSource {
    /// Johnson noise of a resistor, as a series voltage.
    ThermalVoltage {
        resistance: f64,
        temperature: f64,
    },
    /// Johnson noise of a resistor, as a parallel current.
    ThermalCurrent {
        resistance: f64,
        temperature: f64,
    },
    ShotCurrent {
        current: f64,
    },
    FlatVoltage {
        density: f64,
    },
    FlatCurrent {
        density: f64,
    },
    /// `density`·(pivot/f)^(exponent/2); exponent 1 gives a −10 dB/dec slope.
    FlickerVoltage {
        density: f64,
        pivot: f64,
        exponent: f64,
    },
}

impl NoiseSource {
    pub fn thermal_voltage(resistance: f64, temperature: f64) -> Result<Self> {
        check_resistor(resistance, temperature)?;
        Ok(NoiseSource::ThermalVoltage { resistance, temperature })
    }

    pub fn thermal_current(resistance: f64, temperature: f64) -> Result<Self> {
        check_resistor(resistance, temperature)?;
        Ok(NoiseSource::ThermalCurrent { resistance, temperature })
    }

    pub fn shot(current: f64) -> Result<Self> {
        shot_current_density(current)?;
        Ok(NoiseSource::ShotCurrent { current })
    }

    pub fn flat_voltage(density: f64) -> Result<Self> {
        check_density(density)?;
        Ok(NoiseSource::FlatVoltage { density })
    }

    pub fn flat_current(density: f64) -> Result<Self> {
        check_density(density)?;
        Ok(NoiseSource::FlatCurrent { density })
    }

    pub fn flicker_voltage(density: f64, pivot: f64, exponent: f64) -> Result<Self> {
        check_density(density)?;
        Frequency::new(pivot)?;
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(Error::Domain(format!("flicker exponent must be >= 0, got {exponent}")));
        }
        Ok(NoiseSource::FlickerVoltage { density, pivot, exponent })
    }

    pub fn unit(&self) -> DensityUnit {
        match self {
            NoiseSource::ThermalVoltage { .. }
            | NoiseSource::FlatVoltage { .. }
            | NoiseSource::FlickerVoltage { .. } => DensityUnit::VoltsPerRootHz,
            NoiseSource::ThermalCurrent { .. } | NoiseSource::ShotCurrent { .. } | NoiseSource::FlatCurrent { .. } => {
                DensityUnit::AmpsPerRootHz
            }
        }
    }

    /// Amplitude density at `f` using CODATA constants.
    pub fn density(&self, f: Frequency) -> f64 {
        self.density_with(&PhysicalConstants::CODATA, f)
    }

    pub fn density_with(&self, k: &PhysicalConstants, f: Frequency) -> f64 {
        match *self {
            NoiseSource::ThermalVoltage { resistance, temperature } => (4.0 * k.k_b * temperature * resistance).sqrt(),
            NoiseSource::ThermalCurrent { resistance, temperature } => (4.0 * k.k_b * temperature / resistance).sqrt(),
            NoiseSource::ShotCurrent { current } => (2.0 * k.q * current).sqrt(),
            NoiseSource::FlatVoltage { density } | NoiseSource::FlatCurrent { density } => density,
            NoiseSource::FlickerVoltage { density, pivot, exponent } => density * (pivot / f.hz()).powf(exponent / 2.0),
        }
    }

    /// Samples the source on a grid.
    pub fn spectrum(&self, grid: &[f64]) -> Result<Spectrum> {
        let values = grid.iter().map(|&f| Frequency::new(f).map(|f| self.density(f))).collect::<Result<Vec<_>>>()?;
        Spectrum::new(grid.to_vec(), values, self.unit())
    }
}

fn check_density(d: f64) -> Result<()> {
    if d >= 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise density must be finite and >= 0, got {d:e}")))
    }
}

/// Amplitude spectral density sampled on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    freqs: Vec<f64>,
    values: Vec<f64>,
    unit: DensityUnit,
}

impl Spectrum {
    pub fn new(freqs: Vec<f64>, values: Vec<f64>, unit: DensityUnit) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::Shape("spectrum has no points".into()));
        }
        if freqs.len() != values.len() {
            return Err(Error::Shape(format!("{} frequencies but {} values", freqs.len(), values.len())));
        }
        for &f in &freqs {
            Frequency::new(f)?;
        }
        if let Some(w) = freqs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Shape(format!(
                "frequencies must be strictly increasing ({} Hz then {} Hz)",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("density values must be finite and >= 0, got {v}")));
        }
        Ok(Spectrum { freqs, values, unit })
    }

    /// Builds a spectrum from a density function evaluated on `grid`.
    pub fn from_fn(grid: &[f64], unit: DensityUnit, density: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&f| density(f)).collect();
        Spectrum::new(grid.to_vec(), values, unit)
    }

    pub fn zeros(grid: &[f64], unit: DensityUnit) -> Result<Self> {
        Spectrum::new(grid.to_vec(), vec![0.0; grid.len()], unit)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> DensityUnit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs.iter().copied().zip(self.values.iter().copied())
    }

    /// Multiplies every density by a nonnegative factor.
    pub fn scaled(&self, factor: f64) -> Result<Spectrum> {
        check_density(factor)?;
        Spectrum::new(self.freqs.clone(), self.values.iter().map(|v| v * factor).collect(), self.unit)
    }

    /// Pointwise √(a² + b²) of two uncorrelated spectra on the same grid.
    pub fn combine_uncorrelated(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.unit != other.unit {
            return Err(Error::Shape(format!("unit mismatch: {} vs {}", self.unit.symbol(), other.unit.symbol())));
        }
        if self.freqs != other.freqs {
            return Err(Error::Shape("frequency grids differ".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.hypot(*b)).collect();
        Ok(Spectrum { freqs: self.freqs.clone(), values, unit: self.unit })
    }

    /// Log-log interpolated density at `f` (linear where either neighbour is zero).
    pub fn interpolate(&self, f: f64) -> Result<f64> {
        let (lo, hi) = (self.freqs[0], *self.freqs.last().unwrap());
        if !(f >= lo && f <= hi) {
            return Err(Error::Range(format!("{f} Hz outside spectrum range {lo} .. {hi} Hz")));
        }
        let idx = self.freqs.partition_point(|&x| x < f);
        if self.freqs[idx] == f {
            return Ok(self.values[idx]);
        }
        let (f0, f1) = (self.freqs[idx - 1], self.freqs[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let t = (f / f0).ln() / (f1 / f0).ln();
        if v0 > 0.0 && v1 > 0.0 {
            Ok((v0.ln() + t * (v1 / v0).ln()).exp())
        } else {
            Ok(v0 + t * (v1 - v0))
        }
    }

    fn check_spacing(freqs: &[f64]) -> Result<()> {
        if let Some(w) = freqs.windows(2).find(|w| w[1] / w[0] > MAX_GRID_RATIO) {
            return Err(Error::Accuracy(format!(
                "grid too sparse: {} Hz -> {} Hz (ratio {:.3} > {MAX_GRID_RATIO})",
                w[0],
                w[1],
                w[1] / w[0]
            )));
        }
        Ok(())
    }

    /// ∫ (weight(f)·density(f))² df over [lo, hi], trapezoidal in linear f.
    /// Band edges that fall between grid points are interpolated.
    pub fn band_power(&self, lo: f64, hi: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
        if !(hi > lo) {
            return Err(Error::Range(format!("empty band: {lo} Hz .. {hi} Hz")));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.len() + 2);
        pts.push((lo, self.interpolate(lo)?));
        pts.extend(self.iter().filter(|&(f, _)| f > lo && f < hi));
        pts.push((hi, self.interpolate(hi)?));
        let freqs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        Self::check_spacing(&freqs)?;
        let power: Vec<f64> = pts.iter().map(|&(f, v)| (weight(f) * v).powi(2)).collect();
        Ok(trapezoid(&freqs, &power))
    }
}

/// Closed-form extension of a spectrum beyond its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticTail {
    /// First-order low-pass shape: flat below the grid, 1/f² power above it.
    FirstOrderLowPass,
}

/// Total power ∫₀^∞ |density|² df of a spectrum in V² (or A²).
///
/// Without a tail only the sampled range contributes, so the grid has to extend
/// well past every corner frequency (six decades keeps the 1/f² remainder below 1e-6).
pub fn integrate_power(s: &Spectrum, tail: Option<AnalyticTail>) -> Result<f64> {
    Spectrum::check_spacing(&s.freqs)?;
    let power: Vec<f64> = s.values.iter().map(|v| v * v).collect();
    let mut total = trapezoid(&s.freqs, &power);
    if let Some(AnalyticTail::FirstOrderLowPass) = tail {
        let (f_lo, p_lo) = (s.freqs[0], power[0]);
        let (f_hi, p_hi) = (*s.freqs.last().unwrap(), *power.last().unwrap());
        // flat head on (0, f_lo] and ∫ p_hi (f_hi/f)² df on [f_hi, ∞)
        total += f_lo * p_lo + f_hi * p_hi;
    }
    Ok(total)
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(hz: f64) -> Frequency {
        Frequency::new(hz).unwrap()
    }

    #[test]
    fn thermal_voltage_spot_values() {
        assert_relative_eq!(thermal_voltage_density(1e9, 300.0).unwrap(), 4.0703e-6, max_relative = 1e-4);
        assert_relative_eq!(thermal_voltage_density(1e10, 300.0).unwrap(), 1.2871e-5, max_relative = 1e-4);
        let a = thermal_voltage_density(2.2e6, 300.0).unwrap();
        let b = thermal_voltage_density(4.0 * 2.2e6, 300.0).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-15);
    }

    #[test]
    fn thermal_current_spot_values() {
        let i1 = thermal_current_density(1e9, 300.0).unwrap();
        let i10 = thermal_current_density(1e10, 300.0).unwrap();
        assert_eq!(format!("{:.1}", i1 * 1e15), "4.1");
        assert_eq!(format!("{:.1}", i10 * 1e15), "1.3");
        let big = thermal_current_density(100.0 * 1e9, 300.0).unwrap();
        assert_relative_eq!(big, i1 / 10.0, max_relative = 1e-15);
    }

    #[test]
    fn shot_spot_values() {
        let one = shot_current_density(1e-12).unwrap();
        assert_relative_eq!(one, 5.6607e-16, max_relative = 1e-4);
        assert_eq!(format!("{:.2}", one * 1e15), "0.57");
        assert_eq!(shot_current_density(0.0).unwrap(), 0.0);
        assert_relative_eq!(shot_current_density(4e-12).unwrap(), 2.0 * one, max_relative = 1e-15);
        assert!(matches!(shot_current_density(-1e-12), Err(Error::Domain(_))));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(thermal_voltage_density(0.0, 300.0), Err(Error::Domain(_))));
        assert!(matches!(thermal_voltage_density(1e9, -1.0), Err(Error::Domain(_))));
        assert!(matches!(thermal_current_density(f64::NAN, 300.0), Err(Error::Domain(_))));
        assert!(Frequency::new(0.0).is_err());
        assert!(NoiseSource::flat_voltage(-1e-9).is_err());
    }

    #[test]
    fn voltage_is_r_times_current() {
        for &r in &[1e3, 1e9, 1e11] {
            let v = thermal_voltage_density(r, 300.0).unwrap();
            let i = thermal_current_density(r, 300.0).unwrap();
            assert_relative_eq!(v, r * i, max_relative = 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn flicker_slope_is_minus_ten_db_per_decade() {
        let s = NoiseSource::flicker_voltage(10e-9, 10.0, 1.0).unwrap();
        let db = 20.0 * (s.density(f(1000.0)) / s.density(f(100.0))).log10();
        assert_relative_eq!(db, -10.0, epsilon = 1e-12);
        assert_relative_eq!(s.density(f(10.0)), 10e-9);
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = log_grid(20.0, 20e3, 64).unwrap();
        assert_eq!(g[0], 20.0);
        assert_eq!(*g.last().unwrap(), 20e3);
        assert_eq!(g.len(), 193);
        assert!(g.windows(2).all(|w| w[1] / w[0] <= 10f64.powf(1.0 / 64.0) + 1e-12));
        assert!(log_grid(10.0, 10.0, 64).is_err());
    }

    #[test]
    fn combine_examples() {
        let g = [1.0, 2.0, 3.0];
        let a = Spectrum::new(g.to_vec(), vec![1.0, 2.0, 3.0], DensityUnit::VoltsPerRootHz).unwrap();
        let b = Spectrum::new(g.to_vec(), vec![0.0, 0.0, 4.0], DensityUnit::VoltsPerRootHz).unwrap();
        assert_eq!(a.combine_uncorrelated(&b).unwrap().values(), &[1.0, 2.0, 5.0]);
        let z = Spectrum::zeros(&g, DensityUnit::VoltsPerRootHz).unwrap();
        assert_eq!(a.combine_uncorrelated(&z).unwrap(), a);
        let twice = a.combine_uncorrelated(&a).unwrap();
        for (x, y) in a.values().iter().zip(twice.values()) {
            assert_relative_eq!(20.0 * (y / x).log10(), 3.0103, epsilon = 1e-4);
        }
    }

    #[test]
    fn combine_rejects_mismatch() {
        let a = Spectrum::new(vec![1.0, 2.0], vec![1.0, 1.0], DensityUnit::VoltsPerRootHz).unwrap();
        let b = Spectrum::new(vec![1.0, 3.0], vec![1.0, 1.0], DensityUnit::VoltsPerRootHz).unwrap();
        let c = Spectrum::new(vec![1.0, 2.0], vec![1.0, 1.0], DensityUnit::AmpsPerRootHz).unwrap();
        assert!(matches!(a.combine_uncorrelated(&b), Err(Error::Shape(_))));
        assert!(matches!(a.combine_uncorrelated(&c), Err(Error::Shape(_))));
    }

    #[test]
    fn spectrum_validation() {
        assert!(matches!(Spectrum::new(vec![], vec![], DensityUnit::VoltsPerRootHz), Err(Error::Shape(_))));
        assert!(Spectrum::new(vec![2.0, 1.0], vec![0.0, 0.0], DensityUnit::VoltsPerRootHz).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0], DensityUnit::VoltsPerRootHz).is_err());
        assert!(Spectrum::new(vec![1.0], vec![f64::INFINITY], DensityUnit::VoltsPerRootHz).is_err());
    }

    #[test]
    fn integrate_zero_and_sparse() {
        let g = log_grid(1.0, 1e3, 64).unwrap();
        let z = Spectrum::zeros(&g, DensityUnit::VoltsPerRootHz).unwrap();
        assert_eq!(integrate_power(&z, None).unwrap(), 0.0);
        let sparse = Spectrum::new(vec![1.0, 2.0], vec![1.0, 1.0], DensityUnit::VoltsPerRootHz).unwrap();
        assert!(matches!(integrate_power(&sparse, None), Err(Error::Accuracy(_))));
    }

    #[test]
    fn integrate_flat_band_is_exact() {
        let g = log_grid(20.0, 20e3, 64).unwrap();
        let s = Spectrum::from_fn(&g, DensityUnit::VoltsPerRootHz, |_| 1e-6).unwrap();
        assert_relative_eq!(integrate_power(&s, None).unwrap(), 1e-12 * (20e3 - 20.0), max_relative = 1e-12);
    }

    #[test]
    fn band_power_interpolates_edges() {
        let g = log_grid(1.0, 1e5, 64).unwrap();
        let s = Spectrum::from_fn(&g, DensityUnit::VoltsPerRootHz, |_| 2.0).unwrap();
        let p = s.band_power(33.3, 4444.4, |_| 1.0).unwrap();
        assert_relative_eq!(p, 4.0 * (4444.4 - 33.3), max_relative = 1e-12);
        assert!(matches!(s.band_power(0.5, 10.0, |_| 1.0), Err(Error::Range(_))));
    }
}
