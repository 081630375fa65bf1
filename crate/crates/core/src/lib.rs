//! Self-noise simulation for capacitive sensor front ends.
//!
//! Models the gate-node noise of an electret capsule biased either through a
//! gigaohm resistor or through a light-controlled photocurrent held in place
//! by a DC servo, designs the servo's lag-lead compensator, and reports the
//! result as A-weighted equivalent sound pressure level. A small modified
//! nodal analysis solver cross-checks the closed-form expressions.

// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frontend;
pub mod mna;
pub mod noise;
pub mod report;
pub mod scenario;
pub mod selftest;
pub mod servo;
pub mod units;
pub mod weighting;

pub use error::{Error, Result};
pub use frontend::{
    cutoff_frequency, divider_ratio, effective_input_capacitance, equivalent_source_voltage, gate_noise_spectrum,
    input_referred_spectrum, rc_lowpass, BiasElement, EcmModel, FrontEndConfig, InputCapMode, InputCapModel, JfetNoise,
};
pub use mna::{Excitation, Network};
pub use noise::{
    integrate_power, log_grid, shot_current_density, thermal_current_density, thermal_voltage_density, AnalyticTail,
    DensityUnit, Frequency, NoiseSource, PhysicalConstants, Spectrum,
};
pub use report::{run_scenario, ReportBundle};
pub use scenario::{parse_scenario, parse_scenario_str, Scenario};
pub use servo::{
    closed_loop_signal_transfer, compensator_response, design_for_cutoff, design_for_cutoff_with, design_lag_lead,
    loop_gain, verify_stability, DesignTargets, LagLeadCompensator, LoopReport, PureIntegrator, ServoPlant,
};
pub use weighting::{a_weight, a_weighted_rms, self_noise_report, to_dba_spl, Calibration, NoiseFloorResult, SplLevel};
