//! Runs a scenario and writes its result files.
//!
//! Every file is written to a temporary sibling first and renamed into place,
//! so a reader never sees a half-written report. Output depends only on the
//! scenario, so two runs produce identical bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frontend::{cutoff_frequency, gate_noise_spectrum, input_referred_spectrum, BiasElement};
use crate::noise::{log_grid, Spectrum};
use crate::scenario::{Scenario, ServoRequest};
use crate::servo::{design_for_cutoff_with, stability_grid, verify_stability, DesignTargets};
use crate::weighting::{a_weighted_rms, to_dba_spl, SplLevel};

/// `x` in scientific notation with nine significant digits, e.g. `1.32629119e+01`.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.8e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Per-front-end numbers gathered during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndResult {
    pub label: String,
    pub a_weighted_rms: f64,
    pub spl: Option<SplLevel>,
    pub gate_capacitance: f64,
    pub divider_ratio: f64,
    pub bias_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServoOutcome {
    pub f_zero: f64,
    pub f_pole: f64,
    pub gain: f64,
    pub crossover: f64,
    pub phase_margin: f64,
    pub hpf_cutoff: Option<f64>,
    pub stable: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub frontends: Vec<FrontEndResult>,
    /// `None` when the scenario has no `[servo]` section.
    pub servo: Option<ServoOutcome>,
    pub files: Vec<PathBuf>,
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let target = dir.join(name);
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", target.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

fn nsd_csv(s: &Spectrum) -> String {
    let mut out = String::from("frequency_hz,density_v_per_rthz\n");
    for (f, v) in s.iter() {
        let _ = writeln!(out, "{},{}", sci(f), sci(v));
    }
    out
}

fn design_servo(req: &ServoRequest) -> Result<ServoOutcome> {
    let t = DesignTargets { crossover_hz: req.target_hpf, phase_margin_deg: req.target_pm, pole_ratio: req.pole_ratio };
    let c = design_for_cutoff_with(&req.plant, &t)?;
    let report = verify_stability(&req.plant, &c, &stability_grid(req.target_hpf)?)?;
    Ok(ServoOutcome {
        f_zero: c.f_zero,
        f_pole: c.f_pole,
        gain: c.gain,
        crossover: report.crossover,
        phase_margin: report.phase_margin,
        hpf_cutoff: report.closed_loop_hpf_cutoff,
        stable: report.stable,
        warnings: report.warnings,
    })
}

fn servo_text(req: Option<&ServoRequest>, outcome: &Option<Result<ServoOutcome>>) -> String {
    let mut out = String::from("# servo loop report\n");
    let (Some(req), Some(outcome)) = (req, outcome) else {
        out.push_str("status: not requested\n");
        return out;
    };
    let _ = writeln!(out, "target_hpf_cutoff_hz: {}", sci(req.target_hpf));
    let _ = writeln!(out, "target_phase_margin_deg: {}", sci(req.target_pm));
    let _ = writeln!(out, "pole_ratio: {}", sci(req.pole_ratio));
    match outcome {
        Ok(o) => {
            let _ = writeln!(out, "status: {}", if o.stable { "stable" } else { "unstable" });
            let _ = writeln!(out, "compensator_gain: {}", sci(o.gain));
            let _ = writeln!(out, "compensator_zero_hz: {}", sci(o.f_zero));
            let _ = writeln!(out, "compensator_pole_hz: {}", sci(o.f_pole));
            let _ = writeln!(out, "crossover_hz: {}", sci(o.crossover));
            let _ = writeln!(out, "phase_margin_deg: {}", sci(o.phase_margin));
            match o.hpf_cutoff {
                Some(f) => writeln!(out, "hpf_cutoff_hz: {}", sci(f)),
                None => writeln!(out, "hpf_cutoff_hz: none"),
            }
            .ok();
            for w in &o.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
        }
        Err(e) => {
            let _ = writeln!(out, "status: infeasible");
            let _ = writeln!(out, "reason: {e}");
        }
    }
    out
}

fn summary_text(s: &Scenario, results: &[FrontEndResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", s.name);
    let _ = writeln!(out, "band_hz: {} .. {}", sci(s.band.0), sci(s.band.1));
    let _ = writeln!(out, "points_per_decade: {}", s.points_per_decade);
    match &s.calibration {
        Some(c) => writeln!(out, "sensitivity_v_per_pa: {}", sci(c.sensitivity)),
        None => writeln!(out, "sensitivity_v_per_pa: none (dBA SPL not reported)"),
    }
    .ok();
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "[{}]", r.label);
        let _ = writeln!(out, "gate_capacitance_f: {}", sci(r.gate_capacitance));
        let _ = writeln!(out, "divider_ratio: {}", sci(r.divider_ratio));
        if let Some(f) = r.bias_cutoff {
            let _ = writeln!(out, "bias_cutoff_hz: {}", sci(f));
        }
        let _ = writeln!(out, "a_weighted_rms_v: {}", sci(r.a_weighted_rms));
        if let Some(spl) = r.spl {
            let _ = writeln!(out, "dba_spl: {spl}");
        }
        out.push('\n');
    }
    if results.len() > 1 {
        out.push_str("# pairwise: positive delta means the first is noisier\n");
        for (i, a) in results.iter().enumerate() {
            for b in &results[i + 1..] {
                let delta = match (a.a_weighted_rms, b.a_weighted_rms) {
                    (x, y) if x > 0.0 && y > 0.0 => format!("{:+.2} dB", 20.0 * (x / y).log10()),
                    _ => "undefined (silent front end)".to_string(),
                };
                let _ = writeln!(out, "{} vs {}: {delta}", a.label, b.label);
            }
        }
    }
    out
}

/// Evaluates `s` and writes all result files into `out_dir`.
///
/// A servo design that cannot meet its targets still leaves a complete set of
/// files; the returned error is [`Error::Design`].
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<ReportBundle> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let nsd_grid = log_grid(s.nsd_band.0, s.nsd_band.1, s.points_per_decade)?;
    let band_grid = log_grid(s.band.0, s.band.1, s.points_per_decade)?;

    let mut files = Vec::new();
    let mut results = Vec::with_capacity(s.frontends.len());
    let mut dba = String::from("label,a_weighted_rms_v,dba_spl\n");
    for fe in &s.frontends {
        let cfg = &fe.config;
        let nsd = gate_noise_spectrum(cfg, &nsd_grid)?;
        files.push(write_atomic(out_dir, &format!("{}-nsd.csv", fe.label), &nsd_csv(&nsd))?);

        let rms = a_weighted_rms(&input_referred_spectrum(cfg, &band_grid)?, s.band)?;
        let spl = s.calibration.as_ref().map(|c| to_dba_spl(rms, c)).transpose()?;
        let spl_text = spl.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(dba, "{},{},{spl_text}", fe.label, sci(rms));
        let bias_cutoff = match cfg.bias {
            BiasElement::Resistor { resistance } => Some(cutoff_frequency(resistance, cfg.gate_capacitance())?.hz()),
            BiasElement::Photocurrent { .. } => None,
        };
        results.push(FrontEndResult {
            label: fe.label.clone(),
            a_weighted_rms: rms,
            spl,
            gate_capacitance: cfg.gate_capacitance(),
            divider_ratio: cfg.divider().ratio,
            bias_cutoff,
        });
    }
    files.push(write_atomic(out_dir, "dba-table.csv", &dba)?);

    let servo = s.servo.as_ref().map(design_servo);
    files.push(write_atomic(out_dir, "servo-report.txt", &servo_text(s.servo.as_ref(), &servo))?);
    files.push(write_atomic(out_dir, "summary.txt", &summary_text(s, &results))?);

    let servo = match servo {
        Some(Err(e)) => return Err(Error::Design(e.to_string())),
        Some(Ok(o)) => Some(o),
        None => None,
    };
    Ok(ReportBundle { frontends: results, servo, files })
}
