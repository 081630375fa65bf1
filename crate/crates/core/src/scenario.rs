//! Scenario files.
//!
//! A scenario is a TOML document. Every physical value is a string carrying
//! its unit; bare numbers are only accepted for dimensionless fields.
//!
//! ```toml
//! schema = 1                       # required
//! name = "paper-test1"
//! temperature = "300 K"            # default for every front end
//! band = ["20 Hz", "20 kHz"]       # A-weighted evaluation band
//! nsd_band = ["10 Hz", "20 kHz"]   # range of the exported spectra
//! grid_ppd = 64                    # grid points per decade
//!
//! [calibration]                    # optional; without it dBA is not reported
//! sensitivity = "10 mV/Pa"         # capsule open-circuit sensitivity
//!
//! [[frontend]]                     # one or more
//! label = "conventional-1G"
//! c_m = "12 pF"
//! bias = "resistor"                # or "photocurrent"
//! r_m = "1 GOhm"                   # resistor bias
//! # i_bias = "1 pA"                # photocurrent bias
//! input_cap = "ideal-bootstrap"    # single-stage | cascode | constant-current-cascode | ideal-bootstrap
//! c_gs = "11.8 pF"
//! c_gd = "1.2 pF"
//! a_v = 10                         # single-stage only
//! jfet_noise = "2 nV/rtHz"
//! jfet_flicker = "20 nV/rtHz"      # optional flicker term, density at flicker_pivot
//! flicker_pivot = "10 Hz"
//! flicker_exponent = 1.0
//! gate_leak = "0.4 pA"
//! e_el = "1 V"
//! temperature = "300 K"
//!
//! [servo]                          # optional DC servo design request
//! g_opto = "1 nA/V"
//! c_node = "12 pF"
//! a_pre = 1
//! target_hpf = "15 Hz"             # closed-loop -3 dB corner
//! target_pm = "60 deg"
//! pole_ratio = 20
//! ```

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::frontend::{
    BiasElement, EcmModel, FrontEndConfig, InputCapMode, InputCapModel, JfetNoise, DEFAULT_JFET_NOISE,
};
use crate::noise::{NoiseSource, DEFAULT_POINTS_PER_DECADE, DEFAULT_TEMPERATURE};
use crate::servo::{ServoPlant, DEFAULT_PHASE_MARGIN, DEFAULT_POLE_RATIO};
use crate::units::{parse_quantity, Unit};
use crate::weighting::{Calibration, DEFAULT_BAND};

pub const SCHEMA_VERSION: i64 = 1;

/// Spectra are exported over this band unless `nsd_band` says otherwise.
pub const DEFAULT_NSD_BAND: (f64, f64) = (10.0, 20e3);

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrontEnd {
    pub label: String,
    pub config: FrontEndConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoRequest {
    pub plant: ServoPlant,
    pub target_hpf: f64,
    pub target_pm: f64,
    pub pole_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub frontends: Vec<LabeledFrontEnd>,
    pub servo: Option<ServoRequest>,
    pub calibration: Option<Calibration>,
    pub band: (f64, f64),
    pub nsd_band: (f64, f64),
    pub points_per_decade: usize,
}

type Quantity = Spanned<toml::Value>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: Option<Spanned<i64>>,
    name: Option<String>,
    temperature: Option<Quantity>,
    band: Option<Spanned<Vec<Quantity>>>,
    nsd_band: Option<Spanned<Vec<Quantity>>>,
    grid_ppd: Option<Spanned<i64>>,
    calibration: Option<RawCalibration>,
    #[serde(default)]
    frontend: Vec<Spanned<RawFrontEnd>>,
    servo: Option<Spanned<RawServo>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    sensitivity: Quantity,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrontEnd {
    label: Spanned<String>,
    c_m: Quantity,
    bias: Spanned<String>,
    r_m: Option<Quantity>,
    i_bias: Option<Quantity>,
    input_cap: Option<Spanned<String>>,
    c_gs: Option<Quantity>,
    c_gd: Option<Quantity>,
    a_v: Option<Spanned<f64>>,
    jfet_noise: Option<Quantity>,
    jfet_flicker: Option<Quantity>,
    flicker_pivot: Option<Quantity>,
    flicker_exponent: Option<Spanned<f64>>,
    gate_leak: Option<Quantity>,
    e_el: Option<Quantity>,
    temperature: Option<Quantity>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawServo {
    g_opto: Quantity,
    c_node: Quantity,
    a_pre: Option<Spanned<f64>>,
    target_hpf: Quantity,
    target_pm: Option<Quantity>,
    pole_ratio: Option<Spanned<f64>>,
}

struct Ctx<'a> {
    source: &'a str,
    file: &'a str,
}

impl Ctx<'_> {
    fn error(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        let upto = &self.source[..span.start.min(self.source.len())];
        let line = upto.matches('\n').count() + 1;
        let column = upto.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
        Error::Parse { file: self.file.to_string(), line, column, message: message.into() }
    }

    fn quantity(&self, q: &Quantity, unit: Unit, field: &str) -> Result<f64> {
        match q.get_ref() {
            toml::Value::String(s) => {
                parse_quantity(s, unit).map_err(|m| self.error(q.span(), format!("{field}: {m}")))
            }
            toml::Value::Integer(_) | toml::Value::Float(_) => Err(self.error(
                q.span(),
                format!("{field}: missing unit, write it as a string such as \"{} {}\"", q.get_ref(), unit.symbol()),
            )),
            other => {
                Err(self.error(q.span(), format!("{field}: expected a quantity string, found {}", other.type_str())))
            }
        }
    }

    /// Quantity that must satisfy `ok`, naming the violated invariant otherwise.
    fn checked(&self, q: &Quantity, unit: Unit, field: &str, rule: &str, ok: impl Fn(f64) -> bool) -> Result<f64> {
        let v = self.quantity(q, unit, field)?;
        if ok(v) {
            Ok(v)
        } else {
            Err(self.error(q.span(), format!("{field} must be {rule}, got {v:e} {}", unit.symbol())))
        }
    }

    fn band(&self, raw: &Spanned<Vec<Quantity>>, field: &str) -> Result<(f64, f64)> {
        let items = raw.get_ref();
        if items.len() != 2 {
            return Err(self.error(raw.span(), format!("{field} needs exactly two frequencies")));
        }
        let lo = self.checked(&items[0], Unit::Hertz, field, "> 0", |v| v > 0.0)?;
        let hi = self.checked(&items[1], Unit::Hertz, field, "> 0", |v| v > 0.0)?;
        if hi <= lo {
            return Err(self.error(raw.span(), format!("{field} is empty: {lo} Hz .. {hi} Hz")));
        }
        Ok((lo, hi))
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

fn nonnegative(v: f64) -> bool {
    v >= 0.0
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text, &path.display().to_string())
}

pub fn parse_scenario_str(source: &str, file: &str) -> Result<Scenario> {
    let cx = Ctx { source, file };
    let raw: RawScenario = toml::from_str(source).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        cx.error(span, e.message().to_string())
    })?;

    match &raw.schema {
        None => return Err(cx.error(0..0, "missing required key `schema`")),
        Some(s) if *s.get_ref() != SCHEMA_VERSION => {
            return Err(cx.error(s.span(), format!("unsupported schema {}, expected {SCHEMA_VERSION}", s.get_ref())))
        }
        _ => {}
    }

    let temperature = match &raw.temperature {
        Some(q) => cx.checked(q, Unit::Kelvin, "temperature", "> 0", positive)?,
        None => DEFAULT_TEMPERATURE,
    };
    let band = raw.band.as_ref().map(|b| cx.band(b, "band")).transpose()?.unwrap_or(DEFAULT_BAND);
    let nsd_band = raw.nsd_band.as_ref().map(|b| cx.band(b, "nsd_band")).transpose()?.unwrap_or(DEFAULT_NSD_BAND);
    let points_per_decade = match &raw.grid_ppd {
        Some(p) if (4..=4096).contains(p.get_ref()) => *p.get_ref() as usize,
        Some(p) => return Err(cx.error(p.span(), "grid_ppd must be within 4..4096")),
        None => DEFAULT_POINTS_PER_DECADE,
    };
    let calibration = raw
        .calibration
        .as_ref()
        .map(|c| {
            let s = cx.checked(&c.sensitivity, Unit::VoltPerPascal, "sensitivity", "> 0", positive)?;
            Calibration::new(s)
        })
        .transpose()?;

    if raw.frontend.is_empty() {
        return Err(cx.error(0..0, "scenario needs at least one [[frontend]]"));
    }
    let mut seen = HashSet::new();
    let mut frontends = Vec::with_capacity(raw.frontend.len());
    for fe in &raw.frontend {
        let label = fe.get_ref().label.get_ref();
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(cx.error(
                fe.get_ref().label.span(),
                format!("label `{label}` may only contain letters, digits, `-`, `_` and `.`"),
            ));
        }
        if !seen.insert(label.clone()) {
            return Err(cx.error(fe.get_ref().label.span(), format!("duplicate label `{label}`")));
        }
        let config = frontend(&cx, fe.get_ref(), temperature).and_then(|cfg| {
            cfg.validate().map_err(|e| cx.error(fe.span(), e.to_string()))?;
            Ok(cfg)
        })?;
        frontends.push(LabeledFrontEnd { label: label.clone(), config });
    }

    let servo = raw.servo.as_ref().map(|s| servo(&cx, s)).transpose()?;

    Ok(Scenario {
        name: raw.name.unwrap_or_else(|| "scenario".into()),
        frontends,
        servo,
        calibration,
        band,
        nsd_band,
        points_per_decade,
    })
}

fn frontend(cx: &Ctx, fe: &RawFrontEnd, default_t: f64) -> Result<FrontEndConfig> {
    let c_m = cx.checked(&fe.c_m, Unit::Farad, "c_m", "> 0", positive)?;
    let e_el = match &fe.e_el {
        Some(q) => cx.quantity(q, Unit::Volt, "e_el")?,
        None => 1.0,
    };
    let bias = match fe.bias.get_ref().as_str() {
        "resistor" => {
            let q = fe.r_m.as_ref().ok_or_else(|| cx.error(fe.bias.span(), "resistor bias needs `r_m`"))?;
            if let Some(i) = &fe.i_bias {
                return Err(cx.error(i.span(), "`i_bias` only applies to photocurrent bias"));
            }
            BiasElement::Resistor { resistance: cx.checked(q, Unit::Ohm, "r_m", "> 0", positive)? }
        }
        "photocurrent" => {
            let q = fe.i_bias.as_ref().ok_or_else(|| cx.error(fe.bias.span(), "photocurrent bias needs `i_bias`"))?;
            if let Some(r) = &fe.r_m {
                return Err(cx.error(r.span(), "`r_m` only applies to resistor bias"));
            }
            BiasElement::Photocurrent { current: cx.checked(q, Unit::Ampere, "i_bias", ">= 0", nonnegative)? }
        }
        other => {
            return Err(cx.error(fe.bias.span(), format!("unknown bias `{other}`, expected resistor or photocurrent")))
        }
    };
    let c_gs = match &fe.c_gs {
        Some(q) => cx.checked(q, Unit::Farad, "c_gs", ">= 0", nonnegative)?,
        None => 11.8e-12,
    };
    let c_gd = match &fe.c_gd {
        Some(q) => cx.checked(q, Unit::Farad, "c_gd", ">= 0", nonnegative)?,
        None => 1.2e-12,
    };
    let mode = match fe.input_cap.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
        None | Some(("ideal-bootstrap", _)) => InputCapMode::IdealBootstrap,
        Some(("cascode", _)) => InputCapMode::Cascode,
        Some(("constant-current-cascode", _)) => InputCapMode::ConstantCurrentCascode,
        Some(("single-stage", span)) => {
            let a_v = fe.a_v.as_ref().ok_or_else(|| cx.error(span, "single-stage input needs `a_v`"))?;
            if !(*a_v.get_ref() > 0.0) {
                return Err(cx.error(a_v.span(), "a_v must be > 0"));
            }
            InputCapMode::SingleStage { gain: *a_v.get_ref() }
        }
        Some((other, span)) => return Err(cx.error(span, format!("unknown input_cap mode `{other}`"))),
    };
    if let (Some(a_v), false) = (&fe.a_v, matches!(mode, InputCapMode::SingleStage { .. })) {
        return Err(cx.error(a_v.span(), "`a_v` only applies to input_cap = \"single-stage\""));
    }
    let white = match &fe.jfet_noise {
        Some(q) => cx.checked(q, Unit::VoltPerRootHertz, "jfet_noise", ">= 0", nonnegative)?,
        None => DEFAULT_JFET_NOISE,
    };
    let mut jfet_noise = JfetNoise { white, flicker: None };
    match (&fe.jfet_flicker, &fe.flicker_pivot) {
        (Some(d), Some(p)) => {
            let density = cx.checked(d, Unit::VoltPerRootHertz, "jfet_flicker", ">= 0", nonnegative)?;
            let pivot = cx.checked(p, Unit::Hertz, "flicker_pivot", "> 0", positive)?;
            let exponent = fe.flicker_exponent.as_ref().map(|e| *e.get_ref()).unwrap_or(1.0);
            jfet_noise.flicker = Some(NoiseSource::flicker_voltage(density, pivot, exponent).map_err(|e| {
                let span = fe.flicker_exponent.as_ref().map(|e| e.span()).unwrap_or(d.span());
                cx.error(span, e.to_string())
            })?);
        }
        (Some(q), None) | (None, Some(q)) => {
            return Err(cx.error(q.span(), "`jfet_flicker` and `flicker_pivot` must be given together"))
        }
        (None, None) => {
            if let Some(e) = &fe.flicker_exponent {
                return Err(cx.error(e.span(), "`flicker_exponent` needs `jfet_flicker`"));
            }
        }
    }
    let gate_leak = match &fe.gate_leak {
        Some(q) => cx.checked(q, Unit::Ampere, "gate_leak", ">= 0", nonnegative)?,
        None => 0.0,
    };
    let temperature = match &fe.temperature {
        Some(q) => cx.checked(q, Unit::Kelvin, "temperature", "> 0", positive)?,
        None => default_t,
    };
    Ok(FrontEndConfig {
        ecm: EcmModel { c_m, e_el, c_tilde: 0.0 },
        bias,
        input_cap: InputCapModel { mode, c_gs, c_gd },
        jfet_noise,
        gate_leak,
        temperature,
    })
}

fn servo(cx: &Ctx, raw: &Spanned<RawServo>) -> Result<ServoRequest> {
    let s = raw.get_ref();
    let g_opto = cx.checked(&s.g_opto, Unit::AmperePerVolt, "g_opto", "> 0", positive)?;
    let c_node = cx.checked(&s.c_node, Unit::Farad, "c_node", "> 0", positive)?;
    let a_pre = match &s.a_pre {
        Some(a) if *a.get_ref() > 0.0 => *a.get_ref(),
        Some(a) => return Err(cx.error(a.span(), "a_pre must be > 0")),
        None => 1.0,
    };
    let target_hpf =
        cx.checked(&s.target_hpf, Unit::Hertz, "target_hpf", "within 1..100 Hz", |v| (1.0..=100.0).contains(&v))?;
    let target_pm = match &s.target_pm {
        Some(q) => cx.checked(q, Unit::Degree, "target_pm", "within 30..90 deg", |v| (30.0..=90.0).contains(&v))?,
        None => DEFAULT_PHASE_MARGIN,
    };
    let pole_ratio = match &s.pole_ratio {
        Some(r) if *r.get_ref() > 1.0 => *r.get_ref(),
        Some(r) => return Err(cx.error(r.span(), "pole_ratio must be > 1")),
        None => DEFAULT_POLE_RATIO,
    };
    let plant = ServoPlant::new(g_opto, c_node, a_pre).map_err(|e| cx.error(raw.span(), e.to_string()))?;
    Ok(ServoRequest { plant, target_hpf, target_pm, pole_ratio })
}
