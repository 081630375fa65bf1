//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Reference values are recomputed here from first principles rather than
//! taken from the library wherever that is possible.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use capnoise::frontend::{cutoff_frequency, divider_ratio, effective_input_capacitance, min_resistance_for_cutoff};
use capnoise::noise::{integrate_power, log_grid, AnalyticTail, Frequency, Spectrum};
use capnoise::servo::{design_lag_lead, stability_grid, verify_stability, PureIntegrator, ServoPlant};
use capnoise::weighting::{a_weight_db, a_weighted_rms, to_dba_spl, Calibration};
use capnoise::{
    gate_noise_spectrum, shot_current_density, thermal_current_density, FrontEndConfig, InputCapMode, InputCapModel,
    JfetNoise,
};

const K_B: f64 = 1.380649e-23;
const Q: f64 = 1.602176634e-19;
const C_M: f64 = 12e-12;
const T: f64 = 300.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn quiet(mut cfg: FrontEndConfig) -> FrontEndConfig {
    cfg.jfet_noise = JfetNoise::zero();
    cfg
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let oracle = K_B * T / C_M;
    let grid = log_grid(1e-4, 1e8, 64).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for r in [1e9, 10e9, 100e9] {
        let cfg = quiet(FrontEndConfig::resistor_biased(C_M, r).unwrap());
        let s = gate_noise_spectrum(&cfg, &grid).unwrap();
        let v2 = integrate_power(&s, Some(AnalyticTail::FirstOrderLowPass)).unwrap();
        worst = worst.max((v2 / 3.452e-10 - 1.0).abs()).max((v2 / oracle - 1.0).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-3 && elapsed < 1.0,
        format!("kT/C within {:.1e} relative for 1/10/100 GOhm in {elapsed:.3} s", worst),
    )
}

fn ac2() -> Outcome {
    let f1 = cutoff_frequency(1e9, C_M).unwrap().hz();
    let f10 = cutoff_frequency(10e9, C_M).unwrap().hz();
    let r20 = min_resistance_for_cutoff(Frequency::new(20.0).unwrap(), C_M).unwrap();
    let oracle = |r: f64| 1.0 / (2.0 * PI * r * C_M);
    let ok = (f1 - 13.26).abs() < 0.005
        && (f10 - 1.33).abs() < 0.005
        && (r20 / 1e9 - 0.663).abs() < 0.0005
        && (f1 / oracle(1e9) - 1.0).abs() < 1e-12;
    ensure(ok, format!("cutoffs {f1:.2} Hz, {f10:.2} Hz; 20 Hz needs {:.3} GOhm", r20 / 1e9))
}

fn two_digits(x: f64) -> String {
    format!("{x:.1e}")
}

fn ac3() -> Outcome {
    let i1 = thermal_current_density(1e9, T).unwrap() * 1e15;
    let i10 = thermal_current_density(10e9, T).unwrap() * 1e15;
    let shot = shot_current_density(1e-12).unwrap() * 1e15;
    // photocurrent whose shot noise is 5 pA/rtHz, JFET silent
    let current = 5e-12f64.powi(2) / (2.0 * Q);
    let cfg = quiet(FrontEndConfig::photocurrent_biased(C_M, current).unwrap());
    let v = gate_noise_spectrum(&cfg, &[1e3]).unwrap().values()[0] * 1e6;
    let ok = two_digits(i1) == two_digits(4.1)
        && two_digits(i10) == two_digits(1.3)
        && two_digits(shot) == two_digits(0.57)
        && two_digits(v) == two_digits(66.0)
        && (i1 / ((4.0 * K_B * T / 1e9).sqrt() * 1e15) - 1.0).abs() < 1e-12;
    ensure(ok, format!("{i1:.2}, {i10:.2}, {shot:.3} fA/rtHz; {v:.1} uV/rtHz"))
}

fn ac4() -> Outcome {
    let (c_gs, c_gd) = (11.8e-12, 1.2e-12);
    let cases = [
        (InputCapMode::SingleStage { gain: 10.0 }, 25.0, Some((0.32, -9.8))),
        (InputCapMode::Cascode, 13.0, Some((0.48, -6.4))),
        (InputCapMode::ConstantCurrentCascode, 1.2, Some((0.91, -0.8))),
        (InputCapMode::IdealBootstrap, 0.0, None),
    ];
    let mut seen = Vec::new();
    let mut ok = true;
    for (mode, pf, div) in cases {
        let c_in = effective_input_capacitance(&InputCapModel::new(mode, c_gs, c_gd).unwrap());
        ok &= (c_in * 1e12 - pf).abs() < 1e-9;
        seen.push(format!("{:.1}", c_in * 1e12));
        if let Some((ratio, db)) = div {
            let d = divider_ratio(C_M, c_in).unwrap();
            let oracle = C_M / (C_M + c_in);
            ok &= (d.ratio - ratio).abs() <= 0.01 && (d.db - db).abs() <= 0.05 && (d.ratio - oracle).abs() < 1e-15;
        }
    }
    ensure(ok, format!("C_in = {} pF, dividers within 0.01 / 0.05 dB", seen.join(" / ")))
}

fn ac5() -> Outcome {
    let grid = log_grid(10e-3, 100e3, 64).unwrap();
    let rs = [1e9, 10e9, 100e9];
    let spectra: Vec<Spectrum> = rs
        .iter()
        .map(|&r| gate_noise_spectrum(&quiet(FrontEndConfig::resistor_biased(C_M, r).unwrap()), &grid).unwrap())
        .collect();
    let fc1 = 1.0 / (2.0 * PI * 1e9 * C_M);
    let mut ordered = true;
    for (i, &f) in grid.iter().enumerate() {
        if f > fc1 {
            ordered &=
                spectra[0].values()[i] > spectra[1].values()[i] && spectra[1].values()[i] > spectra[2].values()[i];
        }
    }
    let mut worst = 0.0f64;
    for (s, &r) in spectra.iter().zip(&rs) {
        let fc = 1.0 / (2.0 * PI * r * C_M);
        let slope = 20.0 * (s.interpolate(100.0 * fc).unwrap() / s.interpolate(10.0 * fc).unwrap()).log10();
        worst = worst.max((slope + 20.0).abs());
    }
    ensure(
        ordered && worst <= 0.2,
        format!("larger R lower above {fc1:.1} Hz: {ordered}; slopes within {worst:.3} dB of -20 dB/dec"),
    )
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let plant = ServoPlant::new(1e-9, 12e-12, 1.0).unwrap();
    let (mut dfc, mut dpm) = (0.0f64, 0.0f64);
    for hpf in [10.0, 15.0, 20.0] {
        for pm in [45.0, 60.0, 75.0] {
            let c = design_lag_lead(&plant, hpf, pm).map_err(|e| e.to_string())?;
            let rep = verify_stability(&plant, &c, &stability_grid(hpf).unwrap()).map_err(|e| e.to_string())?;
            dfc = dfc.max((rep.crossover / hpf - 1.0).abs());
            dpm = dpm.max((rep.phase_margin - pm).abs());
        }
    }
    let rep = verify_stability(&plant, &PureIntegrator { unity_hz: 15.0 }, &stability_grid(15.0).unwrap()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    ensure(
        dfc <= 0.02 && dpm <= 1.0 && rep.phase_margin <= 5.0 && !rep.stable && elapsed < 1.0,
        format!(
            "9 designs: crossover within {:.2e}, PM within {dpm:.2e} deg; integrator PM {:.2} deg stable={}; {elapsed:.3} s",
            dfc, rep.phase_margin, rep.stable
        ),
    )
}

fn ac7() -> Outcome {
    let freqs: Vec<f64> = (0..200).map(|i| 10.0 * 2000f64.powf(i as f64 / 199.0)).collect();
    let r = 1e9;
    let res = FrontEndConfig::resistor_biased(C_M, r).unwrap().bias_network().unwrap();
    let i_bias = 1e-12;
    let pds = FrontEndConfig::photocurrent_biased(C_M, i_bias).unwrap().bias_network().unwrap();
    let mut worst = 0.0f64;
    for &f in &freqs {
        let w = 2.0 * PI * f;
        let oracle_r = (4.0 * K_B * T * r).sqrt() / (1.0 + (w * r * C_M).powi(2)).sqrt();
        let oracle_p = (2.0 * Q * i_bias).sqrt() / (w * C_M);
        let hz = Frequency::new(f).unwrap();
        worst = worst.max((res.noise_solve(hz).unwrap() / oracle_r - 1.0).abs());
        worst = worst.max((pds.noise_solve(hz).unwrap() / oracle_p - 1.0).abs());
    }
    ensure(worst <= 1e-9, format!("200 points, worst relative deviation {worst:.1e}"))
}

/// Composite Simpson rule on a uniform linear grid.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// A-weighting from the analog pole frequencies, normalized at 1 kHz.
fn oracle_a_weight(f: f64) -> f64 {
    let ra = |f: f64| {
        let f2 = f * f;
        12194.217f64.powi(2) * f2 * f2
            / ((f2 + 20.598997f64.powi(2))
                * ((f2 + 107.65265f64.powi(2)) * (f2 + 737.86223f64.powi(2))).sqrt()
                * (f2 + 12194.217f64.powi(2)))
    };
    ra(f) / ra(1000.0)
}

fn ac8() -> Outcome {
    let (w1k, w100, w10k) = (a_weight_db(1e3), a_weight_db(100.0), a_weight_db(10e3));
    let points = w1k.abs() <= 0.01 && (w100 + 19.1).abs() <= 0.1 && (w10k + 2.5).abs() <= 0.1;
    // white 1 uV/rtHz over 20 Hz .. 20 kHz
    let grid = log_grid(20.0, 20e3, 64).unwrap();
    let flat = Spectrum::from_fn(&grid, capnoise::DensityUnit::VoltsPerRootHz, |_| 1e-6).unwrap();
    let lib = a_weighted_rms(&flat, (20.0, 20e3)).unwrap();
    let oracle = (simpson(|f| (1e-6 * oracle_a_weight(f)).powi(2), 20.0, 20e3, 200_000)).sqrt();
    let db = 20.0 * (lib / oracle).log10();
    ensure(
        points && db.abs() < 0.01,
        format!("{w1k:+.3} / {w100:+.2} / {w10k:+.2} dB; band rms {db:+.4} dB from dense quadrature"),
    )
}

fn ac9() -> Outcome {
    let grid = log_grid(10.0, 20e3, 64).unwrap();
    let res = FrontEndConfig::resistor_biased(C_M, 1e9).unwrap();
    let pds = FrontEndConfig::photocurrent_biased(C_M, 1e-12).unwrap();
    assert_eq!(res.jfet_noise, pds.jfet_noise);
    let sr = gate_noise_spectrum(&res, &grid).unwrap();
    let sp = gate_noise_spectrum(&pds, &grid).unwrap();
    let dominated = sp.values().iter().zip(sr.values()).all(|(p, r)| p <= r);

    let cal = Calibration::new(10e-3).unwrap();
    let band = (20.0, 20e3);
    let dba = |cfg: &FrontEndConfig| {
        capnoise::weighting::self_noise_report(cfg, &cal, band).unwrap().equivalent_spl.db().unwrap()
    };
    let (d_res, d_pds) = (dba(&res), dba(&pds));

    let bg = log_grid(20.0, 20e3, 64).unwrap();
    let one = gate_noise_spectrum(&res, &bg).unwrap();
    let two = one.combine_uncorrelated(&one).unwrap();
    let doubling = 20.0 * (a_weighted_rms(&two, band).unwrap() / a_weighted_rms(&one, band).unwrap()).log10();

    let base = to_dba_spl(1e-6, &cal).unwrap().db().unwrap();
    let scaling_ok = [0.1, 2.0, 31.6, 1e3].iter().all(|&k| {
        let d = to_dba_spl(1e-6 * k, &cal).unwrap().db().unwrap() - base;
        (d - 20.0 * f64::log10(k)).abs() < 1e-9
    });
    ensure(
        dominated && d_pds < d_res && (doubling - 3.0103).abs() < 1e-3 && scaling_ok,
        format!(
            "pointwise dominance {dominated}; {d_pds:.2} < {d_res:.2} dBA; doubling {doubling:+.3} dB; 20log10 scaling {scaling_ok}"
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn ac10() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_capnoise");
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/paper-test1.toml");
    let selftest = Command::new(bin).arg("selftest").output().map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let st = Command::new(bin).arg("run").arg(scenario).arg("--out").arg(&out).output().unwrap();
        if !st.status.success() {
            return Err(format!("run exited with {}", st.status));
        }
        outputs.push(read_dir_sorted(&out));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let identical = outputs[0] == outputs[1] && outputs[0].len() == 5;
    ensure(
        selftest.status.success() && identical && elapsed < 10.0,
        format!(
            "selftest exit {}; {} files byte-identical across runs: {identical}; {elapsed:.2} s",
            selftest.status.code().unwrap_or(-1),
            outputs[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("kT/C independent of R", ac1),
        ("RC cutoffs", ac2),
        ("spot noise densities", ac3),
        ("input capacitance and dividers", ac4),
        ("resistor spectra ordering and slope", ac5),
        ("servo design round trip", ac6),
        ("MNA against closed forms", ac7),
        ("A-weighting", ac8),
        ("photocurrent bias beats resistor", ac9),
        ("selftest and determinism", ac10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(msg) => println!("AC{:<2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("AC{:<2} FAIL  {name}: {msg}", i + 1)
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
