use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use capnoise::noise::PhysicalConstants;
use capnoise::report::sci;
use capnoise::selftest::{render, run_checks};
use capnoise::weighting::{a_weight, a_weight_db};
use capnoise::{parse_scenario, run_scenario, Error};

#[derive(Parser)]
#[command(name = "capnoise", version, about = "Self-noise simulator for capacitive sensor front ends")]
struct Cli {
    /// Override the grid resolution (points per decade).
    #[arg(long, global = true, value_name = "N")]
    grid_ppd: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file and write its reports.
    Run {
        scenario: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Recompute the built-in reference numbers.
    Selftest {
        /// Scale Boltzmann's constant (debug aid; the kT/C checks should then fail).
        #[arg(long, hide = true, value_name = "FACTOR")]
        perturb_kb: Option<f64>,
    },
    /// Print the A-weighting factor at one frequency.
    Aweight {
        #[arg(long, value_name = "HZ")]
        freq: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Design(_) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { scenario, out } => {
            let mut s = parse_scenario(&scenario)?;
            if let Some(ppd) = cli.grid_ppd {
                if !(4..=4096).contains(&ppd) {
                    return Err(Error::Domain(format!("--grid-ppd must be within 4..4096, got {ppd}")));
                }
                s.points_per_decade = ppd;
            }
            let bundle = run_scenario(&s, &out)?;
            for f in &bundle.frontends {
                let spl = f.spl.map(|v| format!(", {v} dBA SPL")).unwrap_or_default();
                println!("{}: {} V rms A-weighted{spl}", f.label, sci(f.a_weighted_rms));
            }
            for p in &bundle.files {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Selftest { perturb_kb } => {
            let mut k = PhysicalConstants::CODATA;
            if let Some(factor) = perturb_kb {
                k.k_b *= factor;
            }
            let checks = run_checks(&k)?;
            print!("{}", render(&checks));
            if checks.iter().all(|c| c.passed()) {
                Ok(())
            } else {
                Err(Error::Accuracy("self-test failed".into()))
            }
        }
        Command::Aweight { freq } => {
            if !(freq.is_finite() && freq > 0.0) {
                return Err(Error::Domain(format!("frequency must be > 0 Hz, got {freq}")));
            }
            println!("{freq} Hz: {:.6} ({:+.3} dB)", a_weight(freq), a_weight_db(freq));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
