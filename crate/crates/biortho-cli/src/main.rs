use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use biortho::harness::{self, RunConfig, SweepAxis, CALIBRATION_ENV};
use biortho::sai::{calibrate_constants, CalibrationGrid};
use biortho::{Error, PrecisionContext};

#[derive(Parser)]
#[command(name = "biortho", version, about = "Biorthogonal families to real exponentials: oracle, bounds and construction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (sectioned key=value file).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for CSV and SVG files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long, global = true, value_name = "N")]
    digits: Option<u32>,
    /// Residual target for the precision ladder.
    #[arg(long, global = true, value_name = "X")]
    tolerance: Option<f64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Calibration record.
    #[arg(long, global = true, value_name = "PATH", env = CALIBRATION_ENV)]
    calibration: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the bound chain on every (m, T) cell of the config.
    Verify,
    /// Vary one parameter and tabulate the chain.
    Sweep {
        /// One of T, scale, N, m.
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Calibrate the universal constants and write the record.
    Calibrate,
    /// Compare exact eigenvalue counts with the counting bounds.
    CountingCheck,
    /// Distances from the Gram oracle.
    Distance,
    /// Build the explicit biorthogonal family.
    Construct,
}

fn load(common: &Common) -> biortho::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::read_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = common.digits {
        cfg.precision = PrecisionContext::new(d, cfg.precision.residual_target, cfg.precision.max_escalations, cfg.precision.escalation_factor)?;
    }
    if let Some(t) = common.tolerance {
        cfg.precision = PrecisionContext::new(cfg.precision.working_digits, t, cfg.precision.max_escalations, cfg.precision.escalation_factor)?;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = Some(o.clone());
    }
    if common.plot {
        cfg.plot = true;
    }
    if let Some(c) = &common.calibration {
        cfg.calibration = Some(c.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &harness::BoundReport) {
    println!("{:>4} {:>12} {:>20} {:>14} {:>14} {:>14} {:>14}  pass", "m", "T", "regime", "ln L", "ln 1/d", "ln sai", "ln sqrt B*");
    for r in &report.rows {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        println!(
            "{:>4} {:>12} {:>20} {:>14.6} {:>14.6} {:>14} {:>14}  {}",
            r.m,
            r.t,
            r.regime,
            r.ln_lower,
            r.ln_inverse_distance,
            opt(r.ln_sai_norm),
            opt(r.ln_b_star),
            r.pass
        );
    }
}

fn run(cli: &Cli) -> biortho::Result<bool> {
    let cfg = load(&cli.common)?;
    match &cli.command {
        Command::Verify => {
            let report = harness::run_verify(&cfg)?;
            print_report(&report);
            for (m, t) in report.failures() {
                eprintln!("chain violated at m={m}, T={t}");
            }
            Ok(report.all_pass())
        }
        Command::Sweep { axis, values } => {
            let report = harness::run_sweep(&cfg, SweepAxis::parse(axis)?, values)?;
            print_report(&report);
            Ok(report.all_pass())
        }
        Command::Calibrate => {
            let cal = calibrate_constants(&CalibrationGrid::default(), &cfg.precision)?;
            let path = match (&cli.common.calibration, &cfg.out_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(d)) => {
                    std::fs::create_dir_all(d)?;
                    d.join("calibration.ini")
                }
                (None, None) => PathBuf::from("calibration.ini"),
            };
            cal.write_file(&path)?;
            print!("{}", cal.to_text());
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::CountingCheck => {
            let v = harness::run_counting_check(&cfg)?;
            for x in &v {
                eprintln!("violation: n={} rho={} exact={} {}={}", x.n, x.rho, x.exact, x.branch, x.bound);
            }
            println!("{} violations", v.len());
            Ok(v.is_empty())
        }
        Command::Distance => {
            let rows = harness::run_distance(&cfg)?;
            println!("{:>4} {:>12} {:>8} {:>24} {:>12}", "m", "T", "digits", "ln d", "residual");
            for (t, d) in rows {
                println!("{:>4} {:>12} {:>8} {:>24.16e} {:>12.3e}", d.m, t, d.precision_used, d.d.ln_f64(), d.residual);
            }
            Ok(true)
        }
        Command::Construct => {
            let fams = harness::run_construct(&cfg)?;
            let mut ok = true;
            for fam in &fams {
                for (i, m) in fam.indices.iter().enumerate() {
                    let worst = fam.residuals[i].iter().copied().fold(0.0, f64::max);
                    ok &= worst <= fam.tolerance;
                    println!("T={} m={m} ln||sigma||={:.12} max residual={worst:.3e}", fam.horizon_t, fam.norms[i].ln_f64());
                }
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match &e {
                Error::Cell { m, t, source } => eprintln!("error in cell (m={m}, T={t}): {source}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(2)
        }
    }
}
