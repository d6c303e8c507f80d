//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration and input errors, 3 when the
//! numerics fail.

mod config;
mod output;

pub use config::{
    defaults_reference, parse_config, parse_config_str, preset, ExperimentConfig, PRESETS,
};
pub use output::{errors_csv, events_csv, read_errors, summary, write_run, ERRORS_HEADER};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fields::{save_cell_field, FieldFormat};
use crate::simulation::{run_ensemble, rcr, Candidate};

#[derive(Debug, Parser)]
#[command(name = "mrcmflow", version, about = "Two-phase flow with multiscale basis reuse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment against a fine reference and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory, overriding output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the configured permeability field.
    GenerateField {
        config: PathBuf,
        /// Destination; `.vtk` selects VTK, anything else a plain matrix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative cost reduction of basis reuse, in percent.
    Rcr {
        #[arg(long)]
        nhat: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        te: usize,
        #[arg(long)]
        tm: usize,
        /// Also print both cost estimates for this cost per basis function.
        #[arg(long)]
        cbf: Option<f64>,
    },
    /// Step-by-step difference of the error curves of two runs.
    Compare { run_a: PathBuf, run_b: PathBuf },
    /// Print every configuration key with its default value.
    Defaults {
        #[arg(long)]
        preset: Option<String>,
    },
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Entry point of the `mrcmflow` binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = std::env::var("MRCMFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, in which case it stays as is.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            run_experiment(&cfg, &dir)
        }
        Command::GenerateField { config, out } => {
            let cfg = parse_config(&config)?;
            let path = out.unwrap_or_else(|| cfg.output.dir.join("permeability.vtk"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let k = cfg.permeability()?;
            save_cell_field(&path, &k, FieldFormat::from_path(&path), "permeability")?;
            println!("{} ({} x {}, contrast {:.3e})", path.display(), k.grid.nx, k.grid.ny, k.max() / k.min());
            Ok(())
        }
        Command::Rcr { nhat, n, te, tm, cbf } => {
            let model = crate::simulation::CostModel::new(nhat, n, te, tm)?;
            println!("{:.2}", rcr(nhat, n, te, tm)?);
            if let Some(c) = cbf {
                let (a, b) = model.cost_estimates(c);
                println!("cost rebuilding every step: {a}");
                println!("cost with reuse: {b}");
            }
            Ok(())
        }
        Command::Compare { run_a, run_b } => {
            let a = read_errors(&run_a.join("errors.csv"))?;
            let b = read_errors(&run_b.join("errors.csv"))?;
            println!("step,flux_err_a,flux_err_b,flux_diff,sat_err_a,sat_err_b,sat_diff");
            let (mut worst_flux, mut worst_sat) = (0.0f64, 0.0f64);
            for (x, y) in a.iter().zip(&b) {
                if x.0 != y.0 {
                    return Err(Error::Config(format!("runs are not aligned at step {} / {}", x.0, y.0)));
                }
                let (df, ds) = (y.1 - x.1, y.2 - x.2);
                worst_flux = worst_flux.max(df.abs());
                worst_sat = worst_sat.max(ds.abs());
                println!("{},{:e},{:e},{:e},{:e},{:e},{:e}", x.0, x.1, y.1, df, x.2, y.2, ds);
            }
            eprintln!(
                "{} common steps ({} vs {}); max |flux diff| {worst_flux:.3e}, max |sat diff| {worst_sat:.3e}",
                a.len().min(b.len()),
                a.len(),
                b.len()
            );
            Ok(())
        }
        Command::Defaults { preset } => {
            print!("{}", defaults_reference(preset.as_deref())?);
            Ok(())
        }
    }
}

/// Run a configuration (with its fine reference) and write all outputs to `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &std::path::Path) -> Result<()> {
    let problem = cfg.problem()?;
    let candidate = cfg.candidate()?;
    let splitting = cfg.splitting();
    let format = cfg.snapshot_format();
    let only_reference = candidate.method == crate::simulation::Method::FineReference;
    let candidates = if only_reference { vec![candidate] } else { vec![Candidate::fine(), candidate] };
    let records = run_ensemble(&problem, &candidates, &splitting)?;
    let (reference, record) = (&records[0], records.last().expect("one record per candidate"));
    write_run(dir, record, reference, format)?;
    let last = record.steps.last().expect("at least one step");
    println!(
        "{}: {} elliptic solves, {} basis builds, final flux error {:.3e}, saturation error {:.3e}",
        record.method.name(),
        record.t_e(),
        record.rebuilds(),
        last.flux_err,
        last.sat_err
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_separate_inputs_from_numerics() {
        assert_eq!(exit_code(&Error::Config("bad".into())), 2);
        assert_eq!(exit_code(&Error::Cfl { cell: 3, value: 1.5 }), 3);
        assert_eq!(exit_code(&Error::Cfl { cell: 0, value: -0.1 }.at_step(7)), 3);
        assert_eq!(exit_code(&Error::Config("bad".into()).at_step(7)), 2);
    }
}
