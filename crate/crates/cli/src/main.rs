use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use transversal_core::config::{load_config, load_sweep, Config};
use transversal_core::error_model::{fit_error_model, read_fit_csv, FitFixed};
use transversal_core::optimizer::{optimize, sensitivity_run, Axis, SweepSpec};
use transversal_core::report::{breakdown_rows, emit_layouts, render_markdown, write_csv};
use transversal_core::shor::estimate;
use transversal_core::Error;

/// Resource estimates for factoring on a transversal-gate neutral-atom
/// architecture.
#[derive(Parser)]
#[command(name = "tresest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one configuration and print a markdown report.
    Estimate {
        config: PathBuf,
        /// Write the phase breakdown CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write one layout CSV per gadget into this directory.
        #[arg(long)]
        emit_layouts: Option<PathBuf>,
    },
    /// Pairwise coordinate descent over the sweep grids.
    Sweep {
        config: PathBuf,
        /// TOML file with a [sweep] section; defaults to the config's own.
        spec: Option<PathBuf>,
        /// Trace CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Densify the grids around the optimum and descend again.
        #[arg(long)]
        grid_refine: bool,
    },
    /// Re-optimize along one physical axis.
    Sensitivity {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values in SI units.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        grid: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with a [sweep] section.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Fit the logical error model to decoder data.
    Fit {
        /// CSV with columns d,x,p_L,sigma.
        data: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Parse(_) | Error::Io(_) => 2,
            Error::Infeasible(_) => 3,
            Error::Domain(_) | Error::Underdetermined(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn sweep_spec(config: &Config, spec: Option<&Path>) -> Result<SweepSpec, Failure> {
    Ok(match spec {
        Some(p) => load_sweep(p)?,
        None => config.sweep.clone().unwrap_or_default(),
    })
}

fn violations_failure(violations: &[String]) -> Failure {
    Failure {
        code: 3,
        message: format!("constraint violations:\n  {}", violations.join("\n  ")),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Estimate {
            config,
            csv,
            emit_layouts: layouts,
        } => {
            let cfg = load_config(&config)?;
            let report = estimate(&cfg.scenario)?;
            print!("{}", render_markdown(&report));
            if let Some(path) = csv {
                write_csv(create(&path)?, &breakdown_rows(&report))?;
            }
            if let Some(dir) = layouts {
                for p in emit_layouts(&cfg.scenario, &report, &dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            if !report.feasible() {
                return Err(violations_failure(&report.violations));
            }
        }
        Command::Sweep {
            config,
            spec,
            out,
            grid_refine,
        } => {
            let cfg = load_config(&config)?;
            let spec = sweep_spec(&cfg, spec.as_deref())?;
            let result = optimize(&spec, &cfg.scenario, grid_refine)?;
            write_csv(create(&out)?, &result.trace)?;
            println!(
                "best {:?} after {} evaluations, objective {:.6e}\n",
                result.best.point, result.evaluations, result.best.objective
            );
            if let Some(r) = &result.best.report {
                print!("{}", render_markdown(r));
            }
        }
        Command::Sensitivity {
            config,
            axis,
            grid,
            out,
            spec,
        } => {
            let cfg = load_config(&config)?;
            let axis: Axis = axis.parse()?;
            let spec = sweep_spec(&cfg, spec.as_deref())?;
            let rows = sensitivity_run(axis, &grid, &cfg.scenario, &spec)?;
            write_csv(create(&out)?, &rows)?;
            for r in &rows {
                println!(
                    "{axis}={:<12} volume={:.4e} runtime_s={:.4e} qubits={} feasible={}",
                    r.value, r.spacetime_volume, r.runtime_s, r.physical_qubits, r.feasible
                );
            }
        }
        Command::Fit {
            data,
            c,
            lambda,
            alpha,
        } => {
            let file =
                File::open(&data).map_err(|e| Error::Io(format!("{}: {e}", data.display())))?;
            let points = read_fit_csv(file)?;
            let fit = fit_error_model(&points, &FitFixed { c, lambda, alpha })?;
            println!("C = {:.9}", fit.params.c);
            println!("Lambda = {:.9}", fit.params.lambda);
            println!("alpha = {:.9}", fit.params.alpha);
            println!("rss = {:.6e}", fit.rss);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
