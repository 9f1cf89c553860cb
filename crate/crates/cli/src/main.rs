use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qic_core::runner::{
    fit_run, reproduce, run_ergodize, run_lanczos, run_sweep, Figure, ReproduceOptions, RunConfig, Status,
};
use qic_core::{Error, Result};

/// Lyapunov and ergodization times of the quantum Ising chain.
#[derive(Parser)]
#[command(name = "qic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lanczos coefficients and the T_lambda fit at the configured point.
    Lanczos {
        #[arg(long)]
        config: PathBuf,
        /// Also write the Hamiltonian and observables as Pauli-term text.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Excursion statistics at the configured point.
    Ergodize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full parameter sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Power-law fits over a sweep directory; writes fit_report.json there.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Figure and table data from finished SRN and LRN sweeps.
    Reproduce {
        /// fig1 | fig2 | fig4 | table_pwlaw
        #[arg(long)]
        what: Figure,
        #[arg(long, default_value = "runs/srn")]
        srn: PathBuf,
        #[arg(long, default_value = "runs/lrn")]
        lrn: PathBuf,
        #[arg(long, default_value = "runs/reproduce")]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::from_file(path)?.with_env_overrides()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Lanczos { config, dump_operator } => {
            for p in run_lanczos(&load(&config)?, dump_operator)? {
                println!("{}", p.display());
            }
        }
        Command::Ergodize { config } => {
            println!("{}", run_ergodize(&load(&config)?)?.display());
        }
        Command::Sweep { config, jobs } => {
            let m = run_sweep(&load(&config)?, jobs)?;
            let mut bad = 0;
            for p in &m.points {
                let statuses = std::iter::once(p.lanczos_status).chain(p.ergodize.iter().map(|e| e.status));
                for s in statuses.filter(|&s| s != Status::Ok) {
                    bad += 1;
                    eprintln!("{} = {}, {:?}: {}", m.parameter, p.x, p.observable, s.as_str());
                }
            }
            println!(
                "{} tasks, {} not ok, {:.1} s, output in {}",
                m.points.len(),
                bad,
                m.total_runtime_s,
                m.output_dir().display()
            );
        }
        Command::Fit { input } => {
            let r = fit_run(&input)?;
            for op in r.operators.iter().chain(std::iter::once(&r.family)) {
                let s = |f: &qic_core::runner::fit::SeriesFit| f.slope().map_or("-".into(), |v| format!("{v:.3}"));
                println!(
                    "{} {}: slope T_lambda {}, TE+ {}, TE- {}",
                    r.class,
                    op.operator,
                    s(&op.t_lambda),
                    s(&op.te_plus),
                    s(&op.te_minus)
                );
            }
        }
        Command::Reproduce { what, srn, lrn, out } => {
            let opts = ReproduceOptions {
                srn_dir: srn,
                lrn_dir: lrn,
                out_dir: out,
            };
            for p in reproduce(what, &opts)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qic: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
