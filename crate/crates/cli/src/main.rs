//! `kummerlab` command-line tool.
//!
//! Exit codes: 0 all checks pass, 1 a statistical or identity check failed,
//! 2 usage or configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    /// Wraps a library error raised by `op`.
    pub fn core(op: &str) -> impl Fn(kummerlab::Error) -> CliError + '_ {
        move |e| CliError {
            code: if e.is_usage() { 2 } else { 3 },
            message: format!("{op}: {e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kummerlab", version, about = "Kummer-law maps: evaluation, sampling and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "KUMMERLAB_THREADS")]
    threads: Option<usize>,

    /// Relative tolerance of every quadrature.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Balance,
    Corollary,
    Limits,
    Identities,
    Lattice,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate U(a, b, z) and print it with its error bound.
    EvalU {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
    },
    /// Draw iid samples from a law into a CSV file, one value per line.
    Sample {
        /// Law spec, e.g. `kummer:1,2,3,1` or `gamma:2,4`.
        #[arg(long)]
        law: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form transform E[W^s (1+alpha W)^-t e^-zW] of a Kummer law.
    Transform {
        /// Kummer law spec `kummer:alpha,a,b,c`.
        #[arg(long)]
        law: String,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        /// Also report a Monte Carlo estimate from this many samples.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a verification suite from a JSON config and write the reports.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        config: PathBuf,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Lattice suite only: write the trajectory as CSV `t,n,x`.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    }
    let qcfg = kummerlab::specfun::QuadratureConfig::new(cli.rel_tol, 4096)
        .map_err(CliError::core("--rel-tol"))?;
    match cli.command {
        Command::EvalU { a, b, z } => commands::eval_u(a, b, z, &qcfg),
        Command::Sample { law, n, seed, out } => commands::sample(&law, n, seed, &out, &qcfg),
        Command::Transform { law, s, t, z, mc, seed } => commands::transform(&law, s, t, z, mc, seed, &qcfg),
        Command::Verify { suite, config, out, seed, trajectory } => {
            commands::verify(suite, &config, out.as_deref(), seed, trajectory.as_deref(), &qcfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
