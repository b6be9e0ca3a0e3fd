use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use fockbundle::suites::Tolerances;
use fockbundle::Exec;
use fockbundle_cli::{read_input, run, CliError, Job, Subcommand};

#[derive(Parser)]
#[command(name = "fockbundle", version, about = "Numerical checks for truncated fermionic Fock spaces over the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Input JSON: a file path, or inline JSON starting with `{`.
    #[arg(long = "in", global = true)]
    input: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override `KEY=VAL`; repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Random CAR checks through the Fock representation.
    CarCheck,
    /// Implementer of a Bogoliubov transformation.
    Implement,
    /// Lie-algebra cocycle of the loop-group extension.
    CocycleLie,
    /// Growth diagnostic for a pair of Lagrangians across cutoffs.
    LagrangianEquiv,
    /// Lifting-gerbe 2-cocycle on a finite nerve.
    Gerbe {
        /// Solve `δb = −c` and fail if the class is obstructed.
        #[arg(long)]
        trivialize: bool,
    },
    /// Dirac eigenbasis along a loop connection.
    Dirac,
    /// Twisted Fock bundle from chart loops.
    Fockbundle {
        /// Untwist with a trivialization of the 2-cocycle.
        #[arg(long)]
        untwist: bool,
    },
}

fn job(cli: &Cli) -> Result<Job, CliError> {
    let subcommand = match &cli.command {
        Command::CarCheck => Subcommand::CarCheck,
        Command::Implement => Subcommand::Implement,
        Command::CocycleLie => Subcommand::CocycleLie,
        Command::LagrangianEquiv => Subcommand::LagrangianEquiv,
        Command::Gerbe { trivialize } => Subcommand::Gerbe { trivialize: *trivialize },
        Command::Dirac => Subcommand::Dirac,
        Command::Fockbundle { untwist } => Subcommand::Fockbundle { untwist: *untwist },
    };
    let mut tolerances = Tolerances::default();
    for spec in &cli.global.tol {
        tolerances.apply_override(spec)?;
    }
    if cli.global.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    Ok(Job {
        subcommand,
        input: read_input(cli.global.input.as_deref())?,
        seed: cli.global.seed,
        tolerances,
        exec: if cli.global.jobs > 1 { Exec::Parallel } else { Exec::Sequential },
    })
}

#[cfg(feature = "parallel")]
fn execute(job: &Job, jobs: usize) -> fockbundle_cli::Outcome {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| run(job)),
        Err(_) => run(job),
    }
}

#[cfg(not(feature = "parallel"))]
fn execute(job: &Job, _jobs: usize) -> fockbundle_cli::Outcome {
    run(job)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (code, report) = match job(&cli) {
        Ok(job) => {
            let outcome = execute(&job, cli.global.jobs);
            (outcome.code, outcome.report)
        }
        Err(e) => (1, e.to_json()),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code as u8)
}
