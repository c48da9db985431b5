use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use twochannel::harness::problem_file::{Meta, ProblemFile};
use twochannel::harness::report::Outcome;
use twochannel::harness::{run, tables, write_atomic, RunConfig, ScatterConfig, Stage};
use twochannel::random::random_problem;
use twochannel::scattering::EpsilonLadder;
use twochannel::{Channel, SolverOptions};

/// Effective channel Hamiltonians, spectral checks and on-shell scattering
/// for two-channel problems.
#[derive(Parser, Debug)]
#[command(name = "twochannel", version)]
struct Cli {
    /// Fixed-point tolerance (overrides the problem file).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap (overrides the problem file).
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Certificate parameter δ (overrides the problem file).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Seed for randomized probes and generated instances.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include H_α, H″_α, W_α, X_α and Q₂₁ in the report.
    #[arg(long, global = true)]
    dump_operators: bool,
    /// Directory for tab-separated tables.
    #[arg(long, global = true)]
    tables: Option<PathBuf>,
    /// Restrict emitted tables (iterations, partition, scattering).
    #[arg(long = "table", global = true, requires = "tables")]
    table: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Riccati equation.
    Solve { problem: PathBuf },
    /// Solve, then check the effective channels and eigensystems.
    Verify { problem: PathBuf },
    /// Solve, then compute on-shell scattering amplitudes.
    Scatter {
        problem: PathBuf,
        #[command(flatten)]
        scatter: ScatterArgs,
    },
    /// Every stage.
    All {
        problem: PathBuf,
        #[command(flatten)]
        scatter: ScatterArgs,
    },
    /// Write a random purely discrete problem file.
    Generate {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        /// ‖B₁₂‖₂ / d₀.
        #[arg(long, default_value_t = 0.3)]
        ratio: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LadderUnit {
    /// Multiples of the local grid spacing.
    Grid,
    /// Multiples of the band width.
    Width,
}

#[derive(Args, Debug)]
struct ScatterArgs {
    /// Scattering channel (1 or 2).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    channel: u8,
    /// Decreasing ε multiples, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 2.0, 1.0])]
    eps_ladder: Vec<f64>,
    #[arg(long, value_enum, default_value_t = LadderUnit::Grid)]
    ladder_unit: LadderUnit,
    /// Limit on the on-shell defect relative to max |T|.
    #[arg(long, default_value_t = 1e-3)]
    onshell_tol: f64,
    /// Limit on the unitarity and wave-operator defects.
    #[arg(long, default_value_t = 1e-3)]
    unitarity_tol: f64,
}

impl ScatterArgs {
    fn config(&self, require_continuum: bool) -> ScatterConfig {
        ScatterConfig {
            channel: Channel::from_index(self.channel as usize).expect("validated by clap"),
            ladder: match self.ladder_unit {
                LadderUnit::Grid => EpsilonLadder::GridMultiples(self.eps_ladder.clone()),
                LadderUnit::Width => EpsilonLadder::BandWidthMultiples(self.eps_ladder.clone()),
            },
            onshell_tol: self.onshell_tol,
            unitarity_tol: self.unitarity_tol,
            require_continuum,
        }
    }
}

fn input_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(Outcome::InputError.exit_code() as u8)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            write_atomic(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(cli: &Cli, n1: usize, n2: usize, ratio: f64) -> ExitCode {
    if n1 == 0 || n2 == 0 || !(ratio >= 0.0 && ratio.is_finite()) {
        return input_error("n1 and n2 must be positive and ratio non-negative");
    }
    let seed = cli.seed.unwrap_or(0);
    let problem = random_problem(n1, n2, ratio, seed);
    let meta = Meta {
        seed: Some(seed),
        label: Some(format!("random n1={n1} n2={n2} ratio={ratio}")),
    };
    let file = ProblemFile::from_problem(&problem, Some(&SolverOptions::default()), Some(meta));
    match emit(&cli.out, &file.to_toml()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => input_error(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (problem, stages, scatter) = match &cli.command {
        Command::Generate { n1, n2, ratio } => return generate(&cli, *n1, *n2, *ratio),
        Command::Solve { problem } => (problem, vec![Stage::Solve], ScatterConfig::default()),
        Command::Verify { problem } => (problem, vec![Stage::Verify], ScatterConfig::default()),
        Command::Scatter { problem, scatter } => {
            (problem, vec![Stage::Scatter], scatter.config(true))
        }
        Command::All { problem, scatter } => (
            problem,
            vec![Stage::Solve, Stage::Verify, Stage::Scatter],
            scatter.config(false),
        ),
    };
    let config = RunConfig {
        tol: cli.tol,
        max_iter: cli.max_iter,
        delta: cli.delta,
        seed: cli.seed,
        scatter,
        dump_operators: cli.dump_operators,
        out: cli.out.clone(),
        ..RunConfig::new(problem, stages)
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if cli.out.is_none() {
        print!("{}", report.to_toml());
    }
    if let Some(dir) = &cli.tables {
        if let Err(e) = tables::emit_tables(&report, dir, &cli.table) {
            return input_error(e);
        }
    }
    let summary = &report.summary;
    eprintln!(
        "{}: {:?}{}{}",
        problem.display(),
        summary.outcome,
        if summary.certified {
            ""
        } else {
            " (uncertified)"
        },
        if summary.failures.is_empty() {
            String::new()
        } else {
            format!(" [{}]", summary.failures.join("; "))
        }
    );
    ExitCode::from(summary.outcome.exit_code() as u8)
}
