use std::path::PathBuf;
use std::process::ExitCode;

use cara_cli::{render_text, run, Command, Options, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cara", version, about = "Norm-one projections and holomorphic retractions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Solver and comparison tolerance
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = Options::default().tol)]
    tol: f64,

    /// Seed for every sampled check
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sample count for sampled checks
    #[arg(long, global = true, default_value_t = Options::default().samples)]
    samples: usize,

    /// Highest Taylor order inspected by the linearity check
    #[arg(long, global = true, default_value_t = Options::default().max_order)]
    max_order: u32,

    /// Newton-step budget for the convex solver
    #[arg(long, global = true, default_value_t = Options::default().budget)]
    budget: usize,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Carathéodory metric of a vector: {"norm", "vector", "point"?}
    Metric { input: PathBuf },
    /// Decide whether L is an isometry: {"L", "source_norm", "target_norm"}
    CheckIsometry { input: PathBuf },
    /// Construct a norm-one projection onto the range of an isometry
    FindProjection { input: PathBuf },
    /// Minimal norm of a projection onto a subspace: {"range_basis", "norm"} or a problem file
    MinProjectionNorm { input: PathBuf },
    /// Build and verify a retraction onto f(ball): {"f", "source_norm", "target_norm"}
    Retract { input: PathBuf },
    /// Certify that the plane {(x, y, x + y)} in sup(3) has no norm-one projection
    Counterexample,
    /// Conjugate a polydisk map to the origin and build its retraction: {"f", "a"}
    CorollaryDemo { input: Option<PathBuf> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, input) = match cli.command {
        Cmd::Metric { input } => (Command::Metric, Some(input)),
        Cmd::CheckIsometry { input } => (Command::CheckIsometry, Some(input)),
        Cmd::FindProjection { input } => (Command::FindProjection, Some(input)),
        Cmd::MinProjectionNorm { input } => (Command::MinProjectionNorm, Some(input)),
        Cmd::Retract { input } => (Command::Retract, Some(input)),
        Cmd::Counterexample => (Command::Counterexample, None),
        Cmd::CorollaryDemo { input } => (Command::CorollaryDemo, input),
    };
    let scenario = Scenario {
        command,
        input,
        options: Options {
            tol: cli.tol,
            seed: cli.seed,
            samples: cli.samples,
            max_order: cli.max_order,
            budget: cli.budget,
        },
    };
    let output = run(&scenario);
    let doc = output.to_json();
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n",
        Format::Text => render_text(&doc),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(output.exit_code() as u8)
}
