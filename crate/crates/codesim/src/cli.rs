//! Command-line entry point: one binary wiring comparison, token dumps,
//! corpus generation, and corpus evaluation.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::attacks::{generate_corpus, CorpusConfig};
use crate::frontend;
use crate::harness;
use crate::matcher::{compare_sources, ComparisonResult, DEFAULT_MIN_MATCH};
use crate::pipeline::{build_units, Approach};

const DEFAULT_GENERATOR_SEED: u64 = 2024;
const DEFAULT_PER_LEVEL: usize = 10;

#[derive(Parser)]
#[command(
    name = "codesim",
    version,
    about = "Token-based similarity analysis for MiniJ programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two programs and print the match metrics
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "ext-lla", value_parser = Approach::from_str)]
        approach: Approach,
        /// Shortest token run that counts as a match
        #[arg(long, default_value_t = DEFAULT_MIN_MATCH)]
        min_match: usize,
        #[arg(long, value_enum, default_value_t = CompareFormat::Text)]
        format: CompareFormat,
    },
    /// Print the comparison token keys a program yields
    Tokens {
        file: PathBuf,
        #[arg(long, default_value = "ext-lla", value_parser = Approach::from_str)]
        approach: Approach,
    },
    /// Generate or evaluate an attack corpus
    Corpus {
        #[command(subcommand)]
        command: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Build a leveled corpus of attacked seed programs
    Generate(GenerateArgs),
    /// Compare every corpus case under all three approaches
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory of seed programs (*.mj with optional *.in scripts)
    #[arg(long)]
    seeds: PathBuf,
    /// Output directory for the corpus tree
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PER_LEVEL)]
    per_level: usize,
    /// Generator seed; the CODESIM_SEED environment variable overrides it
    #[arg(long, default_value_t = DEFAULT_GENERATOR_SEED)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Corpus root produced by `corpus generate`
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_MATCH)]
    min_match: usize,
    /// Where to write report.json and ranking.csv
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CompareFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on
/// operational failures, 2 on usage errors.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Run(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            2
        }
    }
}

enum Failure {
    Run(String),
    Usage(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::Run(e.to_string())
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Compare { a, b, approach, min_match, format } => {
            let unit_a = frontend::load(&a)?;
            let unit_b = frontend::load(&b)?;
            let result = compare_sources(&unit_a, &unit_b, approach, min_match)?;
            match format {
                CompareFormat::Text => print!("{}", render_comparison(&result)),
                CompareFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&result).expect("serializable"))
                }
            }
            Ok(())
        }
        Command::Tokens { file, approach } => {
            let unit = frontend::load(&file)?;
            let built = build_units(&unit, approach)?;
            for cu in &built.units {
                println!("== {} ==", cu.name);
                for key in &cu.keys {
                    println!("{key}");
                }
            }
            for note in &built.notes {
                eprintln!("note: {note}");
            }
            Ok(())
        }
        Command::Corpus { command: CorpusCmd::Generate(args) } => {
            let seed = generator_seed(args.seed)?;
            let config = CorpusConfig {
                seeds: args.seeds,
                out: args.out.clone(),
                per_level: args.per_level,
                seed,
            };
            let manifest = generate_corpus(&config)?;
            println!(
                "generated {} cases across {} levels into {} (seed {})",
                manifest.total_cases,
                manifest.levels.len(),
                args.out.display(),
                manifest.generator_seed
            );
            Ok(())
        }
        Command::Corpus { command: CorpusCmd::Evaluate(args) } => {
            let report = harness::evaluate_corpus(&args.corpus, args.min_match)?;
            if let Some(out) = &args.out {
                harness::write_report(&report, out)?;
            }
            match args.format {
                ReportFormat::Text => print!("{}", harness::render_text(&report)),
                ReportFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"))
                }
                ReportFormat::Csv => print!("{}", harness::render_csv(&report)),
            }
            Ok(())
        }
    }
}

/// The CODESIM_SEED environment variable beats the flag when set.
fn generator_seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("CODESIM_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("CODESIM_SEED is not an integer: `{text}`"))),
        Err(_) => Ok(flag),
    }
}

fn render_comparison(result: &ComparisonResult) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "matched_total {}", result.matched_total).expect("string write");
    writeln!(out, "len_a {}", result.len_a).expect("string write");
    writeln!(out, "len_b {}", result.len_b).expect("string write");
    writeln!(out, "mt {}", result.mt).expect("string write");
    writeln!(out, "rmt {}", result.rmt).expect("string write");
    writeln!(out, "similarity {:.6}", result.similarity).expect("string write");
    writeln!(out, "unit_pairing:").expect("string write");
    for pair in &result.unit_pairing {
        writeln!(
            out,
            "  {} <-> {}: matched {} of {}/{} ({} tiles)",
            pair.unit_a.as_deref().unwrap_or("<none>"),
            pair.unit_b.as_deref().unwrap_or("<none>"),
            pair.matched,
            pair.len_a,
            pair.len_b,
            pair.tiles.len()
        )
        .expect("string write");
    }
    out
}
