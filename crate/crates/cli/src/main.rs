use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use horef::abstractor::{build_candidate_pool, Abstraction, PoolOptions, DEFAULT_MAX_HO_VARS};
use horef::ast::{PredicateSymbol, Program};
use horef::compressor::Weights;
use horef::evaluator::{check_equivalence, Equivalence, EvalError, Universe};
use horef::parser::{export_abstraction_library, parse_abstraction_library, parse_program, print_program, ParseOptions};
use horef::pipeline::PipelineError;
use horef::report::{emit_report, Verification};
use horef::{refactor, RefactorConfig};

const EXIT_PARSE: u8 = 1;
const EXIT_UNRESOLVED: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "horef", version, about = "Compress logic programs with higher-order abstractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover, select and apply abstractions, then verify the result.
    Refactor(RefactorArgs),
    /// Write the candidate abstraction pool as a library file.
    Abstractions(AbstractionArgs),
    /// Check that two programs agree on the target predicates.
    Check(CheckArgs),
}

#[derive(Args)]
struct PoolArgs {
    /// Maximum number of predicate symbols abstracted per candidate.
    #[arg(long, default_value_t = DEFAULT_MAX_HO_VARS, value_parser = clap::value_parser!(u64).range(1..64).try_map(usize::try_from))]
    max_ho_vars: usize,
    /// Keep candidates that only one definition can use.
    #[arg(long)]
    keep_singletons: bool,
}

#[derive(Args)]
struct TargetArgs {
    /// Target predicates as `name` or `name/arity`, comma separated.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    /// Universe description file (TOML); defaults to the standard list and integer universe.
    #[arg(long)]
    universe: Option<PathBuf>,
}

#[derive(Args)]
struct RefactorArgs {
    input: PathBuf,
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    target: TargetArgs,
    /// Objective weights w1,w2,w3,w4.
    #[arg(long, default_value = "1,1,1,1", value_parser = parse_weights)]
    weights: Weights,
    #[arg(long, default_value_t = 3600, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_secs: u64,
    /// Output program file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    no_verify: bool,
    /// Also report the smallest size reachable without the penalty term.
    #[arg(long)]
    size_optimum: bool,
}

#[derive(Args)]
struct AbstractionArgs {
    input: PathBuf,
    #[command(flatten)]
    pool: PoolArgs,
    /// Library file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    original: PathBuf,
    refactored: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    /// Abstraction library used by the refactored program.
    #[arg(long)]
    library: Option<PathBuf>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [w1, w2, w3, w4] => Ok(Weights::new(w1, w2, w3, w4)),
        _ => Err(format!("expected four comma-separated weights, got {}", parts.len())),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| Failure::new(EXIT_IO, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(|e| Failure::new(EXIT_IO, e))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_program(path: &Path, library: &[Abstraction]) -> CliResult<Program> {
    let text = read(path)?;
    let options = ParseOptions::default().with_file(path).with_library(library);
    let parsed = parse_program(&text, &options).map_err(|e| Failure::new(EXIT_PARSE, e))?;
    for w in &parsed.warnings {
        warn!("{w}");
    }
    Ok(parsed.value)
}

fn load_universe(path: Option<&Path>) -> CliResult<Universe> {
    match path {
        None => Ok(Universe::standard()),
        Some(p) => {
            let text = read(p)?;
            Universe::from_toml(&text)
                .with_context(|| format!("in {}", p.display()))
                .map_err(|e| Failure::new(EXIT_PARSE, e))
        }
    }
}

fn resolve_targets(p: &Program, names: &[String]) -> CliResult<Vec<PredicateSymbol>> {
    names
        .iter()
        .map(|name| {
            let found = match name.split_once('/') {
                Some((n, a)) => {
                    let arity: usize = a
                        .parse()
                        .map_err(|_| Failure::new(EXIT_PARSE, anyhow!("invalid target `{name}`")))?;
                    p.definitions().iter().find(|d| d.symbol().name() == n && d.symbol().arity() == arity)
                }
                None => p.definitions().iter().find(|d| d.symbol().name() == name),
            };
            found
                .map(|d| d.symbol().clone())
                .ok_or_else(|| Failure::new(EXIT_UNRESOLVED, anyhow!("target `{name}` has no definition")))
        })
        .collect()
}

fn eval_failure(e: EvalError) -> Failure {
    let code = match e {
        EvalError::Unresolved(_) => EXIT_UNRESOLVED,
        _ => EXIT_VERIFICATION,
    };
    Failure::new(code, e)
}

fn cmd_refactor(args: RefactorArgs) -> CliResult<()> {
    let p = load_program(&args.input, &[])?;
    let targets = match &args.target.targets {
        Some(names) => Some(resolve_targets(&p, names)?),
        None => None,
    };
    let universe = if args.no_verify {
        None
    } else {
        Some(load_universe(args.target.universe.as_deref())?)
    };
    let config = RefactorConfig {
        targets,
        pool: PoolOptions {
            max_ho_vars: args.pool.max_ho_vars,
            keep_singletons: args.pool.keep_singletons,
        },
        weights: args.weights,
        timeout: Some(Duration::from_secs(args.timeout_secs)),
        universe,
        size_optimum: args.size_optimum,
    };
    let out = refactor(&p, &config).map_err(|e| match e {
        PipelineError::Eval(e) => eval_failure(e),
        PipelineError::Ast(e) => Failure::new(EXIT_UNRESOLVED, e),
        other => Failure::new(EXIT_VERIFICATION, other),
    })?;
    let r = &out.report;
    info!(
        "size {} -> {}, objective {}, {} abstraction(s), optimal: {}",
        r.input_size,
        r.output_size,
        r.objective_value,
        r.selected_abstractions.len(),
        r.proved_optimal
    );
    emit(args.out.as_deref(), &print_program(&out.program))?;
    if let Some(path) = &args.report {
        write(path, &emit_report(r))?;
    }
    if let Verification::Counterexample { atom, derived_by } = &r.verification {
        return Err(Failure::new(
            EXIT_VERIFICATION,
            anyhow!("verification failed: `{atom}` is derived only by the {derived_by} program"),
        ));
    }
    Ok(())
}

fn cmd_abstractions(args: AbstractionArgs) -> CliResult<()> {
    let p = load_program(&args.input, &[])?;
    let pool = build_candidate_pool(
        &p,
        PoolOptions {
            max_ho_vars: args.pool.max_ho_vars,
            keep_singletons: args.pool.keep_singletons,
        },
    );
    eprintln!(
        "{} candidate(s): {} enumerated, {} distinct, {} retained",
        pool.len(),
        pool.stats.enumerated,
        pool.stats.distinct,
        pool.stats.retained
    );
    emit(args.out.as_deref(), &export_abstraction_library(&pool.abstractions))
}

fn cmd_check(args: CheckArgs) -> CliResult<()> {
    let library = match &args.library {
        Some(path) => {
            let text = read(path)?;
            let options = ParseOptions::default().with_file(path);
            parse_abstraction_library(&text, &options).map_err(|e| Failure::new(EXIT_PARSE, e))?
        }
        None => Vec::new(),
    };
    let p = load_program(&args.original, &[])?;
    let q = load_program(&args.refactored, &library)?;
    let targets = match &args.target.targets {
        Some(names) => resolve_targets(&p, names)?.into_iter().collect(),
        None => p.targets().clone(),
    };
    let universe = load_universe(args.target.universe.as_deref())?;
    match check_equivalence(&p, &q, &library, &universe, &targets).map_err(eval_failure)? {
        Equivalence::Equivalent => {
            println!("equivalent");
            Ok(())
        }
        Equivalence::Counterexample { atom, side } => {
            println!("counterexample: {atom} (derived only by the {side} program)");
            Err(Failure::new(EXIT_VERIFICATION, anyhow!("programs differ on `{atom}`")))
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var("HOREF_THREADS") else { return };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("cannot configure {n} threads: {e}");
            }
        }
        _ => warn!("ignoring HOREF_THREADS={value}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Refactor(args) => cmd_refactor(args),
        Command::Abstractions(args) => cmd_abstractions(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
