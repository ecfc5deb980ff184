//! `qba`: command-line front end for the QBA(m) simulator.
//!
//! Exit codes: 0 success, 1 configuration error, 2 internal error,
//! 3 distribution aborted (single-run mode).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qba_core::harness::{
    calibrate_length, distribute_run, emit_report, replay, resolve, run_scenario, split_traces, HarnessError,
    ReportFormat, RunStatus, ScenarioConfig,
};
use qba_core::lists::forgery::ForgeryOracle;
use qba_core::lists::Alphabet;
use qba_core::qsd::statevector::{build_type3_statevector, measurement_distribution};
use qba_core::simnet::{RunTrace, StrategySpec, TraceEvent, TRACE_SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "qba", version, about = "Detectable Byzantine agreement with Q-correlated lists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (flat JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of runs; overrides the file.
    #[arg(long)]
    runs: Option<u64>,
    /// Strategy of corrupt lieutenants; overrides the file.
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated corrupt party ids; overrides the file.
    #[arg(long, value_delimiter = ',')]
    corrupt: Option<Vec<usize>>,
    /// Write run traces (JSON Lines) here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the list distribution only (first run of the scenario).
    Distribute(ScenarioArgs),
    /// Run distribution and agreement for every run of the scenario.
    Agree(ScenarioArgs),
    /// Compute list length and support floor for a target forgery probability.
    Calibrate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: u32,
        #[arg(long, default_value_t = 0.5)]
        correlation_prob: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Exact reference values.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Regenerate every trace in a file from its header and compare.
    Replay { trace: PathBuf },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact success probability of the optimal forger.
    Forgery {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w: u32,
        #[arg(long)]
        list_length: usize,
        #[arg(long)]
        support_size: usize,
        #[arg(long, default_value_t = 0.5)]
        correlation_prob: f64,
    },
    /// Measurement distribution of a type-3 state.
    Measurement {
        #[arg(long)]
        d: usize,
        /// Offsets of qudits 2..q, comma-separated.
        #[arg(long, value_delimiter = ',')]
        offsets: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        phase: usize,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::Config(_) | HarnessError::CalibrationFailure(_) | HarnessError::Json(_) => 1,
            HarnessError::Internal(_) | HarnessError::Io(_) => 2,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: e.into(),
    }
}

fn internal_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(config_error)?;
    let mut config: ScenarioConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))
        .map_err(config_error)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(name) = &args.strategy {
        config.strategy = StrategySpec::from_name(name)
            .ok_or_else(|| config_error(anyhow::anyhow!("unknown strategy {name:?}")))?;
    }
    if let Some(corrupt) = &args.corrupt {
        config.corrupt = corrupt.clone();
    }
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> Result<fs::File, Failure> {
    fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(internal_error)
}

fn distribute(args: &ScenarioArgs) -> Result<u8, Failure> {
    let config = load_scenario(args)?;
    let scenario = resolve(&config)?;
    let outcome = distribute_run(&scenario, 0)?;
    if let Some(path) = &args.trace_out {
        let trace = RunTrace {
            events: vec![
                TraceEvent::Header {
                    schema_version: TRACE_SCHEMA_VERSION,
                    seed: config.seed,
                    run_index: 0,
                    config: serde_json::to_value(&config).map_err(internal_error)?,
                },
                TraceEvent::Distribution {
                    outcome: outcome.clone(),
                },
            ],
        };
        create(path)?
            .write_all(trace.to_jsonl().as_bytes())
            .map_err(internal_error)?;
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&outcome).map_err(internal_error)?),
        Format::Text => {
            println!("parties             {}", config.n);
            println!("list length         {}", scenario.distribution.list_length);
            println!("correlated (true)   {}", outcome.true_q.len());
            println!("correlated (infer)  {}", outcome.inferred_q.len());
            println!("decoys checked      {}", outcome.decoys.total);
            println!("decoys mismatched   {}", outcome.decoys.mismatched);
            println!("aborted             {}", outcome.is_aborted());
        }
    }
    Ok(if outcome.is_aborted() { 3 } else { 0 })
}

fn agree(args: &ScenarioArgs) -> Result<u8, Failure> {
    let config = load_scenario(args)?;
    let report = match &args.trace_out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(create(path)?);
            let r = run_scenario(&config, Some(&mut f))?;
            f.flush().map_err(internal_error)?;
            r
        }
        None => run_scenario(&config, None)?,
    };
    print!("{}", emit_report(&report, args.format.into())?);
    let single_abort = config.runs == 1
        && report
            .records
            .first()
            .is_some_and(|r| r.status != RunStatus::Completed);
    Ok(if single_abort { 3 } else { 0 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Distribute(args) => distribute(&args),
        Command::Agree(args) => agree(&args),
        Command::Calibrate {
            n,
            w,
            correlation_prob,
            epsilon,
            format,
        } => {
            let c = calibrate_length(n, w, correlation_prob, epsilon)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&c).map_err(internal_error)?),
                Format::Text => {
                    println!("epsilon             {}", c.epsilon);
                    println!("per-position bound  {}", c.per_position_bound);
                    println!("min support         {}", c.min_support);
                    println!("list length         {}", c.list_length);
                }
            }
            Ok(0)
        }
        Command::Oracle(OracleCommand::Forgery {
            n,
            w,
            list_length,
            support_size,
            correlation_prob,
        }) => {
            let alphabet = Alphabet::new(w).map_err(config_error)?;
            let oracle = ForgeryOracle {
                correlation_prob,
                ..ForgeryOracle::default()
            };
            let p = oracle
                .success_probability(n, alphabet, list_length, support_size)
                .map_err(config_error)?;
            println!("{p}");
            Ok(0)
        }
        Command::Oracle(OracleCommand::Measurement { d, offsets, phase }) => {
            let state = build_type3_statevector(d, offsets.len() + 1, &offsets, phase).map_err(config_error)?;
            for (tuple, p) in measurement_distribution(&state) {
                let t: Vec<String> = tuple.iter().map(|s| s.to_string()).collect();
                println!("{}\t{p}", t.join(","));
            }
            Ok(0)
        }
        Command::Replay { trace } => {
            let text = fs::read_to_string(&trace)
                .with_context(|| format!("reading {}", trace.display()))
                .map_err(config_error)?;
            let traces = split_traces(&text)?;
            let mut diverged = 0;
            for t in &traces {
                let again = replay(t)?;
                let (seed, index, _) = t.header().expect("replay checked the header");
                let same = again.to_jsonl() == t.to_jsonl();
                println!("seed {seed} run {index}: {}", if same { "identical" } else { "diverged" });
                diverged += usize::from(!same);
            }
            Ok(if diverged == 0 { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
