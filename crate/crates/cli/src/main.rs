use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use tailproc::estimate::{DEFAULT_LANES, DEFAULT_TOLERANCE};
use tailproc::models::MODEL_CATALOG;
use tailproc::suites::{run_suite, write_csv, CheckRow, Suite, SuiteConfig, SuiteOutcome};
use tailproc::{Sampling, SpectralModel};

mod config;

use config::{ExperimentConfig, FileConfig, Format, ModelEntry, DEFAULT_N};

const VERSION: &str = env!("CARGO_PKG_VERSION");

const SUITE_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const IO_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "tailproc", version, about = "Checks tail process identities by seeded Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run identity suites and write one row per check.
    ///
    /// Models use `name:key=value,...`, for example `geometric:rho=0.5,alpha=1`
    /// or `ma:alpha=1.5,coeffs=1;0.5`. See `list-models`.
    Run(RunArgs),
    /// Print the model grammar.
    ListModels,
    /// Print the suite names.
    ListSuites,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML file with any of: suite, models, n_samples, seed, lanes, tolerance,
    /// series_len, output, format. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suite name or `all` [default: all]
    #[arg(long)]
    suite: Option<String>,
    /// Model in the `name:key=value,...` grammar; repeat for several.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Monte Carlo draws per estimate [default: 100000]
    #[arg(long)]
    n: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker lanes; results depend on the lane count [default: 4]
    #[arg(long, env = "TAILPROC_LANES")]
    lanes: Option<usize>,
    /// Pass when |a - b| <= tol * stderr [default: 3]
    #[arg(long)]
    tol: Option<f64>,
    /// Length of the simulated series in the cluster suite [default: 1000000]
    #[arg(long)]
    series_len: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,
}

enum Failure {
    Config(String),
    Io(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListModels => print(&list_models()),
        Command::ListSuites => print(&list_suites()),
        Command::Run(args) => run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(IO_ERROR)
        }
    }
}

fn print(text: &str) -> Result<u8, Failure> {
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Io(e.to_string()))?;
    Ok(0)
}

fn list_models() -> String {
    let mut s = String::new();
    for (name, keys, about) in MODEL_CATALOG {
        s.push_str(&format!("{name}:{keys}\n    {about}\n"));
    }
    s
}

fn list_suites() -> String {
    let mut s = String::new();
    for suite in Suite::ALL {
        s.push_str(&format!("{:<15} {}\n", suite.name(), suite.description()));
    }
    s.push_str(&format!("{:<15} every suite above\n", "all"));
    s
}

fn resolve(args: RunArgs) -> Result<(ExperimentConfig, Vec<SpectralModel>), Failure> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let entries: Vec<ModelEntry> = if args.models.is_empty() {
        file.models
    } else {
        args.models.into_iter().map(ModelEntry::Grammar).collect()
    };
    let models = entries
        .iter()
        .map(ModelEntry::resolve)
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Config)?;
    let cfg = ExperimentConfig {
        suite: args.suite.or(file.suite).unwrap_or_else(|| "all".into()),
        models: models.iter().map(ToString::to_string).collect(),
        n_samples: args.n.or(file.n_samples).unwrap_or(DEFAULT_N),
        seed: args.seed.or(file.seed).unwrap_or(0),
        lanes: args.lanes.or(file.lanes).unwrap_or(DEFAULT_LANES),
        tolerance: args.tol.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
        series_len: args
            .series_len
            .or(file.series_len)
            .unwrap_or_else(config::default_series_len),
        output: args.out.or(file.output),
        format: args.format.or(file.format).unwrap_or(Format::Csv),
    };
    cfg.check().map_err(Failure::Config)?;
    Ok((cfg, models))
}

#[derive(Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    pass: bool,
    checks: usize,
    failures: usize,
    suites: Vec<SuiteSummary<'a>>,
}

#[derive(Serialize)]
struct SuiteSummary<'a> {
    suite: Suite,
    model: &'a str,
    pass: bool,
    skipped: Option<&'a str>,
    notes: &'a [String],
    rows: &'a [CheckRow],
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let (cfg, models) = resolve(args)?;
    let suites = cfg.suites().map_err(Failure::Config)?;
    let sampling = Sampling::new(cfg.n_samples, cfg.seed)
        .with_lanes(cfg.lanes)
        .with_tolerance(cfg.tolerance);
    let suite_cfg = SuiteConfig {
        sampling,
        series_len: cfg.series_len,
    };
    let mut outcomes: Vec<SuiteOutcome> = vec![];
    for model in &models {
        for suite in &suites {
            let o = run_suite(*suite, model, &suite_cfg);
            let failed = o.rows.iter().filter(|r| !r.pass).count();
            match &o.skipped {
                Some(why) => eprintln!("{suite} {model}: skipped ({why})"),
                None => eprintln!("{suite} {model}: {} checks, {failed} failed", o.rows.len()),
            }
            outcomes.push(o);
        }
    }
    let pass = outcomes.iter().all(SuiteOutcome::pass);
    let text = render(&cfg, &outcomes, pass)?;
    match &cfg.output {
        Some(path) => write_file(path, &text)?,
        None => print(&text).map(|_| ())?,
    }
    Ok(if pass { 0 } else { SUITE_FAILED })
}

fn render(cfg: &ExperimentConfig, outcomes: &[SuiteOutcome], pass: bool) -> Result<String, Failure> {
    let io = |e: tailproc::Error| Failure::Io(e.to_string());
    match cfg.format {
        Format::Csv => {
            let rows: Vec<CheckRow> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
            let config = serde_json::to_string(cfg).map_err(|e| Failure::Io(e.to_string()))?;
            let mut buf = format!("# tailproc {VERSION}\n# config {config}\n").into_bytes();
            write_csv(&rows, &mut buf).map_err(io)?;
            String::from_utf8(buf).map_err(|e| Failure::Io(e.to_string()))
        }
        Format::Json => {
            let summary = Summary {
                tool: "tailproc",
                version: VERSION,
                config: cfg,
                pass,
                checks: outcomes.iter().map(|o| o.rows.len()).sum(),
                failures: outcomes
                    .iter()
                    .flat_map(|o| &o.rows)
                    .filter(|r| !r.pass)
                    .count(),
                suites: outcomes
                    .iter()
                    .map(|o| SuiteSummary {
                        suite: o.suite,
                        model: &o.model,
                        pass: o.pass(),
                        skipped: o.skipped.as_deref(),
                        notes: &o.notes,
                        rows: &o.rows,
                    })
                    .collect(),
            };
            let mut s =
                serde_json::to_string_pretty(&summary).map_err(|e| Failure::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
