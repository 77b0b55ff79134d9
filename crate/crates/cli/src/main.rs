//! `tabal`: run active learning benchmarks, summarise them, fetch datasets.
//!
//! Exit codes: 0 success, 1 configuration or fatal error, 2 partial failure
//! (some datasets or cells failed, the rest completed).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabal::al_loop::{arm_dir, read_records, run_benchmark, BenchmarkPlan, RECORDS_FILE};
use tabal::dataset::{encode, fetch, impute, load_csv, FetchRequest};
use tabal::stats::{write_reports, ReportOptions};
use tabal::{Dataset, Scenario, TrialOptions};

use config::{PartialConfig, PretrainArms, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tabal::Error),
}

#[derive(Parser)]
#[command(name = "tabal", version, about = "Pool-based active learning benchmark for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark grid, resuming from any existing ledger in the output directory.
    Run(RunArgs),
    /// Write win matrices, gain tables and curves from benchmark records.
    Report(ReportArgs),
    /// Download a dataset into the local cache.
    Fetch(FetchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated CSV paths or `fetch:<id>` entries.
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    #[arg(long = "scenario", value_delimiter = ',', value_parser = parse_scenario)]
    scenarios: Option<Vec<Scenario>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    pretrain: Option<PretrainArms>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Acquisition rounds per trial (default: 20).
    #[arg(long)]
    rounds: Option<usize>,
    /// Supervised training epochs (default: 30).
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_units: Option<usize>,
    #[arg(long)]
    backbone_layers: Option<usize>,
    /// Cache for `fetch:` datasets [env: TABAL_CACHE_DIR].
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Server for `fetch:` datasets [env: TABAL_DATA_URL].
    #[arg(long)]
    base_url: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of `tabal run`, or a directory holding records.jsonl.
    dir: PathBuf,
    /// Where to write reports (default: <dir>/reports).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Round for win matrices and gains (default: 7 for small, 3 otherwise).
    #[arg(long)]
    round: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    win_p: f64,
    #[arg(long, default_value_t = 0.1)]
    gain_p: f64,
}

#[derive(Args)]
struct FetchArgs {
    id: String,
    /// [env: TABAL_CACHE_DIR]
    #[arg(long)]
    cache: Option<PathBuf>,
    /// [env: TABAL_DATA_URL]
    #[arg(long)]
    base_url: Option<String>,
    /// Expected SHA-256 of the CSV.
    #[arg(long)]
    sha256: Option<String>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: tabal::Error| e.to_string())
}

fn cache_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("TABAL_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(".tabal-cache"))
}

fn base_url(flag: Option<String>) -> Option<String> {
    flag.or_else(|| std::env::var("TABAL_DATA_URL").ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
        Command::Fetch(args) => cmd_fetch(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, CliError> {
    let file = match &args.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        datasets: args.datasets,
        strategies: args.strategies,
        scenarios: args.scenarios,
        trials: args.trials,
        pretrain: args.pretrain,
        seed: args.seed,
        workers: args.workers,
        out: args.out,
        rounds: args.rounds,
        epochs: args.epochs,
        hidden_units: args.hidden_units,
        backbone_layers: args.backbone_layers,
    };
    let cfg = file.merge(flags).resolve()?;
    let strategies = cfg.strategy_ids()?;

    std::fs::create_dir_all(&cfg.out).map_err(|e| tabal::Error::io(&cfg.out, e))?;
    let resolved = cfg.out.join("run_config.toml");
    let text = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&resolved, text).map_err(|e| tabal::Error::io(&resolved, e))?;

    let cache = cache_dir(args.cache);
    let url = base_url(args.base_url);
    let mut datasets = Vec::new();
    let mut load_failures = 0;
    for entry in &cfg.datasets {
        match load_dataset(entry, &cache, url.as_deref()) {
            Ok(ds) => {
                log::info!("loaded {} ({} rows, {} features, {} classes)", ds.id, ds.n_rows(), ds.n_features(), ds.n_classes);
                datasets.push(ds);
            }
            Err(e) => {
                log::error!("skipping dataset {entry}: {e}");
                load_failures += 1;
            }
        }
    }
    if datasets.is_empty() {
        eprintln!("error: no dataset could be loaded");
        return Ok(ExitCode::from(2));
    }

    let plan = BenchmarkPlan {
        datasets,
        strategies,
        scenarios: cfg.scenarios.clone(),
        trials: cfg.trials,
        arms: cfg.pretrain.arms(),
        master_seed: cfg.seed,
        workers: cfg.workers,
        options: trial_options(&cfg),
    };
    let summary = run_benchmark(&plan, &cfg.out)?;
    println!(
        "cells executed: {}, skipped (already done): {}, failed: {}, audit violations: {}",
        summary.executed,
        summary.skipped,
        summary.failures.len(),
        summary.audit_violations
    );
    for f in &summary.failures {
        eprintln!("failed cell {:?}: {}", f.key, f.error);
    }
    if load_failures > 0 || !summary.failures.is_empty() || summary.audit_violations > 0 {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn trial_options(cfg: &RunConfig) -> TrialOptions {
    let mut opts = TrialOptions {
        max_rounds: cfg.rounds,
        ..TrialOptions::default()
    };
    if let Some(e) = cfg.epochs {
        opts.train.epochs = e;
    }
    if let Some(h) = cfg.hidden_units {
        opts.net.hidden_units = h;
    }
    if let Some(l) = cfg.backbone_layers {
        opts.net.backbone_layers = l;
    }
    opts
}

/// `X.csv` reads its schema from `X.manifest.json`; `fetch:ID` goes through the cache.
fn load_dataset(entry: &str, cache: &Path, url: Option<&str>) -> Result<Dataset, CliError> {
    let (csv, manifest, id) = if let Some(id) = entry.strip_prefix("fetch:") {
        let got = fetch(&FetchRequest {
            id: id.to_string(),
            cache_dir: cache.to_path_buf(),
            base_url: url.unwrap_or_default().to_string(),
            expected_sha256: None,
        })?;
        (got.csv, got.manifest, id.to_string())
    } else {
        let csv = PathBuf::from(entry);
        let stem = csv
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Config(format!("bad dataset path {entry}")))?
            .to_string();
        let manifest = csv.with_file_name(format!("{stem}.manifest.json"));
        (csv, manifest, stem)
    };
    let table = impute(&load_csv(&csv, &manifest)?);
    Ok(encode(&table, &id)?)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode, CliError> {
    let out = args.out.unwrap_or_else(|| args.dir.join("reports"));
    let opts = ReportOptions {
        round: args.round,
        win_p: args.win_p,
        gain_p: args.gain_p,
    };
    let mut sources = Vec::new();
    if args.dir.join(RECORDS_FILE).is_file() {
        sources.push((args.dir.join(RECORDS_FILE), out.clone()));
    }
    for arm in [false, true] {
        let path = args.dir.join(arm_dir(arm)).join(RECORDS_FILE);
        if path.is_file() {
            sources.push((path, out.join(arm_dir(arm))));
        }
    }
    if sources.is_empty() {
        return Err(CliError::Config(format!("no {RECORDS_FILE} found under {}", args.dir.display())));
    }
    for (records_path, dest) in sources {
        let records = read_records(&records_path)?;
        let written = write_reports(&records, &dest, &opts)?;
        println!("{}: {} records, {} report files in {}", records_path.display(), records.len(), written.len(), dest.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fetch(args: FetchArgs) -> Result<ExitCode, CliError> {
    let url = base_url(args.base_url);
    let cache = cache_dir(args.cache);
    let got = fetch(&FetchRequest {
        id: args.id.clone(),
        cache_dir: cache,
        base_url: url.unwrap_or_default(),
        expected_sha256: args.sha256,
    })?;
    let ds = encode(&impute(&load_csv(&got.csv, &got.manifest)?), &args.id)?;
    println!(
        "{} {} ({} rows, {} classes) sha256={} from_cache={}",
        args.id,
        got.csv.display(),
        ds.n_rows(),
        ds.n_classes,
        got.sha256,
        got.from_cache
    );
    Ok(ExitCode::SUCCESS)
}
