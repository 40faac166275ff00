//! Command-line front end: `simulate`, `exact`, `fit`, `ingest`, `compare`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::compare::{compare, IntegerDistribution};
use crate::config::{ConfigError, KeyValues, RunConfig};
use crate::exact::{lifetime_pmf_dp, like_count_pmf_dp, like_count_pmf_enum};
use crate::fit::{fit_least_squares, fit_mle, fit_mle_histogram, plot_csv, plot_points, FitMethod, FitReport};
use crate::histogram::Histogram;
use crate::ingest::run_pipeline;
use crate::par::{with_threads, Execution};
use crate::sim::{collect_histogram, outcomes_csv, simulate_ensemble, simulate_flow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "agentflow", version, about = "Message-as-agent information spread toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set E0=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Root seed for every random stream.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Independent agents to simulate.
    #[arg(long, global = true, value_name = "N")]
    pub replicates: Option<usize>,
    /// Output directory (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// likes, reposts or lifetime.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// ls or mle.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Use the enumeration route for `exact`.
    #[arg(long = "enum", global = true)]
    pub enumerate: bool,
    /// Also write the lifetime distribution for `exact`.
    #[arg(long, global = true)]
    pub lifetime: bool,
    /// Simulate a whole flow instead of independent replicates.
    #[arg(long, global = true)]
    pub flow: bool,
    /// Flow length in steps.
    #[arg(long, global = true, value_name = "STEPS")]
    pub horizon: Option<u32>,
    /// Cap on agents created in a flow.
    #[arg(long = "max-agents", global = true, value_name = "N")]
    pub max_agents: Option<usize>,
    /// increments or finals.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// JSONL result store (default `<out>/store.jsonl`).
    #[arg(long, global = true, value_name = "PATH")]
    pub store: Option<PathBuf>,
    /// Histogram bin width for sample files.
    #[arg(long = "bin-width", global = true, value_name = "W")]
    pub bin_width: Option<f64>,
    /// Worker threads; does not change any output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate agents and write outcome and histogram CSVs.
    Simulate,
    /// Exact like-count pmf (and optionally the lifetime pmf).
    Exact,
    /// Fit a Weibull law to a histogram CSV or a file of samples.
    Fit { data: PathBuf },
    /// Load snapshots, fit each message and append to the store.
    Ingest { csv: PathBuf },
    /// Distances between an exact pmf and an empirical histogram.
    Compare { expected: PathBuf, empirical: PathBuf },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Defaults, then the config file, then `--set`, then dedicated flags.
pub fn resolve_config(opts: &GlobalOpts) -> Result<RunConfig, Failure> {
    let mut kv = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            KeyValues::parse(&text)?
        }
        None => KeyValues::default(),
    };
    for s in &opts.set {
        let (k, v) = KeyValues::parse_assignment(s)?;
        kv.set(&k, &v)?;
    }
    let mut flag = |key: &str, value: Option<String>| -> Result<(), ConfigError> {
        match value {
            Some(v) => kv.set(key, &v),
            None => Ok(()),
        }
    };
    flag("seed", opts.seed.map(|v| v.to_string()))?;
    flag("replicates", opts.replicates.map(|v| v.to_string()))?;
    flag("out", opts.out.as_ref().map(|p| p.display().to_string()))?;
    flag("metric", opts.metric.clone())?;
    flag("method", opts.method.clone())?;
    flag("enum", opts.enumerate.then(|| "true".into()))?;
    flag("lifetime", opts.lifetime.then(|| "true".into()))?;
    flag("flow", opts.flow.then(|| "true".into()))?;
    flag("horizon", opts.horizon.map(|v| v.to_string()))?;
    flag("max_agents", opts.max_agents.map(|v| v.to_string()))?;
    flag("mode", opts.mode.clone())?;
    flag("store", opts.store.as_ref().map(|p| p.display().to_string()))?;
    flag("bin_width", opts.bin_width.map(|v| v.to_string()))?;
    Ok(RunConfig::resolve(&kv)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn prepare_out(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::data(format!("{}: {e}", cfg.out.display())))?;
    write_file(&cfg.out.join("run.conf"), &cfg.echo())
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    prepare_out(cfg)?;
    let exec = Execution::Parallel;
    let (outcomes, births) = if cfg.flow {
        let flow = simulate_flow(&cfg.params, cfg.horizon, cfg.seed, cfg.max_agents, exec)
            .map_err(|e| Failure::usage(e.to_string()))?;
        if flow.truncated {
            eprintln!("warning: agent creation stopped at max_agents = {}", cfg.max_agents);
        }
        (flow.outcomes, flow.births)
    } else {
        (
            simulate_ensemble(&cfg.params, cfg.replicates, cfg.seed, exec),
            Vec::new(),
        )
    };
    let hist = collect_histogram(&outcomes, cfg.metric).map_err(|e| Failure::data(e.to_string()))?;
    write_file(&cfg.out.join("outcomes.csv"), &outcomes_csv(&outcomes, &births))?;
    write_file(&cfg.out.join("histogram.csv"), &hist.to_csv())?;
    let _ = writeln!(
        out,
        "simulated {} agents; {} histogram has {} bins, mode {}",
        outcomes.len(),
        cfg.metric,
        hist.len(),
        hist.mode().unwrap_or(0)
    );
    Ok(())
}

pub fn cmd_exact(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let pmf = if cfg.enumerate {
        like_count_pmf_enum(&cfg.params)
    } else {
        like_count_pmf_dp(&cfg.params)
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    prepare_out(cfg)?;
    write_file(&cfg.out.join("pmf.csv"), &pmf.to_csv())?;
    if cfg.lifetime {
        let lt = lifetime_pmf_dp(&cfg.params).map_err(|e| Failure::usage(e.to_string()))?;
        write_file(&cfg.out.join("lifetime.csv"), &lt.to_csv())?;
    }
    let _ = writeln!(
        out,
        "like-count pmf over n = 0..={} ({} route), total mass {}",
        cfg.params.t_max,
        if cfg.enumerate { "enumeration" } else { "dp" },
        pmf.total()
    );
    Ok(())
}

enum FitInput {
    Histogram(Histogram),
    Samples(Vec<f64>),
}

fn read_fit_input(path: &Path) -> Result<FitInput, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let first = text.lines().find(|l| !l.trim().is_empty());
    let Some(first) = first else {
        return Err(Failure::data(format!("{}: no data", path.display())));
    };
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if header.contains(&"bin") && header.contains(&"count") {
        return Histogram::from_csv(text.as_bytes())
            .map(FitInput::Histogram)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())));
    }

    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(x) => samples.push(x),
            // a single leading header line is allowed
            Err(_) if samples.is_empty() && line == first => continue,
            Err(_) => {
                return Err(Failure::data(format!(
                    "{}: line {}: `{field}` is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if samples.is_empty() {
        return Err(Failure::data(format!("{}: no data", path.display())));
    }
    Ok(FitInput::Samples(samples))
}

pub fn cmd_fit(cfg: &RunConfig, data: &Path, out: &mut dyn Write) -> Result<FitReport, Failure> {
    let input = read_fit_input(data)?;
    let degenerate = |e: crate::error::FitError| Failure::data(format!("fit skipped: {e}"));
    let to_hist = |s: &[f64]| {
        Histogram::from_samples(s, 0.0, cfg.bin_width).map_err(|e| Failure::data(format!("{}: {e}", data.display())))
    };
    let (report, hist) = match (&input, cfg.method) {
        (FitInput::Histogram(h), FitMethod::LeastSquares) => (fit_least_squares(h).map_err(degenerate)?, h.clone()),
        (FitInput::Histogram(h), FitMethod::MaximumLikelihood) => {
            (fit_mle_histogram(h).map_err(degenerate)?, h.clone())
        }
        (FitInput::Samples(s), FitMethod::LeastSquares) => {
            let h = to_hist(s)?;
            (fit_least_squares(&h).map_err(degenerate)?, h)
        }
        (FitInput::Samples(s), FitMethod::MaximumLikelihood) => {
            let report = fit_mle(s).map_err(degenerate)?;
            (report, to_hist(s)?)
        }
    };
    prepare_out(cfg)?;
    let json = serde_json::to_string(&report).map_err(|e| Failure::data(e.to_string()))?;
    write_file(&cfg.out.join("fit.json"), &format!("{json}\n"))?;
    write_file(
        &cfg.out.join("plot.csv"),
        &plot_csv(&plot_points(&hist, &report.params)),
    )?;
    let _ = writeln!(out, "{json}");
    Ok(report)
}

pub fn cmd_ingest(cfg: &RunConfig, csv: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let metric = cfg.ingest_metric()?;
    prepare_out(cfg)?;
    let store = cfg.store.clone().unwrap_or_else(|| cfg.out.join("store.jsonl"));
    let fitted_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let summary = run_pipeline(csv, &store, cfg.mode, metric, &fitted_at, Execution::Parallel)
        .map_err(|e| Failure::data(e.to_string()))?;

    for r in &summary.rejected {
        eprintln!("rejected: {r}");
    }
    let _ = writeln!(
        out,
        "{:<16} {:<9} {:>9} {:>9} {:>7} {:>12}",
        "message_id", "metric", "k", "lambda", "ks", "growth/h"
    );
    for r in &summary.fitted {
        let _ = writeln!(
            out,
            "{:<16} {:<9} {:>9.4} {:>9.4} {:>7.4} {:>12.4}",
            r.message_id, r.metric, r.k, r.lambda, r.ks, r.growth_rate_per_hour
        );
    }
    for (id, reason) in &summary.skipped {
        let _ = writeln!(out, "{id:<16} skipped: {reason}");
    }
    let _ = writeln!(
        out,
        "{} fitted, {} skipped, {} rejected; {} new line(s) in {}",
        summary.fitted.len(),
        summary.skipped.len(),
        summary.rejected.len(),
        summary.written,
        store.display()
    );
    Ok(())
}

pub fn cmd_compare(cfg: &RunConfig, expected: &Path, empirical: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let read = |p: &Path| -> Result<IntegerDistribution, String> {
        let f = fs::File::open(p).map_err(|e| e.to_string())?;
        IntegerDistribution::from_csv(f)
    };
    let (a, b) = match (read(expected), read(empirical)) {
        (Ok(a), Ok(b)) => (a, b),
        (ea, eb) => {
            let why = [
                ea.err().map(|e| format!("{}: {e}", expected.display())),
                eb.err().map(|e| format!("{}: {e}", empirical.display())),
            ]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join("; ");
            return Err(Failure::data(format!(
                "cannot align {} with {}: {why}",
                expected.display(),
                empirical.display()
            )));
        }
    };
    let cmp = compare(&a, &b);
    prepare_out(cfg)?;
    write_file(&cfg.out.join("compare.csv"), &cmp.residuals_csv())?;
    let json = serde_json::to_string(&cmp).map_err(|e| Failure::data(e.to_string()))?;
    write_file(&cfg.out.join("compare.json"), &format!("{json}\n"))?;
    let _ = writeln!(out, "total_variation = {}\nks = {}", cmp.total_variation, cmp.ks);
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve_config(&cli.opts) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let stdout = std::io::stdout();
    let result = with_threads(cli.opts.threads, || {
        let mut out = stdout.lock();
        match &cli.command {
            Command::Simulate => cmd_simulate(&cfg, &mut out),
            Command::Exact => cmd_exact(&cfg, &mut out),
            Command::Fit { data } => cmd_fit(&cfg, data, &mut out).map(|_| ()),
            Command::Ingest { csv } => cmd_ingest(&cfg, csv, &mut out),
            Command::Compare { expected, empirical } => cmd_compare(&cfg, expected, empirical, &mut out),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
