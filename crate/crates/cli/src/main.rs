//! `implicit-sparse`: run experiment families, estimate step sizes and check
//! the scalar-dynamics properties from the command line.
//!
//! Exit codes: 0 success, 1 failed property checks, 2 config error,
//! 3 numeric divergence, 4 capacity error, 5 I/O error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use implicit_sparse::descent::{estimate_wmax, recommended_settings, DEFAULT_ETA_TILDE};
use implicit_sparse::design::max_noise_stat;
use implicit_sparse::dynamics::{run_suite, SuiteConfig};
use implicit_sparse::experiments::{
    gen_instance, run_sweep, run_trial, trial_seed, write_summary_csv, write_traces_csv, write_trials_csv, ExperimentConfig,
    Family, Preset, SUMMARY_HEADER,
};
use implicit_sparse::par::Execution;
use implicit_sparse::Error;

/// Environment variable that overrides the config's base seed.
const SEED_ENV: &str = "IMPLICIT_SPARSE_SEED";

#[derive(Parser, Debug)]
#[command(name = "implicit-sparse", version, about = "Sparse recovery by early-stopped gradient descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate w_max on one seeded instance and print step-size and
    /// initialization budgets as JSON.
    Estimate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Target precision of the budgets; defaults to the instance's
        /// max-noise level, or 1e-6 without noise.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run every estimator on a single trial and write trials.csv.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Trial index; the instance seed is the base seed plus this.
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Sweep value to run at; defaults to the first value of the sweep.
        #[arg(long)]
        at: Option<f64>,
    },
    /// Run the full sweep and write trials.csv and summary.csv.
    Sweep {
        #[command(flatten)]
        common: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Run trials on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Check the scalar-dynamics properties and write lemmas.csv.
    Lemmas {
        #[command(flatten)]
        output: OutputArgs,
        /// Randomized cases per property.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Collate summary.csv files found under the given directories into
    /// index.csv.
    Report {
        #[command(flatten)]
        output: OutputArgs,
        /// Directories searched recursively for summary.csv.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON config overriding the preset; absent means preset defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Family used when the config does not name one.
    #[arg(long)]
    family: Option<String>,
    /// Base seed; beats the environment variable and the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

/// A failure with its exit category.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            code: 5,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Parameter(_) | Error::Dimension { .. } => 2,
            Error::Divergence { .. } | Error::Singular => 3,
            Error::Capacity { .. } => 4,
            Error::Io(_) => 5,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn execute(command: Command) -> CliResult<u8> {
    match command {
        Command::Estimate { common, eps } => estimate(&common, eps).map(|()| 0),
        Command::Run {
            common,
            output,
            trial,
            at,
        } => run(&common, &output, trial, at).map(|()| 0),
        Command::Sweep {
            common,
            output,
            sequential,
        } => sweep(&common, &output, sequential).map(|()| 0),
        Command::Lemmas { output, cases, seed } => lemmas(&output, cases, seed),
        Command::Report { output, inputs } => report(&output, &inputs).map(|()| 0),
    }
}

fn parse_family(name: &str) -> CliResult<Family> {
    serde_json::from_value(serde_json::Value::String(name.to_owned()))
        .map_err(|_| Failure::config(format!("unknown family `{name}`")))
}

/// `--seed`, then the environment, then the config.
fn seed_override(flag: Option<u64>) -> CliResult<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn load_config(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::io(path, e))?,
        None => String::new(),
    };
    let family = args.family.as_deref().map(parse_family).transpose()?;
    let mut cfg = ExperimentConfig::from_json_str(&text, args.preset.into(), family).map_err(|e| match &args.config {
        Some(path) => Failure {
            message: format!("{}: {}", path.display(), e),
            ..Failure::from(e)
        },
        None => Failure::from(e),
    })?;
    if let Some(seed) = seed_override(args.seed)? {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

/// Create `dir` and refuse to replace any of `names` in it unless forced.
fn prepare_output(out: &OutputArgs, names: &[&str]) -> CliResult<()> {
    fs::create_dir_all(&out.out).map_err(|e| Failure::io(&out.out, e))?;
    if !out.force {
        for name in names {
            let path = out.out.join(name);
            if path.exists() {
                return Err(Failure::io(&path, "already exists; pass --force to replace it"));
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> implicit_sparse::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| match e {
        Error::Io(io) => Failure::io(path, io),
        other => Failure::from(other),
    })?;
    w.flush().map_err(|e| Failure::io(path, e))
}

fn estimate(args: &ConfigArgs, eps: Option<f64>) -> CliResult<()> {
    let cfg = load_config(args)?;
    let point = cfg.at(cfg.points()[0])?;
    let seed = trial_seed(&point, 0);
    let inst = gen_instance(&point, seed)?;
    let probe = estimate_wmax(&inst.x, &inst.y, DEFAULT_ETA_TILDE)?;
    let maxnoise = max_noise_stat(&inst.x, &inst.xi)?;
    let w_min = inst
        .signal
        .support
        .iter()
        .map(|&j| inst.signal.w_star[j].abs())
        .fold(f64::INFINITY, f64::min);
    let eps = eps.unwrap_or(if maxnoise > 0.0 { maxnoise } else { 1e-6 });
    if !(eps > 0.0) {
        return Err(Failure::config("--eps must be positive"));
    }
    let budgets = (!probe.degenerate).then(|| recommended_settings(probe.z_hat, w_min, eps, point.d, point.k, maxnoise, 1.0));
    let report = serde_json::json!({
        "family": point.family.as_str(),
        "seed": seed,
        "n": point.n,
        "d": point.d,
        "k": point.k,
        "z_hat": probe.z_hat,
        "eta_tilde": probe.eta_tilde,
        "degenerate": probe.degenerate,
        "eta": probe.production_eta(),
        "w_min": w_min,
        "max_noise": maxnoise,
        "eps": eps,
        "threshold": point.threshold(),
        "budgets": budgets,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json serializes"));
    Ok(())
}

fn run(args: &ConfigArgs, out: &OutputArgs, trial: usize, at: Option<f64>) -> CliResult<()> {
    let cfg = load_config(args)?;
    let axis_value = match (at, cfg.sweep.is_some()) {
        (Some(v), true) => Some(v),
        (Some(_), false) => return Err(Failure::config("--at needs a config with a sweep")),
        (None, _) => cfg.points()[0],
    };
    let outcome = run_trial(&cfg, axis_value, trial)?;
    let mut names = vec!["trials.csv"];
    if !outcome.traces.is_empty() {
        names.push("traces.csv");
    }
    prepare_output(out, &names)?;
    write_file(&out.out.join("trials.csv"), |w| write_trials_csv(&outcome.records, w))?;
    if !outcome.traces.is_empty() {
        write_file(&out.out.join("traces.csv"), |w| write_traces_csv(&outcome.traces, w))?;
    }
    Ok(())
}

fn sweep(args: &ConfigArgs, out: &OutputArgs, sequential: bool) -> CliResult<()> {
    let cfg = load_config(args)?;
    let mut names = vec!["config.json", "trials.csv", "summary.csv"];
    if cfg.record_traces {
        names.push("traces.csv");
    }
    prepare_output(out, &names)?;
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = run_sweep(&cfg, exec)?;
    let config_path = out.out.join("config.json");
    fs::write(&config_path, cfg.to_json_string() + "\n").map_err(|e| Failure::io(&config_path, e))?;
    write_file(&out.out.join("trials.csv"), |w| write_trials_csv(&result.records, w))?;
    write_file(&out.out.join("summary.csv"), |w| write_summary_csv(&result.summaries, w))?;
    if cfg.record_traces {
        write_file(&out.out.join("traces.csv"), |w| write_traces_csv(&result.traces, w))?;
    }
    Ok(())
}

fn lemmas(out: &OutputArgs, cases: usize, seed: Option<u64>) -> CliResult<u8> {
    if cases == 0 {
        return Err(Failure::config("--cases must be positive"));
    }
    prepare_output(out, &["lemmas.csv"])?;
    let mut cfg = SuiteConfig {
        cases,
        ..SuiteConfig::default()
    };
    if let Some(s) = seed_override(seed)? {
        cfg.seed = s;
    }
    let outcomes = run_suite(&cfg);
    let path = out.out.join("lemmas.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::io(&path, e))?;
    let rows = std::iter::once(["property", "cases", "failures", "passed", "first_failure"].map(String::from)).chain(
        outcomes.iter().map(|o| {
            [
                o.name.to_owned(),
                o.cases.to_string(),
                o.failures.to_string(),
                o.passed().to_string(),
                o.first_failure.clone().unwrap_or_default(),
            ]
        }),
    );
    for row in rows {
        w.write_record(&row).map_err(|e| Failure::io(&path, e))?;
    }
    w.flush().map_err(|e| Failure::io(&path, e))?;
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} properties failed; see {}", outcomes.len(), path.display());
        return Ok(1);
    }
    Ok(0)
}

/// Every `summary.csv` under `dir`, in sorted path order.
fn find_summaries(dir: &Path, found: &mut Vec<PathBuf>) -> CliResult<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Failure::io(dir, err)))
        .collect::<CliResult<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            find_summaries(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "summary.csv") {
            found.push(path);
        }
    }
    Ok(())
}

fn report(out: &OutputArgs, inputs: &[PathBuf]) -> CliResult<()> {
    let mut sources = Vec::new();
    for dir in inputs {
        find_summaries(dir, &mut sources)?;
    }
    let index = out.out.join("index.csv");
    // The index must not list itself when written into a searched directory.
    sources.retain(|p| p != &index);
    prepare_output(out, &["index.csv"])?;
    let mut w = csv::Writer::from_path(&index).map_err(|e| Failure::io(&index, e))?;
    let header: Vec<&str> = std::iter::once("source").chain(SUMMARY_HEADER.iter().copied()).collect();
    w.write_record(&header).map_err(|e| Failure::io(&index, e))?;
    for src in &sources {
        let mut r = csv::Reader::from_path(src).map_err(|e| Failure::io(src, e))?;
        let got = r.headers().map_err(|e| Failure::io(src, e))?.clone();
        if !got.iter().eq(SUMMARY_HEADER.iter().copied()) {
            return Err(Failure::config(format!("{}: not a summary CSV (header {:?})", src.display(), got)));
        }
        let name = src.parent().unwrap_or(src).display().to_string();
        for rec in r.records() {
            let rec = rec.map_err(|e| Failure::io(src, e))?;
            let row: Vec<&str> = std::iter::once(name.as_str()).chain(rec.iter()).collect();
            w.write_record(&row).map_err(|e| Failure::io(&index, e))?;
        }
    }
    w.flush().map_err(|e| Failure::io(&index, e))?;
    eprintln!("indexed {} summary files into {}", sources.len(), index.display());
    Ok(())
}
