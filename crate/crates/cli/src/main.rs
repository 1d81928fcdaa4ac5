use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phone_core::runner::{
    self, parse_list, run_sweep_traced, write_csv, write_metadata, write_trace_csv, Algorithm,
    MetricsRecord, SweepParam, SweepSpec,
};
use phone_core::{ConfigError, Error, SystemConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_ROW_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "phone",
    version,
    about = "Energy-efficient hybrid precoding sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over one system dimension, written as CSV.
    Sweep {
        /// Flat `key = value` file; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Swept dimension: nt, nrf or k.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated sweep values.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated subset of phone, omp_full, omp_partial.
        #[arg(long)]
        algorithms: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Run sweep cells on a thread pool; output is identical.
        #[arg(long)]
        parallel: bool,
    },
    /// One channel draw at the configured point, printed as `key=value`.
    Single {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "phone")]
        algorithm: String,
    },
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(path: Option<&Path>) -> Result<(SystemConfig, SweepSpec), Failure> {
    match path {
        Some(p) => Ok(runner::load_config(p).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", p.display())),
            other => other.into(),
        })?),
        None => Ok(runner::parse_config("")?),
    }
}

fn config_arg<T>(key: &str, parsed: Result<T, String>) -> Result<T, Failure> {
    parsed.map_err(|e| Failure::Config(ConfigError::new(key, e).to_string()))
}

fn report_failures(records: &[MetricsRecord]) -> bool {
    let mut any = false;
    for r in records {
        if let Some(e) = &r.error {
            eprintln!(
                "row failed: {} {}={} trial {}: {e}",
                r.algorithm, r.param, r.value, r.trial
            );
            any = true;
        }
    }
    any
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: Option<PathBuf>,
    param: Option<String>,
    values: Option<String>,
    trials: Option<usize>,
    algorithms: Option<String>,
    seed: Option<u64>,
    out: PathBuf,
    trace: Option<PathBuf>,
    parallel: bool,
) -> Result<bool, Failure> {
    let (cfg, mut spec) = load(config.as_deref())?;
    if let Some(p) = param {
        spec.param = config_arg("param", p.parse::<SweepParam>())?;
    }
    if let Some(v) = values {
        spec.values = config_arg("values", parse_list(&v))?;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(a) = algorithms {
        spec.algorithms = config_arg("algorithms", parse_list::<Algorithm>(&a))?;
    }
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    spec.parallel |= parallel;
    spec.validate(&cfg)?;

    let (records, traces) = run_sweep_traced(&cfg, &spec);
    write_csv(&records, &out)?;
    let mut meta = out.clone().into_os_string();
    meta.push(".meta");
    write_metadata(&cfg, &spec, PathBuf::from(meta))?;
    if let Some(path) = trace {
        write_trace_csv(&traces, path)?;
    }
    Ok(report_failures(&records))
}

fn single(config: Option<PathBuf>, seed: u64, algorithm: String) -> Result<bool, Failure> {
    let (cfg, mut spec) = load(config.as_deref())?;
    spec.algorithms = vec![config_arg("algorithm", algorithm.parse::<Algorithm>())?];
    spec.values = Vec::new();
    spec.trials = 1;
    spec.base_seed = seed;
    spec.validate(&cfg)?;
    let records = runner::run_sweep(&cfg, &spec);
    let r = &records[0];
    for (k, v) in r.to_key_values() {
        println!("{k}={v}");
    }
    Ok(report_failures(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep {
            config,
            param,
            values,
            trials,
            algorithms,
            seed,
            out,
            trace,
            parallel,
        } => sweep(
            config, param, values, trials, algorithms, seed, out, trace, parallel,
        ),
        Command::Single {
            config,
            seed,
            algorithm,
        } => single(config, seed, algorithm),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_ROW_FAILURE),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
