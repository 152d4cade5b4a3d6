//! `mnac`: bounds, simulations, sweeps and partition checks for the Gaussian
//! random many-access channel.

mod bounds;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mnac_core::codebook::{
    gen_codebook, mu_chernoff_lb, mu_exact, mu_monte_carlo, write_matrix_binary, write_matrix_csv, MuMethod,
};
use mnac_core::decoding::BoundParams;
use mnac_core::harness::{
    classify_regime, sweep, sweep_csv, trials_csv, ExperimentConfig, GrowthFamily, SweepOptions, REGIME_TOLERANCE,
};
use mnac_core::model::Scheme;
use mnac_core::partition::{build_partition_with_budget, verify_partition, DEFAULT_ENUMERATION_BUDGET};
use mnac_core::rng::{stream_rng, Stream};
use serde::Serialize;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config files, or parameters outside a function's domain.
    Config(String),
    /// A search exceeded its complexity budget.
    Budget(String),
    /// Anything else: I/O on outputs, sampler exhaustion.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Budget(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<mnac_core::Error> for CliError {
    fn from(e: mnac_core::Error) -> Self {
        use mnac_core::Error as E;
        match e {
            E::ComplexityBudget { .. } => CliError::Budget(e.to_string()),
            E::RejectionLimit(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "mnac", version, about = "Many-access channel bounds and Monte Carlo harness")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials; overrides the config file.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads for trial execution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a bound by name with JSON parameters.
    Bounds {
        /// Bound name, e.g. ortho_code_bound.
        name: String,
        /// Inline JSON object of parameters.
        #[arg(long, conflicts_with = "params_file")]
        params: Option<String>,
        /// File holding the JSON parameters.
        #[arg(long)]
        params_file: Option<PathBuf>,
    },
    /// Run one experiment: summary JSON and per-trial CSV.
    Simulate {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Also write the per-trial CSV here.
        #[arg(long)]
        csv_out: Option<PathBuf>,
        /// Also write the summary JSON here.
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
    /// Evaluate bounds (and optionally simulate) along a growth family.
    Sweep {
        /// Family JSON file, or the built-in `sub` / `sup`.
        #[arg(long)]
        family: String,
        /// Comma-separated blocklengths.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long, value_enum, default_value = "joint")]
        scheme: SchemeArg,
        /// Signature or pilot fraction.
        #[arg(long)]
        split: Option<f64>,
        /// Rate as a fraction of the single-user capacity per unit energy.
        #[arg(long, default_value_t = 0.25)]
        fraction: f64,
        /// Overflow factor.
        #[arg(long)]
        xi: Option<u32>,
        /// Skip Monte Carlo; evaluate bounds only.
        #[arg(long)]
        bounds_only: bool,
    },
    /// Build and verify the type-class partition.
    Partition {
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        t: usize,
        /// Largest type class that may be enumerated.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        /// Include the sets themselves in the JSON output.
        #[arg(long)]
        dump: bool,
    },
    /// Classify a growth family as sublinear or superlinear.
    Classify {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long, default_value_t = REGIME_TOLERANCE)]
        tolerance: f64,
    },
    /// Truncation normalizer of the Gaussian codebook ensemble.
    Mu {
        #[arg(long)]
        len: usize,
        #[arg(long, value_enum, default_value = "exact")]
        method: MuArg,
    },
    /// Export a random codebook snapshot.
    Codebook {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        len: usize,
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        out: PathBuf,
        /// Flat binary instead of CSV.
        #[arg(long)]
        binary: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Joint,
    Ortho,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MuArg {
    Exact,
    Chernoff,
    Mc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Bounds { ref name, ref params, ref params_file } => {
            reject_csv(cli.format, "bounds")?;
            let text = match (params, params_file) {
                (Some(p), _) => p.clone(),
                (None, Some(path)) => read_config(path)?,
                (None, None) => "{}".to_owned(),
            };
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("parameters are not JSON: {e}")))?;
            let report = bounds::evaluate(name, &value)?;
            write_json(&mut out, &report)?;
        }
        Command::Simulate { ref config, ref csv_out, ref summary_out } => {
            let mut cfg: ExperimentConfig = serde_json::from_str(&read_config(config)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(trials) = cli.trials {
                cfg.trials = trials;
            }
            let experiment = cfg.resolve()?;
            let records = experiment.run_trials(cfg.trials, cli.threads)?;
            let summary = experiment.summarize(&records)?;
            let csv = trials_csv(&records);
            if let Some(path) = csv_out {
                fs::write(path, &csv)?;
            }
            if let Some(path) = summary_out {
                fs::write(path, json_string(&summary)? + "\n")?;
            }
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(&mut out, &summary)?,
                Format::Csv => out.write_all(csv.as_bytes())?,
            }
        }
        Command::Sweep { ref family, ref grid, scheme, split, fraction, xi, bounds_only } => {
            let family = load_family(family)?;
            let mut bounds = BoundParams::default();
            if let Some(xi) = xi {
                bounds.xi = xi;
            }
            bounds.validate()?;
            let defaults = SweepOptions::default();
            let opts = SweepOptions {
                scheme: match scheme {
                    SchemeArg::Joint => Scheme::Joint,
                    SchemeArg::Ortho => Scheme::Ortho,
                },
                split,
                capacity_fraction: fraction,
                bounds,
                trials: cli.trials.unwrap_or(defaults.trials),
                seed: cli.seed.unwrap_or(defaults.seed),
                simulate: !bounds_only,
                threads: cli.threads,
                budget: defaults.budget,
            };
            let table = sweep(&family, grid, &opts);
            for point in &table.points {
                for err in &point.errors {
                    eprintln!("n = {}: {err}", point.n);
                }
            }
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => out.write_all(sweep_csv(&table).as_bytes())?,
                Format::Json => write_json(&mut out, &table)?,
            }
        }
        Command::Partition { ell, m, t, budget, dump } => {
            let partition = build_partition_with_budget(ell, m, t, budget)?;
            let report = verify_partition(&partition);
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Dump<'a> {
                        ell: usize,
                        m: u32,
                        t: usize,
                        report: &'a mnac_core::partition::PartitionReport,
                        #[serde(skip_serializing_if = "Option::is_none")]
                        partition: Option<&'a mnac_core::partition::Partition>,
                    }
                    let dump = Dump { ell, m, t, report: &report, partition: dump.then_some(&partition) };
                    write_json(&mut out, &dump)?;
                }
                Format::Csv => {
                    writeln!(out, "set,size,diameter,radius")?;
                    for (i, s) in report.sets.iter().enumerate() {
                        writeln!(out, "{i},{},{},{}", s.size, s.diameter, s.radius)?;
                    }
                }
            }
            if !report.passed {
                out.flush()?;
                return Err(CliError::Runtime("partition failed verification".into()));
            }
        }
        Command::Classify { ref family, ref grid, tolerance } => {
            let family = load_family(family)?;
            let (regime, slope) = classify_regime(&family, grid, tolerance)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(
                    &mut out,
                    &serde_json::json!({ "family": family.name, "regime": regime, "slope": slope, "tolerance": tolerance }),
                )?,
                Format::Csv => {
                    let regime = serde_json::to_value(regime).map_err(|e| CliError::Runtime(e.to_string()))?;
                    writeln!(out, "family,regime,slope\n{},{},{slope:?}", family.name, regime.as_str().unwrap_or(""))?;
                }
            }
        }
        Command::Mu { len, method } => {
            let estimate = match method {
                MuArg::Exact => mu_exact(len)?,
                MuArg::Chernoff => mu_chernoff_lb(len)?,
                MuArg::Mc => {
                    let mut rng = stream_rng(cli.seed.unwrap_or(0), Stream::Auxiliary);
                    mu_monte_carlo(len, cli.trials.unwrap_or(1_000_000), &mut rng)?
                }
            };
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(&mut out, &estimate)?,
                Format::Csv => {
                    let method = match estimate.method {
                        MuMethod::Exact => "exact",
                        MuMethod::ChernoffLb => "chernoff-lb",
                        MuMethod::MonteCarlo => "monte-carlo",
                    };
                    let stderr = estimate.stderr.map(|s| format!("{s:?}")).unwrap_or_default();
                    writeln!(out, "len,method,value,stderr\n{len},{method},{:?},{stderr}", estimate.value)?;
                }
            }
        }
        Command::Codebook { m, len, energy, ref out, binary } => {
            let mut rng = stream_rng(cli.seed.unwrap_or(0), Stream::Codebooks);
            let book = gen_codebook(m, len, energy, &mut rng)?;
            let file = BufWriter::new(fs::File::create(out)?);
            if binary {
                write_matrix_binary(book.words(), file)?;
            } else {
                write_matrix_csv(book.words(), file)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn reject_csv(format: Option<Format>, command: &str) -> CliResult {
    match format {
        Some(Format::Csv) => Err(CliError::Config(format!("{command} only supports --format json"))),
        _ => Ok(()),
    }
}

fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_family(spec: &str) -> CliResult<GrowthFamily> {
    match spec {
        "sub" => Ok(GrowthFamily::sub()),
        "sup" => Ok(GrowthFamily::sup()),
        path => serde_json::from_str(&read_config(Path::new(path))?)
            .map_err(|e| CliError::Config(format!("{path}: {e}"))),
    }
}

fn json_string<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_json<T: Serialize, W: Write>(out: &mut W, value: &T) -> CliResult {
    writeln!(out, "{}", json_string(value)?)?;
    Ok(())
}
