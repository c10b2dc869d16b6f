//! `cpreg`: change point detection for high-dimensional regression time
//! series. Subcommands: detect, tune, simulate, benchmark.

mod config;
mod error;
mod ingest;
mod pipeline;
mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cpreg::bench::{run_benchmark, BenchMethod, BenchmarkSpec, TuningSpec};
use cpreg::sim::{generate_simulation, CovarianceSpec, SimulationConfig};
use cpreg::tuning::{CvOptions, TuningGrid};

use config::ConfigFile;
use error::CliError;
use pipeline::{run_detect, run_tune, Method, RunSpec};
use report::{ErrorBody, ErrorReport};

#[derive(Parser)]
#[command(
    name = "cpreg",
    version,
    about = "Change point localization in regression time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect change points in a CSV time series and emit a JSON report.
    Detect(DetectArgs),
    /// Cross-validate tuning parameters on the odd/even split only.
    Tune(DetectArgs),
    /// Generate a synthetic dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Run a seeded Monte-Carlo benchmark over settings and methods.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Clone)]
struct DetectArgs {
    /// Input CSV file (header row required).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated covariate column names (default: all but response).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Column whose values label the reported change points (e.g. dates).
    #[arg(long)]
    label_column: Option<String>,
    /// dp | dp-lr | binseg.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    /// Select penalties by odd/even cross-validation.
    #[arg(long)]
    cv: bool,
    /// JSON file with the candidate grid (fields lambdas, gammas, zetas).
    #[arg(long)]
    grid_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate-endpoint stride of the partition search.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    min_seg_len: Option<usize>,
    /// Standardize the response to unit sample variance (default).
    #[arg(long, overrides_with = "no_standardize")]
    standardize: bool,
    #[arg(long = "no-standardize")]
    no_standardize: bool,
    /// Also z-score the covariate columns (off by default).
    #[arg(long)]
    standardize_covariates: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value file supplying defaults for any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report wall_time_ms as 0 for byte-stable output.
    #[arg(long)]
    no_timing: bool,
}

impl DetectArgs {
    fn resolve(&self) -> Result<(RunSpec, Option<PathBuf>), CliError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::empty(),
        };

        let input = self
            .input
            .clone()
            .or_else(|| file.get("input").map(PathBuf::from))
            .ok_or_else(|| CliError::BadArguments("--input is required".into()))?;
        let response = self
            .response
            .clone()
            .or_else(|| file.get("response").map(String::from))
            .ok_or_else(|| CliError::BadArguments("--response is required".into()))?;
        let covariates = self.covariates.clone().or_else(|| {
            file.get("covariates")
                .map(|v| v.split(',').map(|s| s.trim().to_string()).collect())
        });
        let label_column = self
            .label_column
            .clone()
            .or_else(|| file.get("label-column").map(String::from));
        let method_name = self
            .method
            .clone()
            .or_else(|| file.get("method").map(String::from))
            .unwrap_or_else(|| "dp".to_string());
        let method = Method::parse(&method_name)?;

        let grid = match self
            .grid_file
            .clone()
            .or_else(|| file.get("grid-file").map(PathBuf::from))
        {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| CliError::MissingInput { path, source })?;
                let grid: TuningGrid = serde_json::from_str(&text)
                    .map_err(|e| CliError::BadArguments(format!("grid file: {e}")))?;
                Some(grid)
            }
            None => None,
        };

        let standardize = if self.no_standardize {
            false
        } else if self.standardize {
            true
        } else {
            file.get("standardize") != Some("false")
        };
        let spec = RunSpec {
            input,
            response,
            covariates,
            label_column,
            method,
            lambda: self.lambda.or(file.parse("lambda")?),
            gamma: self.gamma.or(file.parse("gamma")?),
            zeta: self.zeta.or(file.parse("zeta")?),
            cv: self.cv || file.get("cv") == Some("true"),
            grid,
            stride: self.stride.or(file.parse("stride")?).unwrap_or(1),
            min_seg_len: self.min_seg_len.or(file.parse("min-seg-len")?).unwrap_or(2),
            standardize,
            standardize_covariates: self.standardize_covariates
                || file.get("standardize-covariates") == Some("true"),
            timing: !self.no_timing,
        };
        let output = self
            .output
            .clone()
            .or_else(|| file.get("output").map(PathBuf::from));
        Ok((spec, output))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    p: usize,
    /// Comma-separated true change points (1-based first-new-regime indices).
    #[arg(long, value_delimiter = ',', default_values_t = [121usize, 221, 351, 451])]
    change_points: Vec<usize>,
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, default_value_t = 10)]
    d0: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (defaults to stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the ground truth as JSON.
    #[arg(long)]
    truth_output: Option<PathBuf>,
}

#[derive(Serialize)]
struct TruthFile {
    n: usize,
    p: usize,
    change_points: Vec<usize>,
    kappa: f64,
    d0: usize,
    sigma_eps: f64,
    seed: u64,
    /// Per-segment nonzero coefficients as [index, value] pairs (1-based).
    segments: Vec<TruthSegment>,
}

#[derive(Serialize)]
struct TruthSegment {
    start: usize,
    end: usize,
    coefficients: Vec<(usize, f64)>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// JSON file with named settings; falls back to the single setting
    /// described by the flags below.
    #[arg(long)]
    settings_file: Option<PathBuf>,
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    p: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [121usize, 221, 351, 451])]
    change_points: Vec<usize>,
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, default_value_t = 10)]
    d0: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma_eps: f64,
    /// Comma-separated subset of dp, dp-lr, binseg.
    #[arg(long, value_delimiter = ',', default_values_t = ["dp".to_string()])]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Base seed; replicate r uses base_seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tune (lambda, gamma[, zeta]) by cross-validation per replicate.
    #[arg(long)]
    cv: bool,
    #[arg(long)]
    grid_file: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 2)]
    min_seg_len: usize,
    /// Write the JSON table here (defaults to stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the TSV rendering here.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct NamedSetting {
    name: String,
    config: SimulationConfig,
}

fn write_out(path: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_report(report: &report::Report, output: Option<&PathBuf>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::BadArguments(format!("report serialization: {e}")))?;
    text.push('\n');
    write_out(output, &text)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = SimulationConfig {
        n: args.n,
        p: args.p,
        change_points: args.change_points.clone(),
        kappa: args.kappa,
        d0: args.d0,
        sigma_eps: args.sigma_eps,
        sigma: CovarianceSpec::Identity,
        seed: args.seed,
        alternate_signs: true,
    };
    let (data, betas) = generate_simulation(&cfg)?;

    let mut csv_text = String::from("y");
    for j in 1..=args.p {
        csv_text.push_str(&format!(",x{j}"));
    }
    csv_text.push('\n');
    for t in 0..args.n {
        csv_text.push_str(&format!("{}", data.y()[t]));
        for j in 0..args.p {
            csv_text.push_str(&format!(",{}", data.x(t, j)));
        }
        csv_text.push('\n');
    }
    write_out(args.output.as_ref(), &csv_text)?;

    if let Some(path) = &args.truth_output {
        let truth = TruthFile {
            n: args.n,
            p: args.p,
            change_points: args.change_points.clone(),
            kappa: args.kappa,
            d0: args.d0,
            sigma_eps: args.sigma_eps,
            seed: args.seed,
            segments: betas
                .segments()
                .iter()
                .map(|(iv, beta)| TruthSegment {
                    start: iv.first_time(),
                    end: iv.end(),
                    coefficients: beta
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| **b != 0.0)
                        .map(|(j, b)| (j + 1, *b))
                        .collect(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&truth)
            .map_err(|e| CliError::BadArguments(format!("truth serialization: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn run_benchmark_cmd(args: &BenchmarkArgs) -> Result<(), CliError> {
    let settings: Vec<(String, SimulationConfig)> = match &args.settings_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::MissingInput {
                path: path.clone(),
                source,
            })?;
            let named: Vec<NamedSetting> = serde_json::from_str(&text)
                .map_err(|e| CliError::BadArguments(format!("settings file: {e}")))?;
            named.into_iter().map(|s| (s.name, s.config)).collect()
        }
        None => vec![(
            format!("kappa={},d0={}", args.kappa, args.d0),
            SimulationConfig {
                n: args.n,
                p: args.p,
                change_points: args.change_points.clone(),
                kappa: args.kappa,
                d0: args.d0,
                sigma_eps: args.sigma_eps,
                sigma: CovarianceSpec::Identity,
                seed: args.seed,
                alternate_signs: true,
            },
        )],
    };

    let grid = match &args.grid_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::MissingInput {
                path: path.clone(),
                source,
            })?;
            Some(
                serde_json::from_str::<TuningGrid>(&text)
                    .map_err(|e| CliError::BadArguments(format!("grid file: {e}")))?,
            )
        }
        None => None,
    };

    let tuning_for = |needs_zeta: bool| -> Result<TuningSpec, CliError> {
        if args.cv {
            let g = grid.clone().unwrap_or_else(|| {
                let (n, p) = settings
                    .first()
                    .map(|(_, c)| (c.n, c.p))
                    .unwrap_or((args.n, args.p));
                TuningGrid::default_for(n, p, needs_zeta)
            });
            Ok(TuningSpec::CrossValidated { grid: g })
        } else {
            let lambda = args.lambda.ok_or_else(|| {
                CliError::BadArguments("--lambda is required without --cv".into())
            })?;
            let gamma = args
                .gamma
                .ok_or_else(|| CliError::BadArguments("--gamma is required without --cv".into()))?;
            if needs_zeta && args.zeta.is_none() {
                return Err(CliError::BadArguments(
                    "--zeta is required for dp-lr without --cv".into(),
                ));
            }
            Ok(TuningSpec::Fixed {
                lambda,
                gamma,
                zeta: args.zeta,
            })
        }
    };

    let mut methods = Vec::new();
    for name in &args.methods {
        let method = match name.as_str() {
            "dp" => BenchMethod::Dp(tuning_for(false)?),
            "dp-lr" => BenchMethod::DpLr(tuning_for(true)?),
            "binseg" => {
                let lambda = args
                    .lambda
                    .ok_or_else(|| CliError::BadArguments("binseg requires --lambda".into()))?;
                let gamma = args
                    .gamma
                    .ok_or_else(|| CliError::BadArguments("binseg requires --gamma".into()))?;
                BenchMethod::Binseg { lambda, gamma }
            }
            other => return Err(CliError::BadArguments(format!("unknown method {other:?}"))),
        };
        methods.push((name.clone(), method));
    }

    let spec = BenchmarkSpec {
        settings,
        methods,
        reps: args.reps,
        base_seed: args.seed,
        opts: CvOptions {
            min_seg_len: args.min_seg_len,
            stride: args.stride,
            ..CvOptions::default()
        },
    };
    let table = run_benchmark(&spec)?;
    if let Some(path) = &args.table {
        std::fs::write(path, table.to_tsv())?;
    }
    let mut json = table.to_json();
    json.push('\n');
    write_out(args.output.as_ref(), &json)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Detect(args) => {
            let (spec, output) = args.resolve()?;
            let report = run_detect(&spec)?;
            emit_report(&report, output.as_ref())
        }
        Command::Tune(args) => {
            let (spec, output) = args.resolve()?;
            let report = run_tune(&spec)?;
            emit_report(&report, output.as_ref())
        }
        Command::Simulate(args) => run_simulate(args),
        Command::Benchmark(args) => run_benchmark_cmd(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        let body = ErrorReport {
            error: ErrorBody {
                code: err.exit_code(),
                kind: err.kind(),
                message: err.to_string(),
            },
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&body).unwrap_or_else(|_| err.to_string())
        );
        std::process::exit(err.exit_code());
    }
}
