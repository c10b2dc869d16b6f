//! Orchestration: ingest, standardize, tune or fix penalties, detect,
//! optionally refine, and assemble the report.

use std::time::Instant;

use cpreg::bench::{binseg_baseline, BinsegConfig};
use cpreg::dp::{detect_cached, LossCache};
use cpreg::lasso::{fit_lasso, LassoConfig};
use cpreg::model::{changepoints_to_partition, ChangePointSet, Dataset};
use cpreg::refine::local_refine;
use cpreg::tuning::{cross_validate_dp, cross_validate_refined, CvOptions, CvResult, TuningGrid};

use crate::error::CliError;
use crate::ingest::{load_csv, standardize_covariates, standardize_response, IngestResult};
use crate::report::{Diagnostics, Parameters, Report, SegmentReport, TuningEntry, TuningReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    DpLr,
    Binseg,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "dp" => Ok(Method::Dp),
            "dp-lr" => Ok(Method::DpLr),
            "binseg" => Ok(Method::Binseg),
            other => Err(CliError::BadArguments(format!(
                "unknown method {other:?}; expected dp, dp-lr or binseg"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::DpLr => "dp-lr",
            Method::Binseg => "binseg",
        }
    }
}

/// Fully resolved run description (flags plus config-file fallbacks).
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub input: std::path::PathBuf,
    pub response: String,
    pub covariates: Option<Vec<String>>,
    pub label_column: Option<String>,
    pub method: Method,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub zeta: Option<f64>,
    pub cv: bool,
    pub grid: Option<TuningGrid>,
    pub stride: usize,
    pub min_seg_len: usize,
    pub standardize: bool,
    pub standardize_covariates: bool,
    pub timing: bool,
}

impl RunSpec {
    fn cv_options(&self) -> CvOptions {
        CvOptions {
            min_seg_len: self.min_seg_len,
            stride: self.stride,
            ..CvOptions::default()
        }
    }
}

fn ingest_and_scale(spec: &RunSpec) -> Result<(Dataset, IngestResult, f64, bool), CliError> {
    let ingest = load_csv(
        &spec.input,
        &spec.response,
        spec.covariates.as_deref(),
        spec.label_column.as_deref(),
    )?;
    let mut data = ingest.data.clone();
    let mut scale = 1.0;
    if spec.standardize {
        let (scaled, sd) = standardize_response(&data)?;
        data = scaled;
        scale = sd;
    }
    let mut cov_standardized = false;
    if spec.standardize_covariates {
        data = standardize_covariates(&data)?;
        cov_standardized = true;
    }
    Ok((data, ingest, scale, cov_standardized))
}

fn tune(spec: &RunSpec, data: &Dataset) -> Result<CvResult, CliError> {
    let with_zetas = spec.method == Method::DpLr;
    let grid = match &spec.grid {
        Some(g) => g.clone(),
        None => TuningGrid::default_for(data.n(), data.p(), with_zetas),
    };
    let opts = spec.cv_options();
    let cv = if with_zetas {
        cross_validate_refined(data, &grid, &opts)?
    } else {
        cross_validate_dp(data, &grid, &opts)?
    };
    Ok(cv)
}

fn tuning_report(cv: &CvResult) -> TuningReport {
    TuningReport {
        best_lambda: cv.best.lambda,
        best_gamma: cv.best.gamma,
        best_zeta: cv.best.zeta,
        table: cv
            .table
            .iter()
            .map(|e| TuningEntry {
                lambda: e.lambda,
                gamma: e.gamma,
                zeta: e.zeta,
                validation_loss: e.validation_loss,
                train_k_hat: e.train_k_hat,
            })
            .collect(),
    }
}

/// Run `detect`: the full pipeline ending in a report.
pub fn run_detect(spec: &RunSpec) -> Result<Report, CliError> {
    let started = Instant::now();
    let (data, ingest, scale, cov_std) = ingest_and_scale(spec)?;
    let opts = spec.cv_options();

    let (tuning, lambda, gamma, zeta) = if spec.cv {
        if spec.method == Method::Binseg {
            return Err(CliError::BadArguments(
                "cross-validation is not available for binseg".into(),
            ));
        }
        let cv = tune(spec, &data)?;
        (
            Some(cv.clone()),
            cv.best.lambda,
            cv.best.gamma,
            cv.best.zeta,
        )
    } else {
        let lambda = spec
            .lambda
            .ok_or_else(|| CliError::BadArguments("--lambda is required without --cv".into()))?;
        let gamma = spec
            .gamma
            .ok_or_else(|| CliError::BadArguments("--gamma is required without --cv".into()))?;
        if spec.method == Method::DpLr && spec.zeta.is_none() {
            return Err(CliError::BadArguments(
                "--zeta is required for dp-lr without --cv".into(),
            ));
        }
        (None, lambda, gamma, spec.zeta)
    };

    let mut cache = LossCache::new();
    let mut non_convergent = 0usize;
    let cps: ChangePointSet = match spec.method {
        Method::Binseg => {
            let mut cfg = BinsegConfig::new(lambda, gamma);
            cfg.min_seg_len = spec.min_seg_len;
            cfg.stride = spec.stride;
            binseg_baseline(&data, &cfg)?
        }
        Method::Dp => detect_cached(&data, &opts.dp_config(lambda, gamma), &mut cache)?,
        Method::DpLr => {
            let prelim = detect_cached(&data, &opts.dp_config(lambda, gamma), &mut cache)?;
            let zeta = zeta.expect("checked above");
            let out = local_refine(&data, &prelim, &opts.refine_config(zeta))?;
            non_convergent += out.non_convergent_solves;
            out.refined
        }
    };

    // Per-segment coefficient estimates at the chosen lambda.
    let partition = changepoints_to_partition(&cps, data.n())?;
    let mut segments = Vec::with_capacity(partition.size());
    for iv in partition.intervals() {
        let fit = fit_lasso(&data, *iv, &LassoConfig::new(lambda))?;
        if !fit.converged {
            non_convergent += 1;
        }
        let support: Vec<usize> = fit
            .beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j + 1)
            .collect();
        let coefficients: Vec<(usize, f64)> = fit
            .beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, b)| (j + 1, *b))
            .collect();
        segments.push(SegmentReport {
            start: iv.first_time(),
            end: iv.end(),
            support,
            coefficients,
            fit_converged: fit.converged,
        });
    }

    let change_point_labels = ingest.labels.as_ref().map(|labels| {
        cps.locations()
            .iter()
            .map(|&t| labels[t - 1].clone())
            .collect()
    });

    Ok(Report {
        tool: "cpreg",
        version: env!("CARGO_PKG_VERSION"),
        method: spec.method.name().to_string(),
        n: data.n(),
        p: data.p(),
        dropped_rows: ingest.dropped_rows,
        response: spec.response.clone(),
        covariates: ingest.covariate_names.clone(),
        standardized_response: spec.standardize,
        response_scale: scale,
        covariates_standardized: cov_std,
        parameters: Parameters {
            lambda: Some(lambda),
            gamma: Some(gamma),
            zeta,
            stride: spec.stride,
            min_seg_len: spec.min_seg_len,
            cv: spec.cv,
        },
        k_hat: cps.k_hat(),
        change_points: cps.locations().to_vec(),
        change_point_labels,
        segments,
        tuning: tuning.as_ref().map(tuning_report),
        diagnostics: Diagnostics {
            non_convergent_fits: non_convergent,
            loss_cache_entries: cache.len(),
            wall_time_ms: if spec.timing {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        },
    })
}

/// Run `tune`: cross-validation only, reporting the table and the mapped
/// training change points under the best tuple.
pub fn run_tune(spec: &RunSpec) -> Result<Report, CliError> {
    let started = Instant::now();
    let (data, ingest, scale, cov_std) = ingest_and_scale(spec)?;
    if spec.method == Method::Binseg {
        return Err(CliError::BadArguments(
            "tune supports dp and dp-lr only".into(),
        ));
    }
    let cv = tune(spec, &data)?;
    let cps = cv.train_changepoints.clone();
    let change_point_labels = ingest.labels.as_ref().map(|labels| {
        cps.locations()
            .iter()
            .map(|&t| labels[t - 1].clone())
            .collect()
    });
    Ok(Report {
        tool: "cpreg",
        version: env!("CARGO_PKG_VERSION"),
        method: spec.method.name().to_string(),
        n: data.n(),
        p: data.p(),
        dropped_rows: ingest.dropped_rows,
        response: spec.response.clone(),
        covariates: ingest.covariate_names.clone(),
        standardized_response: spec.standardize,
        response_scale: scale,
        covariates_standardized: cov_std,
        parameters: Parameters {
            lambda: Some(cv.best.lambda),
            gamma: Some(cv.best.gamma),
            zeta: cv.best.zeta,
            stride: spec.stride,
            min_seg_len: spec.min_seg_len,
            cv: true,
        },
        k_hat: cps.k_hat(),
        change_points: cps.locations().to_vec(),
        change_point_labels,
        segments: Vec::new(),
        tuning: Some(tuning_report(&cv)),
        diagnostics: Diagnostics {
            non_convergent_fits: 0,
            loss_cache_entries: 0,
            wall_time_ms: if spec.timing {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        },
    })
}
