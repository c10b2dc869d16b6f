//! Monte-Carlo benchmark harness and a naive binary-segmentation baseline.
//!
//! Replicates are independent and run in parallel; replicate `r` derives its
//! generator seed as `base_seed + r`, so tables are identical regardless of
//! scheduling. Rows report the mean and standard deviation of the scaled
//! Hausdorff distance per (setting, method), both over all replicates and
//! restricted to the replicates with the correct change point count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{self, detect_cached, LossCache};
use crate::eval::hausdorff_scaled;
use crate::lasso::LassoConfig;
use crate::model::{ChangePointSet, Dataset, IntegerInterval};
use crate::refine::local_refine;
use crate::sim::{generate_simulation, SimulationConfig};
use crate::tuning::{cross_validate_dp, cross_validate_refined, CvOptions, TuningGrid};
use crate::{Error, Result};

/// Greedy binary segmentation on the Lasso segment loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BinsegConfig {
    /// A split is kept while it lowers the loss by more than `gamma`.
    pub gamma: f64,
    pub lasso: LassoConfig,
    pub min_seg_len: usize,
    /// Recursion depth limit.
    pub max_depth: usize,
    /// Candidate-split stride.
    pub stride: usize,
}

impl BinsegConfig {
    pub fn new(lambda: f64, gamma: f64) -> Self {
        Self {
            gamma,
            lasso: LassoConfig::new(lambda),
            min_seg_len: 2,
            max_depth: 16,
            stride: 1,
        }
    }
}

/// Recursively split `(s, e]` at the loss-minimizing boundary while the gain
/// over the unsplit loss exceeds `gamma`.
pub fn binseg_baseline(data: &Dataset, cfg: &BinsegConfig) -> Result<ChangePointSet> {
    if !(cfg.gamma.is_finite() && cfg.gamma >= 0.0) && cfg.gamma != f64::INFINITY {
        return Err(Error::InvalidConfig(format!(
            "gamma must be >= 0, got {}",
            cfg.gamma
        )));
    }
    if cfg.min_seg_len == 0 || cfg.stride == 0 || cfg.max_depth == 0 {
        return Err(Error::InvalidConfig(
            "min_seg_len, stride and max_depth must be >= 1".into(),
        ));
    }
    cfg.lasso.validate()?;
    let mut cache = LossCache::new();
    let mut splits = Vec::new();
    split_segment(
        data,
        cfg,
        0,
        data.n(),
        cfg.max_depth,
        &mut cache,
        &mut splits,
    )?;
    splits.sort_unstable();
    ChangePointSet::new(splits.iter().map(|&b| b + 1).collect(), data.n())
}

fn split_segment(
    data: &Dataset,
    cfg: &BinsegConfig,
    s: usize,
    e: usize,
    depth: usize,
    cache: &mut LossCache,
    splits: &mut Vec<usize>,
) -> Result<()> {
    if depth == 0 || e - s < 2 * cfg.min_seg_len {
        return Ok(());
    }
    let whole = dp::segment_loss(data, IntegerInterval::new(s, e)?, &cfg.lasso, cache)?;
    let mut best: Option<(usize, f64)> = None;
    let mut b = s + cfg.min_seg_len;
    while b + cfg.min_seg_len <= e {
        let left = dp::segment_loss(data, IntegerInterval::new(s, b)?, &cfg.lasso, cache)?;
        let right = dp::segment_loss(data, IntegerInterval::new(b, e)?, &cfg.lasso, cache)?;
        let total = left + right;
        if best.map(|(_, t)| total < t).unwrap_or(true) {
            best = Some((b, total));
        }
        b += cfg.stride;
    }
    if let Some((b, total)) = best {
        if whole - total > cfg.gamma {
            splits.push(b);
            split_segment(data, cfg, s, b, depth - 1, cache, splits)?;
            split_segment(data, cfg, b, e, depth - 1, cache, splits)?;
        }
    }
    Ok(())
}

/// How a method picks its penalties on each replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TuningSpec {
    Fixed {
        lambda: f64,
        gamma: f64,
        zeta: Option<f64>,
    },
    CrossValidated {
        grid: TuningGrid,
    },
}

/// A benchmarked method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BenchMethod {
    Dp(TuningSpec),
    DpLr(TuningSpec),
    Binseg { lambda: f64, gamma: f64 },
}

impl BenchMethod {
    fn needs_zeta(&self) -> bool {
        matches!(self, BenchMethod::DpLr(_))
    }
}

/// Full description of a benchmark sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub settings: Vec<(String, SimulationConfig)>,
    pub methods: Vec<(String, BenchMethod)>,
    pub reps: usize,
    pub base_seed: u64,
    pub opts: CvOptions,
}

/// One (setting, method, replicate) outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub setting: String,
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub scaled_hausdorff: Option<f64>,
    pub k_hat: Option<usize>,
    pub k_true: usize,
    pub error: Option<String>,
}

/// Aggregated row, mirroring the "All" / "K-hat = K" presentation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub setting: String,
    pub method: String,
    pub n_reps: usize,
    pub mean: f64,
    pub sd: f64,
    pub frac_k_match: f64,
    pub mean_k_match: Option<f64>,
    pub sd_k_match: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    pub replicates: Vec<ReplicateRecord>,
}

impl BenchmarkTable {
    /// Tab-separated rendering of the aggregate rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "setting\tmethod\tn_reps\tmean\tsd\tfrac_k_match\tmean_k_match\tsd_k_match\tfailures\n",
        );
        for r in &self.rows {
            let fmt_opt =
                |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.4}\t{}\t{}\t{}\n",
                r.setting,
                r.method,
                r.n_reps,
                r.mean,
                r.sd,
                r.frac_k_match,
                fmt_opt(r.mean_k_match),
                fmt_opt(r.sd_k_match),
                r.failures
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("benchmark table serializes")
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Estimate the change points of one dataset with one method.
pub fn run_method(
    data: &Dataset,
    method: &BenchMethod,
    opts: &CvOptions,
) -> Result<ChangePointSet> {
    match method {
        BenchMethod::Binseg { lambda, gamma } => {
            let mut cfg = BinsegConfig::new(*lambda, *gamma);
            cfg.min_seg_len = opts.min_seg_len;
            cfg.stride = opts.stride;
            binseg_baseline(data, &cfg)
        }
        BenchMethod::Dp(tuning) => {
            let (lambda, gamma) = match tuning {
                TuningSpec::Fixed { lambda, gamma, .. } => (*lambda, *gamma),
                TuningSpec::CrossValidated { grid } => {
                    let cv = cross_validate_dp(data, grid, opts)?;
                    (cv.best.lambda, cv.best.gamma)
                }
            };
            let mut cache = LossCache::new();
            detect_cached(data, &opts.dp_config(lambda, gamma), &mut cache)
        }
        BenchMethod::DpLr(tuning) => {
            let (lambda, gamma, zeta) = match tuning {
                TuningSpec::Fixed {
                    lambda,
                    gamma,
                    zeta,
                } => {
                    let zeta = zeta
                        .ok_or_else(|| Error::InvalidConfig("DP.LR needs a fixed zeta".into()))?;
                    (*lambda, *gamma, zeta)
                }
                TuningSpec::CrossValidated { grid } => {
                    let cv = cross_validate_refined(data, grid, opts)?;
                    (
                        cv.best.lambda,
                        cv.best.gamma,
                        cv.best.zeta.expect("refined cv sets zeta"),
                    )
                }
            };
            let mut cache = LossCache::new();
            let prelim = detect_cached(data, &opts.dp_config(lambda, gamma), &mut cache)?;
            Ok(local_refine(data, &prelim, &opts.refine_config(zeta))?.refined)
        }
    }
}

/// Run the full sweep: settings x methods x replicates.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkTable> {
    if spec.reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    if spec.settings.is_empty() || spec.methods.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one setting and one method".into(),
        ));
    }
    for (name, method) in &spec.methods {
        if let BenchMethod::Dp(TuningSpec::CrossValidated { grid })
        | BenchMethod::DpLr(TuningSpec::CrossValidated { grid }) = method
        {
            grid.validate(method.needs_zeta())
                .map_err(|e| Error::InvalidConfig(format!("method {name}: {e}")))?;
        }
    }

    let jobs: Vec<(usize, usize)> = (0..spec.settings.len())
        .flat_map(|si| (0..spec.reps).map(move |r| (si, r)))
        .collect();

    let records: Vec<Vec<ReplicateRecord>> = jobs
        .par_iter()
        .map(|&(si, rep)| {
            let (setting_name, base_cfg) = &spec.settings[si];
            let seed = spec.base_seed + rep as u64;
            let cfg = SimulationConfig {
                seed,
                ..base_cfg.clone()
            };
            let truth = ChangePointSet::new(cfg.change_points.clone(), cfg.n)
                .expect("validated by the generator");
            let generated = generate_simulation(&cfg);
            spec.methods
                .iter()
                .map(|(method_name, method)| {
                    let outcome = generated
                        .as_ref()
                        .map_err(|e| e.clone())
                        .and_then(|(data, _)| run_method(data, method, &spec.opts));
                    match outcome {
                        Ok(est) => {
                            let eval = hausdorff_scaled(&est, &truth, cfg.n);
                            ReplicateRecord {
                                setting: setting_name.clone(),
                                method: method_name.clone(),
                                rep,
                                seed,
                                scaled_hausdorff: Some(eval.hausdorff_scaled),
                                k_hat: Some(eval.k_hat),
                                k_true: eval.k_true,
                                error: None,
                            }
                        }
                        Err(e) => ReplicateRecord {
                            setting: setting_name.clone(),
                            method: method_name.clone(),
                            rep,
                            seed,
                            scaled_hausdorff: None,
                            k_hat: None,
                            k_true: truth.k_hat(),
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect()
        })
        .collect();
    let replicates: Vec<ReplicateRecord> = records.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for (setting_name, _) in &spec.settings {
        for (method_name, _) in &spec.methods {
            let group: Vec<&ReplicateRecord> = replicates
                .iter()
                .filter(|r| &r.setting == setting_name && &r.method == method_name)
                .collect();
            let ok: Vec<&ReplicateRecord> = group
                .iter()
                .filter(|r| r.error.is_none())
                .copied()
                .collect();
            let all: Vec<f64> = ok.iter().filter_map(|r| r.scaled_hausdorff).collect();
            let matched: Vec<f64> = ok
                .iter()
                .filter(|r| r.k_hat == Some(r.k_true))
                .filter_map(|r| r.scaled_hausdorff)
                .collect();
            let (mean, sd) = mean_sd(&all);
            let (mean_m, sd_m) = mean_sd(&matched);
            rows.push(BenchmarkRow {
                setting: setting_name.clone(),
                method: method_name.clone(),
                n_reps: group.len(),
                mean,
                sd,
                frac_k_match: if ok.is_empty() {
                    0.0
                } else {
                    matched.len() as f64 / ok.len() as f64
                },
                mean_k_match: (!matched.is_empty()).then_some(mean_m),
                sd_k_match: (!matched.is_empty()).then_some(sd_m),
                failures: group.len() - ok.len(),
            });
        }
    }

    Ok(BenchmarkTable { rows, replicates })
}
