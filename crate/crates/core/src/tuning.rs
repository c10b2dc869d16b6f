//! Odd/even-split cross-validation for the penalty parameters.
//!
//! Rows with odd 1-based index form the training set, even rows the
//! validation set. For every grid tuple the detector runs on the training
//! subsequence, coefficients are refit per estimated training segment, the
//! segment boundaries are mapped back to the full timeline (training index
//! `j` maps to full index `2j - 1`), and the tuple is scored by the mean
//! squared prediction error over the validation rows. Ties select the
//! lexicographically smallest tuple.
//!
//! Two pipelines are supported: the plain detector tuned over `(lambda,
//! gamma)` with segment refits by the interval-scaled Lasso, and the
//! detector-plus-refinement pipeline tuned jointly over `(lambda, gamma,
//! zeta)`, whose scoring refit uses the penalty `zeta * sqrt(|I|) * ||v||_1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{dp_partition_cached, DpConfig, LossCache};
use crate::lasso::{self, LassoConfig};
use crate::model::{
    changepoints_to_partition, partition_to_changepoints, ChangePointSet, Dataset, IntegerInterval,
};
use crate::refine::{local_refine, RefineConfig};
use crate::{Error, Result};

/// Candidate values for the grid search. `zetas` is only consulted by the
/// refined pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub zetas: Option<Vec<f64>>,
}

impl TuningGrid {
    /// Default grid anchored to the theoretical rates with the unknown
    /// constants swept: `lambda` and `zeta` scale with `sqrt(ln(n v p))`,
    /// `gamma` with `ln(n v p)`.
    pub fn default_for(n: usize, p: usize, with_zetas: bool) -> Self {
        let log_np = (n.max(p) as f64).ln();
        let root = log_np.sqrt();
        Self {
            lambdas: [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|c| c * root).collect(),
            gammas: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|c| c * log_np)
                .collect(),
            zetas: with_zetas.then(|| [0.5, 1.0, 2.0, 4.0].iter().map(|c| c * root).collect()),
        }
    }

    pub fn validate(&self, need_zetas: bool) -> Result<()> {
        let check = |name: &str, vals: &[f64]| -> Result<()> {
            if vals.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} grid is empty")));
            }
            if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} grid must be finite and >= 0"
                )));
            }
            Ok(())
        };
        check("lambda", &self.lambdas)?;
        check("gamma", &self.gammas)?;
        match (&self.zetas, need_zetas) {
            (Some(z), _) => check("zeta", z)?,
            (None, true) => {
                return Err(Error::InvalidConfig(
                    "refined tuning requires a zeta grid".into(),
                ))
            }
            (None, false) => {}
        }
        Ok(())
    }

    fn sorted(&self) -> Self {
        let mut sort = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
            v
        };
        Self {
            lambdas: sort(&self.lambdas),
            gammas: sort(&self.gammas),
            zetas: self.zetas.as_deref().map(&mut sort),
        }
    }
}

/// Detector options shared by every tuple of a grid search (everything except
/// the tuned penalties themselves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub lasso_tol: f64,
    pub lasso_max_sweeps: usize,
    pub min_seg_len: usize,
    pub stride: usize,
    pub eta_stride: usize,
    pub group_tol: f64,
    pub max_block_sweeps: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            lasso_tol: 1e-8,
            lasso_max_sweeps: 10_000,
            min_seg_len: 2,
            stride: 1,
            eta_stride: 1,
            group_tol: 1e-7,
            max_block_sweeps: 5000,
        }
    }
}

impl CvOptions {
    pub fn dp_config(&self, lambda: f64, gamma: f64) -> DpConfig {
        let mut lasso = LassoConfig::new(lambda);
        lasso.tol = self.lasso_tol;
        lasso.max_sweeps = self.lasso_max_sweeps;
        DpConfig {
            gamma,
            lasso,
            min_seg_len: self.min_seg_len,
            stride: self.stride,
        }
    }

    pub fn refine_config(&self, zeta: f64) -> RefineConfig {
        RefineConfig {
            zeta,
            group_tol: self.group_tol,
            max_block_sweeps: self.max_block_sweeps,
            eta_stride: self.eta_stride,
        }
    }
}

/// Index maps between the two split subsequences and the full timeline, all
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMaps {
    train_to_full: Vec<usize>,
    valid_to_full: Vec<usize>,
}

impl IndexMaps {
    /// Full index of the 1-based training index `j`: `2j - 1`.
    pub fn full_of_train(&self, j: usize) -> usize {
        self.train_to_full[j - 1]
    }

    /// Full index of the 1-based validation index `j`: `2j`.
    pub fn full_of_valid(&self, j: usize) -> usize {
        self.valid_to_full[j - 1]
    }

    pub fn train_of_full(&self, t: usize) -> Option<usize> {
        (t % 2 == 1 && t <= *self.train_to_full.last().unwrap()).then(|| t.div_ceil(2))
    }

    pub fn valid_of_full(&self, t: usize) -> Option<usize> {
        (t.is_multiple_of(2) && !self.valid_to_full.is_empty())
            .then_some(t / 2)
            .filter(|&j| j >= 1 && j <= self.valid_to_full.len())
    }

    pub fn train_to_full(&self) -> &[usize] {
        &self.train_to_full
    }

    pub fn valid_to_full(&self) -> &[usize] {
        &self.valid_to_full
    }
}

/// Split into training rows (odd 1-based indices) and validation rows (even).
pub fn split_odd_even(data: &Dataset) -> Result<(Dataset, Dataset, IndexMaps)> {
    if data.n() < 4 {
        return Err(Error::InvalidDataset(format!(
            "odd/even split needs n >= 4, got {}",
            data.n()
        )));
    }
    let train_rows: Vec<usize> = (0..data.n()).step_by(2).collect();
    let valid_rows: Vec<usize> = (1..data.n()).step_by(2).collect();
    let maps = IndexMaps {
        train_to_full: train_rows.iter().map(|r| r + 1).collect(),
        valid_to_full: valid_rows.iter().map(|r| r + 1).collect(),
    };
    Ok((
        data.select_rows(&train_rows)?,
        data.select_rows(&valid_rows)?,
        maps,
    ))
}

/// Mean squared prediction error over the validation rows, predicting each
/// row with the coefficients of the full-timeline segment containing it.
pub fn validation_loss(
    valid: &Dataset,
    valid_to_full: &[usize],
    segments: &[(IntegerInterval, Vec<f64>)],
) -> Result<f64> {
    if valid_to_full.len() != valid.n() {
        return Err(Error::InvalidConfig(
            "index map length does not match the validation set".into(),
        ));
    }
    let mut total = 0.0;
    for (row, &t) in valid_to_full.iter().enumerate() {
        let beta = segments
            .iter()
            .find(|(iv, _)| iv.contains_time(t))
            .map(|(_, beta)| beta)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("no segment covers validation time {t}"))
            })?;
        let err = valid.y()[row] - valid.predict_row(row, beta);
        total += err * err;
    }
    Ok(total / valid.n() as f64)
}

/// The selected tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvSelection {
    pub lambda: f64,
    pub gamma: f64,
    pub zeta: Option<f64>,
}

/// One grid entry of the search table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvEntry {
    pub lambda: f64,
    pub gamma: f64,
    pub zeta: Option<f64>,
    pub validation_loss: f64,
    /// Change point count estimated on the training subsequence.
    pub train_k_hat: usize,
    pub non_convergent_fits: usize,
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub best: CvSelection,
    pub table: Vec<CvEntry>,
    /// Training change points under the best tuple, mapped to full-timeline
    /// indices.
    pub train_changepoints: ChangePointSet,
}

/// Map training change points to the full timeline (`j -> 2j - 1`) and pair
/// the induced full-timeline partition with the training segment fits.
type SegmentBetas = Vec<(IntegerInterval, Vec<f64>)>;

fn mapped_segments(
    train_cps: &ChangePointSet,
    train_partition_betas: Vec<Vec<f64>>,
    full_n: usize,
) -> Result<(ChangePointSet, SegmentBetas)> {
    let full_locs: Vec<usize> = train_cps.locations().iter().map(|&j| 2 * j - 1).collect();
    let full_cps = ChangePointSet::new(full_locs, full_n)?;
    let full_partition = changepoints_to_partition(&full_cps, full_n)?;
    debug_assert_eq!(full_partition.size(), train_partition_betas.len());
    let segments = full_partition
        .intervals()
        .iter()
        .copied()
        .zip(train_partition_betas)
        .collect();
    Ok((full_cps, segments))
}

struct ScoredTuple {
    entry: CvEntry,
    mapped_cps: ChangePointSet,
}

fn select_best(mut scored: Vec<ScoredTuple>) -> Result<CvResult> {
    let mut best_idx = 0;
    for i in 1..scored.len() {
        let (a, b) = (&scored[i].entry, &scored[best_idx].entry);
        let better = a.validation_loss < b.validation_loss
            || (a.validation_loss == b.validation_loss
                && (a.lambda, a.gamma, a.zeta.unwrap_or(0.0))
                    < (b.lambda, b.gamma, b.zeta.unwrap_or(0.0)));
        if better {
            best_idx = i;
        }
    }
    let chosen = scored.swap_remove(best_idx);
    let mut table: Vec<CvEntry> = scored.into_iter().map(|s| s.entry).collect();
    table.push(chosen.entry.clone());
    table.sort_by(|a, b| {
        (a.lambda, a.gamma, a.zeta.unwrap_or(0.0))
            .partial_cmp(&(b.lambda, b.gamma, b.zeta.unwrap_or(0.0)))
            .unwrap()
    });
    Ok(CvResult {
        best: CvSelection {
            lambda: chosen.entry.lambda,
            gamma: chosen.entry.gamma,
            zeta: chosen.entry.zeta,
        },
        table,
        train_changepoints: chosen.mapped_cps,
    })
}

/// Grid search for the plain detector over `(lambda, gamma)`.
///
/// Segment losses depend on `lambda` but not on `gamma`, so each `lambda`
/// group shares one loss cache across the whole `gamma` sweep; `lambda`
/// groups run in parallel.
pub fn cross_validate_dp(data: &Dataset, grid: &TuningGrid, opts: &CvOptions) -> Result<CvResult> {
    grid.validate(false)?;
    let grid = grid.sorted();
    let (train, valid, maps) = split_odd_even(data)?;

    let groups: Vec<Result<Vec<ScoredTuple>>> = grid
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let mut cache = LossCache::new();
            let mut out = Vec::with_capacity(grid.gammas.len());
            for &gamma in &grid.gammas {
                let cfg = opts.dp_config(lambda, gamma);
                let res = dp_partition_cached(&train, &cfg, &mut cache)?;
                let train_cps = partition_to_changepoints(&res.partition);
                // The per-segment refit by the interval-scaled Lasso is
                // exactly the fit the search already cached.
                let betas: Vec<Vec<f64>> = res
                    .partition
                    .intervals()
                    .iter()
                    .map(|iv| {
                        cache
                            .get(*iv)
                            .expect("segment fitted by the search")
                            .fit
                            .beta
                            .clone()
                    })
                    .collect();
                let (mapped_cps, segments) = mapped_segments(&train_cps, betas, data.n())?;
                let loss = validation_loss(&valid, maps.valid_to_full(), &segments)?;
                out.push(ScoredTuple {
                    entry: CvEntry {
                        lambda,
                        gamma,
                        zeta: None,
                        validation_loss: loss,
                        train_k_hat: train_cps.k_hat(),
                        non_convergent_fits: res.diagnostics.non_convergent_fits,
                    },
                    mapped_cps,
                });
            }
            Ok(out)
        })
        .collect();

    let mut scored = Vec::new();
    for g in groups {
        scored.extend(g?);
    }
    select_best(scored)
}

/// Joint grid search for the detector-plus-refinement pipeline over
/// `(lambda, gamma, zeta)`. The scoring refit uses the `zeta sqrt(|I|)`
/// penalty variant.
pub fn cross_validate_refined(
    data: &Dataset,
    grid: &TuningGrid,
    opts: &CvOptions,
) -> Result<CvResult> {
    grid.validate(true)?;
    let grid = grid.sorted();
    let zetas = grid.zetas.clone().expect("validated above");
    let (train, valid, maps) = split_odd_even(data)?;

    let groups: Vec<Result<Vec<ScoredTuple>>> = grid
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let mut cache = LossCache::new();
            // Different gamma values often yield identical preliminary
            // estimates; the refinement and its scoring depend only on
            // (prelim, zeta), so memoize them within the lambda group.
            type RefinedScore = (f64, usize, usize, ChangePointSet);
            let mut memo: std::collections::HashMap<(Vec<usize>, u64), RefinedScore> =
                std::collections::HashMap::new();
            let mut out = Vec::new();
            for &gamma in &grid.gammas {
                let cfg = opts.dp_config(lambda, gamma);
                let res = dp_partition_cached(&train, &cfg, &mut cache)?;
                let prelim = partition_to_changepoints(&res.partition);
                for &zeta in &zetas {
                    let key = (prelim.locations().to_vec(), zeta.to_bits());
                    let scored = match memo.get(&key) {
                        Some(hit) => hit.clone(),
                        None => {
                            let refine_cfg = opts.refine_config(zeta);
                            let refined = local_refine(&train, &prelim, &refine_cfg)?;
                            let train_partition =
                                changepoints_to_partition(&refined.refined, train.n())?;
                            let mut non_convergent = refined.non_convergent_solves;
                            let betas: Vec<Vec<f64>> = train_partition
                                .intervals()
                                .iter()
                                .map(|iv| {
                                    let weight = zeta * (iv.len() as f64).sqrt();
                                    let fit = lasso::fit_weighted(
                                        &train,
                                        *iv,
                                        weight,
                                        opts.lasso_tol,
                                        opts.lasso_max_sweeps,
                                        None,
                                    );
                                    if !fit.converged {
                                        non_convergent += 1;
                                    }
                                    fit.beta
                                })
                                .collect();
                            let (mapped_cps, segments) =
                                mapped_segments(&refined.refined, betas, data.n())?;
                            let loss = validation_loss(&valid, maps.valid_to_full(), &segments)?;
                            let scored =
                                (loss, refined.refined.k_hat(), non_convergent, mapped_cps);
                            memo.insert(key, scored.clone());
                            scored
                        }
                    };
                    let (loss, k_hat, non_convergent, mapped_cps) = scored;
                    out.push(ScoredTuple {
                        entry: CvEntry {
                            lambda,
                            gamma,
                            zeta: Some(zeta),
                            validation_loss: loss,
                            train_k_hat: k_hat,
                            non_convergent_fits: non_convergent
                                + res.diagnostics.non_convergent_fits,
                        },
                        mapped_cps,
                    });
                }
            }
            Ok(out)
        })
        .collect();

    let mut scored = Vec::new();
    for g in groups {
        scored.extend(g?);
    }
    select_best(scored)
}

/// Simulation-only helper: estimation error of the segment Lasso across a
/// lambda range when the true segmentation and coefficients are known. Used
/// to center the lambda grid in synthetic studies; never part of the
/// real-data path.
pub fn oracle_lambda_curve(
    train: &Dataset,
    true_train_cps: &ChangePointSet,
    true_betas: &[Vec<f64>],
    lambdas: &[f64],
    opts: &CvOptions,
) -> Result<Vec<(f64, f64)>> {
    let partition = changepoints_to_partition(true_train_cps, train.n())?;
    if true_betas.len() != partition.size() {
        return Err(Error::InvalidConfig(format!(
            "{} coefficient vectors for {} true segments",
            true_betas.len(),
            partition.size()
        )));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let mut total = 0.0;
            for (iv, truth) in partition.intervals().iter().zip(true_betas) {
                let mut cfg = LassoConfig::new(lambda);
                cfg.tol = opts.lasso_tol;
                cfg.max_sweeps = opts.lasso_max_sweeps;
                let fit = lasso::fit_lasso(train, *iv, &cfg)?;
                total += fit
                    .beta
                    .iter()
                    .zip(truth)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            Ok((lambda, total / partition.size() as f64))
        })
        .collect()
}
