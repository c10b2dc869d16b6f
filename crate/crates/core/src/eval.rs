//! Scaled Hausdorff distance between estimated and true change point sets.

use crate::model::ChangePointSet;

/// Outcome of comparing an estimate against the truth.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalResult {
    /// `D(est, truth) = max{max-min distance in either direction}`.
    pub hausdorff_raw: f64,
    /// `D / n`, in `[0, 1]`.
    pub hausdorff_scaled: f64,
    pub k_hat: usize,
    pub k_true: usize,
    /// `|est_k - truth_k|` under the order-preserving matching, present only
    /// when the counts agree.
    pub per_point_errors: Option<Vec<usize>>,
}

fn directed(from: &[usize], to: &[usize]) -> usize {
    from.iter()
        .map(|&a| {
            to.iter()
                .map(|&b| a.abs_diff(b))
                .min()
                .expect("non-empty target")
        })
        .max()
        .unwrap_or(0)
}

/// Hausdorff distance between the two sets, scaled by `n`.
///
/// Convention for empty sets: if exactly one of the two sets is empty the
/// distance is `n` (worst case), if both are empty it is zero.
pub fn hausdorff_scaled(est: &ChangePointSet, truth: &ChangePointSet, n: usize) -> EvalResult {
    let a = est.locations();
    let b = truth.locations();
    let raw = match (a.is_empty(), b.is_empty()) {
        (true, true) => 0,
        (true, false) | (false, true) => n,
        (false, false) => directed(a, b).max(directed(b, a)),
    };
    let per_point_errors = (a.len() == b.len()).then(|| {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.abs_diff(y))
            .collect::<Vec<_>>()
    });
    EvalResult {
        hausdorff_raw: raw as f64,
        hausdorff_scaled: raw as f64 / n as f64,
        k_hat: a.len(),
        k_true: b.len(),
        per_point_errors,
    }
}
