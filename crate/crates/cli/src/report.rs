//! JSON report emitted by the detect and tune subcommands.

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub dropped_rows: usize,
    pub response: String,
    pub covariates: Vec<String>,
    pub standardized_response: bool,
    /// The sample standard deviation the response was divided by (1 when
    /// standardization is off). Change points are invariant to this factor;
    /// coefficients are reported on the standardized scale.
    pub response_scale: f64,
    pub covariates_standardized: bool,
    pub parameters: Parameters,
    pub k_hat: usize,
    /// 1-based time indices, each the first index of a new segment.
    pub change_points: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change_point_labels: Option<Vec<String>>,
    pub segments: Vec<SegmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    pub stride: usize,
    pub min_seg_len: usize,
    pub cv: bool,
}

#[derive(Debug, Serialize)]
pub struct SegmentReport {
    /// 1-based first time index of the segment.
    pub start: usize,
    /// 1-based last time index (inclusive).
    pub end: usize,
    /// 1-based indices of the nonzero coefficients.
    pub support: Vec<usize>,
    /// `[index, value]` pairs for the nonzero coefficients (1-based).
    pub coefficients: Vec<(usize, f64)>,
    pub fit_converged: bool,
}

#[derive(Debug, Serialize)]
pub struct TuningReport {
    pub best_lambda: f64,
    pub best_gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_zeta: Option<f64>,
    pub table: Vec<TuningEntry>,
}

#[derive(Debug, Serialize)]
pub struct TuningEntry {
    pub lambda: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    pub validation_loss: f64,
    pub train_k_hat: usize,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub non_convergent_fits: usize,
    pub loss_cache_entries: usize,
    /// Zero when timing is suppressed (`--no-timing`), for byte-stable output.
    pub wall_time_ms: u64,
}

/// Machine-readable error object printed on any failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub error: ErrorBody<'a>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub code: i32,
    pub kind: &'a str,
    pub message: String,
}
