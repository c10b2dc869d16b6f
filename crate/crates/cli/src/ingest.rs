//! CSV ingestion and response standardization.
//!
//! Rows with any missing or non-numeric cell among the selected columns are
//! dropped (and counted); column order is preserved as given.

use std::path::Path;

use cpreg::model::Dataset;

use crate::error::CliError;

pub struct IngestResult {
    pub data: Dataset,
    pub covariate_names: Vec<String>,
    pub dropped_rows: usize,
    /// Values of the designated label column for the kept rows.
    pub labels: Option<Vec<String>>,
}

pub fn load_csv(
    path: &Path,
    response: &str,
    covariates: Option<&[String]>,
    label_column: Option<&str>,
) -> Result<IngestResult, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::MissingInput {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let find = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))
    };
    let response_idx = find(response)?;
    let label_idx = label_column.map(find).transpose()?;

    let covariate_idx: Vec<usize> = match covariates {
        Some(names) => names
            .iter()
            .map(|n| find(n))
            .collect::<Result<Vec<_>, _>>()?,
        None => (0..headers.len())
            .filter(|&i| i != response_idx && Some(i) != label_idx)
            .collect(),
    };
    if covariate_idx.is_empty() {
        return Err(CliError::BadArguments(
            "no covariate columns selected".into(),
        ));
    }
    if covariate_idx.contains(&response_idx) {
        return Err(CliError::BadArguments(format!(
            "response column {response:?} also selected as a covariate"
        )));
    }
    let covariate_names: Vec<String> = covariate_idx.iter().map(|&i| headers[i].clone()).collect();

    let parse_cell = |cell: &str| -> Option<f64> {
        let t = cell.trim();
        if t.is_empty() {
            return None;
        }
        t.parse::<f64>().ok().filter(|v| v.is_finite())
    };

    let mut rows: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let mut row = Vec::with_capacity(covariate_idx.len());
        let mut ok = true;
        for &i in &covariate_idx {
            match record.get(i).and_then(parse_cell) {
                Some(v) => row.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let yv = record.get(response_idx).and_then(parse_cell);
        match (ok, yv) {
            (true, Some(yv)) => {
                rows.extend_from_slice(&row);
                y.push(yv);
                if let Some(li) = label_idx {
                    labels.push(record.get(li).unwrap_or("").trim().to_string());
                }
            }
            _ => dropped += 1,
        }
    }

    if y.len() < 2 {
        return Err(CliError::NoUsableRows { dropped });
    }
    let n = y.len();
    let p = covariate_idx.len();
    let data = Dataset::from_rows(n, p, &rows, y)?;
    Ok(IngestResult {
        data,
        covariate_names,
        dropped_rows: dropped,
        labels: label_idx.map(|_| labels),
    })
}

/// Divide the response by its sample standard deviation (n - 1 denominator);
/// the returned factor is that standard deviation.
pub fn standardize_response(data: &Dataset) -> Result<(Dataset, f64), CliError> {
    let y = data.y();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(CliError::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok((data.with_scaled_response(sd)?, sd))
}

/// Z-score every covariate column in place (optional; off by default).
pub fn standardize_covariates(data: &Dataset) -> Result<Dataset, CliError> {
    let n = data.n();
    let p = data.p();
    let mut rows = vec![0.0; n * p];
    for j in 0..p {
        let col = data.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for t in 0..n {
            rows[t * p + j] = (col[t] - mean) / sd;
        }
    }
    Ok(Dataset::from_rows(n, p, &rows, data.y().to_vec())?)
}
