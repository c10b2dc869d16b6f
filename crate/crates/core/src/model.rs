//! Shared domain types: datasets, integer intervals, partitions and change
//! point sets.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * time indices are 1-based externally (`t = 1..n`);
//! * `IntegerInterval` is the half-open integer interval `(s, e] = {s+1, .., e}`,
//!   which coincides with the 0-based row range `s..e`;
//! * a change point is the *first* index of the new regime, i.e. the left
//!   endpoint `s + 1` of every partition interval except the first.
//!
//! All types are immutable value objects validated at construction.

use crate::{Error, Result};

/// An observed regression time series: `n` rows of a `p`-dimensional design
/// matrix plus the response vector.
///
/// Columns are stored contiguously because every solver in this crate walks
/// the design matrix column-by-column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    /// Column-major design matrix, `cols[j * n + t]` is `x_{t+1}(j+1)`.
    cols: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// Build a dataset from a row-major design matrix (`x[t * p + j]`)
    /// and a response vector.
    pub fn from_rows(n: usize, p: usize, x: &[f64], y: Vec<f64>) -> Result<Self> {
        if n < 2 || p < 1 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 2 and p >= 1, got n={n}, p={p}"
            )));
        }
        if x.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "design matrix has {} entries, expected n*p = {}",
                x.len(),
                n * p
            )));
        }
        if y.len() != n {
            return Err(Error::InvalidDataset(format!(
                "response has length {}, expected n = {n}",
                y.len()
            )));
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        let mut cols = vec![0.0; n * p];
        for t in 0..n {
            for j in 0..p {
                cols[j * n + t] = x[t * p + j];
            }
        }
        Ok(Self { n, p, cols, y })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Column `j` (0-based) as a slice over all `n` rows.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Entry `x_t(j)` with 0-based row `t` and column `j`.
    pub fn x(&self, t: usize, j: usize) -> f64 {
        self.cols[j * self.n + t]
    }

    /// Inner product `x_t' beta` for the 0-based row `t`.
    pub fn predict_row(&self, t: usize, beta: &[f64]) -> f64 {
        beta.iter()
            .enumerate()
            .map(|(j, &b)| b * self.cols[j * self.n + t])
            .sum()
    }

    /// New dataset keeping the 0-based rows in `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(
                "row selection must keep at least 2 rows".into(),
            ));
        }
        let m = rows.len();
        let mut cols = vec![0.0; m * self.p];
        let mut y = vec![0.0; m];
        for (i, &t) in rows.iter().enumerate() {
            if t >= self.n {
                return Err(Error::InvalidDataset(format!(
                    "row index {t} out of range for n={}",
                    self.n
                )));
            }
            y[i] = self.y[t];
            for j in 0..self.p {
                cols[j * m + i] = self.cols[j * self.n + t];
            }
        }
        Ok(Self {
            n: m,
            p: self.p,
            cols,
            y,
        })
    }

    /// Copy with the response divided by `scale`.
    pub fn with_scaled_response(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale != 0.0) {
            return Err(Error::InvalidDataset(format!(
                "response scale must be finite and nonzero, got {scale}"
            )));
        }
        let mut out = self.clone();
        for v in &mut out.y {
            *v /= scale;
        }
        Ok(out)
    }
}

/// The integer interval `(s, e] = {s+1, ..., e}` with `0 <= s < e`.
///
/// Equivalently, the 0-based row range `s..e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerInterval {
    start: usize,
    end: usize,
}

impl IntegerInterval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidInterval(format!(
                "need s < e for (s, e], got s={start}, e={end}"
            )));
        }
        Ok(Self { start, end })
    }

    /// Exclusive left endpoint `s`.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Inclusive right endpoint `e`.
    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of time points `e - s`.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false // s < e is guaranteed at construction
    }

    /// First 1-based time index, `s + 1`. This is the change point location
    /// associated with the interval when it is not the first in a partition.
    pub fn first_time(&self) -> usize {
        self.start + 1
    }

    /// 0-based row range of the interval.
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    /// Whether the 1-based time `t` lies in `(s, e]`.
    pub fn contains_time(&self, t: usize) -> bool {
        t > self.start && t <= self.end
    }
}

impl std::fmt::Display for IntegerInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}]", self.start, self.end)
    }
}

/// An ordered, contiguous partition of `(0, n]` into integer intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    intervals: Vec<IntegerInterval>,
    n: usize,
}

impl Partition {
    pub fn new(intervals: Vec<IntegerInterval>, n: usize) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInterval("partition has no intervals".into()));
        }
        if intervals[0].start() != 0 {
            return Err(Error::InvalidInterval(format!(
                "first interval must start at 0, got {}",
                intervals[0].start()
            )));
        }
        for w in intervals.windows(2) {
            if w[1].start() != w[0].end() {
                return Err(Error::InvalidInterval(format!(
                    "gap between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        if intervals.last().unwrap().end() != n {
            return Err(Error::InvalidInterval(format!(
                "last interval must end at n={n}, got {}",
                intervals.last().unwrap().end()
            )));
        }
        Ok(Self { intervals, n })
    }

    pub fn intervals(&self) -> &[IntegerInterval] {
        &self.intervals
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of intervals `|P|`.
    pub fn size(&self) -> usize {
        self.intervals.len()
    }

    /// The interval containing the 1-based time `t`, if `1 <= t <= n`.
    pub fn interval_containing(&self, t: usize) -> Option<&IntegerInterval> {
        if t < 1 || t > self.n {
            return None;
        }
        // Binary search on right endpoints.
        let idx = self.intervals.partition_point(|iv| iv.end() < t);
        Some(&self.intervals[idx])
    }
}

/// Strictly increasing change point locations, each the first 1-based index of
/// a new regime, so every location lies in `{2, ..., n}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct ChangePointSet {
    locations: Vec<usize>,
}

impl ChangePointSet {
    /// Validate `locations` against the series length `n`.
    pub fn new(locations: Vec<usize>, n: usize) -> Result<Self> {
        for w in locations.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidChangePoints(format!(
                    "locations must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let (Some(&first), Some(&last)) = (locations.first(), locations.last()) {
            if first < 2 || last > n {
                return Err(Error::InvalidChangePoints(format!(
                    "locations must lie in [2, {n}], got range [{first}, {last}]"
                )));
            }
        }
        Ok(Self { locations })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn locations(&self) -> &[usize] {
        &self.locations
    }

    /// Estimated number of change points.
    pub fn k_hat(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// The change points of a partition: the first element `s + 1` of every
/// interval except the first.
pub fn partition_to_changepoints(part: &Partition) -> ChangePointSet {
    let locations = part
        .intervals()
        .iter()
        .skip(1)
        .map(|iv| iv.first_time())
        .collect();
    // Valid by construction: interval starts are strictly increasing and >= 1.
    ChangePointSet { locations }
}

/// Inverse of [`partition_to_changepoints`]: rebuild the partition of `(0, n]`
/// whose interval boundaries are the given change points.
pub fn changepoints_to_partition(cps: &ChangePointSet, n: usize) -> Result<Partition> {
    if let Some(&last) = cps.locations().last() {
        if last > n {
            return Err(Error::InvalidChangePoints(format!(
                "change point {last} exceeds n={n}"
            )));
        }
    }
    if n == 0 {
        return Err(Error::InvalidChangePoints("n must be positive".into()));
    }
    let mut intervals = Vec::with_capacity(cps.k_hat() + 1);
    let mut start = 0;
    for &loc in cps.locations() {
        intervals.push(IntegerInterval::new(start, loc - 1)?);
        start = loc - 1;
    }
    intervals.push(IntegerInterval::new(start, n)?);
    Partition::new(intervals, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn part(bounds: &[usize], n: usize) -> Partition {
        let mut intervals = Vec::new();
        let mut s = 0;
        for &e in bounds {
            intervals.push(IntegerInterval::new(s, e).unwrap());
            s = e;
        }
        intervals.push(IntegerInterval::new(s, n).unwrap());
        Partition::new(intervals, n).unwrap()
    }

    #[test]
    fn interval_convention() {
        let iv = IntegerInterval::new(3, 7).unwrap();
        assert_eq!(iv.len(), 4);
        assert_eq!(iv.first_time(), 4);
        assert_eq!(iv.rows().collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert!(iv.contains_time(4) && iv.contains_time(7));
        assert!(!iv.contains_time(3) && !iv.contains_time(8));
        assert!(IntegerInterval::new(5, 5).is_err());
        assert!(IntegerInterval::new(6, 5).is_err());
    }

    #[test]
    fn changepoints_of_two_interval_partition() {
        let p = part(&[5], 10);
        assert_eq!(partition_to_changepoints(&p).locations(), &[6]);
    }

    #[test]
    fn single_segment_has_no_changepoints() {
        let p = part(&[], 10);
        assert!(partition_to_changepoints(&p).is_empty());
    }

    #[test]
    fn simulation_design_partition_changepoints() {
        let p = part(&[120, 220, 350, 450], 600);
        assert_eq!(
            partition_to_changepoints(&p).locations(),
            &[121, 221, 351, 451]
        );
    }

    #[test]
    fn partition_from_changepoints() {
        let cps = ChangePointSet::new(vec![6], 10).unwrap();
        let p = changepoints_to_partition(&cps, 10).unwrap();
        assert_eq!(p, part(&[5], 10));

        let none = ChangePointSet::empty();
        assert_eq!(changepoints_to_partition(&none, 10).unwrap(), part(&[], 10));

        let cps = ChangePointSet::new(vec![121, 221, 351, 451], 600).unwrap();
        assert_eq!(
            changepoints_to_partition(&cps, 600).unwrap(),
            part(&[120, 220, 350, 450], 600)
        );
    }

    #[test]
    fn changepoint_validation() {
        assert!(ChangePointSet::new(vec![1], 10).is_err());
        assert!(ChangePointSet::new(vec![11], 10).is_err());
        assert!(ChangePointSet::new(vec![4, 4], 10).is_err());
        assert!(ChangePointSet::new(vec![5, 3], 10).is_err());
        assert!(ChangePointSet::new(vec![2, 10], 10).is_ok());
    }

    #[test]
    fn round_trip_random_changepoint_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(2..80);
            let mut locs: Vec<usize> = (2..=n).filter(|_| rng.random_bool(0.3)).collect();
            locs.dedup();
            let cps = ChangePointSet::new(locs, n).unwrap();
            let p = changepoints_to_partition(&cps, n).unwrap();
            assert_eq!(partition_to_changepoints(&p), cps);

            // Coverage: intervals tile {1..n} without gaps or overlap.
            let mut covered = vec![false; n + 1];
            for iv in p.intervals() {
                for flag in &mut covered[iv.first_time()..=iv.end()] {
                    assert!(!*flag, "time covered twice");
                    *flag = true;
                }
            }
            assert!(covered[1..].iter().all(|&c| c));
        }
    }

    #[test]
    fn interval_containing_time() {
        let p = part(&[120, 220], 600);
        assert_eq!(p.interval_containing(1).unwrap().first_time(), 1);
        assert_eq!(p.interval_containing(120).unwrap().end(), 120);
        assert_eq!(p.interval_containing(121).unwrap().first_time(), 121);
        assert_eq!(p.interval_containing(600).unwrap().end(), 600);
        assert!(p.interval_containing(0).is_none());
        assert!(p.interval_containing(601).is_none());
    }

    #[test]
    fn dataset_validation_and_layout() {
        // 3 rows, 2 columns, row-major input.
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let d = Dataset::from_rows(3, 2, &x, vec![10.0, 20.0, 30.0]).unwrap();
        assert_eq!(d.column(0), &[1.0, 3.0, 5.0]);
        assert_eq!(d.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(d.x(1, 1), 4.0);
        assert_eq!(d.predict_row(2, &[1.0, -1.0]), -1.0);

        assert!(Dataset::from_rows(1, 2, &x[..2], vec![1.0]).is_err());
        assert!(Dataset::from_rows(3, 2, &x[..5], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::from_rows(3, 2, &x, vec![1.0, 2.0]).is_err());
        let mut bad = x.clone();
        bad[3] = f64::NAN;
        assert!(Dataset::from_rows(3, 2, &bad, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn dataset_row_selection() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let d = Dataset::from_rows(4, 2, &x, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let odd = d.select_rows(&[0, 2]).unwrap();
        assert_eq!(odd.n(), 2);
        assert_eq!(odd.column(0), &[1.0, 5.0]);
        assert_eq!(odd.y(), &[1.0, 3.0]);
        assert!(d.select_rows(&[0, 9]).is_err());
    }
}
