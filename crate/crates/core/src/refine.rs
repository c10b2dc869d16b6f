//! Local refinement of preliminary change point estimates.
//!
//! Each preliminary estimate is re-localized inside a shrunken window between
//! its neighbors: every interior split of the window is scored by a
//! two-segment regression with a per-coordinate group penalty coupling the
//! two coefficient vectors, and the split with the smallest objective wins.
//! The pass never changes the number of change points.
//!
//! For a window `(s, e]` and a split `eta` the objective is
//!
//! ```text
//!   sum_{t=s+1}^{eta} (y_t - b1' x_t)^2 + sum_{t=eta+1}^{e} (y_t - b2' x_t)^2
//!     + zeta * sum_i sqrt((eta - s) b1_i^2 + (e - eta) b2_i^2)
//! ```
//!
//! After the rescaling `u_i = sqrt(eta - s) b1_i`, `v_i = sqrt(e - eta) b2_i`
//! each coordinate `i` becomes a size-2 group and block coordinate descent
//! applies; each block subproblem `a1 u^2 - 2 c1 u + a2 v^2 - 2 c2 v +
//! zeta ||(u, v)||` is solved exactly (the two curvatures differ, so the
//! textbook group soft threshold is the special case `a1 = a2`; the general
//! minimizer comes from a one-dimensional root of the norm equation).
//!
//! A split `eta` puts `t = eta` in the first segment, so the refined change
//! point (the first index of the new regime) is `eta + 1`.

use rayon::prelude::*;

use crate::model::{ChangePointSet, Dataset};
use crate::{Error, Result};

/// Tuning knobs for the refinement pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    /// Group penalty level `zeta >= 0`.
    pub zeta: f64,
    /// Convergence tolerance on the largest block update per sweep.
    pub group_tol: f64,
    /// Sweep budget per candidate split.
    pub max_block_sweeps: usize,
    /// Stride of the split scan inside each window.
    pub eta_stride: usize,
}

impl RefineConfig {
    pub fn new(zeta: f64) -> Self {
        Self {
            zeta,
            group_tol: 1e-7,
            max_block_sweeps: 5000,
            eta_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "zeta must be finite and >= 0, got {}",
                self.zeta
            )));
        }
        if !(self.group_tol.is_finite() && self.group_tol > 0.0) {
            return Err(Error::InvalidConfig("group_tol must be > 0".into()));
        }
        if self.max_block_sweeps == 0 || self.eta_stride == 0 {
            return Err(Error::InvalidConfig(
                "max_block_sweeps and eta_stride must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One scored two-segment fit: segments `(s, eta]` and `(eta, e]`.
#[derive(Debug, Clone)]
pub struct TwoSegmentFit {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// The split location; the associated change point is `eta + 1`.
    pub eta: usize,
    pub objective: f64,
    pub converged: bool,
    pub sweeps_used: usize,
}

/// Result of [`local_refine`].
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub refined: ChangePointSet,
    /// Winning fit per window, aligned with the refined locations. `None`
    /// for windows that were kept unchanged (no interior candidate).
    pub fits: Vec<Option<TwoSegmentFit>>,
    /// The scanned windows `(s_k, e_k]`.
    pub windows: Vec<(usize, usize)>,
    /// Window indices kept at their preliminary location.
    pub flagged: Vec<usize>,
    /// Window indices whose scan result was bumped to restore monotonicity
    /// (only possible when the preliminary estimates are nearly coincident).
    pub adjusted: Vec<usize>,
    pub non_convergent_solves: usize,
}

/// Shrink the neighborhood of `cur` toward it by one third on each side:
/// `s = floor((2 prev + cur) / 3)`, `e = ceil((cur + 2 next) / 3)` with
/// `prev < cur < next`. Guarantees `s < cur <= e` and `e - s >= 2`.
pub fn shrink_interval(prev: usize, cur: usize, next: usize) -> Result<(usize, usize)> {
    if !(prev < cur && cur < next) {
        return Err(Error::InvalidChangePoints(format!(
            "window endpoints must satisfy prev < cur < next, got ({prev}, {cur}, {next})"
        )));
    }
    Ok(window_of(prev, cur, next))
}

/// Integer form of the window formula; exact, no float rounding edges.
/// Also covers the boundary case `cur == next == n` used by the last window.
fn window_of(prev: usize, cur: usize, next: usize) -> (usize, usize) {
    let s = (2 * prev + cur) / 3;
    let e = (cur + 2 * next).div_ceil(3);
    (s, e)
}

/// Exact minimizer of `a1 u^2 - 2 c1 u + a2 v^2 - 2 c2 v + zeta ||(u, v)||_2`.
fn block_min(a1: f64, a2: f64, c1: f64, c2: f64, zeta: f64) -> (f64, f64) {
    if zeta == 0.0 {
        let u = if a1 > 0.0 { c1 / a1 } else { 0.0 };
        let v = if a2 > 0.0 { c2 / a2 } else { 0.0 };
        return (u, v);
    }
    let cnorm = c1.hypot(c2);
    if 2.0 * cnorm <= zeta {
        return (0.0, 0.0);
    }
    // Stationarity at (u, v) != 0 gives u = c1 / (a1 + zeta / (2 rho)) with
    // rho = ||(u, v)||, and rho solves rho = h(rho) for the increasing map
    // below; bisect between 0 (where h' = 2||c||/zeta > 1) and the supremum
    // of h.
    let h = |rho: f64| -> f64 {
        let d1 = a1 + zeta / (2.0 * rho);
        let d2 = a2 + zeta / (2.0 * rho);
        (c1 / d1).hypot(c2 / d2)
    };
    let term = |c: f64, a: f64| if a > 0.0 { c / a } else { 0.0 };
    let mut lo = 0.0f64;
    let mut hi = term(c1, a1).hypot(term(c2, a2)).max(f64::MIN_POSITIVE);
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let d1 = a1 + zeta / (2.0 * rho);
    let d2 = a2 + zeta / (2.0 * rho);
    (c1 / d1, c2 / d2)
}

/// Solve the two-segment group-penalized regression at a fixed split.
pub fn group_two_segment_solve(
    data: &Dataset,
    s: usize,
    e: usize,
    eta: usize,
    cfg: &RefineConfig,
) -> Result<TwoSegmentFit> {
    cfg.validate()?;
    if !(s < eta && eta < e && e <= data.n()) {
        return Err(Error::InvalidInterval(format!(
            "need s < eta < e <= n, got s={s}, eta={eta}, e={e}, n={}",
            data.n()
        )));
    }
    Ok(solve_two_segment(data, s, e, eta, cfg, None))
}

fn solve_two_segment(
    data: &Dataset,
    s: usize,
    e: usize,
    eta: usize,
    cfg: &RefineConfig,
    warm: Option<(&[f64], &[f64])>,
) -> TwoSegmentFit {
    let p = data.p();
    let m1 = eta - s;
    let m2 = e - eta;
    let sq1 = (m1 as f64).sqrt();
    let sq2 = (m2 as f64).sqrt();
    let rows1 = s..eta;
    let rows2 = eta..e;
    let zeta = cfg.zeta;

    // Curvatures of the rescaled columns: ||X_j||^2 / m per segment.
    let a1: Vec<f64> = (0..p)
        .map(|j| {
            data.column(j)[rows1.clone()]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                / m1 as f64
        })
        .collect();
    let a2: Vec<f64> = (0..p)
        .map(|j| {
            data.column(j)[rows2.clone()]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                / m2 as f64
        })
        .collect();

    let mut u = vec![0.0; p];
    let mut v = vec![0.0; p];
    if let Some((b1, b2)) = warm {
        for j in 0..p {
            u[j] = sq1 * b1[j];
            v[j] = sq2 * b2[j];
        }
    }
    // Residuals kept in original units: r = y - X beta with beta = u / sqrt(m).
    let mut r1 = data.y()[rows1.clone()].to_vec();
    let mut r2 = data.y()[rows2.clone()].to_vec();
    for j in 0..p {
        if u[j] != 0.0 {
            let b = u[j] / sq1;
            for (rt, &xt) in r1.iter_mut().zip(&data.column(j)[rows1.clone()]) {
                *rt -= b * xt;
            }
        }
        if v[j] != 0.0 {
            let b = v[j] / sq2;
            for (rt, &xt) in r2.iter_mut().zip(&data.column(j)[rows2.clone()]) {
                *rt -= b * xt;
            }
        }
    }

    #[cfg(debug_assertions)]
    let objective_uv = |r1: &[f64], r2: &[f64], u: &[f64], v: &[f64]| -> f64 {
        let rss: f64 =
            r1.iter().map(|x| x * x).sum::<f64>() + r2.iter().map(|x| x * x).sum::<f64>();
        rss + zeta * u.iter().zip(v).map(|(&uj, &vj)| uj.hypot(vj)).sum::<f64>()
    };

    #[cfg(debug_assertions)]
    let mut prev_obj = objective_uv(&r1, &r2, &u, &v);

    let mut sweeps_used = 0;
    let mut converged = false;
    while sweeps_used < cfg.max_block_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..p {
            let col1 = &data.column(j)[rows1.clone()];
            let col2 = &data.column(j)[rows2.clone()];
            let c1 =
                col1.iter().zip(r1.iter()).map(|(x, r)| x * r).sum::<f64>() / sq1 + a1[j] * u[j];
            let c2 =
                col2.iter().zip(r2.iter()).map(|(x, r)| x * r).sum::<f64>() / sq2 + a2[j] * v[j];
            let (nu, nv) = block_min(a1[j], a2[j], c1, c2, zeta);
            let du = nu - u[j];
            if du != 0.0 {
                let db = du / sq1;
                for (rt, &xt) in r1.iter_mut().zip(col1) {
                    *rt -= db * xt;
                }
                u[j] = nu;
                max_delta = max_delta.max(du.abs());
            }
            let dv = nv - v[j];
            if dv != 0.0 {
                let db = dv / sq2;
                for (rt, &xt) in r2.iter_mut().zip(col2) {
                    *rt -= db * xt;
                }
                v[j] = nv;
                max_delta = max_delta.max(dv.abs());
            }
        }
        sweeps_used += 1;

        #[cfg(debug_assertions)]
        {
            let obj = objective_uv(&r1, &r2, &u, &v);
            debug_assert!(
                obj <= prev_obj + 1e-9 * (1.0 + prev_obj.abs()),
                "group objective increased within a block sweep: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }

        let uv_inf = u
            .iter()
            .chain(v.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        if max_delta <= cfg.group_tol * (1.0 + uv_inf) {
            converged = true;
            break;
        }
    }

    let beta1: Vec<f64> = u.iter().map(|&uj| uj / sq1).collect();
    let beta2: Vec<f64> = v.iter().map(|&vj| vj / sq2).collect();
    // Report the objective in the (beta1, beta2) parameterization, from
    // freshly recomputed residuals.
    let objective = two_segment_objective(data, s, e, eta, &beta1, &beta2, zeta);

    TwoSegmentFit {
        beta1,
        beta2,
        eta,
        objective,
        converged,
        sweeps_used,
    }
}

/// The group-penalized objective at `(beta1, beta2)` for segments `(s, eta]`,
/// `(eta, e]`, evaluated from scratch.
pub fn two_segment_objective(
    data: &Dataset,
    s: usize,
    e: usize,
    eta: usize,
    beta1: &[f64],
    beta2: &[f64],
    zeta: f64,
) -> f64 {
    let m1 = (eta - s) as f64;
    let m2 = (e - eta) as f64;
    let mut rss = 0.0;
    for t in s..eta {
        let r = data.y()[t] - data.predict_row(t, beta1);
        rss += r * r;
    }
    for t in eta..e {
        let r = data.y()[t] - data.predict_row(t, beta2);
        rss += r * r;
    }
    let penalty: f64 = beta1
        .iter()
        .zip(beta2)
        .map(|(&b1, &b2)| (m1 * b1 * b1 + m2 * b2 * b2).sqrt())
        .sum();
    rss + zeta * penalty
}

/// Refine every preliminary change point within its shrunken window.
///
/// The output always has exactly as many locations as the input. Windows are
/// processed independently; within a window the split scan runs in order,
/// warm starting each solve from its predecessor, and ties go to the
/// smallest split.
pub fn local_refine(
    data: &Dataset,
    prelim: &ChangePointSet,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    let n = data.n();
    let locs = prelim.locations();
    if let Some(&last) = locs.last() {
        if last > n {
            return Err(Error::InvalidChangePoints(format!(
                "preliminary change point {last} exceeds n={n}"
            )));
        }
    }
    if let Some(&first) = locs.first() {
        if first < 2 {
            return Err(Error::InvalidChangePoints(
                "preliminary change points must lie in (1, n]".into(),
            ));
        }
    }
    let k = locs.len();
    if k == 0 {
        return Ok(RefineOutcome {
            refined: ChangePointSet::empty(),
            fits: Vec::new(),
            windows: Vec::new(),
            flagged: Vec::new(),
            adjusted: Vec::new(),
            non_convergent_solves: 0,
        });
    }

    struct WindowScan {
        window: (usize, usize),
        best: Option<TwoSegmentFit>,
        location: usize,
        non_convergent: usize,
    }

    let scans: Vec<WindowScan> = (0..k)
        .into_par_iter()
        .map(|idx| {
            let prev = if idx == 0 { 0 } else { locs[idx - 1] };
            let next = if idx + 1 < k { locs[idx + 1] } else { n };
            let cur = locs[idx];
            let (s, e) = window_of(prev, cur, next);
            if e - s < 2 {
                return WindowScan {
                    window: (s, e),
                    best: None,
                    location: cur,
                    non_convergent: 0,
                };
            }
            let mut warm: Option<(Vec<f64>, Vec<f64>)> = None;
            let mut best: Option<TwoSegmentFit> = None;
            let mut non_convergent = 0;
            for eta in (s + 1..e).step_by(cfg.eta_stride) {
                let fit = solve_two_segment(
                    data,
                    s,
                    e,
                    eta,
                    cfg,
                    warm.as_ref().map(|(b1, b2)| (b1.as_slice(), b2.as_slice())),
                );
                if !fit.converged {
                    non_convergent += 1;
                }
                warm = Some((fit.beta1.clone(), fit.beta2.clone()));
                let better = best
                    .as_ref()
                    .map(|b| fit.objective < b.objective)
                    .unwrap_or(true);
                if better {
                    best = Some(fit);
                }
            }
            let location = best.as_ref().map(|b| b.eta + 1).unwrap_or(cur);
            WindowScan {
                window: (s, e),
                best,
                location,
                non_convergent,
            }
        })
        .collect();

    let mut locations = Vec::with_capacity(k);
    let mut fits = Vec::with_capacity(k);
    let mut windows = Vec::with_capacity(k);
    let mut flagged = Vec::new();
    let mut adjusted = Vec::new();
    let mut non_convergent_solves = 0;
    for (idx, scan) in scans.into_iter().enumerate() {
        let mut loc = scan.location;
        if let Some(&prev_loc) = locations.last() {
            if loc <= prev_loc {
                loc = prev_loc + 1;
                adjusted.push(idx);
            }
        }
        if scan.best.is_none() {
            flagged.push(idx);
        }
        non_convergent_solves += scan.non_convergent;
        locations.push(loc);
        fits.push(scan.best);
        windows.push(scan.window);
    }
    let refined = ChangePointSet::new(locations, n)?;

    Ok(RefineOutcome {
        refined,
        fits,
        windows,
        flagged,
        adjusted,
        non_convergent_solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<f64> {
        (0..n * p).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn shrink_interval_examples() {
        assert_eq!(shrink_interval(0, 121, 221).unwrap(), (40, 188));
        assert_eq!(shrink_interval(0, 100, 200).unwrap(), (33, 167));
        assert!(shrink_interval(5, 5, 10).is_err());
        assert!(shrink_interval(5, 4, 10).is_err());
        assert!(shrink_interval(0, 10, 10).is_err());
        // Guarantees hold on a sweep of small windows.
        for prev in 0..20usize {
            for cur in prev + 1..22 {
                for next in cur + 1..25 {
                    let (s, e) = shrink_interval(prev, cur, next).unwrap();
                    assert!(s < cur && cur <= e, "({prev},{cur},{next}) -> ({s},{e})");
                    assert!(e - s >= 2);
                }
            }
        }
    }

    #[test]
    fn zeta_zero_matches_least_squares() {
        // p = 1: closed forms per segment.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 12;
        let x = random_design(&mut rng, n, 1);
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = Dataset::from_rows(n, 1, &x, y).unwrap();
        let (s, e, eta) = (1, 11, 6);
        let fit = group_two_segment_solve(&data, s, e, eta, &RefineConfig::new(0.0)).unwrap();
        let ls = |rows: std::ops::Range<usize>| {
            let xs = &data.column(0)[rows.clone()];
            let ys = &data.y()[rows];
            let num: f64 = xs.iter().zip(ys).map(|(a, b)| a * b).sum();
            let den: f64 = xs.iter().map(|a| a * a).sum();
            num / den
        };
        assert!((fit.beta1[0] - ls(s..eta)).abs() < 1e-6);
        assert!((fit.beta2[0] - ls(eta..e)).abs() < 1e-6);
    }

    #[test]
    fn group_kill_condition_zeroes_both_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let n = 10;
        let p = 3;
        let x = random_design(&mut rng, n, p);
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = Dataset::from_rows(n, p, &x, y).unwrap();
        let (s, e, eta) = (0, 10, 4);
        let m1 = (eta - s) as f64;
        let m2 = (e - eta) as f64;
        let kill = 2.0
            * (0..p)
                .map(|j| {
                    let g1: f64 = data.column(j)[s..eta]
                        .iter()
                        .zip(&data.y()[s..eta])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / m1.sqrt();
                    let g2: f64 = data.column(j)[eta..e]
                        .iter()
                        .zip(&data.y()[eta..e])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / m2.sqrt();
                    g1.hypot(g2)
                })
                .fold(0.0f64, f64::max);
        let fit =
            group_two_segment_solve(&data, s, e, eta, &RefineConfig::new(kill * 1.0001)).unwrap();
        assert!(fit.beta1.iter().all(|&b| b == 0.0));
        assert!(fit.beta2.iter().all(|&b| b == 0.0));
        let sum_sq: f64 = data.y()[s..e].iter().map(|v| v * v).sum();
        assert!((fit.objective - sum_sq).abs() < 1e-12);

        // Just below the threshold at least one coordinate survives.
        let fit =
            group_two_segment_solve(&data, s, e, eta, &RefineConfig::new(kill * 0.999)).unwrap();
        assert!(fit.beta1.iter().chain(&fit.beta2).any(|&b| b != 0.0));
    }

    #[test]
    fn reparameterization_identity() {
        // The penalty written in (beta1, beta2) equals the (u, v) group norm.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n = 14;
        let p = 2;
        let x = random_design(&mut rng, n, p);
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = Dataset::from_rows(n, p, &x, y).unwrap();
        let (s, e, eta) = (2, 13, 7);
        let zeta = 0.7;
        let fit = group_two_segment_solve(&data, s, e, eta, &RefineConfig::new(zeta)).unwrap();
        let m1 = (eta - s) as f64;
        let m2 = (e - eta) as f64;
        let from_beta = two_segment_objective(&data, s, e, eta, &fit.beta1, &fit.beta2, zeta);
        let u: Vec<f64> = fit.beta1.iter().map(|b| b * m1.sqrt()).collect();
        let v: Vec<f64> = fit.beta2.iter().map(|b| b * m2.sqrt()).collect();
        let mut from_uv = 0.0;
        for t in s..eta {
            let pred: f64 = (0..p).map(|j| u[j] / m1.sqrt() * data.x(t, j)).sum();
            from_uv += (data.y()[t] - pred).powi(2);
        }
        for t in eta..e {
            let pred: f64 = (0..p).map(|j| v[j] / m2.sqrt() * data.x(t, j)).sum();
            from_uv += (data.y()[t] - pred).powi(2);
        }
        from_uv += zeta * u.iter().zip(&v).map(|(&uj, &vj)| uj.hypot(vj)).sum::<f64>();
        assert!(
            (from_beta - from_uv).abs() <= 1e-12 * (1.0 + from_beta.abs()),
            "{from_beta} vs {from_uv}"
        );
    }

    #[test]
    fn noiseless_truth_is_a_fixed_point() {
        // Strong noiseless jump; with a small zeta the scan's minimizer is
        // the true split, so the refined location equals the truth.
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let n = 60;
        let p = 3;
        let x = random_design(&mut rng, n, p);
        let b1 = [2.0, -1.0, 0.0];
        let b2 = [-2.0, 1.0, 0.0];
        let truth = 31; // first index of the second regime (1-based)
        let y: Vec<f64> = (0..n)
            .map(|t| {
                let b = if t + 1 < truth { &b1 } else { &b2 };
                (0..p).map(|j| b[j] * x[t * p + j]).sum()
            })
            .collect();
        let data = Dataset::from_rows(n, p, &x, y).unwrap();
        let prelim = ChangePointSet::new(vec![truth], n).unwrap();
        let cfg = RefineConfig::new(0.01);
        let out = local_refine(&data, &prelim, &cfg).unwrap();
        assert_eq!(out.refined.locations(), &[truth]);

        // Exhaustive check that the winning split strictly minimizes the
        // objective over the whole window.
        let (s, e) = out.windows[0];
        let best = out.fits[0].as_ref().unwrap();
        for eta in s + 1..e {
            let fit = group_two_segment_solve(&data, s, e, eta, &cfg).unwrap();
            assert!(
                fit.objective >= best.objective - 1e-9,
                "eta={eta} beats the reported winner"
            );
        }
        assert_eq!(best.eta + 1, truth);
    }

    #[test]
    fn flat_zero_signal_ties_to_smallest_candidate() {
        let n = 30;
        let x = vec![1.0; n];
        let y = vec![0.0; n];
        let data = Dataset::from_rows(n, 1, &x, y).unwrap();
        let prelim = ChangePointSet::new(vec![15], n).unwrap();
        let out = local_refine(&data, &prelim, &RefineConfig::new(0.5)).unwrap();
        let (s, _e) = out.windows[0];
        // Every candidate objective is 0; the smallest split wins, and the
        // change point is one past it.
        assert_eq!(out.refined.locations(), &[s + 2]);
        assert_eq!(out.fits[0].as_ref().unwrap().objective, 0.0);
    }

    #[test]
    fn count_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..10 {
            let n = rng.random_range(20..60);
            let p = 2;
            let x = random_design(&mut rng, n, p);
            let y: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let data = Dataset::from_rows(n, p, &x, y).unwrap();
            let mut locs: Vec<usize> = (2..=n).filter(|_| rng.random_bool(0.15)).collect();
            if locs.is_empty() {
                locs.push(n / 2);
            }
            let prelim = ChangePointSet::new(locs.clone(), n).unwrap();
            let out = local_refine(&data, &prelim, &RefineConfig::new(0.3)).unwrap();
            assert_eq!(out.refined.k_hat(), prelim.k_hat());
            assert_eq!(out.fits.len(), prelim.k_hat());
            // Strictly increasing output.
            assert!(out.refined.locations().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn empty_prelim_is_a_no_op() {
        let x = vec![1.0; 10];
        let y = vec![0.0; 10];
        let data = Dataset::from_rows(10, 1, &x, y).unwrap();
        let out = local_refine(&data, &ChangePointSet::empty(), &RefineConfig::new(1.0)).unwrap();
        assert!(out.refined.is_empty());
        assert!(out.fits.is_empty());
    }

    #[test]
    fn boundary_changepoint_at_n_is_scannable() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let n = 20;
        let x = random_design(&mut rng, n, 1);
        let y: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = Dataset::from_rows(n, 1, &x, y).unwrap();
        let prelim = ChangePointSet::new(vec![n], n).unwrap();
        let out = local_refine(&data, &prelim, &RefineConfig::new(0.2)).unwrap();
        assert_eq!(out.refined.k_hat(), 1);
        assert!(out.refined.locations()[0] <= n);
    }
}
