//! Independent reference solvers for tests (enabled by the `testutil`
//! feature, never part of the library API).
//!
//! The solvers here deliberately share no code path with the coordinate
//! descent implementations they check: both are accelerated proximal
//! gradient (FISTA) iterations with a power-iteration Lipschitz bound, run
//! for a fixed large iteration budget, returning the best iterate seen.

use crate::dp::{segment_loss, DpConfig, LossCache};
use crate::model::{Dataset, IntegerInterval};

fn max_eigenvalue_gram(cols: &[Vec<f64>]) -> f64 {
    let p = cols.len();
    if p == 0 {
        return 0.0;
    }
    // Gram matrix X'X, then power iteration.
    let mut gram = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let g: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    let mut v = vec![1.0; p];
    let mut eig = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; p];
        for i in 0..p {
            for j in 0..p {
                w[i] += gram[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        eig = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    eig
}

fn soft(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// FISTA reference for `min ||y - X v||^2 + weight ||v||_1` on an interval.
/// Returns `(beta, objective)` of the best iterate.
pub fn fista_lasso(
    data: &Dataset,
    interval: IntegerInterval,
    weight: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let rows = interval.rows();
    let p = data.p();
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| data.column(j)[rows.clone()].to_vec())
        .collect();
    let y = data.y()[rows].to_vec();
    let lip = (2.0 * max_eigenvalue_gram(&cols)).max(1e-12) * 1.01;

    let objective = |beta: &[f64]| -> f64 {
        let mut rss = 0.0;
        for t in 0..y.len() {
            let pred: f64 = (0..p).map(|j| beta[j] * cols[j][t]).sum();
            let r = y[t] - pred;
            rss += r * r;
        }
        rss + weight * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let gradient = |beta: &[f64]| -> Vec<f64> {
        let mut resid = y.clone();
        for (j, col) in cols.iter().enumerate() {
            if beta[j] != 0.0 {
                for (r, &x) in resid.iter_mut().zip(col) {
                    *r -= beta[j] * x;
                }
            }
        }
        (0..p)
            .map(|j| -2.0 * cols[j].iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    };

    let mut beta = vec![0.0; p];
    let mut momentum = beta.clone();
    let mut t_acc = 1.0f64;
    let mut best = beta.clone();
    let mut best_obj = objective(&beta);
    for _ in 0..iters {
        let grad = gradient(&momentum);
        let next: Vec<f64> = (0..p)
            .map(|j| soft(momentum[j] - grad[j] / lip, weight / lip))
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let coef = (t_acc - 1.0) / t_next;
        momentum = (0..p)
            .map(|j| next[j] + coef * (next[j] - beta[j]))
            .collect();
        beta = next;
        t_acc = t_next;
        let obj = objective(&beta);
        if obj < best_obj {
            best_obj = obj;
            best = beta.clone();
        }
    }
    (best, best_obj)
}

/// FISTA reference for the two-segment group problem on segments `(s, eta]`
/// and `(eta, e]`: minimizes the rescaled objective in `(u, v)` and reports
/// `(beta1, beta2, objective)` in the original parameterization.
pub fn fista_group_two_segment(
    data: &Dataset,
    s: usize,
    e: usize,
    eta: usize,
    zeta: f64,
    iters: usize,
) -> (Vec<f64>, Vec<f64>, f64) {
    let p = data.p();
    let m1 = ((eta - s) as f64).sqrt();
    let m2 = ((e - eta) as f64).sqrt();
    let cols1: Vec<Vec<f64>> = (0..p)
        .map(|j| data.column(j)[s..eta].iter().map(|x| x / m1).collect())
        .collect();
    let cols2: Vec<Vec<f64>> = (0..p)
        .map(|j| data.column(j)[eta..e].iter().map(|x| x / m2).collect())
        .collect();
    let y1 = data.y()[s..eta].to_vec();
    let y2 = data.y()[eta..e].to_vec();
    let lip =
        (2.0 * max_eigenvalue_gram(&cols1).max(max_eigenvalue_gram(&cols2))).max(1e-12) * 1.01;

    let objective = |u: &[f64], v: &[f64]| -> f64 {
        let mut rss = 0.0;
        for t in 0..y1.len() {
            let pred: f64 = (0..p).map(|j| u[j] * cols1[j][t]).sum();
            rss += (y1[t] - pred) * (y1[t] - pred);
        }
        for t in 0..y2.len() {
            let pred: f64 = (0..p).map(|j| v[j] * cols2[j][t]).sum();
            rss += (y2[t] - pred) * (y2[t] - pred);
        }
        rss + zeta * (0..p).map(|j| u[j].hypot(v[j])).sum::<f64>()
    };
    let gradient = |u: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut r1 = y1.clone();
        let mut r2 = y2.clone();
        for j in 0..p {
            for (r, &x) in r1.iter_mut().zip(&cols1[j]) {
                *r -= u[j] * x;
            }
            for (r, &x) in r2.iter_mut().zip(&cols2[j]) {
                *r -= v[j] * x;
            }
        }
        let gu = (0..p)
            .map(|j| -2.0 * cols1[j].iter().zip(&r1).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let gv = (0..p)
            .map(|j| -2.0 * cols2[j].iter().zip(&r2).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (gu, gv)
    };

    let mut u = vec![0.0; p];
    let mut v = vec![0.0; p];
    let (mut mu, mut mv) = (u.clone(), v.clone());
    let mut t_acc = 1.0f64;
    let mut best = (u.clone(), v.clone());
    let mut best_obj = objective(&u, &v);
    for _ in 0..iters {
        let (gu, gv) = gradient(&mu, &mv);
        let mut nu = vec![0.0; p];
        let mut nv = vec![0.0; p];
        for j in 0..p {
            let au = mu[j] - gu[j] / lip;
            let av = mv[j] - gv[j] / lip;
            let norm = au.hypot(av);
            let shrink = if norm > 0.0 {
                (1.0 - (zeta / lip) / norm).max(0.0)
            } else {
                0.0
            };
            nu[j] = shrink * au;
            nv[j] = shrink * av;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let coef = (t_acc - 1.0) / t_next;
        mu = (0..p).map(|j| nu[j] + coef * (nu[j] - u[j])).collect();
        mv = (0..p).map(|j| nv[j] + coef * (nv[j] - v[j])).collect();
        u = nu;
        v = nv;
        t_acc = t_next;
        let obj = objective(&u, &v);
        if obj < best_obj {
            best_obj = obj;
            best = (u.clone(), v.clone());
        }
    }
    let beta1: Vec<f64> = best.0.iter().map(|x| x / m1).collect();
    let beta2: Vec<f64> = best.1.iter().map(|x| x / m2).collect();
    (beta1, beta2, best_obj)
}

/// Minimum of the partition objective by explicit enumeration of all
/// `2^(n-1)` partitions (those respecting `min_seg_len`). Exponential: keep
/// `n` small.
pub fn enumerate_partition_minimum(data: &Dataset, cfg: &DpConfig) -> f64 {
    let n = data.n();
    assert!(n <= 20, "enumeration is exponential in n");
    let mut cache = LossCache::new();
    let mut best = f64::INFINITY;
    for mask in 0u64..(1 << (n - 1)) {
        let mut bounds = vec![0usize];
        for s in 1..n {
            if mask & (1 << (s - 1)) != 0 {
                bounds.push(s);
            }
        }
        bounds.push(n);
        if bounds.windows(2).any(|w| w[1] - w[0] < cfg.min_seg_len) {
            continue;
        }
        let mut total = cfg.gamma * (bounds.len() - 1) as f64;
        for w in bounds.windows(2) {
            let iv = IntegerInterval::new(w[0], w[1]).unwrap();
            total += segment_loss(data, iv, &cfg.lasso, &mut cache).unwrap();
        }
        best = best.min(total);
    }
    best
}
