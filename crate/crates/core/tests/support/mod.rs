//! Test-only oracles. Nothing here calls into the samplers or the engine;
//! conditional laws come from explicit matrix inverses of the analytic SCM
//! covariance and risks from direct simulation.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rfi_core::scm::{analytic_covariance, ScmEdge, ScmGraph, ScmNode};
use rfi_core::LinearModel;

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
    (m, (var / v.len() as f64).sqrt())
}

pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0)
}

/// Large-sample standard error of a Gaussian sample covariance.
pub fn covariance_se(var_a: f64, var_b: f64, cov_ab: f64, n: usize) -> f64 {
    ((var_a * var_b + cov_ab * cov_ab) / n as f64).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    covariance(a, b) / (covariance(a, a) * covariance(b, b)).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Random DAG over `k` nodes named `V0..`; edges only go forward in index
/// order. The last node is returned as the target.
pub fn random_scm(rng: &mut impl Rng, k: usize) -> (ScmGraph, String) {
    let nodes: Vec<ScmNode> = (0..k)
        .map(|i| ScmNode {
            name: format!("V{i}"),
            sigma: rng.random_range(0.4..1.5),
        })
        .collect();
    let mut edges = Vec::new();
    for child in 1..k {
        for parent in 0..child {
            if rng.random_bool(0.5) {
                let mut c: f64 = rng.random_range(0.3..1.3);
                if rng.random_bool(0.5) {
                    c = -c;
                }
                edges.push(ScmEdge {
                    from: format!("V{parent}"),
                    to: format!("V{child}"),
                    coefficient: c,
                });
            }
        }
    }
    let target = format!("V{}", k - 1);
    (ScmGraph::new(nodes, edges).unwrap(), target)
}

/// `(slope, intercept, variance)` of `j | given` under a zero-mean Gaussian
/// with covariance `cov`, by explicit inversion.
pub fn conditional_by_inverse(
    cov: &DMatrix<f64>,
    j: usize,
    given: &[usize],
) -> (Vec<f64>, f64, f64) {
    if given.is_empty() {
        return (vec![], 0.0, cov[(j, j)]);
    }
    let m = given.len();
    let s_gg = DMatrix::from_fn(m, m, |a, b| cov[(given[a], given[b])]);
    let s_gj = DVector::from_fn(m, |a, _| cov[(given[a], j)]);
    let inv = s_gg.try_inverse().expect("conditioning block invertible");
    let slope = &inv * &s_gj;
    let var = cov[(j, j)] - s_gj.dot(&slope);
    (slope.iter().copied().collect(), 0.0, var)
}

/// Monte-Carlo RFI of `model` for feature `j` given `given` under the SCM's
/// exact joint law: draws the full vector, draws the replacement from the
/// exact conditional, and averages the loss difference. Returns (mean, se).
pub fn monte_carlo_rfi(
    graph: &ScmGraph,
    target: &str,
    model: &LinearModel,
    j: &str,
    given: &[String],
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let cov = analytic_covariance(graph);
    let names = graph.names();
    let idx = |n: &str| names.iter().position(|m| m == n).unwrap();
    let k = names.len();
    let chol = cov.clone().cholesky().expect("positive definite SCM").l();
    let ji = idx(j);
    let gi: Vec<usize> = given.iter().map(|g| idx(g)).collect();
    let (slope, _, var) = conditional_by_inverse(&cov, ji, &gi);
    let sd = var.max(0.0).sqrt();
    let yi = idx(target);
    let fi: Vec<usize> = model.feature_order.iter().map(|f| idx(f)).collect();
    let jpos = model.feature_order.iter().position(|f| f == j).unwrap();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut z = DVector::zeros(k);
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..draws {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let x = &chol * &z;
        let replacement = gi.iter().zip(&slope).map(|(&g, b)| b * x[g]).sum::<f64>()
            + sd * rng.sample::<f64, _>(StandardNormal);
        let mut f_orig = model.intercept;
        let mut f_pert = model.intercept;
        for (p, &c) in fi.iter().enumerate() {
            f_orig += model.coefficients[p] * x[c];
            let xv = if p == jpos { replacement } else { x[c] };
            f_pert += model.coefficients[p] * xv;
        }
        let y = x[yi];
        let d = (y - f_pert).powi(2) - (y - f_orig).powi(2);
        sum += d;
        sumsq += d * d;
    }
    let n = draws as f64;
    let m = sum / n;
    let var = (sumsq / n - m * m) * n / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Partial correlation of `a` and `b` given `given` from a covariance.
pub fn partial_correlation(cov: &DMatrix<f64>, a: usize, b: usize, given: &[usize]) -> f64 {
    let mut idx = vec![a, b];
    idx.extend_from_slice(given);
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |r, c| cov[(idx[r], idx[c])]);
    let p = sub.try_inverse().unwrap();
    -p[(0, 1)] / (p[(0, 0)] * p[(1, 1)]).sqrt()
}
