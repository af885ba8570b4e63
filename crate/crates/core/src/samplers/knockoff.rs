//! Equicorrelated Gaussian model-X knockoffs.
//!
//! For `X ~ N(μ, Σ)` over `{j} ∪ G` the knockoff `X̃` is drawn from
//! `X̃ | X ~ N(μ + (I − SΣ⁻¹)(X − μ), 2S − SΣ⁻¹S)` with `S = diag(s)`, which
//! makes `(X, X̃)` jointly Gaussian with covariance `[[Σ, Σ−S], [Σ−S, Σ]]`.
//! Only the coordinate for `j` is kept as the replacement.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{check_inputs, fit_gaussian, ConditionalSampler, GaussianJoint, Ridge, StreamSeed};
use crate::data::Table;
use crate::error::{Result, RfiError};

const PSD_TOLERANCE: f64 = 1e-8;
const MAX_REPAIRS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffSpec {
    pub joint: GaussianJoint,
    /// Diagonal of `S` in covariance units.
    pub s: DVector<f64>,
    /// Common value of `s` on the correlation scale.
    pub s_correlation: f64,
    /// Smallest eigenvalue of the correlation matrix.
    pub lambda_min: f64,
}

impl KnockoffSpec {
    /// The 2k×2k covariance of `(X, X̃)`.
    pub fn knockoff_covariance(&self) -> DMatrix<f64> {
        knockoff_covariance(self.joint.covariance(), &self.s)
    }
}

fn knockoff_covariance(cov: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let k = cov.nrows();
    let off = cov - DMatrix::from_diagonal(s);
    let mut g = DMatrix::zeros(2 * k, 2 * k);
    g.view_mut((0, 0), (k, k)).copy_from(cov);
    g.view_mut((k, k), (k, k)).copy_from(cov);
    g.view_mut((0, k), (k, k)).copy_from(&off);
    g.view_mut((k, 0), (k, k)).copy_from(&off);
    g
}

/// `s_i = min(2 λ_min(corr), 1) · Σ_ii`, shrunk slightly if rounding leaves
/// the joint knockoff covariance outside the PSD cone.
pub fn equicorrelated_knockoff_s(joint: &GaussianJoint) -> Result<KnockoffSpec> {
    let cov = joint.covariance();
    let k = cov.nrows();
    if k == 0 {
        return Err(RfiError::Knockoff("empty joint".into()));
    }
    let sd: Vec<f64> = (0..k).map(|i| cov[(i, i)].sqrt()).collect();
    let corr = DMatrix::from_fn(k, k, |a, b| cov[(a, b)] / (sd[a] * sd[b]));
    let lambda_min = corr.symmetric_eigenvalues().min();
    let mut s_corr = (2.0 * lambda_min).min(1.0);
    if !(s_corr >= 0.0) {
        return Err(RfiError::Knockoff(format!(
            "correlation matrix is not positive definite (λ_min = {lambda_min:e})"
        )));
    }
    let scale = cov.diagonal().max().max(1.0);
    for _ in 0..MAX_REPAIRS {
        let s = DVector::from_fn(k, |i, _| s_corr * cov[(i, i)]);
        let min_eig = knockoff_covariance(cov, &s).symmetric_eigenvalues().min();
        if min_eig >= -PSD_TOLERANCE * scale {
            return Ok(KnockoffSpec {
                joint: joint.clone(),
                s,
                s_correlation: s_corr,
                lambda_min,
            });
        }
        s_corr *= 1.0 - 1e-6;
    }
    Err(RfiError::Knockoff(format!(
        "could not make the knockoff covariance PSD (λ_min = {lambda_min:e})"
    )))
}

#[derive(Debug, Clone)]
enum KnockoffLaw {
    Coordinate {
        /// Row `j` of `I − SΣ⁻¹`, aligned with `inputs`.
        weights: DVector<f64>,
        mean: DVector<f64>,
        variance: f64,
    },
    Constant(f64),
}

/// Replacement for `j` taken from the `j` coordinate of a knockoff of
/// `(X_j, X_G)`.
#[derive(Debug, Clone)]
pub struct KnockoffSampler {
    target: String,
    given: Vec<String>,
    inputs: Vec<String>,
    law: KnockoffLaw,
}

impl KnockoffSampler {
    pub fn fit(train: &Table, j: &str, given: &[String], ridge: Ridge) -> Result<Self> {
        let mut names = vec![j.to_string()];
        names.extend(given.iter().cloned());
        let col = train.column(j)?;
        if let Some(&first) = col.first() {
            if col.iter().all(|&v| v == first) {
                train.columns_for(given)?;
                return Ok(Self {
                    target: j.to_string(),
                    given: given.to_vec(),
                    inputs: names,
                    law: KnockoffLaw::Constant(first),
                });
            }
        }
        let joint = fit_gaussian(train, &names, ridge)?;
        let spec = equicorrelated_knockoff_s(&joint)?;
        Self::from_spec(&spec, j)
    }

    /// Sampler for coordinate `j` of `spec`; the conditioning set is every
    /// other variable of the joint.
    pub fn from_spec(spec: &KnockoffSpec, j: &str) -> Result<Self> {
        let joint = &spec.joint;
        let ji = joint.index_of(j)?;
        let cov = joint.covariance();
        let k = joint.len();
        let precision = cov
            .clone()
            .cholesky()
            .ok_or_else(|| RfiError::Knockoff("joint covariance is not positive definite".into()))?
            .inverse();
        let sj = spec.s[ji];
        let weights = DVector::from_fn(k, |c, _| {
            let delta = if c == ji { 1.0 } else { 0.0 };
            delta - sj * precision[(ji, c)]
        });
        let variance = (2.0 * sj - sj * sj * precision[(ji, ji)]).max(0.0);
        Ok(Self {
            target: j.to_string(),
            given: joint.names().iter().filter(|n| *n != j).cloned().collect(),
            inputs: joint.names().to_vec(),
            law: KnockoffLaw::Coordinate {
                weights,
                mean: joint.mean().clone(),
                variance,
            },
        })
    }
}

impl ConditionalSampler for KnockoffSampler {
    fn target(&self) -> &str {
        &self.target
    }

    fn conditioning(&self) -> &[String] {
        &self.given
    }

    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn sample(&self, inputs: &Table, seed: StreamSeed) -> Result<Vec<f64>> {
        check_inputs(inputs, &self.inputs)?;
        let n = inputs.n_rows();
        let (weights, mean, variance) = match &self.law {
            KnockoffLaw::Constant(c) => return Ok(vec![*c; n]),
            KnockoffLaw::Coordinate {
                weights,
                mean,
                variance,
            } => (weights, mean, *variance),
        };
        let cols = inputs.columns_for(&self.inputs)?;
        let ji = self.inputs.iter().position(|n| *n == self.target).unwrap_or(0);
        let sd = variance.sqrt();
        let mut rng = seed.rng();
        let mut out = Vec::with_capacity(n);
        for r in 0..n {
            let mut m = mean[ji];
            for (c, col) in cols.iter().enumerate() {
                m += weights[c] * (col[r] - mean[c]);
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(m + sd * z);
        }
        Ok(out)
    }
}

/// Draws the knockoff coordinate of `j` for each row of `rows`.
pub fn sample_knockoff_column(
    spec: &KnockoffSpec,
    rows: &Table,
    j: &str,
    seed: StreamSeed,
) -> Result<Vec<f64>> {
    KnockoffSampler::from_spec(spec, j)?.sample(rows, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn joint(cov: &[f64], k: usize) -> GaussianJoint {
        GaussianJoint::new(
            (0..k).map(|i| format!("x{i}")).collect(),
            DVector::zeros(k),
            DMatrix::from_row_slice(k, k, cov),
        )
        .unwrap()
    }

    #[test]
    fn identity_gives_unit_s() {
        let spec = equicorrelated_knockoff_s(&joint(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3)).unwrap();
        assert_eq!(spec.s_correlation, 1.0);
        assert_eq!(spec.s.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn moderate_correlation_is_capped() {
        // eigenvalues of [[1, .5], [.5, 1]] are 0.5 and 1.5
        let spec = equicorrelated_knockoff_s(&joint(&[1.0, 0.5, 0.5, 1.0], 2)).unwrap();
        assert_relative_eq!(spec.lambda_min, 0.5, epsilon = 1e-12);
        assert_relative_eq!(spec.s_correlation, 1.0);
    }

    #[test]
    fn strong_correlation() {
        // eigenvalues of [[1, .9], [.9, 1]] are 0.1 and 1.9
        let spec = equicorrelated_knockoff_s(&joint(&[1.0, 0.9, 0.9, 1.0], 2)).unwrap();
        assert_relative_eq!(spec.lambda_min, 0.1, epsilon = 1e-12);
        assert_relative_eq!(spec.s[0], 0.2, epsilon = 1e-9);
        assert_relative_eq!(spec.s[1], 0.2, epsilon = 1e-9);
    }

    #[test]
    fn s_rescales_to_covariance_units() {
        // corr 0.9 with variances 4 and 9
        let spec = equicorrelated_knockoff_s(&joint(&[4.0, 5.4, 5.4, 9.0], 2)).unwrap();
        assert_relative_eq!(spec.s[0], 0.8, epsilon = 1e-9);
        assert_relative_eq!(spec.s[1], 1.8, epsilon = 1e-9);
    }

    #[test]
    fn knockoff_covariance_is_psd() {
        for rho in [0.0, 0.3, 0.6, 0.95, -0.7] {
            let spec = equicorrelated_knockoff_s(&joint(&[1.0, rho, rho, 1.0], 2)).unwrap();
            let min = spec.knockoff_covariance().symmetric_eigenvalues().min();
            assert!(min >= -1e-8, "rho = {rho}: {min}");
        }
    }

    #[test]
    fn independent_joint_gives_marginal_knockoff() {
        let j = joint(&[2.0, 0.0, 0.0, 3.0], 2);
        let spec = equicorrelated_knockoff_s(&j).unwrap();
        let s = KnockoffSampler::from_spec(&spec, "x0").unwrap();
        match &s.law {
            KnockoffLaw::Coordinate { weights, variance, .. } => {
                assert_relative_eq!(weights[0], 0.0, epsilon = 1e-12);
                assert_relative_eq!(weights[1], 0.0, epsilon = 1e-12);
                assert_relative_eq!(*variance, 2.0, epsilon = 1e-12);
            }
            KnockoffLaw::Constant(_) => panic!("expected a Gaussian coordinate"),
        }
        assert_eq!(s.conditioning(), &["x1".to_string()]);
    }

    #[test]
    fn knockoff_sampling_is_deterministic() {
        let spec = equicorrelated_knockoff_s(&joint(&[1.0, 0.4, 0.4, 1.0], 2)).unwrap();
        let rows = Table::new(
            vec!["x0".into(), "x1".into()],
            vec![vec![0.5, -1.0, 2.0], vec![0.1, 0.2, 0.3]],
        )
        .unwrap();
        let a = sample_knockoff_column(&spec, &rows, "x0", StreamSeed::new(5, 1)).unwrap();
        let b = sample_knockoff_column(&spec, &rows, "x0", StreamSeed::new(5, 1)).unwrap();
        assert_eq!(a, b);
    }
}
