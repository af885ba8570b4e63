use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{check_inputs, ConditionalSampler, StreamSeed};
use crate::data::Table;
use crate::error::{Result, RfiError};

/// Diagonal regularisation applied when fitting a [`GaussianJoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Ridge {
    /// `1e-8 · trace(Σ) / k`
    #[default]
    Auto,
    Fixed(f64),
}

impl Ridge {
    fn resolve(self, covariance: &DMatrix<f64>) -> Result<f64> {
        match self {
            Ridge::Auto => Ok(1e-8 * covariance.trace() / covariance.nrows().max(1) as f64),
            Ridge::Fixed(r) if r >= 0.0 && r.is_finite() => Ok(r),
            Ridge::Fixed(r) => Err(RfiError::Fit(format!("ridge must be ≥ 0, got {r}"))),
        }
    }
}

/// Mean and covariance of a multivariate normal over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianJoint {
    names: Vec<String>,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    ridge: f64,
}

/// Smallest eigenvalue relative to the largest below which a covariance is
/// treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

impl GaussianJoint {
    /// Wraps known moments, checking symmetry and positive definiteness.
    pub fn new(names: Vec<String>, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let k = names.len();
        if mean.len() != k || covariance.shape() != (k, k) {
            return Err(RfiError::Fit(format!(
                "moment dimensions do not match {k} names"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(RfiError::Fit(format!("duplicate variable `{dup}`")));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(1.0) {
            return Err(RfiError::Fit("covariance is not symmetric".into()));
        }
        if k > 0 {
            let eig = covariance.clone().symmetric_eigenvalues();
            let (lo, hi) = (eig.min(), eig.max());
            if !(lo > SINGULAR_RATIO * hi) || hi <= 0.0 {
                return Err(RfiError::Fit(format!(
                    "covariance over {names:?} is singular (smallest eigenvalue {lo:e}, largest {hi:e}); use a larger ridge"
                )));
            }
        }
        Ok(Self {
            names,
            mean,
            covariance,
            ridge: 0.0,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| RfiError::Schema(format!("`{name}` is not in the fitted joint")))
    }
}

/// Fits mean and (n−1)-denominator covariance of `names` over `rows`, then
/// adds `ridge · I`.
pub fn fit_gaussian<S: AsRef<str>>(rows: &Table, names: &[S], ridge: Ridge) -> Result<GaussianJoint> {
    let n = rows.n_rows();
    if n < 2 {
        return Err(RfiError::InsufficientData(format!(
            "fitting a Gaussian needs at least 2 rows, got {n}"
        )));
    }
    let cols = rows.columns_for(names)?;
    let k = cols.len();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let mut cov = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let s: f64 = cols[a]
                .iter()
                .zip(cols[b])
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum();
            let v = s / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let ridge = ridge.resolve(&cov)?;
    for i in 0..k {
        cov[(i, i)] += ridge;
    }
    let names = names.iter().map(|s| s.as_ref().to_string()).collect();
    let mut joint = GaussianJoint::new(names, DVector::from_vec(means), cov)?;
    joint.ridge = ridge;
    Ok(joint)
}

/// `X_j | X_G = x ~ Normal(intercept + slope·x, variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    pub target: String,
    pub given: Vec<String>,
    pub slope: DVector<f64>,
    pub intercept: f64,
    pub variance: f64,
}

impl ConditionalGaussian {
    pub fn mean_at(&self, x_given: &[f64]) -> f64 {
        self.intercept
            + self
                .slope
                .iter()
                .zip(x_given)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Conditional law of `j` given `given` under `joint` (Schur complement).
pub fn conditional_gaussian_params<S: AsRef<str>>(
    joint: &GaussianJoint,
    j: &str,
    given: &[S],
) -> Result<ConditionalGaussian> {
    let ji = joint.index_of(j)?;
    let gi: Vec<usize> = given
        .iter()
        .map(|g| joint.index_of(g.as_ref()))
        .collect::<Result<_>>()?;
    if gi.contains(&ji) {
        return Err(RfiError::InvalidPartition(format!(
            "`{j}` cannot be conditioned on itself"
        )));
    }
    let cov = joint.covariance();
    let mean = joint.mean();
    let given_names: Vec<String> = given.iter().map(|g| g.as_ref().to_string()).collect();
    if gi.is_empty() {
        return Ok(ConditionalGaussian {
            target: j.to_string(),
            given: given_names,
            slope: DVector::zeros(0),
            intercept: mean[ji],
            variance: cov[(ji, ji)],
        });
    }
    let m = gi.len();
    let s_gg = DMatrix::from_fn(m, m, |a, b| cov[(gi[a], gi[b])]);
    let s_gj = DVector::from_fn(m, |a, _| cov[(gi[a], ji)]);
    let chol = s_gg.cholesky().ok_or_else(|| {
        RfiError::Fit(format!("covariance of {given_names:?} is not positive definite"))
    })?;
    let slope = chol.solve(&s_gj);
    let intercept = mean[ji] - gi.iter().zip(slope.iter()).map(|(&g, b)| b * mean[g]).sum::<f64>();
    let variance = (cov[(ji, ji)] - s_gj.dot(&slope)).max(0.0);
    Ok(ConditionalGaussian {
        target: j.to_string(),
        given: given_names,
        slope,
        intercept,
        variance,
    })
}

#[derive(Debug, Clone)]
enum GaussianLaw {
    Conditional(ConditionalGaussian),
    Constant(f64),
}

/// Draws `x̃_j = intercept + slope·x_G + sd · z` with `z` standard normal,
/// one `z` per row in row order from the replication's stream.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    target: String,
    given: Vec<String>,
    law: GaussianLaw,
}

impl GaussianSampler {
    /// Fits the joint of `{j} ∪ given` on `train` and conditions it. A
    /// feature that is constant in training yields a point mass at that
    /// constant.
    pub fn fit(train: &Table, j: &str, given: &[String], ridge: Ridge) -> Result<Self> {
        let col = train.column(j)?;
        if let Some(&first) = col.first() {
            if col.iter().all(|&v| v == first) {
                train.columns_for(given)?;
                return Ok(Self {
                    target: j.to_string(),
                    given: given.to_vec(),
                    law: GaussianLaw::Constant(first),
                });
            }
        }
        let mut names = vec![j.to_string()];
        names.extend(given.iter().cloned());
        let joint = fit_gaussian(train, &names, ridge)?;
        Self::from_joint(&joint, j, given)
    }

    pub fn from_joint(joint: &GaussianJoint, j: &str, given: &[String]) -> Result<Self> {
        Ok(Self {
            target: j.to_string(),
            given: given.to_vec(),
            law: GaussianLaw::Conditional(conditional_gaussian_params(joint, j, given)?),
        })
    }

    pub fn conditional(&self) -> Option<&ConditionalGaussian> {
        match &self.law {
            GaussianLaw::Conditional(c) => Some(c),
            GaussianLaw::Constant(_) => None,
        }
    }
}

impl ConditionalSampler for GaussianSampler {
    fn target(&self) -> &str {
        &self.target
    }

    fn conditioning(&self) -> &[String] {
        &self.given
    }

    fn inputs(&self) -> &[String] {
        &self.given
    }

    fn sample(&self, inputs: &Table, seed: StreamSeed) -> Result<Vec<f64>> {
        let idx = check_inputs(inputs, &self.given)?;
        let n = inputs.n_rows();
        let law = match &self.law {
            GaussianLaw::Constant(c) => return Ok(vec![*c; n]),
            GaussianLaw::Conditional(law) => law,
        };
        let cols: Vec<&[f64]> = idx
            .iter()
            .map(|&i| inputs.column(&inputs.names()[i]))
            .collect::<Result<_>>()?;
        let sd = law.variance.sqrt();
        let mut rng = seed.rng();
        let mut out = Vec::with_capacity(n);
        for r in 0..n {
            let mut mean = law.intercept;
            for (b, c) in law.slope.iter().zip(&cols) {
                mean += b * c[r];
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(mean + sd * z);
        }
        Ok(out)
    }
}
