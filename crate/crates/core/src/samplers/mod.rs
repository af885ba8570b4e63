//! Replacement-variable samplers.
//!
//! A sampler for feature `j` relative to a conditioning set `G` draws one
//! replacement value per row from `P(X_j | X_G)`. The sampler only ever sees
//! the columns it declares in [`ConditionalSampler::inputs`], which are a
//! subset of `{j} ∪ G`, so its output cannot depend on the remaining
//! features or on the target.

mod gaussian;
mod knockoff;

pub use gaussian::{
    conditional_gaussian_params, fit_gaussian, ConditionalGaussian, GaussianJoint,
    GaussianSampler, Ridge,
};
pub use knockoff::{equicorrelated_knockoff_s, sample_knockoff_column, KnockoffSampler, KnockoffSpec};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Table;
use crate::error::{Result, RfiError};

/// Identifies an independent random stream: replication `stream` of a run
/// seeded with `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub base: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(base: u64, stream: u64) -> Self {
        Self { base, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base);
        rng.set_stream(self.stream);
        rng
    }
}

pub trait ConditionalSampler: Send + Sync {
    /// The feature being replaced.
    fn target(&self) -> &str;

    /// The conditioning set `G`.
    fn conditioning(&self) -> &[String];

    /// Columns read by [`sample`](ConditionalSampler::sample); always a
    /// subset of `{target} ∪ conditioning`.
    fn inputs(&self) -> &[String];

    /// Draws one replacement per row of `inputs`.
    fn sample(&self, inputs: &Table, seed: StreamSeed) -> Result<Vec<f64>>;
}

/// Replacement for `j` when `j ∈ G`: the law of `X_j` given itself is a
/// point mass, so the replacement is the observed column.
#[derive(Debug, Clone)]
pub struct PointMassSampler {
    target: String,
    given: Vec<String>,
    inputs: Vec<String>,
}

impl PointMassSampler {
    pub fn new(target: &str, given: &[String]) -> Self {
        Self {
            target: target.to_string(),
            given: given.to_vec(),
            inputs: vec![target.to_string()],
        }
    }
}

impl ConditionalSampler for PointMassSampler {
    fn target(&self) -> &str {
        &self.target
    }

    fn conditioning(&self) -> &[String] {
        &self.given
    }

    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn sample(&self, inputs: &Table, _seed: StreamSeed) -> Result<Vec<f64>> {
        Ok(inputs.column(&self.target)?.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SamplerKind {
    /// Direct draw from the fitted conditional Gaussian.
    #[default]
    Gaussian,
    /// Equicorrelated Gaussian model-X knockoff over `{j} ∪ G`.
    Knockoff,
}

impl std::str::FromStr for SamplerKind {
    type Err = RfiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "knockoff" => Ok(Self::Knockoff),
            other => Err(RfiError::Parse(format!("unknown sampler kind `{other}`"))),
        }
    }
}

/// Builds the sampler for a `(j, G)` pair.
pub trait SamplerFactory: Send + Sync {
    fn build(&self, j: &str, given: &[String]) -> Result<Box<dyn ConditionalSampler>>;
}

/// Fits samplers on a fixed set of training rows.
#[derive(Debug, Clone)]
pub struct TrainedSamplers {
    train: Table,
    kind: SamplerKind,
    ridge: Ridge,
}

impl TrainedSamplers {
    pub fn new(train: Table, kind: SamplerKind, ridge: Ridge) -> Self {
        Self { train, kind, ridge }
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }
}

impl SamplerFactory for TrainedSamplers {
    fn build(&self, j: &str, given: &[String]) -> Result<Box<dyn ConditionalSampler>> {
        if given.iter().any(|g| g == j) {
            return Ok(Box::new(PointMassSampler::new(j, given)));
        }
        match self.kind {
            SamplerKind::Gaussian => Ok(Box::new(GaussianSampler::fit(
                &self.train,
                j,
                given,
                self.ridge,
            )?)),
            SamplerKind::Knockoff => Ok(Box::new(KnockoffSampler::fit(
                &self.train,
                j,
                given,
                self.ridge,
            )?)),
        }
    }
}

pub(crate) fn check_inputs(inputs: &Table, expected: &[String]) -> Result<Vec<usize>> {
    expected
        .iter()
        .map(|n| {
            inputs.index_of(n).ok_or_else(|| {
                RfiError::Schema(format!("sampler input column `{n}` is missing"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| StreamSeed::new(1, 0).rng().random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = StreamSeed::new(1, 0).rng().random();
        let y: u64 = StreamSeed::new(1, 1).rng().random();
        let z: u64 = StreamSeed::new(2, 0).rng().random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn point_mass_returns_observed() {
        let t = Table::new(vec!["a".into()], vec![vec![1.0, 2.0]]).unwrap();
        let s = PointMassSampler::new("a", &["a".to_string()]);
        assert_eq!(s.sample(&t, StreamSeed::new(0, 0)).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn factory_routes_self_conditioning_to_point_mass() {
        let t = Table::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 4.0], vec![0.0, 1.0, 3.0]],
        )
        .unwrap();
        let f = TrainedSamplers::new(t.clone(), SamplerKind::Gaussian, Ridge::Auto);
        let s = f.build("a", &["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(s.inputs(), &["a".to_string()]);
        assert_eq!(s.sample(&t, StreamSeed::new(3, 3)).unwrap(), vec![1.0, 2.0, 4.0]);
    }
}
