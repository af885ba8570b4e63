//! Relative feature importance (RFI): the risk increase of a fixed model
//! when one feature is replaced by a draw from its conditional distribution
//! given an arbitrary variable set `G`.
//!
//! `G = ∅` recovers permutation-style importance and `G = D \ {j}`
//! conditional importance; anything in between, including variables the
//! model never saw, is allowed.

pub mod data;
pub mod engine;
pub mod error;
pub mod inference;
pub mod model;
pub mod ols;
pub mod partition;
pub mod samplers;
pub mod scm;

pub use data::{Dataset, Split, Table};
pub use engine::{
    compute_delta_rfi, compute_rfi, rfi_profile, write_records_csv, DeltaRfi, ImportanceForm,
    RfiEngine, RfiEstimate, RfiOptions, RfiRecord, RiskPair,
};
pub use error::{Result, RfiError};
pub use inference::{confidence_interval, paired_t_one_sided, sign_flip_exact, TestKind, TestResult};
pub use model::{empirical_risk, LossFunction, PredictiveModel, SquaredError};
pub use ols::{fit_ols, fit_ols_table, LinearModel};
pub use partition::{make_partition, IndexPartition};
pub use samplers::{
    ConditionalSampler, GaussianJoint, GaussianSampler, KnockoffSampler, Ridge, SamplerFactory,
    SamplerKind, StreamSeed, TrainedSamplers,
};
pub use scm::{analytic_covariance, builtin_experiment_a, builtin_experiment_b, sample_scm, ScmGraph};
