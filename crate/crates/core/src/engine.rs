//! Relative feature importance estimation.
//!
//! For feature `j` and conditioning set `G` the estimate is the mean over
//! replications of `R̃^{j|G} − R`, where `R` is the empirical risk on the
//! evaluation rows and `R̃^{j|G}` the risk after replacing column `j` with a
//! draw from the sampler.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::Table;
use crate::error::{Result, RfiError};
use crate::inference::{
    confidence_interval, paired_t_one_sided, sign_flip_exact, TestKind, TestResult,
};
use crate::model::{LossFunction, PredictiveModel};
use crate::partition::make_partition;
use crate::samplers::{ConditionalSampler, SamplerFactory, StreamSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ImportanceForm {
    /// `R̃ − R`
    #[default]
    Difference,
    /// `R̃ / R`
    Ratio,
}

impl std::str::FromStr for ImportanceForm {
    type Err = RfiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "difference" => Ok(Self::Difference),
            "ratio" => Ok(Self::Ratio),
            other => Err(RfiError::Parse(format!("unknown importance form `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfiOptions {
    pub replications: usize,
    pub base_seed: u64,
    pub form: ImportanceForm,
}

impl Default for RfiOptions {
    fn default() -> Self {
        Self {
            replications: 30,
            base_seed: 0,
            form: ImportanceForm::Difference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPair {
    pub perturbed: f64,
    pub baseline: f64,
}

impl RiskPair {
    pub fn importance(&self, form: ImportanceForm) -> f64 {
        match form {
            ImportanceForm::Difference => self.perturbed - self.baseline,
            ImportanceForm::Ratio => self.perturbed / self.baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfiEstimate {
    pub feature: String,
    pub given: Vec<String>,
    pub form: ImportanceForm,
    pub base_seed: u64,
    pub replications: Vec<RiskPair>,
    /// Mean importance over replications.
    pub point: f64,
    /// Standard error of `point` across replications (NaN for one).
    pub se: f64,
    /// `L̃_i − L_i` for every evaluation row in the first replication.
    pub first_run_differences: Vec<f64>,
}

impl RfiEstimate {
    pub fn per_replication(&self) -> Vec<f64> {
        self.replications.iter().map(|p| p.importance(self.form)).collect()
    }

    /// One-sided paired t-test on the first replication.
    pub fn paired_t(&self, alpha: f64) -> Result<TestResult> {
        paired_t_one_sided(&self.first_run_differences, alpha)
    }

    pub fn sign_flip(&self, max_permutations: u64, alpha: f64) -> Result<TestResult> {
        sign_flip_exact(&self.first_run_differences, max_permutations, self.base_seed, alpha)
    }

    pub fn test(&self, kind: TestKind, alpha: f64, max_permutations: u64) -> Result<TestResult> {
        match kind {
            TestKind::PairedTOneSided => self.paired_t(alpha),
            TestKind::SignFlipExact => self.sign_flip(max_permutations, alpha),
        }
    }

    /// t-interval of the first-run mean loss difference, mapped to the
    /// ratio scale when the estimate is a ratio.
    pub fn confidence_interval(&self, level: f64) -> Result<(f64, f64)> {
        let (lo, hi) = confidence_interval(&self.first_run_differences, level)?;
        Ok(match self.form {
            ImportanceForm::Difference => (lo, hi),
            ImportanceForm::Ratio => {
                let base = self.replications[0].baseline;
                (1.0 + lo / base, 1.0 + hi / base)
            }
        })
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// A model, a loss and the evaluation rows, with the baseline risk computed
/// once.
pub struct RfiEngine<'a> {
    model: &'a dyn PredictiveModel,
    loss: &'a dyn LossFunction,
    rows: &'a Table,
    target: String,
    design: DMatrix<f64>,
    baseline_losses: Vec<f64>,
    baseline_risk: f64,
}

impl<'a> RfiEngine<'a> {
    pub fn new(
        model: &'a dyn PredictiveModel,
        loss: &'a dyn LossFunction,
        rows: &'a Table,
        target: &str,
    ) -> Result<Self> {
        if rows.n_rows() == 0 {
            return Err(RfiError::InsufficientData("no evaluation rows".into()));
        }
        if model.feature_order().iter().any(|f| f == target) {
            return Err(RfiError::InvalidPartition(format!(
                "target `{target}` may not be a model feature"
            )));
        }
        let design = rows.matrix(model.feature_order())?;
        let y = rows.column(target)?;
        let baseline_losses = losses(model, loss, &design, y);
        let baseline_risk = mean(&baseline_losses);
        Ok(Self {
            model,
            loss,
            rows,
            target: target.to_string(),
            design,
            baseline_losses,
            baseline_risk,
        })
    }

    pub fn baseline_risk(&self) -> f64 {
        self.baseline_risk
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn rows(&self) -> &Table {
        self.rows
    }

    fn validate(&self, j: &str, given: &[String]) -> Result<usize> {
        let features = self.model.feature_order();
        let col = features.iter().position(|f| f == j).ok_or_else(|| {
            RfiError::InvalidPartition(format!("`{j}` is not a model feature"))
        })?;
        if given.iter().any(|g| g == j) {
            // j ∈ G: the replacement is a point mass at the observed value.
            let rest: Vec<&str> = given.iter().filter(|g| *g != j).map(String::as_str).collect();
            make_partition(features.iter().map(String::as_str), j, rest, &self.target)?;
        } else {
            make_partition(
                features.iter().map(String::as_str),
                j,
                given.iter().map(String::as_str),
                &self.target,
            )?;
        }
        for g in given {
            if !self.rows.contains(g) {
                return Err(RfiError::Schema(format!("conditioning variable `{g}` is not a column")));
            }
        }
        Ok(col)
    }

    /// RFI of `j` relative to `given` using `sampler` for the replacement.
    pub fn compute(
        &self,
        j: &str,
        given: &[String],
        sampler: &dyn ConditionalSampler,
        options: RfiOptions,
    ) -> Result<RfiEstimate> {
        let col = self.validate(j, given)?;
        if options.replications == 0 {
            return Err(RfiError::InsufficientData("at least one replication is required".into()));
        }
        if sampler.target() != j {
            return Err(RfiError::Schema(format!(
                "sampler replaces `{}`, not `{j}`",
                sampler.target()
            )));
        }
        let wanted: BTreeSet<&str> = given.iter().map(String::as_str).collect();
        let have: BTreeSet<&str> = sampler.conditioning().iter().map(String::as_str).collect();
        if wanted != have {
            return Err(RfiError::Schema(format!(
                "sampler conditions on {:?}, expected {:?}",
                sampler.conditioning(),
                given
            )));
        }
        if let Some(bad) = sampler.inputs().iter().find(|n| *n != j && !wanted.contains(n.as_str())) {
            return Err(RfiError::Schema(format!(
                "sampler reads `{bad}`, which is outside {{j}} ∪ G"
            )));
        }
        let inputs = self.rows.project(sampler.inputs())?;
        let y = self.rows.column(&self.target)?;

        let runs: Vec<(f64, Option<Vec<f64>>)> = (0..options.replications)
            .into_par_iter()
            .map(|r| {
                let replacement = sampler.sample(&inputs, StreamSeed::new(options.base_seed, r as u64))?;
                if replacement.len() != self.rows.n_rows() {
                    return Err(RfiError::Sampler(format!(
                        "sampler returned {} values for {} rows",
                        replacement.len(),
                        self.rows.n_rows()
                    )));
                }
                let mut design = self.design.clone();
                design.set_column(col, &nalgebra::DVector::from_vec(replacement));
                let perturbed = losses(self.model, self.loss, &design, y);
                let risk = mean(&perturbed);
                let diffs = (r == 0).then(|| {
                    perturbed
                        .iter()
                        .zip(&self.baseline_losses)
                        .map(|(a, b)| a - b)
                        .collect()
                });
                Ok((risk, diffs))
            })
            .collect::<Result<_>>()?;

        let mut first_run_differences = Vec::new();
        let mut replications = Vec::with_capacity(runs.len());
        for (risk, diffs) in runs {
            if let Some(d) = diffs {
                first_run_differences = d;
            }
            replications.push(RiskPair {
                perturbed: risk,
                baseline: self.baseline_risk,
            });
        }
        let values: Vec<f64> = replications.iter().map(|p| p.importance(options.form)).collect();
        let (point, se) = mean_and_se(&values);
        Ok(RfiEstimate {
            feature: j.to_string(),
            given: given.to_vec(),
            form: options.form,
            base_seed: options.base_seed,
            replications,
            point,
            se,
            first_run_differences,
        })
    }

    /// RFI of `j` relative to `G` and to `G ∪ N`, with samplers from
    /// `factory` and the same seeds for both.
    pub fn compute_delta(
        &self,
        j: &str,
        given: &[String],
        added: &[String],
        factory: &dyn SamplerFactory,
        options: RfiOptions,
    ) -> Result<DeltaRfi> {
        if let Some(dup) = added.iter().find(|n| given.contains(n)) {
            return Err(RfiError::InvalidPartition(format!(
                "`{dup}` is in both G and N"
            )));
        }
        if added.iter().any(|n| n == j) {
            return Err(RfiError::InvalidPartition(format!("`{j}` may not be in N")));
        }
        if added.contains(&self.target) {
            return Err(RfiError::InvalidPartition(format!(
                "target `{}` may not be in N",
                self.target
            )));
        }
        let mut extended = given.to_vec();
        extended.extend(added.iter().cloned());
        let base = self.compute(j, given, factory.build(j, given)?.as_ref(), options)?;
        let ext = self.compute(j, &extended, factory.build(j, &extended)?.as_ref(), options)?;
        Ok(DeltaRfi::new(base, ext, added.to_vec()))
    }

    /// Estimates for every `(feature, G)` pair, features outermost.
    pub fn profile(
        &self,
        features: &[String],
        given_sets: &[Vec<String>],
        factory: &dyn SamplerFactory,
        options: RfiOptions,
    ) -> Result<Vec<RfiEstimate>> {
        let mut out = Vec::with_capacity(features.len() * given_sets.len());
        for j in features {
            for given in given_sets {
                let sampler = factory.build(j, given)?;
                out.push(self.compute(j, given, sampler.as_ref(), options)?);
            }
        }
        Ok(out)
    }
}

fn losses(model: &dyn PredictiveModel, loss: &dyn LossFunction, design: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    model
        .predict(design)
        .iter()
        .zip(y)
        .map(|(&p, &y)| loss.pointwise(y, p))
        .collect()
}

/// `RFI_j^G − RFI_j^{G ∪ N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRfi {
    pub feature: String,
    pub given: Vec<String>,
    pub added: Vec<String>,
    pub value: f64,
    /// `sqrt(se_G² + se_{G∪N}²)`.
    pub se: f64,
    pub base: RfiEstimate,
    pub extended: RfiEstimate,
}

impl DeltaRfi {
    pub fn new(base: RfiEstimate, extended: RfiEstimate, added: Vec<String>) -> Self {
        Self {
            feature: base.feature.clone(),
            given: base.given.clone(),
            added,
            value: base.point - extended.point,
            se: base.se.hypot(extended.se),
            base,
            extended,
        }
    }
}

/// RFI of `j` relative to `given` on `rows`.
#[allow(clippy::too_many_arguments)]
pub fn compute_rfi(
    model: &dyn PredictiveModel,
    loss: &dyn LossFunction,
    rows: &Table,
    target: &str,
    j: &str,
    given: &[String],
    sampler: &dyn ConditionalSampler,
    options: RfiOptions,
) -> Result<RfiEstimate> {
    RfiEngine::new(model, loss, rows, target)?.compute(j, given, sampler, options)
}

#[allow(clippy::too_many_arguments)]
pub fn compute_delta_rfi(
    model: &dyn PredictiveModel,
    loss: &dyn LossFunction,
    rows: &Table,
    target: &str,
    j: &str,
    given: &[String],
    added: &[String],
    factory: &dyn SamplerFactory,
    options: RfiOptions,
) -> Result<DeltaRfi> {
    RfiEngine::new(model, loss, rows, target)?.compute_delta(j, given, added, factory, options)
}

#[allow(clippy::too_many_arguments)]
pub fn rfi_profile(
    model: &dyn PredictiveModel,
    loss: &dyn LossFunction,
    rows: &Table,
    target: &str,
    features: &[String],
    given_sets: &[Vec<String>],
    factory: &dyn SamplerFactory,
    options: RfiOptions,
) -> Result<Vec<RfiEstimate>> {
    if features.is_empty() || given_sets.is_empty() {
        return Ok(Vec::new());
    }
    RfiEngine::new(model, loss, rows, target)?.profile(features, given_sets, factory, options)
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct RfiRecord {
    pub feature: String,
    pub given: Vec<String>,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub replications: usize,
    pub seed: u64,
}

pub const RECORD_HEADER: [&str; 10] = [
    "feature",
    "G",
    "estimate",
    "se",
    "t",
    "p",
    "ci_lower",
    "ci_upper",
    "replications",
    "seed",
];

impl RfiRecord {
    pub fn from_estimate(
        est: &RfiEstimate,
        test: TestKind,
        alpha: f64,
        max_permutations: u64,
        ci_level: f64,
    ) -> Result<Self> {
        let result = est.test(test, alpha, max_permutations)?;
        let (ci_lower, ci_upper) = est.confidence_interval(ci_level)?;
        Ok(Self {
            feature: est.feature.clone(),
            given: est.given.clone(),
            estimate: est.point,
            se: est.se,
            statistic: result.statistic,
            p_value: result.p_value,
            ci_lower,
            ci_upper,
            replications: est.replications.len(),
            seed: est.base_seed,
        })
    }

    pub fn given_label(&self) -> String {
        self.given.join(";")
    }

    fn fields(&self) -> [String; 10] {
        [
            self.feature.clone(),
            self.given_label(),
            self.estimate.to_string(),
            self.se.to_string(),
            self.statistic.to_string(),
            self.p_value.to_string(),
            self.ci_lower.to_string(),
            self.ci_upper.to_string(),
            self.replications.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Writes records under [`RECORD_HEADER`]; the header is written even when
/// there are no records.
pub fn write_records_csv<W: std::io::Write>(writer: W, records: &[RfiRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(RECORD_HEADER)?;
    for r in records {
        wtr.write_record(r.fields())?;
    }
    wtr.flush()?;
    Ok(())
}
