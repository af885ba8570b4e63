//! Significance tests on paired per-observation loss differences
//! `d_i = L̃_i − L_i`, with the one-sided alternative `E[d] > 0`.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, RfiError};
use crate::samplers::StreamSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    PairedTOneSided,
    SignFlipExact,
}

impl std::str::FromStr for TestKind {
    type Err = RfiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired-t" => Ok(Self::PairedTOneSided),
            "sign-flip" => Ok(Self::SignFlipExact),
            other => Err(RfiError::Parse(format!("unknown test kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub kind: TestKind,
    pub alpha: f64,
}

impl TestResult {
    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }
}

fn mean_sd(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn students_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("degrees of freedom are positive")
}

/// One-sided paired t-test: `t = mean / (sd / √n)`, p from the upper tail of
/// Student-t with n−1 degrees of freedom.
///
/// A zero standard deviation gives `p = 1` for a non-positive mean and
/// `p = 0` for a positive one.
pub fn paired_t_one_sided(d: &[f64], alpha: f64) -> Result<TestResult> {
    let n = d.len();
    if n < 2 {
        return Err(RfiError::InsufficientData(format!(
            "paired t-test needs at least 2 differences, got {n}"
        )));
    }
    let (mean, sd) = mean_sd(d);
    let (statistic, p_value) = if sd == 0.0 {
        match mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0),
            _ => (0.0, 1.0),
        }
    } else {
        let t = mean / (sd / (n as f64).sqrt());
        (t, students_t((n - 1) as f64).sf(t).clamp(0.0, 1.0))
    };
    Ok(TestResult {
        statistic,
        p_value,
        n,
        kind: TestKind::PairedTOneSided,
        alpha,
    })
}

/// Sign-flip permutation test of the mean difference.
///
/// All `2ⁿ` sign assignments are enumerated when that count is at most
/// `max_permutations`; otherwise `max_permutations` random assignments are
/// drawn and `p = (1 + hits) / (1 + draws)`.
pub fn sign_flip_exact(
    d: &[f64],
    max_permutations: u64,
    seed: u64,
    alpha: f64,
) -> Result<TestResult> {
    let n = d.len();
    if n == 0 {
        return Err(RfiError::InsufficientData("sign-flip test of no differences".into()));
    }
    let observed: f64 = d.iter().sum();
    let tol = 1e-12 * d.iter().map(|x| x.abs()).sum::<f64>();
    let hit = |s: f64| s >= observed - tol;
    let exhaustive = n < 64 && (1u64 << n) <= max_permutations;
    let p_value = if exhaustive {
        let total = 1u64 << n;
        let mut hits = 0u64;
        for mask in 0..total {
            let s: f64 = d
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                .sum();
            if hit(s) {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    } else {
        let mut rng = StreamSeed::new(seed, 0).rng();
        let mut hits = 0u64;
        for _ in 0..max_permutations {
            let s: f64 = d.iter().map(|&x| if rng.random::<bool>() { -x } else { x }).sum();
            if hit(s) {
                hits += 1;
            }
        }
        (1 + hits) as f64 / (1 + max_permutations) as f64
    };
    Ok(TestResult {
        statistic: observed / n as f64,
        p_value,
        n,
        kind: TestKind::SignFlipExact,
        alpha,
    })
}

/// Symmetric t-interval for the mean difference at confidence `level`.
pub fn confidence_interval(d: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = d.len();
    if n < 2 {
        return Err(RfiError::InsufficientData(format!(
            "confidence interval needs at least 2 differences, got {n}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(RfiError::Parse(format!("confidence level {level} outside (0, 1)")));
    }
    let (mean, sd) = mean_sd(d);
    if sd == 0.0 {
        return Ok((mean, mean));
    }
    let q = students_t((n - 1) as f64).inverse_cdf(0.5 + level / 2.0);
    let half = q * sd / (n as f64).sqrt();
    Ok((mean - half, mean + half))
}
