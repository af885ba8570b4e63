//! Ordinary least squares with an intercept, solved by Householder QR.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Table;
use crate::error::{Result, RfiError};
use crate::model::PredictiveModel;

/// `ŷ = intercept + Σ coefficients[i] · x[feature_order[i]]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_order: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(feature_order: Vec<String>, coefficients: Vec<f64>, intercept: f64) -> Result<Self> {
        let m = Self {
            feature_order,
            coefficients,
            intercept,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.feature_order.len() != self.coefficients.len() {
            return Err(RfiError::Schema(format!(
                "{} features but {} coefficients",
                self.feature_order.len(),
                self.coefficients.len()
            )));
        }
        if !self.intercept.is_finite() || self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(RfiError::Schema("non-finite model parameter".into()));
        }
        Ok(())
    }

    pub fn coefficient(&self, feature: &str) -> Option<f64> {
        self.feature_order
            .iter()
            .position(|f| f == feature)
            .map(|i| self.coefficients[i])
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let m: Self = toml::from_str(s).map_err(|e| RfiError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}

impl PredictiveModel for LinearModel {
    fn feature_order(&self) -> &[String] {
        &self.feature_order
    }

    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        assert_eq!(x.ncols(), self.coefficients.len(), "design width mismatch");
        (0..x.nrows())
            .map(|r| {
                let mut acc = self.intercept;
                for (c, b) in self.coefficients.iter().enumerate() {
                    acc += b * x[(r, c)];
                }
                acc
            })
            .collect()
    }
}

/// Relative size of a QR diagonal entry, compared with its column norm,
/// below which the column counts as a linear combination of earlier ones.
const COLLINEAR_TOLERANCE: f64 = 1e-10;

/// Least-squares fit of `targets` on the columns of `x` plus an intercept.
pub fn fit_ols(x: &DMatrix<f64>, targets: &[f64], feature_order: Vec<String>) -> Result<LinearModel> {
    let (n, p) = x.shape();
    if feature_order.len() != p {
        return Err(RfiError::Schema(format!("{p} columns but {} names", feature_order.len())));
    }
    if targets.len() != n {
        return Err(RfiError::Schema(format!("{n} rows but {} targets", targets.len())));
    }
    if n <= p + 1 {
        return Err(RfiError::InsufficientData(format!(
            "{n} rows cannot determine {} parameters",
            p + 1
        )));
    }
    let design = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { x[(r, c - 1)] });
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let qr = design.qr();
    let r = qr.r();
    let column_name = |c: usize| {
        if c == 0 {
            "intercept".to_string()
        } else {
            feature_order[c - 1].clone()
        }
    };
    let collinear: Vec<String> = (0..=p)
        .filter(|&c| !(r[(c, c)].abs() > COLLINEAR_TOLERANCE * norms[c]))
        .map(column_name)
        .collect();
    if !collinear.is_empty() {
        return Err(RfiError::Fit(format!(
            "design matrix is rank deficient; collinear with earlier columns: {}",
            collinear.join(", ")
        )));
    }
    let mut qty = DVector::from_column_slice(targets);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p + 1).into_owned();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| RfiError::Fit("triangular solve failed".into()))?;
    LinearModel::new(feature_order, beta.iter().skip(1).copied().collect(), beta[0])
}

/// Fits `target` on `features` drawn from a table.
pub fn fit_ols_table<S: AsRef<str>>(rows: &Table, features: &[S], target: &str) -> Result<LinearModel> {
    let x = rows.matrix(features)?;
    let y = rows.column(target)?;
    fit_ols(&x, y, features.iter().map(|s| s.as_ref().to_string()).collect())
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 - 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let m = fit_ols(&DMatrix::from_column_slice(20, 1, &xs), &ys, vec!["x".into()]).unwrap();
        assert_relative_eq!(m.coefficients[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.intercept, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_column_is_named() {
        let a: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
        let mut data = a.clone();
        data.extend(&b);
        let x = DMatrix::from_column_slice(10, 2, &data);
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let err = fit_ols(&x, &y, vec!["a".into(), "b".into()]).unwrap_err();
        match err {
            RfiError::Fit(msg) => assert!(msg.contains('b') && !msg.contains("a,")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_feature_collides_with_intercept() {
        let x = DMatrix::from_element(8, 1, 4.0);
        let y = vec![1.0; 8];
        assert!(matches!(fit_ols(&x, &y, vec!["k".into()]), Err(RfiError::Fit(_))));
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(fit_ols(&x, &[0.0, 1.0], vec!["x".into()]).is_err());
    }

    #[test]
    fn persisted_record_round_trips() {
        let m = LinearModel::new(vec!["x1".into(), "x2".into()], vec![1.5, -0.25], 0.1).unwrap();
        let text = m.to_toml_string();
        assert_eq!(LinearModel::from_toml_str(&text).unwrap(), m);
        assert!(LinearModel::from_toml_str("feature_order = ['a']\ncoefficients = []\nintercept = 0.0\n").is_err());
    }

    #[test]
    fn predict_is_affine() {
        let m = LinearModel::new(vec!["a".into(), "b".into()], vec![2.0, -1.0], 0.5).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 3.0]);
        assert_eq!(m.predict(&x), vec![1.5, -2.5]);
    }
}
