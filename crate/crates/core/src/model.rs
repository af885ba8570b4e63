//! The model and loss abstractions consumed by the importance engine.

use nalgebra::DMatrix;

use crate::data::Table;
use crate::error::{Result, RfiError};

/// A fitted predictor over named features.
///
/// `predict` receives an m×|D| matrix whose columns follow
/// [`feature_order`](PredictiveModel::feature_order) and must be a pure,
/// deterministic function of its rows.
pub trait PredictiveModel: Send + Sync {
    fn feature_order(&self) -> &[String];
    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64>;
}

/// Pointwise loss `L(y, ŷ) ≥ 0`.
pub trait LossFunction: Send + Sync {
    fn pointwise(&self, y: f64, prediction: f64) -> f64;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredError;

impl LossFunction for SquaredError {
    fn pointwise(&self, y: f64, prediction: f64) -> f64 {
        let r = y - prediction;
        r * r
    }

    fn name(&self) -> &str {
        "squared"
    }
}

/// Per-row losses of `model` on `rows`.
pub fn pointwise_losses(
    model: &dyn PredictiveModel,
    rows: &Table,
    target: &str,
    loss: &dyn LossFunction,
) -> Result<Vec<f64>> {
    let x = rows.matrix(model.feature_order())?;
    let y = rows.column(target)?;
    let pred = model.predict(&x);
    Ok(y.iter().zip(&pred).map(|(&y, &p)| loss.pointwise(y, p)).collect())
}

/// Mean loss of `model` over `rows`.
pub fn empirical_risk(
    model: &dyn PredictiveModel,
    rows: &Table,
    target: &str,
    loss: &dyn LossFunction,
) -> Result<f64> {
    if rows.n_rows() == 0 {
        return Err(RfiError::InsufficientData("empirical risk of zero rows".into()));
    }
    let losses = pointwise_losses(model, rows, target, loss)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}
