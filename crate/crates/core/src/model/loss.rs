use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quantile levels, strictly increasing inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileLevels(Vec<f64>);

impl QuantileLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Invalid("at least one quantile level is required".into()));
        }
        if let Some(&p) = levels.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidQuantile(p));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("quantile levels {levels:?} must be strictly increasing")));
        }
        Ok(Self(levels))
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the level closest to the median.
    pub fn central_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if (p - 0.5).abs() < (self.0[best] - 0.5).abs() {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for QuantileLevels {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QuantileLevels> for Vec<f64> {
    fn from(q: QuantileLevels) -> Self {
        q.0
    }
}

/// Training objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Squared,
    /// Pinball loss summed over the model's quantile levels.
    Quantile,
}

/// Sum of squared residuals. No ½ factor.
pub fn loss_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("{} predictions vs {} actuals", pred.len(), truth.len())));
    }
    Ok(pred.iter().zip(truth).map(|(p, y)| (p - y) * (p - y)).sum())
}

/// Pinball loss of one forecast at level `p`.
pub fn pinball(pred: f64, truth: f64, p: f64) -> f64 {
    (1.0 - p) * (pred - truth).max(0.0) + p * (truth - pred).max(0.0)
}

/// Derivative of [`pinball`] with respect to the prediction; 0 at ties.
pub fn pinball_grad(pred: f64, truth: f64, p: f64) -> f64 {
    if pred > truth {
        1.0 - p
    } else if pred < truth {
        -p
    } else {
        0.0
    }
}

/// Total pinball loss for a row-major `h × |Q|` prediction matrix.
pub fn loss_quantile(pred_q: &[f64], truth: &[f64], levels: &[f64]) -> Result<f64> {
    if let Some(&p) = levels.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidQuantile(p));
    }
    if levels.is_empty() || pred_q.len() != truth.len() * levels.len() {
        return Err(Error::Shape(format!(
            "{} quantile predictions for {} actuals and {} levels",
            pred_q.len(),
            truth.len(),
            levels.len()
        )));
    }
    Ok(pred_q
        .chunks_exact(levels.len())
        .zip(truth)
        .map(|(row, &y)| row.iter().zip(levels).map(|(&yhat, &p)| pinball(yhat, y, p)).sum::<f64>())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn squared_hand_values() {
        assert_eq!(loss_squared(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_squared(&[3.0, 1.0], &[2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(loss_squared(&[0.0], &[5.0]).unwrap(), 25.0);
        assert!(matches!(loss_squared(&[0.0], &[]), Err(Error::Shape(_))));
    }

    #[test]
    fn pinball_hand_values() {
        assert!((loss_quantile(&[2.0], &[1.0], &[0.9]).unwrap() - 0.1).abs() < 1e-15);
        assert!((loss_quantile(&[1.0], &[2.0], &[0.9]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(loss_quantile(&[3.0, 3.0], &[3.0], &[0.2, 0.7]).unwrap(), 0.0);
        assert_eq!(loss_quantile(&[1.0], &[1.0], &[1.0]), Err(Error::InvalidQuantile(1.0)));
        assert!(matches!(loss_quantile(&[1.0], &[1.0, 2.0], &[0.5]), Err(Error::Shape(_))));
    }

    #[test]
    fn quantile_levels_validation() {
        assert!(QuantileLevels::new(vec![0.1, 0.5, 0.9]).is_ok());
        assert!(QuantileLevels::new(vec![0.5, 0.1]).is_err());
        assert!(QuantileLevels::new(vec![0.0]).is_err());
        assert!(QuantileLevels::new(vec![]).is_err());
        assert_eq!(QuantileLevels::new(vec![0.1, 0.45, 0.9]).unwrap().central_index(), 1);
    }

    proptest! {
        #[test]
        fn median_pinball_is_half_absolute_error(
            pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..30)
        ) {
            let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let lq = loss_quantile(&pred, &truth, &[0.5]).unwrap();
            let abs: f64 = pred.iter().zip(&truth).map(|(a, b)| (a - b).abs()).sum();
            prop_assert!((lq - 0.5 * abs).abs() <= 1e-12 * (1.0 + abs));
        }
    }
}
