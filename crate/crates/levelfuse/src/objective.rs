use crate::coefficients::Coefficients;
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Penalty weights: `lambda0` per nonzero coefficient, `lambda` per distinct
/// coefficient value within each predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda0: f64,
    pub lambda: f64,
}

impl PenaltyConfig {
    pub fn new(lambda0: f64, lambda: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda.is_finite() && lambda0 >= 0.0 && lambda >= 0.0) {
            return Err(Error::InvalidParameter(
                "penalty weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self { lambda0, lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

/// Numerically stable `log(1 + exp(-t))`.
pub(crate) fn log1p_exp_neg(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// Mean data loss of `coef` on `ds`.
pub fn mean_loss(ds: &Dataset, coef: &Coefficients, loss: Loss) -> Result<f64> {
    coef.check_shape(ds.schema(), ds.n_cont())?;
    let pred = coef.predict(ds);
    let n = ds.n() as f64;
    match loss {
        Loss::Squared => Ok(ds
            .y()
            .iter()
            .zip(&pred)
            .map(|(&y, &f)| (y - f) * (y - f))
            .sum::<f64>()
            / n),
        Loss::Logistic => {
            if ds.task() != Task::Binary {
                return Err(Error::InvalidData(
                    "logistic loss requires a binary task".into(),
                ));
            }
            Ok(ds
                .y()
                .iter()
                .zip(&pred)
                .map(|(&y, &f)| log1p_exp_neg(y * f))
                .sum::<f64>()
                / n)
        }
    }
}

/// Penalty part of the objective: `lambda0 * ||beta||_0` plus `lambda` times
/// the total number of distinct values per predictor (zero counts as a value).
pub fn penalty_value(coef: &Coefficients, pen: &PenaltyConfig) -> f64 {
    pen.lambda0 * coef.support_size() as f64 + pen.lambda * coef.total_levels() as f64
}

/// Full objective: mean loss plus both penalties.
pub fn objective(ds: &Dataset, coef: &Coefficients, pen: &PenaltyConfig, loss: Loss) -> Result<f64> {
    Ok(mean_loss(ds, coef, loss)? + penalty_value(coef, pen))
}
