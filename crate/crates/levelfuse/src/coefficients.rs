use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schema::CategoricalSchema;

/// Model coefficients in structured form: an intercept, one value per
/// categorical level, and one value per continuous column. The expanded view
/// concatenates the categorical blocks followed by the continuous block.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub alpha: f64,
    pub theta_cat: Vec<Vec<f64>>,
    pub theta_cont: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(schema: &CategoricalSchema, n_cont: usize) -> Self {
        Self {
            alpha: 0.0,
            theta_cat: (0..schema.n_predictors())
                .map(|j| vec![0.0; schema.width(j)])
                .collect(),
            theta_cont: vec![0.0; n_cont],
        }
    }

    pub fn zeros_like(ds: &Dataset) -> Self {
        Self::zeros(ds.schema(), ds.n_cont())
    }

    pub fn matches(&self, schema: &CategoricalSchema, n_cont: usize) -> bool {
        self.theta_cat.len() == schema.n_predictors()
            && self
                .theta_cat
                .iter()
                .enumerate()
                .all(|(j, t)| t.len() == schema.width(j))
            && self.theta_cont.len() == n_cont
    }

    pub fn check_shape(&self, schema: &CategoricalSchema, n_cont: usize) -> Result<()> {
        if self.matches(schema, n_cont) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                "coefficients do not match the schema".into(),
            ))
        }
    }

    /// Expanded view: categorical blocks in predictor order, then continuous.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.p());
        for block in &self.theta_cat {
            out.extend_from_slice(block);
        }
        out.extend_from_slice(&self.theta_cont);
        out
    }

    /// Inverse of [`expanded`](Self::expanded).
    pub fn from_expanded(
        schema: &CategoricalSchema,
        n_cont: usize,
        alpha: f64,
        beta: &[f64],
    ) -> Result<Self> {
        if beta.len() != schema.total_width() + n_cont {
            return Err(Error::DimensionMismatch(format!(
                "expanded vector has length {}, expected {}",
                beta.len(),
                schema.total_width() + n_cont
            )));
        }
        let theta_cat = (0..schema.n_predictors())
            .map(|j| beta[schema.offset(j)..schema.offset(j) + schema.width(j)].to_vec())
            .collect();
        Ok(Self {
            alpha,
            theta_cat,
            theta_cont: beta[schema.total_width()..].to_vec(),
        })
    }

    pub fn p(&self) -> usize {
        self.theta_cat.iter().map(Vec::len).sum::<usize>() + self.theta_cont.len()
    }

    /// Number of nonzero expanded coefficients (the intercept is not counted).
    pub fn support_size(&self) -> usize {
        self.theta_cat
            .iter()
            .flat_map(|b| b.iter())
            .chain(self.theta_cont.iter())
            .filter(|&&v| v != 0.0)
            .count()
    }

    /// Distinct coefficient values of predictor `j`, zero included. Exact
    /// value equality; solvers produce equal values structurally.
    pub fn distinct_count(&self, j: usize) -> usize {
        count_distinct(&self.theta_cat[j])
    }

    /// Sum over predictors of the distinct value counts (the fusion term).
    pub fn total_levels(&self) -> usize {
        (0..self.theta_cat.len()).map(|j| self.distinct_count(j)).sum()
    }

    /// Total number of nonzero coefficient clusters across predictors.
    pub fn nonzero_clusters(&self) -> usize {
        self.theta_cat
            .iter()
            .map(|b| {
                let d = count_distinct(b);
                if b.iter().any(|&v| v == 0.0) {
                    d - 1
                } else {
                    d
                }
            })
            .sum()
    }

    /// Predictors with at least one nonzero coefficient (0-based indices).
    pub fn active_predictors(&self) -> Vec<usize> {
        self.theta_cat
            .iter()
            .enumerate()
            .filter(|(_, b)| b.iter().any(|&v| v != 0.0))
            .map(|(j, _)| j)
            .collect()
    }

    /// Fitted values on a dataset. Levels unseen in the schema (code 0)
    /// contribute nothing, so such rows fall back to the intercept plus any
    /// continuous effects.
    pub fn predict(&self, ds: &Dataset) -> Vec<f64> {
        let mut out = vec![self.alpha; ds.n()];
        for j in 0..ds.q() {
            let theta = &self.theta_cat[j];
            for (i, &code) in ds.codes(j).iter().enumerate() {
                if code > 0 {
                    out[i] += theta[code as usize - 1];
                }
            }
        }
        for j in 0..ds.n_cont() {
            let b = self.theta_cont[j];
            if b != 0.0 {
                for (i, &v) in ds.cont_col(j).iter().enumerate() {
                    out[i] += b * v;
                }
            }
        }
        out
    }
}

/// Distinct values of a slice under exact equality, in first-appearance
/// order. `-0.0` is folded into `0.0`.
pub(crate) fn distinct_values(values: &[f64]) -> Vec<f64> {
    let mut seen: Vec<f64> = Vec::new();
    for &v in values {
        let v = if v == 0.0 { 0.0 } else { v };
        if !seen.iter().any(|&s| s == v) {
            seen.push(v);
        }
    }
    seen
}

/// Number of distinct values under exact equality (`-0.0 == 0.0`).
pub(crate) fn count_distinct(values: &[f64]) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut count = 1;
    for w in sorted.windows(2) {
        // `==` treats -0.0 and 0.0 as equal even though total_cmp separates them.
        if w[0] != w[1] {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expanded_round_trip() {
        let schema = CategoricalSchema::with_widths(&[2, 3]).unwrap();
        let coef = Coefficients {
            alpha: 0.5,
            theta_cat: vec![vec![1.0, -1.0], vec![0.0, 2.0, 2.0]],
            theta_cont: vec![3.0],
        };
        let beta = coef.expanded();
        assert_eq!(beta, vec![1.0, -1.0, 0.0, 2.0, 2.0, 3.0]);
        let back = Coefficients::from_expanded(&schema, 1, 0.5, &beta).unwrap();
        assert_eq!(back, coef);
    }

    #[test]
    fn support_and_distinct_counts() {
        let coef = Coefficients {
            alpha: 0.0,
            theta_cat: vec![vec![2.0, 2.0, 0.0, 0.0, 0.0]],
            theta_cont: vec![0.0, 1.0],
        };
        assert_eq!(coef.support_size(), 3);
        assert_eq!(coef.distinct_count(0), 2);
        assert_eq!(coef.total_levels(), 2);
        assert_eq!(coef.nonzero_clusters(), 1);
    }

    #[test]
    fn negative_zero_is_zero() {
        assert_eq!(distinct_values(&[0.0, -0.0]).len(), 1);
    }
}
