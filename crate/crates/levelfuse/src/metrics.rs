//! Evaluation quantities: prediction scores, cluster recovery measures, and
//! collapsed-design refits.

use crate::clustering::ClusteringPattern;
use crate::coefficients::Coefficients;
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::linalg::solve_least_squares;
use crate::schema::CategoricalSchema;
use serde::Serialize;

/// Everything a benchmark replication reports about one fitted model.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub r2: Option<f64>,
    pub accuracy: Option<f64>,
    /// Total number of distinct coefficient values, summed over predictors.
    pub total_levels: usize,
    /// Total number of nonzero coefficient clusters.
    pub nonzero_clusters: usize,
    pub purity: Option<f64>,
    pub impurity: Option<usize>,
    pub delta_min: Option<f64>,
    pub wall_time_ms: f64,
}

/// Coefficient of determination on held-out data.
pub fn r_squared(y_test: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_test.len() != y_pred.len() || y_test.len() < 2 {
        return Err(Error::DimensionMismatch(
            "r2 needs two equal-length vectors with n >= 2".into(),
        ));
    }
    let n = y_test.len() as f64;
    let mean = y_test.iter().sum::<f64>() / n;
    let tss: f64 = y_test.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if tss == 0.0 {
        return Err(Error::Undefined("r2 of a constant response".into()));
    }
    let rss: f64 = y_test
        .iter()
        .zip(y_pred)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    Ok(1.0 - rss / tss)
}

/// Classification accuracy of sign predictions against labels in {-1, +1}.
pub fn accuracy(y_test: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_test.len() != y_pred.len() || y_test.is_empty() {
        return Err(Error::DimensionMismatch("accuracy length mismatch".into()));
    }
    let hits = y_test
        .iter()
        .zip(y_pred)
        .filter(|&(&y, &f)| (if f >= 0.0 { 1.0 } else { -1.0 }) == y)
        .count();
    Ok(hits as f64 / y_test.len() as f64)
}

fn norm_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// For each distinct estimated value within a block, the size of its largest
/// sub-group sharing a single true value.
fn majority_overlap(est: &[f64], truth: &[f64]) -> (usize, usize) {
    // Returns (sum of majority counts, block size).
    let mut est_vals: Vec<f64> = est.iter().map(|&v| norm_zero(v)).collect();
    est_vals.sort_by(f64::total_cmp);
    est_vals.dedup();
    let mut majority_sum = 0usize;
    for &a in &est_vals {
        let mut true_vals: Vec<f64> = est
            .iter()
            .zip(truth)
            .filter(|(&e, _)| norm_zero(e) == a)
            .map(|(_, &t)| norm_zero(t))
            .collect();
        true_vals.sort_by(f64::total_cmp);
        let mut best = 0usize;
        let mut run = 0usize;
        let mut prev = f64::NAN;
        for &t in &true_vals {
            if t == prev {
                run += 1;
            } else {
                run = 1;
                prev = t;
            }
            best = best.max(run);
        }
        majority_sum += best;
    }
    (majority_sum, est.len())
}

/// Clustering purity over the predictors whose true coefficients are not
/// identically zero: the fraction of their levels that sit in the majority
/// true-value group of their estimated cluster.
pub fn purity(
    beta_hat: &Coefficients,
    beta_star: &Coefficients,
    schema: &CategoricalSchema,
) -> Result<f64> {
    beta_hat.check_shape(schema, beta_hat.theta_cont.len())?;
    if beta_star.theta_cat.len() != beta_hat.theta_cat.len() {
        return Err(Error::DimensionMismatch(
            "true and estimated coefficients differ in predictor count".into(),
        ));
    }
    let mut nu = 0usize;
    let mut majority = 0usize;
    for j in 0..schema.n_predictors() {
        if beta_star.theta_cat[j].iter().all(|&v| v == 0.0) {
            continue;
        }
        let (m, size) = majority_overlap(&beta_hat.theta_cat[j], &beta_star.theta_cat[j]);
        majority += m;
        nu += size;
    }
    if nu == 0 {
        return Err(Error::Undefined(
            "purity needs at least one predictor with nonzero true coefficients".into(),
        ));
    }
    Ok(majority as f64 / nu as f64)
}

/// Clustering impurity over all predictors: how many levels must leave
/// their estimated clusters to make every cluster pure with respect to the
/// true pattern. Zero exactly when the patterns agree.
pub fn impurity(
    beta_hat: &Coefficients,
    beta_star: &Coefficients,
    schema: &CategoricalSchema,
) -> Result<usize> {
    beta_hat.check_shape(schema, beta_hat.theta_cont.len())?;
    if beta_star.theta_cat.len() != beta_hat.theta_cat.len() {
        return Err(Error::DimensionMismatch(
            "true and estimated coefficients differ in predictor count".into(),
        ));
    }
    let mut total = 0usize;
    for j in 0..schema.n_predictors() {
        let (m, size) = majority_overlap(&beta_hat.theta_cat[j], &beta_star.theta_cat[j]);
        total += size - m;
    }
    Ok(total)
}

/// Smallest gap between distinct coefficient values within any predictor.
/// Errors when every predictor is constant.
pub fn delta_min(beta_star: &Coefficients, schema: &CategoricalSchema) -> Result<f64> {
    beta_star.check_shape(schema, beta_star.theta_cont.len())?;
    let mut best = f64::INFINITY;
    for block in &beta_star.theta_cat {
        let mut vals: Vec<f64> = block.iter().map(|&v| norm_zero(v)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            best = best.min(w[1] - w[0]);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Undefined(
            "minimum separation of an all-constant coefficient vector".into(),
        ))
    }
}

/// Least squares of `target` on the intercept plus one summed dummy column
/// per nonzero cluster of `pattern`. Returns the fitted vector and the mean
/// squared residual: the approximation error of the pattern when `target`
/// is the true mean vector, or the refit objective when it is `y`.
pub fn collapsed_refit(
    ds: &Dataset,
    target: &[f64],
    pattern: &ClusteringPattern,
) -> Result<(Vec<f64>, f64)> {
    if target.len() != ds.n() {
        return Err(Error::DimensionMismatch("target length mismatch".into()));
    }
    if pattern.n_predictors() != ds.q() {
        return Err(Error::DimensionMismatch(
            "pattern does not match the schema".into(),
        ));
    }
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; ds.n()]];
    for cluster in pattern.clusters() {
        if cluster.is_zero {
            continue;
        }
        let mut col = vec![0.0; ds.n()];
        let groups = ds.level_groups(cluster.predictor);
        for &level in &cluster.levels {
            for &i in &groups[level] {
                col[i] = 1.0;
            }
        }
        columns.push(col);
    }
    let ls = solve_least_squares(&columns, target);
    Ok((ls.fitted, ls.rss / ds.n() as f64))
}

/// Snaps nearly-equal values within each predictor to a shared
/// representative and nearly-zero values to exactly zero; useful before
/// computing cluster metrics on externally produced coefficients.
pub fn snap_to_clusters(coef: &Coefficients, tol: f64) -> Coefficients {
    let mut out = coef.clone();
    for block in &mut out.theta_cat {
        let mut order: Vec<usize> = (0..block.len()).collect();
        order.sort_by(|&a, &b| block[a].total_cmp(&block[b]));
        // Greedy chain: values whose neighbours are within tol share a group.
        let mut g_start = 0;
        while g_start < order.len() {
            let mut g_end = g_start;
            while g_end + 1 < order.len()
                && block[order[g_end + 1]] - block[order[g_end]] <= tol
            {
                g_end += 1;
            }
            let members = &order[g_start..=g_end];
            let has_zero = members.iter().any(|&i| block[i].abs() <= tol);
            let rep = if has_zero {
                0.0
            } else {
                members.iter().map(|&i| block[i]).sum::<f64>() / members.len() as f64
            };
            for &i in members {
                block[i] = rep;
            }
            g_start = g_end + 1;
        }
    }
    out
}

/// Full report for a fitted model on held-out data; cluster recovery
/// metrics are included when the true coefficients are known.
pub fn evaluate(
    ds_test: &Dataset,
    coef: &Coefficients,
    beta_star: Option<&Coefficients>,
    wall_time_ms: f64,
) -> Result<EvalReport> {
    let pred = coef.predict(ds_test);
    let (r2, acc) = match ds_test.task() {
        Task::Regression => (Some(r_squared(ds_test.y(), &pred)?), None),
        Task::Binary => (None, Some(accuracy(ds_test.y(), &pred)?)),
    };
    let (purity_v, impurity_v, delta) = match beta_star {
        None => (None, None, None),
        Some(star) => (
            Some(purity(coef, star, ds_test.schema())?),
            Some(impurity(coef, star, ds_test.schema())?),
            delta_min(star, ds_test.schema()).ok(),
        ),
    };
    Ok(EvalReport {
        r2,
        accuracy: acc,
        total_levels: coef.total_levels(),
        nonzero_clusters: coef.nonzero_clusters(),
        purity: purity_v,
        impurity: impurity_v,
        delta_min: delta,
        wall_time_ms,
    })
}
