use super::ActivePredictors;
use crate::coefficients::Coefficients;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective::PenaltyConfig;

/// Symbolic description of the binary-variable model: continuous variables
/// `beta_1..beta_p` and `alpha`; binaries `z_i` (nonzero indicators) for all
/// `i`, `l_i` (new-cluster indicators) over the categorical range, and pair
/// indicators `zf_j_i_k` for every level pair `k < i` of each predictor in
/// the active set. The quadratic objective data is stored as the Gram matrix
/// of `[X 1]` together with `[X 1]' y` and `y' y`.
#[derive(Debug, Clone)]
pub struct MipModel {
    pub n: usize,
    pub p: usize,
    pub cat_width: usize,
    /// Expanded `[start, end)` column range per predictor.
    pub block_ranges: Vec<(usize, usize)>,
    /// Predictors with pairwise fusion constraints, ascending.
    pub active: Vec<usize>,
    pub big_m: f64,
    pub lambda0: f64,
    pub lambda: f64,
    /// Gram matrix of `[X 1]`, dimension `(p + 1)^2`, row-major.
    pub gram: Vec<f64>,
    /// `[X 1]' y`, length `p + 1`.
    pub xty: Vec<f64>,
    pub yty: f64,
}

impl MipModel {
    pub fn n_beta(&self) -> usize {
        self.p
    }

    pub fn n_z(&self) -> usize {
        self.p
    }

    pub fn n_l(&self) -> usize {
        self.cat_width
    }

    /// Pair-indicator count: `sum over active j of p_j (p_j - 1) / 2`.
    pub fn n_pair(&self) -> usize {
        self.active
            .iter()
            .map(|&j| {
                let w = self.block_ranges[j].1 - self.block_ranges[j].0;
                w * (w - 1) / 2
            })
            .sum()
    }

    pub(crate) fn gram_at(&self, i: usize, j: usize) -> f64 {
        self.gram[i * (self.p + 1) + j]
    }
}

/// Builds the model for a dataset: full pairwise constraints when `active`
/// is `All`, otherwise pair indicators only for the listed predictors (the
/// sparsity and cluster-linking constraints are kept for every predictor).
pub fn build_mip(
    ds: &Dataset,
    pen: &PenaltyConfig,
    big_m: f64,
    active: &ActivePredictors,
) -> Result<MipModel> {
    if !(big_m > 0.0) {
        return Err(Error::InvalidParameter("big-M must be positive".into()));
    }
    ds.require_fit_ready()?;
    let schema = ds.schema();
    let cat_width = schema.total_width();
    let p = cat_width + ds.n_cont();
    let n = ds.n();
    let d = p + 1;

    let mut gram = vec![0.0; d * d];
    let mut xty = vec![0.0; d];
    let mut yty = 0.0;
    let mut cols = Vec::with_capacity(ds.q() + ds.n_cont() + 1);
    for i in 0..n {
        cols.clear();
        for j in 0..ds.q() {
            let code = ds.codes(j)[i] as usize;
            cols.push((schema.offset(j) + code - 1, 1.0));
        }
        for jc in 0..ds.n_cont() {
            let v = ds.cont_col(jc)[i];
            if v != 0.0 {
                cols.push((cat_width + jc, v));
            }
        }
        cols.push((p, 1.0)); // intercept
        let yi = ds.y()[i];
        yty += yi * yi;
        for &(a, va) in &cols {
            xty[a] += va * yi;
            for &(b, vb) in &cols {
                gram[a * d + b] += va * vb;
            }
        }
    }

    let block_ranges = (0..ds.q())
        .map(|j| (schema.offset(j), schema.offset(j) + schema.width(j)))
        .collect();
    let active = match active {
        ActivePredictors::All => (0..ds.q()).collect(),
        ActivePredictors::Subset(s) => s.iter().copied().filter(|&j| j < ds.q()).collect(),
    };
    Ok(MipModel {
        n,
        p,
        cat_width,
        block_ranges,
        active,
        big_m,
        lambda0: pen.lambda0,
        lambda: pen.lambda,
        gram,
        xty,
        yty,
    })
}

/// Feasibility and objective of a coefficient vector under the model's
/// constraint system, with binaries set to their minimal feasible values.
#[derive(Debug, Clone)]
pub struct BinaryCertificate {
    pub feasible: bool,
    pub objective: f64,
    pub n_nonzero: usize,
    pub n_clusters: usize,
}

/// Constructs the minimal binary assignment implied by `coef` and checks it
/// against the model: `z_i = 1(beta_i != 0)`, pair indicators from exact
/// value inequality, and `l_i = 1` exactly when level `i` starts a new
/// cluster within its predictor. Verifies the big-M bounds hold and returns
/// the model objective under that assignment.
pub fn binary_certificate(ds: &Dataset, model: &MipModel, coef: &Coefficients) -> Result<BinaryCertificate> {
    coef.check_shape(ds.schema(), ds.n_cont())?;
    let beta = coef.expanded();
    let mut feasible = true;
    let mut n_nonzero = 0usize;
    for &b in &beta {
        if b != 0.0 {
            n_nonzero += 1;
            if b.abs() > model.big_m {
                feasible = false;
            }
        }
    }
    let mut n_clusters = 0usize;
    for &(start, end) in &model.block_ranges {
        for i in start..end {
            // l_i = 1 iff beta_i differs from every earlier level in the block.
            let new_value = (start..i).all(|k| beta[k] != beta[i]);
            if new_value {
                n_clusters += 1;
            }
        }
        // Pair feasibility under the big-M bound (only binding for zf = 1).
        for i in start..end {
            for k in start..i {
                if beta[k] != beta[i] && (beta[k] - beta[i]).abs() > 2.0 * model.big_m {
                    feasible = false;
                }
            }
        }
    }
    let pred = coef.predict(ds);
    let rss: f64 = ds
        .y()
        .iter()
        .zip(&pred)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    let objective = rss / ds.n() as f64
        + model.lambda0 * n_nonzero as f64
        + model.lambda * n_clusters as f64;
    Ok(BinaryCertificate {
        feasible,
        objective,
        n_nonzero,
        n_clusters,
    })
}
