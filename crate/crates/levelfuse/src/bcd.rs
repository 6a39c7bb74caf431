//! Block coordinate descent for the fused-and-sparse estimator.
//!
//! Each categorical block reduces to a weighted univariate segment problem
//! solved exactly by [`crate::dp`]; continuous coordinates and the intercept
//! have closed-form updates. Logistic fits wrap the same machinery in a
//! quadratic-majorization loop.

use crate::coefficients::{count_distinct, Coefficients};
use crate::dataset::{Dataset, Task};
use crate::dp::dp_seg_distinct_unsorted;
use crate::error::{Error, Result};
use crate::objective::{log1p_exp_neg, objective, Loss, PenaltyConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Default, PartialEq)]
pub enum Init {
    #[default]
    Zero,
    Warm(Coefficients),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrder {
    /// Blocks in schema order, then continuous coordinates, then intercept.
    Fixed,
    /// Block order reshuffled each sweep from the given seed.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct BcdConfig {
    pub max_sweeps: usize,
    /// Stop when the relative objective decrease over a full sweep falls
    /// below this.
    pub rel_tol: f64,
    pub use_active_sets: bool,
    pub init: Init,
    pub fit_intercept: bool,
    /// Standardize continuous columns internally; coefficients are reported
    /// on the original scale either way.
    pub standardize: bool,
    pub block_order: BlockOrder,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            rel_tol: 1e-8,
            use_active_sets: true,
            init: Init::Zero,
            fit_intercept: true,
            standardize: true,
            block_order: BlockOrder::Fixed,
        }
    }
}

impl BcdConfig {
    fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidParameter(
                "rel_tol must be positive and max_sweeps nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coef: Coefficients,
    pub objective: f64,
    pub sweeps: usize,
    /// Objective at initialization followed by the value after each sweep.
    pub objective_trace: Vec<f64>,
    pub wall_time: Duration,
    pub active_set_rounds: usize,
}

/// Group means and sizes of the partial residual for one categorical block.
/// `levels` lists the 0-based level indices that have observations; levels
/// without observations are pinned to zero and excluded.
#[derive(Debug, Clone)]
pub struct BlockReduction {
    pub levels: Vec<usize>,
    pub means: Vec<f64>,
    pub counts: Vec<f64>,
    pub y_partial: Vec<f64>,
}

/// Partial residual and per-level group means for predictor `j0`, holding
/// every other coefficient fixed.
pub fn reduce_block_to_univariate(
    ds: &Dataset,
    coef: &Coefficients,
    j0: usize,
) -> Result<BlockReduction> {
    coef.check_shape(ds.schema(), ds.n_cont())?;
    ds.require_fit_ready()?;
    let pred = coef.predict(ds);
    let theta = &coef.theta_cat[j0];
    let codes = ds.codes(j0);
    let y_partial: Vec<f64> = ds
        .y()
        .iter()
        .enumerate()
        .map(|(i, &y)| y - pred[i] + theta[codes[i] as usize - 1])
        .collect();
    let mut levels = Vec::new();
    let mut means = Vec::new();
    let mut counts = Vec::new();
    for (k, group) in ds.level_groups(j0).iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let sum: f64 = group.iter().map(|&i| y_partial[i]).sum();
        levels.push(k);
        means.push(sum / group.len() as f64);
        counts.push(group.len() as f64);
    }
    Ok(BlockReduction {
        levels,
        means,
        counts,
        y_partial,
    })
}

/// Exact single-coordinate update for a continuous column: `r` is the
/// residual with the column's contribution removed. Returns the new
/// coefficient, zero unless it strictly beats zero.
pub fn update_continuous_coordinate(r: &[f64], col: &[f64], lambda0: f64, n: usize) -> Result<f64> {
    let norm_sq: f64 = col.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidData("zero continuous column".into()));
    }
    let inner: f64 = r.iter().zip(col).map(|(a, b)| a * b).sum();
    let b = inner / norm_sq;
    if norm_sq * b * b > n as f64 * lambda0 {
        Ok(b)
    } else {
        Ok(0.0)
    }
}

/// Logistic loss pieces used by the majorization step: the per-observation
/// gradient terms `g_i` and the working response `eta - 4 g`.
pub fn logistic_majorizer(y: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g: Vec<f64> = y
        .iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            let t = yi * e;
            // -y * sigma(-t) computed stably.
            -yi / (1.0 + t.exp())
        })
        .collect();
    let ytilde: Vec<f64> = eta.iter().zip(&g).map(|(&e, &gi)| e - 4.0 * gi).collect();
    (g, ytilde)
}

/// Total (summed, not averaged) logistic loss at margins `eta`.
pub fn logistic_total_loss(y: &[f64], eta: &[f64]) -> f64 {
    y.iter().zip(eta).map(|(&yi, &e)| log1p_exp_neg(yi * e)).sum()
}

/// Which blocks and continuous coordinates a sweep may update.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ActiveSel {
    blocks: Vec<bool>,
    cont: Vec<bool>,
}

impl ActiveSel {
    fn all(q: usize, n_cont: usize) -> Self {
        Self {
            blocks: vec![true; q],
            cont: vec![true; n_cont],
        }
    }
}

/// Internal fit state over the (possibly standardized) design.
struct FitState<'a> {
    ds: &'a Dataset,
    pen: PenaltyConfig,
    cont_cols: Vec<Vec<f64>>,
    cont_norm_sq: Vec<f64>,
    /// (mean, sd) per continuous column when standardizing.
    cont_scale: Option<Vec<(f64, f64)>>,
    /// Columns with no variation: coefficient pinned to zero.
    cont_degenerate: Vec<bool>,
    theta_cat: Vec<Vec<f64>>,
    theta_cont: Vec<f64>,
    alpha: f64,
    /// `y - X beta - alpha` for squared loss; `X beta + alpha` for logistic.
    work: Vec<f64>,
    loss: Loss,
    fit_intercept: bool,
    order_rng: Option<ChaCha12Rng>,
    block_order: Vec<usize>,
    buf_levels: Vec<usize>,
    buf_means: Vec<f64>,
    buf_counts: Vec<f64>,
}

impl<'a> FitState<'a> {
    fn new(ds: &'a Dataset, pen: &PenaltyConfig, cfg: &BcdConfig, loss: Loss) -> Result<Self> {
        ds.require_fit_ready()?;
        if loss == Loss::Logistic && ds.task() != Task::Binary {
            return Err(Error::InvalidData(
                "logistic loss requires a binary task".into(),
            ));
        }
        let n = ds.n();
        let mut cont_cols: Vec<Vec<f64>> = Vec::with_capacity(ds.n_cont());
        let mut cont_scale = None;
        let mut cont_degenerate = vec![false; ds.n_cont()];
        if cfg.standardize {
            let mut scales = Vec::with_capacity(ds.n_cont());
            for j in 0..ds.n_cont() {
                let col = ds.cont_col(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let sd = var.sqrt();
                if sd == 0.0 {
                    cont_degenerate[j] = true;
                    scales.push((mean, 1.0));
                    cont_cols.push(vec![0.0; n]);
                } else {
                    scales.push((mean, sd));
                    cont_cols.push(col.iter().map(|v| (v - mean) / sd).collect());
                }
            }
            cont_scale = Some(scales);
        } else {
            for j in 0..ds.n_cont() {
                let col = ds.cont_col(j).to_vec();
                if col.iter().all(|&v| v == 0.0) {
                    cont_degenerate[j] = true;
                }
                cont_cols.push(col);
            }
        }
        let cont_norm_sq = cont_cols
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();

        // Warm starts arrive on the original scale and are mapped into the
        // internal parametrization.
        let (theta_cat, mut theta_cont, mut alpha) = match &cfg.init {
            Init::Zero => (
                (0..ds.q())
                    .map(|j| vec![0.0; ds.schema().width(j)])
                    .collect(),
                vec![0.0; ds.n_cont()],
                0.0,
            ),
            Init::Warm(w) => {
                w.check_shape(ds.schema(), ds.n_cont())?;
                (w.theta_cat.clone(), w.theta_cont.clone(), w.alpha)
            }
        };
        if let Some(scales) = &cont_scale {
            for (j, b) in theta_cont.iter_mut().enumerate() {
                let (mean, sd) = scales[j];
                if *b != 0.0 {
                    alpha += *b * mean;
                    *b *= sd;
                }
            }
        }

        let mut state = Self {
            ds,
            pen: *pen,
            cont_cols,
            cont_norm_sq,
            cont_scale,
            cont_degenerate,
            theta_cat,
            theta_cont,
            alpha,
            work: vec![0.0; n],
            loss,
            fit_intercept: cfg.fit_intercept,
            order_rng: match cfg.block_order {
                BlockOrder::Fixed => None,
                BlockOrder::Shuffled { seed } => Some(ChaCha12Rng::seed_from_u64(seed)),
            },
            block_order: (0..ds.q()).collect(),
            buf_levels: Vec::new(),
            buf_means: Vec::new(),
            buf_counts: Vec::new(),
        };
        state.rebuild_work();
        Ok(state)
    }

    /// Linear predictor `X beta + alpha` under the internal columns.
    fn eta(&self) -> Vec<f64> {
        let mut eta = vec![self.alpha; self.ds.n()];
        for j in 0..self.ds.q() {
            let theta = &self.theta_cat[j];
            for (i, &code) in self.ds.codes(j).iter().enumerate() {
                eta[i] += theta[code as usize - 1];
            }
        }
        for j in 0..self.cont_cols.len() {
            let b = self.theta_cont[j];
            if b != 0.0 {
                for (i, &v) in self.cont_cols[j].iter().enumerate() {
                    eta[i] += b * v;
                }
            }
        }
        eta
    }

    fn rebuild_work(&mut self) {
        let eta = self.eta();
        match self.loss {
            Loss::Squared => {
                self.work = self.ds.y().iter().zip(&eta).map(|(&y, &e)| y - e).collect();
            }
            Loss::Logistic => self.work = eta,
        }
    }

    /// Current objective. Support and distinct counts are invariant under
    /// standardization, so this equals the objective of the destandardized
    /// coefficients.
    fn objective(&self) -> f64 {
        let n = self.ds.n() as f64;
        let data = match self.loss {
            Loss::Squared => self.work.iter().map(|r| r * r).sum::<f64>() / n,
            Loss::Logistic => {
                self.ds
                    .y()
                    .iter()
                    .zip(&self.work)
                    .map(|(&y, &e)| log1p_exp_neg(y * e))
                    .sum::<f64>()
                    / n
            }
        };
        let support = self
            .theta_cat
            .iter()
            .flat_map(|b| b.iter())
            .chain(self.theta_cont.iter())
            .filter(|&&v| v != 0.0)
            .count();
        let levels: usize = self.theta_cat.iter().map(|b| count_distinct(b)).sum();
        data + self.pen.lambda0 * support as f64 + self.pen.lambda * levels as f64
    }

    /// Solves one categorical block exactly and applies the update unless it
    /// fails to improve the block's true (distinct-count) objective; the
    /// guard covers blocks with pinned empty levels and the rare case where
    /// the jump-count form overcharges a value repeated in separate runs.
    fn update_block(&mut self, j: usize) -> Result<()> {
        let n = self.ds.n() as f64;
        let groups = self.ds.level_groups(j);
        self.buf_levels.clear();
        self.buf_means.clear();
        self.buf_counts.clear();
        let mut has_empty = false;

        for (k, group) in groups.iter().enumerate() {
            if group.is_empty() {
                has_empty = true;
                continue;
            }
            let sum: f64 = match self.loss {
                // work = y - X beta - alpha; the partial-residual mean for
                // level k is mean(work over group) + theta_old[k].
                Loss::Squared => group.iter().map(|&i| self.work[i]).sum(),
                // Re-majorize at the current iterate: the surrogate partial
                // residual is -4 g + theta_old[level].
                Loss::Logistic => group
                    .iter()
                    .map(|&i| {
                        let yi = self.ds.y()[i];
                        4.0 * yi / (1.0 + (yi * self.work[i]).exp())
                    })
                    .sum(),
            };
            self.buf_levels.push(k);
            self.buf_means
                .push(sum / group.len() as f64 + self.theta_cat[j][k]);
            self.buf_counts.push(group.len() as f64);
        }
        if self.buf_levels.is_empty() {
            return Ok(());
        }
        let (l0t, lt) = match self.loss {
            Loss::Squared => (n * self.pen.lambda0 / 2.0, n * self.pen.lambda / 2.0),
            Loss::Logistic => (4.0 * n * self.pen.lambda0, 4.0 * n * self.pen.lambda),
        };
        // The distinct-count solver charges exactly what the model charges;
        // a block with empty levels starts with its zero cluster pre-paid.
        let sol =
            dp_seg_distinct_unsorted(&self.buf_means, &self.buf_counts, l0t, lt, has_empty)?;

        let old_vals: Vec<f64> = self
            .buf_levels
            .iter()
            .map(|&k| self.theta_cat[j][k])
            .collect();
        let improves = block_value(&sol.beta, &self.buf_means, &self.buf_counts, l0t, lt, has_empty)
            < block_value(&old_vals, &self.buf_means, &self.buf_counts, l0t, lt, has_empty);
        if !improves {
            return Ok(());
        }
        for (pos, &k) in self.buf_levels.iter().enumerate() {
            let old = self.theta_cat[j][k];
            let new = sol.beta[pos];
            if old != new {
                let delta = new - old;
                match self.loss {
                    Loss::Squared => {
                        for &i in &groups[k] {
                            self.work[i] -= delta;
                        }
                    }
                    Loss::Logistic => {
                        for &i in &groups[k] {
                            self.work[i] += delta;
                        }
                    }
                }
                self.theta_cat[j][k] = new;
            }
        }
        Ok(())
    }

    fn update_continuous(&mut self, jc: usize) {
        if self.cont_degenerate[jc] {
            return;
        }
        let n = self.ds.n() as f64;
        let col = &self.cont_cols[jc];
        let norm_sq = self.cont_norm_sq[jc];
        let old = self.theta_cont[jc];
        let (inner, threshold) = match self.loss {
            Loss::Squared => {
                let inner: f64 =
                    self.work.iter().zip(col).map(|(r, x)| r * x).sum::<f64>() + old * norm_sq;
                (inner, n * self.pen.lambda0)
            }
            Loss::Logistic => {
                let mut inner = 0.0;
                for (i, &x) in col.iter().enumerate() {
                    let yi = self.ds.y()[i];
                    inner += (4.0 * yi / (1.0 + (yi * self.work[i]).exp())) * x;
                }
                (inner + old * norm_sq, 8.0 * n * self.pen.lambda0)
            }
        };
        let b = inner / norm_sq;
        let new = if norm_sq * b * b > threshold { b } else { 0.0 };
        if new != old {
            let delta = new - old;
            match self.loss {
                Loss::Squared => {
                    for (i, &x) in col.iter().enumerate() {
                        self.work[i] -= delta * x;
                    }
                }
                Loss::Logistic => {
                    for (i, &x) in col.iter().enumerate() {
                        self.work[i] += delta * x;
                    }
                }
            }
            self.theta_cont[jc] = new;
        }
    }

    fn update_intercept(&mut self) {
        if !self.fit_intercept {
            return;
        }
        let n = self.ds.n() as f64;
        match self.loss {
            Loss::Squared => {
                let delta = self.work.iter().sum::<f64>() / n;
                if delta != 0.0 {
                    self.alpha += delta;
                    for r in &mut self.work {
                        *r -= delta;
                    }
                }
            }
            Loss::Logistic => {
                let mut delta = 0.0;
                for (i, &yi) in self.ds.y().iter().enumerate() {
                    delta += 4.0 * yi / (1.0 + (yi * self.work[i]).exp());
                }
                delta /= n;
                if delta != 0.0 {
                    self.alpha += delta;
                    for e in &mut self.work {
                        *e += delta;
                    }
                }
            }
        }
    }

    /// Shifting a whole block by a constant and absorbing it into the
    /// intercept leaves the loss and the fusion count unchanged, so the
    /// sparsity charge is minimized by placing the most populous value at
    /// zero. Plain block moves cannot reach along this direction, and
    /// without it descent stalls in states whose block shifts hide in the
    /// coefficients instead of the intercept.
    fn recenter_block(&mut self, j: usize) {
        if !self.fit_intercept || self.pen.lambda0 == 0.0 {
            return;
        }
        let block = &self.theta_cat[j];
        let mut sorted: Vec<f64> = block.iter().map(|&v| if v == 0.0 { 0.0 } else { v }).collect();
        sorted.sort_by(f64::total_cmp);
        let mut best_val = 0.0;
        let mut best_count = 0usize;
        let mut i = 0;
        while i < sorted.len() {
            let mut jj = i;
            while jj + 1 < sorted.len() && sorted[jj + 1] == sorted[i] {
                jj += 1;
            }
            let count = jj - i + 1;
            let val = sorted[i];
            // Strictly larger counts win; ties keep zero if present.
            if count > best_count || (count == best_count && val == 0.0) {
                best_count = count;
                best_val = val;
            }
            i = jj + 1;
        }
        if best_val != 0.0 {
            for v in self.theta_cat[j].iter_mut() {
                *v -= best_val;
                if *v == 0.0 {
                    *v = 0.0; // normalize -0.0
                }
            }
            self.alpha += best_val;
            // Predictions are unchanged: every observation of the block
            // carries exactly one indicator, and alpha absorbs the shift.
        }
    }

    fn sweep(&mut self, active: &ActiveSel) -> Result<()> {
        if let Some(rng) = &mut self.order_rng {
            let mut order = std::mem::take(&mut self.block_order);
            order.shuffle(rng);
            self.block_order = order;
        }
        for idx in 0..self.block_order.len() {
            let j = self.block_order[idx];
            if active.blocks[j] {
                self.update_block(j)?;
                self.recenter_block(j);
            }
        }
        for jc in 0..self.cont_cols.len() {
            if active.cont[jc] {
                self.update_continuous(jc);
            }
        }
        self.update_intercept();
        Ok(())
    }

    fn nonzero_selection(&self) -> ActiveSel {
        ActiveSel {
            blocks: self
                .theta_cat
                .iter()
                .map(|b| b.iter().any(|&v| v != 0.0))
                .collect(),
            cont: self.theta_cont.iter().map(|&v| v != 0.0).collect(),
        }
    }

    /// Coefficients on the original data scale.
    fn coefficients(&self) -> Coefficients {
        let mut alpha = self.alpha;
        let theta_cont = match &self.cont_scale {
            None => self.theta_cont.clone(),
            Some(scales) => self
                .theta_cont
                .iter()
                .zip(scales)
                .map(|(&b, &(mean, sd))| {
                    if b == 0.0 {
                        0.0
                    } else {
                        alpha -= b * mean / sd;
                        b / sd
                    }
                })
                .collect(),
        };
        Coefficients {
            alpha,
            theta_cat: self.theta_cat.clone(),
            theta_cont,
        }
    }
}

/// Block objective in univariate solver units: half the grouped quadratic
/// loss, `l0t` per nonzero value, and `lt` per distinct value, including the
/// pinned zero value when the block has empty levels.
fn block_value(
    vals: &[f64],
    means: &[f64],
    counts: &[f64],
    l0t: f64,
    lt: f64,
    has_empty: bool,
) -> f64 {
    let loss: f64 = vals
        .iter()
        .zip(means)
        .zip(counts)
        .map(|((&v, &m), &c)| 0.5 * c * (v - m) * (v - m))
        .sum();
    let nonzero = vals.iter().filter(|&&v| v != 0.0).count();
    let mut distinct = count_distinct(vals);
    if has_empty && !vals.iter().any(|&v| v == 0.0) {
        distinct += 1;
    }
    loss + l0t * nonzero as f64 + lt * distinct as f64
}

fn run_plain(state: &mut FitState, cfg: &BcdConfig) -> Result<(usize, Vec<f64>)> {
    let all = ActiveSel::all(state.ds.q(), state.cont_cols.len());
    let mut trace = vec![state.objective()];
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        state.sweep(&all)?;
        sweeps += 1;
        let obj = state.objective();
        let prev = *trace.last().unwrap();
        trace.push(obj);
        let rel = if prev > 0.0 { (prev - obj) / prev } else { 0.0 };
        if rel < cfg.rel_tol || obj == 0.0 {
            break;
        }
    }
    Ok((sweeps, trace))
}

/// Plain block coordinate descent: cycles categorical blocks, continuous
/// coordinates, and the intercept until the per-sweep relative objective
/// decrease falls below `rel_tol`.
pub fn fit_bcd(ds: &Dataset, pen: &PenaltyConfig, cfg: &BcdConfig) -> Result<FitResult> {
    cfg.check()?;
    let start = Instant::now();
    let mut state = FitState::new(ds, pen, cfg, Loss::Squared)?;
    let (sweeps, trace) = run_plain(&mut state, cfg)?;
    finish(ds, pen, state, sweeps, trace, 0, start, Loss::Squared)
}

/// Active-set variant: converges on a working set of blocks and continuous
/// coordinates, expands the set with one unrestricted sweep, and repeats
/// until the set stabilizes. Falls back to [`fit_bcd`] when `lambda0 == 0`
/// since no sparsity is expected.
pub fn fit_bcd_active_set(ds: &Dataset, pen: &PenaltyConfig, cfg: &BcdConfig) -> Result<FitResult> {
    cfg.check()?;
    if pen.lambda0 == 0.0 {
        return fit_bcd(ds, pen, cfg);
    }
    let start = Instant::now();
    let mut state = FitState::new(ds, pen, cfg, Loss::Squared)?;
    let all = ActiveSel::all(ds.q(), state.cont_cols.len());
    let mut trace = vec![state.objective()];
    let mut sweeps = 0usize;
    let mut rounds = 0usize;

    // Initial working set from one unrestricted sweep.
    state.sweep(&all)?;
    sweeps += 1;
    trace.push(state.objective());
    let mut active = state.nonzero_selection();

    while sweeps < cfg.max_sweeps {
        // Restricted convergence on the working set.
        while sweeps < cfg.max_sweeps {
            state.sweep(&active)?;
            sweeps += 1;
            let obj = state.objective();
            let prev = *trace.last().unwrap();
            trace.push(obj);
            let rel = if prev > 0.0 { (prev - obj) / prev } else { 0.0 };
            if rel < cfg.rel_tol || obj == 0.0 {
                break;
            }
        }
        // Expansion sweep over everything.
        state.sweep(&all)?;
        sweeps += 1;
        let obj = state.objective();
        let prev = *trace.last().unwrap();
        trace.push(obj);
        rounds += 1;
        let grown = state.nonzero_selection();
        let mut expanded = active.clone();
        for (a, g) in expanded.blocks.iter_mut().zip(&grown.blocks) {
            *a |= g;
        }
        for (a, g) in expanded.cont.iter_mut().zip(&grown.cont) {
            *a |= g;
        }
        let rel = if prev > 0.0 { (prev - obj) / prev } else { 0.0 };
        if expanded == active && (rel < cfg.rel_tol || obj == 0.0) {
            break;
        }
        active = expanded;
    }
    finish(ds, pen, state, sweeps, trace, rounds, start, Loss::Squared)
}

/// Dispatches to the active-set fit when enabled and `lambda0 > 0`.
pub fn fit(ds: &Dataset, pen: &PenaltyConfig, cfg: &BcdConfig) -> Result<FitResult> {
    if cfg.use_active_sets && pen.lambda0 > 0.0 {
        fit_bcd_active_set(ds, pen, cfg)
    } else {
        fit_bcd(ds, pen, cfg)
    }
}

/// Logistic fit: cyclically minimizes the quadratic majorizer of the
/// logistic loss over blocks, continuous coordinates, and the intercept,
/// re-majorizing at the current iterate before each update. The true
/// logistic objective is nonincreasing across updates.
pub fn fit_logistic_bcd(ds: &Dataset, pen: &PenaltyConfig, cfg: &BcdConfig) -> Result<FitResult> {
    cfg.check()?;
    let start = Instant::now();
    let mut state = FitState::new(ds, pen, cfg, Loss::Logistic)?;
    let (sweeps, trace) = run_plain(&mut state, cfg)?;
    finish(ds, pen, state, sweeps, trace, 0, start, Loss::Logistic)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ds: &Dataset,
    pen: &PenaltyConfig,
    state: FitState,
    sweeps: usize,
    trace: Vec<f64>,
    rounds: usize,
    start: Instant,
    loss: Loss,
) -> Result<FitResult> {
    let coef = state.coefficients();
    let obj = objective(ds, &coef, pen, loss)?;
    Ok(FitResult {
        coef,
        objective: obj,
        sweeps,
        objective_trace: trace,
        wall_time: start.elapsed(),
        active_set_rounds: rounds,
    })
}

/// Improvement available from one full unrestricted sweep starting at
/// `coef`; a converged solution reports a value near zero.
pub fn fixed_point_gap(
    ds: &Dataset,
    pen: &PenaltyConfig,
    coef: &Coefficients,
    loss: Loss,
    cfg: &BcdConfig,
) -> Result<f64> {
    let warm = BcdConfig {
        init: Init::Warm(coef.clone()),
        ..cfg.clone()
    };
    let mut state = FitState::new(ds, pen, &warm, loss)?;
    let before = state.objective();
    let all = ActiveSel::all(ds.q(), state.cont_cols.len());
    state.sweep(&all)?;
    Ok(before - state.objective())
}
