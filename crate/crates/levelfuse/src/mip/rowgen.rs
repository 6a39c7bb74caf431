use super::enumerate::{solve_enumerative, EnumerateOptions};
use super::{ActivePredictors, GapCertificate};
use crate::coefficients::Coefficients;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::objective::{objective, Loss, PenaltyConfig};
use std::collections::BTreeSet;

/// An exact solver for the relaxed problem: pairwise fusion constraints only
/// for the predictors in `active`, all other constraints intact.
pub trait ExactBackend {
    fn solve_relaxed(
        &self,
        ds: &Dataset,
        pen: &PenaltyConfig,
        active: &ActivePredictors,
    ) -> Result<(Coefficients, f64)>;
}

/// The built-in exhaustive backend.
#[derive(Debug, Clone, Default)]
pub struct EnumerativeBackend {
    pub opts: EnumerateOptions,
}

impl ExactBackend for EnumerativeBackend {
    fn solve_relaxed(
        &self,
        ds: &Dataset,
        pen: &PenaltyConfig,
        active: &ActivePredictors,
    ) -> Result<(Coefficients, f64)> {
        solve_enumerative(ds, pen, active, &self.opts)
    }
}

#[derive(Debug, Clone)]
pub struct RowGenOptions {
    pub max_iterations: usize,
}

impl Default for RowGenOptions {
    fn default() -> Self {
        // The loop typically stops after one or two support repetitions;
        // the budget is a safety valve, not a tuning knob.
        Self { max_iterations: 25 }
    }
}

#[derive(Debug, Clone)]
pub struct RowGenResult {
    pub coef: Coefficients,
    pub certificate: GapCertificate,
    pub iterations: usize,
    /// True when the loop stopped because a support repeated, which
    /// certifies the returned solution is optimal for the full problem.
    pub support_repeated: bool,
}

fn support_predictors(coef: &Coefficients) -> BTreeSet<usize> {
    coef.active_predictors().into_iter().collect()
}

/// Row generation: repeatedly solves the relaxed problem whose fusion
/// constraints cover the union of all supports seen so far, expanding that
/// union with each new solution's support. Stops as soon as a support
/// repeats (the relaxed solution is then optimal for the full problem and
/// the certificate gap is zero); an exhausted budget returns the best
/// feasible solution with a nonzero certified gap.
pub fn row_generation(
    ds: &Dataset,
    pen: &PenaltyConfig,
    warm: &Coefficients,
    backend: &dyn ExactBackend,
    opts: &RowGenOptions,
) -> Result<RowGenResult> {
    warm.check_shape(ds.schema(), ds.n_cont())?;
    let mut supports: Vec<BTreeSet<usize>> = vec![support_predictors(warm)];
    let mut best_coef = warm.clone();
    let mut best_ub = objective(ds, warm, pen, Loss::Squared)?;
    let mut last_lb = f64::NEG_INFINITY;

    for iter in 1..=opts.max_iterations {
        let active: BTreeSet<usize> = supports.iter().flatten().copied().collect();
        let (coef, relaxed_obj) =
            backend.solve_relaxed(ds, pen, &ActivePredictors::Subset(active))?;
        last_lb = relaxed_obj;
        let support = support_predictors(&coef);
        let ub = objective(ds, &coef, pen, Loss::Squared)?;
        if ub < best_ub {
            best_ub = ub;
            best_coef = coef.clone();
        }
        if supports.iter().any(|s| *s == support) {
            // The relaxed charge equals the full charge on this solution, so
            // lower and upper bound coincide up to arithmetic noise.
            return Ok(RowGenResult {
                certificate: GapCertificate::new(relaxed_obj.min(ub), ub),
                coef,
                iterations: iter,
                support_repeated: true,
            });
        }
        supports.push(support);
    }
    Ok(RowGenResult {
        coef: best_coef,
        certificate: GapCertificate::new(last_lb.min(best_ub), best_ub),
        iterations: opts.max_iterations,
        support_repeated: false,
    })
}
