//! Exact solving machinery: the binary-variable model of the estimator, an
//! enumerative global backend for desk-scale instances, a row-generation
//! loop with optimality certificates, and an LP model exporter for external
//! solvers.

mod enumerate;
mod lp;
mod model;
mod rowgen;

pub use enumerate::{solve_enumerative, EnumerateOptions, GuardLimits};
pub(crate) use enumerate::set_partitions;
pub use lp::{coefficients_from_solution, export_model, import_solution, write_model_string};
pub use model::{binary_certificate, build_mip, BinaryCertificate, MipModel};
pub use rowgen::{row_generation, EnumerativeBackend, ExactBackend, RowGenOptions, RowGenResult};

use crate::coefficients::Coefficients;
use std::collections::BTreeSet;

/// Which predictors carry pairwise fusion constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActivePredictors {
    All,
    Subset(BTreeSet<usize>),
}

impl ActivePredictors {
    pub fn contains(&self, j: usize) -> bool {
        match self {
            ActivePredictors::All => true,
            ActivePredictors::Subset(s) => s.contains(&j),
        }
    }
}

/// Lower/upper bound pair from the relaxation machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub rel_gap: f64,
}

impl GapCertificate {
    pub fn new(lower_bound: f64, upper_bound: f64) -> Self {
        debug_assert!(lower_bound <= upper_bound + 1e-9);
        let rel_gap = (upper_bound - lower_bound).max(0.0) / upper_bound.abs().max(1e-12);
        Self {
            lower_bound,
            upper_bound,
            rel_gap,
        }
    }
}

/// Big-M from a warm start: 1.2 times the largest absolute coefficient,
/// floored at 1.0 so an all-zero warm start still yields a usable bound.
pub fn choose_big_m(warm: &Coefficients) -> f64 {
    let max_abs = warm
        .expanded()
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    (1.2 * max_abs).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_m_rule() {
        let mut coef = Coefficients {
            alpha: 0.0,
            theta_cat: vec![vec![5.0, -1.0, 0.0]],
            theta_cont: vec![],
        };
        assert_eq!(choose_big_m(&coef), 6.0);
        coef.theta_cat[0] = vec![0.0, 0.0, 0.0];
        assert_eq!(choose_big_m(&coef), 1.0);
        coef.theta_cat[0] = vec![0.5, 0.0, 0.0];
        assert_eq!(choose_big_m(&coef), 1.0);
    }

    #[test]
    fn certificate_gap() {
        let c = GapCertificate::new(0.9, 1.0);
        assert!((c.rel_gap - 0.1).abs() < 1e-12);
        let exact = GapCertificate::new(1.0, 1.0);
        assert_eq!(exact.rel_gap, 0.0);
    }
}
