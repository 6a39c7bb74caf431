use super::ActivePredictors;
use crate::coefficients::Coefficients;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::solve_least_squares;
use crate::objective::PenaltyConfig;
use crate::parallel;

/// Size limits for the enumerative backend.
#[derive(Debug, Clone, Copy)]
pub struct GuardLimits {
    pub max_levels_per_predictor: usize,
    pub max_continuous: usize,
    pub max_patterns: u128,
}

impl Default for GuardLimits {
    fn default() -> Self {
        Self {
            max_levels_per_predictor: 6,
            max_continuous: 3,
            max_patterns: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    pub fit_intercept: bool,
    pub guard: GuardLimits,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            fit_intercept: true,
            guard: GuardLimits::default(),
        }
    }
}

/// All set partitions of `{0..n-1}` as restricted growth strings:
/// `a[i]` is the block id of element `i`, with `a[0] = 0` and
/// `a[i] <= max(a[0..i]) + 1`.
pub(crate) fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    fn rec(a: &mut Vec<usize>, i: usize, maxb: usize, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for b in 0..=maxb + 1 {
            a[i] = b;
            rec(a, i + 1, maxb.max(b), out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(&mut a, 1, 0, &mut out);
    out
}

/// One candidate structure for a predictor: which cluster each level belongs
/// to, the number of clusters, which cluster (if any) is pinned to zero, and
/// the penalty this structure is charged.
#[derive(Debug, Clone)]
struct PredVariant {
    assignment: Vec<usize>,
    n_clusters: usize,
    zero_cluster: Option<usize>,
    /// Number of levels carrying a nonzero coefficient.
    nonzero_levels: usize,
    /// Fusion units charged: the cluster count for constrained predictors,
    /// exactly 1 for relaxed ones.
    fusion_units: usize,
}

fn active_variants(width: usize) -> Vec<PredVariant> {
    let mut out = Vec::new();
    for assignment in set_partitions(width) {
        let n_clusters = assignment.iter().copied().max().map_or(0, |m| m + 1);
        let sizes: Vec<usize> = (0..n_clusters)
            .map(|c| assignment.iter().filter(|&&a| a == c).count())
            .collect();
        let total: usize = sizes.iter().sum();
        for zero in std::iter::once(None).chain((0..n_clusters).map(Some)) {
            let nonzero_levels = match zero {
                None => total,
                Some(c) => total - sizes[c],
            };
            out.push(PredVariant {
                assignment: assignment.clone(),
                n_clusters,
                zero_cluster: zero,
                nonzero_levels,
                fusion_units: n_clusters,
            });
        }
    }
    out
}

/// Relaxed predictors carry no pairwise constraints: every level is free to
/// take its own value (or zero), and exactly one fusion unit is charged.
fn relaxed_variants(width: usize) -> Vec<PredVariant> {
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << width) {
        let assignment: Vec<usize> = (0..width).collect();
        let free: Vec<bool> = (0..width).map(|k| (mask >> k) & 1 == 1).collect();
        // Encode "zero" levels by pointing them at a shared sentinel cluster.
        let mut a = assignment;
        let mut next = 0usize;
        let mut ids = vec![usize::MAX; width];
        for k in 0..width {
            if free[k] {
                ids[k] = next;
                next += 1;
            }
        }
        let zero_cluster = if free.iter().all(|&f| f) {
            None
        } else {
            for id in ids.iter_mut() {
                if *id == usize::MAX {
                    *id = next;
                }
            }
            Some(next)
        };
        for (k, id) in ids.iter().enumerate() {
            a[k] = if *id == usize::MAX { k } else { *id };
        }
        let n_clusters = next + usize::from(zero_cluster.is_some());
        out.push(PredVariant {
            assignment: a,
            n_clusters,
            zero_cluster,
            nonzero_levels: free.iter().filter(|&&f| f).count(),
            fusion_units: 1,
        });
    }
    out
}

struct PatternSpace {
    per_predictor: Vec<Vec<PredVariant>>,
    cont_masks: u64,
}

impl PatternSpace {
    fn decode(&self, mut idx: u128) -> (Vec<usize>, u64) {
        let mut choice = Vec::with_capacity(self.per_predictor.len());
        for variants in &self.per_predictor {
            let m = variants.len() as u128;
            choice.push((idx % m) as usize);
            idx /= m;
        }
        let cont_mask = (idx % self.cont_masks as u128) as u64;
        (choice, cont_mask)
    }
}

/// Exhaustive exact solver: enumerates, per constrained predictor, all set
/// partitions of its levels with an optional zero cluster; per relaxed
/// predictor, all free/zero level subsets; and all continuous supports.
/// Each joint pattern is scored by collapsed least squares plus the charged
/// penalties, and the global minimum is returned. Patterns are scored in
/// parallel.
pub fn solve_enumerative(
    ds: &Dataset,
    pen: &PenaltyConfig,
    active: &ActivePredictors,
    opts: &EnumerateOptions,
) -> Result<(Coefficients, f64)> {
    ds.require_fit_ready()?;
    let schema = ds.schema();
    let q = ds.q();
    let n = ds.n();
    let guard = &opts.guard;

    for j in 0..q {
        if schema.width(j) > guard.max_levels_per_predictor {
            return Err(Error::GuardExceeded(format!(
                "predictor {:?} has {} levels, enumerative limit is {}",
                schema.predictor(j).name,
                schema.width(j),
                guard.max_levels_per_predictor
            )));
        }
    }
    if ds.n_cont() > guard.max_continuous {
        return Err(Error::GuardExceeded(format!(
            "{} continuous columns, enumerative limit is {}",
            ds.n_cont(),
            guard.max_continuous
        )));
    }

    let per_predictor: Vec<Vec<PredVariant>> = (0..q)
        .map(|j| {
            if active.contains(j) {
                active_variants(schema.width(j))
            } else {
                relaxed_variants(schema.width(j))
            }
        })
        .collect();
    let cont_masks = 1u64 << ds.n_cont();
    let mut total: u128 = cont_masks as u128;
    for v in &per_predictor {
        total = total.saturating_mul(v.len() as u128);
    }
    if total > guard.max_patterns {
        return Err(Error::GuardExceeded(format!(
            "{total} joint patterns exceed the enumerative limit {}",
            guard.max_patterns
        )));
    }
    let space = PatternSpace {
        per_predictor,
        cont_masks,
    };

    let score = |idx: usize| -> f64 {
        let (choice, cont_mask) = space.decode(idx as u128);
        let (rss, _, _) = fit_pattern(ds, &space, &choice, cont_mask, opts.fit_intercept);
        let mut penalty = 0.0;
        for (j, &c) in choice.iter().enumerate() {
            let v = &space.per_predictor[j][c];
            penalty += pen.lambda0 * v.nonzero_levels as f64 + pen.lambda * v.fusion_units as f64;
        }
        penalty += pen.lambda0 * cont_mask.count_ones() as f64;
        rss / n as f64 + penalty
    };
    let (best_idx, best_obj) = parallel::argmin_indexed(total as usize, score)
        .expect("at least one pattern");

    // Rebuild the winning pattern's solution.
    let (choice, cont_mask) = space.decode(best_idx as u128);
    let (_, coef, _) = fit_pattern(ds, &space, &choice, cont_mask, opts.fit_intercept);
    Ok((coef, best_obj))
}

/// Collapsed least squares for one joint pattern. Returns the residual sum
/// of squares, the reconstructed coefficients, and the number of columns.
fn fit_pattern(
    ds: &Dataset,
    space: &PatternSpace,
    choice: &[usize],
    cont_mask: u64,
    fit_intercept: bool,
) -> (f64, Coefficients, usize) {
    let n = ds.n();
    let schema = ds.schema();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    // (predictor, cluster id) per column, for scattering the solution back.
    let mut col_meta: Vec<(usize, usize)> = Vec::new();

    for (j, &c) in choice.iter().enumerate() {
        let variant = &space.per_predictor[j][c];
        for cluster in 0..variant.n_clusters {
            if variant.zero_cluster == Some(cluster) {
                continue;
            }
            if !variant.assignment.iter().any(|&a| a == cluster) {
                continue;
            }
            let mut col = vec![0.0; n];
            for (k, group) in ds.level_groups(j).iter().enumerate() {
                if variant.assignment[k] == cluster {
                    for &i in group {
                        col[i] = 1.0;
                    }
                }
            }
            columns.push(col);
            col_meta.push((j, cluster));
        }
    }
    let cont_base = columns.len();
    let mut cont_ids = Vec::new();
    for jc in 0..ds.n_cont() {
        if (cont_mask >> jc) & 1 == 1 {
            columns.push(ds.cont_col(jc).to_vec());
            cont_ids.push(jc);
        }
    }
    let intercept_col = if fit_intercept {
        columns.push(vec![1.0; n]);
        Some(columns.len() - 1)
    } else {
        None
    };

    let ls = solve_least_squares(&columns, ds.y());

    let mut coef = Coefficients::zeros(schema, ds.n_cont());
    for (pos, &(j, cluster)) in col_meta.iter().enumerate() {
        let value = ls.coef[pos];
        let variant = &space.per_predictor[j][choice[j]];
        for (k, &a) in variant.assignment.iter().enumerate() {
            if a == cluster {
                coef.theta_cat[j][k] = value;
            }
        }
    }
    for (off, &jc) in cont_ids.iter().enumerate() {
        coef.theta_cont[jc] = ls.coef[cont_base + off];
    }
    if let Some(ic) = intercept_col {
        coef.alpha = ls.coef[ic];
    }
    (ls.rss, coef, columns.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Task;
    use crate::dp::{dp_seg_pen_l0_unsorted, segment_objective, WeightedSequence};
    use crate::objective::{objective, Loss};
    use crate::schema::CategoricalSchema;

    fn toy(widths: &[usize], codes: Vec<Vec<u32>>, y: Vec<f64>) -> Dataset {
        let schema = CategoricalSchema::with_widths(widths).unwrap();
        Dataset::new(schema, codes, vec![], vec![], y, Task::Regression).unwrap()
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(2).len(), 2);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(5).len(), 52);
    }

    #[test]
    fn unpenalized_matches_least_squares() {
        let ds = toy(&[2], vec![vec![1, 1, 2, 2]], vec![1.0, 3.0, -1.0, -3.0]);
        let pen = PenaltyConfig::new(0.0, 0.0).unwrap();
        let (coef, obj) =
            solve_enumerative(&ds, &pen, &ActivePredictors::All, &EnumerateOptions::default())
                .unwrap();
        // Group means 2 and -2 (up to the intercept split).
        let pred = coef.predict(&ds);
        assert!((pred[0] - 2.0).abs() < 1e-9);
        assert!((pred[2] + 2.0).abs() < 1e-9);
        assert!((obj - 1.0).abs() < 1e-9); // mean within-group residual
    }

    #[test]
    fn huge_fusion_penalty_prefers_single_cluster() {
        let ds = toy(&[2], vec![vec![1, 1, 2, 2]], vec![1.0, 1.0, -1.0, -1.0]);
        let pen = PenaltyConfig::new(0.0, 10.0).unwrap();
        let opts = EnumerateOptions {
            fit_intercept: true,
            ..Default::default()
        };
        let (coef, obj) = solve_enumerative(&ds, &pen, &ActivePredictors::All, &opts).unwrap();
        assert_eq!(coef.total_levels(), 1);
        // Collapsed fit leaves the full variance; one cluster costs 10.
        assert!((obj - 11.0).abs() < 1e-9, "obj {obj}");
    }

    #[test]
    fn univariate_matches_segment_solver() {
        // alpha fixed at zero so the two solvers address the same problem.
        let ys = [1.8, 1.8, 0.6, -0.4, -0.4, -0.4];
        let codes: Vec<u32> = vec![1, 1, 2, 3, 3, 3];
        let ds = toy(&[3], vec![codes.clone()], ys.to_vec());
        for (l0, l) in [(0.0, 0.0), (0.05, 0.1), (0.3, 0.02)] {
            let pen = PenaltyConfig::new(l0, l).unwrap();
            let opts = EnumerateOptions {
                fit_intercept: false,
                ..Default::default()
            };
            let (_, obj) =
                solve_enumerative(&ds, &pen, &ActivePredictors::All, &opts).unwrap();
            // Univariate reduction: group means with group sizes.
            let n = ys.len() as f64;
            let means = [1.8, 0.6, -0.4];
            let counts = [2.0, 1.0, 3.0];
            let sol =
                dp_seg_pen_l0_unsorted(&means, &counts, n * l0 / 2.0, n * l / 2.0).unwrap();
            let seq = WeightedSequence::new(vec![1.8, 0.6, -0.4], counts.to_vec()).unwrap();
            let dp_obj = segment_objective(&seq, &sol.beta, n * l0 / 2.0, n * l / 2.0);
            // objective identity: obj * n = 2 * dp + within-group RSS + n*l
            let within = 0.0; // group members are identical here
            let lifted = (2.0 * dp_obj + within) / n + l;
            assert!(
                (obj - lifted).abs() < 1e-9,
                "enumerative {obj} vs lifted dp {lifted}"
            );
        }
    }

    #[test]
    fn relaxed_semantics_charge_one_unit() {
        // One predictor relaxed: fusion charge is 1 regardless of values.
        let ds = toy(
            &[2, 2],
            vec![vec![1, 2, 1, 2], vec![1, 1, 2, 2]],
            vec![4.0, 0.0, 4.2, -0.2],
        );
        let pen = PenaltyConfig::new(0.0, 1.0).unwrap();
        let mut s = std::collections::BTreeSet::new();
        s.insert(1usize);
        let (_, relaxed_obj) = solve_enumerative(
            &ds,
            &pen,
            &ActivePredictors::Subset(s),
            &EnumerateOptions::default(),
        )
        .unwrap();
        let (_, full_obj) =
            solve_enumerative(&ds, &pen, &ActivePredictors::All, &EnumerateOptions::default())
                .unwrap();
        assert!(relaxed_obj <= full_obj + 1e-9);
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let ds = toy(
            &[7],
            vec![vec![1, 2, 3, 4, 5, 6, 7]],
            vec![0.0; 7],
        );
        let pen = PenaltyConfig::new(0.0, 0.0).unwrap();
        assert!(matches!(
            solve_enumerative(&ds, &pen, &ActivePredictors::All, &EnumerateOptions::default()),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn charged_objective_matches_reevaluation() {
        let ds = toy(
            &[3, 2],
            vec![vec![1, 2, 3, 1, 2, 3], vec![1, 2, 1, 2, 1, 2]],
            vec![2.0, 2.1, -1.0, 1.9, 2.2, -0.8],
        );
        let pen = PenaltyConfig::new(0.07, 0.11).unwrap();
        let (coef, obj) =
            solve_enumerative(&ds, &pen, &ActivePredictors::All, &EnumerateOptions::default())
                .unwrap();
        let re = objective(&ds, &coef, &pen, Loss::Squared).unwrap();
        assert!((obj - re).abs() < 1e-9, "charged {obj} vs re-evaluated {re}");
    }
}
