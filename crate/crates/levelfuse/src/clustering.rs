use crate::coefficients::{distinct_values, Coefficients};
use crate::error::{Error, Result};
use crate::schema::CategoricalSchema;
use std::collections::BTreeMap;

/// One maximal group of levels of a single predictor sharing a coefficient
/// value. Level indices are 0-based within the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub predictor: usize,
    pub levels: Vec<usize>,
    pub value: f64,
    pub is_zero: bool,
}

/// Per-predictor partition of levels into equal-coefficient clusters.
/// Clusters never span predictors, cover every level, and carry distinct
/// values within a predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringPattern {
    clusters: Vec<Cluster>,
    n_predictors: usize,
}

impl ClusteringPattern {
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn n_predictors(&self) -> usize {
        self.n_predictors
    }

    pub fn clusters_of(&self, j: usize) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(move |c| c.predictor == j)
    }

    /// Total cluster count, which the fusion penalty charges.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Derives the clustering pattern of a coefficient vector: per predictor,
/// levels are grouped by exact value equality, so the resulting clusters are
/// maximal and exhaustive.
pub fn clustering_of(coef: &Coefficients) -> ClusteringPattern {
    let mut clusters = Vec::new();
    for (j, block) in coef.theta_cat.iter().enumerate() {
        for value in distinct_values(block) {
            let levels: Vec<usize> = block
                .iter()
                .enumerate()
                .filter(|(_, &v)| (if v == 0.0 { 0.0 } else { v }) == value)
                .map(|(k, _)| k)
                .collect();
            clusters.push(Cluster {
                predictor: j,
                levels,
                value,
                is_zero: value == 0.0,
            });
        }
    }
    ClusteringPattern {
        clusters,
        n_predictors: coef.theta_cat.len(),
    }
}

/// Baseline convention applied after fitting.
#[derive(Debug, Clone)]
pub enum BaselineMode {
    /// Shift each predictor so its most populous cluster sits at zero; ties
    /// go to the cluster containing the smallest level index.
    LargestClusterZero,
    /// Shift so the named level gets coefficient zero; keys are predictor
    /// names, values are level labels.
    UserBaseline(BTreeMap<String, String>),
}

/// Re-expresses coefficients under a baseline convention: each predictor's
/// block is shifted by a constant, the intercept absorbs the sum, and the
/// prediction vector is unchanged.
pub fn canonicalize_baseline(
    schema: &CategoricalSchema,
    coef: &Coefficients,
    mode: &BaselineMode,
) -> Result<Coefficients> {
    coef.check_shape(schema, coef.theta_cont.len())?;
    let mut out = coef.clone();
    for (j, block) in out.theta_cat.iter_mut().enumerate() {
        let shift = match mode {
            BaselineMode::LargestClusterZero => {
                let mut best: Option<(usize, usize, f64)> = None; // (size, min_level, value)
                for value in distinct_values(block) {
                    let members: Vec<usize> = block
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| (if v == 0.0 { 0.0 } else { v }) == value)
                        .map(|(k, _)| k)
                        .collect();
                    let key = (members.len(), usize::MAX - members[0]);
                    if best.map_or(true, |(s, m, _)| key > (s, m)) {
                        best = Some((key.0, key.1, value));
                    }
                }
                best.expect("non-empty block").2
            }
            BaselineMode::UserBaseline(wanted) => {
                let name = &schema.predictor(j).name;
                match wanted.get(name) {
                    None => continue,
                    Some(label) => {
                        let code = schema.level_code(j, label).ok_or_else(|| {
                            Error::UnknownLevel {
                                predictor: name.clone(),
                                level: label.clone(),
                            }
                        })?;
                        block[code as usize - 1]
                    }
                }
            }
        };
        if shift != 0.0 {
            for v in block.iter_mut() {
                *v -= shift;
            }
            out.alpha += shift;
        }
        // The baseline cluster is exactly zero by construction.
        for v in block.iter_mut() {
            if *v == 0.0 {
                *v = 0.0; // normalize -0.0
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coef1(block: Vec<f64>) -> Coefficients {
        Coefficients {
            alpha: 0.0,
            theta_cat: vec![block],
            theta_cont: vec![],
        }
    }

    #[test]
    fn clusters_group_equal_values() {
        let pat = clustering_of(&coef1(vec![2.0, 2.0, 0.0, 0.0, 0.0]));
        assert_eq!(pat.len(), 2);
        let zero: Vec<_> = pat.clusters().iter().filter(|c| c.is_zero).collect();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].levels, vec![2, 3, 4]);
    }

    #[test]
    fn singletons_when_all_distinct() {
        let pat = clustering_of(&coef1(vec![1.0, 2.0, 3.0]));
        assert_eq!(pat.len(), 3);
        assert!(pat.clusters().iter().all(|c| c.levels.len() == 1));
    }

    #[test]
    fn zero_clusters_never_merge_across_predictors() {
        let coef = Coefficients {
            alpha: 0.0,
            theta_cat: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            theta_cont: vec![],
        };
        let pat = clustering_of(&coef);
        assert_eq!(pat.len(), 2);
        assert_eq!(pat.clusters_of(0).count(), 1);
        assert_eq!(pat.clusters_of(1).count(), 1);
    }

    #[test]
    fn largest_cluster_shifts_to_zero() {
        let schema = CategoricalSchema::with_widths(&[3]).unwrap();
        let out = canonicalize_baseline(
            &schema,
            &coef1(vec![3.0, 3.0, 1.0]),
            &BaselineMode::LargestClusterZero,
        )
        .unwrap();
        assert_eq!(out.theta_cat[0], vec![0.0, 0.0, -2.0]);
        assert_eq!(out.alpha, 3.0);
    }

    #[test]
    fn zero_cluster_already_largest_is_unchanged() {
        let schema = CategoricalSchema::with_widths(&[3]).unwrap();
        let coef = Coefficients {
            alpha: 1.0,
            theta_cat: vec![vec![0.0, 0.0, 5.0]],
            theta_cont: vec![],
        };
        let out = canonicalize_baseline(&schema, &coef, &BaselineMode::LargestClusterZero).unwrap();
        assert_eq!(out, coef);
    }

    #[test]
    fn user_baseline_shifts_named_level() {
        let schema = CategoricalSchema::with_widths(&[2]).unwrap();
        let mut wanted = BTreeMap::new();
        wanted.insert("c1".to_string(), "2".to_string());
        let out = canonicalize_baseline(
            &schema,
            &coef1(vec![2.0, 4.0]),
            &BaselineMode::UserBaseline(wanted),
        )
        .unwrap();
        assert_eq!(out.theta_cat[0], vec![-2.0, 0.0]);
        assert_eq!(out.alpha, 4.0);
    }

    #[test]
    fn unknown_baseline_level_errors() {
        let schema = CategoricalSchema::with_widths(&[2]).unwrap();
        let mut wanted = BTreeMap::new();
        wanted.insert("c1".to_string(), "nope".to_string());
        assert!(canonicalize_baseline(
            &schema,
            &coef1(vec![1.0, 2.0]),
            &BaselineMode::UserBaseline(wanted),
        )
        .is_err());
    }

    #[test]
    fn ties_pick_cluster_with_smallest_level() {
        let schema = CategoricalSchema::with_widths(&[4]).unwrap();
        // Two clusters of size two; the one containing level 0 wins.
        let out = canonicalize_baseline(
            &schema,
            &coef1(vec![5.0, 1.0, 5.0, 1.0]),
            &BaselineMode::LargestClusterZero,
        )
        .unwrap();
        assert_eq!(out.theta_cat[0], vec![0.0, -4.0, 0.0, -4.0]);
        assert_eq!(out.alpha, 5.0);
    }
}
