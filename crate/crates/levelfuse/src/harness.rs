//! Hyperparameter tuning on a validation split and replication-based
//! benchmarking with standard errors.

use crate::bcd::{fit, BcdConfig, Init};
use crate::coefficients::Coefficients;
use crate::dataset::{Dataset, Task};
use crate::datagen::{derive_seed, generate, make_beta_star, BetaStarSetting, SynthConfig};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, evaluate, r_squared, EvalReport};
use crate::objective::PenaltyConfig;
use crate::parallel;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    R2,
    Accuracy,
}

/// Penalty grid with a validation selection metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub lambda0s: Vec<f64>,
    pub metric: SelectionMetric,
}

pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && k >= 2);
    let (llo, lhi) = (lo.log10(), hi.log10());
    (0..k)
        .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (k - 1) as f64))
        .collect()
}

impl GridSpec {
    /// The default two-dimensional grid: 10 x 10 log-spaced over
    /// `[1e-5, 10]` in both penalties.
    pub fn two_dim() -> Self {
        Self {
            lambdas: log_spaced(1e-5, 10.0, 10),
            lambda0s: log_spaced(1e-5, 10.0, 10),
            metric: SelectionMetric::R2,
        }
    }

    /// The fusion-only variant: 100 log-spaced fusion weights with the
    /// sparsity weight pinned to zero.
    pub fn fusion_only() -> Self {
        Self {
            lambdas: log_spaced(1e-5, 10.0, 100),
            lambda0s: vec![0.0],
            metric: SelectionMetric::R2,
        }
    }

    fn check(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambda0s.is_empty() {
            return Err(Error::InvalidParameter("empty penalty grid".into()));
        }
        if self
            .lambdas
            .iter()
            .chain(&self.lambda0s)
            .any(|&v| !(v.is_finite() && v >= 0.0))
        {
            return Err(Error::InvalidParameter(
                "grid values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub coef: Coefficients,
    pub lambda: f64,
    pub lambda0: f64,
    pub val_score: f64,
    pub fits: usize,
}

fn val_score(val: &Dataset, coef: &Coefficients, metric: SelectionMetric) -> Result<f64> {
    let pred = coef.predict(val);
    match metric {
        SelectionMetric::R2 => r_squared(val.y(), &pred),
        SelectionMetric::Accuracy => accuracy(val.y(), &pred),
    }
}

/// Fits every grid point on the training split and returns the coefficients
/// with the best validation score. The path runs fusion weights descending
/// with sparsity weights ascending inside, warm-starting each fit from the
/// previous fusion weight's solution at the same sparsity weight. Score
/// ties prefer the larger fusion weight, then the larger sparsity weight.
pub fn tune(
    train: &Dataset,
    val: &Dataset,
    grid: &GridSpec,
    base_cfg: &BcdConfig,
) -> Result<TuneResult> {
    grid.check()?;
    let mut lambdas = grid.lambdas.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let mut lambda0s = grid.lambda0s.clone();
    lambda0s.sort_by(f64::total_cmp);

    let mut warm: Vec<Option<Coefficients>> = vec![None; lambda0s.len()];
    let mut best: Option<TuneResult> = None;
    let mut fits = 0usize;
    for &lambda in &lambdas {
        for (s, &lambda0) in lambda0s.iter().enumerate() {
            let pen = PenaltyConfig::new(lambda0, lambda)?;
            let cfg = BcdConfig {
                init: warm[s]
                    .as_ref()
                    .map(|c| Init::Warm(c.clone()))
                    .unwrap_or(Init::Zero),
                ..base_cfg.clone()
            };
            let res = fit(train, &pen, &cfg)?;
            fits += 1;
            let score = val_score(val, &res.coef, grid.metric)?;
            warm[s] = Some(res.coef.clone());
            let better = match &best {
                None => true,
                Some(b) => {
                    score > b.val_score
                        || (score == b.val_score
                            && (lambda, lambda0) > (b.lambda, b.lambda0))
                }
            };
            if better {
                best = Some(TuneResult {
                    coef: res.coef,
                    lambda,
                    lambda0,
                    val_score: score,
                    fits: 0,
                });
            }
        }
    }
    let mut best = best.expect("non-empty grid");
    best.fits = fits;
    Ok(best)
}

/// One estimator entry in a benchmark: a name and its penalty grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub grid: GridSpec,
}

impl MethodSpec {
    /// The full two-penalty estimator.
    pub fn sparse_fused() -> Self {
        Self {
            name: "cl-l0".into(),
            grid: GridSpec::two_dim(),
        }
    }

    /// The fusion-only estimator (sparsity weight zero).
    pub fn fused_only() -> Self {
        Self {
            name: "cl".into(),
            grid: GridSpec::fusion_only(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepRecord {
    pub record: &'static str,
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub lambda: f64,
    pub lambda0: f64,
    pub snr: f64,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub record: &'static str,
    pub method: String,
    pub replications: usize,
    pub mean_score: f64,
    pub se_score: f64,
    pub mean_purity: Option<f64>,
    pub se_purity: Option<f64>,
    pub mean_total_levels: f64,
    pub mean_nonzero_clusters: f64,
    pub mean_snr: f64,
    pub total_wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub records: Vec<RepRecord>,
    pub aggregates: Vec<Aggregate>,
    pub total_wall_time_ms: f64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Replication benchmark: per replication, fresh data from a derived seed,
/// tuning on the train/validation pair, evaluation on the test block.
/// Replications run in parallel; results are deterministic for a fixed
/// master seed.
pub fn benchmark(
    cfg: &SynthConfig,
    setting: &BetaStarSetting,
    methods: &[MethodSpec],
    replications: usize,
    base_cfg: &BcdConfig,
) -> Result<BenchResult> {
    if replications == 0 || methods.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one replication and one method".into(),
        ));
    }
    let beta_star = make_beta_star(setting)?;
    let start = Instant::now();
    let per_rep: Vec<Result<Vec<RepRecord>>> = parallel::map_indexed(replications, |rep| {
        let rep_seed = derive_seed(cfg.seed, 1000 + rep as u64);
        let data = generate(&SynthConfig { seed: rep_seed, ..cfg.clone() }, &beta_star)?;
        let mut out = Vec::with_capacity(methods.len());
        for method in methods {
            let t0 = Instant::now();
            let tuned = tune(&data.train, &data.val, &method.grid, base_cfg)?;
            let wall = t0.elapsed().as_secs_f64() * 1e3;
            let report = evaluate(&data.test, &tuned.coef, Some(&data.beta_star), wall)?;
            out.push(RepRecord {
                record: "replication",
                method: method.name.clone(),
                rep,
                seed: rep_seed,
                lambda: tuned.lambda,
                lambda0: tuned.lambda0,
                snr: data.snr,
                report,
            });
        }
        Ok(out)
    });
    let mut records = Vec::with_capacity(replications * methods.len());
    for r in per_rep {
        records.extend(r?);
    }

    let mut aggregates = Vec::with_capacity(methods.len());
    for method in methods {
        let rows: Vec<&RepRecord> = records.iter().filter(|r| r.method == method.name).collect();
        let scores: Vec<f64> = rows
            .iter()
            .map(|r| r.report.r2.or(r.report.accuracy).unwrap_or(f64::NAN))
            .collect();
        let (mean_score, se_score) = mean_se(&scores);
        let purities: Vec<f64> = rows.iter().filter_map(|r| r.report.purity).collect();
        let (mean_purity, se_purity) = if purities.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_se(&purities);
            (Some(m), Some(s))
        };
        let levels: Vec<f64> = rows.iter().map(|r| r.report.total_levels as f64).collect();
        let clusters: Vec<f64> = rows
            .iter()
            .map(|r| r.report.nonzero_clusters as f64)
            .collect();
        let snrs: Vec<f64> = rows.iter().map(|r| r.snr).collect();
        aggregates.push(Aggregate {
            record: "aggregate",
            method: method.name.clone(),
            replications,
            mean_score,
            se_score,
            mean_purity,
            se_purity,
            mean_total_levels: mean_se(&levels).0,
            mean_nonzero_clusters: mean_se(&clusters).0,
            mean_snr: mean_se(&snrs).0,
            total_wall_time_ms: rows.iter().map(|r| r.report.wall_time_ms).sum(),
        });
    }
    Ok(BenchResult {
        records,
        aggregates,
        total_wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Null-model check used by tests: with no signal, tuned test scores should
/// hover near zero.
pub fn is_regression(ds: &Dataset) -> bool {
    ds.task() == Task::Regression
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Task;
    use crate::schema::CategoricalSchema;

    #[test]
    fn log_grid_hits_endpoints() {
        let g = log_spaced(1e-5, 10.0, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-5).abs() < 1e-18);
        assert!((g[9] - 10.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    fn separable() -> (Dataset, Dataset) {
        let schema = CategoricalSchema::with_widths(&[3]).unwrap();
        let make = |seed: u32| {
            let codes: Vec<u32> = (0..60).map(|i| ((i * 7 + seed) % 3 + 1) as u32).collect();
            let y: Vec<f64> = codes
                .iter()
                .map(|&c| [2.0, 0.0, -2.0][c as usize - 1])
                .collect();
            Dataset::new(
                schema.clone(),
                vec![codes],
                vec![],
                vec![],
                y,
                Task::Regression,
            )
            .unwrap()
        };
        (make(0), make(1))
    }

    #[test]
    fn single_point_grid_returns_that_fit() {
        let (train, val) = separable();
        let grid = GridSpec {
            lambdas: vec![0.01],
            lambda0s: vec![0.01],
            metric: SelectionMetric::R2,
        };
        let res = tune(&train, &val, &grid, &BcdConfig::default()).unwrap();
        assert_eq!(res.fits, 1);
        assert_eq!((res.lambda, res.lambda0), (0.01, 0.01));
    }

    #[test]
    fn noiseless_toy_reaches_perfect_validation_score() {
        let (train, val) = separable();
        let grid = GridSpec {
            lambdas: log_spaced(1e-5, 10.0, 6),
            lambda0s: log_spaced(1e-5, 10.0, 4),
            metric: SelectionMetric::R2,
        };
        let res = tune(&train, &val, &grid, &BcdConfig::default()).unwrap();
        assert!((res.val_score - 1.0).abs() < 1e-9, "score {}", res.val_score);
        assert_eq!(res.coef.total_levels(), 3);
        assert_eq!(res.fits, 24);
    }

    #[test]
    fn fusion_only_grid_keeps_sparsity_weight_zero() {
        let g = GridSpec::fusion_only();
        assert_eq!(g.lambda0s, vec![0.0]);
        assert_eq!(g.lambdas.len(), 100);
    }

    #[test]
    fn benchmark_is_deterministic_and_null_model_scores_low() {
        let setting = BetaStarSetting::Blocks {
            r1: 1,
            r2: 2,
            q: 2,
            q_s: 1,
        };
        // Zero out the signal: q_s = 1 but sigma dominates anyway; use a
        // custom all-zero truth by generating with q_s predictors inactive.
        let star_zero = Coefficients {
            alpha: 0.0,
            theta_cat: vec![vec![0.0; 4]; 2],
            theta_cont: vec![],
        };
        let cfg = SynthConfig {
            n_train: 40,
            n_val: 40,
            n_test: 40,
            levels: vec![4, 4],
            rho: 0.2,
            sigma: 1.0,
            seed: 11,
        };
        let grid = GridSpec {
            lambdas: log_spaced(1e-3, 10.0, 4),
            lambda0s: log_spaced(1e-3, 10.0, 3),
            metric: SelectionMetric::R2,
        };
        let methods = vec![MethodSpec {
            name: "cl-l0".into(),
            grid,
        }];
        // benchmark() builds beta-star from the setting, so emulate the null
        // model by driving tune/evaluate directly.
        let data = generate(&cfg, &star_zero).unwrap();
        let tuned = tune(&data.train, &data.val, &methods[0].grid, &BcdConfig::default()).unwrap();
        let pred = tuned.coef.predict(&data.test);
        let r2 = r_squared(data.test.y(), &pred).unwrap();
        assert!(r2 < 0.05, "null model test r2 {r2}");

        // Determinism of the full benchmark path.
        let a = benchmark(&cfg, &setting, &methods, 2, &BcdConfig::default()).unwrap();
        let b = benchmark(&cfg, &setting, &methods, 2, &BcdConfig::default()).unwrap();
        assert_eq!(a.records.len(), 2);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.lambda, y.lambda);
            assert_eq!(x.report.r2, y.report.r2);
            assert_eq!(x.report.purity, y.report.purity);
        }
        assert_eq!(a.aggregates[0].mean_score, b.aggregates[0].mean_score);
    }

    #[test]
    fn warm_path_never_much_worse_than_cold() {
        let (train, val) = separable();
        let grid = GridSpec {
            lambdas: log_spaced(1e-4, 1.0, 5),
            lambda0s: vec![1e-3],
            metric: SelectionMetric::R2,
        };
        // Warm-started path objectives vs cold fits at the same penalties.
        let mut lambdas = grid.lambdas.clone();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let mut warm: Option<Coefficients> = None;
        for &l in &lambdas {
            let pen = PenaltyConfig::new(1e-3, l).unwrap();
            let cfg_warm = BcdConfig {
                init: warm.map(Init::Warm).unwrap_or(Init::Zero),
                ..BcdConfig::default()
            };
            let w = fit(&train, &pen, &cfg_warm).unwrap();
            let c = fit(&train, &pen, &BcdConfig::default()).unwrap();
            assert!(
                w.objective <= c.objective + 1e-7 * c.objective.abs().max(1.0),
                "warm {} vs cold {} at lambda {l}",
                w.objective,
                c.objective
            );
            warm = Some(w.coef);
        }
        let _ = val;
    }
}
