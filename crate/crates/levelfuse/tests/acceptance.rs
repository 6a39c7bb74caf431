//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantity (visible with `cargo test -- --nocapture`).

use levelfuse::bcd::{self, BcdConfig, Init};
use levelfuse::coefficients::Coefficients;
use levelfuse::dataset::{Dataset, Task};
use levelfuse::datagen::{self, BetaStarSetting, SynthConfig};
use levelfuse::dp::{
    brute_force_univariate, distinct_objective, dp_seg_distinct_unsorted, dp_seg_pen_l0,
    WeightedSequence,
};
use levelfuse::harness::{self, GridSpec, MethodSpec, SelectionMetric};
use levelfuse::metrics;
use levelfuse::mip::{
    row_generation, solve_enumerative, ActivePredictors, EnumerateOptions, EnumerativeBackend,
    RowGenOptions,
};
use levelfuse::objective::{objective, Loss, PenaltyConfig};
use levelfuse::schema::CategoricalSchema;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

// ------------------------------------------------------------------ 1

#[test]
fn criterion_1_dp_matches_brute_force() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=12usize);
        let mut ybar: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
        ybar.sort_by(|a, b| b.total_cmp(a));
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..5.0)).collect();
        let l0 = rng.random_range(0.0..3.0);
        let l1 = rng.random_range(0.0..3.0);
        let seq = WeightedSequence::new(ybar, weights).unwrap();
        let dp = dp_seg_pen_l0(&seq, l0, l1).unwrap();
        let bf = brute_force_univariate(&seq, l0, l1).unwrap();
        let diff = (dp.objective - bf.objective).abs();
        worst = worst.max(diff);
        assert!(diff < 1e-9, "dp {} vs oracle {}", dp.objective, bf.objective);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: dp == brute force on 200 instances (worst gap {worst:.2e}, {elapsed:.2?})"
    );
}

// ------------------------------------------------------------------ 2

#[test]
fn criterion_2_enumerative_cross_oracle() {
    let mut rng = StdRng::seed_from_u64(1002);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.random_range(1..=5usize);
        let n = 12usize;
        let mut codes: Vec<u32> = (1..=m as u32).collect();
        for _ in m..n {
            codes.push(rng.random_range(1..=m as u32));
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let schema = CategoricalSchema::with_widths(&[m]).unwrap();
        let ds = Dataset::new(
            schema,
            vec![codes.clone()],
            vec![],
            vec![],
            y.clone(),
            Task::Regression,
        )
        .unwrap();
        let l0 = rng.random_range(0.0..0.5f64);
        let l = rng.random_range(0.0..0.5f64);
        let pen = PenaltyConfig::new(l0, l).unwrap();
        let opts = EnumerateOptions {
            fit_intercept: false, // alpha fixed at zero
            ..Default::default()
        };
        let (_, enum_obj) = solve_enumerative(&ds, &pen, &ActivePredictors::All, &opts).unwrap();

        // Reduce to the weighted univariate problem and solve exactly.
        let nf = n as f64;
        let mut means = vec![0.0; m];
        let mut counts = vec![0.0; m];
        for (i, &c) in codes.iter().enumerate() {
            means[c as usize - 1] += y[i];
            counts[c as usize - 1] += 1.0;
        }
        for k in 0..m {
            means[k] /= counts[k];
        }
        let within: f64 = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = y[i] - means[c as usize - 1];
                d * d
            })
            .sum();
        let sol =
            dp_seg_distinct_unsorted(&means, &counts, nf * l0 / 2.0, nf * l / 2.0, false).unwrap();
        let mut pairs: Vec<(f64, f64, f64)> =
            (0..m).map(|k| (means[k], counts[k], sol.beta[k])).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let seq = WeightedSequence::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
        .unwrap();
        let dp_obj = distinct_objective(
            &seq,
            &pairs.iter().map(|p| p.2).collect::<Vec<_>>(),
            nf * l0 / 2.0,
            nf * l / 2.0,
            false,
        );
        let lifted = (2.0 * dp_obj + within) / nf;
        let diff = (enum_obj - lifted).abs();
        worst = worst.max(diff);
        assert!(
            diff < 1e-9,
            "enumerative {enum_obj} vs univariate solver {lifted}"
        );
    }
    println!("criterion 2 PASS: enumerative == univariate exact on 50 instances (worst gap {worst:.2e})");
}

// ------------------------------------------------------------ 3, 4, 6

/// Random two-predictor instances shared by criteria 3, 4, and 6.
fn exact_test_instance(seed: u64) -> (Dataset, PenaltyConfig) {
    let mut rng = StdRng::seed_from_u64(seed);
    let (q, width, n) = (2usize, 4usize, 50usize);
    let schema = CategoricalSchema::with_widths(&[width, width]).unwrap();
    let mut codes = vec![Vec::with_capacity(n); q];
    for j in 0..q {
        for k in 0..width {
            codes[j].push(k as u32 + 1); // cover every level
        }
        for _ in width..n {
            codes[j].push(rng.random_range(1..=width as u32));
        }
    }
    // Clustered true effects with some all-zero levels.
    let pool = [-2.0, -1.0, 0.0, 0.0, 1.0, 2.0];
    let effects: Vec<Vec<f64>> = (0..q)
        .map(|_| {
            let a = pool[rng.random_range(0..pool.len())];
            let b = pool[rng.random_range(0..pool.len())];
            vec![a, a, b, 0.0]
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = 0.0;
            for j in 0..q {
                v += effects[j][codes[j][i] as usize - 1];
            }
            let noise: f64 = StandardNormal.sample(&mut rng);
            v + 0.5 * noise
        })
        .collect();
    let ds = Dataset::new(schema, codes, vec![], vec![], y, Task::Regression).unwrap();
    // Penalties log-uniform around the quality-experiment regime.
    let mut lu = || 10f64.powf(rng.random_range(-2.0..-1.0));
    let pen = PenaltyConfig::new(lu(), lu()).unwrap();
    (ds, pen)
}

#[test]
fn criterion_3_relaxation_and_row_generation() {
    let backend = EnumerativeBackend::default();
    let mut max_iters = 0usize;
    for seed in 0..30u64 {
        let (ds, pen) = exact_test_instance(3000 + seed);
        let (_, full) = solve_enumerative(
            &ds,
            &pen,
            &ActivePredictors::All,
            &EnumerateOptions::default(),
        )
        .unwrap();

        // Lower-bound property for the warm support relaxation.
        let warm = bcd::fit(&ds, &pen, &BcdConfig::default()).unwrap().coef;
        let active: std::collections::BTreeSet<usize> =
            warm.active_predictors().into_iter().collect();
        let (_, relaxed) = solve_enumerative(
            &ds,
            &pen,
            &ActivePredictors::Subset(active),
            &EnumerateOptions::default(),
        )
        .unwrap();
        assert!(
            relaxed <= full + 1e-9,
            "seed {seed}: relaxed {relaxed} above full {full}"
        );

        let res = row_generation(&ds, &pen, &warm, &backend, &RowGenOptions::default()).unwrap();
        assert!(res.support_repeated, "seed {seed}: budget exhausted");
        assert!(
            (res.certificate.upper_bound - full).abs() < 1e-9,
            "seed {seed}: row generation {} vs exact {full}",
            res.certificate.upper_bound
        );
        assert!(res.certificate.lower_bound <= full + 1e-9);
        max_iters = max_iters.max(res.iterations);
        assert!(res.iterations <= 3, "seed {seed}: {} iterations", res.iterations);
    }
    println!(
        "criterion 3 PASS: relaxation bounds and row-generation optimality on 30 instances (max iterations {max_iters})"
    );
}

#[test]
fn criterion_4_bcd_gap_to_exact() {
    let start = Instant::now();
    let mut gaps = Vec::with_capacity(30);
    for seed in 0..30u64 {
        let (ds, pen) = exact_test_instance(3000 + seed);
        let (_, exact) = solve_enumerative(
            &ds,
            &pen,
            &ActivePredictors::All,
            &EnumerateOptions::default(),
        )
        .unwrap();
        let fit = bcd::fit(&ds, &pen, &BcdConfig::default()).unwrap();
        let gap = (fit.objective - exact).max(0.0) / exact.abs().max(1e-12);
        gaps.push(gap);
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let elapsed = start.elapsed();
    assert!(mean_gap <= 0.01, "mean relative gap {mean_gap}");
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: mean BCD-vs-exact relative gap {:.3e} over 30 instances ({elapsed:.2?})",
        mean_gap
    );
}

#[test]
fn criterion_6_descent_and_fixed_point() {
    // The criterion-4 instances.
    let mut worst_violation = 0.0f64;
    let mut worst_gap = 0.0f64;
    for seed in 0..30u64 {
        let (ds, pen) = exact_test_instance(3000 + seed);
        let fit = bcd::fit(&ds, &pen, &BcdConfig::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            worst_violation = worst_violation.max(w[1] - w[0]);
        }
        let gap = bcd::fixed_point_gap(&ds, &pen, &fit.coef, Loss::Squared, &BcdConfig::default())
            .unwrap();
        worst_gap = worst_gap.max(gap.abs());
    }
    // Representative fits at the criterion-5 scale.
    let setting = BetaStarSetting::Blocks {
        r1: 2,
        r2: 200,
        q: 2,
        q_s: 2,
    };
    let star = datagen::make_beta_star(&setting).unwrap();
    for rep in 0..3u64 {
        let cfg = SynthConfig::equal_split(2000, &setting, 1.0, datagen::derive_seed(60, rep));
        let data = datagen::generate(&cfg, &star).unwrap();
        for (l0, l) in [(1e-3, 1e-3), (0.01, 0.1), (0.1, 0.01)] {
            let pen = PenaltyConfig::new(l0, l).unwrap();
            let fit = bcd::fit(&data.train, &pen, &BcdConfig::default()).unwrap();
            for w in fit.objective_trace.windows(2) {
                worst_violation = worst_violation.max(w[1] - w[0]);
            }
            let gap = bcd::fixed_point_gap(
                &data.train,
                &pen,
                &fit.coef,
                Loss::Squared,
                &BcdConfig::default(),
            )
            .unwrap();
            worst_gap = worst_gap.max(gap.abs());
        }
    }
    // Each update minimizes exactly, so any trace rise is recomputation
    // round-off; a few ulps at unit scale, far below any genuine ascent.
    assert!(worst_violation <= 1e-12, "objective rose by {worst_violation:e}");
    assert!(worst_gap < 1e-9, "fixed-point re-solve improved by {worst_gap:e}");
    println!(
        "criterion 6 PASS: traces nonincreasing, max fixed-point improvement {worst_gap:.2e}"
    );
}

// ------------------------------------------------------------------ 5

#[test]
fn criterion_5_cluster_recovery() {
    let start = Instant::now();
    let setting = BetaStarSetting::Blocks {
        r1: 2,
        r2: 200,
        q: 2,
        q_s: 2,
    };
    let cfg = SynthConfig::equal_split(2000, &setting, 1.0, 501);
    let methods = [MethodSpec::sparse_fused()];
    let result =
        harness::benchmark(&cfg, &setting, &methods, 20, &BcdConfig::default()).unwrap();
    let mean_purity = result.aggregates[0].mean_purity.unwrap();
    let elapsed = start.elapsed();
    assert!(mean_purity > 0.99, "mean purity {mean_purity}");
    println!(
        "criterion 5 PASS: mean purity {mean_purity:.4} over 20 replications ({elapsed:.2?})"
    );
}

// ------------------------------------------------------------------ 7

#[test]
fn criterion_7_logistic_surrogate() {
    // Lemma-style majorization bound on random draws.
    let mut rng = StdRng::seed_from_u64(700);
    let n = 30usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let y: Vec<f64> = (0..n)
            .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 })
            .collect();
        let p = 5usize;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let draw =
            |rng: &mut StdRng| -> (Vec<f64>, f64) {
                ((0..p).map(|_| rng.random_range(-1.5..1.5)).collect(), rng.random_range(-1.0..1.0))
            };
        let (beta0, alpha0) = draw(&mut rng);
        let (beta, alpha) = draw(&mut rng);
        let margin = |b: &[f64], a: f64, i: usize| -> f64 {
            a + x[i].iter().zip(b).map(|(xi, bi)| xi * bi).sum::<f64>()
        };
        let eta0: Vec<f64> = (0..n).map(|i| margin(&beta0, alpha0, i)).collect();
        let eta: Vec<f64> = (0..n).map(|i| margin(&beta, alpha, i)).collect();
        let (g, ytilde) = bcd::logistic_majorizer(&y, &eta0);
        let lhs =
            bcd::logistic_total_loss(&y, &eta) - bcd::logistic_total_loss(&y, &eta0);
        let rhs = ytilde
            .iter()
            .zip(&eta)
            .map(|(&t, &e)| (t - e) * (t - e))
            .sum::<f64>()
            / 8.0
            - 2.0 * g.iter().map(|v| v * v).sum::<f64>();
        worst = worst.max(lhs - rhs);
        assert!(lhs <= rhs + 1e-9, "bound violated: {lhs} > {rhs}");
    }

    // Majorization loop on a synthetic binary problem.
    let n = 200usize;
    let schema = CategoricalSchema::with_widths(&[4, 4]).unwrap();
    let mut rng2 = ChaCha12Rng::seed_from_u64(701);
    let codes: Vec<Vec<u32>> = (0..2)
        .map(|_| (0..n).map(|_| rng2.random_range(1..=4u32)).collect())
        .collect();
    let effect = [1.5, 0.0, -1.5, 0.0];
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 =
                effect[codes[0][i] as usize - 1] + 0.5 * effect[codes[1][i] as usize - 1];
            let p = 1.0 / (1.0 + (-eta).exp());
            if rng2.random_range(0.0..1.0) < p {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let ds = Dataset::new(schema, codes, vec![], vec![], y, Task::Binary).unwrap();
    let pen = PenaltyConfig::new(0.005, 0.01).unwrap();
    let cfg = BcdConfig {
        rel_tol: 1e-12,
        ..BcdConfig::default()
    };
    let fit = bcd::fit_logistic_bcd(&ds, &pen, &cfg).unwrap();
    for w in fit.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "logistic objective rose: {} -> {}", w[0], w[1]);
    }
    let gap = bcd::fixed_point_gap(&ds, &pen, &fit.coef, Loss::Logistic, &cfg).unwrap();
    assert!(gap.abs() < 1e-9, "fixed-point gap {gap:e}");
    println!(
        "criterion 7 PASS: majorization bound (worst slack {worst:.2e}) and monotone logistic loop"
    );
}

// ------------------------------------------------------------------ 8

#[test]
fn criterion_8_generator_snr() {
    let setting = BetaStarSetting::Blocks {
        r1: 4,
        r2: 12,
        q: 20,
        q_s: 3,
    };
    let star = datagen::make_beta_star(&setting).unwrap();
    let mut snrs = Vec::with_capacity(50);
    for seed in 0..50u64 {
        let cfg = SynthConfig {
            n_train: 200,
            n_val: 200,
            n_test: 200,
            levels: vec![20; 20],
            rho: 0.2,
            sigma: 2.0,
            seed: 800 + seed,
        };
        let data = datagen::generate(&cfg, &star).unwrap();
        snrs.push(data.snr);
    }
    let mean = snrs.iter().sum::<f64>() / snrs.len() as f64;
    assert!(
        (mean - 1.23).abs() <= 0.2,
        "mean realized snr {mean} outside 1.23 +/- 0.2"
    );
    println!("criterion 8 PASS: mean realized SNR {mean:.3} over 50 seeds");
}

// ------------------------------------------------------------------ 9

#[test]
fn criterion_9_purity_trend_in_n() {
    let start = Instant::now();
    let setting = BetaStarSetting::Blocks {
        r1: 4,
        r2: 12,
        q: 20,
        q_s: 3,
    };
    let methods = [MethodSpec::sparse_fused()];
    let mut purity_at = Vec::new();
    for n in [100usize, 500] {
        let cfg = SynthConfig::equal_split(n, &setting, 2.0, 901);
        let result =
            harness::benchmark(&cfg, &setting, &methods, 20, &BcdConfig::default()).unwrap();
        purity_at.push(result.aggregates[0].mean_purity.unwrap());
    }
    let elapsed = start.elapsed();
    assert!(
        purity_at[1] > purity_at[0],
        "purity did not improve with n: {purity_at:?}"
    );
    assert!(purity_at[1] > 0.9, "purity at n=500 is {}", purity_at[1]);
    println!(
        "criterion 9 PASS: mean purity {:.3} at n=100 vs {:.3} at n=500 ({elapsed:.2?})",
        purity_at[0], purity_at[1]
    );
}

// ------------------------------------------------------------------ 10

#[test]
fn criterion_10_bike_sharing_protocol() {
    let path = std::env::var("LEVELFUSE_BIKE_CSV")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|_| std::path::PathBuf::from("../../data/bike/hour.csv"));
    if !path.exists() {
        println!("criterion 10 SKIP: bike dataset not present at {}", path.display());
        return;
    }
    let raw = std::fs::read_to_string(&path).expect("readable dataset");
    let mut lines = raw.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).expect(name);
    let cat_cols: Vec<usize> = [
        "season", "yr", "mnth", "hr", "holiday", "weekday", "workingday", "weathersit",
    ]
    .iter()
    .map(|c| col(c))
    .collect();
    let cont_cols: Vec<usize> = ["temp", "atemp", "hum", "windspeed"].iter().map(|c| col(c)).collect();
    let y_col = col("cnt");
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();

    let mut r2s = Vec::new();
    for split in 0..20u64 {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + split);
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let build = |ids: &[usize], schema: Option<&CategoricalSchema>| -> Dataset {
            let mut builder = levelfuse::schema::SchemaBuilder::new(
                (0..cat_cols.len()).map(|j| format!("c{j}")).collect(),
            );
            let mut codes = vec![Vec::new(); cat_cols.len()];
            let mut cont = vec![Vec::new(); cont_cols.len()];
            let mut y = Vec::new();
            for &i in ids {
                for (j, &c) in cat_cols.iter().enumerate() {
                    let code = match schema {
                        None => builder.observe(j, &rows[i][c]),
                        Some(s) => s.level_code(j, &rows[i][c]).unwrap_or(0),
                    };
                    codes[j].push(code);
                }
                for (j, &c) in cont_cols.iter().enumerate() {
                    cont[j].push(rows[i][c].parse().unwrap());
                }
                y.push(rows[i][y_col].parse().unwrap());
            }
            let schema = match schema {
                None => builder.finish().unwrap(),
                Some(s) => s.clone(),
            };
            Dataset::new(
                schema,
                codes,
                cont,
                (0..cont_cols.len()).map(|j| format!("w{j}")).collect(),
                y,
                Task::Regression,
            )
            .unwrap()
        };
        let train = build(&order[..100], None);
        let val = build(&order[100..200], Some(train.schema()));
        let test = build(&order[200..], Some(train.schema()));
        let tuned =
            harness::tune(&train, &val, &GridSpec::two_dim(), &BcdConfig::default()).unwrap();
        let pred = tuned.coef.predict(&test);
        r2s.push(metrics::r_squared(test.y(), &pred).unwrap());
    }
    let mean = r2s.iter().sum::<f64>() / r2s.len() as f64;
    assert!(
        (mean - 0.53).abs() <= 0.07,
        "mean test r2 {mean} outside 0.53 +/- 0.07"
    );
    println!("criterion 10 PASS: mean test r2 {mean:.3} over 20 splits");
}

// Grid selection metric sanity used by criteria 5 and 9.
#[test]
fn grids_use_validation_r2() {
    assert_eq!(GridSpec::two_dim().metric, SelectionMetric::R2);
    assert_eq!(GridSpec::two_dim().lambdas.len(), 10);
    assert_eq!(GridSpec::two_dim().lambda0s.len(), 10);
    assert_eq!(GridSpec::fusion_only().lambdas.len(), 100);
}

// Exactness of a single-block fit against the univariate solver, run with
// the intercept disabled so both address the same problem.
#[test]
fn single_block_fit_is_exact() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..20 {
        let m = rng.random_range(2..=5usize);
        let n = 30usize;
        let mut codes: Vec<u32> = (1..=m as u32).collect();
        for _ in m..n {
            codes.push(rng.random_range(1..=m as u32));
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let schema = CategoricalSchema::with_widths(&[m]).unwrap();
        let ds = Dataset::new(
            schema,
            vec![codes.clone()],
            vec![],
            vec![],
            y.clone(),
            Task::Regression,
        )
        .unwrap();
        let (l0, l) = (rng.random_range(0.0..0.2), rng.random_range(0.0..0.2));
        let pen = PenaltyConfig::new(l0, l).unwrap();
        let cfg = BcdConfig {
            fit_intercept: false,
            ..BcdConfig::default()
        };
        let fit = bcd::fit_bcd(&ds, &pen, &cfg).unwrap();

        let nf = n as f64;
        let mut means = vec![0.0; m];
        let mut counts = vec![0.0; m];
        for (i, &c) in codes.iter().enumerate() {
            means[c as usize - 1] += y[i];
            counts[c as usize - 1] += 1.0;
        }
        for k in 0..m {
            means[k] /= counts[k];
        }
        let sol =
            dp_seg_distinct_unsorted(&means, &counts, nf * l0 / 2.0, nf * l / 2.0, false).unwrap();
        let mut best = Coefficients::zeros_like(&ds);
        best.theta_cat[0] = sol.beta.clone();
        let exact_obj = objective(&ds, &best, &pen, Loss::Squared).unwrap();
        assert!(
            (fit.objective - exact_obj).abs() < 1e-9,
            "single block fit {} vs exact {exact_obj}",
            fit.objective
        );
    }
    println!("single-block exactness PASS");
}
