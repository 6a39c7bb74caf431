mod fmt;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmt::sig12;
use levelfuse::bcd::{self, BcdConfig, BlockOrder, FitResult, Init};
use levelfuse::coefficients::Coefficients;
use levelfuse::dataset::{Dataset, Task};
use levelfuse::datagen::{self, BetaStarSetting, SynthConfig};
use levelfuse::dp;
use levelfuse::harness::{self, GridSpec, MethodSpec, SelectionMetric};
use levelfuse::io as lfio;
use levelfuse::metrics;
use levelfuse::mip;
use levelfuse::objective::{Loss, PenaltyConfig};
use levelfuse::Error as LfError;
use manifest::ManifestBuilder;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "levelfuse",
    version,
    about = "Sparse fused regression over categorical predictors",
    propagate_version = true
)]
struct Cli {
    /// TOML file pre-populating flags per subcommand section; explicit
    /// command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the parallel commands (benchmark, solve-exact).
    /// Defaults to all cores; fits and evaluation are single-threaded.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the estimator on a dataset.
    Fit(FitArgs),
    /// Grid-tune penalties on a validation split.
    Tune(TuneArgs),
    /// Generate synthetic train/validation/test data.
    Synth(SynthArgs),
    /// Replication benchmark with tuning and standard errors.
    Benchmark(BenchmarkArgs),
    /// Evaluate a coefficients file on a dataset.
    Eval(EvalArgs),
    /// Exact univariate segment fit of a weighted sequence.
    Segment(SegmentArgs),
    /// Certified exact solve via row generation.
    SolveExact(SolveExactArgs),
    /// Write the binary-variable model in LP format.
    ExportMip(ExportMipArgs),
}

#[derive(Debug)]
enum AppError {
    Usage(String),
    Data(String),
    Guard(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Data(_) => 3,
            AppError::Guard(_) => 4,
            AppError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Guard(m) | AppError::Internal(m) => m,
        }
    }
}

impl From<LfError> for AppError {
    fn from(e: LfError) -> Self {
        match e {
            LfError::GuardExceeded(m) => AppError::Guard(m),
            LfError::InvalidParameter(m) => AppError::Usage(m),
            LfError::Unbounded(m) => AppError::Internal(m),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

type AppResult<T> = std::result::Result<T, AppError>;

/// Loaded `--config` file: one TOML table per subcommand.
struct Cfg(toml::Table);

impl Cfg {
    fn load(path: Option<&Path>) -> AppResult<Self> {
        match path {
            None => Ok(Self(toml::Table::new())),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let table: toml::Table = text
                    .parse()
                    .map_err(|e| AppError::Usage(format!("config file: {e}")))?;
                Ok(Self(table))
            }
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, section: &str, key: &str) -> AppResult<Option<T>> {
        match self.0.get(section).and_then(|s| s.get(key)) {
            None => Ok(None),
            Some(v) => T::deserialize(v.clone())
                .map(Some)
                .map_err(|e| AppError::Usage(format!("config [{section}].{key}: {e}"))),
        }
    }
}

macro_rules! resolve {
    ($cfg:expr, $section:literal, $field:expr, $key:literal) => {
        match $field.clone() {
            Some(v) => Some(v),
            None => $cfg.get($section, $key)?,
        }
    };
    ($cfg:expr, $section:literal, $field:expr, $key:literal, $default:expr) => {
        match $field.clone() {
            Some(v) => v,
            None => $cfg.get($section, $key)?.unwrap_or($default),
        }
    };
}

fn require<T>(v: Option<T>, flag: &str) -> AppResult<T> {
    v.ok_or_else(|| AppError::Usage(format!("missing required flag --{flag}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    #[cfg(not(feature = "parallel"))]
    if let Some(t) = cli.threads {
        if t > 1 {
            eprintln!("note: built without the parallel feature; --threads ignored");
        }
    }
    let cfg = match Cfg::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.code());
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, &cfg),
        Command::Tune(a) => cmd_tune(a, &cfg),
        Command::Synth(a) => cmd_synth(a, &cfg),
        Command::Benchmark(a) => cmd_benchmark(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
        Command::Segment(a) => cmd_segment(a, &cfg),
        Command::SolveExact(a) => cmd_solve_exact(a, &cfg),
        Command::ExportMip(a) => cmd_export_mip(a, &cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_dataset(data: &Path, schema: &Path) -> AppResult<(Dataset, lfio::DataSpec)> {
    let spec = lfio::DataSpec::read(schema)?;
    let ds = lfio::load_dataset(data, &spec)?;
    Ok((ds, spec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum LossArg {
    Squared,
    Logistic,
}

// ---------------------------------------------------------------- fit

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Disable the active-set outer loop.
    #[arg(long)]
    no_active_sets: bool,
    /// Seed for the optional randomized block order.
    #[arg(long)]
    seed: Option<u64>,
    /// Visit categorical blocks in a seeded random order each sweep.
    #[arg(long)]
    random_order: bool,
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    no_intercept: bool,
    /// Write the fit result (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn bcd_config_from(
    max_sweeps: usize,
    tol: f64,
    no_active_sets: bool,
    no_standardize: bool,
    no_intercept: bool,
    order: BlockOrder,
) -> BcdConfig {
    BcdConfig {
        max_sweeps,
        rel_tol: tol,
        use_active_sets: !no_active_sets,
        init: Init::Zero,
        fit_intercept: !no_intercept,
        standardize: !no_standardize,
        block_order: order,
    }
}

fn fit_result_json(ds: &Dataset, res: &FitResult) -> serde_json::Value {
    let per_predictor: BTreeMap<String, usize> = ds
        .schema()
        .predictors()
        .iter()
        .enumerate()
        .map(|(j, p)| (p.name.clone(), res.coef.distinct_count(j)))
        .collect();
    json!({
        "objective": res.objective,
        "sweeps": res.sweeps,
        "active_set_rounds": res.active_set_rounds,
        "wall_time_ms": res.wall_time.as_secs_f64() * 1e3,
        "per_predictor_levels": per_predictor,
        "coefficients": lfio::coefficients_to_json(ds.schema(), ds.cont_names(), &res.coef),
    })
}

fn cmd_fit(a: &FitArgs, cfg: &Cfg) -> AppResult<()> {
    let data = require(resolve!(cfg, "fit", a.data, "data"), "data")?;
    let schema = require(resolve!(cfg, "fit", a.schema, "schema"), "schema")?;
    let lambda = resolve!(cfg, "fit", a.lambda, "lambda", 0.0);
    let lambda0 = resolve!(cfg, "fit", a.lambda0, "lambda0", 0.0);
    let loss = resolve!(cfg, "fit", a.loss, "loss").unwrap_or(LossArg::Squared);
    let max_sweeps = resolve!(cfg, "fit", a.max_sweeps, "max_sweeps", 500);
    let tol = resolve!(cfg, "fit", a.tol, "tol", 1e-8);
    let seed = resolve!(cfg, "fit", a.seed, "seed", 0);

    let mut mb = ManifestBuilder::new("fit");
    mb.seed("block_order", seed);
    let (ds, _) = load_dataset(&data, &schema)?;
    let pen = PenaltyConfig::new(lambda0, lambda)?;
    let order = if a.random_order {
        BlockOrder::Shuffled { seed }
    } else {
        BlockOrder::Fixed
    };
    let bcfg = bcd_config_from(max_sweeps, tol, a.no_active_sets, a.no_standardize, a.no_intercept, order);
    let res = match loss {
        LossArg::Squared => bcd::fit(&ds, &pen, &bcfg)?,
        LossArg::Logistic => bcd::fit_logistic_bcd(&ds, &pen, &bcfg)?,
    };

    println!("objective {}", sig12(res.objective));
    println!("sweeps {}", res.sweeps);
    println!("active_set_rounds {}", res.active_set_rounds);
    println!("total_levels {}", res.coef.total_levels());
    println!("nonzero_clusters {}", res.coef.nonzero_clusters());
    println!("wall_time_ms {}", sig12(res.wall_time.as_secs_f64() * 1e3));
    if let Some(out) = &a.out {
        std::fs::write(
            out,
            serde_json::to_string_pretty(&fit_result_json(&ds, &res)).expect("json"),
        )?;
        mb.output(out);
        mb.write(out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- tune

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    val_data: Option<PathBuf>,
    /// Number of fusion-weight grid points.
    #[arg(long)]
    grid_lambda: Option<usize>,
    /// Number of sparsity-weight grid points.
    #[arg(long)]
    grid_lambda0: Option<usize>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Pin the sparsity weight to zero (fusion-only estimator).
    #[arg(long)]
    l0_zero: bool,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    no_active_sets: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_tune(a: &TuneArgs, cfg: &Cfg) -> AppResult<()> {
    let data = require(resolve!(cfg, "tune", a.data, "data"), "data")?;
    let schema = require(resolve!(cfg, "tune", a.schema, "schema"), "schema")?;
    let val_data = require(resolve!(cfg, "tune", a.val_data, "val_data"), "val-data")?;
    let k_lambda = resolve!(cfg, "tune", a.grid_lambda, "grid_lambda", if a.l0_zero { 100 } else { 10 });
    let k_lambda0 = resolve!(cfg, "tune", a.grid_lambda0, "grid_lambda0", 10);
    let lo = resolve!(cfg, "tune", a.lambda_min, "lambda_min", 1e-5);
    let hi = resolve!(cfg, "tune", a.lambda_max, "lambda_max", 10.0);
    let max_sweeps = resolve!(cfg, "tune", a.max_sweeps, "max_sweeps", 500);
    let tol = resolve!(cfg, "tune", a.tol, "tol", 1e-8);

    let mut mb = ManifestBuilder::new("tune");
    let (train, spec) = load_dataset(&data, &schema)?;
    let val = lfio::load_dataset_with_schema(&val_data, &spec, train.schema())?;
    let metric = match train.task() {
        Task::Regression => SelectionMetric::R2,
        Task::Binary => SelectionMetric::Accuracy,
    };
    let grid = GridSpec {
        lambdas: harness::log_spaced(lo, hi, k_lambda),
        lambda0s: if a.l0_zero {
            vec![0.0]
        } else {
            harness::log_spaced(lo, hi, k_lambda0)
        },
        metric,
    };
    let bcfg = bcd_config_from(max_sweeps, tol, a.no_active_sets, false, false, BlockOrder::Fixed);
    let tuned = harness::tune(&train, &val, &grid, &bcfg)?;

    println!("lambda {}", sig12(tuned.lambda));
    println!("lambda0 {}", sig12(tuned.lambda0));
    println!("val_score {}", sig12(tuned.val_score));
    println!("fits {}", tuned.fits);
    if let Some(out) = &a.out {
        let doc = json!({
            "lambda": tuned.lambda,
            "lambda0": tuned.lambda0,
            "val_score": tuned.val_score,
            "fits": tuned.fits,
            "coefficients": lfio::coefficients_to_json(train.schema(), train.cont_names(), &tuned.coef),
        });
        std::fs::write(out, serde_json::to_string_pretty(&doc).expect("json"))?;
        mb.output(out);
        mb.write(out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- synth

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SettingArg {
    /// Block pattern (-2 x r1, 0 x r2, 2 x r1) on the first qs predictors.
    Eq10,
    /// Fixed pattern (-2, -2, 0, 0, 0).
    F1,
    /// Fixed pattern (1, 2, 3, 0, 0).
    F2,
    /// Block pattern with explicit --r1/--r2/--q/--qs.
    Custom,
}

fn setting_from(
    which: SettingArg,
    r1: Option<usize>,
    r2: Option<usize>,
    q: Option<usize>,
    qs: Option<usize>,
) -> AppResult<BetaStarSetting> {
    Ok(match which {
        SettingArg::Eq10 => BetaStarSetting::Blocks {
            r1: r1.unwrap_or(4),
            r2: r2.unwrap_or(12),
            q: q.unwrap_or(20),
            q_s: qs.unwrap_or(3),
        },
        SettingArg::F1 => BetaStarSetting::PairZero {
            q: q.unwrap_or(50),
            q_s: qs.unwrap_or(5),
        },
        SettingArg::F2 => BetaStarSetting::Staircase {
            q: q.unwrap_or(50),
            q_s: qs.unwrap_or(5),
        },
        SettingArg::Custom => BetaStarSetting::Blocks {
            r1: require(r1, "r1")?,
            r2: require(r2, "r2")?,
            q: require(q, "q")?,
            q_s: require(qs, "qs")?,
        },
    })
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    setting: Option<SettingArg>,
    #[arg(long)]
    r1: Option<usize>,
    #[arg(long)]
    r2: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    qs: Option<usize>,
    /// Observations per split (train, validation, and test each get n).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn cmd_synth(a: &SynthArgs, cfg: &Cfg) -> AppResult<()> {
    let which = resolve!(cfg, "synth", a.setting, "setting").unwrap_or(SettingArg::Eq10);
    let n = resolve!(cfg, "synth", a.n, "n", 100);
    let sigma = resolve!(cfg, "synth", a.sigma, "sigma", 1.0);
    let rho = resolve!(cfg, "synth", a.rho, "rho", 0.2);
    let seed = resolve!(cfg, "synth", a.seed, "seed", 0);
    let out_dir = require(resolve!(cfg, "synth", a.out_dir, "out_dir"), "out-dir")?;

    let setting = setting_from(
        which,
        resolve!(cfg, "synth", a.r1, "r1"),
        resolve!(cfg, "synth", a.r2, "r2"),
        resolve!(cfg, "synth", a.q, "q"),
        resolve!(cfg, "synth", a.qs, "qs"),
    )?;
    let beta_star = datagen::make_beta_star(&setting)?;
    let mut synth_cfg = SynthConfig::equal_split(n, &setting, sigma, seed);
    synth_cfg.rho = rho;
    let data = datagen::generate(&synth_cfg, &beta_star)?;

    std::fs::create_dir_all(&out_dir)?;
    let mut mb = ManifestBuilder::new("synth");
    mb.seed("master", seed);
    for (name, ds) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
        let path = out_dir.join(format!("{name}.csv"));
        lfio::write_dataset_csv(ds, &path)?;
        mb.output(&path);
    }
    let schema_path = out_dir.join("schema.json");
    lfio::spec_for_dataset(&data.train).write(&schema_path)?;
    mb.output(&schema_path);
    let synth_doc = json!({
        "config": synth_cfg,
        "setting": setting,
        "seed": seed,
        "snr": if data.snr.is_finite() { json!(data.snr) } else { json!("inf") },
        "beta_star": lfio::coefficients_to_json(data.train.schema(), &[], &beta_star),
    });
    let synth_path = out_dir.join("synth.json");
    std::fs::write(&synth_path, serde_json::to_string_pretty(&synth_doc).expect("json"))?;
    mb.output(&synth_path);
    mb.write(&out_dir)?;
    println!("snr {}", sig12(data.snr));
    println!("out_dir {}", out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------- benchmark

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    setting: Option<SettingArg>,
    #[arg(long)]
    r1: Option<usize>,
    #[arg(long)]
    r2: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    qs: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Observations per split.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method list: cl-l0 (two penalties), cl (fusion only).
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_benchmark(a: &BenchmarkArgs, cfg: &Cfg) -> AppResult<()> {
    let which = resolve!(cfg, "benchmark", a.setting, "setting").unwrap_or(SettingArg::Eq10);
    let n = resolve!(cfg, "benchmark", a.n, "n", 100);
    let sigma = resolve!(cfg, "benchmark", a.sigma, "sigma", 2.0);
    let rho = resolve!(cfg, "benchmark", a.rho, "rho", 0.2);
    let reps = resolve!(cfg, "benchmark", a.reps, "reps", 50);
    let seed = resolve!(cfg, "benchmark", a.seed, "seed", 0);
    let methods_arg = resolve!(cfg, "benchmark", a.methods, "methods").unwrap_or_else(|| "cl-l0".to_string());
    let out = require(resolve!(cfg, "benchmark", a.out, "out"), "out")?;

    let setting = setting_from(
        which,
        resolve!(cfg, "benchmark", a.r1, "r1"),
        resolve!(cfg, "benchmark", a.r2, "r2"),
        resolve!(cfg, "benchmark", a.q, "q"),
        resolve!(cfg, "benchmark", a.qs, "qs"),
    )?;
    let methods: Vec<MethodSpec> = methods_arg
        .split(',')
        .map(|m| match m.trim() {
            "cl-l0" => Ok(MethodSpec::sparse_fused()),
            "cl" => Ok(MethodSpec::fused_only()),
            other => Err(AppError::Usage(format!("unknown method {other:?}"))),
        })
        .collect::<AppResult<_>>()?;

    let mut synth_cfg = SynthConfig::equal_split(n, &setting, sigma, seed);
    synth_cfg.rho = rho;
    let mut mb = ManifestBuilder::new("benchmark");
    mb.seed("master", seed);
    let result = harness::benchmark(&synth_cfg, &setting, &methods, reps, &BcdConfig::default())?;

    let mut lines = String::new();
    for rec in &result.records {
        lines.push_str(&serde_json::to_string(rec).expect("json"));
        lines.push('\n');
    }
    for agg in &result.aggregates {
        lines.push_str(&serde_json::to_string(agg).expect("json"));
        lines.push('\n');
    }
    std::fs::write(&out, lines)?;
    mb.output(&out);
    mb.write(&out)?;
    for agg in &result.aggregates {
        println!(
            "method {} mean_score {} se {} mean_purity {} levels {}",
            agg.method,
            sig12(agg.mean_score),
            sig12(agg.se_score),
            agg.mean_purity.map_or("n/a".into(), sig12),
            sig12(agg.mean_total_levels),
        );
    }
    println!("total_wall_time_ms {}", sig12(result.total_wall_time_ms));
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Synth manifest holding the true coefficients (enables purity).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Snap tolerance applied to loaded coefficients before cluster metrics.
    #[arg(long)]
    snap: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_eval(a: &EvalArgs, cfg: &Cfg) -> AppResult<()> {
    let coef_path = require(resolve!(cfg, "eval", a.coefficients, "coefficients"), "coefficients")?;
    let data = require(resolve!(cfg, "eval", a.data, "data"), "data")?;
    let schema = require(resolve!(cfg, "eval", a.schema, "schema"), "schema")?;
    let snap = resolve!(cfg, "eval", a.snap, "snap", 1e-9);
    let truth = resolve!(cfg, "eval", a.truth, "truth");

    let started = std::time::Instant::now();
    let (file_schema, file_cont, raw_coef) = lfio::read_coefficients(&coef_path)?;
    let spec = lfio::DataSpec::read(&schema)?;
    let ds = lfio::load_dataset_with_schema(&data, &spec, &file_schema)?;
    let mut coef = lfio::align_coefficients(
        &file_schema,
        &file_cont,
        &raw_coef,
        ds.schema(),
        ds.cont_names(),
    )?;
    if snap > 0.0 {
        coef = metrics::snap_to_clusters(&coef, snap);
    }
    let beta_star = match &truth {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| AppError::Data(format!("truth file: {e}")))?;
            let star = doc
                .get("beta_star")
                .ok_or_else(|| AppError::Data("truth file has no beta_star field".into()))?;
            let tmp = std::env::temp_dir().join(format!("levelfuse-truth-{}.json", std::process::id()));
            std::fs::write(&tmp, serde_json::to_string(star).expect("json"))?;
            let (ts, tc, tcoef) = lfio::read_coefficients(&tmp)?;
            let _ = std::fs::remove_file(&tmp);
            Some(lfio::align_coefficients(&ts, &tc, &tcoef, ds.schema(), ds.cont_names())?)
        }
    };
    let report = metrics::evaluate(
        &ds,
        &coef,
        beta_star.as_ref(),
        started.elapsed().as_secs_f64() * 1e3,
    )?;

    if let Some(r2) = report.r2 {
        println!("r2 {}", sig12(r2));
    }
    if let Some(acc) = report.accuracy {
        println!("accuracy {}", sig12(acc));
    }
    println!("total_levels {}", report.total_levels);
    println!("nonzero_clusters {}", report.nonzero_clusters);
    if let Some(p) = report.purity {
        println!("purity {}", sig12(p));
    }
    if let Some(i) = report.impurity {
        println!("impurity {i}");
    }
    if let Some(d) = report.delta_min {
        println!("delta_min {}", sig12(d));
    }
    if let Some(out) = &a.out {
        let mut mb = ManifestBuilder::new("eval");
        std::fs::write(out, serde_json::to_string_pretty(&report).expect("json"))?;
        mb.output(out);
        mb.write(out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- segment

#[derive(Args)]
struct SegmentArgs {
    /// Two-column CSV (value, weight) with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    /// Output CSV (index, beta).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_segment(a: &SegmentArgs, cfg: &Cfg) -> AppResult<()> {
    let input = require(resolve!(cfg, "segment", a.input, "input"), "input")?;
    let lambda = resolve!(cfg, "segment", a.lambda, "lambda", 0.0);
    let lambda0 = resolve!(cfg, "segment", a.lambda0, "lambda0", 0.0);
    let out = require(resolve!(cfg, "segment", a.out, "out"), "out")?;

    let mut mb = ManifestBuilder::new("segment");
    let (values, weights) = lfio::read_segment_csv(&input)?;
    let sol = dp::dp_seg_pen_l0_unsorted(&values, &weights, lambda0, lambda)?;
    lfio::write_segment_csv(&out, &sol.beta)?;
    mb.output(&out);
    mb.write(&out)?;
    println!("objective {}", sig12(sol.objective));
    println!("jumps {}", sol.jump_count);
    println!("nonzeros {}", sol.nonzero_count);
    Ok(())
}

// ---------------------------------------------------------------- solve-exact

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BackendArg {
    /// Built-in enumerative backend driving row generation.
    Enum,
    /// Export the model for an external solver / import its solution.
    File,
}

#[derive(Args)]
struct SolveExactArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Warm-start coefficients file; defaults to a fresh approximate fit.
    #[arg(long)]
    warm: Option<PathBuf>,
    /// LP model path (file backend).
    #[arg(long)]
    export: Option<PathBuf>,
    /// Solution file from an external solver (file backend).
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long)]
    no_intercept: bool,
    /// Write coefficients and the certificate (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn warm_start(
    ds: &Dataset,
    pen: &PenaltyConfig,
    warm: &Option<PathBuf>,
    fit_intercept: bool,
) -> AppResult<Coefficients> {
    match warm {
        Some(path) => {
            let (fs, fc, coef) = lfio::read_coefficients(path)?;
            Ok(lfio::align_coefficients(&fs, &fc, &coef, ds.schema(), ds.cont_names())?)
        }
        None => {
            let cfg = BcdConfig {
                fit_intercept,
                ..BcdConfig::default()
            };
            Ok(bcd::fit(ds, pen, &cfg)?.coef)
        }
    }
}

fn write_exact_output(
    out: &Option<PathBuf>,
    ds: &Dataset,
    coef: &Coefficients,
    cert: &mip::GapCertificate,
    iterations: Option<usize>,
    command: &str,
) -> AppResult<()> {
    println!("lower_bound {}", sig12(cert.lower_bound));
    println!("upper_bound {}", sig12(cert.upper_bound));
    println!("rel_gap {}", sig12(cert.rel_gap));
    if let Some(it) = iterations {
        println!("iterations {it}");
    }
    println!("total_levels {}", coef.total_levels());
    if let Some(out) = out {
        let mut mb = ManifestBuilder::new(command);
        let doc = json!({
            "certificate": {
                "lower_bound": cert.lower_bound,
                "upper_bound": cert.upper_bound,
                "rel_gap": cert.rel_gap,
            },
            "iterations": iterations,
            "coefficients": lfio::coefficients_to_json(ds.schema(), ds.cont_names(), coef),
        });
        std::fs::write(out, serde_json::to_string_pretty(&doc).expect("json"))?;
        mb.output(out);
        mb.write(out)?;
    }
    Ok(())
}

fn cmd_solve_exact(a: &SolveExactArgs, cfg: &Cfg) -> AppResult<()> {
    let data = require(resolve!(cfg, "solve_exact", a.data, "data"), "data")?;
    let schema = require(resolve!(cfg, "solve_exact", a.schema, "schema"), "schema")?;
    let lambda = resolve!(cfg, "solve_exact", a.lambda, "lambda", 0.0);
    let lambda0 = resolve!(cfg, "solve_exact", a.lambda0, "lambda0", 0.0);
    let backend = resolve!(cfg, "solve_exact", a.backend, "backend").unwrap_or(BackendArg::Enum);
    let max_iterations = resolve!(cfg, "solve_exact", a.max_iterations, "max_iterations", 25);

    let (ds, _) = load_dataset(&data, &schema)?;
    let pen = PenaltyConfig::new(lambda0, lambda)?;
    match backend {
        BackendArg::Enum => {
            let warm = warm_start(&ds, &pen, &a.warm, !a.no_intercept)?;
            let backend = mip::EnumerativeBackend {
                opts: mip::EnumerateOptions {
                    fit_intercept: !a.no_intercept,
                    ..Default::default()
                },
            };
            let res = mip::row_generation(
                &ds,
                &pen,
                &warm,
                &backend,
                &mip::RowGenOptions { max_iterations },
            )?;
            if !res.support_repeated {
                eprintln!("note: iteration budget exhausted; certificate gap is not zero");
            }
            write_exact_output(&a.out, &ds, &res.coef, &res.certificate, Some(res.iterations), "solve-exact")
        }
        BackendArg::File => {
            let warm = warm_start(&ds, &pen, &a.warm, !a.no_intercept)?;
            let big_m = a.big_m.unwrap_or_else(|| mip::choose_big_m(&warm));
            let model = mip::build_mip(&ds, &pen, big_m, &mip::ActivePredictors::All)?;
            if let Some(export) = &a.export {
                mip::export_model(&model, export)?;
                println!("exported {}", export.display());
            }
            match &a.solution {
                None => {
                    if a.export.is_none() {
                        return Err(AppError::Usage(
                            "file backend needs --export (to write the model) or --solution (to import one)".into(),
                        ));
                    }
                    println!("solve the exported model externally, then re-run with --solution");
                    Ok(())
                }
                Some(solution) => {
                    let values = mip::import_solution(solution)?;
                    let coef =
                        mip::coefficients_from_solution(ds.schema(), ds.n_cont(), &values)?;
                    let cert_obj = levelfuse::objective(&ds, &coef, &pen, Loss::Squared)?;
                    // An imported solution carries the external solver's
                    // optimality claim; both bounds are its objective.
                    let cert = mip::GapCertificate::new(cert_obj, cert_obj);
                    write_exact_output(&a.out, &ds, &coef, &cert, None, "solve-exact")
                }
            }
        }
    }
}

// ---------------------------------------------------------------- export-mip

#[derive(Args)]
struct ExportMipArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    big_m: Option<f64>,
    /// Warm-start coefficients; sets big-M when --big-m is absent.
    #[arg(long)]
    warm: Option<PathBuf>,
    /// Restrict pairwise fusion constraints to the warm start's support.
    #[arg(long)]
    warm_support_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_export_mip(a: &ExportMipArgs, cfg: &Cfg) -> AppResult<()> {
    let data = require(resolve!(cfg, "export_mip", a.data, "data"), "data")?;
    let schema = require(resolve!(cfg, "export_mip", a.schema, "schema"), "schema")?;
    let lambda = resolve!(cfg, "export_mip", a.lambda, "lambda", 0.0);
    let lambda0 = resolve!(cfg, "export_mip", a.lambda0, "lambda0", 0.0);
    let out = require(resolve!(cfg, "export_mip", a.out, "out"), "out")?;

    let (ds, _) = load_dataset(&data, &schema)?;
    let pen = PenaltyConfig::new(lambda0, lambda)?;
    let warm = warm_start(&ds, &pen, &a.warm, true)?;
    let big_m = a.big_m.unwrap_or_else(|| mip::choose_big_m(&warm));
    let active = if a.warm_support_only {
        mip::ActivePredictors::Subset(warm.active_predictors().into_iter().collect())
    } else {
        mip::ActivePredictors::All
    };
    let model = mip::build_mip(&ds, &pen, big_m, &active)?;
    let mut mb = ManifestBuilder::new("export-mip");
    mip::export_model(&model, &out)?;
    mb.output(&out);
    mb.write(&out)?;
    println!("variables {}", model.n_beta() + 1 + model.n_z() + model.n_l() + model.n_pair());
    println!("big_m {}", sig12(big_m));
    println!("exported {}", out.display());
    Ok(())
}
