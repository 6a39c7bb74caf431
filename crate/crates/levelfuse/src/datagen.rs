//! Synthetic data: correlated categorical covariates through a Gaussian
//! copula, block-structured true coefficients, and noise with a recorded
//! signal-to-noise ratio.

use crate::coefficients::Coefficients;
use crate::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::schema::CategoricalSchema;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Shapes of the true coefficient vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaStarSetting {
    /// Active predictors get `(-2 x r1, 0 x r2, 2 x r1)`; the rest are zero.
    Blocks {
        r1: usize,
        r2: usize,
        q: usize,
        q_s: usize,
    },
    /// Active predictors get `(-2, -2, 0, 0, 0)`.
    PairZero { q: usize, q_s: usize },
    /// Active predictors get `(1, 2, 3, 0, 0)`: no clustering among nonzeros.
    Staircase { q: usize, q_s: usize },
}

impl BetaStarSetting {
    pub fn q(&self) -> usize {
        match self {
            BetaStarSetting::Blocks { q, .. }
            | BetaStarSetting::PairZero { q, .. }
            | BetaStarSetting::Staircase { q, .. } => *q,
        }
    }

    pub fn levels_per_predictor(&self) -> usize {
        match self {
            BetaStarSetting::Blocks { r1, r2, .. } => 2 * r1 + r2,
            BetaStarSetting::PairZero { .. } | BetaStarSetting::Staircase { .. } => 5,
        }
    }
}

/// Builds the true coefficients for a setting; the intercept is zero.
pub fn make_beta_star(setting: &BetaStarSetting) -> Result<Coefficients> {
    let (q, q_s) = match setting {
        BetaStarSetting::Blocks { q, q_s, .. }
        | BetaStarSetting::PairZero { q, q_s }
        | BetaStarSetting::Staircase { q, q_s } => (*q, *q_s),
    };
    if q_s > q || q == 0 {
        return Err(Error::InvalidParameter(
            "active predictor count must satisfy 0 < q_s <= q".into(),
        ));
    }
    let active_block: Vec<f64> = match setting {
        BetaStarSetting::Blocks { r1, r2, .. } => {
            if *r1 == 0 {
                return Err(Error::InvalidParameter("r1 must be positive".into()));
            }
            let mut b = vec![-2.0; *r1];
            b.extend(std::iter::repeat(0.0).take(*r2));
            b.extend(std::iter::repeat(2.0).take(*r1));
            b
        }
        BetaStarSetting::PairZero { .. } => vec![-2.0, -2.0, 0.0, 0.0, 0.0],
        BetaStarSetting::Staircase { .. } => vec![1.0, 2.0, 3.0, 0.0, 0.0],
    };
    let width = active_block.len();
    let theta_cat = (0..q)
        .map(|j| {
            if j < q_s {
                active_block.clone()
            } else {
                vec![0.0; width]
            }
        })
        .collect();
    Ok(Coefficients {
        alpha: 0.0,
        theta_cat,
        theta_cont: vec![],
    })
}

/// Standard normal rows from the one-factor construction
/// `z_j = rho g0 + sqrt(1 - rho^2) g_j`, so `rho` is the shared-factor
/// loading and the pairwise latent correlation is `rho^2`. This matches the
/// realized signal-to-noise ratios of the reference experiments.
pub fn sample_latents(n: usize, q: usize, rho: f64, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let a = rho;
    let b = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let g0: f64 = StandardNormal.sample(rng);
            (0..q)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(rng);
                    a * g0 + b * g
                })
                .collect()
        })
        .collect()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Draws level codes: correlated Gaussians pushed through the normal CDF and
/// binned uniformly into `p_levels[j]` categories. Codes are 1-based.
pub fn gen_categorical(
    n: usize,
    q: usize,
    p_levels: &[usize],
    rho: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<Vec<u32>>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(
            "correlation must lie in [0, 1)".into(),
        ));
    }
    if p_levels.len() != q || p_levels.iter().any(|&p| p == 0) {
        return Err(Error::InvalidParameter("bad level counts".into()));
    }
    let latents = sample_latents(n, q, rho, rng);
    let mut codes = vec![Vec::with_capacity(n); q];
    for row in &latents {
        for (j, &z) in row.iter().enumerate() {
            let u = normal_cdf(z);
            let p = p_levels[j];
            let code = (1 + (u * p as f64).floor() as usize).min(p);
            codes[j].push(code as u32);
        }
    }
    Ok(codes)
}

/// Adds Gaussian noise to a signal vector and reports the realized
/// signal-to-noise ratio (infinity when `sigma == 0`).
pub fn gen_response(signal: &[f64], sigma: f64, rng: &mut ChaCha12Rng) -> (Vec<f64>, f64) {
    if sigma == 0.0 {
        return (signal.to_vec(), f64::INFINITY);
    }
    let noise: Vec<f64> = (0..signal.len())
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sigma * g
        })
        .collect();
    let y: Vec<f64> = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
    let signal_sq: f64 = signal.iter().map(|v| v * v).sum();
    let noise_sq: f64 = noise.iter().map(|v| v * v).sum();
    let snr = if noise_sq == 0.0 {
        f64::INFINITY
    } else {
        signal_sq / noise_sq
    };
    (y, snr)
}

/// Full synthetic experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub levels: Vec<usize>,
    pub rho: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Equal three-way split with `n` observations in each block, the usual
    /// protocol for the block settings.
    pub fn equal_split(n: usize, setting: &BetaStarSetting, sigma: f64, seed: u64) -> Self {
        Self {
            n_train: n,
            n_val: n,
            n_test: n,
            levels: vec![setting.levels_per_predictor(); setting.q()],
            rho: 0.2,
            sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub beta_star: Coefficients,
    /// Realized signal-to-noise ratio over all generated rows.
    pub snr: f64,
}

const COVARIATE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Derives an independent sub-seed for a named stream so covariates, noise,
/// and replications draw from separate generators.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_mul(0x9E3779B97F4A7C15))
}

/// Generates train/validation/test blocks of fresh observations under a
/// shared schema; fully reproducible from `(config, beta_star, seed)`.
pub fn generate(cfg: &SynthConfig, beta_star: &Coefficients) -> Result<SynthData> {
    let q = cfg.levels.len();
    if beta_star.theta_cat.len() != q
        || beta_star
            .theta_cat
            .iter()
            .zip(&cfg.levels)
            .any(|(b, &w)| b.len() != w)
    {
        return Err(Error::DimensionMismatch(
            "true coefficients do not match the level counts".into(),
        ));
    }
    if cfg.sigma < 0.0 {
        return Err(Error::InvalidParameter("sigma must be non-negative".into()));
    }
    let n_total = cfg.n_train + cfg.n_val + cfg.n_test;
    if cfg.n_train == 0 || n_total == 0 {
        return Err(Error::InvalidParameter("empty split".into()));
    }

    let mut cov_rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, COVARIATE_STREAM));
    let codes = gen_categorical(n_total, q, &cfg.levels, cfg.rho, &mut cov_rng)?;
    let signal: Vec<f64> = (0..n_total)
        .map(|i| {
            beta_star.alpha
                + (0..q)
                    .map(|j| beta_star.theta_cat[j][codes[j][i] as usize - 1])
                    .sum::<f64>()
        })
        .collect();
    let mut noise_rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, NOISE_STREAM));
    let (y, snr) = gen_response(&signal, cfg.sigma, &mut noise_rng);

    let schema = CategoricalSchema::with_widths(&cfg.levels)?;
    let slice = |lo: usize, hi: usize| -> Result<Dataset> {
        Dataset::new(
            schema.clone(),
            codes.iter().map(|c| c[lo..hi].to_vec()).collect(),
            vec![],
            vec![],
            y[lo..hi].to_vec(),
            Task::Regression,
        )
    };
    let a = cfg.n_train;
    let b = cfg.n_train + cfg.n_val;
    Ok(SynthData {
        train: slice(0, a)?,
        val: slice(a, b)?,
        test: slice(b, n_total)?,
        beta_star: beta_star.clone(),
        snr,
    })
}
