//! Simulation of `W_t = A_t W_{t-1} + B_t` with upper-triangular `A_t`:
//! forward iteration, the truncated backward series, running matrix
//! products and the top Lyapunov exponent.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_model::{check_stationarity, default_eps_grid, CoefficientLaw, Coefficients};
use crate::error::{invalid, Error, Result};
use crate::rng::{chunks, StreamKey};

/// The matrix `[[a, b], [0, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperTri {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl UpperTri {
    pub const IDENTITY: Self = Self { a: 1.0, b: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    /// `self * rhs`.
    #[inline]
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            a: self.a * rhs.a,
            b: self.a * rhs.b + self.b * rhs.d,
            d: self.d * rhs.d,
        }
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.d * v[1]]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            a: self.a * s,
            b: self.b * s,
            d: self.d * s,
        }
    }

    /// Entry `(row, col)`; the lower-left entry is always zero.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        match (row, col) {
            (0, 0) => self.a,
            (0, 1) => self.b,
            (1, 1) => self.d,
            (1, 0) => 0.0,
            _ => panic!("index ({row}, {col}) out of range for a 2x2 matrix"),
        }
    }

    /// Operator 2-norm, the largest singular value.
    pub fn op_norm(&self) -> f64 {
        let (a, b, d) = (self.a, self.b, self.d);
        let fro2 = a * a + b * b + d * d;
        // fro^4 - 4 det^2 factored to avoid cancellation
        let disc = (((a - d) * (a - d) + b * b) * ((a + d) * (a + d) + b * b)).sqrt();
        (0.5 * (fro2 + disc)).sqrt()
    }
}

impl From<&Coefficients> for UpperTri {
    fn from(c: &Coefficients) -> Self {
        Self {
            a: c.a1,
            b: c.a2,
            d: c.a4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub burn_in: usize,
    pub n_draws: usize,
    pub thinning: usize,
    pub truncation_depth: usize,
    pub base_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(invalid("n_draws must be at least 1"));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        Ok(())
    }

    /// Config with burn-in and truncation depth chosen from the law.
    pub fn for_law(law: &CoefficientLaw, n_draws: usize, thinning: usize, base_seed: u64) -> Result<Self> {
        let key = StreamKey::new(base_seed).derive("defaults");
        Ok(Self {
            burn_in: default_burn_in(law, key),
            n_draws,
            thinning,
            truncation_depth: default_truncation_depth(law)?,
            base_seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    ForwardBurnin,
    BackwardTruncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub mode: SampleMode,
    pub config: SimConfig,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.w1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w1.is_empty()
    }

    /// Euclidean norms `|W_t|`.
    pub fn norms(&self) -> Vec<f64> {
        self.w1.iter().zip(&self.w2).map(|(a, b)| a.hypot(*b)).collect()
    }

    fn concat(parts: Vec<PathSample>, mode: SampleMode, config: SimConfig) -> Self {
        let n = parts.iter().map(PathSample::len).sum();
        let mut w1 = Vec::with_capacity(n);
        let mut w2 = Vec::with_capacity(n);
        for p in parts {
            w1.extend(p.w1);
            w2.extend(p.w2);
        }
        Self { w1, w2, mode, config }
    }
}

/// One step of the recursion: `W1 = A1 W1 + D`, `D = B1 + A2 W2`, `W2 = A4 W2 + B2`.
#[inline]
pub fn step(c: &Coefficients, w: [f64; 2]) -> [f64; 2] {
    let d = c.b1 + c.a2 * w[1];
    [c.a1 * w[0] + d, c.a4 * w[1] + c.b2]
}

/// Run one chain from `w0`: discard `burn_in` states, then keep every
/// `thinning`-th state until `n_draws` are collected.
pub fn iterate_forward<R: Rng + ?Sized>(
    law: &CoefficientLaw,
    w0: [f64; 2],
    config: &SimConfig,
    rng: &mut R,
) -> Result<PathSample> {
    config.validate()?;
    if !(w0[0] >= 0.0 && w0[1] >= 0.0 && w0[0].is_finite() && w0[1].is_finite()) {
        return Err(invalid(format!("initial state must be finite and nonnegative, got {w0:?}")));
    }
    let mut w1 = Vec::with_capacity(config.n_draws);
    let mut w2 = Vec::with_capacity(config.n_draws);
    let mut w = w0;
    let total = config.burn_in + config.n_draws * config.thinning;
    for t in 1..=total {
        w = step(&law.draw(rng), w);
        if !(w[0].is_finite() && w[1].is_finite()) {
            return Err(Error::NonFiniteState { step: t });
        }
        if t > config.burn_in && (t - config.burn_in) % config.thinning == 0 {
            w1.push(w[0]);
            w2.push(w[1]);
        }
    }
    Ok(PathSample {
        w1,
        w2,
        mode: SampleMode::ForwardBurnin,
        config: *config,
    })
}

/// Approximately stationary draws from many independent forward chains,
/// each started at zero and run through the burn-in. Chain `c` covers draws
/// `[c * CHUNK, (c + 1) * CHUNK)` and uses stream `c` of `key`.
pub fn stationary_draws(law: &CoefficientLaw, config: &SimConfig, key: StreamKey) -> Result<PathSample> {
    config.validate()?;
    let parts: Vec<Result<PathSample>> = chunks(config.n_draws)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let cfg = SimConfig {
                n_draws: e - s,
                ..*config
            };
            iterate_forward(law, [0.0, 0.0], &cfg, &mut key.rng(c))
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PathSample::concat(parts, SampleMode::ForwardBurnin, *config))
}

/// One draw of `sum_{k < depth} A_t ... A_{t-k+1} B_{t-k}`, accumulated from
/// the deepest term.
fn backward_draw<R: Rng + ?Sized>(law: &CoefficientLaw, depth: usize, rng: &mut R, terms: &mut Vec<[f64; 2]>) -> [f64; 2] {
    terms.clear();
    let mut prefix = UpperTri::IDENTITY;
    for _ in 0..depth {
        let c = law.draw(rng);
        terms.push(prefix.apply([c.b1, c.b2]));
        prefix = prefix.mul(&UpperTri::from(&c));
    }
    terms.iter().rev().fold([0.0, 0.0], |acc, t| [acc[0] + t[0], acc[1] + t[1]])
}

/// `n_draws` independent draws of the stationary vector from the backward
/// series truncated at `truncation_depth` terms.
pub fn backward_truncated(law: &CoefficientLaw, config: &SimConfig, key: StreamKey) -> Result<PathSample> {
    config.validate()?;
    if config.truncation_depth == 0 {
        return Err(invalid("truncation_depth must be at least 1"));
    }
    let parts: Vec<PathSample> = chunks(config.n_draws)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            let mut terms = Vec::with_capacity(config.truncation_depth);
            let (mut w1, mut w2) = (Vec::with_capacity(e - s), Vec::with_capacity(e - s));
            for _ in s..e {
                let w = backward_draw(law, config.truncation_depth, &mut rng, &mut terms);
                w1.push(w[0]);
                w2.push(w[1]);
            }
            PathSample {
                w1,
                w2,
                mode: SampleMode::BackwardTruncated,
                config: *config,
            }
        })
        .collect();
    Ok(PathSample::concat(parts, SampleMode::BackwardTruncated, *config))
}

/// Running products `Pi_t = A_t ... A_1`, with `Pi_0 = I` at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductChain {
    pub pi1: Vec<f64>,
    pub pi4: Vec<f64>,
    pub pi_mat: Vec<UpperTri>,
}

impl ProductChain {
    pub fn from_coefficients(coeffs: &[Coefficients]) -> Self {
        let h = coeffs.len();
        let mut chain = Self {
            pi1: Vec::with_capacity(h + 1),
            pi4: Vec::with_capacity(h + 1),
            pi_mat: Vec::with_capacity(h + 1),
        };
        chain.pi1.push(1.0);
        chain.pi4.push(1.0);
        chain.pi_mat.push(UpperTri::IDENTITY);
        for c in coeffs {
            let m = UpperTri::from(c).mul(chain.pi_mat.last().unwrap());
            chain.pi1.push(c.a1 * chain.pi1.last().unwrap());
            chain.pi4.push(c.a4 * chain.pi4.last().unwrap());
            chain.pi_mat.push(m);
        }
        chain
    }

    /// Number of factors in the longest product.
    pub fn horizon(&self) -> usize {
        self.pi_mat.len() - 1
    }
}

pub fn product_chain<R: Rng + ?Sized>(law: &CoefficientLaw, h: usize, rng: &mut R) -> Result<ProductChain> {
    if h == 0 {
        return Err(invalid("product horizon must be at least 1"));
    }
    let coeffs: Vec<Coefficients> = (0..h).map(|_| law.draw(rng)).collect();
    Ok(ProductChain::from_coefficients(&coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub gamma_hat: f64,
    /// Infinite when a single random chain gives no spread to measure.
    pub std_error: f64,
    /// `eps^-1 log rho` from the stationarity witness, `+inf` without one.
    pub upper_bound: f64,
    /// Product length actually used per chain.
    pub n: u64,
    pub n_chains: usize,
}

/// Steps between renormalizations of a running product.
pub const RENORM_INTERVAL: usize = 64;

/// Product length used for laws without randomness, reached by squaring.
pub const DETERMINISTIC_LOG2_LENGTH: u32 = 40;

fn log_norm_of_power(m: UpperTri, log2_len: u32) -> f64 {
    let s = m.op_norm();
    let mut m = m.scale(1.0 / s);
    let mut log_scale = s.ln();
    for _ in 0..log2_len {
        m = m.mul(&m);
        log_scale *= 2.0;
        let s = m.op_norm();
        m = m.scale(1.0 / s);
        log_scale += s.ln();
    }
    log_scale
}

/// `n^-1 log |A_n ... A_1|` along one chain.
fn chain_log_growth<R: Rng + ?Sized>(law: &CoefficientLaw, n: usize, rng: &mut R) -> f64 {
    let mut m = UpperTri::IDENTITY;
    let mut log_scale = 0.0;
    for t in 1..=n {
        m = UpperTri::from(&law.draw(rng)).mul(&m);
        if t % RENORM_INTERVAL == 0 {
            let s = m.op_norm();
            m = m.scale(1.0 / s);
            log_scale += s.ln();
        }
    }
    (log_scale + m.op_norm().ln()) / n as f64
}

/// Estimate of the top Lyapunov exponent `inf_n n^-1 E log |Pi_n|`.
///
/// A law with no randomness has `Pi_n = A^n`; its product is formed by
/// repeated squaring to length `2^40` (or `n`'s power-of-two ceiling when
/// larger) so that the `log(n)/n` bias of the finite product is negligible.
pub fn lyapunov_estimate(law: &CoefficientLaw, n: usize, n_chains: usize, key: StreamKey) -> Result<LyapunovEstimate> {
    law.validate()?;
    if n < 100 {
        return Err(invalid("product length must be at least 100"));
    }
    if n_chains == 0 {
        return Err(invalid("need at least one chain"));
    }
    let upper_bound = check_stationarity(law, &default_eps_grid())?.lyapunov_bound();
    if law.is_deterministic() {
        let a = UpperTri::from(&law.draw(&mut key.rng(0)));
        let log2_len = DETERMINISTIC_LOG2_LENGTH.max(usize::BITS - (n - 1).leading_zeros());
        let len = 2f64.powi(log2_len as i32);
        return Ok(LyapunovEstimate {
            gamma_hat: log_norm_of_power(a, log2_len) / len,
            std_error: 0.0,
            upper_bound,
            n: 1u64 << log2_len,
            n_chains,
        });
    }
    let per_chain: Vec<f64> = (0..n_chains as u64)
        .into_par_iter()
        .map(|c| chain_log_growth(law, n, &mut key.rng(c)))
        .collect();
    let k = n_chains as f64;
    let mean = per_chain.iter().sum::<f64>() / k;
    let std_error = if n_chains > 1 {
        let var = per_chain.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(LyapunovEstimate {
        gamma_hat: mean,
        std_error,
        upper_bound,
        n: n as u64,
        n_chains,
    })
}

/// Fallback burn-in when the Lyapunov exponent is not negative.
pub const FALLBACK_BURN_IN: usize = 10_000;

/// Burn-in of `10 / |gamma|` steps from a short Lyapunov run, capped at 10^7.
pub fn default_burn_in(law: &CoefficientLaw, key: StreamKey) -> usize {
    match lyapunov_estimate(law, 2_000, 16, key) {
        Ok(est) if est.gamma_hat < 0.0 => (10.0 / est.gamma_hat.abs()).ceil().min(1e7) as usize,
        _ => FALLBACK_BURN_IN,
    }
}

/// Target size of the neglected tail of the backward series, in `eps`-th moment.
pub const TRUNCATION_TARGET: f64 = 1e-8;

/// Smallest depth with `rho^depth < 1e-8` at the stationarity witness.
pub fn default_truncation_depth(law: &CoefficientLaw) -> Result<usize> {
    let report = check_stationarity(law, &default_eps_grid())?;
    if !report.holds {
        return Err(Error::NotStationary);
    }
    Ok(((TRUNCATION_TARGET.ln() / report.rho.ln()).ceil() as usize).max(1))
}
