//! Spectral measures and spectral processes of the stationary solution.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_model::{solve_tail_index, CoefficientLaw, MomentBudget, HYPOTHESIS_TOL};
use crate::error::{invalid, Error, Result};
use crate::rng::{chunks, StreamKey};
use crate::sre_engine::{PathSample, ProductChain};
use crate::tail_stats::{empirical_quantile, ks_one_sample, ks_weighted, KsResult};

/// Weighted sample of points on the unit sphere of `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularSample {
    pub dim: usize,
    /// Row-major `len * dim` coordinates.
    pub points: Vec<f64>,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    /// Norm threshold for threshold estimators; `None` for weighted ones.
    pub threshold_u: Option<f64>,
    pub n_exceedances: usize,
}

impl AngularSample {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.points.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Weighted mean point.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (i, w) in self.weights.iter().enumerate() {
            for (mj, pj) in m.iter_mut().zip(self.point(i)) {
                *mj += w * pj;
            }
        }
        m
    }

    /// Index drawn with probability proportional to its weight.
    fn pick<R: Rng + ?Sized>(&self, cumulative: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
        cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
    }
}

/// Minimum exceedance count for threshold estimators.
pub const MIN_EXCEEDANCES: usize = 200;

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    for w in weights {
        *w /= total;
    }
}

/// Threshold estimator on arbitrary vectors: `v / |v|` for every row with
/// `|v|` above its empirical `u_quantile`, uniformly weighted.
pub fn threshold_angles(rows: &[f64], dim: usize, u_quantile: f64) -> Result<AngularSample> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(invalid("row data does not match dimension"));
    }
    if !(u_quantile > 0.0 && u_quantile < 1.0) {
        return Err(invalid(format!("quantile must lie in (0, 1), got {u_quantile}")));
    }
    let norms: Vec<f64> = rows.chunks_exact(dim).map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if norms.is_empty() {
        return Err(Error::TooFewExceedances {
            found: 0,
            needed: MIN_EXCEEDANCES,
        });
    }
    let threshold = empirical_quantile(&norms, u_quantile);
    let mut points = Vec::new();
    for (row, &norm) in rows.chunks_exact(dim).zip(&norms) {
        if norm > threshold {
            points.extend(row.iter().map(|x| x / norm));
        }
    }
    let found = points.len() / dim;
    if found < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found,
            needed: MIN_EXCEEDANCES,
        });
    }
    Ok(AngularSample {
        dim,
        points,
        weights: vec![1.0 / found as f64; found],
        threshold_u: Some(threshold),
        n_exceedances: found,
    })
}

/// Angles `W / |W|` of the draws whose norm exceeds the `u_quantile` of `|W|`.
pub fn angular_measure_threshold(draws: &PathSample, u_quantile: f64) -> Result<AngularSample> {
    let rows: Vec<f64> = draws.w1.iter().zip(&draws.w2).flat_map(|(a, b)| [*a, *b]).collect();
    threshold_angles(&rows, 2, u_quantile)
}

/// Consecutive windows `(x_{t+1}, ..., x_{t+h})` of a scalar series made of
/// independent segments of `segment_len` points, row-major. Windows never
/// straddle two segments.
pub fn windows(series: &[f64], h: usize, segment_len: usize) -> Vec<f64> {
    if h == 0 || segment_len == 0 {
        return Vec::new();
    }
    series
        .chunks(segment_len)
        .filter(|seg| seg.len() >= h)
        .flat_map(|seg| seg.windows(h).flat_map(|w| w.iter().copied()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// `W1`, driven by products of `A1`.
    First,
    /// `W2`, driven by products of `A4`.
    Second,
}

/// Weighted estimator of the spectral measure of `(W_{i,1}, ..., W_{i,h})`:
/// points `Xi / |Xi|` with `Xi = (Pi_1, ..., Pi_h)` the scalar products of
/// `A1` (or `A4`), weighted by `|Xi|^alpha_i`.
pub fn componentwise_spectral(
    law: &CoefficientLaw,
    alpha_i: f64,
    h: usize,
    n: usize,
    key: StreamKey,
    component: Component,
) -> Result<AngularSample> {
    law.validate()?;
    if h == 0 || n == 0 {
        return Err(invalid("need h >= 1 and n >= 1"));
    }
    let parts: Vec<(Vec<f64>, Vec<f64>)> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            let mut pts = Vec::with_capacity((e - s) * h);
            let mut ws = Vec::with_capacity(e - s);
            let mut xi = vec![0.0; h];
            for _ in s..e {
                let mut p = 1.0;
                for x in xi.iter_mut() {
                    let c = law.draw(&mut rng);
                    p *= match component {
                        Component::First => c.a1,
                        Component::Second => c.a4,
                    };
                    *x = p;
                }
                let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                pts.extend(xi.iter().map(|x| x / norm));
                ws.push(norm.powf(alpha_i));
            }
            (pts, ws)
        })
        .collect();
    let mut points = Vec::with_capacity(n * h);
    let mut weights = Vec::with_capacity(n);
    for (p, w) in parts {
        points.extend(p);
        weights.extend(w);
    }
    normalize(&mut weights);
    Ok(AngularSample {
        dim: h,
        points,
        weights,
        threshold_u: None,
        n_exceedances: n,
    })
}

/// One draw of the limit `Y (Pi_1 Theta_0, ..., Pi_h Theta_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProcessDraw {
    pub y0_norm: f64,
    pub theta0: [f64; 2],
    /// `Pi_t Theta_0` for `t = 1..h`.
    pub path: Vec<[f64; 2]>,
}

impl SpectralProcessDraw {
    /// `Y Pi_t Theta_0` for `t = 1..h`.
    pub fn limit(&self) -> Vec<[f64; 2]> {
        self.path.iter().map(|p| [self.y0_norm * p[0], self.y0_norm * p[1]]).collect()
    }
}

/// Exact Pareto draw with `P(Y > y) = y^-alpha`, `y > 1`.
pub fn pareto<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    u.powf(-1.0 / alpha)
}

/// Draws of the limiting spectral process when `alpha1 > alpha2`. Each draw
/// combines a Pareto(`alpha2`) radius, an angle from `angular` and an
/// independent product chain, all mutually independent.
pub fn spectral_process_draws(
    law: &CoefficientLaw,
    alpha2: f64,
    h: usize,
    n: usize,
    angular: &AngularSample,
    key: StreamKey,
) -> Result<Vec<SpectralProcessDraw>> {
    let m = law.marginals();
    let alpha1 = solve_tail_index(&m.a1, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    let root2 = solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    if alpha1 <= root2 {
        return Err(Error::RegimeMismatch(format!("needs alpha1 > alpha2, got {alpha1} <= {root2}")));
    }
    if angular.is_empty() || angular.dim != 2 {
        return Err(invalid("angular sample must be a nonempty set of planar points"));
    }
    let mut cumulative = angular.weights.clone();
    for i in 1..cumulative.len() {
        cumulative[i] += cumulative[i - 1];
    }
    let parts: Vec<Vec<SpectralProcessDraw>> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            (s..e)
                .map(|_| {
                    let y0_norm = pareto(alpha2, &mut rng);
                    let p = angular.point(angular.pick(&cumulative, &mut rng));
                    let theta0 = [p[0], p[1]];
                    let coeffs: Vec<_> = (0..h).map(|_| law.draw(&mut rng)).collect();
                    let chain = ProductChain::from_coefficients(&coeffs);
                    let path = chain.pi_mat[1..].iter().map(|m| m.apply(theta0)).collect();
                    SpectralProcessDraw { y0_norm, theta0, path }
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Windows `x^-1 (W_{t+1}, ..., W_{t+h})` following each `t` with `|W_t|`
/// above the `u_quantile` of `|W|`. The path is read as consecutive
/// segments of `segment_len` states, as produced by multi-chain samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalWindows {
    pub threshold: f64,
    pub h: usize,
    /// `|W_t| / x` for each exceedance.
    pub w0_scaled_norms: Vec<f64>,
    /// Row-major: exceedance, then step `1..=h`, then coordinate.
    pub values: Vec<f64>,
}

impl ConditionalWindows {
    pub fn len(&self) -> usize {
        self.w0_scaled_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w0_scaled_norms.is_empty()
    }

    /// Coordinate `comp` (0 or 1) at step `t` (1-based) across exceedances.
    pub fn coordinate(&self, t: usize, comp: usize) -> Vec<f64> {
        let stride = 2 * self.h;
        self.values.chunks_exact(stride).map(|r| r[2 * (t - 1) + comp]).collect()
    }

    /// Euclidean norm of the whole window.
    pub fn window_norms(&self) -> Vec<f64> {
        self.values
            .chunks_exact(2 * self.h)
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

pub fn conditional_windows(path: &PathSample, h: usize, u_quantile: f64, segment_len: usize) -> Result<ConditionalWindows> {
    if h == 0 || segment_len == 0 {
        return Err(invalid("window and segment lengths must be at least 1"));
    }
    let norms = path.norms();
    if norms.len() <= h {
        return Err(Error::TooFewExceedances {
            found: 0,
            needed: MIN_EXCEEDANCES,
        });
    }
    let x = empirical_quantile(&norms, u_quantile);
    let mut w0 = Vec::new();
    let mut values = Vec::new();
    for t in 0..norms.len() - h {
        if norms[t] > x && t % segment_len + h < segment_len {
            w0.push(norms[t] / x);
            for s in 1..=h {
                values.push(path.w1[t + s] / x);
                values.push(path.w2[t + s] / x);
            }
        }
    }
    if w0.len() < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found: w0.len(),
            needed: MIN_EXCEEDANCES,
        });
    }
    Ok(ConditionalWindows {
        threshold: x,
        h,
        w0_scaled_norms: w0,
        values,
    })
}

/// Two-sample KS distance per scalar functional between conditioned
/// windows and limit draws: each coordinate at each step, then the norm.
pub fn compare_with_limit(windows: &ConditionalWindows, draws: &[SpectralProcessDraw]) -> Vec<(String, KsResult)> {
    let h = windows.h;
    let limits: Vec<Vec<[f64; 2]>> = draws.iter().map(SpectralProcessDraw::limit).collect();
    let mut out = Vec::with_capacity(2 * h + 1);
    for t in 1..=h {
        for comp in 0..2 {
            let sim = windows.coordinate(t, comp);
            let lim: Vec<f64> = limits.iter().map(|l| l[t - 1][comp]).collect();
            out.push((format!("w{}_step{t}", comp + 1), ks_weighted(&sim, None, &lim, None)));
        }
    }
    let lim_norms: Vec<f64> = limits
        .iter()
        .map(|l| l.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>().sqrt())
        .collect();
    out.push(("norm".to_string(), ks_weighted(&windows.window_norms(), None, &lim_norms, None)));
    out
}

/// KS test of the generated radii against the exact Pareto law.
pub fn pareto_radius_check(draws: &[SpectralProcessDraw], alpha: f64) -> KsResult {
    let radii: Vec<f64> = draws.iter().map(|d| d.y0_norm).collect();
    ks_one_sample(&radii, |y| if y <= 1.0 { 0.0 } else { 1.0 - y.powf(-alpha) })
}

/// Weighted KS distance between the first coordinates of two angular samples.
pub fn angular_distance(a: &AngularSample, b: &AngularSample) -> KsResult {
    ks_weighted(&a.coordinate(0), Some(&a.weights), &b.coordinate(0), Some(&b.weights))
}
