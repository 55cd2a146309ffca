//! Tail-index and tail-constant estimators, regular-variation diagnostics and
//! Kolmogorov–Smirnov comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailEstimator {
    Hill,
    CcdfSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub std_error: f64,
    pub k: usize,
    pub n: usize,
    pub estimator: TailEstimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConstantEstimate {
    pub c_hat: f64,
    pub x_grid: Vec<f64>,
    pub plateau_values: Vec<f64>,
    pub dispersion: f64,
}

/// `floor(n^0.6)`, capped at `n / 10` and at least 2.
pub fn default_k(n: usize) -> usize {
    let k = (n as f64).powf(0.6).floor() as usize;
    k.min(n / 10).max(2)
}

fn check_positive(sample: &[f64]) -> Result<()> {
    match sample.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(x) => Err(invalid(format!("sample values must be positive and finite, got {x}"))),
        None => Ok(()),
    }
}

/// Hill estimator from the top `k` order statistics.
pub fn hill(sample: &[f64], k: usize) -> Result<TailEstimate> {
    let n = sample.len();
    if k < 2 || k >= n {
        return Err(invalid(format!("need 2 <= k < n, got k = {k}, n = {n}")));
    }
    check_positive(sample)?;
    let mut work = sample.to_vec();
    let (_, pivot, top) = work.select_nth_unstable_by(n - k - 1, f64::total_cmp);
    let pivot = *pivot;
    let sum: f64 = top.iter().map(|x| (x / pivot).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateTail);
    }
    let alpha_hat = k as f64 / sum;
    Ok(TailEstimate {
        alpha_hat,
        std_error: alpha_hat / (k as f64).sqrt(),
        k,
        n,
        estimator: TailEstimator::Hill,
    })
}

/// Minimum number of points above the lower threshold of a tail grid.
pub const MIN_TAIL_POINTS: usize = 50;

/// Number of thresholds on a tail grid.
pub const GRID_POINTS: usize = 25;

/// The upper part of a sample, sorted, with empirical CCDF lookups.
struct UpperTail {
    n: usize,
    sorted: Vec<f64>,
}

/// 0-based index of the empirical `q`-quantile, `X_(ceil(q n))`.
fn quantile_index(n: usize, q: f64) -> usize {
    ((q * n as f64).ceil() as usize).clamp(1, n) - 1
}

impl UpperTail {
    fn new(sample: &[f64], lo: f64) -> Self {
        let n = sample.len();
        let start = quantile_index(n, lo);
        let mut work = sample.to_vec();
        let sorted = if start > 0 {
            work.select_nth_unstable_by(start, f64::total_cmp);
            let mut top = work.split_off(start);
            top.sort_unstable_by(f64::total_cmp);
            top
        } else {
            work.sort_unstable_by(f64::total_cmp);
            work
        };
        Self { n, sorted }
    }

    fn quantile(&self, q: f64) -> f64 {
        let start = self.n - self.sorted.len();
        self.sorted[quantile_index(self.n, q) - start]
    }

    /// `#{X > x} / n`, valid for `x` at or above the stored part.
    fn ccdf(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= x);
        (self.sorted.len() - below) as f64 / self.n as f64
    }

    fn count_above(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&v| v <= x)
    }

    /// Log-spaced thresholds from the `lo` to the `hi` quantile.
    fn grid(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let x_lo = self.quantile(lo);
        let x_hi = self.quantile(hi);
        let found = self.count_above(x_lo);
        if found < MIN_TAIL_POINTS {
            return Err(Error::EmptyTail {
                found,
                needed: MIN_TAIL_POINTS,
            });
        }
        let ratio = x_hi / x_lo;
        let last = (GRID_POINTS - 1) as f64;
        Ok((0..GRID_POINTS)
            .map(|j| match j {
                0 => x_lo,
                j if j == GRID_POINTS - 1 => x_hi,
                j => x_lo * ratio.powf(j as f64 / last),
            })
            .collect())
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(0.5 <= lo && lo < hi && hi < 1.0) {
        return Err(invalid(format!("quantile range must satisfy 0.5 <= lo < hi < 1, got ({lo}, {hi})")));
    }
    Ok(())
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Empirical `q`-quantile `X_(ceil(q n))` of an unsorted sample.
pub fn empirical_quantile(sample: &[f64], q: f64) -> f64 {
    let mut work = sample.to_vec();
    let i = quantile_index(work.len(), q);
    *work.select_nth_unstable_by(i, f64::total_cmp).1
}

/// Plateau estimate of `c` in `P(X > x) ~ c x^-alpha`: the median of
/// `x^alpha * P(X > x)` over a log-spaced grid between the `lo` and `hi`
/// empirical quantiles.
pub fn tail_constant(sample: &[f64], alpha: f64, quantile_range: (f64, f64)) -> Result<TailConstantEstimate> {
    let (lo, hi) = quantile_range;
    check_range(lo, hi)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    check_positive(sample)?;
    let tail = UpperTail::new(sample, lo);
    let x_grid = tail.grid(lo, hi)?;
    let plateau_values: Vec<f64> = x_grid.iter().map(|&x| x.powf(alpha) * tail.ccdf(x)).collect();
    let mut sorted = plateau_values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let c_hat = sorted_quantile(&sorted, 0.5);
    let dispersion = (sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25)) / c_hat;
    Ok(TailConstantEstimate {
        c_hat,
        x_grid,
        plateau_values,
        dispersion,
    })
}

/// `P(X > c x) / P(X > x)` across the tail grid; tends to `c^-alpha` under
/// regular variation with index `alpha`.
pub fn rv_ratio_diagnostic(sample: &[f64], c: f64, threshold_quantiles: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = threshold_quantiles;
    check_range(lo, hi)?;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(invalid(format!("ratio factor must be at least 1, got {c}")));
    }
    check_positive(sample)?;
    let tail = UpperTail::new(sample, lo);
    Ok(tail
        .grid(lo, hi)?
        .into_iter()
        .map(|x| (x, tail.ccdf(c * x) / tail.ccdf(x)))
        .collect())
}

/// Least-squares slope of `log P(X > x)` against `log x` on the tail grid.
pub fn ccdf_slope(sample: &[f64], quantile_range: (f64, f64)) -> Result<TailEstimate> {
    let (lo, hi) = quantile_range;
    check_range(lo, hi)?;
    check_positive(sample)?;
    let tail = UpperTail::new(sample, lo);
    let pts: Vec<(f64, f64)> = tail
        .grid(lo, hi)?
        .into_iter()
        .map(|x| (x.ln(), tail.ccdf(x)))
        .filter(|&(_, p)| p > 0.0)
        .map(|(lx, p)| (lx, p.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 3 {
        return Err(Error::DegenerateTail);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateTail);
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let n = sample.len();
    Ok(TailEstimate {
        alpha_hat: -slope,
        std_error: (resid / (m - 2.0) / sxx).sqrt(),
        k: tail.count_above(tail.quantile(lo)),
        n,
        estimator: TailEstimator::CcdfSlope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
    /// Effective sample size entering the p-value.
    pub n_eff: f64,
}

impl KsResult {
    fn new(statistic: f64, n_eff: f64) -> Self {
        let s = n_eff.sqrt();
        Self {
            statistic,
            p_value: kolmogorov_sf((s + 0.12 + 0.11 / s) * statistic),
            n_eff,
        }
    }

    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (1..=20)
            .map(|k| {
                let j = f64::from(2 * k - 1);
                (-j * j * c).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let sum: f64 = (1..=100)
        .map(|k| {
            let k = f64::from(k);
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// One-sample test of `sample` against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let xs = sorted_copy(sample);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsResult::new(d, n)
}

/// Sup distance between two weighted empirical CDFs; the effective sizes
/// are Kish's `(sum w)^2 / sum w^2`.
pub fn ks_weighted(a: &[f64], wa: Option<&[f64]>, b: &[f64], wb: Option<&[f64]>) -> KsResult {
    let prep = |xs: &[f64], ws: Option<&[f64]>| -> (Vec<(f64, f64)>, f64) {
        let mut pts: Vec<(f64, f64)> = match ws {
            Some(w) => xs.iter().copied().zip(w.iter().copied()).collect(),
            None => xs.iter().map(|&x| (x, 1.0)).collect(),
        };
        pts.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let sq: f64 = pts.iter().map(|p| p.1 * p.1).sum();
        for p in &mut pts {
            p.1 /= total;
        }
        (pts, total * total / sq)
    };
    let (pa, na) = prep(a, wa);
    let (pb, nb) = prep(b, wb);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    while i < pa.len() || j < pb.len() {
        let x = match (pa.get(i), pb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < pa.len() && pa[i].0 == x {
            fa += pa[i].1;
            i += 1;
        }
        while j < pb.len() && pb[j].0 == x {
            fb += pb[j].1;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    KsResult::new(d, na * nb / (na + nb))
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    ks_weighted(a, None, b, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use rand::Rng;

    fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = StreamKey::new(seed).rng(0);
        (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn hill_on_exact_pareto() {
        let xs = pareto(2.0, 100_000, 1);
        let est = hill(&xs, 1000).unwrap();
        assert!((est.alpha_hat - 2.0).abs() <= 3.0 * 2.0 / 1000f64.sqrt(), "{est:?}");
        assert_eq!(est.std_error, est.alpha_hat / 1000f64.sqrt());
        for seed in 2..6 {
            let xs = pareto(1.5, 100_000, seed);
            let k = 316;
            let est = hill(&xs, k).unwrap();
            assert!((est.alpha_hat - 1.5).abs() <= 4.0 * est.std_error);
        }
    }

    #[test]
    fn hill_errors() {
        assert_eq!(hill(&[3.0; 100], 10), Err(Error::DegenerateTail));
        assert!(hill(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(hill(&[1.0, 2.0, 3.0], 1).is_err());
        assert!(hill(&[1.0, -2.0, 3.0, 4.0], 2).is_err());
    }

    #[test]
    fn tail_constant_on_pareto() {
        let xs = pareto(2.0, 1_000_000, 7);
        let est = tail_constant(&xs, 2.0, (0.9, 0.999)).unwrap();
        assert!((est.c_hat - 1.0).abs() < 0.05, "{}", est.c_hat);
        assert!(est.dispersion < 0.1);
        assert_eq!(est.x_grid.len(), GRID_POINTS);
        assert!(est.x_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(est.plateau_values.iter().all(|&v| v > 0.0));

        let wrong = tail_constant(&xs, 1.0, (0.9, 0.999)).unwrap();
        assert!(wrong.plateau_values.windows(2).all(|w| w[1] < w[0]));
        assert!(wrong.dispersion > 5.0 * est.dispersion);
    }

    #[test]
    fn tail_constant_homogeneity_and_errors() {
        let xs = pareto(2.0, 100_000, 8);
        let lambda = 3.7;
        let scaled: Vec<f64> = xs.iter().map(|x| lambda * x).collect();
        let a = tail_constant(&xs, 2.0, (0.95, 0.999)).unwrap();
        let b = tail_constant(&scaled, 2.0, (0.95, 0.999)).unwrap();
        assert!((b.c_hat - lambda * lambda * a.c_hat).abs() < 1e-12 * b.c_hat);

        let small = pareto(2.0, 500, 9);
        assert_eq!(
            tail_constant(&small, 2.0, (0.95, 0.99)),
            Err(Error::EmptyTail { found: 25, needed: 50 })
        );
        assert!(tail_constant(&xs, 2.0, (0.4, 0.9)).is_err());
        assert!(tail_constant(&xs, 2.0, (0.9, 0.9)).is_err());
    }

    #[test]
    fn rv_ratios() {
        let xs = pareto(2.0, 1_000_000, 10);
        for (_, r) in rv_ratio_diagnostic(&xs, 2.0, (0.9, 0.99)).unwrap() {
            assert!((r - 0.25).abs() < 0.03, "{r}");
        }
        for (_, r) in rv_ratio_diagnostic(&xs, 1.0, (0.9, 0.99)).unwrap() {
            assert_eq!(r, 1.0);
        }
        let mut rng = StreamKey::new(11).rng(0);
        let exp: Vec<f64> = (0..1_000_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let r = rv_ratio_diagnostic(&exp, 2.0, (0.9, 0.999)).unwrap();
        assert!(r.last().unwrap().1 < r[0].1 * 0.1);
        assert!(r.windows(2).all(|w| w[1].1 <= w[0].1 * 1.05));
    }

    #[test]
    fn ccdf_slope_on_pareto() {
        let xs = pareto(2.0, 1_000_000, 12);
        let est = ccdf_slope(&xs, (0.9, 0.999)).unwrap();
        assert!((est.alpha_hat - 2.0).abs() < 0.05, "{est:?}");
    }

    #[test]
    fn kolmogorov_distribution_values() {
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 2e-4);
        // both series agree where they meet
        let lam: f64 = 1.18;
        let alt: f64 = 2.0 * (1..=100).map(|k| {
            let k = k as f64;
            (if k as u64 % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * k * k * lam * lam).exp()
        }).sum::<f64>();
        assert!((kolmogorov_sf(lam - 1e-12) - alt).abs() < 1e-10);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_tests_detect_and_accept() {
        let mut rng = StreamKey::new(13).rng(0);
        let u: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        let v: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).passes(0.01));
        assert!(!ks_one_sample(&u, |x| (x * x).clamp(0.0, 1.0)).passes(0.01));
        assert!(ks_two_sample(&u, &v).passes(0.01));
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.05).collect();
        assert!(!ks_two_sample(&u, &shifted).passes(0.01));

        let w = vec![2.5; u.len()];
        let plain = ks_two_sample(&u, &v);
        let weighted = ks_weighted(&u, Some(&w), &v, None);
        assert!((plain.statistic - weighted.statistic).abs() < 1e-12);
        assert!((plain.n_eff - weighted.n_eff).abs() < 1e-6);
    }

    #[test]
    fn ks_two_sample_handles_ties() {
        let a = [1.0, 1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 2.0, 3.0];
        assert!((ks_two_sample(&a, &b).statistic - 0.25).abs() < 1e-15);
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
    }

    #[test]
    fn default_k_rule() {
        assert_eq!(default_k(10_000_000), 15_848);
        assert_eq!(default_k(100), 10);
        assert_eq!(default_k(10), 2);
    }

    proptest::proptest! {
        #[test]
        fn hill_is_scale_invariant(seed in 0u64..1000, power in -20i32..20, k in 2usize..200) {
            let xs = pareto(1.7, 1000, seed);
            let lambda = 2f64.powi(power);
            let scaled: Vec<f64> = xs.iter().map(|x| x * lambda).collect();
            proptest::prop_assert_eq!(hill(&xs, k).unwrap().alpha_hat, hill(&scaled, k).unwrap().alpha_hat);
            let scaled: Vec<f64> = xs.iter().map(|x| x * 0.37).collect();
            let (a, b) = (hill(&xs, k).unwrap().alpha_hat, hill(&scaled, k).unwrap().alpha_hat);
            proptest::prop_assert!((a - b).abs() <= 1e-10 * a);
        }
    }
}
