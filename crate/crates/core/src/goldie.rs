//! Monte Carlo tail constants: the univariate Goldie constant, the constant
//! of `W1` when its own index is the smaller one, and the truncated
//! expectations `w_s` whose limit drives the constant when the tail of `W2`
//! propagates into `W1`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_model::{solve_tail_index, CoefficientLaw, MomentBudget, PositiveDistribution, HYPOTHESIS_TOL};
use crate::error::{invalid, Error, Result};
use crate::rng::{chunks, StreamKey, StreamRng};
use crate::sre_engine::PathSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldieConstant {
    pub c_hat: f64,
    pub std_error: f64,
    /// `E A^alpha log A`.
    pub m_alpha: f64,
    pub alpha: f64,
    pub n_samples: usize,
    /// `E A^alpha - 1`; nonzero values mean `alpha` is not the Cramér root.
    pub alpha_residual: f64,
}

/// `(x + d)^alpha - x^alpha` without cancellation when `x >> d`.
pub fn power_difference(x: f64, d: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        d.powf(alpha)
    } else {
        x.powf(alpha) * (alpha * (d / x).ln_1p()).exp_m1()
    }
}

/// Mean and standard error of `f(i, rng)` over `i < n`, chunked over the
/// streams of `key` and merged in chunk order.
fn chunked_mean<F>(n: usize, key: StreamKey, f: F) -> (f64, f64)
where
    F: Fn(usize, &mut StreamRng) -> f64 + Sync,
{
    let parts: Vec<(f64, f64)> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            let (mut sum, mut sq) = (0.0, 0.0);
            for i in s..e {
                let v = f(i, &mut rng);
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / nf).sqrt())
}

fn m_alpha(a: &PositiveDistribution, alpha: f64) -> Result<(f64, f64)> {
    let m = a.exact_log_moment(alpha)?;
    if !(m > 0.0) {
        return Err(Error::NonPositiveM {
            m_alpha: m,
            std_error: 0.0,
        });
    }
    Ok((m, a.exact_moment(alpha)?.0 - 1.0))
}

/// `c = E[(A W + B)^alpha - (A W)^alpha] / (alpha E A^alpha log A)` with
/// fresh `(A, B)` paired with each stationary draw `W`.
pub fn univariate_constant(
    a_dist: &PositiveDistribution,
    b_dist: &PositiveDistribution,
    alpha: f64,
    stationary_draws: &[f64],
    key: StreamKey,
) -> Result<GoldieConstant> {
    if stationary_draws.len() < 2 {
        return Err(invalid("need at least two stationary draws"));
    }
    let (m, residual) = m_alpha(a_dist, alpha)?;
    let (mean, se) = chunked_mean(stationary_draws.len(), key, |i, rng| {
        let a = a_dist.sample(rng);
        let b = b_dist.sample(rng);
        power_difference(a * stationary_draws[i], b, alpha)
    });
    let scale = alpha * m;
    Ok(GoldieConstant {
        c_hat: mean / scale,
        std_error: se / scale,
        m_alpha: m,
        alpha,
        n_samples: stationary_draws.len(),
        alpha_residual: residual,
    })
}

/// Both normalizations of the constant of `W1` when `alpha1 < alpha2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlineC1 {
    /// `E[(D + A1 W1)^a1 - (A1 W1)^a1] / (a1 E A1^a1 log A1)`.
    pub goldie: GoldieConstant,
    /// The same expectation with prefactor `2 / a1`.
    pub literal: f64,
    pub literal_std_error: f64,
}

fn tail_indices(law: &CoefficientLaw) -> Result<(f64, f64)> {
    let m = law.marginals();
    let a1 = solve_tail_index(&m.a1, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    let a2 = solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    Ok((a1, a2))
}

/// Constant of `P(W1 > x) ~ c x^-alpha1` for `alpha1 < alpha2`. Each
/// stationary pair `(W1, W2)` at time -1 is combined with a fresh tuple at
/// time 0, `D = B1 + A2 W2`.
pub fn overline_c1(law: &CoefficientLaw, alpha1: f64, draws: &PathSample, key: StreamKey) -> Result<OverlineC1> {
    let (_, alpha2) = tail_indices(law)?;
    if alpha1 >= alpha2 {
        return Err(Error::RegimeMismatch(format!(
            "needs alpha1 < alpha2, got {alpha1} >= {alpha2}"
        )));
    }
    if draws.len() < 2 {
        return Err(invalid("need at least two stationary draws"));
    }
    let (m, residual) = m_alpha(&law.marginals().a1, alpha1)?;
    let (mean, se) = chunked_mean(draws.len(), key, |i, rng| {
        let c = law.draw(rng);
        let d = c.b1 + c.a2 * draws.w2[i];
        power_difference(c.a1 * draws.w1[i], d, alpha1)
    });
    let scale = alpha1 * m;
    Ok(OverlineC1 {
        goldie: GoldieConstant {
            c_hat: mean / scale,
            std_error: se / scale,
            m_alpha: m,
            alpha: alpha1,
            n_samples: draws.len(),
            alpha_residual: residual,
        },
        literal: 2.0 / alpha1 * mean,
        literal_std_error: 2.0 / alpha1 * se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsEstimate {
    pub s: usize,
    pub w_s: f64,
    pub std_error: f64,
}

/// `(sum_{i=1}^s [A1(1)..A1(i-1)] A2(i) [A4(i+1)..A4(s)])^alpha2` for one
/// strip of `s` fresh tuples.
fn plain_strip<R: Rng + ?Sized>(law: &CoefficientLaw, alpha2: f64, s: usize, rng: &mut R, buf: &mut Vec<(f64, f64, f64)>) -> f64 {
    buf.clear();
    buf.extend((0..s).map(|_| {
        let c = law.draw(rng);
        (c.a1, c.a2, c.a4)
    }));
    let mut suffix = 1.0;
    let mut suffixes = vec![0.0; s];
    for i in (0..s).rev() {
        suffixes[i] = suffix;
        suffix *= buf[i].2;
    }
    let mut prefix = 1.0;
    let mut sum = 0.0;
    for i in 0..s {
        sum += prefix * buf[i].1 * suffixes[i];
        prefix *= buf[i].0;
    }
    sum.powf(alpha2)
}

/// Direct Monte Carlo estimate of `w_s` from `n` independent strips.
///
/// For large `s` this estimator degenerates: the `A4` suffix product raised
/// to `alpha2` is a mean-one variable that tends to zero almost surely, so
/// the expectation is carried by ever rarer strips. [`ws`] avoids this.
pub fn ws_plain(law: &CoefficientLaw, alpha2: f64, s: usize, n: usize, key: StreamKey) -> Result<WsEstimate> {
    check_ws_args(law, s, n)?;
    let (w_s, std_error) = chunked_mean(n, key, |_, rng| {
        let mut buf = Vec::with_capacity(s);
        plain_strip(law, alpha2, s, rng, &mut buf)
    });
    Ok(WsEstimate { s, w_s, std_error })
}

fn check_ws_args(law: &CoefficientLaw, s: usize, n: usize) -> Result<()> {
    law.validate()?;
    if s == 0 {
        return Err(invalid("strip length must be at least 1"));
    }
    if n < 2 {
        return Err(invalid("need at least two strips"));
    }
    Ok(())
}

/// Estimate of `w_s` under a change of measure.
///
/// The strip sum factors as `P4 * R_s` with `P4 = A4(2)..A4(s)` and
/// `R_s = A2(1) + A1(1) V_{s-1}`, where `V` collects positions `2..s`.
/// Reweighting those positions by `A4^alpha2 / nu`, `nu = E A4^alpha2`,
/// absorbs `P4^alpha2`, and since position 1 is independent of `V`,
///
/// `w_s = nu^(s-1) E_Q[(A2 + A1 V)^a2 - (A1 V)^a2] + tau w_{s-1}`,
///
/// with `tau = E A1^alpha2`. One strip supplies the difference term for
/// every length `j <= s`, so the estimate is
/// `sum_j tau^(s-j) nu^(j-1) mean(d_j)`. The raw `E_Q R_s^alpha2` has
/// infinite variance for typical laws; the difference grows only like
/// `V^(alpha2 - 1)`.
pub fn ws(law: &CoefficientLaw, alpha2: f64, s: usize, n: usize, key: StreamKey) -> Result<WsEstimate> {
    check_ws_args(law, s, n)?;
    let tilted = law.tilted_by_a4(alpha2)?;
    let nu = tilted.normalizer;
    let (tau, _) = law.marginals().a1.exact_moment(alpha2)?;
    let weights: Vec<f64> = (1..=s).map(|j| tau.powi((s - j) as i32) * nu.powi(j as i32 - 1)).collect();
    let (w_s, std_error) = chunked_mean(n, key, |_, rng| {
        let first = law.draw(rng);
        let mut v = 0.0;
        let mut ratio = 1.0;
        let mut prev_a1 = 1.0;
        let mut total = 0.0;
        for (j, w) in weights.iter().enumerate() {
            total += w * power_difference(first.a1 * v, first.a2, alpha2);
            if j + 1 < s {
                let c = tilted.draw(rng);
                ratio *= prev_a1 / c.a4;
                v += ratio * c.a2;
                prev_a1 = c.a1;
            }
        }
        total
    });
    Ok(WsEstimate { s, w_s, std_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeC1 {
    pub c_tilde: GoldieConstant,
    pub ws_trace: Vec<WsEstimate>,
    pub converged: bool,
}

/// `c2 * w` with `w` the last `w_s` along an increasing schedule;
/// `converged` when the last two estimates agree within `rel_tol` plus three
/// combined standard errors.
pub fn tilde_c1(
    law: &CoefficientLaw,
    alpha2: f64,
    c2: &GoldieConstant,
    s_schedule: &[usize],
    n: usize,
    key: StreamKey,
    rel_tol: f64,
) -> Result<TildeC1> {
    if s_schedule.len() < 3 || s_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("schedule needs at least three strictly increasing lengths"));
    }
    let (alpha1, _) = tail_indices(law)?;
    if alpha1 <= alpha2 {
        return Err(Error::RegimeMismatch(format!(
            "needs alpha1 > alpha2, got {alpha1} <= {alpha2}"
        )));
    }
    let ws_trace = s_schedule
        .iter()
        .map(|&s| ws(law, alpha2, s, n, key.derive_index(s as u64)))
        .collect::<Result<Vec<_>>>()?;
    let last = ws_trace[ws_trace.len() - 1];
    let prev = ws_trace[ws_trace.len() - 2];
    let allowance = 3.0 * last.std_error.hypot(prev.std_error);
    let converged = (last.w_s - prev.w_s).abs() < rel_tol * last.w_s + allowance;
    let c_hat = c2.c_hat * last.w_s;
    Ok(TildeC1 {
        c_tilde: GoldieConstant {
            c_hat,
            std_error: (c2.std_error * last.w_s).hypot(c2.c_hat * last.std_error),
            m_alpha: c2.m_alpha,
            alpha: alpha2,
            n_samples: n,
            alpha_residual: c2.alpha_residual,
        },
        ws_trace,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsBounds {
    pub lower: f64,
    pub upper: f64,
    /// `E A1^alpha2`.
    pub tau: f64,
    pub alpha2: f64,
    /// `E A2^alpha2`.
    pub a2_moment: f64,
}

impl WsBounds {
    /// Bounds valid for `w_s` at a finite strip length.
    ///
    /// Term `i` of the strip sum has `alpha2`-th moment `tau^(i-1) E A2^alpha2`.
    /// For `alpha2 > 1` Minkowski's inequality bounds `w_s` above by
    /// `E A2^a2 ((1 - tau^(s/a2)) / (1 - tau^(1/a2)))^a2`, and the first term
    /// alone bounds it below. For `alpha2 <= 1` subadditivity of `x^a2` gives
    /// the upper bound `E A2^a2 (1 - tau^s) / (1 - tau)` and the reverse
    /// Minkowski inequality the lower bound `E A2^a2 ((1 - tau^(s/a2)) / (1 - tau^(1/a2)))^a2`.
    /// Both tend to [`WsBounds::lower`], [`WsBounds::upper`] as `s` grows.
    pub fn at(&self, s: usize) -> (f64, f64) {
        let (a, tau, m) = (self.alpha2, self.tau, self.a2_moment);
        let sf = s as f64;
        let minkowski = m * ((1.0 - tau.powf(sf / a)) / (1.0 - tau.powf(1.0 / a))).powf(a);
        if a > 1.0 {
            (m, minkowski)
        } else {
            (minkowski, m * (1.0 - tau.powf(sf)) / (1.0 - tau))
        }
    }

    /// The limit bounds scaled by `c2`, i.e. read as bounds on `c2 * w`.
    pub fn scaled(&self, c2: f64) -> (f64, f64) {
        (c2 * self.lower, c2 * self.upper)
    }
}

/// Bounds on `w = lim w_s` in terms of `tau = E A1^alpha2` and `E A2^alpha2`.
pub fn ws_bounds(law: &CoefficientLaw, alpha2: f64) -> Result<WsBounds> {
    law.validate()?;
    if !(alpha2 > 0.0) {
        return Err(invalid("alpha2 must be positive"));
    }
    let m = law.marginals();
    let (tau, _) = m.a1.exact_moment(alpha2)?;
    if !(tau < 1.0) {
        return Err(Error::TauNotContracting { tau });
    }
    let (a2_moment, _) = m.a2.exact_moment(alpha2)?;
    let geometric = (1.0 - tau.powf(1.0 / alpha2)).powf(-alpha2) * a2_moment;
    let (lower, upper) = if alpha2 > 1.0 {
        (a2_moment, geometric)
    } else {
        (geometric, a2_moment / (1.0 - tau))
    };
    Ok(WsBounds {
        lower,
        upper,
        tau,
        alpha2,
        a2_moment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff_model::PositiveDistribution::*;
    use crate::sre_engine::{stationary_draws, SimConfig};

    fn ln(mu: f64, var: f64) -> PositiveDistribution {
        LogNormal { mu, sigma: var.sqrt() }
    }

    fn constant_law(a1: f64, a2: f64, a4: f64) -> CoefficientLaw {
        let c = |v| Constant { value: v };
        CoefficientLaw::independent(c(a1), c(a2), c(a4), c(1.0), c(1.0)).unwrap()
    }

    /// A1 index 3, A4 index 1.5.
    fn heavy_w2_law() -> CoefficientLaw {
        CoefficientLaw::independent(ln(-0.3, 0.2), ln(-1.0, 0.3), ln(-0.3, 0.4), Constant { value: 1.0 }, Constant { value: 1.0 })
            .unwrap()
    }

    fn deterministic_ws(a1: f64, a2: f64, a4: f64, alpha: f64, s: usize) -> f64 {
        let sum: f64 = (1..=s).map(|i| a1.powi(i as i32 - 1) * a4.powi((s - i) as i32)).sum();
        a2.powf(alpha) * sum.powf(alpha)
    }

    #[test]
    fn power_difference_is_accurate() {
        assert_eq!(power_difference(0.0, 2.0, 1.5), 2f64.powf(1.5));
        let (x, d, a) = (1e8, 1.0, 2.0);
        assert!((power_difference(x, d, a) - (2.0 * x * d + d * d)).abs() < 1e-6);
        assert!((power_difference(3.0, 2.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn univariate_constant_matches_second_moment_expansion() {
        // alpha = 2, B = b: E[(AW+b)^2 - (AW)^2] = 2 b EA EW + b^2, EW = b / (1 - EA)
        let a = ln(-0.5, 0.5);
        let b = 1.3;
        let law = CoefficientLaw::independent(a, a, a, Constant { value: b }, Constant { value: b }).unwrap();
        let cfg = SimConfig::for_law(&law, 400_000, 10, 3).unwrap();
        let draws = stationary_draws(&law, &cfg, StreamKey::new(3)).unwrap();
        let c = univariate_constant(&a, &Constant { value: b }, 2.0, &draws.w2, StreamKey::new(4)).unwrap();
        let ea = a.exact_moment(1.0).unwrap().0;
        let ew = b / (1.0 - ea);
        let m = a.exact_log_moment(2.0).unwrap();
        let expected = (2.0 * b * ea * ew + b * b) / (2.0 * m);
        assert!((c.c_hat - expected).abs() < 3.0 * c.std_error, "{c:?} vs {expected}");
        assert!(c.alpha_residual.abs() < 1e-12);
    }

    #[test]
    fn univariate_constant_scales_with_b() {
        let a = ln(-0.5, 0.5);
        let draws: Vec<f64> = (1..2000).map(|i| i as f64 * 0.01).collect();
        let c1 = univariate_constant(&a, &Constant { value: 1.0 }, 2.0, &draws, StreamKey::new(5)).unwrap();
        let scaled: Vec<f64> = draws.iter().map(|w| 3.0 * w).collect();
        let c3 = univariate_constant(&a, &Constant { value: 3.0 }, 2.0, &scaled, StreamKey::new(5)).unwrap();
        assert!((c3.c_hat - 9.0 * c1.c_hat).abs() < 1e-10 * c3.c_hat);
    }

    #[test]
    fn univariate_constant_rejects_wrong_side_alpha() {
        // E A^h log A < 0 below the minimum of the moment function
        let a = ln(-0.5, 0.5);
        let err = univariate_constant(&a, &Constant { value: 1.0 }, 0.5, &[1.0, 2.0], StreamKey::new(1)).unwrap_err();
        assert!(matches!(err, Error::NonPositiveM { .. }));
        let c = univariate_constant(&a, &Constant { value: 1.0 }, 2.5, &[1.0, 2.0], StreamKey::new(1)).unwrap();
        assert!(c.alpha_residual > 0.1);
    }

    #[test]
    fn overline_c1_at_unit_index_is_mean_d_over_m() {
        // alpha1 = 1: (D + A1 W1) - A1 W1 = D, so C = E D / m_1
        let a1 = ln(-0.25, 0.5);
        let law = CoefficientLaw::independent(a1, ln(-1.0, 0.3), ln(-0.5, 0.5), ln(0.0, 0.2), Constant { value: 1.0 })
            .unwrap();
        let cfg = SimConfig::for_law(&law, 200_000, 10, 6).unwrap();
        let draws = stationary_draws(&law, &cfg, StreamKey::new(6)).unwrap();
        let c = overline_c1(&law, 1.0, &draws, StreamKey::new(7)).unwrap();
        let m = law.marginals();
        let ea2 = m.a2.exact_moment(1.0).unwrap().0;
        let eb1 = m.b1.exact_moment(1.0).unwrap().0;
        let ew2 = 1.0 / (1.0 - m.a4.exact_moment(1.0).unwrap().0);
        let expected = (eb1 + ea2 * ew2) / a1.exact_log_moment(1.0).unwrap();
        let n = draws.len() as f64;
        // the paired draws share W2, so compare against the sample mean of W2
        let ew2_hat = draws.w2.iter().sum::<f64>() / n;
        let expected_hat = (eb1 + ea2 * ew2_hat) / a1.exact_log_moment(1.0).unwrap();
        assert!(c.goldie.c_hat > 0.0);
        assert!((c.goldie.c_hat - expected_hat).abs() < 3.0 * c.goldie.std_error, "{c:?} vs {expected_hat}");
        assert!((c.goldie.c_hat - expected).abs() < 0.05 * expected);
        assert!((c.literal - 2.0 * c.goldie.c_hat * c.goldie.m_alpha).abs() < 1e-12 * c.literal);

        assert!(matches!(
            overline_c1(&heavy_w2_law(), 3.0, &draws, StreamKey::new(1)),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn ws_deterministic_closed_form() {
        let (a1, a2, a4, alpha) = (0.5, 0.7, 0.8, 1.5);
        let law = constant_law(a1, a2, a4);
        for s in [1, 2, 5, 64] {
            let exact = deterministic_ws(a1, a2, a4, alpha, s);
            let est = ws(&law, alpha, s, 4, StreamKey::new(1)).unwrap();
            assert!((est.w_s - exact).abs() <= 1e-12 * exact, "s={s}: {} vs {exact}", est.w_s);
            assert_eq!(est.std_error, 0.0);
            let plain = ws_plain(&law, alpha, s, 4, StreamKey::new(1)).unwrap();
            assert!((plain.w_s - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn ws_first_term_is_a2_moment() {
        let law = heavy_w2_law();
        let est = ws(&law, 1.5, 1, 200_000, StreamKey::new(2)).unwrap();
        let exact = law.marginals().a2.exact_moment(1.5).unwrap().0;
        assert!((est.w_s - exact).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn ws_two_term_brute_force() {
        // E(A2_0 A4_{-1} + A1_0 A2_{-1})^alpha2 from two independent tuples
        let law = heavy_w2_law();
        let alpha = 1.5;
        let n = 400_000;
        let (brute, brute_se) = {
            let mut rng = StreamKey::new(30).rng(0);
            let vals: Vec<f64> = (0..n)
                .map(|_| {
                    let t0 = law.draw(&mut rng);
                    let t1 = law.draw(&mut rng);
                    (t0.a2 * t1.a4 + t0.a1 * t1.a2).powf(alpha)
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            (mean, (var / n as f64).sqrt())
        };
        let tilted = ws(&law, alpha, 2, n, StreamKey::new(31)).unwrap();
        let plain = ws_plain(&law, alpha, 2, n, StreamKey::new(32)).unwrap();
        for est in [tilted, plain] {
            let se = est.std_error.hypot(brute_se);
            assert!((est.w_s - brute).abs() < 3.0 * se, "{est:?} vs {brute} ± {brute_se}");
        }
    }

    #[test]
    fn ws_tilted_and_plain_agree_at_moderate_length() {
        let law = heavy_w2_law();
        let tilted = ws(&law, 1.5, 6, 400_000, StreamKey::new(40)).unwrap();
        let plain = ws_plain(&law, 1.5, 6, 400_000, StreamKey::new(41)).unwrap();
        let se = tilted.std_error.hypot(plain.std_error);
        assert!((tilted.w_s - plain.w_s).abs() < 4.0 * se, "{tilted:?} vs {plain:?}");
        assert!(tilted.std_error < plain.std_error);
    }

    #[test]
    fn ws_tilted_and_plain_agree_for_coupled_noise() {
        let law = CoefficientLaw::garch(crate::garch::GarchParams {
            alpha0: [0.1, 0.1],
            alpha11: 0.10,
            alpha12: 0.05,
            alpha22: 0.35,
            beta11: 0.85,
            beta12: 0.05,
            beta22: 0.60,
            rho: 0.5,
        })
        .unwrap();
        let alpha2 = solve_tail_index(&law.marginals().a4, 1e-12, MomentBudget::Analytic).unwrap().alpha;
        let tilted = ws(&law, alpha2, 4, 400_000, StreamKey::new(42)).unwrap();
        let plain = ws_plain(&law, alpha2, 4, 400_000, StreamKey::new(43)).unwrap();
        let se = tilted.std_error.hypot(plain.std_error);
        assert!((tilted.w_s - plain.w_s).abs() < 4.0 * se, "{tilted:?} vs {plain:?}");
    }

    #[test]
    fn ws_within_bounds_and_converges() {
        let law = heavy_w2_law();
        let alpha2 = solve_tail_index(&law.marginals().a4, 1e-12, MomentBudget::Analytic).unwrap().alpha;
        let bounds = ws_bounds(&law, alpha2).unwrap();
        let c2 = GoldieConstant {
            c_hat: 1.0,
            std_error: 0.0,
            m_alpha: 1.0,
            alpha: alpha2,
            n_samples: 1,
            alpha_residual: 0.0,
        };
        let schedule = [1, 2, 4, 8, 16, 32, 64];
        let out = tilde_c1(&law, alpha2, &c2, &schedule, 100_000, StreamKey::new(50), 0.05).unwrap();
        assert!(out.converged);
        for w in &out.ws_trace {
            let (lo, hi) = bounds.at(w.s);
            assert!(w.w_s >= lo - 3.0 * w.std_error && w.w_s <= hi + 3.0 * w.std_error, "{w:?} not in [{lo}, {hi}]");
            assert!(hi <= bounds.upper * (1.0 + 1e-12));
        }
        assert_eq!(out.c_tilde.c_hat, out.ws_trace.last().unwrap().w_s);
    }

    #[test]
    fn bounds_special_cases() {
        // tau -> 0 pinches the alpha2 > 1 bounds
        let law = constant_law(1e-12, 0.7, 0.5);
        let b = ws_bounds(&law, 1.5).unwrap();
        assert!((b.upper - b.lower).abs() < 1e-6 * b.lower);
        assert!((b.lower - 0.7f64.powf(1.5)).abs() < 1e-15);

        // deterministic limit lies inside the bounds, both branches; A4 = 1
        // makes E A4^alpha2 = 1 hold for every alpha2
        for (alpha, a1, a4) in [(1.5, 0.5, 1.0), (0.7, 0.6, 1.0)] {
            let law = constant_law(a1, 0.7, a4);
            let b = ws_bounds(&law, alpha).unwrap();
            let w = deterministic_ws(a1, 0.7, a4, alpha, 4000);
            assert!(b.lower <= w * (1.0 + 1e-12) && w <= b.upper * (1.0 + 1e-12), "{b:?} vs {w}");
            for s in 1..40 {
                let (lo, hi) = b.at(s);
                let ws = deterministic_ws(a1, 0.7, a4, alpha, s);
                assert!(lo <= ws * (1.0 + 1e-12) && ws <= hi * (1.0 + 1e-12));
            }
        }

        // alpha2 = 1: both branches give E A2 / (1 - tau)
        let law = constant_law(0.4, 0.7, 0.5);
        let b = ws_bounds(&law, 1.0).unwrap();
        let target = 0.7 / (1.0 - 0.4);
        assert!((b.upper - target).abs() < 1e-15 && (b.lower - target).abs() < 1e-12);

        assert!(matches!(ws_bounds(&constant_law(1.2, 0.7, 0.5), 1.0), Err(Error::TauNotContracting { .. })));
    }

    #[test]
    fn schedule_and_regime_checks() {
        let law = heavy_w2_law();
        let c2 = GoldieConstant {
            c_hat: 1.0,
            std_error: 0.0,
            m_alpha: 1.0,
            alpha: 1.5,
            n_samples: 1,
            alpha_residual: 0.0,
        };
        assert!(tilde_c1(&law, 1.5, &c2, &[1, 2], 10, StreamKey::new(1), 0.05).is_err());
        assert!(tilde_c1(&law, 1.5, &c2, &[1, 4, 2], 10, StreamKey::new(1), 0.05).is_err());
        let swapped = CoefficientLaw::independent(ln(-0.3, 0.4), ln(-1.0, 0.3), ln(-0.3, 0.2), Constant { value: 1.0 }, Constant { value: 1.0 })
            .unwrap();
        assert!(matches!(
            tilde_c1(&swapped, 3.0, &c2, &[1, 2, 4], 10, StreamKey::new(1), 0.05),
            Err(Error::RegimeMismatch(_))
        ));
    }
}
