//! Constant-conditional-correlation bivariate GARCH(1,1) with a triangular
//! volatility recursion.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_model::{
    check_theorem_hypotheses, solve_tail_index, CoefficientLaw, Coefficients, Marginals, MomentBudget, PositiveDistribution,
    Regime, HYPOTHESIS_TOL,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{chunks, StreamKey, CHUNK};
use crate::spectral::{pareto, threshold_angles, windows, AngularSample, MIN_EXCEEDANCES};
use crate::sre_engine::{step, SimConfig, UpperTri};
use crate::tail_stats::{default_k, empirical_quantile, hill, ks_one_sample, ks_weighted, tail_constant, KsResult, TailEstimate};

/// GARCH(1,1) parameters with `alpha21 = beta21 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub alpha0: [f64; 2],
    pub alpha11: f64,
    pub alpha12: f64,
    pub alpha22: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub beta22: f64,
    pub rho: f64,
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha01", self.alpha0[0]),
            ("alpha02", self.alpha0[1]),
            ("alpha11", self.alpha11),
            ("alpha12", self.alpha12),
            ("alpha22", self.alpha22),
            ("beta11", self.beta11),
            ("beta12", self.beta12),
            ("beta22", self.beta22),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        Ok(())
    }

    pub fn marginals(&self) -> Marginals {
        let chi = |a, b| PositiveDistribution::ChiSqAffine { a, b };
        Marginals {
            a1: chi(self.alpha11, self.beta11),
            a2: chi(self.alpha12, self.beta12),
            a4: chi(self.alpha22, self.beta22),
            b1: PositiveDistribution::Constant { value: self.alpha0[0] },
            b2: PositiveDistribution::Constant { value: self.alpha0[1] },
        }
    }

    /// Standard bivariate normal pair with correlation `rho`.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        [n1, self.rho * n1 + (1.0 - self.rho * self.rho).sqrt() * n2]
    }

    pub fn to_sre_coefficients(&self, z: [f64; 2]) -> Coefficients {
        to_sre_coefficients(self, z)
    }
}

/// Recurrence coefficients driven by the previous period's noise `z`.
pub fn to_sre_coefficients(params: &GarchParams, z: [f64; 2]) -> Coefficients {
    let (z1s, z2s) = (z[0] * z[0], z[1] * z[1]);
    Coefficients {
        a1: params.alpha11 * z1s + params.beta11,
        a2: params.alpha12 * z2s + params.beta12,
        a4: params.alpha22 * z2s + params.beta22,
        b1: params.alpha0[0],
        b2: params.alpha0[1],
    }
}

/// Returns, squared volatilities and the noise that produced the returns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GarchPath {
    pub x: Vec<[f64; 2]>,
    pub sigma2: Vec<[f64; 2]>,
    pub z: Vec<[f64; 2]>,
}

impl GarchPath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sigma2_component(&self, i: usize) -> Vec<f64> {
        self.sigma2.iter().map(|s| s[i]).collect()
    }

    pub fn x_component(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|x| x[i]).collect()
    }

    fn append(&mut self, other: GarchPath) {
        self.x.extend(other.x);
        self.sigma2.extend(other.sigma2);
        self.z.extend(other.z);
    }
}

/// One chain started at `sigma^2 = alpha0`. The volatility at time `t` is
/// built from the noise of time `t - 1`; the return is `sigma_t Z_t` with
/// `Z_t` the next fresh noise. Records the states a forward SRE run with the
/// same stream would keep.
pub fn simulate_garch<R: Rng + ?Sized>(params: &GarchParams, config: &SimConfig, rng: &mut R) -> Result<GarchPath> {
    params.validate()?;
    config.validate()?;
    let mut path = GarchPath {
        x: Vec::with_capacity(config.n_draws),
        sigma2: Vec::with_capacity(config.n_draws),
        z: Vec::with_capacity(config.n_draws),
    };
    let mut w = params.alpha0;
    let mut z = params.draw_noise(rng);
    let total = config.burn_in + config.n_draws * config.thinning;
    for t in 1..=total {
        w = step(&params.to_sre_coefficients(z), w);
        if !(w[0].is_finite() && w[1].is_finite()) {
            return Err(Error::NonFiniteState { step: t });
        }
        z = params.draw_noise(rng);
        if t > config.burn_in && (t - config.burn_in).is_multiple_of(config.thinning) {
            path.x.push([w[0].sqrt() * z[0], w[1].sqrt() * z[1]]);
            path.sigma2.push(w);
            path.z.push(z);
        }
    }
    Ok(path)
}

/// Independent chains of [`CHUNK`] records each, chain `c` on stream `c`.
pub fn garch_chains(params: &GarchParams, config: &SimConfig, key: StreamKey) -> Result<GarchPath> {
    config.validate()?;
    let parts: Vec<Result<GarchPath>> = chunks(config.n_draws)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let cfg = SimConfig {
                n_draws: e - s,
                ..*config
            };
            simulate_garch(params, &cfg, &mut key.rng(c))
        })
        .collect();
    let mut out = GarchPath::default();
    for p in parts {
        out.append(p?);
    }
    Ok(out)
}

/// Tail indices of the two squared-volatility components.
pub fn garch_tail_indices(params: &GarchParams) -> Result<(f64, f64)> {
    let m = params.marginals();
    let a1 = solve_tail_index(&m.a1, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    let a2 = solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    Ok((a1, a2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTailCheck {
    pub series: String,
    pub target: f64,
    pub estimate: TailEstimate,
    /// `(alpha_hat - target) / std_error`.
    pub z_score: f64,
    pub pass: bool,
    /// Plateau constant for the target index, when enough tail points exist.
    pub tail_constant: Option<f64>,
}

impl SeriesTailCheck {
    fn new(series: &str, sample: &[f64], target: f64, n_se: f64) -> Result<Self> {
        let estimate = hill(sample, default_k(sample.len()))?;
        let z_score = (estimate.alpha_hat - target) / estimate.std_error;
        Ok(Self {
            series: series.to_string(),
            target,
            z_score,
            pass: z_score.abs() <= n_se,
            estimate,
            tail_constant: tail_constant(sample, target, (0.999, 0.9999)).ok().map(|c| c.c_hat),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub regime: Regime,
    /// The regime agrees with the hypothesis check on the induced law.
    pub regime_coherent: bool,
    pub sigma_tail_checks: Vec<SeriesTailCheck>,
    pub return_tail_checks: Vec<SeriesTailCheck>,
}

impl CorollaryReport {
    pub fn pass(&self) -> bool {
        self.regime_coherent && self.sigma_tail_checks.iter().chain(&self.return_tail_checks).all(|c| c.pass)
    }
}

/// Hill checks on `sigma_i^2`, `X_i^2` (index of `sigma_i^2`) and `|X_i|`
/// (twice that), with targets from the solved indices; `n_se` standard
/// errors of tolerance.
pub fn verify_corollary(params: &GarchParams, config: &SimConfig, key: StreamKey, n_se: f64) -> Result<CorollaryReport> {
    let (alpha1, alpha2) = garch_tail_indices(params)?;
    let hyp = check_theorem_hypotheses(&CoefficientLaw::garch(*params)?)?;
    let regime = if (alpha1 - alpha2).abs() <= HYPOTHESIS_TOL {
        Regime::EqualOrUnresolved
    } else if alpha1 < alpha2 {
        Regime::A1Dominant
    } else {
        Regime::A2Dominant
    };
    let path = garch_chains(params, config, key)?;
    let first = alpha1.min(alpha2);
    let mut sigma_tail_checks = Vec::new();
    let mut return_tail_checks = Vec::new();
    for (i, target) in [(0usize, first), (1, alpha2)] {
        let s2 = path.sigma2_component(i);
        sigma_tail_checks.push(SeriesTailCheck::new(&format!("sigma{}_sq", i + 1), &s2, target, n_se)?);
        let x = path.x_component(i);
        let xsq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let xabs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        return_tail_checks.push(SeriesTailCheck::new(&format!("x{}_sq", i + 1), &xsq, target, n_se)?);
        return_tail_checks.push(SeriesTailCheck::new(&format!("abs_x{}", i + 1), &xabs, 2.0 * target, n_se)?);
    }
    Ok(CorollaryReport {
        alpha1,
        alpha2,
        regime,
        regime_coherent: hyp.regime == regime,
        sigma_tail_checks,
        return_tail_checks,
    })
}

/// Sign balance and sign/magnitude independence of one angular coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCheck {
    pub coordinate: usize,
    pub positive_fraction: f64,
    /// Two-sided binomial p-value (normal approximation) for balance.
    pub balance_p_value: f64,
    /// Two-sample KS of magnitudes split by sign.
    pub magnitude_ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricBranchReport {
    pub component: usize,
    /// Index of `|X_i|`.
    pub alpha: f64,
    pub threshold_exceedances: usize,
    /// Weighted vs threshold law of `|theta_t|`, per coordinate.
    pub magnitude_ks: Vec<KsResult>,
    pub sign_checks: Vec<SignCheck>,
    /// Every sign test clears the Bonferroni-adjusted level.
    pub signs_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFunctionalKs {
    pub functional: String,
    pub ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessBranchReport {
    pub alpha2: f64,
    pub threshold: f64,
    pub n_exceedances: usize,
    pub functionals: Vec<LimitFunctionalKs>,
    /// Exact Pareto(`2 alpha2`) KS of the generated radii.
    pub radius_ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum GarchSpectralReport {
    /// `alpha1 < alpha2`: symmetric-sign spectral measure of return windows.
    SymmetricSigns { components: Vec<SymmetricBranchReport> },
    /// `alpha1 > alpha2`: spectral process of return windows.
    Process(ProcessBranchReport),
}

/// Settings shared by both branches of [`garch_spectral_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchSpectralSettings {
    pub h: usize,
    pub u_quantile: f64,
    /// Draws of the limit construction.
    pub n_limit: usize,
    /// Level for the sign tests, before Bonferroni adjustment.
    pub sign_level: f64,
}

/// Weighted angular law of `(|Z_{i,t}| (Pi_t^{(i)})^{1/2})_{t=1..h}` under
/// `|Y|^{2 alpha}`, where `Pi_t^{(i)}` multiplies the diagonal coefficient
/// built from `Z_0, ..., Z_{t-1}`.
pub fn symmetric_branch_angles(params: &GarchParams, component: usize, alpha: f64, h: usize, n: usize, key: StreamKey) -> AngularSample {
    let parts: Vec<(Vec<f64>, Vec<f64>)> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            let mut pts = Vec::with_capacity((e - s) * h);
            let mut ws = Vec::with_capacity(e - s);
            let mut y = vec![0.0; h];
            for _ in s..e {
                let mut z = params.draw_noise(&mut rng);
                let mut pi = 1.0;
                for yt in y.iter_mut() {
                    let a = params.to_sre_coefficients(z);
                    pi *= if component == 0 { a.a1 } else { a.a4 };
                    z = params.draw_noise(&mut rng);
                    *yt = z[component].abs() * pi.sqrt();
                }
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                pts.extend(y.iter().map(|v| v / norm));
                ws.push(norm.powf(2.0 * alpha));
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
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    AngularSample {
        dim: h,
        points,
        weights,
        threshold_u: None,
        n_exceedances: n,
    }
}

/// Two-sided normal-approximation p-value for `k` successes in `n` fair trials.
fn balance_p_value(k: usize, n: usize) -> f64 {
    let z = (k as f64 - 0.5 * n as f64) / (0.25 * n as f64).sqrt();
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

fn sign_check(angles: &AngularSample, coordinate: usize) -> SignCheck {
    let coords = angles.coordinate(coordinate);
    let (pos, neg): (Vec<f64>, Vec<f64>) = coords.iter().partition(|&&v| v > 0.0);
    let neg: Vec<f64> = neg.iter().map(|v| -v).collect();
    SignCheck {
        coordinate,
        positive_fraction: pos.len() as f64 / coords.len() as f64,
        balance_p_value: balance_p_value(pos.len(), coords.len()),
        magnitude_ks: ks_weighted(&pos, None, &neg, None),
    }
}

fn symmetric_branch(
    params: &GarchParams,
    path: &GarchPath,
    component: usize,
    alpha: f64,
    settings: &GarchSpectralSettings,
    key: StreamKey,
) -> Result<SymmetricBranchReport> {
    let h = settings.h;
    let x = path.x_component(component);
    let thr = threshold_angles(&windows(&x, h, CHUNK), h, settings.u_quantile)?;
    let weighted = symmetric_branch_angles(params, component, alpha, h, settings.n_limit, key);
    let magnitude_ks = (0..h)
        .map(|t| {
            let abs: Vec<f64> = thr.coordinate(t).iter().map(|v| v.abs()).collect();
            ks_weighted(&weighted.coordinate(t), Some(&weighted.weights), &abs, None)
        })
        .collect();
    let sign_checks: Vec<SignCheck> = (0..h).map(|t| sign_check(&thr, t)).collect();
    let level = settings.sign_level / (2 * h) as f64;
    let signs_symmetric = sign_checks
        .iter()
        .all(|c| c.balance_p_value > level && c.magnitude_ks.p_value > level);
    Ok(SymmetricBranchReport {
        component,
        alpha: 2.0 * alpha,
        threshold_exceedances: thr.n_exceedances,
        magnitude_ks,
        sign_checks,
        signs_symmetric,
    })
}

/// Draws of `V (diag(Pi_t Theta_0))^{1/2} Z_t`, `t = 1..h`, with `V`
/// Pareto(`2 alpha2`), `Theta_0` from `angular`, and `Pi_t` built from
/// `Z_0, ..., Z_{t-1}` of the same noise sequence. Row-major `(t, comp)`;
/// the radii are returned alongside.
pub fn process_limit_draws(
    params: &GarchParams,
    alpha2: f64,
    h: usize,
    n: usize,
    angular: &AngularSample,
    key: StreamKey,
) -> (Vec<f64>, Vec<f64>) {
    let mut cumulative = angular.weights.clone();
    for i in 1..cumulative.len() {
        cumulative[i] += cumulative[i - 1];
    }
    let total = cumulative[cumulative.len() - 1];
    let parts: Vec<(Vec<f64>, Vec<f64>)> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, s, e)| {
            let mut rng = key.rng(c);
            let mut vals = Vec::with_capacity((e - s) * 2 * h);
            let mut radii = Vec::with_capacity(e - s);
            for _ in s..e {
                let v = pareto(2.0 * alpha2, &mut rng);
                let u: f64 = rng.random::<f64>() * total;
                let idx = cumulative.partition_point(|&c| c <= u).min(angular.len() - 1);
                let theta = angular.point(idx);
                let mut pi = UpperTri::IDENTITY;
                let mut z = params.draw_noise(&mut rng);
                for _ in 0..h {
                    pi = UpperTri::from(&params.to_sre_coefficients(z)).mul(&pi);
                    z = params.draw_noise(&mut rng);
                    let p = pi.apply([theta[0], theta[1]]);
                    vals.push(v * p[0].sqrt() * z[0]);
                    vals.push(v * p[1].sqrt() * z[1]);
                }
                radii.push(v);
            }
            (vals, radii)
        })
        .collect();
    let mut vals = Vec::with_capacity(n * 2 * h);
    let mut radii = Vec::with_capacity(n);
    for (v, r) in parts {
        vals.extend(v);
        radii.extend(r);
    }
    (vals, radii)
}

fn process_branch(params: &GarchParams, path: &GarchPath, alpha2: f64, settings: &GarchSpectralSettings, key: StreamKey) -> Result<ProcessBranchReport> {
    let h = settings.h;
    let norms: Vec<f64> = path.sigma2.iter().map(|w| w[0].hypot(w[1])).collect();
    let flat: Vec<f64> = path.sigma2.iter().flat_map(|w| *w).collect();
    let angular = threshold_angles(&flat, 2, settings.u_quantile)?;
    let x = empirical_quantile(&norms, settings.u_quantile);
    let scale = x.sqrt();
    let mut sim = Vec::new();
    for t in 0..norms.len().saturating_sub(h) {
        if norms[t] > x && t % CHUNK + h < CHUNK {
            for s in 1..=h {
                sim.push(path.x[t + s][0] / scale);
                sim.push(path.x[t + s][1] / scale);
            }
        }
    }
    let n_exceedances = sim.len() / (2 * h);
    if n_exceedances < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found: n_exceedances,
            needed: MIN_EXCEEDANCES,
        });
    }
    let (lim, radii) = process_limit_draws(params, alpha2, h, settings.n_limit, &angular, key);
    let column = |v: &[f64], j: usize| -> Vec<f64> { v.iter().skip(j).step_by(2 * h).copied().collect() };
    let row_norms = |v: &[f64]| -> Vec<f64> { v.chunks_exact(2 * h).map(|r| r.iter().map(|a| a * a).sum::<f64>().sqrt()).collect() };
    let mut functionals = Vec::with_capacity(2 * h + 1);
    for t in 1..=h {
        for comp in 0..2 {
            let j = 2 * (t - 1) + comp;
            functionals.push(LimitFunctionalKs {
                functional: format!("x{}_step{t}", comp + 1),
                ks: ks_weighted(&column(&sim, j), None, &column(&lim, j), None),
            });
        }
    }
    functionals.push(LimitFunctionalKs {
        functional: "norm".to_string(),
        ks: ks_weighted(&row_norms(&sim), None, &row_norms(&lim), None),
    });
    let a = 2.0 * alpha2;
    let radius_ks = ks_one_sample(&radii, |y| if y <= 1.0 { 0.0 } else { 1.0 - y.powf(-a) });
    Ok(ProcessBranchReport {
        alpha2,
        threshold: x,
        n_exceedances,
        functionals,
        radius_ks,
    })
}

/// Spectral checks on simulated return windows for whichever regime the
/// solved tail indices select.
pub fn garch_spectral_check(
    params: &GarchParams,
    config: &SimConfig,
    settings: &GarchSpectralSettings,
    key: StreamKey,
) -> Result<GarchSpectralReport> {
    if settings.h == 0 || settings.n_limit == 0 {
        return Err(invalid("need h >= 1 and n_limit >= 1"));
    }
    let (alpha1, alpha2) = garch_tail_indices(params)?;
    if (alpha1 - alpha2).abs() <= HYPOTHESIS_TOL {
        return Err(Error::RegimeMismatch(format!("tail indices coincide at {alpha1}")));
    }
    let path = garch_chains(params, config, key.derive("path"))?;
    if alpha1 < alpha2 {
        let components = [(0, alpha1), (1, alpha2)]
            .into_iter()
            .map(|(i, a)| symmetric_branch(params, &path, i, a, settings, key.derive_index(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(GarchSpectralReport::SymmetricSigns { components })
    } else {
        process_branch(params, &path, alpha2, settings, key.derive("limit")).map(GarchSpectralReport::Process)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sre_engine::iterate_forward;
    use crate::tail_stats::ks_two_sample;

    pub(crate) fn main_params() -> GarchParams {
        GarchParams {
            alpha0: [0.1, 0.1],
            alpha11: 0.10,
            alpha12: 0.05,
            alpha22: 0.35,
            beta11: 0.85,
            beta12: 0.05,
            beta22: 0.60,
            rho: 0.5,
        }
    }

    fn swapped_params() -> GarchParams {
        GarchParams {
            alpha11: 0.35,
            beta11: 0.60,
            alpha22: 0.10,
            beta22: 0.85,
            ..main_params()
        }
    }

    #[test]
    fn coefficient_map_examples() {
        let p = main_params();
        let c0 = p.to_sre_coefficients([0.0, 0.0]);
        assert_eq!(
            (c0.a1, c0.a2, c0.a4, c0.b1, c0.b2),
            (p.beta11, p.beta12, p.beta22, p.alpha0[0], p.alpha0[1])
        );
        let c1 = p.to_sre_coefficients([1.0, 1.0]);
        assert_eq!(
            (c1.a1, c1.a2, c1.a4),
            (p.alpha11 + p.beta11, p.alpha12 + p.beta12, p.alpha22 + p.beta22)
        );
        // A2 and A4 share z2 and move together
        let lo = p.to_sre_coefficients([3.0, 0.5]);
        let hi = p.to_sre_coefficients([-3.0, 1.5]);
        assert!(hi.a2 > lo.a2 && hi.a4 > lo.a4 && hi.a1 == lo.a1);
    }

    #[test]
    fn rejects_nonpositive_or_bad_correlation() {
        assert!(GarchParams { beta12: 0.0, ..main_params() }.validate().is_err());
        assert!(GarchParams { rho: 1.0, ..main_params() }.validate().is_err());
        assert!(CoefficientLaw::garch(GarchParams { alpha0: [0.1, -1.0], ..main_params() }).is_err());
    }

    #[test]
    fn volatility_matches_the_forward_recursion() {
        let p = main_params();
        let cfg = SimConfig {
            burn_in: 50,
            n_draws: 2000,
            thinning: 3,
            truncation_depth: 1,
            base_seed: 1,
        };
        let g = simulate_garch(&p, &cfg, &mut StreamKey::new(1).rng(0)).unwrap();
        let w = iterate_forward(&CoefficientLaw::garch(p).unwrap(), p.alpha0, &cfg, &mut StreamKey::new(1).rng(0)).unwrap();
        assert_eq!(g.sigma2_component(0), w.w1);
        assert_eq!(g.sigma2_component(1), w.w2);
        for ((x, s), z) in g.x.iter().zip(&g.sigma2).zip(&g.z) {
            for i in 0..2 {
                assert!(s[i] >= p.alpha0[i]);
                assert!((x[i] / s[i].sqrt() - z[i]).abs() <= 1e-15 * z[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn returns_use_the_noise_of_the_next_step() {
        let p = main_params();
        let cfg = SimConfig {
            burn_in: 0,
            n_draws: 100,
            thinning: 1,
            truncation_depth: 1,
            base_seed: 2,
        };
        let g = simulate_garch(&p, &cfg, &mut StreamKey::new(2).rng(0)).unwrap();
        for t in 0..g.len() - 1 {
            let next = step(&p.to_sre_coefficients(g.z[t]), g.sigma2[t]);
            assert_eq!(next, g.sigma2[t + 1]);
        }
    }

    #[test]
    fn vanishing_arch_terms_reach_the_fixed_point() {
        let p = GarchParams {
            alpha11: 1e-14,
            alpha12: 1e-14,
            alpha22: 1e-14,
            ..main_params()
        };
        let cfg = SimConfig {
            burn_in: 2000,
            n_draws: 10,
            thinning: 1,
            truncation_depth: 1,
            base_seed: 3,
        };
        let g = simulate_garch(&p, &cfg, &mut StreamKey::new(3).rng(0)).unwrap();
        let w2 = p.alpha0[1] / (1.0 - p.beta22);
        let w1 = (p.alpha0[0] + p.beta12 * w2) / (1.0 - p.beta11);
        for s in &g.sigma2 {
            assert!((s[0] - w1).abs() < 1e-9 && (s[1] - w2).abs() < 1e-9, "{s:?}");
        }
    }

    /// Plain univariate GARCH(1,1) returns, one thinned chain per seed.
    fn univariate_oracle(a0: f64, a: f64, b: f64, n: usize, thin: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut s2 = a0 / (1.0 - a - b);
        let mut out = Vec::with_capacity(n);
        for t in 0..500 + n * thin {
            let z: f64 = rng.sample(StandardNormal);
            if t >= 500 && (t - 500) % thin == 0 {
                out.push(s2.sqrt() * z);
            }
            s2 = a0 + (a * z * z + b) * s2;
        }
        out
    }

    #[test]
    fn decoupled_components_match_univariate_garch() {
        let p = GarchParams {
            alpha0: [0.2, 0.1],
            alpha11: 0.15,
            alpha12: 1e-12,
            alpha22: 0.10,
            beta11: 0.75,
            beta12: 1e-12,
            beta22: 0.85,
            rho: 0.0,
        };
        let cfg = SimConfig {
            burn_in: 500,
            n_draws: 20_000,
            thinning: 25,
            truncation_depth: 1,
            base_seed: 4,
        };
        let g = garch_chains(&p, &cfg, StreamKey::new(4)).unwrap();
        let x1 = univariate_oracle(0.2, 0.15, 0.75, 20_000, 25, 40);
        let x2 = univariate_oracle(0.1, 0.10, 0.85, 20_000, 25, 41);
        assert!(ks_two_sample(&g.x_component(0), &x1).passes(0.01));
        assert!(ks_two_sample(&g.x_component(1), &x2).passes(0.01));
    }

    #[test]
    fn igarch_boundary_has_unit_index() {
        let d = PositiveDistribution::ChiSqAffine { a: 0.35, b: 0.65 };
        let s = solve_tail_index(&d, 1e-12, MomentBudget::Analytic).unwrap();
        assert!((s.alpha - 1.0).abs() < 1e-6, "{}", s.alpha);
    }

    #[test]
    fn regimes_of_the_reference_configs() {
        let (a1, a2) = garch_tail_indices(&main_params()).unwrap();
        assert!(a1 > a2);
        let (b1, b2) = garch_tail_indices(&swapped_params()).unwrap();
        assert!((b1 - a2).abs() < 1e-9 && (b2 - a1).abs() < 1e-9);
        let hyp = check_theorem_hypotheses(&CoefficientLaw::garch(main_params()).unwrap()).unwrap();
        assert_eq!(hyp.regime, Regime::A2Dominant);
        let hyp = check_theorem_hypotheses(&CoefficientLaw::garch(swapped_params()).unwrap()).unwrap();
        assert_eq!(hyp.regime, Regime::A1Dominant);
    }

    #[test]
    fn absolute_returns_have_twice_the_squared_index() {
        let cfg = SimConfig {
            burn_in: 500,
            n_draws: 50_000,
            thinning: 1,
            truncation_depth: 1,
            base_seed: 5,
        };
        let g = garch_chains(&main_params(), &cfg, StreamKey::new(5)).unwrap();
        let x = g.x_component(0);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let k = default_k(x.len());
        let (hs, ha) = (hill(&sq, k).unwrap(), hill(&abs, k).unwrap());
        assert!((ha.alpha_hat - 2.0 * hs.alpha_hat).abs() < 1e-9 * ha.alpha_hat);
    }

    #[test]
    fn corollary_report_structure() {
        let cfg = SimConfig {
            burn_in: 500,
            n_draws: 100_000,
            thinning: 1,
            truncation_depth: 1,
            base_seed: 6,
        };
        let r = verify_corollary(&main_params(), &cfg, StreamKey::new(6), 4.0).unwrap();
        assert!(r.regime_coherent);
        assert_eq!(r.regime, Regime::A2Dominant);
        assert_eq!(r.sigma_tail_checks[0].target, r.alpha2);
        assert_eq!(r.return_tail_checks[1].target, 2.0 * r.alpha2);
        assert_eq!(r.sigma_tail_checks.len() + r.return_tail_checks.len(), 6);
    }

    #[test]
    fn symmetric_branch_single_step_is_degenerate() {
        let a = symmetric_branch_angles(&swapped_params(), 0, 1.5, 1, 1000, StreamKey::new(7));
        assert!(a.points.iter().all(|&p| (p - 1.0).abs() < 1e-15));
        let a = symmetric_branch_angles(&swapped_params(), 0, 1.5, 3, 1000, StreamKey::new(7));
        assert!(a.points.iter().all(|&p| p >= 0.0));
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn process_limit_radius_is_pareto() {
        let ang = AngularSample {
            dim: 2,
            points: vec![0.6, 0.8],
            weights: vec![1.0],
            threshold_u: None,
            n_exceedances: 1,
        };
        let (vals, radii) = process_limit_draws(&main_params(), 1.2, 1, 20_000, &ang, StreamKey::new(8));
        assert_eq!(vals.len(), 40_000);
        let r = ks_one_sample(&radii, |y| if y <= 1.0 { 0.0 } else { 1.0 - y.powf(-2.4) });
        assert!(r.passes(0.01));
    }

    #[test]
    fn spectral_check_picks_the_branch() {
        let cfg = SimConfig {
            burn_in: 500,
            n_draws: 400_000,
            thinning: 1,
            truncation_depth: 1,
            base_seed: 9,
        };
        let settings = GarchSpectralSettings {
            h: 2,
            u_quantile: 0.995,
            n_limit: 50_000,
            sign_level: 0.01,
        };
        match garch_spectral_check(&main_params(), &cfg, &settings, StreamKey::new(9)).unwrap() {
            GarchSpectralReport::Process(r) => {
                assert_eq!(r.functionals.len(), 5);
                assert!(r.radius_ks.passes(0.01));
            }
            other => panic!("{other:?}"),
        }
        match garch_spectral_check(&swapped_params(), &cfg, &settings, StreamKey::new(9)).unwrap() {
            GarchSpectralReport::SymmetricSigns { components } => {
                assert_eq!(components.len(), 2);
                assert!(components.iter().all(|c| c.signs_symmetric), "{components:?}");
            }
            other => panic!("{other:?}"),
        }
    }
}
