//! Acceptance suite: every verifiable claim as a list of gated checks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coeff_model::{
    check_stationarity, default_eps_grid, moment, solve_tail_index, CoefficientLaw, MomentBudget, PositiveDistribution,
    HYPOTHESIS_TOL,
};
use crate::error::Result;
use crate::garch::{self, GarchParams, GarchSpectralReport, GarchSpectralSettings};
use crate::goldie::{overline_c1, tilde_c1, univariate_constant, ws, ws_bounds};
use crate::rng::{StreamKey, CHUNK};
use crate::spectral::{
    angular_distance, angular_measure_threshold, compare_with_limit, componentwise_spectral, conditional_windows,
    pareto_radius_check, spectral_process_draws, threshold_angles, windows, Component,
};
use crate::sre_engine::{backward_truncated, lyapunov_estimate, stationary_draws, SimConfig};
use crate::tail_stats::{default_k, hill, ks_two_sample, tail_constant};

/// One named result. `pass` is `None` for informational values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    pub pass: Option<bool>,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, std_error: Option<f64>, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            value,
            std_error,
            bound_low: Some(low),
            bound_high: Some(high),
            pass: Some(value >= low && value <= high),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: None,
            bound_low: None,
            bound_high: Some(high),
            pass: Some(value <= high),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, low: f64) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: None,
            bound_low: Some(low),
            bound_high: None,
            pass: Some(value >= low),
        }
    }

    pub fn info(name: impl Into<String>, value: f64, std_error: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            std_error,
            bound_low: None,
            bound_high: None,
            pass: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            std_error: None,
            bound_low: Some(1.0),
            bound_high: Some(1.0),
            pass: Some(ok),
        }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Outcome of one acceptance criterion. An error counts as a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionOutcome {
    fn from_result(criterion: u8, result: Result<Vec<Check>>) -> Self {
        let (checks, error) = match result {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        Self {
            criterion,
            title: TITLES[criterion as usize - 1].to_string(),
            checks,
            error,
        }
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.checks.iter().any(Check::failed)
    }

    /// `criterion N: PASS|FAIL title (k/m checks)`.
    pub fn summary_line(&self) -> String {
        let gated = self.checks.iter().filter(|c| c.pass.is_some()).count();
        let ok = self.checks.iter().filter(|c| c.pass == Some(true)).count();
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {:>2}: {verdict} {} ({ok}/{gated} checks)", self.criterion, self.title);
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        for c in self.checks.iter().filter(|c| c.failed()) {
            line.push_str(&format!("\n    failed {} = {} not in [{:?}, {:?}]", c.name, c.value, c.bound_low, c.bound_high));
        }
        line
    }
}

pub const TITLES: [&str; 12] = [
    "tail-index solver exactness",
    "univariate tail constant",
    "second component dominates the first",
    "first component heavier",
    "strip functional convergence and bounds",
    "Lyapunov exponent",
    "forward vs backward stationary sampler",
    "spectral process",
    "componentwise spectral measure",
    "GARCH tails and spectral laws",
    "determinism across worker counts",
    "normalization of the first-component constant",
];

/// Sample sizes used by the suite. `Quick` divides every Monte Carlo size by
/// 20 for smoke runs; only `Full` matches the acceptance tolerances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Full,
    Quick,
}

impl Scale {
    pub fn n(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => (full / 20).max(1000),
        }
    }
}

fn ln(mu: f64, var: f64) -> PositiveDistribution {
    PositiveDistribution::LogNormal { mu, sigma: var.sqrt() }
}

fn c(value: f64) -> PositiveDistribution {
    PositiveDistribution::Constant { value }
}

/// Named coefficient laws used across the suite.
pub mod configs {
    use super::*;

    /// `A4` lognormal with index 2; the first component is a bystander.
    pub fn univariate() -> CoefficientLaw {
        CoefficientLaw::independent(c(0.5), c(0.1), ln(-0.5, 0.5), c(1.0), c(1.0)).unwrap()
    }

    /// Indices 3 (`A1`) and 1.5 (`A4`).
    pub fn second_dominant() -> CoefficientLaw {
        CoefficientLaw::independent(ln(-0.3, 0.2), ln(-1.0, 0.3), ln(-0.3, 0.4), c(1.0), c(1.0)).unwrap()
    }

    /// Indices 1.5 (`A1`) and 3 (`A4`).
    pub fn first_heavier() -> CoefficientLaw {
        CoefficientLaw::independent(ln(-0.3, 0.4), ln(-1.0, 0.3), ln(-0.3, 0.2), c(1.0), c(1.0)).unwrap()
    }

    /// Indices 3 (`A1`) and 0.75 (`A4`).
    pub fn second_below_one() -> CoefficientLaw {
        CoefficientLaw::independent(ln(-0.3, 0.2), ln(-1.0, 0.3), ln(-0.3, 0.8), c(1.0), c(1.0)).unwrap()
    }

    pub fn garch_main() -> GarchParams {
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

    /// The main GARCH config with the diagonal pairs exchanged.
    pub fn garch_swapped() -> GarchParams {
        GarchParams {
            alpha11: 0.35,
            beta11: 0.60,
            alpha22: 0.10,
            beta22: 0.85,
            ..garch_main()
        }
    }

    /// Laws satisfying the two-index hypotheses with distinct indices.
    pub fn two_index_suite() -> Vec<(&'static str, CoefficientLaw)> {
        vec![
            ("second_dominant", second_dominant()),
            ("first_heavier", first_heavier()),
            ("second_below_one", second_below_one()),
            ("garch_main", CoefficientLaw::garch(garch_main()).unwrap()),
            ("garch_swapped", CoefficientLaw::garch(garch_swapped()).unwrap()),
        ]
    }
}

fn indices(law: &CoefficientLaw) -> Result<(f64, f64)> {
    let m = law.marginals();
    Ok((
        solve_tail_index(&m.a1, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha,
        solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha,
    ))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn hill_check(name: &str, sample: &[f64], target: f64, n_se: f64) -> Result<Check> {
    let e = hill(sample, default_k(sample.len()))?;
    Ok(Check::within(
        name,
        e.alpha_hat,
        Some(e.std_error),
        target - n_se * e.std_error,
        target + n_se * e.std_error,
    ))
}

const PLATEAU: (f64, f64) = (0.999, 0.9999);
/// Thinning for tail draws, so the kept states are close to independent.
const TAIL_THINNING: usize = 5;

pub fn criterion_1() -> Result<Vec<Check>> {
    let cases = [
        ("lognormal", ln(-0.5, 0.5), 2.0, 1e-10f64),
        ("scaled_uniform_pow", PositiveDistribution::ScaledUniformPow { scale: 2.0, power: 1.0 }, 1.0, 1e-10),
        ("chisq_affine", PositiveDistribution::ChiSqAffine { a: 0.5, b: 0.5 }, 1.0, 1e-6),
    ];
    let mut out = Vec::new();
    for (name, dist, alpha, tol) in cases {
        let start = Instant::now();
        let s = solve_tail_index(&dist, tol.min(1e-12), MomentBudget::Analytic)?;
        let fast = start.elapsed().as_secs_f64() < 1.0;
        out.push(Check::within(format!("{name}_alpha"), s.alpha, None, alpha - tol, alpha + tol));
        out.push(Check::flag(format!("{name}_under_one_second"), fast));
    }
    Ok(out)
}

pub fn criterion_2(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let law = configs::univariate();
    let m = law.marginals();
    let alpha = solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?.alpha;
    let cfg = SimConfig::for_law(&law, scale.n(10_000_000), TAIL_THINNING, key.seed())?;
    let draws = stationary_draws(&law, &cfg, key.derive("draws"))?;
    let c2 = univariate_constant(&m.a4, &m.b2, alpha, &draws.w2, key.derive("constant"))?;
    let plateau = tail_constant(&draws.w2, alpha, PLATEAU)?;
    Ok(vec![
        Check::info("alpha2", alpha, None),
        Check::info("c2_goldie", c2.c_hat, Some(c2.std_error)),
        Check::info("c2_plateau", plateau.c_hat, None),
        Check::at_most("c2_relative_gap", rel(plateau.c_hat, c2.c_hat), 0.20),
        Check::at_most("plateau_dispersion", plateau.dispersion, 0.15),
    ])
}

pub const WS_SCHEDULE: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

pub fn criterion_3(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let law = configs::second_dominant();
    let m = law.marginals();
    let (alpha1, alpha2) = indices(&law)?;
    let cfg = SimConfig::for_law(&law, scale.n(10_000_000), TAIL_THINNING, key.seed())?;
    let draws = stationary_draws(&law, &cfg, key.derive("draws"))?;
    let c2 = univariate_constant(&m.a4, &m.b2, alpha2, &draws.w2, key.derive("c2"))?;
    let tilde = tilde_c1(&law, alpha2, &c2, &WS_SCHEDULE, scale.n(1_000_000), key.derive("ws"), 0.05)?;
    let plateau = tail_constant(&draws.w1, alpha2, PLATEAU)?;
    Ok(vec![
        Check::info("alpha1", alpha1, None),
        Check::info("alpha2", alpha2, None),
        hill_check("hill_w1", &draws.w1, alpha2, 4.0)?,
        Check::info("c2", c2.c_hat, Some(c2.std_error)),
        Check::info("w", tilde.ws_trace[WS_SCHEDULE.len() - 1].w_s, Some(tilde.ws_trace[WS_SCHEDULE.len() - 1].std_error)),
        Check::info("c_tilde", tilde.c_tilde.c_hat, Some(tilde.c_tilde.std_error)),
        Check::info("w1_plateau", plateau.c_hat, None),
        Check::at_most("c_tilde_relative_gap", rel(plateau.c_hat, tilde.c_tilde.c_hat), 0.25),
    ])
}

/// Shared by criteria 4 and 12.
pub fn criterion_4(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let law = configs::first_heavier();
    let (alpha1, alpha2) = indices(&law)?;
    let cfg = SimConfig::for_law(&law, scale.n(10_000_000), TAIL_THINNING, key.seed())?;
    let draws = stationary_draws(&law, &cfg, key.derive("draws"))?;
    let c1 = overline_c1(&law, alpha1, &draws, key.derive("c1"))?;
    let plateau = tail_constant(&draws.w1, alpha1, PLATEAU)?;
    Ok(vec![
        Check::info("alpha1", alpha1, None),
        Check::info("alpha2", alpha2, None),
        hill_check("hill_w1", &draws.w1, alpha1, 4.0)?,
        hill_check("hill_w2", &draws.w2, alpha2, 4.0)?,
        Check::info("c1_goldie", c1.goldie.c_hat, Some(c1.goldie.std_error)),
        Check::info("c1_two_over_alpha", c1.literal, Some(c1.literal_std_error)),
        Check::info("w1_plateau", plateau.c_hat, None),
        Check::info("two_over_alpha_relative_gap", rel(plateau.c_hat, c1.literal), None),
        Check::at_most("goldie_relative_gap", rel(plateau.c_hat, c1.goldie.c_hat), 0.25),
    ])
}

/// The two normalizations of the first-component constant, gated only on
/// the Goldie form.
pub fn criterion_12(c4: &[Check]) -> Vec<Check> {
    c4.iter()
        .filter(|c| {
            matches!(
                c.name.as_str(),
                "c1_goldie" | "c1_two_over_alpha" | "w1_plateau" | "two_over_alpha_relative_gap" | "goldie_relative_gap"
            )
        })
        .cloned()
        .collect()
}

pub fn criterion_5(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let n = scale.n(1_000_000);
    let mut out = Vec::new();
    for (name, law) in [("second_dominant", configs::second_dominant()), ("second_below_one", configs::second_below_one())] {
        let (_, alpha2) = indices(&law)?;
        let bounds = ws_bounds(&law, alpha2)?;
        let key = key.derive(name);
        let trace = WS_SCHEDULE
            .iter()
            .map(|&s| ws(&law, alpha2, s, n, key.derive_index(s as u64)))
            .collect::<Result<Vec<_>>>()?;
        let exact_w1 = moment(&law.marginals().a2, alpha2, MomentBudget::Analytic)?.value;
        let w1 = trace[0];
        out.push(Check::within(
            format!("{name}_w1"),
            w1.w_s,
            Some(w1.std_error),
            exact_w1 - 3.0 * w1.std_error,
            exact_w1 + 3.0 * w1.std_error,
        ));
        let (last, prev) = (trace[6], trace[5]);
        let allowance = 3.0 * last.std_error.hypot(prev.std_error) / last.w_s;
        out.push(Check::at_most(
            format!("{name}_w64_w32_relative_change"),
            rel(prev.w_s, last.w_s),
            0.05 + allowance,
        ));
        for e in &trace {
            let (lo, hi) = bounds.at(e.s);
            out.push(Check::within(
                format!("{name}_w{}_in_bounds", e.s),
                e.w_s,
                Some(e.std_error),
                lo - 3.0 * e.std_error,
                hi + 3.0 * e.std_error,
            ));
        }
        out.push(Check::info(format!("{name}_limit_lower"), bounds.lower, None));
        out.push(Check::info(format!("{name}_limit_upper"), bounds.upper, None));
    }
    let (a1, a2, alpha) = (0.6, 0.7, 1.5);
    let det = CoefficientLaw::independent(c(a1), c(a2), c(1.0), c(1.0), c(1.0))?;
    for s in [1usize, 8, 64] {
        let exact = a2.powf(alpha) * ((1.0 - a1.powi(s as i32)) / (1.0 - a1)).powf(alpha);
        let e = ws(&det, alpha, s, 16, key.derive("deterministic"))?;
        out.push(Check::at_most(format!("deterministic_w{s}_abs_error"), (e.w_s - exact).abs(), 1e-12));
    }
    Ok(out)
}

pub fn criterion_6(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, law) in configs::two_index_suite() {
        let st = check_stationarity(&law, &default_eps_grid())?;
        let est = lyapunov_estimate(&law, scale.n(1_000_000), 16, key.derive(name))?;
        out.push(Check::at_most(format!("{name}_gamma_negative"), est.gamma_hat, -f64::MIN_POSITIVE));
        out.push(Check::at_most(
            format!("{name}_gamma_below_bound"),
            est.gamma_hat,
            st.lyapunov_bound() + 3.0 * est.std_error,
        ));
    }
    let a = 0.6;
    let det = CoefficientLaw::independent(c(a), c(0.3), c(0.5), c(1.0), c(1.0))?;
    let est = lyapunov_estimate(&det, 1000, 1, key.derive("deterministic"))?;
    out.push(Check::at_most("deterministic_abs_error", (est.gamma_hat - a.ln()).abs(), 1e-9));
    Ok(out)
}

pub fn criterion_7(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let n = scale.n(100_000).max(1000);
    let mut suite = vec![("univariate", configs::univariate())];
    suite.extend(configs::two_index_suite());
    let mut out = Vec::new();
    for (name, law) in suite {
        let base = SimConfig::for_law(&law, n, 1, key.seed())?;
        // one burn-in between kept states
        let fwd_cfg = SimConfig {
            thinning: base.burn_in,
            ..base
        };
        let key = key.derive(name);
        let fwd = stationary_draws(&law, &fwd_cfg, key.derive("forward"))?;
        let bwd = backward_truncated(&law, &base, key.derive("backward"))?;
        for (coord, a, b) in [("w1", &fwd.w1, &bwd.w1), ("w2", &fwd.w2, &bwd.w2)] {
            let ks = ks_two_sample(a, b);
            out.push(Check::at_least(format!("{name}_{coord}_ks_p_value"), ks.p_value, 0.01));
        }
    }
    Ok(out)
}

pub fn criterion_8(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let law = configs::second_dominant();
    let (_, alpha2) = indices(&law)?;
    let h = 3;
    let cfg = SimConfig::for_law(&law, scale.n(10_000_000), 1, key.seed())?;
    let path = stationary_draws(&law, &cfg, key.derive("path"))?;
    let angular = angular_measure_threshold(&path, 0.999)?;
    let cw = conditional_windows(&path, h, 0.999, CHUNK)?;
    let draws = spectral_process_draws(&law, alpha2, h, scale.n(1_000_000), &angular, key.derive("limit"))?;
    let mut out = vec![Check::info("exceedances", cw.len() as f64, None)];
    for (name, ks) in compare_with_limit(&cw, &draws) {
        out.push(Check::at_most(format!("ks_{name}"), ks.statistic, 0.05));
    }
    out.push(Check::at_least("radius_pareto_ks_p_value", pareto_radius_check(&draws, alpha2).p_value, 0.01));
    Ok(out)
}

pub fn criterion_9(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let law = configs::first_heavier();
    let (alpha1, alpha2) = indices(&law)?;
    let h = 2;
    let cfg = SimConfig::for_law(&law, scale.n(10_000_000), 1, key.seed())?;
    let path = stationary_draws(&law, &cfg, key.derive("path"))?;
    let mut out = Vec::new();
    for (name, comp, alpha, series) in [
        ("w1", Component::First, alpha1, &path.w1),
        ("w2", Component::Second, alpha2, &path.w2),
    ] {
        let weighted = componentwise_spectral(&law, alpha, h, scale.n(1_000_000), key.derive(name), comp)?;
        let thr = threshold_angles(&windows(series, h, CHUNK), h, 0.999)?;
        out.push(Check::at_most(format!("{name}_ks"), angular_distance(&weighted, &thr).statistic, 0.05));
    }
    Ok(out)
}

pub fn criterion_10(scale: Scale, key: StreamKey) -> Result<Vec<Check>> {
    let main = configs::garch_main();
    let (alpha1, alpha2) = garch::garch_tail_indices(&main)?;
    let law = CoefficientLaw::garch(main)?;
    let tail_cfg = SimConfig::for_law(&law, scale.n(10_000_000), 2 * TAIL_THINNING, key.seed())?;
    let report = garch::verify_corollary(&main, &tail_cfg, key.derive("corollary"), 4.0)?;
    let mut out = vec![
        Check::info("alpha1", alpha1, None),
        Check::info("alpha2", alpha2, None),
        Check::flag("regime_alpha1_above_alpha2", alpha1 > alpha2),
        Check::flag("regime_coherent", report.regime_coherent),
    ];
    for c in report.sigma_tail_checks.iter().chain(&report.return_tail_checks) {
        let gated = matches!(c.series.as_str(), "sigma1_sq" | "abs_x1");
        let se = c.estimate.std_error;
        let mut check = Check::within(format!("hill_{}", c.series), c.estimate.alpha_hat, Some(se), c.target - 4.0 * se, c.target + 4.0 * se);
        if !gated {
            check.pass = None;
        }
        out.push(check);
    }

    let boundary = solve_tail_index(&PositiveDistribution::ChiSqAffine { a: 0.35, b: 0.65 }, 1e-12, MomentBudget::Analytic)?;
    out.push(Check::within("igarch_boundary_alpha", boundary.alpha, None, 1.0 - 1e-6, 1.0 + 1e-6));

    let spectral_cfg = SimConfig::for_law(&law, scale.n(10_000_000), 1, key.seed())?;
    let settings = GarchSpectralSettings {
        h: 2,
        u_quantile: 0.999,
        n_limit: scale.n(1_000_000),
        sign_level: 0.01,
    };
    match garch::garch_spectral_check(&configs::garch_swapped(), &spectral_cfg, &settings, key.derive("symmetric"))? {
        GarchSpectralReport::SymmetricSigns { components } => {
            for comp in &components {
                let i = comp.component + 1;
                out.push(Check::flag(format!("x{i}_sign_symmetry"), comp.signs_symmetric));
                for (t, ks) in comp.magnitude_ks.iter().enumerate() {
                    out.push(Check::info(format!("x{i}_step{}_weighted_vs_threshold_ks", t + 1), ks.statistic, None));
                }
            }
        }
        GarchSpectralReport::Process(_) => out.push(Check::flag("swapped_config_symmetric_branch", false)),
    }
    match garch::garch_spectral_check(&main, &spectral_cfg, &settings, key.derive("process"))? {
        GarchSpectralReport::Process(r) => {
            for f in &r.functionals {
                out.push(Check::at_most(format!("ks_{}", f.functional), f.ks.statistic, 0.05));
            }
            out.push(Check::at_least("radius_pareto_ks_p_value", r.radius_ks.p_value, 0.01));
        }
        GarchSpectralReport::SymmetricSigns { .. } => out.push(Check::flag("main_config_process_branch", false)),
    }
    Ok(out)
}

/// Runs one criterion (1 to 10, or 12, which reruns 4).
pub fn run_criterion(criterion: u8, scale: Scale, seed: u64) -> CriterionOutcome {
    let key = StreamKey::new(seed).derive(&format!("criterion-{criterion}"));
    let result = match criterion {
        1 => criterion_1(),
        2 => criterion_2(scale, key),
        3 => criterion_3(scale, key),
        4 => criterion_4(scale, key),
        5 => criterion_5(scale, key),
        6 => criterion_6(scale, key),
        7 => criterion_7(scale, key),
        8 => criterion_8(scale, key),
        9 => criterion_9(scale, key),
        10 => criterion_10(scale, key),
        12 => criterion_4(scale, StreamKey::new(seed).derive("criterion-4")).map(|c| criterion_12(&c)),
        other => Err(crate::error::invalid(format!("no computational criterion {other}"))),
    };
    CriterionOutcome::from_result(criterion, result)
}

/// Criteria 1 to 10 and 12; criterion 12 reuses the criterion 4 run.
pub fn run_suite(scale: Scale, seed: u64) -> Vec<CriterionOutcome> {
    let mut out: Vec<CriterionOutcome> = (1..=10).map(|c| run_criterion(c, scale, seed)).collect();
    let c4 = &out[3];
    let c12 = CriterionOutcome {
        criterion: 12,
        title: TITLES[11].to_string(),
        checks: criterion_12(&c4.checks),
        error: c4.error.clone(),
    };
    out.push(c12);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert_eq!(Check::within("a", 1.0, None, 0.0, 2.0).pass, Some(true));
        assert_eq!(Check::within("a", 3.0, None, 0.0, 2.0).pass, Some(false));
        assert_eq!(Check::info("a", 3.0, None).pass, None);
        assert!(!Check::info("a", 3.0, None).failed());
        assert!(Check::flag("a", false).failed());
    }

    #[test]
    fn suite_laws_have_the_stated_indices() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        let (a1, a2) = indices(&configs::second_dominant()).unwrap();
        assert!(close(a1, 3.0) && close(a2, 1.5));
        let (a1, a2) = indices(&configs::first_heavier()).unwrap();
        assert!(close(a1, 1.5) && close(a2, 3.0));
        let (_, a2) = indices(&configs::second_below_one()).unwrap();
        assert!(close(a2, 0.75));
        let a = solve_tail_index(&configs::univariate().marginals().a4, 1e-12, MomentBudget::Analytic).unwrap();
        assert!(close(a.alpha, 2.0));
    }

    #[test]
    fn exact_criteria_pass() {
        assert!(CriterionOutcome::from_result(1, criterion_1()).pass());
    }

    #[test]
    fn quick_suite_runs_without_errors() {
        for c in [2u8, 5, 6, 7] {
            let o = run_criterion(c, Scale::Quick, 7);
            assert!(o.error.is_none(), "{}", o.summary_line());
            assert!(!o.checks.is_empty());
        }
    }
}
