//! Pipeline execution: one config in, a report and CSV artifacts out.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use trisre::coeff_model::{
    check_stationarity, check_theorem_hypotheses, default_eps_grid, solve_tail_index, HypothesisReport, MomentBudget,
    Regime, HYPOTHESIS_TOL,
};
use trisre::export;
use trisre::garch::{self, GarchSpectralReport, GarchSpectralSettings};
use trisre::goldie::{overline_c1, tilde_c1, univariate_constant, ws_bounds};
use trisre::rng::CHUNK;
use trisre::spectral::{
    angular_distance, angular_measure_threshold, compare_with_limit, componentwise_spectral, conditional_windows,
    pareto_radius_check, spectral_process_draws, threshold_angles, windows, Component,
};
use trisre::sre_engine::{backward_truncated, lyapunov_estimate, stationary_draws};
use trisre::tail_stats::{default_k, hill, ks_two_sample, rv_ratio_diagnostic, tail_constant};
use trisre::verify::{run_suite, Check, WS_SCHEDULE};
use trisre::{CoefficientLaw, SimConfig, StreamKey};

use crate::config::{ExperimentConfig, Pipeline};
use crate::error::CliError;
use crate::report::{RunReport, StepError};

/// Quantile range of the tail-constant plateau.
pub const PLATEAU: (f64, f64) = (0.999, 0.9999);
/// Rows of the GARCH path written to CSV.
pub const GARCH_CSV_ROWS: usize = 100_000;
/// Spectral-process draws written to CSV.
pub const SPECTRAL_CSV_DRAWS: usize = 10_000;

/// A finished run before it touches the filesystem.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// `(file name, contents)`.
    pub artifacts: Vec<(String, Vec<u8>)>,
    /// Extra plain-text summary, written as `summary.txt` when present.
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_seconds: f64,
    pub workers: usize,
}

/// One tail constant as written to `constants.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub alpha: f64,
    pub method: &'static str,
    pub bounds: Option<(f64, f64)>,
}

impl ConstantRecord {
    fn new(name: &str, value: f64, std_error: Option<f64>, alpha: f64, method: &'static str) -> Self {
        Self {
            name: name.to_string(),
            value,
            std_error,
            alpha,
            method,
            bounds: None,
        }
    }
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    key: StreamKey,
    results: Vec<Check>,
    errors: Vec<StepError>,
    artifacts: Vec<(String, Vec<u8>)>,
    summary: Option<String>,
}

type StepResult = trisre::Result<()>;

impl Ctx<'_> {
    /// Runs one step; a failure becomes a `<step>.error` record and the run continues.
    fn step(&mut self, name: &str, f: impl FnOnce(&mut Self, StreamKey) -> StepResult) {
        let key = self.key.derive(name);
        if let Err(e) = f(self, key) {
            self.results.push(Check {
                name: format!("{name}.error"),
                value: 0.0,
                std_error: None,
                bound_low: None,
                bound_high: None,
                pass: Some(false),
            });
            self.errors.push(StepError {
                step: name.to_string(),
                message: e.to_string(),
            });
        }
    }

    fn push(&mut self, c: Check) {
        self.results.push(c);
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> StepResult) -> StepResult {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.artifacts.push((name.to_string(), buf));
        Ok(())
    }

    fn law(&self) -> &CoefficientLaw {
        &self.config.law
    }

    fn sim(&self) -> trisre::Result<SimConfig> {
        let s = &self.config.sim;
        let mut cfg = SimConfig::for_law(self.law(), s.n_draws, s.thinning, s.base_seed)?;
        if let Some(b) = s.burn_in {
            cfg.burn_in = b;
        }
        if let Some(d) = s.truncation_depth {
            cfg.truncation_depth = d;
        }
        Ok(cfg)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn hill_within(name: &str, sample: &[f64], target: f64, n_se: f64) -> trisre::Result<Check> {
    let e = hill(sample, default_k(sample.len()))?;
    Ok(Check::within(
        name,
        e.alpha_hat,
        Some(e.std_error),
        target - n_se * e.std_error,
        target + n_se * e.std_error,
    ))
}

fn hypothesis_checks(h: &HypothesisReport) -> Vec<Check> {
    vec![
        Check::info("alpha1", h.alpha1.alpha, finite(h.alpha1.std_error).filter(|s| *s > 0.0)),
        Check::info("alpha2", h.alpha2.alpha, finite(h.alpha2.std_error).filter(|s| *s > 0.0)),
        Check::info("regime_a1_dominant", f64::from(u8::from(h.regime == Regime::A1Dominant)), None),
        Check::info("regime_a2_dominant", f64::from(u8::from(h.regime == Regime::A2Dominant)), None),
        Check::flag("cross_moment_finite", h.cross_moment_ok),
    ]
}

fn solve_index(ctx: &mut Ctx) {
    let tol = ctx.config.tolerance("residual_tol");
    let m = ctx.law().marginals();
    let mut roots = 0;
    for (name, dist) in [("alpha1", m.a1), ("alpha2", m.a4)] {
        ctx.step(name, |ctx, _| {
            match solve_tail_index(&dist, tol.min(HYPOTHESIS_TOL), MomentBudget::Analytic) {
                Ok(s) => {
                    roots += 1;
                    ctx.push(Check::info(name, s.alpha, finite(s.std_error).filter(|e| *e > 0.0)));
                    ctx.push(Check::info(format!("{name}_bracket_low"), s.bracket.0, None));
                    ctx.push(Check::info(format!("{name}_bracket_high"), s.bracket.1, None));
                    ctx.push(Check::within(format!("{name}_residual"), s.residual, None, -tol, tol));
                }
                // a coefficient with E X^h < 1 throughout contributes no index of its own
                Err(trisre::Error::NoPositiveRoot(_)) => ctx.push(Check::info(format!("{name}_root_exists"), 0.0, None)),
                Err(e) => return Err(e),
            }
            Ok(())
        });
    }
    if roots == 2 {
        ctx.step("hypotheses", |ctx, _| {
            let h = check_theorem_hypotheses(ctx.law())?;
            for c in hypothesis_checks(&h).into_iter().skip(2) {
                ctx.push(c);
            }
            Ok(())
        });
    }
}

fn stationarity(ctx: &mut Ctx) {
    let n_se = ctx.config.tolerance("n_se");
    ctx.step("stationarity", |ctx, key| {
        let st = check_stationarity(ctx.law(), &default_eps_grid())?;
        ctx.push(Check::flag("stationary", st.holds));
        ctx.push(Check::info("rho", st.rho, None));
        if let Some(eps) = st.witness_eps {
            ctx.push(Check::info("witness_eps", eps, None));
            ctx.push(Check::info("lyapunov_bound", st.lyapunov_bound(), None));
        }
        let est = lyapunov_estimate(ctx.law(), ctx.config.sim.n_draws, 16, key)?;
        ctx.push(Check::at_most("gamma_negative", est.gamma_hat, -f64::MIN_POSITIVE));
        let mut below = Check::at_most("gamma_below_bound", est.gamma_hat, st.lyapunov_bound() + n_se * est.std_error);
        below.std_error = finite(est.std_error);
        ctx.push(below);
        Ok(())
    });
}

fn simulate(ctx: &mut Ctx) {
    let level = ctx.config.tolerance("ks_level");
    ctx.step("simulate", |ctx, key| {
        let cfg = ctx.sim()?;
        let fwd = stationary_draws(ctx.law(), &cfg, key.derive("forward"))?;
        let bwd = backward_truncated(ctx.law(), &cfg, key.derive("backward"))?;
        ctx.push(Check::info("burn_in", cfg.burn_in as f64, None));
        ctx.push(Check::info("truncation_depth", cfg.truncation_depth as f64, None));
        for (coord, a, b) in [("w1", &fwd.w1, &bwd.w1), ("w2", &fwd.w2, &bwd.w2)] {
            let ks = ks_two_sample(a, b);
            ctx.push(Check::info(format!("{coord}_ks_statistic"), ks.statistic, None));
            ctx.push(Check::at_least(format!("{coord}_ks_p_value"), ks.p_value, level));
        }
        ctx.csv("forward_path.csv", |w| export::write_path(w, &fwd))?;
        ctx.csv("backward_path.csv", |w| export::write_path(w, &bwd))
    });
}

fn tails(ctx: &mut Ctx) {
    let n_se = ctx.config.tolerance("n_se");
    ctx.step("tails", |ctx, key| {
        let h = check_theorem_hypotheses(ctx.law())?;
        for c in hypothesis_checks(&h) {
            ctx.push(c);
        }
        let draws = stationary_draws(ctx.law(), &ctx.sim()?, key)?;
        for (name, sample, target) in [("w1", &draws.w1, h.tail_index_w1()), ("w2", &draws.w2, h.alpha2.alpha)] {
            ctx.push(hill_within(&format!("hill_{name}"), sample, target, n_se)?);
            if let Ok(c) = tail_constant(sample, target, PLATEAU) {
                ctx.push(Check::info(format!("{name}_plateau_constant"), c.c_hat, None));
                ctx.push(Check::info(format!("{name}_plateau_dispersion"), c.dispersion, None));
            }
            let ratio = rv_ratio_diagnostic(sample, 2.0, PLATEAU)?;
            ctx.push(Check::info(format!("{name}_ratio_limit"), 2f64.powf(-target), None));
            ctx.csv(&format!("rv_ratio_{name}.csv"), |w| export::write_diagnostic(w, &ratio))?;
        }
        Ok(())
    });
}

fn constants(ctx: &mut Ctx) {
    let rel_tol = ctx.config.tolerance("rel_tol");
    ctx.step("constants", |ctx, key| {
        let h = check_theorem_hypotheses(ctx.law())?;
        for c in hypothesis_checks(&h) {
            ctx.push(c);
        }
        let (alpha1, alpha2) = (h.alpha1.alpha, h.alpha2.alpha);
        let m = ctx.law().marginals();
        let draws = stationary_draws(ctx.law(), &ctx.sim()?, key.derive("draws"))?;
        let c2 = univariate_constant(&m.a4, &m.b2, alpha2, &draws.w2, key.derive("c2"))?;
        let p2 = tail_constant(&draws.w2, alpha2, PLATEAU)?;
        ctx.push(Check::info("c2", c2.c_hat, Some(c2.std_error)));
        ctx.push(Check::info("w2_plateau", p2.c_hat, None));
        ctx.push(Check::at_most("c2_relative_gap", rel(p2.c_hat, c2.c_hat), rel_tol));
        let mut records = vec![
            ConstantRecord::new("c2", c2.c_hat, Some(c2.std_error), alpha2, "goldie"),
            ConstantRecord::new("w2_plateau", p2.c_hat, None, alpha2, "plateau"),
        ];
        match h.regime {
            Regime::A1Dominant => {
                let c1 = overline_c1(ctx.law(), alpha1, &draws, key.derive("c1"))?;
                let p1 = tail_constant(&draws.w1, alpha1, PLATEAU)?;
                ctx.push(Check::info("c1_goldie", c1.goldie.c_hat, Some(c1.goldie.std_error)));
                ctx.push(Check::info("c1_two_over_alpha", c1.literal, Some(c1.literal_std_error)));
                ctx.push(Check::info("w1_plateau", p1.c_hat, None));
                ctx.push(Check::at_most("c1_relative_gap", rel(p1.c_hat, c1.goldie.c_hat), rel_tol));
                records.push(ConstantRecord::new("c1_goldie", c1.goldie.c_hat, Some(c1.goldie.std_error), alpha1, "goldie"));
                records.push(ConstantRecord::new(
                    "c1_two_over_alpha",
                    c1.literal,
                    Some(c1.literal_std_error),
                    alpha1,
                    "two_over_alpha",
                ));
                records.push(ConstantRecord::new("w1_plateau", p1.c_hat, None, alpha1, "plateau"));
            }
            Regime::A2Dominant => {
                let n = ctx.config.sim.n_draws;
                let t = tilde_c1(ctx.law(), alpha2, &c2, &WS_SCHEDULE, n, key.derive("ws"), rel_tol)?;
                let bounds = ws_bounds(ctx.law(), alpha2)?;
                let last = t.ws_trace[t.ws_trace.len() - 1];
                let (lo, hi) = bounds.at(last.s);
                let p1 = tail_constant(&draws.w1, alpha2, PLATEAU)?;
                ctx.push(Check::within("w", last.w_s, Some(last.std_error), lo - 3.0 * last.std_error, hi + 3.0 * last.std_error));
                ctx.push(Check::info("w_limit_lower", bounds.lower, None));
                ctx.push(Check::info("w_limit_upper", bounds.upper, None));
                ctx.push(Check::flag("ws_converged", t.converged));
                ctx.push(Check::info("c1_tilde", t.c_tilde.c_hat, Some(t.c_tilde.std_error)));
                ctx.push(Check::info("w1_plateau", p1.c_hat, None));
                ctx.push(Check::at_most("c1_relative_gap", rel(p1.c_hat, t.c_tilde.c_hat), rel_tol));
                let mut w = ConstantRecord::new("w", last.w_s, Some(last.std_error), alpha2, "strip_functional");
                w.bounds = Some((bounds.lower, bounds.upper));
                let mut ct = ConstantRecord::new("c1_tilde", t.c_tilde.c_hat, Some(t.c_tilde.std_error), alpha2, "c2_times_w");
                ct.bounds = Some(bounds.scaled(c2.c_hat));
                records.extend([w, ct, ConstantRecord::new("w1_plateau", p1.c_hat, None, alpha2, "plateau")]);
                ctx.csv("ws_trace.csv", |w| export::write_ws_trace(w, &t.ws_trace))?;
            }
            Regime::EqualOrUnresolved => {
                return Err(trisre::Error::RegimeMismatch("the two tail indices coincide".into()));
            }
        }
        let json = serde_json::to_string_pretty(&records).expect("records serialize");
        ctx.artifacts.push(("constants.json".into(), json.into_bytes()));
        Ok(())
    });
}

fn spectral(ctx: &mut Ctx) {
    let ks_max = ctx.config.tolerance("ks_max");
    let u = ctx.config.tolerance("u_quantile");
    let h = ctx.config.tolerance_or("window", 3.0).max(1.0) as usize;
    ctx.step("spectral", |ctx, key| {
        let hyp = check_theorem_hypotheses(ctx.law())?;
        for c in hypothesis_checks(&hyp) {
            ctx.push(c);
        }
        let path = stationary_draws(ctx.law(), &ctx.sim()?, key.derive("path"))?;
        let n_limit = ctx.config.sim.n_draws;
        match hyp.regime {
            Regime::A2Dominant => {
                let alpha2 = hyp.alpha2.alpha;
                let angular = angular_measure_threshold(&path, u)?;
                let cw = conditional_windows(&path, h, u, CHUNK)?;
                let draws = spectral_process_draws(ctx.law(), alpha2, h, n_limit, &angular, key.derive("limit"))?;
                ctx.push(Check::info("exceedances", cw.len() as f64, None));
                for (name, ks) in compare_with_limit(&cw, &draws) {
                    ctx.push(Check::at_most(format!("ks_{name}"), ks.statistic, ks_max));
                }
                ctx.push(Check::info("radius_pareto_ks_p_value", pareto_radius_check(&draws, alpha2).p_value, None));
                ctx.csv("angular.csv", |w| export::write_angular(w, &angular))?;
                let shown = &draws[..draws.len().min(SPECTRAL_CSV_DRAWS)];
                ctx.csv("spectral_draws.csv", |w| export::write_spectral_draws(w, shown))?;
            }
            Regime::A1Dominant => {
                let (a1, a2) = (hyp.alpha1.alpha, hyp.alpha2.alpha);
                for (name, comp, alpha, series) in [
                    ("w1", Component::First, a1, &path.w1),
                    ("w2", Component::Second, a2, &path.w2),
                ] {
                    let weighted = componentwise_spectral(ctx.law(), alpha, h, n_limit, key.derive(name), comp)?;
                    let thr = threshold_angles(&windows(series, h, CHUNK), h, u)?;
                    ctx.push(Check::info(format!("{name}_exceedances"), thr.len() as f64, None));
                    ctx.push(Check::at_most(format!("{name}_ks"), angular_distance(&weighted, &thr).statistic, ks_max));
                    ctx.csv(&format!("angular_{name}.csv"), |w| export::write_angular(w, &weighted))?;
                }
            }
            Regime::EqualOrUnresolved => {
                return Err(trisre::Error::RegimeMismatch("the two tail indices coincide".into()));
            }
        }
        Ok(())
    });
}

fn garch_verify(ctx: &mut Ctx) {
    let CoefficientLaw::GarchCoupled { params } = *ctx.law() else {
        unreachable!("validated before running");
    };
    let n_se = ctx.config.tolerance("n_se");
    let ks_max = ctx.config.tolerance("ks_max");
    let u = ctx.config.tolerance_or("u_quantile", 0.999);
    ctx.step("corollary", |ctx, key| {
        let r = garch::verify_corollary(&params, &ctx.sim()?, key, n_se)?;
        ctx.push(Check::info("alpha1", r.alpha1, None));
        ctx.push(Check::info("alpha2", r.alpha2, None));
        ctx.push(Check::flag("regime_coherent", r.regime_coherent));
        for c in r.sigma_tail_checks.iter().chain(&r.return_tail_checks) {
            let se = c.estimate.std_error;
            ctx.push(Check::within(
                format!("hill_{}", c.series),
                c.estimate.alpha_hat,
                Some(se),
                c.target - n_se * se,
                c.target + n_se * se,
            ));
        }
        Ok(())
    });
    ctx.step("garch_spectral", |ctx, key| {
        let settings = GarchSpectralSettings {
            h: 2,
            u_quantile: u,
            n_limit: ctx.config.sim.n_draws,
            sign_level: 0.01,
        };
        let mut cfg = ctx.sim()?;
        cfg.thinning = 1;
        match garch::garch_spectral_check(&params, &cfg, &settings, key)? {
            GarchSpectralReport::SymmetricSigns { components } => {
                for comp in &components {
                    let i = comp.component + 1;
                    ctx.push(Check::flag(format!("x{i}_sign_symmetry"), comp.signs_symmetric));
                    for (t, ks) in comp.magnitude_ks.iter().enumerate() {
                        ctx.push(Check::info(format!("x{i}_step{}_magnitude_ks", t + 1), ks.statistic, None));
                    }
                }
            }
            GarchSpectralReport::Process(r) => {
                ctx.push(Check::info("exceedances", r.n_exceedances as f64, None));
                for f in &r.functionals {
                    ctx.push(Check::at_most(format!("ks_{}", f.functional), f.ks.statistic, ks_max));
                }
                ctx.push(Check::info("radius_pareto_ks_p_value", r.radius_ks.p_value, None));
            }
        }
        Ok(())
    });
    ctx.step("garch_path", |ctx, key| {
        let mut cfg = ctx.sim()?;
        cfg.n_draws = cfg.n_draws.min(GARCH_CSV_ROWS);
        let path = garch::garch_chains(&params, &cfg, key)?;
        ctx.csv("garch_path.csv", |w| export::write_garch_path(w, &path))
    });
}

fn full_report(ctx: &mut Ctx) {
    ctx.step("suite", |ctx, _| {
        let outcomes = run_suite(ctx.config.scale, ctx.config.sim.base_seed);
        let mut summary = String::new();
        for o in &outcomes {
            let n = o.criterion;
            for c in &o.checks {
                let mut c = c.clone();
                c.name = format!("c{n}.{}", c.name);
                ctx.push(c);
            }
            if let Some(e) = &o.error {
                ctx.errors.push(StepError {
                    step: format!("c{n}"),
                    message: e.clone(),
                });
            }
            ctx.push(Check::flag(format!("c{n}.pass"), o.pass()));
            summary.push_str(&o.summary_line());
            summary.push('\n');
        }
        ctx.summary = Some(summary);
        Ok(())
    });
}

/// Runs the configured pipeline on a pool of `config.workers` threads.
/// Results do not depend on the worker count.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::config("/workers", e.to_string()))?;
    let pipeline = config.pipeline;
    let mut ctx = Ctx {
        config,
        key: StreamKey::new(config.sim.base_seed).derive(pipeline.as_str()),
        results: Vec::new(),
        errors: Vec::new(),
        artifacts: Vec::new(),
        summary: None,
    };
    pool.install(|| match pipeline {
        Pipeline::SolveIndex => solve_index(&mut ctx),
        Pipeline::Stationarity => stationarity(&mut ctx),
        Pipeline::Simulate => simulate(&mut ctx),
        Pipeline::Tails => tails(&mut ctx),
        Pipeline::Constants => constants(&mut ctx),
        Pipeline::Spectral => spectral(&mut ctx),
        Pipeline::GarchVerify => garch_verify(&mut ctx),
        Pipeline::FullReport => full_report(&mut ctx),
    });
    let mut artifacts: Vec<String> = ctx.artifacts.iter().map(|(n, _)| n.clone()).collect();
    if ctx.summary.is_some() {
        artifacts.push("summary.txt".into());
    }
    let pass = ctx.errors.is_empty() && !ctx.results.iter().any(Check::failed);
    Ok(RunOutput {
        report: RunReport {
            name: config.name.clone(),
            pipeline: pipeline.as_str().to_string(),
            config_digest: config.digest(),
            base_seed: config.sim.base_seed,
            results: ctx.results,
            errors: ctx.errors,
            artifacts,
            pass,
        },
        artifacts: ctx.artifacts,
        summary: ctx.summary,
    })
}

/// Writes `report.json`, `timing.json`, the CSV artifacts and any summary.
pub fn write_output(out: &RunOutput, dir: &Path, timing: &Timing) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let put = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    };
    for (name, bytes) in &out.artifacts {
        put(name, bytes)?;
    }
    if let Some(s) = &out.summary {
        put("summary.txt", s.as_bytes())?;
    }
    put("report.json", out.report.to_json().as_bytes())?;
    put("timing.json", serde_json::to_string_pretty(timing).expect("timing serializes").as_bytes())
}

/// [`run`] followed by [`write_output`] into `config.output_dir`.
pub fn run_and_write(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let out = run(config)?;
    let timing = Timing {
        wall_time_seconds: start.elapsed().as_secs_f64(),
        workers: config.workers,
    };
    write_output(&out, &config.output_dir, &timing)?;
    Ok(out.report)
}
