//! Laws of the recurrence coefficients, their moment functions, the
//! tail-index equation `E X^alpha = 1`, and the stationarity and tail
//! hypotheses that the rest of the crate relies on.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::garch::GarchParams;
use crate::quadrature::gaussian_abs_expectation;
use crate::rng::{chunks, StreamKey};

/// Law of a strictly positive scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositiveDistribution {
    /// `exp(mu + sigma * Z)`.
    LogNormal { mu: f64, sigma: f64 },
    /// `scale * U^power`, `U` uniform on (0, 1).
    ScaledUniformPow { scale: f64, power: f64 },
    /// `scale * (U^(-1/alpha) - 1)`, the Pareto type II law with tail index `alpha`.
    ParetoLomax { alpha: f64, scale: f64 },
    Constant { value: f64 },
    /// `a * Z^2 + b`, `Z` standard normal.
    ChiSqAffine { a: f64, b: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a positive finite number, got {v}")))
    }
}

/// `E |Z|^p` for standard normal `Z`, `p > -1`.
fn abs_normal_moment(p: f64) -> f64 {
    (0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0)) - ln_gamma(0.5)).exp()
}

fn is_small_nonneg_integer(h: f64) -> bool {
    (0.0..=32.0).contains(&h) && h.fract() == 0.0
}

/// `E (a Z^2 + b)^n` by binomial expansion with `E Z^{2k} = (2k-1)!!`.
fn chisq_affine_integer_moment(a: f64, b: f64, n: u32) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut double_fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            binom *= f64::from(n - k + 1) / f64::from(k);
            double_fact *= f64::from(2 * k - 1);
        }
        total += binom * a.powi(k as i32) * b.powi((n - k) as i32) * double_fact;
    }
    total
}

impl PositiveDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(invalid(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", sigma)
            }
            Self::ScaledUniformPow { scale, power } => {
                positive("scale", scale)?;
                positive("power", power)
            }
            Self::ParetoLomax { alpha, scale } => {
                positive("alpha", alpha)?;
                positive("scale", scale)
            }
            Self::Constant { value } => positive("value", value),
            Self::ChiSqAffine { a, b } => {
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
                    return Err(invalid(format!("a, b must be finite and nonnegative, got {a}, {b}")));
                }
                if a == 0.0 && b == 0.0 {
                    return Err(invalid("a and b cannot both be zero"));
                }
                Ok(())
            }
        }
    }

    /// A lattice law for `log X`; only the constant kind is.
    pub fn is_arithmetic(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::ChiSqAffine { a, .. } => a == 0.0,
            _ => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            Self::ScaledUniformPow { scale, power } => {
                let u = open_unit(rng);
                scale * u.powf(power)
            }
            Self::ParetoLomax { alpha, scale } => {
                let u = open_unit(rng);
                // exp_m1 keeps precision when U is near one
                scale * (-u.ln() / alpha).exp_m1()
            }
            Self::Constant { value } => value,
            Self::ChiSqAffine { a, b } => {
                let z: f64 = rng.sample(StandardNormal);
                a * z * z + b
            }
        }
    }

    /// `E X^h` in closed form or by quadrature. `Err(DivergentMoment)` when infinite.
    pub fn exact_moment(&self, h: f64) -> Result<(f64, MomentMethod)> {
        use MomentMethod::*;
        let diverge = Err(Error::DivergentMoment { order: h });
        match *self {
            Self::LogNormal { mu, sigma } => {
                Ok(((h * mu + 0.5 * h * h * sigma * sigma).exp(), ClosedForm))
            }
            Self::ScaledUniformPow { scale, power } => {
                if power * h > -1.0 {
                    Ok((scale.powf(h) / (power * h + 1.0), ClosedForm))
                } else {
                    diverge
                }
            }
            Self::ParetoLomax { alpha, scale } => {
                if h > -1.0 && h < alpha {
                    let log_m = h * scale.ln() + ln_gamma(1.0 + h) + ln_gamma(alpha - h) - ln_gamma(alpha);
                    Ok((log_m.exp(), ClosedForm))
                } else {
                    diverge
                }
            }
            Self::Constant { value } => Ok((value.powf(h), ClosedForm)),
            Self::ChiSqAffine { a, b } => {
                if a == 0.0 {
                    Ok((b.powf(h), ClosedForm))
                } else if b == 0.0 {
                    if 2.0 * h > -1.0 {
                        Ok((a.powf(h) * abs_normal_moment(2.0 * h), ClosedForm))
                    } else {
                        diverge
                    }
                } else if is_small_nonneg_integer(h) {
                    Ok((chisq_affine_integer_moment(a, b, h as u32), ClosedForm))
                } else {
                    let v = gaussian_abs_expectation(|z| (a * z * z + b).powf(h));
                    Ok((v, Quadrature))
                }
            }
        }
    }

    /// `E X^h log X`, the derivative of the moment function at `h`.
    pub fn exact_log_moment(&self, h: f64) -> Result<f64> {
        let (m, _) = self.exact_moment(h)?;
        Ok(match *self {
            Self::LogNormal { mu, sigma } => (mu + h * sigma * sigma) * m,
            Self::ScaledUniformPow { scale, power } => {
                let d = power * h + 1.0;
                scale.powf(h) * (scale.ln() / d - power / (d * d))
            }
            Self::ParetoLomax { alpha, scale } => m * (scale.ln() + digamma(1.0 + h) - digamma(alpha - h)),
            Self::Constant { value } => m * value.ln(),
            Self::ChiSqAffine { a, b } => {
                if a == 0.0 {
                    m * b.ln()
                } else if b == 0.0 {
                    m * (a.ln() + std::f64::consts::LN_2 + digamma(h + 0.5))
                } else {
                    gaussian_abs_expectation(|z| {
                        let x = a * z * z + b;
                        x.powf(h) * x.ln()
                    })
                }
            }
        })
    }

    /// `E log X`.
    pub fn mean_log(&self) -> Result<f64> {
        self.exact_log_moment(0.0)
    }

    /// Sampler for the law reweighted by `x^h / E X^h`.
    pub fn tilted(&self, h: f64) -> Result<TiltedDistribution> {
        let (norm, _) = self.exact_moment(h)?;
        let inner = match *self {
            Self::LogNormal { mu, sigma } => TiltInner::Plain(Self::LogNormal {
                mu: mu + h * sigma * sigma,
                sigma,
            }),
            Self::ScaledUniformPow { scale, power } => TiltInner::UniformPow {
                scale,
                power,
                inv_shape: 1.0 / (power * h + 1.0),
            },
            Self::ParetoLomax { alpha, scale } => TiltInner::BetaPrime {
                scale,
                num: Gamma::new(h + 1.0, 1.0).map_err(|e| invalid(e.to_string()))?,
                den: Gamma::new(alpha - h, 1.0).map_err(|e| invalid(e.to_string()))?,
            },
            Self::Constant { .. } => TiltInner::Plain(*self),
            Self::ChiSqAffine { a, b } => TiltInner::Gaussian(TiltedGaussian::new(a, b, h)?),
        };
        Ok(TiltedDistribution { inner, normalizer: norm })
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal reweighted by `(a z^2 + b)^h`, sampled by rejection from
/// a widened normal proposal.
#[derive(Debug, Clone)]
pub struct TiltedGaussian {
    a: f64,
    b: f64,
    h: f64,
    proposal_sd: f64,
    log_bound: f64,
}

impl TiltedGaussian {
    pub fn new(a: f64, b: f64, h: f64) -> Result<Self> {
        if h < 0.0 {
            return Err(invalid("tilt exponent must be nonnegative"));
        }
        let log_ratio_sup = |s2: f64| -> f64 {
            // sup over u = z^2 >= 0 of -c u / 2 + h ln(a u + b), c = 1 - 1/s2
            let c = 1.0 - 1.0 / s2;
            let u = if a == 0.0 || h == 0.0 {
                0.0
            } else if c <= 0.0 {
                f64::INFINITY
            } else {
                (2.0 * h / c - b / a).max(0.0)
            };
            if !u.is_finite() {
                return f64::INFINITY;
            }
            -0.5 * c * u + h * (a * u + b).ln()
        };
        let mut best = (f64::INFINITY, 1.0, 0.0);
        for i in 0..=400 {
            let s2 = 1.0 + 0.02 * f64::from(i) * (1.0 + h);
            let lb = log_ratio_sup(s2);
            // rejection cost is proportional to s * e^{lb}
            let cost = lb + 0.5 * s2.ln();
            if cost < best.0 {
                best = (cost, s2, lb);
            }
        }
        if !best.0.is_finite() {
            return Err(invalid("no rejection envelope for tilted gaussian"));
        }
        Ok(Self {
            a,
            b,
            h,
            proposal_sd: best.1.sqrt(),
            log_bound: best.2,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = 1.0 - 1.0 / (self.proposal_sd * self.proposal_sd);
        loop {
            let n: f64 = rng.sample(StandardNormal);
            let z = self.proposal_sd * n;
            let u = z * z;
            let log_r = -0.5 * c * u + self.h * (self.a * u + self.b).ln() - self.log_bound;
            let v: f64 = rng.random();
            if v.ln() < log_r {
                return z;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum TiltInner {
    Plain(PositiveDistribution),
    UniformPow { scale: f64, power: f64, inv_shape: f64 },
    BetaPrime { scale: f64, num: Gamma<f64>, den: Gamma<f64> },
    Gaussian(TiltedGaussian),
}

/// Exponentially tilted version of a [`PositiveDistribution`].
#[derive(Debug, Clone)]
pub struct TiltedDistribution {
    inner: TiltInner,
    /// `E X^h` under the untilted law.
    pub normalizer: f64,
}

impl TiltedDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            TiltInner::Plain(d) => d.sample(rng),
            TiltInner::UniformPow { scale, power, inv_shape } => {
                let u = open_unit(rng).powf(*inv_shape);
                scale * u.powf(*power)
            }
            TiltInner::BetaPrime { scale, num, den } => scale * num.sample(rng) / den.sample(rng),
            TiltInner::Gaussian(g) => {
                let z = g.sample(rng);
                g.a * z * z + g.b
            }
        }
    }
}

/// One time step's coefficients: the matrix `[[a1, a2], [0, a4]]` and the
/// vector `(b1, b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a1: f64,
    pub a2: f64,
    pub a4: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Joint law of [`Coefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoefficientLaw {
    IndependentComponents {
        a1: PositiveDistribution,
        a2: PositiveDistribution,
        a4: PositiveDistribution,
        b1: PositiveDistribution,
        b2: PositiveDistribution,
    },
    GarchCoupled { params: GarchParams },
}

/// Marginal laws of the five coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginals {
    pub a1: PositiveDistribution,
    pub a2: PositiveDistribution,
    pub a4: PositiveDistribution,
    pub b1: PositiveDistribution,
    pub b2: PositiveDistribution,
}

impl CoefficientLaw {
    pub fn independent(
        a1: PositiveDistribution,
        a2: PositiveDistribution,
        a4: PositiveDistribution,
        b1: PositiveDistribution,
        b2: PositiveDistribution,
    ) -> Result<Self> {
        let law = Self::IndependentComponents { a1, a2, a4, b1, b2 };
        law.validate()?;
        Ok(law)
    }

    pub fn garch(params: GarchParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::GarchCoupled { params })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::IndependentComponents { a1, a2, a4, b1, b2 } => {
                for (name, d) in [("a1", a1), ("a2", a2), ("a4", a4), ("b1", b1), ("b2", b2)] {
                    d.validate().map_err(|e| invalid(format!("{name}: {e}")))?;
                }
                Ok(())
            }
            Self::GarchCoupled { params } => params.validate(),
        }
    }

    pub fn marginals(&self) -> Marginals {
        match self {
            Self::IndependentComponents { a1, a2, a4, b1, b2 } => Marginals {
                a1: *a1,
                a2: *a2,
                a4: *a4,
                b1: *b1,
                b2: *b2,
            },
            Self::GarchCoupled { params } => params.marginals(),
        }
    }

    /// True when every coefficient is a constant.
    pub fn is_deterministic(&self) -> bool {
        let m = self.marginals();
        [m.a1, m.a2, m.a4, m.b1, m.b2]
            .iter()
            .all(|d| matches!(d, PositiveDistribution::Constant { .. }))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Coefficients {
        self.draw_with_noise(rng).0
    }

    /// A draw together with the bivariate noise that produced it (GARCH mode only).
    pub fn draw_with_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (Coefficients, Option<[f64; 2]>) {
        match self {
            Self::IndependentComponents { a1, a2, a4, b1, b2 } => (
                Coefficients {
                    a1: a1.sample(rng),
                    a2: a2.sample(rng),
                    a4: a4.sample(rng),
                    b1: b1.sample(rng),
                    b2: b2.sample(rng),
                },
                None,
            ),
            Self::GarchCoupled { params } => {
                let z = params.draw_noise(rng);
                (params.to_sre_coefficients(z), Some(z))
            }
        }
    }

    /// Sampler for the joint law reweighted by `A4^h / E A4^h`.
    pub fn tilted_by_a4(&self, h: f64) -> Result<TiltedLaw> {
        match self {
            Self::IndependentComponents { a4, .. } => {
                let t = a4.tilted(h)?;
                Ok(TiltedLaw {
                    normalizer: t.normalizer,
                    kind: TiltedLawKind::Independent { base: self.clone(), a4: t },
                })
            }
            Self::GarchCoupled { params } => {
                let a4 = PositiveDistribution::ChiSqAffine {
                    a: params.alpha22,
                    b: params.beta22,
                };
                let (normalizer, _) = a4.exact_moment(h)?;
                Ok(TiltedLaw {
                    normalizer,
                    kind: TiltedLawKind::Garch {
                        params: *params,
                        z2: TiltedGaussian::new(params.alpha22, params.beta22, h)?,
                    },
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
enum TiltedLawKind {
    Independent { base: CoefficientLaw, a4: TiltedDistribution },
    Garch { params: GarchParams, z2: TiltedGaussian },
}

/// A [`CoefficientLaw`] under the change of measure `A4^h / E A4^h`.
#[derive(Debug, Clone)]
pub struct TiltedLaw {
    kind: TiltedLawKind,
    /// `E A4^h` under the original law.
    pub normalizer: f64,
}

impl TiltedLaw {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Coefficients {
        match &self.kind {
            TiltedLawKind::Independent { base, a4 } => {
                let CoefficientLaw::IndependentComponents { a1, a2, b1, b2, .. } = base else {
                    unreachable!()
                };
                Coefficients {
                    a1: a1.sample(rng),
                    a2: a2.sample(rng),
                    a4: a4.sample(rng),
                    b1: b1.sample(rng),
                    b2: b2.sample(rng),
                }
            }
            TiltedLawKind::Garch { params, z2 } => {
                let z2 = z2.sample(rng);
                let n: f64 = rng.sample(StandardNormal);
                let z1 = params.rho * z2 + (1.0 - params.rho * params.rho).sqrt() * n;
                params.to_sre_coefficients([z1, z2])
            }
        }
    }
}

/// `n` i.i.d. coefficient tuples.
pub fn sample<R: Rng + ?Sized>(law: &CoefficientLaw, rng: &mut R, n: usize) -> Vec<Coefficients> {
    (0..n).map(|_| law.draw(rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl MomentMethod {
    pub fn is_exact(self) -> bool {
        self != Self::MonteCarlo
    }
}

/// `E X^h` with provenance. `value` may be `+inf` on the Monte Carlo path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub value: f64,
    pub method: MomentMethod,
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentBudget {
    /// Closed form, or adaptive quadrature where no closed form exists.
    Analytic,
    MonteCarlo { samples: usize, key: StreamKey },
}

pub fn moment(dist: &PositiveDistribution, h: f64, budget: MomentBudget) -> Result<MomentValue> {
    dist.validate()?;
    match budget {
        MomentBudget::Analytic => {
            let (value, method) = dist.exact_moment(h)?;
            Ok(MomentValue {
                value,
                method,
                std_error: 0.0,
                n_samples: 0,
            })
        }
        MomentBudget::MonteCarlo { samples, key } => {
            if samples < 2 {
                return Err(invalid("Monte Carlo budget needs at least two samples"));
            }
            Ok(MomentSample::draw(dist, samples, key).moment(h))
        }
    }
}

/// A fixed sample of `log X`, so that `h -> mean X^h` is one deterministic
/// convex function (common random numbers across `h`).
#[derive(Debug, Clone)]
pub struct MomentSample {
    log_values: Vec<f64>,
}

impl MomentSample {
    pub fn draw(dist: &PositiveDistribution, n: usize, key: StreamKey) -> Self {
        let parts: Vec<Vec<f64>> = chunks(n)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(c, s, e)| {
                let mut rng = key.rng(c);
                (s..e).map(|_| dist.sample(&mut rng).ln()).collect()
            })
            .collect();
        Self {
            log_values: parts.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    fn mean_se(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let n = self.log_values.len() as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for &l in &self.log_values {
            let v = f(l);
            s += v;
            s2 += v * v;
        }
        let mean = s / n;
        let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    pub fn moment(&self, h: f64) -> MomentValue {
        let (value, std_error) = self.mean_se(|l| (h * l).exp());
        MomentValue {
            value,
            method: MomentMethod::MonteCarlo,
            std_error: if value.is_finite() { std_error } else { f64::INFINITY },
            n_samples: self.len(),
        }
    }

    /// Sample mean of `X^h log X`.
    pub fn log_moment(&self, h: f64) -> (f64, f64) {
        self.mean_se(|l| (h * l).exp() * l)
    }
}

/// Root of `E X^alpha = 1` on the positive axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexSolution {
    pub alpha: f64,
    /// `m(alpha) - 1` at the returned root.
    pub residual: f64,
    pub method: MomentMethod,
    pub bracket: (f64, f64),
    /// Delta-method error of `alpha` from Monte Carlo noise in `m`; zero otherwise.
    pub std_error: f64,
}

/// Moment doubling stops here.
pub const MAX_BRACKET_ORDER: f64 = 64.0;

enum MomentFn<'a> {
    Exact(&'a PositiveDistribution),
    Sampled(MomentSample),
}

impl MomentFn<'_> {
    /// `Ok(None)` on divergence.
    fn eval(&self, h: f64) -> Result<Option<(f64, MomentMethod)>> {
        match self {
            Self::Exact(d) => match d.exact_moment(h) {
                Ok(v) => Ok(Some(v)),
                Err(Error::DivergentMoment { .. }) => Ok(None),
                Err(e) => Err(e),
            },
            Self::Sampled(s) => {
                let m = s.moment(h);
                Ok(m.value.is_finite().then_some((m.value, MomentMethod::MonteCarlo)))
            }
        }
    }
}

/// Solve `E X^alpha = 1` for `alpha > 0`.
///
/// The moment function is convex with `m(0) = 1`, so when `E log X < 0` the
/// set `{h > 0 : m(h) < 1}` is the interval `(0, alpha)`. The root is
/// bracketed by doubling `h` and refined by bisection until both the
/// bracket width and `|m - 1|` are within `tol`.
pub fn solve_tail_index(dist: &PositiveDistribution, tol: f64, budget: MomentBudget) -> Result<TailIndexSolution> {
    dist.validate()?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if let PositiveDistribution::Constant { value } = *dist {
        return if value < 1.0 {
            Err(Error::NoPositiveRoot(format!("constant {value} < 1 has m(h) < 1 for all h > 0")))
        } else {
            Err(Error::NotContracting { mean_log: value.ln() })
        };
    }
    if dist.is_arithmetic() {
        return Err(Error::NoPositiveRoot("law is degenerate".into()));
    }
    let m = match budget {
        MomentBudget::Analytic => MomentFn::Exact(dist),
        MomentBudget::MonteCarlo { samples, key } => MomentFn::Sampled(MomentSample::draw(dist, samples.max(2), key)),
    };
    let mean_log = match &m {
        MomentFn::Exact(d) => d.mean_log()?,
        MomentFn::Sampled(s) => s.log_moment(0.0).0,
    };
    if !(mean_log < 0.0) {
        return Err(Error::NotContracting { mean_log });
    }

    // bracket
    let mut lo = 0.0;
    let mut h = 1.0;
    let mut hi;
    loop {
        match m.eval(h)? {
            Some((v, _)) if v >= 1.0 => {
                hi = h;
                break;
            }
            Some(_) => {
                lo = h;
                h *= 2.0;
                if h > MAX_BRACKET_ORDER {
                    return Err(Error::NoPositiveRoot(format!(
                        "m(h) < 1 for every h up to {MAX_BRACKET_ORDER}"
                    )));
                }
            }
            None => {
                // moment diverges at h; locate the boundary from below
                let mut div = h;
                loop {
                    let mid = 0.5 * (lo + div);
                    match m.eval(mid)? {
                        None => div = mid,
                        Some((v, _)) if v >= 1.0 => {
                            hi = mid;
                            break;
                        }
                        Some(_) => lo = mid,
                    }
                    if div - lo <= 1e-12 * div.max(1.0) {
                        return Err(Error::DivergentBeforeRoot { boundary: div });
                    }
                }
                break;
            }
        }
    }

    // bisection
    let mut best = None;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v, method) = m
            .eval(mid)?
            .expect("moment finite inside a finite bracket");
        let residual = v - 1.0;
        best = Some((mid, residual, method));
        if residual.abs() <= tol && hi - lo <= 2.0 * tol {
            break;
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (alpha, residual, method) = best.ok_or_else(|| Error::NoPositiveRoot("empty bracket".into()))?;
    let std_error = match &m {
        MomentFn::Exact(_) => 0.0,
        MomentFn::Sampled(s) => {
            let se_m = s.moment(alpha).std_error;
            let slope = s.log_moment(alpha).0;
            if slope > 0.0 {
                se_m / slope
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(TailIndexSolution {
        alpha,
        residual,
        method,
        bracket: (lo, hi),
        std_error,
    })
}

/// Default grid for [`check_stationarity`], largest exponent first.
pub fn default_eps_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..=20).rev().map(|i| f64::from(i) / 20.0).collect();
    g.extend([0.025, 0.01, 0.005, 0.001]);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub holds: bool,
    pub witness_eps: Option<f64>,
    /// `max(E A1^eps, E A4^eps)` at the witness; without a witness, the
    /// smallest such value seen on the grid.
    pub rho: f64,
}

impl StationarityReport {
    /// `eps^-1 log rho`, the bound on the top Lyapunov exponent; `+inf` without a witness.
    pub fn lyapunov_bound(&self) -> f64 {
        match self.witness_eps {
            Some(eps) => self.rho.ln() / eps,
            None => f64::INFINITY,
        }
    }
}

/// First `eps` in the grid with `E A1^eps < 1`, `E A4^eps < 1`, `E A2^eps < inf`.
pub fn check_stationarity(law: &CoefficientLaw, eps_grid: &[f64]) -> Result<StationarityReport> {
    law.validate()?;
    if eps_grid.is_empty() {
        return Err(invalid("eps grid is empty"));
    }
    if let Some(bad) = eps_grid.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(invalid(format!("eps grid values must lie in (0, 1], got {bad}")));
    }
    let m = law.marginals();
    let finite = |d: &PositiveDistribution, e: f64| -> Result<Option<f64>> {
        match d.exact_moment(e) {
            Ok((v, _)) => Ok(Some(v)),
            Err(Error::DivergentMoment { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut smallest = f64::INFINITY;
    for &eps in eps_grid {
        let (Some(r1), Some(r4)) = (finite(&m.a1, eps)?, finite(&m.a4, eps)?) else {
            continue;
        };
        let rho = r1.max(r4);
        smallest = smallest.min(rho);
        if rho < 1.0 && finite(&m.a2, eps)?.is_some() {
            return Ok(StationarityReport {
                holds: true,
                witness_eps: Some(eps),
                rho,
            });
        }
    }
    Ok(StationarityReport {
        holds: false,
        witness_eps: None,
        rho: smallest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `alpha1 < alpha2`: `W1` has its own index `alpha1`.
    A1Dominant,
    /// `alpha1 > alpha2`: the tail of `W2` propagates into `W1`.
    A2Dominant,
    EqualOrUnresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub alpha1: TailIndexSolution,
    pub alpha2: TailIndexSolution,
    pub regime: Regime,
    pub cross_moment_ok: bool,
}

impl HypothesisReport {
    pub fn tail_index_w1(&self) -> f64 {
        self.alpha1.alpha.min(self.alpha2.alpha)
    }
}

/// Solver tolerance used by [`check_theorem_hypotheses`].
pub const HYPOTHESIS_TOL: f64 = 1e-10;

pub fn check_theorem_hypotheses(law: &CoefficientLaw) -> Result<HypothesisReport> {
    law.validate()?;
    let m = law.marginals();
    let alpha1 = solve_tail_index(&m.a1, HYPOTHESIS_TOL, MomentBudget::Analytic)?;
    let alpha2 = solve_tail_index(&m.a4, HYPOTHESIS_TOL, MomentBudget::Analytic)?;
    let gap = alpha1.alpha - alpha2.alpha;
    let resolution = 3.0 * alpha1.std_error.hypot(alpha2.std_error) + 10.0 * HYPOTHESIS_TOL;
    let regime = if gap.abs() <= resolution {
        Regime::EqualOrUnresolved
    } else if gap < 0.0 {
        Regime::A1Dominant
    } else {
        Regime::A2Dominant
    };
    let cross_moment_ok = m.a2.exact_moment(alpha1.alpha.min(alpha2.alpha)).is_ok();
    Ok(HypothesisReport {
        alpha1,
        alpha2,
        regime,
        cross_moment_ok,
    })
}

/// Running means of `X^alpha log+ X` over doubling sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMomentCheck {
    pub sizes: Vec<usize>,
    pub means: Vec<f64>,
    /// Successive relative changes shrank below 5% over the last three doublings.
    pub stable: bool,
}

/// Heuristic finiteness check for `E X^alpha log+ X`. Not a proof: a
/// non-Cauchy running mean is only evidence of divergence.
pub fn check_log_moment(dist: &PositiveDistribution, alpha: f64, key: StreamKey, doublings: u32) -> LogMomentCheck {
    let mut rng = key.rng(0);
    let mut sizes = Vec::new();
    let mut means = Vec::new();
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut target = 1usize << 10;
    for _ in 0..doublings.max(4) {
        while n < target {
            let x = dist.sample(&mut rng);
            sum += x.powf(alpha) * x.ln().max(0.0);
            n += 1;
        }
        sizes.push(n);
        means.push(sum / n as f64);
        target *= 2;
    }
    let rel: Vec<f64> = means
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[1].abs().max(f64::MIN_POSITIVE)).abs())
        .collect();
    let stable = means.iter().all(|m| m.is_finite()) && rel.iter().rev().take(3).all(|&r| r < 0.05);
    LogMomentCheck { sizes, means, stable }
}
