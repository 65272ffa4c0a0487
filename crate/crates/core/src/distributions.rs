//! Predictive distributions.
//!
//! A forecast is either one of four analytic families or an empirical CDF
//! built from Monte Carlo draws. Normal forecasts are parameterised by mean
//! and *variance* (`N(0, 16)` has standard deviation 4), Gamma by shape and
//! rate, Student-t by location, scale and degrees of freedom.
//!
//! CDFs are written directly on top of the regularised incomplete gamma/beta
//! functions from `statrs`; quantiles start from a closed-form or inverse-beta
//! guess and are polished with a bracketed Newton iteration.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn std_normal_quantile(alpha: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AnalyticDistribution {
    Normal { mean: f64, variance: f64 },
    StudentT { location: f64, scale: f64, dof: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl AnalyticDistribution {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        let d = AnalyticDistribution::Normal { mean, variance };
        d.validate()?;
        Ok(d)
    }

    pub fn student_t(location: f64, scale: f64, dof: f64) -> Result<Self> {
        let d = AnalyticDistribution::StudentT {
            location,
            scale,
            dof,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        let d = AnalyticDistribution::Gamma { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        let d = AnalyticDistribution::Beta { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AnalyticDistribution::Normal { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::domain("normal mean must be finite"));
                }
                positive("variance", variance)
            }
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                if !location.is_finite() {
                    return Err(Error::domain("student-t location must be finite"));
                }
                positive("scale", scale)?;
                positive("degrees of freedom", dof)
            }
            AnalyticDistribution::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)
            }
            AnalyticDistribution::Beta { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
        }
    }

    /// Closed support interval (possibly infinite at either end).
    pub fn support(&self) -> (f64, f64) {
        match self {
            AnalyticDistribution::Normal { .. } | AnalyticDistribution::StudentT { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            AnalyticDistribution::Gamma { .. } => (0.0, f64::INFINITY),
            AnalyticDistribution::Beta { .. } => (0.0, 1.0),
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        match *self {
            AnalyticDistribution::Normal { mean, variance } => {
                std_normal_cdf((u - mean) / variance.sqrt())
            }
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                let t = (u - location) / scale;
                if t.is_infinite() {
                    return if t > 0.0 { 1.0 } else { 0.0 };
                }
                let x = dof / (dof + t * t);
                let tail = 0.5 * beta_reg(0.5 * dof, 0.5, x);
                if t < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            AnalyticDistribution::Gamma { shape, rate } => {
                if u <= 0.0 {
                    0.0
                } else if u.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, rate * u)
                }
            }
            AnalyticDistribution::Beta { a, b } => {
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, u)
                }
            }
        }
    }

    pub fn pdf(&self, u: f64) -> f64 {
        match *self {
            AnalyticDistribution::Normal { mean, variance } => {
                let sd = variance.sqrt();
                std_normal_pdf((u - mean) / sd) / sd
            }
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                let t = (u - location) / scale;
                let log_norm = ln_gamma(0.5 * (dof + 1.0))
                    - ln_gamma(0.5 * dof)
                    - 0.5 * (dof * std::f64::consts::PI).ln()
                    - scale.ln();
                (log_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
            }
            AnalyticDistribution::Gamma { shape, rate } => {
                if u < 0.0 || u.is_infinite() {
                    0.0
                } else if u == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => rate,
                        _ => 0.0,
                    }
                } else {
                    (shape * rate.ln() + (shape - 1.0) * u.ln() - rate * u - ln_gamma(shape)).exp()
                }
            }
            AnalyticDistribution::Beta { a, b } => {
                if !(0.0..=1.0).contains(&u) {
                    0.0
                } else if (u == 0.0 && a == 1.0) || (u == 1.0 && b == 1.0) {
                    (-ln_beta(a, b)).exp()
                } else if (u == 0.0 && a < 1.0) || (u == 1.0 && b < 1.0) {
                    f64::INFINITY
                } else if u == 0.0 || u == 1.0 {
                    0.0
                } else {
                    ((a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_beta(a, b)).exp()
                }
            }
        }
    }

    /// Quantile for `alpha` strictly inside (0, 1). The caller validates the range.
    pub fn quantile(&self, alpha: f64) -> f64 {
        let (lo, hi) = self.support();
        let guess = match *self {
            AnalyticDistribution::Normal { mean, variance } => {
                mean + variance.sqrt() * std_normal_quantile(alpha)
            }
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                let tail = alpha.min(1.0 - alpha);
                let x = inv_beta_reg(0.5 * dof, 0.5, 2.0 * tail);
                let t = (dof * (1.0 - x) / x).sqrt();
                let t = if alpha < 0.5 { -t } else { t };
                location + scale * t
            }
            AnalyticDistribution::Gamma { shape, rate } => {
                // Wilson-Hilferty
                let z = std_normal_quantile(alpha);
                let w = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * shape.sqrt());
                let g = shape * w * w * w;
                if g > 0.0 {
                    g / rate
                } else {
                    (alpha * shape * ln_gamma(shape).exp()).powf(1.0 / shape) / rate
                }
            }
            AnalyticDistribution::Beta { a, b } => inv_beta_reg(a, b, alpha),
        };
        self.polish_quantile(alpha, guess, lo, hi)
    }

    /// Bracketed Newton refinement of `x` towards cdf(x) = alpha.
    fn polish_quantile(&self, alpha: f64, guess: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut x = if guess.is_finite() && guess > lo && guess < hi {
            guess
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else {
            0.0
        };
        for _ in 0..200 {
            let f = self.cdf(x) - alpha;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = x - f / d;
            if !(next.is_finite() && next > lo && next < hi) {
                next = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => x + x.abs().max(1.0),
                    (false, true) => x - x.abs().max(1.0),
                    (false, false) => 0.0,
                };
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                return next;
            }
            if lo.is_finite() && hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
                return next;
            }
            x = next;
        }
        x
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            AnalyticDistribution::Normal { mean, variance } => {
                let d = rand_distr::Normal::new(mean, variance.sqrt()).expect("validated");
                d.sample_iter(rng).take(n).collect()
            }
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                let d = rand_distr::StudentT::new(dof).expect("validated");
                (0..n).map(|_| location + scale * d.sample(rng)).collect()
            }
            AnalyticDistribution::Gamma { shape, rate } => {
                let d = rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated");
                d.sample_iter(rng).take(n).collect()
            }
            AnalyticDistribution::Beta { a, b } => {
                let d = rand_distr::Beta::new(a, b).expect("validated");
                d.sample_iter(rng).take(n).collect()
            }
        }
    }

    /// `n` i.i.d. draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(self.sample_with(n, &mut rng_from_seed(seed)))
    }
}

impl fmt::Display for AnalyticDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticDistribution::Normal { mean, variance } => write!(f, "N({mean},{variance})"),
            AnalyticDistribution::StudentT {
                location,
                scale,
                dof,
            } => {
                write!(f, "t({location},{scale},{dof})")
            }
            AnalyticDistribution::Gamma { shape, rate } => write!(f, "Ga({shape},{rate})"),
            AnalyticDistribution::Beta { a, b } => write!(f, "Be({a},{b})"),
        }
    }
}

/// Parses `normal:MEAN,VARIANCE`, `student-t:LOC,SCALE,DOF`, `gamma:SHAPE,RATE`
/// and `beta:A,B`.
impl FromStr for AnalyticDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| Error::domain(format!("expected FAMILY:PARAMS, got '{s}'")))?;
        let params = args
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::domain(format!("bad parameter '{p}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let want = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "'{name}' takes {k} parameters, got {}",
                    params.len()
                )))
            }
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "normal" | "n" => {
                want(2)?;
                Self::normal(params[0], params[1])
            }
            "student-t" | "t" | "studentt" => {
                want(3)?;
                Self::student_t(params[0], params[1], params[2])
            }
            "gamma" | "ga" => {
                want(2)?;
                Self::gamma(params[0], params[1])
            }
            "beta" | "be" => {
                want(2)?;
                Self::beta(params[0], params[1])
            }
            other => Err(Error::domain(format!(
                "unknown distribution family '{other}'"
            ))),
        }
    }
}

/// Empirical CDF of a finite sample. Evaluation counts draws `<= u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    draws: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::domain("empirical CDF needs at least one draw"));
        }
        if let Some(bad) = draws.iter().find(|d| !d.is_finite()) {
            return Err(Error::domain(format!("non-finite draw {bad}")));
        }
        draws.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { draws })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn count(&self) -> usize {
        self.draws.len()
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.draws.partition_point(|&d| d <= u) as f64 / self.draws.len() as f64
    }

    /// The ⌈alpha·n⌉-th order statistic.
    pub fn quantile(&self, alpha: f64) -> f64 {
        let n = self.draws.len();
        let nf = n as f64;
        let mut k = ((alpha * nf).ceil() as usize).clamp(1, n);
        // guard against alpha*n landing just above an integer
        while k > 1 && (k - 1) as f64 / nf >= alpha {
            k -= 1;
        }
        while k < n && (k as f64) / nf < alpha {
            k += 1;
        }
        self.draws[k - 1]
    }

    pub fn min(&self) -> f64 {
        self.draws[0]
    }

    pub fn max(&self) -> f64 {
        self.draws[self.draws.len() - 1]
    }
}

/// A probabilistic forecast.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictiveDistribution {
    Analytic(AnalyticDistribution),
    Empirical(EmpiricalCdf),
}

impl From<AnalyticDistribution> for PredictiveDistribution {
    fn from(d: AnalyticDistribution) -> Self {
        PredictiveDistribution::Analytic(d)
    }
}

impl From<EmpiricalCdf> for PredictiveDistribution {
    fn from(d: EmpiricalCdf) -> Self {
        PredictiveDistribution::Empirical(d)
    }
}

impl PredictiveDistribution {
    pub fn empirical(draws: Vec<f64>) -> Result<Self> {
        Ok(PredictiveDistribution::Empirical(EmpiricalCdf::new(draws)?))
    }

    /// Unit step at `y`: all mass on a single point.
    pub fn point_mass(y: f64) -> Result<Self> {
        Self::empirical(vec![y])
    }

    pub fn cdf_eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::domain(format!(
                "cdf evaluated at non-finite point {u}"
            )));
        }
        Ok(self.cdf(u))
    }

    pub(crate) fn cdf(&self, u: f64) -> f64 {
        match self {
            PredictiveDistribution::Analytic(d) => d.cdf(u),
            PredictiveDistribution::Empirical(e) => e.eval(u),
        }
    }

    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must lie in (0,1), got {alpha}"
            )));
        }
        Ok(self.quantile_unchecked(alpha))
    }

    pub(crate) fn quantile_unchecked(&self, alpha: f64) -> f64 {
        match self {
            PredictiveDistribution::Analytic(d) => d.quantile(alpha),
            PredictiveDistribution::Empirical(e) => e.quantile(alpha),
        }
    }

    pub fn pdf_eval(&self, u: f64) -> Result<f64> {
        match self {
            PredictiveDistribution::Analytic(d) => Ok(d.pdf(u)),
            PredictiveDistribution::Empirical(_) => Err(Error::Unsupported(
                "density is not defined for an empirical CDF".into(),
            )),
        }
    }

    /// Analytic forecasts draw fresh samples; empirical ones resample their draws.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            PredictiveDistribution::Analytic(d) => d.sample(n, seed),
            PredictiveDistribution::Empirical(e) => {
                if n == 0 {
                    return Err(Error::domain("sample size must be at least 1"));
                }
                let mut rng = rng_from_seed(seed);
                Ok((0..n)
                    .map(|_| e.draws[rng.random_range(0..e.draws.len())])
                    .collect())
            }
        }
    }

    /// Points inside the open interval (a, b) where the CDF is not smooth:
    /// finite support bounds for analytic families, every distinct draw for
    /// an empirical CDF. Appended to `out` in increasing order.
    pub(crate) fn kinks_between(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        match self {
            PredictiveDistribution::Analytic(d) => {
                let (lo, hi) = d.support();
                for p in [lo, hi] {
                    if p > a && p < b {
                        out.push(p);
                    }
                }
            }
            PredictiveDistribution::Empirical(e) => {
                let start = e.draws.partition_point(|&d| d <= a);
                let mut last = a;
                for &d in &e.draws[start..] {
                    if d >= b {
                        break;
                    }
                    if d > last {
                        out.push(d);
                        last = d;
                    }
                }
            }
        }
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self, PredictiveDistribution::Empirical(_))
    }
}
