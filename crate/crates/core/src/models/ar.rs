//! Conjugate Bayesian AR(p) with an arbitrary lag set.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::sampling::{inv_gamma, mvn_information, std_normal};
use super::{check_series, lagged_design, least_squares, mean_var, McmcConfig, PriorSettings};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArSpec {
    lags: Vec<usize>,
    intercept: bool,
}

impl ArSpec {
    /// Lags must be positive and distinct; they are stored sorted.
    pub fn new(mut lags: Vec<usize>, intercept: bool) -> Result<Self> {
        if lags.contains(&0) {
            return Err(Error::domain("lag indices must be positive"));
        }
        lags.sort_unstable();
        let n = lags.len();
        lags.dedup();
        if lags.len() != n {
            return Err(Error::domain("lag indices must be distinct"));
        }
        if lags.is_empty() && !intercept {
            return Err(Error::domain(
                "model needs at least one lag or an intercept",
            ));
        }
        Ok(ArSpec { lags, intercept })
    }

    /// Lags 1..=p with intercept.
    pub fn order(p: usize) -> Result<Self> {
        Self::new((1..=p).collect(), true)
    }

    /// Intercept-only model: i.i.d. Gaussian forecasts.
    pub fn white_noise() -> Self {
        ArSpec {
            lags: Vec::new(),
            intercept: true,
        }
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    pub fn max_lag(&self) -> usize {
        self.lags.last().copied().unwrap_or(0)
    }

    pub fn n_coeffs(&self) -> usize {
        self.lags.len() + usize::from(self.intercept)
    }
}

/// Gaussian prior on coefficients and inverse-gamma prior on the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NigPrior {
    pub coeff_mean: DVector<f64>,
    pub coeff_cov: DMatrix<f64>,
    pub sigma_shape: f64,
    pub sigma_rate: f64,
}

impl NigPrior {
    /// Defaults scaled to the window: coefficients centred at 0 with variance
    /// `10 (mean^2 + var)` for the intercept and 1 for lags; variance prior
    /// IG(2, var(y)), whose mean is the sample variance.
    pub fn default_for(y: &[f64], spec: &ArSpec, settings: &PriorSettings) -> Result<Self> {
        let (m, v) = mean_var(y);
        let v = if v > 0.0 { v } else { 1.0 };
        let k = spec.n_coeffs();
        let mean = settings.coeff_mean.unwrap_or(0.0);
        let lag_var = settings.coeff_var.unwrap_or(1.0);
        let int_var = settings.intercept_var.unwrap_or(10.0 * (m * m + v));
        let diag = DVector::from_fn(k, |i, _| {
            if spec.intercept && i == 0 {
                int_var
            } else {
                lag_var
            }
        });
        let prior = NigPrior {
            coeff_mean: DVector::from_element(k, mean),
            coeff_cov: DMatrix::from_diagonal(&diag),
            sigma_shape: settings.sigma_shape.unwrap_or(2.0),
            sigma_rate: settings.sigma_rate.unwrap_or(v),
        };
        prior.validate(k)?;
        Ok(prior)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.coeff_mean.len() != k || self.coeff_cov.nrows() != k || self.coeff_cov.ncols() != k
        {
            return Err(Error::domain(format!(
                "prior dimension does not match {k} coefficients"
            )));
        }
        if !(self.sigma_shape > 0.0 && self.sigma_rate > 0.0) {
            return Err(Error::domain(
                "variance prior shape and rate must be positive",
            ));
        }
        if (&self.coeff_cov - self.coeff_cov.transpose()).amax()
            > 1e-12 * self.coeff_cov.amax().max(1.0)
            || self.coeff_cov.clone().cholesky().is_none()
        {
            return Err(Error::domain(
                "prior coefficient covariance must be symmetric positive definite",
            ));
        }
        Ok(())
    }

    pub(crate) fn precision(&self) -> Result<DMatrix<f64>> {
        self.coeff_cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("prior coefficient covariance is singular"))
    }
}

/// Conditional posterior of the coefficients given `sigma2`:
/// `V = (V0^{-1} + X'X / s2)^{-1}`, `mu = V (V0^{-1} mu0 + X'y / s2)`.
pub fn coefficient_conditional(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prior: &NigPrior,
    sigma2: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p0 = prior.precision()?;
    let prec = &p0 + x.transpose() * x / sigma2;
    let b = &p0 * &prior.coeff_mean + x.transpose() * y / sigma2;
    let cov = prec
        .try_inverse()
        .ok_or_else(|| Error::numerical("coefficient posterior precision is singular"))?;
    let mean = &cov * b;
    Ok((mean, cov))
}

/// Shape and rate of the inverse-gamma conditional of the variance.
pub fn sigma2_conditional(residual_ss: f64, n: usize, prior: &NigPrior) -> (f64, f64) {
    (
        prior.sigma_shape + 0.5 * n as f64,
        prior.sigma_rate + 0.5 * residual_ss,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArPosterior {
    pub spec: ArSpec,
    /// One coefficient vector per kept draw (intercept first, then lags in order).
    pub coeffs: Vec<DVector<f64>>,
    pub sigma2: Vec<f64>,
    pub seed: u64,
}

impl ArPosterior {
    pub fn coeff_mean(&self) -> DVector<f64> {
        let k = self.spec.n_coeffs();
        let mut m = DVector::zeros(k);
        for c in &self.coeffs {
            m += c;
        }
        m / self.coeffs.len() as f64
    }

    pub fn coeff_sd(&self) -> DVector<f64> {
        let m = self.coeff_mean();
        let mut v = DVector::zeros(m.len());
        for c in &self.coeffs {
            v += (c - &m).map(|d| d * d);
        }
        (v / (self.coeffs.len().max(2) - 1) as f64).map(f64::sqrt)
    }

    pub(crate) fn simulate<R: Rng + ?Sized>(
        &self,
        y_hist: &[f64],
        h: usize,
        picks: &[usize],
        rng: &mut R,
    ) -> Vec<f64> {
        let p = self.spec.max_lag();
        let mut buf: Vec<f64> = Vec::with_capacity(p + h);
        picks
            .iter()
            .map(|&j| {
                let beta = &self.coeffs[j];
                let sd = self.sigma2[j].sqrt();
                buf.clear();
                buf.extend_from_slice(&y_hist[y_hist.len() - p..]);
                let mut last = 0.0;
                for _ in 0..h {
                    let n = buf.len();
                    let mut mean = if self.spec.intercept { beta[0] } else { 0.0 };
                    let off = usize::from(self.spec.intercept);
                    for (i, &l) in self.spec.lags.iter().enumerate() {
                        mean += beta[off + i] * buf[n - l];
                    }
                    last = mean + sd * std_normal(rng);
                    buf.push(last);
                }
                last
            })
            .collect()
    }
}

/// Gibbs sampler alternating coefficients and variance.
pub fn fit_ar(
    y: &[f64],
    spec: &ArSpec,
    prior: &NigPrior,
    mcmc: &McmcConfig,
) -> Result<ArPosterior> {
    mcmc.validate()?;
    check_series(y, spec.max_lag())?;
    let k = spec.n_coeffs();
    prior.validate(k)?;
    let (x, target) = lagged_design(y, &spec.lags, spec.intercept);
    let n = target.len();
    let ols = least_squares(&x, &target)?;

    let p0 = prior.precision()?;
    let p0_mu = &p0 * &prior.coeff_mean;
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &target;
    let mut rng = rng_from_seed(mcmc.seed);

    let residual_ss = |beta: &DVector<f64>| (&target - &x * beta).norm_squared();
    let mut sigma2 = (residual_ss(&ols) / (n.saturating_sub(k).max(1)) as f64).max(1e-12);
    let mut coeffs = Vec::with_capacity(mcmc.keep);
    let mut sigmas = Vec::with_capacity(mcmc.keep);
    for it in 0..mcmc.burn + mcmc.keep {
        let prec = &p0 + &xtx / sigma2;
        let b = &p0_mu + &xty / sigma2;
        let beta = mvn_information(&prec, &b, &mut rng)?;
        let (a, r) = sigma2_conditional(residual_ss(&beta), n, prior);
        sigma2 = inv_gamma(a, r, &mut rng);
        if it >= mcmc.burn {
            coeffs.push(beta);
            sigmas.push(sigma2);
        }
    }
    Ok(ArPosterior {
        spec: spec.clone(),
        coeffs,
        sigma2: sigmas,
        seed: mcmc.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{predictive_draws, PosteriorDraws};
    use approx::assert_abs_diff_eq;

    fn simulate_ar1(alpha: f64, beta: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut y = Vec::with_capacity(n);
        let mut prev = alpha / (1.0 - beta);
        for _ in 0..n + 100 {
            prev = alpha + beta * prev + sigma * std_normal(&mut rng);
            y.push(prev);
        }
        y.split_off(100)
    }

    #[test]
    fn spec_validation() {
        assert!(ArSpec::new(vec![0, 1], true).is_err());
        assert!(ArSpec::new(vec![1, 1], true).is_err());
        assert!(ArSpec::new(vec![], false).is_err());
        let s = ArSpec::new(vec![7, 1, 2], true).unwrap();
        assert_eq!(s.lags(), &[1, 2, 7]);
        assert_eq!(s.max_lag(), 7);
    }

    #[test]
    fn flat_prior_recovers_least_squares() {
        let y = simulate_ar1(0.3, 0.6, 1.0, 200, 1);
        let spec = ArSpec::order(2).unwrap();
        let (x, t) = lagged_design(&y, spec.lags(), true);
        let prior = NigPrior {
            coeff_mean: DVector::zeros(3),
            coeff_cov: DMatrix::identity(3, 3) * 1e12,
            sigma_shape: 2.0,
            sigma_rate: 1.0,
        };
        let (mean, _) = coefficient_conditional(&x, &t, &prior, 0.7).unwrap();
        let ols = least_squares(&x, &t).unwrap();
        assert!((mean - ols).amax() < 1e-6);
    }

    #[test]
    fn scalar_conjugacy_closed_form() {
        // one regressor: mu = (m0/v0 + sum(xy)/s2) / (1/v0 + sum(x^2)/s2)
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, -1.0, 0.5]);
        let y = DVector::from_vec(vec![0.8, 2.3, -0.7, 0.1]);
        let prior = NigPrior {
            coeff_mean: DVector::from_element(1, 0.2),
            coeff_cov: DMatrix::from_element(1, 1, 0.5),
            sigma_shape: 3.0,
            sigma_rate: 2.0,
        };
        let s2 = 0.9;
        let (mean, cov) = coefficient_conditional(&x, &y, &prior, s2).unwrap();
        let sxx = 1.0 + 4.0 + 1.0 + 0.25;
        let sxy = 0.8 + 4.6 + 0.7 + 0.05;
        let prec = 1.0 / 0.5 + sxx / s2;
        assert_abs_diff_eq!(cov[(0, 0)], 1.0 / prec, epsilon = 1e-12);
        assert_abs_diff_eq!(mean[0], (0.2 / 0.5 + sxy / s2) / prec, epsilon = 1e-12);
        let (a, b) = sigma2_conditional(1.7, 4, &prior);
        assert_abs_diff_eq!(a, 5.0);
        assert_abs_diff_eq!(b, 2.85);
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let y = simulate_ar1(0.0, 0.8, 1.0, 2000, 2);
        let spec = ArSpec::order(1).unwrap();
        let prior = NigPrior::default_for(&y, &spec, &PriorSettings::default()).unwrap();
        let post = fit_ar(&y, &spec, &prior, &McmcConfig::new(500, 1000, 3)).unwrap();
        let m = post.coeff_mean();
        let s = post.coeff_sd();
        assert!((m[1] - 0.8).abs() < 3.0 * s[1], "{} ± {}", m[1], s[1]);
        assert!(post.sigma2.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let y = simulate_ar1(0.0, 0.5, 1.0, 100, 4);
        let spec = ArSpec::order(1).unwrap();
        let prior = NigPrior::default_for(&y, &spec, &PriorSettings::default()).unwrap();
        let cfg = McmcConfig::new(50, 100, 9);
        assert_eq!(
            fit_ar(&y, &spec, &prior, &cfg).unwrap(),
            fit_ar(&y, &spec, &prior, &cfg).unwrap()
        );
    }

    #[test]
    fn rank_deficient_design_errors() {
        let y = vec![2.0; 40];
        let spec = ArSpec::order(1).unwrap();
        let prior = NigPrior::default_for(&y, &spec, &PriorSettings::default()).unwrap();
        let err = fit_ar(&y, &spec, &prior, &McmcConfig::new(10, 10, 0)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    fn point_mass(alpha: f64, beta: f64, sigma2: f64, n: usize) -> PosteriorDraws {
        PosteriorDraws::Ar(ArPosterior {
            spec: ArSpec::order(1).unwrap(),
            coeffs: vec![DVector::from_vec(vec![alpha, beta]); n],
            sigma2: vec![sigma2; n],
            seed: 0,
        })
    }

    #[test]
    fn white_noise_predictive_is_standard_normal() {
        let post = point_mass(0.0, 0.0, 1.0, 100);
        for h in [1, 4] {
            let s = predictive_draws(&post, &[3.0], h, 10_000, 5).unwrap();
            assert_eq!(s.draws.len(), 10_000);
            let u: Vec<f64> = s
                .draws
                .iter()
                .map(|&v| crate::distributions::std_normal_cdf(v))
                .collect();
            assert!(crate::inference::ks_uniform_distance(&u) < 0.02);
        }
    }

    #[test]
    fn two_step_moments() {
        let post = point_mass(0.0, 0.5, 1.0, 100);
        let m = 200_000;
        let s = predictive_draws(&post, &[2.0], 2, m, 6).unwrap();
        let mean = s.draws.iter().sum::<f64>() / m as f64;
        let var = s.draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se = (1.25f64 / m as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
        // sd of the sample variance ~ var * sqrt(2/m)
        assert!(
            (var - 1.25).abs() < 3.0 * 1.25 * (2.0 / m as f64).sqrt(),
            "{var}"
        );
    }

    #[test]
    fn predictive_errors() {
        let post = point_mass(0.0, 0.5, 1.0, 10);
        assert!(predictive_draws(&post, &[1.0], 0, 10, 0).is_err());
        assert!(predictive_draws(&post, &[1.0], 1, 0, 0).is_err());
        assert!(predictive_draws(&post, &[], 1, 5, 0).is_err());
    }
}
