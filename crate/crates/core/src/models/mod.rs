//! Bayesian autoregressive forecasting models.
//!
//! Three samplers are provided: a conjugate AR(p) (Gaussian coefficients,
//! inverse-gamma variance), a two-regime Markov-switching AR(1) with
//! forward-filter backward-sampler regime paths, and a time-varying parameter
//! AR with Carter-Kohn coefficient paths. Each fit yields [`PosteriorDraws`],
//! from which [`predictive_draws`] simulates h-step-ahead forecasts.
//!
//! Every sampler is a single sequential chain driven by a ChaCha8 stream
//! seeded from [`McmcConfig::seed`], so identical inputs give identical draws.

pub mod ar;
pub mod msar;
pub(crate) mod sampling;
pub mod tvpar;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use ar::{fit_ar, ArPosterior, ArSpec, NigPrior};
pub use msar::{fit_msar, MsArPosterior, MsArPrior, MsArSpec};
pub use tvpar::{fit_tvpar, TvpArPosterior, TvpArSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub burn: usize,
    pub keep: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            burn: 1000,
            keep: 2000,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn new(burn: usize, keep: usize, seed: u64) -> Self {
        McmcConfig { burn, keep, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.keep == 0 {
            return Err(Error::domain("MCMC must keep at least one draw"));
        }
        Ok(())
    }
}

/// Optional overrides for the Gaussian/inverse-gamma priors. Unset values
/// fall back to defaults scaled by the estimation window (see [`NigPrior::default_for`]).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSettings {
    pub coeff_mean: Option<f64>,
    pub coeff_var: Option<f64>,
    pub intercept_var: Option<f64>,
    pub sigma_shape: Option<f64>,
    pub sigma_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Ar { spec: ArSpec, prior: PriorSettings },
    MsAr { spec: MsArSpec, prior: MsArPrior },
    TvpAr { spec: TvpArSpec },
}

impl ModelSpec {
    pub fn max_lag(&self) -> usize {
        match self {
            ModelSpec::Ar { spec, .. } => spec.max_lag(),
            ModelSpec::MsAr { .. } => 1,
            ModelSpec::TvpAr { spec } => spec.lags,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Ar { .. } => "ar",
            ModelSpec::MsAr { .. } => "msar",
            ModelSpec::TvpAr { .. } => "tvpar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorDraws {
    Ar(ArPosterior),
    MsAr(MsArPosterior),
    TvpAr(TvpArPosterior),
}

impl PosteriorDraws {
    pub fn n_kept(&self) -> usize {
        match self {
            PosteriorDraws::Ar(p) => p.sigma2.len(),
            PosteriorDraws::MsAr(p) => p.sigma2.len(),
            PosteriorDraws::TvpAr(p) => p.sigma2.len(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            PosteriorDraws::Ar(p) => p.seed,
            PosteriorDraws::MsAr(p) => p.seed,
            PosteriorDraws::TvpAr(p) => p.seed,
        }
    }
}

/// Simulated values of `y_{T+h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSample {
    pub horizon: usize,
    pub draws: Vec<f64>,
}

/// Fits any supported model on the series `y`.
pub fn fit(y: &[f64], model: &ModelSpec, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    match model {
        ModelSpec::Ar { spec, prior } => {
            let nig = NigPrior::default_for(y, spec, prior)?;
            Ok(PosteriorDraws::Ar(fit_ar(y, spec, &nig, mcmc)?))
        }
        ModelSpec::MsAr { spec, prior } => {
            Ok(PosteriorDraws::MsAr(fit_msar(y, spec, prior, mcmc)?))
        }
        ModelSpec::TvpAr { spec } => Ok(PosteriorDraws::TvpAr(fit_tvpar(y, spec, mcmc)?)),
    }
}

/// `m` draws of `y_{T+h}` given the history `y_hist` (whose last value is
/// `y_T`). Posterior draws are visited with an even stride when `m` does not
/// exceed the number kept, and resampled with replacement otherwise.
pub fn predictive_draws(
    posterior: &PosteriorDraws,
    y_hist: &[f64],
    h: usize,
    m: usize,
    seed: u64,
) -> Result<PredictiveSample> {
    if h < 1 {
        return Err(Error::domain("forecast horizon must be at least 1"));
    }
    if m < 1 {
        return Err(Error::domain(
            "number of predictive draws must be at least 1",
        ));
    }
    let n_kept = posterior.n_kept();
    if n_kept == 0 {
        return Err(Error::domain("posterior has no draws"));
    }
    let needed = match posterior {
        PosteriorDraws::Ar(p) => p.spec.max_lag(),
        PosteriorDraws::MsAr(_) => 1,
        PosteriorDraws::TvpAr(p) => p.spec.lags,
    };
    if y_hist.len() < needed.max(1) {
        return Err(Error::domain(format!(
            "history must hold at least {needed} values"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let picks = select_draws(n_kept, m, &mut rng);
    let draws = match posterior {
        PosteriorDraws::Ar(p) => p.simulate(y_hist, h, &picks, &mut rng),
        PosteriorDraws::MsAr(p) => p.simulate(y_hist, h, &picks, &mut rng),
        PosteriorDraws::TvpAr(p) => p.simulate(y_hist, h, &picks, &mut rng),
    };
    Ok(PredictiveSample { horizon: h, draws })
}

fn select_draws<R: Rng + ?Sized>(n_kept: usize, m: usize, rng: &mut R) -> Vec<usize> {
    if m <= n_kept {
        (0..m).map(|i| i * n_kept / m).collect()
    } else {
        (0..m).map(|_| rng.random_range(0..n_kept)).collect()
    }
}

pub(crate) fn check_series(y: &[f64], max_lag: usize) -> Result<()> {
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::domain(format!(
            "series value {i} is not finite ({v})"
        )));
    }
    if y.len() <= max_lag + 10 {
        return Err(Error::domain(format!(
            "series of length {} is too short for {} lags (need more than {})",
            y.len(),
            max_lag,
            max_lag + 10
        )));
    }
    Ok(())
}

/// Regression of `y_t` on an optional intercept and `y_{t-l}` for each lag,
/// for `t = max_lag .. n-1`.
pub(crate) fn lagged_design(
    y: &[f64],
    lags: &[usize],
    intercept: bool,
) -> (DMatrix<f64>, DVector<f64>) {
    let p = lags.iter().copied().max().unwrap_or(0);
    let n = y.len() - p;
    let k = lags.len() + usize::from(intercept);
    let x = DMatrix::from_fn(n, k, |r, c| {
        let t = r + p;
        if intercept && c == 0 {
            1.0
        } else {
            y[t - lags[c - usize::from(intercept)]]
        }
    });
    let target = DVector::from_fn(n, |r, _| y[r + p]);
    (x, target)
}

pub(crate) fn mean_var(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let v = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Least squares via SVD; errors when the design is numerically rank deficient.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    if x.ncols() > 0 && (smax == 0.0 || smin / smax < 1e-10) {
        return Err(Error::numerical(format!(
            "regressor matrix is rank deficient (singular values range {smin:.3e} .. {smax:.3e}); \
             the series may be constant or the lags collinear"
        )));
    }
    svd.solve(y, 0.0)
        .map_err(|e| Error::numerical(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_layout() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, t) = lagged_design(&y, &[1, 3], true);
        assert_eq!(x.nrows(), 2);
        assert_eq!(
            x.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 3.0, 1.0]
        );
        assert_eq!(t.as_slice(), &[4.0, 5.0]);
    }

    #[test]
    fn stride_selection() {
        let mut rng = rng_from_seed(0);
        assert_eq!(select_draws(10, 5, &mut rng), vec![0, 2, 4, 6, 8]);
        let r = select_draws(3, 7, &mut rng);
        assert_eq!(r.len(), 7);
        assert!(r.iter().all(|&i| i < 3));
    }

    #[test]
    fn series_checks() {
        assert!(check_series(&[1.0; 11], 1).is_err());
        assert!(check_series(&[1.0; 12], 1).is_ok());
        let mut y = vec![1.0; 30];
        y[3] = f64::NAN;
        assert!(check_series(&y, 1).is_err());
    }
}
