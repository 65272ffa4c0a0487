//! Two-regime Markov-switching AR(1):
//! `y_t = alpha_{S_t} + beta_{S_t} y_{t-1} + sigma_{S_t} e_t`, with `S_t` a
//! Markov chain with transition matrix `Xi`.
//!
//! Regimes are identified by ordering the variances, `sigma2_1 < sigma2_2`;
//! after each sweep the labels are swapped if the draw violates it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ar::{ArSpec, NigPrior};
use super::sampling::{dirichlet, inv_gamma, mvn_information, std_normal};
use super::{check_series, lagged_design, least_squares, McmcConfig, PriorSettings};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsArSpec {
    pub regimes: usize,
    pub lags: usize,
}

impl Default for MsArSpec {
    fn default() -> Self {
        MsArSpec {
            regimes: 2,
            lags: 1,
        }
    }
}

impl MsArSpec {
    pub fn validate(&self) -> Result<()> {
        if self.regimes != 2 || self.lags != 1 {
            return Err(Error::Unsupported(format!(
                "Markov-switching model supports 2 regimes and 1 lag, got {} regimes and {} lags",
                self.regimes, self.lags
            )));
        }
        Ok(())
    }
}

/// Per-regime Gaussian/inverse-gamma prior (shared by both regimes) and
/// Dirichlet concentrations for each row of the transition matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MsArPrior {
    pub regime: PriorSettings,
    pub transition: [[f64; 2]; 2],
}

impl Default for MsArPrior {
    fn default() -> Self {
        MsArPrior {
            regime: PriorSettings::default(),
            transition: [[8.0, 2.0], [2.0, 8.0]],
        }
    }
}

impl MsArPrior {
    pub fn validate(&self) -> Result<()> {
        if self
            .transition
            .iter()
            .flatten()
            .any(|&c| !(c > 0.0 && c.is_finite()))
        {
            return Err(Error::domain("Dirichlet concentrations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsArPosterior {
    pub alpha: Vec<[f64; 2]>,
    pub beta: Vec<[f64; 2]>,
    pub sigma2: Vec<[f64; 2]>,
    pub xi: Vec<[[f64; 2]; 2]>,
    /// Regime at the last observation in each kept draw.
    pub last_state: Vec<u8>,
    /// Posterior probability of the high-variance regime at each observation
    /// (the first observation, used only as a lag, is excluded).
    pub regime2_prob: Vec<f64>,
    /// Kept sweeps in which some regime had no observations and its
    /// parameters were drawn from the prior.
    pub empty_regime_draws: usize,
    pub seed: u64,
}

impl MsArPosterior {
    /// Regime with the higher posterior probability at each observation (0 or 1).
    pub fn posterior_mode_path(&self) -> Vec<usize> {
        self.regime2_prob
            .iter()
            .map(|&p| usize::from(p > 0.5))
            .collect()
    }

    pub(crate) fn simulate<R: Rng + ?Sized>(
        &self,
        y_hist: &[f64],
        h: usize,
        picks: &[usize],
        rng: &mut R,
    ) -> Vec<f64> {
        let y_t = y_hist[y_hist.len() - 1];
        picks
            .iter()
            .map(|&j| {
                let mut s = self.last_state[j] as usize;
                let mut y = y_t;
                for _ in 0..h {
                    s = if rng.random::<f64>() < self.xi[j][s][0] {
                        0
                    } else {
                        1
                    };
                    y = self.alpha[j][s]
                        + self.beta[j][s] * y
                        + self.sigma2[j][s].sqrt() * std_normal(rng);
                }
                y
            })
            .collect()
    }
}

/// Counts of regime transitions `N[m][l]` along a path.
pub fn transition_counts(path: &[usize]) -> [[f64; 2]; 2] {
    let mut n = [[0.0; 2]; 2];
    for w in path.windows(2) {
        n[w[0]][w[1]] += 1.0;
    }
    n
}

/// Mean of the Dirichlet posterior `Dir(c_m + N_m)` for each row.
pub fn transition_posterior_mean(counts: &[[f64; 2]; 2], prior: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for m in 0..2 {
        let a0 = prior[m][0] + counts[m][0];
        let a1 = prior[m][1] + counts[m][1];
        out[m] = [a0 / (a0 + a1), a1 / (a0 + a1)];
    }
    out
}

fn stationary(xi: &[[f64; 2]; 2]) -> [f64; 2] {
    let (p01, p10) = (xi[0][1], xi[1][0]);
    if p01 + p10 <= 0.0 {
        return [0.5, 0.5];
    }
    let pi0 = p10 / (p01 + p10);
    [pi0, 1.0 - pi0]
}

/// Forward filter, backward sampler for the regime path.
fn ffbs<R: Rng + ?Sized>(
    y: &[f64],
    alpha: &[f64; 2],
    beta: &[f64; 2],
    sigma2: &[f64; 2],
    xi: &[[f64; 2]; 2],
    filt: &mut Vec<[f64; 2]>,
    path: &mut [usize],
    rng: &mut R,
) {
    let n = y.len() - 1;
    filt.clear();
    let mut pred = stationary(xi);
    let log_norm = [-0.5 * sigma2[0].ln(), -0.5 * sigma2[1].ln()];
    for t in 1..=n {
        let mut ll = [0.0; 2];
        for m in 0..2 {
            let e = y[t] - alpha[m] - beta[m] * y[t - 1];
            ll[m] = log_norm[m] - 0.5 * e * e / sigma2[m];
        }
        let mx = ll[0].max(ll[1]);
        let mut f = [pred[0] * (ll[0] - mx).exp(), pred[1] * (ll[1] - mx).exp()];
        let s = f[0] + f[1];
        if s > 0.0 && s.is_finite() {
            f = [f[0] / s, f[1] / s];
        } else {
            f = pred;
        }
        filt.push(f);
        pred = [
            f[0] * xi[0][0] + f[1] * xi[1][0],
            f[0] * xi[0][1] + f[1] * xi[1][1],
        ];
    }
    path[n - 1] = usize::from(rng.random::<f64>() >= filt[n - 1][0]);
    for t in (0..n - 1).rev() {
        let next = path[t + 1];
        let w0 = filt[t][0] * xi[0][next];
        let w1 = filt[t][1] * xi[1][next];
        let p0 = if w0 + w1 > 0.0 { w0 / (w0 + w1) } else { 0.5 };
        path[t] = usize::from(rng.random::<f64>() >= p0);
    }
}

/// Gibbs sampler: regime path by FFBS, per-regime coefficients and variances
/// from their conjugate conditionals, Dirichlet transition rows, then relabeling.
pub fn fit_msar(
    y: &[f64],
    spec: &MsArSpec,
    prior: &MsArPrior,
    mcmc: &McmcConfig,
) -> Result<MsArPosterior> {
    spec.validate()?;
    prior.validate()?;
    mcmc.validate()?;
    check_series(y, 1)?;
    let ar1 = ArSpec::order(1)?;
    let nig = NigPrior::default_for(y, &ar1, &prior.regime)?;
    let p0 = nig.precision()?;
    let p0_mu = &p0 * &nig.coeff_mean;

    let (x, target) = lagged_design(y, &[1], true);
    let ols = least_squares(&x, &target)?;
    let resid_var = (&target - &x * &ols).norm_squared() / (target.len() - 2) as f64;
    let resid_var = resid_var.max(1e-12);

    let n = y.len() - 1;
    let mut alpha = [ols[0]; 2];
    let mut beta = [ols[1]; 2];
    let mut sigma2 = [0.5 * resid_var, 2.0 * resid_var];
    let mut xi = [[0.9, 0.1], [0.1, 0.9]];
    let mut rng = rng_from_seed(mcmc.seed);
    let mut filt = Vec::with_capacity(n);
    let mut path = vec![0usize; n];

    let mut out = MsArPosterior {
        alpha: Vec::with_capacity(mcmc.keep),
        beta: Vec::with_capacity(mcmc.keep),
        sigma2: Vec::with_capacity(mcmc.keep),
        xi: Vec::with_capacity(mcmc.keep),
        last_state: Vec::with_capacity(mcmc.keep),
        regime2_prob: vec![0.0; n],
        empty_regime_draws: 0,
        seed: mcmc.seed,
    };

    for it in 0..mcmc.burn + mcmc.keep {
        ffbs(
            y, &alpha, &beta, &sigma2, &xi, &mut filt, &mut path, &mut rng,
        );

        let mut empty = false;
        for m in 0..2 {
            let mut xtx = DMatrix::<f64>::zeros(2, 2);
            let mut xty = DVector::<f64>::zeros(2);
            let mut count = 0usize;
            for t in 0..n {
                if path[t] == m {
                    let (xl, yt) = (y[t], y[t + 1]);
                    xtx[(0, 0)] += 1.0;
                    xtx[(0, 1)] += xl;
                    xtx[(1, 1)] += xl * xl;
                    xty[0] += yt;
                    xty[1] += xl * yt;
                    count += 1;
                }
            }
            xtx[(1, 0)] = xtx[(0, 1)];
            if count == 0 {
                empty = true;
            }
            let prec = &p0 + &xtx / sigma2[m];
            let b = &p0_mu + &xty / sigma2[m];
            let coef = mvn_information(&prec, &b, &mut rng)?;
            alpha[m] = coef[0];
            beta[m] = coef[1];
            let mut ssr = 0.0;
            for t in 0..n {
                if path[t] == m {
                    let e = y[t + 1] - alpha[m] - beta[m] * y[t];
                    ssr += e * e;
                }
            }
            sigma2[m] = inv_gamma(
                nig.sigma_shape + 0.5 * count as f64,
                nig.sigma_rate + 0.5 * ssr,
                &mut rng,
            );
        }

        let counts = transition_counts(&path);
        for m in 0..2 {
            let row = dirichlet(
                &[
                    prior.transition[m][0] + counts[m][0],
                    prior.transition[m][1] + counts[m][1],
                ],
                &mut rng,
            );
            xi[m] = [row[0], row[1]];
        }

        if sigma2[0] > sigma2[1] {
            alpha.swap(0, 1);
            beta.swap(0, 1);
            sigma2.swap(0, 1);
            xi = [[xi[1][1], xi[1][0]], [xi[0][1], xi[0][0]]];
            for s in path.iter_mut() {
                *s = 1 - *s;
            }
        }

        if it >= mcmc.burn {
            out.alpha.push(alpha);
            out.beta.push(beta);
            out.sigma2.push(sigma2);
            out.xi.push(xi);
            out.last_state.push(path[n - 1] as u8);
            for (acc, &s) in out.regime2_prob.iter_mut().zip(&path) {
                *acc += s as f64;
            }
            if empty {
                out.empty_regime_draws += 1;
            }
        }
    }
    let keep = mcmc.keep as f64;
    for p in &mut out.regime2_prob {
        *p /= keep;
    }
    Ok(out)
}
