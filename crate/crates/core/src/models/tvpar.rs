//! Time-varying parameter AR(p), p in {1, 2}:
//! `y_t = x_t' beta_t + sigma e_t` with `x_t = (1, y_{t-1}[, y_{t-2}])` and
//! `beta_t = A beta_{t-1} + eta_t`, `eta_t ~ N(0, Omega)`.
//!
//! The coefficient path is drawn by Kalman filtering and backward simulation
//! (Carter-Kohn). `A` is drawn one column at a time from its Gaussian
//! conditional given the other columns, `Omega` from an inverse-Wishart and
//! `sigma^2` from an inverse-gamma conditional.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{inv_gamma, inv_wishart, robust_cholesky, std_normal, std_normal_vec};
use super::{check_series, lagged_design, least_squares, mean_var, McmcConfig};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default inverse-Wishart degrees of freedom for `Omega`.
pub const DEFAULT_OMEGA_DOF: f64 = 40.0;

/// Hyperparameters. Scales are relative to the window's least-squares fit:
/// with `V` the OLS coefficient covariance `s2 (X'X)^{-1}`, the initial state
/// is `N(b_ols, state_var * V)` and `Omega ~ IW(omega_scale * omega_dof * V,
/// omega_dof)`, so the prior for `Omega` is centred near `omega_scale * V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvpArSpec {
    pub lags: usize,
    pub state_var: f64,
    /// Prior mean of the diagonal of `A` (off-diagonal prior means are 0).
    pub a_mean: f64,
    pub a_var: f64,
    pub omega_scale: f64,
    /// Inverse-Wishart degrees of freedom; defaults to [`DEFAULT_OMEGA_DOF`].
    pub omega_dof: Option<f64>,
    pub sigma_shape: f64,
    /// Defaults to the sample variance of the window.
    pub sigma_rate: Option<f64>,
}

impl Default for TvpArSpec {
    fn default() -> Self {
        TvpArSpec {
            lags: 1,
            state_var: 4.0,
            a_mean: 1.0,
            a_var: 0.01,
            omega_scale: 1e-3,
            omega_dof: None,
            sigma_shape: 2.0,
            sigma_rate: None,
        }
    }
}

impl TvpArSpec {
    pub fn with_lags(lags: usize) -> Self {
        TvpArSpec {
            lags,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.lags + 1
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.lags == 1 || self.lags == 2) {
            errs.push(format!("TVP-AR supports 1 or 2 lags, got {}", self.lags));
        }
        for (name, v) in [
            ("state_var", self.state_var),
            ("a_var", self.a_var),
            ("omega_scale", self.omega_scale),
            ("sigma_shape", self.sigma_shape),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive"));
            }
        }
        if let Some(d) = self.omega_dof {
            if d <= self.dim() as f64 + 1.0 {
                errs.push(format!("omega_dof must exceed {}", self.dim() + 1));
            }
        }
        if let Some(r) = self.sigma_rate {
            if !(r > 0.0) {
                errs.push("sigma_rate must be positive".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::domain(errs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvpArPosterior {
    pub spec: TvpArSpec,
    /// `beta_T` per kept draw.
    pub beta_last: Vec<Vec<f64>>,
    /// `A` per kept draw, row-major.
    pub a: Vec<Vec<f64>>,
    /// Lower Cholesky factor of `Omega` per kept draw, row-major.
    pub omega_chol: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    /// Posterior mean and standard deviation of `beta_t` for each observation.
    pub path_mean: Vec<Vec<f64>>,
    pub path_sd: Vec<Vec<f64>>,
    /// Sweeps in which a covariance needed symmetrisation and jitter.
    pub jitter_events: usize,
    pub seed: u64,
}

impl TvpArPosterior {
    pub(crate) fn simulate<R: Rng + ?Sized>(
        &self,
        y_hist: &[f64],
        h: usize,
        picks: &[usize],
        rng: &mut R,
    ) -> Vec<f64> {
        let k = self.spec.dim();
        let p = self.spec.lags;
        let mut buf = Vec::with_capacity(p + h);
        let mut beta = vec![0.0; k];
        let mut next = vec![0.0; k];
        let mut z = vec![0.0; k];
        picks
            .iter()
            .map(|&j| {
                beta.copy_from_slice(&self.beta_last[j]);
                let a = &self.a[j];
                let l = &self.omega_chol[j];
                let sd = self.sigma2[j].sqrt();
                buf.clear();
                buf.extend_from_slice(&y_hist[y_hist.len() - p..]);
                let mut y = 0.0;
                for _ in 0..h {
                    for v in z.iter_mut() {
                        *v = std_normal(rng);
                    }
                    for r in 0..k {
                        let mut s = 0.0;
                        for c in 0..k {
                            s += a[r * k + c] * beta[c] + l[r * k + c] * z[c];
                        }
                        next[r] = s;
                    }
                    beta.copy_from_slice(&next);
                    let n = buf.len();
                    let mut mean = beta[0];
                    for i in 1..k {
                        mean += beta[i] * buf[n - i];
                    }
                    y = mean + sd * std_normal(rng);
                    buf.push(y);
                }
                y
            })
            .collect()
    }
}

/// Gibbs sampler for the TVP-AR model.
pub fn fit_tvpar(y: &[f64], spec: &TvpArSpec, mcmc: &McmcConfig) -> Result<TvpArPosterior> {
    spec.validate()?;
    mcmc.validate()?;
    check_series(y, spec.lags)?;
    match spec.lags {
        1 => fit_k::<2>(y, spec, mcmc),
        _ => fit_k::<3>(y, spec, mcmc),
    }
}

fn flatten<const K: usize>(m: &SMatrix<f64, K, K>) -> Vec<f64> {
    let mut v = Vec::with_capacity(K * K);
    for r in 0..K {
        for c in 0..K {
            v.push(m[(r, c)]);
        }
    }
    v
}

fn draw_gaussian<const K: usize, R: Rng + ?Sized>(
    mean: &SVector<f64, K>,
    cov: &SMatrix<f64, K, K>,
    jitter: &mut bool,
    rng: &mut R,
) -> SVector<f64, K> {
    let (l, j) = robust_cholesky(cov);
    *jitter |= j;
    mean + l * std_normal_vec::<K, R>(rng)
}

fn fit_k<const K: usize>(y: &[f64], spec: &TvpArSpec, mcmc: &McmcConfig) -> Result<TvpArPosterior> {
    let p = K - 1;
    let lags: Vec<usize> = (1..=p).collect();
    let (xd, target) = lagged_design(y, &lags, true);
    let ols = least_squares(&xd, &target)?;
    let n = target.len();
    let resid_var = ((&target - &xd * &ols).norm_squared() / (n - K) as f64).max(1e-12);
    let (_, var_y) = mean_var(y);

    let xs: Vec<SVector<f64, K>> = (0..n)
        .map(|r| SVector::<f64, K>::from_fn(|c, _| xd[(r, c)]))
        .collect();
    let ys: Vec<f64> = target.iter().copied().collect();

    let v_ols = (xd.transpose() * &xd)
        .try_inverse()
        .ok_or_else(|| Error::numerical("regressor cross-product is singular"))?
        * resid_var;
    let v_ols = SMatrix::<f64, K, K>::from_fn(|r, c| v_ols[(r, c)]);
    let b0 = SVector::<f64, K>::from_fn(|i, _| ols[i]);
    let p0 = v_ols * spec.state_var;

    let dof0 = spec.omega_dof.unwrap_or(DEFAULT_OMEGA_DOF);
    let psi0 = v_ols * (spec.omega_scale * dof0);
    let va_inv = SMatrix::<f64, K, K>::identity() / spec.a_var;
    let sig_shape = spec.sigma_shape;
    let sig_rate = spec
        .sigma_rate
        .unwrap_or(if var_y > 0.0 { var_y } else { 1.0 });

    let mut a_mat = SMatrix::<f64, K, K>::identity() * spec.a_mean;
    let mut omega = v_ols * spec.omega_scale;
    let mut sigma2 = resid_var;

    let mut rng = rng_from_seed(mcmc.seed);
    let mut m_f = vec![SVector::<f64, K>::zeros(); n];
    let mut c_f = vec![SMatrix::<f64, K, K>::zeros(); n];
    let mut beta = vec![SVector::<f64, K>::zeros(); n];
    let mut mean_acc = vec![SVector::<f64, K>::zeros(); n];
    let mut m2_acc = vec![SVector::<f64, K>::zeros(); n];

    let mut out = TvpArPosterior {
        spec: *spec,
        beta_last: Vec::with_capacity(mcmc.keep),
        a: Vec::with_capacity(mcmc.keep),
        omega_chol: Vec::with_capacity(mcmc.keep),
        sigma2: Vec::with_capacity(mcmc.keep),
        path_mean: Vec::new(),
        path_sd: Vec::new(),
        jitter_events: 0,
        seed: mcmc.seed,
    };

    for it in 0..mcmc.burn + mcmc.keep {
        let mut jitter = false;

        // forward filter
        let mut a_pred = b0;
        let mut p_pred = p0;
        for t in 0..n {
            let x = &xs[t];
            let px = p_pred * x;
            let f = x.dot(&px) + sigma2;
            let gain = px / f;
            let m = a_pred + gain * (ys[t] - x.dot(&a_pred));
            let c = p_pred - gain * gain.transpose() * f;
            let c = (c + c.transpose()) * 0.5;
            m_f[t] = m;
            c_f[t] = c;
            a_pred = a_mat * m;
            p_pred = a_mat * c * a_mat.transpose() + omega;
        }

        // backward sampling
        beta[n - 1] = draw_gaussian(&m_f[n - 1], &c_f[n - 1], &mut jitter, &mut rng);
        for t in (0..n - 1).rev() {
            let c = c_f[t];
            let pn = a_mat * c * a_mat.transpose() + omega;
            let pn = (pn + pn.transpose()) * 0.5;
            let pn_inv = match pn.try_inverse() {
                Some(inv) => inv,
                None => {
                    jitter = true;
                    let eps = pn.diagonal().amax().max(1e-300) * 1e-10;
                    (pn + SMatrix::<f64, K, K>::identity() * eps)
                        .try_inverse()
                        .ok_or_else(|| {
                            Error::numerical("state prediction covariance is singular")
                        })?
                }
            };
            let g = c * a_mat.transpose() * pn_inv;
            let mean = m_f[t] + g * (beta[t + 1] - a_mat * m_f[t]);
            let cov = c - g * a_mat * c;
            beta[t] = draw_gaussian(&mean, &cov, &mut jitter, &mut rng);
        }

        // columns of A
        let omega_inv = match omega.try_inverse() {
            Some(v) => v,
            None => return Err(Error::numerical("Omega draw is singular")),
        };
        for j in 0..K {
            let mut sxx = 0.0;
            let mut sxr = SVector::<f64, K>::zeros();
            for t in 1..n {
                let prev = &beta[t - 1];
                let r = beta[t] - a_mat * prev + a_mat.column(j) * prev[j];
                sxx += prev[j] * prev[j];
                sxr += r * prev[j];
            }
            let mut mu0 = SVector::<f64, K>::zeros();
            mu0[j] = spec.a_mean;
            let prec = va_inv + omega_inv * sxx;
            let prec = (prec + prec.transpose()) * 0.5;
            let cov = prec
                .try_inverse()
                .ok_or_else(|| Error::numerical("A column precision is singular"))?;
            let mean = cov * (va_inv * mu0 + omega_inv * sxr);
            let col = draw_gaussian(&mean, &cov, &mut jitter, &mut rng);
            a_mat.set_column(j, &col);
        }

        // Omega
        let mut psi = psi0;
        for t in 1..n {
            let eta = beta[t] - a_mat * beta[t - 1];
            psi += eta * eta.transpose();
        }
        omega = inv_wishart(&psi, dof0 + (n - 1) as f64, &mut rng)?;

        // sigma^2
        let ssr: f64 = (0..n).map(|t| (ys[t] - xs[t].dot(&beta[t])).powi(2)).sum();
        sigma2 = inv_gamma(sig_shape + 0.5 * n as f64, sig_rate + 0.5 * ssr, &mut rng);

        if it >= mcmc.burn {
            let k = (it - mcmc.burn + 1) as f64;
            for t in 0..n {
                let d = beta[t] - mean_acc[t];
                mean_acc[t] += d / k;
                m2_acc[t] += d.component_mul(&(beta[t] - mean_acc[t]));
            }
            out.beta_last.push(beta[n - 1].iter().copied().collect());
            out.a.push(flatten(&a_mat));
            let (l, j) = robust_cholesky(&omega);
            jitter |= j;
            out.omega_chol.push(flatten(&l));
            out.sigma2.push(sigma2);
            if jitter {
                out.jitter_events += 1;
            }
        }
    }
    let denom = (mcmc.keep.max(2) - 1) as f64;
    out.path_mean = mean_acc
        .iter()
        .map(|m| m.iter().copied().collect())
        .collect();
    out.path_sd = m2_acc
        .iter()
        .map(|m| m.iter().map(|v| (v / denom).sqrt()).collect())
        .collect();
    Ok(out)
}
