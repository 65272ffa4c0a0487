//! Diebold-Mariano test on score differentials and probability integral transforms.
//!
//! The loss differential is built from negated scores for positively oriented
//! rules, `d*_t = (-s1_t) - (-s2_t)`, so a negative mean always means model 1
//! did better. The long-run variance uses a Bartlett kernel with the
//! Newey-West style bandwidth `floor(1.2 T^{1/3})` unless one is given.
//!
//! The test assumes the differential is covariance stationary with short
//! memory; no unit-root pre-screening is performed here.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::scoring::Orientation;

/// Minimum sample size accepted by [`dm_test`].
pub const MIN_DM_LENGTH: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LossDifferentialSeries {
    pub d_star: Vec<f64>,
}

impl LossDifferentialSeries {
    pub fn len(&self) -> usize {
        self.d_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_star.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.d_star.iter().sum::<f64>() / self.d_star.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(&self, t: usize) -> usize {
        match *self {
            Bandwidth::Auto => (1.2 * (t as f64).cbrt()).floor() as usize,
            Bandwidth::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunVariance {
    /// `2 pi f(0)`.
    pub lrv: f64,
    pub bandwidth: usize,
    /// The series is constant; `lrv` is 0.
    pub degenerate: bool,
    /// A negative kernel estimate was floored at `1e-8 * gamma_0`.
    pub floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub t: usize,
    pub mean_diff: f64,
    pub lrv: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub bandwidth: usize,
    /// Zero long-run variance; the statistic follows the 0 / ±inf convention.
    pub degenerate: bool,
}

impl DmResult {
    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }
}

/// Per-period loss differential of model 1 against model 2.
pub fn loss_differential(
    scores_1: &[f64],
    scores_2: &[f64],
    orientation: Orientation,
) -> Result<LossDifferentialSeries> {
    if scores_1.len() != scores_2.len() {
        return Err(Error::domain(format!(
            "score series lengths differ ({} vs {})",
            scores_1.len(),
            scores_2.len()
        )));
    }
    if scores_1.len() < 2 {
        return Err(Error::domain("loss differential needs at least 2 periods"));
    }
    if let Some(bad) = scores_1.iter().chain(scores_2).find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite score {bad}")));
    }
    let d_star = scores_1
        .iter()
        .zip(scores_2)
        .map(|(&a, &b)| match orientation {
            Orientation::PositivelyOriented => b - a,
            Orientation::NegativelyOriented => a - b,
        })
        .collect();
    Ok(LossDifferentialSeries { d_star })
}

/// Bartlett-kernel estimate of the long-run variance `2 pi f(0)`.
pub fn spectral_density_zero(series: &[f64], bandwidth: Bandwidth) -> Result<LongRunVariance> {
    let t = series.len();
    if t < 2 {
        return Err(Error::domain(
            "long-run variance needs at least 2 observations",
        ));
    }
    let k_max = bandwidth.resolve(t).min(t - 1);
    if series.iter().all(|&v| v == series[0]) {
        return Ok(LongRunVariance {
            lrv: 0.0,
            bandwidth: k_max,
            degenerate: true,
            floored: false,
        });
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| -> f64 {
        centered[k..]
            .iter()
            .zip(&centered[..t - k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / t as f64
    };
    let gamma0 = autocov(0);
    let mut lrv = gamma0;
    for k in 1..=k_max {
        lrv += 2.0 * (1.0 - k as f64 / (k_max + 1) as f64) * autocov(k);
    }
    let floor = gamma0 * 1e-8;
    if lrv < floor {
        return Ok(LongRunVariance {
            lrv: floor,
            bandwidth: k_max,
            degenerate: false,
            floored: true,
        });
    }
    Ok(LongRunVariance {
        lrv,
        bandwidth: k_max,
        degenerate: false,
        floored: false,
    })
}

/// Two-sided test of equal expected scores.
pub fn dm_test(
    scores_1: &[f64],
    scores_2: &[f64],
    orientation: Orientation,
    bandwidth: Bandwidth,
) -> Result<DmResult> {
    let d = loss_differential(scores_1, scores_2, orientation)?;
    dm_test_differential(&d, bandwidth)
}

pub fn dm_test_differential(d: &LossDifferentialSeries, bandwidth: Bandwidth) -> Result<DmResult> {
    let t = d.len();
    if t < MIN_DM_LENGTH {
        return Err(Error::domain(format!(
            "Diebold-Mariano test needs at least {MIN_DM_LENGTH} periods, got {t}"
        )));
    }
    let mean_diff = d.mean();
    let lrv = spectral_density_zero(&d.d_star, bandwidth)?;
    let (statistic, p_value) = if lrv.degenerate {
        if mean_diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean_diff), 0.0)
        }
    } else {
        let s = (t as f64).sqrt() * mean_diff / lrv.lrv.sqrt();
        (s, two_sided_p(s))
    };
    Ok(DmResult {
        t,
        mean_diff,
        lrv: lrv.lrv,
        statistic,
        p_value,
        bandwidth: lrv.bandwidth,
        degenerate: lrv.degenerate,
    })
}

/// `2 (1 - Phi(|z|))`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Significance stars at the 1%, 5% and 10% levels.
pub fn stars(p_value: f64) -> &'static str {
    if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else if p_value < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Probability integral transform `P(y)`.
pub fn pit(forecast: &PredictiveDistribution, y: f64) -> Result<f64> {
    forecast.cdf_eval(y)
}

/// Relative frequencies of `values` in `bins` equal-width bins on [0, 1].
pub fn pit_histogram(values: &[f64], bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = values.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

/// Kolmogorov-Smirnov distance between the sample and U(0,1).
pub fn ks_uniform_distance(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{std_normal_cdf, AnalyticDistribution};
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn differential_signs() {
        let d =
            loss_differential(&[1.0, 2.0], &[1.0, 2.0], Orientation::PositivelyOriented).unwrap();
        assert_eq!(d.d_star, vec![0.0, 0.0]);
        let d =
            loss_differential(&[2.0, 2.0], &[1.0, 1.0], Orientation::PositivelyOriented).unwrap();
        assert_eq!(d.d_star, vec![-1.0, -1.0]);
        let e =
            loss_differential(&[2.0, 2.0], &[1.0, 1.0], Orientation::NegativelyOriented).unwrap();
        assert_eq!(e.d_star, vec![1.0, 1.0]);
        assert!(loss_differential(&[1.0], &[1.0, 2.0], Orientation::NegativelyOriented).is_err());
    }

    #[test]
    fn white_noise_lrv() {
        let x = normals(100_000, 3);
        let l = spectral_density_zero(&x, Bandwidth::Auto).unwrap();
        assert!((l.lrv - 1.0).abs() < 0.05, "{}", l.lrv);
        assert_eq!(l.bandwidth, (1.2 * 100_000f64.cbrt()).floor() as usize);
    }

    #[test]
    fn ar1_lrv() {
        let e = normals(100_001, 4);
        let mut x = vec![0.0; 100_000];
        let mut prev = 0.0;
        for (i, v) in x.iter_mut().enumerate() {
            prev = 0.5 * prev + e[i];
            *v = prev;
        }
        // sigma^2 / (1 - rho)^2 = 4; the automatic bandwidth truncates the
        // kernel at 55 lags, which leaves a small downward bias
        let l = spectral_density_zero(&x, Bandwidth::Auto).unwrap();
        assert!((l.lrv - 4.0).abs() < 0.4, "{}", l.lrv);
    }

    #[test]
    fn constant_series_degenerate() {
        let l = spectral_density_zero(&[0.1; 50], Bandwidth::Auto).unwrap();
        assert_eq!(l.lrv, 0.0);
        assert!(l.degenerate);
    }

    #[test]
    fn bartlett_by_hand() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        let l = spectral_density_zero(&x, Bandwidth::Fixed(1)).unwrap();
        // mean 3; centered -2,0,-1,2,1
        let g0 = (4.0 + 0.0 + 1.0 + 4.0 + 1.0) / 5.0;
        let g1 = (0.0 * -2.0 + -1.0 * 0.0 + 2.0 * -1.0 + 1.0 * 2.0) / 5.0;
        assert_abs_diff_eq!(l.lrv, g0 + 2.0 * 0.5 * g1, epsilon = 1e-14);
    }

    #[test]
    fn identical_series() {
        let s = normals(50, 5);
        let r = dm_test(&s, &s, Orientation::PositivelyOriented, Bandwidth::Auto).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(r.degenerate);
        assert_eq!(r.stars(), "");
    }

    #[test]
    fn constant_nonzero_difference() {
        let a = vec![1.0; 20];
        let b = vec![2.0; 20];
        let r = dm_test(&a, &b, Orientation::NegativelyOriented, Bandwidth::Auto).unwrap();
        assert_eq!(r.statistic, f64::NEG_INFINITY);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn shifted_mean_power() {
        let d: Vec<f64> = normals(400, 6).into_iter().map(|v| v + 0.5).collect();
        let zeros = vec![0.0; 400];
        // negatively oriented: d* = s1 - s2
        let r = dm_test(&d, &zeros, Orientation::NegativelyOriented, Bandwidth::Auto).unwrap();
        assert!((r.statistic - 10.0).abs() < 1.5, "{}", r.statistic);
        assert!(r.p_value < 1e-10);
        assert_abs_diff_eq!(
            r.p_value,
            2.0 * (1.0 - std_normal_cdf(r.statistic.abs())),
            epsilon = 1e-12
        );
    }

    #[test]
    fn antisymmetry_and_shift_invariance() {
        let a = normals(100, 7);
        let b = normals(100, 8);
        let r1 = dm_test(&a, &b, Orientation::PositivelyOriented, Bandwidth::Auto).unwrap();
        let r2 = dm_test(&b, &a, Orientation::PositivelyOriented, Bandwidth::Auto).unwrap();
        assert_eq!(r1.statistic, -r2.statistic);
        assert_eq!(r1.p_value, r2.p_value);

        // dyadic values make the shifted arithmetic exact
        let q = |v: &f64| (v * 1024.0).round() / 1024.0;
        let a: Vec<f64> = a.iter().map(q).collect();
        let b: Vec<f64> = b.iter().map(q).collect();
        let a3: Vec<f64> = a.iter().map(|v| v + 3.0).collect();
        let b3: Vec<f64> = b.iter().map(|v| v + 3.0).collect();
        let r = dm_test(&a, &b, Orientation::NegativelyOriented, Bandwidth::Auto).unwrap();
        let s = dm_test(&a3, &b3, Orientation::NegativelyOriented, Bandwidth::Auto).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn too_short() {
        let a = [1.0; 9];
        assert!(dm_test(&a, &a, Orientation::PositivelyOriented, Bandwidth::Auto).is_err());
    }

    #[test]
    fn star_levels() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.049), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.10), "");
    }

    #[test]
    fn pit_examples() {
        let n: PredictiveDistribution = AnalyticDistribution::normal(0.0, 1.0).unwrap().into();
        assert_eq!(pit(&n, 0.0).unwrap(), 0.5);
        let e = PredictiveDistribution::empirical(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(pit(&e, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn histogram_and_ks() {
        let h = pit_histogram(&[0.05, 0.15, 0.15, 1.0], 10);
        assert_eq!(h[0], 0.25);
        assert_eq!(h[1], 0.5);
        assert_eq!(h[9], 0.25);
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform_distance(&grid) <= 0.0005 + 1e-12);
    }
}
