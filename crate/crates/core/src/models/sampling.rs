//! Random draws from the conditional posteriors used by the Gibbs samplers.

use nalgebra::{Cholesky, DMatrix, DVector, SMatrix, SVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Inverse-gamma draw with shape `a` and rate `b` (density ∝ x^{-a-1} e^{-b/x}).
pub(crate) fn inv_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(a, 1.0 / b).expect("inverse-gamma parameters must be positive");
    1.0 / g.sample(rng)
}

pub(crate) fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut g: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .expect("Dirichlet concentration must be positive")
                .sample(rng)
        })
        .collect();
    let s: f64 = g.iter().sum();
    for v in &mut g {
        *v /= s;
    }
    g
}

/// Mean and covariance of a Gaussian given in information form `N(Λ^{-1} b, Λ^{-1})`.
pub(crate) fn gaussian_from_information(
    precision: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, Cholesky<f64, nalgebra::Dyn>)> {
    let chol = Cholesky::new(precision.clone())
        .ok_or_else(|| Error::numerical("posterior precision matrix is not positive definite"))?;
    let mean = chol.solve(b);
    Ok((mean, chol))
}

/// Draw from `N(Λ^{-1} b, Λ^{-1})`: with `Λ = L L'`, `x = mean + L'^{-1} z`.
pub(crate) fn mvn_information<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (mean, chol) = gaussian_from_information(precision, b)?;
    let z = DVector::from_fn(b.len(), |_, _| std_normal(rng));
    let l = chol.l();
    let x = l
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    Ok(mean + x)
}

/// Lower Cholesky factor of a symmetric matrix, adding diagonal jitter if
/// needed. Returns the factor and whether jitter was applied.
pub(crate) fn robust_cholesky<const K: usize>(
    m: &SMatrix<f64, K, K>,
) -> (SMatrix<f64, K, K>, bool) {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(c) = Cholesky::new(sym) {
        return (c.l(), false);
    }
    let scale = (0..K)
        .map(|i| sym[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut jitter = scale * 1e-12;
    for _ in 0..40 {
        let trial = sym + SMatrix::<f64, K, K>::identity() * jitter;
        if let Some(c) = Cholesky::new(trial) {
            return (c.l(), true);
        }
        jitter *= 10.0;
    }
    // fall back to the diagonal
    let d = SMatrix::<f64, K, K>::from_fn(|i, j| {
        if i == j {
            sym[(i, i)].max(0.0).sqrt()
        } else {
            0.0
        }
    });
    (d, true)
}

pub(crate) fn std_normal_vec<const K: usize, R: Rng + ?Sized>(rng: &mut R) -> SVector<f64, K> {
    SVector::<f64, K>::from_fn(|_, _| std_normal(rng))
}

/// Inverse-Wishart draw with scale `psi` and `dof` degrees of freedom
/// (mean `psi / (dof - K - 1)`), via the Bartlett decomposition of
/// `W ~ Wishart(psi^{-1}, dof)` and `Omega = W^{-1}`.
pub(crate) fn inv_wishart<const K: usize, R: Rng + ?Sized>(
    psi: &SMatrix<f64, K, K>,
    dof: f64,
    rng: &mut R,
) -> Result<SMatrix<f64, K, K>> {
    let psi_inv = psi
        .try_inverse()
        .ok_or_else(|| Error::numerical("inverse-Wishart scale matrix is singular"))?;
    let (l, _) = robust_cholesky(&psi_inv);
    let mut a = SMatrix::<f64, K, K>::zeros();
    for i in 0..K {
        let chi = ChiSquared::new(dof - i as f64)
            .expect("Wishart dof too small")
            .sample(rng);
        a[(i, i)] = chi.sqrt();
        for j in 0..i {
            a[(i, j)] = std_normal(rng);
        }
    }
    let la = l * a;
    let w = la * la.transpose();
    let omega = w
        .try_inverse()
        .ok_or_else(|| Error::numerical("Wishart draw is singular"))?;
    Ok((omega + omega.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use nalgebra::Matrix2;

    #[test]
    fn inverse_gamma_mean() {
        let mut rng = rng_from_seed(1);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| inv_gamma(5.0, 8.0, &mut rng)).sum::<f64>() / n as f64;
        // b / (a - 1) = 2
        assert!((m - 2.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = rng_from_seed(2);
        let n = 100_000;
        let mut acc = [0.0; 2];
        for _ in 0..n {
            let d = dirichlet(&[91.0, 11.0], &mut rng);
            acc[0] += d[0];
            acc[1] += d[1];
        }
        assert!((acc[0] / n as f64 - 91.0 / 102.0).abs() < 1e-3);
    }

    #[test]
    fn information_form_draws() {
        let prec = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let (mean, _) = gaussian_from_information(&prec, &b).unwrap();
        let cov = prec.clone().try_inverse().unwrap();
        let expected = &cov * &b;
        assert!((mean.clone() - expected).norm() < 1e-12);
        let mut rng = rng_from_seed(3);
        let n = 100_000;
        let mut s = DVector::zeros(2);
        let mut ss = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let x = mvn_information(&prec, &b, &mut rng).unwrap();
            let d = &x - &mean;
            s += &x;
            ss += &d * d.transpose();
        }
        s /= n as f64;
        ss /= n as f64;
        assert!((s - mean).norm() < 0.01);
        assert!((ss - cov).norm() < 0.02);
    }

    #[test]
    fn inverse_wishart_mean() {
        let psi = Matrix2::new(2.0, 0.3, 0.3, 1.0);
        let dof = 8.0;
        let mut rng = rng_from_seed(4);
        let n = 100_000;
        let mut acc = Matrix2::zeros();
        for _ in 0..n {
            acc += inv_wishart(&psi, dof, &mut rng).unwrap();
        }
        acc /= n as f64;
        let expected = psi / (dof - 2.0 - 1.0);
        assert!((acc - expected).norm() < 0.01, "{acc} vs {expected}");
    }

    #[test]
    fn jitter_recovers_semidefinite() {
        let m = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        let (l, jittered) = robust_cholesky(&m);
        assert!(jittered);
        assert!(((l * l.transpose()) - m).norm() < 1e-6);
    }
}
