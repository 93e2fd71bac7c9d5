//! Independent reference implementations and random instance generators
//! used by the test suites. Nothing here is called from the solver paths.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::apps::{spectral_pair, MatrixShapingFilter};
use crate::error::{Error, Result};
use crate::poly::{c64, C64, MatrixPoly, Poly};

/// Levinson-Durbin recursion on raw covariances (r_0, r_1, ..., r_n).
/// Returns the monic AR coefficients (a_1, ..., a_n) of
/// a(z) = z^n + a_1 z^(n-1) + ... + a_n and the prediction error variance.
pub fn levinson(r: &[f64]) -> Result<(Vec<f64>, f64)> {
    if r.is_empty() || r[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "Levinson recursion needs a positive leading covariance".into(),
        ));
    }
    let n = r.len() - 1;
    let mut a: Vec<f64> = Vec::new();
    let mut err = r[0];
    for k in 1..=n {
        let mut acc = r[k];
        for j in 1..k {
            acc += a[j - 1] * r[k - j];
        }
        let kappa = -acc / err;
        let mut next = vec![0.0; k];
        for j in 1..k {
            next[j - 1] = a[j - 1] + kappa * a[k - 1 - j];
        }
        next[k - 1] = kappa;
        a = next;
        err *= 1.0 - kappa * kappa;
        if err <= 0.0 {
            return Err(Error::NonPositiveToeplitz { min_eig: err });
        }
    }
    Ok((a, err))
}

/// Conjugate-closed random root set strictly inside the disc.
pub fn random_schur_roots(rng: &mut ChaCha8Rng, degree: usize) -> Vec<C64> {
    let mut roots: Vec<C64> = Vec::new();
    while roots.len() < degree {
        if degree - roots.len() >= 2 && rng.random_bool(0.5) {
            let r: f64 = rng.random_range(0.05..0.85);
            let th: f64 = rng.random_range(0.1..3.0);
            roots.push(c64(r * th.cos(), r * th.sin()));
            roots.push(c64(r * th.cos(), -r * th.sin()));
        } else {
            roots.push(c64(rng.random_range(-0.85..0.85), 0.0));
        }
    }
    roots
}

/// Random strictly positive real function of exact degree n, returned as
/// the (numerator, denominator) of f = (1/2) b*(z)/a*(z), together with its
/// true spectral data (a, sigma, rho). Built through a random shaping filter
/// and the state-space covariance route, independent of the solvers.
pub struct TrueFunction {
    pub num: Poly,
    pub den: Poly,
    pub a: Poly,
    pub sigma: Poly,
    pub rho: f64,
}

pub fn random_positive_real(rng: &mut ChaCha8Rng, degree: usize) -> TrueFunction {
    loop {
        let a_roots = random_schur_roots(rng, degree);
        let s_roots = random_schur_roots(rng, degree);
        // near pole-zero cancellations make the sampled data almost
        // degenerate; keep the function boundedly of full degree
        let separated = a_roots
            .iter()
            .all(|p| s_roots.iter().all(|z| (p - z).norm() > 0.05));
        if !separated {
            continue;
        }
        let a = Poly::from_roots_real(&a_roots).unwrap();
        let sigma = Poly::from_roots_real(&s_roots).unwrap();
        let gain: f64 = rng.random_range(0.3..1.2);
        if let Ok((num, den, rho)) = spectral_pair(&a, &sigma, gain) {
            return TrueFunction {
                num,
                den,
                a,
                sigma,
                rho,
            };
        }
    }
}

/// Random stable matrix shaping filter with a scalar-shaped numerator
/// sigma(z) I and a symmetric positive definite gain.
pub fn random_matrix_filter(rng: &mut ChaCha8Rng, ell: usize, n: usize) -> MatrixShapingFilter {
    loop {
        let coeffs: Vec<DMatrix<f64>> = (0..n)
            .map(|_| DMatrix::from_fn(ell, ell, |_, _| rng.random_range(-0.25..0.25)))
            .chain(std::iter::once(DMatrix::identity(ell, ell)))
            .collect();
        let a = match MatrixPoly::from_coeffs(coeffs) {
            Ok(a) => a,
            Err(_) => continue,
        };
        let sigma_scalar = Poly::from_roots_real(&random_schur_roots(rng, n)).unwrap();
        let sigma = MatrixPoly::scalar_times_identity(&sigma_scalar, ell).unwrap();
        let g = DMatrix::from_fn(ell, ell, |_, _| rng.random_range(-0.5..0.5));
        let r = &g * g.transpose() + DMatrix::<f64>::identity(ell, ell);
        if let Ok(f) = MatrixShapingFilter::new(sigma, a, r) {
            return f;
        }
    }
}
