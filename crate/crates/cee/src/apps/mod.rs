//! Application workflows built on the solvers: simulation and covariance
//! estimation, tunable high-resolution spectral estimation through a filter
//! bank, sensitivity shaping for robust control, and rank-based model
//! reduction.

pub mod reduce;
pub mod shape;
pub mod three;

pub use reduce::{model_reduce_pipeline, model_reduce_pipeline_matrix};
pub use shape::{sensitivity_shape, PlantSpec, ShapeReport};
pub use three::{three_estimate, ThreeData, ThreeReport};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{spectral_radius_real, stein_solve_real, symmetric_eigenvalues};
use crate::poly::{c64, C64, MatrixPoly, Poly};
use crate::scalar::{monic_vec, normalize_covariances};

// ---------------------------------------------------------------------
// Scalar shaping filter
// ---------------------------------------------------------------------

/// Minimum-phase shaping filter v(z) = rho sigma(z) / a(z).
#[derive(Clone, Debug)]
pub struct ShapingFilter {
    sigma: Poly,
    a: Poly,
    rho: f64,
}

impl ShapingFilter {
    pub fn new(sigma: Poly, a: Poly, rho: f64) -> Result<Self> {
        let sigma = sigma.realified()?;
        let a = a.realified()?;
        if a.degree() != sigma.degree() {
            return Err(Error::DegreeMismatch(format!(
                "deg sigma = {}, deg a = {}",
                sigma.degree(),
                a.degree()
            )));
        }
        if !sigma.is_monic() || !a.is_monic() {
            return Err(Error::NotMonic {
                leading: a.leading().norm(),
            });
        }
        if rho <= 0.0 {
            return Err(Error::InvalidInput("filter gain must be positive".into()));
        }
        let (stable, margin) = a.is_schur()?;
        if !stable {
            return Err(Error::UnstableFilter {
                max_pole: 1.0 - margin,
            });
        }
        // minimum phase: zeros in the closed disc
        if a.degree() > 0 {
            let max_zero = sigma
                .roots()?
                .iter()
                .map(|r| r.norm())
                .fold(0.0, f64::max);
            if max_zero > 1.0 + 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "shaping filter is not minimum phase (zero modulus {max_zero:.6})"
                )));
            }
        }
        Ok(ShapingFilter { sigma, a, rho })
    }

    /// Filter from its zero and pole lists (conjugate-closed) and gain.
    pub fn from_roots(zeros: &[C64], poles: &[C64], rho: f64) -> Result<Self> {
        ShapingFilter::new(
            Poly::from_roots_real(zeros)?,
            Poly::from_roots_real(poles)?,
            rho,
        )
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    pub fn sigma(&self) -> &Poly {
        &self.sigma
    }

    pub fn denominator(&self) -> &Poly {
        &self.a
    }

    pub fn numerator(&self) -> Poly {
        self.sigma.scale(c64(self.rho, 0.0))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Observer-canonical realization v(z) = rho + h'(zI - F)^-1 k.
    pub fn realization(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let n = self.degree();
        let avec = monic_vec(&self.a)?;
        let svec = monic_vec(&self.sigma)?;
        let mut f = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            if i + 1 < n {
                f[(i, i + 1)] = 1.0;
            }
            f[(i, 0)] -= avec[i];
        }
        let k = (&svec - &avec) * self.rho;
        Ok((f, k))
    }

    pub fn magnitude(&self, theta: f64) -> f64 {
        let z = c64(theta.cos(), theta.sin());
        (self.numerator().eval(z) / self.a.eval(z)).norm()
    }
}

/// Exact raw covariance lags r_0..r_K of the stationary output of a shaping
/// filter driven by unit white noise, from the state covariance.
pub fn exact_raw_covariances(filter: &ShapingFilter, max_lag: usize) -> Result<Vec<f64>> {
    let n = filter.degree();
    if n == 0 {
        let r0 = filter.rho * filter.rho;
        let mut out = vec![r0];
        out.extend(std::iter::repeat(0.0).take(max_lag));
        return Ok(out);
    }
    let (f, k) = filter.realization()?;
    let pi = stein_solve_real(&f, &(&k * k.transpose()))?;
    let h = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let rho = filter.rho;
    let r0 = (h.transpose() * &pi * &h)[(0, 0)] + rho * rho;
    let mut out = vec![r0];
    let cross = &f * &pi * &h + &k * rho;
    let mut fk = DMatrix::<f64>::identity(n, n);
    for _ in 1..=max_lag {
        out.push((h.transpose() * &fk * &cross)[(0, 0)]);
        fk = &fk * &f;
    }
    Ok(out)
}

/// Exact covariances in the normalized convention (1/2, r_1/r_0, ...).
pub fn exact_covariances(filter: &ShapingFilter, max_lag: usize) -> Result<Vec<f64>> {
    normalize_covariances(&exact_raw_covariances(filter, max_lag)?)
}

/// Numerator/denominator of the normalized positive-real interpolant
/// f = (1/2) b*(z)/a*(z) of the filter rho sigma/a, together with the
/// rescaled gain rho/sqrt(r_0). This is the exact-data oracle behind the
/// recovery tests: solving with the true sigma must reproduce a and b.
pub fn spectral_pair(a: &Poly, sigma: &Poly, rho: f64) -> Result<(Poly, Poly, f64)> {
    let filter = ShapingFilter::new(sigma.clone(), a.clone(), rho)?;
    let n = filter.degree();
    if n == 0 {
        return Ok((Poly::from_real(&[0.5]), Poly::one(), 1.0));
    }
    let (f, k) = filter.realization()?;
    let pi = stein_solve_real(&f, &(&k * k.transpose()))?;
    let h = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let r0 = (h.transpose() * &pi * &h)[(0, 0)] + rho * rho;
    let g = (&f * &pi * &h + &k * rho) / r0;
    let avec = monic_vec(a)?;
    let bvec = &avec + &g * 2.0;
    let b = crate::scalar::vec_to_monic(&bvec);
    let num = b.reverse(n)?.scale(c64(0.5, 0.0));
    let den = a.reverse(n)?;
    Ok((num, den, rho / r0.sqrt()))
}

// ---------------------------------------------------------------------
// Simulation and covariance estimation
// ---------------------------------------------------------------------

pub(crate) fn burn_in_length(spectral_radius: f64) -> usize {
    // ten times the slowest-mode time constant
    let tau = if spectral_radius < 1e-12 {
        1.0
    } else {
        -1.0 / spectral_radius.min(0.999_999).ln()
    };
    ((10.0 * tau).ceil() as usize).clamp(16, 1_000_000)
}

/// Steady-state output of the filter driven by seeded Gaussian white noise.
pub fn simulate(filter: &ShapingFilter, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let n = filter.degree();
    let rho = filter.rho;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    if n == 0 {
        return Ok((0..samples)
            .map(|_| {
                let w: f64 = normal.sample(&mut rng);
                rho * w
            })
            .collect());
    }
    let (f, k) = filter.realization()?;
    let burn = burn_in_length(spectral_radius_real(&f));
    let mut x = DVector::<f64>::zeros(n);
    let mut out = Vec::with_capacity(samples);
    for t in 0..(burn + samples) {
        let w: f64 = normal.sample(&mut rng);
        let y = x[0] + rho * w;
        if t >= burn {
            out.push(y);
        }
        x = &f * &x + &k * w;
    }
    Ok(out)
}

/// Biased ergodic covariance estimates
/// c_k = (1 / (N - k + 1)) sum_(t=0)^(N-k) y_(t+k) y_t with N = len - 1.
/// Errors when the (unit-diagonal) Toeplitz matrix of the normalized
/// sequence fails to be positive definite.
pub fn estimate_covariances(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if y.len() <= max_lag {
        return Err(Error::InvalidInput(format!(
            "need more than {max_lag} samples, got {}",
            y.len()
        )));
    }
    let n = y.len() - 1;
    let mut out = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for t in 0..=(n - k) {
            acc += y[t + k] * y[t];
        }
        out.push(acc / (n - k + 1) as f64);
    }
    if out[0] <= 0.0 {
        return Err(Error::NonPositiveToeplitz { min_eig: out[0] });
    }
    let normalized = normalize_covariances(&out)?;
    let m = max_lag + 1;
    let toeplitz = DMatrix::<f64>::from_fn(m, m, |i, j| {
        let k = i.abs_diff(j);
        if k == 0 {
            1.0
        } else {
            normalized[k]
        }
    });
    let min_eig = symmetric_eigenvalues(&toeplitz)[0];
    if min_eig <= 0.0 {
        return Err(Error::NonPositiveToeplitz { min_eig });
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Matrix-valued shaping filter
// ---------------------------------------------------------------------

/// Matrix shaping filter V(z) = A(z)^-1 Sigma(z) R with monic A, Sigma of
/// equal observability indices and nonsingular gain R.
#[derive(Clone, Debug)]
pub struct MatrixShapingFilter {
    sigma: MatrixPoly,
    a: MatrixPoly,
    r: DMatrix<f64>,
}

impl MatrixShapingFilter {
    pub fn new(sigma: MatrixPoly, a: MatrixPoly, r: DMatrix<f64>) -> Result<Self> {
        let ell = a.dim();
        if sigma.dim() != ell || r.nrows() != ell || r.ncols() != ell {
            return Err(Error::DegreeMismatch(
                "matrix filter blocks must share the output dimension".into(),
            ));
        }
        if a.degree() != sigma.degree() {
            return Err(Error::DegreeMismatch(format!(
                "deg Sigma = {}, deg A = {}",
                sigma.degree(),
                a.degree()
            )));
        }
        if !a.is_monic() || !sigma.is_monic() {
            return Err(Error::NotMonic { leading: 0.0 });
        }
        let filter = MatrixShapingFilter { sigma, a, r };
        let (f, _) = filter.realization();
        let rho = spectral_radius_real(&f);
        if rho >= 1.0 {
            return Err(Error::UnstableFilter { max_pole: rho });
        }
        Ok(filter)
    }

    pub fn ell(&self) -> usize {
        self.a.dim()
    }

    pub fn index(&self) -> usize {
        self.a.degree()
    }

    pub fn a_poly(&self) -> &MatrixPoly {
        &self.a
    }

    pub fn sigma_poly(&self) -> &MatrixPoly {
        &self.sigma
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Stacked coefficient matrix (descending powers below the leading I)
    /// of a monic matrix polynomial in the equal-indices canonical form.
    pub fn stacked(mp: &MatrixPoly) -> DMatrix<f64> {
        let ell = mp.dim();
        let t = mp.degree();
        let mut out = DMatrix::<f64>::zeros(ell * t, ell);
        for k in 0..t {
            // coefficient of z^(t-1-k) goes in block row k
            out.view_mut((ell * k, 0), (ell, ell))
                .copy_from(&mp.coeff(t - 1 - k));
        }
        out
    }

    /// Observer-canonical realization: y = H x + R w,
    /// x(t+1) = F x(t) + K w(t) with F = J - A H, K = (Sigma - A) R.
    pub fn realization(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let ell = self.ell();
        let t = self.index();
        let n = ell * t;
        let a_s = Self::stacked(&self.a);
        let sigma_s = Self::stacked(&self.sigma);
        let mut f = DMatrix::<f64>::zeros(n, n);
        for b in 0..ell {
            for i in 0..t {
                if i + 1 < t {
                    f[(b * t + i, b * t + i + 1)] = 1.0;
                }
            }
        }
        // H has a unit at the start of each block; columns of A H pick the
        // block-leading states
        let h = observer_h(ell, t);
        f -= interleave_rows(&a_s, ell, t) * &h;
        let k = interleave_rows(&(&sigma_s - &a_s), ell, t) * &self.r;
        (f, k)
    }
}

/// H = diag(h_t, ..., h_t) with h_t = (1, 0, ..., 0).
pub fn observer_h(ell: usize, t: usize) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(ell, ell * t);
    for b in 0..ell {
        h[(b, b * t)] = 1.0;
    }
    h
}

/// Reorder the stacked coefficient matrix (block rows by power) into the
/// state ordering of the observer form (rows grouped by output channel).
fn interleave_rows(stacked: &DMatrix<f64>, ell: usize, t: usize) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(ell * t, ell);
    for k in 0..t {
        for b in 0..ell {
            for c in 0..ell {
                out[(b * t + k, c)] = stacked[(ell * k + b, c)];
            }
        }
    }
    out
}

/// Exact raw matrix covariance lags C_0..C_K of the filter output.
pub fn exact_matrix_raw_covariances(
    filter: &MatrixShapingFilter,
    max_lag: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let (f, k) = filter.realization();
    let r = filter.gain();
    let pi = stein_solve_real(&f, &(&k * k.transpose()))?;
    let h = observer_h(filter.ell(), filter.index());
    let mut out = vec![&h * &pi * h.transpose() + r * r.transpose()];
    let cross = &f * &pi * h.transpose() + &k * r.transpose();
    let mut fk = DMatrix::<f64>::identity(f.nrows(), f.nrows());
    for _ in 1..=max_lag {
        out.push(&h * &fk * &cross);
        fk = &fk * &f;
    }
    Ok(out)
}

/// Steady-state vector output of the matrix filter under seeded white noise.
pub fn simulate_matrix(
    filter: &MatrixShapingFilter,
    samples: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let (f, k) = filter.realization();
    let r = filter.gain();
    let ell = filter.ell();
    let burn = burn_in_length(spectral_radius_real(&f));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut x = DVector::<f64>::zeros(f.nrows());
    let h = observer_h(ell, filter.index());
    let mut out = Vec::with_capacity(samples);
    for t in 0..(burn + samples) {
        let w = DVector::<f64>::from_fn(ell, |_, _| normal.sample(&mut rng));
        let y = &h * &x + r * &w;
        if t >= burn {
            out.push(y);
        }
        x = &f * &x + &k * &w;
    }
    Ok(out)
}

/// Biased matrix covariance estimates
/// C_k = (1/(N - k + 1)) sum_(t=k)^N y_t y_(t-k)'.
pub fn estimate_matrix_covariances(
    y: &[DVector<f64>],
    max_lag: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if y.len() <= max_lag {
        return Err(Error::InvalidInput(format!(
            "need more than {max_lag} samples, got {}",
            y.len()
        )));
    }
    let ell = y[0].len();
    let n = y.len() - 1;
    let mut out = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = DMatrix::<f64>::zeros(ell, ell);
        for t in k..=n {
            acc += &y[t] * y[t - k].transpose();
        }
        out.push(acc / (n - k + 1) as f64);
    }
    let min_eig = symmetric_eigenvalues(&out[0])[0];
    if min_eig <= 0.0 {
        return Err(Error::NonPositiveToeplitz { min_eig });
    }
    Ok(out)
}
