//! Polynomial, truncated power series and matrix-polynomial arithmetic.
//!
//! Coefficients are stored in ascending powers. Scalar polynomials keep
//! complex coefficients internally; conjugate-symmetric data produces real
//! results up to roundoff, and the realifying accessors enforce that.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Shorthand complex constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Relative trim threshold for trailing coefficients.
const TRIM_REL: f64 = 1e-13;
/// Imaginary parts below this (relative) magnitude count as real.
const REAL_TOL: f64 = 1e-10;

fn trim_complex(coeffs: &mut Vec<C64>) {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = TRIM_REL * scale;
    while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() <= tol) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        coeffs.push(C64::ZERO);
    }
}

// ---------------------------------------------------------------------
// Poly
// ---------------------------------------------------------------------

/// Dense univariate polynomial, ascending powers, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly {
            coeffs: vec![C64::ZERO],
        }
    }

    pub fn one() -> Self {
        Poly {
            coeffs: vec![C64::ONE],
        }
    }

    /// z^k
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![C64::ZERO; k + 1];
        coeffs[k] = C64::ONE;
        Poly { coeffs }
    }

    /// Construct from real coefficients, ascending powers.
    pub fn from_real(coeffs: &[f64]) -> Self {
        let mut coeffs: Vec<C64> = coeffs.iter().map(|&x| c64(x, 0.0)).collect();
        trim_complex(&mut coeffs);
        Poly { coeffs }
    }

    /// Construct from complex coefficients, ascending powers.
    pub fn from_complex(coeffs: Vec<C64>) -> Self {
        let mut coeffs = coeffs;
        trim_complex(&mut coeffs);
        Poly { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = &p * &Poly::from_complex(vec![-r, C64::ONE]);
        }
        p
    }

    /// Monic real polynomial from a conjugate-closed root multiset.
    pub fn from_roots_real(roots: &[C64]) -> Result<Self> {
        Poly::from_roots(roots).realified()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::ZERO
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of z^k (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(C64::ZERO)
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_monic(&self) -> bool {
        (self.leading() - C64::ONE).norm() <= 1e-12
    }

    /// Largest imaginary part over all coefficients.
    pub fn imag_residue(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Real coefficient view; errors if any imaginary residue is significant.
    pub fn real_coeffs(&self) -> Result<Vec<f64>> {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(1.0_f64, f64::max);
        let max_imag = self.imag_residue();
        if max_imag > REAL_TOL * scale {
            return Err(Error::NonRealCoefficients { max_imag });
        }
        Ok(self.coeffs.iter().map(|c| c.re).collect())
    }

    /// Drop negligible imaginary parts, erroring if they are not negligible.
    pub fn realified(&self) -> Result<Self> {
        Ok(Poly::from_real(&self.real_coeffs()?))
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly::from_complex(coeffs)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::from_complex(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// z^n p(1/z) as a coefficient list (the reversed polynomial).
    pub fn reverse(&self, n: usize) -> Result<Poly> {
        if self.degree() > n {
            return Err(Error::ReverseOrder {
                order: n,
                degree: self.degree(),
            });
        }
        let mut coeffs = vec![C64::ZERO; n + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[n - k] = c;
        }
        Ok(Poly::from_complex(coeffs))
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Result<Poly> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(self.scale(C64::ONE / self.leading()))
    }

    /// Synthetic division by (z - r); returns the quotient and remainder.
    pub fn deflate(&self, r: C64) -> (Poly, C64) {
        let n = self.degree();
        if n == 0 {
            return (Poly::zero(), self.coeffs[0]);
        }
        let mut q = vec![C64::ZERO; n];
        let mut acc = self.coeffs[n];
        for k in (0..n).rev() {
            q[k] = acc;
            acc = self.coeffs[k] + r * acc;
        }
        (Poly::from_complex(q), acc)
    }

    /// Roots of a real-coefficient polynomial via the balanced companion
    /// matrix, with one Newton polish per root when the residual warrants it.
    /// Exact zero roots are stripped first; a fully nilpotent companion can
    /// stall the QR iteration.
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let real = self.real_coeffs().map_err(|_| Error::ComplexRootFinding)?;
        if self.degree() == 0 {
            return Ok(Vec::new());
        }
        let zero_roots = real.iter().take_while(|c| **c == 0.0).count();
        let reduced = &real[zero_roots..];
        let n = reduced.len() - 1;
        let mut roots: Vec<C64> = vec![C64::ZERO; zero_roots];
        if n == 0 {
            return Ok(roots);
        }
        let lead = reduced[n];
        let monic: Vec<f64> = reduced.iter().map(|c| c / lead).collect();

        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -monic[i];
        }
        nalgebra::linalg::balancing::balance_parlett_reinsch(&mut companion);
        let eigs = companion.complex_eigenvalues();

        let scale = real.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let deriv = self.derivative();
        roots.extend(eigs.iter().copied());
        for r in roots.iter_mut() {
            let val = self.eval(*r);
            if val.norm() > 1e-8 * scale {
                let d = deriv.eval(*r);
                if d.norm() > 1e-300 {
                    *r -= val / d;
                }
            }
        }
        roots.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(roots)
    }

    /// Schur test: all roots strictly inside the unit disc.
    /// Returns the flag together with the margin 1 - max|root|.
    pub fn is_schur(&self) -> Result<(bool, f64)> {
        let roots = self.roots()?;
        let max_mod = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        Ok((max_mod < 1.0, 1.0 - max_mod))
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Poly::from_complex(coeffs)
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Poly::from_complex(coeffs)
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![C64::ZERO; self.degree() + rhs.degree() + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::from_complex(coeffs)
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c.norm() == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im.abs() > 0.0 {
                write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            } else {
                write!(f, "{:.6}", c.re)?;
            }
            if k == 1 {
                write!(f, "·z")?;
            } else if k > 1 {
                write!(f, "·z^{}", k)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Truncated power series
// ---------------------------------------------------------------------

/// Power series truncated at a fixed order; arithmetic stays at that order.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<C64>,
}

impl TruncatedSeries {
    /// Series with the given coefficients padded or truncated to `order`.
    pub fn new(coeffs: &[C64], order: usize) -> Self {
        let mut c = coeffs.to_vec();
        c.resize(order + 1, C64::ZERO);
        TruncatedSeries { coeffs: c }
    }

    pub fn from_real(coeffs: &[f64], order: usize) -> Self {
        let c: Vec<C64> = coeffs.iter().map(|&x| c64(x, 0.0)).collect();
        TruncatedSeries::new(&c, order)
    }

    pub fn constant(value: C64, order: usize) -> Self {
        let mut coeffs = vec![C64::ZERO; order + 1];
        coeffs[0] = value;
        TruncatedSeries { coeffs }
    }

    /// Identity series t at the given order.
    pub fn identity(order: usize) -> Self {
        let mut coeffs = vec![C64::ZERO; order + 1];
        if order >= 1 {
            coeffs[1] = C64::ONE;
        }
        TruncatedSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(C64::ZERO)
    }

    /// Taylor expansion of a polynomial about z0: coefficients of p(z0 + t).
    pub fn from_poly_at(p: &Poly, z0: C64, order: usize) -> Self {
        // repeated synthetic division computes the shifted coefficients
        let mut work: Vec<C64> = p.coeffs().to_vec();
        let n = work.len();
        let mut out = vec![C64::ZERO; order + 1];
        for item in out.iter_mut().take((order + 1).min(n + 1)) {
            if work.is_empty() {
                break;
            }
            let mut acc = C64::ZERO;
            for k in (0..work.len()).rev() {
                acc = acc * z0 + work[k];
                work[k] = acc;
            }
            *item = work.remove(0);
        }
        TruncatedSeries { coeffs: out }
    }

    pub fn add(&self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        TruncatedSeries { coeffs }
    }

    pub fn sub(&self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, s: C64) -> TruncatedSeries {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn mul(&self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        let mut coeffs = vec![C64::ZERO; order + 1];
        for i in 0..=order {
            for j in 0..=(order - i) {
                coeffs[i + j] += self.coeff(i) * rhs.coeff(j);
            }
        }
        TruncatedSeries { coeffs }
    }

    /// Multiplicative inverse; the constant term must not vanish.
    pub fn recip(&self) -> Result<TruncatedSeries> {
        let c0 = self.coeff(0);
        if c0.norm() < 1e-300 {
            return Err(Error::PoleAtExpansionPoint {
                magnitude: c0.norm(),
            });
        }
        let order = self.order();
        let mut inv = vec![C64::ZERO; order + 1];
        inv[0] = C64::ONE / c0;
        for k in 1..=order {
            let mut acc = C64::ZERO;
            for j in 1..=k {
                acc += self.coeff(j) * inv[k - j];
            }
            inv[k] = -acc / c0;
        }
        Ok(TruncatedSeries { coeffs: inv })
    }

    pub fn div(&self, rhs: &TruncatedSeries) -> Result<TruncatedSeries> {
        Ok(self.mul(&rhs.recip()?))
    }

    /// Truncated composition self(inner(t)); the inner series must have a
    /// zero constant term so the result is again a formal jet.
    pub fn compose(&self, inner: &TruncatedSeries, order: usize) -> Result<TruncatedSeries> {
        if inner.coeff(0).norm() > 1e-12 {
            return Err(Error::SeriesConstantTerm(inner.coeff(0).norm()));
        }
        let inner = TruncatedSeries::new(inner.coeffs(), order);
        let mut acc = TruncatedSeries::constant(C64::ZERO, order);
        // Horner over the outer coefficients
        let kmax = self.order().min(order);
        for k in (0..=kmax).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += self.coeff(k);
        }
        TruncatedSeries::new(acc.coeffs(), order);
        Ok(acc)
    }
}

/// Taylor jet of num/den about z0: coefficients f^(k)(z0)/k! for k = 0..K.
pub fn rational_jet(num: &Poly, den: &Poly, z0: C64, order: usize) -> Result<TruncatedSeries> {
    let d0 = den.eval(z0);
    let scale = den.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if d0.norm() <= 1e-12 * scale.max(1.0) {
        return Err(Error::PoleAtExpansionPoint { magnitude: d0.norm() });
    }
    let n = TruncatedSeries::from_poly_at(num, z0, order);
    let d = TruncatedSeries::from_poly_at(den, z0, order);
    n.div(&d)
}

/// Expansion of num/den about infinity in the convention
/// num/den = q0 - u1 z^(-1) - u2 z^(-2) - ...; returns (u1, ..., uK).
/// Requires deg num <= deg den and a monic denominator.
pub fn laurent_expand(num: &Poly, den: &Poly, order: usize) -> Result<Vec<C64>> {
    if num.degree() > den.degree() {
        return Err(Error::ImproperRational {
            num: num.degree(),
            den: den.degree(),
        });
    }
    if !den.is_monic() {
        return Err(Error::NotMonic {
            leading: den.leading().norm(),
        });
    }
    let d = den.degree();
    let rn = num.reverse(d)?;
    let rd = den.reverse(d)?;
    let sn = TruncatedSeries::new(rn.coeffs(), order);
    let sd = TruncatedSeries::new(rd.coeffs(), order);
    let q = sn.div(&sd)?;
    Ok((1..=order).map(|k| -q.coeff(k)).collect())
}

/// Largest Laurent-coefficient magnitude of
/// a(z) b(1/z) + b(z) a(1/z) - 2 rho^2 sigma(z) sigma(1/z).
pub fn positivity_residual(a: &Poly, b: &Poly, sigma: &Poly, rho: f64) -> Result<f64> {
    let n = a.degree();
    if b.degree() != n || sigma.degree() != n {
        return Err(Error::DegreeMismatch(format!(
            "deg a = {}, deg b = {}, deg sigma = {}",
            n,
            b.degree(),
            sigma.degree()
        )));
    }
    let mut worst = 0.0_f64;
    for k in 0..=n {
        // coefficient of z^k (and by symmetry z^-k) in each product
        let mut lhs = C64::ZERO;
        let mut rhs = C64::ZERO;
        for j in 0..=(n - k) {
            lhs += a.coeff(j + k) * b.coeff(j).conj() + b.coeff(j + k) * a.coeff(j).conj();
            rhs += sigma.coeff(j + k) * sigma.coeff(j).conj();
        }
        let diff = lhs - rhs * 2.0 * rho * rho;
        worst = worst.max(diff.norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------
// Matrix polynomials
// ---------------------------------------------------------------------

/// Square matrix polynomial with real coefficient matrices, ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    coeffs: Vec<DMatrix<f64>>,
    dim: usize,
}

impl MatrixPoly {
    pub fn from_coeffs(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "matrix polynomial needs at least one coefficient".into(),
            ));
        }
        let dim = coeffs[0].nrows();
        for c in &coeffs {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::InvalidInput(
                    "matrix polynomial coefficients must be square with equal dimension".into(),
                ));
            }
        }
        Ok(MatrixPoly { coeffs, dim })
    }

    /// sigma(z) * I for a scalar polynomial sigma.
    pub fn scalar_times_identity(sigma: &Poly, dim: usize) -> Result<Self> {
        let real = sigma.real_coeffs()?;
        let coeffs = real
            .iter()
            .map(|&c| DMatrix::<f64>::identity(dim, dim) * c)
            .collect();
        MatrixPoly::from_coeffs(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> DMatrix<f64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.dim, self.dim))
    }

    pub fn eval(&self, z: C64) -> DMatrix<C64> {
        let mut acc = DMatrix::<C64>::zeros(self.dim, self.dim);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.map(|x| c64(x, 0.0));
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> DMatrix<f64> {
        let mut acc = DMatrix::<f64>::zeros(self.dim, self.dim);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// z^n A(1/z): coefficient reversal at order n.
    pub fn reversed(&self, n: usize) -> Result<Self> {
        if self.degree() > n {
            return Err(Error::ReverseOrder {
                order: n,
                degree: self.degree(),
            });
        }
        let mut coeffs = vec![DMatrix::zeros(self.dim, self.dim); n + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[n - k] = c.clone();
        }
        MatrixPoly::from_coeffs(coeffs)
    }

    /// Leading coefficient equals the identity.
    pub fn is_monic(&self) -> bool {
        (self.coeffs.last().unwrap() - DMatrix::<f64>::identity(self.dim, self.dim)).norm() <= 1e-12
    }
}

// ---------------------------------------------------------------------
// Truncated matrix series (for matrix-valued Taylor jets)
// ---------------------------------------------------------------------

/// Matrix power series truncated at a fixed order.
#[derive(Clone, Debug)]
pub struct MatrixSeries {
    coeffs: Vec<DMatrix<C64>>,
    dim: usize,
}

impl MatrixSeries {
    pub fn new(coeffs: Vec<DMatrix<C64>>) -> Self {
        let dim = coeffs[0].nrows();
        MatrixSeries { coeffs, dim }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> DMatrix<C64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.dim, self.dim))
    }

    /// Taylor expansion of a matrix polynomial about z0.
    pub fn from_matrix_poly_at(mp: &MatrixPoly, z0: C64, order: usize) -> Self {
        let dim = mp.dim();
        let zero = DMatrix::<C64>::zeros(dim, dim);
        // Horner in the series variable t with z = z0 + t
        let mut acc = vec![zero.clone(); order + 1];
        for k in (0..=mp.degree()).rev() {
            // acc <- acc * (z0 + t) + A_k
            let mut next = vec![zero.clone(); order + 1];
            for j in 0..=order {
                next[j] += &acc[j] * z0;
                if j > 0 {
                    let prev = acc[j - 1].clone();
                    next[j] += prev;
                }
            }
            next[0] += mp.coeff(k).map(|x| c64(x, 0.0));
            acc = next;
        }
        MatrixSeries { coeffs: acc, dim }
    }

    pub fn mul(&self, rhs: &MatrixSeries) -> MatrixSeries {
        let order = self.order().min(rhs.order());
        let mut coeffs = vec![DMatrix::<C64>::zeros(self.dim, self.dim); order + 1];
        for i in 0..=order {
            for j in 0..=(order - i) {
                coeffs[i + j] += self.coeff(i) * rhs.coeff(j);
            }
        }
        MatrixSeries {
            coeffs,
            dim: self.dim,
        }
    }

    /// Multiplicative inverse; the constant coefficient must be invertible.
    pub fn inv(&self) -> Result<MatrixSeries> {
        let a0 = self.coeff(0);
        let a0_inv = a0.clone().lu().try_inverse().ok_or_else(|| {
            Error::PoleAtExpansionPoint {
                magnitude: 0.0,
            }
        })?;
        let order = self.order();
        let mut inv: Vec<DMatrix<C64>> = Vec::with_capacity(order + 1);
        inv.push(a0_inv.clone());
        for k in 1..=order {
            let mut acc = DMatrix::<C64>::zeros(self.dim, self.dim);
            for j in 1..=k {
                acc += self.coeff(j) * &inv[k - j];
            }
            inv.push(-&a0_inv * acc);
        }
        Ok(MatrixSeries {
            coeffs: inv,
            dim: self.dim,
        })
    }

    pub fn scale(&self, s: f64) -> MatrixSeries {
        MatrixSeries {
            coeffs: self.coeffs.iter().map(|c| c * c64(s, 0.0)).collect(),
            dim: self.dim,
        }
    }
}

/// Convenience: complex column vector from real.
pub fn to_complex_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| c64(x, 0.0))
}

/// Convenience: complex matrix from real.
pub fn to_complex_mat(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| c64(x, 0.0))
}
