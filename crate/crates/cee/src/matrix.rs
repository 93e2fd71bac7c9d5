//! The matrix-valued covariance extension equation: observer canonical
//! structures, the VN construction and its invertibility criterion, the
//! (u, U-operator) parameters, the matrix homotopy and recovery of (A, B, R).
//!
//! Stacked coefficient matrices are kept in state ordering: rows grouped by
//! output channel, descending powers inside each block, so that
//! A(z) = D(z) + Pi(z) A.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interp::{
    build_matrix_data, pick_test_matrix, MatrixDataMatrices, MatrixProblem, MatrixTransform,
};
use crate::numerics::{
    davidenko_solve, hermitian_eigenvalues, numerical_rank, pinv_tall_zero_top, spd_sqrt,
    stein_solve_real, symmetric_eigenvalues, HomotopyTask, PathSample,
};
use crate::poly::{c64, C64, MatrixPoly, MatrixSeries, Poly};
use crate::scalar::CeeOptions;

const IMAG_RESIDUE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------
// Canonical structure
// ---------------------------------------------------------------------

/// Observer-canonical scaffolding for given observability indices:
/// H, the block shift J, and the coefficient-extraction matrices N_k
/// defined by D(z) Pi(1/z) = N_1 z + ... + N_t z^t.
#[derive(Clone, Debug)]
pub struct CanonicalStructure {
    ell: usize,
    indices: Vec<usize>,
    h: DMatrix<f64>,
    j: DMatrix<f64>,
    n_mats: Vec<DMatrix<f64>>,
}

impl CanonicalStructure {
    /// Equal observability indices t_1 = ... = t_ell = n (the solver case).
    pub fn new(ell: usize, n: usize) -> Result<Self> {
        CanonicalStructure::with_indices(&vec![n; ell])
    }

    /// General indices; the solver itself requires them equal, the general
    /// form exists to exercise the VN rank criterion.
    pub fn with_indices(indices: &[usize]) -> Result<Self> {
        let ell = indices.len();
        if ell == 0 || indices.iter().any(|&t| t == 0) {
            return Err(Error::InvalidInput(
                "observability indices must be positive".into(),
            ));
        }
        let total: usize = indices.iter().sum();
        if total % ell != 0 {
            return Err(Error::InvalidInput(format!(
                "observability indices must sum to a multiple of the output dimension, got {total}"
            )));
        }
        let t_max = *indices.iter().max().unwrap();
        let mut h = DMatrix::<f64>::zeros(ell, total);
        let mut j = DMatrix::<f64>::zeros(total, total);
        let mut off = 0;
        for (b, &t) in indices.iter().enumerate() {
            h[(b, off)] = 1.0;
            for i in 0..t.saturating_sub(1) {
                j[(off + i, off + i + 1)] = 1.0;
            }
            off += t;
        }
        let mut n_mats = Vec::with_capacity(t_max);
        for k in 1..=t_max {
            let mut nk = DMatrix::<f64>::zeros(ell, total);
            let mut off = 0;
            for (b, &t) in indices.iter().enumerate() {
                if k <= t {
                    nk[(b, off + k - 1)] = 1.0;
                }
                off += t;
            }
            n_mats.push(nk);
        }
        let s = CanonicalStructure {
            ell,
            indices: indices.to_vec(),
            h,
            j,
            n_mats,
        };
        debug_assert!(s.expansion_identity_residual() < 1e-12);
        Ok(s)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn equal_indices(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] == w[1])
    }

    /// Total state dimension (sum of indices).
    pub fn state_dim(&self) -> usize {
        self.indices.iter().sum()
    }

    pub fn t_max(&self) -> usize {
        *self.indices.iter().max().unwrap()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn n_mat(&self, k: usize) -> &DMatrix<f64> {
        &self.n_mats[k - 1]
    }

    /// Pi(z) = diag(pi_(t_1), ..., pi_(t_ell)) with pi_t = (z^(t-1), ..., 1).
    pub fn pi(&self, z: C64) -> DMatrix<C64> {
        let mut pi = DMatrix::<C64>::zeros(self.ell, self.state_dim());
        let mut off = 0;
        for (b, &t) in self.indices.iter().enumerate() {
            let mut p = C64::ONE;
            for i in (0..t).rev() {
                pi[(b, off + i)] = p;
                p *= z;
            }
            off += t;
        }
        pi
    }

    pub fn d(&self, z: C64) -> DMatrix<C64> {
        DMatrix::from_fn(self.ell, self.ell, |i, j| {
            if i == j {
                z.powu(self.indices[i] as u32)
            } else {
                C64::ZERO
            }
        })
    }

    /// Residual of D(z) Pi(1/z) = sum_k N_k z^k at a test point.
    pub fn expansion_identity_residual(&self) -> f64 {
        let z = c64(0.7, 0.23);
        let lhs = self.d(z) * self.pi(c64(1.0, 0.0) / z);
        let mut rhs = DMatrix::<C64>::zeros(self.ell, self.state_dim());
        let mut zk = C64::ONE;
        for k in 1..=self.t_max() {
            zk *= z;
            rhs += self.n_mat(k).map(|x| c64(x, 0.0)) * zk;
        }
        (lhs - rhs).norm()
    }

    /// Gamma = J - Sigma_s H for a stacked coefficient matrix.
    pub fn gamma(&self, sigma_stacked: &DMatrix<f64>) -> DMatrix<f64> {
        &self.j - sigma_stacked * &self.h
    }
}

/// State-ordered stacked coefficient matrix of a monic matrix polynomial:
/// block b holds the coefficients of channel b in descending powers.
pub fn stack_coeffs(mp: &MatrixPoly) -> DMatrix<f64> {
    let ell = mp.dim();
    let t = mp.degree();
    let mut out = DMatrix::<f64>::zeros(ell * t, ell);
    for b in 0..ell {
        for k in 0..t {
            // row b*t + k carries the coefficient of z^(t-1-k) in row b
            for c in 0..ell {
                out[(b * t + k, c)] = mp.coeff(t - 1 - k)[(b, c)];
            }
        }
    }
    out
}

/// Inverse of [`stack_coeffs`] for equal indices.
pub fn unstack_coeffs(stacked: &DMatrix<f64>, ell: usize, t: usize) -> MatrixPoly {
    let mut coeffs = vec![DMatrix::<f64>::zeros(ell, ell); t + 1];
    coeffs[t] = DMatrix::identity(ell, ell);
    for b in 0..ell {
        for k in 0..t {
            for c in 0..ell {
                coeffs[t - 1 - k][(b, c)] = stacked[(b * t + k, c)];
            }
        }
    }
    MatrixPoly::from_coeffs(coeffs).unwrap()
}

/// Determinant of a matrix polynomial by evaluation at roots of unity and
/// inverse discrete Fourier interpolation.
pub fn det_poly(mp: &MatrixPoly) -> Result<Poly> {
    let deg = mp.degree() * mp.dim();
    let m = deg + 1;
    let mut vals = Vec::with_capacity(m);
    for k in 0..m {
        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let z = c64(th.cos(), th.sin());
        vals.push(mp.eval(z).lu().determinant());
    }
    let mut coeffs = Vec::with_capacity(m);
    for j in 0..m {
        let mut acc = C64::ZERO;
        for (k, v) in vals.iter().enumerate() {
            let th = -2.0 * std::f64::consts::PI * (j * k) as f64 / m as f64;
            acc += v * c64(th.cos(), th.sin());
        }
        coeffs.push(acc / m as f64);
    }
    Poly::from_complex(coeffs).realified()
}

// ---------------------------------------------------------------------
// Matrix prior
// ---------------------------------------------------------------------

/// Matrix parameter polynomial Sigma(z), monic of degree n (equal
/// observability indices by construction) with Schur determinant.
#[derive(Clone, Debug)]
pub struct MatrixPrior {
    sigma: MatrixPoly,
    structure: CanonicalStructure,
    sigma_stacked: DMatrix<f64>,
    gamma: DMatrix<f64>,
    det: Poly,
    det_schur_margin: f64,
    /// Sigma = sigma(z) I for a scalar sigma (uniqueness holds in this case).
    scalar_shape: Option<Poly>,
}

impl MatrixPrior {
    pub fn new(sigma: MatrixPoly) -> Result<Self> {
        if !sigma.is_monic() {
            return Err(Error::NotMonic { leading: 0.0 });
        }
        let ell = sigma.dim();
        let n = sigma.degree();
        let structure = CanonicalStructure::new(ell, n)?;
        let det = det_poly(&sigma)?;
        let (schur, margin) = det.is_schur()?;
        if !schur {
            return Err(Error::PriorNotSchur {
                max_root: 1.0 - margin,
            });
        }
        let sigma_stacked = stack_coeffs(&sigma);
        let gamma = structure.gamma(&sigma_stacked);
        let scalar_shape = scalar_shape_of(&sigma);
        Ok(MatrixPrior {
            sigma,
            structure,
            sigma_stacked,
            gamma,
            det,
            det_schur_margin: margin,
            scalar_shape,
        })
    }

    /// sigma(z) I.
    pub fn from_scalar(sigma: &Poly, ell: usize) -> Result<Self> {
        MatrixPrior::new(MatrixPoly::scalar_times_identity(sigma, ell)?)
    }

    /// z^n I, the maximum-entropy prior.
    pub fn max_entropy(n: usize, ell: usize) -> Self {
        MatrixPrior::from_scalar(&Poly::monomial(n), ell).unwrap()
    }

    pub fn sigma(&self) -> &MatrixPoly {
        &self.sigma
    }

    pub fn structure(&self) -> &CanonicalStructure {
        &self.structure
    }

    pub fn sigma_stacked(&self) -> &DMatrix<f64> {
        &self.sigma_stacked
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn degree(&self) -> usize {
        self.sigma.degree()
    }

    pub fn ell(&self) -> usize {
        self.sigma.dim()
    }

    pub fn det(&self) -> &Poly {
        &self.det
    }

    pub fn det_schur_margin(&self) -> f64 {
        self.det_schur_margin
    }

    pub fn scalar_shape(&self) -> Option<&Poly> {
        self.scalar_shape.as_ref()
    }
}

fn scalar_shape_of(sigma: &MatrixPoly) -> Option<Poly> {
    let ell = sigma.dim();
    let mut coeffs = Vec::with_capacity(sigma.degree() + 1);
    for k in 0..=sigma.degree() {
        let c = sigma.coeff(k);
        let diag = c[(0, 0)];
        for i in 0..ell {
            for j in 0..ell {
                let expect = if i == j { diag } else { 0.0 };
                if (c[(i, j)] - expect).abs() > 1e-12 {
                    return None;
                }
            }
        }
        coeffs.push(diag);
    }
    Some(Poly::from_real(&coeffs))
}

// ---------------------------------------------------------------------
// VN construction
// ---------------------------------------------------------------------

/// VN = sum_k (Z^k e kron I) N_k with its bottom block L; L is invertible
/// exactly when all observability indices are equal.
#[derive(Clone, Debug)]
pub struct VnReport {
    pub vn: DMatrix<C64>,
    pub l: DMatrix<C64>,
    pub invertible: bool,
}

pub fn build_vn(
    structure: &CanonicalStructure,
    z: &DMatrix<C64>,
    e: &DVector<C64>,
) -> Result<VnReport> {
    let ell = structure.ell();
    let total = z.nrows(); // n + 1
    let state = structure.state_dim();
    if e[0].norm() < 0.5 || z[(0, 0)].norm() > 1e-12 {
        return Err(Error::NotNormalized);
    }
    let mut vn = DMatrix::<C64>::zeros(ell * total, state);
    let mut zke = e.clone();
    for k in 1..=structure.t_max() {
        zke = z * &zke;
        let nk = structure.n_mat(k).map(|x| c64(x, 0.0));
        // (Z^k e kron I_ell) N_k: block row i of the kron is (Z^k e)_i * I
        for i in 0..total {
            let w = zke[i];
            if w.norm() == 0.0 {
                continue;
            }
            for r in 0..ell {
                for c in 0..state {
                    vn[(ell * i + r, c)] += w * nk[(r, c)];
                }
            }
        }
    }
    let l = vn.rows(ell, state).clone_owned();
    let invertible = pinv_tall_zero_top(&vn, ell).is_ok();
    Ok(VnReport { vn, l, invertible })
}

// ---------------------------------------------------------------------
// Matrix parameters (u, U)
// ---------------------------------------------------------------------

/// The pair (u, U): u is nl x l and U acts linearly on nl x l matrices,
/// stored as its matrix on vectorized arguments.
#[derive(Clone, Debug)]
pub struct MatrixCeeParams {
    pub u: DMatrix<f64>,
    pub u_op: DMatrix<f64>,
    ell: usize,
    state: usize,
}

impl MatrixCeeParams {
    /// Apply the linear operator U to an nl x l matrix.
    pub fn apply_u(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let v = DVector::<f64>::from_column_slice(q.as_slice());
        let out = &self.u_op * v;
        DMatrix::from_column_slice(self.state, self.ell, out.as_slice())
    }
}

fn realify(m: &DMatrix<C64>) -> Result<DMatrix<f64>> {
    let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let residue = m.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(m.map(|c| c.re))
}

/// T = (W - I/2)(W + I/2)^-1 by a right division; the factors commute since
/// both are rational in the block-triangular W.
pub fn matrix_cayley_t(w: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = w.nrows();
    let half = DMatrix::<C64>::identity(dim, dim) * c64(0.5, 0.0);
    let plus = w + &half;
    let minus = w - &half;
    let tt = plus
        .transpose()
        .lu()
        .solve(&minus.transpose())
        .ok_or_else(|| Error::IllConditioned {
            what: "W + I/2".into(),
            cond: f64::INFINITY,
        })?;
    Ok(tt.transpose())
}

/// u = (VN)^+ T_hat and the operator
/// U: Q -> (VN)^+ (sum_k Z^k kron N_k Q) T_hat, built column by column.
pub fn compute_matrix_uu(
    problem: &MatrixProblem,
    structure: &CanonicalStructure,
) -> Result<MatrixCeeParams> {
    if !problem.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if !structure.equal_indices() {
        return Err(Error::SingularStructuredBlock);
    }
    let ell = problem.ell();
    let data = build_matrix_data(problem)?;
    compute_matrix_uu_from(&data, structure, ell)
}

pub fn compute_matrix_uu_from(
    data: &MatrixDataMatrices,
    structure: &CanonicalStructure,
    ell: usize,
) -> Result<MatrixCeeParams> {
    let state = structure.state_dim();
    let total = data.z.nrows();
    let t = matrix_cayley_t(&data.w)?;
    // T_hat = T (e kron I)
    let mut t_hat = DMatrix::<C64>::zeros(ell * total, ell);
    for i in 0..total {
        if data.e[i].norm() == 0.0 {
            continue;
        }
        for r in 0..(ell * total) {
            for c in 0..ell {
                t_hat[(r, c)] += t[(r, ell * i + c)] * data.e[i];
            }
        }
    }
    let vn = build_vn(structure, &data.z, &data.e)?;
    let pinv = pinv_tall_zero_top(&vn.vn, ell)?;
    let u = realify(&(&pinv * &t_hat))?;

    // U on basis matrices E_rs
    let dim = state * ell;
    let mut u_op = DMatrix::<f64>::zeros(dim, dim);
    // precompute Z^k
    let mut z_pows = vec![DMatrix::<C64>::identity(total, total)];
    for _ in 1..=structure.t_max() {
        z_pows.push(&data.z * z_pows.last().unwrap());
    }
    for s in 0..ell {
        for r in 0..state {
            let mut q = DMatrix::<f64>::zeros(state, ell);
            q[(r, s)] = 1.0;
            // M_q = sum_k Z^k kron (N_k q)
            let mut m_q = DMatrix::<C64>::zeros(ell * total, ell * total);
            for k in 1..=structure.t_max() {
                let nkq = (structure.n_mat(k) * &q).map(|x| c64(x, 0.0));
                if nkq.norm() == 0.0 {
                    continue;
                }
                let zk = &z_pows[k];
                for i in 0..total {
                    for j in 0..total {
                        let w = zk[(i, j)];
                        if w.norm() == 0.0 {
                            continue;
                        }
                        for rr in 0..ell {
                            for cc in 0..ell {
                                m_q[(ell * i + rr, ell * j + cc)] += w * nkq[(rr, cc)];
                            }
                        }
                    }
                }
            }
            let img = realify(&(&pinv * m_q * &t_hat))?;
            let col = s * state + r;
            for cc in 0..ell {
                for rr in 0..state {
                    u_op[(cc * state + rr, col)] = img[(rr, cc)];
                }
            }
        }
    }
    Ok(MatrixCeeParams {
        u,
        u_op,
        ell,
        state,
    })
}

// ---------------------------------------------------------------------
// Reduced residual system
// ---------------------------------------------------------------------

/// Ascending coefficients of the reversed polynomial: [I, N_1 X, ..., N_n X]
/// for a state-stacked coefficient matrix X.
fn reversed_blocks(structure: &CanonicalStructure, stacked: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let ell = structure.ell();
    let mut out = Vec::with_capacity(structure.t_max() + 1);
    out.push(DMatrix::identity(ell, ell));
    for k in 1..=structure.t_max() {
        out.push(structure.n_mat(k) * stacked);
    }
    out
}

fn zero_blocks(structure: &CanonicalStructure, stacked: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let ell = structure.ell();
    let mut out = Vec::with_capacity(structure.t_max() + 1);
    out.push(DMatrix::zeros(ell, ell));
    for k in 1..=structure.t_max() {
        out.push(structure.n_mat(k) * stacked);
    }
    out
}

/// Block rows of S(X) M(Y): entry k is sum_(j >= k) X_(j-k) Y_j'.
fn smm(x: &[DMatrix<f64>], y: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = x.len() - 1;
    let ell = x[0].nrows();
    let mut out = vec![DMatrix::<f64>::zeros(ell, ell); n + 1];
    for k in 0..=n {
        for j in k..=n {
            out[k] += &x[j - k] * y[j].transpose();
        }
    }
    out
}

/// Middle-weighted form: entry k is sum_(j >= k) X_(j-k) M Y_j'.
fn smm_weighted(x: &[DMatrix<f64>], m: &DMatrix<f64>, y: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = x.len() - 1;
    let ell = x[0].nrows();
    let mut out = vec![DMatrix::<f64>::zeros(ell, ell); n + 1];
    for k in 0..=n {
        for j in k..=n {
            out[k] += &x[j - k] * m * y[j].transpose();
        }
    }
    out
}

/// A(p, lambda), B(p, lambda) stacked coefficient matrices.
pub fn matrix_homotopy_ab(
    p: &DMatrix<f64>,
    lambda: f64,
    prior: &MatrixPrior,
    params: &MatrixCeeParams,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = prior.gamma() * p + prior.sigma_stacked();
    let g1 = &params.u + params.apply_u(&q);
    (&q - &g1 * lambda, &q + &g1 * lambda)
}

/// Residual of the reduced matrix system (first n block rows) together with
/// the deleted redundant last block row as a consistency check.
pub fn matrix_reduced_residual(
    p: &DMatrix<f64>,
    lambda: f64,
    prior: &MatrixPrior,
    params: &MatrixCeeParams,
) -> (DMatrix<f64>, f64) {
    let structure = prior.structure();
    let n = prior.degree();
    let ell = prior.ell();
    let (a_s, b_s) = matrix_homotopy_ab(p, lambda, prior, params);
    let av = reversed_blocks(structure, &a_s);
    let bv = reversed_blocks(structure, &b_s);
    let sv = reversed_blocks(structure, prior.sigma_stacked());
    let lhs1 = smm(&av, &bv);
    let lhs2 = smm(&bv, &av);
    let rr = DMatrix::<f64>::identity(ell, ell) - structure.h() * p;
    let rhs = smm_weighted(&sv, &rr, &sv);
    let mut out = DMatrix::<f64>::zeros(n * ell, ell);
    for k in 0..n {
        let block = &lhs1[k] + &lhs2[k] - &rhs[k] * 2.0;
        out.view_mut((k * ell, 0), (ell, ell)).copy_from(&block);
    }
    let last = (&lhs1[n] + &lhs2[n] - &rhs[n] * 2.0).norm();
    (out, last)
}

/// Analytic Jacobian of vec(H) with respect to vec(p).
pub fn matrix_reduced_jacobian_p(
    p: &DMatrix<f64>,
    lambda: f64,
    prior: &MatrixPrior,
    params: &MatrixCeeParams,
) -> DMatrix<f64> {
    let structure = prior.structure();
    let n = prior.degree();
    let ell = prior.ell();
    let state = n * ell;
    let (a_s, b_s) = matrix_homotopy_ab(p, lambda, prior, params);
    let av = reversed_blocks(structure, &a_s);
    let bv = reversed_blocks(structure, &b_s);
    let sv = reversed_blocks(structure, prior.sigma_stacked());
    let dim = state * ell;
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..ell {
        for r in 0..state {
            let mut e = DMatrix::<f64>::zeros(state, ell);
            e[(r, s)] = 1.0;
            let dq = prior.gamma() * &e;
            let dg = params.apply_u(&dq);
            let da = &dq - &dg * lambda;
            let db = &dq + &dg * lambda;
            let dav = zero_blocks(structure, &da);
            let dbv = zero_blocks(structure, &db);
            let t1 = smm(&dav, &bv);
            let t2 = smm(&av, &dbv);
            let t3 = smm(&dbv, &av);
            let t4 = smm(&bv, &dav);
            let he = structure.h() * &e;
            let t5 = smm_weighted(&sv, &he, &sv);
            let col = s * state + r;
            for k in 0..n {
                let block = &t1[k] + &t2[k] + &t3[k] + &t4[k] + &t5[k] * 2.0;
                for cc in 0..ell {
                    for rr in 0..ell {
                        jac[(cc * state + k * ell + rr, col)] = block[(rr, cc)];
                    }
                }
            }
        }
    }
    jac
}

/// Analytic partial of vec(H) with respect to lambda.
pub fn matrix_reduced_jacobian_lambda(
    p: &DMatrix<f64>,
    lambda: f64,
    prior: &MatrixPrior,
    params: &MatrixCeeParams,
) -> DVector<f64> {
    let structure = prior.structure();
    let n = prior.degree();
    let ell = prior.ell();
    let state = n * ell;
    let (a_s, b_s) = matrix_homotopy_ab(p, lambda, prior, params);
    let q = prior.gamma() * p + prior.sigma_stacked();
    let g1 = &params.u + params.apply_u(&q);
    let av = reversed_blocks(structure, &a_s);
    let bv = reversed_blocks(structure, &b_s);
    let gv = zero_blocks(structure, &g1);
    // dA = -g1, dB = +g1
    let t1 = smm(&gv, &bv); // from dA in S(A)M(B) with sign -
    let t2 = smm(&av, &gv); // from dB in S(A)M(B) with sign +
    let t3 = smm(&gv, &av); // from dB in S(B)M(A) with sign +
    let t4 = smm(&bv, &gv); // from dA in S(B)M(A) with sign -
    let mut out = DVector::<f64>::zeros(state * ell);
    for k in 0..n {
        let block = -&t1[k] + &t2[k] + &t3[k] - &t4[k];
        for cc in 0..ell {
            for rr in 0..ell {
                out[cc * state + k * ell + rr] = block[(rr, cc)];
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MatrixCeeDiagnostics {
    pub cee_residual: f64,
    pub interpolation_residual: f64,
    pub positivity_residual: f64,
    pub redundant_row_residual: f64,
    pub eigenvalues: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub numerical_degree: usize,
    pub hph_max_eigenvalue: f64,
    pub min_p_eigenvalue: f64,
    pub pick_min_eigenvalue: f64,
    /// Uniqueness holds when Sigma = sigma I; otherwise the homotopy follows
    /// the branch from P = 0 and uniqueness is an open question.
    pub unique_by_shape: bool,
    pub warnings: Vec<String>,
}

/// Solution of the matrix covariance extension equation.
#[derive(Clone, Debug)]
pub struct MatrixCeeSolution {
    pub p_matrix: DMatrix<f64>,
    /// p = P H', the independent variable of the reduced system.
    pub p: DMatrix<f64>,
    pub a: MatrixPoly,
    pub b: MatrixPoly,
    pub r: DMatrix<f64>,
    pub prior: MatrixPrior,
    pub params: MatrixCeeParams,
    pub path: Vec<PathSample>,
    pub diagnostics: MatrixCeeDiagnostics,
}

impl MatrixCeeSolution {
    /// Reversed pair (A*, B*) with F(z) = (1/2) A*(z)^-1 B*(z).
    pub fn reversed_pair(&self) -> (MatrixPoly, MatrixPoly) {
        let structure = self.prior.structure();
        let a_s = stack_coeffs(&self.a);
        let b_s = stack_coeffs(&self.b);
        let to_poly = |blocks: Vec<DMatrix<f64>>| MatrixPoly::from_coeffs(blocks).unwrap();
        (
            to_poly(reversed_blocks(structure, &a_s)),
            to_poly(reversed_blocks(structure, &b_s)),
        )
    }

    /// Taylor jet of F = (1/2) A*^-1 B* at z0.
    pub fn interpolant_jet(&self, z0: C64, order: usize) -> Result<Vec<DMatrix<C64>>> {
        let (a_star, b_star) = self.reversed_pair();
        matrix_rational_jet(&a_star, &b_star, z0, order)
    }

    /// Undo the normalization congruence on A(z): S^-1 A~(z) S.
    pub fn denormalized_a(&self, transform: &MatrixTransform) -> Result<MatrixPoly> {
        let coeffs = (0..=self.a.degree())
            .map(|k| &transform.s_inv * self.a.coeff(k) * &transform.s)
            .collect();
        MatrixPoly::from_coeffs(coeffs)
    }

    /// Undo the normalization on the gain: the symmetric polar factor of
    /// S^-1 R~, which recovers a symmetric positive definite true gain.
    pub fn denormalized_gain(&self, transform: &MatrixTransform) -> Result<DMatrix<f64>> {
        let raw = &transform.s_inv * &self.r;
        spd_sqrt(&(&raw * raw.transpose()))
    }
}

/// Jet of (1/2) A*(z)^-1 B*(z) about z0 via truncated matrix series.
pub fn matrix_rational_jet(
    a_star: &MatrixPoly,
    b_star: &MatrixPoly,
    z0: C64,
    order: usize,
) -> Result<Vec<DMatrix<C64>>> {
    let sa = MatrixSeries::from_matrix_poly_at(a_star, z0, order);
    let sb = MatrixSeries::from_matrix_poly_at(b_star, z0, order);
    let f = sa.inv()?.mul(&sb).scale(0.5);
    Ok((0..=order).map(|k| f.coeff(k)).collect())
}

/// Solve the matrix covariance extension equation for a normalized problem
/// and a matrix prior of matching dimension and degree.
pub fn solve_matrix(
    problem: &MatrixProblem,
    prior: &MatrixPrior,
    opts: &CeeOptions,
) -> Result<MatrixCeeSolution> {
    if !problem.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let n = problem.order();
    let ell = problem.ell();
    if prior.degree() != n || prior.ell() != ell {
        return Err(Error::DegreeMismatch(format!(
            "problem order {} / dimension {} but prior degree {} / dimension {}",
            n,
            ell,
            prior.degree(),
            prior.ell()
        )));
    }
    let pick = pick_test_matrix(problem)?;
    if !pick.feasible {
        return Err(Error::Infeasible {
            min_eig: pick.min_eigenvalue,
        });
    }
    let params = compute_matrix_uu(problem, prior.structure())?;
    let state = n * ell;
    let result = {
        let task = HomotopyTask {
            dim: state * ell,
            residual: Box::new(|v, l| {
                let p = DMatrix::from_column_slice(state, ell, v.as_slice());
                let (h, _) = matrix_reduced_residual(&p, l, prior, &params);
                DVector::from_column_slice(h.as_slice())
            }),
            jac_p: Box::new(|v, l| {
                let p = DMatrix::from_column_slice(state, ell, v.as_slice());
                matrix_reduced_jacobian_p(&p, l, prior, &params)
            }),
            jac_lambda: Box::new(|v, l| {
                let p = DMatrix::from_column_slice(state, ell, v.as_slice());
                matrix_reduced_jacobian_lambda(&p, l, prior, &params)
            }),
            options: opts.homotopy.clone(),
        };
        davidenko_solve(&task)?
    };
    let p_end = DMatrix::from_column_slice(state, ell, result.endpoint.as_slice());

    // P from P - Gamma P Gamma' = G G' - Gamma p p' Gamma'
    let gamma = prior.gamma();
    let q = gamma * &p_end + prior.sigma_stacked();
    let g = &params.u + params.apply_u(&q);
    let gp = gamma * &p_end;
    let rhs = &g * g.transpose() - &gp * gp.transpose();
    let p_matrix = {
        let p = stein_solve_real(gamma, &rhs)?;
        (&p + p.transpose()) * 0.5
    };

    let h = prior.structure().h();
    let ph = &p_matrix * h.transpose();
    let hph = h * &ph;
    let hph_eigs = symmetric_eigenvalues(&hph);
    let hph_max = *hph_eigs.last().unwrap();
    if hph_max >= 1.0 {
        return Err(Error::SolutionCheckFailed {
            what: "H P H' < I".into(),
            value: hph_max,
            tol: 1.0,
        });
    }
    let r = spd_sqrt(&(DMatrix::identity(ell, ell) - &hph))?;

    // recovery A = (I - U)(Gamma P H' + Sigma) - u, B = (I + U)(..) + u
    let q_rec = gamma * &ph + prior.sigma_stacked();
    let g_rec = &params.u + params.apply_u(&q_rec);
    let a_s = &q_rec - &g_rec;
    let b_s = &q_rec + &g_rec;
    let a = unstack_coeffs(&a_s, ell, n);
    let b = unstack_coeffs(&b_s, ell, n);

    // diagnostics
    let cee_residual = {
        let inner = &p_matrix - &ph * ph.transpose();
        (&p_matrix - gamma * inner * gamma.transpose() - &g_rec * g_rec.transpose()).norm()
    };
    if cee_residual > opts.cee_residual_tol {
        return Err(Error::SolutionCheckFailed {
            what: "matrix covariance extension equation residual".into(),
            value: cee_residual,
            tol: opts.cee_residual_tol,
        });
    }
    let (_, redundant) = matrix_reduced_residual(&ph, 1.0, prior, &params);

    // spectral positivity identity with RR' = I - H P H'
    let positivity_residual = {
        let structure = prior.structure();
        let av = reversed_blocks(structure, &a_s);
        let bv = reversed_blocks(structure, &b_s);
        let sv = reversed_blocks(structure, prior.sigma_stacked());
        let rr = &r * r.transpose();
        let lhs1 = smm(&av, &bv);
        let lhs2 = smm(&bv, &av);
        let rhsv = smm_weighted(&sv, &rr, &sv);
        (0..=n)
            .map(|k| (&lhs1[k] + &lhs2[k] - &rhsv[k] * 2.0).norm())
            .fold(0.0, f64::max)
    };
    if positivity_residual > opts.positivity_tol {
        return Err(Error::SolutionCheckFailed {
            what: "matrix spectral positivity identity residual".into(),
            value: positivity_residual,
            tol: opts.positivity_tol,
        });
    }

    // interpolation at every node
    let (a_star, b_star) = {
        let structure = prior.structure();
        (
            MatrixPoly::from_coeffs(reversed_blocks(structure, &a_s))?,
            MatrixPoly::from_coeffs(reversed_blocks(structure, &b_s))?,
        )
    };
    let mut interp_residual = 0.0_f64;
    for node in problem.nodes() {
        let jets = matrix_rational_jet(&a_star, &b_star, node.z, node.multiplicity() - 1)?;
        for (k, expect) in node.jet.iter().enumerate() {
            interp_residual = interp_residual.max((&jets[k] - expect).norm());
        }
    }
    if interp_residual > opts.interpolation_tol {
        return Err(Error::SolutionCheckFailed {
            what: "matrix interpolation jet residual".into(),
            value: interp_residual,
            tol: opts.interpolation_tol,
        });
    }

    let eigenvalues = symmetric_eigenvalues(&p_matrix);
    let min_p_eigenvalue = eigenvalues[0];
    if min_p_eigenvalue < -1e-10 {
        // Theorem 5 does not guarantee uniqueness for general priors; a
        // negative eigenvalue is surfaced with the path rather than masked.
        return Err(Error::SolutionCheckFailed {
            what: "positive semidefiniteness of P (possible non-uniqueness witness)".into(),
            value: min_p_eigenvalue,
            tol: 1e-10,
        });
    }
    let (numerical_degree, singular_values) = numerical_rank(&p_matrix, opts.rank_tol);

    Ok(MatrixCeeSolution {
        p_matrix,
        p: p_end,
        a,
        b,
        r,
        prior: prior.clone(),
        params,
        path: result.path,
        diagnostics: MatrixCeeDiagnostics {
            cee_residual,
            interpolation_residual: interp_residual,
            positivity_residual,
            redundant_row_residual: redundant,
            eigenvalues,
            singular_values,
            numerical_degree,
            hph_max_eigenvalue: hph_max,
            min_p_eigenvalue,
            pick_min_eigenvalue: pick.min_eigenvalue,
            unique_by_shape: prior.scalar_shape().is_some(),
            warnings: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------------
// Degree and reduction
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MatrixReductionPlan {
    pub numerical_degree: usize,
    pub singular_values: Vec<f64>,
    pub reduced_index: usize,
    pub dropped_zeros: Vec<C64>,
    /// Reduced prior when Sigma = sigma(z) I; general priors only report the
    /// determinant zeros to drop.
    pub reduced_prior: Option<MatrixPrior>,
    pub warnings: Vec<String>,
}

/// Numerical McMillan degree of the solution and a reduced-order plan:
/// the spectral zeros of det Sigma(z) to drop and the reduced index.
pub fn matrix_degree_and_reduce(sol: &MatrixCeeSolution, tol: f64) -> Result<MatrixReductionPlan> {
    let (rank, singular_values) = numerical_rank(&sol.p_matrix, tol);
    let ell = sol.prior.ell();
    let n = sol.prior.degree();
    let mut warnings = Vec::new();
    let mut reduced_index = rank / ell;
    if rank % ell != 0 {
        warnings.push(format!(
            "numerical degree {rank} is not a multiple of the output dimension {ell}; rounding up"
        ));
        reduced_index += 1;
    }
    let per_channel_deficit = n - reduced_index;
    match sol.prior.scalar_shape() {
        Some(sigma) => {
            let (dropped, kept, mut w) =
                crate::scalar::split_spectral_zeros(sigma, per_channel_deficit)?;
            warnings.append(&mut w);
            let sigma_hat = Poly::from_roots_real(&kept)?;
            let reduced_prior = MatrixPrior::from_scalar(&sigma_hat, ell)?;
            // each dropped zero of sigma is a double zero of det Sigma
            let mut det_dropped = Vec::new();
            for z in dropped {
                for _ in 0..ell {
                    det_dropped.push(z);
                }
            }
            Ok(MatrixReductionPlan {
                numerical_degree: rank,
                singular_values,
                reduced_index: kept.len(),
                dropped_zeros: det_dropped,
                reduced_prior: Some(reduced_prior),
                warnings,
            })
        }
        None => {
            let det = sol.prior.det();
            let deficit = n * ell - rank;
            let (dropped, _, mut w) = crate::scalar::split_spectral_zeros(det, deficit)?;
            warnings.append(&mut w);
            warnings.push(
                "general matrix prior: construct a reduced Sigma from the kept determinant zeros \
                 (for example as sigma(z) I) before re-solving"
                    .into(),
            );
            Ok(MatrixReductionPlan {
                numerical_degree: rank,
                singular_values,
                reduced_index,
                dropped_zeros: dropped,
                reduced_prior: None,
                warnings,
            })
        }
    }
}

/// Pick-matrix minimum eigenvalues along the deformation W(lambda) for the
/// matrix problem (path feasibility check).
pub fn matrix_path_pick_eigenvalues(
    problem: &MatrixProblem,
    grid: usize,
) -> Result<Vec<f64>> {
    let data = build_matrix_data(problem)?;
    let t = matrix_cayley_t(&data.w)?;
    let x = crate::interp::reachability_gramian(&data.z, &data.e)?;
    let ell = problem.ell();
    let xk = x.kronecker(&DMatrix::<C64>::identity(ell, ell));
    let dim = data.w.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let half = &id * c64(0.5, 0.0);
    let mut out = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        let lambda = k as f64 / grid as f64;
        let w_l = (&id - &t * c64(lambda, 0.0))
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::IllConditioned {
                what: "I - lambda T".into(),
                cond: f64::INFINITY,
            })?
            - &half;
        let sigma = &w_l * &xk + &xk * w_l.adjoint();
        out.push(hermitian_eigenvalues(&sigma)?[0]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::{exact_matrix_raw_covariances, MatrixShapingFilter};
    use crate::interp::{normalize_matrix, MatrixNode, Problem};
    use crate::scalar;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canonical_structure_scalar_degeneration() {
        let s = CanonicalStructure::new(1, 4).unwrap();
        assert_eq!(s.h().nrows(), 1);
        assert!((s.h()[(0, 0)] - 1.0).abs() < 1e-15);
        // N stacked is the identity
        let mut n_stack = DMatrix::<f64>::zeros(4, 4);
        for k in 1..=4 {
            n_stack.view_mut((k - 1, 0), (1, 4)).copy_from(s.n_mat(k));
        }
        assert!((n_stack - DMatrix::<f64>::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn canonical_structure_n_patterns() {
        // ell = 2, n = 2: unit-row patterns of N_1, N_2
        let s = CanonicalStructure::new(2, 2).unwrap();
        let n1 = s.n_mat(1);
        let n2 = s.n_mat(2);
        assert_eq!(n1[(0, 0)], 1.0);
        assert_eq!(n1[(1, 2)], 1.0);
        assert_eq!(n2[(0, 1)], 1.0);
        assert_eq!(n2[(1, 3)], 1.0);
        assert_eq!(n1.iter().filter(|&&x| x != 0.0).count(), 2);
        assert!(s.expansion_identity_residual() < 1e-12);
    }

    #[test]
    fn shift_kill_identity() {
        // N_n J = 0 for equal indices
        for (ell, n) in [(1, 3), (2, 2), (2, 5), (3, 2)] {
            let s = CanonicalStructure::new(ell, n).unwrap();
            assert!((s.n_mat(n) * s.j()).norm() < 1e-15);
        }
    }

    #[test]
    fn vn_scalar_covariance_case() {
        let s = CanonicalStructure::new(1, 3).unwrap();
        let p = Problem::from_covariances(&[0.5, 0.1, 0.05, 0.01])
            .unwrap()
            .problem;
        let d = crate::interp::build_data_matrices(&p).unwrap();
        let vn = build_vn(&s, &d.z, &d.e).unwrap();
        assert!(vn.invertible);
        // VN = [0; I]
        let mut expect = DMatrix::<C64>::zeros(4, 3);
        expect
            .view_mut((1, 0), (3, 3))
            .copy_from(&DMatrix::identity(3, 3));
        assert!((&vn.vn - &expect).norm() < 1e-14);
    }

    #[test]
    fn vn_equal_vs_unequal_indices() {
        // ell = 2, n = 2: equal (2,2) invertible, unequal (3,1) singular
        let lags = [
            DMatrix::<f64>::identity(2, 2) * 0.5,
            DMatrix::from_row_slice(2, 2, &[0.1, 0.02, -0.01, 0.08]),
            DMatrix::from_row_slice(2, 2, &[0.03, 0.0, 0.01, 0.02]),
        ];
        let problem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let data = build_matrix_data(&problem).unwrap();
        let equal = CanonicalStructure::new(2, 2).unwrap();
        let vn = build_vn(&equal, &data.z, &data.e).unwrap();
        assert!(vn.invertible);
        let unequal = CanonicalStructure::with_indices(&[3, 1]).unwrap();
        let vn = build_vn(&unequal, &data.z, &data.e).unwrap();
        assert!(!vn.invertible);
        assert!(matches!(
            pinv_tall_zero_top(&vn.vn, 2),
            Err(Error::SingularStructuredBlock)
        ));
    }

    #[test]
    fn det_poly_of_scalar_shape() {
        let sigma = Poly::from_real(&[0.3, -0.2, 1.0]);
        let mp = MatrixPoly::scalar_times_identity(&sigma, 2).unwrap();
        let det = det_poly(&mp).unwrap();
        let expect = &sigma * &sigma;
        for k in 0..=4 {
            assert!((det.coeff(k) - expect.coeff(k)).norm() < 1e-10);
        }
    }

    #[test]
    fn uu_trivial_half_jets() {
        let lags = [DMatrix::<f64>::identity(2, 2) * 0.5];
        let problem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let s = CanonicalStructure::new(2, 0);
        // order-0 problems have no parameters; use order 1 with zero lag
        let _ = s;
        let lags = [
            DMatrix::<f64>::identity(2, 2) * 0.5,
            DMatrix::<f64>::zeros(2, 2),
        ];
        let problem2 = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let s = CanonicalStructure::new(2, 1).unwrap();
        let params = compute_matrix_uu(&problem2, &s).unwrap();
        assert!(params.u.norm() < 1e-13);
        assert!(params.u_op.norm() < 1e-13);
        let _ = problem;
    }

    #[test]
    fn uu_linearity() {
        let lags = [
            DMatrix::<f64>::identity(2, 2) * 0.5,
            DMatrix::from_row_slice(2, 2, &[0.1, 0.02, -0.01, 0.08]),
            DMatrix::from_row_slice(2, 2, &[0.03, 0.0, 0.01, 0.02]),
        ];
        let problem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let s = CanonicalStructure::new(2, 2).unwrap();
        let params = compute_matrix_uu(&problem, &s).unwrap();
        let q1 = DMatrix::from_fn(4, 2, |i, j| ((i * 2 + j) as f64 * 0.37).sin());
        let q2 = DMatrix::from_fn(4, 2, |i, j| ((i + 3 * j) as f64 * 0.61).cos());
        let lhs = params.apply_u(&(&q1 * 0.7 + &q2 * (-1.3)));
        let rhs = params.apply_u(&q1) * 0.7 + params.apply_u(&q2) * (-1.3);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn uu_scalar_degeneration() {
        let c = [0.5, 0.3, 0.09, 0.027];
        let sproblem = Problem::from_covariances(&c).unwrap().problem;
        let sdata = crate::interp::build_data_matrices(&sproblem).unwrap();
        let sparams = scalar::compute_uu(&sdata).unwrap();

        let lags: Vec<DMatrix<f64>> = c.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect();
        let mproblem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let structure = CanonicalStructure::new(1, 3).unwrap();
        let mparams = compute_matrix_uu(&mproblem, &structure).unwrap();
        assert!((DVector::from_column_slice(mparams.u.as_slice()) - &sparams.u).norm() < 1e-10);
        // the operator matrix acts on vec(q) like U
        let q = DVector::from_row_slice(&[0.3, -0.1, 0.7]);
        let uq_scalar = &sparams.u_mat * &q;
        let uq_matrix = mparams.apply_u(&DMatrix::from_column_slice(3, 1, q.as_slice()));
        assert!((DVector::from_column_slice(uq_matrix.as_slice()) - uq_scalar).norm() < 1e-10);
    }

    #[test]
    fn t_factor_commutation() {
        let lags = [
            DMatrix::<f64>::identity(2, 2) * 0.5,
            DMatrix::from_row_slice(2, 2, &[0.1, 0.02, -0.01, 0.08]),
            DMatrix::from_row_slice(2, 2, &[0.03, 0.0, 0.01, 0.02]),
        ];
        let problem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let data = build_matrix_data(&problem).unwrap();
        let dim = data.w.nrows();
        let half = DMatrix::<C64>::identity(dim, dim) * c64(0.5, 0.0);
        let plus = &data.w + &half;
        let minus = &data.w - &half;
        let left = matrix_cayley_t(&data.w).unwrap();
        let right = plus.lu().solve(&minus).unwrap();
        assert!((&left - &right).norm() < 1e-12);
    }

    #[test]
    fn residual_starts_at_zero_and_jacobians_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let filter = random_matrix_filter(&mut rng, 2, 2);
        let lags = exact_matrix_raw_covariances(&filter, 2).unwrap();
        let v = MatrixProblem::from_raw_covariances(&lags).unwrap();
        let (problem, _) = normalize_matrix(&v.problem).unwrap();
        let prior = MatrixPrior::from_scalar(&Poly::from_real(&[0.06, -0.5, 1.0]), 2).unwrap();
        let params = compute_matrix_uu(&problem, prior.structure()).unwrap();

        let (h0, last0) = matrix_reduced_residual(
            &DMatrix::zeros(4, 2),
            0.0,
            &prior,
            &params,
        );
        assert!(h0.norm() < 1e-12 && last0 < 1e-12);

        let p = DMatrix::from_fn(4, 2, |i, j| 0.05 * ((i + 2 * j) as f64 * 0.7).sin());
        let lambda = 0.63;
        let jac = matrix_reduced_jacobian_p(&p, lambda, &prior, &params);
        let jl = matrix_reduced_jacobian_lambda(&p, lambda, &prior, &params);
        let h = 1e-6;
        for col in 0..8 {
            let mut pp = p.clone();
            let mut pm = p.clone();
            let (r, c) = (col % 4, col / 4);
            pp[(r, c)] += h;
            pm[(r, c)] -= h;
            let fp = matrix_reduced_residual(&pp, lambda, &prior, &params).0;
            let fm = matrix_reduced_residual(&pm, lambda, &prior, &params).0;
            let fd = (DVector::from_column_slice(fp.as_slice())
                - DVector::from_column_slice(fm.as_slice()))
                / (2.0 * h);
            assert!((jac.column(col) - fd).norm() < 1e-6, "column {col}");
        }
        let fp = matrix_reduced_residual(&p, lambda + h, &prior, &params).0;
        let fm = matrix_reduced_residual(&p, lambda - h, &prior, &params).0;
        let fd = (DVector::from_column_slice(fp.as_slice())
            - DVector::from_column_slice(fm.as_slice()))
            / (2.0 * h);
        assert!((&jl - &fd).norm() < 1e-6);
    }

    pub(crate) fn random_matrix_filter(
        rng: &mut ChaCha8Rng,
        ell: usize,
        n: usize,
    ) -> MatrixShapingFilter {
        loop {
            // random stable monic A(z) through small random coefficients
            let coeffs: Vec<DMatrix<f64>> = (0..n)
                .map(|_| DMatrix::from_fn(ell, ell, |_, _| rng.random_range(-0.25..0.25)))
                .chain(std::iter::once(DMatrix::identity(ell, ell)))
                .collect();
            let a = match MatrixPoly::from_coeffs(coeffs) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let mut roots: Vec<C64> = Vec::new();
            while roots.len() < n {
                if n - roots.len() >= 2 && rng.random_bool(0.5) {
                    let r: f64 = rng.random_range(0.1..0.8);
                    let th: f64 = rng.random_range(0.2..2.9);
                    roots.push(c64(r * th.cos(), r * th.sin()));
                    roots.push(c64(r * th.cos(), -r * th.sin()));
                } else {
                    roots.push(c64(rng.random_range(-0.8..0.8), 0.0));
                }
            }
            let sigma_scalar = Poly::from_roots_real(&roots).unwrap();
            let sigma = MatrixPoly::scalar_times_identity(&sigma_scalar, ell).unwrap();
            let g = DMatrix::from_fn(ell, ell, |_, _| rng.random_range(-0.5..0.5));
            let r_gain = &g * g.transpose() + DMatrix::<f64>::identity(ell, ell);
            if let Ok(f) = MatrixShapingFilter::new(sigma, a, r_gain) {
                return f;
            }
        }
    }

    #[test]
    fn solve_trivial_matrix_data() {
        // u = 0: P = 0, A = B = Sigma, R = I
        let lags = [
            DMatrix::<f64>::identity(2, 2) * 0.5,
            DMatrix::<f64>::zeros(2, 2),
            DMatrix::<f64>::zeros(2, 2),
        ];
        let problem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let sigma = Poly::from_real(&[0.06, -0.5, 1.0]);
        let prior = MatrixPrior::from_scalar(&sigma, 2).unwrap();
        let sol = solve_matrix(&problem, &prior, &CeeOptions::default()).unwrap();
        assert!(sol.p_matrix.norm() < 1e-12);
        assert!((&sol.r - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        for k in 0..=2 {
            assert!((sol.a.coeff(k) - prior.sigma().coeff(k)).norm() < 1e-12);
            assert!((sol.b.coeff(k) - prior.sigma().coeff(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_recovers_random_system_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..4 {
            let n = 2 + trial % 2;
            let filter = random_matrix_filter(&mut rng, 2, n);
            let lags = exact_matrix_raw_covariances(&filter, n).unwrap();
            let v = MatrixProblem::from_raw_covariances(&lags).unwrap();
            let (problem, transform) = normalize_matrix(&v.problem).unwrap();
            let sigma = scalar_shape_of(filter.sigma_poly()).unwrap();
            let prior = MatrixPrior::from_scalar(&sigma, 2).unwrap();
            let sol = solve_matrix(&problem, &prior, &CeeOptions::default()).unwrap();
            let a_rec = sol.denormalized_a(&transform).unwrap();
            for k in 0..n {
                let err = (a_rec.coeff(k) - filter.a_poly().coeff(k)).norm();
                assert!(err < 1e-7, "A coefficient {k} error {err}");
            }
            let r_rec = sol.denormalized_gain(&transform).unwrap();
            let r_sym = spd_sqrt(&(filter.gain() * filter.gain().transpose())).unwrap();
            assert!((&r_rec - &r_sym).norm() < 1e-7);
            assert!(sol.diagnostics.unique_by_shape);
        }
    }

    #[test]
    fn solve_matches_scalar_for_ell_one() {
        let c = [0.5, 0.3, 0.09];
        let sproblem = Problem::from_covariances(&c).unwrap().problem;
        let sigma = Poly::from_real(&[0.06, -0.5, 1.0]);
        let sprior = scalar::SpectralPrior::new(sigma.clone()).unwrap();
        let ssol = scalar::solve(&sproblem, &sprior, &CeeOptions::default()).unwrap();

        let lags: Vec<DMatrix<f64>> = c.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect();
        let mproblem = MatrixProblem::from_covariances(&lags).unwrap().problem;
        let mprior = MatrixPrior::from_scalar(&sigma, 1).unwrap();
        let msol = solve_matrix(&mproblem, &mprior, &CeeOptions::default()).unwrap();

        assert!((&msol.p_matrix - &ssol.p_matrix).norm() < 1e-9);
        for k in 0..=2 {
            assert!((msol.a.coeff(k)[(0, 0)] - ssol.a.coeff(k).re).abs() < 1e-9);
            assert!((msol.b.coeff(k)[(0, 0)] - ssol.b.coeff(k).re).abs() < 1e-9);
        }
        assert!((msol.r[(0, 0)] - ssol.rho).abs() < 1e-9);
    }

    #[test]
    fn reduction_plan_scalar_shape() {
        // exact rank-deficient case: degree-1 system inside an order-2 problem
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let filter = random_matrix_filter(&mut rng, 2, 1);
        let lags = exact_matrix_raw_covariances(&filter, 2).unwrap();
        let v = MatrixProblem::from_raw_covariances(&lags).unwrap();
        let (problem, _) = normalize_matrix(&v.problem).unwrap();
        let sigma1 = scalar_shape_of(filter.sigma_poly()).unwrap();
        let extra = Poly::from_real(&[-0.4, 1.0]);
        let sigma = &sigma1 * &extra;
        let prior = MatrixPrior::from_scalar(&sigma, 2).unwrap();
        let sol = solve_matrix(&problem, &prior, &CeeOptions::default()).unwrap();
        let plan = matrix_degree_and_reduce(&sol, 1e-6).unwrap();
        assert_eq!(plan.numerical_degree, 2, "sv {:?}", plan.singular_values);
        assert_eq!(plan.reduced_index, 1);
        assert_eq!(plan.dropped_zeros.len(), 2);
        assert!(plan.reduced_prior.is_some());
    }

    #[test]
    fn degree_fixture_eigenvalue_list() {
        // printed eigenvalue list of the order-10 covariance fit: rank 5 at
        // the default 1e-2 threshold, rank 4 at 5e-2 (six values are small)
        let eigs = [
            5.8e-6, 2.03e-4, 1.8e-3, 3.9e-3, 6e-3, 0.03, 0.365, 0.4879, 0.7895, 0.8967,
        ];
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&eigs));
        assert_eq!(numerical_rank(&m, 1e-2).0, 5);
        assert_eq!(numerical_rank(&m, 5e-2).0, 4);
    }

    #[test]
    fn matrix_path_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let filter = random_matrix_filter(&mut rng, 2, 2);
        let lags = exact_matrix_raw_covariances(&filter, 2).unwrap();
        let v = MatrixProblem::from_raw_covariances(&lags).unwrap();
        let (problem, _) = normalize_matrix(&v.problem).unwrap();
        let eigs = matrix_path_pick_eigenvalues(&problem, 10).unwrap();
        assert_eq!(eigs.len(), 11);
        assert!(eigs.iter().all(|&e| e > 0.0), "{eigs:?}");
    }
}
