//! The scalar covariance extension equation: parameter computation (u, U),
//! the reduced residual system, homotopy solution, recovery of (a, b, rho)
//! and degree diagnostics.
//!
//! Coefficient vectors follow the companion convention
//! a(z) = z^n + a_1 z^(n-1) + ... + a_n, stored as (a_1, ..., a_n).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interp::{build_data_matrices, pick_test_from, DataMatrices, Problem};
use crate::numerics::{
    davidenko_solve, numerical_rank, stein_solve_real, symmetric_eigenvalues,
    hermitian_eigenvalues, HomotopyOptions, HomotopyTask, PathSample, RANK_TOL_DEFAULT,
};
use crate::poly::{c64, positivity_residual, rational_jet, C64, Poly};

const IMAG_RESIDUE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------
// Spectral prior
// ---------------------------------------------------------------------

/// The parameter polynomial sigma (monic Schur) with its companion
/// structures: the coefficient vector, the matrix Gamma = J - sigma h'
/// and the unit vector h.
#[derive(Clone, Debug)]
pub struct SpectralPrior {
    sigma: Poly,
    sigma_vec: DVector<f64>,
    gamma: DMatrix<f64>,
    schur_margin: f64,
}

impl SpectralPrior {
    pub fn new(sigma: Poly) -> Result<Self> {
        let sigma = sigma.realified()?;
        if !sigma.is_monic() {
            return Err(Error::NotMonic {
                leading: sigma.leading().norm(),
            });
        }
        let (schur, margin) = sigma.is_schur()?;
        if !schur {
            return Err(Error::PriorNotSchur {
                max_root: 1.0 - margin,
            });
        }
        let sigma_vec = monic_vec(&sigma)?;
        let n = sigma_vec.len();
        let mut gamma = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            if i + 1 < n {
                gamma[(i, i + 1)] = 1.0;
            }
            gamma[(i, 0)] -= sigma_vec[i];
        }
        Ok(SpectralPrior {
            sigma,
            sigma_vec,
            gamma,
            schur_margin: margin,
        })
    }

    /// The maximum-entropy prior z^n.
    pub fn max_entropy(n: usize) -> Self {
        SpectralPrior::new(Poly::monomial(n)).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.sigma_vec.len()
    }

    pub fn sigma(&self) -> &Poly {
        &self.sigma
    }

    pub fn sigma_vec(&self) -> &DVector<f64> {
        &self.sigma_vec
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn schur_margin(&self) -> f64 {
        self.schur_margin
    }

    /// s_k = sum_i sigma_i sigma_(i+k) over the full vector (1, sigma_1, ..),
    /// for k = 0 .. n-1, the right-hand side of the reduced system.
    fn s_vector(&self) -> DVector<f64> {
        let n = self.degree();
        let full = self.full_vec();
        DVector::from_fn(n, |k, _| {
            (0..=(n - k)).map(|i| full[i] * full[i + k]).sum()
        })
    }

    fn full_vec(&self) -> DVector<f64> {
        let n = self.degree();
        DVector::from_fn(n + 1, |i, _| if i == 0 { 1.0 } else { self.sigma_vec[i - 1] })
    }
}

/// (a_1..a_n) from a monic real polynomial, companion order.
pub fn monic_vec(p: &Poly) -> Result<DVector<f64>> {
    if !p.is_monic() {
        return Err(Error::NotMonic {
            leading: p.leading().norm(),
        });
    }
    let real = p.real_coeffs()?;
    let n = p.degree();
    Ok(DVector::from_fn(n, |i, _| real[n - 1 - i]))
}

/// Monic polynomial z^n + v_1 z^(n-1) + ... + v_n from its coefficient vector.
pub fn vec_to_monic(v: &DVector<f64>) -> Poly {
    let n = v.len();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    for i in 1..=n {
        coeffs[n - i] = v[i - 1];
    }
    Poly::from_real(&coeffs)
}

// ---------------------------------------------------------------------
// Data-dependent parameters (u, U)
// ---------------------------------------------------------------------

/// Where a parameter pair came from; the covariance route builds U as the
/// strictly lower Toeplitz matrix of u, the general route via [0 I] V^-1 T V.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSource {
    GeneralData,
    Covariance,
}

/// The data-dependent pair (u, U) driving the covariance extension equation.
#[derive(Clone, Debug)]
pub struct CeeParams {
    pub u: DVector<f64>,
    pub u_mat: DMatrix<f64>,
    pub source: ParamSource,
}

fn realify_vec(v: &DVector<C64>) -> Result<DVector<f64>> {
    let scale = v.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let residue = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(v.map(|c| c.re))
}

fn realify_mat(m: &DMatrix<C64>) -> Result<DMatrix<f64>> {
    let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let residue = m.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(m.map(|c| c.re))
}

/// Cayley transform T = (W + I/2)^-1 (W - I/2). The two factor orders agree
/// because both are rational functions of the block-triangular W.
pub fn cayley_t(w: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = w.nrows();
    let half = DMatrix::<C64>::identity(n, n) * c64(0.5, 0.0);
    let plus = w + &half;
    let minus = w - &half;
    plus.lu().solve(&minus).ok_or_else(|| Error::IllConditioned {
        what: "W + I/2".into(),
        cond: f64::INFINITY,
    })
}

/// General-data parameters: [u U] = [0 I_n] V^-1 T V.
pub fn compute_uu(data: &DataMatrices) -> Result<CeeParams> {
    if data.v_condition > 1e12 {
        return Err(Error::IllConditioned {
            what: "reachability matrix V".into(),
            cond: data.v_condition,
        });
    }
    let t = cayley_t(&data.w)?;
    let tv = &t * &data.v;
    let m = data
        .v
        .clone()
        .lu()
        .solve(&tv)
        .ok_or_else(|| Error::IllConditioned {
            what: "reachability matrix V".into(),
            cond: data.v_condition,
        })?;
    let n = data.v.nrows() - 1;
    let u = realify_vec(&m.view((1, 0), (n, 1)).clone_owned().column(0).into_owned())?;
    let u_mat = realify_mat(&m.view((1, 1), (n, n)).clone_owned())?;
    Ok(CeeParams {
        u,
        u_mat,
        source: ParamSource::GeneralData,
    })
}

/// Covariance-data parameters from the expansion of z^n / (z^n + c_1 z^(n-1)
/// + ... + c_n) about infinity; U is the strictly lower Toeplitz matrix of u.
pub fn covariance_uu(c: &[f64]) -> Result<CeeParams> {
    if c.is_empty() || (c[0] - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "covariance sequence must start with c0 = 1/2".into(),
        ));
    }
    let n = c.len() - 1;
    // positivity of the underlying Toeplitz matrix (unit diagonal convention)
    let toeplitz = DMatrix::<f64>::from_fn(n + 1, n + 1, |i, j| {
        let k = i.abs_diff(j);
        if k == 0 {
            1.0
        } else {
            c[k]
        }
    });
    let min_eig = symmetric_eigenvalues(&toeplitz)[0];
    if min_eig <= 0.0 {
        return Err(Error::NonPositiveToeplitz { min_eig });
    }
    if n == 0 {
        return Ok(CeeParams {
            u: DVector::zeros(0),
            u_mat: DMatrix::zeros(0, 0),
            source: ParamSource::Covariance,
        });
    }
    let mut den_coeffs = vec![0.0; n + 1];
    den_coeffs[n] = 1.0;
    for k in 1..=n {
        den_coeffs[n - k] = c[k];
    }
    let den = Poly::from_real(&den_coeffs);
    let u_c = crate::poly::laurent_expand(&Poly::monomial(n), &den, n)?;
    let u = realify_vec(&DVector::from_iterator(n, u_c.iter().copied()))?;
    let mut u_mat = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        for j in 0..i {
            u_mat[(i, j)] = u[i - j - 1];
        }
    }
    // consistency with the convolution identities C u = c, C (I - U) = I
    let c_mat = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i > j {
            c[i - j]
        } else {
            0.0
        }
    });
    let cvec = DVector::from_fn(n, |i, _| c[i + 1]);
    let r1 = (&c_mat * &u - &cvec).norm();
    let r2 = (&c_mat * (DMatrix::identity(n, n) - &u_mat) - DMatrix::<f64>::identity(n, n)).norm();
    debug_assert!(r1 < 1e-10 && r2 < 1e-10, "convolution identities violated");
    Ok(CeeParams {
        u,
        u_mat,
        source: ParamSource::Covariance,
    })
}

// ---------------------------------------------------------------------
// The diffeomorphism u = omega(w) and the linear map U = L u
// ---------------------------------------------------------------------

/// Node layout (node, multiplicity) of a problem.
pub fn layout_of(problem: &Problem) -> Vec<(C64, usize)> {
    problem
        .nodes()
        .iter()
        .map(|n| (n.z, n.multiplicity()))
        .collect()
}

/// M = V^-1 with the first row and column deleted; depends on nodes only.
fn omega_m(problem: &Problem) -> Result<DMatrix<C64>> {
    let data = build_data_matrices(problem)?;
    let n = data.v.nrows() - 1;
    let v_inv = data
        .v
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned {
            what: "reachability matrix V".into(),
            cond: data.v_condition,
        })?;
    Ok(v_inv.view((1, 1), (n, n)).clone_owned())
}

/// Per-block Cayley coordinates d_j of a normalized problem, stacked into the
/// n-vector (d_0', d_10, d_1', ..., d_m0, d_m')'; the base block drops d_00.
fn block_d(problem: &Problem) -> Result<DVector<C64>> {
    let mut d = Vec::new();
    for (j, node) in problem.nodes().iter().enumerate() {
        let m = node.multiplicity();
        let w0 = node.jet[0];
        let d0 = (w0 - 0.5) / (w0 + 0.5);
        if (w0 + c64(0.5, 0.0)).norm() < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "value {w0} at node {} sits on the Cayley singularity -1/2",
                node.z
            )));
        }
        if j > 0 {
            d.push(d0);
        }
        if m > 1 {
            // tail: d_j = C_j^-1 w_j / (w_j0 + 1/2) with C_j the trailing
            // principal block of W_j + I/2
            let cj = DMatrix::<C64>::from_fn(m - 1, m - 1, |r, c| {
                if r < c {
                    C64::ZERO
                } else if r == c {
                    w0 + 0.5
                } else {
                    node.jet[r - c]
                }
            });
            let wj = DVector::<C64>::from_fn(m - 1, |r, _| node.jet[r + 1]);
            let dj = cj.lu().solve(&wj).ok_or_else(|| Error::IllConditioned {
                what: "Cayley block".into(),
                cond: f64::INFINITY,
            })?;
            for k in 0..(m - 1) {
                d.push(dj[k] / (w0 + 0.5));
            }
        }
    }
    Ok(DVector::from_iterator(d.len(), d.into_iter()))
}

/// The diffeomorphism u = M phi(w) from normalized jet values to u.
pub fn omega_map(problem: &Problem) -> Result<DVector<f64>> {
    if !problem.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let m = omega_m(problem)?;
    let d = block_d(problem)?;
    realify_vec(&(&m * &d))
}

/// Inverse of [`omega_map`]: reconstruct the jet values on the given node
/// layout from u.
pub fn omega_inverse(u: &DVector<f64>, layout: &[(C64, usize)]) -> Result<Problem> {
    let jets_half: Vec<Vec<C64>> = layout
        .iter()
        .map(|&(_, m)| vec![C64::ZERO; m])
        .collect();
    let mut problem_nodes: Vec<crate::interp::Node> = layout
        .iter()
        .zip(jets_half)
        .map(|(&(z, _), jet)| crate::interp::Node::new(z, jet))
        .collect();
    problem_nodes[0].jet[0] = c64(0.5, 0.0);
    let skeleton = Problem::from_nodes_unchecked(problem_nodes.clone());
    let m = omega_m(&skeleton)?;
    let d_vec = m.lu().solve(&u.map(|x| c64(x, 0.0))).ok_or_else(|| {
        Error::IllConditioned {
            what: "omega map".into(),
            cond: f64::INFINITY,
        }
    })?;

    // unpack per block and invert the Cayley coordinates
    let mut idx = 0;
    for (j, &(_, mult)) in layout.iter().enumerate() {
        let d0 = if j == 0 {
            C64::ZERO
        } else {
            let v = d_vec[idx];
            idx += 1;
            v
        };
        let tail: Vec<C64> = (0..mult.saturating_sub(1))
            .map(|_| {
                let v = d_vec[idx];
                idx += 1;
                v
            })
            .collect();
        let w0 = (c64(1.0, 0.0) + d0) / (c64(1.0, 0.0) - d0) * 0.5;
        problem_nodes[j].jet[0] = w0;
        if mult > 1 {
            // w_j = (I - S_j)^-1 d_j / (1 - d_j0), S_j lower Toeplitz in d
            let k = mult - 1;
            let full_d: Vec<C64> = std::iter::once(d0).chain(tail.iter().copied()).collect();
            let s = DMatrix::<C64>::from_fn(k, k, |r, c| {
                if r >= c {
                    full_d[r - c]
                } else {
                    C64::ZERO
                }
            });
            let rhs = DVector::<C64>::from_iterator(k, tail.iter().copied());
            let wj = (DMatrix::<C64>::identity(k, k) - s)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::IllConditioned {
                    what: "Cayley block".into(),
                    cond: f64::INFINITY,
                })?;
            for r in 0..k {
                problem_nodes[j].jet[r + 1] = wj[r] / (c64(1.0, 0.0) - d0);
            }
        }
    }
    Ok(Problem::from_nodes_unchecked(problem_nodes))
}

/// The linear map U = L u induced by the block-Toeplitz structure.
pub fn l_map(u: &DVector<f64>, layout: &[(C64, usize)]) -> Result<DMatrix<f64>> {
    let skeleton: Vec<crate::interp::Node> = layout
        .iter()
        .map(|&(z, m)| crate::interp::Node::new(z, vec![c64(0.5, 0.0); m]))
        .collect();
    let skeleton = Problem::from_nodes_unchecked(skeleton);
    let data = build_data_matrices(&skeleton)?;
    let m = omega_m(&skeleton)?;
    let d_vec = m.lu().solve(&u.map(|x| c64(x, 0.0))).ok_or_else(|| {
        Error::IllConditioned {
            what: "omega map".into(),
            cond: f64::INFINITY,
        }
    })?;
    // rebuild the block-Toeplitz T from d and push it through [0 I] V^-1 T V
    let total = data.v.nrows();
    let n = total - 1;
    let mut t = DMatrix::<C64>::zeros(total, total);
    let mut idx = 0;
    let mut off = 0;
    for (j, &(_, mult)) in layout.iter().enumerate() {
        let d0 = if j == 0 {
            C64::ZERO
        } else {
            let v = d_vec[idx];
            idx += 1;
            v
        };
        let mut col = vec![d0];
        for _ in 1..mult {
            col.push(d_vec[idx]);
            idx += 1;
        }
        for r in 0..mult {
            for c in 0..=r {
                t[(off + r, off + c)] = col[r - c];
            }
        }
        off += mult;
    }
    let tv = &t * &data.v;
    let full = data
        .v
        .clone()
        .lu()
        .solve(&tv)
        .ok_or_else(|| Error::IllConditioned {
            what: "reachability matrix V".into(),
            cond: f64::INFINITY,
        })?;
    realify_mat(&full.view((1, 1), (n, n)).clone_owned())
}

// ---------------------------------------------------------------------
// Reduced residual system
// ---------------------------------------------------------------------

/// Symmetric bilinear coefficient form of a(z) b(1/z) + b(z) a(1/z): entry k
/// is the coefficient of z^(-k), for full coefficient vectors in companion
/// order (leading 1 first).
fn gram(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = x.len() - 1;
    DVector::from_fn(n + 1, |k, _| {
        let mut acc = 0.0;
        for j in k..=n {
            acc += x[j - k] * y[j];
        }
        for j in 0..=(n - k) {
            acc += x[j + k] * y[j];
        }
        acc
    })
}

fn with_leading_one(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(n + 1, |i, _| if i == 0 { 1.0 } else { v[i - 1] })
}

fn with_leading_zero(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(n + 1, |i, _| if i == 0 { 0.0 } else { v[i - 1] })
}

/// a(p, lambda) and b(p, lambda) coefficient vectors along the homotopy.
pub fn homotopy_ab(
    p: &DVector<f64>,
    lambda: f64,
    prior: &SpectralPrior,
    params: &CeeParams,
) -> (DVector<f64>, DVector<f64>) {
    let q = prior.gamma() * p + prior.sigma_vec();
    let g1 = &params.u + &params.u_mat * &q;
    (&q - &g1 * lambda, &q + &g1 * lambda)
}

/// Residual H(p, lambda) of the reduced system together with the redundant
/// last row, which is returned as a free consistency check.
pub fn reduced_residual(
    p: &DVector<f64>,
    lambda: f64,
    prior: &SpectralPrior,
    params: &CeeParams,
) -> (DVector<f64>, f64) {
    let n = prior.degree();
    let (a, b) = homotopy_ab(p, lambda, prior, params);
    let full = gram(&with_leading_one(&a), &with_leading_one(&b));
    let s = prior.s_vector();
    let scale = 2.0 * (1.0 - p[0]);
    let h = DVector::from_fn(n, |k, _| full[k] - scale * s[k]);
    let redundant = full[n] - scale * prior.sigma_vec()[n - 1];
    (h, redundant)
}

/// Analytic partial dH/dp.
pub fn reduced_jacobian_p(
    p: &DVector<f64>,
    lambda: f64,
    prior: &SpectralPrior,
    params: &CeeParams,
) -> DMatrix<f64> {
    let n = prior.degree();
    let (a, b) = homotopy_ab(p, lambda, prior, params);
    let af = with_leading_one(&a);
    let bf = with_leading_one(&b);
    let s = prior.s_vector();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let dq = prior.gamma().column(j).into_owned();
        let da = &dq - &params.u_mat * &dq * lambda;
        let db = &dq + &params.u_mat * &dq * lambda;
        let col = gram(&bf, &with_leading_zero(&da)) + gram(&af, &with_leading_zero(&db));
        for k in 0..n {
            jac[(k, j)] = col[k];
        }
        if j == 0 {
            for k in 0..n {
                jac[(k, 0)] += 2.0 * s[k];
            }
        }
    }
    jac
}

/// Analytic partial dH/dlambda.
pub fn reduced_jacobian_lambda(
    p: &DVector<f64>,
    lambda: f64,
    prior: &SpectralPrior,
    params: &CeeParams,
) -> DVector<f64> {
    let n = prior.degree();
    let (a, b) = homotopy_ab(p, lambda, prior, params);
    let q = prior.gamma() * p + prior.sigma_vec();
    let g1 = &params.u + &params.u_mat * &q;
    let col = gram(&with_leading_one(&a), &with_leading_zero(&g1))
        - gram(&with_leading_one(&b), &with_leading_zero(&g1));
    DVector::from_fn(n, |k, _| col[k])
}

// ---------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CeeOptions {
    pub homotopy: HomotopyOptions,
    pub rank_tol: f64,
    /// Tolerances enforced on the solution invariants.
    pub cee_residual_tol: f64,
    pub interpolation_tol: f64,
    pub positivity_tol: f64,
}

impl Default for CeeOptions {
    fn default() -> Self {
        CeeOptions {
            homotopy: HomotopyOptions::default(),
            rank_tol: RANK_TOL_DEFAULT,
            cee_residual_tol: 1e-8,
            interpolation_tol: 1e-7,
            positivity_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CeeDiagnostics {
    pub cee_residual: f64,
    pub interpolation_residual: f64,
    pub positivity_residual: f64,
    pub redundant_row_residual: f64,
    pub p_consistency: f64,
    pub singular_values: Vec<f64>,
    pub numerical_degree: usize,
    pub h_p_h: f64,
    pub min_p_eigenvalue: f64,
    pub pick_min_eigenvalue: f64,
    pub v_condition: f64,
    pub a_schur_margin: f64,
    pub warnings: Vec<String>,
}

/// Solution of the covariance extension equation: the matrix P, the solved
/// polynomial pair (a, b), the gain rho, diagnostics and the homotopy trace.
#[derive(Clone, Debug)]
pub struct CeeSolution {
    pub p_matrix: DMatrix<f64>,
    pub p: DVector<f64>,
    pub a: Poly,
    pub b: Poly,
    pub rho: f64,
    pub prior: SpectralPrior,
    pub params: CeeParams,
    pub path: Vec<PathSample>,
    pub diagnostics: CeeDiagnostics,
}

impl CeeSolution {
    /// The interpolant f = (1/2) b*(z) / a*(z) as (numerator, denominator).
    pub fn interpolant(&self) -> Result<(Poly, Poly)> {
        let n = self.a.degree();
        let num = self.b.reverse(n)?.scale(c64(0.5, 0.0));
        let den = self.a.reverse(n)?;
        Ok((num, den))
    }

    /// Shaping filter v = rho sigma / a as (numerator, denominator).
    pub fn shaping_filter(&self) -> (Poly, Poly) {
        (
            self.prior.sigma().scale(c64(self.rho, 0.0)),
            self.a.clone(),
        )
    }
}

/// Solve the covariance extension equation for a normalized problem and a
/// Schur prior of matching degree by homotopy continuation from P = 0.
pub fn solve(problem: &Problem, prior: &SpectralPrior, opts: &CeeOptions) -> Result<CeeSolution> {
    if !problem.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let n = problem.order();
    if prior.degree() != n {
        return Err(Error::DegreeMismatch(format!(
            "problem order {} but prior degree {}",
            n,
            prior.degree()
        )));
    }
    let data = build_data_matrices(problem)?;
    let pick = pick_test_from(&data)?;
    if !pick.feasible {
        return Err(Error::Infeasible {
            min_eig: pick.min_eigenvalue,
        });
    }
    if n == 0 {
        // degree zero: f is the constant 1/2
        return finish_solution(
            problem,
            prior,
            opts,
            CeeParams {
                u: DVector::zeros(0),
                u_mat: DMatrix::zeros(0, 0),
                source: ParamSource::GeneralData,
            },
            DVector::zeros(0),
            Vec::new(),
            &data,
            pick.min_eigenvalue,
        );
    }
    let params = compute_uu(&data)?;
    solve_with_params(problem, prior, params, opts, &data, pick.min_eigenvalue)
}

/// Solve with explicitly supplied (u, U) parameters.
pub fn solve_with_params(
    problem: &Problem,
    prior: &SpectralPrior,
    params: CeeParams,
    opts: &CeeOptions,
    data: &DataMatrices,
    pick_min_eigenvalue: f64,
) -> Result<CeeSolution> {
    let n = prior.degree();
    let result = {
        let task = HomotopyTask {
            dim: n,
            residual: Box::new(|p, l| reduced_residual(p, l, prior, &params).0),
            jac_p: Box::new(|p, l| reduced_jacobian_p(p, l, prior, &params)),
            jac_lambda: Box::new(|p, l| reduced_jacobian_lambda(p, l, prior, &params)),
            options: opts.homotopy.clone(),
        };
        davidenko_solve(&task)?
    };
    finish_solution(
        problem,
        prior,
        opts,
        params,
        result.endpoint,
        result.path,
        data,
        pick_min_eigenvalue,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_solution(
    problem: &Problem,
    prior: &SpectralPrior,
    opts: &CeeOptions,
    params: CeeParams,
    p_end: DVector<f64>,
    path: Vec<PathSample>,
    data: &DataMatrices,
    pick_min_eigenvalue: f64,
) -> Result<CeeSolution> {
    let n = prior.degree();
    let gamma = prior.gamma();
    let mut warnings = data.warnings.clone();

    // P from the Lyapunov form P - Gamma P Gamma' = g g' - Gamma p p' Gamma'
    let (p_matrix, redundant) = if n == 0 {
        (DMatrix::<f64>::zeros(0, 0), 0.0)
    } else {
        let q = gamma * &p_end + prior.sigma_vec();
        let g = &params.u + &params.u_mat * &q;
        let gp = gamma * &p_end;
        let rhs = &g * g.transpose() - &gp * gp.transpose();
        let p_mat = stein_solve_real(gamma, &rhs)?;
        let (_, redundant) = reduced_residual(&p_end, 1.0, prior, &params);
        ((&p_mat + p_mat.transpose()) * 0.5, redundant)
    };

    let ph = if n == 0 {
        DVector::zeros(0)
    } else {
        p_matrix.column(0).into_owned()
    };
    let p_consistency = (&ph - &p_end).norm();
    let h_p_h = if n == 0 { 0.0 } else { p_matrix[(0, 0)] };
    if h_p_h >= 1.0 {
        return Err(Error::SolutionCheckFailed {
            what: "h'Ph < 1".into(),
            value: h_p_h,
            tol: 1.0,
        });
    }
    let rho = (1.0 - h_p_h).sqrt();

    // recovery a = (I-U) q - u, b = (I+U) q + u with q = Gamma P h + sigma
    let (a_vec, b_vec) = if n == 0 {
        (DVector::zeros(0), DVector::zeros(0))
    } else {
        let q = gamma * &ph + prior.sigma_vec();
        let g1 = &params.u + &params.u_mat * &q;
        (&q - &g1, &q + &g1)
    };
    let a = vec_to_monic(&a_vec);
    let b = vec_to_monic(&b_vec);

    // full covariance-extension-equation residual
    let cee_residual = if n == 0 {
        0.0
    } else {
        let q = gamma * &ph + prior.sigma_vec();
        let g = &params.u + &params.u_mat * &q;
        let inner = &p_matrix - &ph * ph.transpose();
        (&p_matrix - gamma * inner * gamma.transpose() - &g * g.transpose()).norm()
    };
    if cee_residual > opts.cee_residual_tol {
        return Err(Error::SolutionCheckFailed {
            what: "covariance extension equation residual".into(),
            value: cee_residual,
            tol: opts.cee_residual_tol,
        });
    }

    let pos_residual = positivity_residual(&a, &b, prior.sigma(), rho)?;
    if pos_residual > opts.positivity_tol {
        return Err(Error::SolutionCheckFailed {
            what: "spectral positivity identity residual".into(),
            value: pos_residual,
            tol: opts.positivity_tol,
        });
    }

    // interpolation residual at every node through the recovered interpolant
    let num = b.reverse(n)?.scale(c64(0.5, 0.0));
    let den = a.reverse(n)?;
    let mut interp_residual = 0.0_f64;
    for node in problem.nodes() {
        let jet = rational_jet(&num, &den, node.z, node.multiplicity() - 1)?;
        for (k, expect) in node.jet.iter().enumerate() {
            interp_residual = interp_residual.max((jet.coeff(k) - expect).norm());
        }
    }
    if interp_residual > opts.interpolation_tol {
        return Err(Error::SolutionCheckFailed {
            what: "interpolation jet residual".into(),
            value: interp_residual,
            tol: opts.interpolation_tol,
        });
    }

    let eigs = if n == 0 {
        Vec::new()
    } else {
        symmetric_eigenvalues(&p_matrix)
    };
    let min_p_eigenvalue = eigs.first().copied().unwrap_or(0.0);
    if min_p_eigenvalue < -1e-10 {
        return Err(Error::SolutionCheckFailed {
            what: "positive semidefiniteness of P".into(),
            value: min_p_eigenvalue,
            tol: 1e-10,
        });
    }
    let (numerical_degree, singular_values) = numerical_rank(&p_matrix, opts.rank_tol);

    let a_schur_margin = if n == 0 {
        1.0
    } else {
        let (schur, margin) = a.is_schur()?;
        if !schur {
            warnings.push(format!(
                "recovered denominator is not strictly Schur (margin {margin:.3e})"
            ));
        }
        margin
    };

    Ok(CeeSolution {
        p_matrix,
        p: p_end,
        a,
        b,
        rho,
        prior: prior.clone(),
        params,
        path,
        diagnostics: CeeDiagnostics {
            cee_residual,
            interpolation_residual: interp_residual,
            positivity_residual: pos_residual,
            redundant_row_residual: redundant.abs(),
            p_consistency,
            singular_values,
            numerical_degree,
            h_p_h,
            min_p_eigenvalue,
            pick_min_eigenvalue,
            v_condition: data.v_condition,
            a_schur_margin,
            warnings,
        },
    })
}

/// Pick-matrix minimum eigenvalues of the deformed data W(lambda) =
/// (I - lambda T)^-1 - I/2 at the given lambda grid (path feasibility check).
pub fn path_pick_eigenvalues(data: &DataMatrices, grid: usize) -> Result<Vec<f64>> {
    let t = cayley_t(&data.w)?;
    let x = crate::interp::reachability_gramian(&data.z, &data.e)?;
    let total = data.w.nrows();
    let id = DMatrix::<C64>::identity(total, total);
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
        let sigma = &w_l * &x + &x * w_l.adjoint();
        out.push(hermitian_eigenvalues(&sigma)?[0]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Degree diagnostics and model reduction
// ---------------------------------------------------------------------

/// Reduced-order re-solve plan from the rank of P: the spectral zeros of
/// sigma to drop (smallest modulus first, conjugate pairs kept together).
#[derive(Clone, Debug)]
pub struct ReductionPlan {
    pub numerical_degree: usize,
    pub singular_values: Vec<f64>,
    pub dropped_zeros: Vec<C64>,
    pub reduced_sigma: Poly,
    pub reduced_order: usize,
    pub warnings: Vec<String>,
}

pub fn degree_and_reduce(sol: &CeeSolution, tol: f64) -> Result<ReductionPlan> {
    let (rank, singular_values) = numerical_rank(&sol.p_matrix, tol);
    let n = sol.prior.degree();
    let deficit = n - rank;
    let (dropped, kept, warnings) = split_spectral_zeros(sol.prior.sigma(), deficit)?;
    let reduced_sigma = Poly::from_roots_real(&kept)?;
    Ok(ReductionPlan {
        numerical_degree: rank,
        singular_values,
        dropped_zeros: dropped,
        reduced_order: kept.len(),
        reduced_sigma,
        warnings,
    })
}

/// Sort the zeros by modulus and remove `deficit` of them, never splitting a
/// conjugate pair; returns (dropped, kept, warnings).
pub(crate) fn split_spectral_zeros(
    sigma: &Poly,
    deficit: usize,
) -> Result<(Vec<C64>, Vec<C64>, Vec<String>)> {
    let mut roots = sigma.roots()?;
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let mut dropped: Vec<C64> = Vec::new();
    let mut used = vec![false; roots.len()];
    let mut warnings = Vec::new();
    let mut i = 0;
    while dropped.len() < deficit && i < roots.len() {
        if used[i] {
            i += 1;
            continue;
        }
        let r = roots[i];
        if r.im.abs() <= 1e-9 {
            dropped.push(r);
            used[i] = true;
        } else {
            // find the unused conjugate partner
            let partner = roots
                .iter()
                .enumerate()
                .position(|(j, x)| !used[j] && j != i && (x - r.conj()).norm() < 1e-6);
            match partner {
                Some(j) if dropped.len() + 2 <= deficit => {
                    dropped.push(r);
                    dropped.push(roots[j]);
                    used[i] = true;
                    used[j] = true;
                }
                Some(_) => {
                    warnings.push(format!(
                        "rank deficit {} would split the conjugate pair at {}; dropping {} zeros instead",
                        deficit,
                        r,
                        dropped.len()
                    ));
                    break;
                }
                None => {
                    warnings.push(format!("no conjugate partner found for zero {r}"));
                    dropped.push(r);
                    used[i] = true;
                }
            }
        }
        i += 1;
    }
    let kept: Vec<C64> = roots
        .iter()
        .enumerate()
        .filter(|(j, _)| !used[*j])
        .map(|(_, r)| *r)
        .collect();
    Ok((dropped, kept, warnings))
}

/// Algebraic degree of a covariance sequence (1/2, c_1, ..., c_n) by the
/// Hankel rank criterion, with the unconstrained rational fit (a, b).
/// The fit ignores positivity and may fail to be positive real.
#[derive(Clone, Debug)]
pub struct AlgebraicDegree {
    pub degree: usize,
    pub a: Poly,
    pub b: Poly,
    pub hankel_singular_values: Vec<f64>,
}

pub fn algebraic_degree(c: &[f64], tol: f64) -> Result<AlgebraicDegree> {
    if c.is_empty() || (c[0] - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "covariance sequence must start with c0 = 1/2".into(),
        ));
    }
    let n = c.len() - 1;
    let d_max = n / 2;
    if d_max == 0 {
        return Ok(AlgebraicDegree {
            degree: 0,
            a: Poly::one(),
            b: Poly::one(),
            hankel_singular_values: Vec::new(),
        });
    }
    let hankel = DMatrix::<f64>::from_fn(d_max, d_max, |i, j| c[i + j + 1]);
    let (degree, hankel_singular_values) = numerical_rank(&hankel, tol);
    if degree == 0 {
        return Ok(AlgebraicDegree {
            degree: 0,
            a: Poly::one(),
            b: Poly::one(),
            hankel_singular_values,
        });
    }
    let d = degree;
    let hd = DMatrix::<f64>::from_fn(d, d, |i, j| c[i + j + 1]);
    let rhs = DVector::<f64>::from_fn(d, |i, _| -c[d + i + 1]);
    let a_vec = hd.lu().solve(&rhs).ok_or_else(|| Error::IllConditioned {
        what: "Hankel system".into(),
        cond: f64::INFINITY,
    })?;
    let mut b_vec = DVector::<f64>::zeros(d);
    for i in 1..=d {
        let mut acc = 2.0 * c[i] + a_vec[i - 1];
        for j in 1..i {
            acc += 2.0 * c[i - j] * a_vec[j - 1];
        }
        b_vec[i - 1] = acc;
    }
    Ok(AlgebraicDegree {
        degree: d,
        a: vec_to_monic(&a_vec),
        b: vec_to_monic(&b_vec),
        hankel_singular_values,
    })
}

/// Heuristic positive-degree estimate: the minimum of rank P(sigma) over a
/// documented sample of priors (z^n plus seeded random Schur polynomials).
/// An upper bound on the true minimum, not a certificate.
pub fn positive_degree_estimate(
    c: &[f64],
    samples: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<usize> {
    use rand::Rng;
    use rand::SeedableRng;
    let n = c.len() - 1;
    let problem = Problem::from_covariances(c)?.problem;
    let mut best = usize::MAX;
    let mut priors = vec![SpectralPrior::max_entropy(n)];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    while priors.len() < samples + 1 {
        let mut roots: Vec<C64> = Vec::new();
        while roots.len() < n {
            if n - roots.len() >= 2 && rng.random_bool(0.6) {
                let r: f64 = rng.random_range(0.05..0.9);
                let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
                roots.push(c64(r * th.cos(), r * th.sin()));
                roots.push(c64(r * th.cos(), -r * th.sin()));
            } else {
                roots.push(c64(rng.random_range(-0.9..0.9), 0.0));
            }
        }
        if let Ok(p) = Poly::from_roots_real(&roots) {
            if let Ok(prior) = SpectralPrior::new(p) {
                priors.push(prior);
            }
        }
    }
    let opts = CeeOptions::default();
    for prior in &priors {
        let sol = solve(&problem, prior, &opts)?;
        let (rank, _) = numerical_rank(&sol.p_matrix, rank_tol);
        best = best.min(rank);
    }
    Ok(best)
}

/// Rescale a raw covariance sequence (r_0, r_1, ..., r_n) with r_0 > 0 to the
/// normalized convention (1/2, r_1/r_0, ..., r_n/r_0) of a unit-variance
/// process.
pub fn normalize_covariances(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let r0 = raw[0];
    if r0 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "covariance sequence must have positive variance, got r0 = {r0}"
        )));
    }
    let mut out = vec![0.5];
    out.extend(raw[1..].iter().map(|&r| r / r0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{normalize, Node};
    use crate::oracles::levinson;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ar1_params() -> (Problem, SpectralPrior, CeeParams) {
        let problem = Problem::from_covariances(&[0.5, 0.3]).unwrap().problem;
        let prior = SpectralPrior::max_entropy(1);
        let params = covariance_uu(&[0.5, 0.3]).unwrap();
        (problem, prior, params)
    }

    #[test]
    fn covariance_uu_ar1() {
        let params = covariance_uu(&[0.5, 0.3]).unwrap();
        assert!((params.u[0] - 0.3).abs() < 1e-14);
        assert_eq!(params.u_mat.nrows(), 1);
        assert_eq!(params.u_mat[(0, 0)], 0.0);
    }

    #[test]
    fn covariance_uu_trivial() {
        let params = covariance_uu(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(params.u.norm() < 1e-15);
        assert!(params.u_mat.norm() < 1e-15);
    }

    #[test]
    fn covariance_uu_random_sequence_identity() {
        // random positive sequence via an AR model's exact lags
        let c = [0.5, 0.22, 0.1, 0.001, -0.04];
        let params = covariance_uu(&c).unwrap();
        let n = 4;
        let c_mat = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if i > j {
                c[i - j]
            } else {
                0.0
            }
        });
        let cvec = DVector::from_fn(n, |i, _| c[i + 1]);
        assert!((c_mat * &params.u - cvec).norm() < 1e-12);
    }

    #[test]
    fn covariance_uu_rejects_nonpositive() {
        assert!(matches!(
            covariance_uu(&[0.5, 1.01]),
            Err(Error::NonPositiveToeplitz { .. })
        ));
    }

    #[test]
    fn compute_uu_matches_covariance_route() {
        let c = [0.5, 0.3, 0.09, 0.027];
        let problem = Problem::from_covariances(&c).unwrap().problem;
        let data = build_data_matrices(&problem).unwrap();
        let general = compute_uu(&data).unwrap();
        let direct = covariance_uu(&c).unwrap();
        assert!((&general.u - &direct.u).norm() < 1e-10);
        assert!((&general.u_mat - &direct.u_mat).norm() < 1e-10);
    }

    #[test]
    fn compute_uu_trivial_half_jets() {
        // f == 1/2 data: T = 0 so u = 0, U = 0
        let problem = Problem::validate(vec![
            Node::new(c64(0.0, 0.0), vec![c64(0.5, 0.0), C64::ZERO]),
            Node::new(c64(0.4, 0.0), vec![c64(0.5, 0.0)]),
        ])
        .unwrap()
        .problem;
        let data = build_data_matrices(&problem).unwrap();
        let params = compute_uu(&data).unwrap();
        assert!(params.u.norm() < 1e-13);
        assert!(params.u_mat.norm() < 1e-13);
    }

    #[test]
    fn compute_uu_single_derivative_node() {
        // n = 1, node 0, jet (1/2, 0.3) -> u = (0.3)
        let problem = Problem::from_covariances(&[0.5, 0.3]).unwrap().problem;
        let data = build_data_matrices(&problem).unwrap();
        let params = compute_uu(&data).unwrap();
        assert!((params.u[0] - 0.3).abs() < 1e-13);
    }

    #[test]
    fn reduced_residual_starts_at_zero() {
        let (_, prior, params) = ar1_params();
        let (h, redundant) = reduced_residual(&DVector::zeros(1), 0.0, &prior, &params);
        assert!(h.norm() < 1e-15);
        assert!(redundant.abs() < 1e-15);
    }

    #[test]
    fn reduced_residual_ar1_closed_form() {
        let (_, prior, params) = ar1_params();
        let p = DVector::from_element(1, 0.09);
        let (h, _) = reduced_residual(&p, 1.0, &prior, &params);
        assert!(h.norm() < 1e-14, "H(0.09, 1) = {}", h[0]);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..12 {
            let n = rng.random_range(2..6);
            let roots: Vec<C64> = (0..n).map(|_| c64(rng.random_range(-0.8..0.8), 0.0)).collect();
            let sigma = Poly::from_roots_real(&roots).unwrap();
            let prior = match SpectralPrior::new(sigma) {
                Ok(p) => p,
                Err(_) => continue,
            };
            // plausible parameters from a random covariance-style u
            let u = DVector::from_fn(n, |_, _| rng.random_range(-0.2..0.2));
            let mut u_mat = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                for j in 0..i {
                    u_mat[(i, j)] = u[i - j - 1];
                }
            }
            let params = CeeParams {
                u,
                u_mat,
                source: ParamSource::Covariance,
            };
            let p = DVector::from_fn(n, |_, _| rng.random_range(-0.1..0.1));
            let lambda = rng.random_range(0.1..0.9);
            let jac = reduced_jacobian_p(&p, lambda, &prior, &params);
            let jl = reduced_jacobian_lambda(&p, lambda, &prior, &params);
            let h = 1e-6;
            for j in 0..n {
                let mut pp = p.clone();
                pp[j] += h;
                let mut pm = p.clone();
                pm[j] -= h;
                let fd = (reduced_residual(&pp, lambda, &prior, &params).0
                    - reduced_residual(&pm, lambda, &prior, &params).0)
                    / (2.0 * h);
                assert!((jac.column(j) - &fd).norm() < 1e-6, "column {j}");
            }
            let fd_l = (reduced_residual(&p, lambda + h, &prior, &params).0
                - reduced_residual(&p, lambda - h, &prior, &params).0)
                / (2.0 * h);
            assert!((&jl - &fd_l).norm() < 1e-6);
        }
    }

    #[test]
    fn solve_ar1_fixture() {
        let (problem, prior, _) = ar1_params();
        let sol = solve(&problem, &prior, &CeeOptions::default()).unwrap();
        assert!((sol.p_matrix[(0, 0)] - 0.09).abs() < 1e-10);
        assert!((sol.rho - 0.91_f64.sqrt()).abs() < 1e-10);
        let a = sol.a.real_coeffs().unwrap();
        assert!((a[0] + 0.3).abs() < 1e-10 && (a[1] - 1.0).abs() < 1e-12);
        let b = sol.b.real_coeffs().unwrap();
        assert!((b[0] - 0.3).abs() < 1e-10);
        assert!(sol.diagnostics.cee_residual < 1e-12);
    }

    #[test]
    fn solve_trivial_data_gives_prior() {
        // u = 0: P = 0, a = b = sigma, rho = 1, f == 1/2
        let c = [0.5, 0.0, 0.0];
        let problem = Problem::from_covariances(&c).unwrap().problem;
        let sigma = Poly::from_real(&[0.18, -0.3, 1.0]); // roots 0.15 +- ...
        let prior = SpectralPrior::new(sigma.clone()).unwrap();
        let sol = solve(&problem, &prior, &CeeOptions::default()).unwrap();
        assert!(sol.p_matrix.norm() < 1e-12);
        assert!((sol.rho - 1.0).abs() < 1e-12);
        for k in 0..=2 {
            assert!((sol.a.coeff(k) - sigma.coeff(k)).norm() < 1e-12);
            assert!((sol.b.coeff(k) - sigma.coeff(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_matches_levinson_for_max_entropy_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = rng.random_range(1..=8);
            // exact AR covariances from a random stable predictor
            let roots: Vec<C64> = (0..n)
                .map(|_| c64(rng.random_range(-0.85..0.85), 0.0))
                .collect();
            let a_true = Poly::from_roots_real(&roots).unwrap();
            let c = ar_covariances(&a_true, n);
            let problem = Problem::from_covariances(&c).unwrap().problem;
            let prior = SpectralPrior::max_entropy(n);
            let sol = solve(&problem, &prior, &CeeOptions::default()).unwrap();
            let r: Vec<f64> = std::iter::once(1.0).chain(c[1..].iter().copied()).collect();
            let (a_ld, var) = levinson(&r).unwrap();
            let a_sol = monic_vec(&sol.a).unwrap();
            for (i, &coef) in a_ld.iter().enumerate() {
                assert!(
                    (a_sol[i] - coef).abs() < 1e-8,
                    "coefficient {i}: {} vs {}",
                    a_sol[i],
                    coef
                );
            }
            assert!((sol.rho * sol.rho - var).abs() < 1e-8);
        }
    }

    /// Exact covariances (1/2, c_1, ..) of the unit-variance AR process
    /// driven by a(z): solves the state-space Lyapunov equation directly.
    fn ar_covariances(a: &Poly, nlags: usize) -> Vec<f64> {
        let n = a.degree();
        let avec = monic_vec(a).unwrap();
        let mut f = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            if i + 1 < n {
                f[(i, i + 1)] = 1.0;
            }
            f[(i, 0)] -= avec[i];
        }
        // v = rho z^n / a(z): state x(t+1) = F x + k w, y = h'x + rho w,
        // k = rho (sigma - a) with sigma = z^n
        let k = -&avec;
        let pi = stein_solve_real(&f, &(&k * k.transpose())).unwrap();
        let h = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let r0 = (h.transpose() * &pi * &h)[(0, 0)] + 1.0;
        let mut out = vec![0.5];
        let mut fk = DMatrix::<f64>::identity(n, n);
        for _ in 1..=nlags {
            let rk = (h.transpose() * &fk * (&f * &pi * &h + &k))[(0, 0)];
            out.push(rk / r0);
            fk = &fk * &f;
        }
        out
    }

    #[test]
    fn omega_roundtrip_and_l_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let layout: Vec<(C64, usize)> = match trial % 3 {
                0 => vec![(C64::ZERO, 3)],
                1 => vec![(C64::ZERO, 1), (c64(0.3, 0.5), 1), (c64(0.3, -0.5), 1)],
                _ => vec![
                    (C64::ZERO, 2),
                    (c64(-0.4, 0.0), 1),
                    (c64(0.2, 0.6), 1),
                    (c64(0.2, -0.6), 1),
                ],
            };
            // random feasible data: jets of a random positive-real function
            let n: usize = layout.iter().map(|&(_, m)| m).sum::<usize>() - 1;
            let sol = random_true_function(&mut rng, n);
            let (num, den) = sol;
            let nodes: Vec<Node> = layout
                .iter()
                .map(|&(z, m)| {
                    let jet = rational_jet(&num, &den, z, m - 1).unwrap();
                    Node::new(z, jet.coeffs().to_vec())
                })
                .collect();
            let problem = Problem::validate(nodes).unwrap().problem;
            let (problem, _) = normalize(&problem).unwrap();
            let layout_norm = layout_of(&problem);

            let u = omega_map(&problem).unwrap();
            let back = omega_inverse(&u, &layout_norm).unwrap();
            for (orig, rec) in problem.nodes().iter().zip(back.nodes().iter()) {
                for (a, b) in orig.jet.iter().zip(rec.jet.iter()) {
                    assert!((a - b).norm() < 1e-10, "jet mismatch {a} vs {b}");
                }
            }
            // U from the linear map vs the direct computation
            let data = build_data_matrices(&problem).unwrap();
            let params = compute_uu(&data).unwrap();
            assert!((&params.u - &u).norm() < 1e-9);
            let u_mat = l_map(&u, &layout_norm).unwrap();
            assert!((&u_mat - &params.u_mat).norm() < 1e-9);
        }
    }

    /// Random strictly positive real function of degree n as (num, den) of
    /// f = (1/2) b*(z)/a*(z), via a random stable AR spectrum with a random
    /// Schur numerator.
    pub(crate) fn random_true_function(rng: &mut ChaCha8Rng, n: usize) -> (Poly, Poly) {
        loop {
            let mut roots_a: Vec<C64> = Vec::new();
            let mut roots_s: Vec<C64> = Vec::new();
            for roots in [&mut roots_a, &mut roots_s] {
                while roots.len() < n {
                    if n - roots.len() >= 2 && rng.random_bool(0.5) {
                        let r: f64 = rng.random_range(0.05..0.85);
                        let th: f64 = rng.random_range(0.1..3.0);
                        roots.push(c64(r * th.cos(), r * th.sin()));
                        roots.push(c64(r * th.cos(), -r * th.sin()));
                    } else {
                        roots.push(c64(rng.random_range(-0.85..0.85), 0.0));
                    }
                }
            }
            let a = Poly::from_roots_real(&roots_a).unwrap();
            let sigma = Poly::from_roots_real(&roots_s).unwrap();
            if let Ok((num, den, _rho)) = crate::apps::spectral_pair(&a, &sigma, 0.7) {
                return (num, den);
            }
        }
    }

    #[test]
    fn solve_random_feasible_and_step_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..6 {
            let n = 2 + trial % 4;
            let (num, den) = random_true_function(&mut rng, n);
            let problem = Problem::validate(vec![Node::new(
                C64::ZERO,
                rational_jet(&num, &den, C64::ZERO, n).unwrap().coeffs().to_vec(),
            )])
            .unwrap()
            .problem;
            let (problem, _) = normalize(&problem).unwrap();
            let sigma_roots: Vec<C64> = (0..n)
                .map(|_| c64(rng.random_range(-0.8..0.8), 0.0))
                .collect();
            let prior = SpectralPrior::new(Poly::from_roots_real(&sigma_roots).unwrap()).unwrap();
            let sol1 = solve(&problem, &prior, &CeeOptions::default()).unwrap();
            let mut opts2 = CeeOptions::default();
            opts2.homotopy.initial_step = 0.01;
            opts2.homotopy.max_step = 0.01;
            let sol2 = solve(&problem, &prior, &opts2).unwrap();
            assert!(
                (&sol1.p - &sol2.p).norm() < 1e-8,
                "endpoints differ by {}",
                (&sol1.p - &sol2.p).norm()
            );
            // free consistency check: the dropped redundant row vanishes
            assert!(sol1.diagnostics.redundant_row_residual < 1e-9);
        }
    }

    #[test]
    fn path_feasibility_samples() {
        let c = [0.5, 0.35, 0.2, 0.05];
        let problem = Problem::from_covariances(&c).unwrap().problem;
        let data = build_data_matrices(&problem).unwrap();
        let eigs = path_pick_eigenvalues(&data, 10).unwrap();
        assert_eq!(eigs.len(), 11);
        assert!(eigs.iter().all(|&e| e > 0.0), "{eigs:?}");
    }

    #[test]
    fn degree_law_with_matched_spectral_zeros() {
        // degree-2 interpolant embedded in an order-5 problem; sigma contains
        // the true spectral zeros, so rank P = 2
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (num, den) = random_true_function(&mut rng, 2);
        let n = 5;
        let jet = rational_jet(&num, &den, C64::ZERO, n).unwrap();
        let problem = Problem::validate(vec![Node::new(C64::ZERO, jet.coeffs().to_vec())])
            .unwrap()
            .problem;
        // true sigma: reverse of the numerator's non-half factor
        let b_true = num.scale(c64(2.0, 0.0)).reverse(2).unwrap();
        let a_true = den.reverse(2).unwrap();
        let sigma2 = spectral_sigma(&a_true, &b_true);
        let extra = Poly::from_roots_real(&[c64(0.5, 0.0), c64(-0.6, 0.0), c64(0.1, 0.0)]).unwrap();
        let sigma = &sigma2 * &extra;
        let prior = SpectralPrior::new(sigma).unwrap();
        let sol = solve(&problem, &prior, &CeeOptions::default()).unwrap();
        let (rank, sv) = numerical_rank(&sol.p_matrix, 1e-6);
        assert_eq!(rank, 2, "singular values {sv:?}");
        // reduction plan drops the three extra zeros
        let plan = degree_and_reduce(&sol, 1e-6).unwrap();
        assert_eq!(plan.numerical_degree, 2);
        assert_eq!(plan.reduced_order, 2);
        assert_eq!(plan.dropped_zeros.len(), 3);
    }

    /// Monic spectral factor sigma of (a b* + b a*)/2 = rho^2 sigma sigma*.
    fn spectral_sigma(a: &Poly, b: &Poly) -> Poly {
        let n = a.degree();
        let rev_a = a.reverse(n).unwrap();
        let rev_b = b.reverse(n).unwrap();
        let sym = &(a * &rev_b) + &(b * &rev_a);
        // roots come in z, 1/z pairs; keep those inside the disc
        let inside: Vec<C64> = sym
            .roots()
            .unwrap()
            .into_iter()
            .filter(|r| r.norm() < 1.0)
            .collect();
        Poly::from_roots_real(&inside).unwrap()
    }

    #[test]
    fn algebraic_degree_examples() {
        // AR(1) lags
        let d = algebraic_degree(&[0.5, 0.3, 0.09], 1e-8).unwrap();
        assert_eq!(d.degree, 1);
        let a = d.a.real_coeffs().unwrap();
        assert!((a[0] + 0.3).abs() < 1e-12);
        let b = d.b.real_coeffs().unwrap();
        assert!((b[0] - 0.3).abs() < 1e-12);

        // all lags zero beyond c0
        let d = algebraic_degree(&[0.5, 0.0, 0.0, 0.0, 0.0], 1e-8).unwrap();
        assert_eq!(d.degree, 0);

        // exact degree-3 function sampled to 6 lags
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (num, den) = random_true_function(&mut rng, 3);
        let jet = rational_jet(&num, &den, C64::ZERO, 6).unwrap();
        let c: Vec<f64> = jet.coeffs().iter().map(|x| x.re).collect();
        let d = algebraic_degree(&c, 1e-7).unwrap();
        assert_eq!(d.degree, 3, "singular values {:?}", d.hankel_singular_values);
    }

    #[test]
    fn positive_degree_examples() {
        // n = 1 exact data: the unique degree-1 interpolant for every prior
        let est = positive_degree_estimate(&[0.5, 0.3], 4, 0, 1e-6).unwrap();
        assert_eq!(est, 1);
        // trivial data
        let est = positive_degree_estimate(&[0.5, 0.0, 0.0], 4, 0, 1e-6).unwrap();
        assert_eq!(est, 0);
        // ordering against the algebraic degree on exact data
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (num, den) = random_true_function(&mut rng, 2);
        let jet = rational_jet(&num, &den, C64::ZERO, 4).unwrap();
        let c: Vec<f64> = jet.coeffs().iter().map(|x| x.re).collect();
        let alg = algebraic_degree(&c, 1e-7).unwrap().degree;
        let pos = positive_degree_estimate(&c, 6, 1, 1e-6).unwrap();
        assert!(pos >= alg, "positive {pos} < algebraic {alg}");
    }

    #[test]
    fn normalize_covariances_rescales() {
        let c = normalize_covariances(&[2.0, 0.6, 0.18]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert!((c[1] - 0.3).abs() < 1e-15);
        assert!((c[2] - 0.09).abs() < 1e-15);
        assert!(normalize_covariances(&[-1.0, 0.0]).is_err());
    }
}
