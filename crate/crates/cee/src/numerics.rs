//! Dense linear-algebra kernels and the predictor-corrector homotopy driver
//! shared by the scalar and matrix solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{c64, C64};

// ---------------------------------------------------------------------
// Spectra and Hermitian helpers
// ---------------------------------------------------------------------

/// Real 2n x 2n embedding [Re -Im; Im Re] of a complex matrix.
fn real_embedding(m: &DMatrix<C64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
            out[(i + n, j + n)] = v.re;
        }
    }
    out
}

/// Spectral radius by Gelfand's formula with repeated squaring,
/// rho = lim ||A^(2^k)||^(1/2^k). Robust on defective and nilpotent
/// matrices, where QR eigenvalue iterations can stall.
pub fn spectral_radius(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let mut b = m.clone();
    let mut log_rho = 0.0_f64;
    let mut weight = 1.0_f64;
    for _ in 0..48 {
        let nb = b.norm();
        if nb == 0.0 {
            return 0.0;
        }
        if !nb.is_finite() {
            return f64::INFINITY;
        }
        log_rho += weight * nb.ln();
        let scaled = &b / c64(nb, 0.0);
        b = &scaled * &scaled;
        weight *= 0.5;
    }
    log_rho.exp()
}

pub fn spectral_radius_real(m: &DMatrix<f64>) -> f64 {
    spectral_radius(&m.map(|x| c64(x, 0.0)))
}

pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

/// Eigenvalues of a Hermitian matrix, ascending. Uses the symmetric real
/// embedding, in which every eigenvalue appears exactly twice.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let asym = (m - m.adjoint()).norm();
    if asym > 1e-8 * m.norm().max(1.0) {
        return Err(Error::NonHermitian(asym));
    }
    let sym = real_embedding(&((m + m.adjoint()) * c64(0.5, 0.0)));
    let se = nalgebra::linalg::SymmetricEigen::new(sym);
    let mut eigs: Vec<f64> = se.eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs.into_iter().step_by(2).collect())
}

pub fn hermitian_min_eig(m: &DMatrix<C64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let se = nalgebra::linalg::SymmetricEigen::new((m + m.transpose()) * 0.5);
    let mut eigs: Vec<f64> = se.eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Symmetric PSD square root; small negative eigenvalues are clamped to zero.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(m, 0.5)
}

/// Symmetric inverse square root of a positive definite matrix.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_power(m, -0.5)
}

fn spd_power(m: &DMatrix<f64>, pow: f64) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let scale = sym.norm().max(1.0);
    let se = nalgebra::linalg::SymmetricEigen::new(sym);
    let mut vals = se.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-10 * scale || (pow < 0.0 && *v <= 1e-14 * scale) {
            return Err(Error::SolutionCheckFailed {
                what: "positive definiteness".into(),
                value: *v,
                tol: 1e-10 * scale,
            });
        }
        *v = v.max(0.0).powf(pow);
    }
    Ok(&se.eigenvectors * DMatrix::from_diagonal(&vals) * se.eigenvectors.transpose())
}

// ---------------------------------------------------------------------
// Stein equation X = A X B* + Q
// ---------------------------------------------------------------------

/// Discrete-time Stein/Lyapunov problem X = A X B* + Q; B defaults to A.
#[derive(Clone, Debug)]
pub struct SteinProblem {
    pub a: DMatrix<C64>,
    pub b: Option<DMatrix<C64>>,
    pub q: DMatrix<C64>,
}

impl SteinProblem {
    pub fn lyapunov(a: DMatrix<C64>, q: DMatrix<C64>) -> Self {
        SteinProblem { a, b: None, q }
    }
}

/// Direct vectorized solve of X = A X B* + Q via the Kronecker linear system.
pub fn stein_solve(prob: &SteinProblem) -> Result<DMatrix<C64>> {
    let a = &prob.a;
    let b = prob.b.as_ref().unwrap_or(a);
    let n = a.nrows();
    let rho = spectral_radius(a).max(spectral_radius(b));
    if rho >= 1.0 {
        return Err(Error::UnstableMatrix {
            spectral_radius: rho,
        });
    }
    // vec(A X B*) = (conj(B) kron A) vec(X)
    let kron = b.map(|x| x.conj()).kronecker(a);
    let sys = DMatrix::<C64>::identity(n * n, n * n) - kron;
    let rhs = DVector::<C64>::from_column_slice(prob.q.as_slice());
    let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::IllConditioned {
        what: "Stein system".into(),
        cond: f64::INFINITY,
    })?;
    let mut x = DMatrix::<C64>::zeros(n, n);
    x.copy_from_slice(sol.as_slice());
    // Hermitian data yields a Hermitian solution; symmetrize the roundoff.
    if prob.b.is_none() && is_hermitian(&prob.q, 1e-10) {
        x = (&x + x.adjoint()) * c64(0.5, 0.0);
    }
    Ok(x)
}

/// Real Lyapunov convenience: X = A X A' + Q with real data.
pub fn stein_solve_real(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let prob = SteinProblem::lyapunov(a.map(|x| c64(x, 0.0)), q.map(|x| c64(x, 0.0)));
    let x = stein_solve(&prob)?;
    let residue = x.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-9 * x.norm().max(1.0) {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(x.map(|c| c.re))
}

// ---------------------------------------------------------------------
// Numerical rank
// ---------------------------------------------------------------------

/// Rank as the number of singular values above `tol` times the largest,
/// together with the full spectrum for reporting.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> (usize, Vec<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, Vec::new());
    }
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s0 = sv[0];
    if s0 == 0.0 {
        return (0, sv);
    }
    let rank = sv.iter().filter(|&&s| s > tol * s0).count();
    (rank, sv)
}

/// Default relative rank threshold used by the degree diagnostics.
pub const RANK_TOL_DEFAULT: f64 = 1e-2;

// ---------------------------------------------------------------------
// Structured pseudo-inverse [0 L^-1]
// ---------------------------------------------------------------------

/// Pseudo-inverse of a tall matrix whose top `top_rows` rows vanish and whose
/// bottom square block L is invertible: returns [0 L^-1] so result * M = I.
/// A singular L signals unequal observability indices.
pub fn pinv_tall_zero_top(m: &DMatrix<C64>, top_rows: usize) -> Result<DMatrix<C64>> {
    let rows = m.nrows();
    let cols = m.ncols();
    if rows != cols + top_rows {
        return Err(Error::InvalidInput(format!(
            "expected a ({} + {}) x {} matrix, got {} x {}",
            cols, top_rows, cols, rows, cols
        )));
    }
    let top = m.rows(0, top_rows);
    if top.norm() > 1e-9 * m.norm().max(1.0) {
        return Err(Error::InvalidInput(
            "top block of the structured matrix is not zero".into(),
        ));
    }
    let l = m.rows(top_rows, cols).clone_owned();
    // robust singularity detection through the real embedding's spectrum
    let (rank, sv) = numerical_rank(&real_embedding(&l), 1e-10);
    if rank < 2 * cols {
        let _ = sv;
        return Err(Error::SingularStructuredBlock);
    }
    let l_inv = l.lu().try_inverse().ok_or(Error::SingularStructuredBlock)?;
    let mut out = DMatrix::<C64>::zeros(cols, rows);
    out.view_mut((0, top_rows), (cols, cols)).copy_from(&l_inv);
    Ok(out)
}

// ---------------------------------------------------------------------
// Davidenko homotopy driver
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct HomotopyOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_newton: usize,
    pub max_steps: usize,
    pub endpoint_tol: f64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions {
            initial_step: 0.05,
            min_step: 1e-6,
            max_step: 0.1,
            corrector_tol: 1e-12,
            max_newton: 8,
            max_steps: 20_000,
            endpoint_tol: 1e-10,
        }
    }
}

/// A homotopy H(p, lambda) = 0 with analytic partials, started at p(0) = 0.
pub struct HomotopyTask<'a> {
    pub dim: usize,
    pub residual: Box<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + 'a>,
    pub jac_p: Box<dyn Fn(&DVector<f64>, f64) -> DMatrix<f64> + 'a>,
    pub jac_lambda: Box<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + 'a>,
    pub options: HomotopyOptions,
}

#[derive(Clone, Debug)]
pub struct PathSample {
    pub lambda: f64,
    pub p: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct HomotopyResult {
    pub endpoint: DVector<f64>,
    pub path: Vec<PathSample>,
    pub steps: usize,
    pub newton_iterations: usize,
    pub final_residual: f64,
}

fn solve_checked(j: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let svd = j.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(smin / smax.max(1e-300) > 1e-12) {
        return Err(Error::PathFailure {
            lambda,
            reason: format!("jacobian conditioning {:.3e} below 1e-12", smin / smax),
        });
    }
    j.clone().lu().solve(rhs).ok_or(Error::PathFailure {
        lambda,
        reason: "jacobian solve failed".into(),
    })
}

/// Predictor-corrector continuation: explicit Euler on
/// dp/dlambda = -[dH/dp]^-1 dH/dlambda, full Newton correction at each step,
/// with adaptive step halving on corrector failure.
pub fn davidenko_solve(task: &HomotopyTask) -> Result<HomotopyResult> {
    let opts = &task.options;
    let mut p = DVector::<f64>::zeros(task.dim);
    let start = (task.residual)(&p, 0.0);
    if start.norm() > 1e-8 {
        return Err(Error::PathFailure {
            lambda: 0.0,
            reason: format!("H(0, 0) = {:.3e} is not zero", start.norm()),
        });
    }

    let verbose = std::env::var("CEE_LOG").map_or(false, |v| !v.is_empty() && v != "0");
    let mut path = vec![PathSample {
        lambda: 0.0,
        p: p.clone(),
    }];
    let mut lambda = 0.0_f64;
    let mut step = opts.initial_step.min(1.0);
    let mut steps = 0usize;
    let mut newton_total = 0usize;

    while lambda < 1.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::PathFailure {
                lambda,
                reason: format!("step budget {} exceeded", opts.max_steps),
            });
        }
        let h = step.min(1.0 - lambda);
        let jac = (task.jac_p)(&p, lambda);
        let hl = (task.jac_lambda)(&p, lambda);
        let dp = -solve_checked(&jac, &hl, lambda)?;

        let lambda_next = lambda + h;
        let predicted = &p + &dp * h;
        let mut q = predicted.clone();
        let mut converged = false;
        let mut used = 0usize;
        for it in 0..opts.max_newton {
            let r = (task.residual)(&q, lambda_next);
            if r.norm() <= opts.corrector_tol {
                converged = true;
                used = it;
                break;
            }
            let jq = (task.jac_p)(&q, lambda_next);
            let delta = solve_checked(&jq, &r, lambda_next)?;
            q -= delta;
            used = it + 1;
        }
        // stay on the tracked branch: the corrector displacement must be of
        // the order of the predictor step, otherwise Newton has jumped to a
        // different solution of H(., lambda) = 0
        if converged {
            let drift = (&q - &predicted).norm();
            let allowance = h * (dp.norm() + 1.0) + 1e-9 * (1.0 + p.norm());
            if drift > allowance {
                converged = false;
            }
        }
        if converged {
            newton_total += used;
            p = q;
            lambda = lambda_next;
            path.push(PathSample {
                lambda,
                p: p.clone(),
            });
            if verbose {
                eprintln!(
                    "davidenko: lambda {:.6} step {:.3e} newton {}",
                    lambda, h, used
                );
            }
            if used <= 3 {
                step = (step * 1.5).min(opts.max_step);
            }
        } else {
            step *= 0.5;
            if step < opts.min_step {
                return Err(Error::PathFailure {
                    lambda,
                    reason: format!("corrector failed at step size {:.3e}", step),
                });
            }
        }
    }

    let final_residual = (task.residual)(&p, 1.0).norm();
    if final_residual > opts.endpoint_tol {
        return Err(Error::PathFailure {
            lambda: 1.0,
            reason: format!(
                "endpoint residual {:.3e} above {:.1e}",
                final_residual, opts.endpoint_tol
            ),
        });
    }
    Ok(HomotopyResult {
        endpoint: p,
        path,
        steps,
        newton_iterations: newton_total,
        final_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<C64> {
        DMatrix::from_row_slice(rows, cols, data).map(|x| c64(x, 0.0))
    }

    #[test]
    fn stein_fixed_point_identity() {
        let x = stein_solve(&SteinProblem::lyapunov(
            DMatrix::zeros(3, 3),
            DMatrix::identity(3, 3),
        ))
        .unwrap();
        assert!((x - DMatrix::<C64>::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn stein_scalar_geometric() {
        let x = stein_solve(&SteinProblem::lyapunov(cm(1, 1, &[0.3]), cm(1, 1, &[1.0])))
            .unwrap();
        assert!((x[(0, 0)].re - 1.0 / 0.91).abs() < 1e-14);
    }

    #[test]
    fn stein_rejects_unstable() {
        let err = stein_solve(&SteinProblem::lyapunov(cm(1, 1, &[1.1]), cm(1, 1, &[1.0])));
        match err {
            Err(Error::UnstableMatrix { spectral_radius }) => {
                assert!((spectral_radius - 1.1).abs() < 1e-10)
            }
            other => panic!("expected UnstableMatrix, got {other:?}"),
        }
    }

    #[test]
    fn stein_matches_truncated_series() {
        // deterministic "random" stable matrix
        let a = DMatrix::from_fn(5, 5, |i, j| {
            0.25 * ((3.1 * i as f64 + 1.7 * j as f64 + 0.5).sin())
        });
        let rho = spectral_radius_real(&a);
        assert!(rho < 1.0);
        let q = {
            let m = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) as f64 * 0.61).cos());
            &m * m.transpose()
        };
        let x = stein_solve_real(&a, &q).unwrap();
        let mut series = q.clone();
        let mut ak = a.clone();
        for _ in 0..2000 {
            series += &ak * &q * ak.transpose();
            ak = &ak * &a;
            if ak.norm() < 1e-16 {
                break;
            }
        }
        assert!((&x - &series).norm() < 1e-8 * x.norm());
        // direct residual bound
        let resid = (&x - &a * &x * a.transpose() - &q).norm();
        assert!(resid <= 1e-10 * q.norm());
    }

    #[test]
    fn rank_identity() {
        let (rank, _) = numerical_rank(&DMatrix::identity(6, 6), 1e-10);
        assert_eq!(rank, 6);
    }

    #[test]
    fn rank_spectral_estimation_cutoff() {
        // singular-value list from the degree-7 spectral estimation run
        let sv = [0.7435, 0.1328, 0.0794, 0.0630, 0.0023, 0.0003, 6e-6];
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&sv));
        let (rank, spectrum) = numerical_rank(&m, 1e-2);
        assert_eq!(rank, 4);
        assert_eq!(spectrum.len(), 7);
        // the same list is rank 7 at a 1e-6 threshold
        assert_eq!(numerical_rank(&m, 1e-6).0, 7);
    }

    #[test]
    fn rank_outer_product_sum() {
        let mut m = DMatrix::<f64>::zeros(7, 7);
        for k in 0..3 {
            let freq = 0.37 + 0.9 * k as f64;
            let v = DVector::from_fn(7, |i, _| ((i + 1) as f64 * freq).sin());
            m += &v * v.transpose();
        }
        let (rank, _) = numerical_rank(&m, 1e-10);
        assert_eq!(rank, 3);
    }

    #[test]
    fn pinv_identity_bottom() {
        let mut m = DMatrix::<C64>::zeros(5, 3);
        m.view_mut((2, 0), (3, 3))
            .copy_from(&DMatrix::identity(3, 3));
        let pinv = pinv_tall_zero_top(&m, 2).unwrap();
        assert!((&pinv * &m - DMatrix::<C64>::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn pinv_random_invertible_bottom() {
        let l = DMatrix::from_fn(4, 4, |i, j| {
            c64(((i * 5 + j) as f64 * 0.71).sin() + if i == j { 2.0 } else { 0.0 }, 0.2)
        });
        let mut m = DMatrix::<C64>::zeros(6, 4);
        m.view_mut((2, 0), (4, 4)).copy_from(&l);
        let pinv = pinv_tall_zero_top(&m, 2).unwrap();
        assert!((&pinv * &m - DMatrix::<C64>::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn pinv_singular_bottom_rejected() {
        let mut m = DMatrix::<C64>::zeros(5, 3);
        m[(2, 0)] = c64(1.0, 0.0);
        m[(3, 1)] = c64(1.0, 0.0);
        // third column zero -> L singular
        match pinv_tall_zero_top(&m, 2) {
            Err(Error::SingularStructuredBlock) => {}
            other => panic!("expected SingularStructuredBlock, got {other:?}"),
        }
    }

    fn linear_task(c: DVector<f64>) -> HomotopyTask<'static> {
        let dim = c.len();
        let c1 = c.clone();
        let c2 = c.clone();
        HomotopyTask {
            dim,
            residual: Box::new(move |p, l| p - &c1 * l),
            jac_p: Box::new(move |_, _| DMatrix::identity(dim, dim)),
            jac_lambda: Box::new(move |_, _| -&c2),
            options: HomotopyOptions::default(),
        }
    }

    #[test]
    fn davidenko_linear() {
        let c = DVector::from_row_slice(&[1.5, -2.0, 0.25]);
        let res = davidenko_solve(&linear_task(c.clone())).unwrap();
        assert!((res.endpoint - c).norm() < 1e-12);
        assert!(res.final_residual <= 1e-10);
    }

    #[test]
    fn davidenko_step_size_independence() {
        // mildly nonlinear scalar homotopy p = lambda^2 c with unique path
        let make = |initial: f64| {
            let mut opts = HomotopyOptions::default();
            opts.initial_step = initial;
            HomotopyTask {
                dim: 1,
                residual: Box::new(|p, l| {
                    DVector::from_element(1, p[0] - l * l * 0.09 + 0.3 * p[0] * p[0] * (l - 1.0))
                }),
                jac_p: Box::new(|p, l| {
                    DMatrix::from_element(1, 1, 1.0 + 0.6 * p[0] * (l - 1.0))
                }),
                jac_lambda: Box::new(|p, l| {
                    DVector::from_element(1, -2.0 * l * 0.09 + 0.3 * p[0] * p[0])
                }),
                options: opts,
            }
        };
        let a = davidenko_solve(&make(0.1)).unwrap();
        let b = davidenko_solve(&make(0.01)).unwrap();
        assert!((a.endpoint[0] - b.endpoint[0]).abs() < 1e-8);
        assert!((a.endpoint[0] - 0.09).abs() < 1e-10);
    }

    #[test]
    fn davidenko_records_path_and_corrector_tolerance() {
        let c = DVector::from_row_slice(&[0.7, 0.1]);
        let task = linear_task(c);
        let res = davidenko_solve(&task).unwrap();
        assert!(res.path.len() >= 2);
        for s in &res.path {
            let r = (task.residual)(&s.p, s.lambda);
            assert!(r.norm() <= task.options.corrector_tol * 10.0);
        }
        assert!((res.path.last().unwrap().lambda - 1.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn stein_residual_bound(seed in 0u64..500, n in 1usize..8) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
            };
            let raw = DMatrix::from_fn(n, n, |_, _| next());
            let rho = spectral_radius_real(&raw);
            prop_assume!(rho > 1e-6);
            let a = raw * (0.85 / rho);
            let g = DMatrix::from_fn(n, n, |_, _| next());
            let q = &g * g.transpose();
            let x = stein_solve_real(&a, &q).unwrap();
            let resid = (&x - &a * &x * a.transpose() - &q).norm();
            prop_assert!(resid <= 1e-10 * q.norm().max(1.0));
        }

        #[test]
        fn rank_invariant_under_orthogonal_maps(seed in 0u64..500) {
            let mut state = seed.wrapping_add(7);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
            };
            let n = 6;
            // rank-3 matrix
            let mut m = DMatrix::<f64>::zeros(n, n);
            for _ in 0..3 {
                let u = DVector::from_fn(n, |_, _| next());
                let v = DVector::from_fn(n, |_, _| next());
                m += u * v.transpose();
            }
            let q = {
                let g = DMatrix::from_fn(n, n, |_, _| next());
                g.qr().q()
            };
            let (r1, _) = numerical_rank(&m, 1e-10);
            let (r2, _) = numerical_rank(&(&q * &m * q.transpose()), 1e-10);
            prop_assert_eq!(r1, r2);
        }
    }
}
