//! Rank-based model reduction: solve at full order, read the reduced order
//! off the spectrum of P, drop the weakest spectral zeros of the prior and
//! re-solve on correspondingly truncated data.


use crate::error::{Error, Result};
use crate::interp::{MatrixProblem, Node, Problem};
use crate::matrix::{
    matrix_degree_and_reduce, solve_matrix, MatrixCeeSolution, MatrixPrior, MatrixReductionPlan,
};
use crate::numerics::hermitian_eigenvalues;
use crate::poly::{c64, rational_jet, C64};
use crate::scalar::{degree_and_reduce, solve, CeeOptions, CeeSolution, ReductionPlan, SpectralPrior};

/// Scalar reduction outcome: the full solve, the plan, the reduced re-solve
/// (absent when the reduction is a no-op) and a frequency comparison table.
#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub full: CeeSolution,
    pub plan: ReductionPlan,
    pub reduced: Option<CeeSolution>,
    pub reduced_problem: Option<Problem>,
    /// Rows (theta, |v_full| dB, |v_reduced| dB).
    pub comparison: Vec<(f64, f64, f64)>,
    /// Sum of the singular values dropped by the rank cut.
    pub dropped_singular_mass: f64,
    /// Largest jet error of the reduced interpolant against the full data;
    /// empirically bounded by ten times the dropped mass, reported only.
    pub reduced_jet_error: f64,
    pub warnings: Vec<String>,
}

/// Truncate a normalized problem to the target total order: derivative
/// constraints at the base node go first, then whole trailing nodes
/// (conjugate pairs together).
fn truncate_problem(problem: &Problem, target_order: usize) -> Result<Problem> {
    let n = problem.order();
    if target_order >= n {
        return Ok(problem.clone());
    }
    let mut nodes: Vec<Node> = problem.nodes().to_vec();
    let mut needed = n - target_order;

    let mult0 = nodes[0].multiplicity();
    let base_trim = needed.min(mult0 - 1);
    nodes[0].jet.truncate(mult0 - base_trim);
    needed -= base_trim;

    while needed > 0 {
        let last = nodes
            .last()
            .ok_or_else(|| Error::InvalidInput("cannot truncate past the base node".into()))?
            .clone();
        if nodes.len() == 1 {
            return Err(Error::InvalidInput(
                "cannot truncate the problem to the target order".into(),
            ));
        }
        let is_complex = last.z.im.abs() > 1e-10;
        let block = if is_complex {
            2 * last.multiplicity()
        } else {
            last.multiplicity()
        };
        if block > needed {
            return Err(Error::InvalidInput(format!(
                "cannot reach the target order without splitting a node block of size {block}"
            )));
        }
        nodes.pop();
        if is_complex {
            let partner = nodes
                .iter()
                .position(|m| (m.z - last.z.conj()).norm() < 1e-10)
                .ok_or(Error::MissingConjugate {
                    re: last.z.re,
                    im: last.z.im,
                })?;
            nodes.remove(partner);
        }
        needed -= block;
    }
    Ok(Problem::from_nodes_unchecked(nodes))
}

fn magnitude_db(num: &crate::poly::Poly, den: &crate::poly::Poly, theta: f64) -> f64 {
    let z = c64(theta.cos(), theta.sin());
    20.0 * (num.eval(z) / den.eval(z)).norm().log10()
}

/// Solve, plan the reduction at the given rank tolerance, re-solve at the
/// reduced order and emit the frequency-response comparison.
pub fn model_reduce_pipeline(
    problem: &Problem,
    prior: &SpectralPrior,
    tol: f64,
    grid: usize,
    opts: &CeeOptions,
) -> Result<ReductionReport> {
    let full = solve(problem, prior, opts)?;
    let plan = degree_and_reduce(&full, tol)?;
    let mut warnings = plan.warnings.clone();
    let dropped_singular_mass: f64 = plan
        .singular_values
        .iter()
        .skip(plan.numerical_degree)
        .sum();

    let (reduced, reduced_problem, reduced_jet_error) = if plan.reduced_order
        == prior.degree()
    {
        (None, None, 0.0)
    } else {
        let reduced_prior = SpectralPrior::new(plan.reduced_sigma.clone())?;
        let small = truncate_problem(problem, plan.reduced_order)?;
        let sol = solve(&small, &reduced_prior, opts)?;
        // jet error of the reduced interpolant against the FULL data
        let (num, den) = sol.interpolant()?;
        let mut err = 0.0_f64;
        for node in problem.nodes() {
            let jet = rational_jet(&num, &den, node.z, node.multiplicity() - 1)?;
            for (k, expect) in node.jet.iter().enumerate() {
                err = err.max((jet.coeff(k) - expect).norm());
            }
        }
        if err > 10.0 * dropped_singular_mass {
            warnings.push(format!(
                "reduced jet error {err:.3e} exceeds ten times the dropped singular mass {dropped_singular_mass:.3e}"
            ));
        }
        (Some(sol), Some(small), err)
    };

    let (fnum, fden) = full.shaping_filter();
    let mut comparison = Vec::with_capacity(grid);
    for k in 0..grid {
        let theta = std::f64::consts::PI * k as f64 / (grid - 1).max(1) as f64;
        let full_db = magnitude_db(&fnum, &fden, theta);
        let red_db = match &reduced {
            Some(sol) => {
                let (rnum, rden) = sol.shaping_filter();
                magnitude_db(&rnum, &rden, theta)
            }
            None => full_db,
        };
        comparison.push((theta, full_db, red_db));
    }

    Ok(ReductionReport {
        full,
        plan,
        reduced,
        reduced_problem,
        comparison,
        dropped_singular_mass,
        reduced_jet_error,
        warnings,
    })
}

// ---------------------------------------------------------------------
// Matrix variant
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MatrixReductionReport {
    pub full: MatrixCeeSolution,
    pub plan: MatrixReductionPlan,
    pub reduced: Option<MatrixCeeSolution>,
    pub reduced_problem: Option<MatrixProblem>,
    /// Rows (theta, full max/min singular value dB, reduced max/min dB).
    pub comparison: Vec<(f64, f64, f64, f64, f64)>,
    pub warnings: Vec<String>,
}

fn spectral_factor_extrema(sol: &MatrixCeeSolution, theta: f64) -> Result<(f64, f64)> {
    // V(z) = A(z)^-1 Sigma(z) R on the unit circle
    let z = c64(theta.cos(), theta.sin());
    let a = sol.a.eval(z);
    let sigma = sol.prior.sigma().eval(z);
    let r = sol.r.map(|x| c64(x, 0.0));
    let v = a
        .lu()
        .solve(&(sigma * r))
        .ok_or_else(|| Error::IllConditioned {
            what: "A(z) on the unit circle".into(),
            cond: f64::INFINITY,
        })?;
    let gram = v.adjoint() * &v;
    let eigs = hermitian_eigenvalues(&gram)?;
    Ok((
        eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        eigs.first().copied().unwrap_or(0.0).max(0.0).sqrt(),
    ))
}

/// Matrix model reduction for covariance-type problems with scalar-shaped
/// priors: truncate the lag count to the reduced index and re-solve.
pub fn model_reduce_pipeline_matrix(
    problem: &MatrixProblem,
    prior: &MatrixPrior,
    tol: f64,
    grid: usize,
    opts: &CeeOptions,
) -> Result<MatrixReductionReport> {
    let full = solve_matrix(problem, prior, opts)?;
    let plan = matrix_degree_and_reduce(&full, tol)?;
    let mut warnings = plan.warnings.clone();

    let (reduced, reduced_problem) = if plan.reduced_index == prior.degree() {
        (None, None)
    } else {
        match (&plan.reduced_prior, problem.nodes().len()) {
            (Some(rp), 1) => {
                let node = &problem.nodes()[0];
                if node.z.norm() > 1e-12 {
                    warnings.push(
                        "matrix reduction re-solve supports covariance-type data only".into(),
                    );
                    (None, None)
                } else {
                    let jets = node.jet[..=plan.reduced_index].to_vec();
                    let small = MatrixProblem::from_nodes_unchecked(
                        vec![crate::interp::MatrixNode {
                            z: C64::ZERO,
                            jet: jets,
                        }],
                        problem.ell(),
                    );
                    let sol = solve_matrix(&small, rp, opts)?;
                    (Some(sol), Some(small))
                }
            }
            _ => {
                warnings.push(
                    "no reduced prior available; re-solve skipped (general matrix prior)".into(),
                );
                (None, None)
            }
        }
    };

    let mut comparison = Vec::with_capacity(grid);
    for k in 0..grid {
        let theta = std::f64::consts::PI * k as f64 / (grid - 1).max(1) as f64;
        let (fmax, fmin) = spectral_factor_extrema(&full, theta)?;
        let (rmax, rmin) = match &reduced {
            Some(sol) => spectral_factor_extrema(sol, theta)?,
            None => (fmax, fmin),
        };
        comparison.push((
            theta,
            20.0 * fmax.log10(),
            20.0 * fmin.log10(),
            20.0 * rmax.log10(),
            20.0 * rmin.log10(),
        ));
    }

    Ok(MatrixReductionReport {
        full,
        plan,
        reduced,
        reduced_problem,
        comparison,
        warnings,
    })
}

/// The degree-7 spectral estimation benchmark filter: poles, zeros and
/// gain 1/2.
pub fn benchmark_filter() -> Result<super::ShapingFilter> {
    let pair = |r: f64, th: f64| {
        [
            c64(r * th.cos(), r * th.sin()),
            c64(r * th.cos(), -r * th.sin()),
        ]
    };
    let mut zeros: Vec<C64> = Vec::new();
    zeros.extend(pair(0.9, 2.6));
    zeros.extend(pair(0.5, 1.3));
    zeros.extend(pair(0.94, 1.6));
    zeros.push(c64(0.3, 0.0));
    let mut poles: Vec<C64> = Vec::new();
    poles.extend(pair(0.1, 1.9));
    poles.extend(pair(0.8, 1.35));
    poles.extend(pair(0.7, 2.1));
    poles.push(c64(0.1, 0.0));
    super::ShapingFilter::from_roots(&zeros, &poles, 0.5)
}

/// The bank of the high-resolution benchmark: four derivatives at the
/// origin and nodes pushed toward the circle.
pub fn benchmark_bank() -> Vec<(C64, usize)> {
    vec![
        (c64(0.0, 0.0), 4),
        (c64(0.98 * (2.1f64).cos(), 0.98 * (2.1f64).sin()), 1),
        (c64(0.98 * (2.1f64).cos(), -0.98 * (2.1f64).sin()), 1),
        (c64(0.99, 0.0), 1),
        (c64(-0.99, 0.0), 1),
    ]
}

/// The order-ten 2x2 benchmark system with equal observability indices
/// five: V(z) = A(z)^-1 Sigma(z) R.
pub fn benchmark_matrix_filter() -> Result<super::MatrixShapingFilter> {
    use crate::poly::MatrixPoly;
    use nalgebra::DMatrix;
    // channel polynomials in ascending powers
    let a11 = [-0.13, -0.05, 0.05, -0.08, -0.11, 1.0];
    let a12 = [-0.09, -0.09, 0.1, -0.15, -0.02, 0.0];
    let a21 = [0.12, -0.1, -0.03, 0.09, 0.11, 0.0];
    let a22 = [0.05, -0.13, -0.03, 0.19, 0.07, 1.0];
    let coeffs: Vec<DMatrix<f64>> = (0..=5)
        .map(|k| DMatrix::from_row_slice(2, 2, &[a11[k], a12[k], a21[k], a22[k]]))
        .collect();
    let a = MatrixPoly::from_coeffs(coeffs)?;
    let sigma_scalar = crate::poly::Poly::from_roots_real(&[
        c64(0.1, 0.0),
        c64(0.9, 0.0),
        c64(0.37, 0.0),
        c64(-0.4, 0.0),
        c64(-0.95, 0.0),
    ])?;
    let sigma = MatrixPoly::scalar_times_identity(&sigma_scalar, 2)?;
    let r = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    super::MatrixShapingFilter::new(sigma, a, r)
}
