//! Solution file schema and its reload/verification logic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use cee::interp::{build_data_matrices, pick_test_from, ProblemJson, Transform};
use cee::matrix::{
    compute_matrix_uu, matrix_reduced_residual, MatrixCeeSolution, MatrixPrior,
};
use cee::poly::{positivity_residual, rational_jet, MatrixPoly, Poly};
use cee::scalar::{compute_uu, reduced_residual, CeeSolution, SpectralPrior};
use cee::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualsJson {
    pub cee: f64,
    pub interpolation: f64,
    pub positivity: f64,
    pub redundant_row: f64,
}

/// Machine-readable solution artifact. Carries the normalized problem, the
/// prior, the recovered interpolant data and the full P matrix so that
/// `check` can re-derive every stated residual.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionJson {
    pub kind: String,
    pub problem: ProblemJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
    /// Ascending coefficients of sigma (scalar) or its matrix coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_matrix: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_matrix: Option<Vec<Vec<f64>>>,
    /// Row-major P.
    pub p_matrix: Vec<Vec<f64>>,
    pub p_singular_values: Vec<f64>,
    pub numerical_degree: usize,
    pub h_p_h: f64,
    pub pick_min_eigenvalue: f64,
    pub residuals: ResidualsJson,
    pub uniqueness: String,
    pub path_lambdas: Vec<f64>,
    pub warnings: Vec<String>,
}

fn poly_to_vec(p: &Poly) -> Vec<f64> {
    p.real_coeffs().unwrap_or_default()
}

pub fn vec_to_poly(v: &[f64]) -> Poly {
    Poly::from_real(v)
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

fn mpoly_to_rows(p: &MatrixPoly) -> Vec<Vec<Vec<f64>>> {
    (0..=p.degree()).map(|k| mat_to_rows(&p.coeff(k))).collect()
}

pub fn rows_to_mpoly(rows: &[Vec<Vec<f64>>]) -> Result<MatrixPoly> {
    let coeffs = rows.iter().map(|r| rows_to_mat(r)).collect();
    MatrixPoly::from_coeffs(coeffs)
}

impl SolutionJson {
    pub fn from_scalar(
        sol: &CeeSolution,
        problem: &cee::interp::Problem,
        transform: Option<Transform>,
    ) -> Self {
        SolutionJson {
            kind: "scalar".into(),
            problem: ProblemJson::from_scalar(problem),
            transform,
            sigma: Some(poly_to_vec(sol.prior.sigma())),
            sigma_matrix: None,
            a: Some(poly_to_vec(&sol.a)),
            b: Some(poly_to_vec(&sol.b)),
            rho: Some(sol.rho),
            a_matrix: None,
            b_matrix: None,
            r_matrix: None,
            p_matrix: mat_to_rows(&sol.p_matrix),
            p_singular_values: sol.diagnostics.singular_values.clone(),
            numerical_degree: sol.diagnostics.numerical_degree,
            h_p_h: sol.diagnostics.h_p_h,
            pick_min_eigenvalue: sol.diagnostics.pick_min_eigenvalue,
            residuals: ResidualsJson {
                cee: sol.diagnostics.cee_residual,
                interpolation: sol.diagnostics.interpolation_residual,
                positivity: sol.diagnostics.positivity_residual,
                redundant_row: sol.diagnostics.redundant_row_residual,
            },
            uniqueness: "unique (scalar theory)".into(),
            path_lambdas: sol.path.iter().map(|s| s.lambda).collect(),
            warnings: sol.diagnostics.warnings.clone(),
        }
    }

    pub fn from_matrix(sol: &MatrixCeeSolution, problem: &cee::interp::MatrixProblem) -> Self {
        SolutionJson {
            kind: "matrix".into(),
            problem: ProblemJson::from_matrix(problem),
            transform: None,
            sigma: None,
            sigma_matrix: Some(mpoly_to_rows(sol.prior.sigma())),
            a: None,
            b: None,
            rho: None,
            a_matrix: Some(mpoly_to_rows(&sol.a)),
            b_matrix: Some(mpoly_to_rows(&sol.b)),
            r_matrix: Some(mat_to_rows(&sol.r)),
            p_matrix: mat_to_rows(&sol.p_matrix),
            p_singular_values: sol.diagnostics.singular_values.clone(),
            numerical_degree: sol.diagnostics.numerical_degree,
            h_p_h: sol.diagnostics.hph_max_eigenvalue,
            pick_min_eigenvalue: sol.diagnostics.pick_min_eigenvalue,
            residuals: ResidualsJson {
                cee: sol.diagnostics.cee_residual,
                interpolation: sol.diagnostics.interpolation_residual,
                positivity: sol.diagnostics.positivity_residual,
                redundant_row: sol.diagnostics.redundant_row_residual,
            },
            uniqueness: if sol.diagnostics.unique_by_shape {
                "unique (scalar-shaped prior)".into()
            } else {
                "branch from P = 0 (uniqueness open for general priors)".into()
            },
            path_lambdas: sol.path.iter().map(|s| s.lambda).collect(),
            warnings: sol.diagnostics.warnings.clone(),
        }
    }
}

/// One recomputed-versus-stated residual line.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub stated: f64,
    pub recomputed: f64,
    pub agree: bool,
}

/// Recompute every stated residual of a reloaded solution.
pub fn check_solution(sol: &SolutionJson, tol: f64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let mut push = |name: &str, stated: f64, recomputed: f64| {
        lines.push(CheckLine {
            name: name.into(),
            stated,
            recomputed,
            agree: (stated - recomputed).abs() <= tol * stated.abs().max(1.0),
        });
    };
    match sol.kind.as_str() {
        "scalar" => {
            let problem = match sol.problem.clone().into_problem()? {
                cee::interp::AnyProblem::Scalar(v) => v.problem,
                _ => return Err(Error::InvalidInput("kind/problem mismatch".into())),
            };
            let sigma = vec_to_poly(sol.sigma.as_ref().ok_or_else(missing)?);
            let prior = SpectralPrior::new(sigma)?;
            let a = vec_to_poly(sol.a.as_ref().ok_or_else(missing)?);
            let b = vec_to_poly(sol.b.as_ref().ok_or_else(missing)?);
            let rho = sol.rho.ok_or_else(missing)?;
            let p = rows_to_mat(&sol.p_matrix);
            let n = prior.degree();

            let data = build_data_matrices(&problem)?;
            let params = compute_uu(&data)?;
            let gamma = prior.gamma();
            let ph = if n == 0 {
                DVector::zeros(0)
            } else {
                p.column(0).into_owned()
            };
            let cee = if n == 0 {
                0.0
            } else {
                let q = gamma * &ph + prior.sigma_vec();
                let g = &params.u + &params.u_mat * &q;
                let inner = &p - &ph * ph.transpose();
                (&p - gamma * inner * gamma.transpose() - &g * g.transpose()).norm()
            };
            push("cee", sol.residuals.cee, cee);

            let num = b.reverse(n)?.scale(num_complex::Complex64::new(0.5, 0.0));
            let den = a.reverse(n)?;
            let mut interp = 0.0_f64;
            for node in problem.nodes() {
                let jet = rational_jet(&num, &den, node.z, node.multiplicity() - 1)?;
                for (k, expect) in node.jet.iter().enumerate() {
                    interp = interp.max((jet.coeff(k) - expect).norm());
                }
            }
            push("interpolation", sol.residuals.interpolation, interp);

            let pos = positivity_residual(&a, &b, prior.sigma(), rho)?;
            push("positivity", sol.residuals.positivity, pos);

            if n > 0 {
                let (_, redundant) = reduced_residual(&ph, 1.0, &prior, &params);
                push("redundant_row", sol.residuals.redundant_row, redundant.abs());
            }
            let pick = pick_test_from(&data)?;
            push(
                "pick_min_eigenvalue",
                sol.pick_min_eigenvalue,
                pick.min_eigenvalue,
            );
        }
        "matrix" => {
            let problem = match sol.problem.clone().into_problem()? {
                cee::interp::AnyProblem::Matrix(v) => v.problem,
                _ => return Err(Error::InvalidInput("kind/problem mismatch".into())),
            };
            let sigma = rows_to_mpoly(sol.sigma_matrix.as_ref().ok_or_else(missing)?)?;
            let prior = MatrixPrior::new(sigma)?;
            let a = rows_to_mpoly(sol.a_matrix.as_ref().ok_or_else(missing)?)?;
            let b = rows_to_mpoly(sol.b_matrix.as_ref().ok_or_else(missing)?)?;
            let p = rows_to_mat(&sol.p_matrix);
            let params = compute_matrix_uu(&problem, prior.structure())?;
            let gamma = prior.gamma();
            let h = prior.structure().h();
            let ph = &p * h.transpose();
            let q = gamma * &ph + prior.sigma_stacked();
            let g = &params.u + params.apply_u(&q);
            let inner = &p - &ph * ph.transpose();
            let cee = (&p - gamma * inner * gamma.transpose() - &g * g.transpose()).norm();
            push("cee", sol.residuals.cee, cee);

            let msol_a = cee::matrix::stack_coeffs(&a);
            let msol_b = cee::matrix::stack_coeffs(&b);
            let _ = (&msol_a, &msol_b);
            let (_, redundant) = matrix_reduced_residual(&ph, 1.0, &prior, &params);
            push("redundant_row", sol.residuals.redundant_row, redundant);
        }
        other => {
            return Err(Error::InvalidInput(format!("unknown solution kind {other}")));
        }
    }
    Ok(lines)
}

fn missing() -> Error {
    Error::InvalidInput("solution file is missing fields for its kind".into())
}
