//! Tunable high-resolution spectral estimation: a bank of first-order
//! filters whose poles set the interpolation nodes, a structured fit of the
//! value matrix W from the bank covariance, and a covariance-extension solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{
    bank_matrices, normalize, structured_w_from_covariance, Node, Problem, Transform,
};
use crate::numerics::stein_solve;
use crate::poly::{c64, C64};
use crate::scalar::{solve, CeeOptions, CeeSolution, SpectralPrior};

use super::ShapingFilter;

/// Input to the estimator: an observed series or a known filter for the
/// deterministic exact-data mode.
pub enum ThreeData<'a> {
    Series(&'a [f64]),
    Exact(&'a ShapingFilter),
}

/// Spectral estimate: the solved interpolant, the fitted problem, and the
/// power spectral density table in the data's scale.
#[derive(Clone, Debug)]
pub struct ThreeReport {
    pub solution: CeeSolution,
    pub problem: Problem,
    pub transform: Transform,
    /// Output variance 2 w00 recovered from the bank fit.
    pub variance: f64,
    pub structured_fit_residual: f64,
    /// Rows (theta, density, density_db).
    pub density: Vec<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Bank covariance Sigma_u = E(u u*) for the filter-bank state
/// u(t) = Z u(t-1) + e y(t), either estimated from a series (after a
/// burn-in) or exactly from the joint state space with a known filter.
pub fn bank_covariance(
    data: &ThreeData,
    bank: &[(C64, usize)],
) -> Result<DMatrix<C64>> {
    let (z, e) = bank_matrices(bank);
    let total = z.nrows();
    match data {
        ThreeData::Series(y) => {
            let rho = bank
                .iter()
                .map(|(zj, _)| zj.norm())
                .fold(0.0_f64, f64::max);
            let burn = super::burn_in_length(rho);
            if y.len() <= burn + 2 * total {
                return Err(Error::InvalidInput(format!(
                    "series too short for the bank burn-in ({} needed, got {})",
                    burn + 2 * total,
                    y.len()
                )));
            }
            let mut u = DVector::<C64>::zeros(total);
            let mut acc = DMatrix::<C64>::zeros(total, total);
            let mut count = 0usize;
            for (t, &yt) in y.iter().enumerate() {
                u = &z * &u + &e * c64(yt, 0.0);
                if t >= burn {
                    acc += &u * u.adjoint();
                    count += 1;
                }
            }
            Ok(acc / c64(count as f64, 0.0))
        }
        ThreeData::Exact(filter) => {
            // joint state eta(t) = [x(t+1); u(t)] has the one-noise update
            // eta(t+1) = [[F, 0],[e h', Z]] eta(t) + [k; e rho] w(t+1)
            let n = filter.degree();
            let (f, k) = filter.realization()?;
            let dim = n + total;
            let mut a = DMatrix::<C64>::zeros(dim, dim);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = c64(f[(i, j)], 0.0);
                }
            }
            for i in 0..total {
                if e[i].norm() > 0.0 && n > 0 {
                    a[(n + i, 0)] = e[i]; // e h' picks the first state
                }
                for j in 0..total {
                    a[(n + i, n + j)] = z[(i, j)];
                }
            }
            let mut b = DVector::<C64>::zeros(dim);
            for i in 0..n {
                b[i] = c64(k[i], 0.0);
            }
            for i in 0..total {
                b[n + i] = e[i] * c64(filter.rho(), 0.0);
            }
            let pi = stein_solve(&crate::numerics::SteinProblem::lyapunov(
                a,
                &b * b.adjoint(),
            ))?;
            Ok(pi.view((n, n), (total, total)).clone_owned())
        }
    }
}

/// Run the filter bank, fit the structured W, normalize and solve; emits a
/// density table of rho^2 |sigma/a|^2 scaled back to the data's variance on
/// `grid` frequencies over [0, pi].
pub fn three_estimate(
    data: ThreeData,
    bank: &[(C64, usize)],
    prior: &SpectralPrior,
    grid: usize,
    opts: &CeeOptions,
) -> Result<ThreeReport> {
    // the bank must itself be a valid node layout
    let skeleton: Vec<Node> = bank
        .iter()
        .map(|&(z, m)| Node::new(z, vec![c64(0.5, 0.0); m]))
        .collect();
    let checked = Problem::validate(skeleton)?;
    if !checked.completed.is_empty() {
        return Err(Error::MissingConjugate {
            re: checked.completed[0].re,
            im: -checked.completed[0].im,
        });
    }

    let sigma_u = bank_covariance(&data, bank)?;
    let fit = structured_w_from_covariance(&sigma_u, bank)?;
    let mut warnings = fit.problem.warnings.clone();
    let raw_problem = fit.problem.problem.clone();
    let (problem, transform) = normalize(&raw_problem)?;
    let variance = 1.0 / transform.scale;
    let solution = solve(&problem, prior, opts).map_err(|e| match e {
        Error::Infeasible { min_eig } => {
            // estimated data can fall outside the feasible set; suggest more data
            Error::InvalidInput(format!(
                "estimated bank data is not Pick-feasible (min eigenvalue {min_eig:.3e}); \
                 a longer series usually repairs this"
            ))
        }
        other => other,
    })?;
    warnings.extend(solution.diagnostics.warnings.clone());

    let mut density = Vec::with_capacity(grid);
    let (vnum, vden) = solution.shaping_filter();
    for k in 0..grid {
        let theta = std::f64::consts::PI * k as f64 / (grid - 1).max(1) as f64;
        let zz = c64(theta.cos(), theta.sin());
        let mag2 = (vnum.eval(zz) / vden.eval(zz)).norm_sqr() * variance;
        density.push((theta, mag2, 10.0 * mag2.log10()));
    }
    Ok(ThreeReport {
        solution,
        problem,
        transform,
        variance,
        structured_fit_residual: fit.residual,
        density,
        warnings,
    })
}

// ---------------------------------------------------------------------
// Bank file schema
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankNodeJson {
    pub re: f64,
    pub im: f64,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

/// Filter-bank specification file: nodes with multiplicities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BankJson {
    pub nodes: Vec<BankNodeJson>,
}

impl BankJson {
    pub fn parse(text: &str) -> Result<Vec<(C64, usize)>> {
        let parsed: BankJson = serde_json::from_str(text)?;
        if parsed.nodes.is_empty() {
            return Err(Error::EmptyProblem);
        }
        Ok(parsed
            .nodes
            .iter()
            .map(|n| (c64(n.re, n.im), n.multiplicity))
            .collect())
    }
}
