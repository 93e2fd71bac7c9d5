//! Sensitivity shaping for robust control: internal-stability interpolation
//! constraints on S(z) = 1/(1 + P C), mapped through
//! f(z) = (gamma + S(1/z))/(gamma - S(1/z)) to a disc problem, solved with
//! designer-chosen spectral zeros, and mapped back to S and the controller C.
//!
//! The exterior-disc convention (S analytic outside the closed disc) is
//! handled by the substitution z -> 1/z exactly once, at this boundary;
//! the solvers stay in the disc convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{normalize, Node, Problem, Transform};
use crate::poly::{c64, rational_jet, C64, Poly, TruncatedSeries};
use crate::scalar::{solve, CeeOptions, CeeSolution, SpectralPrior};

const ROOT_CLUSTER_TOL: f64 = 1e-6;

/// Plant data for the sensitivity design: the transfer function P = num/den,
/// the sensitivity bound gamma and the chosen spectral zeros.
#[derive(Clone, Debug)]
pub struct PlantSpec {
    pub num: Poly,
    pub den: Poly,
    pub gamma: f64,
    pub spectral_zeros: Vec<C64>,
}

/// A root with multiplicity, clustered from a raw root list.
fn cluster_roots(roots: &[C64]) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &r in roots {
        match out.iter_mut().find(|(c, _)| (*c - r).norm() < ROOT_CLUSTER_TOL) {
            Some((c, m)) => {
                // running mean keeps clustered roots centered
                *c = (*c * (*m as f64) + r) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => out.push((r, 1)),
        }
    }
    out
}

impl PlantSpec {
    pub fn new(num: Poly, den: Poly, gamma: f64, spectral_zeros: Vec<C64>) -> Result<Self> {
        if gamma <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "sensitivity bound gamma must exceed 1, got {gamma}"
            )));
        }
        if num.degree() > den.degree() {
            return Err(Error::ImproperRational {
                num: num.degree(),
                den: den.degree(),
            });
        }
        // complete spectral zeros to a conjugate-closed set
        let mut zeros = Vec::new();
        for &z in &spectral_zeros {
            if z.norm() >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "spectral zeros must lie strictly inside the unit disc, got |z| = {}",
                    z.norm()
                )));
            }
            zeros.push(z);
            if z.im.abs() > 1e-12
                && !spectral_zeros
                    .iter()
                    .any(|w| (w - z.conj()).norm() < 1e-9)
            {
                zeros.push(z.conj());
            }
        }
        Ok(PlantSpec {
            num,
            den,
            gamma,
            spectral_zeros: zeros,
        })
    }

    /// Plant poles with |p| >= 1, clustered with multiplicities.
    pub fn unstable_poles(&self) -> Result<Vec<(C64, usize)>> {
        let roots = self.den.roots()?;
        Ok(cluster_roots(&roots)
            .into_iter()
            .filter(|(r, _)| r.norm() >= 1.0)
            .collect())
    }

    /// Finite plant zeros with |z| >= 1, clustered with multiplicities.
    pub fn unstable_zeros(&self) -> Result<Vec<(C64, usize)>> {
        if self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        let roots = self.num.roots()?;
        Ok(cluster_roots(&roots)
            .into_iter()
            .filter(|(r, _)| r.norm() >= 1.0)
            .collect())
    }

    /// Zero multiplicity at infinity (the relative degree).
    pub fn infinity_zeros(&self) -> usize {
        self.den.degree() - self.num.degree()
    }
}

/// Sensitivity design result: S, the controller C, the underlying solve and
/// the specification report on the frequency grid.
#[derive(Clone, Debug)]
pub struct ShapeReport {
    pub s_num: Poly,
    pub s_den: Poly,
    pub c_num: Poly,
    pub c_den: Poly,
    pub solution: CeeSolution,
    /// The normalized disc problem that was solved.
    pub problem: Problem,
    pub transform: Transform,
    pub h_inf: f64,
    /// S interpolation residual over all internal-stability constraints.
    pub s_constraint_residual: f64,
    /// 1 - (largest pole modulus of S); positive means S is analytic
    /// outside the closed disc.
    pub s_pole_margin: f64,
    pub cancellation_residual: f64,
    /// Rows (theta, |S| in dB, phase of S).
    pub grid: Vec<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Jet of f = (gamma + s)/(gamma - s) through a given S-jet.
fn caratheodory_jet(s_jet: &[C64], gamma: f64) -> Result<Vec<C64>> {
    let order = s_jet.len() - 1;
    let s = TruncatedSeries::new(s_jet, order);
    let g = TruncatedSeries::constant(c64(gamma, 0.0), order);
    let f = g.add(&s).div(&g.sub(&s))?;
    Ok(f.coeffs().to_vec())
}

/// Deflate `poly` by the polynomial roots nearest to each of `targets`;
/// returns the quotient and the largest root-matching distance.
fn deflate_matched(poly: &Poly, targets: &[C64], tol: f64) -> Result<(Poly, f64)> {
    let mut work = poly.clone();
    let mut worst = 0.0_f64;
    let mut available = poly.roots()?;
    for &t in targets {
        let (idx, dist) = available
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - t).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or_else(|| Error::CancellationFailure {
                poly: format!("{poly}"),
                target: format!("{t}"),
                tol,
            })?;
        if dist > tol {
            return Err(Error::CancellationFailure {
                poly: format!("{poly}"),
                target: format!("{t}"),
                tol,
            });
        }
        let root = available.swap_remove(idx);
        worst = worst.max(dist);
        let (q, rem) = work.deflate(root);
        worst = worst.max(rem.norm() / poly.leading().norm().max(1.0));
        work = q;
    }
    Ok((work, worst))
}

/// Design the sensitivity function and controller for a plant under the
/// bound |S|_inf < gamma, with the given spectral zeros as free parameters.
pub fn sensitivity_shape(
    plant: &PlantSpec,
    grid_points: usize,
    opts: &CeeOptions,
) -> Result<ShapeReport> {
    let gamma = plant.gamma;
    let poles = plant.unstable_poles()?;
    let zeros = plant.unstable_zeros()?;
    let m_inf = plant.infinity_zeros();
    let mut warnings = Vec::new();

    // interpolation constraints on S: S = 0 at unstable poles (to their
    // multiplicity), S = 1 at unstable zeros and at infinity
    let mut nodes: Vec<Node> = Vec::new();
    if m_inf > 0 {
        let s_jet: Vec<C64> = std::iter::once(C64::ONE)
            .chain(std::iter::repeat(C64::ZERO).take(m_inf - 1))
            .collect();
        nodes.push(Node::new(C64::ZERO, caratheodory_jet(&s_jet, gamma)?));
    }
    for &(p, m) in &poles {
        let s_jet = vec![C64::ZERO; m];
        nodes.push(Node::new(
            C64::ONE / p,
            caratheodory_jet(&s_jet, gamma)?,
        ));
    }
    for &(z, m) in &zeros {
        let s_jet: Vec<C64> = std::iter::once(C64::ONE)
            .chain(std::iter::repeat(C64::ZERO).take(m - 1))
            .collect();
        nodes.push(Node::new(
            C64::ONE / z,
            caratheodory_jet(&s_jet, gamma)?,
        ));
    }
    let checked = Problem::validate(nodes)?;
    warnings.extend(checked.warnings.clone());
    let n = checked.problem.order();
    if plant.spectral_zeros.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} interpolation conditions require exactly {} spectral zeros, got {}",
            n + 1,
            n,
            plant.spectral_zeros.len()
        )));
    }
    let (problem, transform) = normalize(&checked.problem)?;
    let sigma = Poly::from_roots_real(&plant.spectral_zeros)?;
    let prior = SpectralPrior::new(sigma)?;
    let solution = solve(&problem, &prior, opts)?;

    // back-map: with kappa = f(0) (the unscaled base value),
    // S(z) = gamma (kappa b(z) - a(z)) / (kappa b(z) + a(z))
    let kappa = 0.5 / transform.scale;
    let a = &solution.a;
    let b = &solution.b;
    let n_poly = (&b.scale(c64(kappa, 0.0)) - a).scale(c64(gamma, 0.0));
    let d_poly = &b.scale(c64(kappa, 0.0)) + a;
    let lead = d_poly.leading();
    let s_num = n_poly.scale(C64::ONE / lead).realified()?;
    let s_den = d_poly.scale(C64::ONE / lead).realified()?;

    // controller C = (1 - S)/(S P) with exact analytic cancellations:
    // (S_den - S_num) carries the unstable plant zeros, S_num the unstable
    // plant poles
    let diff = (&s_den - &s_num).realified()?;
    let diff_scale = s_den
        .coeffs()
        .iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let diff_vanishes = diff.is_zero()
        || diff
            .coeffs()
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max)
            <= 1e-12 * diff_scale;
    let mut cancellation_residual = 0.0_f64;
    let (c_num, c_den) = if diff_vanishes {
        warnings.push("1 - S vanishes identically; the plant needs no controller".into());
        (Poly::zero(), Poly::one())
    } else {
        let finite_zero_targets: Vec<C64> = zeros
            .iter()
            .flat_map(|&(z, m)| std::iter::repeat(z).take(m))
            .collect();
        let pole_targets: Vec<C64> = poles
            .iter()
            .flat_map(|&(p, m)| std::iter::repeat(p).take(m))
            .collect();
        let (q_tilde, r1) = deflate_matched(&diff, &finite_zero_targets, ROOT_CLUSTER_TOL)?;
        let (n_tilde, r2) = deflate_matched(&s_num, &pole_targets, ROOT_CLUSTER_TOL)?;
        cancellation_residual = r1.max(r2);
        // stable plant factors: den/P_u and num/Z_u
        let (den_stable, r3) = deflate_matched(&plant.den, &pole_targets, ROOT_CLUSTER_TOL)?;
        let (num_stable, r4) = deflate_matched(&plant.num, &finite_zero_targets, ROOT_CLUSTER_TOL)?;
        cancellation_residual = cancellation_residual.max(r3).max(r4);
        let c_num_raw = (&q_tilde * &den_stable).realified()?;
        let c_den_raw = (&n_tilde * &num_stable).realified()?;
        // normalize the controller denominator to be monic
        let lead = c_den_raw.leading();
        (
            c_num_raw.scale(C64::ONE / lead).realified()?,
            c_den_raw.scale(C64::ONE / lead).realified()?,
        )
    };

    // verification: constraint residuals in the exterior variable (S = N/D
    // is a rational function of the original z) and the frequency grid
    let mut s_constraint_residual = 0.0_f64;
    for &(p, m) in &poles {
        let jet = rational_jet(&s_num, &s_den, p, m - 1)?;
        for k in 0..m {
            s_constraint_residual = s_constraint_residual.max(jet.coeff(k).norm());
        }
    }
    for &(z, m) in &zeros {
        let jet = rational_jet(&s_num, &s_den, z, m - 1)?;
        s_constraint_residual = s_constraint_residual.max((jet.coeff(0) - C64::ONE).norm());
        for k in 1..m {
            s_constraint_residual = s_constraint_residual.max(jet.coeff(k).norm());
        }
    }
    if m_inf > 0 {
        // behavior at infinity through the reversed pair
        let deg = s_den.degree();
        let jet = rational_jet(&s_num.reverse(deg)?, &s_den.reverse(deg)?, C64::ZERO, m_inf - 1)?;
        s_constraint_residual = s_constraint_residual.max((jet.coeff(0) - C64::ONE).norm());
        for k in 1..m_inf {
            s_constraint_residual = s_constraint_residual.max(jet.coeff(k).norm());
        }
    }

    // S analytic outside the closed disc: poles of S(z) = roots of s_den(1/z)
    // reversed, i.e. s_den's roots must stay inside the disc
    let (s_stable, s_pole_margin) = s_den.is_schur()?;
    if !s_stable {
        warnings.push(format!(
            "sensitivity denominator has a root on or outside the unit circle (margin {s_pole_margin:.3e})"
        ));
    }

    let mut h_inf = 0.0_f64;
    let mut grid = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let theta = std::f64::consts::PI * k as f64 / (grid_points - 1).max(1) as f64;
        let zz = c64(theta.cos(), theta.sin());
        let val = s_num.eval(zz) / s_den.eval(zz);
        let mag = val.norm();
        h_inf = h_inf.max(mag);
        grid.push((theta, 20.0 * mag.log10(), val.arg()));
    }
    if h_inf >= gamma {
        warnings.push(format!(
            "the design violates |S|_inf < {gamma}: measured {h_inf:.4}"
        ));
    }

    Ok(ShapeReport {
        s_num,
        s_den,
        c_num,
        c_den,
        solution,
        problem,
        transform,
        h_inf,
        s_constraint_residual,
        s_pole_margin,
        cancellation_residual,
        grid,
        warnings,
    })
}

/// Largest |S| in dB over a closed frequency band, from the report grid.
pub fn band_peak_db(grid: &[(f64, f64, f64)], lo: f64, hi: f64) -> f64 {
    grid.iter()
        .filter(|(t, _, _)| *t >= lo && *t <= hi)
        .map(|(_, db, _)| *db)
        .fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------
// Plant file schema
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantJson {
    pub gamma: f64,
    /// Ascending coefficients of the plant numerator and denominator.
    pub plant_numerator: Vec<f64>,
    pub plant_denominator: Vec<f64>,
    pub spectral_zeros: Vec<super::three::BankNodeJson>,
}

impl PlantJson {
    pub fn parse(text: &str) -> Result<PlantSpec> {
        let parsed: PlantJson = serde_json::from_str(text)?;
        let zeros: Vec<C64> = parsed
            .spectral_zeros
            .iter()
            .flat_map(|n| std::iter::repeat(c64(n.re, n.im)).take(n.multiplicity))
            .collect();
        PlantSpec::new(
            Poly::from_real(&parsed.plant_numerator),
            Poly::from_real(&parsed.plant_denominator),
            parsed.gamma,
            zeros,
        )
    }
}

/// The plant of the benchmark design: two unstable complex zeros, unstable
/// poles at 1.1 and +-1.1i, a double zero at infinity, bound gamma = 5.
pub fn benchmark_plant() -> Result<PlantSpec> {
    let phi = 19.0 * std::f64::consts::PI / 20.0;
    let num = Poly::from_roots_real(&[
        c64(1.1 * phi.cos(), 1.1 * phi.sin()),
        c64(1.1 * phi.cos(), -1.1 * phi.sin()),
    ])?;
    // z (z - 1.1)(z^2 + 1.21)
    let den = &(&Poly::monomial(1) * &Poly::from_real(&[-1.1, 1.0]))
        * &Poly::from_real(&[1.21, 0.0, 1.0]);
    let spectral_zeros = vec![
        c64(
            0.98 * (7.0 * std::f64::consts::PI / 15.0).cos(),
            0.98 * (7.0 * std::f64::consts::PI / 15.0).sin(),
        ),
        c64(
            0.98 * (7.0 * std::f64::consts::PI / 15.0).cos(),
            -0.98 * (7.0 * std::f64::consts::PI / 15.0).sin(),
        ),
        c64(0.0, 0.97),
        c64(0.0, -0.97),
        c64(0.0, 0.0),
        c64(-0.1, 0.0),
    ];
    PlantSpec::new(num, den, 5.0, spectral_zeros)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_classification() {
        let plant = benchmark_plant().unwrap();
        let poles = plant.unstable_poles().unwrap();
        assert_eq!(poles.iter().map(|(_, m)| m).sum::<usize>(), 3);
        let zeros = plant.unstable_zeros().unwrap();
        assert_eq!(zeros.iter().map(|(_, m)| m).sum::<usize>(), 2);
        assert_eq!(plant.infinity_zeros(), 2);
    }

    #[test]
    fn benchmark_design_reproduces_printed_coefficients() {
        let plant = benchmark_plant().unwrap();
        let report = sensitivity_shape(&plant, 2048, &CeeOptions::default()).unwrap();

        // descending-power reference coefficients of the published design
        let s_num_expect = [1.0, -0.0414, 1.1873, -0.8951, -0.4795, -1.0224, -0.5470];
        let s_den_expect = [1.0, -0.0414, 1.5522, -0.0209, 0.5729, 0.0192, -0.0219];
        let s_num = report.s_num.real_coeffs().unwrap();
        let s_den = report.s_den.real_coeffs().unwrap();
        for (k, expect) in s_num_expect.iter().enumerate() {
            let got = s_num[6 - k];
            assert!(
                (got - expect).abs() < 1e-3,
                "S numerator z^{}: {} vs {}",
                6 - k,
                got,
                expect
            );
        }
        for (k, expect) in s_den_expect.iter().enumerate() {
            let got = s_den[6 - k];
            assert!(
                (got - expect).abs() < 1e-3,
                "S denominator z^{}: {} vs {}",
                6 - k,
                got,
                expect
            );
        }

        let c_num_expect = [0.3648, 0.08142, 0.434, 0.0];
        let c_den_expect = [1.0, 1.059, 1.142, 0.411];
        let c_num = report.c_num.real_coeffs().unwrap();
        let c_den = report.c_den.real_coeffs().unwrap();
        assert_eq!(c_den.len(), 4);
        for (k, expect) in c_num_expect.iter().enumerate() {
            let got = c_num.get(3 - k).copied().unwrap_or(0.0);
            assert!(
                (got - expect).abs() < 1e-3,
                "C numerator z^{}: {} vs {}",
                3 - k,
                got,
                expect
            );
        }
        for (k, expect) in c_den_expect.iter().enumerate() {
            assert!((c_den[3 - k] - expect).abs() < 1e-3);
        }

        // band specifications and the overall bound
        assert!(report.h_inf < 5.0);
        assert!(band_peak_db(&report.grid, 0.0, 0.3) <= -1.0);
        assert!(band_peak_db(&report.grid, 2.5, std::f64::consts::PI) <= 0.5);
        assert!(report.s_constraint_residual < 1e-7);
        assert!(report.s_pole_margin > 0.0);
    }

    #[test]
    fn trivial_stable_plant() {
        // stable plant with a double zero at infinity: S == 1, C == 0
        let plant = PlantSpec::new(
            Poly::one(),
            Poly::from_real(&[0.25, -0.2, 1.0]),
            5.0,
            vec![c64(0.3, 0.0)],
        )
        .unwrap();
        let report = sensitivity_shape(&plant, 64, &CeeOptions::default()).unwrap();
        assert!(report.c_num.is_zero());
        // S is the constant 1
        let one = report.s_num.eval(c64(0.7, 0.1)) / report.s_den.eval(c64(0.7, 0.1));
        assert!((one - C64::ONE).norm() < 1e-10);
        assert!((report.h_inf - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_zero_count_enforced() {
        let plant = PlantSpec::new(
            Poly::one(),
            Poly::from_real(&[0.25, -0.2, 1.0]),
            5.0,
            vec![c64(0.3, 0.0), c64(0.1, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            sensitivity_shape(&plant, 16, &CeeOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
