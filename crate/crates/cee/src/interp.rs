//! Interpolation-problem data model, normalization, structural data
//! matrices (Z, e, W, V) and the generalized Pick feasibility test.
//!
//! Problems are jets of a real Carathéodory function at nodes inside the
//! open unit disc. Data must be self-conjugate; missing conjugate partners
//! are auto-completed and flagged. The solvers expect a normalized problem:
//! base node at the origin with value 1/2 (scalar) or I/2 (matrix).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_eigenvalues, spd_inv_sqrt, spd_sqrt, stein_solve, SteinProblem,
};
use crate::poly::{c64, C64, Poly, TruncatedSeries};

const NODE_MATCH_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------
// Problem types
// ---------------------------------------------------------------------

/// One interpolation node with its Taylor jet f(z_j), f'(z_j), f''(z_j)/2, ...
#[derive(Clone, Debug)]
pub struct Node {
    pub z: C64,
    pub jet: Vec<C64>,
}

impl Node {
    pub fn new(z: C64, jet: Vec<C64>) -> Self {
        Node { z, jet }
    }

    pub fn multiplicity(&self) -> usize {
        self.jet.len()
    }

    fn is_real(&self) -> bool {
        self.z.im.abs() <= NODE_MATCH_TOL
    }
}

/// Validated scalar interpolation problem.
#[derive(Clone, Debug)]
pub struct Problem {
    nodes: Vec<Node>,
}

/// Matrix-valued node: jet entries are ell x ell complex matrices.
#[derive(Clone, Debug)]
pub struct MatrixNode {
    pub z: C64,
    pub jet: Vec<DMatrix<C64>>,
}

impl MatrixNode {
    pub fn multiplicity(&self) -> usize {
        self.jet.len()
    }

    fn is_real(&self) -> bool {
        self.z.im.abs() <= NODE_MATCH_TOL
    }
}

/// Validated matrix interpolation problem.
#[derive(Clone, Debug)]
pub struct MatrixProblem {
    nodes: Vec<MatrixNode>,
    ell: usize,
}

/// Outcome of validation: the checked problem plus auto-completion flags.
#[derive(Clone, Debug)]
pub struct Validated<P> {
    pub problem: P,
    /// Nodes that were added as conjugate partners of one-sided input.
    pub completed: Vec<C64>,
    pub warnings: Vec<String>,
}

fn check_node_position(z: C64, seen: &[C64]) -> Result<()> {
    if z.norm() >= 1.0 {
        return Err(Error::NodeOutsideDisc { re: z.re, im: z.im });
    }
    for &other in seen {
        if (z - other).norm() <= NODE_MATCH_TOL {
            return Err(Error::DuplicateNode { re: z.re, im: z.im });
        }
    }
    Ok(())
}

impl Problem {
    /// Validate nodes: inside the disc, distinct, self-conjugate data.
    /// A non-real node without a partner gets one auto-completed.
    pub fn validate(nodes: Vec<Node>) -> Result<Validated<Problem>> {
        if nodes.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let mut out: Vec<Node> = Vec::new();
        let mut completed = Vec::new();
        let mut warnings = Vec::new();
        let mut seen: Vec<C64> = Vec::new();
        for node in &nodes {
            if node.jet.is_empty() {
                return Err(Error::BadMultiplicity {
                    re: node.z.re,
                    im: node.z.im,
                });
            }
            check_node_position(node.z, &seen)?;
            seen.push(node.z);
            if node.is_real() {
                let scale = node.jet.iter().map(|w| w.norm()).fold(1.0, f64::max);
                let imag = node.jet.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
                if imag > NODE_MATCH_TOL * scale {
                    return Err(Error::MissingConjugate {
                        re: node.z.re,
                        im: node.z.im,
                    });
                }
                out.push(Node {
                    z: c64(node.z.re, 0.0),
                    jet: node.jet.iter().map(|w| c64(w.re, 0.0)).collect(),
                });
            } else {
                out.push(node.clone());
                // find the partner among the inputs
                let partner = nodes
                    .iter()
                    .find(|m| (m.z - node.z.conj()).norm() <= NODE_MATCH_TOL);
                match partner {
                    Some(m) => {
                        let ok = m.jet.len() == node.jet.len()
                            && m.jet
                                .iter()
                                .zip(node.jet.iter())
                                .all(|(a, b)| (a - b.conj()).norm() <= 1e-8 * (1.0 + b.norm()));
                        if !ok {
                            return Err(Error::MissingConjugate {
                                re: node.z.re,
                                im: node.z.im,
                            });
                        }
                    }
                    None => {
                        let z = node.z.conj();
                        check_node_position(z, &seen)?;
                        seen.push(z);
                        out.push(Node {
                            z,
                            jet: node.jet.iter().map(|w| w.conj()).collect(),
                        });
                        completed.push(z);
                        warnings
                            .push(format!("added conjugate partner for node ({}, {})", z.re, z.im));
                    }
                }
            }
        }
        Ok(Validated {
            problem: Problem { nodes: out },
            completed,
            warnings,
        })
    }

    /// Construct directly from checked parts (crate-internal).
    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node>) -> Problem {
        Problem { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Total interpolation order n = sum of multiplicities minus one.
    pub fn order(&self) -> usize {
        self.nodes.iter().map(|n| n.multiplicity()).sum::<usize>() - 1
    }

    /// Base node at the origin with value 1/2.
    pub fn is_normalized(&self) -> bool {
        let base = &self.nodes[0];
        base.z.norm() <= NODE_MATCH_TOL && (base.jet[0] - c64(0.5, 0.0)).norm() <= 1e-9
    }

    /// Covariance-type problem: a single node at the origin with Taylor
    /// coefficients (1/2, c_1, ..., c_n).
    pub fn from_covariances(c: &[f64]) -> Result<Validated<Problem>> {
        if c.is_empty() {
            return Err(Error::EmptyProblem);
        }
        if (c[0] - 0.5).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "covariance data must be normalized with c0 = 1/2, got c0 = {}",
                c[0]
            )));
        }
        let jet = c.iter().map(|&x| c64(x, 0.0)).collect();
        Problem::validate(vec![Node::new(C64::ZERO, jet)])
    }
}

impl MatrixProblem {
    pub fn validate(nodes: Vec<MatrixNode>, ell: usize) -> Result<Validated<MatrixProblem>> {
        if nodes.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let mut out: Vec<MatrixNode> = Vec::new();
        let mut completed = Vec::new();
        let mut warnings = Vec::new();
        let mut seen: Vec<C64> = Vec::new();
        for node in &nodes {
            if node.jet.is_empty() {
                return Err(Error::BadMultiplicity {
                    re: node.z.re,
                    im: node.z.im,
                });
            }
            for w in &node.jet {
                if w.nrows() != ell || w.ncols() != ell {
                    return Err(Error::InvalidInput(format!(
                        "jet block must be {ell} x {ell}, got {} x {}",
                        w.nrows(),
                        w.ncols()
                    )));
                }
            }
            check_node_position(node.z, &seen)?;
            seen.push(node.z);
            if node.is_real() {
                let imag = node
                    .jet
                    .iter()
                    .map(|w| w.iter().map(|c| c.im.abs()).fold(0.0, f64::max))
                    .fold(0.0, f64::max);
                let scale = node
                    .jet
                    .iter()
                    .map(|w| w.norm())
                    .fold(1.0_f64, f64::max);
                if imag > NODE_MATCH_TOL * scale {
                    return Err(Error::MissingConjugate {
                        re: node.z.re,
                        im: node.z.im,
                    });
                }
                out.push(MatrixNode {
                    z: c64(node.z.re, 0.0),
                    jet: node.jet.iter().map(|w| w.map(|c| c64(c.re, 0.0))).collect(),
                });
            } else {
                out.push(node.clone());
                let partner = nodes
                    .iter()
                    .find(|m| (m.z - node.z.conj()).norm() <= NODE_MATCH_TOL);
                match partner {
                    Some(m) => {
                        let ok = m.jet.len() == node.jet.len()
                            && m.jet.iter().zip(node.jet.iter()).all(|(a, b)| {
                                (a - b.map(|c| c.conj())).norm() <= 1e-8 * (1.0 + b.norm())
                            });
                        if !ok {
                            return Err(Error::MissingConjugate {
                                re: node.z.re,
                                im: node.z.im,
                            });
                        }
                    }
                    None => {
                        let z = node.z.conj();
                        check_node_position(z, &seen)?;
                        seen.push(z);
                        out.push(MatrixNode {
                            z,
                            jet: node.jet.iter().map(|w| w.map(|c| c.conj())).collect(),
                        });
                        completed.push(z);
                        warnings
                            .push(format!("added conjugate partner for node ({}, {})", z.re, z.im));
                    }
                }
            }
        }
        Ok(Validated {
            problem: MatrixProblem { nodes: out, ell },
            completed,
            warnings,
        })
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<MatrixNode>, ell: usize) -> MatrixProblem {
        MatrixProblem { nodes, ell }
    }

    pub fn nodes(&self) -> &[MatrixNode] {
        &self.nodes
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn order(&self) -> usize {
        self.nodes.iter().map(|n| n.multiplicity()).sum::<usize>() - 1
    }

    pub fn is_normalized(&self) -> bool {
        let base = &self.nodes[0];
        let half = DMatrix::<C64>::identity(self.ell, self.ell) * c64(0.5, 0.0);
        base.z.norm() <= NODE_MATCH_TOL && (&base.jet[0] - half).norm() <= 1e-9
    }

    /// Covariance-type problem from matrix lags (C_0 = I/2 required).
    pub fn from_covariances(lags: &[DMatrix<f64>]) -> Result<Validated<MatrixProblem>> {
        if lags.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let ell = lags[0].nrows();
        let half = DMatrix::<f64>::identity(ell, ell) * 0.5;
        if (&lags[0] - half).norm() > 1e-9 {
            return Err(Error::InvalidInput(
                "matrix covariance data must be normalized with C0 = I/2".into(),
            ));
        }
        let jet = lags.iter().map(|m| m.map(|x| c64(x, 0.0))).collect();
        MatrixProblem::validate(vec![MatrixNode { z: C64::ZERO, jet }], ell)
    }

    /// Covariance-type problem from raw lags C_k = E(y(t+k) y(t)'). The
    /// Taylor jet of the positive-real function carries half the variance:
    /// (C_0/2, C_1, C_2, ...). Normalize afterwards to reach C_0 = I.
    pub fn from_raw_covariances(lags: &[DMatrix<f64>]) -> Result<Validated<MatrixProblem>> {
        if lags.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let ell = lags[0].nrows();
        let jet = lags
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let scaled = if k == 0 { m * 0.5 } else { m.clone() };
                scaled.map(|x| c64(x, 0.0))
            })
            .collect();
        MatrixProblem::validate(vec![MatrixNode { z: C64::ZERO, jet }], ell)
    }
}

// ---------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------

/// Record of the disc automorphism and value scaling applied by
/// [`normalize`]; needed to undo both maps on the interpolant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transform {
    /// Real base node mapped to the origin by beta(z) = (z - alpha)/(1 - alpha z).
    pub alpha: f64,
    /// Jet values were multiplied by this scale (scalar case: 1/(2 w00)).
    pub scale: f64,
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            alpha: 0.0,
            scale: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 0.0 && self.scale == 1.0
    }

    pub fn map_node(&self, z: C64) -> C64 {
        (z - self.alpha) / (c64(1.0, 0.0) - z * self.alpha)
    }

    pub fn unmap_node(&self, zeta: C64) -> C64 {
        (zeta + self.alpha) / (c64(1.0, 0.0) + zeta * self.alpha)
    }

    fn mobius_num_den(&self, inverse: bool) -> (Poly, Poly) {
        if inverse {
            (
                Poly::from_real(&[self.alpha, 1.0]),
                Poly::from_real(&[1.0, self.alpha]),
            )
        } else {
            (
                Poly::from_real(&[-self.alpha, 1.0]),
                Poly::from_real(&[1.0, -self.alpha]),
            )
        }
    }

    /// Series of beta(z_j + t) - beta(z_j) (or the inverse map), the inner
    /// series used to carry jets through the node map.
    fn inner_series(&self, at: C64, order: usize, inverse: bool) -> Result<TruncatedSeries> {
        let (num, den) = self.mobius_num_den(inverse);
        let jet = crate::poly::rational_jet(&num, &den, at, order)?;
        let mut coeffs = jet.coeffs().to_vec();
        coeffs[0] = C64::ZERO;
        Ok(TruncatedSeries::new(&coeffs, order))
    }

    /// Carry an original jet at z into normalized coordinates.
    pub fn normalize_jet(&self, jet: &[C64], z: C64) -> Result<Vec<C64>> {
        let order = jet.len() - 1;
        let zeta = self.map_node(z);
        let inner = self.inner_series(zeta, order, true)?;
        let outer = TruncatedSeries::new(jet, order);
        let composed = outer.compose(&inner, order)?;
        Ok(composed
            .coeffs()
            .iter()
            .map(|&c| c * self.scale)
            .collect())
    }

    /// Carry a normalized jet at beta(z) back to the original coordinates.
    pub fn denormalize_jet(&self, jet: &[C64], z: C64) -> Result<Vec<C64>> {
        let order = jet.len() - 1;
        let inner = self.inner_series(z, order, false)?;
        let outer = TruncatedSeries::new(jet, order);
        let composed = outer.compose(&inner, order)?;
        Ok(composed
            .coeffs()
            .iter()
            .map(|&c| c / self.scale)
            .collect())
    }
}

fn pick_base(positions: &[(C64, bool)]) -> Result<usize> {
    // prefer an exact origin node, otherwise the real node closest to it
    let mut best: Option<(usize, f64)> = None;
    for (idx, &(z, real)) in positions.iter().enumerate() {
        if !real {
            continue;
        }
        let d = z.norm();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((idx, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoRealBaseNode)
}

/// Normalize a scalar problem: Möbius-map a real base node to the origin and
/// rescale values so the base value becomes 1/2. Returns the normalized
/// problem (base node first) and the transform record.
pub fn normalize(problem: &Problem) -> Result<(Problem, Transform)> {
    let positions: Vec<(C64, bool)> = problem
        .nodes
        .iter()
        .map(|n| (n.z, n.is_real()))
        .collect();
    let base_idx = pick_base(&positions)?;
    let base = &problem.nodes[base_idx];
    let w00 = base.jet[0];
    if w00.re <= 0.0 || w00.im.abs() > 1e-9 * w00.norm().max(1.0) {
        return Err(Error::BaseValueNotPositive);
    }
    let transform = Transform {
        alpha: base.z.re,
        scale: 1.0 / (2.0 * w00.re),
    };
    let mut order: Vec<usize> = (0..problem.nodes.len()).collect();
    order.swap(0, base_idx);
    let mut nodes = Vec::with_capacity(problem.nodes.len());
    for idx in order {
        let node = &problem.nodes[idx];
        let jet = transform.normalize_jet(&node.jet, node.z)?;
        let mut z = transform.map_node(node.z);
        if idx == base_idx {
            z = C64::ZERO;
        }
        nodes.push(Node { z, jet });
    }
    // pin the base value exactly
    nodes[0].jet[0] = c64(0.5, 0.0);
    Ok((Problem { nodes }, transform))
}

/// Matrix normalization record: congruence by S after removing the skew part
/// of the base value, with the same disc automorphism as the scalar case.
#[derive(Clone, Debug)]
pub struct MatrixTransform {
    pub alpha: f64,
    /// Symmetric positive definite congruence factor (2 sym(W00))^(-1/2).
    pub s: DMatrix<f64>,
    pub s_inv: DMatrix<f64>,
    /// Skew part of the base value, removed before the congruence.
    pub omega: DMatrix<f64>,
}

impl MatrixTransform {
    pub fn map_node(&self, z: C64) -> C64 {
        (z - self.alpha) / (c64(1.0, 0.0) - z * self.alpha)
    }

    fn scalar_part(&self) -> Transform {
        Transform {
            alpha: self.alpha,
            scale: 1.0,
        }
    }

    /// Normalized jet: Möbius composition, skew shift on the 0 term, then the
    /// congruence S (W - delta_k0 Omega) S.
    pub fn normalize_jet(&self, jet: &[DMatrix<C64>], z: C64) -> Result<Vec<DMatrix<C64>>> {
        let composed = compose_matrix_jet(jet, &self.scalar_part(), z, true)?;
        let s = self.s.map(|x| c64(x, 0.0));
        let omega = self.omega.map(|x| c64(x, 0.0));
        Ok(composed
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let shifted = if k == 0 { w - &omega } else { w.clone() };
                &s * shifted * &s
            })
            .collect())
    }

    /// Original-coordinate jet of a solved interpolant:
    /// F(z) = S^-1 F~(beta(z)) S^-1 + Omega.
    pub fn denormalize_jet(&self, jet: &[DMatrix<C64>], z: C64) -> Result<Vec<DMatrix<C64>>> {
        let s_inv = self.s_inv.map(|x| c64(x, 0.0));
        let omega = self.omega.map(|x| c64(x, 0.0));
        let unscaled: Vec<DMatrix<C64>> = jet.iter().map(|w| &s_inv * w * &s_inv).collect();
        let composed = compose_matrix_jet(&unscaled, &self.scalar_part(), z, false)?;
        Ok(composed
            .iter()
            .enumerate()
            .map(|(k, w)| if k == 0 { w + &omega } else { w.clone() })
            .collect())
    }
}

/// Compose a matrix jet with the Möbius inner series entrywise.
fn compose_matrix_jet(
    jet: &[DMatrix<C64>],
    t: &Transform,
    z: C64,
    inverse: bool,
) -> Result<Vec<DMatrix<C64>>> {
    let order = jet.len() - 1;
    let ell = jet[0].nrows();
    let at = if inverse { t.map_node(z) } else { z };
    let inner = t.inner_series(at, order, inverse)?;
    let mut out = vec![DMatrix::<C64>::zeros(ell, ell); jet.len()];
    for i in 0..ell {
        for j in 0..ell {
            let entry_jet: Vec<C64> = jet.iter().map(|w| w[(i, j)]).collect();
            let series = TruncatedSeries::new(&entry_jet, order);
            let composed = series.compose(&inner, order)?;
            for (k, item) in out.iter_mut().enumerate() {
                item[(i, j)] = composed.coeff(k);
            }
        }
    }
    Ok(out)
}

/// Normalize a matrix problem. The base value must have a positive definite
/// symmetric part; its skew part is absorbed into the transform record.
pub fn normalize_matrix(problem: &MatrixProblem) -> Result<(MatrixProblem, MatrixTransform)> {
    let positions: Vec<(C64, bool)> = problem
        .nodes
        .iter()
        .map(|n| (n.z, n.is_real()))
        .collect();
    let base_idx = pick_base(&positions)?;
    let base = &problem.nodes[base_idx];
    let w00 = &base.jet[0];
    let imag = w00.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag > 1e-9 * w00.norm().max(1.0) {
        return Err(Error::BaseValueNotPositive);
    }
    let w00_re = w00.map(|c| c.re);
    let sym = (&w00_re + w00_re.transpose()) * 0.5;
    let omega = (&w00_re - w00_re.transpose()) * 0.5;
    let s = spd_inv_sqrt(&(&sym * 2.0)).map_err(|_| Error::BaseValueNotPositive)?;
    let s_inv = spd_sqrt(&(&sym * 2.0))?;
    let transform = MatrixTransform {
        alpha: base.z.re,
        s,
        s_inv,
        omega,
    };
    let mut order: Vec<usize> = (0..problem.nodes.len()).collect();
    order.swap(0, base_idx);
    let mut nodes = Vec::with_capacity(problem.nodes.len());
    for idx in order {
        let node = &problem.nodes[idx];
        let jet = transform.normalize_jet(&node.jet, node.z)?;
        let mut z = transform.map_node(node.z);
        if idx == base_idx {
            z = C64::ZERO;
        }
        nodes.push(MatrixNode { z, jet });
    }
    let ell = problem.ell;
    nodes[0].jet[0] = DMatrix::<C64>::identity(ell, ell) * c64(0.5, 0.0);
    Ok((MatrixProblem { nodes, ell }, transform))
}

// ---------------------------------------------------------------------
// Data matrices
// ---------------------------------------------------------------------

/// The structural matrices of a problem: block Jordan-like Z, block unit
/// vector e, block-Toeplitz value matrix W and the reachability matrix V.
#[derive(Clone, Debug)]
pub struct DataMatrices {
    pub z: DMatrix<C64>,
    pub e: DVector<C64>,
    pub w: DMatrix<C64>,
    pub v: DMatrix<C64>,
    pub v_condition: f64,
    pub warnings: Vec<String>,
}

fn block_z(nodes: &[(C64, usize)]) -> (DMatrix<C64>, DVector<C64>) {
    let total: usize = nodes.iter().map(|(_, m)| m).sum();
    let mut z = DMatrix::<C64>::zeros(total, total);
    let mut e = DVector::<C64>::zeros(total);
    let mut off = 0;
    for &(zj, m) in nodes {
        for k in 0..m {
            z[(off + k, off + k)] = zj;
            if k + 1 < m {
                z[(off + k + 1, off + k)] = C64::ONE;
            }
        }
        e[off] = C64::ONE;
        off += m;
    }
    (z, e)
}

/// Z and e for a node/multiplicity list (the filter-bank structure).
pub fn bank_matrices(nodes: &[(C64, usize)]) -> (DMatrix<C64>, DVector<C64>) {
    block_z(nodes)
}

fn condition_via_embedding(v: &DMatrix<C64>) -> f64 {
    let n = v.nrows();
    let mut re = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let x = v[(i, j)];
            re[(i, j)] = x.re;
            re[(i, j + n)] = -x.im;
            re[(i + n, j)] = x.im;
            re[(i + n, j + n)] = x.re;
        }
    }
    let sv = re.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    smax / smin.max(1e-300)
}

/// Build Z, e, W, V for a validated scalar problem.
pub fn build_data_matrices(problem: &Problem) -> Result<DataMatrices> {
    let layout: Vec<(C64, usize)> = problem
        .nodes
        .iter()
        .map(|n| (n.z, n.multiplicity()))
        .collect();
    let (z, e) = block_z(&layout);
    let total = z.nrows();

    let mut w = DMatrix::<C64>::zeros(total, total);
    let mut off = 0;
    for node in &problem.nodes {
        let m = node.multiplicity();
        for r in 0..m {
            for c in 0..=r {
                w[(off + r, off + c)] = node.jet[r - c];
            }
        }
        off += m;
    }

    let mut v = DMatrix::<C64>::zeros(total, total);
    let mut col = e.clone();
    for k in 0..total {
        v.set_column(k, &col);
        col = &z * col;
    }

    let v_condition = condition_via_embedding(&v);
    let mut warnings = Vec::new();
    if v_condition > 1e12 {
        warnings.push(format!(
            "reachability matrix V is badly conditioned ({v_condition:.3e}); nodes may be clustered"
        ));
    }
    Ok(DataMatrices {
        z,
        e,
        w,
        v,
        v_condition,
        warnings,
    })
}

/// Matrix-problem data: Z and e as in the scalar case plus the big
/// block-Toeplitz value matrix W of size ell(n+1).
#[derive(Clone, Debug)]
pub struct MatrixDataMatrices {
    pub z: DMatrix<C64>,
    pub e: DVector<C64>,
    pub w: DMatrix<C64>,
}

pub fn build_matrix_data(problem: &MatrixProblem) -> Result<MatrixDataMatrices> {
    let layout: Vec<(C64, usize)> = problem
        .nodes
        .iter()
        .map(|n| (n.z, n.multiplicity()))
        .collect();
    let (z, e) = block_z(&layout);
    let ell = problem.ell;
    let total = z.nrows();
    let mut w = DMatrix::<C64>::zeros(ell * total, ell * total);
    let mut off = 0;
    for node in &problem.nodes {
        let m = node.multiplicity();
        for r in 0..m {
            for c in 0..=r {
                w.view_mut((ell * (off + r), ell * (off + c)), (ell, ell))
                    .copy_from(&node.jet[r - c]);
            }
        }
        off += m;
    }
    Ok(MatrixDataMatrices { z, e, w })
}

// ---------------------------------------------------------------------
// Pick test
// ---------------------------------------------------------------------

/// Generalized Pick matrix, its minimum eigenvalue and the feasibility flag.
#[derive(Clone, Debug)]
pub struct PickReport {
    pub sigma: DMatrix<C64>,
    pub min_eigenvalue: f64,
    pub feasible: bool,
}

/// Solve X = Z X Z* + e e* for a problem's data matrices.
pub fn reachability_gramian(z: &DMatrix<C64>, e: &DVector<C64>) -> Result<DMatrix<C64>> {
    stein_solve(&SteinProblem::lyapunov(z.clone(), e * e.adjoint()))
}

/// Scalar Pick test: Sigma = W X + X W*, feasible iff positive definite.
pub fn pick_test(problem: &Problem) -> Result<PickReport> {
    pick_test_from(&build_data_matrices(problem)?)
}

/// Pick test on already-built data matrices.
pub fn pick_test_from(data: &DataMatrices) -> Result<PickReport> {
    let x = reachability_gramian(&data.z, &data.e)?;
    let sigma = &data.w * &x + &x * data.w.adjoint();
    let min_eigenvalue = hermitian_eigenvalues(&sigma)?[0];
    Ok(PickReport {
        sigma,
        min_eigenvalue,
        feasible: min_eigenvalue > 0.0,
    })
}

/// Matrix Pick test: Sigma = W (X kron I) + (X kron I) W*.
pub fn pick_test_matrix(problem: &MatrixProblem) -> Result<PickReport> {
    let data = build_matrix_data(problem)?;
    let x = reachability_gramian(&data.z, &data.e)?;
    let ell = problem.ell;
    let xk = x.kronecker(&DMatrix::<C64>::identity(ell, ell));
    let sigma = &data.w * &xk + &xk * data.w.adjoint();
    let min_eigenvalue = hermitian_eigenvalues(&sigma)?[0];
    Ok(PickReport {
        sigma,
        min_eigenvalue,
        feasible: min_eigenvalue > 0.0,
    })
}

// ---------------------------------------------------------------------
// Structured W from a bank covariance
// ---------------------------------------------------------------------

/// Result of the structured least-squares fit of W X + X W* = Sigma_u.
#[derive(Clone, Debug)]
pub struct StructuredW {
    pub problem: Validated<Problem>,
    pub w: DMatrix<C64>,
    pub residual: f64,
}

/// Recover the block-Toeplitz value matrix W (one jet per node block) from a
/// Hermitian bank covariance Sigma_u by linear least squares over the
/// structured class, using W X + X W* = Sigma_u.
pub fn structured_w_from_covariance(
    sigma_u: &DMatrix<C64>,
    bank: &[(C64, usize)],
) -> Result<StructuredW> {
    let asym = (sigma_u - sigma_u.adjoint()).norm();
    if asym > 1e-8 * sigma_u.norm().max(1.0) {
        return Err(Error::NonHermitian(asym));
    }
    let (z, e) = block_z(bank);
    let total = z.nrows();
    if sigma_u.nrows() != total || sigma_u.ncols() != total {
        return Err(Error::InvalidInput(format!(
            "covariance dimension {} does not match bank order {}",
            sigma_u.nrows(),
            total
        )));
    }
    let x = reachability_gramian(&z, &e)?;

    // free parameters: real nodes carry real jets; the first node of a
    // conjugate pair carries a complex jet, its partner is forced conjugate
    #[derive(Clone, Copy)]
    enum Param {
        Real { block: usize, k: usize },
        Re { block: usize, partner: usize, k: usize },
        Im { block: usize, partner: usize, k: usize },
    }
    let mut params: Vec<Param> = Vec::new();
    let mut handled = vec![false; bank.len()];
    for (j, &(zj, m)) in bank.iter().enumerate() {
        if handled[j] {
            continue;
        }
        if zj.im.abs() <= NODE_MATCH_TOL {
            for k in 0..m {
                params.push(Param::Real { block: j, k });
            }
            handled[j] = true;
        } else {
            let partner = bank
                .iter()
                .position(|&(zz, _)| (zz - zj.conj()).norm() <= NODE_MATCH_TOL)
                .ok_or(Error::MissingConjugate {
                    re: zj.re,
                    im: zj.im,
                })?;
            for k in 0..m {
                params.push(Param::Re { block: j, partner, k });
                params.push(Param::Im { block: j, partner, k });
            }
            handled[j] = true;
            handled[partner] = true;
        }
    }

    let offsets: Vec<usize> = bank
        .iter()
        .scan(0usize, |acc, &(_, m)| {
            let off = *acc;
            *acc += m;
            Some(off)
        })
        .collect();

    let basis_w = |p: &Param| -> DMatrix<C64> {
        let mut w = DMatrix::<C64>::zeros(total, total);
        let mut put = |block: usize, k: usize, val: C64| {
            let off = offsets[block];
            let m = bank[block].1;
            for r in k..m {
                w[(off + r, off + r - k)] = val;
            }
        };
        match *p {
            Param::Real { block, k } => put(block, k, C64::ONE),
            Param::Re { block, partner, k } => {
                put(block, k, C64::ONE);
                put(partner, k, C64::ONE);
            }
            Param::Im { block, partner, k } => {
                put(block, k, c64(0.0, 1.0));
                put(partner, k, c64(0.0, -1.0));
            }
        }
        w
    };

    let rows = 2 * total * total;
    let cols = params.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (cidx, p) in params.iter().enumerate() {
        let bw = basis_w(p);
        let img = &bw * &x + &x * bw.adjoint();
        for (k, val) in img.iter().enumerate() {
            a[(2 * k, cidx)] = val.re;
            a[(2 * k + 1, cidx)] = val.im;
        }
    }
    let mut rhs = DVector::<f64>::zeros(rows);
    for (k, val) in sigma_u.iter().enumerate() {
        rhs[2 * k] = val.re;
        rhs[2 * k + 1] = val.im;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < cols {
        return Err(Error::RankDeficientLs { rank, cols });
    }
    let theta = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let residual = (&a * &theta - &rhs).norm();

    // assemble W and the node jets
    let mut w = DMatrix::<C64>::zeros(total, total);
    let mut jets: Vec<Vec<C64>> = bank.iter().map(|&(_, m)| vec![C64::ZERO; m]).collect();
    for (cidx, p) in params.iter().enumerate() {
        let t = theta[cidx];
        match *p {
            Param::Real { block, k } => jets[block][k] += c64(t, 0.0),
            Param::Re { block, partner, k } => {
                jets[block][k] += c64(t, 0.0);
                jets[partner][k] += c64(t, 0.0);
            }
            Param::Im { block, partner, k } => {
                jets[block][k] += c64(0.0, t);
                jets[partner][k] += c64(0.0, -t);
            }
        }
    }
    for (j, &(_, m)) in bank.iter().enumerate() {
        let off = offsets[j];
        for r in 0..m {
            for c in 0..=r {
                w[(off + r, off + c)] = jets[j][r - c];
            }
        }
    }
    let nodes: Vec<Node> = bank
        .iter()
        .zip(jets.iter())
        .map(|(&(zj, _), jet)| Node::new(zj, jet.clone()))
        .collect();
    let problem = Problem::validate(nodes)?;
    Ok(StructuredW {
        problem,
        w,
        residual,
    })
}

// ---------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JetEntryJson {
    Scalar(ComplexJson),
    Matrix(Vec<Vec<ComplexJson>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeJson {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub jet: Vec<JetEntryJson>,
}

/// Problem file schema. Conjugate partners may be omitted; validation
/// auto-completes and flags them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    #[serde(default = "default_ell")]
    pub ell: usize,
    pub nodes: Vec<NodeJson>,
}

fn default_ell() -> usize {
    1
}

/// A parsed problem: scalar or matrix valued.
#[derive(Clone, Debug)]
pub enum AnyProblem {
    Scalar(Validated<Problem>),
    Matrix(Validated<MatrixProblem>),
}

impl ProblemJson {
    pub fn parse(text: &str) -> Result<ProblemJson> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_problem(self) -> Result<AnyProblem> {
        for n in &self.nodes {
            if n.multiplicity != n.jet.len() {
                return Err(Error::BadMultiplicity { re: n.re, im: n.im });
            }
        }
        if self.ell == 1 {
            let nodes = self
                .nodes
                .iter()
                .map(|n| {
                    let jet = n
                        .jet
                        .iter()
                        .map(|e| match e {
                            JetEntryJson::Scalar(c) => Ok(c64(c.re, c.im)),
                            JetEntryJson::Matrix(m) if m.len() == 1 && m[0].len() == 1 => {
                                Ok(c64(m[0][0].re, m[0][0].im))
                            }
                            _ => Err(Error::InvalidInput(
                                "scalar problem with matrix jet entries".into(),
                            )),
                        })
                        .collect::<Result<Vec<C64>>>()?;
                    Ok(Node::new(c64(n.re, n.im), jet))
                })
                .collect::<Result<Vec<Node>>>()?;
            Ok(AnyProblem::Scalar(Problem::validate(nodes)?))
        } else {
            let ell = self.ell;
            let nodes = self
                .nodes
                .iter()
                .map(|n| {
                    let jet = n
                        .jet
                        .iter()
                        .map(|e| match e {
                            JetEntryJson::Matrix(rows) => {
                                if rows.len() != ell || rows.iter().any(|r| r.len() != ell) {
                                    return Err(Error::InvalidInput(format!(
                                        "jet entries must be {ell} x {ell} matrices"
                                    )));
                                }
                                Ok(DMatrix::from_fn(ell, ell, |i, j| {
                                    c64(rows[i][j].re, rows[i][j].im)
                                }))
                            }
                            JetEntryJson::Scalar(_) => Err(Error::InvalidInput(
                                "matrix problem with scalar jet entries".into(),
                            )),
                        })
                        .collect::<Result<Vec<DMatrix<C64>>>>()?;
                    Ok(MatrixNode {
                        z: c64(n.re, n.im),
                        jet,
                    })
                })
                .collect::<Result<Vec<MatrixNode>>>()?;
            Ok(AnyProblem::Matrix(MatrixProblem::validate(nodes, ell)?))
        }
    }

    pub fn from_scalar(problem: &Problem) -> ProblemJson {
        ProblemJson {
            ell: 1,
            nodes: problem
                .nodes
                .iter()
                .map(|n| NodeJson {
                    re: n.z.re,
                    im: n.z.im,
                    multiplicity: n.multiplicity(),
                    jet: n
                        .jet
                        .iter()
                        .map(|w| JetEntryJson::Scalar(ComplexJson { re: w.re, im: w.im }))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_matrix(problem: &MatrixProblem) -> ProblemJson {
        ProblemJson {
            ell: problem.ell,
            nodes: problem
                .nodes
                .iter()
                .map(|n| NodeJson {
                    re: n.z.re,
                    im: n.z.im,
                    multiplicity: n.multiplicity(),
                    jet: n
                        .jet
                        .iter()
                        .map(|w| {
                            JetEntryJson::Matrix(
                                (0..problem.ell)
                                    .map(|i| {
                                        (0..problem.ell)
                                            .map(|j| ComplexJson {
                                                re: w[(i, j)].re,
                                                im: w[(i, j)].im,
                                            })
                                            .collect()
                                    })
                                    .collect(),
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
