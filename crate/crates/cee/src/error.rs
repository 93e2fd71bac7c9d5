//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // polynomial / series arithmetic
    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("polynomial is not monic (leading coefficient {leading})")]
    NotMonic { leading: f64 },
    #[error("reversal order {order} is smaller than the degree {degree}")]
    ReverseOrder { order: usize, degree: usize },
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("denominator vanishes at the expansion point (|den(z0)| = {magnitude:.3e})")]
    PoleAtExpansionPoint { magnitude: f64 },
    #[error("improper rational function: numerator degree {num} exceeds denominator degree {den}")]
    ImproperRational { num: usize, den: usize },
    #[error("series composition requires a zero constant term in the inner series (got {0})")]
    SeriesConstantTerm(f64),
    #[error("coefficients are not real: largest imaginary residue {max_imag:.3e}")]
    NonRealCoefficients { max_imag: f64 },
    #[error("root finding is only supported for real-coefficient polynomials")]
    ComplexRootFinding,

    // linear algebra / homotopy
    #[error("matrix is not stable: spectral radius {spectral_radius:.6}")]
    UnstableMatrix { spectral_radius: f64 },
    #[error("{what} is ill-conditioned (estimate {cond:.3e})")]
    IllConditioned { what: String, cond: f64 },
    #[error("homotopy path failed at lambda = {lambda:.6}: {reason}")]
    PathFailure { lambda: f64, reason: String },
    #[error(
        "bottom block of the structured matrix is singular; by the rank criterion this \
         happens exactly when the observability indices are unequal"
    )]
    SingularStructuredBlock,
    #[error("least-squares system is rank deficient (rank {rank} of {cols} unknowns)")]
    RankDeficientLs { rank: usize, cols: usize },
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NonHermitian(f64),

    // interpolation data
    #[error("interpolation node ({re}, {im}) lies outside the open unit disc")]
    NodeOutsideDisc { re: f64, im: f64 },
    #[error("duplicate interpolation node ({re}, {im})")]
    DuplicateNode { re: f64, im: f64 },
    #[error("node ({re}, {im}) has no conjugate partner and the data is not self-conjugate")]
    MissingConjugate { re: f64, im: f64 },
    #[error("node ({re}, {im}): multiplicity must be >= 1 and match the jet length")]
    BadMultiplicity { re: f64, im: f64 },
    #[error("problem has no interpolation nodes")]
    EmptyProblem,
    #[error("no real node is available to serve as normalization base")]
    NoRealBaseNode,
    #[error("base value must have positive (symmetric) real part")]
    BaseValueNotPositive,
    #[error("problem must be normalized first (base node 0 with value 1/2)")]
    NotNormalized,
    #[error("interpolation data is not strictly Pick-feasible (min eigenvalue {min_eig:.3e})")]
    Infeasible { min_eig: f64 },
    #[error("covariance sequence has a non-positive Toeplitz matrix (min eigenvalue {min_eig:.3e})")]
    NonPositiveToeplitz { min_eig: f64 },
    #[error("computed quantity should be real; imaginary residue {residue:.3e} exceeds tolerance")]
    ImaginaryResidue { residue: f64 },

    // solver / workflow
    #[error("spectral prior must be a Schur polynomial (largest root modulus {max_root:.6})")]
    PriorNotSchur { max_root: f64 },
    #[error("shaping filter is unstable (largest pole modulus {max_pole:.6})")]
    UnstableFilter { max_pole: f64 },
    #[error("common-factor cancellation failed: no root of {poly} within {tol:.1e} of {target}")]
    CancellationFailure {
        poly: String,
        target: String,
        tol: f64,
    },
    #[error("solution violates {what}: {value:.3e} (tolerance {tol:.1e})")]
    SolutionCheckFailed { what: String, value: f64, tol: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
