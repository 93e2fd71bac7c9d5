//! Command-line front end: problem parsing, subcommand dispatch and
//! machine-readable outputs (solution JSON plus CSV tables).
//!
//! Exit codes: 0 success, 2 infeasible data, 3 numerical failure,
//! 4 input error.

mod io;
mod model;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use cee::apps::shape::PlantJson;
use cee::apps::three::{BankJson, ThreeData};
use cee::apps::{self, ShapingFilter};
use cee::interp::{
    normalize, normalize_matrix, pick_test, pick_test_matrix, AnyProblem, MatrixProblem,
    Problem, ProblemJson, Transform,
};
use cee::matrix::{det_poly, matrix_homotopy_ab, solve_matrix, MatrixPrior};
use cee::poly::{c64, MatrixPoly, Poly};
use cee::scalar::{
    homotopy_ab, normalize_covariances, solve, vec_to_monic, CeeOptions, CeeSolution,
    SpectralPrior,
};
use cee::Error;

use model::SolutionJson;

#[derive(Parser)]
#[command(
    name = "cee",
    about = "Degree-constrained analytic interpolation and covariance extension",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output directory for solution JSON and CSV tables.
    #[arg(long, default_value = "cee-out")]
    out: PathBuf,
    /// Prior: "max-entropy", ascending comma-separated coefficients of a
    /// monic polynomial ("c0,c1,...,1"), or @file.json.
    #[arg(long, default_value = "max-entropy")]
    prior: String,
    /// Relative rank threshold for degree diagnostics.
    #[arg(long, default_value_t = 1e-2)]
    rank_tol: f64,
    /// Residual tolerance enforced on solution invariants.
    #[arg(long, default_value_t = 1e-8)]
    residual_tol: f64,
    /// Seed for simulation-backed runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Frequency grid size for CSV tables.
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a general scalar interpolation problem from a problem JSON.
    Interp {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Covariance extension from a scalar covariance sequence.
    Covext {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Matrix covariance extension / matrix interpolation.
    Mimo {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// High-resolution spectral estimation through a filter bank.
    Three {
        /// Time-series CSV (single column). Mutually exclusive with --simulate.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Filter JSON {"sigma": [...], "a": [...], "rho": r} to simulate.
        #[arg(long)]
        simulate: Option<PathBuf>,
        /// Sample count for --simulate.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Bank specification JSON.
        #[arg(long)]
        bank: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sensitivity shaping from a plant specification.
    Shape {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Rank-based model reduction of a solved problem.
    Reduce {
        /// A solution JSON produced by another subcommand.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Validate a problem file and run the Pick test, or re-verify a
    /// solution file's stated residuals.
    Check {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Infeasible { .. } | Error::NonPositiveToeplitz { .. } => 2,
        Error::PathFailure { .. }
        | Error::IllConditioned { .. }
        | Error::UnstableMatrix { .. }
        | Error::ImaginaryResidue { .. }
        | Error::SingularStructuredBlock
        | Error::RankDeficientLs { .. }
        | Error::SolutionCheckFailed { .. }
        | Error::CancellationFailure { .. }
        | Error::UnstableFilter { .. }
        | Error::PoleAtExpansionPoint { .. } => 3,
        _ => 4,
    }
}

fn read_file(path: &Path) -> cee::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write_err(e: std::io::Error) -> Error {
    Error::InvalidInput(format!("write failed: {e}"))
}

fn options(common: &CommonArgs) -> CeeOptions {
    let mut opts = CeeOptions::default();
    opts.rank_tol = common.rank_tol;
    opts.cee_residual_tol = common.residual_tol;
    opts.positivity_tol = common.residual_tol;
    // jets are checked one decade looser than the equation residuals
    opts.interpolation_tol = common.residual_tol * 10.0;
    opts
}

// ---------------------------------------------------------------------
// Prior parsing
// ---------------------------------------------------------------------

#[derive(Deserialize)]
struct PriorFile {
    #[serde(default)]
    coeffs: Option<Vec<f64>>,
    #[serde(default)]
    matrix_coeffs: Option<Vec<Vec<Vec<f64>>>>,
}

enum PriorSpec {
    MaxEntropy,
    Scalar(Poly),
    Matrix(MatrixPoly),
}

fn parse_prior(text: &str) -> cee::Result<PriorSpec> {
    if text == "max-entropy" {
        return Ok(PriorSpec::MaxEntropy);
    }
    if let Some(path) = text.strip_prefix('@') {
        let parsed: PriorFile = serde_json::from_str(&read_file(Path::new(path))?)?;
        if let Some(rows) = parsed.matrix_coeffs {
            return Ok(PriorSpec::Matrix(model::rows_to_mpoly(&rows)?));
        }
        if let Some(coeffs) = parsed.coeffs {
            return Ok(PriorSpec::Scalar(Poly::from_real(&coeffs)));
        }
        return Err(Error::InvalidInput(
            "prior file needs \"coeffs\" or \"matrix_coeffs\"".into(),
        ));
    }
    let coeffs: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match coeffs {
        Ok(c) if !c.is_empty() => Ok(PriorSpec::Scalar(Poly::from_real(&c))),
        _ => Err(Error::InvalidInput(format!(
            "cannot parse prior specification {text:?}"
        ))),
    }
}

fn scalar_prior(common: &CommonArgs, n: usize) -> cee::Result<SpectralPrior> {
    match parse_prior(&common.prior)? {
        PriorSpec::MaxEntropy => Ok(SpectralPrior::max_entropy(n)),
        PriorSpec::Scalar(p) => SpectralPrior::new(p),
        PriorSpec::Matrix(_) => Err(Error::InvalidInput(
            "matrix prior supplied to a scalar problem".into(),
        )),
    }
}

fn matrix_prior(common: &CommonArgs, n: usize, ell: usize) -> cee::Result<MatrixPrior> {
    match parse_prior(&common.prior)? {
        PriorSpec::MaxEntropy => Ok(MatrixPrior::max_entropy(n, ell)),
        PriorSpec::Scalar(p) => MatrixPrior::from_scalar(&p, ell),
        PriorSpec::Matrix(m) => MatrixPrior::new(m),
    }
}

// ---------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------

fn emit_scalar_artifacts(
    out: &Path,
    sol: &CeeSolution,
    problem: &Problem,
    transform: Option<Transform>,
    grid_points: usize,
) -> cee::Result<()> {
    io::write_json(
        &out.join("solution.json"),
        &SolutionJson::from_scalar(sol, problem, transform),
    )
    .map_err(write_err)?;

    // spectral-factor frequency response
    let (num, den) = sol.shaping_filter();
    let mut rows = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let theta = std::f64::consts::PI * k as f64 / (grid_points - 1).max(1) as f64;
        let z = c64(theta.cos(), theta.sin());
        let v = num.eval(z) / den.eval(z);
        rows.push(vec![theta, 20.0 * v.norm().log10(), v.arg()]);
    }
    io::write_csv(
        &out.join("frequency_response.csv"),
        &["theta", "magnitude_db", "phase"],
        &rows,
    )
    .map_err(write_err)?;

    // pole trajectories along the homotopy path
    let mut rows = Vec::new();
    for sample in &sol.path {
        let (a_vec, _) = homotopy_ab(&sample.p, sample.lambda, &sol.prior, &sol.params);
        let roots = vec_to_monic(&a_vec).roots()?;
        for (idx, r) in roots.iter().enumerate() {
            rows.push(vec![sample.lambda, idx as f64, r.re, r.im]);
        }
    }
    io::write_csv(
        &out.join("pole_trajectory.csv"),
        &["lambda", "root_index", "re", "im"],
        &rows,
    )
    .map_err(write_err)?;

    let rows: Vec<Vec<f64>> = sol
        .diagnostics
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| vec![i as f64, *s])
        .collect();
    io::write_csv(&out.join("singular_values.csv"), &["index", "value"], &rows)
        .map_err(write_err)
}

fn emit_matrix_artifacts(
    out: &Path,
    sol: &cee::matrix::MatrixCeeSolution,
    problem: &MatrixProblem,
    grid_points: usize,
) -> cee::Result<()> {
    io::write_json(
        &out.join("solution.json"),
        &SolutionJson::from_matrix(sol, problem),
    )
    .map_err(write_err)?;

    // spectral-factor singular-value envelope
    let mut rows = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let theta = std::f64::consts::PI * k as f64 / (grid_points - 1).max(1) as f64;
        let z = c64(theta.cos(), theta.sin());
        let a = sol.a.eval(z);
        let sig = sol.prior.sigma().eval(z);
        let r = sol.r.map(|x| c64(x, 0.0));
        let v = a
            .lu()
            .solve(&(sig * r))
            .ok_or_else(|| Error::IllConditioned {
                what: "A(z) on the circle".into(),
                cond: f64::INFINITY,
            })?;
        let eigs = cee::numerics::hermitian_eigenvalues(&(v.adjoint() * &v))?;
        let smax = eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        let smin = eigs.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        rows.push(vec![theta, 20.0 * smax.log10(), 20.0 * smin.log10()]);
    }
    io::write_csv(
        &out.join("frequency_response.csv"),
        &["theta", "smax_db", "smin_db"],
        &rows,
    )
    .map_err(write_err)?;

    // pole trajectories from det A(p, lambda)
    let mut rows = Vec::new();
    let state = sol.prior.degree() * sol.prior.ell();
    for sample in &sol.path {
        let p = DMatrix::from_column_slice(state, sol.prior.ell(), sample.p.as_slice());
        let (a_s, _) = matrix_homotopy_ab(&p, sample.lambda, &sol.prior, &sol.params);
        let a_poly = cee::matrix::unstack_coeffs(&a_s, sol.prior.ell(), sol.prior.degree());
        let roots = det_poly(&a_poly)?.roots()?;
        for (idx, r) in roots.iter().enumerate() {
            rows.push(vec![sample.lambda, idx as f64, r.re, r.im]);
        }
    }
    io::write_csv(
        &out.join("pole_trajectory.csv"),
        &["lambda", "root_index", "re", "im"],
        &rows,
    )
    .map_err(write_err)?;

    let rows: Vec<Vec<f64>> = sol
        .diagnostics
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| vec![i as f64, *s])
        .collect();
    io::write_csv(&out.join("singular_values.csv"), &["index", "value"], &rows)
        .map_err(write_err)
}

// ---------------------------------------------------------------------
// Input file shapes
// ---------------------------------------------------------------------

#[derive(Deserialize)]
struct CovarianceFile {
    c: Vec<f64>,
    /// Raw covariances are rescaled to the c0 = 1/2 convention first.
    #[serde(default)]
    raw: bool,
}

#[derive(Deserialize)]
struct MatrixLagsFile {
    lags: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct FilterFile {
    sigma: Vec<f64>,
    a: Vec<f64>,
    rho: f64,
}

fn run(command: Command) -> cee::Result<()> {
    match command {
        Command::Interp { data, common } => {
            let parsed = ProblemJson::parse(&read_file(&data)?)?.into_problem()?;
            let validated = match parsed {
                AnyProblem::Scalar(v) => v,
                AnyProblem::Matrix(_) => {
                    return Err(Error::InvalidInput(
                        "matrix problem supplied to `interp`; use `mimo`".into(),
                    ))
                }
            };
            let (problem, transform) = normalize(&validated.problem)?;
            let prior = scalar_prior(&common, problem.order())?;
            let sol = solve(&problem, &prior, &options(&common))?;
            emit_scalar_artifacts(
                &common.out,
                &sol,
                &problem,
                Some(transform),
                common.grid_points,
            )?;
            println!(
                "solved: degree {} of {}, interpolation residual {:.3e}",
                sol.diagnostics.numerical_degree,
                problem.order(),
                sol.diagnostics.interpolation_residual
            );
            Ok(())
        }
        Command::Covext { data, common } => {
            let parsed: CovarianceFile = serde_json::from_str(&read_file(&data)?)?;
            let c = if parsed.raw {
                normalize_covariances(&parsed.c)?
            } else {
                parsed.c
            };
            let problem = Problem::from_covariances(&c)?.problem;
            let prior = scalar_prior(&common, problem.order())?;
            let sol = solve(&problem, &prior, &options(&common))?;
            emit_scalar_artifacts(&common.out, &sol, &problem, None, common.grid_points)?;
            println!(
                "solved: degree {} of {}, rho {:.12}",
                sol.diagnostics.numerical_degree,
                problem.order(),
                sol.rho
            );
            Ok(())
        }
        Command::Mimo { data, common } => {
            let text = read_file(&data)?;
            let validated = if let Ok(lags) = serde_json::from_str::<MatrixLagsFile>(&text) {
                let mats: Vec<DMatrix<f64>> =
                    lags.lags.iter().map(|rows| model::rows_to_mat(rows)).collect();
                MatrixProblem::from_raw_covariances(&mats)?
            } else {
                match ProblemJson::parse(&text)?.into_problem()? {
                    AnyProblem::Matrix(v) => v,
                    AnyProblem::Scalar(_) => {
                        return Err(Error::InvalidInput(
                            "scalar problem supplied to `mimo`; use `interp`".into(),
                        ))
                    }
                }
            };
            let (problem, _transform) = normalize_matrix(&validated.problem)?;
            let prior = matrix_prior(&common, problem.order(), problem.ell())?;
            let sol = solve_matrix(&problem, &prior, &options(&common))?;
            emit_matrix_artifacts(&common.out, &sol, &problem, common.grid_points)?;
            println!(
                "solved: McMillan degree {} of {}",
                sol.diagnostics.numerical_degree,
                problem.order() * problem.ell()
            );
            Ok(())
        }
        Command::Three {
            data,
            simulate,
            samples,
            bank,
            common,
        } => {
            let bank_nodes = BankJson::parse(&read_file(&bank)?)?;
            let series: Vec<f64> = match (&data, &simulate) {
                (Some(path), None) => io::read_numeric_csv(path)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
                    .iter()
                    .map(|row| row[0])
                    .collect(),
                (None, Some(path)) => {
                    let f: FilterFile = serde_json::from_str(&read_file(path)?)?;
                    let filter = ShapingFilter::new(
                        Poly::from_real(&f.sigma),
                        Poly::from_real(&f.a),
                        f.rho,
                    )?;
                    apps::simulate(&filter, samples, common.seed)?
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "three needs exactly one of --data or --simulate".into(),
                    ))
                }
            };
            let n: usize = bank_nodes.iter().map(|(_, m)| m).sum::<usize>() - 1;
            let prior = scalar_prior(&common, n)?;
            let report = apps::three_estimate(
                ThreeData::Series(&series),
                &bank_nodes,
                &prior,
                common.grid_points,
                &options(&common),
            )?;
            emit_scalar_artifacts(
                &common.out,
                &report.solution,
                &report.problem,
                Some(report.transform.clone()),
                common.grid_points,
            )?;
            let rows: Vec<Vec<f64>> = report
                .density
                .iter()
                .map(|(t, d, db)| vec![*t, *d, *db])
                .collect();
            io::write_csv(
                &common.out.join("spectrum.csv"),
                &["theta", "density", "density_db"],
                &rows,
            )
            .map_err(write_err)?;
            println!(
                "estimated: degree {} of {}, fit residual {:.3e}",
                report.solution.diagnostics.numerical_degree,
                n,
                report.structured_fit_residual
            );
            Ok(())
        }
        Command::Shape { data, common } => {
            let plant = PlantJson::parse(&read_file(&data)?)?;
            let gamma = plant.gamma;
            let report =
                apps::sensitivity_shape(&plant, common.grid_points.max(2048), &options(&common))?;
            emit_scalar_artifacts(
                &common.out,
                &report.solution,
                &report.problem,
                Some(report.transform.clone()),
                common.grid_points,
            )?;
            #[derive(Serialize)]
            struct DesignJson {
                gamma: f64,
                s_numerator: Vec<f64>,
                s_denominator: Vec<f64>,
                c_numerator: Vec<f64>,
                c_denominator: Vec<f64>,
                h_inf: f64,
                band_low_peak_db: f64,
                band_high_peak_db: f64,
                s_constraint_residual: f64,
                s_pole_margin: f64,
                cancellation_residual: f64,
                warnings: Vec<String>,
            }
            let design = DesignJson {
                gamma,
                s_numerator: report.s_num.real_coeffs()?,
                s_denominator: report.s_den.real_coeffs()?,
                c_numerator: report.c_num.real_coeffs()?,
                c_denominator: report.c_den.real_coeffs()?,
                h_inf: report.h_inf,
                band_low_peak_db: cee::apps::shape::band_peak_db(&report.grid, 0.0, 0.3),
                band_high_peak_db: cee::apps::shape::band_peak_db(
                    &report.grid,
                    2.5,
                    std::f64::consts::PI,
                ),
                s_constraint_residual: report.s_constraint_residual,
                s_pole_margin: report.s_pole_margin,
                cancellation_residual: report.cancellation_residual,
                warnings: report.warnings.clone(),
            };
            io::write_json(&common.out.join("design.json"), &design).map_err(write_err)?;
            let rows: Vec<Vec<f64>> = report
                .grid
                .iter()
                .map(|(t, db, ph)| vec![*t, *db, *ph])
                .collect();
            io::write_csv(
                &common.out.join("s_response.csv"),
                &["theta", "magnitude_db", "phase"],
                &rows,
            )
            .map_err(write_err)?;
            println!(
                "designed: |S|_inf = {:.4} (bound {}), constraint residual {:.3e}",
                report.h_inf, gamma, report.s_constraint_residual
            );
            Ok(())
        }
        Command::Reduce { data, common } => {
            let sol: SolutionJson = serde_json::from_str(&read_file(&data)?)?;
            match sol.kind.as_str() {
                "scalar" => {
                    let problem = match sol.problem.clone().into_problem()? {
                        AnyProblem::Scalar(v) => v.problem,
                        _ => return Err(Error::InvalidInput("kind/problem mismatch".into())),
                    };
                    let sigma = model::vec_to_poly(
                        sol.sigma
                            .as_ref()
                            .ok_or_else(|| Error::InvalidInput("missing sigma".into()))?,
                    );
                    let prior = SpectralPrior::new(sigma)?;
                    let report = apps::model_reduce_pipeline(
                        &problem,
                        &prior,
                        common.rank_tol,
                        common.grid_points,
                        &options(&common),
                    )?;
                    let rows: Vec<Vec<f64>> = report
                        .comparison
                        .iter()
                        .map(|(t, f, r)| vec![*t, *f, *r])
                        .collect();
                    io::write_csv(
                        &common.out.join("comparison.csv"),
                        &["theta", "full_db", "reduced_db"],
                        &rows,
                    )
                    .map_err(write_err)?;
                    if let (Some(red), Some(rp)) = (&report.reduced, &report.reduced_problem) {
                        io::write_json(
                            &common.out.join("reduced_solution.json"),
                            &SolutionJson::from_scalar(red, rp, None),
                        )
                        .map_err(write_err)?;
                    }
                    #[derive(Serialize)]
                    struct PlanJson {
                        numerical_degree: usize,
                        reduced_order: usize,
                        dropped_zeros: Vec<[f64; 2]>,
                        reduced_sigma: Vec<f64>,
                        dropped_singular_mass: f64,
                        reduced_jet_error: f64,
                        warnings: Vec<String>,
                    }
                    io::write_json(
                        &common.out.join("plan.json"),
                        &PlanJson {
                            numerical_degree: report.plan.numerical_degree,
                            reduced_order: report.plan.reduced_order,
                            dropped_zeros: report
                                .plan
                                .dropped_zeros
                                .iter()
                                .map(|z| [z.re, z.im])
                                .collect(),
                            reduced_sigma: report.plan.reduced_sigma.real_coeffs()?,
                            dropped_singular_mass: report.dropped_singular_mass,
                            reduced_jet_error: report.reduced_jet_error,
                            warnings: report.warnings.clone(),
                        },
                    )
                    .map_err(write_err)?;
                    println!(
                        "reduced: degree {} -> {}",
                        prior.degree(),
                        report.plan.reduced_order
                    );
                    Ok(())
                }
                "matrix" => {
                    let problem = match sol.problem.clone().into_problem()? {
                        AnyProblem::Matrix(v) => v.problem,
                        _ => return Err(Error::InvalidInput("kind/problem mismatch".into())),
                    };
                    let sigma = model::rows_to_mpoly(
                        sol.sigma_matrix
                            .as_ref()
                            .ok_or_else(|| Error::InvalidInput("missing sigma".into()))?,
                    )?;
                    let prior = MatrixPrior::new(sigma)?;
                    let report = apps::model_reduce_pipeline_matrix(
                        &problem,
                        &prior,
                        common.rank_tol,
                        common.grid_points,
                        &options(&common),
                    )?;
                    let rows: Vec<Vec<f64>> = report
                        .comparison
                        .iter()
                        .map(|(t, a, b, c, d)| vec![*t, *a, *b, *c, *d])
                        .collect();
                    io::write_csv(
                        &common.out.join("comparison.csv"),
                        &[
                            "theta",
                            "full_smax_db",
                            "full_smin_db",
                            "reduced_smax_db",
                            "reduced_smin_db",
                        ],
                        &rows,
                    )
                    .map_err(write_err)?;
                    if let (Some(red), Some(rp)) = (&report.reduced, &report.reduced_problem) {
                        io::write_json(
                            &common.out.join("reduced_solution.json"),
                            &SolutionJson::from_matrix(red, rp),
                        )
                        .map_err(write_err)?;
                    }
                    println!(
                        "reduced: index {} -> {}",
                        prior.degree(),
                        report.plan.reduced_index
                    );
                    Ok(())
                }
                other => Err(Error::InvalidInput(format!(
                    "unknown solution kind {other}"
                ))),
            }
        }
        Command::Check { data, common } => {
            let _ = common;
            let text = read_file(&data)?;
            // a solution file has a "kind" field; problem files do not
            if text.contains("\"kind\"") {
                let sol: SolutionJson = serde_json::from_str(&text)?;
                let lines = model::check_solution(&sol, 1e-12)?;
                let mut all_ok = true;
                for line in &lines {
                    println!(
                        "{}: stated {:.6e} recomputed {:.6e} [{}]",
                        line.name,
                        line.stated,
                        line.recomputed,
                        if line.agree { "ok" } else { "MISMATCH" }
                    );
                    all_ok &= line.agree;
                }
                if !all_ok {
                    return Err(Error::SolutionCheckFailed {
                        what: "solution file residual reproduction".into(),
                        value: 0.0,
                        tol: 1e-12,
                    });
                }
                return Ok(());
            }
            match ProblemJson::parse(&text)?.into_problem()? {
                AnyProblem::Scalar(v) => {
                    for w in &v.warnings {
                        println!("note: {w}");
                    }
                    let report = pick_test(&v.problem)?;
                    println!(
                        "order {}, Pick minimum eigenvalue {:.6e}: {}",
                        v.problem.order(),
                        report.min_eigenvalue,
                        if report.feasible {
                            "feasible"
                        } else {
                            "infeasible"
                        }
                    );
                    if !report.feasible {
                        return Err(Error::Infeasible {
                            min_eig: report.min_eigenvalue,
                        });
                    }
                }
                AnyProblem::Matrix(v) => {
                    for w in &v.warnings {
                        println!("note: {w}");
                    }
                    let report = pick_test_matrix(&v.problem)?;
                    println!(
                        "order {} (dimension {}), Pick minimum eigenvalue {:.6e}: {}",
                        v.problem.order(),
                        v.problem.ell(),
                        report.min_eigenvalue,
                        if report.feasible {
                            "feasible"
                        } else {
                            "infeasible"
                        }
                    );
                    if !report.feasible {
                        return Err(Error::Infeasible {
                            min_eig: report.min_eigenvalue,
                        });
                    }
                }
            }
            Ok(())
        }
    }
}
