//! End-to-end verification of a polytope with a chosen potential.

use crate::calabi::{CalabiParameters, CalabiPotential, CalabiReport, CalabiSoliton};
use crate::eigenbasis::{
    affine_block, anti_holomorphic_eigenvalue, assemble_decomposition, select_mode_sign, AffineFunctionCheck,
    SolitonDecomposition, EIGENVALUE,
};
use crate::error::{Error, OperatorError, PolytopeError};
use crate::exec::Execution;
use crate::fd::{finite_difference_oracle, fd_root_profile, FdFunction, FdOperator, FdSteps};
use crate::futaki::{solve_soliton_vector, SolitonData, SolverConfig};
use crate::operators::{
    abreu_from_metric, ConstantProfile, EquivariantFunction, ExpGradientProfile, OperatorContext,
};
use crate::polytope::DelzantPolytope;
use crate::potentials::{guillemin, interior_grid, SymplecticPotential};
use crate::quadrature::integrate_many;
use crate::roots::{automorphism_dimensions, enumerate_roots, AutomorphismDimensions, RootSet};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialChoice {
    Guillemin,
    Calabi,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub potential: PotentialChoice,
    pub grid: usize,
    pub margin: f64,
    pub tol: f64,
    pub order: usize,
    /// Points per axis of the coarser grid used for finite-difference checks.
    pub fd_grid: usize,
    pub exec: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            potential: PotentialChoice::Guillemin,
            grid: 21,
            margin: 0.05,
            tol: 1e-10,
            order: 10,
            fd_grid: 7,
            exec: Execution::Parallel,
        }
    }
}

/// Pass/fail thresholds of the individual checks.
pub mod thresholds {
    pub const LINEAR_EIGEN: f64 = 1e-6;
    pub const SOLITON_EQUATION: f64 = 1e-6;
    pub const RICCI_IDENTITY: f64 = 1e-6;
    pub const CURVATURE_MEAN: f64 = 1e-4;
    pub const ROOT_EIGEN: f64 = 1e-6;
    pub const FITTED_EIGENVALUE: f64 = 1e-6;
    pub const ANTI_HOLOMORPHIC: f64 = 1e-6;
    pub const MODE_IDENTITIES: f64 = 1e-8;
    pub const SPECTRUM: f64 = 1e-9;
    pub const FD_OPERATOR: f64 = 1e-4;
    pub const FD_CURVATURE: f64 = 1e-3;
    pub const CALABI_A1: f64 = 1e-8;
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value <= threshold }
    }

    fn equal(name: &str, value: usize, expected: usize) -> Self {
        Check { name: name.into(), value: value as f64, threshold: expected as f64, passed: value == expected }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootRecord {
    pub alpha: Vec<i64>,
    pub rho_alpha: usize,
    pub semisimple: bool,
    pub mode_sign: i8,
    pub lambda_hat: f64,
    pub max_rel_residual: f64,
    /// `2<α, a>`.
    pub gamma: f64,
    pub gamma_hat: f64,
    pub gamma_hat_fit_residual: f64,
    pub mode_identity_residual: f64,
    pub fd_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalResiduals {
    pub grid_points: usize,
    pub linear_eigen_max_rel: f64,
    pub soliton_equation_max: f64,
    pub ricci_identity_max: f64,
    pub scalar_curvature_min: f64,
    pub scalar_curvature_max: f64,
    /// Mean of the scalar curvature against `dx`.
    pub scalar_curvature_mean: f64,
    /// Mean against `e^{2<a,x>} dx`, for information.
    pub scalar_curvature_weighted_mean: f64,
    pub fd_grid_points: usize,
    pub fd_curvature_max_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub input: serde_json::Value,
    pub algebraic: serde_json::Value,
    pub vertices: Vec<Vec<f64>>,
    pub potential: PotentialChoice,
    pub grid: usize,
    pub margin: f64,
    pub tol: f64,
    pub order: usize,
    pub soliton: SolitonData,
    pub dimensions: AutomorphismDimensions,
    pub roots: Vec<RootRecord>,
    pub affine: Vec<AffineFunctionCheck>,
    pub decomposition: SolitonDecomposition,
    pub residuals: GlobalResiduals,
    pub calabi: Option<CalabiReport>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn same_facets(a: &DelzantPolytope, b: &DelzantPolytope) -> bool {
    let key = |p: &DelzantPolytope| {
        let mut v: Vec<_> = p.facets().iter().map(|f| (f.normal.clone(), f.offset.clone())).collect();
        v.sort();
        v
    };
    a.dim() == b.dim() && key(a) == key(b)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Subsamples a tensor grid with roughly `n` points per axis.
fn coarse(p: &DelzantPolytope, n: usize, margin: f64) -> Vec<DVector<f64>> {
    interior_grid(p, n, margin.max(0.05))
}

pub struct Prepared {
    pub algebraic: DelzantPolytope,
    pub roots: RootSet,
    pub soliton: SolitonData,
    pub ctx: OperatorContext,
    pub calabi: Option<CalabiSoliton>,
}

/// Normalizes, checks Delzant, enumerates roots, solves for `a` and builds the operator context.
pub fn prepare(input: &DelzantPolytope, cfg: &VerifyConfig) -> Result<Prepared, Error> {
    input.require_delzant()?;
    let algebraic = input.normalize_algebraic()?;
    let roots = enumerate_roots(&algebraic, cfg.exec)?;
    let soliton = solve_soliton_vector(&algebraic, &SolverConfig { tol: cfg.tol, order: cfg.order, exec: cfg.exec })?;
    let a = DVector::from_vec(soliton.a.clone());
    let (potential, calabi): (Arc<dyn SymplecticPotential>, Option<CalabiSoliton>) = match cfg.potential {
        PotentialChoice::Guillemin => (Arc::new(guillemin(&algebraic)), None),
        PotentialChoice::Calabi => {
            let s = CalabiSoliton::new(CalabiParameters::blow_up())?;
            let pot = CalabiPotential::new(s)?;
            if !same_facets(pot.polytope(), &algebraic) {
                return Err(PolytopeError::Malformed(
                    "the calabi potential is available for the blow-up trapezoid only".into(),
                )
                .into());
            }
            (Arc::new(pot), Some(s))
        }
    };
    let ctx = OperatorContext::new(algebraic.clone(), potential, a).with_exec(cfg.exec);
    Ok(Prepared { algebraic, roots, soliton, ctx, calabi })
}

pub fn verify(input: &DelzantPolytope, cfg: &VerifyConfig) -> Result<VerificationReport, Error> {
    let pre = prepare(input, cfg)?;
    let Prepared { algebraic, roots, soliton, ctx, calabi } = pre;
    let n = algebraic.dim();
    let grid = interior_grid(&algebraic, cfg.grid, cfg.margin);
    if grid.is_empty() {
        return Err(OperatorError::EmptyGrid.into());
    }
    let a = ctx.soliton.clone();
    let lambda = soliton.lambda;

    // pointwise quantities on the grid
    let pointwise = ctx.on_grid(&grid, |x| {
        let m = ctx.metric(x)?;
        let s = abreu_from_metric(&m);
        let div = m.divergence_h();
        let sol = s - ctx.scal_mean - 2.0 * div.dot(&a);
        let mut lin = Vec::with_capacity(n);
        for b in 0..n {
            // Δ^{g,a} x_b − 2 x_b
            let lap = -div[b] - 2.0 * (&m.h * &a)[b];
            lin.push((lap - EIGENVALUE * x[b], EIGENVALUE * x[b]));
        }
        let ric = DMatrix::from_fn(n, n, |k, l| -0.5 * (0..n).map(|i| m.d2h[i][k][(l, i)]).sum::<f64>());
        let lie = DMatrix::from_fn(n, n, |k, l| (0..n).map(|i| a[i] * m.dh[k][(i, l)]).sum::<f64>());
        let ident = (ric - lie - DMatrix::identity(n, n) * lambda).amax();
        Ok((s, sol, lin, ident))
    })?;
    let linear_eigen_max_rel = (0..n)
        .map(|b| max_abs(pointwise.iter().map(|p| p.2[b].0)) / max_abs(pointwise.iter().map(|p| p.2[b].1)))
        .fold(0.0, f64::max);
    let soliton_equation_max = max_abs(pointwise.iter().map(|p| p.1));
    let ricci_identity_max = max_abs(pointwise.iter().map(|p| p.3));
    let s_min = pointwise.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let s_max = pointwise.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);

    // curvature means by quadrature
    let pot = ctx.potential.clone();
    let (a0, a1) = (a[0], a[1]);
    let moments = integrate_many(
        &algebraic,
        |x, y| {
            let p = DVector::from_vec(vec![x, y]);
            let s = pot.metric(&p).map(|m| abreu_from_metric(&m)).unwrap_or(f64::NAN);
            let w = (2.0 * (a0 * x + a1 * y)).exp();
            vec![1.0, s, w, s * w]
        },
        4,
        soliton.quadrature_order.max(cfg.order),
        cfg.exec,
    )
    .map_err(Error::from)?;
    let scal_mean = moments[1] / moments[0];
    let scal_weighted = moments[3] / moments[2];

    // root functions
    let fd_pts = coarse(&algebraic, cfg.fd_grid, cfg.margin);
    let steps = FdSteps::default();
    let mut records = Vec::new();
    for root in &roots.roots {
        let (rf, res) = select_mode_sign(&ctx, root, &grid)?;
        let gh = anti_holomorphic_eigenvalue(&ctx, &rf, &grid, 1e-6);
        let (gamma_hat, gamma_fit) = match gh {
            Ok(g) => (g.gamma_hat, g.fit_residual),
            Err(OperatorError::FitResidual(r)) => (f64::NAN, r),
            Err(e) => return Err(e.into()),
        };
        let alpha = DVector::from_iterator(n, root.alpha.iter().map(|&v| v as f64));
        let gamma = 2.0 * alpha.dot(&a);
        // mode identities: constant on mode α, exponential on mode 0, and their product
        let one = EquivariantFunction::with_mode(root.alpha.clone(), Arc::new(ConstantProfile(1.0)));
        let exp = EquivariantFunction::invariant(Arc::new(ExpGradientProfile { alpha: alpha.clone() }));
        let prod = EquivariantFunction::with_mode(root.alpha.clone(), exp.profile.clone());
        let ident = ctx.on_grid(&grid, |x| {
            let g = ctx.metric(x)?.g;
            let c = alpha.dot(&(&g * &alpha)) - 2.0 * alpha.dot(&a);
            let r1 = ctx.apply_complex_weighted_laplacian(&one, x, 1)?.re - c;
            let e = ctx.apply_complex_weighted_laplacian(&exp, x, 1)?.re;
            let p = ctx.apply_complex_weighted_laplacian(&prod, x, 1)?.re;
            let m = ctx.metric(x)?;
            let u = ctx.jet(exp.profile.as_ref(), x, &m)?.value;
            let scale = u.abs().max(1.0);
            Ok(r1.abs().max((e + c * u).abs() / scale).max(p.abs() / scale))
        })?;
        // finite-difference oracle on the root function
        let fd = if fd_pts.is_empty() {
            None
        } else {
            let value = fd_root_profile(&ctx, &root.alpha, &rf.normal, steps)?;
            let f = FdFunction { mode: rf.mode(), value };
            let eq = rf.equivariant();
            let errs = ctx.on_grid(&fd_pts, |x| {
                let num = finite_difference_oracle(&ctx, Some(&f), x, FdOperator::ComplexWeightedLaplacian(1), steps)?;
                let an = ctx.apply_complex_weighted_laplacian(&eq, x, 1)?;
                Ok(((num - an).norm(), an.norm()))
            })?;
            Some(max_abs(errs.iter().map(|e| e.0)) / max_abs(errs.iter().map(|e| e.1)))
        };
        records.push(RootRecord {
            alpha: root.alpha.clone(),
            rho_alpha: root.distinguished_facet,
            semisimple: roots.semisimple.iter().any(|s| s.alpha == root.alpha),
            mode_sign: rf.mode_sign,
            lambda_hat: res.fitted_eigenvalue,
            max_rel_residual: res.max_rel_residual,
            gamma,
            gamma_hat,
            gamma_hat_fit_residual: gamma_fit,
            mode_identity_residual: max_abs(ident),
            fd_rel_error: fd,
        });
    }
    let fd_curv = if fd_pts.is_empty() {
        0.0
    } else {
        let e = ctx.on_grid(&fd_pts, |x| {
            let num = finite_difference_oracle(&ctx, None, x, FdOperator::ScalarCurvature, steps)?.re;
            let an = ctx.abreu_scalar_curvature(x)?;
            Ok((num - an).abs() / an.abs().max(1.0))
        })?;
        max_abs(e)
    };

    let affine = affine_block(&ctx, &grid)?;
    let decomposition = assemble_decomposition(a.as_slice(), &roots, n, 1e-9);
    let dimensions = automorphism_dimensions(&roots, n);

    let mut checks = vec![
        Check::at_most("futaki_residual", soliton.futaki_residual, cfg.tol),
        Check::at_most("linear_functions_eigen", linear_eigen_max_rel, thresholds::LINEAR_EIGEN),
        Check::at_most("soliton_equation", soliton_equation_max, thresholds::SOLITON_EQUATION),
        Check::at_most("ricci_soliton_identity", ricci_identity_max, thresholds::RICCI_IDENTITY),
        Check::at_most("scalar_curvature_mean", (scal_mean - 2.0 * n as f64 * lambda).abs(), thresholds::CURVATURE_MEAN),
        Check::at_most("root_eigen_residual", max_abs(records.iter().map(|r| r.max_rel_residual)), thresholds::ROOT_EIGEN),
        Check::at_most(
            "root_fitted_eigenvalue",
            max_abs(records.iter().map(|r| r.lambda_hat - EIGENVALUE)),
            thresholds::FITTED_EIGENVALUE,
        ),
        Check::at_most(
            "affine_eigen_residual",
            max_abs(affine.iter().map(|c| c.residual.max_rel_residual)),
            thresholds::ROOT_EIGEN,
        ),
        Check::at_most(
            "anti_holomorphic_eigenvalue",
            records
                .iter()
                .map(|r| (r.gamma_hat.abs() - 2.0 * r.gamma.abs()).abs())
                .fold(0.0, |m: f64, v| if v.is_nan() { f64::INFINITY } else { m.max(v) }),
            thresholds::ANTI_HOLOMORPHIC,
        ),
        Check::at_most("mode_identities", max_abs(records.iter().map(|r| r.mode_identity_residual)), thresholds::MODE_IDENTITIES),
        Check::at_most("spectrum_nonnegative", (-decomposition.min_gamma).max(0.0), thresholds::SPECTRUM),
        Check::at_most(
            "semisimple_roots_orthogonal",
            max_abs(records.iter().filter(|r| r.semisimple).map(|r| r.gamma / 2.0)),
            thresholds::SPECTRUM,
        ),
        Check::equal("decomposition_dimension", decomposition.total_complex_dim, dimensions.dim_eta),
        Check::at_most(
            "finite_difference_operator",
            max_abs(records.iter().filter_map(|r| r.fd_rel_error)),
            thresholds::FD_OPERATOR,
        ),
        Check::at_most("finite_difference_curvature", fd_curv, thresholds::FD_CURVATURE),
    ];
    let mut notes = vec!["decomposition dimensions are complex; real dimensions are twice these".to_string()];
    let calabi_report = match calabi {
        Some(s) => {
            let r = s.report(50)?;
            checks.push(Check::at_most("calabi_a1_agreement", (s.a1 - a[0]).abs().max(a[1].abs()), thresholds::CALABI_A1));
            checks.push(Check::at_most("calabi_ode", r.ode_max_residual, 1e-9));
            notes.push(format!(
                "mean scalar curvature {} solves the profile ODE; the alternative value {} leaves residual {:.3e} and is inconsistent",
                r.scal_mean, r.alternative_scal_mean, r.alternative_ode_max_residual
            ));
            Some(r)
        }
        None => None,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        input: input.to_json(),
        algebraic: algebraic.to_json(),
        vertices: algebraic.vertices().iter().map(|v| v.point_f64()).collect(),
        potential: cfg.potential,
        grid: cfg.grid,
        margin: cfg.margin,
        tol: cfg.tol,
        order: cfg.order,
        soliton,
        dimensions,
        roots: records,
        affine,
        decomposition,
        residuals: GlobalResiduals {
            grid_points: grid.len(),
            linear_eigen_max_rel,
            soliton_equation_max,
            ricci_identity_max,
            scalar_curvature_min: s_min,
            scalar_curvature_max: s_max,
            scalar_curvature_mean: scal_mean,
            scalar_curvature_weighted_mean: scal_weighted,
            fd_grid_points: fd_pts.len(),
            fd_curvature_max_rel: fd_curv,
        },
        calabi: calabi_report,
        notes,
        checks,
        passed,
    })
}
