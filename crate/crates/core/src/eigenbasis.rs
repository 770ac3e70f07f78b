//! Root eigenfunctions of the complex weighted Laplacian and the
//! eigenvalue grouping of the holomorphic vector fields.

use crate::error::OperatorError;
use crate::operators::{AffineProfile, EquivariantFunction, ExpGradientProfile, OperatorContext, Profile, ProductProfile};
use crate::polytope::DelzantPolytope;
use crate::roots::{DemazureRoot, RootSet};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Eigenvalue of every root function and affine function.
pub const EIGENVALUE: f64 = 2.0;

#[derive(Clone)]
pub struct RootFunction {
    pub root: DemazureRoot,
    pub mode_sign: i8,
    pub normal: Vec<i64>,
    pub profile: Arc<dyn Profile>,
}

fn to_vec(v: &[i64]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| x as f64))
}

/// `(<x, b_ρ> + shift)·e^{−<α, ∇φ>}`; `shift = 1` gives the root function.
pub fn root_profile(alpha: &[i64], normal: &[i64], shift: f64) -> Arc<dyn Profile> {
    Arc::new(ProductProfile(
        Arc::new(AffineProfile { b: to_vec(normal), c: shift }),
        Arc::new(ExpGradientProfile { alpha: to_vec(alpha) }),
    ))
}

impl RootFunction {
    pub fn mode(&self) -> Vec<i64> {
        self.root.alpha.iter().map(|a| a * self.mode_sign as i64).collect()
    }

    pub fn equivariant(&self) -> EquivariantFunction {
        EquivariantFunction::with_mode(self.mode(), self.profile.clone())
    }
}

pub fn build_root_function(ctx: &OperatorContext, root: &DemazureRoot, mode_sign: i8) -> RootFunction {
    let normal = ctx.polytope.facets()[root.distinguished_facet].normal.clone();
    RootFunction { root: root.clone(), mode_sign, profile: root_profile(&root.alpha, &normal, 1.0), normal }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenResidual {
    /// `max |Lf − λf| / max |λf|` over the grid.
    pub max_rel_residual: f64,
    /// Least-squares `λ̂` with `Lf ≈ λ̂ f`.
    pub fitted_eigenvalue: f64,
    pub fitted_eigenvalue_imag: f64,
}

/// Pointwise values `(f, Lf)` of the complex weighted Laplacian with `orientation`.
pub fn operator_samples(
    ctx: &OperatorContext,
    f: &EquivariantFunction,
    grid: &[DVector<f64>],
    orientation: i8,
) -> Result<Vec<(Complex64, Complex64)>, OperatorError> {
    let k = f.mode_vector(ctx.dim());
    ctx.on_grid(grid, |x| {
        let m = ctx.metric(x)?;
        let u = ctx.jet(f.profile.as_ref(), x, &m)?;
        Ok((f.coeff * u.value, f.coeff * ctx.complex_weighted_real(&m, &u, &k, orientation)))
    })
}

fn fit(samples: &[(Complex64, Complex64)]) -> Complex64 {
    let num: Complex64 = samples.iter().map(|(u, l)| u.conj() * l).sum();
    let den: f64 = samples.iter().map(|(u, _)| u.norm_sqr()).sum();
    num / den
}

pub fn eigen_residual_of(
    ctx: &OperatorContext,
    f: &EquivariantFunction,
    grid: &[DVector<f64>],
    target: f64,
) -> Result<EigenResidual, OperatorError> {
    let s = operator_samples(ctx, f, grid, 1)?;
    let num = s.iter().map(|(u, l)| (l - u * target).norm()).fold(0.0, f64::max);
    let den = s.iter().map(|(u, _)| (u * target).norm()).fold(0.0, f64::max);
    let lam = fit(&s);
    Ok(EigenResidual { max_rel_residual: num / den, fitted_eigenvalue: lam.re, fitted_eigenvalue_imag: lam.im })
}

/// Residual of `(L − 2) rf` with `L` the complex weighted Laplacian.
pub fn eigen_residual(ctx: &OperatorContext, rf: &RootFunction, grid: &[DVector<f64>]) -> Result<EigenResidual, OperatorError> {
    eigen_residual_of(ctx, &rf.equivariant(), grid, EIGENVALUE)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AntiHolomorphicEigenvalue {
    pub gamma_hat: f64,
    pub fit_residual: f64,
}

/// Fits `(L_{−J} − 2) rf = γ̂ rf`; errors if the fit residual exceeds `tol`.
pub fn anti_holomorphic_eigenvalue(
    ctx: &OperatorContext,
    rf: &RootFunction,
    grid: &[DVector<f64>],
    tol: f64,
) -> Result<AntiHolomorphicEigenvalue, OperatorError> {
    let s: Vec<(Complex64, Complex64)> = operator_samples(ctx, &rf.equivariant(), grid, -1)?
        .into_iter()
        .map(|(u, l)| (u, l - u * EIGENVALUE))
        .collect();
    let gamma = fit(&s);
    let num = s.iter().map(|(u, l)| (l - u * gamma).norm()).fold(0.0, f64::max);
    let den = s.iter().map(|(u, _)| u.norm()).fold(0.0, f64::max);
    let fit_residual = num / den;
    if fit_residual > tol {
        return Err(OperatorError::FitResidual(fit_residual));
    }
    Ok(AntiHolomorphicEigenvalue { gamma_hat: gamma.re, fit_residual })
}

/// Runs both mode signs and keeps the one whose fitted eigenvalue is closer
/// to 2 (`+1` on ties).
pub fn select_mode_sign(
    ctx: &OperatorContext,
    root: &DemazureRoot,
    grid: &[DVector<f64>],
) -> Result<(RootFunction, EigenResidual), OperatorError> {
    let plus = build_root_function(ctx, root, 1);
    let minus = build_root_function(ctx, root, -1);
    let rp = eigen_residual(ctx, &plus, grid)?;
    let rm = eigen_residual(ctx, &minus, grid)?;
    let dp = (rp.fitted_eigenvalue - EIGENVALUE).abs();
    let dm = (rm.fitted_eigenvalue - EIGENVALUE).abs();
    if dm + 1e-9 < dp {
        Ok((minus, rm))
    } else {
        Ok((plus, rp))
    }
}

/// Global closed form of the root function for the canonical potential:
/// `e^{−½<α, Σb_ρ>} Π_ρ L_ρ^{e_ρ}` with `e_ρ = −½<α,b_ρ> + [ρ = ρ_α]`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryProductForm {
    pub prefactor: f64,
    pub exponents: Vec<f64>,
    offsets: Vec<f64>,
    normals: Vec<Vec<f64>>,
}

pub fn boundary_product_form(p: &DelzantPolytope, root: &DemazureRoot) -> BoundaryProductForm {
    let sum: i64 = root.pairings.iter().sum();
    let exponents = root
        .pairings
        .iter()
        .enumerate()
        .map(|(r, &pr)| -0.5 * pr as f64 + if r == root.distinguished_facet { 1.0 } else { 0.0 })
        .collect();
    BoundaryProductForm {
        prefactor: (-0.5 * sum as f64).exp(),
        exponents,
        offsets: p.offsets_f64().to_vec(),
        normals: p.normals_f64().iter().map(|n| n.iter().copied().collect()).collect(),
    }
}

impl BoundaryProductForm {
    /// Evaluates on the closed polytope; facet values are clamped at 0.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.prefactor;
        for ((n, l), e) in self.normals.iter().zip(&self.offsets).zip(&self.exponents) {
            let lr = (n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + l).max(0.0);
            v *= lr.powf(*e);
        }
        v
    }

    /// Facets on which the form vanishes.
    pub fn vanishing_facets(&self) -> Vec<usize> {
        self.exponents.iter().enumerate().filter(|(_, &e)| e > 0.0).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionBlock {
    pub gamma: f64,
    pub includes_affine: bool,
    pub roots: Vec<Vec<i64>>,
    pub semisimple_roots: usize,
    pub unipotent_roots: usize,
    pub complex_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonDecomposition {
    pub affine_dim: usize,
    pub blocks: Vec<DecompositionBlock>,
    pub total_complex_dim: usize,
    pub min_gamma: f64,
}

/// Clusters roots by `γ(α) = 2<α, a>` within `tol`; the affine block joins `γ = 0`.
pub fn assemble_decomposition(a: &[f64], roots: &RootSet, n: usize, tol: f64) -> SolitonDecomposition {
    let gamma = |r: &DemazureRoot| 2.0 * r.alpha.iter().zip(a).map(|(x, y)| *x as f64 * y).sum::<f64>();
    let mut entries: Vec<(f64, &DemazureRoot)> = roots.roots.iter().map(|r| (gamma(r), r)).collect();
    entries.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.alpha.cmp(&y.1.alpha)));
    let mut groups: Vec<Vec<(f64, &DemazureRoot)>> = Vec::new();
    for e in entries {
        match groups.last_mut() {
            Some(g) if (e.0 - g[0].0).abs() <= tol => g.push(e),
            _ => groups.push(vec![e]),
        }
    }
    let mut blocks: Vec<DecompositionBlock> = groups
        .iter()
        .map(|g| {
            let value = g.iter().map(|e| e.0).sum::<f64>() / g.len() as f64;
            let is_zero = value.abs() <= tol;
            let rs: Vec<Vec<i64>> = g.iter().map(|e| e.1.alpha.clone()).collect();
            let ss = g.iter().filter(|e| roots.semisimple.iter().any(|s| s.alpha == e.1.alpha)).count();
            DecompositionBlock {
                gamma: if is_zero { 0.0 } else { value },
                includes_affine: is_zero,
                semisimple_roots: ss,
                unipotent_roots: rs.len() - ss,
                complex_dim: rs.len() + if is_zero { n } else { 0 },
                roots: rs,
            }
        })
        .collect();
    if !blocks.iter().any(|b| b.includes_affine) {
        blocks.push(DecompositionBlock {
            gamma: 0.0,
            includes_affine: true,
            roots: Vec::new(),
            semisimple_roots: 0,
            unipotent_roots: 0,
            complex_dim: n,
        });
        blocks.sort_by(|x, y| x.gamma.partial_cmp(&y.gamma).unwrap());
    }
    let min_gamma = blocks.iter().map(|b| b.gamma).fold(f64::INFINITY, f64::min);
    SolitonDecomposition { affine_dim: n, total_complex_dim: blocks.iter().map(|b| b.complex_dim).sum(), blocks, min_gamma }
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineFunctionCheck {
    pub coordinate: usize,
    pub imaginary: bool,
    pub mode: Vec<i64>,
    pub residual: EigenResidual,
}

/// Verifies `x_i` and `i·x_i` as eigenfunctions with eigenvalue 2.
pub fn affine_block(ctx: &OperatorContext, grid: &[DVector<f64>]) -> Result<Vec<AffineFunctionCheck>, OperatorError> {
    let n = ctx.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for imaginary in [false, true] {
            let mut f = EquivariantFunction::invariant(Arc::new(AffineProfile::coordinate(n, i)));
            if imaginary {
                f.coeff = Complex64::new(0.0, 1.0);
            }
            let residual = eigen_residual_of(ctx, &f, grid, EIGENVALUE)?;
            out.push(AffineFunctionCheck { coordinate: i, imaginary, mode: vec![0; n], residual });
        }
    }
    Ok(out)
}
