//! Finite-difference oracle: re-evaluates operators from potential values
//! alone, with fourth-order central stencils, independent of the analytic
//! derivative stack.

use crate::error::{OperatorError, PotentialError};
use crate::operators::OperatorContext;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

/// Steps: `hessian` for second derivatives of φ, `derivative` for `∂H`,
/// `second_derivative` for `∂²H`, `profile` for derivatives of `u`.
#[derive(Debug, Clone, Copy)]
pub struct FdSteps {
    pub hessian: f64,
    pub derivative: f64,
    pub second_derivative: f64,
    pub profile: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { hessian: 1e-3, derivative: 5e-3, second_derivative: 1e-2, profile: 5e-3 }
    }
}

impl FdSteps {
    fn largest(&self) -> f64 {
        self.hessian.max(self.derivative).max(self.second_derivative).max(self.profile)
    }

    fn scaled(&self, s: f64) -> Self {
        FdSteps {
            hessian: self.hessian * s,
            derivative: self.derivative * s,
            second_derivative: self.second_derivative * s,
            profile: self.profile * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOperator {
    Laplacian,
    WeightedLaplacian,
    ComplexWeightedLaplacian(i8),
    ScalarCurvature,
}

pub type ScalarField = Arc<dyn Fn(&DVector<f64>) -> Result<f64, PotentialError> + Send + Sync>;

/// `u(x)·e^{i<k,t>}` given by values of `u` only.
#[derive(Clone)]
pub struct FdFunction {
    pub mode: Vec<i64>,
    pub value: ScalarField,
}

const W1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const W2: [(f64, f64); 5] = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

fn shifted(x: &DVector<f64>, i: usize, d: f64) -> DVector<f64> {
    let mut y = x.clone();
    y[i] += d;
    y
}

/// `∂_i f` by the five-point stencil; works for any vector-space valued `f`.
pub fn first<T, F>(f: &F, x: &DVector<f64>, i: usize, h: f64) -> Result<T, PotentialError>
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(&DVector<f64>) -> Result<T, PotentialError>,
{
    let mut acc: Option<T> = None;
    for (o, w) in W1 {
        let v = f(&shifted(x, i, o * h))? * (w / h);
        acc = Some(match acc {
            None => v,
            Some(a) => a + v,
        });
    }
    Ok(acc.unwrap())
}

/// `∂_i∂_j f`; pure second stencil on the diagonal, nested first stencils otherwise.
pub fn second<T, F>(f: &F, x: &DVector<f64>, i: usize, j: usize, h: f64) -> Result<T, PotentialError>
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(&DVector<f64>) -> Result<T, PotentialError>,
{
    if i == j {
        let mut acc: Option<T> = None;
        for (o, w) in W2 {
            let v = f(&shifted(x, i, o * h))? * (w / (h * h));
            acc = Some(match acc {
                None => v,
                Some(a) => a + v,
            });
        }
        Ok(acc.unwrap())
    } else {
        first(&|y: &DVector<f64>| first(f, y, j, h), x, i, h)
    }
}

pub fn fd_gradient<F>(f: &F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>, PotentialError>
where
    F: Fn(&DVector<f64>) -> Result<f64, PotentialError>,
{
    let n = x.len();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        g[i] = first(f, x, i, h)?;
    }
    Ok(g)
}

pub fn fd_hessian<F>(f: &F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>, PotentialError>
where
    F: Fn(&DVector<f64>) -> Result<f64, PotentialError>,
{
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = second(f, x, i, j, h)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Value-only views of the potential used by the oracle.
pub struct FdMetric<'a> {
    ctx: &'a OperatorContext,
    steps: FdSteps,
}

impl<'a> FdMetric<'a> {
    pub fn new(ctx: &'a OperatorContext, steps: FdSteps) -> Self {
        FdMetric { ctx, steps }
    }

    pub fn phi(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        self.ctx.potential.value(x)
    }

    pub fn g(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        fd_hessian(&|y: &DVector<f64>| self.phi(y), x, self.steps.hessian)
    }

    pub fn h(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        let g = self.g(x)?;
        g.try_inverse().ok_or_else(|| PotentialError::SingularHessian(x.iter().copied().collect()))
    }

    pub fn dh(&self, x: &DVector<f64>, k: usize) -> Result<DMatrix<f64>, PotentialError> {
        first(&|y: &DVector<f64>| self.h(y), x, k, self.steps.derivative)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError> {
        fd_gradient(&|y: &DVector<f64>| self.phi(y), x, self.steps.hessian)
    }
}

fn check_margin(ctx: &OperatorContext, x: &DVector<f64>, steps: FdSteps) -> Result<FdSteps, OperatorError> {
    let dist = ctx.polytope.boundary_distance(x.as_slice());
    let need = 10.0 * steps.largest();
    if dist >= need {
        return Ok(steps);
    }
    let s = dist / need;
    // also rejects NaN
    if s * steps.largest() < 1e-4 || s.is_nan() {
        return Err(OperatorError::StepUnderflow(x.iter().copied().collect()));
    }
    Ok(steps.scaled(s))
}

/// Re-evaluates `op` applied to `f` (ignored for the scalar curvature) at `x`.
pub fn finite_difference_oracle(
    ctx: &OperatorContext,
    f: Option<&FdFunction>,
    x: &DVector<f64>,
    op: FdOperator,
    steps: FdSteps,
) -> Result<Complex64, OperatorError> {
    let steps = check_margin(ctx, x, steps)?;
    let fm = FdMetric::new(ctx, steps);
    let n = x.len();
    if op == FdOperator::ScalarCurvature {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s -= second(&|y: &DVector<f64>| fm.h(y).map(|h| h[(i, j)]), x, i, j, steps.second_derivative)?;
            }
        }
        return Ok(Complex64::new(s, 0.0));
    }
    let f = f.ok_or(OperatorError::EmptyGrid)?;
    let u = |y: &DVector<f64>| (f.value)(y);
    let uv = u(x)?;
    let ug = fd_gradient(&u, x, steps.profile)?;
    let uh = fd_hessian(&u, x, steps.profile)?;
    let h = fm.h(x)?;
    let g = fm.g(x)?;
    let mut div = DVector::zeros(n);
    for i in 0..n {
        let d = fm.dh(x, i)?;
        for j in 0..n {
            div[j] += d[(i, j)];
        }
    }
    let k = if f.mode.is_empty() { DVector::zeros(n) } else { DVector::from_iterator(n, f.mode.iter().map(|&v| v as f64)) };
    let a = &ctx.soliton;
    let lap = -div.dot(&ug) - h.component_mul(&uh).sum() + k.dot(&(&g * &k)) * uv;
    let drift = -2.0 * a.dot(&(&h * &ug));
    let val = match op {
        FdOperator::Laplacian => lap,
        FdOperator::WeightedLaplacian => lap + drift,
        FdOperator::ComplexWeightedLaplacian(o) => lap + drift - 2.0 * o as f64 * a.dot(&k) * uv,
        FdOperator::ScalarCurvature => unreachable!(),
    };
    Ok(Complex64::new(val, 0.0))
}

/// Root-function profile `(<b,x> + 1)·e^{−<α, ∇φ(x) − ∇φ(0)>}` with `∇φ`
/// from differences of potential values.
pub fn fd_root_profile(ctx: &OperatorContext, alpha: &[i64], normal: &[i64], steps: FdSteps) -> Result<ScalarField, OperatorError> {
    let pot = ctx.potential.clone();
    let n = alpha.len();
    let phi = move |y: &DVector<f64>| pot.value(y);
    let h = steps.hessian;
    let g0 = fd_gradient(&phi, &DVector::zeros(n), h)?;
    let alpha = DVector::from_iterator(n, alpha.iter().map(|&v| v as f64));
    let b = DVector::from_iterator(n, normal.iter().map(|&v| v as f64));
    Ok(Arc::new(move |y: &DVector<f64>| {
        let g = fd_gradient(&phi, y, h)?;
        Ok((b.dot(y) + 1.0) * (-alpha.dot(&(g - &g0))).exp())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{AffineProfile, EquivariantFunction, FlatPotential, QuadraticProfile};
    use crate::polytope::examples::*;
    use crate::potentials::guillemin;
    use approx::assert_relative_eq;

    #[test]
    fn stencils_are_fourth_order() {
        let f = |y: &DVector<f64>| Ok(y[0].sin() * y[1].exp());
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let h = fd_hessian(&f, &x, 1e-2).unwrap();
        assert_relative_eq!(h[(0, 0)], -(0.3f64).sin() * (-0.2f64).exp(), epsilon = 1e-8);
        assert_relative_eq!(h[(0, 1)], (0.3f64).cos() * (-0.2f64).exp(), epsilon = 1e-8);
        let g = fd_gradient(&f, &x, 1e-2).unwrap();
        assert_relative_eq!(g[1], (0.3f64).sin() * (-0.2f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn flat_model_is_exact() {
        let ctx = OperatorContext::new(square(), Arc::new(FlatPotential { dim: 2 }), DVector::zeros(2));
        let x = DVector::from_vec(vec![0.1, 0.2]);
        let q = QuadraticProfile { c: 0.0, b: DVector::zeros(2), q: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]) };
        let f = FdFunction { mode: vec![], value: Arc::new(|y: &DVector<f64>| Ok(y[0] * y[0])) };
        let fd = finite_difference_oracle(&ctx, Some(&f), &x, FdOperator::Laplacian, FdSteps::default()).unwrap();
        let an = ctx.apply_laplacian(&EquivariantFunction::invariant(Arc::new(q)), &x).unwrap();
        assert_relative_eq!(fd.re, an.re, epsilon = 1e-8);
        let s = finite_difference_oracle(&ctx, None, &x, FdOperator::ScalarCurvature, FdSteps::default()).unwrap();
        assert!(s.re.abs() < 1e-6);
    }

    #[test]
    fn agrees_with_analytic_on_projective_plane() {
        let p = projective_plane();
        let ctx = OperatorContext::new(p.clone(), Arc::new(guillemin(&p)), DVector::zeros(2));
        let x = DVector::from_vec(vec![0.2, -0.1]);
        let s = finite_difference_oracle(&ctx, None, &x, FdOperator::ScalarCurvature, FdSteps::default()).unwrap();
        assert_relative_eq!(s.re, 4.0, epsilon = 1e-3);
        let f = FdFunction { mode: vec![], value: Arc::new(|y: &DVector<f64>| Ok(y[0])) };
        let fd = finite_difference_oracle(&ctx, Some(&f), &x, FdOperator::WeightedLaplacian, FdSteps::default()).unwrap();
        let an = ctx
            .apply_weighted_laplacian(&EquivariantFunction::invariant(Arc::new(AffineProfile::coordinate(2, 0))), &x)
            .unwrap();
        assert_relative_eq!(fd.re, an.re, epsilon = 1e-6);
        assert_relative_eq!(an.re, 2.0 * x[0], epsilon = 1e-12);
    }

    #[test]
    fn step_underflow_near_boundary() {
        let p = projective_plane();
        let ctx = OperatorContext::new(p.clone(), Arc::new(guillemin(&p)), DVector::zeros(2));
        let x = DVector::from_vec(vec![-0.99999, 0.0]);
        let r = finite_difference_oracle(&ctx, None, &x, FdOperator::ScalarCurvature, FdSteps::default());
        assert!(matches!(r, Err(OperatorError::StepUnderflow(_))));
    }
}
