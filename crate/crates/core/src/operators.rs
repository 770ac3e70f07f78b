//! Differential operators in action-angle coordinates on functions
//! `u(x)·e^{i<k,t>}`. The torus sector acts diagonally on the mode `k`,
//! so every operator reduces to `x`-space data.
//!
//! Sign conventions: the Laplacian is the positive operator
//! `−Σ ∂_i(H_ij ∂_j u) + (kᵀGk)u`; with the soliton vector `a` stored as in
//! [`crate::futaki`], the weighted Laplacian adds the drift `−2<a, H∇u>` and
//! the complex operator adds `−2·orientation·<a,k>·u` on mode `k`.

use crate::error::{OperatorError, PotentialError};
use crate::exec::Execution;
use crate::polytope::DelzantPolytope;
use crate::potentials::{MetricStack, SymplecticPotential};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

/// Value, gradient and Hessian of a profile at one point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet {
    pub fn zero(n: usize) -> Self {
        Jet { value: 0.0, grad: DVector::zeros(n), hess: DMatrix::zeros(n, n) }
    }

    pub fn product(&self, o: &Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            grad: &self.grad * o.value + &o.grad * self.value,
            hess: &self.hess * o.value + &o.hess * self.value + &self.grad * o.grad.transpose() + &o.grad * self.grad.transpose(),
        }
    }
}

/// Everything a profile may need at a point.
pub struct PointData<'a> {
    pub x: &'a DVector<f64>,
    pub metric: &'a MetricStack,
    pub potential: &'a dyn SymplecticPotential,
}

pub trait Profile: Send + Sync {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError>;
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile(pub f64);

impl Profile for ConstantProfile {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError> {
        let mut j = Jet::zero(at.x.len());
        j.value = self.0;
        Ok(j)
    }
}

/// `<b, x> + c`.
#[derive(Debug, Clone)]
pub struct AffineProfile {
    pub b: DVector<f64>,
    pub c: f64,
}

impl AffineProfile {
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut b = DVector::zeros(n);
        b[i] = 1.0;
        AffineProfile { b, c: 0.0 }
    }
}

impl Profile for AffineProfile {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError> {
        let n = at.x.len();
        Ok(Jet { value: self.b.dot(at.x) + self.c, grad: self.b.clone(), hess: DMatrix::zeros(n, n) })
    }
}

/// `c + <b, x> + ½ xᵀQx`.
#[derive(Debug, Clone)]
pub struct QuadraticProfile {
    pub c: f64,
    pub b: DVector<f64>,
    pub q: DMatrix<f64>,
}

impl Profile for QuadraticProfile {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError> {
        let x = at.x;
        let qx = &self.q * x;
        Ok(Jet { value: self.c + self.b.dot(x) + 0.5 * x.dot(&qx), grad: &self.b + qx, hess: self.q.clone() })
    }
}

/// `e^{−<α, ∇φ(x)>}`; derivatives through `∂_j∇φ = G e_j`.
#[derive(Debug, Clone)]
pub struct ExpGradientProfile {
    pub alpha: DVector<f64>,
}

impl Profile for ExpGradientProfile {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError> {
        let n = at.x.len();
        let e = (-self.alpha.dot(&at.potential.gradient(at.x)?)).exp();
        let ga = &at.metric.g * &self.alpha;
        let mut hess = &ga * ga.transpose();
        for i in 0..n {
            let dga = &at.metric.dg[i] * &self.alpha;
            for j in 0..n {
                hess[(i, j)] -= dga[j];
            }
        }
        Ok(Jet { value: e, grad: -ga * e, hess: hess * e })
    }
}

pub struct ProductProfile(pub Arc<dyn Profile>, pub Arc<dyn Profile>);

impl Profile for ProductProfile {
    fn jet(&self, at: &PointData) -> Result<Jet, PotentialError> {
        Ok(self.0.jet(at)?.product(&self.1.jet(at)?))
    }
}

/// `u(x)·e^{i<k,t>}` scaled by a complex coefficient.
#[derive(Clone)]
pub struct EquivariantFunction {
    pub mode: Vec<i64>,
    pub profile: Arc<dyn Profile>,
    pub coeff: Complex64,
}

impl EquivariantFunction {
    pub fn invariant(profile: Arc<dyn Profile>) -> Self {
        EquivariantFunction { mode: Vec::new(), profile, coeff: Complex64::new(1.0, 0.0) }
    }

    pub fn with_mode(mode: Vec<i64>, profile: Arc<dyn Profile>) -> Self {
        EquivariantFunction { mode, profile, coeff: Complex64::new(1.0, 0.0) }
    }

    /// Complex conjugate: mode `−k`, conjugated coefficient.
    pub fn conjugate(&self) -> Self {
        EquivariantFunction {
            mode: self.mode.iter().map(|k| -k).collect(),
            profile: self.profile.clone(),
            coeff: self.coeff.conj(),
        }
    }

    pub fn mode_vector(&self, n: usize) -> DVector<f64> {
        if self.mode.is_empty() {
            DVector::zeros(n)
        } else {
            DVector::from_iterator(n, self.mode.iter().map(|&k| k as f64))
        }
    }
}

/// Riemannian and symplectic gradients split into `x`- and `t`-components.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub riemannian_x: DVector<Complex64>,
    pub riemannian_t: DVector<Complex64>,
    pub symplectic_x: DVector<Complex64>,
    pub symplectic_t: DVector<Complex64>,
}

#[derive(Clone)]
pub struct OperatorContext {
    pub polytope: DelzantPolytope,
    pub potential: Arc<dyn SymplecticPotential>,
    pub soliton: DVector<f64>,
    pub scal_mean: f64,
    pub exec: Execution,
}

impl OperatorContext {
    pub fn new(polytope: DelzantPolytope, potential: Arc<dyn SymplecticPotential>, soliton: DVector<f64>) -> Self {
        let scal_mean = 2.0 * polytope.dim() as f64;
        OperatorContext { polytope, potential, soliton, scal_mean, exec: Execution::Parallel }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError> {
        if !self.potential.is_interior(x) {
            return Err(PotentialError::BoundaryEvaluation(x.iter().copied().collect()));
        }
        self.potential.metric(x)
    }

    pub fn jet(&self, profile: &dyn Profile, x: &DVector<f64>, metric: &MetricStack) -> Result<Jet, PotentialError> {
        profile.jet(&PointData { x, metric, potential: self.potential.as_ref() })
    }

    /// `−Σ ∂_iH_ij ∂_j u − Σ H_ij ∂_i∂_j u + (kᵀGk) u` for real profile data.
    pub fn laplacian_real(&self, m: &MetricStack, u: &Jet, k: &DVector<f64>) -> f64 {
        let div = m.divergence_h();
        -div.dot(&u.grad) - m.h.component_mul(&u.hess).sum() + k.dot(&(&m.g * k)) * u.value
    }

    pub fn drift_real(&self, m: &MetricStack, u: &Jet) -> f64 {
        -2.0 * self.soliton.dot(&(&m.h * &u.grad))
    }

    pub fn apply_laplacian(&self, f: &EquivariantFunction, x: &DVector<f64>) -> Result<Complex64, PotentialError> {
        let m = self.metric(x)?;
        let u = self.jet(f.profile.as_ref(), x, &m)?;
        Ok(f.coeff * self.laplacian_real(&m, &u, &f.mode_vector(self.dim())))
    }

    pub fn apply_weighted_laplacian(&self, f: &EquivariantFunction, x: &DVector<f64>) -> Result<Complex64, PotentialError> {
        let m = self.metric(x)?;
        let u = self.jet(f.profile.as_ref(), x, &m)?;
        let k = f.mode_vector(self.dim());
        Ok(f.coeff * (self.laplacian_real(&m, &u, &k) + self.drift_real(&m, &u)))
    }

    pub fn complex_weighted_real(&self, m: &MetricStack, u: &Jet, k: &DVector<f64>, orientation: i8) -> f64 {
        self.laplacian_real(m, u, k) + self.drift_real(m, u) - 2.0 * orientation as f64 * self.soliton.dot(k) * u.value
    }

    pub fn apply_complex_weighted_laplacian(&self, f: &EquivariantFunction, x: &DVector<f64>, orientation: i8) -> Result<Complex64, PotentialError> {
        let m = self.metric(x)?;
        let u = self.jet(f.profile.as_ref(), x, &m)?;
        Ok(f.coeff * self.complex_weighted_real(&m, &u, &f.mode_vector(self.dim()), orientation))
    }

    /// Weighted `Δ(uv) − vΔu − uΔv + 2<∇u, H∇v>` for invariant profiles.
    pub fn product_rule_check(&self, u: Arc<dyn Profile>, v: Arc<dyn Profile>, x: &DVector<f64>) -> Result<f64, PotentialError> {
        let m = self.metric(x)?;
        let k = DVector::zeros(self.dim());
        let ju = self.jet(u.as_ref(), x, &m)?;
        let jv = self.jet(v.as_ref(), x, &m)?;
        let juv = ju.product(&jv);
        let op = |j: &Jet| self.laplacian_real(&m, j, &k) + self.drift_real(&m, j);
        Ok(op(&juv) - jv.value * op(&ju) - ju.value * op(&jv) + 2.0 * ju.grad.dot(&(&m.h * &jv.grad)))
    }

    pub fn gradients(&self, f: &EquivariantFunction, x: &DVector<f64>) -> Result<Gradients, PotentialError> {
        let m = self.metric(x)?;
        let u = self.jet(f.profile.as_ref(), x, &m)?;
        let k = f.mode_vector(self.dim());
        let i = Complex64::new(0.0, 1.0);
        let c = |v: DVector<f64>, s: Complex64| v.map(|e| s * e);
        Ok(Gradients {
            riemannian_x: c(&m.h * &u.grad, f.coeff),
            riemannian_t: c(&m.g * &k, f.coeff * i * u.value),
            symplectic_x: c(k.clone(), -f.coeff * i * u.value),
            symplectic_t: c(u.grad.clone(), f.coeff),
        })
    }

    /// `−Σ_ij ∂²H_ij/∂x_i∂x_j`.
    pub fn abreu_scalar_curvature(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        Ok(abreu_from_metric(&self.metric(x)?))
    }

    /// `Ric_kl = −½ Σ_i ∂_i∂_k H_li` and `Lie_kl = Σ_i a_i ∂_k H_il`.
    pub fn ricci_and_lie_components(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), PotentialError> {
        let m = self.metric(x)?;
        let n = self.dim();
        let ric = DMatrix::from_fn(n, n, |k, l| -0.5 * (0..n).map(|i| m.d2h[i][k][(l, i)]).sum::<f64>());
        let lie = DMatrix::from_fn(n, n, |k, l| (0..n).map(|i| self.soliton[i] * m.dh[k][(i, l)]).sum::<f64>());
        Ok((ric, lie))
    }

    /// `S − Scal̄ + 2Δ<x, a>`.
    pub fn soliton_residual(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        let m = self.metric(x)?;
        let lap_a = -m.divergence_h().dot(&self.soliton);
        Ok(abreu_from_metric(&m) - self.scal_mean + 2.0 * lap_a)
    }

    /// Evaluates `op` at every grid point in parallel, preserving order.
    pub fn on_grid<R, F>(&self, grid: &[DVector<f64>], op: F) -> Result<Vec<R>, OperatorError>
    where
        R: Send,
        F: Fn(&DVector<f64>) -> Result<R, OperatorError> + Sync + Send,
    {
        if grid.is_empty() {
            return Err(OperatorError::EmptyGrid);
        }
        self.exec.try_map(grid, op)
    }
}

pub fn abreu_from_metric(m: &MetricStack) -> f64 {
    let n = m.h.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s -= m.d2h[i][j][(i, j)];
        }
    }
    s
}

/// Flat model `φ = |x|²/2` on an open box, for tests of sign conventions.
#[derive(Debug, Clone)]
pub struct FlatPotential {
    pub dim: usize,
}

impl SymplecticPotential for FlatPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn is_interior(&self, _x: &DVector<f64>) -> bool {
        true
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        Ok(0.5 * x.norm_squared())
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError> {
        Ok(x.clone())
    }
    fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError> {
        let n = self.dim;
        MetricStack::from_hessian(DMatrix::identity(n, n), vec![DMatrix::zeros(n, n); n], vec![vec![DMatrix::zeros(n, n); n]; n], x)
    }
}
