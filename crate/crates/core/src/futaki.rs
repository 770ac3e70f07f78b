//! Soliton vector from the vanishing of the weighted Futaki invariant.
//!
//! The soliton vector `a` is stored so that the Futaki measure is
//! `e^{2<a,x>} dx`; on the blow-up trapezoid this puts `a₁` in (−1/2, 0).
//! `V(a) = ∫ e^{2<a,x>}` is strictly convex and coercive when the origin is
//! interior, and its critical point is the soliton vector.

use crate::error::SolverError;
use crate::exec::Execution;
use crate::polytope::DelzantPolytope;
use crate::quadrature::{integrate_many, DEFAULT_ORDER};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

const MAX_ITER: usize = 100;
const MAX_ORDER: usize = 60;

#[derive(Debug, Clone)]
pub struct WeightedVolume {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// `V(a)`, `∇V = 2∫x e^{2<a,x>}`, `∇²V = 4∫xxᵀ e^{2<a,x>}`.
pub fn weighted_volume(p: &DelzantPolytope, a: &DVector<f64>, order: usize, exec: Execution) -> Result<WeightedVolume, SolverError> {
    if p.dim() != 2 {
        return Err(SolverError::UnsupportedDimension(p.dim()));
    }
    let (a0, a1) = (a[0], a[1]);
    let m = integrate_many(
        p,
        |x, y| {
            let w = (2.0 * (a0 * x + a1 * y)).exp();
            vec![w, x * w, y * w, x * x * w, x * y * w, y * y * w]
        },
        6,
        order,
        exec,
    )?;
    Ok(WeightedVolume {
        value: m[0],
        gradient: DVector::from_vec(vec![2.0 * m[1], 2.0 * m[2]]),
        hessian: DMatrix::from_row_slice(2, 2, &[4.0 * m[3], 4.0 * m[4], 4.0 * m[4], 4.0 * m[5]]),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub a: Vec<f64>,
    pub value: f64,
    pub relative_gradient: f64,
    pub step_length: f64,
    pub min_hessian_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonData {
    pub a: Vec<f64>,
    pub lambda: f64,
    /// `|∫ f w − f(0) ∫ w| / ∫ w` for f in {1, x₁, …, x_n}.
    pub futaki_residuals: Vec<f64>,
    pub futaki_residual: f64,
    pub iterations: Vec<IterationRecord>,
    pub quadrature_order: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub tol: f64,
    pub order: usize,
    pub exec: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, order: DEFAULT_ORDER, exec: Execution::Parallel }
    }
}

fn newton(p: &DelzantPolytope, cfg: &SolverConfig, order: usize) -> Result<(DVector<f64>, Vec<IterationRecord>), SolverError> {
    let mut a = DVector::zeros(p.dim());
    let mut trace = Vec::new();
    let mut wv = weighted_volume(p, &a, order, cfg.exec)?;
    for _ in 0..MAX_ITER {
        let rel = wv.gradient.norm() / wv.value;
        let min_eig = wv.hessian.clone().symmetric_eigen().eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(SolverError::IndefiniteHessian(min_eig));
        }
        let step = wv.hessian.clone().cholesky().ok_or(SolverError::IndefiniteHessian(min_eig))?.solve(&(-&wv.gradient));
        let mut record = IterationRecord {
            a: a.iter().copied().collect(),
            value: wv.value,
            relative_gradient: rel,
            step_length: 0.0,
            min_hessian_eigenvalue: min_eig,
        };
        if rel <= cfg.tol {
            trace.push(record);
            return Ok((a, trace));
        }
        let mut t = 1.0;
        loop {
            let trial = &a + &step * t;
            let next = weighted_volume(p, &trial, order, cfg.exec)?;
            if next.value <= wv.value || t < 1e-12 {
                a = trial;
                wv = next;
                break;
            }
            t *= 0.5;
        }
        record.step_length = t * step.norm();
        trace.push(record);
    }
    Err(SolverError::NonConvergence { iterations: MAX_ITER, residual: wv.gradient.norm() / wv.value })
}

/// Damped Newton minimisation of `V` from `a = 0`.
///
/// Non-algebraic input is normalized first; the returned `a` refers to
/// the algebraic polytope.
pub fn solve_soliton_vector(p: &DelzantPolytope, cfg: &SolverConfig) -> Result<SolitonData, SolverError> {
    let p = p.normalize_algebraic()?;
    if p.dim() != 2 {
        return Err(SolverError::UnsupportedDimension(p.dim()));
    }
    let mut order = cfg.order.max(2);
    let (mut a, mut trace) = newton(&p, cfg, order)?;
    // raise the quadrature order until successive rules agree at the solution
    loop {
        let lo = weighted_volume(&p, &a, order, cfg.exec)?;
        let hi = weighted_volume(&p, &a, order + 4, cfg.exec)?;
        let diff = (&lo.gradient - &hi.gradient).norm() / hi.value;
        if diff <= 0.1 * cfg.tol {
            break;
        }
        order += 4;
        if order > MAX_ORDER {
            return Err(SolverError::QuadratureNotConverged(MAX_ORDER));
        }
        (a, trace) = newton(&p, cfg, order)?;
    }
    let wv = weighted_volume(&p, &a, order, cfg.exec)?;
    let mut residuals = vec![0.0];
    residuals.extend(wv.gradient.iter().map(|g| (0.5 * g / wv.value).abs()));
    let futaki_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SolitonData {
        a: a.iter().copied().collect(),
        lambda: 1.0,
        futaki_residuals: residuals,
        futaki_residual,
        iterations: trace,
        quadrature_order: order,
    })
}

/// `λ = Scal̄ / 2n`.
pub fn einstein_constant(scal_mean: f64, n: usize) -> f64 {
    scal_mean / (2.0 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::examples::*;
    use approx::assert_relative_eq;

    #[test]
    fn volume_at_zero() {
        let z = DVector::zeros(2);
        let w = weighted_volume(&projective_plane(), &z, 10, Execution::Sequential).unwrap();
        assert_relative_eq!(w.value, 4.5, epsilon = 1e-12);
        assert!(w.gradient.norm() < 1e-12);
        // exact moments of the trapezoid: ∫x = 2/3, ∫y = 1/3
        let w = weighted_volume(&blow_up(), &z, 10, Execution::Sequential).unwrap();
        assert_relative_eq!(w.value, 4.0, epsilon = 1e-12);
        assert_relative_eq!(w.gradient[0], 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(w.gradient[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solves_examples() {
        let cfg = SolverConfig::default();
        let s = solve_soliton_vector(&projective_plane(), &cfg).unwrap();
        assert!(s.a.iter().all(|v| v.abs() < 1e-10));
        let s = solve_soliton_vector(&blow_up(), &cfg).unwrap();
        assert!(s.a[1].abs() < 1e-8);
        assert!(s.a[0] > -0.5 && s.a[0] < 0.0);
        assert!(s.futaki_residual <= 1e-10);
        let t = solve_soliton_vector(&blow_up_translated(), &cfg).unwrap();
        assert_relative_eq!(t.a[0], s.a[0], epsilon = 1e-12);
        assert!(s.iterations.iter().all(|r| r.min_hessian_eigenvalue > 0.0));
    }

    #[test]
    fn einstein() {
        assert_eq!(einstein_constant(4.0, 2), 1.0);
        assert_eq!(einstein_constant(0.0, 2), 0.0);
        for n in 1..6 {
            assert_eq!(einstein_constant(2.0 * n as f64, n), 1.0);
        }
    }
}
