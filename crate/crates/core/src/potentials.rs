//! Symplectic potentials and the derivative stack `G, H = G⁻¹, ∂G, ∂H, ∂²G, ∂²H`.

use crate::error::PotentialError;
use crate::gauss::integrate_adaptive;
use crate::polytope::DelzantPolytope;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Metric data at one interior point. `dg[k] = ∂G/∂x_k`, `d2h[k][l] = ∂²H/∂x_k∂x_l`.
#[derive(Debug, Clone)]
pub struct MetricStack {
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub dh: Vec<DMatrix<f64>>,
    pub d2g: Vec<Vec<DMatrix<f64>>>,
    pub d2h: Vec<Vec<DMatrix<f64>>>,
}

fn invert(m: &DMatrix<f64>, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| PotentialError::SingularHessian(x.iter().copied().collect()))
}

/// `∂_l∂_k M⁻¹` from the derivatives of `M` and of its inverse `N`.
fn second_of_inverse(n: &DMatrix<f64>, dm: &[DMatrix<f64>], dn: &[DMatrix<f64>], d2m: &[Vec<DMatrix<f64>>]) -> Vec<Vec<DMatrix<f64>>> {
    let dim = dm.len();
    (0..dim)
        .map(|k| {
            (0..dim)
                .map(|l| -(&dn[l] * &dm[k] * n) - n * &d2m[k][l] * n - n * &dm[k] * &dn[l])
                .collect()
        })
        .collect()
}

impl MetricStack {
    pub fn from_hessian(g: DMatrix<f64>, dg: Vec<DMatrix<f64>>, d2g: Vec<Vec<DMatrix<f64>>>, x: &DVector<f64>) -> Result<Self, PotentialError> {
        let h = invert(&g, x)?;
        let dh: Vec<DMatrix<f64>> = dg.iter().map(|d| -(&h * d * &h)).collect();
        let d2h = second_of_inverse(&h, &dg, &dh, &d2g);
        Ok(MetricStack { g, h, dg, dh, d2g, d2h })
    }

    pub fn from_inverse(h: DMatrix<f64>, dh: Vec<DMatrix<f64>>, d2h: Vec<Vec<DMatrix<f64>>>, x: &DVector<f64>) -> Result<Self, PotentialError> {
        let g = invert(&h, x)?;
        let dg: Vec<DMatrix<f64>> = dh.iter().map(|d| -(&g * d * &g)).collect();
        let d2g = second_of_inverse(&g, &dh, &dg, &d2h);
        Ok(MetricStack { g, h, dg, dh, d2g, d2h })
    }

    /// `Σ_i ∂H_ij/∂x_i` for each j.
    pub fn divergence_h(&self) -> DVector<f64> {
        let n = self.h.nrows();
        DVector::from_fn(n, |j, _| (0..n).map(|i| self.dh[i][(i, j)]).sum())
    }
}

/// A strictly convex potential on the interior of a polytope.
pub trait SymplecticPotential: Send + Sync {
    fn dim(&self) -> usize;
    fn is_interior(&self, x: &DVector<f64>) -> bool;
    fn value(&self, x: &DVector<f64>) -> Result<f64, PotentialError>;
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError>;
    fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError>;

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        Ok(self.metric(x)?.g)
    }
}

fn boundary(x: &DVector<f64>) -> PotentialError {
    PotentialError::BoundaryEvaluation(x.iter().copied().collect())
}

/// `φ₀ = ½ Σ L_r log L_r`.
#[derive(Debug, Clone)]
pub struct GuilleminPotential {
    polytope: DelzantPolytope,
}

pub fn guillemin(p: &DelzantPolytope) -> GuilleminPotential {
    GuilleminPotential { polytope: p.clone() }
}

impl GuilleminPotential {
    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    fn facet_values(&self, x: &DVector<f64>) -> Result<Vec<f64>, PotentialError> {
        let l = self.polytope.facet_values(x.as_slice());
        if l.iter().all(|&v| v > 0.0) {
            Ok(l)
        } else {
            Err(boundary(x))
        }
    }
}

impl SymplecticPotential for GuilleminPotential {
    fn dim(&self) -> usize {
        self.polytope.dim()
    }

    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.polytope.is_interior(x.as_slice())
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        Ok(0.5 * self.facet_values(x)?.iter().map(|l| l * l.ln()).sum::<f64>())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError> {
        let l = self.facet_values(x)?;
        let mut g = DVector::zeros(self.dim());
        for (nu, lr) in self.polytope.normals_f64().iter().zip(&l) {
            g += nu * (0.5 * (1.0 + lr.ln()));
        }
        Ok(g)
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        let l = self.facet_values(x)?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for (nu, lr) in self.polytope.normals_f64().iter().zip(&l) {
            g += nu * nu.transpose() * (0.5 / lr);
        }
        Ok(g)
    }

    fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError> {
        let l = self.facet_values(x)?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        let mut d2g = vec![vec![DMatrix::zeros(n, n); n]; n];
        for (nu, lr) in self.polytope.normals_f64().iter().zip(&l) {
            let outer = nu * nu.transpose();
            g += &outer * (0.5 / lr);
            for k in 0..n {
                dg[k] += &outer * (-0.5 * nu[k] / (lr * lr));
                for m in 0..n {
                    d2g[k][m] += &outer * (nu[k] * nu[m] / (lr * lr * lr));
                }
            }
        }
        MetricStack::from_hessian(g, dg, d2g, x)
    }
}

/// Smooth function with derivatives to fourth order, added to a base potential.
pub trait Perturbation: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// `∂/∂x_k` of the Hessian.
    fn third(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>>;
    /// `∂²/∂x_k∂x_l` of the Hessian.
    fn fourth(&self, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>>;
}

/// `ε|x|²/2`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticPerturbation {
    pub eps: f64,
}

impl Perturbation for QuadraticPerturbation {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.eps * x.norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.eps
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len()) * self.eps
    }
    fn third(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(x.len(), x.len()); x.len()]
    }
    fn fourth(&self, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>> {
        vec![vec![DMatrix::zeros(x.len(), x.len()); x.len()]; x.len()]
    }
}

/// `<c, x>`.
#[derive(Debug, Clone)]
pub struct AffinePerturbation {
    pub c: DVector<f64>,
}

impl Perturbation for AffinePerturbation {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }
    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.c.clone()
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
    fn third(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(x.len(), x.len()); x.len()]
    }
    fn fourth(&self, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>> {
        vec![vec![DMatrix::zeros(x.len(), x.len()); x.len()]; x.len()]
    }
}

/// `ε <c, x>³ / 6`.
#[derive(Debug, Clone)]
pub struct CubicPerturbation {
    pub eps: f64,
    pub c: DVector<f64>,
}

impl Perturbation for CubicPerturbation {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.eps * self.c.dot(x).powi(3) / 6.0
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * (0.5 * self.eps * self.c.dot(x).powi(2))
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.c * self.c.transpose() * (self.eps * self.c.dot(x))
    }
    fn third(&self, _x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let cc = &self.c * self.c.transpose();
        self.c.iter().map(|ck| &cc * (self.eps * ck)).collect()
    }
    fn fourth(&self, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>> {
        vec![vec![DMatrix::zeros(x.len(), x.len()); x.len()]; x.len()]
    }
}

/// `base + h`; the derivative stack is the sum of stacks and `H` is recomputed.
pub struct PerturbedPotential {
    base: Arc<dyn SymplecticPotential>,
    h: Arc<dyn Perturbation>,
}

/// Errors with `LossOfConvexity` if the summed Hessian fails to be positive
/// definite at one of `samples`.
pub fn perturbed(
    base: Arc<dyn SymplecticPotential>,
    h: Arc<dyn Perturbation>,
    samples: &[DVector<f64>],
) -> Result<PerturbedPotential, PotentialError> {
    let p = PerturbedPotential { base, h };
    for x in samples {
        let g = p.hessian(x)?;
        if g.cholesky().is_none() {
            return Err(PotentialError::LossOfConvexity(x.iter().copied().collect()));
        }
    }
    Ok(p)
}

impl SymplecticPotential for PerturbedPotential {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.base.is_interior(x)
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        Ok(self.base.value(x)? + self.h.value(x))
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError> {
        Ok(self.base.gradient(x)? + self.h.gradient(x))
    }
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        Ok(self.base.hessian(x)? + self.h.hessian(x))
    }
    fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError> {
        let b = self.base.metric(x)?;
        let g = b.g + self.h.hessian(x);
        let dg = b.dg.into_iter().zip(self.h.third(x)).map(|(a, c)| a + c).collect();
        let d2g = b
            .d2g
            .into_iter()
            .zip(self.h.fourth(x))
            .map(|(ra, rc)| ra.into_iter().zip(rc).map(|(a, c)| a + c).collect())
            .collect();
        let stack = MetricStack::from_hessian(g, dg, d2g, x)
            .map_err(|_| PotentialError::LossOfConvexity(x.iter().copied().collect()))?;
        Ok(stack)
    }
}

/// `∇φ(x) − ∇φ(x0) = ∫₀¹ G(x0 + s(x − x0))(x − x0) ds`, integrated adaptively.
pub fn gradient_by_line_integral<F>(hessian: F, x: &DVector<f64>, x0: &DVector<f64>, tol: f64) -> Result<DVector<f64>, PotentialError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, PotentialError>,
{
    let d = x - x0;
    if d.norm() == 0.0 {
        return Ok(DVector::zeros(x.len()));
    }
    integrate_adaptive(|s| hessian(&(x0 + &d * s)).map(|g| g * &d), 0.0, 1.0, tol).map_err(|_| PotentialError::SegmentExitsInterior)
}

/// Tensor grid of `n`×`n` points over the bounding box, keeping points with
/// all facet values at least `margin · spread`.
pub fn interior_grid(p: &DelzantPolytope, n: usize, margin: f64) -> Vec<DVector<f64>> {
    let (lo, hi) = p.bounding_box();
    let delta = margin * p.spread();
    let coord = |i: usize, j: usize| {
        if n <= 1 {
            0.5 * (lo[i] + hi[i])
        } else {
            lo[i] + (hi[i] - lo[i]) * j as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let x = [coord(0, a), coord(1, b)];
            if p.min_facet_value(&x) >= delta && p.is_interior(&x) {
                out.push(DVector::from_row_slice(&x));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::examples::*;
    use approx::assert_relative_eq;

    fn v(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn guillemin_at_origin() {
        let g = guillemin(&projective_plane());
        let o = v(0.0, 0.0);
        assert!(g.gradient(&o).unwrap().norm() < 1e-15);
        let m = g.metric(&o).unwrap();
        assert_relative_eq!(m.g, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]), epsilon = 1e-15);
        let h = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) * (2.0 / 3.0);
        assert_relative_eq!(m.h, h, epsilon = 1e-14);
        assert!(matches!(g.metric(&v(-1.0, -1.0)), Err(PotentialError::BoundaryEvaluation(_))));
    }

    #[test]
    fn perturbation_examples() {
        let base: Arc<dyn SymplecticPotential> = Arc::new(guillemin(&projective_plane()));
        let x = v(0.2, -0.3);
        let b = base.metric(&x).unwrap();
        let q = perturbed(base.clone(), Arc::new(QuadraticPerturbation { eps: 0.3 }), std::slice::from_ref(&x)).unwrap();
        assert_relative_eq!(q.metric(&x).unwrap().g, &b.g + DMatrix::identity(2, 2) * 0.3, epsilon = 1e-14);
        let c = v(0.5, -2.0);
        let a = perturbed(base.clone(), Arc::new(AffinePerturbation { c: c.clone() }), std::slice::from_ref(&x)).unwrap();
        assert_relative_eq!(a.metric(&x).unwrap().h, b.h, epsilon = 1e-14);
        assert_relative_eq!(a.gradient(&x).unwrap(), base.gradient(&x).unwrap() + c, epsilon = 1e-14);
        let z = perturbed(base.clone(), Arc::new(QuadraticPerturbation { eps: 0.0 }), &[]).unwrap();
        assert_relative_eq!(z.metric(&x).unwrap().dh[1], b.dh[1], epsilon = 1e-15);
        let bad = perturbed(base, Arc::new(QuadraticPerturbation { eps: -5.0 }), &[x]);
        assert!(matches!(bad, Err(PotentialError::LossOfConvexity(_))));
    }

    #[test]
    fn line_integral_examples() {
        let id = |_: &DVector<f64>| Ok(DMatrix::identity(2, 2));
        let x = v(0.3, -0.7);
        assert_relative_eq!(gradient_by_line_integral(id, &x, &v(0.0, 0.0), 1e-12).unwrap(), x, epsilon = 1e-14);

        let g = guillemin(&projective_plane());
        let (x0, x) = (v(0.4, 0.1), v(-0.6, 0.9));
        let got = gradient_by_line_integral(|y| g.hessian(y), &x, &x0, 1e-12).unwrap();
        let want = g.gradient(&x).unwrap() - g.gradient(&x0).unwrap();
        assert_relative_eq!(got, want, epsilon = 1e-9);

        let out = gradient_by_line_integral(|y| g.hessian(y), &v(5.0, 5.0), &x0, 1e-12);
        assert_eq!(out, Err(PotentialError::SegmentExitsInterior));
    }

    #[test]
    fn grid_respects_margin() {
        let p = projective_plane();
        let grid = interior_grid(&p, 21, 0.05);
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|x| p.min_facet_value(x.as_slice()) >= 0.15 - 1e-12));
    }
}
