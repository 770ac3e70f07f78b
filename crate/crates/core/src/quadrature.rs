//! Centroid-fan triangulation of convex polygons and conical-product
//! Gauss rules on triangles.

use crate::error::SolverError;
use crate::exec::Execution;
use crate::gauss::gauss_legendre_unit;
use crate::polytope::DelzantPolytope;

pub const DEFAULT_ORDER: usize = 10;

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub simplices: Vec<[[f64; 2]; 3]>,
}

impl Triangulation {
    pub fn area(&self) -> f64 {
        self.simplices.iter().map(triangle_area).sum()
    }
}

pub fn triangle_area(t: &[[f64; 2]; 3]) -> f64 {
    let [a, b, c] = t;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

/// Vertices of a 2-D polytope in counter-clockwise order.
pub fn cyclic_vertices(p: &DelzantPolytope) -> Result<Vec<[f64; 2]>, SolverError> {
    if p.dim() != 2 {
        return Err(SolverError::UnsupportedDimension(p.dim()));
    }
    let pts: Vec<[f64; 2]> = p.vertices().iter().map(|v| {
        let c = v.point_f64();
        [c[0], c[1]]
    }).collect();
    let m = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / m;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / m;
    let mut pts = pts;
    pts.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.partial_cmp(&tb).unwrap()
    });
    Ok(pts)
}

/// Shoelace area of the polygon.
pub fn polygon_area(p: &DelzantPolytope) -> Result<f64, SolverError> {
    let v = cyclic_vertices(p)?;
    let n = v.len();
    Ok(0.5 * (0..n).map(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    }).sum::<f64>().abs())
}

pub fn triangulate(p: &DelzantPolytope) -> Result<Triangulation, SolverError> {
    let v = cyclic_vertices(p)?;
    let m = v.len() as f64;
    let c = [v.iter().map(|p| p[0]).sum::<f64>() / m, v.iter().map(|p| p[1]).sum::<f64>() / m];
    let simplices = (0..v.len()).map(|i| [c, v[i], v[(i + 1) % v.len()]]).collect();
    Ok(Triangulation { simplices })
}

/// Rule on the reference triangle (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Collapsed-square product rule exact for total degree `order`.
    pub fn conical(order: usize) -> Self {
        let m = order.max(1) / 2 + 1;
        let (u, wu) = gauss_legendre_unit(m + 1);
        let (v, wv) = gauss_legendre_unit(m);
        let mut nodes = Vec::with_capacity(u.len() * v.len());
        let mut weights = Vec::with_capacity(u.len() * v.len());
        for (ui, wi) in u.iter().zip(&wu) {
            for (vj, wj) in v.iter().zip(&wv) {
                nodes.push([*ui, vj * (1.0 - ui)]);
                weights.push(wi * wj * (1.0 - ui));
            }
        }
        QuadratureRule { order, nodes, weights }
    }

    fn on_triangle<F: Fn(f64, f64) -> f64>(&self, t: &[[f64; 2]; 3], f: &F) -> f64 {
        let [a, b, c] = t;
        let jac = 2.0 * triangle_area(t);
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(n, w)| {
            let x = a[0] + (b[0] - a[0]) * n[0] + (c[0] - a[0]) * n[1];
            let y = a[1] + (b[1] - a[1]) * n[0] + (c[1] - a[1]) * n[1];
            w * f(x, y)
        }).sum();
        s * jac
    }
}

/// Integral of `f` over the polygon; per-simplex sums are added in fixed order.
pub fn integrate<F>(p: &DelzantPolytope, f: F, order: usize, exec: Execution) -> Result<f64, SolverError>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let tri = triangulate(p)?;
    let rule = QuadratureRule::conical(order);
    Ok(exec.map(&tri.simplices, |t| rule.on_triangle(t, &f)).into_iter().sum())
}

/// Vector-valued variant: integrates all components of `f` in one pass.
pub fn integrate_many<F>(p: &DelzantPolytope, f: F, len: usize, order: usize, exec: Execution) -> Result<Vec<f64>, SolverError>
where
    F: Fn(f64, f64) -> Vec<f64> + Sync + Send,
{
    let tri = triangulate(p)?;
    let rule = QuadratureRule::conical(order);
    let parts = exec.map(&tri.simplices, |t| {
        let [a, b, c] = t;
        let jac = 2.0 * triangle_area(t);
        let mut acc = vec![0.0; len];
        for (n, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a[0] + (b[0] - a[0]) * n[0] + (c[0] - a[0]) * n[1];
            let y = a[1] + (b[1] - a[1]) * n[0] + (c[1] - a[1]) * n[1];
            for (s, v) in acc.iter_mut().zip(f(x, y)) {
                *s += w * jac * v;
            }
        }
        acc
    });
    let mut total = vec![0.0; len];
    for part in parts {
        for (s, v) in total.iter_mut().zip(part) {
            *s += v;
        }
    }
    Ok(total)
}
