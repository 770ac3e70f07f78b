//! Demazure roots of an algebraic polytope.

use crate::error::{PolytopeError, RootError};
use crate::exec::Execution;
use crate::hpoly::{q, to_f64, HPolyhedron};
use crate::polytope::DelzantPolytope;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemazureRoot {
    pub alpha: Vec<i64>,
    pub distinguished_facet: usize,
    pub pairings: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootSet {
    pub roots: Vec<DemazureRoot>,
    pub semisimple: Vec<DemazureRoot>,
    pub unipotent: Vec<DemazureRoot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AutomorphismDimensions {
    pub dim_eta: usize,
    pub dim_reductive: usize,
    pub dim_unipotent: usize,
}

fn pairings(p: &DelzantPolytope, alpha: &[i64]) -> Vec<i64> {
    p.facets().iter().map(|f| f.normal.iter().zip(alpha).map(|(a, b)| a * b).sum()).collect()
}

/// Classifies an integer vector: `Some(ρ)` iff it pairs to 1 with facet ρ
/// and to at most 0 with every other facet.
pub fn root_facet(p: &DelzantPolytope, alpha: &[i64]) -> Option<usize> {
    let mut positive = pairings(p, alpha).into_iter().enumerate().filter(|(_, v)| *v > 0);
    match (positive.next(), positive.next()) {
        (Some((rho, 1)), None) => Some(rho),
        _ => None,
    }
}

fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for (l, h) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (*l..=*h).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Roots whose distinguished facet is `rho`, scanned over the integer
/// bounding box of the (bounded) real feasible region.
fn roots_for_facet(p: &DelzantPolytope, rho: usize) -> Result<Vec<DemazureRoot>, RootError> {
    let n = p.dim();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (r, f) in p.facets().iter().enumerate() {
        let nu: Vec<_> = f.normal.iter().map(|&v| q(v)).collect();
        let neg: Vec<_> = f.normal.iter().map(|&v| q(-v)).collect();
        if r == rho {
            rows.push(nu);
            rhs.push(q(1));
            rows.push(neg);
            rhs.push(q(-1));
        } else {
            rows.push(neg);
            rhs.push(q(0));
        }
    }
    let region = HPolyhedron { dim: n, rows, rhs };
    let verts = region.vertices();
    if verts.is_empty() {
        return Ok(Vec::new());
    }
    if !region.is_bounded() {
        return Err(RootError::UnboundedRootRegion { facet: rho });
    }
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for v in &verts {
        for i in 0..n {
            lo[i] = lo[i].min(v.point[i].floor().to_integer().try_into().unwrap_or(i64::MIN));
            hi[i] = hi[i].max(v.point[i].ceil().to_integer().try_into().unwrap_or(i64::MAX));
        }
    }
    let mut out = Vec::new();
    for alpha in box_points(&lo, &hi) {
        if root_facet(p, &alpha) == Some(rho) {
            let pairings = pairings(p, &alpha);
            out.push(DemazureRoot { alpha, distinguished_facet: rho, pairings });
        }
    }
    Ok(out)
}

/// All Demazure roots, sorted lexicographically, with the S/U split.
pub fn enumerate_roots(p: &DelzantPolytope, exec: Execution) -> Result<RootSet, RootError> {
    if !p.is_algebraic() {
        return Err(PolytopeError::NotAlgebraic.into());
    }
    let facets: Vec<usize> = (0..p.facets().len()).collect();
    let per_facet = exec.try_map(&facets, |&rho| roots_for_facet(p, rho))?;
    let mut roots: Vec<DemazureRoot> = per_facet.into_iter().flatten().collect();
    roots.sort_by(|a, b| a.alpha.cmp(&b.alpha));
    roots.dedup_by(|a, b| a.alpha == b.alpha);
    Ok(split_semisimple_unipotent(roots))
}

pub fn split_semisimple_unipotent(roots: Vec<DemazureRoot>) -> RootSet {
    let has = |v: &[i64]| roots.iter().any(|r| r.alpha == v);
    let (semisimple, unipotent): (Vec<_>, Vec<_>) = roots.iter().cloned().partition(|r| {
        let neg: Vec<i64> = r.alpha.iter().map(|v| -v).collect();
        has(&neg)
    });
    RootSet { roots, semisimple, unipotent }
}

pub fn automorphism_dimensions(r: &RootSet, n: usize) -> AutomorphismDimensions {
    AutomorphismDimensions {
        dim_eta: n + r.roots.len(),
        dim_reductive: n + r.semisimple.len(),
        dim_unipotent: r.unipotent.len(),
    }
}

/// Independent check: scan the box `[-B, B]^n` with `B = 1 + max |vertex coordinate|`.
pub fn brute_force_roots(p: &DelzantPolytope) -> Vec<Vec<i64>> {
    let b = 1 + p
        .vertices()
        .iter()
        .flat_map(|v| v.point.iter().map(to_f64))
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .ceil() as i64;
    let n = p.dim();
    box_points(&vec![-b; n], &vec![b; n]).into_iter().filter(|a| root_facet(p, a).is_some()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::examples::*;

    fn alphas(r: &[DemazureRoot]) -> Vec<Vec<i64>> {
        r.iter().map(|r| r.alpha.clone()).collect()
    }

    #[test]
    fn projective_plane_roots() {
        let r = enumerate_roots(&projective_plane(), Execution::Sequential).unwrap();
        assert_eq!(
            alphas(&r.roots),
            vec![vec![-1, 0], vec![-1, 1], vec![0, -1], vec![0, 1], vec![1, -1], vec![1, 0]]
        );
        assert_eq!(r.semisimple.len(), 6);
        assert!(r.unipotent.is_empty());
        let d = automorphism_dimensions(&r, 2);
        assert_eq!((d.dim_eta, d.dim_reductive, d.dim_unipotent), (8, 8, 0));
    }

    #[test]
    fn blow_up_roots() {
        let r = enumerate_roots(&blow_up(), Execution::Parallel).unwrap();
        assert_eq!(alphas(&r.roots), vec![vec![-1, -1], vec![-1, 0], vec![0, -1], vec![0, 1]]);
        assert_eq!(alphas(&r.semisimple), vec![vec![0, -1], vec![0, 1]]);
        assert_eq!(alphas(&r.unipotent), vec![vec![-1, -1], vec![-1, 0]]);
        let d = automorphism_dimensions(&r, 2);
        assert_eq!((d.dim_eta, d.dim_reductive, d.dim_unipotent), (6, 4, 2));
        for root in &r.roots {
            assert_eq!(root.pairings[root.distinguished_facet], 1);
        }
    }

    #[test]
    fn square_roots() {
        let r = enumerate_roots(&square(), Execution::Sequential).unwrap();
        assert_eq!(alphas(&r.roots), vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]);
        assert!(r.unipotent.is_empty());
        assert_eq!(automorphism_dimensions(&r, 2).dim_eta, 6);
    }

    #[test]
    fn hexagon_has_no_roots() {
        let normals = [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]];
        let facets = normals.iter().map(|n| crate::polytope::Facet::new(n.to_vec(), 1)).collect();
        let hex = DelzantPolytope::new(2, facets).unwrap();
        // pairs to 1 with two facets, so it is not a root
        assert_eq!(root_facet(&hex, &[0, 1]), None);
        assert!(enumerate_roots(&hex, Execution::Parallel).unwrap().roots.is_empty());
        assert!(brute_force_roots(&hex).is_empty());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for p in [projective_plane(), blow_up(), square()] {
            let r = enumerate_roots(&p, Execution::Parallel).unwrap();
            assert_eq!(alphas(&r.roots), brute_force_roots(&p));
        }
    }

    #[test]
    fn requires_algebraic() {
        assert_eq!(
            enumerate_roots(&blow_up_translated(), Execution::Sequential),
            Err(RootError::Polytope(PolytopeError::NotAlgebraic))
        );
    }
}
