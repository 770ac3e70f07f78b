//! Exact rational H-polyhedra `{x : <row_i, x> >= rhs_i}`: vertex
//! enumeration and recession-cone tests.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Gaussian elimination; returns reduced row echelon form and pivot columns.
fn rref(mut m: Vec<Vec<Q>>, cols: usize) -> (Vec<Vec<Q>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Q::from_integer(1.into()) / &m[row][col];
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..m[r].len() {
                    let t = &f * &m[row][c];
                    m[r][c] -= t;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    (m, pivots)
}

pub fn rank(rows: &[Vec<Q>], cols: usize) -> usize {
    rref(rows.to_vec(), cols).1.len()
}

/// Solves the square system `a x = b`; `None` if singular.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let aug: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (m, piv) = rref(aug, n);
    if piv.len() < n {
        return None;
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// A nonzero kernel vector of a rank-(n−1) system with n columns.
fn kernel_line(rows: &[Vec<Q>], n: usize) -> Option<Vec<Q>> {
    let (m, piv) = rref(rows.to_vec(), n);
    if piv.len() != n - 1 {
        return None;
    }
    let free = (0..n).find(|c| !piv.contains(c))?;
    let mut y = vec![Q::zero(); n];
    y[free] = q(1);
    for (r, &c) in piv.iter().enumerate() {
        y[c] = -m[r][free].clone();
    }
    Some(y)
}

/// Integer determinant via exact rational elimination.
pub fn det_int(m: &[Vec<i64>]) -> i64 {
    use num_traits::ToPrimitive;
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect();
    let mut det = q(1);
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return 0;
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det = &det * &a[col][col];
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            let (top, bottom) = a.split_at_mut(r);
            for (target, pivot) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *target -= &f * pivot;
            }
        }
    }
    det.to_integer().to_i64().expect("determinant fits in i64")
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            break;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct HPolyhedron {
    pub dim: usize,
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactVertex {
    pub point: Vec<Q>,
    pub active: Vec<usize>,
}

impl HPolyhedron {
    pub fn slack(&self, i: usize, x: &[Q]) -> Q {
        dot(&self.rows[i], x) - &self.rhs[i]
    }

    /// True iff the recession cone `{y : <row_i, y> >= 0}` is `{0}`.
    pub fn is_bounded(&self) -> bool {
        let n = self.dim;
        if rank(&self.rows, n) < n {
            return false;
        }
        if n == 1 {
            let pos = self.rows.iter().any(|r| r[0].is_positive());
            let neg = self.rows.iter().any(|r| r[0].is_negative());
            return pos && neg;
        }
        // an extreme ray satisfies n-1 independent constraints with equality
        for subset in combinations(self.rows.len(), n - 1) {
            let sub: Vec<Vec<Q>> = subset.iter().map(|&i| self.rows[i].clone()).collect();
            let Some(y) = kernel_line(&sub, n) else { continue };
            for sign in [1, -1] {
                let ys: Vec<Q> = y.iter().map(|v| v * q(sign)).collect();
                if self.rows.iter().all(|r| !dot(r, &ys).is_negative()) {
                    return false;
                }
            }
        }
        true
    }

    /// All distinct vertices, each with its full set of active constraints.
    pub fn vertices(&self) -> Vec<ExactVertex> {
        let n = self.dim;
        let mut found: BTreeMap<Vec<Q>, ()> = BTreeMap::new();
        for subset in combinations(self.rows.len(), n) {
            let a: Vec<Vec<Q>> = subset.iter().map(|&i| self.rows[i].clone()).collect();
            let b: Vec<Q> = subset.iter().map(|&i| self.rhs[i].clone()).collect();
            let Some(x) = solve(&a, &b) else { continue };
            if (0..self.rows.len()).all(|i| !self.slack(i, &x).is_negative()) {
                found.insert(x, ());
            }
        }
        found
            .into_keys()
            .map(|point| {
                let active = (0..self.rows.len()).filter(|&i| self.slack(i, &point).is_zero()).collect();
                ExactVertex { point, active }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> HPolyhedron {
        let rows = vec![vec![q(1), q(0)], vec![q(-1), q(0)], vec![q(0), q(1)], vec![q(0), q(-1)]];
        HPolyhedron { dim: 2, rows, rhs: vec![q(-1); 4] }
    }

    #[test]
    fn square_vertices_and_boundedness() {
        let p = square();
        assert!(p.is_bounded());
        let v = p.vertices();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|v| v.active.len() == 2));
    }

    #[test]
    fn half_strip_is_unbounded() {
        let mut p = square();
        p.rows.pop();
        p.rhs.pop();
        assert!(!p.is_bounded());
    }

    #[test]
    fn determinants() {
        assert_eq!(det_int(&[vec![1, 0], vec![-1, -2]]), -2);
        assert_eq!(det_int(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(det_int(&[vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 3]]), 3);
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4).len(), 1);
        assert!(combinations(2, 3).is_empty());
    }
}
