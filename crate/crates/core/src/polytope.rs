//! Delzant polytopes `{x : <ν_r, x> + λ_r >= 0}` with exact rational offsets.

use crate::error::PolytopeError;
use crate::hpoly::{dot, q, rank, solve, to_f64, HPolyhedron, Q};
use nalgebra::DVector;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::Value;
use std::str::FromStr;

/// Tolerance on the privileged-center residual.
pub const CENTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: Q,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: i64) -> Self {
        Facet { normal, offset: q(offset) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Vec<Q>,
    pub active: Vec<usize>,
}

impl Vertex {
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(to_f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivilegedCenter {
    pub point: Vec<Q>,
    pub common_value: Q,
    pub residual: f64,
}

impl PrivilegedCenter {
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(to_f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexDeterminant {
    pub vertex: usize,
    pub det: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelzantVerdict {
    pub passes: bool,
    pub determinants: Vec<VertexDeterminant>,
}

#[derive(Debug, Clone)]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vertex>,
    normals_f: Vec<DVector<f64>>,
    offsets_f: Vec<f64>,
}

impl PartialEq for DelzantPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.facets == other.facets
    }
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

impl DelzantPolytope {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self, PolytopeError> {
        if dim == 0 {
            return Err(PolytopeError::Malformed("dimension must be positive".into()));
        }
        for (i, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(PolytopeError::DimensionMismatch { expected: dim, got: f.normal.len() });
            }
            match gcd_all(&f.normal) {
                0 => return Err(PolytopeError::ZeroNormal { facet: i }),
                1 => {}
                _ => return Err(PolytopeError::NonPrimitiveNormal { facet: i, normal: f.normal.clone() }),
            }
        }
        let h = HPolyhedron {
            dim,
            rows: facets.iter().map(|f| f.normal.iter().map(|&v| q(v)).collect()).collect(),
            rhs: facets.iter().map(|f| -f.offset.clone()).collect(),
        };
        if facets.len() <= dim || !h.is_bounded() {
            return Err(PolytopeError::Unbounded);
        }
        let raw = h.vertices();
        if raw.is_empty() {
            return Err(PolytopeError::EmptyInterior);
        }
        // full-dimensional iff the vertex differences span R^n
        let diffs: Vec<Vec<Q>> = raw[1..]
            .iter()
            .map(|v| v.point.iter().zip(&raw[0].point).map(|(a, b)| a - b).collect())
            .collect();
        if diffs.is_empty() || rank(&diffs, dim) < dim {
            return Err(PolytopeError::EmptyInterior);
        }
        for v in &raw {
            if v.active.len() > dim {
                return Err(PolytopeError::DegenerateVertex {
                    point: v.point.iter().map(to_f64).collect(),
                    active: v.active.len(),
                });
            }
        }
        for r in 0..facets.len() {
            if raw.iter().filter(|v| v.active.contains(&r)).count() < dim {
                return Err(PolytopeError::RedundantFacet { facet: r });
            }
        }
        let vertices = raw.into_iter().map(|v| Vertex { point: v.point, active: v.active }).collect();
        let normals_f = facets
            .iter()
            .map(|f| DVector::from_iterator(dim, f.normal.iter().map(|&v| v as f64)))
            .collect();
        let offsets_f = facets.iter().map(|f| to_f64(&f.offset)).collect();
        Ok(DelzantPolytope { dim, facets, vertices, normals_f, offsets_f })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn normals_f64(&self) -> &[DVector<f64>] {
        &self.normals_f
    }

    pub fn offsets_f64(&self) -> &[f64] {
        &self.offsets_f
    }

    /// Facet values `L_r(x) = <ν_r, x> + λ_r`.
    pub fn facet_values(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        self.normals_f
            .iter()
            .zip(&self.offsets_f)
            .map(|(n, l)| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + l)
            .collect()
    }

    pub fn min_facet_value(&self, x: &[f64]) -> f64 {
        self.facet_values(x).into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        self.min_facet_value(x) > 0.0
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.facet_values(x)
            .iter()
            .zip(&self.normals_f)
            .map(|(l, n)| l / n.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_algebraic(&self) -> bool {
        self.facets.iter().all(|f| f.offset.is_one())
    }

    /// Coordinate-wise bounding box `(lo, hi)` of the vertices.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for (i, c) in v.point_f64().into_iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        (lo, hi)
    }

    /// Largest coordinate range among the vertices.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn delzant_check(&self) -> DelzantVerdict {
        let determinants: Vec<VertexDeterminant> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let m: Vec<Vec<i64>> = v.active.iter().map(|&r| self.facets[r].normal.clone()).collect();
                VertexDeterminant { vertex: i, det: crate::hpoly::det_int(&m) }
            })
            .collect();
        let passes = determinants.iter().all(|d| d.det.abs() == 1);
        DelzantVerdict { passes, determinants }
    }

    /// Errors with the first offending vertex if the polytope is not Delzant.
    pub fn require_delzant(&self) -> Result<(), PolytopeError> {
        match self.delzant_check().determinants.into_iter().find(|d| d.det.abs() != 1) {
            Some(d) => Err(PolytopeError::NotDelzant { vertex: d.vertex, det: d.det }),
            None => Ok(()),
        }
    }

    /// Least-squares solve of `<ν_r, x> + λ_r = c` for `(x, c)`.
    pub fn privileged_center(&self) -> Result<PrivilegedCenter, PolytopeError> {
        let n = self.dim;
        let rows: Vec<Vec<Q>> = self
            .facets
            .iter()
            .map(|f| {
                let mut r: Vec<Q> = f.normal.iter().map(|&v| q(v)).collect();
                r.push(q(-1));
                r
            })
            .collect();
        let rhs: Vec<Q> = self.facets.iter().map(|f| -f.offset.clone()).collect();
        let ata: Vec<Vec<Q>> = (0..=n)
            .map(|i| (0..=n).map(|j| rows.iter().fold(Q::zero(), |s, r| s + &r[i] * &r[j])).collect())
            .collect();
        let atb: Vec<Q> = (0..=n).map(|i| rows.iter().zip(&rhs).fold(Q::zero(), |s, (r, b)| s + &r[i] * b)).collect();
        let sol = solve(&ata, &atb).ok_or(PolytopeError::NotFano { residual: f64::INFINITY })?;
        let residual = rows
            .iter()
            .zip(&rhs)
            .map(|(r, b)| to_f64(&(dot(r, &sol) - b)).powi(2))
            .sum::<f64>()
            .sqrt();
        let c = sol[n].clone();
        if residual > CENTER_TOL || !c.is_positive() {
            return Err(PolytopeError::NotFano { residual });
        }
        Ok(PrivilegedCenter { point: sol[..n].to_vec(), common_value: c, residual })
    }

    /// The image under `x ↦ (x − center)/c`, whose offsets are all 1.
    pub fn normalize_algebraic(&self) -> Result<DelzantPolytope, PolytopeError> {
        if self.is_algebraic() {
            return Ok(self.clone());
        }
        self.privileged_center()?;
        let facets = self.facets.iter().map(|f| Facet { normal: f.normal.clone(), offset: Q::one() }).collect();
        DelzantPolytope::new(self.dim, facets)
    }

    /// Machine-readable form accepted by [`parse_polytope`].
    pub fn to_json(&self) -> Value {
        let facets: Vec<Value> = self
            .facets
            .iter()
            .map(|f| serde_json::json!({ "normal": f.normal, "offset": rational_to_json(&f.offset) }))
            .collect();
        serde_json::json!({ "dim": self.dim, "facets": facets })
    }
}

pub fn rational_to_json(r: &Q) -> Value {
    if r.is_integer() {
        if let Ok(i) = i64::try_from(r.to_integer()) {
            return Value::from(i);
        }
    }
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

/// Exact parse of integers, decimal literals (with optional exponent) and `p/q`.
pub fn parse_rational(s: &str) -> Result<Q, PolytopeError> {
    let s = s.trim();
    let bad = || PolytopeError::Malformed(format!("invalid number '{s}'"));
    if let Some((p, d)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(p, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num = BigInt::from_str(&format!("{int}{frac}")).map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Q::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Parses `{"dim": n, "facets": [{"normal": [..], "offset": ..}, ..]}`.
pub fn parse_polytope(source: &str) -> Result<DelzantPolytope, PolytopeError> {
    let doc: Value = serde_json::from_str(source).map_err(|e| PolytopeError::Malformed(e.to_string()))?;
    polytope_from_json(&doc)
}

pub fn polytope_from_json(doc: &Value) -> Result<DelzantPolytope, PolytopeError> {
    let bad = |m: &str| PolytopeError::Malformed(m.to_string());
    let dim = doc.get("dim").and_then(Value::as_u64).ok_or_else(|| bad("missing or invalid 'dim'"))? as usize;
    let list = doc.get("facets").and_then(Value::as_array).ok_or_else(|| bad("missing 'facets' array"))?;
    let mut facets = Vec::with_capacity(list.len());
    for (i, f) in list.iter().enumerate() {
        let normal = f
            .get("normal")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(&format!("facet {i}: missing 'normal'")))?
            .iter()
            .map(|v| v.as_i64().ok_or_else(|| bad(&format!("facet {i}: normal entries must be integers"))))
            .collect::<Result<Vec<i64>, _>>()?;
        let offset = match f.get("offset") {
            Some(Value::Number(n)) => parse_rational(&n.to_string())?,
            Some(Value::String(s)) => parse_rational(s)?,
            _ => return Err(bad(&format!("facet {i}: missing or invalid 'offset'"))),
        };
        facets.push(Facet { normal, offset });
    }
    DelzantPolytope::new(dim, facets)
}

/// Standard examples used throughout the tests and the CLI.
pub mod examples {
    use super::*;

    fn build(normals: &[[i64; 2]], offsets: &[i64]) -> DelzantPolytope {
        let facets = normals.iter().zip(offsets).map(|(n, &o)| Facet::new(n.to_vec(), o)).collect();
        DelzantPolytope::new(2, facets).expect("valid example polytope")
    }

    /// The moment simplex of the projective plane.
    pub fn projective_plane() -> DelzantPolytope {
        build(&[[1, 0], [0, 1], [-1, -1]], &[1, 1, 1])
    }

    /// The algebraic trapezoid of the plane blown up at one point.
    pub fn blow_up() -> DelzantPolytope {
        build(&[[0, 1], [-1, 0], [1, 0], [1, -1]], &[1, 1, 1, 1])
    }

    /// The blow-up trapezoid translated by (2, 1).
    pub fn blow_up_translated() -> DelzantPolytope {
        build(&[[0, 1], [-1, 0], [1, 0], [1, -1]], &[0, 3, -1, 0])
    }

    /// The square of the product of two projective lines.
    pub fn square() -> DelzantPolytope {
        build(&[[1, 0], [-1, 0], [0, 1], [0, -1]], &[1, 1, 1, 1])
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;

    fn pts(p: &DelzantPolytope) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = p.vertices().iter().map(|v| v.point_f64()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn example_vertices() {
        assert_eq!(pts(&projective_plane()), vec![vec![-1.0, -1.0], vec![-1.0, 2.0], vec![2.0, -1.0]]);
        assert_eq!(
            pts(&blow_up()),
            vec![vec![-1.0, -1.0], vec![-1.0, 0.0], vec![1.0, -1.0], vec![1.0, 2.0]]
        );
        assert_eq!(pts(&square()).len(), 4);
    }

    #[test]
    fn facet_value_examples() {
        let p = projective_plane();
        assert_eq!(p.facet_values(&[0.0, 0.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(p.facet_values(&[2.0, -1.0]), vec![3.0, 0.0, 0.0]);
        assert_eq!(blow_up().facet_values(&[0.5, 0.5]), vec![1.5, 0.5, 1.5, 1.0]);
    }

    #[test]
    fn parse_examples() {
        let p = parse_polytope(
            r#"{"dim":2,"facets":[{"normal":[1,0],"offset":1},{"normal":[0,1],"offset":"1"},{"normal":[-1,-1],"offset":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(p, projective_plane());
        let err = parse_polytope(r#"{"dim":2,"facets":[{"normal":[2,4],"offset":1},{"normal":[0,1],"offset":1},{"normal":[-1,-1],"offset":1}]}"#);
        assert!(matches!(err, Err(PolytopeError::NonPrimitiveNormal { facet: 0, .. })));
        assert!(matches!(parse_polytope("{"), Err(PolytopeError::Malformed(_))));
        let strip = r#"{"dim":2,"facets":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":1},{"normal":[0,1],"offset":1}]}"#;
        assert_eq!(parse_polytope(strip), Err(PolytopeError::Unbounded));
        let empty = r#"{"dim":2,"facets":[{"normal":[1,0],"offset":-2},{"normal":[-1,0],"offset":1},{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":1}]}"#;
        assert_eq!(parse_polytope(empty), Err(PolytopeError::EmptyInterior));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6").unwrap(), Q::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-0.25").unwrap(), Q::new((-1).into(), 4.into()));
        assert_eq!(parse_rational("1.5e2").unwrap(), q(150));
        assert_eq!(parse_rational("2.5E-1").unwrap(), Q::new(1.into(), 4.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn redundant_and_degenerate() {
        let mut facets: Vec<Facet> = square().facets().to_vec();
        facets.push(Facet::new(vec![1, 1], 5));
        assert_eq!(DelzantPolytope::new(2, facets).unwrap_err(), PolytopeError::RedundantFacet { facet: 4 });
        let mut facets: Vec<Facet> = square().facets().to_vec();
        facets.push(Facet::new(vec![1, 1], 2));
        assert!(matches!(DelzantPolytope::new(2, facets), Err(PolytopeError::DegenerateVertex { .. })));
    }

    #[test]
    fn delzant_verdicts() {
        assert!(projective_plane().delzant_check().passes);
        assert!(blow_up().delzant_check().passes);
        let t = DelzantPolytope::new(
            2,
            vec![Facet::new(vec![1, 0], 1), Facet::new(vec![0, 1], 1), Facet::new(vec![-1, -2], 1)],
        )
        .unwrap();
        let v = t.delzant_check();
        assert!(!v.passes);
        let bad: Vec<_> = v.determinants.iter().filter(|d| d.det.abs() != 1).collect();
        assert_eq!(bad.len(), 1);
        let vert = &t.vertices()[bad[0].vertex];
        assert_eq!(vert.active, vec![0, 2]);
        assert_eq!(vert.point_f64(), vec![-1.0, 1.0]);
        assert_eq!(bad[0].det.abs(), 2);
        assert!(matches!(t.require_delzant(), Err(PolytopeError::NotDelzant { .. })));
    }

    #[test]
    fn centers_and_normalization() {
        let c = projective_plane().privileged_center().unwrap();
        assert_eq!(c.point_f64(), vec![0.0, 0.0]);
        assert!(c.common_value.is_one());
        let t = blow_up_translated();
        let c = t.privileged_center().unwrap();
        assert_eq!(c.point_f64(), vec![2.0, 1.0]);
        assert_eq!(t.normalize_algebraic().unwrap(), blow_up());
        let sq2 = DelzantPolytope::new(
            2,
            square().facets().iter().map(|f| Facet { normal: f.normal.clone(), offset: q(2) }).collect(),
        )
        .unwrap();
        assert_eq!(sq2.normalize_algebraic().unwrap(), square());
        let lopsided = DelzantPolytope::new(
            2,
            vec![
                Facet::new(vec![1, 0], 1),
                Facet::new(vec![-1, 0], 1),
                Facet::new(vec![0, 1], 1),
                Facet::new(vec![0, -1], 2),
            ],
        )
        .unwrap();
        assert!(matches!(lopsided.privileged_center(), Err(PolytopeError::NotFano { .. })));
        assert!(matches!(lopsided.normalize_algebraic(), Err(PolytopeError::NotFano { .. })));
    }

    #[test]
    fn json_round_trip() {
        let t = blow_up_translated();
        let back = polytope_from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let half = DelzantPolytope::new(
            2,
            square().facets().iter().map(|f| Facet { normal: f.normal.clone(), offset: Q::new(1.into(), 2.into()) }).collect(),
        )
        .unwrap();
        assert_eq!(polytope_from_json(&half.to_json()).unwrap(), half);
    }
}
