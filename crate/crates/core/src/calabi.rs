//! Calabi-ansatz soliton on the plane blown up at a point.
//!
//! Profiles `A(x)`, `B(y)` on `[α₁, α₂]`, `[β₁, β₂]`, the transcendental
//! equation for `a₁`, and the inverse Hessian `H(μ)` on the translated
//! trapezoid with analytic first and second derivatives.

use crate::error::{CalabiError, PotentialError};
use crate::polytope::{DelzantPolytope, Facet};
use crate::potentials::{gradient_by_line_integral, MetricStack, SymplecticPotential};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::OnceLock;

/// Fixed rule for the potential integrals; smooth in the endpoint, unlike an adaptive rule.
fn fixed_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| crate::gauss::gauss_legendre_unit(64))
}

fn fixed_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (t, w) = fixed_rule();
    (b - a) * t.iter().zip(w).map(|(t, w)| w * f(a + (b - a) * t)).sum::<f64>()
}

/// Mean scalar curvature implied by the closed-form solution.
pub const SCAL_MEAN: f64 = 4.0;
/// Value that also appears in print for the same quantity; it does not solve the ODE.
pub const SCAL_MEAN_ALTERNATIVE: f64 = -4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalabiParameters {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c_alpha1: f64,
    pub c_alpha2: f64,
    pub c_beta1: f64,
    pub c_beta2: f64,
}

impl Default for CalabiParameters {
    fn default() -> Self {
        Self::blow_up()
    }
}

impl CalabiParameters {
    pub fn blow_up() -> Self {
        CalabiParameters {
            alpha1: 1.0,
            alpha2: 3.0,
            beta1: 0.0,
            beta2: 1.0,
            c_alpha1: 1.0,
            c_alpha2: -1.0 / 3.0,
            c_beta1: -1.0,
            c_beta2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), CalabiError> {
        let bad = |m: &str| Err(CalabiError::InvalidParameters(m.to_string()));
        let all = [self.alpha1, self.alpha2, self.beta1, self.beta2, self.c_alpha1, self.c_alpha2, self.c_beta1, self.c_beta2];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if !(self.alpha1 > 0.0 && self.alpha2 > self.alpha1) {
            return bad("need 0 < alpha1 < alpha2");
        }
        if !(self.beta1 >= 0.0 && self.beta2 > self.beta1) {
            return bad("need 0 <= beta1 < beta2");
        }
        if !(self.c_alpha1 > 0.0 && self.c_alpha2 < 0.0 && self.c_beta1 < 0.0 && self.c_beta2 > 0.0) {
            return bad("need C_alpha1 > 0, C_alpha2 < 0, C_beta1 < 0, C_beta2 > 0");
        }
        Ok(())
    }

    pub fn is_blow_up(&self) -> bool {
        let d = Self::blow_up();
        let pairs = [
            (self.alpha1, d.alpha1),
            (self.alpha2, d.alpha2),
            (self.beta1, d.beta1),
            (self.beta2, d.beta2),
            (self.c_alpha1, d.c_alpha1),
            (self.c_alpha2, d.c_alpha2),
            (self.c_beta1, d.c_beta1),
            (self.c_beta2, d.c_beta2),
        ];
        pairs.iter().all(|(a, b)| (a - b).abs() <= 1e-12)
    }

    /// `m = (2/C_β₁ − 2/C_β₂) / (β₂ − β₁)`.
    pub fn m(&self) -> f64 {
        (2.0 / self.c_beta1 - 2.0 / self.c_beta2) / (self.beta2 - self.beta1)
    }

    pub fn scal_mean(&self) -> f64 {
        let a = (1.0 / self.c_alpha1 - 1.0 / self.c_alpha2) / (self.alpha2 - self.alpha1);
        let b = (1.0 / self.c_beta1 - 1.0 / self.c_beta2) / (self.beta2 - self.beta1);
        4.0 / (self.alpha1 + self.alpha2) * (a - b)
    }

    /// The trapezoid `{α₁ ≤ μ₁ ≤ α₂, β₁μ₁ ≤ μ₂ ≤ β₂μ₁}`; requires integral β's.
    pub fn trapezoid(&self) -> Result<DelzantPolytope, CalabiError> {
        self.validate()?;
        let int = |v: f64| -> Result<i64, CalabiError> {
            if v.fract() == 0.0 {
                Ok(v as i64)
            } else {
                Err(CalabiError::InvalidParameters(format!("{v} is not an integer")))
            }
        };
        let (b1, b2) = (int(self.beta1)?, int(self.beta2)?);
        let rat = |v: f64| crate::polytope::parse_rational(&format!("{v:e}")).map_err(CalabiError::from);
        let facets = vec![
            Facet { normal: vec![-b1, 1], offset: rat(0.0)? },
            Facet { normal: vec![-1, 0], offset: rat(self.alpha2)? },
            Facet { normal: vec![1, 0], offset: rat(-self.alpha1)? },
            Facet { normal: vec![b2, -1], offset: rat(0.0)? },
        ];
        Ok(DelzantPolytope::new(2, facets)?)
    }
}

/// Value with first and second derivative in one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet1 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet1 {
    pub fn constant(v: f64) -> Self {
        Jet1 { value: v, d1: 0.0, d2: 0.0 }
    }
    pub fn variable(v: f64) -> Self {
        Jet1 { value: v, d1: 1.0, d2: 0.0 }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(self, o: Jet1) -> Jet1 {
        Jet1 { value: self.value + o.value, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(self, o: Jet1) -> Jet1 {
        Jet1 { value: self.value - o.value, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            value: self.value * o.value,
            d1: self.d1 * o.value + self.value * o.d1,
            d2: self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        }
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, o: Jet1) -> Jet1 {
        let r = 1.0 / o.value;
        let inv = Jet1 { value: r, d1: -o.d1 * r * r, d2: (2.0 * o.d1 * o.d1 * r - o.d2) * r * r };
        self * inv
    }
}

/// `(a² − ½)e^{−4a} + 3a² − 2a + ½`.
pub fn soliton_equation(a: f64) -> f64 {
    (a * a - 0.5) * (-4.0 * a).exp() + 3.0 * a * a - 2.0 * a + 0.5
}

fn soliton_equation_derivative(a: f64) -> f64 {
    (2.0 * a - 4.0 * (a * a - 0.5)) * (-4.0 * a).exp() + 6.0 * a - 2.0
}

pub const DEFAULT_BRACKET: (f64, f64) = (-0.5, -0.05);

/// Nonzero root of the soliton equation in `bracket`: bisection, then Newton polish.
pub fn solve_a1(params: &CalabiParameters, bracket: (f64, f64)) -> Result<f64, CalabiError> {
    params.validate()?;
    if !params.is_blow_up() {
        return Err(CalabiError::InvalidParameters("closed form is available for the blow-up parameters only".into()));
    }
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let (mut flo, fhi) = (soliton_equation(lo), soliton_equation(hi));
    if flo == 0.0 && lo != 0.0 {
        return Ok(lo);
    }
    if flo * fhi > 0.0 || (lo <= 0.0 && hi >= 0.0) {
        return Err(CalabiError::NoSignChange(lo, hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = soliton_equation(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..5 {
        let step = soliton_equation(a) / soliton_equation_derivative(a);
        if !step.is_finite() {
            break;
        }
        a -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CalabiSoliton {
    pub params: CalabiParameters,
    pub a1: f64,
    pub m: f64,
    pub scal_mean: f64,
}

/// Inverse Hessian in moment coordinates with derivatives.
#[derive(Debug, Clone)]
pub struct CalabiMetric {
    pub h: DMatrix<f64>,
    pub dh: Vec<DMatrix<f64>>,
    pub d2h: Vec<Vec<DMatrix<f64>>>,
}

impl CalabiSoliton {
    pub fn new(params: CalabiParameters) -> Result<Self, CalabiError> {
        let a1 = solve_a1(&params, DEFAULT_BRACKET)?;
        Ok(CalabiSoliton { params, a1, m: params.m(), scal_mean: params.scal_mean() })
    }

    pub fn blow_up() -> Self {
        Self::new(CalabiParameters::blow_up()).expect("blow-up parameters are valid")
    }

    fn check_range(v: f64, lo: f64, hi: f64) -> Result<(), CalabiError> {
        let eps = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if v < lo - eps || v > hi + eps || v.is_nan() {
            Err(CalabiError::OutOfRange { value: v, lo, hi })
        } else {
            Ok(())
        }
    }

    fn a_unchecked(&self, x: f64) -> Jet1 {
        let a = self.a1;
        let k = -1.0 / (a * a * a);
        let e = (a * a - 0.5) * (-2.0 * a * (x - 1.0)).exp();
        Jet1 {
            value: k * (e + a * a * x * x - (2.0 * a * a + a) * x + (a + 0.5)),
            d1: k * (-2.0 * a * e + 2.0 * a * a * x - (2.0 * a * a + a)),
            d2: k * (4.0 * a * a * e + 2.0 * a * a),
        }
    }

    pub fn profile_a(&self, x: f64) -> Result<Jet1, CalabiError> {
        Self::check_range(x, self.params.alpha1, self.params.alpha2)?;
        Ok(self.a_unchecked(x))
    }

    pub fn profile_b(&self, y: f64) -> Result<Jet1, CalabiError> {
        Self::check_range(y, self.params.beta1, self.params.beta2)?;
        Ok(Jet1 { value: -2.0 * y * y + 2.0 * y, d1: -4.0 * y + 2.0, d2: -4.0 })
    }

    /// `−A'' − 2a₁A' − x·Scal̄ − m`.
    pub fn ode_residual(&self, x: f64, scal_mean: f64) -> Result<f64, CalabiError> {
        let a = self.profile_a(x)?;
        Ok(-a.d2 - 2.0 * self.a1 * a.d1 - x * scal_mean - self.m)
    }

    /// `B'' − m`.
    pub fn b_ode_residual(&self, y: f64) -> Result<f64, CalabiError> {
        Ok(self.profile_b(y)?.d2 - self.m)
    }

    fn interior(&self, mu: &[f64]) -> Result<(f64, f64), PotentialError> {
        let (x, z) = (mu[0], mu[1]);
        let y = z / x;
        let p = &self.params;
        if x > p.alpha1 && x < p.alpha2 && y > p.beta1 && y < p.beta2 {
            Ok((x, z))
        } else {
            Err(PotentialError::BoundaryEvaluation(mu.to_vec()))
        }
    }

    /// `H(μ)` with `∂H` and `∂²H`; entries are polynomials in `μ₂` with
    /// coefficients depending on `μ₁` only.
    pub fn h_matrix(&self, mu: &[f64]) -> Result<CalabiMetric, PotentialError> {
        let (x, z) = self.interior(mu)?;
        let a = self.a_unchecked(x);
        let xv = Jet1::variable(x);
        let c = Jet1::constant;
        // coefficient lists: entry = Σ_p z^p f_p(x)
        let h11 = [a / xv];
        let h12 = [c(0.0), a / (xv * xv)];
        let h22 = [c(0.0), c(2.0), c(-2.0) / xv + a / (xv * xv * xv)];
        let eval = |coef: &[Jet1]| -> [f64; 6] {
            // value, ∂x, ∂z, ∂xx, ∂xz, ∂zz
            let mut out = [0.0; 6];
            for (p, f) in coef.iter().enumerate() {
                let pf = p as f64;
                let zp = z.powi(p as i32);
                out[0] += zp * f.value;
                out[1] += zp * f.d1;
                out[3] += zp * f.d2;
                if p >= 1 {
                    let zp1 = z.powi(p as i32 - 1);
                    out[2] += pf * zp1 * f.value;
                    out[4] += pf * zp1 * f.d1;
                }
                if p >= 2 {
                    out[5] += pf * (pf - 1.0) * z.powi(p as i32 - 2) * f.value;
                }
            }
            out
        };
        let (e11, e12, e22) = (eval(&h11), eval(&h12), eval(&h22));
        let mat = |i: usize| DMatrix::from_row_slice(2, 2, &[e11[i], e12[i], e12[i], e22[i]]);
        Ok(CalabiMetric {
            h: mat(0),
            dh: vec![mat(1), mat(2)],
            d2h: vec![vec![mat(3), mat(4)], vec![mat(4), mat(5)]],
        })
    }

    /// Closed form of `G = H⁻¹`.
    pub fn g_matrix(&self, mu: &[f64]) -> Result<DMatrix<f64>, PotentialError> {
        let (x, z) = self.interior(mu)?;
        let y = z / x;
        let a = self.a_unchecked(x).value;
        let b = -2.0 * y * y + 2.0 * y;
        Ok(DMatrix::from_row_slice(2, 2, &[x / a + y * y / (x * b), -y / (x * b), -y / (x * b), 1.0 / (x * b)]))
    }

    /// `∫_{c}^{x} t / A(t) dt` with `c` the first coordinate of the center.
    fn e_integral(&self, x: f64, c: f64) -> f64 {
        fixed_integral(|t| t / self.a_unchecked(t).value, c, x)
    }

    /// A potential with Hessian `G`: `φ = Φ₁(μ₁) + μ₁Φ₂(μ₂/μ₁)`, with
    /// `Φ₁'' = x/A` and `Φ₂(y) = ½[y ln y + (1−y) ln(1−y)]`.
    pub fn separable_value(&self, mu: &[f64], center: &[f64]) -> Result<f64, PotentialError> {
        let (x, z) = self.interior(mu)?;
        let y = z / x;
        let c = center[0];
        let phi1 = fixed_integral(|t| (x - t) * t / self.a_unchecked(t).value, c, x);
        let phi2 = 0.5 * (y * y.ln() + (1.0 - y) * (1.0 - y).ln());
        Ok(phi1 + x * phi2)
    }

    /// Closed-form gradient of [`Self::separable_value`].
    pub fn separable_gradient(&self, mu: &[f64], center: &[f64]) -> Result<DVector<f64>, PotentialError> {
        let (x, z) = self.interior(mu)?;
        let y = z / x;
        Ok(DVector::from_vec(vec![
            self.e_integral(x, center[0]) + 0.5 * (1.0 - y).ln(),
            0.5 * (y / (1.0 - y)).ln(),
        ]))
    }

    pub fn report(&self, samples: usize) -> Result<CalabiReport, CalabiError> {
        let p = &self.params;
        let xs: Vec<f64> = (0..samples)
            .map(|i| p.alpha1 + (p.alpha2 - p.alpha1) * (i as f64 + 0.5) / samples as f64)
            .collect();
        let ys: Vec<f64> = (0..samples)
            .map(|i| p.beta1 + (p.beta2 - p.beta1) * (i as f64 + 0.5) / samples as f64)
            .collect();
        let max_abs = |v: Vec<f64>| v.into_iter().fold(0.0, |m: f64, r: f64| m.max(r.abs()));
        let ode = max_abs(xs.iter().map(|&x| self.ode_residual(x, self.scal_mean)).collect::<Result<_, _>>()?);
        let alt = max_abs(xs.iter().map(|&x| self.ode_residual(x, SCAL_MEAN_ALTERNATIVE)).collect::<Result<_, _>>()?);
        let b_ode = max_abs(ys.iter().map(|&y| self.b_ode_residual(y)).collect::<Result<_, _>>()?);
        let a_min = xs.iter().map(|&x| self.a_unchecked(x).value).fold(f64::INFINITY, f64::min);
        Ok(CalabiReport {
            params: *p,
            a1: self.a1,
            equation_residual: soliton_equation(self.a1),
            m: self.m,
            scal_mean: self.scal_mean,
            a_at_alpha1: self.profile_a(p.alpha1)?.value,
            a_at_alpha2: self.profile_a(p.alpha2)?.value,
            a_prime_at_alpha1: self.profile_a(p.alpha1)?.d1,
            a_prime_at_alpha2: self.profile_a(p.alpha2)?.d1,
            b_at_beta1: self.profile_b(p.beta1)?.value,
            b_at_beta2: self.profile_b(p.beta2)?.value,
            b_prime_at_beta1: self.profile_b(p.beta1)?.d1,
            b_prime_at_beta2: self.profile_b(p.beta2)?.d1,
            min_a_interior: a_min,
            ode_samples: samples,
            ode_max_residual: ode,
            b_ode_max_residual: b_ode,
            alternative_scal_mean: SCAL_MEAN_ALTERNATIVE,
            alternative_ode_max_residual: alt,
            alternative_consistent: alt <= 1e-9,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalabiReport {
    pub params: CalabiParameters,
    pub a1: f64,
    pub equation_residual: f64,
    pub m: f64,
    pub scal_mean: f64,
    pub a_at_alpha1: f64,
    pub a_at_alpha2: f64,
    pub a_prime_at_alpha1: f64,
    pub a_prime_at_alpha2: f64,
    pub b_at_beta1: f64,
    pub b_at_beta2: f64,
    pub b_prime_at_beta1: f64,
    pub b_prime_at_beta2: f64,
    pub min_a_interior: f64,
    pub ode_samples: usize,
    pub ode_max_residual: f64,
    pub b_ode_max_residual: f64,
    pub alternative_scal_mean: f64,
    pub alternative_ode_max_residual: f64,
    pub alternative_consistent: bool,
}

/// The Calabi soliton as a potential in algebraic coordinates `x̃ = μ − center`.
#[derive(Debug, Clone)]
pub struct CalabiPotential {
    soliton: CalabiSoliton,
    algebraic: DelzantPolytope,
    center: [f64; 2],
}

impl CalabiPotential {
    pub fn new(soliton: CalabiSoliton) -> Result<Self, CalabiError> {
        let tau = soliton.params.trapezoid()?;
        let c = tau.privileged_center()?.point_f64();
        Ok(CalabiPotential { soliton, algebraic: tau.normalize_algebraic()?, center: [c[0], c[1]] })
    }

    pub fn soliton(&self) -> &CalabiSoliton {
        &self.soliton
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.algebraic
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn to_algebraic_coordinates(&self, mu: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![mu[0] - self.center[0], mu[1] - self.center[1]])
    }

    pub fn to_moment_coordinates(&self, x: &DVector<f64>) -> [f64; 2] {
        [x[0] + self.center[0], x[1] + self.center[1]]
    }
}

/// `μ − (2, 1)` on the blow-up trapezoid.
pub fn to_algebraic_coordinates(mu: &[f64]) -> [f64; 2] {
    [mu[0] - 2.0, mu[1] - 1.0]
}

impl SymplecticPotential for CalabiPotential {
    fn dim(&self) -> usize {
        2
    }

    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.algebraic.is_interior(x.as_slice())
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64, PotentialError> {
        self.soliton.separable_value(&self.to_moment_coordinates(x), &self.center)
    }

    /// Line integral of `G` from the privileged center, gauge `∇φ(0) = 0`.
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, PotentialError> {
        if !self.is_interior(x) {
            return Err(PotentialError::BoundaryEvaluation(x.iter().copied().collect()));
        }
        gradient_by_line_integral(|y| self.hessian(y), x, &DVector::zeros(2), 1e-13)
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, PotentialError> {
        self.soliton.g_matrix(&self.to_moment_coordinates(x))
    }

    fn metric(&self, x: &DVector<f64>) -> Result<MetricStack, PotentialError> {
        let m = self.soliton.h_matrix(&self.to_moment_coordinates(x))?;
        MetricStack::from_inverse(m.h, m.dh, m.d2h, x)
    }
}
