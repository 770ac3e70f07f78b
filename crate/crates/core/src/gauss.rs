//! Gauss–Legendre rules and adaptive 1-D integration.

use nalgebra::DVector;

/// Nodes and weights of the m-point Gauss–Legendre rule on [0, 1].
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[m - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

const ADAPT_POINTS: usize = 10;
const MAX_DEPTH: usize = 40;

fn rule<E>(f: &mut dyn FnMut(f64) -> Result<DVector<f64>, E>, a: f64, b: f64, nw: &(Vec<f64>, Vec<f64>)) -> Result<DVector<f64>, E> {
    let mut acc: Option<DVector<f64>> = None;
    for (t, w) in nw.0.iter().zip(&nw.1) {
        let v = f(a + (b - a) * t)? * (w * (b - a));
        acc = Some(match acc {
            None => v,
            Some(s) => s + v,
        });
    }
    Ok(acc.unwrap())
}

/// Adaptive vector-valued integral of `f` over [a, b] with relative tolerance `tol`.
///
/// Returns the first error `f` reports.
pub fn integrate_adaptive<F, E>(mut f: F, a: f64, b: f64, tol: f64) -> Result<DVector<f64>, E>
where
    F: FnMut(f64) -> Result<DVector<f64>, E>,
{
    let nw = gauss_legendre_unit(ADAPT_POINTS);
    let whole = rule(&mut f, a, b, &nw)?;
    let scale = whole.amax().max(1.0);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total: Option<DVector<f64>> = None;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule(&mut f, lo, mid, &nw)?;
        let right = rule(&mut f, mid, hi, &nw)?;
        let refined = &left + &right;
        let err = (&refined - &est).amax();
        let width_share = (hi - lo) / (b - a).abs().max(f64::MIN_POSITIVE);
        if err <= tol * scale * width_share.max(1e-6) || depth >= MAX_DEPTH {
            total = Some(match total {
                None => refined,
                Some(s) => s + refined,
            });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total.unwrap())
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    integrate_adaptive(|t| Ok::<_, std::convert::Infallible>(DVector::from_element(1, f(t))), a, b, tol).unwrap_or_else(|e| match e {})[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_one() {
        for m in 1..30 {
            let (x, w) = gauss_legendre_unit(m);
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x.iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn exact_for_polynomials() {
        for m in 1..12 {
            let (x, w) = gauss_legendre_unit(m);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(deg as i32)).sum();
                assert_relative_eq!(q, 1.0 / (deg as f64 + 1.0), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn adaptive_handles_log_like_integrands() {
        let v = integrate_scalar(|t| 1.0 / (1.0 + 100.0 * t * t), 0.0, 1.0, 1e-13);
        assert_relative_eq!(v, (10.0f64).atan() / 10.0, epsilon = 1e-12);
        let back = integrate_scalar(|t| t.exp(), 1.0, 0.0, 1e-13);
        assert_relative_eq!(back, 1.0 - std::f64::consts::E, epsilon = 1e-12);
    }
}
