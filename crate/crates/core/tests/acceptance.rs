//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use nalgebra::DVector;
use std::collections::BTreeSet;
use std::sync::Arc;
use toric_soliton::calabi::CalabiSoliton;
use toric_soliton::eigenbasis::{boundary_product_form, select_mode_sign};
use toric_soliton::operators::OperatorContext;
use toric_soliton::polytope::{examples, DelzantPolytope};
use toric_soliton::potentials::interior_grid;
use toric_soliton::roots::{enumerate_roots, RootSet};
use toric_soliton::verify::{prepare, verify, PotentialChoice, VerificationReport, VerifyConfig};
use toric_soliton::Execution;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) })
}

fn check(report: &VerificationReport, name: &str) -> f64 {
    report.checks.iter().find(|c| c.name == name).map_or(f64::INFINITY, |c| c.value)
}

/// Lattice points α in a box with `<α,ν> = 1` for exactly one facet and `≤ 0` for the rest.
fn lattice_box_roots(p: &DelzantPolytope, bound: i64) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            let pair: Vec<i64> = p.facets().iter().map(|f| f.normal[0] * a + f.normal[1] * b).collect();
            if pair.iter().filter(|&&v| v > 0).count() == 1 && pair.contains(&1) {
                out.insert(vec![a, b]);
            }
        }
    }
    out
}

fn alpha_set(r: &RootSet) -> BTreeSet<Vec<i64>> {
    r.roots.iter().map(|r| r.alpha.clone()).collect()
}

/// Independent bisection on `(a² − ½)e^{−4a} + 3a² − 2a + ½` over `(−0.5, −0.05)`.
fn bisection_root() -> f64 {
    let f = |a: f64| (a * a - 0.5) * (-4.0 * a).exp() + 3.0 * a * a - 2.0 * a + 0.5;
    let (mut lo, mut hi) = (-0.5_f64, -0.05_f64);
    assert!(f(lo) * f(hi) < 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) * f(lo) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Fixtures {
    cp2: VerificationReport,
    blow: VerificationReport,
}

fn roots_exact() -> Outcome {
    let set = |v: &[[i64; 2]]| v.iter().map(|a| a.to_vec()).collect::<BTreeSet<_>>();
    let cp2 = enumerate_roots(&examples::projective_plane(), Execution::Parallel).unwrap();
    let blow = enumerate_roots(&examples::blow_up(), Execution::Parallel).unwrap();
    let cp2_expected = set(&[[1, 0], [1, -1], [0, 1], [-1, 1], [-1, 0], [0, -1]]);
    let blow_expected = set(&[[0, 1], [-1, 0], [-1, -1], [0, -1]]);
    let ok = alpha_set(&cp2) == cp2_expected
        && alpha_set(&blow) == blow_expected
        && lattice_box_roots(&examples::projective_plane(), 6) == cp2_expected
        && lattice_box_roots(&examples::blow_up(), 6) == blow_expected;
    outcome(ok, format!("P2 {} roots, blow-up {} roots, lattice box oracle agrees", cp2.roots.len(), blow.roots.len()))
}

fn automorphism_dimensions(f: &Fixtures) -> Outcome {
    let d = |r: &VerificationReport| {
        let s = r.roots.iter().filter(|x| x.semisimple).count();
        (r.dimensions.dim_eta, s, r.roots.len() - s)
    };
    let (a, b) = (d(&f.cp2), d(&f.blow));
    outcome(a == (8, 6, 0) && b == (6, 2, 2), format!("P2 dim {} S/U ({},{}); blow-up dim {} S/U ({},{})", a.0, a.1, a.2, b.0, b.1, b.2))
}

fn soliton_vector(f: &Fixtures) -> Outcome {
    let oracle = bisection_root();
    let cp2 = DVector::from_vec(f.cp2.soliton.a.clone()).norm();
    let a = &f.blow.soliton.a;
    let ok = cp2 <= 1e-10 && a[1].abs() <= 1e-8 && (a[0] - oracle).abs() <= 1e-8 && oracle > -0.5 && oracle < 0.0;
    outcome(ok, format!("|a_P2| = {cp2:.1e}; a1 = {:.15}, oracle {oracle:.15}, |a2| = {:.1e}", a[0], a[1].abs()))
}

fn calabi_closed_forms() -> Outcome {
    let s = CalabiSoliton::blow_up();
    let r = s.report(50).unwrap();
    let b_second: Vec<f64> = (0..=10).map(|i| s.profile_b(i as f64 / 10.0).unwrap().d2).collect();
    let ok = r.a_at_alpha1.abs() <= 1e-10
        && r.a_at_alpha2.abs() <= 1e-10
        && s.m == -4.0
        && b_second.iter().all(|&v| v == s.m)
        && r.ode_samples == 50
        && r.ode_max_residual <= 1e-9
        && r.scal_mean == 4.0
        && !r.alternative_consistent;
    outcome(
        ok,
        format!(
            "A(1) = {:.1e}, A(3) = {:.1e}, m = {}, ODE residual {:.1e}; mean {} flagged inconsistent (residual {:.2})",
            r.a_at_alpha1, r.a_at_alpha2, s.m, r.ode_max_residual, r.alternative_scal_mean, r.alternative_ode_max_residual
        ),
    )
}

fn abreu_curvature(f: &Fixtures) -> Outcome {
    let r = &f.cp2.residuals;
    let dev = (r.scalar_curvature_min - 4.0).abs().max((r.scalar_curvature_max - 4.0).abs());
    let b = &f.blow.residuals;
    let mean_dev = (b.scalar_curvature_mean - 4.0).abs();
    outcome(
        r.grid_points > 0 && dev <= 1e-6 && mean_dev <= 1e-4,
        format!(
            "P2 max |S - 4| = {dev:.1e} on {} points; blow-up volume mean {:.12} (soliton-weighted mean {:.6}, informational)",
            r.grid_points, b.scalar_curvature_mean, b.scalar_curvature_weighted_mean
        ),
    )
}

fn linear_eigenfunctions(f: &Fixtures) -> Outcome {
    let (a, b) = (f.cp2.residuals.linear_eigen_max_rel, f.blow.residuals.linear_eigen_max_rel);
    outcome(a <= 1e-6 && b <= 1e-6, format!("max relative residual P2 {a:.1e}, blow-up {b:.1e}"))
}

fn soliton_equation() -> Outcome {
    let cfg = VerifyConfig { potential: PotentialChoice::Calabi, ..VerifyConfig::default() };
    let pre = prepare(&examples::blow_up(), &cfg).unwrap();
    let grid = interior_grid(&pre.algebraic, cfg.grid, cfg.margin);
    let residual = |ctx: &OperatorContext| max_abs(ctx.on_grid(&grid, |x| Ok(ctx.soliton_residual(x)?)).unwrap());
    let full = residual(&pre.ctx);
    let half_a = DVector::from_vec(vec![pre.soliton.a[0] / 2.0, pre.soliton.a[1]]);
    let halved = OperatorContext::new(pre.algebraic.clone(), Arc::clone(&pre.ctx.potential), half_a);
    let control = residual(&halved);
    outcome(full <= 1e-6 && control > 1e-2, format!("max residual {full:.1e}; halved a1 control {control:.3}"))
}

/// Closed-form root profiles on the projective plane: `√(L_i L_j)` for the two facets involved.
fn projective_plane_listing(alpha: &[i64], x: &DVector<f64>) -> Option<f64> {
    let (u, v, w) = (x[0] + 1.0, x[1] + 1.0, 1.0 - x[0] - x[1]);
    Some(match alpha {
        [1, 0] | [-1, 0] => (u * w).sqrt(),
        [0, 1] | [0, -1] => (v * w).sqrt(),
        [1, -1] | [-1, 1] => (u * v).sqrt(),
        _ => return None,
    })
}

fn root_eigenfunctions(f: &Fixtures) -> Outcome {
    let records = f.cp2.roots.iter().chain(&f.blow.roots);
    let res = max_abs(records.clone().map(|r| r.max_rel_residual));
    let fit = max_abs(records.map(|r| r.lambda_hat - 2.0));
    let pre = prepare(&examples::projective_plane(), &VerifyConfig::default()).unwrap();
    let grid = interior_grid(&pre.algebraic, 21, 0.05);
    let mut listing = 0.0_f64;
    for root in &pre.roots.roots {
        let (rf, _) = select_mode_sign(&pre.ctx, root, &grid).unwrap();
        for x in &grid {
            let m = pre.ctx.metric(x).unwrap();
            let u = pre.ctx.jet(rf.profile.as_ref(), x, &m).unwrap().value;
            let expected = projective_plane_listing(&root.alpha, x).unwrap_or(f64::NAN);
            listing = listing.max(if expected.is_nan() { f64::INFINITY } else { (u - expected).abs() });
        }
    }
    outcome(
        res <= 1e-6 && fit <= 1e-6 && listing <= 1e-10,
        format!("max residual {res:.1e}, max |lambda - 2| {fit:.1e}, P2 listing deviation {listing:.1e}"),
    )
}

fn operator_identities(f: &Fixtures) -> Outcome {
    let get = |n: &str| check(&f.cp2, n).max(check(&f.blow, n));
    let (modes, fd_op, fd_curv) = (get("mode_identities"), get("finite_difference_operator"), get("finite_difference_curvature"));
    outcome(
        modes <= 1e-8 && fd_op <= 1e-4 && fd_curv <= 1e-3,
        format!("mode identities {modes:.1e}; finite differences: operator {fd_op:.1e}, curvature {fd_curv:.1e}"),
    )
}

fn decomposition(f: &Fixtures) -> Outcome {
    let blocks = |r: &VerificationReport| {
        r.decomposition.blocks.iter().map(|b| (b.gamma, b.complex_dim)).collect::<Vec<_>>()
    };
    let (p, b) = (blocks(&f.cp2), blocks(&f.blow));
    let a1 = f.blow.soliton.a[0];
    let shape = p.len() == 1
        && p[0] == (0.0, 8)
        && b.len() == 2
        && b[0] == (0.0, 4)
        && b[1].1 == 2
        && (b[1].0 + 2.0 * a1).abs() <= 1e-9
        && b[1].0 > 0.0;
    let min_gamma = f.cp2.decomposition.min_gamma.min(f.blow.decomposition.min_gamma);
    let ss = max_abs(f.cp2.roots.iter().chain(&f.blow.roots).filter(|r| r.semisimple).map(|r| r.gamma / 2.0));
    outcome(
        shape && min_gamma >= -1e-9 && ss <= 1e-9,
        format!("P2 blocks {p:?}; blow-up blocks {b:?}; min gamma {min_gamma:.1e}; semisimple max |<alpha,a>| {ss:.1e}"),
    )
}

fn anti_holomorphic(f: &Fixtures) -> Outcome {
    let dev = max_abs(f.blow.roots.iter().map(|r| r.gamma_hat.abs() - 2.0 * r.gamma.abs()));
    let listed: Vec<String> = f.blow.roots.iter().map(|r| format!("{:?}: {:.6}", r.alpha, r.gamma_hat)).collect();
    outcome(dev <= 1e-6, format!("max ||gamma_hat| - 4|<alpha,a>|| = {dev:.1e} ({})", listed.join(", ")))
}

fn boundary_extension() -> Outcome {
    let pre = prepare(&examples::projective_plane(), &VerifyConfig::default()).unwrap();
    let p = &pre.algebraic;
    let grid = interior_grid(p, 21, 0.05);
    let verts: Vec<Vec<f64>> = p.vertices().iter().map(|v| v.point_f64()).collect();
    let (mut finite, mut vanish, mut positive, mut agree) = (true, true, true, 0.0_f64);
    let mut predicted_ok = true;
    for root in &pre.roots.roots {
        let form = boundary_product_form(p, root);
        let predicted: Vec<usize> = (0..p.facets().len())
            .filter(|&r| root.pairings[r] < 0 || r == root.distinguished_facet)
            .collect();
        predicted_ok &= form.vanishing_facets() == predicted;
        // dyadic points on every edge lie exactly on their facet
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                for k in 0..=8 {
                    let t = k as f64 / 8.0;
                    let x: Vec<f64> = verts[i].iter().zip(&verts[j]).map(|(a, b)| a + t * (b - a)).collect();
                    let v = form.eval(&x);
                    finite &= v.is_finite() && v >= 0.0;
                    let on: Vec<usize> = p.facet_values(&x).iter().enumerate().filter(|(_, l)| **l == 0.0).map(|(r, _)| r).collect();
                    let should_vanish = on.iter().any(|r| predicted.contains(r));
                    if should_vanish {
                        vanish &= v == 0.0;
                    } else {
                        positive &= v > 0.0;
                    }
                }
            }
        }
        let (rf, _) = select_mode_sign(&pre.ctx, root, &grid).unwrap();
        for x in &grid {
            let m = pre.ctx.metric(x).unwrap();
            let u = pre.ctx.jet(rf.profile.as_ref(), x, &m).unwrap().value;
            agree = agree.max((form.eval(x.as_slice()) - u).abs());
        }
    }
    outcome(
        finite && vanish && positive && predicted_ok && agree <= 1e-10,
        format!("finite {finite}, vanishes on predicted facets {}, positive elsewhere {positive}, interior deviation {agree:.1e}", vanish && predicted_ok),
    )
}

fn main() {
    let cp2 = verify(&examples::projective_plane(), &VerifyConfig::default()).expect("P2 verification runs");
    let blow = verify(&examples::blow_up(), &VerifyConfig { potential: PotentialChoice::Calabi, ..VerifyConfig::default() })
        .expect("blow-up verification runs");
    let f = Fixtures { cp2, blow };
    let criteria: Vec<(&str, Outcome)> = vec![
        ("demazure-roots", roots_exact()),
        ("automorphism-dimensions", automorphism_dimensions(&f)),
        ("soliton-vector", soliton_vector(&f)),
        ("calabi-closed-forms", calabi_closed_forms()),
        ("abreu-curvature", abreu_curvature(&f)),
        ("linear-eigenfunctions", linear_eigenfunctions(&f)),
        ("soliton-equation", soliton_equation()),
        ("root-eigenfunctions", root_eigenfunctions(&f)),
        ("operator-identities", operator_identities(&f)),
        ("decomposition", decomposition(&f)),
        ("anti-holomorphic-eigenvalues", anti_holomorphic(&f)),
        ("boundary-extension", boundary_extension()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        println!("{} {:>2} {:<29} {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, name, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
