use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use std::hint::black_box;
use toric_soliton::polytope::{examples, DelzantPolytope, Facet};
use toric_soliton::potentials::interior_grid;
use toric_soliton::quadrature::integrate;
use toric_soliton::roots::enumerate_roots;
use toric_soliton::verify::{prepare, PotentialChoice, VerifyConfig};
use toric_soliton::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn hexagon() -> DelzantPolytope {
    let normals = [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]];
    DelzantPolytope::new(2, normals.iter().map(|n| Facet::new(n.to_vec(), 1)).collect()).unwrap()
}

fn grid_evaluation(c: &mut Criterion) {
    let pre = prepare(&examples::blow_up(), &VerifyConfig { potential: PotentialChoice::Calabi, ..VerifyConfig::default() }).unwrap();
    let grid = interior_grid(&pre.algebraic, 41, 0.05);
    let mut group = c.benchmark_group("grid_soliton_residual");
    for (name, exec) in MODES {
        let ctx = prepare(&examples::blow_up(), &VerifyConfig { potential: PotentialChoice::Calabi, ..VerifyConfig::default() })
            .unwrap()
            .ctx
            .with_exec(exec);
        group.bench_function(BenchmarkId::new(name, grid.len()), |b| {
            b.iter(|| ctx.on_grid(black_box(&grid), |x| Ok(ctx.soliton_residual(x)?)).unwrap())
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let p = hexagon();
    let a = DVector::from_vec(vec![0.2, -0.1]);
    let f = |x: f64, y: f64| (2.0 * (a[0] * x + a[1] * y)).exp() * (1.0 + x * x).ln();
    let mut group = c.benchmark_group("simplex_quadrature");
    for order in [10, 40] {
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new(name, order), |b| b.iter(|| integrate(&p, f, black_box(order), exec).unwrap()));
        }
    }
    group.finish();
}

fn root_enumeration(c: &mut Criterion) {
    let p = hexagon();
    let mut group = c.benchmark_group("facet_root_enumeration");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| enumerate_roots(black_box(&p), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, grid_evaluation, quadrature, root_enumeration);
criterion_main!(benches);
