use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hscs::coupling::{compute_coupling_set, BasisSpec, CouplingOptions};
use hscs::csf::StateIndex;
use hscs::kinematics::build_system;
use hscs::parallel::Parallelism;

fn coupling_grid(c: &mut Criterion) {
    let system = build_system(1.0, 3.0, 1.0, 1.0, 1.0).unwrap();
    let states = [(0, 0, 0), (0, 0, 1), (0, 1, 0)].map(|(m, x, e)| StateIndex::new(m, x, e));
    let basis = BasisSpec::new(0, 1, states.to_vec()).unwrap();
    let rhos: Vec<f64> = (0..8).map(|k| 1.0 * 1.5f64.powi(k)).collect();
    let opts = CouplingOptions::default();

    let mut group = c.benchmark_group("coupling_set");
    group.sample_size(10);
    for (name, par) in [("sequential", Parallelism::Sequential), ("auto", Parallelism::Auto)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| compute_coupling_set(&system, &basis, &rhos, &opts, par).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, coupling_grid);
criterion_main!(benches);
