use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dicke_stark::effective::rabi_frequency;
use dicke_stark::hamiltonian::dicke_state;
use dicke_stark::scan::{resonance_scan, uniform_grid, Execution};
use dicke_stark::{HilbertSpace, ModelParams};

fn bench_scan(c: &mut Criterion) {
    let params = ModelParams::new(4, 1.0, 1.0, 0.006, -0.5, 8).unwrap();
    let space = HilbertSpace::symmetric(4, 8).unwrap();
    let psi0 = dicke_state(&space, 0, 0).unwrap();
    let t = PI / (2.0 * rabi_frequency(0, 0, &params).unwrap());

    #[cfg_attr(not(feature = "parallel"), allow(unused_mut))]
    let mut modes = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    modes.push(("parallel", Execution::Parallel));

    let mut group = c.benchmark_group("resonance_scan");
    group.sample_size(10);
    for points in [101usize, 401] {
        let grid = uniform_grid(1.9, 2.3, points).unwrap();
        for (name, mode) in &modes {
            group.bench_with_input(BenchmarkId::new(*name, points), &grid, |b, g| {
                b.iter(|| resonance_scan(&psi0, g, t, &params, &space, *mode).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_scan);
criterion_main!(benches);
