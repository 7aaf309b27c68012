use criterion::{criterion_group, criterion_main, Criterion};
use qws_core::gws::{eigendecompose, gws_matrix};
use qws_core::{scattering_matrix, Scenario};

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    for (resolution, k_over_pi_w) in [(40, 7.5), (100, 20.5)] {
        let reference = Scenario::reference(0).unwrap();
        let scenario = reference
            .with_resolution(resolution)
            .with_wavenumber(k_over_pi_w * std::f64::consts::PI / reference.width);
        group.bench_function(format!("smatrix_m{resolution}"), |b| {
            b.iter(|| scattering_matrix(&scenario).unwrap())
        });
    }
    let reference = Scenario::reference(0).unwrap();
    let q = gws_matrix(&reference).unwrap().matrix;
    group.bench_function("eigendecompose_reference", |b| b.iter(|| eigendecompose(&q)));
    group.finish();
}

criterion_group!(benches, solver);
criterion_main!(benches);
