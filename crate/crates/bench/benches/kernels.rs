use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qauto_core::atlas::{apply_chart, ChartId, ChartPoint};
use qauto_core::cohomology::degree_sequence;
use qauto_core::green::{green_value, GreenOptions};
use qauto_core::map::apply;
use qauto_core::partition::{classify_rate, RateOptions};
use qauto_core::{AffinePoint, Direction, Params};

fn params() -> Params {
    Params::real(0.3, -0.2, 2.0, 0.1).unwrap()
}

fn kernels(c: &mut Criterion) {
    let p = params();
    let q = AffinePoint::real(0.4, -0.7, 1.1);
    c.bench_function("apply", |b| b.iter(|| apply(black_box(&p), black_box(&q))));

    let opts = GreenOptions::default();
    let far = AffinePoint::real(10.0, 10.0, 10.0);
    c.bench_function("green_value_escaping", |b| {
        b.iter(|| green_value(black_box(&p), black_box(&far), Direction::Forward, &opts))
    });
    c.bench_function("green_value_bounded", |b| {
        b.iter(|| green_value(black_box(&p), black_box(&AffinePoint::origin()), Direction::Forward, &opts))
    });

    let cp = ChartPoint::real(ChartId::ZXi2, 0.3, -0.4, 0.7);
    c.bench_function("apply_chart", |b| b.iter(|| apply_chart(black_box(&p), black_box(&cp), ChartId::ZXi1)));

    let axis = AffinePoint::real(0.0, 0.0, 1e4);
    let ro = RateOptions::default();
    let p0 = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
    c.bench_function("classify_rate_linear", |b| b.iter(|| classify_rate(black_box(&p0), black_box(&axis), &ro)));

    let mut g = c.benchmark_group("symbolic");
    g.sample_size(10);
    g.bench_function("degree_sequence_5", |b| b.iter(|| degree_sequence(black_box(&p), 5)));
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
