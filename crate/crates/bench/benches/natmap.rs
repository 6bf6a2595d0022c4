use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use natmap_bench::{octagon, standard_evaluator};
use natmap_core::barycenter::{barycenter, BarycenterOptions};
use natmap_core::lattice::{genus2_octagon, orbit_ball, OrbitOptions};
use natmap_core::measure::visual_measure;
use natmap_core::volume::EquivariantMapSpec;
use natmap_core::{HPoint, SphereQuadrature};

fn bench_barycenter(c: &mut Criterion) {
    let mut group = c.benchmark_group("barycenter");
    for (n, nodes) in [(2, 2048), (3, 4096)] {
        let quad = SphereQuadrature::new(n, nodes).unwrap();
        let mut dir = vec![0.0; n];
        dir[0] = 1.0;
        let nu = visual_measure(&HPoint::from_polar(&dir, 0.8).unwrap(), &quad).unwrap();
        let opts = BarycenterOptions::default();
        group.bench_with_input(BenchmarkId::new("visual", format!("H{n}/{nodes}")), &nu, |b, nu| {
            b.iter(|| barycenter(nu, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_differential(c: &mut Criterion) {
    let ev = standard_evaluator(4, 2048).unwrap();
    let a = HPoint::from_polar(&[0.6, 0.8], 0.7).unwrap();
    c.bench_function("natural_map/differential", |b| b.iter(|| ev.differential(&a, 1).unwrap()));
}

fn bench_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian_scan");
    group.sample_size(10);
    let map = EquivariantMapSpec::Natural(standard_evaluator(1, 2048).unwrap());
    for cells in [256, 1024] {
        let dom = octagon(cells).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(cells), &dom, |b, dom| b.iter(|| map.scan(dom, 2).unwrap()));
    }
    group.finish();
}

fn bench_orbit(c: &mut Criterion) {
    let mut group = c.benchmark_group("orbit_ball");
    group.sample_size(10);
    let (g, _) = genus2_octagon().unwrap();
    let o = HPoint::origin(2);
    for radius in [8.0, 10.0] {
        group.bench_with_input(BenchmarkId::from_parameter(radius), &radius, |b, &r| {
            b.iter(|| orbit_ball(&g, &o, r, &OrbitOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_barycenter, bench_differential, bench_scan, bench_orbit);
criterion_main!(benches);
