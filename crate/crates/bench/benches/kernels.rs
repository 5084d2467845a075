use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freefock::cumulants::{free_cumulants, repeated, Cached, Handle};
use freefock::partitions::{enumerate, PartitionClass};
use freefock::states::{phi_t, BaseMoments};
use freefock::{FockModel, Variant};
use freefock_bench::{alternating, bernoulli, boolean_pair};

fn partitions(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_nc");
    for n in [8, 10, 12] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| enumerate(black_box(n), PartitionClass::Noncrossing).unwrap().len())
        });
    }
    g.finish();
}

fn cumulants(c: &mut Criterion) {
    let (o, f) = bernoulli(0.3);
    let mut g = c.benchmark_group("free_cumulant");
    for n in [6, 8, 10] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let m = Cached::new(BaseMoments::new(&o, std::slice::from_ref(&f)).unwrap());
                free_cumulants(&m, &repeated(Handle(0), black_box(n))).unwrap()
            })
        });
    }
    g.finish();
}

fn fock(c: &mut Criterion) {
    let (o, gens) = boolean_pair();
    let model = FockModel::build(&o, Variant::Phi, 1.0, 4).unwrap();
    let word = alternating(&gens, 8);
    c.bench_function("fock_vacuum_moment_8", |b| b.iter(|| model.vacuum_moment(black_box(&word)).unwrap()));
    c.bench_function("fock_build_phi_n4", |b| {
        b.iter(|| FockModel::build(black_box(&o), Variant::Phi, 1.0, 4).unwrap().dim())
    });
}

fn states(c: &mut Criterion) {
    let (o, gens) = boolean_pair();
    let mut g = c.benchmark_group("phi_t_partition_sum");
    for n in [4, 6, 8] {
        let word = alternating(&gens, n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &word, |b, w| {
            b.iter(|| phi_t(&o, black_box(w), 1.0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, partitions, cumulants, fock, states);
criterion_main!(benches);
