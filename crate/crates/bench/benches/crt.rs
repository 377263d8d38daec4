use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use crt_netcode::coding::{internal_recode_fast, internal_recode_full, receiver_solve};
use crt_netcode::crt::{merge, merge_coprime_u64, solve_system};
use crt_netcode::simulator::stream_rng;
use crt_netcode::RecodePolicy;
use crt_netcode_bench::{consistent_system, node_inputs};

fn bench_merge(c: &mut Criterion) {
    let sys = consistent_system(2, 16, 1);
    c.bench_function("merge_two_16bit", |b| {
        b.iter(|| merge(black_box(&sys[0]), black_box(&sys[1])).unwrap())
    });
    c.bench_function("merge_coprime_u64", |b| {
        b.iter(|| merge_coprime_u64(black_box(12345), 46349, black_box(999), 46351))
    });

    let mut group = c.benchmark_group("solve_system");
    for count in [10, 100, 400] {
        let sys = consistent_system(count, 16, 2);
        group.bench_with_input(BenchmarkId::from_parameter(count), &sys, |b, sys| {
            b.iter(|| solve_system(sys).unwrap())
        });
    }
    group.finish();
}

// One internal node of the layered experiment: ~80 sources heard, per-edge picks.
fn bench_recode(c: &mut Criterion) {
    let inputs = node_inputs(80, 4, 16, 3);
    let mut group = c.benchmark_group("internal_recode");
    for out_degree in [1, 320] {
        group.bench_with_input(BenchmarkId::new("full", out_degree), &out_degree, |b, &d| {
            b.iter(|| {
                let mut rng = stream_rng(0, 0);
                internal_recode_full(&inputs, d, RecodePolicy::PerEdge, &mut rng).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("fast", out_degree), &out_degree, |b, &d| {
            b.iter(|| {
                let mut rng = stream_rng(0, 0);
                internal_recode_fast(&inputs, d, RecodePolicy::PerEdge, &mut rng).unwrap()
            })
        });
    }
    group.finish();

    c.bench_function("receiver_solve_320", |b| b.iter(|| receiver_solve(&inputs).unwrap()));
}

criterion_group!(benches, bench_merge, bench_recode);
criterion_main!(benches);
