use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use qpuf_core::circuit::{block_oracle, build_qpuf_circuit, execute_job, random_challenge};
use qpuf_core::crp::{generate_challenges, run_experiment};
use qpuf_core::noise::{builtin_profile, ideal_profile, idle_channel};
use qpuf_core::{BitString, DensityMatrix, GateMatrix};

fn gates(c: &mut Criterion) {
    let rho = DensityMatrix::basis(8, &BitString::zeros(8)).unwrap();
    let ry = GateMatrix::ry(0.7);
    c.bench_function("apply_1q 8q", |b| {
        b.iter_batched(
            || rho.clone(),
            |mut r| r.apply_1q_mut(&ry, 3).unwrap(),
            BatchSize::LargeInput,
        )
    });
    c.bench_function("apply_cnot 8q", |b| {
        b.iter_batched(
            || rho.clone(),
            |mut r| r.apply_cnot_mut(1, 5).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let k = idle_channel(&builtin_profile("ibm_kyoto").unwrap(), 0, 50.0);
    c.bench_function("apply_channel 8q", |b| {
        b.iter_batched(
            || rho.clone(),
            |mut r| r.apply_channel_mut(&k, 0).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn jobs(c: &mut Criterion) {
    let challenge = random_challenge(1);
    let circuit = build_qpuf_circuit(&challenge);
    let osaka = builtin_profile("ibm_osaka").unwrap();
    c.bench_function("execute_job ibm_osaka 1024 shots", |b| {
        b.iter(|| execute_job(black_box(&circuit), &osaka, 1024, 9).unwrap())
    });
    c.bench_function("block_oracle ibm_osaka", |b| {
        b.iter(|| block_oracle(black_box(&challenge), &osaka))
    });

    let challenges = generate_challenges(75, 3);
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("75 challenges x 1 instance ideal", |b| {
        b.iter(|| run_experiment(&challenges, &ideal_profile(), 1024, 1, 3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, gates, jobs);
criterion_main!(benches);
