use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mibridge::fcs::{fcs_iterate, VisitSequence};
use mibridge::jm::{jm_gibbs_step, JmState};
use mibridge::samplers::draw_inv_wishart;
use mibridge::{prior, ExperimentConfig, NiwPrior, RngSeed};
use nalgebra::DMatrix;
use std::hint::black_box;

fn inverse_wishart(c: &mut Criterion) {
    let mut rng = RngSeed(1).rng();
    for p in [3, 10] {
        let scale = DMatrix::from_fn(p, p, |i, j| if i == j { 2.0 } else { 0.5 });
        c.bench_function(&format!("inverse_wishart_p{p}"), |b| {
            b.iter(|| draw_inv_wishart(&mut rng, black_box(p as f64 + 2.0), &scale).unwrap())
        });
    }
}

fn decompose(c: &mut Criterion) {
    let joint = NiwPrior::weakly_informative(10);
    c.bench_function("decompose_all_p10", |b| b.iter(|| prior::decompose_all(black_box(&joint)).unwrap()));
}

fn sweeps(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let data = cfg.simulate_replication(0).unwrap();
    let joint = NiwPrior::weakly_informative(3);
    let mut rng = RngSeed(2).rng();
    let state = JmState::initialize(&data, &joint, &mut rng).unwrap();
    c.bench_function("jm_gibbs_step_n200", |b| {
        b.iter_batched(|| state.clone(), |s| jm_gibbs_step(s, &data, &joint, &mut rng).unwrap(), BatchSize::SmallInput)
    });

    let priors = prior::decompose_all(&joint).unwrap();
    let visit = VisitSequence::from_names(&cfg.visit_sequence, &data).unwrap();
    c.bench_function("fcs_ten_sweeps_n200", |b| {
        b.iter(|| fcs_iterate(&data, &priors, &visit, &mut rng, 10, 0, None).unwrap())
    });
}

criterion_group!(benches, inverse_wishart, decompose, sweeps);
criterion_main!(benches);
