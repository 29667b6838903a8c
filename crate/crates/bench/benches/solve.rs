use criterion::{criterion_group, criterion_main, Criterion};
use irid::random::{random_model, RandomModelParams};
use irid::{
    bundled, exhaustive_policy_search, solve, EnumerationBudget, SamplerConfig, SolveOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn wildcatter(c: &mut Criterion) {
    let m = bundled::wildcatter_irid();
    c.bench_function("exact solve", |b| {
        b.iter(|| solve(&m, &SolveOptions::exact()).unwrap())
    });
    let gibbs = SolveOptions::gibbs(SamplerConfig {
        burn_in: 200,
        samples: 2_000,
        ..Default::default()
    });
    c.bench_function("gibbs solve, 2000 samples", |b| {
        b.iter(|| solve(&m, &gibbs).unwrap())
    });
    let budget = EnumerationBudget::default();
    c.bench_function("oracle search", |b| {
        b.iter(|| exhaustive_policy_search(&m, &budget).unwrap())
    });
}

fn random_models(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let models: Vec<_> = (0..20)
        .map(|_| random_model(&mut rng, &RandomModelParams::default()))
        .collect();
    c.bench_function("exact solve, 20 random models", |b| {
        b.iter(|| {
            for m in &models {
                solve(m, &SolveOptions::exact()).unwrap();
            }
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = wildcatter, random_models
}
criterion_main!(benches);
