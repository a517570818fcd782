use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaitevo_core::cpg::Mode;
use gaitevo_core::experiment::evaluate_genome;
use gaitevo_core::fitness::FitnessSettings;
use gaitevo_core::par;
use gaitevo_core::sim::SimConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// One CMA-ES generation: ten genomes, short episodes.
const BATCH: usize = 10;
const DURATION: f64 = 2.0;

fn batch(seed: u64) -> Vec<[f64; 10]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..BATCH).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect()
}

fn bench_batch(c: &mut Criterion) {
    let sim = SimConfig::default();
    let settings = FitnessSettings::default();
    let genomes = batch(1);
    let mut group = c.benchmark_group("generation");
    group.sample_size(10);
    for mode in [Mode::OpenLoop, Mode::ClosedLoop] {
        let eval = |i: usize, g: &[f64; 10]| evaluate_genome(g, mode, &sim, DURATION, i as u64, &settings).unwrap().composite;
        group.bench_with_input(BenchmarkId::new("sequential", mode), &genomes, |b, gs| {
            b.iter(|| par::map_sequential(gs, eval))
        });
        let label = if par::is_parallel() { "rayon" } else { "fallback" };
        group.bench_with_input(BenchmarkId::new(label, mode), &genomes, |b, gs| b.iter(|| par::map(gs, eval)));
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
