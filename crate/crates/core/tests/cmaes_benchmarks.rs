use gaitevo_core::cmaes::{Cma, CmaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shifted_optimum(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..10).map(|_| rng.random_range(0.2..0.8)).collect()
}

fn sphere_error(x: &[f64], opt: &[f64]) -> f64 {
    x.iter().zip(opt).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Runs the genome-box configuration on a shifted sphere and returns the
/// best-so-far error after the full budget.
fn sphere_run(seed: u64) -> f64 {
    let opt = shifted_optimum(seed);
    let mut cma = Cma::new(CmaConfig::for_genome(seed)).unwrap();
    let mean = vec![0.5; 10];
    let f0 = -sphere_error(&mean, &opt);
    cma.record_external(&mean, &[f0; 10]);
    while !cma.should_stop() {
        let c = cma.ask();
        let fit: Vec<f64> = c.iter().map(|c| -sphere_error(&c.genome, &opt)).collect();
        cma.tell(&c, &fit).unwrap();
    }
    assert_eq!(cma.state().evaluations, 2510);
    -cma.state().best.as_ref().unwrap().1
}

#[test]
fn shifted_sphere_reaches_1e8() {
    let errors: Vec<f64> = (0..20).map(sphere_run).collect();
    let hits = errors.iter().filter(|e| **e < 1e-8).count();
    assert!(hits >= 19, "{hits}/20 seeds reached 1e-8: {errors:?}");
}

/// Rosenbrock in coordinates `x = 4z - 2`, optimum at `z = 0.75`.
fn rosenbrock(z: &[f64]) -> f64 {
    let x: Vec<f64> = z.iter().map(|v| 4.0 * v - 2.0).collect();
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[test]
fn rosenbrock_5d() {
    let mut cfg = CmaConfig::for_genome(7);
    cfg.dimension = 5;
    cfg.initial_mean = vec![0.5; 5];
    cfg.population = 8;
    cfg.max_evaluations = 10_000;
    let mut cma = Cma::new(cfg).unwrap();
    let mut last = f64::INFINITY;
    while !cma.should_stop() {
        let c = cma.ask();
        let fit: Vec<f64> = c.iter().map(|c| -rosenbrock(&c.genome)).collect();
        cma.tell(&c, &fit).unwrap();
        let err = -cma.state().best.as_ref().unwrap().1;
        assert!(err <= last);
        last = err;
    }
    assert!(last < 1e-4, "final error {last}");
}
