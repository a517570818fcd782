//! Ask/tell CMA-ES over a box-bounded search space.
//!
//! Strategy constants follow the standard defaults (weighted recombination
//! of the best half, cumulative step-size adaptation, rank-one plus rank-mu
//! covariance update). Fitness is maximised. Out-of-box samples are
//! resampled a bounded number of times, then clamped.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaConfig {
    pub dimension: usize,
    /// Population size lambda.
    pub population: usize,
    pub sigma0: f64,
    pub initial_mean: Vec<f64>,
    /// Coordinate-wise `[lower, upper]` box; `None` for an unbounded search.
    pub bounds: Option<(f64, f64)>,
    /// Resampling attempts per candidate before clamping into the box.
    pub max_resamples: usize,
    /// Evaluation budget; [`Cma::should_stop`] reports when it is spent.
    pub max_evaluations: usize,
    pub seed: u64,
}

impl CmaConfig {
    /// Ten genes in `[0, 1]`, lambda = 10, sigma0 = 0.3, mean at the centre.
    pub fn for_genome(seed: u64) -> Self {
        CmaConfig {
            dimension: 10,
            population: 10,
            sigma0: 0.3,
            initial_mean: vec![0.5; 10],
            bounds: Some((0.0, 1.0)),
            max_resamples: 10,
            max_evaluations: 2510,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("cma-es: {m}")));
        if self.dimension < 1 {
            return bad("dimension must be >= 1".into());
        }
        if self.population < 2 {
            return bad("population must be >= 2".into());
        }
        if !(self.sigma0 > 0.0) {
            return bad("sigma0 must be > 0".into());
        }
        if self.initial_mean.len() != self.dimension {
            return bad(format!(
                "initial mean has {} entries, dimension is {}",
                self.initial_mean.len(),
                self.dimension
            ));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo < hi) {
                return bad("bounds must satisfy lower < upper".into());
            }
            if self.initial_mean.iter().any(|m| !(lo..=hi).contains(m)) {
                return bad("initial mean lies outside the bounds".into());
            }
        }
        Ok(())
    }
}

/// Strategy constants derived from dimension and population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl StrategyParams {
    pub fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        StrategyParams {
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Full search state; serialises to the checkpoint format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub path_sigma: DVector<f64>,
    pub path_c: DVector<f64>,
    pub generation: usize,
    pub evaluations: usize,
    pub strategy: StrategyParams,
    /// Best point seen so far and its fitness.
    pub best: Option<(Vec<f64>, f64)>,
}

/// One sampled point. `genome` is what gets evaluated; `raw` is the
/// Gaussian sample before clamping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genome: Vec<f64>,
    pub raw: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    word_pos: u128,
}

/// Serialized optimizer: configuration, state and RNG position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: CmaConfig,
    pub state: CmaState,
    rng: RngState,
}

#[derive(Debug, Clone)]
pub struct Cma {
    config: CmaConfig,
    state: CmaState,
    /// Eigenbasis of the covariance: `C = B diag(d^2) B^T`.
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    rng: ChaCha8Rng,
}

impl Cma {
    pub fn new(config: CmaConfig) -> Result<Self> {
        config.validate()?;
        let n = config.dimension;
        let state = CmaState {
            mean: DVector::from_vec(config.initial_mean.clone()),
            sigma: config.sigma0,
            covariance: DMatrix::identity(n, n),
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            generation: 0,
            evaluations: 0,
            strategy: StrategyParams::new(n, config.population),
            best: None,
        };
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Cma {
            config,
            state,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            rng,
        })
    }

    pub fn config(&self) -> &CmaConfig {
        &self.config
    }

    pub fn state(&self) -> &CmaState {
        &self.state
    }

    pub fn should_stop(&self) -> bool {
        self.state.evaluations >= self.config.max_evaluations
    }

    /// Counts evaluations performed outside ask/tell (such as scoring the
    /// initial mean) against the budget, and offers them to the best-so-far
    /// archive.
    pub fn record_external(&mut self, point: &[f64], fitness: &[f64]) {
        self.state.evaluations += fitness.len();
        for &f in fitness {
            self.offer_best(point, f);
        }
    }

    fn offer_best(&mut self, point: &[f64], fitness: f64) {
        if !fitness.is_finite() {
            return;
        }
        let better = match &self.state.best {
            None => true,
            Some((_, b)) => fitness > *b,
        };
        if better {
            self.state.best = Some((point.to_vec(), fitness));
        }
    }

    fn in_bounds(&self, x: &DVector<f64>) -> bool {
        match self.config.bounds {
            None => true,
            Some((lo, hi)) => x.iter().all(|v| (lo..=hi).contains(v)),
        }
    }

    fn draw(&mut self) -> DVector<f64> {
        let n = self.config.dimension;
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut self.rng));
        let y = &self.basis * z.component_mul(&self.scales);
        &self.state.mean + y * self.state.sigma
    }

    /// Samples `population` candidates from the current distribution.
    pub fn ask(&mut self) -> Vec<Candidate> {
        (0..self.config.population)
            .map(|_| {
                let mut x = self.draw();
                for _ in 0..self.config.max_resamples {
                    if self.in_bounds(&x) {
                        break;
                    }
                    x = self.draw();
                }
                let raw = x.as_slice().to_vec();
                let (genome, clamped) = match self.config.bounds {
                    Some((lo, hi)) if !self.in_bounds(&x) => {
                        (raw.iter().map(|v| v.clamp(lo, hi)).collect(), true)
                    }
                    _ => (raw.clone(), false),
                };
                Candidate {
                    genome,
                    raw,
                    clamped,
                }
            })
            .collect()
    }

    /// Updates the distribution from evaluated candidates (higher fitness is
    /// better). Non-finite fitness ranks below everything; ties keep
    /// sampling order. The update uses the evaluated (clamped) points.
    pub fn tell(&mut self, candidates: &[Candidate], fitness: &[f64]) -> Result<()> {
        if candidates.len() != fitness.len() || candidates.len() < self.state.strategy.mu {
            return Err(Error::Config(format!(
                "tell: {} candidates, {} fitness values, need at least {}",
                candidates.len(),
                fitness.len(),
                self.state.strategy.mu
            )));
        }
        let n = self.config.dimension;
        for (c, &f) in candidates.iter().zip(fitness) {
            self.offer_best(&c.genome, f);
        }
        self.state.evaluations += candidates.len();

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        let key = |i: usize| if fitness[i].is_finite() { -fitness[i] } else { f64::INFINITY };
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));

        let sp = self.state.strategy.clone();
        let sigma = self.state.sigma;
        let old_mean = self.state.mean.clone();
        let steps: Vec<DVector<f64>> = order[..sp.mu]
            .iter()
            .map(|&i| (DVector::from_column_slice(&candidates[i].genome) - &old_mean) / sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in sp.weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        self.state.mean = &old_mean + &y_w * sigma;

        // C^{-1/2} y_w = B diag(1/d) B^T y_w
        let inv_sqrt_step =
            &self.basis * (self.basis.transpose() * &y_w).component_div(&self.scales);
        let cs = sp.c_sigma;
        self.state.path_sigma =
            &self.state.path_sigma * (1.0 - cs) + inv_sqrt_step * (cs * (2.0 - cs) * sp.mu_eff).sqrt();

        let generation = self.state.generation + 1;
        let ps_norm = self.state.path_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powi(2 * generation as i32)).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * sp.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = sp.c_c;
        self.state.path_c =
            &self.state.path_c * (1.0 - cc) + &y_w * (h * (cc * (2.0 - cc) * sp.mu_eff).sqrt());

        let pc = &self.state.path_c;
        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in sp.weights.iter().zip(&steps) {
            rank_mu += y * y.transpose() * *w;
        }
        let correction = (1.0 - h) * cc * (2.0 - cc);
        let c = &self.state.covariance * (1.0 - sp.c_1 - sp.c_mu)
            + (pc * pc.transpose() + &self.state.covariance * correction) * sp.c_1
            + rank_mu * sp.c_mu;
        self.state.covariance = (&c + c.transpose()) * 0.5;

        self.state.sigma *= ((cs / sp.d_sigma) * (ps_norm / sp.chi_n - 1.0)).exp();
        self.state.generation = generation;
        self.refresh_eigen()
    }

    /// Recomputes the eigenbasis, lifting non-positive eigenvalues to a small
    /// floor relative to the largest one.
    fn refresh_eigen(&mut self) -> Result<()> {
        let c = &self.state.covariance;
        if !c.iter().all(|v| v.is_finite()) || !self.state.sigma.is_finite() || self.state.sigma <= 0.0 {
            return Err(Error::Numerical(format!(
                "covariance or step size became non-finite at generation {}",
                self.state.generation
            )));
        }
        let eig = SymmetricEigen::new(c.clone());
        let max = eig.eigenvalues.max();
        if !(max > 0.0) {
            return Err(Error::Numerical("covariance has no positive eigenvalue".into()));
        }
        let floor = max * 1e-14;
        let values = eig.eigenvalues.map(|v| v.max(floor));
        if values != eig.eigenvalues {
            let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
            self.state.covariance = (&repaired + repaired.transpose()) * 0.5;
        }
        self.basis = eig.eigenvectors;
        self.scales = values.map(f64::sqrt);
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            state: self.state.clone(),
            rng: RngState {
                seed: self.rng.get_seed(),
                word_pos: self.rng.get_word_pos(),
            },
        }
    }

    pub fn restore(checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.config.validate()?;
        let mut rng = ChaCha8Rng::from_seed(checkpoint.rng.seed);
        rng.set_word_pos(checkpoint.rng.word_pos);
        let n = checkpoint.config.dimension;
        let mut cma = Cma {
            config: checkpoint.config,
            state: checkpoint.state,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            rng,
        };
        cma.refresh_eigen()?;
        Ok(cma)
    }
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

/// Maximises `f` with CMA-ES until the evaluation budget is spent and
/// returns the best point and its fitness.
pub fn maximize<F: FnMut(&[f64]) -> f64>(config: CmaConfig, mut f: F) -> Result<(Vec<f64>, f64)> {
    let mut cma = Cma::new(config)?;
    while !cma.should_stop() {
        let candidates = cma.ask();
        let fitness: Vec<f64> = candidates.iter().map(|c| f(&c.genome)).collect();
        cma.tell(&candidates, &fitness)?;
    }
    cma.state.best.clone().ok_or_else(|| Error::Numerical("no finite fitness observed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_at(opt: Vec<f64>) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| -x.iter().zip(&opt).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    }

    #[test]
    fn default_constants() {
        let sp = StrategyParams::new(10, 10);
        assert_eq!(sp.mu, 5);
        assert!((sp.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sp.weights.windows(2).all(|w| w[0] > w[1]));
        assert!((sp.mu_eff - 3.1672).abs() < 1e-3);
        assert!(sp.c_1 + sp.c_mu <= 1.0);
    }

    #[test]
    fn tiny_sigma_samples_the_mean() {
        let mut cfg = CmaConfig::for_genome(3);
        cfg.sigma0 = 1e-300;
        let mut cma = Cma::new(cfg).unwrap();
        for c in cma.ask() {
            assert!(c.genome.iter().all(|v| *v == 0.5));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = Cma::new(CmaConfig::for_genome(42)).unwrap().ask();
        let b = Cma::new(CmaConfig::for_genome(42)).unwrap().ask();
        let c = Cma::new(CmaConfig::for_genome(43)).unwrap().ask();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_stay_in_box() {
        let mut cfg = CmaConfig::for_genome(5);
        cfg.sigma0 = 2.0;
        let mut cma = Cma::new(cfg).unwrap();
        let cands = cma.ask();
        assert!(cands.iter().any(|c| c.clamped));
        for c in cands {
            assert!(c.genome.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn sample_mean_matches_distribution_mean() {
        let mut cfg = CmaConfig::for_genome(11);
        cfg.bounds = None;
        cfg.sigma0 = 1.0;
        cfg.population = 10_000;
        let mut cma = Cma::new(cfg).unwrap();
        let cands = cma.ask();
        for d in 0..10 {
            let m = cands.iter().map(|c| c.genome[d]).sum::<f64>() / 10_000.0;
            // standard error is 1 / sqrt(1e4) = 0.01
            assert!((m - 0.5).abs() < 0.03, "coordinate {d}: {m}");
        }
    }

    #[test]
    fn equal_fitness_is_well_defined() {
        let mut cma = Cma::new(CmaConfig::for_genome(1)).unwrap();
        let cands = cma.ask();
        cma.tell(&cands, &[1.0; 10]).unwrap();
        let st = cma.state();
        assert!(st.sigma.is_finite() && st.sigma > 0.0);
        // ties keep sampling order, so the new mean is the weighted mean of the first mu
        let sp = &st.strategy;
        for d in 0..10 {
            let expect: f64 = (0..sp.mu).map(|i| sp.weights[i] * cands[i].genome[d]).sum();
            assert!((st.mean[d] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_ranks_last() {
        let mut cma = Cma::new(CmaConfig::for_genome(2)).unwrap();
        let cands = cma.ask();
        let mut fit: Vec<f64> = (0..10).map(|i| i as f64).collect();
        fit[9] = f64::NAN;
        fit[8] = f64::INFINITY;
        let mut reference = Cma::new(CmaConfig::for_genome(2)).unwrap();
        let same = reference.ask();
        let mut fit2 = fit.clone();
        fit2[9] = -1e300;
        fit2[8] = -1e300;
        cma.tell(&cands, &fit).unwrap();
        reference.tell(&same, &fit2).unwrap();
        assert_eq!(cma.state().mean, reference.state().mean);
        assert_eq!(cma.state().best.as_ref().unwrap().1, 7.0);
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut cma = Cma::new(CmaConfig::for_genome(9)).unwrap();
        let f = sphere_at(vec![0.3; 10]);
        for _ in 0..150 {
            let c = cma.ask();
            let fit: Vec<f64> = c.iter().map(|c| f(&c.genome)).collect();
            cma.tell(&c, &fit).unwrap();
            let cov = &cma.state().covariance;
            let asym = (cov - cov.transpose()).abs().max();
            assert!(asym < 1e-12);
            assert!(SymmetricEigen::new(cov.clone()).eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn best_so_far_is_monotone() {
        let mut cma = Cma::new(CmaConfig::for_genome(4)).unwrap();
        let f = sphere_at(vec![0.7; 10]);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..50 {
            let c = cma.ask();
            let fit: Vec<f64> = c.iter().map(|c| f(&c.genome)).collect();
            cma.tell(&c, &fit).unwrap();
            let b = cma.state().best.as_ref().unwrap().1;
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn budget_accounting() {
        let mut cma = Cma::new(CmaConfig::for_genome(6)).unwrap();
        cma.record_external(&[0.5; 10], &[0.0; 10]);
        let mut tells = 0;
        while !cma.should_stop() {
            let c = cma.ask();
            let fit = vec![0.0; c.len()];
            cma.tell(&c, &fit).unwrap();
            tells += 1;
        }
        assert_eq!(tells, 250);
        assert_eq!(cma.state().evaluations, 2510);
        assert_eq!(cma.state().generation, 250);
    }

    #[test]
    fn checkpoint_resume_is_exact() {
        let f = sphere_at(vec![0.25; 10]);
        let run = |cma: &mut Cma, gens: usize| {
            for _ in 0..gens {
                let c = cma.ask();
                let fit: Vec<f64> = c.iter().map(|c| f(&c.genome)).collect();
                cma.tell(&c, &fit).unwrap();
            }
        };
        let mut straight = Cma::new(CmaConfig::for_genome(8)).unwrap();
        run(&mut straight, 40);

        let mut first = Cma::new(CmaConfig::for_genome(8)).unwrap();
        run(&mut first, 17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cma.json");
        first.checkpoint().write(&path).unwrap();
        let mut resumed = Cma::restore(Checkpoint::read(&path).unwrap()).unwrap();
        run(&mut resumed, 23);

        assert_eq!(straight.state(), resumed.state());
        assert_eq!(straight.ask(), resumed.ask());
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = CmaConfig::for_genome(0);
        cfg.population = 1;
        assert!(Cma::new(cfg).is_err());
        let mut cfg = CmaConfig::for_genome(0);
        cfg.initial_mean = vec![1.5; 10];
        assert!(Cma::new(cfg).is_err());
        let mut cma = Cma::new(CmaConfig::for_genome(0)).unwrap();
        let c = cma.ask();
        assert!(cma.tell(&c, &[0.0; 3]).is_err());
    }
}
