//! Evolutionary search over monotone bi-capacities.
//!
//! Every iteration mutates each individual once: with probability `eta` a
//! small mutation re-draws a single element inside its current lattice
//! bounds, otherwise a large mutation replaces the whole table with a fresh
//! sample. A mutated candidate replaces its parent only on strict
//! improvement. The population minimum is tracked as the global best.
//!
//! Randomness comes from one root seed. Each `(iteration, individual)` gets
//! its own ChaCha stream, so results do not depend on evaluation order or on
//! whether fitness is computed in parallel.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::sample::uniform;
use crate::lattice::{sample_random, BiCapacity, LatticeError, Mode, SubsetPair, MAX_SOURCES};
use crate::mil::{BagSet, Fitness, InstanceTable, MilError, MilProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Mil(#[from] MilError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Population size.
    pub population: usize,
    pub max_iterations: usize,
    /// Probability of a small (single element) mutation.
    pub eta: f64,
    /// An improvement of the best fitness by at most this much counts toward
    /// convergence.
    pub fitness_threshold: f64,
    /// Consecutive sub-threshold improvements needed to stop.
    pub patience: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Evaluate individuals on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 36,
            max_iterations: 5000,
            eta: 0.8,
            fitness_threshold: 0.001,
            patience: 1,
            seed: 0,
            mode: Mode::Obj1,
            parallel: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |msg: &str| Err(OptimizerError::Config(msg.to_string()));
        if self.population < 1 {
            return bad("population must be at least 1");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta must lie in [0, 1]");
        }
        if self.fitness_threshold.is_nan() || self.fitness_threshold < 0.0 {
            return bad("fitness_threshold must be nonnegative");
        }
        if self.patience < 1 {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub best: BiCapacity,
    pub best_fitness: Fitness,
    /// Best total fitness after initialisation (entry 0) and after each
    /// iteration.
    pub history: Vec<f64>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
}

/// Independent RNG stream for one individual at one iteration. Iteration 0
/// is population initialisation.
pub fn substream(seed: u64, iteration: usize, individual: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | individual as u64);
    rng
}

/// `cfg.population` independent samples, individual `p` drawn from
/// `substream(seed, 0, p)`.
pub fn init_population(cfg: &OptimizerConfig, m: usize) -> Result<Vec<BiCapacity>, OptimizerError> {
    cfg.validate()?;
    (0..cfg.population).map(|p| Ok(sample_random(m, cfg.mode, &mut substream(cfg.seed, 0, p))?)).collect()
}

/// Re-draws one element chosen with probability proportional to its usage
/// count, uniformly inside the bounds set by its covers. Falls back to a
/// uniform choice among learnable elements when no usage is recorded.
pub fn small_mutation<R: Rng + ?Sized>(g: &BiCapacity, usage: &[u64], rng: &mut R) -> BiCapacity {
    let candidates = BiCapacity::learnable_pairs(g.m(), g.mode());
    if candidates.is_empty() {
        return g.clone();
    }
    let pair = choose_element(&candidates, usage, rng);
    let (lo, hi) = g.bounds(pair);
    let mut out = g.clone();
    out.set(pair, uniform(rng, lo, hi));
    out
}

/// Usage-weighted choice among `candidates` (uniform if all weights are zero).
pub fn choose_element<R: Rng + ?Sized>(candidates: &[SubsetPair], usage: &[u64], rng: &mut R) -> SubsetPair {
    let weights: Vec<u64> = candidates.iter().map(|p| usage.get(p.index()).copied().unwrap_or(0)).collect();
    match WeightedIndex::new(&weights) {
        Ok(dist) => candidates[dist.sample(rng)],
        Err(_) => candidates[rng.random_range(0..candidates.len())],
    }
}

/// A completely fresh sample.
pub fn large_mutation<R: Rng + ?Sized>(m: usize, mode: Mode, rng: &mut R) -> Result<BiCapacity, OptimizerError> {
    Ok(sample_random(m, mode, rng)?)
}

struct Individual {
    g: BiCapacity,
    fitness: Fitness,
}

/// Trains on raw bags and table.
pub fn train(cfg: &OptimizerConfig, bags: &BagSet, table: &InstanceTable) -> Result<TrainRun, OptimizerError> {
    bags.require_both_classes()?;
    let problem = MilProblem::new(bags, table)?;
    train_problem(cfg, &problem)
}

/// Trains on an already bound problem.
pub fn train_problem(cfg: &OptimizerConfig, problem: &MilProblem) -> Result<TrainRun, OptimizerError> {
    cfg.validate()?;
    let m = problem.m();
    if m > MAX_SOURCES {
        return Err(OptimizerError::Config(format!("{m} sources exceeds the cap of {MAX_SOURCES}")));
    }

    let init = init_population(cfg, m)?;
    let mut population = map_maybe_parallel(cfg.parallel, init, |g| {
        let fitness = problem.fitness(&g)?;
        Ok(Individual { g, fitness })
    })?;

    let (mut best_idx, mut best_total) = population_min(&population);
    let mut best = population[best_idx].g.clone();
    let mut best_fitness = population[best_idx].fitness.clone();
    let mut history = vec![best_total];
    let mut small_improvements = 0usize;
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations_run = 0;

    for iteration in 1..=cfg.max_iterations {
        let parents: Vec<(usize, Individual)> = population.into_iter().enumerate().collect();
        population = map_maybe_parallel(cfg.parallel, parents, |(p, parent)| {
            let mut rng = substream(cfg.seed, iteration, p);
            let candidate = if rng.random::<f64>() < cfg.eta {
                small_mutation(&parent.g, &parent.fitness.usage, &mut rng)
            } else {
                large_mutation(m, cfg.mode, &mut rng)?
            };
            let fitness = problem.fitness(&candidate)?;
            Ok(if fitness.j_total < parent.fitness.j_total { Individual { g: candidate, fitness } } else { parent })
        })?;
        iterations_run = iteration;

        let (idx, total) = population_min(&population);
        if total < best_total {
            let gain = best_total - total;
            best_idx = idx;
            best_total = total;
            best = population[best_idx].g.clone();
            best_fitness = population[best_idx].fitness.clone();
            if gain <= cfg.fitness_threshold {
                small_improvements += 1;
            } else {
                small_improvements = 0;
            }
        }
        history.push(best_total);
        if small_improvements >= cfg.patience {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(TrainRun { best, best_fitness, history, iterations_run, stop_reason })
}

fn population_min(population: &[Individual]) -> (usize, f64) {
    population.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, ind)| {
        if ind.fitness.j_total < bv {
            (i, ind.fitness.j_total)
        } else {
            (bi, bv)
        }
    })
}

fn map_maybe_parallel<T, U, F>(parallel: bool, items: Vec<T>, f: F) -> Result<Vec<U>, OptimizerError>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U, OptimizerError> + Sync + Send,
{
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}
