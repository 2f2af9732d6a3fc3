//! Comparators: fixed-parameter DE/rand/1/bin on continuous objectives and
//! aging (regularized) evolution on discrete spaces.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::DiscreteSpace;
use crate::de_core::{
    binomial_crossover, evaluate, greedy_select, init_population, repair_bounds, Objective,
};
use crate::error::{Error, Result};
use crate::nas::{BiObjectiveConfig, NasResult, Predictor, ScoreCache};
use crate::shsade::{RunResult, Termination};
use crate::trace::{SearchTrace, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanillaDeConfig {
    pub f: f64,
    pub cr: f64,
    pub population_size: usize,
    pub max_generations: usize,
}

impl Default for VanillaDeConfig {
    fn default() -> Self {
        Self {
            f: 0.5,
            cr: 0.9,
            population_size: 50,
            max_generations: 1000,
        }
    }
}

impl VanillaDeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "F must lie in (0, 1], got {}",
                self.f
            )));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidConfig(format!(
                "CR must lie in [0, 1], got {}",
                self.cr
            )));
        }
        if self.population_size < crate::de_core::MIN_POPULATION {
            return Err(Error::PopulationTooSmall(self.population_size));
        }
        Ok(())
    }
}

/// DE/rand/1/bin with fixed `F` and `CR`.
pub fn vanilla_de_run<O, R>(
    cfg: &VanillaDeConfig,
    objective: &mut O,
    termination: Termination,
    rng: &mut R,
) -> Result<RunResult>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let np = cfg.population_size;
    let mut pop = init_population(objective, np, rng)?;
    let mut best = pop.best().clone();
    let mut evaluations = np as u64;
    let mut generation = 0usize;
    let mut trace = SearchTrace::new();
    let row = |generation: usize, evaluations: u64, best: f64, mean: f64| TraceRow {
        generation: generation as u64,
        evaluations,
        best_fitness: best,
        mean_fitness: mean,
    };
    trace.push(row(0, evaluations, best.fitness, pop.mean_fitness()))?;
    let max_generations = termination.max_generations.unwrap_or(cfg.max_generations);

    loop {
        if termination
            .target_fitness
            .is_some_and(|t| best.fitness <= t)
            || generation >= max_generations
            || termination
                .max_evaluations
                .is_some_and(|m| evaluations + np as u64 > m)
        {
            break;
        }
        let mut trials = Vec::with_capacity(np);
        for i in 0..np {
            let picks = index::sample(rng, np - 1, 3);
            let [r1, r2, r3] = [0, 1, 2].map(|k| {
                let r = picks.index(k);
                if r >= i {
                    r + 1
                } else {
                    r
                }
            });
            let (a, b, c) = (&pop.get(r1).x, &pop.get(r2).x, &pop.get(r3).x);
            let donor: Vec<f64> = (0..a.len()).map(|d| a[d] + cfg.f * (b[d] - c[d])).collect();
            let xi = &pop.get(i).x;
            let trial = binomial_crossover(xi, &donor, cfg.cr, rng);
            trials.push(repair_bounds(&trial, objective.bounds(), xi));
        }
        let evaluated = trials
            .into_iter()
            .map(|x| evaluate(objective, x))
            .collect::<Result<Vec<_>>>()?;
        for (i, trial) in evaluated.into_iter().enumerate() {
            if trial.fitness < best.fitness {
                best = trial.clone();
            }
            let (winner, replaced) = greedy_select(pop.get(i).clone(), trial);
            if replaced {
                pop.set(i, winner);
            }
        }
        evaluations += np as u64;
        generation += 1;
        trace.push(row(
            generation,
            evaluations,
            best.fitness,
            pop.mean_fitness(),
        ))?;
    }
    Ok(RunResult {
        best,
        trace,
        generations: generation,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizedEaConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    /// Distinct architectures scored, initialization included.
    pub budget: usize,
    /// Hard stop in cycles, since repeated children cost nothing.
    pub cycle_cap: usize,
}

impl Default for RegularizedEaConfig {
    fn default() -> Self {
        Self {
            population_size: 25,
            tournament_size: 5,
            budget: 500,
            cycle_cap: 25_000,
        }
    }
}

impl RegularizedEaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::InvalidConfig(
                "population_size must be positive".into(),
            ));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::InvalidConfig(format!(
                "tournament_size must lie in [1, {}], got {}",
                self.population_size, self.tournament_size
            )));
        }
        if self.budget < self.population_size {
            return Err(Error::InvalidConfig(format!(
                "budget {} is smaller than the population size {}",
                self.budget, self.population_size
            )));
        }
        Ok(())
    }
}

/// Attempts made to draw a not-yet-seen genotype for each initial slot.
const FRESH_DRAW_ATTEMPTS: usize = 100;

/// Aging evolution: tournament-select a parent, change one random axis,
/// append the child and retire the oldest member.
pub fn regularized_ea_run<P, R>(
    space: &DiscreteSpace,
    predictor: &P,
    cfg: &RegularizedEaConfig,
    biobjective: &BiObjectiveConfig,
    rng: &mut R,
) -> Result<NasResult>
where
    P: Predictor + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    biobjective.validate()?;
    let mut cache = ScoreCache::new(space, predictor, *biobjective, cfg.budget);
    let mut population: VecDeque<(Vec<usize>, f64)> = VecDeque::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let mut idx = space.random_indices(rng);
        for _ in 1..FRESH_DRAW_ATTEMPTS {
            if !cache.contains(&idx) {
                break;
            }
            idx = space.random_indices(rng);
        }
        let f = cache.score(&idx)?;
        population.push_back((idx, f));
    }
    let mean =
        |p: &VecDeque<(Vec<usize>, f64)>| p.iter().map(|m| m.1).sum::<f64>() / p.len() as f64;
    let mut trace = SearchTrace::new();
    trace.push(TraceRow {
        generation: 0,
        evaluations: cache.sampled(),
        best_fitness: cache.best_score(),
        mean_fitness: mean(&population),
    })?;

    let mutable_axes: Vec<usize> = (0..space.dim())
        .filter(|&a| space.axes()[a].len() > 1)
        .collect();
    let mut cycle = 0usize;
    while !cache.exhausted() && cycle < cfg.cycle_cap {
        cycle += 1;
        let sample = index::sample(rng, population.len(), cfg.tournament_size);
        let parent = sample
            .iter()
            .min_by(|&a, &b| population[a].1.total_cmp(&population[b].1).then(a.cmp(&b)))
            .expect("tournament is non-empty");
        let mut child = population[parent].0.clone();
        if !mutable_axes.is_empty() {
            let axis = mutable_axes[rng.random_range(0..mutable_axes.len())];
            let n = space.axes()[axis].len();
            let shift = rng.random_range(1..n);
            child[axis] = (child[axis] + shift) % n;
        }
        let f = match cache.score(&child) {
            Ok(f) => f,
            Err(Error::BudgetExhausted) => break,
            Err(e) => return Err(e),
        };
        population.push_back((child, f));
        population.pop_front();
        trace.push_if_progress(TraceRow {
            generation: cycle as u64,
            evaluations: cache.sampled(),
            best_fitness: cache.best_score(),
            mean_fitness: mean(&population),
        })?;
    }
    Ok(cache.into_result(trace))
}
