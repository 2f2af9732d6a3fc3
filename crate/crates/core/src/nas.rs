//! Architecture search over a discrete space by running SHSADE on the
//! continuous encodings of genotypes.
//!
//! Every fitness evaluation decodes a vector, asks the predictor for
//! accuracy and cost, and scalarizes the pair. Scores are memoized per
//! genotype and only fresh genotypes count against the budget.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_indices, encode_indices, perturb_slice, Axis, DiscreteSpace, Genotype};
use crate::de_core::{Bounds, Individual, Objective, Population};
use crate::error::{Error, Result};
use crate::objectives::TabularSurrogate;
use crate::shsade::{
    shsade_generation_with, CrossoverTarget, GenerationOptions, ShsadeConfig, ShsadeState,
};
use crate::trace::{SearchTrace, TraceRow};

/// Largest space [`brute_force_optimum`] will enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Accuracy and cost estimates for a genotype. Both must be deterministic.
pub trait Predictor {
    /// In `[0, 1]`.
    fn predict_accuracy(&self, g: &Genotype) -> Result<f64>;
    /// Non-negative, in abstract MAC units.
    fn predict_cost(&self, g: &Genotype) -> Result<f64>;
}

impl Predictor for TabularSurrogate {
    fn predict_accuracy(&self, g: &Genotype) -> Result<f64> {
        Ok(self.accuracy_of_indices(&self.space().indices_of(g)?))
    }

    fn predict_cost(&self, g: &Genotype) -> Result<f64> {
        Ok(self.cost_of_indices(&self.space().indices_of(g)?))
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict_accuracy(&self, g: &Genotype) -> Result<f64> {
        (**self).predict_accuracy(g)
    }

    fn predict_cost(&self, g: &Genotype) -> Result<f64> {
        (**self).predict_cost(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiObjectiveConfig {
    /// Reference cost; architectures at or under it are not penalized.
    pub cost_budget: f64,
    /// Cost-pressure exponent.
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_omega() -> f64 {
    1.0
}

impl BiObjectiveConfig {
    pub fn new(cost_budget: f64, omega: f64) -> Result<Self> {
        let cfg = Self { cost_budget, omega };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_budget > 0.0) || self.cost_budget.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "cost_budget must be positive, got {}",
                self.cost_budget
            )));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "omega must be finite and >= 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// `-accuracy * min(1, cost_budget / cost)^omega` from raw predictions.
pub fn scalarize(accuracy: f64, cost: f64, cfg: &BiObjectiveConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::Predictor(format!(
            "accuracy {accuracy} is outside [0, 1]"
        )));
    }
    if !(cost >= 0.0) || cost.is_infinite() {
        return Err(Error::Predictor(format!(
            "cost {cost} is not a finite non-negative number"
        )));
    }
    let factor = if cost <= cfg.cost_budget {
        1.0
    } else {
        (cfg.cost_budget / cost).powf(cfg.omega)
    };
    Ok(-accuracy * factor)
}

/// Minimization fitness of a genotype.
pub fn score<P: Predictor + ?Sized>(
    g: &Genotype,
    predictor: &P,
    cfg: &BiObjectiveConfig,
) -> Result<f64> {
    let accuracy = predictor.predict_accuracy(g)?;
    let cost = predictor.predict_cost(g)?;
    scalarize(accuracy, cost, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NasConfig {
    #[serde(default = "NasConfig::default_shsade")]
    pub shsade: ShsadeConfig,
    pub biobjective: BiObjectiveConfig,
    /// Maximum number of distinct architectures scored, initialization included.
    #[serde(default = "NasConfig::default_budget")]
    pub budget: usize,
    #[serde(default = "NasConfig::default_sigma")]
    pub sigma_init_noise: f64,
    /// Also perturb every trial vector, not just the initial encodings.
    #[serde(default)]
    pub noise_each_generation: bool,
    /// Share of the population mutated per generation.
    #[serde(default = "NasConfig::default_fraction")]
    pub mutate_fraction: f64,
    #[serde(default = "NasConfig::default_target")]
    pub crossover_target: CrossoverTarget,
    /// Hard stop in generations over all runs; memoized repeats make the
    /// budget alone insufficient.
    #[serde(default = "NasConfig::default_generation_cap")]
    pub generation_cap: usize,
    /// Independent SHSADE runs of `shsade.max_generations` generations each
    /// sharing the budget; `None` restarts until the budget is spent.
    #[serde(default)]
    pub runs: Option<usize>,
}

impl NasConfig {
    fn default_shsade() -> ShsadeConfig {
        ShsadeConfig {
            population_size: 20,
            max_generations: 50,
            ..ShsadeConfig::default()
        }
    }

    fn default_budget() -> usize {
        500
    }

    fn default_sigma() -> f64 {
        0.05
    }

    fn default_fraction() -> f64 {
        1.0
    }

    fn default_target() -> CrossoverTarget {
        CrossoverTarget::Best
    }

    fn default_generation_cap() -> usize {
        1000
    }

    pub fn new(biobjective: BiObjectiveConfig) -> Self {
        Self {
            shsade: Self::default_shsade(),
            biobjective,
            budget: Self::default_budget(),
            sigma_init_noise: Self::default_sigma(),
            noise_each_generation: false,
            mutate_fraction: Self::default_fraction(),
            crossover_target: Self::default_target(),
            generation_cap: Self::default_generation_cap(),
            runs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shsade.validate()?;
        self.biobjective.validate()?;
        if self.budget < self.shsade.population_size {
            return Err(Error::InvalidConfig(format!(
                "budget {} is smaller than the population size {}",
                self.budget, self.shsade.population_size
            )));
        }
        if !(self.sigma_init_noise >= 0.0 && self.sigma_init_noise.is_finite()) {
            return Err(Error::InvalidConfig(
                "sigma_init_noise must be finite and >= 0".into(),
            ));
        }
        if !(self.mutate_fraction > 0.0 && self.mutate_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "mutate_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.runs == Some(0) {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Memoized, budgeted scoring of genotypes given by value indices.
pub(crate) struct ScoreCache<'a, P: ?Sized> {
    space: &'a DiscreteSpace,
    predictor: &'a P,
    cfg: BiObjectiveConfig,
    budget: usize,
    memo: HashMap<Vec<usize>, f64>,
    history: Vec<(Vec<usize>, f64)>,
}

impl<'a, P: Predictor + ?Sized> ScoreCache<'a, P> {
    pub(crate) fn new(
        space: &'a DiscreteSpace,
        predictor: &'a P,
        cfg: BiObjectiveConfig,
        budget: usize,
    ) -> Self {
        Self {
            space,
            predictor,
            cfg,
            budget,
            memo: HashMap::new(),
            history: Vec::new(),
        }
    }

    pub(crate) fn contains(&self, idx: &[usize]) -> bool {
        self.memo.contains_key(idx)
    }

    /// Cached score, or a fresh one if budget remains.
    pub(crate) fn score(&mut self, idx: &[usize]) -> Result<f64> {
        if let Some(&f) = self.memo.get(idx) {
            return Ok(f);
        }
        if self.history.len() >= self.budget {
            return Err(Error::BudgetExhausted);
        }
        let f = score(&self.space.genotype(idx), self.predictor, &self.cfg)?;
        self.memo.insert(idx.to_vec(), f);
        self.history.push((idx.to_vec(), f));
        Ok(f)
    }

    pub(crate) fn sampled(&self) -> u64 {
        self.history.len() as u64
    }

    /// Sampling cannot continue: budget spent or every genotype seen.
    pub(crate) fn exhausted(&self) -> bool {
        let limit = (self.budget as u128).min(self.space.cardinality());
        self.history.len() as u128 >= limit
    }

    pub(crate) fn best_score(&self) -> f64 {
        best_of(&self.history).map_or(f64::INFINITY, |b| b.1)
    }

    pub(crate) fn into_result(self, trace: SearchTrace) -> NasResult {
        let (best_idx, best_score) = best_of(&self.history)
            .cloned()
            .expect("initialization scores at least one genotype");
        NasResult {
            best: self.space.genotype(&best_idx),
            best_score,
            evaluations: self.sampled(),
            trace,
            history: self
                .history
                .iter()
                .map(|(idx, f)| (self.space.genotype(idx), *f))
                .collect(),
        }
    }
}

/// The score cache seen as a continuous objective over `[0, 1]^m`.
struct EncodedObjective<'a, P: ?Sized> {
    cache: ScoreCache<'a, P>,
    bounds: Bounds,
}

impl<P: Predictor + ?Sized> Objective for EncodedObjective<'_, P> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let idx = decode_indices(x, self.cache.space);
        self.cache.score(&idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NasResult {
    pub best: Genotype,
    pub best_score: f64,
    /// Distinct architectures scored.
    pub evaluations: u64,
    pub trace: SearchTrace,
    /// Every distinct genotype scored, in order.
    pub history: Vec<(Genotype, f64)>,
}

impl NasResult {
    /// `{"best_genotype": {...}, "best_score": f, "evaluations": n, "trace": [...]}`
    pub fn to_json(&self, space: &DiscreteSpace) -> serde_json::Value {
        serde_json::json!({
            "best_genotype": space.genotype_json(&self.best),
            "best_score": self.best_score,
            "evaluations": self.evaluations,
            "trace": self.trace,
        })
    }
}

/// Best-ever entry of a history, first one on ties.
pub(crate) fn best_of(history: &[(Vec<usize>, f64)]) -> Option<&(Vec<usize>, f64)> {
    history
        .iter()
        .fold(None, |best: Option<&(Vec<usize>, f64)>, e| match best {
            Some(b) if b.1 <= e.1 => Some(b),
            _ => Some(e),
        })
}

/// SHSADE-driven architecture search.
///
/// Each run encodes random genotypes (with optional noise) to seed a fresh
/// population, then for up to `shsade.max_generations` generations mutates
/// the chosen subset, crosses the donors with the crossover target, decodes
/// and scores the trials, and keeps the better of trial and parent. Runs
/// repeat until the budget is spent, the space is exhausted, `runs` runs
/// have finished, or `generation_cap` generations have passed in total.
/// All runs share the memo, so the budget counts distinct architectures.
pub fn nas_evolve<P, R>(
    space: &DiscreteSpace,
    predictor: &P,
    cfg: &NasConfig,
    rng: &mut R,
) -> Result<NasResult>
where
    P: Predictor + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let np = cfg.shsade.population_size;
    let mut objective = EncodedObjective {
        cache: ScoreCache::new(space, predictor, cfg.biobjective, cfg.budget),
        bounds: Bounds::uniform(space.dim(), 0.0, 1.0)?,
    };
    let options = GenerationOptions {
        crossover_target: cfg.crossover_target,
        mutate_fraction: cfg.mutate_fraction,
        trial_noise: if cfg.noise_each_generation {
            cfg.sigma_init_noise
        } else {
            0.0
        },
    };
    let mut trace = SearchTrace::new();
    let mut generations = 0usize;
    let mut runs = 0usize;

    while !objective.cache.exhausted()
        && generations < cfg.generation_cap
        && cfg.runs.is_none_or(|limit| runs < limit)
    {
        runs += 1;
        let mut members = Vec::with_capacity(np);
        let mut out_of_budget = false;
        for _ in 0..np {
            let u = encode_indices(&space.random_indices(rng), space);
            let u = perturb_slice(&u, cfg.sigma_init_noise, rng);
            match objective.evaluate(&u) {
                Ok(f) => members.push(Individual::with_fitness(u, f)),
                Err(Error::BudgetExhausted) => {
                    out_of_budget = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let mean = members.iter().map(|m| m.fitness).sum::<f64>() / members.len().max(1) as f64;
        let row = TraceRow {
            generation: generations as u64,
            evaluations: objective.cache.sampled(),
            best_fitness: objective.cache.best_score(),
            mean_fitness: mean,
        };
        if trace.is_empty() {
            trace.push(row)?;
        } else {
            trace.push_if_progress(row)?;
        }
        if out_of_budget {
            break;
        }

        let mut state = ShsadeState::from_population(&cfg.shsade, Population::new(members)?)?;
        while !objective.cache.exhausted()
            && state.generation < cfg.shsade.max_generations
            && generations < cfg.generation_cap
        {
            let outcome =
                shsade_generation_with(&mut state, &cfg.shsade, options, &mut objective, rng)?;
            generations += 1;
            trace.push_if_progress(TraceRow {
                generation: generations as u64,
                evaluations: objective.cache.sampled(),
                best_fitness: objective.cache.best_score(),
                mean_fitness: state.population.mean_fitness(),
            })?;
            if outcome.budget_exhausted {
                break;
            }
        }
    }

    Ok(objective.cache.into_result(trace))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedGenotype {
    pub indices: Vec<usize>,
    pub genotype: Genotype,
    pub score: f64,
    pub accuracy: f64,
    pub cost: f64,
}

/// Scores every genotype and sorts ascending by score; ties keep
/// lexicographic index order.
pub fn brute_force_optimum<P: Predictor + ?Sized>(
    space: &DiscreteSpace,
    predictor: &P,
    cfg: &BiObjectiveConfig,
) -> Result<(Genotype, Vec<RankedGenotype>)> {
    cfg.validate()?;
    let total = space.cardinality();
    if total > MAX_ENUMERATION {
        return Err(Error::SpaceTooLarge(total));
    }
    let sizes: Vec<usize> = space.axes().iter().map(Axis::len).collect();
    let mut ranking = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; sizes.len()];
    loop {
        let genotype = space.genotype(&idx);
        let accuracy = predictor.predict_accuracy(&genotype)?;
        let cost = predictor.predict_cost(&genotype)?;
        ranking.push(RankedGenotype {
            score: scalarize(accuracy, cost, cfg)?,
            indices: idx.clone(),
            genotype,
            accuracy,
            cost,
        });
        // odometer increment, last axis fastest
        let mut k = sizes.len();
        loop {
            if k == 0 {
                ranking.sort_by(|a, b| a.score.total_cmp(&b.score));
                let best = ranking[0].genotype.clone();
                return Ok((best, ranking));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Per-block PIDS-style search space: width, expansion ratio, depth and
/// point-interaction order for each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidsSpaceTemplate {
    pub blocks: usize,
    pub widths: Vec<i64>,
    pub expansions: Vec<i64>,
    pub depths: Vec<i64>,
    pub interactions: Vec<String>,
}

impl Default for PidsSpaceTemplate {
    fn default() -> Self {
        Self {
            blocks: 7,
            widths: vec![16, 24, 32, 48, 64],
            expansions: vec![1, 2, 3, 4],
            depths: vec![1, 2, 3],
            interactions: vec!["first".into(), "second".into()],
        }
    }
}

impl PidsSpaceTemplate {
    pub fn build(&self) -> Result<DiscreteSpace> {
        if self.blocks == 0 {
            return Err(Error::InvalidSpace(
                "template needs at least one block".into(),
            ));
        }
        let mut axes = Vec::with_capacity(self.blocks * 4);
        for b in 0..self.blocks {
            axes.push(Axis::new(
                format!("block{b}.width"),
                self.widths.iter().copied(),
            ));
            axes.push(Axis::new(
                format!("block{b}.expansion"),
                self.expansions.iter().copied(),
            ));
            axes.push(Axis::new(
                format!("block{b}.depth"),
                self.depths.iter().copied(),
            ));
            axes.push(Axis::new(
                format!("block{b}.interaction"),
                self.interactions.iter().map(String::as_str),
            ));
        }
        DiscreteSpace::new(axes)
    }
}
