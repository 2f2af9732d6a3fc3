//! Success-history adaptive DE with sinusoidal F schedules and a
//! trigonometric local-search strategy.
//!
//! Each generation every individual draws a mutation strategy from a small
//! adaptive pool:
//!
//! * `current-to-pbest/1` with per-individual `F` and `CR`. During the first
//!   half of the run `F` follows one of two sinusoidal schedules (a fixed
//!   decreasing one, or an increasing one whose frequency is adapted through
//!   a Cauchy-sampled memory). Afterwards `F` is drawn around the success
//!   memory `MF`. `CR` is always drawn around `MCR`.
//! * trigonometric mutation, a fitness-weighted move inside the triangle of
//!   three random members. Its donor is the trial vector; no crossover.
//!
//! Successful `F`/`CR` values are folded into the memories with an arithmetic
//! mean, successful frequencies with the Lehmer mean. Strategy probabilities
//! are re-estimated from success rates every `learning_period` generations.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::de_core::{
    binomial_crossover, evaluate, greedy_select, init_population, repair_bounds, Individual,
    Objective, Population,
};
use crate::error::{Error, Result};
use crate::trace::{SearchTrace, TraceRow};

/// Number of consecutive non-positive draws tolerated before a truncated
/// sampler falls back to its location parameter.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    CurrentToPbest,
    Trigonometric,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::CurrentToPbest, Strategy::Trigonometric];

    pub fn index(self) -> usize {
        match self {
            Strategy::CurrentToPbest => 0,
            Strategy::Trigonometric => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinusoidalVariant {
    Decreasing,
    AdaptiveIncreasing,
}

/// How `F` is drawn once the sinusoidal window has closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondHalfF {
    #[default]
    Cauchy,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShsadeConfig {
    /// NP.
    pub population_size: usize,
    /// H, the length of each success memory.
    pub memory_size: usize,
    /// Gmax. Also sets the length of the sinusoidal window (first half).
    pub max_generations: usize,
    /// Fraction of the population eligible as `pbest`.
    pub pbest_fraction: f64,
    /// Defaults to the population size.
    pub archive_capacity: Option<usize>,
    /// LP, in generations.
    pub learning_period: usize,
    pub min_strategy_probability: f64,
    pub strategy_epsilon: f64,
    /// Memory learning rate `c`. Both 0 and 1 give plain replacement by the mean.
    pub learning_rate: f64,
    pub cr_init: f64,
    pub f_init: f64,
    pub freq_init: f64,
    /// Frequency of the non-adaptive decreasing schedule. At 0.5 (or any
    /// integer multiple of it) the sine vanishes at every integer generation
    /// and the schedule degenerates to the constant 0.5.
    pub fixed_frequency: f64,
    pub sigma_cr: f64,
    pub sigma_f: f64,
    pub sigma_freq: f64,
    pub f_second_half: SecondHalfF,
    /// Disable to draw `F` from the memory in every generation.
    pub sinusoidal: bool,
    /// Pins the strategy distribution and turns off its adaptation.
    pub fixed_strategy_probabilities: Option<[f64; 2]>,
}

impl Default for ShsadeConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            memory_size: 10,
            max_generations: 1000,
            pbest_fraction: 0.11,
            archive_capacity: None,
            learning_period: 20,
            min_strategy_probability: 0.05,
            strategy_epsilon: 0.01,
            learning_rate: 1.0,
            cr_init: 0.5,
            f_init: 0.5,
            freq_init: 0.5,
            fixed_frequency: 0.25,
            sigma_cr: 0.1,
            sigma_f: 0.1,
            sigma_freq: 0.1,
            f_second_half: SecondHalfF::Cauchy,
            sinusoidal: true,
            fixed_strategy_probabilities: None,
        }
    }
}

impl ShsadeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < crate::de_core::MIN_POPULATION {
            return Err(Error::PopulationTooSmall(self.population_size));
        }
        if self.memory_size == 0 {
            return bad("memory_size must be at least 1".into());
        }
        if self.max_generations == 0 {
            return bad("max_generations must be at least 1".into());
        }
        if !(self.pbest_fraction > 0.0 && self.pbest_fraction <= 1.0) {
            return bad(format!(
                "pbest_fraction must lie in (0, 1], got {}",
                self.pbest_fraction
            ));
        }
        if self.learning_period == 0 {
            return bad("learning_period must be at least 1".into());
        }
        let k = Strategy::ALL.len() as f64;
        if !(self.min_strategy_probability >= 0.0 && self.min_strategy_probability * k <= 1.0) {
            return bad(format!(
                "min_strategy_probability must lie in [0, 1/{k}], got {}",
                self.min_strategy_probability
            ));
        }
        if !(self.strategy_epsilon >= 0.0) {
            return bad("strategy_epsilon must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return bad(format!(
                "learning_rate must lie in [0, 1], got {}",
                self.learning_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.cr_init) {
            return bad("cr_init must lie in [0, 1]".into());
        }
        for (name, v) in [("f_init", self.f_init), ("freq_init", self.freq_init)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !self.fixed_frequency.is_finite() {
            return bad("fixed_frequency must be finite".into());
        }
        for (name, v) in [
            ("sigma_cr", self.sigma_cr),
            ("sigma_f", self.sigma_f),
            ("sigma_freq", self.sigma_freq),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number"));
            }
        }
        if let Some(p) = self.fixed_strategy_probabilities {
            if p.iter().any(|v| !(*v >= 0.0)) || ((p[0] + p[1]) - 1.0).abs() > 1e-12 {
                return bad(format!(
                    "fixed_strategy_probabilities must be a distribution, got {p:?}"
                ));
            }
        }
        Ok(())
    }

    pub fn archive_capacity(&self) -> usize {
        self.archive_capacity.unwrap_or(self.population_size)
    }

    /// Plain SHADE: current-to-pbest/1 only and memory-driven F throughout.
    pub fn shade_baseline() -> Self {
        Self {
            sinusoidal: false,
            fixed_strategy_probabilities: Some([1.0, 0.0]),
            ..Self::default()
        }
    }
}

/// Circular success memories for CR, F and the adaptive frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterMemories {
    pub cr: Vec<f64>,
    pub f: Vec<f64>,
    pub freq: Vec<f64>,
    pub next_update_index: usize,
}

impl ParameterMemories {
    pub fn new(size: usize, cr_init: f64, f_init: f64, freq_init: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig(
                "memory size must be at least 1".into(),
            ));
        }
        Ok(Self {
            cr: vec![cr_init; size],
            f: vec![f_init; size],
            freq: vec![freq_init; size],
            next_update_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.cr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cr.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        let h = self.cr.len();
        h >= 1
            && self.f.len() == h
            && self.freq.len() == h
            && self.next_update_index < h
            && self.cr.iter().all(|v| (0.0..=1.0).contains(v))
            && self
                .f
                .iter()
                .chain(&self.freq)
                .all(|v| *v > 0.0 && *v <= 1.0)
    }

    /// Folds one generation's successes into slot `next_update_index`.
    ///
    /// Each memory changes only if its own success set is non-empty; the slot
    /// index advances when any of them changed.
    pub fn update(&mut self, success: &SuccessSets, learning_rate: f64) {
        if success.is_empty() {
            return;
        }
        let k = self.next_update_index;
        let blend = |old: f64, new: f64| {
            if learning_rate == 0.0 {
                new
            } else {
                (1.0 - learning_rate) * old + learning_rate * new
            }
        };
        if !success.cr.is_empty() {
            let m = arithmetic_mean(&success.cr);
            self.cr[k] = blend(self.cr[k], m).clamp(0.0, 1.0);
        }
        if !success.f.is_empty() {
            let m = arithmetic_mean(&success.f);
            self.f[k] = clamp_open_unit(blend(self.f[k], m));
        }
        if !success.freq.is_empty() {
            // Positivity is guaranteed by the sampler; clamp covers synthetic input.
            if let Ok(m) = lehmer_mean(&success.freq) {
                self.freq[k] = clamp_open_unit(blend(self.freq[k], m));
            }
        }
        self.next_update_index = (k + 1) % self.len();
    }

    pub fn updated(&self, success: &SuccessSets, learning_rate: f64) -> Self {
        let mut next = self.clone();
        next.update(success, learning_rate);
        next
    }
}

fn clamp_open_unit(v: f64) -> f64 {
    v.clamp(f64::MIN_POSITIVE, 1.0)
}

fn arithmetic_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Parameter values of the trials that strictly improved on their parent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuccessSets {
    pub cr: Vec<f64>,
    pub f: Vec<f64>,
    pub freq: Vec<f64>,
}

impl SuccessSets {
    pub fn is_empty(&self) -> bool {
        self.cr.is_empty() && self.f.is_empty() && self.freq.is_empty()
    }

    pub fn clear(&mut self) {
        self.cr.clear();
        self.f.clear();
        self.freq.clear();
    }
}

/// Strategy-selection probabilities and the running success tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyState {
    pub probabilities: [f64; 2],
    pub successes: [u64; 2],
    pub failures: [u64; 2],
    pub min_probability: f64,
    pub epsilon: f64,
    pub adaptive: bool,
}

impl StrategyState {
    pub fn uniform(min_probability: f64, epsilon: f64) -> Self {
        Self {
            probabilities: [0.5, 0.5],
            successes: [0; 2],
            failures: [0; 2],
            min_probability,
            epsilon,
            adaptive: true,
        }
    }

    /// Non-adaptive distribution; the floor is not applied.
    pub fn fixed(probabilities: [f64; 2]) -> Self {
        Self {
            probabilities,
            successes: [0; 2],
            failures: [0; 2],
            min_probability: 0.0,
            epsilon: 0.0,
            adaptive: false,
        }
    }

    fn from_config(cfg: &ShsadeConfig) -> Self {
        match cfg.fixed_strategy_probabilities {
            Some(p) => Self::fixed(p),
            None => Self::uniform(cfg.min_strategy_probability, cfg.strategy_epsilon),
        }
    }

    /// Categorical draw over the pool.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Strategy {
        let u: f64 = rng.random();
        if u < self.probabilities[0] {
            Strategy::CurrentToPbest
        } else {
            Strategy::Trigonometric
        }
    }

    pub fn record(&mut self, strategy: Strategy, success: bool) {
        if success {
            self.successes[strategy.index()] += 1;
        } else {
            self.failures[strategy.index()] += 1;
        }
    }

    /// Re-estimates the distribution from the window's success rates and
    /// resets the counters. A window with no trials leaves it untouched.
    pub fn update(&mut self) {
        let trials: Vec<u64> = (0..2)
            .map(|k| self.successes[k] + self.failures[k])
            .collect();
        if trials.iter().all(|&t| t == 0) {
            return;
        }
        let q: Vec<f64> = (0..2)
            .map(|k| {
                let rate = if trials[k] == 0 {
                    0.0
                } else {
                    self.successes[k] as f64 / trials[k] as f64
                };
                rate + self.epsilon
            })
            .collect();
        let total: f64 = q.iter().sum();
        let free = 1.0 - self.min_probability * q.len() as f64;
        if total > 0.0 {
            let p0 = self.min_probability + free * q[0] / total;
            self.probabilities = [p0, 1.0 - p0];
        }
        self.successes = [0; 2];
        self.failures = [0; 2];
    }
}

/// Clamped normal draw around a random `MCR` slot.
pub fn sample_cr<R: Rng + ?Sized>(memories: &ParameterMemories, sigma: f64, rng: &mut R) -> f64 {
    let r = rng.random_range(0..memories.len());
    let z: f64 = StandardNormal.sample(rng);
    cr_from_raw(memories.cr[r] + sigma * z)
}

pub fn cr_from_raw(raw: f64) -> f64 {
    raw.clamp(0.0, 1.0)
}

/// Resolves a stream of raw draws into `(0, 1]`: values above one are
/// truncated, non-positive values are redrawn, and after [`MAX_RESAMPLES`]
/// non-positive draws the location is used instead.
pub fn truncate_to_open_unit<I: IntoIterator<Item = f64>>(draws: I, fallback: f64) -> f64 {
    for raw in draws.into_iter().take(MAX_RESAMPLES) {
        if raw > 1.0 {
            return 1.0;
        }
        if raw > 0.0 {
            return raw;
        }
    }
    fallback
}

fn cauchy_draws<'a, R: Rng + ?Sized>(
    location: f64,
    scale: f64,
    rng: &'a mut R,
) -> impl Iterator<Item = f64> + 'a {
    std::iter::repeat_with(move || location + scale * (PI * (rng.random::<f64>() - 0.5)).tan())
}

fn normal_draws<'a, R: Rng + ?Sized>(
    location: f64,
    scale: f64,
    rng: &'a mut R,
) -> impl Iterator<Item = f64> + 'a {
    std::iter::repeat_with(move || {
        let z: f64 = StandardNormal.sample(rng);
        location + scale * z
    })
}

/// Cauchy draw around a random `MF` slot, resolved into `(0, 1]`.
pub fn sample_f_cauchy<R: Rng + ?Sized>(
    memories: &ParameterMemories,
    scale: f64,
    rng: &mut R,
) -> f64 {
    let r = rng.random_range(0..memories.len());
    let loc = memories.f[r];
    truncate_to_open_unit(cauchy_draws(loc, scale, rng), loc)
}

/// Normal draw around a random `MF` slot, resolved into `(0, 1]`.
pub fn sample_f_gaussian<R: Rng + ?Sized>(
    memories: &ParameterMemories,
    scale: f64,
    rng: &mut R,
) -> f64 {
    let r = rng.random_range(0..memories.len());
    let loc = memories.f[r];
    truncate_to_open_unit(normal_draws(loc, scale, rng), loc)
}

/// Adaptive frequency: Cauchy around `location`, resolved into `(0, 1]`.
pub fn sample_frequency<R: Rng + ?Sized>(location: f64, scale: f64, rng: &mut R) -> f64 {
    truncate_to_open_unit(cauchy_draws(location, scale, rng), location)
}

/// Decreasing schedule: the oscillation amplitude shrinks linearly to zero at `gmax`.
pub fn sinusoidal_decreasing_f(g: usize, gmax: usize, freq: f64) -> f64 {
    let (g, gmax) = (g as f64, gmax as f64);
    0.5 * ((2.0 * PI * freq * g + PI).sin() * (gmax - g) / gmax + 1.0)
}

/// Increasing schedule: the amplitude grows linearly with `g`.
pub fn sinusoidal_increasing_f(g: usize, gmax: usize, freq: f64) -> f64 {
    let (g, gmax) = (g as f64, gmax as f64);
    0.5 * ((2.0 * PI * freq * g).sin() * g / gmax + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalDraw {
    pub f: f64,
    /// Frequency actually used by the adaptive variant.
    pub freq: Option<f64>,
}

/// `F` for the first half of the run.
///
/// For [`SinusoidalVariant::Decreasing`] `freq` is the fixed frequency; for
/// the adaptive variant it is the memory location the frequency is drawn around.
pub fn sample_f_sinusoidal<R: Rng + ?Sized>(
    variant: SinusoidalVariant,
    g: usize,
    gmax: usize,
    freq: f64,
    sigma_freq: f64,
    rng: &mut R,
) -> Result<SinusoidalDraw> {
    let limit = gmax as f64 / 2.0;
    if g as f64 > limit || g == 0 {
        return Err(Error::OutsideSinusoidalWindow { g, limit });
    }
    Ok(match variant {
        SinusoidalVariant::Decreasing => SinusoidalDraw {
            f: sinusoidal_decreasing_f(g, gmax, freq),
            freq: None,
        },
        SinusoidalVariant::AdaptiveIncreasing => {
            let fi = sample_frequency(freq, sigma_freq, rng);
            SinusoidalDraw {
                f: sinusoidal_increasing_f(g, gmax, fi),
                freq: Some(fi),
            }
        }
    })
}

/// Contraharmonic mean `Σv² / Σv`.
pub fn lehmer_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("lehmer_mean"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidConfig(
            "lehmer_mean requires positive values".into(),
        ));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    Ok(sum_sq / sum)
}

/// Uniform index in `0..n` avoiding `exclude`.
fn pick_excluding<R: Rng + ?Sized>(n: usize, exclude: &[usize], rng: &mut R) -> usize {
    debug_assert!(n > exclude.len());
    loop {
        let c = rng.random_range(0..n);
        if !exclude.contains(&c) {
            return c;
        }
    }
}

/// `x_i + F (x_pbest - x_i) + F (x_r1 - x_r2)`.
pub fn current_to_pbest_donor(
    xi: &[f64],
    pbest: &[f64],
    r1: &[f64],
    r2: &[f64],
    f: f64,
) -> Vec<f64> {
    (0..xi.len())
        .map(|d| xi[d] + f * (pbest[d] - xi[d]) + f * (r1[d] - r2[d]))
        .collect()
}

/// current-to-pbest/1 donor for member `i`.
///
/// `pbest` is drawn from the `ceil(p * NP)` best members other than `i`,
/// `r1` from the population and `r2` from population plus archive; all
/// three are distinct from `i` and from each other.
pub fn mutate_current_to_pbest<R: Rng + ?Sized>(
    pop: &Population,
    archive: &[Vec<f64>],
    i: usize,
    f: f64,
    p: f64,
    rng: &mut R,
) -> Vec<f64> {
    let ranked = pop.ranked_indices();
    mutate_current_to_pbest_ranked(pop, &ranked, archive, i, f, p, rng)
}

fn mutate_current_to_pbest_ranked<R: Rng + ?Sized>(
    pop: &Population,
    ranked: &[usize],
    archive: &[Vec<f64>],
    i: usize,
    f: f64,
    p: f64,
    rng: &mut R,
) -> Vec<f64> {
    let np = pop.len();
    let top = ((p * np as f64).ceil() as usize).clamp(1, np);
    let mut pool: Vec<usize> = ranked
        .iter()
        .copied()
        .take(top)
        .filter(|&k| k != i)
        .collect();
    if pool.is_empty() {
        pool.push(ranked[top]);
    }
    let pbest = pool[rng.random_range(0..pool.len())];
    let r1 = pick_excluding(np, &[i, pbest], rng);
    let r2 = pick_excluding(np + archive.len(), &[i, pbest, r1], rng);
    let x_r2 = if r2 < np {
        &pop.get(r2).x
    } else {
        &archive[r2 - np]
    };
    current_to_pbest_donor(&pop.get(i).x, &pop.get(pbest).x, &pop.get(r1).x, x_r2, f)
}

/// Fitness-weighted trigonometric donor for three points.
///
/// Falls back to the centroid when all three fitness values are zero.
pub fn trigonometric_donor(points: [&[f64]; 3], fitness: [f64; 3]) -> Vec<f64> {
    let [a, b, c] = points;
    let total: f64 = fitness.iter().map(|v| v.abs()).sum();
    let (w1, w2, w3) = if total > 0.0 {
        (
            fitness[0].abs() / total,
            fitness[1].abs() / total,
            fitness[2].abs() / total,
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    (0..a.len())
        .map(|d| {
            let centroid = (a[d] + b[d] + c[d]) / 3.0;
            if total > 0.0 {
                centroid
                    + (w2 - w1) * (a[d] - b[d])
                    + (w3 - w2) * (b[d] - c[d])
                    + (w1 - w3) * (c[d] - a[d])
            } else {
                centroid
            }
        })
        .collect()
}

/// Trigonometric donor for member `i` from three distinct other members.
pub fn mutate_trigonometric<R: Rng + ?Sized>(pop: &Population, i: usize, rng: &mut R) -> Vec<f64> {
    let r1 = pick_excluding(pop.len(), &[i], rng);
    let r2 = pick_excluding(pop.len(), &[i, r1], rng);
    let r3 = pick_excluding(pop.len(), &[i, r1, r2], rng);
    let (a, b, c) = (pop.get(r1), pop.get(r2), pop.get(r3));
    trigonometric_donor([&a.x, &b.x, &c.x], [a.fitness, b.fitness, c.fitness])
}

/// Which vector the donor is crossed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverTarget {
    /// Classic DE: each donor is crossed with its own parent.
    #[default]
    PerIndividual,
    /// Every donor is crossed with the generation's best member.
    Best,
}

/// Variations of the generation step used by the architecture search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationOptions {
    pub crossover_target: CrossoverTarget,
    /// Share of the population that produces a trial each generation.
    pub mutate_fraction: f64,
    /// Standard deviation of Gaussian noise added to every trial before repair.
    pub trial_noise: f64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            crossover_target: CrossoverTarget::PerIndividual,
            mutate_fraction: 1.0,
            trial_noise: 0.0,
        }
    }
}

/// Loop state carried across generations.
#[derive(Debug, Clone, PartialEq)]
pub struct ShsadeState {
    pub population: Population,
    pub memories: ParameterMemories,
    pub strategy: StrategyState,
    pub archive: Vec<Vec<f64>>,
    /// Completed generations.
    pub generation: usize,
    pub evaluations: u64,
    pub best: Individual,
}

impl ShsadeState {
    pub fn initialize<O, R>(config: &ShsadeConfig, objective: &mut O, rng: &mut R) -> Result<Self>
    where
        O: Objective + ?Sized,
        R: Rng + ?Sized,
    {
        config.validate()?;
        let population = init_population(objective, config.population_size, rng)?;
        Self::from_population(config, population)
    }

    /// Starts from an already evaluated population.
    pub fn from_population(config: &ShsadeConfig, population: Population) -> Result<Self> {
        config.validate()?;
        if population.len() != config.population_size {
            return Err(Error::InvalidConfig(format!(
                "population has {} members but population_size is {}",
                population.len(),
                config.population_size
            )));
        }
        let best = population.best().clone();
        Ok(Self {
            evaluations: population.len() as u64,
            memories: ParameterMemories::new(
                config.memory_size,
                config.cr_init,
                config.f_init,
                config.freq_init,
            )?,
            strategy: StrategyState::from_config(config),
            archive: Vec::new(),
            generation: 0,
            best,
            population,
        })
    }

    pub fn trace_row(&self) -> TraceRow {
        TraceRow {
            generation: self.generation as u64,
            evaluations: self.evaluations,
            best_fitness: self.best.fitness,
            mean_fitness: self.population.mean_fitness(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationOutcome {
    /// Trials evaluated this generation.
    pub evaluated: usize,
    /// The objective refused further evaluations part-way through.
    pub budget_exhausted: bool,
}

struct Trial {
    index: usize,
    strategy: Strategy,
    x: Vec<f64>,
    cr: f64,
    f: f64,
    freq: Option<f64>,
}

/// One SHSADE generation with classic per-individual crossover.
pub fn shsade_generation<O, R>(
    state: &mut ShsadeState,
    config: &ShsadeConfig,
    objective: &mut O,
    rng: &mut R,
) -> Result<GenerationOutcome>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    shsade_generation_with(state, config, GenerationOptions::default(), objective, rng)
}

/// One generation. Trials are built from the generation-start population and
/// the state is only written once all of them are evaluated; an evaluator
/// error leaves `state` as it was. [`Error::BudgetExhausted`] is the
/// exception: trials evaluated before it are still selected and committed.
pub fn shsade_generation_with<O, R>(
    state: &mut ShsadeState,
    config: &ShsadeConfig,
    options: GenerationOptions,
    objective: &mut O,
    rng: &mut R,
) -> Result<GenerationOutcome>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let np = state.population.len();
    let g = state.generation + 1;
    let pop = &state.population;
    let ranked = pop.ranked_indices();
    let best_idx = ranked[0];
    let in_window = config.sinusoidal && (g as f64) <= config.max_generations as f64 / 2.0;

    let subset: Vec<usize> = if options.mutate_fraction >= 1.0 {
        (0..np).collect()
    } else {
        let k = ((options.mutate_fraction * np as f64).ceil() as usize).clamp(1, np);
        let mut s = index::sample(rng, np, k).into_vec();
        s.sort_unstable();
        s
    };

    let mut trials = Vec::with_capacity(subset.len());
    for &i in &subset {
        let strategy = state.strategy.select(rng);
        let xi = &pop.get(i).x;
        let trial = match strategy {
            Strategy::CurrentToPbest => {
                let (f, freq) = if in_window {
                    let variant = if rng.random_bool(0.5) {
                        SinusoidalVariant::Decreasing
                    } else {
                        SinusoidalVariant::AdaptiveIncreasing
                    };
                    let loc = match variant {
                        SinusoidalVariant::Decreasing => config.fixed_frequency,
                        SinusoidalVariant::AdaptiveIncreasing => {
                            state.memories.freq[rng.random_range(0..state.memories.len())]
                        }
                    };
                    let draw = sample_f_sinusoidal(
                        variant,
                        g,
                        config.max_generations,
                        loc,
                        config.sigma_freq,
                        rng,
                    )?;
                    (draw.f, draw.freq)
                } else {
                    let f = match config.f_second_half {
                        SecondHalfF::Cauchy => {
                            sample_f_cauchy(&state.memories, config.sigma_f, rng)
                        }
                        SecondHalfF::Gaussian => {
                            sample_f_gaussian(&state.memories, config.sigma_f, rng)
                        }
                    };
                    (f, None)
                };
                let cr = sample_cr(&state.memories, config.sigma_cr, rng);
                let donor = mutate_current_to_pbest_ranked(
                    pop,
                    &ranked,
                    &state.archive,
                    i,
                    f,
                    config.pbest_fraction,
                    rng,
                );
                let base = match options.crossover_target {
                    CrossoverTarget::PerIndividual => xi,
                    CrossoverTarget::Best => &pop.get(best_idx).x,
                };
                let x = binomial_crossover(base, &donor, cr, rng);
                Trial {
                    index: i,
                    strategy,
                    x,
                    cr,
                    f,
                    freq,
                }
            }
            Strategy::Trigonometric => Trial {
                index: i,
                strategy,
                x: mutate_trigonometric(pop, i, rng),
                cr: f64::NAN,
                f: f64::NAN,
                freq: None,
            },
        };
        let x = if options.trial_noise > 0.0 {
            trial
                .x
                .iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(rng);
                    v + options.trial_noise * z
                })
                .collect()
        } else {
            trial.x.clone()
        };
        trials.push(Trial {
            x: repair_bounds(&x, objective.bounds(), xi),
            ..trial
        });
    }

    let mut evaluated = Vec::with_capacity(trials.len());
    let mut budget_exhausted = false;
    for trial in trials {
        match evaluate(objective, trial.x.clone()) {
            Ok(ind) => evaluated.push((trial, ind)),
            Err(Error::BudgetExhausted) => {
                budget_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let mut success = SuccessSets::default();
    let capacity = config.archive_capacity();
    let n_evaluated = evaluated.len();
    for (trial, ind) in evaluated {
        let parent = state.population.get(trial.index).clone();
        let improved = ind.fitness < parent.fitness;
        if ind.fitness < state.best.fitness {
            state.best = ind.clone();
        }
        let (winner, replaced) = greedy_select(parent.clone(), ind);
        if replaced {
            if capacity > 0 {
                if state.archive.len() < capacity {
                    state.archive.push(parent.x);
                } else {
                    let slot = rng.random_range(0..state.archive.len());
                    state.archive[slot] = parent.x;
                }
            }
            state.population.set(trial.index, winner);
        }
        if improved && trial.strategy == Strategy::CurrentToPbest {
            success.cr.push(trial.cr);
            success.f.push(trial.f);
            if let Some(freq) = trial.freq {
                success.freq.push(freq);
            }
        }
        state.strategy.record(trial.strategy, improved);
    }

    state.memories.update(&success, config.learning_rate);
    state.evaluations += n_evaluated as u64;
    state.generation = g;
    if state.strategy.adaptive && g.is_multiple_of(config.learning_period) {
        state.strategy.update();
    }
    Ok(GenerationOutcome {
        evaluated: n_evaluated,
        budget_exhausted,
    })
}

/// Stopping rules; the first one satisfied ends the run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Termination {
    /// Defaults to the configuration's `max_generations`.
    pub max_generations: Option<usize>,
    /// A generation is only started if all of its trials fit.
    pub max_evaluations: Option<u64>,
    pub target_fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Individual,
    pub trace: SearchTrace,
    pub generations: usize,
    pub evaluations: u64,
}

/// Full optimization run. The trace starts with the initial population
/// (generation 0) and gains one row per generation.
pub fn run<O, R>(
    config: &ShsadeConfig,
    objective: &mut O,
    termination: Termination,
    rng: &mut R,
) -> Result<RunResult>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = ShsadeState::initialize(config, objective, rng)?;
    let mut trace = SearchTrace::new();
    trace.push(state.trace_row())?;
    let max_generations = termination
        .max_generations
        .unwrap_or(config.max_generations);
    let np = config.population_size as u64;
    loop {
        if termination
            .target_fitness
            .is_some_and(|t| state.best.fitness <= t)
            || state.generation >= max_generations
            || termination
                .max_evaluations
                .is_some_and(|m| state.evaluations + np > m)
        {
            break;
        }
        let outcome = shsade_generation(&mut state, config, objective, rng)?;
        if outcome.evaluated > 0 {
            trace.push(state.trace_row())?;
        }
        if outcome.budget_exhausted {
            break;
        }
    }
    Ok(RunResult {
        best: state.best,
        generations: state.generation,
        evaluations: state.evaluations,
        trace,
    })
}
