//! Differential-evolution building blocks shared by every optimizer in the crate.
//!
//! Everything here is minimization-oriented: lower fitness is better.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest population the mutation operators can work with: three distinct
/// donors plus the target.
pub const MIN_POPULATION: usize = 4;

/// Axis-aligned box constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBounds> for Bounds {
    type Error = Error;
    fn try_from(raw: RawBounds) -> Result<Self> {
        Bounds::new(raw.lower, raw.upper)
    }
}

impl From<Bounds> for RawBounds {
    fn from(b: Bounds) -> Self {
        RawBounds {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBounds(
                "at least one dimension is required".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} entries but upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidBounds(format!(
                    "dimension {d}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval repeated over `dim` dimensions.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Uniform sample inside the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// A decision vector together with its cached objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub fitness: f64,
    pub evaluated: bool,
}

impl Individual {
    pub fn unevaluated(x: Vec<f64>) -> Self {
        Self {
            x,
            fitness: f64::INFINITY,
            evaluated: false,
        }
    }

    pub fn with_fitness(x: Vec<f64>, fitness: f64) -> Self {
        Self {
            x,
            fitness,
            evaluated: true,
        }
    }
}

/// Fixed-size collection of individuals sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if members.len() < MIN_POPULATION {
            return Err(Error::PopulationTooSmall(members.len()));
        }
        let dim = members[0].x.len();
        if let Some(bad) = members.iter().find(|m| m.x.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.x.len(),
            });
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].x.len()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &Individual {
        &self.members[i]
    }

    pub(crate) fn set(&mut self, i: usize, ind: Individual) {
        self.members[i] = ind;
    }

    /// Index of the lowest fitness, first one on ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate().skip(1) {
            if m.fitness < self.members[best].fitness {
                best = i;
            }
        }
        best
    }

    pub fn best(&self) -> &Individual {
        &self.members[self.best_index()]
    }

    pub fn mean_fitness(&self) -> f64 {
        self.members.iter().map(|m| m.fitness).sum::<f64>() / self.members.len() as f64
    }

    /// Member indices sorted by ascending fitness; ties keep index order.
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.members.len()).collect();
        idx.sort_by(|&a, &b| self.members[a].fitness.total_cmp(&self.members[b].fitness));
        idx
    }
}

/// The fitness contract the optimizers drive.
///
/// Implementations must be deterministic: the same vector always maps to the
/// same value. `&mut self` is allowed so wrappers can memoize or meter calls.
pub trait Objective {
    fn bounds(&self) -> &Bounds;

    fn evaluate(&mut self, x: &[f64]) -> Result<f64>;

    fn dimension(&self) -> usize {
        self.bounds().dim()
    }
}

/// Box-bounded objective backed by a closure.
pub struct ObjectiveSpec<F> {
    bounds: Bounds,
    evaluator: F,
}

impl<F> ObjectiveSpec<F>
where
    F: FnMut(&[f64]) -> f64,
{
    pub fn new(bounds: Bounds, evaluator: F) -> Self {
        Self { bounds, evaluator }
    }
}

impl<F> Objective for ObjectiveSpec<F>
where
    F: FnMut(&[f64]) -> f64,
{
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        Ok((self.evaluator)(x))
    }
}

/// Evaluates `x` and enforces the finite-fitness invariant.
pub fn evaluate<O: Objective + ?Sized>(objective: &mut O, x: Vec<f64>) -> Result<Individual> {
    if x.len() != objective.dimension() {
        return Err(Error::DimensionMismatch {
            expected: objective.dimension(),
            actual: x.len(),
        });
    }
    let f = objective.evaluate(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteFitness(f));
    }
    Ok(Individual::with_fitness(x, f))
}

/// Uniform random population inside the objective's bounds, fully evaluated.
pub fn init_population<O, R>(objective: &mut O, np: usize, rng: &mut R) -> Result<Population>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if np < MIN_POPULATION {
        return Err(Error::PopulationTooSmall(np));
    }
    let vectors: Vec<Vec<f64>> = (0..np).map(|_| objective.bounds().sample(rng)).collect();
    let members = vectors
        .into_iter()
        .map(|x| evaluate(objective, x))
        .collect::<Result<Vec<_>>>()?;
    Population::new(members)
}

/// Midpoint repair: a coordinate that left the box is placed halfway between
/// the violated bound and the base vector's coordinate.
pub fn repair_bounds(v: &[f64], bounds: &Bounds, base: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(d, &x)| {
            let (lo, hi) = (bounds.lower[d], bounds.upper[d]);
            if x < lo {
                (lo + base[d]) / 2.0
            } else if x > hi {
                (hi + base[d]) / 2.0
            } else if x.is_nan() {
                base[d]
            } else {
                x
            }
        })
        .collect()
}

/// Binomial crossover with one forced donor coordinate.
pub fn binomial_crossover<R: Rng + ?Sized>(
    target: &[f64],
    donor: &[f64],
    cr: f64,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert_eq!(target.len(), donor.len());
    let j_rand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(j, (&t, &d))| {
            let take = rng.random::<f64>() < cr;
            if take || j == j_rand {
                d
            } else {
                t
            }
        })
        .collect()
}

/// Keeps the trial when it is at least as good as the target.
pub fn greedy_select(target: Individual, trial: Individual) -> (Individual, bool) {
    if trial.fitness <= target.fitness {
        (trial, true)
    } else {
        (target, false)
    }
}
