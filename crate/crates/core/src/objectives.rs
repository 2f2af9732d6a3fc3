//! Validation objectives: analytic benchmarks with known minima, and seeded
//! tabular surrogates whose optimum can be found by enumeration.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::{Axis, AxisValue, DiscreteSpace, Genotype};
use crate::de_core::{Bounds, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Sphere,
    Rosenbrock,
    Rastrigin,
    Ackley,
}

impl BenchmarkKind {
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            BenchmarkKind::Sphere | BenchmarkKind::Rastrigin => (-5.12, 5.12),
            BenchmarkKind::Rosenbrock => (-5.0, 10.0),
            BenchmarkKind::Ackley => (-32.768, 32.768),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Sphere => "sphere",
            BenchmarkKind::Rosenbrock => "rosenbrock",
            BenchmarkKind::Rastrigin => "rastrigin",
            BenchmarkKind::Ackley => "ackley",
        }
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "rosenbrock" => Ok(Self::Rosenbrock),
            "rastrigin" => Ok(Self::Rastrigin),
            "ackley" => Ok(Self::Ackley),
            other => Err(Error::InvalidConfig(format!("unknown benchmark `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFunction {
    kind: BenchmarkKind,
    bounds: Bounds,
}

impl BenchmarkFunction {
    /// Benchmark on its conventional domain.
    pub fn new(kind: BenchmarkKind, dimension: usize) -> Result<Self> {
        if kind == BenchmarkKind::Rosenbrock && dimension < 2 {
            return Err(Error::InvalidConfig(
                "rosenbrock needs at least 2 dimensions".into(),
            ));
        }
        let (lo, hi) = kind.default_bounds();
        Ok(Self {
            kind,
            bounds: Bounds::uniform(dimension, lo, hi)?,
        })
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn known_optimum(&self) -> (Vec<f64>, f64) {
        let loc = match self.kind {
            BenchmarkKind::Rosenbrock => 1.0,
            _ => 0.0,
        };
        (vec![loc; self.dimension()], 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_benchmark(self.kind, x)
    }
}

impl Objective for BenchmarkFunction {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x))
    }
}

pub fn eval_benchmark(kind: BenchmarkKind, x: &[f64]) -> f64 {
    let d = x.len() as f64;
    match kind {
        BenchmarkKind::Sphere => x.iter().map(|v| v * v).sum(),
        BenchmarkKind::Rosenbrock => x
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum(),
        BenchmarkKind::Rastrigin => {
            10.0 * d
                + x.iter()
                    .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                    .sum::<f64>()
        }
        BenchmarkKind::Ackley => {
            let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
            let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
            -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + E
        }
    }
}

/// Serialized form: `{"space": {...}, "seed": n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSpec {
    pub space: DiscreteSpace,
    pub seed: u64,
}

/// Role an axis plays in the cost model, read from the part of its name
/// after the last `.` (e.g. `block3.width`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CostRole {
    Width,
    Depth,
    Expansion,
}

fn split_axis_name(name: &str) -> (&str, &str) {
    match name.rsplit_once('.') {
        Some((block, kind)) => (block, kind),
        None => ("", name),
    }
}

fn cost_role(kind: &str) -> Option<CostRole> {
    let kind = kind.to_ascii_lowercase();
    if kind.contains("width") || kind.contains("channel") {
        Some(CostRole::Width)
    } else if kind.contains("depth") {
        Some(CostRole::Depth)
    } else if kind.contains("expan") {
        Some(CostRole::Expansion)
    } else {
        None
    }
}

/// Standard deviation of the pairwise interaction entries relative to the
/// unit-variance per-axis weights.
const INTERACTION_SCALE: f64 = 0.6;

/// Deterministic stand-in for a learned accuracy/cost predictor.
///
/// Accuracy is a logistic squash of per-axis weights plus pairwise
/// interaction terms, all drawn from `seed`. Cost sums, per block, the
/// product of the block's width, expansion and depth choices.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSurrogate {
    space: DiscreteSpace,
    seed: u64,
    axis_weights: Vec<Vec<f64>>,
    /// `pair_weights[p][j][l]` for the `p`-th axis pair `(a, b)`, `a < b`.
    pair_weights: Vec<Vec<Vec<f64>>>,
    pairs: Vec<(usize, usize)>,
    scale: f64,
    /// Per block: (axis index, role).
    cost_blocks: Vec<Vec<(usize, CostRole)>>,
}

impl TabularSurrogate {
    pub fn new(space: DiscreteSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let axis_weights: Vec<Vec<f64>> = space
            .axes()
            .iter()
            .map(|a| (0..a.len()).map(|_| normal()).collect())
            .collect();
        let m = space.dim();
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|a| ((a + 1)..m).map(move |b| (a, b)))
            .collect();
        let pair_weights = pairs
            .iter()
            .map(|&(a, b)| {
                (0..space.axes()[a].len())
                    .map(|_| {
                        (0..space.axes()[b].len())
                            .map(|_| INTERACTION_SCALE * normal())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let variance = m as f64 + INTERACTION_SCALE.powi(2) * pairs.len() as f64;
        let scale = 1.5 / variance.sqrt();

        let mut blocks: Vec<(String, Vec<(usize, CostRole)>)> = Vec::new();
        for (i, axis) in space.axes().iter().enumerate() {
            let (block, kind) = split_axis_name(&axis.name);
            if let Some(role) = cost_role(kind) {
                match blocks.iter_mut().find(|(b, _)| b == block) {
                    Some((_, members)) => members.push((i, role)),
                    None => blocks.push((block.to_string(), vec![(i, role)])),
                }
            }
        }
        Self {
            seed,
            axis_weights,
            pair_weights,
            pairs,
            scale,
            cost_blocks: blocks.into_iter().map(|(_, m)| m).collect(),
            space,
        }
    }

    pub fn from_spec(spec: SurrogateSpec) -> Self {
        Self::new(spec.space, spec.seed)
    }

    pub fn spec(&self) -> SurrogateSpec {
        SurrogateSpec {
            space: self.space.clone(),
            seed: self.seed,
        }
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn accuracy_of_indices(&self, idx: &[usize]) -> f64 {
        let mut z: f64 = idx
            .iter()
            .enumerate()
            .map(|(i, &j)| self.axis_weights[i][j])
            .sum();
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            z += self.pair_weights[p][idx[a]][idx[b]];
        }
        1.0 / (1.0 + (-self.scale * z).exp())
    }

    pub fn cost_of_indices(&self, idx: &[usize]) -> f64 {
        if self.cost_blocks.is_empty() {
            return 1.0;
        }
        self.cost_blocks
            .iter()
            .map(|members| {
                members
                    .iter()
                    .map(|&(axis, _)| {
                        let j = idx[axis];
                        match &self.space.axes()[axis].values[j] {
                            AxisValue::Int(v) if *v > 0 => *v as f64,
                            _ => (j + 1) as f64,
                        }
                    })
                    .product::<f64>()
            })
            .sum()
    }

    /// Accuracy in `[0, 1]` and a positive cost.
    pub fn predict(&self, g: &Genotype) -> Result<(f64, f64)> {
        let idx = self.space.indices_of(g)?;
        Ok((self.accuracy_of_indices(&idx), self.cost_of_indices(&idx)))
    }
}

pub fn surrogate_predict(s: &TabularSurrogate, g: &Genotype) -> Result<(f64, f64)> {
    s.predict(g)
}

/// The 1024-configuration space used by the validation suite: two blocks,
/// five axes with four values each.
pub fn reference_space() -> DiscreteSpace {
    DiscreteSpace::new(vec![
        Axis::new("block0.width", [16, 32, 48, 64]),
        Axis::new("block0.expansion", [1, 2, 3, 4]),
        Axis::new("block0.depth", [1, 2, 3, 4]),
        Axis::new("block1.width", [16, 32, 48, 64]),
        Axis::new("block1.interaction", ["first", "second", "third", "fourth"]),
    ])
    .expect("reference space is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn benchmark_values() {
        assert_eq!(eval_benchmark(BenchmarkKind::Sphere, &[0.0; 5]), 0.0);
        assert_eq!(eval_benchmark(BenchmarkKind::Rastrigin, &[0.0; 5]), 0.0);
        assert_eq!(eval_benchmark(BenchmarkKind::Rosenbrock, &[1.0, 1.0]), 0.0);
        assert_eq!(eval_benchmark(BenchmarkKind::Rosenbrock, &[0.0, 0.0]), 1.0);
        assert!(eval_benchmark(BenchmarkKind::Ackley, &[0.0; 4]).abs() < 1e-12);
        assert_eq!(eval_benchmark(BenchmarkKind::Sphere, &[1.0, 2.0]), 5.0);
    }

    #[test]
    fn known_optima() {
        for kind in [
            BenchmarkKind::Sphere,
            BenchmarkKind::Rosenbrock,
            BenchmarkKind::Rastrigin,
            BenchmarkKind::Ackley,
        ] {
            let f = BenchmarkFunction::new(kind, 7).unwrap();
            let (x, v) = f.known_optimum();
            assert!((f.eval(&x) - v).abs() < 1e-12, "{kind:?}");
            assert!(f.bounds.contains(&x));
        }
        assert!(BenchmarkFunction::new(BenchmarkKind::Rosenbrock, 1).is_err());
    }

    #[test]
    fn surrogate_determinism_and_range() {
        let a = TabularSurrogate::new(reference_space(), 11);
        let b = TabularSurrogate::new(reference_space(), 11);
        assert_eq!(a, b);
        let s = reference_space();
        for flat in 0..1024usize {
            let idx: Vec<usize> = (0..5).map(|k| (flat >> (2 * (4 - k))) & 3).collect();
            let g = s.genotype(&idx);
            let (acc, cost) = a.predict(&g).unwrap();
            assert_eq!((acc, cost), b.predict(&g).unwrap());
            assert!((0.0..=1.0).contains(&acc));
            assert!(cost > 0.0);
        }
        assert!(a.predict(&Genotype::new(vec![AxisValue::Int(1)])).is_err());
    }

    #[test]
    fn cost_model_shape() {
        let s = reference_space();
        let t = TabularSurrogate::new(s.clone(), 0);
        // block0: 16*1*1, block1: 16
        assert_eq!(t.cost_of_indices(&[0, 0, 0, 0, 0]), 32.0);
        // block0: 64*4*4, block1: 64
        assert_eq!(t.cost_of_indices(&[3, 3, 3, 3, 2]), 1088.0);
        let plain = DiscreteSpace::new(vec![Axis::new("op", ["a", "b"])]).unwrap();
        assert_eq!(TabularSurrogate::new(plain, 0).cost_of_indices(&[1]), 1.0);
    }

    #[test]
    fn spec_json_shape() {
        let t = TabularSurrogate::new(reference_space(), 9);
        let text = serde_json::to_string(&t.spec()).unwrap();
        assert!(text.starts_with(r#"{"space":{"axes":"#));
        let back: SurrogateSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(TabularSurrogate::from_spec(back), t);
    }

    proptest! {
        #[test]
        fn sphere_and_rastrigin_nonnegative(x in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            prop_assert!(eval_benchmark(BenchmarkKind::Sphere, &x) >= 0.0);
            prop_assert!(eval_benchmark(BenchmarkKind::Rastrigin, &x) >= -1e-12);
        }

        #[test]
        fn cost_increases_with_width(seed in any::<u64>(), others in prop::collection::vec(0usize..4, 5)) {
            let t = TabularSurrogate::new(reference_space(), seed);
            for axis in [0usize, 3] {
                let mut prev = f64::NEG_INFINITY;
                for w in 0..4 {
                    let mut idx = others.clone();
                    idx[axis] = w;
                    let c = t.cost_of_indices(&idx);
                    prop_assert!(c > prev);
                    prev = c;
                }
            }
        }
    }
}
