//! Discrete architecture spaces and their embedding into `[0, 1]^m`.
//!
//! Axis value `j` of an `n`-valued axis sits at `j / (n - 1)`; decoding
//! rounds back to the nearest code point (ties go to the higher index).
//! Single-valued axes encode to 0.5.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One admissible axis value. Integers and labels are kept apart so that
/// `16` and `"16"` are different values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Int(i64),
    Label(String),
}

impl AxisValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            AxisValue::Int(v) => Some(*v),
            AxisValue::Label(_) => None,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Int(v) => write!(f, "{v}"),
            AxisValue::Label(s) => f.write_str(s),
        }
    }
}

impl From<i64> for AxisValue {
    fn from(v: i64) -> Self {
        AxisValue::Int(v)
    }
}

impl From<&str> for AxisValue {
    fn from(v: &str) -> Self {
        AxisValue::Label(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<AxisValue>,
}

impl Axis {
    pub fn new<V: Into<AxisValue>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = V>,
    ) -> Self {
        Self {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered list of axes; a genotype picks one value per axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct DiscreteSpace {
    axes: Vec<Axis>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    axes: Vec<Axis>,
}

impl TryFrom<RawSpace> for DiscreteSpace {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        DiscreteSpace::new(raw.axes)
    }
}

impl From<DiscreteSpace> for RawSpace {
    fn from(s: DiscreteSpace) -> Self {
        RawSpace { axes: s.axes }
    }
}

impl DiscreteSpace {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSpace("at least one axis is required".into()));
        }
        let mut names = HashSet::new();
        for axis in &axes {
            if !names.insert(axis.name.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate axis name `{}`",
                    axis.name
                )));
            }
            if axis.values.is_empty() {
                return Err(Error::InvalidSpace(format!(
                    "axis `{}` has no values",
                    axis.name
                )));
            }
            let mut seen = HashSet::new();
            for v in &axis.values {
                if !seen.insert(v) {
                    return Err(Error::InvalidSpace(format!(
                        "axis `{}` lists value `{v}` twice",
                        axis.name
                    )));
                }
            }
        }
        Ok(Self { axes })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpace(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serialization is infallible")
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of axes, `m`.
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Number of distinct genotypes, saturating.
    pub fn cardinality(&self) -> u128 {
        self.axes
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    pub fn indices_of(&self, g: &Genotype) -> Result<Vec<usize>> {
        if g.choices.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: g.choices.len(),
            });
        }
        self.axes
            .iter()
            .zip(&g.choices)
            .map(|(axis, v)| {
                axis.values
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| Error::NotInAxis {
                        axis: axis.name.clone(),
                        value: v.to_string(),
                    })
            })
            .collect()
    }

    /// Genotype for per-axis value indices. Panics on out-of-range indices.
    pub fn genotype(&self, indices: &[usize]) -> Genotype {
        Genotype {
            choices: self
                .axes
                .iter()
                .zip(indices)
                .map(|(a, &j)| a.values[j].clone())
                .collect(),
        }
    }

    pub fn random_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| rng.random_range(0..a.len()))
            .collect()
    }

    /// `{"axis name": value, ...}` in axis order.
    pub fn genotype_json(&self, g: &Genotype) -> serde_json::Value {
        let map = self
            .axes
            .iter()
            .zip(&g.choices)
            .map(|(a, v)| (a.name.clone(), serde_json::to_value(v).expect("axis value")))
            .collect();
        serde_json::Value::Object(map)
    }
}

/// One choice per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genotype {
    pub choices: Vec<AxisValue>,
}

impl Genotype {
    pub fn new(choices: Vec<AxisValue>) -> Self {
        Self { choices }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContinuousEncoding {
    pub u: Vec<f64>,
}

fn encode_index(j: usize, n: usize) -> f64 {
    if n <= 1 {
        0.5
    } else {
        j as f64 / (n - 1) as f64
    }
}

fn decode_coordinate(u: f64, n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    let u = if u.is_nan() { 0.5 } else { u.clamp(0.0, 1.0) };
    ((u * (n - 1) as f64).round() as usize).min(n - 1)
}

pub fn encode_indices(indices: &[usize], space: &DiscreteSpace) -> Vec<f64> {
    space
        .axes
        .iter()
        .zip(indices)
        .map(|(a, &j)| encode_index(j, a.len()))
        .collect()
}

/// Total: coordinates are clamped to `[0, 1]` first.
pub fn decode_indices(u: &[f64], space: &DiscreteSpace) -> Vec<usize> {
    space
        .axes
        .iter()
        .zip(u)
        .map(|(a, &x)| decode_coordinate(x, a.len()))
        .collect()
}

pub fn encode(g: &Genotype, space: &DiscreteSpace) -> Result<ContinuousEncoding> {
    let idx = space.indices_of(g)?;
    Ok(ContinuousEncoding {
        u: encode_indices(&idx, space),
    })
}

pub fn decode(u: &ContinuousEncoding, space: &DiscreteSpace) -> Result<Genotype> {
    if u.u.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            actual: u.u.len(),
        });
    }
    Ok(space.genotype(&decode_indices(&u.u, space)))
}

/// Adds i.i.d. `N(0, sigma^2)` noise per coordinate and clamps to `[0, 1]`.
pub fn perturb<R: Rng + ?Sized>(
    u: &ContinuousEncoding,
    sigma: f64,
    rng: &mut R,
) -> ContinuousEncoding {
    ContinuousEncoding {
        u: perturb_slice(&u.u, sigma, rng),
    }
}

pub(crate) fn perturb_slice<R: Rng + ?Sized>(u: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    u.iter()
        .map(|&x| {
            if sigma == 0.0 {
                return x;
            }
            let z: f64 = StandardNormal.sample(rng);
            (x + sigma * z).clamp(0.0, 1.0)
        })
        .collect()
}
