//! Random point sets over the reduced integration space.
//!
//! Each sampling strategy implements [`Sampler`] and is registered by name in
//! a [`SamplerRegistry`]; the engine looks strategies up at run time. A
//! strategy is prepared once per integral into a [`PointGenerator`] that is
//! then driven by per-package [`SampleStream`]s.

mod cartesian;
mod direct;
mod spherical;
mod stream;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cartesian::CartesianGaussian;
pub use direct::DirectDensity;
pub use spherical::{RadialTable, Spherical};
pub use stream::{split_stream, stream_seed, SampleStream, StreamRng, WeightedSample};

/// Variance-1/2 Gaussian second moment, `E[x^2]` under `e^{-x^2}/sqrt(pi)`.
pub const GAUSSIAN_SECOND_MOMENT: f64 = 0.5;

/// `E[x^2]` under `(2/sqrt(pi)) x^2 e^{-x^2}`.
pub const SLOT_SECOND_MOMENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SamplerKind {
    #[serde(rename = "cartesian")]
    CartesianGaussian,
    #[serde(rename = "direct")]
    DirectDensity,
    #[serde(rename = "spherical")]
    Spherical,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::CartesianGaussian => "cartesian",
            SamplerKind::DirectDensity => "direct",
            SamplerKind::Spherical => "spherical",
        }
    }

    /// Stable tag mixed into stream seeds.
    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            SamplerKind::CartesianGaussian => 0x6361_7274,
            SamplerKind::DirectDensity => 0x6469_7263,
            SamplerKind::Spherical => 0x7370_6872,
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cartesian" | "gaussian" => Ok(SamplerKind::CartesianGaussian),
            "direct" | "density" => Ok(SamplerKind::DirectDensity),
            "spherical" => Ok(SamplerKind::Spherical),
            _ => Err(Error::Unknown {
                what: "sampler",
                name: s.to_string(),
            }),
        }
    }
}

/// How the engine turns samples into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Each sample contributes `density_weight * weight * indicator`.
    ImportanceWeighted,
    /// Samples already follow the integrated `|Psi|^2`; each contributes the
    /// bare indicator.
    DirectDensity,
}

/// Which reduced coordinates carry the linear factors of the integrated state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateLayout {
    slot: Vec<bool>,
}

impl CoordinateLayout {
    pub fn new(dimension: usize, slots: &[usize]) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidDimension("dimension must be positive".into()));
        }
        let mut slot = vec![false; dimension];
        for &s in slots {
            if s >= dimension {
                return Err(Error::InvalidDimension(format!(
                    "slot {s} outside dimension {dimension}"
                )));
            }
            slot[s] = true;
        }
        Ok(Self { slot })
    }

    /// A layout with no slots: the plain Gaussian measure.
    pub fn gaussian(dimension: usize) -> Result<Self> {
        Self::new(dimension, &[])
    }

    pub fn dimension(&self) -> usize {
        self.slot.len()
    }

    pub fn is_slot(&self, i: usize) -> bool {
        self.slot[i]
    }

    pub fn slot_count(&self) -> usize {
        self.slot.iter().filter(|&&s| s).count()
    }
}

/// A sampling strategy.
pub trait Sampler: Send + Sync {
    fn kind(&self) -> SamplerKind;

    fn estimator(&self) -> Estimator;

    /// Builds the per-integral generator. Tables and constants live here so
    /// streams stay cheap.
    fn prepare(&self, layout: &CoordinateLayout) -> Result<Arc<dyn PointGenerator>>;
}

/// A prepared sampler: fills points and returns their density weight.
pub trait PointGenerator: Send + Sync {
    fn dimension(&self) -> usize;

    /// Fills `x` and returns the ratio between the target measure and the
    /// sampling density at `x`.
    fn draw(&self, rng: &mut StreamRng, x: &mut [f64]) -> f64;

    /// Whether [`PointGenerator::draw`] always returns exactly 1.
    fn unit_density_weight(&self) -> bool;

    /// Analytic `E[x_i^2]` under the target measure this generator samples.
    fn second_moment(&self, i: usize) -> f64;
}

/// Sampling strategies keyed by name.
#[derive(Clone)]
pub struct SamplerRegistry {
    strategies: BTreeMap<String, Arc<dyn Sampler>>,
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(CartesianGaussian));
        registry.register(Arc::new(DirectDensity));
        registry.register(Arc::new(Spherical::default()));
        registry
    }
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    /// Registers a strategy under its kind's name, replacing any previous one.
    pub fn register(&mut self, sampler: Arc<dyn Sampler>) {
        self.strategies
            .insert(sampler.kind().name().to_string(), sampler);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Sampler>> {
        let key = name.parse::<SamplerKind>().map(|k| k.name().to_string());
        key.ok()
            .and_then(|k| self.strategies.get(&k).cloned())
            .ok_or_else(|| Error::Unknown {
                what: "sampler",
                name: name.to_string(),
            })
    }

    pub fn by_kind(&self, kind: SamplerKind) -> Result<Arc<dyn Sampler>> {
        self.get(kind.name())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}
