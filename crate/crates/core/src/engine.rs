//! Package-based Monte Carlo estimation of the reduced overlap integrals.
//!
//! The sample budget is split into equal packages, each driven by its own
//! counter-based stream. Packages run in parallel and are merged in index
//! order, so results do not depend on the number of worker threads. Error
//! bars are the minimum and maximum package means; a standard error over the
//! package means is reported alongside.

use std::ops::RangeInclusive;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::DecaySeries;
use crate::error::{Error, Result};
use crate::overlap::{Family, IntegralSpec, Integrand, IntegrandRegistry};
use crate::samplers::{
    CoordinateLayout, Estimator, PointGenerator, SampleStream, SamplerKind, SamplerRegistry,
};
use crate::summation::CompensatedSum;

pub const DEFAULT_PACKAGES: usize = 20;
pub const DEFAULT_NORM_TOLERANCE: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 20_100_817;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Requested samples; rounded up to a multiple of `packages`.
    pub samples_total: u64,
    pub packages: usize,
    pub root_seed: u64,
    pub sampler: SamplerKind,
    pub norm_tolerance: f64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples_total: 1_000_000,
            packages: DEFAULT_PACKAGES,
            root_seed: DEFAULT_SEED,
            sampler: SamplerKind::DirectDensity,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
            threads: None,
        }
    }
}

impl McConfig {
    pub fn new(samples_total: u64, sampler: SamplerKind, root_seed: u64) -> Self {
        Self {
            samples_total,
            sampler,
            root_seed,
            ..Self::default()
        }
    }

    pub fn with_packages(mut self, packages: usize) -> Self {
        self.packages = packages;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn samples_per_package(&self) -> u64 {
        self.samples_total.div_ceil(self.packages as u64)
    }

    fn validate(&self) -> Result<()> {
        if self.samples_total == 0 {
            return Err(Error::ZeroSamples);
        }
        if self.packages == 0 {
            return Err(Error::InvalidConfig("packages must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        if !(self.norm_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("norm tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub package_min: f64,
    pub package_max: f64,
    pub std_error: f64,
    pub norm_mean: f64,
    pub norm_package_spread: (f64, f64),
    pub samples_used: u64,
    pub reliable: bool,
    pub wall_time_seconds: f64,
    pub package_means: Vec<f64>,
}

impl McEstimate {
    /// Half-width of the wider of the min/max band and the 3-sigma band.
    pub fn error_band(&self) -> f64 {
        let spread = (self.package_max - self.mean).max(self.mean - self.package_min);
        spread.max(3.0 * self.std_error)
    }

    /// Whether `value` lies inside the min/max band or within 3 standard errors.
    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.error_band()
    }
}

struct PackageSums {
    overlap: CompensatedSum,
    norm: CompensatedSum,
}

/// Runs estimates against registered integrands and samplers.
#[derive(Clone, Default)]
pub struct Engine {
    samplers: SamplerRegistry,
    integrands: IntegrandRegistry,
}

impl Engine {
    pub fn new(samplers: SamplerRegistry, integrands: IntegrandRegistry) -> Self {
        Self {
            samplers,
            integrands,
        }
    }

    pub fn samplers(&self) -> &SamplerRegistry {
        &self.samplers
    }

    pub fn estimate(&self, spec: IntegralSpec, config: &McConfig) -> Result<McEstimate> {
        config.validate()?;
        let integrand = self.integrands.build(spec)?;
        let sampler = self.samplers.by_kind(config.sampler)?;
        let layout = CoordinateLayout::new(integrand.dimension(), integrand.weighted_slots())?;
        let generator = sampler.prepare(&layout)?;
        let estimator = sampler.estimator();

        let start = Instant::now();
        let run = || {
            (0..config.packages)
                .into_par_iter()
                .map(|p| {
                    let stream = SampleStream::new(
                        config.root_seed,
                        p as u64,
                        config.sampler,
                        generator.clone(),
                    );
                    run_package(
                        stream,
                        integrand.as_ref(),
                        estimator,
                        config.samples_per_package(),
                    )
                })
                .collect::<Vec<_>>()
        };
        let sums = match config.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
                .install(run),
            None => run(),
        };
        let wall_time_seconds = start.elapsed().as_secs_f64();

        let per = config.samples_per_package() as f64;
        let package_means: Vec<f64> = sums.iter().map(|s| s.overlap.value() / per).collect();
        let norm_means: Vec<f64> = sums.iter().map(|s| s.norm.value() / per).collect();
        let (mean, std_error, package_min, package_max) = summarize(&package_means);
        let (norm_mean, _, norm_min, norm_max) = summarize(&norm_means);
        let reliable = (norm_mean - 1.0).abs() <= config.norm_tolerance
            && (package_max - package_min) < mean;

        Ok(McEstimate {
            mean,
            package_min,
            package_max,
            std_error,
            norm_mean,
            norm_package_spread: (norm_min, norm_max),
            samples_used: config.samples_per_package() * config.packages as u64,
            reliable,
            wall_time_seconds,
            package_means,
        })
    }

    /// One independent estimate per `n`, each with its own sub-seed.
    ///
    /// Failures for individual `n` are recorded in the series instead of
    /// aborting the sweep.
    pub fn sweep(
        &self,
        family: Family,
        n_range: RangeInclusive<usize>,
        template: &McConfig,
    ) -> Result<DecaySeries> {
        if n_range.is_empty() {
            return Err(Error::EmptyRange);
        }
        let mut series = DecaySeries::new(family);
        for n in n_range {
            let config = McConfig {
                root_seed: sweep_seed(template.root_seed, n),
                ..template.clone()
            };
            match IntegralSpec::new(family, n).and_then(|spec| self.estimate(spec, &config)) {
                Ok(est) => series.push(n, est)?,
                Err(e) => series.push_failure(n, e.to_string()),
            }
        }
        Ok(series)
    }
}

fn run_package(
    mut stream: SampleStream,
    integrand: &dyn Integrand,
    estimator: Estimator,
    samples: u64,
) -> PackageSums {
    let d = stream.dimension();
    let generator: &dyn PointGenerator = stream.generator();
    // When every sample carries total weight exactly 1 the weighted norm is
    // trivially 1; fall back to a second-moment check of the sampler instead.
    let trivial_norm = generator.unit_density_weight()
        && (estimator == Estimator::DirectDensity || integrand.weighted_slots().is_empty());
    let inv_moments: Vec<f64> = (0..d)
        .map(|i| 1.0 / (d as f64 * generator.second_moment(i)))
        .collect();

    let mut x = vec![0.0; d];
    let mut overlap = CompensatedSum::new();
    let mut norm = CompensatedSum::new();
    for _ in 0..samples {
        let density_weight = stream.fill_next(&mut x);
        let weight = match estimator {
            Estimator::DirectDensity => density_weight,
            Estimator::ImportanceWeighted => density_weight * integrand.weight(&x),
        };
        if integrand.indicator(&x) {
            overlap.add(weight);
        }
        if trivial_norm {
            norm.add(x.iter().zip(&inv_moments).map(|(v, m)| v * v * m).sum());
        } else {
            norm.add(weight);
        }
    }
    PackageSums { overlap, norm }
}

/// Mean, standard error of the mean, min and max of package means.
fn summarize(values: &[f64]) -> (f64, f64, f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / count;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let std_error = if values.len() > 1 {
        let ss = values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .collect::<CompensatedSum>()
            .value();
        (ss / (count - 1.0)).sqrt() / count.sqrt()
    } else {
        0.0
    };
    (mean, std_error, min.min(mean), max.max(mean))
}

/// Seed for the `n`-th point of a sweep.
pub fn sweep_seed(root_seed: u64, n: usize) -> u64 {
    let mut z = root_seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// [`Engine::estimate`] with the default registries.
pub fn estimate(spec: IntegralSpec, config: &McConfig) -> Result<McEstimate> {
    Engine::default().estimate(spec, config)
}

/// [`Engine::sweep`] with the default registries.
pub fn sweep(family: Family, n_range: RangeInclusive<usize>, template: &McConfig) -> Result<DecaySeries> {
    Engine::default().sweep(family, n_range, template)
}
