use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    CoordinateLayout, Estimator, PointGenerator, Sampler, SamplerKind, StreamRng,
    GAUSSIAN_SECOND_MOMENT,
};
use crate::error::Result;

/// Independent coordinates with density `e^{-x^2}/sqrt(pi)`; the integrand
/// weight is applied by the engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct CartesianGaussian;

impl Sampler for CartesianGaussian {
    fn kind(&self) -> SamplerKind {
        SamplerKind::CartesianGaussian
    }

    fn estimator(&self) -> Estimator {
        Estimator::ImportanceWeighted
    }

    fn prepare(&self, layout: &CoordinateLayout) -> Result<Arc<dyn PointGenerator>> {
        Ok(Arc::new(GaussianPoints {
            dimension: layout.dimension(),
        }))
    }
}

struct GaussianPoints {
    dimension: usize,
}

impl PointGenerator for GaussianPoints {
    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        for v in x.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z * FRAC_1_SQRT_2;
        }
        1.0
    }

    fn unit_density_weight(&self) -> bool {
        true
    }

    fn second_moment(&self, _i: usize) -> f64 {
        GAUSSIAN_SECOND_MOMENT
    }
}
