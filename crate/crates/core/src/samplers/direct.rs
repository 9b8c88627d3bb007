use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{
    CoordinateLayout, Estimator, PointGenerator, Sampler, SamplerKind, StreamRng,
    GAUSSIAN_SECOND_MOMENT, SLOT_SECOND_MOMENT,
};
use crate::error::Result;

/// Samples the integrated `|Psi|^2` exactly.
///
/// Slot coordinates have density `(2/sqrt(pi)) x^2 e^{-x^2}`: `x^2` is
/// Gamma(3/2, 1), drawn as `E + Z^2/2` with `E ~ Exp(1)` and `Z ~ N(0, 1)`,
/// and the sign is a fair coin. Other coordinates are variance-1/2 Gaussians.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectDensity;

impl Sampler for DirectDensity {
    fn kind(&self) -> SamplerKind {
        SamplerKind::DirectDensity
    }

    fn estimator(&self) -> Estimator {
        Estimator::DirectDensity
    }

    fn prepare(&self, layout: &CoordinateLayout) -> Result<Arc<dyn PointGenerator>> {
        Ok(Arc::new(DensityPoints {
            slot: (0..layout.dimension()).map(|i| layout.is_slot(i)).collect(),
        }))
    }
}

struct DensityPoints {
    slot: Vec<bool>,
}

impl PointGenerator for DensityPoints {
    fn dimension(&self) -> usize {
        self.slot.len()
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        for (v, &is_slot) in x.iter_mut().zip(&self.slot) {
            if is_slot {
                let e: f64 = rng.sample(Exp1);
                let z: f64 = rng.sample(StandardNormal);
                let r = (e + 0.5 * z * z).sqrt();
                *v = if rng.random::<bool>() { r } else { -r };
            } else {
                let z: f64 = rng.sample(StandardNormal);
                *v = z * FRAC_1_SQRT_2;
            }
        }
        1.0
    }

    fn unit_density_weight(&self) -> bool {
        true
    }

    fn second_moment(&self, i: usize) -> f64 {
        if self.slot[i] {
            SLOT_SECOND_MOMENT
        } else {
            GAUSSIAN_SECOND_MOMENT
        }
    }
}
