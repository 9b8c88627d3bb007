use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rand::Rng;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::{
    CoordinateLayout, Estimator, PointGenerator, Sampler, SamplerKind, StreamRng,
    GAUSSIAN_SECOND_MOMENT,
};
use crate::error::{Error, Result};

/// Hyperspherical parametrisation of the Gaussian measure.
///
/// The radius has density proportional to `r^{d-1} e^{-r^2}` and is drawn by
/// inverting a tabulated CDF; the angles `theta_1..theta_{d-2}` are uniform on
/// `[0, pi]` and `theta_{d-1}` uniform on `[0, 2 pi)`. Uniform angles crowd
/// points into the polar caps; the surface Jacobian
/// `prod_j sin^{d-1-j}(theta_j)` and the table's piecewise-constant radial
/// density are both corrected in the density weight, so the estimate stays
/// unbiased but noisier than cartesian sampling.
#[derive(Debug, Clone, Copy)]
pub struct Spherical {
    /// Cells in the radial CDF table.
    pub table_cells: usize,
    /// Table extends to `sqrt(d/2) + radial_margin`.
    pub radial_margin: f64,
}

impl Default for Spherical {
    fn default() -> Self {
        Self {
            table_cells: 8192,
            radial_margin: 8.0,
        }
    }
}

impl Sampler for Spherical {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Spherical
    }

    fn estimator(&self) -> Estimator {
        Estimator::ImportanceWeighted
    }

    fn prepare(&self, layout: &CoordinateLayout) -> Result<Arc<dyn PointGenerator>> {
        let d = layout.dimension();
        let table = RadialTable::new(d, self.table_cells, self.radial_margin)?;
        let half = 0.5 * d as f64;
        Ok(Arc::new(SphericalPoints {
            dimension: d,
            table,
            log_const: (half - 1.0) * PI.ln() + LN_2,
        }))
    }
}

/// Tabulated CDF of the radius with density `2 r^{d-1} e^{-r^2} / Gamma(d/2)`.
#[derive(Debug, Clone)]
pub struct RadialTable {
    dimension: usize,
    step: f64,
    cdf: Vec<f64>,
}

impl RadialTable {
    pub fn new(dimension: usize, cells: usize, margin: f64) -> Result<Self> {
        if dimension == 0 || cells < 2 || !(margin > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radial table needs d >= 1, >= 2 cells and positive margin (d = {dimension}, cells = {cells})"
            )));
        }
        let half = 0.5 * dimension as f64;
        let r_max = half.sqrt() + margin;
        let step = r_max / cells as f64;
        let cdf = (0..=cells)
            .map(|k| {
                let r = k as f64 * step;
                if k == 0 {
                    0.0
                } else {
                    gamma_lr(half, r * r)
                }
            })
            .collect();
        Ok(Self {
            dimension,
            step,
            cdf,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.step * (self.cdf.len() - 1) as f64
    }

    /// Mass of the true radial law captured by the table.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("table is non-empty")
    }

    /// Maps `u` in `[0, 1)` to a radius and the log of the table's density there.
    pub fn invert(&self, u: f64) -> (f64, f64) {
        let total = self.total_mass();
        let target = u * total;
        let k = self.cdf.partition_point(|&f| f <= target).clamp(1, self.cdf.len() - 1) - 1;
        let mass = self.cdf[k + 1] - self.cdf[k];
        let frac = if mass > 0.0 {
            (target - self.cdf[k]) / mass
        } else {
            0.5
        };
        let r = (k as f64 + frac) * self.step;
        (r, (mass / (self.step * total)).ln())
    }

    /// Log of the exact radial density at `r`.
    pub fn log_true_density(&self, r: f64) -> f64 {
        let d = self.dimension as f64;
        LN_2 + (d - 1.0) * r.ln() - r * r - ln_gamma(0.5 * d)
    }
}

struct SphericalPoints {
    dimension: usize,
    table: RadialTable,
    /// `(d/2 - 1) ln pi + ln 2`, the parameter-space volume over the sphere
    /// area once `Gamma(d/2)` cancels against the radial density.
    log_const: f64,
}

impl PointGenerator for SphericalPoints {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn draw(&self, rng: &mut StreamRng, x: &mut [f64]) -> f64 {
        let d = self.dimension;
        let (r, log_table) = self.table.invert(rng.random::<f64>());
        let dd = d as f64;
        let mut log_w = self.log_const + (dd - 1.0) * r.ln() - r * r - log_table;
        if d == 1 {
            x[0] = if rng.random::<bool>() { r } else { -r };
            return log_w.exp();
        }
        let mut radius = r;
        for (j, v) in x.iter_mut().enumerate().take(d - 2) {
            let theta = PI * rng.random::<f64>();
            let (s, c) = theta.sin_cos();
            *v = radius * c;
            radius *= s;
            log_w += (d - 2 - j) as f64 * s.ln();
        }
        let phi = 2.0 * PI * rng.random::<f64>();
        let (s, c) = phi.sin_cos();
        x[d - 2] = radius * c;
        x[d - 1] = radius * s;
        log_w.exp()
    }

    fn unit_density_weight(&self) -> bool {
        false
    }

    fn second_moment(&self, _i: usize) -> f64 {
        GAUSSIAN_SECOND_MOMENT
    }
}
