//! Decay-law fits of overlap series.

use serde::{Deserialize, Serialize};

use crate::engine::McEstimate;
use crate::error::{Error, Result};
use crate::overlap::Family;

/// Overlap estimates indexed by particle number, sorted by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub family: Family,
    entries: Vec<(usize, McEstimate)>,
    /// `n` values whose estimate failed, with the error message.
    pub failures: Vec<(usize, String)>,
}

impl DecaySeries {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            entries: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Inserts keeping `n` sorted; duplicate `n` is an error.
    pub fn push(&mut self, n: usize, estimate: McEstimate) -> Result<()> {
        match self.entries.binary_search_by_key(&n, |(k, _)| *k) {
            Ok(_) => Err(Error::InvalidConfig(format!("duplicate entry for n = {n}"))),
            Err(pos) => {
                self.entries.insert(pos, (n, estimate));
                Ok(())
            }
        }
    }

    pub fn push_failure(&mut self, n: usize, message: String) {
        self.failures.push((n, message));
    }

    pub fn entries(&self) -> &[(usize, McEstimate)] {
        &self.entries
    }

    pub fn get(&self, n: usize) -> Option<&McEstimate> {
        self.entries
            .binary_search_by_key(&n, |(k, _)| *k)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Multiplies every mean, band and error by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for (_, e) in &mut out.entries {
            e.mean *= factor;
            e.package_min *= factor;
            e.package_max *= factor;
            e.std_error *= factor;
            e.package_means.iter_mut().for_each(|m| *m *= factor);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Overlap behaves like `a * rate_b^{-n}`.
    pub rate_b: f64,
    /// `ln a`.
    pub intercept: f64,
    /// `(n, rho_n / rho_{n+1})` for consecutive reliable entries.
    pub per_step_rates: Vec<(usize, f64)>,
    /// RMS of `ln rho_n` residuals of the exponential model.
    pub residual_rms: f64,
    /// Same for the `a * c^{-sqrt(n)}` model.
    pub sqrt_model_residual_rms: f64,
    /// `c` of the `c^{-sqrt(n)}` model.
    pub sqrt_model_rate: f64,
    pub entries_used: usize,
    pub entries_excluded: usize,
}

struct LineFit {
    slope: f64,
    intercept: f64,
    residual_rms: f64,
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> LineFit {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    LineFit {
        slope,
        intercept,
        residual_rms: (ss / xs.len() as f64).sqrt(),
    }
}

/// Weighted least squares of `ln rho_n` against `n` over reliable entries in
/// `[min_n, max_n]`.
///
/// Weights are inverse squared relative errors, using the wider of the
/// min/max band and the standard error. If any used entry has zero error all
/// weights are equal.
pub fn fit_decay(series: &DecaySeries, min_n: usize, max_n: usize) -> Result<DecayFit> {
    let in_range: Vec<&(usize, McEstimate)> = series
        .entries()
        .iter()
        .filter(|(n, _)| (min_n..=max_n).contains(n))
        .collect();
    let used: Vec<&(usize, McEstimate)> = in_range.iter().copied().filter(|(_, e)| e.reliable).collect();
    if used.len() < 3 {
        return Err(Error::TooFewReliable { found: used.len() });
    }
    if let Some((n, _)) = used.iter().find(|(_, e)| !(e.mean > 0.0)) {
        return Err(Error::NonPositiveMean { n: *n });
    }

    let xs: Vec<f64> = used.iter().map(|(n, _)| *n as f64).collect();
    let ys: Vec<f64> = used.iter().map(|(_, e)| e.mean.ln()).collect();
    let rel: Vec<f64> = used
        .iter()
        .map(|(_, e)| {
            let half_band = 0.5 * (e.package_max - e.package_min);
            half_band.max(e.std_error) / e.mean
        })
        .collect();
    let ws: Vec<f64> = if rel.iter().all(|r| *r > 0.0 && r.is_finite()) {
        rel.iter().map(|r| 1.0 / (r * r)).collect()
    } else {
        vec![1.0; rel.len()]
    };

    let exp_fit = weighted_line(&xs, &ys, &ws);
    let sqrt_xs: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
    let sqrt_fit = weighted_line(&sqrt_xs, &ys, &ws);

    let per_step_rates = used
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (w[0].0, w[0].1.mean / w[1].1.mean))
        .collect();

    Ok(DecayFit {
        rate_b: (-exp_fit.slope).exp(),
        intercept: exp_fit.intercept,
        per_step_rates,
        residual_rms: exp_fit.residual_rms,
        sqrt_model_residual_rms: sqrt_fit.residual_rms,
        sqrt_model_rate: (-sqrt_fit.slope).exp(),
        entries_used: used.len(),
        entries_excluded: in_range.len() - used.len(),
    })
}
