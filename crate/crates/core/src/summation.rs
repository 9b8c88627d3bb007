//! Compensated summation.

/// Neumaier-compensated running sum.
///
/// Error is O(eps) independent of the number of terms, so per-package sums
/// merged in a fixed order reproduce the global sum to working precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another accumulator in, carrying its compensation term.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(values.iter().sum::<f64>(), 0.0);
        assert_eq!(compensated_sum(&values), 2.0);
    }

    #[test]
    fn merge_matches_single_pass() {
        let values: Vec<f64> = (0..10_000).map(|i| 0.1 + (i as f64) * 1e-7).collect();
        let whole = compensated_sum(&values);
        let mut merged = CompensatedSum::new();
        for chunk in values.chunks(500) {
            merged.merge(&chunk.iter().copied().collect());
        }
        assert!((merged.value() - whole).abs() <= whole * 1e-15);
    }
}
