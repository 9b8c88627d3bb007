//! Deterministic cross-checks: closed forms and tensor-product quadrature of
//! the reduced integrals for small dimensions.
//!
//! The quadrature uses midpoint cells on `[-7, 7]` per axis. Every family's
//! indicator has the separable form `sum_i s_i(x_i) <= 0`, so the full tensor
//! sum is evaluated by enumerating each half of the axes, sorting one half by
//! score and summing prefix weights. The result is the exact tensor-product
//! sum at a cost of `O(m^{d/2} log m)`.
//!
//! Identical axes put whole diagonals of nodes exactly on the boundary
//! `|x_i| = |x_j|`; such nodes count with weight 1/2, which removes the O(h)
//! bias a one-sided tie rule would introduce.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::overlap::{Family, IntegralSpec};
use crate::summation::CompensatedSum;

/// Per-axis truncation radius.
pub const TRUNCATION_RADIUS: f64 = 7.0;

/// Largest reduced dimension handled by tensor quadrature.
pub const MAX_QUADRATURE_DIMENSION: usize = 6;

/// Score difference below which a node lies on the indicator boundary.
const TIE_SLACK: f64 = 1e-9;

/// Cap on the number of tensor nodes enumerated for one half of the axes.
const MAX_HALF_NODES: usize = 1 << 23;

/// `rho_1 = 1/2 - 1/pi`.
pub fn rho1_closed_form() -> f64 {
    0.5 - 1.0 / PI
}

/// `rho(Psi_vac | Psi_1) = erfc(1/sqrt 2)`: Gaussian mass beyond `|x| = 1/sqrt 2`.
pub fn vacn1_closed_form() -> f64 {
    erfc(FRAC_1_SQRT_2)
}

/// `rho(Psi_1 | Psi_vac) = erf(a) - (2/sqrt pi) a e^{-a^2}` with `a = 1/sqrt 2`.
pub fn nvac1_closed_form() -> f64 {
    let a = FRAC_1_SQRT_2;
    erf(a) - 2.0 / PI.sqrt() * a * (-a * a).exp()
}

/// Which part of the domain a quadrature integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Where the indicator holds.
    Indicator,
    /// Where it does not.
    Complement,
    /// Everything: the norm.
    Whole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// `|Q(m) - Q(m/2)|`.
    pub refinement_delta: f64,
    pub nodes_per_axis: usize,
}

/// A reasonable node count for each reduced dimension.
pub fn default_nodes(dimension: usize) -> usize {
    match dimension {
        0..=1 => 1 << 20,
        2 => 8192,
        3..=4 => 1024,
        _ => 128,
    }
}

/// `rho` for `spec` by tensor quadrature with a refinement error proxy.
pub fn quadrature_rho(spec: IntegralSpec, nodes_per_axis: usize) -> Result<QuadratureResult> {
    let fine = tensor_quadrature(spec, nodes_per_axis, Region::Indicator)?;
    let coarse = tensor_quadrature(spec, nodes_per_axis / 2, Region::Indicator)?;
    Ok(QuadratureResult {
        value: fine,
        refinement_delta: (fine - coarse).abs(),
        nodes_per_axis,
    })
}

#[derive(Clone, Copy)]
enum AxisRole {
    /// Carries `2x^2` and contributes `+ln(2x^2)` or `+ln x^2` to the score.
    Slot,
    Plain,
}

struct Axis {
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    fn new(nodes: usize, role: AxisRole, score: impl Fn(f64) -> f64) -> Self {
        let h = 2.0 * TRUNCATION_RADIUS / nodes as f64;
        let norm = h / PI.sqrt();
        let mut scores = Vec::with_capacity(nodes);
        let mut weights = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let x = -TRUNCATION_RADIUS + (i as f64 + 0.5) * h;
            let g = norm * (-x * x).exp();
            weights.push(match role {
                AxisRole::Slot => 2.0 * x * x * g,
                AxisRole::Plain => g,
            });
            scores.push(score(x));
        }
        Self { scores, weights }
    }
}

/// Per-axis weights and scores for `spec`; the indicator is `sum score <= 0`.
fn axes_for(spec: IntegralSpec, nodes: usize) -> Vec<Axis> {
    let ln_sq = |x: f64| 2.0 * x.abs().ln();
    let neg_ln_sq = |x: f64| -2.0 * x.abs().ln();
    match spec.family {
        Family::NN => (0..2 * spec.n)
            .map(|i| {
                let integrated = (i % 2 == 1) == spec.swap_roles;
                if integrated {
                    Axis::new(nodes, AxisRole::Slot, ln_sq)
                } else {
                    Axis::new(nodes, AxisRole::Plain, neg_ln_sq)
                }
            })
            .collect(),
        Family::NVac => (0..spec.n)
            .map(|_| Axis::new(nodes, AxisRole::Slot, |x| LN_2 + ln_sq(x)))
            .collect(),
        Family::VacN => (0..spec.n)
            .map(|_| Axis::new(nodes, AxisRole::Plain, |x| -(LN_2 + ln_sq(x))))
            .collect(),
    }
}

/// All `(score, weight)` combinations of a group of axes, zero weights dropped.
fn enumerate(axes: &[Axis]) -> Vec<(f64, f64)> {
    let mut combos = vec![(0.0, 1.0)];
    for axis in axes {
        let mut next = Vec::with_capacity(combos.len() * axis.scores.len());
        for &(s, w) in &combos {
            for (&sa, &wa) in axis.scores.iter().zip(&axis.weights) {
                let weight = w * wa;
                if weight > 0.0 {
                    next.push((s + sa, weight));
                }
            }
        }
        combos = next;
    }
    combos
}

/// Tensor-product midpoint quadrature of `weight * gaussian` over `region`.
pub fn tensor_quadrature(spec: IntegralSpec, nodes_per_axis: usize, region: Region) -> Result<f64> {
    let d = spec.dimension();
    if d == 0 {
        return Err(Error::InvalidDimension("particle count must be at least 1".into()));
    }
    if d > MAX_QUADRATURE_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dimension: d,
            max: MAX_QUADRATURE_DIMENSION,
        });
    }
    if nodes_per_axis < 2 {
        return Err(Error::InvalidConfig("need at least 2 nodes per axis".into()));
    }
    let half_nodes = (nodes_per_axis as f64).powi(d.div_ceil(2) as i32);
    if half_nodes > MAX_HALF_NODES as f64 {
        return Err(Error::InvalidConfig(format!(
            "{nodes_per_axis} nodes per axis in dimension {d} exceeds the enumeration cap"
        )));
    }

    let axes = axes_for(spec, nodes_per_axis);
    let (left, right) = axes.split_at(d / 2);
    let left = enumerate(left);
    let mut right = enumerate(right);

    if region == Region::Whole {
        let l: CompensatedSum = left.iter().map(|(_, w)| *w).collect();
        let r: CompensatedSum = right.iter().map(|(_, w)| *w).collect();
        return Ok(l.value() * r.value());
    }

    right.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = Vec::with_capacity(right.len() + 1);
    let mut acc = CompensatedSum::new();
    prefix.push(0.0);
    for (_, w) in &right {
        acc.add(*w);
        prefix.push(acc.value());
    }
    let right_total = acc.value();

    let mut inside = CompensatedSum::new();
    let mut outside = CompensatedSum::new();
    for &(s, w) in &left {
        let threshold = -s;
        let below = right.partition_point(|(sb, _)| *sb < threshold - TIE_SLACK);
        let upto = right.partition_point(|(sb, _)| *sb <= threshold + TIE_SLACK);
        let on_boundary = 0.5 * (prefix[upto] - prefix[below]);
        inside.add(w * (prefix[below] + on_boundary));
        outside.add(w * (right_total - prefix[upto] + on_boundary));
    }
    Ok(match region {
        Region::Indicator => inside.value(),
        Region::Complement => outside.value(),
        Region::Whole => unreachable!(),
    })
}

/// Distance between the maxima of the two compared states:
/// `sqrt(2n)` for n-vs-n, `sqrt(n)` against the vacuum.
pub fn maxima_distance(family: Family, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("particle count must be at least 1".into()));
    }
    Ok(match family {
        Family::NN => (2 * n) as f64,
        Family::NVac | Family::VacN => n as f64,
    }
    .sqrt())
}

/// One maximum of each compared state in reduced coordinates (all signs +).
///
/// `|Psi|^2` of a product state peaks at `|x_slot| = 1` and `x = 0` elsewhere;
/// every sign choice gives another maximum.
pub fn maxima_locations(family: Family, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidDimension("particle count must be at least 1".into()));
    }
    Ok(match family {
        Family::NN => (
            (0..2 * n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect(),
            (0..2 * n).map(|i| if i % 2 == 1 { 1.0 } else { 0.0 }).collect(),
        ),
        Family::NVac => (vec![1.0; n], vec![0.0; n]),
        Family::VacN => (vec![0.0; n], vec![1.0; n]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, n: usize) -> IntegralSpec {
        IntegralSpec::new(family, n).unwrap()
    }

    #[test]
    fn rho1_value() {
        assert!((rho1_closed_form() - 0.181_690_113_816_209).abs() < 1e-14);
        // reference value 0.18169(+-1)
        assert!((rho1_closed_form() - 0.18169).abs() <= 1e-5);
    }

    #[test]
    fn rho1_polar_derivation() {
        // (2/pi) * (radial 1/2) * (angular pi/2 - 1), numerically:
        // radial integral of r^3 e^{-r^2} on [0, 10] and the angular integral of
        // cos^2 over |cos| <= |sin|.
        let m = 200_000;
        let h = 10.0 / m as f64;
        let radial: f64 = (0..m)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                r.powi(3) * (-r * r).exp() * h
            })
            .sum();
        let hth = 2.0 * PI / m as f64;
        let angular: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * hth;
                let (s, c) = t.sin_cos();
                if c.abs() <= s.abs() { c * c * hth } else { 0.0 }
            })
            .sum();
        assert!((radial - 0.5).abs() < 1e-9);
        assert!((angular - (PI / 2.0 - 1.0)).abs() < 1e-6);
        assert!(((2.0 / PI) * radial * angular - rho1_closed_form()).abs() < 1e-6);
    }

    #[test]
    fn nn1_quadrature() {
        let q = quadrature_rho(spec(Family::NN, 1), 512).unwrap();
        assert!((q.value - rho1_closed_form()).abs() < 1e-4, "{:?}", q);
    }

    #[test]
    fn vacn1_quadrature() {
        let q = quadrature_rho(spec(Family::VacN, 1), 1 << 20).unwrap();
        assert!((q.value - vacn1_closed_form()).abs() < 1e-6, "{:?}", q);
        // statrs erf/erfc are good to a few 1e-11 here.
        assert!((vacn1_closed_form() - 0.317_310_507_862_914_15).abs() < 1e-10);
        assert!((nvac1_closed_form() - 0.198_748_043_098_799_12).abs() < 1e-10);
    }

    #[test]
    fn nvac1_quadrature() {
        let q = quadrature_rho(spec(Family::NVac, 1), 1 << 20).unwrap();
        assert!((q.value - nvac1_closed_form()).abs() < 1e-6, "{:?}", q);
    }

    #[test]
    fn norm_identity() {
        let v = tensor_quadrature(spec(Family::NN, 1), 512, Region::Whole).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
        let v = tensor_quadrature(spec(Family::NVac, 3), 64, Region::Whole).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn regions_partition_domain() {
        for s in [spec(Family::NN, 2), spec(Family::VacN, 3), spec(Family::NN, 1).swapped()] {
            let a = tensor_quadrature(s, 64, Region::Indicator).unwrap();
            let b = tensor_quadrature(s, 64, Region::Complement).unwrap();
            let whole = tensor_quadrature(s, 64, Region::Whole).unwrap();
            assert!((a + b - whole).abs() < 1e-13);
        }
    }

    #[test]
    fn tensor_sum_matches_brute_force() {
        // Independent O(m^d) loop over every node for a small grid.
        let m = 24;
        let h = 2.0 * TRUNCATION_RADIUS / m as f64;
        let xs: Vec<f64> = (0..m).map(|i| -TRUNCATION_RADIUS + (i as f64 + 0.5) * h).collect();
        let g = |x: f64| (-x * x).exp() / PI.sqrt() * h;
        let mut brute = 0.0;
        for &a in &xs {
            for &b in &xs {
                for &c in &xs {
                    for &d in &xs {
                        let (lhs, rhs) = (a * a * c * c, b * b * d * d);
                        let share = if (lhs - rhs).abs() <= 1e-12 * lhs.max(rhs) {
                            0.5
                        } else if lhs < rhs {
                            1.0
                        } else {
                            0.0
                        };
                        brute += share * 4.0 * a * a * c * c * g(a) * g(b) * g(c) * g(d);
                    }
                }
            }
        }
        let fast = tensor_quadrature(spec(Family::NN, 2), m, Region::Indicator).unwrap();
        assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
    }

    #[test]
    fn dimension_limits() {
        assert!(matches!(
            tensor_quadrature(spec(Family::NN, 4), 32, Region::Indicator),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(tensor_quadrature(spec(Family::NVac, 6), 32, Region::Indicator).is_ok());
    }

    #[test]
    fn maxima() {
        assert!((maxima_distance(Family::NN, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(maxima_distance(Family::NVac, 4).unwrap(), 2.0);
        assert!(maxima_distance(Family::NN, 0).is_err());
        for family in Family::ALL {
            for n in 1..5 {
                let (a, b) = maxima_locations(family, n).unwrap();
                let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                assert!((dist - maxima_distance(family, n).unwrap()).abs() < 1e-12);
            }
        }
    }
}
