//! Overlap functional, the non-overlapping splitter, and the reduced
//! integrands for the three integral families.
//!
//! Tie convention: where `|psi_0| = |psi_1|` the point belongs to the region
//! where index 1 survives. The overlap `rho(psi_0|psi_1)` therefore integrates
//! over `|psi_0| <= |psi_1|` and `rho(psi_1|psi_0)` over `|psi_1| < |psi_0|`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Log-domain comparisons treat differences up to this size as ties, so exact
/// ties such as `2 (1/sqrt 2)^2 = 1` survive rounding of the logarithms.
pub const LOG_TIE_SLACK: f64 = 1e-12;

/// Which overlap integral is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `rho(Psi^0_n | Psi^1_n)` between two orthogonal n-particle states.
    #[serde(rename = "nn")]
    NN,
    /// `rho(Psi_n | Psi_vac)`.
    #[serde(rename = "nvac")]
    NVac,
    /// `rho(Psi_vac | Psi_n)`.
    #[serde(rename = "vacn")]
    VacN,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::NN, Family::NVac, Family::VacN];

    pub fn name(self) -> &'static str {
        match self {
            Family::NN => "nn",
            Family::NVac => "nvac",
            Family::VacN => "vacn",
        }
    }

    /// Reduced dimension for `n` particles.
    pub fn dimension(self, n: usize) -> usize {
        match self {
            Family::NN => 2 * n,
            Family::NVac | Family::VacN => n,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nn" | "n-n" => Ok(Family::NN),
            "nvac" | "n-0" => Ok(Family::NVac),
            "vacn" | "0-n" => Ok(Family::VacN),
            _ => Err(Error::Unknown {
                what: "family",
                name: s.to_string(),
            }),
        }
    }
}

/// One reduced overlap integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegralSpec {
    pub family: Family,
    pub n: usize,
    /// NN only: integrate `|Psi^1|^2` over `|Psi^1| <= |Psi^0|` instead, i.e.
    /// swap the roles of odd and even coordinates.
    pub swap_roles: bool,
}

impl IntegralSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("particle count must be at least 1".into()));
        }
        Ok(Self {
            family,
            n,
            swap_roles: false,
        })
    }

    pub fn swapped(mut self) -> Self {
        self.swap_roles = true;
        self
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension(self.n)
    }
}

/// `sum_k ln phi_{2k-1}^2 <= sum_k ln phi_{2k}^2` (1-based odd/even).
///
/// A zero odd coordinate gives `true`; a zero even coordinate with all odd
/// coordinates nonzero gives `false`.
pub fn indicator_nn(x: &[f64]) -> bool {
    debug_assert!(x.len().is_multiple_of(2), "NN points have even dimension");
    let (odd, even) = log_pair_sums(x);
    odd <= even + LOG_TIE_SLACK
}

/// `2^n prod_k phi_{2k-1}^2`: the non-Gaussian factor of `|Psi^0_n|^2`.
pub fn weight_nn(x: &[f64]) -> f64 {
    debug_assert!(x.len().is_multiple_of(2), "NN points have even dimension");
    let n = x.len() / 2;
    let log_odd: f64 = x.iter().step_by(2).map(|v| v.abs().ln()).sum();
    (n as f64 * LN_2 + 2.0 * log_odd).exp()
}

/// Sums of `ln |phi|` over 1-based odd and even coordinates.
#[inline]
fn log_pair_sums(x: &[f64]) -> (f64, f64) {
    let mut odd = 0.0;
    let mut even = 0.0;
    for pair in x.chunks_exact(2) {
        odd += pair[0].abs().ln();
        even += pair[1].abs().ln();
    }
    (odd, even)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacuumDirection {
    /// `|Psi_n| <= |Psi_vac|`, integrating `|Psi_n|^2`.
    StateBelowVac,
    /// `|Psi_vac| <= |Psi_n|`, integrating `|Psi_vac|^2`.
    VacBelowState,
}

/// `n ln 2 + sum_k ln phi_k^2`, i.e. `ln(|Psi_n|^2 / |Psi_vac|^2)`.
#[inline]
fn log_state_to_vacuum(x: &[f64]) -> f64 {
    x.len() as f64 * LN_2 + 2.0 * x.iter().map(|v| v.abs().ln()).sum::<f64>()
}

/// Indicator and non-Gaussian weight for the n-vs-vacuum families.
pub fn indicator_weight_nvac(x: &[f64], direction: VacuumDirection) -> (bool, f64) {
    let log_ratio = log_state_to_vacuum(x);
    match direction {
        VacuumDirection::StateBelowVac => (log_ratio <= LOG_TIE_SLACK, log_ratio.exp()),
        VacuumDirection::VacBelowState => (-LOG_TIE_SLACK <= log_ratio, 1.0),
    }
}

/// A reduced integrand `weight(x) * 1{indicator(x)}` against the Gaussian
/// measure `prod_i e^{-x_i^2} / sqrt(pi)`.
///
/// `weight` is always `prod_{slots} 2 x_s^2`, the ratio between the squared
/// integrated state and the vacuum, so a sampler drawing slot coordinates
/// from `(2/sqrt(pi)) x^2 e^{-x^2}` absorbs it exactly.
pub trait Integrand: Send + Sync {
    fn spec(&self) -> IntegralSpec;

    fn dimension(&self) -> usize {
        self.spec().dimension()
    }

    /// Coordinates carrying the linear factors of the integrated state.
    fn weighted_slots(&self) -> &[usize];

    fn indicator(&self, x: &[f64]) -> bool;

    fn weight(&self, x: &[f64]) -> f64 {
        let slots = self.weighted_slots();
        let log: f64 = slots.iter().map(|&s| x[s].abs().ln()).sum();
        (slots.len() as f64 * LN_2 + 2.0 * log).exp()
    }
}

struct NnIntegrand {
    spec: IntegralSpec,
    slots: Vec<usize>,
}

impl Integrand for NnIntegrand {
    fn spec(&self) -> IntegralSpec {
        self.spec
    }

    fn weighted_slots(&self) -> &[usize] {
        &self.slots
    }

    fn indicator(&self, x: &[f64]) -> bool {
        let (odd, even) = log_pair_sums(x);
        if self.spec.swap_roles {
            even <= odd + LOG_TIE_SLACK
        } else {
            odd <= even + LOG_TIE_SLACK
        }
    }

    fn weight(&self, x: &[f64]) -> f64 {
        if self.spec.swap_roles {
            let log: f64 = x.iter().skip(1).step_by(2).map(|v| v.abs().ln()).sum();
            (self.spec.n as f64 * LN_2 + 2.0 * log).exp()
        } else {
            weight_nn(x)
        }
    }
}

struct VacuumIntegrand {
    spec: IntegralSpec,
    direction: VacuumDirection,
    slots: Vec<usize>,
}

impl Integrand for VacuumIntegrand {
    fn spec(&self) -> IntegralSpec {
        self.spec
    }

    fn weighted_slots(&self) -> &[usize] {
        &self.slots
    }

    fn indicator(&self, x: &[f64]) -> bool {
        indicator_weight_nvac(x, self.direction).0
    }

    fn weight(&self, x: &[f64]) -> f64 {
        indicator_weight_nvac(x, self.direction).1
    }
}

type IntegrandFactory = fn(IntegralSpec) -> Box<dyn Integrand>;

fn build_nn(spec: IntegralSpec) -> Box<dyn Integrand> {
    let offset = usize::from(spec.swap_roles);
    Box::new(NnIntegrand {
        spec,
        slots: (0..spec.n).map(|k| 2 * k + offset).collect(),
    })
}

fn build_nvac(spec: IntegralSpec) -> Box<dyn Integrand> {
    Box::new(VacuumIntegrand {
        spec,
        direction: VacuumDirection::StateBelowVac,
        slots: (0..spec.n).collect(),
    })
}

fn build_vacn(spec: IntegralSpec) -> Box<dyn Integrand> {
    Box::new(VacuumIntegrand {
        spec,
        direction: VacuumDirection::VacBelowState,
        slots: Vec::new(),
    })
}

/// Integrand constructors registered by family.
#[derive(Clone)]
pub struct IntegrandRegistry {
    factories: Arc<BTreeMap<Family, IntegrandFactory>>,
}

impl Default for IntegrandRegistry {
    fn default() -> Self {
        let mut factories: BTreeMap<Family, IntegrandFactory> = BTreeMap::new();
        factories.insert(Family::NN, build_nn);
        factories.insert(Family::NVac, build_nvac);
        factories.insert(Family::VacN, build_vacn);
        Self {
            factories: Arc::new(factories),
        }
    }
}

impl IntegrandRegistry {
    pub fn build(&self, spec: IntegralSpec) -> Result<Box<dyn Integrand>> {
        if spec.n == 0 {
            return Err(Error::InvalidDimension("particle count must be at least 1".into()));
        }
        if spec.swap_roles && spec.family != Family::NN {
            return Err(Error::InvalidConfig(
                "role swapping only applies to the nn family".into(),
            ));
        }
        let factory = self.factories.get(&spec.family).ok_or_else(|| Error::Unknown {
            what: "family",
            name: spec.family.to_string(),
        })?;
        Ok(factory(spec))
    }

    pub fn families(&self) -> impl Iterator<Item = Family> + '_ {
        self.factories.keys().copied()
    }
}

/// Builds the integrand for `spec` from the default registry.
pub fn integrand_for(spec: IntegralSpec) -> Result<Box<dyn Integrand>> {
    IntegrandRegistry::default().build(spec)
}

/// Two amplitude arrays sampled on a common grid with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctionPair {
    grid: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    cell_weights: Vec<f64>,
}

impl GridFunctionPair {
    pub fn new(grid: Vec<f64>, f0: Vec<f64>, f1: Vec<f64>, cell_weights: Vec<f64>) -> Result<Self> {
        let len = grid.len();
        if len == 0 {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for (name, other) in [("f0", f0.len()), ("f1", f1.len()), ("cell_weights", cell_weights.len())] {
            if other != len {
                return Err(Error::InvalidGrid(format!(
                    "{name} has {other} entries, grid has {len}"
                )));
            }
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid("abscissae must be strictly increasing".into()));
        }
        if cell_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid("cell weights must be positive".into()));
        }
        if f0.iter().chain(&f1).chain(&grid).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("values must be finite".into()));
        }
        Ok(Self {
            grid,
            f0,
            f1,
            cell_weights,
        })
    }

    /// Samples two functions on `nodes` equally spaced points of `[lo, hi]`
    /// with trapezoid weights.
    pub fn uniform(
        lo: f64,
        hi: f64,
        nodes: usize,
        f0: impl Fn(f64) -> f64,
        f1: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if nodes < 2 || !(lo < hi) {
            return Err(Error::InvalidGrid(format!(
                "need lo < hi and at least 2 nodes, got [{lo}, {hi}] with {nodes}"
            )));
        }
        let h = (hi - lo) / (nodes - 1) as f64;
        let grid: Vec<f64> = (0..nodes).map(|i| lo + i as f64 * h).collect();
        let mut weights = vec![h; nodes];
        weights[0] = 0.5 * h;
        weights[nodes - 1] = 0.5 * h;
        let a = grid.iter().map(|&x| f0(x)).collect();
        let b = grid.iter().map(|&x| f1(x)).collect();
        Self::new(grid, a, b, weights)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn function(&self, which: Which) -> (&[f64], &[f64]) {
        match which {
            Which::Zero => (&self.f0, &self.f1),
            Which::One => (&self.f1, &self.f0),
        }
    }

    /// Squared weighted norm of one function.
    pub fn norm_sqr(&self, which: Which) -> f64 {
        let (f, _) = self.function(which);
        f.iter()
            .zip(&self.cell_weights)
            .map(|(v, w)| v * v * w)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Weighted mass `sum |f0|^2 w` over nodes where `|f0| = |f1|`.
    pub fn tie_mass(&self) -> f64 {
        self.f0
            .iter()
            .zip(&self.f1)
            .zip(&self.cell_weights)
            .filter(|((a, b), _)| a.abs() == b.abs())
            .map(|((a, _), w)| a * a * w)
            .collect::<CompensatedSum>()
            .value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Zero,
    One,
}

/// Whether `f_which` is zeroed by the splitter at a node.
#[inline]
fn suppressed(which: Which, own: f64, other: f64) -> bool {
    match which {
        Which::Zero => own.abs() <= other.abs(),
        Which::One => own.abs() < other.abs(),
    }
}

/// Replaces the pair by non-overlapping approximations: at every node only
/// the function of larger magnitude survives.
pub fn split_nonoverlapping(pair: &GridFunctionPair) -> (Vec<f64>, Vec<f64>) {
    let split = |which: Which| {
        let (own, other) = pair.function(which);
        own.iter()
            .zip(other)
            .map(|(&a, &b)| if suppressed(which, a, b) { 0.0 } else { a })
            .collect::<Vec<_>>()
    };
    (split(Which::Zero), split(Which::One))
}

/// `rho(f_which | f_other)`: the weighted mass of `|f_which|^2` where the
/// splitter suppresses `f_which`.
pub fn overlap_from_grid(pair: &GridFunctionPair, which: Which) -> f64 {
    let (own, other) = pair.function(which);
    own.iter()
        .zip(other)
        .zip(&pair.cell_weights)
        .filter(|((&a, &b), _)| suppressed(which, a, b))
        .map(|((a, _), w)| a * a * w)
        .collect::<CompensatedSum>()
        .value()
}

/// Abscissae where dominance switches between the two functions, located by
/// linear interpolation of `ln|f0| - ln|f1|` across the switching cell.
pub fn split_boundaries(pair: &GridFunctionPair) -> Vec<f64> {
    let diff: Vec<f64> = pair
        .f0
        .iter()
        .zip(&pair.f1)
        .map(|(a, b)| a.abs().ln() - b.abs().ln())
        .collect();
    let survives0: Vec<bool> = pair
        .f0
        .iter()
        .zip(&pair.f1)
        .map(|(&a, &b)| !suppressed(Which::Zero, a, b))
        .collect();
    let mut out = Vec::new();
    for i in 1..pair.len() {
        if survives0[i] == survives0[i - 1] {
            continue;
        }
        let (x0, x1) = (pair.grid[i - 1], pair.grid[i]);
        let (d0, d1) = (diff[i - 1], diff[i]);
        let x = if d0 == 0.0 {
            x0
        } else if d1 == 0.0 {
            x1
        } else if d0.is_finite() && d1.is_finite() && d0 != d1 {
            x0 + (x1 - x0) * d0 / (d0 - d1)
        } else {
            0.5 * (x0 + x1)
        };
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn indicator_nn_examples() {
        assert!(indicator_nn(&[0.5, 1.0]));
        assert!(!indicator_nn(&[1.0, 0.5]));
        // 4 * 0.16 = 0.64 versus 1 * 9
        assert!(indicator_nn(&[2.0, 1.0, 0.4, 3.0]));
    }

    #[test]
    fn indicator_nn_zero_conventions() {
        assert!(indicator_nn(&[0.0, 0.0]));
        assert!(indicator_nn(&[0.0, 3.0]));
        assert!(!indicator_nn(&[1.0, 0.0]));
        assert!(!indicator_nn(&[1.0, 2.0, 1.0, 0.0]));
    }

    #[test]
    fn weight_nn_examples() {
        assert!((weight_nn(&[FRAC_1_SQRT_2, 5.0]) - 1.0).abs() < 1e-15);
        assert!((weight_nn(&[FRAC_1_SQRT_2, 5.0, FRAC_1_SQRT_2, -2.0]) - 1.0).abs() < 1e-15);
        assert!((weight_nn(&[1.0, 0.3]) - 2.0).abs() < 1e-15);
        assert_eq!(weight_nn(&[0.0, 1.0]), 0.0);
    }

    #[test]
    fn nvac_examples() {
        let (ind, _) = indicator_weight_nvac(&[FRAC_1_SQRT_2], VacuumDirection::StateBelowVac);
        assert!(ind);
        let (ind, w) = indicator_weight_nvac(&[0.1], VacuumDirection::StateBelowVac);
        assert!(ind);
        assert!((w - 0.02).abs() < 1e-15);
        let (ind, w) = indicator_weight_nvac(&[0.1], VacuumDirection::VacBelowState);
        assert!(!ind);
        assert_eq!(w, 1.0);
        assert!(indicator_weight_nvac(&[2.0], VacuumDirection::VacBelowState).0);
    }

    #[test]
    fn nn_role_swap_is_complement_off_ties() {
        let fwd = integrand_for(IntegralSpec::new(Family::NN, 2).unwrap()).unwrap();
        let bwd = integrand_for(IntegralSpec::new(Family::NN, 2).unwrap().swapped()).unwrap();
        let x = [0.3, -1.2, 0.9, 0.4];
        assert_ne!(fwd.indicator(&x), bwd.indicator(&x));
        assert_eq!(bwd.weighted_slots(), &[1, 3]);
        assert!((bwd.weight(&x) - 4.0 * 1.44 * 0.16).abs() < 1e-12);
        assert!((fwd.weight(&x) - 4.0 * 0.09 * 0.81).abs() < 1e-12);
    }

    #[test]
    fn registry_rejects_bad_specs() {
        assert!(IntegralSpec::new(Family::NN, 0).is_err());
        let spec = IntegralSpec::new(Family::VacN, 1).unwrap().swapped();
        assert!(integrand_for(spec).is_err());
        assert_eq!(IntegrandRegistry::default().families().count(), 3);
    }

    #[test]
    fn family_parsing_and_dimension() {
        assert_eq!("nn".parse::<Family>().unwrap(), Family::NN);
        assert_eq!("VacN".parse::<Family>().unwrap(), Family::VacN);
        assert!("foo".parse::<Family>().is_err());
        assert_eq!(Family::NN.dimension(3), 6);
        assert_eq!(Family::NVac.dimension(3), 3);
    }

    #[test]
    fn split_disjoint_pair_unchanged() {
        let pair =
            GridFunctionPair::new(vec![0.0, 1.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![0.5, 0.5])
                .unwrap();
        let (a, b) = split_nonoverlapping(&pair);
        assert_eq!(a, vec![2.0, 0.0]);
        assert_eq!(b, vec![0.0, 2.0]);
        assert_eq!(overlap_from_grid(&pair, Which::Zero), 0.0);
        assert_eq!(overlap_from_grid(&pair, Which::One), 0.0);
    }

    #[test]
    fn split_identical_functions() {
        let f = [0.5, 1.0, 0.5];
        let w = vec![0.5, 0.5, 0.5];
        let total: f64 = f.iter().map(|v| v * v * 0.5).sum();
        let f: Vec<f64> = f.iter().map(|v| v / total.sqrt()).collect();
        let pair = GridFunctionPair::new(vec![0.0, 1.0, 2.0], f.clone(), f.clone(), w).unwrap();
        let (a, b) = split_nonoverlapping(&pair);
        assert!(a.iter().all(|&v| v == 0.0));
        assert_eq!(b, f);
        assert!((overlap_from_grid(&pair, Which::Zero) - 1.0).abs() < 1e-15);
        assert_eq!(overlap_from_grid(&pair, Which::One), 0.0);
    }

    fn gaussian_pair(delta: f64, nodes: usize) -> GridFunctionPair {
        let c = (2.0 / PI).powf(0.25);
        GridFunctionPair::uniform(
            -6.0,
            10.0,
            nodes,
            |x| c * (-x * x).exp(),
            |x| c * (-(x - delta) * (x - delta)).exp(),
        )
        .unwrap()
    }

    #[test]
    fn offset_gaussians_split_at_midpoint() {
        // Off-node switching cell: 1000 nodes do not hit x = 2 exactly.
        let pair = gaussian_pair(4.0, 1000);
        let b = split_boundaries(&pair);
        assert_eq!(b.len(), 1);
        assert!((b[0] - 2.0).abs() < 1e-9, "{}", b[0]);
    }

    #[test]
    fn offset_gaussian_overlap_matches_tail_quadrature() {
        let pair = gaussian_pair(4.0, 16_001);
        // Oracle: Simpson on [2, 10] of (2/pi)^{1/2} e^{-2x^2}.
        let m = 20_000;
        let h = 8.0 / m as f64;
        let f = |x: f64| (2.0 / PI).sqrt() * (-2.0 * x * x).exp();
        let mut s = f(2.0) + f(10.0);
        for i in 1..m {
            let x = 2.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let oracle = s * h / 3.0;
        let rho0 = overlap_from_grid(&pair, Which::Zero);
        let rho1 = overlap_from_grid(&pair, Which::One);
        // The tie node at x = 2 enters with full weight for index 0 and not at
        // all for index 1, a shift of h/2 * f(2) either way.
        let edge = 0.5 * 1e-3 * f(2.0) * 1.01;
        assert!((rho0 - oracle).abs() < edge, "{rho0} vs {oracle}");
        assert!((rho1 - oracle).abs() < edge, "{rho1} vs {oracle}");
        assert!(rho0 + rho1 <= 1.0);
    }

    #[test]
    fn grid_validation() {
        assert!(GridFunctionPair::new(vec![0.0, 0.0], vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]).is_err());
        assert!(GridFunctionPair::new(vec![0.0, 1.0], vec![1.0; 2], vec![1.0; 2], vec![1.0, 0.0]).is_err());
        assert!(GridFunctionPair::new(vec![0.0, 1.0], vec![1.0; 3], vec![1.0; 2], vec![1.0; 2]).is_err());
        assert!(GridFunctionPair::uniform(1.0, 0.0, 10, |x| x, |x| x).is_err());
    }
}
