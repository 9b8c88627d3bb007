//! Lattice field configurations and product-state wavefunctionals.
//!
//! The lattice is a plain vector of `N` real amplitudes. Locality plays no
//! role for overlaps, so no adjacency is modelled. All wavefunctional
//! magnitudes are evaluated in the log domain: products of 2n small linear
//! factors underflow for n around 20.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Default tolerance on `|<psi_i, psi_j> - delta_ij|`.
pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-10;

/// Relative residual norm below which Gram-Schmidt declares an input dependent.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-8;

/// A real field configuration on an `N`-point lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("lattice size must be positive".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    /// The field that is 1 at `site` and 0 elsewhere.
    pub fn delta(lattice_size: usize, site: usize) -> Result<Self> {
        if site >= lattice_size {
            return Err(Error::SizeMismatch {
                expected: lattice_size,
                found: site + 1,
            });
        }
        let mut values = vec![0.0; lattice_size];
        values[site] = 1.0;
        Self::new(values)
    }

    pub fn lattice_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `sum_x f(x) g(x)`.
pub fn inner_product(f: &LatticeField, g: &LatticeField) -> Result<f64> {
    if f.lattice_size() != g.lattice_size() {
        return Err(Error::SizeMismatch {
            expected: f.lattice_size(),
            found: g.lattice_size(),
        });
    }
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum())
}

/// Pairwise orthonormal lattice fields sharing one lattice size.
#[derive(Debug, Clone)]
pub struct OrthonormalSet {
    modes: Vec<LatticeField>,
    gram_tolerance: f64,
}

impl OrthonormalSet {
    /// Wraps `modes` after checking the Gram matrix against `gram_tolerance`.
    pub fn from_orthonormal(modes: Vec<LatticeField>, gram_tolerance: f64) -> Result<Self> {
        let set = Self {
            modes,
            gram_tolerance,
        };
        set.check_sizes()?;
        let deviation = set.gram_deviation()?;
        if deviation > gram_tolerance {
            return Err(Error::InvalidConfig(format!(
                "fields are not orthonormal: Gram deviation {deviation:e} exceeds {gram_tolerance:e}"
            )));
        }
        Ok(set)
    }

    fn check_sizes(&self) -> Result<()> {
        if let Some(first) = self.modes.first() {
            let size = first.lattice_size();
            for m in &self.modes[1..] {
                if m.lattice_size() != size {
                    return Err(Error::SizeMismatch {
                        expected: size,
                        found: m.lattice_size(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[LatticeField] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.gram_tolerance
    }

    pub fn lattice_size(&self) -> Option<usize> {
        self.modes.first().map(LatticeField::lattice_size)
    }

    pub fn gram_matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.modes
            .iter()
            .map(|a| self.modes.iter().map(|b| inner_product(a, b)).collect())
            .collect()
    }

    /// `max_ij |G_ij - delta_ij|`.
    pub fn gram_deviation(&self) -> Result<f64> {
        let gram = self.gram_matrix()?;
        let mut worst = 0.0f64;
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        Ok(worst)
    }

    /// Concatenates two sets, e.g. the mode sets of two n-particle states.
    pub fn concat(&self, other: &OrthonormalSet) -> Result<OrthonormalSet> {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Self::from_orthonormal(modes, self.gram_tolerance.max(other.gram_tolerance))
    }

    /// Interleaves two equally sized sets as `(a_1, b_1, a_2, b_2, ...)`, so that
    /// projecting onto the result yields odd coordinates for `a` and even for `b`.
    pub fn interleave(&self, other: &OrthonormalSet) -> Result<OrthonormalSet> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let modes = self
            .modes
            .iter()
            .zip(&other.modes)
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        Self::from_orthonormal(modes, self.gram_tolerance.max(other.gram_tolerance))
    }
}

/// Modified Gram-Schmidt with one reorthogonalisation pass.
///
/// Fails with [`Error::DegenerateInput`] naming the first field whose residual
/// falls below [`DEFAULT_DROP_THRESHOLD`] relative to its original norm.
pub fn orthonormalize(fields: &[LatticeField], tolerance: f64) -> Result<OrthonormalSet> {
    let Some(first) = fields.first() else {
        return Ok(OrthonormalSet {
            modes: Vec::new(),
            gram_tolerance: tolerance,
        });
    };
    let size = first.lattice_size();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(fields.len());
    for (index, field) in fields.iter().enumerate() {
        if field.lattice_size() != size {
            return Err(Error::SizeMismatch {
                expected: size,
                found: field.lattice_size(),
            });
        }
        let original = field.norm_sqr().sqrt();
        let mut v = field.values.clone();
        for _pass in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qx)| *x -= c * qx);
            }
        }
        let residual = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if original == 0.0 || residual <= DEFAULT_DROP_THRESHOLD * original {
            return Err(Error::DegenerateInput { index });
        }
        v.iter_mut().for_each(|x| *x /= residual);
        basis.push(v);
    }
    let modes = basis
        .into_iter()
        .map(LatticeField::new)
        .collect::<Result<Vec<_>>>()?;
    OrthonormalSet::from_orthonormal(modes, tolerance)
}

/// Coordinates of a configuration in the reduced integration space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    coords: Vec<f64>,
}

impl ReducedPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }
}

/// `coords[i] = <basis_i, phi>`.
pub fn project_to_reduced(phi: &LatticeField, basis: &OrthonormalSet) -> Result<ReducedPoint> {
    let coords = basis
        .modes()
        .iter()
        .map(|m| inner_product(m, phi))
        .collect::<Result<Vec<_>>>()?;
    ReducedPoint::new(coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Vacuum,
    NParticle,
}

/// A product state: the vacuum, or `prod_k sqrt(2) <psi_k, phi>` times the vacuum.
///
/// `coordinate_slots` says which reduced coordinates hold `<psi_k, phi>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductState {
    kind: StateKind,
    coordinate_slots: Vec<usize>,
}

impl ProductState {
    pub fn vacuum() -> Self {
        Self {
            kind: StateKind::Vacuum,
            coordinate_slots: Vec::new(),
        }
    }

    pub fn n_particle(coordinate_slots: Vec<usize>) -> Result<Self> {
        if coordinate_slots.is_empty() {
            return Err(Error::InvalidDimension(
                "an n-particle state needs at least one slot".into(),
            ));
        }
        let mut sorted = coordinate_slots.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coordinate_slots.len() {
            return Err(Error::InvalidDimension("coordinate slots must be distinct".into()));
        }
        Ok(Self {
            kind: StateKind::NParticle,
            coordinate_slots,
        })
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    /// Particle count.
    pub fn n(&self) -> usize {
        self.coordinate_slots.len()
    }

    pub fn coordinate_slots(&self) -> &[usize] {
        &self.coordinate_slots
    }
}

/// Log-magnitude and sign of a wavefunctional value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    /// `ln |Psi|`, `-inf` when a linear factor vanishes.
    pub log_magnitude: f64,
    pub sign: f64,
}

/// `ln |Psi(phi)|` on reduced coordinates, where the remaining lattice
/// directions have already been integrated out:
/// `(n/2) ln 2 + sum_k ln|phi_slot(k)| - 1/2 sum_i phi_i^2 - (d/4) ln pi`.
pub fn log_abs_psi(
    state: &ProductState,
    modes: &OrthonormalSet,
    point: &ReducedPoint,
) -> Result<LogValue> {
    if state.kind == StateKind::NParticle && modes.len() != state.n() {
        return Err(Error::SizeMismatch {
            expected: state.n(),
            found: modes.len(),
        });
    }
    let x = point.coords();
    if let Some(&slot) = state.coordinate_slots.iter().find(|&&s| s >= x.len()) {
        return Err(Error::InvalidDimension(format!(
            "slot {slot} outside reduced point of dimension {}",
            x.len()
        )));
    }
    let factors = state.coordinate_slots.iter().map(|&s| x[s]);
    let gaussian = -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    Ok(log_product_state(
        factors,
        gaussian,
        x.len(),
    ))
}

/// Same as [`log_abs_psi`], evaluated directly on a full lattice configuration
/// through inner products with each mode.
pub fn log_abs_psi_field(
    state: &ProductState,
    modes: &OrthonormalSet,
    phi: &LatticeField,
) -> Result<LogValue> {
    let factors = match state.kind {
        StateKind::Vacuum => Vec::new(),
        StateKind::NParticle => {
            if modes.len() != state.n() {
                return Err(Error::SizeMismatch {
                    expected: state.n(),
                    found: modes.len(),
                });
            }
            modes
                .modes()
                .iter()
                .map(|m| inner_product(m, phi))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(log_product_state(
        factors.into_iter(),
        -0.5 * phi.norm_sqr(),
        phi.lattice_size(),
    ))
}

fn log_product_state(
    factors: impl Iterator<Item = f64>,
    gaussian_exponent: f64,
    dimension: usize,
) -> LogValue {
    let mut log_magnitude = gaussian_exponent - 0.25 * dimension as f64 * PI.ln();
    let mut sign = 1.0;
    for f in factors {
        log_magnitude += 0.5 * LN_2 + f.abs().ln();
        if f < 0.0 {
            sign = -sign;
        }
    }
    LogValue {
        log_magnitude,
        sign,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(v: &[f64]) -> LatticeField {
        LatticeField::new(v.to_vec()).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> LatticeField {
        field(&(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn inner_product_examples() {
        let e0 = LatticeField::delta(4, 0).unwrap();
        let e1 = LatticeField::delta(4, 1).unwrap();
        assert_eq!(inner_product(&e0, &e0).unwrap(), 1.0);
        assert_eq!(inner_product(&e0, &e1).unwrap(), 0.0);
        let f = field(&[0.6, 0.8]);
        assert!((inner_product(&f, &f).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_size_mismatch() {
        let err = inner_product(&field(&[1.0]), &field(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { .. }));
    }

    #[test]
    fn non_finite_field_rejected() {
        assert!(matches!(
            LatticeField::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn orthonormalize_keeps_delta_basis() {
        let fields: Vec<_> = (0..3).map(|i| LatticeField::delta(5, i).unwrap()).collect();
        let set = orthonormalize(&fields, DEFAULT_GRAM_TOLERANCE).unwrap();
        for (a, b) in set.modes().iter().zip(&fields) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthonormalize_rejects_duplicates() {
        let f = field(&[1.0, 2.0, 3.0]);
        let err = orthonormalize(&[f.clone(), f], DEFAULT_GRAM_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput { index: 1 }));
    }

    #[test]
    fn orthonormalize_random_pair_gram_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fields = [random_field(&mut rng, 8), random_field(&mut rng, 8)];
        let set = orthonormalize(&fields, 1e-12).unwrap();
        // Gram matrix formed explicitly, independent of the MGS arithmetic.
        for i in 0..2 {
            for j in 0..2 {
                let g: f64 = set.modes()[i]
                    .values()
                    .iter()
                    .zip(set.modes()[j].values())
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-12, "G[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn log_abs_psi_examples() {
        let empty = OrthonormalSet::from_orthonormal(vec![], 1e-10).unwrap();
        let vac = ProductState::vacuum();
        let v = log_abs_psi(&vac, &empty, &ReducedPoint::new(vec![0.0]).unwrap()).unwrap();
        assert!((v.log_magnitude + 0.25 * PI.ln()).abs() < 1e-15);

        let modes =
            OrthonormalSet::from_orthonormal(vec![LatticeField::delta(2, 0).unwrap()], 1e-10)
                .unwrap();
        let one = ProductState::n_particle(vec![0]).unwrap();
        let zero = log_abs_psi(&one, &modes, &ReducedPoint::new(vec![0.0, 0.3]).unwrap()).unwrap();
        assert_eq!(zero.log_magnitude, f64::NEG_INFINITY);

        let p = ReducedPoint::new(vec![1.0, 0.0]).unwrap();
        let v = log_abs_psi(&one, &modes, &p).unwrap();
        let expected = 0.5 * 2f64.ln() - 0.5 - 0.5 * PI.ln();
        assert!((v.log_magnitude - expected).abs() < 1e-15);
        assert_eq!(v.sign, 1.0);

        let p = ReducedPoint::new(vec![-1.0, 0.0]).unwrap();
        assert_eq!(log_abs_psi(&one, &modes, &p).unwrap().sign, -1.0);
    }

    #[test]
    fn log_abs_psi_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            let d = 2 * n;
            let modes = OrthonormalSet::from_orthonormal(
                (0..n).map(|k| LatticeField::delta(d, 2 * k).unwrap()).collect(),
                1e-10,
            )
            .unwrap();
            let state = ProductState::n_particle((0..n).map(|k| 2 * k).collect()).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let direct = (0..n).map(|k| 2f64.sqrt() * x[2 * k]).product::<f64>()
                    * PI.powf(-(d as f64) / 4.0)
                    * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
                let v = log_abs_psi(&state, &modes, &ReducedPoint::new(x).unwrap()).unwrap();
                let via_log = v.sign * v.log_magnitude.exp();
                assert!(((via_log - direct) / direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn project_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<_> = (0..4).map(|_| random_field(&mut rng, 16)).collect();
        let basis = orthonormalize(&raw, DEFAULT_GRAM_TOLERANCE).unwrap();

        let p = project_to_reduced(&basis.modes()[0], &basis).unwrap();
        assert!((p.coords()[0] - 1.0).abs() < 1e-12);
        assert!(p.coords()[1..].iter().all(|c| c.abs() < 1e-12));

        let phi = random_field(&mut rng, 16);
        let p = project_to_reduced(&phi, &basis).unwrap();
        for (i, m) in basis.modes().iter().enumerate() {
            let direct: f64 = (0..16).map(|x| m.values()[x] * phi.values()[x]).sum();
            assert!((p.coords()[i] - direct).abs() < 1e-14);
        }

        let basis = OrthonormalSet::from_orthonormal(
            vec![LatticeField::delta(3, 0).unwrap(), LatticeField::delta(3, 1).unwrap()],
            1e-10,
        )
        .unwrap();
        let p = project_to_reduced(&LatticeField::delta(3, 2).unwrap(), &basis).unwrap();
        assert_eq!(p.coords(), &[0.0, 0.0]);
    }

    #[test]
    fn product_state_invariants() {
        assert_eq!(ProductState::vacuum().n(), 0);
        assert!(ProductState::n_particle(vec![0, 0]).is_err());
        assert!(ProductState::n_particle(vec![]).is_err());
        assert_eq!(ProductState::n_particle(vec![0, 2]).unwrap().n(), 2);
    }
}
