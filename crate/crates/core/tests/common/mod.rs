#![allow(dead_code)]

use field_overlap::overlap::{
    indicator_nn, overlap_from_grid, split_nonoverlapping, GridFunctionPair, Which,
};
use field_overlap::states::{
    log_abs_psi_field, orthonormalize, project_to_reduced, LatticeField, OrthonormalSet,
    ProductState, DEFAULT_GRAM_TOLERANCE,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A deterministic runner with no failure persistence.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Free(f64, f64),
    Tie(f64, bool),
    Zero(f64),
}

fn node() -> impl Strategy<Value = Node> {
    prop_oneof![
        6 => (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| Node::Free(a, b)),
        2 => (-3.0..3.0f64, any::<bool>()).prop_map(|(a, s)| Node::Tie(a, s)),
        1 => (-3.0..3.0f64).prop_map(Node::Zero),
    ]
}

/// Pairs of unit-norm grid functions with exact ties `|f0| = |f1|` and zeros
/// mixed in.
pub fn grid_pair() -> impl Strategy<Value = GridFunctionPair> {
    (2usize..160)
        .prop_flat_map(|len| {
            (
                prop::collection::vec(node(), len),
                prop::collection::vec(0.01..1.0f64, len),
            )
        })
        .prop_filter_map("degenerate normalisation", |(nodes, weights)| {
            let len = nodes.len();
            let mut f0: Vec<f64> = nodes
                .iter()
                .map(|n| match *n {
                    Node::Free(a, _) | Node::Tie(a, _) => a,
                    Node::Zero(_) => 0.0,
                })
                .collect();
            let n0: f64 = f0.iter().zip(&weights).map(|(v, w)| v * v * w).sum();
            if n0 <= 1e-6 {
                return None;
            }
            f0.iter_mut().for_each(|v| *v /= n0.sqrt());

            let mut f1 = vec![0.0; len];
            let (mut tied, mut free) = (0.0, 0.0);
            for (i, n) in nodes.iter().enumerate() {
                match *n {
                    Node::Tie(_, flip) => {
                        f1[i] = if flip { -f0[i] } else { f0[i] };
                        tied += f1[i] * f1[i] * weights[i];
                    }
                    Node::Free(_, b) => {
                        f1[i] = b;
                        free += b * b * weights[i];
                    }
                    Node::Zero(_) => {}
                }
            }
            if free <= 1e-6 || tied >= 0.99 {
                return None;
            }
            let scale = ((1.0 - tied) / free).sqrt();
            for (i, n) in nodes.iter().enumerate() {
                if let Node::Free(..) = n {
                    f1[i] *= scale;
                }
            }
            let mut x = 0.0;
            let grid = weights
                .iter()
                .map(|w| {
                    x += w;
                    x
                })
                .collect();
            GridFunctionPair::new(grid, f0, f1, weights).ok()
        })
}

fn weighted_distance(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum()
}

/// Disjoint supports, split error equals the overlap, and the sum rule.
pub fn check_splitter(pair: &GridFunctionPair) -> Result<(), TestCaseError> {
    let (s0, s1) = split_nonoverlapping(pair);
    for (i, (a, b)) in s0.iter().zip(&s1).enumerate() {
        prop_assert!(*a == 0.0 || *b == 0.0, "both survive at node {}", i);
    }
    for (which, split, f) in [(Which::Zero, &s0, pair.f0()), (Which::One, &s1, pair.f1())] {
        let err = weighted_distance(f, split, pair.cell_weights());
        let rho = overlap_from_grid(pair, which);
        prop_assert!(
            (err - rho).abs() <= 1e-12 * err.abs().max(rho.abs()).max(f64::MIN_POSITIVE),
            "{:?}: {} vs {}",
            which,
            err,
            rho
        );
    }
    let sum = overlap_from_grid(pair, Which::Zero) + overlap_from_grid(pair, Which::One);
    prop_assert!(sum <= 1.0 + pair.tie_mass() + 1e-12, "sum rule {}", sum);
    Ok(())
}

pub const LATTICE_SIZE: usize = 64;
pub const POINTS_PER_INSTANCE: usize = 50;

/// Seeds for random lattice instances.
pub fn lattice_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

fn random_field(rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> LatticeField {
    LatticeField::new((0..LATTICE_SIZE).map(|_| normal.sample(rng)).collect()).unwrap()
}

/// Two 2-particle states with random orthonormal modes on a 64-site lattice:
/// the full-lattice comparison `|Psi_0| <= |Psi_1|` must equal the reduced
/// indicator at random configurations.
pub fn check_basis_invariance(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let fields: Vec<LatticeField> = (0..4).map(|_| random_field(&mut rng, &unit)).collect();
    let all = orthonormalize(&fields, DEFAULT_GRAM_TOLERANCE).unwrap();
    let modes0 = OrthonormalSet::from_orthonormal(all.modes()[..2].to_vec(), DEFAULT_GRAM_TOLERANCE).unwrap();
    let modes1 = OrthonormalSet::from_orthonormal(all.modes()[2..].to_vec(), DEFAULT_GRAM_TOLERANCE).unwrap();
    let basis = modes0.interleave(&modes1).unwrap();
    let state = ProductState::n_particle(vec![0, 1]).unwrap();

    let vacuum_like = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    for _ in 0..POINTS_PER_INSTANCE {
        let phi = random_field(&mut rng, &vacuum_like);
        let psi0 = log_abs_psi_field(&state, &modes0, &phi).unwrap();
        let psi1 = log_abs_psi_field(&state, &modes1, &phi).unwrap();
        let full = psi0.log_magnitude <= psi1.log_magnitude;
        let reduced = indicator_nn(project_to_reduced(&phi, &basis).unwrap().coords());
        prop_assert_eq!(full, reduced);
    }
    Ok(())
}
