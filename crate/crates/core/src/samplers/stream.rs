use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{CoordinateLayout, PointGenerator, Sampler, SamplerKind};
use crate::error::Result;
use crate::states::ReducedPoint;

/// Counter-based generator: the key comes from the seed, the stream id from
/// the package index, so any package can be produced without the others.
pub type StreamRng = ChaCha12Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 256-bit ChaCha key derived from `(root_seed, kind, dimension)`.
pub fn stream_seed(root_seed: u64, kind: SamplerKind, dimension: usize) -> [u8; 32] {
    let mut state = root_seed;
    splitmix64(&mut state);
    state ^= kind.stream_tag();
    splitmix64(&mut state);
    state ^= dimension as u64;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// A point drawn from a stream with its density weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub point: ReducedPoint,
    pub density_weight: f64,
}

/// One package's private sequence of points.
pub struct SampleStream {
    root_seed: u64,
    package_index: u64,
    kind: SamplerKind,
    rng: StreamRng,
    generator: Arc<dyn PointGenerator>,
}

impl SampleStream {
    pub fn new(
        root_seed: u64,
        package_index: u64,
        kind: SamplerKind,
        generator: Arc<dyn PointGenerator>,
    ) -> Self {
        let mut rng = StreamRng::from_seed(stream_seed(root_seed, kind, generator.dimension()));
        rng.set_stream(package_index);
        Self {
            root_seed,
            package_index,
            kind,
            rng,
            generator,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn package_index(&self) -> u64 {
        self.package_index
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.generator.dimension()
    }

    pub fn generator(&self) -> &dyn PointGenerator {
        self.generator.as_ref()
    }

    /// Fills `x` in place and returns the density weight.
    #[inline]
    pub fn fill_next(&mut self, x: &mut [f64]) -> f64 {
        self.generator.draw(&mut self.rng, x)
    }

    pub fn next_sample(&mut self) -> WeightedSample {
        let mut x = vec![0.0; self.dimension()];
        let density_weight = self.fill_next(&mut x);
        WeightedSample {
            point: ReducedPoint::new(x).expect("samplers produce finite coordinates"),
            density_weight,
        }
    }
}

/// The stream for one package; a pure function of its arguments.
pub fn split_stream(
    root_seed: u64,
    package_index: u64,
    sampler: &dyn Sampler,
    layout: &CoordinateLayout,
) -> Result<SampleStream> {
    let generator = sampler.prepare(layout)?;
    Ok(SampleStream::new(
        root_seed,
        package_index,
        sampler.kind(),
        generator,
    ))
}
