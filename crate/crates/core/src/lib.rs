//! Overlaps between n-particle wavefunctionals of a free real scalar field.
//!
//! For product states over orthonormal modes, the overlap functional reduces
//! to an integral over the 2n (or n) mode coordinates, which this crate
//! estimates by package-based Monte Carlo with interchangeable samplers and
//! checks against closed forms and tensor quadrature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod output;
pub mod overlap;
pub mod samplers;
pub mod states;
pub mod summation;

pub use analysis::{fit_decay, DecayFit, DecaySeries};
pub use engine::{estimate, sweep, Engine, McConfig, McEstimate};
pub use error::{Error, Result};
pub use overlap::{Family, IntegralSpec};
pub use samplers::{SamplerKind, SamplerRegistry};
