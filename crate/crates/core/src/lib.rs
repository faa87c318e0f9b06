//! Scenery flows of `x b`-invariant measures on the unit interval.

pub mod chart;
pub mod diffeo;
pub mod digits;
pub mod error;
pub mod experiments;
pub mod functional;
pub mod grid;
pub mod phase;
pub mod point;
pub mod prediction;
pub mod rng;
pub mod scenery;
pub mod singularity;
pub mod spectral;

pub use diffeo::DiffeoSpec;
pub use digits::{DigitModel, ModelKind, Word};
pub use error::{Error, Result};
pub use grid::GridMeasure;
pub use point::PointSpec;
