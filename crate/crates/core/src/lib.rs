//! Maximal property projections in the Baer *-ring of complex matrices.
//!
//! Given a tuple of `n×n` complex matrices and a property defined by the
//! common zero set of compression-equivariant functionals, [`engine`] finds
//! the unique largest projection commuting with the tuple that compresses it
//! to a tuple with the property; the complementary corner completely lacks
//! it. [`structure`] specializes this to isometries and power partial
//! isometries.

mod dense;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod functional;
pub mod numeric;
pub mod properties;
pub mod ring;
pub mod selfcheck;
pub mod structure;

pub use error::{Error, Result};
pub use numeric::{CMat, Frame, ToleranceProfile, C64};
pub use properties::{builtin_property, PropertySpec};
pub use ring::{Projection, TupleInstance};
