//! Semi-device-independent certification of two-qubit measurements.
//!
//! Given only the outcome statistics `p(c|x,y,z)` of a measurement device
//! fed with independent, uncharacterized qubit preparations, the crate
//! decides whether the device must be entangled, or at least non-classical,
//! by comparing linear witnesses against class bounds. It also contains the
//! tools to reproduce those bounds (exhaustive classical enumeration,
//! see-saw optimization over quantum strategies) and to simulate a
//! finite-statistics photonic experiment.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod simulate;
pub mod table;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use table::{Dims, ProbabilityTable};
