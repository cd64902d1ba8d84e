//! Bipartite entanglement detection.
//!
//! * [`linalg`]: realignment, partial transpose, SVD and spectra of dense
//!   complex matrices;
//! * [`states`]: the standard test families and seeded random samplers;
//! * [`criteria`]: realignment and PPT separability tests;
//! * [`witness`]: witnesses built from a state, their optimization and
//!   evaluation;
//! * [`maps`]: positive maps, the witness/map correspondence and the Tang map.

pub mod criteria;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod states;
pub mod witness;

pub use criteria::{ppt_check, realignment_check, CriterionResult};
pub use error::{Error, Result};
pub use linalg::{BipartiteDims, ComplexMatrix, C64};
pub use maps::{LinearMap, MapDetectionReport};
pub use states::{DensityMatrix, PureState};
pub use witness::{ExtremumMode, ExtremumOptions, Witness, WitnessOrigin};
