//! Characteristic (double-null) evolution of spherically symmetric gravity
//! coupled to a massless scalar field, aimed at the interior of black holes
//! and the approach to the r = 0 singularity.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field_equations;
pub mod geometry;
pub mod initial_data;

pub use error::{Error, Result};
pub use geometry::{Cell, DoubleNullGrid, FieldState, PointState, PointStatus};
