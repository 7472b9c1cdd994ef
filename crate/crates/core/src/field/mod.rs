//! Scalar concentration fields.
//!
//! Every field implements [`ScalarField`]: point queries are only answered
//! inside the field's [`Domain`], never extrapolated. Rasters interpolate
//! bilinearly and refuse any query whose stencil touches a masked cell.

mod grid;
pub mod io;
mod scale;
mod synthetic;

use std::fmt::Debug;

use thiserror::Error;

pub use crate::geometry::Domain;
use crate::Vec2;
pub use grid::GridField;
pub use io::{load_grid, save_grid, GridFormat, GridIoError};
pub use scale::{scale_field, FieldScale, ScaledField};
pub use synthetic::SyntheticField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("position ({x}, {y}) lies outside the field domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("query at ({x}, {y}) touches a masked cell")]
    Masked { x: f64, y: f64 },
    #[error("invalid field: {0}")]
    Invalid(String),
}

/// A static 2-D concentration field (mg/m³) over a bounded planar domain.
pub trait ScalarField: Send + Sync + Debug {
    fn domain(&self) -> Domain;

    fn value_at(&self, p: Vec2) -> Result<f64, FieldError>;

    /// Gradient in mg/m³ per field unit.
    fn true_gradient(&self, p: Vec2) -> Result<Vec2, FieldError>;
}

impl<F: ScalarField + ?Sized> ScalarField for std::sync::Arc<F> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }

    fn value_at(&self, p: Vec2) -> Result<f64, FieldError> {
        (**self).value_at(p)
    }

    fn true_gradient(&self, p: Vec2) -> Result<Vec2, FieldError> {
        (**self).true_gradient(p)
    }
}

pub(crate) fn out_of_domain(p: Vec2) -> FieldError {
    FieldError::OutOfDomain { x: p.x, y: p.y }
}
