use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FieldError, ScalarField};
use crate::geometry::Domain;
use crate::Vec2;

/// Spatial shrink factor: structures of size `L` become `L / factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldScale(f64);

impl FieldScale {
    pub fn new(factor: f64) -> Result<Self, FieldError> {
        if factor.is_finite() && factor > 0.0 {
            Ok(Self(factor))
        } else {
            Err(FieldError::Invalid(format!(
                "scale factor {factor} must be finite and > 0"
            )))
        }
    }

    pub fn factor(self) -> f64 {
        self.0
    }
}

/// View of a field through `p -> p * factor`. Values are preserved, the
/// domain shrinks by `factor` and gradients grow by it.
#[derive(Debug, Clone)]
pub struct ScaledField {
    inner: Arc<dyn ScalarField>,
    factor: f64,
}

pub fn scale_field(field: Arc<dyn ScalarField>, scale: FieldScale) -> ScaledField {
    ScaledField {
        inner: field,
        factor: scale.factor(),
    }
}

impl ScaledField {
    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl ScalarField for ScaledField {
    fn domain(&self) -> Domain {
        self.inner.domain().shrink(self.factor)
    }

    fn value_at(&self, p: Vec2) -> Result<f64, FieldError> {
        self.inner.value_at(p * self.factor)
    }

    fn true_gradient(&self, p: Vec2) -> Result<Vec2, FieldError> {
        Ok(self.inner.true_gradient(p * self.factor)? * self.factor)
    }
}
