use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{out_of_domain, FieldError, GridField, ScalarField};
use crate::geometry::Domain;
use crate::Vec2;

/// Closed-form fields with exact gradients, used as desk-scale stand-ins for
/// satellite rasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticField {
    /// `offset + amplitude * exp(-|p - center|^2 / (2 width^2))`
    RadialBlob {
        center: [f64; 2],
        amplitude: f64,
        width: f64,
        #[serde(default)]
        offset: f64,
        domain: Domain,
    },
    /// `offset + slope * (y - amplitude * sin(2 pi x / wavelength))`: a front
    /// running along x that meanders in y.
    SinusoidalFront {
        offset: f64,
        slope: f64,
        amplitude: f64,
        wavelength: f64,
        domain: Domain,
    },
    /// `slope . p + intercept`
    LinearRamp {
        slope: [f64; 2],
        intercept: f64,
        domain: Domain,
    },
}

impl SyntheticField {
    pub fn validate(&self) -> Result<(), FieldError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(FieldError::Invalid(format!("{name} must be finite")))
            }
        };
        if !self.domain().is_valid() {
            return Err(FieldError::Invalid(
                "domain must be finite with min < max on both axes".into(),
            ));
        }
        match *self {
            SyntheticField::RadialBlob {
                center,
                amplitude,
                width,
                offset,
                ..
            } => {
                finite("center", center[0] + center[1])?;
                finite("amplitude", amplitude)?;
                finite("offset", offset)?;
                if !(width.is_finite() && width > 0.0) {
                    return Err(FieldError::Invalid("width must be finite and > 0".into()));
                }
            }
            SyntheticField::SinusoidalFront {
                offset,
                slope,
                amplitude,
                wavelength,
                ..
            } => {
                finite("offset", offset)?;
                finite("slope", slope)?;
                finite("amplitude", amplitude)?;
                if !(wavelength.is_finite() && wavelength > 0.0) {
                    return Err(FieldError::Invalid(
                        "wavelength must be finite and > 0".into(),
                    ));
                }
            }
            SyntheticField::LinearRamp {
                slope, intercept, ..
            } => {
                finite("slope", slope[0] + slope[1])?;
                finite("intercept", intercept)?;
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SyntheticField::RadialBlob { .. } => "radial-blob",
            SyntheticField::SinusoidalFront { .. } => "sinusoidal-front",
            SyntheticField::LinearRamp { .. } => "linear-ramp",
        }
    }

    fn eval(&self, p: Vec2) -> (f64, Vec2) {
        match *self {
            SyntheticField::RadialBlob {
                center,
                amplitude,
                width,
                offset,
                ..
            } => {
                let d = p - Vec2::new(center[0], center[1]);
                let bump = amplitude * (-d.norm_squared() / (2.0 * width * width)).exp();
                (offset + bump, -d * (bump / (width * width)))
            }
            SyntheticField::SinusoidalFront {
                offset,
                slope,
                amplitude,
                wavelength,
                ..
            } => {
                let phase = TAU * p.x / wavelength;
                let value = offset + slope * (p.y - amplitude * phase.sin());
                let grad = Vec2::new(-slope * amplitude * TAU / wavelength * phase.cos(), slope);
                (value, grad)
            }
            SyntheticField::LinearRamp {
                slope, intercept, ..
            } => (
                slope[0] * p.x + slope[1] * p.y + intercept,
                Vec2::new(slope[0], slope[1]),
            ),
        }
    }

    /// Samples the field on a `ny x nx` lattice spanning the whole domain.
    pub fn rasterize(&self, ny: usize, nx: usize) -> Result<GridField, FieldError> {
        self.validate()?;
        if nx < 2 || ny < 2 {
            return Err(FieldError::Invalid(format!(
                "shape {ny}x{nx}: both dimensions must be at least 2"
            )));
        }
        let d = self.domain();
        let spacing = [d.width() / (nx - 1) as f64, d.height() / (ny - 1) as f64];
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..ny {
            for j in 0..nx {
                let p = Vec2::new(
                    d.min[0] + j as f64 * spacing[0],
                    d.min[1] + i as f64 * spacing[1],
                );
                values.push(self.eval(p).0);
            }
        }
        GridField::new(d.min, spacing, ny, nx, values)
    }
}

impl ScalarField for SyntheticField {
    fn domain(&self) -> Domain {
        match self {
            SyntheticField::RadialBlob { domain, .. }
            | SyntheticField::SinusoidalFront { domain, .. }
            | SyntheticField::LinearRamp { domain, .. } => *domain,
        }
    }

    fn value_at(&self, p: Vec2) -> Result<f64, FieldError> {
        if !self.domain().contains(p) {
            return Err(out_of_domain(p));
        }
        Ok(self.eval(p).0)
    }

    fn true_gradient(&self, p: Vec2) -> Result<Vec2, FieldError> {
        if !self.domain().contains(p) {
            return Err(out_of_domain(p));
        }
        Ok(self.eval(p).1)
    }
}
