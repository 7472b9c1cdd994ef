use super::{out_of_domain, FieldError, ScalarField};
use crate::geometry::Domain;
use crate::Vec2;

/// Row-major raster: `values[i * nx + j]` sits at `(x0 + j dx, y0 + i dy)`.
///
/// Non-finite NaN cells are masked (land, cloud). Infinite values are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    origin: [f64; 2],
    spacing: [f64; 2],
    ny: usize,
    nx: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl GridField {
    pub fn new(
        origin: [f64; 2],
        spacing: [f64; 2],
        ny: usize,
        nx: usize,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(FieldError::Invalid("origin must be finite".into()));
        }
        for (axis, d) in ["dx", "dy"].iter().zip(spacing) {
            if !(d.is_finite() && d > 0.0) {
                return Err(FieldError::Invalid(format!(
                    "non-monotone axis: spacing {axis} = {d} must be finite and > 0"
                )));
            }
        }
        if nx < 2 || ny < 2 {
            return Err(FieldError::Invalid(format!(
                "shape {ny}x{nx}: both dimensions must be at least 2"
            )));
        }
        if values.len() != nx * ny {
            return Err(FieldError::Invalid(format!(
                "expected {} values for shape {ny}x{nx}, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| v.is_infinite()) {
            return Err(FieldError::Invalid(format!(
                "cell ({}, {}) holds an infinite value",
                k / nx,
                k % nx
            )));
        }
        let valid = values.iter().map(|v| !v.is_nan()).collect();
        Ok(Self {
            origin,
            spacing,
            ny,
            nx,
            values,
            valid,
        })
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    /// `(ny, nx)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    /// Cell value, NaN when masked.
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.nx + col]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.nx + col]
    }

    pub fn node(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            self.origin[0] + col as f64 * self.spacing[0],
            self.origin[1] + row as f64 * self.spacing[1],
        )
    }

    pub fn masked_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Valid nodes as `(position, value)` pairs, row-major.
    pub fn valid_nodes(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        (0..self.ny).flat_map(move |i| {
            (0..self.nx)
                .filter(move |&j| self.is_valid(i, j))
                .map(move |j| (self.node(i, j), self.cell(i, j)))
        })
    }

    /// Locates the lower-left stencil corner and fractional offsets.
    fn stencil(&self, p: Vec2) -> Result<(usize, usize, f64, f64), FieldError> {
        if !self.domain().contains(p) {
            return Err(out_of_domain(p));
        }
        let fx = snap((p.x - self.origin[0]) / self.spacing[0]);
        let fy = snap((p.y - self.origin[1]) / self.spacing[1]);
        let j = (fx.floor() as usize).min(self.nx - 2);
        let i = (fy.floor() as usize).min(self.ny - 2);
        Ok((i, j, fx - j as f64, fy - i as f64))
    }
}

/// Rounds fractional grid indices that are within rounding error of a node,
/// so queries at node coordinates return the stored value exactly.
fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() <= 8.0 * f64::EPSILON * r.abs().max(1.0) {
        r
    } else {
        f
    }
}

impl ScalarField for GridField {
    fn domain(&self) -> Domain {
        Domain::new(
            self.origin,
            [
                self.origin[0] + (self.nx - 1) as f64 * self.spacing[0],
                self.origin[1] + (self.ny - 1) as f64 * self.spacing[1],
            ],
        )
    }

    fn value_at(&self, p: Vec2) -> Result<f64, FieldError> {
        let (i, j, tx, ty) = self.stencil(p)?;
        let corners = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)];
        if corners.iter().any(|&(r, c)| !self.is_valid(r, c)) {
            return Err(FieldError::Masked { x: p.x, y: p.y });
        }
        let v00 = self.cell(i, j);
        let v01 = self.cell(i, j + 1);
        let v10 = self.cell(i + 1, j);
        let v11 = self.cell(i + 1, j + 1);
        Ok((1.0 - tx) * (1.0 - ty) * v00
            + tx * (1.0 - ty) * v01
            + (1.0 - tx) * ty * v10
            + tx * ty * v11)
    }

    /// Central differences of the bilinear surface with `h = min(dx, dy) / 2`,
    /// falling back to a one-sided difference where the central stencil would
    /// leave the domain.
    fn true_gradient(&self, p: Vec2) -> Result<Vec2, FieldError> {
        let center = self.value_at(p)?;
        let h = self.spacing[0].min(self.spacing[1]) / 2.0;
        let domain = self.domain();
        let mut grad = Vec2::zeros();
        for axis in 0..2 {
            let mut e = Vec2::zeros();
            e[axis] = h;
            let fwd = p + e;
            let bwd = p - e;
            grad[axis] = match (domain.contains(fwd), domain.contains(bwd)) {
                (true, true) => (self.value_at(fwd)? - self.value_at(bwd)?) / (2.0 * h),
                (true, false) => (self.value_at(fwd)? - center) / h,
                (false, true) => (center - self.value_at(bwd)?) / h,
                (false, false) => unreachable!("grid spans at least one cell on each axis"),
            };
        }
        Ok(grad)
    }
}
