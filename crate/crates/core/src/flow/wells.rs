//! Well source terms: bottom-hole-pressure and total-rate controls acting
//! on matrix cells and/or fracture control volumes.

use crate::mesh::{FractureMesh, StructuredGrid};
use crate::units;
use crate::{Error, Result};
use nalgebra::Point3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WellControl {
    /// Fixed bottom-hole pressure in Pa.
    Bhp(f64),
    /// Fixed total volumetric rate in m^3/s, positive = injection.
    Rate(f64),
}

/// One perforated control volume. `cv` is a global flow unknown index; the
/// well index `wi` (m^3) plays the role of a transmissibility between the
/// wellbore and the control volume.
#[derive(Debug, Clone)]
pub struct Completion {
    pub cv: usize,
    pub wi: f64,
}

#[derive(Debug, Clone)]
pub struct Well {
    pub name: String,
    pub control: WellControl,
    pub completions: Vec<Completion>,
}

impl Well {
    pub fn validate(&self, n_dofs: usize) -> Result<()> {
        if self.completions.is_empty() {
            return Err(Error::Config(format!(
                "well '{}' has no completions",
                self.name
            )));
        }
        for c in &self.completions {
            if c.cv >= n_dofs {
                return Err(Error::Config(format!(
                    "well '{}' perforates unknown control volume {}",
                    self.name, c.cv
                )));
            }
            if c.wi < 0.0 {
                return Err(Error::Config(format!(
                    "well '{}' has a negative well index",
                    self.name
                )));
            }
        }
        let wi_sum: f64 = self.completions.iter().map(|c| c.wi).sum();
        if wi_sum <= 0.0 {
            return Err(Error::Config(format!(
                "well '{}' has zero total well index; no fluid can enter",
                self.name
            )));
        }
        Ok(())
    }
}

/// Peaceman well index for a vertical well through a full cell of plan
/// dimensions dx x dy and height dz: WI = 2*pi*sqrt(kx*ky)*dz /
/// ln(r_eq/r_w), with the anisotropic equivalent radius
/// r_eq = 0.28 * sqrt(sqrt(ky/kx) dx^2 + sqrt(kx/ky) dy^2)
///       / ((ky/kx)^(1/4) + (kx/ky)^(1/4)).
pub fn peaceman_well_index(dx: f64, dy: f64, dz: f64, kx: f64, ky: f64, r_w: f64) -> f64 {
    let r = ky / kx;
    let r_eq = 0.28 * (r.sqrt() * dx * dx + (1.0 / r).sqrt() * dy * dy).sqrt()
        / (r.powf(0.25) + (1.0 / r).powf(0.25));
    2.0 * std::f64::consts::PI * (kx * ky).sqrt() * dz / (r_eq / r_w).ln()
}

/// Well index used for pressure-controlled completions in fracture control
/// volumes: large enough (1e5 mD*m) to pin the fracture pressure to the
/// bottom-hole pressure without conditioning problems.
pub fn fracture_bhp_well_index() -> f64 {
    units::mdm_to_m3(1.0e5)
}

/// Grid cell containing a physical point, or None if outside the grid.
pub fn cell_containing(grid: &StructuredGrid, p: &Point3<f64>) -> Option<usize> {
    let i = grid.axis_cell_of(0, p.x)?;
    let j = grid.axis_cell_of(1, p.y)?;
    let k = grid.axis_cell_of(2, p.z)?;
    Some(grid.cell_id(i, j, k))
}

/// Control volume of one fracture whose centroid lies closest to a point.
/// Returns a local fracture-mesh CV id.
pub fn nearest_cv_on_fracture(
    fmesh: &FractureMesh,
    fracture: usize,
    p: &Point3<f64>,
) -> Result<usize> {
    fmesh
        .fracture_cvs(fracture)
        .min_by(|&a, &b| {
            let da = (fmesh.cvs[a].cut.centroid - p).norm();
            let db = (fmesh.cvs[b].cut.centroid - p).norm();
            da.total_cmp(&db)
        })
        .ok_or_else(|| {
            Error::Config(format!(
                "fracture {fracture} has no control volumes to perforate"
            ))
        })
}
