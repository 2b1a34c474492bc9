//! Bulk flow properties of the rock/fluid system.

use crate::{Error, Result};
use nalgebra::Vector3;

/// Homogeneous flow properties in strict SI units (m^2, Pa, s, kg).
#[derive(Debug, Clone)]
pub struct FlowProps {
    /// Diagonal matrix permeability (kx, ky, kz) in m^2.
    pub perm: Vector3<f64>,
    /// Matrix porosity, in (0, 1).
    pub porosity: f64,
    /// Fluid compressibility in 1/Pa.
    pub fluid_compressibility: f64,
    /// Drained bulk modulus of the rock skeleton in Pa.
    pub bulk_modulus: f64,
    /// Biot coefficient.
    pub biot: f64,
    /// Fluid dynamic viscosity in Pa*s.
    pub viscosity: f64,
    /// Fluid density in kg/m^3.
    pub density: f64,
    /// Gravity vector in m/s^2; zero disables gravity heads.
    pub gravity: Vector3<f64>,
}

impl FlowProps {
    /// Storativity coefficient multiplying dp/dt in the matrix balance:
    /// phi*c_f + (1 - b)(b - phi)/K. This is the reciprocal of the usual
    /// Biot modulus, stored directly because only the product with dp/dt
    /// ever appears.
    pub fn inv_biot_modulus(&self) -> f64 {
        self.porosity * self.fluid_compressibility
            + (1.0 - self.biot) * (self.biot - self.porosity) / self.bulk_modulus
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(Error::Config(format!(
                "porosity must lie in (0, 1), got {}",
                self.porosity
            )));
        }
        if self.fluid_compressibility < 0.0 {
            return Err(Error::Config(format!(
                "fluid compressibility must be nonnegative, got {}",
                self.fluid_compressibility
            )));
        }
        if !(self.viscosity > 0.0) {
            return Err(Error::Config(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        if !(self.bulk_modulus > 0.0) {
            return Err(Error::Config(format!(
                "bulk modulus must be positive, got {}",
                self.bulk_modulus
            )));
        }
        if self.perm.min() < 0.0 {
            return Err(Error::Config(format!(
                "permeability must be nonnegative, got {:?}",
                self.perm
            )));
        }
        if !(0.0..=1.0).contains(&self.biot) {
            return Err(Error::Config(format!(
                "Biot coefficient must lie in [0, 1], got {}",
                self.biot
            )));
        }
        if self.density < 0.0 {
            return Err(Error::Config(format!(
                "fluid density must be nonnegative, got {}",
                self.density
            )));
        }
        if self.inv_biot_modulus() < 0.0 {
            return Err(Error::Config(
                "storativity phi*c_f + (1-b)(b-phi)/K is negative; check porosity vs Biot coefficient"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units;

    fn water_rock() -> FlowProps {
        FlowProps {
            perm: Vector3::repeat(units::md_to_m2(10.0)),
            porosity: 0.2,
            fluid_compressibility: units::per_mpa_to_per_pa(4.5e-4),
            bulk_modulus: units::mpa_to_pa(2.0e3),
            biot: 0.9,
            viscosity: units::cp_to_pa_s(1.0),
            density: 1000.0,
            gravity: Vector3::zeros(),
        }
    }

    #[test]
    fn storativity_matches_hand_sum() {
        // phi*c_f = 0.2 * 4.5e-10 = 9.0e-11; (1-b)(b-phi)/K = 0.1*0.7/2e9
        // = 3.5e-11; total 1.25e-10 per Pa.
        let p = water_rock();
        assert!((p.inv_biot_modulus() - 1.25e-10).abs() < 1e-16);
        p.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut p = water_rock();
        p.porosity = 0.0;
        assert!(p.validate().is_err());

        let mut p = water_rock();
        p.viscosity = 0.0;
        assert!(p.validate().is_err());

        let mut p = water_rock();
        p.fluid_compressibility = -1.0;
        assert!(p.validate().is_err());

        let mut p = water_rock();
        p.biot = 1.2;
        assert!(p.validate().is_err());

        let mut p = water_rock();
        p.perm.x = -1.0;
        assert!(p.validate().is_err());
    }
}
