//! Unit conversions between the config file's field units and internal SI.
//!
//! Config files use MPa, millidarcy, centipoise, meters and days. All
//! simulator state and residuals are strict SI (Pa, m2, Pa*s, m, s); the
//! conversion happens exactly once when a scenario is loaded.

/// One millidarcy in m^2.
pub const MILLIDARCY: f64 = 9.869_233e-16;
/// One centipoise in Pa*s.
pub const CENTIPOISE: f64 = 1.0e-3;
/// One megapascal in Pa.
pub const MEGAPASCAL: f64 = 1.0e6;
/// One day in seconds.
pub const DAY: f64 = 86_400.0;

pub fn mpa_to_pa(mpa: f64) -> f64 {
    mpa * MEGAPASCAL
}

pub fn pa_to_mpa(pa: f64) -> f64 {
    pa / MEGAPASCAL
}

pub fn md_to_m2(md: f64) -> f64 {
    md * MILLIDARCY
}

pub fn cp_to_pa_s(cp: f64) -> f64 {
    cp * CENTIPOISE
}

pub fn days_to_s(days: f64) -> f64 {
    days * DAY
}

pub fn s_to_days(s: f64) -> f64 {
    s / DAY
}

/// Fracture conductivity (permeability times aperture), mD*m to m^3.
pub fn mdm_to_m3(mdm: f64) -> f64 {
    mdm * MILLIDARCY
}

/// Inverse-pressure compressibility, 1/MPa to 1/Pa.
pub fn per_mpa_to_per_pa(c: f64) -> f64 {
    c / MEGAPASCAL
}
