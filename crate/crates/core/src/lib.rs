//! Coupled single-phase flow and geomechanics for fractured porous media.
//!
//! Flow is discretized with cell-centered finite volumes on a structured
//! hexahedral grid; fractures are embedded as lower-dimensional control
//! volumes coupled to the matrix through geometric transmissibilities.
//! Mechanics uses trilinear hexahedral finite elements enriched with a
//! strong-discontinuity displacement jump in fractured elements, closed by
//! frictional-contact return mapping. Both fields are advanced together by
//! a monolithic Newton loop with backward-Euler time integration.

pub mod config;
pub mod coupling;
pub mod error;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod mech;
pub mod mesh;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
