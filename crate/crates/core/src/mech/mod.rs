//! Finite-element mechanics: trilinear hexahedral elements enriched with
//! embedded strong discontinuities for fractures, frictional-contact local
//! solves, and globally consistent linearization.

pub mod bc;
pub mod contact;
pub mod element;
pub mod model;
pub mod solve;
pub mod tensor;

pub use contact::{solve_local, ContactProps, FracPointState, FracStatus, LocalSolution};
pub use element::ElementGeometry;
