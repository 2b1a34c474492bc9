//! Finite-volume discretization of single-phase slightly compressible flow
//! in a fractured porous medium.
//!
//! Matrix cells and embedded fracture control volumes form one set of
//! pressure unknowns. Fluxes are two-point: matrix-matrix across grid faces,
//! matrix-fracture through the embedded cut geometry, fracture-fracture both
//! along each fracture and across fracture crossings (star-delta reduction).
//! Wells enter as bottom-hole-pressure or total-rate source terms. All
//! quantities are strict SI; residuals are volumetric rates (m^3/s).

mod disc;
mod model;
mod props;
mod wells;

pub use disc::{
    build_disc, ff_adjacent_transmissibility, ff_intersection_transmissibility,
    mf_transmissibility, mm_transmissibility, ConnKind, Connection, FlowDisc,
};
pub use model::{FlowModel, StepContext};
pub use props::FlowProps;
pub use wells::{
    cell_containing, fracture_bhp_well_index, nearest_cv_on_fracture, peaceman_well_index,
    Completion, Well, WellControl,
};
