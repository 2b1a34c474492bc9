//! Structured hexahedral grid, plane/box clipping geometry, fracture
//! embedding, and the assembled fracture control-volume mesh.

pub mod clip;
pub mod fracmesh;
pub mod fracture;
pub mod grid;
pub mod shape;

pub use clip::Plane;
pub use fracmesh::{FfConnection, FracCv, FractureIntersection, FractureMesh, SubSegment};
pub use fracture::{embed_fracture, FractureCut, FractureSurface, RampData};
pub use grid::StructuredGrid;
