//! Planar rectangular fracture surfaces and their embedding into the grid:
//! per-cell cut polygons, sub-cell volumes, matrix-fracture coupling
//! distances and the ramp-function geometry used by the mechanics
//! enrichment.

use super::clip::{
    box_cross_section, clip_polygon_to_box, polygon_area, polygon_centroid, split_box_by_plane,
    Plane,
};
use super::grid::StructuredGrid;
use super::shape::{gauss_points, shape_ref_gradients, shape_values};
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};

/// A planar rectangular fracture. The strike angle is measured in the x-y
/// plane from the +x axis; dip is from horizontal, 90 degrees = vertical.
/// `length` extends along strike, `height` along the dip direction.
/// `conductivity` is the fracture permeability-aperture product; it is kept
/// in whatever permeability-length unit the caller uses consistently.
#[derive(Debug, Clone)]
pub struct FractureSurface {
    pub center: Point3<f64>,
    pub strike_deg: f64,
    pub dip_deg: f64,
    pub length: f64,
    pub height: f64,
    pub conductivity: f64,
    pub aperture: f64,
}

impl FractureSurface {
    /// Strike direction (horizontal).
    pub fn tau1(&self) -> Vector3<f64> {
        let a = self.strike_deg.to_radians();
        Vector3::new(a.cos(), a.sin(), 0.0)
    }

    /// Up-dip direction: horizontal for a flat plane, +z for a vertical one.
    pub fn tau2(&self) -> Vector3<f64> {
        let a = self.strike_deg.to_radians();
        let d = self.dip_deg.to_radians();
        Vector3::new(-d.cos() * a.sin(), d.cos() * a.cos(), d.sin())
    }

    /// Unit normal, equal to tau1 x tau2.
    pub fn normal(&self) -> Vector3<f64> {
        let a = self.strike_deg.to_radians();
        let d = self.dip_deg.to_radians();
        Vector3::new(d.sin() * a.sin(), -d.sin() * a.cos(), d.cos())
    }

    pub fn plane(&self) -> Plane {
        Plane::new(self.normal(), self.center)
    }

    /// The four rectangle corners.
    pub fn corners(&self) -> [Point3<f64>; 4] {
        let t1 = self.tau1() * (0.5 * self.length);
        let t2 = self.tau2() * (0.5 * self.height);
        [
            self.center - t1 - t2,
            self.center + t1 - t2,
            self.center + t1 + t2,
            self.center - t1 + t2,
        ]
    }

    /// Arc-length coordinate of a point along strike, measured from the
    /// low-strike tip.
    pub fn arc_coord(&self, p: &Point3<f64>) -> f64 {
        (p - (self.center - self.tau1() * (0.5 * self.length))).dot(&self.tau1())
    }
}

/// Ramp-function geometry of a cut element: which nodes sit on the positive
/// side of the fracture plane, and the gradient of the sum of their shape
/// functions (averaged and per Gauss point).
#[derive(Debug, Clone)]
pub struct RampData {
    pub node_positive: [bool; 8],
    /// Ramp values at the 2x2x2 Gauss points.
    pub f_gauss: [f64; 8],
    /// Physical-space ramp gradients at the Gauss points.
    pub grad_f_gauss: [Vector3<f64>; 8],
    /// Volume-averaged ramp gradient.
    pub grad_f_bar: Vector3<f64>,
}

/// One fracture-cell intersection: the bounded cut polygon plus the
/// plane-split sub-cell volumes used for the matrix-fracture coupling
/// distance.
#[derive(Debug, Clone)]
pub struct FractureCut {
    pub cell: usize,
    pub polygon: Vec<Point3<f64>>,
    pub area: f64,
    pub centroid: Point3<f64>,
    pub normal: Vector3<f64>,
    /// Volume and centroid of the sub-cell on the negative side of the plane.
    pub v1: f64,
    pub m1: Point3<f64>,
    /// Volume and centroid of the sub-cell on the positive side.
    pub v2: f64,
    pub m2: Point3<f64>,
    /// Average normal distance from matrix to the fracture plane.
    pub dbar: f64,
    pub ramp: RampData,
}

/// Volume-weighted average distance of the two sub-cells to the cut plane:
/// dbar = (V1/V0) |M1 - Mf| + (V2/V0) |M2 - Mf| with V0 = V1 + V2, where Mf
/// is the projection-weighted reference on the plane (the cut centroid).
pub fn compute_dbar(
    v1: f64,
    m1: &Point3<f64>,
    v2: f64,
    m2: &Point3<f64>,
    plane: &Plane,
) -> f64 {
    let v0 = v1 + v2;
    if v0 <= 0.0 {
        return 0.0;
    }
    // Distances are measured normal to the plane so that the value is
    // invariant to where the polygon centroid sits within the plane.
    let d1 = plane.signed_distance(m1).abs();
    let d2 = plane.signed_distance(m2).abs();
    (v1 / v0) * d1 + (v2 / v0) * d2
}

/// Classify element nodes against the cut plane and build the ramp geometry.
/// Fails if the plane does not separate the nodes (degenerate cut).
pub fn ramp_gradient(grid: &StructuredGrid, cell: usize, plane: &Plane) -> Result<RampData> {
    let nodes = grid.cell_nodes(cell);
    let mut node_positive = [false; 8];
    let mut n_pos = 0;
    for (a, &node) in nodes.iter().enumerate() {
        let d = plane.signed_distance(&grid.node_coords(node));
        node_positive[a] = d > 0.0;
        if node_positive[a] {
            n_pos += 1;
        }
    }
    if n_pos == 0 || n_pos == 8 {
        return Err(Error::Geometry(format!(
            "cut of cell {cell} does not separate its nodes ({n_pos} on positive side)"
        )));
    }
    let w = grid.cell_widths(cell);
    let scale = Vector3::new(2.0 / w.x, 2.0 / w.y, 2.0 / w.z);
    let mut f_gauss = [0.0; 8];
    let mut grad_f_gauss = [Vector3::zeros(); 8];
    let mut grad_f_bar = Vector3::zeros();
    for (g, xi) in gauss_points().iter().enumerate() {
        let n = shape_values(xi);
        let dn = shape_ref_gradients(xi);
        let mut f = 0.0;
        let mut grad = Vector3::zeros();
        for a in 0..8 {
            if node_positive[a] {
                f += n[a];
                grad += Vector3::new(
                    dn[a][0] * scale.x,
                    dn[a][1] * scale.y,
                    dn[a][2] * scale.z,
                );
            }
        }
        f_gauss[g] = f;
        grad_f_gauss[g] = grad;
        grad_f_bar += grad;
    }
    grad_f_bar /= 8.0;
    if grad_f_bar.dot(&plane.normal) <= 0.0 {
        return Err(Error::Geometry(format!(
            "ramp gradient of cell {cell} is not aligned with the cut normal"
        )));
    }
    Ok(RampData {
        node_positive,
        f_gauss,
        grad_f_gauss,
        grad_f_bar,
    })
}

/// Embed a fracture surface into the grid: one cut per cell the bounded
/// rectangle intersects with nonzero area. A fracture entirely outside the
/// grid yields an empty list.
pub fn embed_fracture(grid: &StructuredGrid, frac: &FractureSurface) -> Result<Vec<FractureCut>> {
    let frac = nudged_fracture(grid, frac);
    let plane = frac.plane();
    let corners = frac.corners();
    let tol = 1e-9 * grid.min_spacing();
    let area_tol = 1e-9 * grid.min_spacing() * grid.min_spacing();

    let mut lo = corners[0];
    let mut hi = corners[0];
    for c in &corners[1..] {
        for a in 0..3 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let margin = 1e-6 * grid.min_spacing();
    for a in 0..3 {
        lo[a] -= margin;
        hi[a] += margin;
    }
    let (lo_idx, hi_idx) = grid.cells_overlapping(lo, hi);

    let mut cuts = Vec::new();
    for k in lo_idx[2]..hi_idx[2] {
        for j in lo_idx[1]..hi_idx[1] {
            for i in lo_idx[0]..hi_idx[0] {
                let cell = grid.cell_id(i, j, k);
                let (clo, chi) = grid.cell_bounds(cell);
                let poly = clip_polygon_to_box(&corners, clo, chi, tol);
                if poly.len() < 3 {
                    continue;
                }
                let area = polygon_area(&poly);
                if area <= area_tol {
                    continue;
                }
                let centroid = polygon_centroid(&poly);
                let (v1, m1, v2, m2) = split_box_by_plane(clo, chi, &plane, tol);
                let dbar = compute_dbar(v1, &m1, v2, &m2, &plane);
                let ramp = ramp_gradient(grid, cell, &plane)?;
                cuts.push(FractureCut {
                    cell,
                    polygon: poly,
                    area,
                    centroid,
                    normal: plane.normal,
                    v1,
                    m1,
                    v2,
                    m2,
                    dbar,
                    ramp,
                });
            }
        }
    }
    Ok(cuts)
}

/// Copy of the fracture with a face-coincident plane shifted slightly along
/// its normal, so clipping never sees exact coincidence. The shift is well
/// above the clipping tolerance and geometrically negligible. All geometry
/// derived from an embedding must use the same shifted surface.
pub fn nudged_fracture(grid: &StructuredGrid, frac: &FractureSurface) -> FractureSurface {
    let mut frac = frac.clone();
    let n = frac.normal();
    for axis in 0..3 {
        if n[axis].abs() > 1.0 - 1e-12 {
            // Distance from the plane to the nearest grid node coordinate,
            // relative to the local cell width.
            let coords = grid.axis_coords(axis);
            let x = frac.center[axis];
            let i = coords.partition_point(|&v| v < x);
            let nearest = if i == 0 {
                coords[0]
            } else if i == coords.len() {
                coords[coords.len() - 1]
            } else if (x - coords[i - 1]).abs() <= (coords[i] - x).abs() {
                coords[i - 1]
            } else {
                coords[i]
            };
            let h = match grid.axis_cell_of(axis, x) {
                Some(c) => grid.axis_width(axis, c),
                None => grid.min_spacing(),
            };
            if (x - nearest).abs() < 1e-7 * h {
                frac.center[axis] += n[axis].signum() * 1e-6 * h;
            }
        }
    }
    frac
}

/// Cross-section of the full fracture plane with a cell (used by tests and
/// by intersection geometry).
pub fn plane_section_of_cell(
    grid: &StructuredGrid,
    cell: usize,
    plane: &Plane,
) -> Vec<Point3<f64>> {
    let (lo, hi) = grid.cell_bounds(cell);
    box_cross_section(lo, hi, plane, 1e-9 * grid.min_spacing())
}

/// Side of the plane each of the 8 canonical nodes of `NODE_XI` maps to;
/// exposed for element-level tests.
pub fn node_side_count(ramp: &RampData) -> (usize, usize) {
    let pos = ramp.node_positive.iter().filter(|&&b| b).count();
    (8 - pos, pos)
}
