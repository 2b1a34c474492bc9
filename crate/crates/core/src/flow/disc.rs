//! Geometric flow connectivity: control volumes and two-point
//! transmissibilities between them.
//!
//! Transmissibilities are purely geometric (units m^3); dividing by the
//! fluid viscosity turns them into volumetric-flux coefficients. All four
//! connection families reduce to series combinations of half-cell
//! conductances A*k/d.

use crate::mesh::{FractureMesh, StructuredGrid, SubSegment};
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnKind {
    /// Two matrix cells sharing a grid face.
    MatrixMatrix,
    /// A matrix cell and the fracture control volume embedded in it.
    MatrixFracture,
    /// Two control volumes of one fracture in face-adjacent cells.
    FractureAdjacent,
    /// Control volumes of two different fractures crossing inside a cell.
    FractureIntersection,
}

/// One symmetric two-point connection between global flow unknowns `i` and
/// `j`. The volumetric flux from i to j is
/// (trans / mu) * (p_i - p_j - rho * g . dx) with dx = x_i - x_j.
#[derive(Debug, Clone)]
pub struct Connection {
    pub kind: ConnKind,
    pub i: usize,
    pub j: usize,
    /// Geometric transmissibility in m^3.
    pub trans: f64,
    /// Center-to-center offset x_i - x_j for gravity heads, in m.
    pub dx: Vector3<f64>,
}

/// Series combination of two one-sided conductances: a*b / (a + b).
fn series(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        a * b / (a + b)
    }
}

/// Face transmissibility between two cells: the series combination of the
/// half-cell conductances area*k_i/d_i, where d_i is the distance from each
/// cell center to the shared face and k_i the permeability component normal
/// to the face.
pub fn mm_transmissibility(area: f64, k1: f64, d1: f64, k2: f64, d2: f64) -> f64 {
    series(area * k1 / d1, area * k2 / d2)
}

/// Matrix-fracture exchange transmissibility 2*A*(n.k.n)/dbar, where A is
/// the cut area, n.k.n the matrix permeability normal to the fracture and
/// dbar the volume-averaged normal distance from the cell to the plane. The
/// factor two accounts for matrix on both sides of the fracture.
pub fn mf_transmissibility(area: f64, k_normal: f64, dbar: f64) -> Result<f64> {
    if dbar <= 0.0 {
        return Err(Error::Geometry(format!(
            "matrix-fracture coupling distance must be positive, got {dbar}"
        )));
    }
    Ok(2.0 * area * k_normal / dbar)
}

/// Along-fracture transmissibility between two control volumes of the same
/// fracture meeting at a shared cell-face edge of length `l_edge`: the
/// series combination of the in-plane half conductances C_f/d per unit edge
/// length, with C_f the fracture conductivity (permeability-aperture
/// product, m^3) and d the centroid-to-edge distances.
pub fn ff_adjacent_transmissibility(l_edge: f64, c1: f64, d1: f64, c2: f64, d2: f64) -> f64 {
    l_edge * series(c1 / d1, c2 / d2)
}

/// Transmissibility across a fracture-fracture crossing, by star-delta
/// reduction of the four half-segment branches that meet at the
/// intersection line. Each half segment carries a branch conductance
/// alpha = C_f * l_int / d toward the line; the total between the two
/// fractures sums the star-delta pair terms alpha_a*alpha_b / sum(alpha)
/// over the four (a in fracture 1) x (b in fracture 2) combinations.
pub fn ff_intersection_transmissibility(
    c1: f64,
    segs1: &[SubSegment; 2],
    c2: f64,
    segs2: &[SubSegment; 2],
    l_int: f64,
) -> f64 {
    let alpha = |c: f64, s: &SubSegment| {
        if s.area > 0.0 && s.dist > 0.0 {
            c * l_int / s.dist
        } else {
            0.0
        }
    };
    let a = [
        alpha(c1, &segs1[0]),
        alpha(c1, &segs1[1]),
        alpha(c2, &segs2[0]),
        alpha(c2, &segs2[1]),
    ];
    let total: f64 = a.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut t = 0.0;
    for ai in &a[0..2] {
        for bj in &a[2..4] {
            t += ai * bj / total;
        }
    }
    t
}

/// Assembled flow connectivity: unknown layout, storage geometry and the
/// full symmetric connection list.
///
/// Global unknown order: matrix cells first (grid cell id), then fracture
/// control volumes (`n_cells + cv`). Rebuild after any change to the grid,
/// the fracture mesh or the permeability.
#[derive(Debug)]
pub struct FlowDisc {
    pub n_cells: usize,
    pub n_frac: usize,
    pub connections: Vec<Connection>,
    /// Storage volume per unknown: the grid cell volume for matrix cells,
    /// cut area times aperture for fracture control volumes.
    pub volumes: Vec<f64>,
    /// Geometric center per unknown (cell center / cut centroid).
    pub centers: Vec<Point3<f64>>,
}

impl FlowDisc {
    pub fn n_dofs(&self) -> usize {
        self.n_cells + self.n_frac
    }

    /// Global unknown index of a fracture control volume.
    pub fn frac_dof(&self, cv: usize) -> usize {
        self.n_cells + cv
    }
}

/// Build the connection list for a grid with embedded fractures.
pub fn build_disc(
    grid: &StructuredGrid,
    fmesh: &FractureMesh,
    perm: &Vector3<f64>,
) -> Result<FlowDisc> {
    let n_cells = grid.n_cells();
    let n_frac = fmesh.n_cvs();
    let mut connections = Vec::new();

    // Matrix-matrix: one connection per interior grid face.
    for cell in 0..n_cells {
        for axis in 0..3 {
            if let Some(nb) = grid.neighbor(cell, axis, 1) {
                let area = grid.face_area(cell, axis);
                let d1 = 0.5 * grid.cell_widths(cell)[axis];
                let d2 = 0.5 * grid.cell_widths(nb)[axis];
                let k = perm[axis];
                let trans = mm_transmissibility(area, k, d1, k, d2);
                connections.push(Connection {
                    kind: ConnKind::MatrixMatrix,
                    i: cell,
                    j: nb,
                    trans,
                    dx: grid.cell_center(cell) - grid.cell_center(nb),
                });
            }
        }
    }

    // Matrix-fracture: every cut couples to its host cell.
    for (cv, fcv) in fmesh.cvs.iter().enumerate() {
        let cut = &fcv.cut;
        let n = cut.normal;
        let k_normal = perm.x * n.x * n.x + perm.y * n.y * n.y + perm.z * n.z * n.z;
        let trans = mf_transmissibility(cut.area, k_normal, cut.dbar)?;
        connections.push(Connection {
            kind: ConnKind::MatrixFracture,
            i: cut.cell,
            j: n_cells + cv,
            trans,
            dx: grid.cell_center(cut.cell) - cut.centroid,
        });
    }

    // Fracture-fracture along each fracture surface.
    for conn in &fmesh.connections {
        let c1 = fmesh.fractures[fmesh.cvs[conn.cv1].fracture].conductivity;
        let c2 = fmesh.fractures[fmesh.cvs[conn.cv2].fracture].conductivity;
        let trans = ff_adjacent_transmissibility(conn.l_edge, c1, conn.d1, c2, conn.d2);
        connections.push(Connection {
            kind: ConnKind::FractureAdjacent,
            i: n_cells + conn.cv1,
            j: n_cells + conn.cv2,
            trans,
            dx: fmesh.cvs[conn.cv1].cut.centroid - fmesh.cvs[conn.cv2].cut.centroid,
        });
    }

    // Fracture-fracture across crossings.
    for x in &fmesh.intersections {
        let c1 = fmesh.fractures[fmesh.cvs[x.cv1].fracture].conductivity;
        let c2 = fmesh.fractures[fmesh.cvs[x.cv2].fracture].conductivity;
        let trans = ff_intersection_transmissibility(c1, &x.segs1, c2, &x.segs2, x.l_int);
        connections.push(Connection {
            kind: ConnKind::FractureIntersection,
            i: n_cells + x.cv1,
            j: n_cells + x.cv2,
            trans,
            dx: fmesh.cvs[x.cv1].cut.centroid - fmesh.cvs[x.cv2].cut.centroid,
        });
    }

    let mut volumes: Vec<f64> = (0..n_cells).map(|c| grid.cell_volume(c)).collect();
    let mut centers: Vec<Point3<f64>> = (0..n_cells).map(|c| grid.cell_center(c)).collect();
    for fcv in &fmesh.cvs {
        let aperture = fmesh.fractures[fcv.fracture].aperture;
        volumes.push(fcv.cut.area * aperture);
        centers.push(fcv.cut.centroid);
    }

    Ok(FlowDisc {
        n_cells,
        n_frac,
        connections,
        volumes,
        centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::FractureSurface;
    use crate::units;
    use nalgebra::point;

    fn rel_eq(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * b.abs().max(1e-300),
            "{a} vs {b} (rel {})",
            (a - b).abs() / b.abs().max(1e-300)
        );
    }

    #[test]
    fn matrix_transmissibility_between_unit_cubes() {
        // Two unit cubes at 10 mD: each half conductance is 1*k/0.5 = 20 mD*m,
        // the series combination is 10 mD*m.
        let grid = StructuredGrid::new(2, 1, 1, 1.0, 1.0, 1.0, point![0.0, 0.0, 0.0]).unwrap();
        let fmesh = FractureMesh::build(&grid, Vec::new()).unwrap();
        let k = Vector3::repeat(units::md_to_m2(10.0));
        let disc = build_disc(&grid, &fmesh, &k).unwrap();
        assert_eq!(disc.connections.len(), 1);
        let c = &disc.connections[0];
        assert_eq!(c.kind, ConnKind::MatrixMatrix);
        assert_eq!((c.i, c.j), (0, 1));
        rel_eq(c.trans, units::mdm_to_m3(10.0), 1e-12);
        assert!((c.dx - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn impermeable_side_blocks_a_face() {
        assert_eq!(mm_transmissibility(1.0, 0.0, 0.5, 10.0, 0.5), 0.0);
        assert_eq!(mm_transmissibility(1.0, 10.0, 0.5, 0.0, 0.5), 0.0);
    }

    #[test]
    fn anisotropic_permeability_uses_face_normal_component() {
        let k = Vector3::new(units::md_to_m2(10.0), units::md_to_m2(1.0), units::md_to_m2(1.0));
        // x-stacked pair sees kx, y-stacked pair sees ky.
        let gx = StructuredGrid::new(2, 1, 1, 1.0, 1.0, 1.0, point![0.0, 0.0, 0.0]).unwrap();
        let gy = StructuredGrid::new(1, 2, 1, 1.0, 1.0, 1.0, point![0.0, 0.0, 0.0]).unwrap();
        let none = |g: &StructuredGrid| FractureMesh::build(g, Vec::new()).unwrap();
        let dx = build_disc(&gx, &none(&gx), &k).unwrap();
        let dy = build_disc(&gy, &none(&gy), &k).unwrap();
        rel_eq(dx.connections[0].trans, units::mdm_to_m3(10.0), 1e-12);
        rel_eq(dy.connections[0].trans, units::mdm_to_m3(1.0), 1e-12);
    }

    #[test]
    fn matrix_fracture_exchange_for_a_bisected_cube() {
        // Unit cube bisected by a vertical plane: A = 1, dbar = 0.25, so
        // T = 2*1*k/0.25 = 8k = 80 mD*m at 10 mD.
        let grid = StructuredGrid::new(1, 1, 1, 1.0, 1.0, 1.0, point![0.0, 0.0, 0.0]).unwrap();
        let frac = FractureSurface {
            center: point![0.5, 0.5, 0.5],
            strike_deg: 90.0,
            dip_deg: 90.0,
            length: 4.0,
            height: 4.0,
            conductivity: units::mdm_to_m3(20.0),
            aperture: 1.0e-3,
        };
        let fmesh = FractureMesh::build(&grid, vec![frac]).unwrap();
        let k = Vector3::repeat(units::md_to_m2(10.0));
        let disc = build_disc(&grid, &fmesh, &k).unwrap();
        let mf: Vec<_> = disc
            .connections
            .iter()
            .filter(|c| c.kind == ConnKind::MatrixFracture)
            .collect();
        assert_eq!(mf.len(), 1);
        rel_eq(mf[0].trans, units::mdm_to_m3(80.0), 1e-9);
        // Storage volume of the fracture control volume is area * aperture.
        rel_eq(disc.volumes[disc.frac_dof(0)], 1.0e-3, 1e-9);
        // Doubling the cut area at fixed distance doubles the exchange.
        rel_eq(
            mf_transmissibility(2.0, 1.0, 0.25).unwrap(),
            2.0 * mf_transmissibility(1.0, 1.0, 0.25).unwrap(),
            1e-15,
        );
        // A fracture normal along a zero-permeability axis exchanges nothing.
        assert_eq!(mf_transmissibility(1.0, 0.0, 0.25).unwrap(), 0.0);
        assert!(mf_transmissibility(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn along_fracture_transmissibility_between_square_cells() {
        // Two 2 m x 2 m fracture control volumes at 20 mD*m conductivity,
        // centroids 1 m from the shared 2 m edge:
        // T = 2 * (20/1 * 20/1)/(20 + 20) = 20 mD*m.
        let grid = StructuredGrid::new(2, 1, 1, 2.0, 2.0, 2.0, point![0.0, 0.0, 0.0]).unwrap();
        let frac = FractureSurface {
            center: point![2.0, 1.0, 1.0],
            strike_deg: 0.0,
            dip_deg: 90.0,
            length: 20.0,
            height: 20.0,
            conductivity: units::mdm_to_m3(20.0),
            aperture: 1.0e-3,
        };
        let fmesh = FractureMesh::build(&grid, vec![frac]).unwrap();
        let k = Vector3::repeat(units::md_to_m2(10.0));
        let disc = build_disc(&grid, &fmesh, &k).unwrap();
        let ff: Vec<_> = disc
            .connections
            .iter()
            .filter(|c| c.kind == ConnKind::FractureAdjacent)
            .collect();
        assert_eq!(ff.len(), 1);
        rel_eq(ff[0].trans, units::mdm_to_m3(20.0), 1e-9);
        // Sealed fracture and argument symmetry.
        assert_eq!(ff_adjacent_transmissibility(2.0, 0.0, 1.0, 0.0, 1.0), 0.0);
        rel_eq(
            ff_adjacent_transmissibility(2.0, 3.0, 0.7, 5.0, 1.3),
            ff_adjacent_transmissibility(2.0, 5.0, 1.3, 3.0, 0.7),
            1e-15,
        );
    }

    #[test]
    fn crossing_transmissibility_in_a_symmetric_cross() {
        // Two orthogonal vertical fractures bisecting a unit cell. Each half
        // segment has centroid distance 0.25 to the crossing line of length
        // 1, so alpha = C * 1/0.25 = 4C. With C = 0.5 all four alphas are 2:
        // each of the four pair terms is 2*2/8 = 0.5, total T = 2.0.
        let grid = StructuredGrid::new(1, 1, 1, 1.0, 1.0, 1.0, point![0.0, 0.0, 0.0]).unwrap();
        let fx = FractureSurface {
            center: point![0.5, 0.5, 0.5],
            strike_deg: 90.0,
            dip_deg: 90.0,
            length: 4.0,
            height: 4.0,
            conductivity: 0.5,
            aperture: 1.0e-3,
        };
        let fy = FractureSurface {
            center: point![0.5, 0.5, 0.5],
            strike_deg: 0.0,
            dip_deg: 90.0,
            length: 4.0,
            height: 4.0,
            conductivity: 0.5,
            aperture: 1.0e-3,
        };
        let k = Vector3::repeat(units::md_to_m2(10.0));

        let fmesh = FractureMesh::build(&grid, vec![fx.clone(), fy.clone()]).unwrap();
        let disc = build_disc(&grid, &fmesh, &k).unwrap();
        let cross: Vec<_> = disc
            .connections
            .iter()
            .filter(|c| c.kind == ConnKind::FractureIntersection)
            .collect();
        assert_eq!(cross.len(), 1);
        rel_eq(cross[0].trans, 2.0, 1e-9);

        // Swapping the fracture order leaves the coupling unchanged.
        let fmesh2 = FractureMesh::build(&grid, vec![fy, fx]).unwrap();
        let disc2 = build_disc(&grid, &fmesh2, &k).unwrap();
        let cross2: Vec<_> = disc2
            .connections
            .iter()
            .filter(|c| c.kind == ConnKind::FractureIntersection)
            .collect();
        rel_eq(cross2[0].trans, cross[0].trans, 1e-12);

        // A sealed fracture kills the crossing flux.
        let segs = |d: f64| [SubSegment { area: 0.5, dist: d }, SubSegment { area: 0.5, dist: d }];
        assert_eq!(
            ff_intersection_transmissibility(0.0, &segs(0.25), 0.5, &segs(0.25), 1.0),
            0.0
        );
    }

    #[test]
    fn all_transmissibilities_are_nonnegative_in_a_network() {
        let grid = StructuredGrid::new(6, 6, 2, 2.0, 2.0, 2.0, point![0.0, 0.0, 0.0]).unwrap();
        let mk = |cx: f64, cy: f64, strike: f64, dip: f64| FractureSurface {
            center: point![cx, cy, 2.0],
            strike_deg: strike,
            dip_deg: dip,
            length: 7.0,
            height: 3.0,
            conductivity: units::mdm_to_m3(20.0),
            aperture: 1.0e-3,
        };
        let fracs = vec![
            mk(4.0, 4.0, 30.0, 90.0),
            mk(7.0, 6.0, 120.0, 80.0),
            mk(6.0, 5.0, 75.0, 85.0),
        ];
        let fmesh = FractureMesh::build(&grid, fracs).unwrap();
        let k = Vector3::repeat(units::md_to_m2(10.0));
        let disc = build_disc(&grid, &fmesh, &k).unwrap();
        assert!(disc.connections.iter().all(|c| c.trans >= 0.0));
        assert!(disc.volumes.iter().all(|&v| v > 0.0));
        assert!(disc
            .connections
            .iter()
            .any(|c| c.kind == ConnKind::FractureIntersection));
    }
}
