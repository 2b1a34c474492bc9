//! Assembled fracture discretization over a grid: global fracture control
//! volumes, intra-fracture neighbor connections across cell faces, and
//! fracture-fracture crossing records inside shared cells.

use super::clip::{clip_polygon, polygon_area, polygon_centroid, Plane};
use super::fracture::{embed_fracture, nudged_fracture, FractureCut, FractureSurface};
use super::grid::StructuredGrid;
use crate::Result;
use nalgebra::{Point3, Vector3};
use std::collections::HashMap;
use std::ops::Range;

/// One fracture control volume: a single cell's cut of a single fracture.
#[derive(Debug, Clone)]
pub struct FracCv {
    pub fracture: usize,
    pub cut: FractureCut,
    /// Along-strike coordinate of the cut centroid, from the low-strike tip.
    pub arc: f64,
}

/// Connection between two control volumes of the same fracture through a
/// shared cell face. `d1`/`d2` are in-plane distances from each cut centroid
/// to the shared edge.
#[derive(Debug, Clone)]
pub struct FfConnection {
    pub cv1: usize,
    pub cv2: usize,
    pub l_edge: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Half of a cut polygon on one side of another fracture's plane.
#[derive(Debug, Clone, Copy)]
pub struct SubSegment {
    pub area: f64,
    /// Distance from the sub-polygon centroid to the crossing line.
    pub dist: f64,
}

/// Two fractures crossing inside one cell. Sub-segments are ordered
/// [negative side, positive side] of the other fracture's plane.
#[derive(Debug, Clone)]
pub struct FractureIntersection {
    pub cell: usize,
    pub cv1: usize,
    pub cv2: usize,
    pub l_int: f64,
    pub segs1: [SubSegment; 2],
    pub segs2: [SubSegment; 2],
}

#[derive(Debug)]
pub struct FractureMesh {
    pub fractures: Vec<FractureSurface>,
    pub cvs: Vec<FracCv>,
    /// Contiguous CV id range of each fracture.
    pub cv_range: Vec<Range<usize>>,
    pub connections: Vec<FfConnection>,
    pub intersections: Vec<FractureIntersection>,
    /// Cell id -> CV ids of all fractures cutting that cell.
    pub cell_cvs: HashMap<usize, Vec<usize>>,
}

impl FractureMesh {
    pub fn build(grid: &StructuredGrid, fractures: Vec<FractureSurface>) -> Result<Self> {
        let dist_floor = 1e-6 * grid.min_spacing();
        let tol = 1e-9 * grid.min_spacing();

        let mut cvs: Vec<FracCv> = Vec::new();
        let mut cv_range: Vec<Range<usize>> = Vec::new();
        let mut cell_cvs: HashMap<usize, Vec<usize>> = HashMap::new();
        // Per fracture: cell id -> CV id, for face-neighbor lookups.
        let mut cell_to_cv: Vec<HashMap<usize, usize>> = Vec::new();

        for (fi, frac) in fractures.iter().enumerate() {
            let start = cvs.len();
            let mut map = HashMap::new();
            for cut in embed_fracture(grid, frac)? {
                let id = cvs.len();
                map.insert(cut.cell, id);
                cell_cvs.entry(cut.cell).or_default().push(id);
                let arc = frac.arc_coord(&cut.centroid);
                cvs.push(FracCv {
                    fracture: fi,
                    cut,
                    arc,
                });
            }
            cv_range.push(start..cvs.len());
            cell_to_cv.push(map);
        }

        // Intra-fracture connections: look in +axis directions only so each
        // pair appears once. All geometry uses the same nudged surface the
        // embedding used.
        let nudged: Vec<FractureSurface> =
            fractures.iter().map(|f| nudged_fracture(grid, f)).collect();
        let mut connections = Vec::new();
        for (fi, frac) in nudged.iter().enumerate() {
            let plane = frac.plane();
            for (&cell, &cv1) in &cell_to_cv[fi] {
                for axis in 0..3 {
                    let Some(ncell) = grid.neighbor(cell, axis, 1) else {
                        continue;
                    };
                    let Some(&cv2) = cell_to_cv[fi].get(&ncell) else {
                        continue;
                    };
                    let Some((l_edge, line_p, line_u)) =
                        shared_face_trace(grid, cell, axis, frac, &plane, tol)
                    else {
                        continue;
                    };
                    if l_edge <= tol {
                        continue;
                    }
                    let d1 = point_line_distance(&cvs[cv1].cut.centroid, &line_p, &line_u)
                        .max(dist_floor);
                    let d2 = point_line_distance(&cvs[cv2].cut.centroid, &line_p, &line_u)
                        .max(dist_floor);
                    connections.push(FfConnection {
                        cv1,
                        cv2,
                        l_edge,
                        d1,
                        d2,
                    });
                }
            }
        }
        connections.sort_by_key(|c| (c.cv1, c.cv2));

        // Crossings: fracture pairs sharing a cell.
        let mut intersections = Vec::new();
        for a in 0..nudged.len() {
            for b in (a + 1)..nudged.len() {
                let plane_a = nudged[a].plane();
                let plane_b = nudged[b].plane();
                let mut cells: Vec<usize> = cell_to_cv[a]
                    .keys()
                    .filter(|c| cell_to_cv[b].contains_key(c))
                    .copied()
                    .collect();
                cells.sort_unstable();
                for cell in cells {
                    let cv1 = cell_to_cv[a][&cell];
                    let cv2 = cell_to_cv[b][&cell];
                    let Some((l_int, p0, u)) = crossing_trace(
                        grid,
                        cell,
                        &nudged[a],
                        &plane_a,
                        &nudged[b],
                        &plane_b,
                        tol,
                    ) else {
                        continue;
                    };
                    if l_int <= tol {
                        continue;
                    }
                    let segs1 =
                        split_segments(&cvs[cv1].cut.polygon, &plane_b, &p0, &u, tol, dist_floor);
                    let segs2 =
                        split_segments(&cvs[cv2].cut.polygon, &plane_a, &p0, &u, tol, dist_floor);
                    intersections.push(FractureIntersection {
                        cell,
                        cv1,
                        cv2,
                        l_int,
                        segs1,
                        segs2,
                    });
                }
            }
        }

        for list in cell_cvs.values_mut() {
            list.sort_unstable();
        }

        Ok(FractureMesh {
            fractures,
            cvs,
            cv_range,
            connections,
            intersections,
            cell_cvs,
        })
    }

    pub fn n_cvs(&self) -> usize {
        self.cvs.len()
    }

    /// CV ids of one fracture, in id order.
    pub fn fracture_cvs(&self, fracture: usize) -> Range<usize> {
        self.cv_range[fracture].clone()
    }
}

/// Intersection segment of a fracture with the face between `cell` and its
/// +axis neighbor, clipped to the face rectangle and the fracture rectangle.
/// Returns (length, point on line, unit direction).
fn shared_face_trace(
    grid: &StructuredGrid,
    cell: usize,
    axis: usize,
    frac: &FractureSurface,
    plane: &Plane,
    tol: f64,
) -> Option<(f64, Point3<f64>, Vector3<f64>)> {
    let (_, hi) = grid.cell_bounds(cell);
    let mut e_axis = Vector3::zeros();
    e_axis[axis] = 1.0;

    // Line of intersection of the fracture plane with the face plane.
    let u = plane.normal.cross(&e_axis);
    let un = u.norm();
    if un < 1e-12 {
        return None; // fracture parallel to the face: no crossing
    }
    let u = u / un;
    // Face center as anchor, moved within the face to the fracture plane.
    let (lo, _) = grid.cell_bounds(cell);
    let mut fc = Point3::new(
        0.5 * (lo.x + hi.x),
        0.5 * (lo.y + hi.y),
        0.5 * (lo.z + hi.z),
    );
    fc[axis] = hi[axis];
    let v = e_axis.cross(&u); // in-face, perpendicular to the trace
    let denom = plane.normal.dot(&v);
    if denom.abs() < 1e-14 {
        return None;
    }
    let s = -plane.signed_distance(&fc) / denom;
    let p0 = fc + v * s;

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    // Face rectangle bounds on the two in-face axes.
    for ax in 0..3 {
        if ax == axis {
            continue;
        }
        let mut w = Vector3::zeros();
        w[ax] = 1.0;
        clip_interval(&p0, &u, &w, lo[ax], hi[ax], &mut t_lo, &mut t_hi);
    }
    // Fracture rectangle bounds along strike and dip.
    let c = frac.center;
    let t1 = frac.tau1();
    let t2 = frac.tau2();
    clip_interval(
        &p0,
        &u,
        &t1,
        c.coords.dot(&t1) - 0.5 * frac.length,
        c.coords.dot(&t1) + 0.5 * frac.length,
        &mut t_lo,
        &mut t_hi,
    );
    clip_interval(
        &p0,
        &u,
        &t2,
        c.coords.dot(&t2) - 0.5 * frac.height,
        c.coords.dot(&t2) + 0.5 * frac.height,
        &mut t_lo,
        &mut t_hi,
    );
    if t_hi - t_lo <= tol {
        return None;
    }
    Some((t_hi - t_lo, p0, u))
}

/// Intersection segment of two fracture planes inside one cell, clipped to
/// the cell box and both fracture rectangles.
#[allow(clippy::too_many_arguments)]
fn crossing_trace(
    grid: &StructuredGrid,
    cell: usize,
    fa: &FractureSurface,
    plane_a: &Plane,
    fb: &FractureSurface,
    plane_b: &Plane,
    tol: f64,
) -> Option<(f64, Point3<f64>, Vector3<f64>)> {
    let u = plane_a.normal.cross(&plane_b.normal);
    let un = u.norm();
    if un < 1e-12 {
        return None; // parallel planes
    }
    let u = u / un;
    // Point on both planes: p = c + x*na + y*nb with the two offsets solved
    // from the plane equations.
    let na = plane_a.normal;
    let nb = plane_b.normal;
    let (lo, hi) = grid.cell_bounds(cell);
    let cc = Point3::new(
        0.5 * (lo.x + hi.x),
        0.5 * (lo.y + hi.y),
        0.5 * (lo.z + hi.z),
    );
    let ra = -plane_a.signed_distance(&cc);
    let rb = -plane_b.signed_distance(&cc);
    let nanb = na.dot(&nb);
    let det = 1.0 - nanb * nanb;
    if det.abs() < 1e-14 {
        return None;
    }
    let x = (ra - rb * nanb) / det;
    let y = (rb - ra * nanb) / det;
    let p0 = cc + na * x + nb * y;

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for ax in 0..3 {
        let mut w = Vector3::zeros();
        w[ax] = 1.0;
        clip_interval(&p0, &u, &w, lo[ax], hi[ax], &mut t_lo, &mut t_hi);
    }
    for f in [fa, fb] {
        let t1 = f.tau1();
        let t2 = f.tau2();
        clip_interval(
            &p0,
            &u,
            &t1,
            f.center.coords.dot(&t1) - 0.5 * f.length,
            f.center.coords.dot(&t1) + 0.5 * f.length,
            &mut t_lo,
            &mut t_hi,
        );
        clip_interval(
            &p0,
            &u,
            &t2,
            f.center.coords.dot(&t2) - 0.5 * f.height,
            f.center.coords.dot(&t2) + 0.5 * f.height,
            &mut t_lo,
            &mut t_hi,
        );
    }
    if t_hi - t_lo <= tol {
        return None;
    }
    Some((t_hi - t_lo, p0 + u * t_lo, u))
}

/// Restrict the parameter interval of the line p0 + t*u to lo <= w.p <= hi.
fn clip_interval(
    p0: &Point3<f64>,
    u: &Vector3<f64>,
    w: &Vector3<f64>,
    lo: f64,
    hi: f64,
    t_lo: &mut f64,
    t_hi: &mut f64,
) {
    let a = p0.coords.dot(w);
    let b = u.dot(w);
    if b.abs() < 1e-14 {
        if a < lo || a > hi {
            *t_lo = f64::INFINITY;
            *t_hi = f64::NEG_INFINITY;
        }
        return;
    }
    let (ta, tb) = ((lo - a) / b, (hi - a) / b);
    let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
    *t_lo = t_lo.max(ta);
    *t_hi = t_hi.min(tb);
}

fn point_line_distance(p: &Point3<f64>, line_p: &Point3<f64>, line_u: &Vector3<f64>) -> f64 {
    let r = p - line_p;
    (r - line_u * r.dot(line_u)).norm()
}

/// Split a cut polygon by another plane into its negative/positive halves
/// and measure each half's area and centroid distance to the crossing line.
fn split_segments(
    poly: &[Point3<f64>],
    other: &Plane,
    line_p: &Point3<f64>,
    line_u: &Vector3<f64>,
    tol: f64,
    dist_floor: f64,
) -> [SubSegment; 2] {
    let mut out = [SubSegment {
        area: 0.0,
        dist: 1.0,
    }; 2];
    for (idx, side) in [(-1.0_f64), 1.0].iter().enumerate() {
        let half = clip_polygon(poly, other, *side, tol);
        let area = polygon_area(&half);
        if area > tol * tol {
            let c = polygon_centroid(&half);
            out[idx] = SubSegment {
                area,
                dist: point_line_distance(&c, line_p, line_u).max(dist_floor),
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn frac(center: Point3<f64>, strike: f64, dip: f64, len: f64, h: f64) -> FractureSurface {
        FractureSurface {
            center,
            strike_deg: strike,
            dip_deg: dip,
            length: len,
            height: h,
            conductivity: 1.0,
            aperture: 1e-3,
        }
    }

    #[test]
    fn collinear_cells_form_chain() {
        // Fracture along x through 4 unit cells: 4 CVs, 3 connections of
        // unit edge length, centroid-to-edge distances of half a cell.
        let g = StructuredGrid::new(4, 1, 1, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let f = frac(Point3::new(2.0, 0.5, 0.5), 0.0, 90.0, 4.0, 4.0);
        let fm = FractureMesh::build(&g, vec![f]).unwrap();
        assert_eq!(fm.n_cvs(), 4);
        assert_eq!(fm.connections.len(), 3);
        for c in &fm.connections {
            assert_relative_eq!(c.l_edge, 1.0, max_relative = 1e-9);
            assert_relative_eq!(c.d1, 0.5, max_relative = 1e-6);
            assert_relative_eq!(c.d2, 0.5, max_relative = 1e-6);
        }
        assert!(fm.intersections.is_empty());
        // Arc coordinates walk the strike direction cell by cell.
        let arcs: Vec<f64> = fm.cvs.iter().map(|cv| cv.arc).collect();
        for (i, a) in arcs.iter().enumerate() {
            assert_relative_eq!(*a, 0.5 + i as f64, max_relative = 1e-9);
        }
    }

    #[test]
    fn vertical_extent_connects_layers() {
        // One vertical fracture spanning two z-layers: connection across the
        // horizontal face with edge length = cell size.
        let g = StructuredGrid::new(1, 1, 2, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let f = frac(Point3::new(0.5, 0.5, 1.0), 0.0, 90.0, 4.0, 4.0);
        let fm = FractureMesh::build(&g, vec![f]).unwrap();
        assert_eq!(fm.n_cvs(), 2);
        assert_eq!(fm.connections.len(), 1);
        assert_relative_eq!(fm.connections[0].l_edge, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn orthogonal_cross_in_one_cell() {
        // Two orthogonal vertical fractures crossing at the cell center:
        // one intersection record, symmetric halves on both sides.
        let g = StructuredGrid::new(1, 1, 1, 2.0, 2.0, 2.0, Point3::origin()).unwrap();
        let f1 = frac(Point3::new(1.0, 1.0, 1.0), 0.0, 90.0, 8.0, 8.0);
        let f2 = frac(Point3::new(1.0, 1.0, 1.0), 90.0, 90.0, 8.0, 8.0);
        let fm = FractureMesh::build(&g, vec![f1, f2]).unwrap();
        assert_eq!(fm.n_cvs(), 2);
        assert_eq!(fm.intersections.len(), 1);
        let x = &fm.intersections[0];
        assert_relative_eq!(x.l_int, 2.0, max_relative = 1e-9);
        // Each polygon is a 2x2 square split into 1x2 halves: area 2,
        // centroid 0.5 from the crossing line.
        for seg in x.segs1.iter().chain(x.segs2.iter()) {
            assert_relative_eq!(seg.area, 2.0, max_relative = 1e-9);
            assert_relative_eq!(seg.dist, 0.5, max_relative = 1e-6);
        }
        assert_eq!(fm.cell_cvs[&0], vec![0, 1]);
    }

    #[test]
    fn tee_junction_has_one_empty_side() {
        // Second fracture ends at the first: its polygon lies entirely on
        // one side, so one of its sub-segments stays empty.
        let g = StructuredGrid::new(1, 1, 1, 2.0, 2.0, 2.0, Point3::origin()).unwrap();
        let f1 = frac(Point3::new(1.0, 1.0, 1.0), 0.0, 90.0, 8.0, 8.0);
        // Normal of f2 is +x (strike 90): spans y in [1, 2] only.
        let f2 = frac(Point3::new(1.0, 1.5, 1.0), 90.0, 90.0, 1.0, 8.0);
        let fm = FractureMesh::build(&g, vec![f1, f2]).unwrap();
        assert_eq!(fm.intersections.len(), 1);
        let x = &fm.intersections[0];
        assert_relative_eq!(x.l_int, 2.0, max_relative = 1e-9);
        // f1 (y = 1 plane) is split by f2's x = 1 plane into two halves.
        assert!(x.segs1[0].area > 0.0 && x.segs1[1].area > 0.0);
        // f2 lies entirely on the positive side of f1's plane (y > 1).
        let empty = x.segs2.iter().filter(|s| s.area == 0.0).count();
        assert_eq!(empty, 1);
    }

    #[test]
    fn parallel_fractures_do_not_intersect() {
        let g = StructuredGrid::new(1, 1, 1, 2.0, 2.0, 2.0, Point3::origin()).unwrap();
        let f1 = frac(Point3::new(1.0, 0.7, 1.0), 0.0, 90.0, 8.0, 8.0);
        let f2 = frac(Point3::new(1.0, 1.3, 1.0), 0.0, 90.0, 8.0, 8.0);
        let fm = FractureMesh::build(&g, vec![f1, f2]).unwrap();
        assert_eq!(fm.n_cvs(), 2);
        assert!(fm.intersections.is_empty());
        assert!(fm.connections.is_empty());
    }

    #[test]
    fn bounded_rectangles_must_touch_to_intersect() {
        // Crossing planes but the bounded rectangles stop short of each
        // other: no record.
        let g = StructuredGrid::new(1, 1, 1, 2.0, 2.0, 2.0, Point3::origin()).unwrap();
        let f1 = frac(Point3::new(0.4, 1.0, 1.0), 0.0, 90.0, 0.6, 8.0);
        let f2 = frac(Point3::new(1.6, 1.0, 1.0), 90.0, 90.0, 0.6, 8.0);
        let fm = FractureMesh::build(&g, vec![f1, f2]).unwrap();
        assert_eq!(fm.n_cvs(), 2);
        assert!(fm.intersections.is_empty());
    }

    #[test]
    fn inclined_fracture_chain_is_connected() {
        // A 30-degree strike fracture across a 4x4 grid (kept off grid
        // nodes): every CV reachable from the first through the connection
        // graph.
        let g = StructuredGrid::new(4, 4, 1, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let f = frac(Point3::new(2.0, 1.9, 0.5), 30.0, 90.0, 12.0, 4.0);
        let fm = FractureMesh::build(&g, vec![f]).unwrap();
        assert!(fm.n_cvs() >= 4);
        let n = fm.n_cvs();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for con in &fm.connections {
                for (a, b) in [(con.cv1, con.cv2), (con.cv2, con.cv1)] {
                    if a == c && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "connection graph is disconnected");
    }

    #[test]
    fn dipping_fracture_embeds_and_connects() {
        let g = StructuredGrid::new(3, 3, 3, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let f = frac(Point3::new(1.5, 1.5, 1.5), 20.0, 60.0, 2.5, 2.5);
        let fm = FractureMesh::build(&g, vec![f]).unwrap();
        assert!(fm.n_cvs() > 1);
        assert!(!fm.connections.is_empty());
        for cv in &fm.cvs {
            assert!(cv.cut.area > 0.0);
            assert!(cv.cut.dbar > 0.0);
        }
    }
}
