//! Plane/box clipping primitives: cross-section polygons, bounded-rectangle
//! cuts and the volumes and centroids of the two sub-polyhedra a plane cuts
//! a hexahedral cell into.

use nalgebra::{Point3, Vector3};

/// Oriented plane n . x = d with unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub d: f64,
}

impl Plane {
    pub fn new(normal: Vector3<f64>, point: Point3<f64>) -> Self {
        let n = normal.normalize();
        Self {
            normal: n,
            d: n.dot(&point.coords),
        }
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.d
    }
}

/// Clip a convex polygon against the half-space `side * signed_distance >= 0`.
/// `tol` treats near-plane vertices as on the plane (kept, not duplicated).
pub fn clip_polygon(
    poly: &[Point3<f64>],
    plane: &Plane,
    side: f64,
    tol: f64,
) -> Vec<Point3<f64>> {
    if poly.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<Point3<f64>> = Vec::with_capacity(poly.len() + 2);
    let dist: Vec<f64> = poly
        .iter()
        .map(|p| side * plane.signed_distance(p))
        .collect();
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let (di, dj) = (dist[i], dist[j]);
        if di >= -tol {
            out.push(poly[i]);
        }
        // Edge crosses the plane strictly: insert the intersection point.
        if (di > tol && dj < -tol) || (di < -tol && dj > tol) {
            let t = di / (di - dj);
            out.push(poly[i] + (poly[j] - poly[i]) * t);
        }
    }
    dedup_ring(&mut out, tol);
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Remove consecutive duplicate vertices (cyclically) within `tol`.
pub fn dedup_ring(poly: &mut Vec<Point3<f64>>, tol: f64) {
    if poly.len() < 2 {
        return;
    }
    let mut cleaned: Vec<Point3<f64>> = Vec::with_capacity(poly.len());
    for p in poly.iter() {
        if cleaned
            .last()
            .is_none_or(|q: &Point3<f64>| (p - q).norm() > tol)
        {
            cleaned.push(*p);
        }
    }
    while cleaned.len() > 1 && (cleaned[0] - cleaned[cleaned.len() - 1]).norm() <= tol {
        cleaned.pop();
    }
    *poly = cleaned;
}

/// Area of a planar convex polygon.
pub fn polygon_area(poly: &[Point3<f64>]) -> f64 {
    polygon_area_vector(poly).norm()
}

/// Half the sum of cross products: a vector normal to the polygon whose
/// length is the area.
pub fn polygon_area_vector(poly: &[Point3<f64>]) -> Vector3<f64> {
    if poly.len() < 3 {
        return Vector3::zeros();
    }
    let mut s = Vector3::zeros();
    for i in 1..poly.len() - 1 {
        s += (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0]));
    }
    s * 0.5
}

/// Area centroid of a planar convex polygon.
pub fn polygon_centroid(poly: &[Point3<f64>]) -> Point3<f64> {
    assert!(poly.len() >= 3, "degenerate polygon");
    let mut area2 = 0.0;
    let mut c = Vector3::zeros();
    for i in 1..poly.len() - 1 {
        let a2 = (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0])).norm();
        area2 += a2;
        c += (poly[0].coords + poly[i].coords + poly[i + 1].coords) * (a2 / 3.0);
    }
    if area2 == 0.0 {
        // Collinear ring: fall back to the vertex mean.
        let mut m = Vector3::zeros();
        for p in poly {
            m += p.coords;
        }
        return Point3::from(m / poly.len() as f64);
    }
    Point3::from(c / area2)
}

/// Clip a polygon to an axis-aligned box (six half-space clips).
pub fn clip_polygon_to_box(
    poly: &[Point3<f64>],
    lo: Point3<f64>,
    hi: Point3<f64>,
    tol: f64,
) -> Vec<Point3<f64>> {
    let mut cur = poly.to_vec();
    for axis in 0..3 {
        let mut n = Vector3::zeros();
        n[axis] = 1.0;
        let p_lo = Plane { normal: n, d: lo[axis] };
        cur = clip_polygon(&cur, &p_lo, 1.0, tol);
        if cur.is_empty() {
            return cur;
        }
        let p_hi = Plane { normal: n, d: hi[axis] };
        cur = clip_polygon(&cur, &p_hi, -1.0, tol);
        if cur.is_empty() {
            return cur;
        }
    }
    cur
}

/// Full cross-section polygon of a plane through a box (unbounded plane).
pub fn box_cross_section(
    lo: Point3<f64>,
    hi: Point3<f64>,
    plane: &Plane,
    tol: f64,
) -> Vec<Point3<f64>> {
    // A genuine section needs corners strictly on both sides; a plane
    // tangent to a face, edge, or corner does not cut the box.
    let mut neg = false;
    let mut pos = false;
    for i in 0..8 {
        let p = Point3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        );
        let d = plane.signed_distance(&p);
        neg |= d < -tol;
        pos |= d > tol;
    }
    if !(neg && pos) {
        return Vec::new();
    }
    // Start from a plane rectangle comfortably larger than the box and clip.
    let center = Point3::from((lo.coords + hi.coords) * 0.5);
    let proj = center + (-plane.signed_distance(&center)) * plane.normal;
    let diag = (hi - lo).norm();
    let (t1, t2) = plane_tangents(&plane.normal);
    let r = 2.0 * diag;
    let rect = [
        proj + (t1 * r + t2 * r),
        proj + (t1 * -r + t2 * r),
        proj + (t1 * -r + t2 * -r),
        proj + (t1 * r + t2 * -r),
    ];
    clip_polygon_to_box(&rect, lo, hi, tol)
}

/// Any orthonormal tangent pair for a unit normal.
pub fn plane_tangents(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let t1 = n.cross(&helper).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Volumes and centroids of the sub-polyhedra on the negative and positive
/// side of `plane` through the box. Returns (v_neg, c_neg, v_pos, c_pos).
/// A non-cutting plane yields a zero volume (centroid = box center) on the
/// empty side.
pub fn split_box_by_plane(
    lo: Point3<f64>,
    hi: Point3<f64>,
    plane: &Plane,
    tol: f64,
) -> (f64, Point3<f64>, f64, Point3<f64>) {
    let box_center = Point3::from((lo.coords + hi.coords) * 0.5);
    let section = box_cross_section(lo, hi, plane, tol);
    let v0 = (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    if section.len() < 3 || polygon_area(&section) < tol * tol {
        // Entire box on one side.
        if plane.signed_distance(&box_center) >= 0.0 {
            return (0.0, box_center, v0, box_center);
        }
        return (v0, box_center, 0.0, box_center);
    }

    let (v_neg, c_neg) = clipped_box_volume(lo, hi, plane, -1.0, &section, tol);
    let (v_pos, c_pos) = clipped_box_volume(lo, hi, plane, 1.0, &section, tol);
    (v_neg, c_neg, v_pos, c_pos)
}

/// Volume/centroid of the part of the box with `side * signed_distance >= 0`.
/// `section` is the cross-section polygon used as the cap face.
fn clipped_box_volume(
    lo: Point3<f64>,
    hi: Point3<f64>,
    plane: &Plane,
    side: f64,
    section: &[Point3<f64>],
    tol: f64,
) -> (f64, Point3<f64>) {
    // Outward-oriented box faces.
    let v = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    let faces: [[Point3<f64>; 4]; 6] = [
        // -x
        [v(lo.x, lo.y, lo.z), v(lo.x, lo.y, hi.z), v(lo.x, hi.y, hi.z), v(lo.x, hi.y, lo.z)],
        // +x
        [v(hi.x, lo.y, lo.z), v(hi.x, hi.y, lo.z), v(hi.x, hi.y, hi.z), v(hi.x, lo.y, hi.z)],
        // -y
        [v(lo.x, lo.y, lo.z), v(hi.x, lo.y, lo.z), v(hi.x, lo.y, hi.z), v(lo.x, lo.y, hi.z)],
        // +y
        [v(lo.x, hi.y, lo.z), v(lo.x, hi.y, hi.z), v(hi.x, hi.y, hi.z), v(hi.x, hi.y, lo.z)],
        // -z
        [v(lo.x, lo.y, lo.z), v(lo.x, hi.y, lo.z), v(hi.x, hi.y, lo.z), v(hi.x, lo.y, lo.z)],
        // +z
        [v(lo.x, lo.y, hi.z), v(hi.x, lo.y, hi.z), v(hi.x, hi.y, hi.z), v(lo.x, hi.y, hi.z)],
    ];

    // Divergence-theorem accumulation over outward-oriented faces:
    // V = sum tet(origin, tri) signed volumes; centroid from tet centroids.
    let origin = Point3::from((lo.coords + hi.coords) * 0.5);
    let mut vol = 0.0;
    let mut cmom = Vector3::zeros();
    let mut add_face = |poly: &[Point3<f64>]| {
        for i in 1..poly.len().saturating_sub(1) {
            let a = poly[0] - origin;
            let b = poly[i] - origin;
            let c = poly[i + 1] - origin;
            let v6 = a.cross(&b).dot(&c);
            vol += v6 / 6.0;
            let tet_centroid = origin.coords + (a + b + c) / 4.0;
            cmom += tet_centroid * (v6 / 6.0);
        }
    };

    for f in &faces {
        let clipped = clip_polygon(f, plane, side, tol);
        if clipped.len() >= 3 {
            add_face(&clipped);
        }
    }
    // Cap face: the cross-section, oriented so its normal points outward,
    // i.e. opposite to the kept side.
    let mut cap = section.to_vec();
    let cap_n = polygon_area_vector(&cap);
    let outward = plane.normal * (-side);
    if cap_n.dot(&outward) < 0.0 {
        cap.reverse();
    }
    add_face(&cap);

    if vol <= 0.0 {
        return (0.0, origin);
    }
    (vol, Point3::from(cmom / vol))
}
