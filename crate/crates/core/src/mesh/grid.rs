//! Structured hexahedral grid with tensor-product spacing: each axis carries
//! its own monotone node-coordinate array, so grids may be uniform or graded
//! (fine near features, geometrically coarsening away from them) while cells
//! stay axis-aligned boxes indexed (i, j, k).

use crate::{Error, Result};
use nalgebra::{Point3, Vector3};

/// Axis-aligned structured grid. Cells are indexed `i + nx*(j + ny*k)`,
/// nodes `i + (nx+1)*(j + (ny+1)*k)`.
#[derive(Debug, Clone)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Node coordinates per axis; `coords[a]` has `n_a + 1` ascending entries.
    coords: [Vec<f64>; 3],
}

impl StructuredGrid {
    /// Uniform grid: `n` cells of constant spacing per axis from `origin`.
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        dx: f64,
        dy: f64,
        dz: f64,
        origin: Point3<f64>,
    ) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
            return Err(Error::Config(format!(
                "grid spacing must be positive, got ({dx}, {dy}, {dz})"
            )));
        }
        let axis = |n: usize, d: f64, o: f64| -> Vec<f64> {
            (0..=n).map(|i| o + i as f64 * d).collect()
        };
        Self::new_tensor(
            axis(nx, dx, origin.x),
            axis(ny, dy, origin.y),
            axis(nz, dz, origin.z),
        )
    }

    /// Tensor-product grid from explicit node coordinates per axis.
    pub fn new_tensor(xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        for (name, c) in [("x", &xs), ("y", &ys), ("z", &zs)] {
            if c.len() < 2 {
                return Err(Error::Config(format!(
                    "grid must have at least one cell per axis, {name} axis has {} node(s)",
                    c.len()
                )));
            }
            for w in c.windows(2) {
                if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                    return Err(Error::Config(format!(
                        "grid {name}-coordinates must increase strictly, got {} then {}",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(Self {
            nx: xs.len() - 1,
            ny: ys.len() - 1,
            nz: zs.len() - 1,
            coords: [xs, ys, zs],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    /// Node coordinates along `axis` (length `n_axis + 1`).
    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    /// Width of the `idx`-th cell along `axis`.
    pub fn axis_width(&self, axis: usize, idx: usize) -> f64 {
        self.coords[axis][idx + 1] - self.coords[axis][idx]
    }

    /// Cell edge lengths (wx, wy, wz).
    pub fn cell_widths(&self, cell: usize) -> Vector3<f64> {
        let (i, j, k) = self.cell_ijk(cell);
        Vector3::new(
            self.axis_width(0, i),
            self.axis_width(1, j),
            self.axis_width(2, k),
        )
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        let w = self.cell_widths(cell);
        w.x * w.y * w.z
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::new(self.coords[0][0], self.coords[1][0], self.coords[2][0])
    }

    pub fn min_spacing(&self) -> f64 {
        let mut m = f64::INFINITY;
        for c in &self.coords {
            for w in c.windows(2) {
                m = m.min(w[1] - w[0]);
            }
        }
        m
    }

    pub fn cell_id(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny && k < self.nz);
        i + self.nx * (j + self.ny * k)
    }

    pub fn cell_ijk(&self, cell: usize) -> (usize, usize, usize) {
        let i = cell % self.nx;
        let j = (cell / self.nx) % self.ny;
        let k = cell / (self.nx * self.ny);
        (i, j, k)
    }

    pub fn node_id(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny && k <= self.nz);
        i + (self.nx + 1) * (j + (self.ny + 1) * k)
    }

    pub fn node_ijk(&self, node: usize) -> (usize, usize, usize) {
        let npx = self.nx + 1;
        let npy = self.ny + 1;
        (node % npx, (node / npx) % npy, node / (npx * npy))
    }

    pub fn node_coords(&self, node: usize) -> Point3<f64> {
        let (i, j, k) = self.node_ijk(node);
        Point3::new(self.coords[0][i], self.coords[1][j], self.coords[2][k])
    }

    /// Corner nodes of a cell in standard hexahedron order: the four bottom
    /// nodes counterclockwise, then the four top nodes.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let (i, j, k) = self.cell_ijk(cell);
        [
            self.node_id(i, j, k),
            self.node_id(i + 1, j, k),
            self.node_id(i + 1, j + 1, k),
            self.node_id(i, j + 1, k),
            self.node_id(i, j, k + 1),
            self.node_id(i + 1, j, k + 1),
            self.node_id(i + 1, j + 1, k + 1),
            self.node_id(i, j + 1, k + 1),
        ]
    }

    pub fn cell_center(&self, cell: usize) -> Point3<f64> {
        let (i, j, k) = self.cell_ijk(cell);
        Point3::new(
            0.5 * (self.coords[0][i] + self.coords[0][i + 1]),
            0.5 * (self.coords[1][j] + self.coords[1][j + 1]),
            0.5 * (self.coords[2][k] + self.coords[2][k + 1]),
        )
    }

    /// Low and high corners of a cell's bounding box.
    pub fn cell_bounds(&self, cell: usize) -> (Point3<f64>, Point3<f64>) {
        let (i, j, k) = self.cell_ijk(cell);
        (
            Point3::new(self.coords[0][i], self.coords[1][j], self.coords[2][k]),
            Point3::new(
                self.coords[0][i + 1],
                self.coords[1][j + 1],
                self.coords[2][k + 1],
            ),
        )
    }

    /// Neighbor cell across the face in `axis` direction (`dir` = -1 or +1),
    /// or None at the domain boundary.
    pub fn neighbor(&self, cell: usize, axis: usize, dir: i64) -> Option<usize> {
        let (i, j, k) = self.cell_ijk(cell);
        let mut c = [i as i64, j as i64, k as i64];
        c[axis] += dir;
        let n = [self.nx as i64, self.ny as i64, self.nz as i64];
        if c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] >= n[0] || c[1] >= n[1] || c[2] >= n[2] {
            return None;
        }
        Some(self.cell_id(c[0] as usize, c[1] as usize, c[2] as usize))
    }

    /// Area of the face of `cell` normal to `axis` (equal for both cells
    /// sharing the face on a tensor-product grid).
    pub fn face_area(&self, cell: usize, axis: usize) -> f64 {
        let w = self.cell_widths(cell);
        match axis {
            0 => w.y * w.z,
            1 => w.x * w.z,
            2 => w.x * w.y,
            _ => panic!("axis out of range"),
        }
    }

    /// Domain extent.
    pub fn extent(&self) -> Vector3<f64> {
        Vector3::new(
            self.coords[0][self.nx] - self.coords[0][0],
            self.coords[1][self.ny] - self.coords[1][0],
            self.coords[2][self.nz] - self.coords[2][0],
        )
    }

    /// Index of the cell interval containing `x` along `axis`: the unique `i`
    /// with `coords[i] <= x < coords[i+1]`, clamped to the grid at the far
    /// boundary; None outside the domain.
    pub fn axis_cell_of(&self, axis: usize, x: f64) -> Option<usize> {
        let c = &self.coords[axis];
        let n = c.len() - 1;
        if x < c[0] || x > c[n] {
            return None;
        }
        let i = c.partition_point(|&v| v <= x);
        Some(i.saturating_sub(1).min(n - 1))
    }

    /// Cell index ranges (inclusive lo, exclusive hi per axis) overlapping an
    /// axis-aligned bounding box, clamped to the grid.
    pub fn cells_overlapping(
        &self,
        lo: Point3<f64>,
        hi: Point3<f64>,
    ) -> ([usize; 3], [usize; 3]) {
        let mut lo_idx = [0usize; 3];
        let mut hi_idx = [0usize; 3];
        for a in 0..3 {
            let c = &self.coords[a];
            let n = c.len() - 1;
            // First cell whose upper node exceeds lo; one past the last cell
            // whose lower node is below hi.
            lo_idx[a] = c[1..].partition_point(|&v| v <= lo[a]).min(n);
            hi_idx[a] = c[..n].partition_point(|&v| v < hi[a]).min(n);
            if hi_idx[a] < lo_idx[a] {
                hi_idx[a] = lo_idx[a];
            }
        }
        (lo_idx, hi_idx)
    }
}

/// Node coordinates of one axis that is uniformly fine over
/// `[fine_lo, fine_hi]` and coarsens geometrically toward `start` and `end`.
///
/// `fine_lo`/`fine_hi` always land exactly on nodes; the fine spacing is
/// shrunk (never grown) so it divides the fine interval evenly. Outside the
/// band the widths grow by `ratio` per cell up to `h_max`; the outermost cell
/// absorbs the remainder (merged with its neighbor when it would be thinner
/// than 40% of it).
pub fn graded_axis(
    start: f64,
    end: f64,
    fine_lo: f64,
    fine_hi: f64,
    h_fine: f64,
    ratio: f64,
    h_max: f64,
) -> Result<Vec<f64>> {
    if !(start <= fine_lo && fine_lo < fine_hi && fine_hi <= end) {
        return Err(Error::Config(format!(
            "graded axis needs start <= fine_lo < fine_hi <= end, got \
             {start}, {fine_lo}, {fine_hi}, {end}"
        )));
    }
    if !(h_fine > 0.0) || !(ratio >= 1.0) || !(h_max >= h_fine) {
        return Err(Error::Config(format!(
            "graded axis needs h_fine > 0, ratio >= 1, h_max >= h_fine, got \
             {h_fine}, {ratio}, {h_max}"
        )));
    }
    let n_fine = ((fine_hi - fine_lo) / h_fine - 1e-9).ceil().max(1.0) as usize;
    let h = (fine_hi - fine_lo) / n_fine as f64;

    // Widths marching outward from the band edge until `target` is covered.
    let march = |gap: f64| -> Vec<f64> {
        let mut widths = Vec::new();
        let mut w = h;
        let mut covered = 0.0;
        while covered < gap - 1e-12 * gap.max(1.0) {
            w = (w * ratio).min(h_max);
            let remaining = gap - covered;
            if remaining <= w * (1.0 + 1e-9) {
                if remaining < 0.4 * w && !widths.is_empty() {
                    *widths.last_mut().unwrap() += remaining;
                } else {
                    widths.push(remaining);
                }
                break;
            }
            widths.push(w);
            covered += w;
        }
        widths
    };

    let mut nodes = Vec::new();
    let left = march(fine_lo - start);
    nodes.push(start);
    let mut x = start;
    for w in left.iter().rev() {
        x += w;
        nodes.push(x);
    }
    // Snap the band edge exactly (it is `start` itself when the left margin
    // is empty, and the rounded cumulative sum otherwise).
    *nodes.last_mut().unwrap() = fine_lo;
    for i in 1..=n_fine {
        nodes.push(fine_lo + i as f64 * h);
    }
    *nodes.last_mut().unwrap() = fine_hi;
    let mut x = fine_hi;
    for w in march(end - fine_hi) {
        x += w;
        nodes.push(x);
    }
    *nodes.last_mut().unwrap() = end;
    // Deduplicate nodes that collapsed onto the band edges.
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (a.abs() + b.abs()).max(1.0));
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cell_volume_matches_hand_value() {
        // 100 x 100 x 1 cells over a 200 x 200 x 10 m box: cells are 2 x 2 x 10 m.
        let g = StructuredGrid::new(100, 100, 1, 2.0, 2.0, 10.0, Point3::origin()).unwrap();
        assert_eq!(g.n_cells(), 10_000);
        assert_eq!(g.cell_volume(0), 40.0);
        assert_eq!(g.n_nodes(), 101 * 101 * 2);
    }

    #[test]
    fn zero_cell_count_rejected() {
        assert!(StructuredGrid::new(0, 10, 1, 1.0, 1.0, 1.0, Point3::origin()).is_err());
        assert!(StructuredGrid::new_tensor(vec![0.0], vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(
            StructuredGrid::new_tensor(vec![0.0, 1.0, 0.5], vec![0.0, 1.0], vec![0.0, 1.0])
                .is_err()
        );
    }

    #[test]
    fn indexing_round_trips() {
        let g = StructuredGrid::new(4, 3, 2, 1.0, 2.0, 3.0, Point3::new(1.0, 2.0, 3.0)).unwrap();
        for c in 0..g.n_cells() {
            let (i, j, k) = g.cell_ijk(c);
            assert_eq!(g.cell_id(i, j, k), c);
        }
        let c = g.cell_id(2, 1, 1);
        assert_eq!(g.cell_center(c), Point3::new(1.0 + 2.5, 2.0 + 3.0, 3.0 + 4.5));
        assert_eq!(g.neighbor(c, 0, 1), Some(g.cell_id(3, 1, 1)));
        assert_eq!(g.neighbor(g.cell_id(3, 1, 1), 0, 1), None);
    }

    #[test]
    fn cell_nodes_form_unit_box_corners() {
        let g = StructuredGrid::new(1, 1, 1, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let nodes = g.cell_nodes(0);
        let p: Vec<Point3<f64>> = nodes.iter().map(|&n| g.node_coords(n)).collect();
        assert_eq!(p[0], Point3::new(0.0, 0.0, 0.0));
        assert_eq!(p[1], Point3::new(1.0, 0.0, 0.0));
        assert_eq!(p[2], Point3::new(1.0, 1.0, 0.0));
        assert_eq!(p[3], Point3::new(0.0, 1.0, 0.0));
        assert_eq!(p[6], Point3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn tensor_grid_reports_per_cell_geometry() {
        let g = StructuredGrid::new_tensor(
            vec![0.0, 1.0, 3.0, 6.0],
            vec![0.0, 2.0],
            vec![0.0, 0.5, 1.0],
        )
        .unwrap();
        assert_eq!((g.nx, g.ny, g.nz), (3, 1, 2));
        assert_eq!(g.cell_volume(g.cell_id(1, 0, 0)), 2.0 * 2.0 * 0.5);
        assert_eq!(g.cell_widths(g.cell_id(2, 0, 1)), Vector3::new(3.0, 2.0, 0.5));
        assert_eq!(g.face_area(g.cell_id(2, 0, 1), 0), 2.0 * 0.5);
        assert_eq!(g.cell_center(g.cell_id(1, 0, 0)), Point3::new(2.0, 1.0, 0.25));
        let (lo, hi) = g.cell_bounds(g.cell_id(2, 0, 1));
        assert_eq!(lo, Point3::new(3.0, 0.0, 0.5));
        assert_eq!(hi, Point3::new(6.0, 2.0, 1.0));
        assert_eq!(g.min_spacing(), 0.5);
        assert_eq!(g.extent(), Vector3::new(6.0, 2.0, 1.0));
        assert_eq!(g.axis_cell_of(0, 0.5), Some(0));
        assert_eq!(g.axis_cell_of(0, 1.0), Some(1));
        assert_eq!(g.axis_cell_of(0, 6.0), Some(2));
        assert_eq!(g.axis_cell_of(0, 6.1), None);
        assert_eq!(g.axis_cell_of(0, -0.1), None);
    }

    #[test]
    fn overlap_ranges_respect_tensor_spacing() {
        let g = StructuredGrid::new_tensor(
            vec![0.0, 1.0, 3.0, 6.0, 10.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        let (lo, hi) = g.cells_overlapping(Point3::new(2.0, 0.2, 0.2), Point3::new(5.0, 0.8, 0.8));
        assert_eq!(lo[0], 1);
        assert_eq!(hi[0], 3);
        // Touching a node exactly does not pull in the far cell.
        let (lo, hi) = g.cells_overlapping(Point3::new(3.0, 0.0, 0.0), Point3::new(3.0, 1.0, 1.0));
        assert_eq!(lo[0], 2);
        assert_eq!(hi[0], 2);
    }

    #[test]
    fn graded_axis_is_fine_inside_and_coarsens_outside() {
        let nodes = graded_axis(0.0, 200.0, 95.0, 105.0, 0.625, 1.3, 10.0).unwrap();
        // Strictly increasing, exact endpoints, band nodes exact.
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 200.0);
        for w in nodes.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(nodes.iter().any(|&x| x == 95.0));
        assert!(nodes.iter().any(|&x| x == 105.0));
        let i95 = nodes.iter().position(|&x| x == 95.0).unwrap();
        let i105 = nodes.iter().position(|&x| x == 105.0).unwrap();
        assert_eq!(i105 - i95, 16);
        for w in nodes[i95..=i105].windows(2) {
            assert_relative_eq!(w[1] - w[0], 0.625, max_relative = 1e-12);
        }
        // Growth bounded by the ratio (with slack for the remainder merge),
        // width bounded by h_max.
        for w in nodes.windows(3) {
            let w0 = w[1] - w[0];
            let w1 = w[2] - w[1];
            let growth = (w1 / w0).max(w0 / w1);
            assert!(growth <= 1.3 * 1.5 + 1e-9, "growth {growth}");
        }
        for w in nodes.windows(2) {
            assert!(w[1] - w[0] <= 10.0 * 1.5);
        }
        // Far cheaper than uniform: well under 100 cells for this axis.
        assert!(nodes.len() < 60, "graded axis has {} nodes", nodes.len());
    }

    #[test]
    fn graded_axis_without_margins_is_uniform() {
        let nodes = graded_axis(0.0, 10.0, 0.0, 10.0, 2.5, 1.3, 10.0).unwrap();
        assert_eq!(nodes, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn graded_axis_rejects_bad_bands() {
        assert!(graded_axis(0.0, 10.0, -1.0, 5.0, 1.0, 1.3, 5.0).is_err());
        assert!(graded_axis(0.0, 10.0, 6.0, 5.0, 1.0, 1.3, 5.0).is_err());
        assert!(graded_axis(0.0, 10.0, 2.0, 5.0, 0.0, 1.3, 5.0).is_err());
        assert!(graded_axis(0.0, 10.0, 2.0, 5.0, 1.0, 0.9, 5.0).is_err());
    }
}
