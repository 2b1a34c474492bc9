//! Trilinear hexahedral element kernels for axis-aligned box cells. Cells of
//! the same dimensions share one geometry, so strain-displacement matrices
//! are computed once per distinct cell size.

use super::tensor::Stiffness;
use crate::mesh::shape::{gauss_points, shape_ref_gradients, shape_values};
use crate::mesh::StructuredGrid;
use nalgebra::{SMatrix, SVector, Vector3};

pub type BMatrix = SMatrix<f64, 6, 24>;
pub type ElemVector = SVector<f64, 24>;
pub type ElemMatrix = SMatrix<f64, 24, 24>;

/// Per-cell-size element geometry: B matrices at the 2x2x2 Gauss points,
/// their volume average, and the integration factor per point.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub b: [BMatrix; 8],
    pub b_bar: BMatrix,
    /// Shape values at each Gauss point (for distributing cell fields).
    pub n: [[f64; 8]; 8],
    /// weight * |J| for one Gauss point.
    pub w_det: f64,
    pub volume: f64,
}

impl ElementGeometry {
    /// Geometry of a box element with edge lengths `widths`.
    pub fn new(widths: Vector3<f64>) -> Self {
        let scale = Vector3::new(2.0 / widths.x, 2.0 / widths.y, 2.0 / widths.z);
        let det_j = widths.x * widths.y * widths.z / 8.0;
        let mut b = [BMatrix::zeros(); 8];
        let mut n_all = [[0.0; 8]; 8];
        let mut b_bar = BMatrix::zeros();
        for (g, xi) in gauss_points().iter().enumerate() {
            let dn = shape_ref_gradients(xi);
            n_all[g] = shape_values(xi);
            for a in 0..8 {
                let gx = dn[a][0] * scale.x;
                let gy = dn[a][1] * scale.y;
                let gz = dn[a][2] * scale.z;
                let c = 3 * a;
                b[g][(0, c)] = gx;
                b[g][(1, c + 1)] = gy;
                b[g][(2, c + 2)] = gz;
                b[g][(3, c)] = gy;
                b[g][(3, c + 1)] = gx;
                b[g][(4, c + 1)] = gz;
                b[g][(4, c + 2)] = gy;
                b[g][(5, c)] = gz;
                b[g][(5, c + 2)] = gx;
            }
            b_bar += b[g];
        }
        b_bar /= 8.0;
        ElementGeometry {
            b,
            b_bar,
            n: n_all,
            w_det: det_j,
            volume: widths.x * widths.y * widths.z,
        }
    }

    /// Bulk element stiffness: sum of w |J| B^T C B over Gauss points.
    pub fn stiffness(&self, c: &Stiffness) -> ElemMatrix {
        let mut k = ElemMatrix::zeros();
        for b in &self.b {
            k += b.transpose() * c * b * self.w_det;
        }
        k
    }
}

/// Global displacement DOF indices of a cell's 24 element DOFs.
pub fn element_dofs(grid: &StructuredGrid, cell: usize) -> [usize; 24] {
    let nodes = grid.cell_nodes(cell);
    let mut dofs = [0usize; 24];
    for (a, &node) in nodes.iter().enumerate() {
        for c in 0..3 {
            dofs[3 * a + c] = 3 * node + c;
        }
    }
    dofs
}

/// Gather the 24 element displacements from a global vector.
pub fn gather_element(u: &[f64], dofs: &[usize; 24]) -> ElemVector {
    let mut d = ElemVector::zeros();
    for (i, &dof) in dofs.iter().enumerate() {
        d[i] = u[dof];
    }
    d
}
