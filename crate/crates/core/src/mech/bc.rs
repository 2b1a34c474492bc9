//! Displacement constraints, face tractions, and the free-DOF reduction used
//! by the mechanics and coupled solvers.

use crate::linalg::CsrMatrix;
use crate::mesh::StructuredGrid;
use crate::{Error, Result};
use std::collections::HashMap;

/// Map between full displacement DOFs and the reduced free set.
///
/// The state vector keeps its full length; constrained entries hold their
/// prescribed values, and the reduced system is assembled and solved over the
/// free entries only.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub full_to_free: Vec<Option<usize>>,
    pub free_to_full: Vec<usize>,
    /// Prescribed value of every constrained full DOF (0 elsewhere).
    pub values: Vec<f64>,
}

impl DofMap {
    /// Build from a list of (node, component, prescribed value) constraints.
    pub fn new(n_nodes: usize, constraints: &[(usize, usize, f64)]) -> Result<Self> {
        let n = 3 * n_nodes;
        let mut fixed: HashMap<usize, f64> = HashMap::new();
        for &(node, comp, value) in constraints {
            if node >= n_nodes || comp >= 3 {
                return Err(Error::Config(format!(
                    "constraint on node {node} component {comp} is out of range"
                )));
            }
            let dof = 3 * node + comp;
            if let Some(&old) = fixed.get(&dof) {
                if old != value {
                    return Err(Error::Config(format!(
                        "conflicting constraints on node {node} component {comp}"
                    )));
                }
            }
            fixed.insert(dof, value);
        }
        let mut full_to_free = vec![None; n];
        let mut free_to_full = Vec::with_capacity(n - fixed.len());
        let mut values = vec![0.0; n];
        for dof in 0..n {
            if let Some(&v) = fixed.get(&dof) {
                values[dof] = v;
            } else {
                full_to_free[dof] = Some(free_to_full.len());
                free_to_full.push(dof);
            }
        }
        Ok(DofMap {
            full_to_free,
            free_to_full,
            values,
        })
    }

    pub fn n_free(&self) -> usize {
        self.free_to_full.len()
    }

    pub fn n_full(&self) -> usize {
        self.full_to_free.len()
    }

    /// Full-length vector with prescribed values set and free entries taken
    /// from `free`.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        debug_assert_eq!(free.len(), self.n_free());
        let mut full = self.values.clone();
        for (i, &dof) in self.free_to_full.iter().enumerate() {
            full[dof] = free[i];
        }
        full
    }

    /// Gather the free entries of a full-length vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_full.iter().map(|&d| full[d]).collect()
    }
}

/// Node ids on one face of the grid (axis 0/1/2, side 0 = min, 1 = max).
pub fn nodes_on_face(grid: &StructuredGrid, axis: usize, side: usize) -> Vec<usize> {
    let counts = [grid.nx + 1, grid.ny + 1, grid.nz + 1];
    let fixed = if side == 0 { 0 } else { counts[axis] - 1 };
    let mut out = Vec::new();
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let idx = [i, j, k];
                if idx[axis] == fixed {
                    out.push(grid.node_id(i, j, k));
                }
            }
        }
    }
    out
}

/// Uniform traction applied to one exterior face of the grid.
#[derive(Debug, Clone, Copy)]
pub struct FaceTraction {
    pub axis: usize,
    pub side: usize,
    /// Traction vector, Pa (force per area acting on the face).
    pub traction: [f64; 3],
}

/// Consistent nodal forces of uniform tractions on grid faces. For bilinear
/// faces each of the four corner nodes of a face element takes a quarter of
/// the face force.
pub fn traction_loads(grid: &StructuredGrid, tractions: &[FaceTraction]) -> Vec<f64> {
    let mut f = vec![0.0; 3 * grid.n_nodes()];
    for t in tractions {
        let (a1, a2) = match t.axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let counts = [grid.nx, grid.ny, grid.nz];
        let fixed_node = if t.side == 0 { 0 } else { counts[t.axis] };
        // Iterate face elements (cells on the face) and spread the force.
        for c2 in 0..counts[a2] {
            for c1 in 0..counts[a1] {
                let face_area = grid.axis_width(a1, c1) * grid.axis_width(a2, c2);
                let mut idx = [0usize; 3];
                idx[t.axis] = fixed_node;
                // Four corner nodes of this face element.
                for (d1, d2) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    idx[a1] = c1 + d1;
                    idx[a2] = c2 + d2;
                    let node = grid.node_id(idx[0], idx[1], idx[2]);
                    for comp in 0..3 {
                        f[3 * node + comp] += 0.25 * face_area * t.traction[comp];
                    }
                }
            }
        }
    }
    f
}

/// Sparsity pattern of the reduced displacement stiffness: free DOF rows with
/// the 27-node neighborhood stencil, columns sorted.
pub fn displacement_pattern(grid: &StructuredGrid, dofs: &DofMap) -> Result<CsrMatrix> {
    let n_free = dofs.n_free();
    let counts = [grid.nx + 1, grid.ny + 1, grid.nz + 1];
    let mut row_ptr = Vec::with_capacity(n_free + 1);
    row_ptr.push(0usize);
    let mut col_idx: Vec<usize> = Vec::new();
    for &full in &dofs.free_to_full {
        let node = full / 3;
        let (i, j, k) = grid.node_ijk(node);
        // Neighbor nodes in the 27-stencil, ascending node id order, then
        // component — full DOF order is monotone in (node, comp), and the
        // free indices preserve that order.
        for dk in -1i64..=1 {
            let kk = k as i64 + dk;
            if kk < 0 || kk >= counts[2] as i64 {
                continue;
            }
            for dj in -1i64..=1 {
                let jj = j as i64 + dj;
                if jj < 0 || jj >= counts[1] as i64 {
                    continue;
                }
                for di in -1i64..=1 {
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= counts[0] as i64 {
                        continue;
                    }
                    let nb = grid.node_id(ii as usize, jj as usize, kk as usize);
                    for comp in 0..3 {
                        if let Some(free) = dofs.full_to_free[3 * nb + comp] {
                            col_idx.push(free);
                        }
                    }
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_pattern(n_free, row_ptr, col_idx)
}
