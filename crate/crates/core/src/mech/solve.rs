//! Quasi-static mechanics solve: Newton iteration on the displacement system
//! with the fracture contact states resolved pointwise inside each cut cell.

use super::bc::{displacement_pattern, DofMap};
use super::contact::{FracPointState, FracStatus};
use super::element::{element_dofs, gather_element, ElemVector};
use super::model::{ElementEval, MechProblem};
use crate::linalg::{CsrMatrix, LinearSolver, SolveOptions};
use crate::mesh::StructuredGrid;
use crate::{Error, Result};
use nalgebra::Vector3;

#[derive(Debug, Clone)]
pub struct MechSolveSettings {
    pub max_iterations: usize,
    /// Convergence: residual infinity norm relative to the load scale.
    pub tol: f64,
    /// Keep every fracture point stuck at its previous jump (used for the
    /// initial equilibrium solve before contact states are known).
    pub frozen_contact: bool,
    pub solve: SolveOptions,
}

impl Default for MechSolveSettings {
    fn default() -> Self {
        MechSolveSettings {
            max_iterations: 60,
            tol: 1e-9,
            frozen_contact: false,
            solve: SolveOptions::default(),
        }
    }
}

/// Converged displacement field and per-control-volume fracture quantities.
#[derive(Debug, Clone)]
pub struct MechSolution {
    /// Full-length displacement vector (prescribed entries included).
    pub u: Vec<f64>,
    pub statuses: Vec<FracStatus>,
    /// Displacement jumps per control volume, frame components (n, t1, t2).
    pub jumps: Vec<Vector3<f64>>,
    /// Contact tractions per control volume, frame components.
    pub tractions: Vec<Vector3<f64>>,
    /// Updated internal states (jump, hardening) per control volume.
    pub states: Vec<FracPointState>,
    pub iterations: usize,
}

/// Assemble the internal-force residual and tangent over the free DOFs and
/// return the per-cut-cell evaluations.
pub struct Assembly {
    pub residual_free: Vec<f64>,
    pub evals: Vec<ElementEval>,
}

pub fn assemble_mechanics(
    prob: &MechProblem,
    grid: &StructuredGrid,
    dofs: &DofMap,
    u: &[f64],
    f_ext: &[f64],
    p_m: &[f64],
    p_f: &[f64],
    states: &[FracPointState],
    frozen: bool,
    jacobian: Option<&mut CsrMatrix>,
) -> Result<Assembly> {
    let mut r_full = vec![0.0; prob.n_dofs];
    let mut evals = Vec::with_capacity(prob.cut_cells.len());
    let mut jac = jacobian;
    // Bulk contribution of every element; cut elements get their enriched
    // stiffness instead.
    for cell in 0..grid.n_cells() {
        let dofs_e = element_dofs(grid, cell);
        let d = gather_element(u, &dofs_e);
        let pm = p_m.get(cell).copied().unwrap_or(0.0);
        if let Some(&cc) = prob.cut_cell_of.get(&cell) {
            let cut_cell = &prob.cut_cells[cc];
            let (f_e, k_e) = if frozen {
                // Contact frozen: jump fixed at its previous value.
                let cl = prob.class(cell);
                let mut f = cl.k_bulk * d - cl.v_int * (prob.biot * pm);
                for cut in &cut_cell.cuts {
                    let jump_g = cut.rot.transpose() * states[cut.cv].jump;
                    f -= cut.m_e * jump_g;
                }
                (f, cl.k_bulk)
            } else {
                let pf_local: Vec<f64> = cut_cell.cuts.iter().map(|c| p_f[c.cv]).collect();
                let prev_local: Vec<FracPointState> =
                    cut_cell.cuts.iter().map(|c| states[c.cv]).collect();
                let eval = prob.eval_cut_element(cut_cell, &d, pm, &pf_local, &prev_local)?;
                let out = (eval.f_int, eval.k_uu);
                evals.push(eval);
                out
            };
            scatter_forces(&mut r_full, &dofs_e, &f_e);
            if let Some(j) = jac.as_deref_mut() {
                scatter_matrix(j, dofs, &dofs_e, &k_e);
            }
        } else {
            let f_e = prob.plain_internal_force(cell, &d, pm);
            scatter_forces(&mut r_full, &dofs_e, &f_e);
            if let Some(j) = jac.as_deref_mut() {
                scatter_matrix(j, dofs, &dofs_e, &prob.class(cell).k_bulk);
            }
        }
    }
    for (i, f) in f_ext.iter().enumerate() {
        r_full[i] -= f;
    }
    Ok(Assembly {
        residual_free: dofs.restrict(&r_full),
        evals,
    })
}

fn scatter_forces(r: &mut [f64], dofs_e: &[usize; 24], f_e: &ElemVector) {
    for (i, &dof) in dofs_e.iter().enumerate() {
        r[dof] += f_e[i];
    }
}

fn scatter_matrix(
    jac: &mut CsrMatrix,
    dofs: &DofMap,
    dofs_e: &[usize; 24],
    k_e: &nalgebra::SMatrix<f64, 24, 24>,
) {
    for (i, &di) in dofs_e.iter().enumerate() {
        let Some(fi) = dofs.full_to_free[di] else {
            continue;
        };
        for (j, &dj) in dofs_e.iter().enumerate() {
            if let Some(fj) = dofs.full_to_free[dj] {
                jac.add_at(fi, fj, k_e[(i, j)]);
            }
        }
    }
}

/// Characteristic force for the convergence test: the largest nodal external
/// force, or an elastic fallback when the load is displacement-driven.
fn load_scale(prob: &MechProblem, grid: &StructuredGrid, f_ext: &[f64]) -> f64 {
    let fmax = f_ext.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let h = grid.min_spacing();
    fmax.max(1e-9 * prob.mu * h * h)
}

/// Solve the displacement equilibrium for fixed pressures. `states` holds the
/// previous converged contact states per control volume and is not modified;
/// the updated states are returned in the solution.
pub fn solve_mechanics(
    prob: &MechProblem,
    grid: &StructuredGrid,
    dofs: &DofMap,
    f_ext: &[f64],
    p_m: &[f64],
    p_f: &[f64],
    states: &[FracPointState],
    settings: &MechSolveSettings,
) -> Result<MechSolution> {
    let mut u = dofs.expand(&vec![0.0; dofs.n_free()]);
    let pattern = displacement_pattern(grid, dofs)?;
    let mut jac = pattern;
    let mut solver = LinearSolver::new();
    let scale = load_scale(prob, grid, f_ext);

    // Working copy whose status fields track the current Newton iterate and
    // act as branch hints for the local solves; jump and cohesion stay at
    // their converged previous-step values throughout.
    let mut iter_states = states.to_vec();

    for it in 0..settings.max_iterations {
        jac.zero_values();
        let asm = assemble_mechanics(
            prob,
            grid,
            dofs,
            &u,
            f_ext,
            p_m,
            p_f,
            &iter_states,
            settings.frozen_contact,
            Some(&mut jac),
        )?;
        let rmax = asm
            .residual_free
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        log::debug!("mech newton it {it}: |r| = {:.3e} (scale {scale:.3e})", rmax);
        if rmax <= settings.tol * scale {
            return finish(prob, u, states, asm, it);
        }
        let rhs: Vec<f64> = asm.residual_free.iter().map(|&v| -v).collect();
        let res = solver.solve(&jac, &rhs, &settings.solve)?;

        // Backtracking on the residual norm: contact status flips make the
        // residual piecewise linear, and a full step can jump into a
        // nonphysical state (every point open) with a singular tangent.
        let mut step = 1.0f64;
        let mut best: Option<(f64, Vec<f64>, Assembly)> = None;
        for _ in 0..10 {
            let mut u_trial = u.clone();
            for (i, &dof) in dofs.free_to_full.iter().enumerate() {
                u_trial[dof] += step * res.x[i];
            }
            let trial = assemble_mechanics(
                prob,
                grid,
                dofs,
                &u_trial,
                f_ext,
                p_m,
                p_f,
                &iter_states,
                settings.frozen_contact,
                None,
            );
            if let Ok(t) = trial {
                let rt = t
                    .residual_free
                    .iter()
                    .fold(0.0f64, |m, &v| m.max(v.abs()));
                if rt <= (1.0 - 1e-4 * step) * rmax || rt <= settings.tol * scale {
                    best = Some((rt, u_trial, t));
                    break;
                }
                if best.as_ref().map(|(b, _, _)| rt < *b).unwrap_or(true) {
                    best = Some((rt, u_trial, t));
                }
            }
            step *= 0.5;
        }
        // Monotone descent only: accepting an uphill state can trap the
        // iteration in a region with a singular tangent.
        match best {
            Some((rt, u_new, accepted)) if rt < rmax => {
                u = u_new;
                for eval in &accepted.evals {
                    for cut in &eval.cuts {
                        iter_states[cut.cv].status = cut.status;
                    }
                }
            }
            _ => {
                return Err(Error::Nonlinear(format!(
                    "mechanics line search stalled at residual {rmax:.3e} \
                     (no descent direction; the load may not admit static \
                     equilibrium)"
                )))
            }
        }
    }
    Err(Error::Nonlinear(format!(
        "mechanics newton did not converge in {} iterations",
        settings.max_iterations
    )))
}

fn finish(
    prob: &MechProblem,
    u: Vec<f64>,
    states: &[FracPointState],
    asm: Assembly,
    iterations: usize,
) -> Result<MechSolution> {
    let n_cvs = prob.n_cvs;
    let mut statuses = vec![FracStatus::Stick; n_cvs];
    let mut jumps = vec![Vector3::zeros(); n_cvs];
    let mut tractions = vec![Vector3::zeros(); n_cvs];
    let mut new_states: Vec<FracPointState> = states.to_vec();
    for eval in &asm.evals {
        for cut in &eval.cuts {
            statuses[cut.cv] = cut.status;
            jumps[cut.cv] = cut.jump;
            tractions[cut.cv] = cut.traction;
            new_states[cut.cv] = FracPointState {
                jump: cut.jump,
                q: cut.q_new,
                status: cut.status,
            };
        }
    }
    Ok(MechSolution {
        u,
        statuses,
        jumps,
        tractions,
        states: new_states,
        iterations,
    })
}
