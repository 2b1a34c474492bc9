//! The monolithic coupled system: residual, Jacobian, Newton step and
//! stress initialization.

use crate::flow::{FlowModel, StepContext};
use crate::linalg::{CsrMatrix, LinearSolver, SolveOptions};
use crate::mech::bc::DofMap;
use crate::mech::contact::{FracPointState, FracStatus};
use crate::mech::element::{element_dofs, gather_element};
use crate::mech::model::{ElementEval, MechProblem};
use crate::mech::solve::{solve_mechanics, MechSolveSettings};
use crate::mesh::StructuredGrid;
use crate::{Error, Result};
use nalgebra::Vector3;

/// Complete coupled unknown set at one time level, plus the derived fields
/// the next step and the reports need.
#[derive(Debug, Clone)]
pub struct CoupledState {
    /// Simulation clock in seconds.
    pub time: f64,
    /// Full-length nodal displacement vector (prescribed entries included).
    pub u: Vec<f64>,
    /// Pressures: matrix cells first, then fracture control volumes (Pa).
    pub p: Vec<f64>,
    /// Contact state (jump, cohesion, status) per fracture control volume.
    pub states: Vec<FracPointState>,
    /// Volumetric strain of the regular displacement field per cell.
    pub div_u: Vec<f64>,
    /// Contact traction per fracture control volume, frame components
    /// (normal, tangential 1, tangential 2), Pa.
    pub tractions: Vec<Vector3<f64>>,
}

/// Newton controls for one coupled step.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative tolerance of the mechanics residual (scaled by E*h^2).
    pub tol_mech: f64,
    /// Relative tolerance of the flow residual (scaled by well throughput).
    pub tol_flow: f64,
    pub max_iterations: usize,
    /// Contact status changes allowed per control volume within one step
    /// before the step is declared cycling and cut.
    pub max_flips: usize,
    pub solve: SolveOptions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_mech: 1e-6,
            tol_flow: 1e-6,
            max_iterations: 30,
            max_flips: 10,
            solve: SolveOptions::default(),
        }
    }
}

/// Residual, cut-element evaluations and volumetric strains of one coupled
/// assembly.
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub evals: Vec<ElementEval>,
    pub div_u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: CoupledState,
    pub iterations: usize,
}

/// Geometry, physics and boundary conditions of one coupled problem.
pub struct CoupledModel {
    pub grid: StructuredGrid,
    pub mech: MechProblem,
    pub flow: FlowModel,
    pub dofs: DofMap,
    /// Dead external load vector, full mechanics length.
    pub f_ext: Vec<f64>,
    pattern: CsrMatrix,
}

impl CoupledModel {
    pub fn new(
        grid: StructuredGrid,
        mech: MechProblem,
        flow: FlowModel,
        dofs: DofMap,
        f_ext: Vec<f64>,
    ) -> Result<Self> {
        if flow.disc.n_cells != grid.n_cells() {
            return Err(Error::Config(format!(
                "flow has {} cells but the grid has {}",
                flow.disc.n_cells,
                grid.n_cells()
            )));
        }
        if flow.disc.n_frac != mech.n_cvs {
            return Err(Error::Config(format!(
                "flow carries {} fracture control volumes but mechanics {}",
                flow.disc.n_frac, mech.n_cvs
            )));
        }
        if dofs.n_full() != mech.n_dofs || f_ext.len() != mech.n_dofs {
            return Err(Error::Config(
                "constraint map / load vector length does not match the mechanics DOFs".into(),
            ));
        }
        if (mech.biot - flow.props.biot).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mechanics and flow disagree on the Biot coefficient ({} vs {})",
                mech.biot, flow.props.biot
            )));
        }
        let pattern = build_pattern(&grid, &mech, &flow, &dofs)?;
        Ok(CoupledModel {
            grid,
            mech,
            flow,
            dofs,
            f_ext,
            pattern,
        })
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn n_cells(&self) -> usize {
        self.flow.disc.n_cells
    }

    pub fn n_frac(&self) -> usize {
        self.flow.disc.n_frac
    }

    pub fn n_total(&self) -> usize {
        self.n_free() + self.n_cells() + self.n_frac()
    }

    /// A zero-valued matrix with the coupled Jacobian's sparsity.
    pub fn jacobian_like(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    /// One pass over all elements: internal forces, volumetric strains,
    /// local contact solves and every mechanics-side Jacobian block. When
    /// `dt` is given, the matrix-pressure rows receive the coupling
    /// d/dx [V*b*(div u)/dt]; without it only displacement rows are filled
    /// (stress initialization and diagnostics).
    ///
    /// Returns (residual over free displacement DOFs, cut evaluations in
    /// element order, div u per cell).
    pub fn mech_sweep(
        &self,
        u_full: &[f64],
        p: &[f64],
        iter_states: &[FracPointState],
        dt: Option<f64>,
        mut jac: Option<&mut CsrMatrix>,
    ) -> Result<(Vec<f64>, Vec<ElementEval>, Vec<f64>)> {
        let n_cells = self.n_cells();
        let n_free = self.n_free();
        let b = self.mech.biot;
        let mut r_full = vec![0.0; self.mech.n_dofs];
        let mut evals = Vec::with_capacity(self.mech.cut_cells.len());
        let mut div_u = vec![0.0; n_cells];

        for cell in 0..n_cells {
            let dofs_e = element_dofs(&self.grid, cell);
            let d = gather_element(u_full, &dofs_e);
            let pm = p[cell];
            let pm_col = n_free + cell;

            if let Some(&cc) = self.mech.cut_cell_of.get(&cell) {
                let cut_cell = &self.mech.cut_cells[cc];
                let pf_local: Vec<f64> = cut_cell
                    .cuts
                    .iter()
                    .map(|c| p[n_cells + c.cv])
                    .collect();
                let prev_local: Vec<FracPointState> =
                    cut_cell.cuts.iter().map(|c| iter_states[c.cv]).collect();
                let eval = self
                    .mech
                    .eval_cut_element(cut_cell, &d, pm, &pf_local, &prev_local)?;
                for (i, &dof) in dofs_e.iter().enumerate() {
                    r_full[dof] += eval.f_int[i];
                }
                div_u[cell] = eval.div;
                if let Some(j) = jac.as_deref_mut() {
                    for (i, &di) in dofs_e.iter().enumerate() {
                        let Some(fi) = self.dofs.full_to_free[di] else {
                            continue;
                        };
                        for (k, &dk) in dofs_e.iter().enumerate() {
                            if let Some(fk) = self.dofs.full_to_free[dk] {
                                j.add_at(fi, fk, eval.k_uu[(i, k)]);
                            }
                        }
                        j.add_at(fi, pm_col, eval.dfint_dpm[i]);
                        for ce in &eval.cuts {
                            j.add_at(fi, n_free + n_cells + ce.cv, ce.dfint_dpf[i]);
                        }
                    }
                    if let Some(dt) = dt {
                        let w = self.mech.class(cell).geom.volume * b / dt;
                        for (k, &dk) in dofs_e.iter().enumerate() {
                            if let Some(fk) = self.dofs.full_to_free[dk] {
                                j.add_at(pm_col, fk, w * eval.ddiv_dd[k]);
                            }
                        }
                        j.add_at(pm_col, pm_col, w * eval.ddiv_dpm);
                        for ce in &eval.cuts {
                            j.add_at(pm_col, n_free + n_cells + ce.cv, w * ce.ddiv_dpf);
                        }
                    }
                }
                evals.push(eval);
            } else {
                let cl = self.mech.class(cell);
                let f_e = self.mech.plain_internal_force(cell, &d, pm);
                for (i, &dof) in dofs_e.iter().enumerate() {
                    r_full[dof] += f_e[i];
                }
                div_u[cell] = cl.v_int.dot(&d) / cl.geom.volume;
                if let Some(j) = jac.as_deref_mut() {
                    for (i, &di) in dofs_e.iter().enumerate() {
                        let Some(fi) = self.dofs.full_to_free[di] else {
                            continue;
                        };
                        for (k, &dk) in dofs_e.iter().enumerate() {
                            if let Some(fk) = self.dofs.full_to_free[dk] {
                                j.add_at(fi, fk, cl.k_bulk[(i, k)]);
                            }
                        }
                        j.add_at(fi, pm_col, -b * cl.v_int[i]);
                    }
                    if let Some(dt) = dt {
                        // d/dd of V * b * div/dt with div = v_int . d / V.
                        let w = b / dt;
                        for (k, &dk) in dofs_e.iter().enumerate() {
                            if let Some(fk) = self.dofs.full_to_free[dk] {
                                j.add_at(pm_col, fk, w * cl.v_int[k]);
                            }
                        }
                    }
                }
            }
        }
        for (dof, f) in self.f_ext.iter().enumerate() {
            r_full[dof] -= f;
        }
        Ok((self.dofs.restrict(&r_full), evals, div_u))
    }

    /// Assemble the coupled residual (and optionally the Jacobian) at the
    /// iterate (`u_free`, `p`) for a backward-Euler step of length `dt`
    /// from `prev`.
    pub fn assemble(
        &self,
        u_free: &[f64],
        p: &[f64],
        prev: &CoupledState,
        iter_states: &[FracPointState],
        dt: f64,
        mut jac: Option<&mut CsrMatrix>,
    ) -> Result<AssembledSystem> {
        let n_free = self.n_free();
        let u_full = self.dofs.expand(u_free);
        let (r_u, evals, div_u) =
            self.mech_sweep(&u_full, p, iter_states, Some(dt), jac.as_deref_mut())?;
        let mut residual = vec![0.0; self.n_total()];
        residual[..n_free].copy_from_slice(&r_u);
        let ctx = StepContext {
            p_prev: &prev.p,
            dt,
            div_u: &div_u,
            div_u_prev: &prev.div_u,
        };
        match jac {
            Some(j) => {
                let mut add = |i: usize, k: usize, v: f64| j.add_at(n_free + i, n_free + k, v);
                self.flow
                    .accumulate(p, Some(ctx), &mut residual[n_free..], Some(&mut add))?;
            }
            None => {
                self.flow
                    .accumulate(p, Some(ctx), &mut residual[n_free..], None)?;
            }
        }
        Ok(AssembledSystem {
            residual,
            evals,
            div_u,
        })
    }

    /// Characteristic force for the mechanics residual: E * h^2.
    pub fn mech_scale(&self) -> f64 {
        let (lam, mu) = (self.mech.lambda, self.mech.mu);
        let youngs = mu * (3.0 * lam + 2.0 * mu) / (lam + mu);
        let h = self.grid.min_spacing();
        youngs * h * h
    }

    /// Characteristic volumetric rate for the flow residual: the larger of
    /// the total well throughput and the storage rate of a full
    /// pressure-scale swing over the step. The storage floor keeps the
    /// tolerance attainable when pressure-controlled wells equilibrate and
    /// their throughput collapses toward the rounding level.
    pub fn flow_scale(&self, p: &[f64], dt: f64) -> f64 {
        let wells: f64 = self.flow.well_rates(p).iter().map(|q| q.abs()).sum();
        let s = self
            .flow
            .props
            .inv_biot_modulus()
            .max(self.flow.props.fluid_compressibility);
        let v_max = self
            .flow
            .disc
            .volumes
            .iter()
            .fold(0.0f64, |a, &v| a.max(v));
        let p_scale = p.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0e6);
        wells.max(v_max * s * p_scale / dt).max(1e-30)
    }

    /// Scaled residual error: max of the per-block relative norms divided by
    /// their tolerances, so values <= 1 mean converged.
    fn scaled_error(&self, r: &[f64], s_u: f64, s_q: f64, set: &SolverSettings) -> f64 {
        let n_free = self.n_free();
        let ru = r[..n_free].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let rq = r[n_free..].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        (ru / (s_u * set.tol_mech)).max(rq / (s_q * set.tol_flow))
    }

    /// Advance the coupled state by one backward-Euler step of length `dt`.
    pub fn step(&self, prev: &CoupledState, dt: f64, set: &SolverSettings) -> Result<StepOutcome> {
        let n_free = self.n_free();
        let mut u_free = self.dofs.restrict(&prev.u);
        let mut p = prev.p.clone();
        // Status fields act as branch hints for the local solves and track
        // the Newton iterate; jumps and cohesions stay at the previous
        // converged values throughout the step.
        let mut iter_states = prev.states.clone();
        let mut flips = vec![0usize; self.n_frac()];

        let s_u = self.mech_scale();
        let s_q = self.flow_scale(&prev.p, dt);
        let mut solver = LinearSolver::new();
        let mut jac = self.pattern.clone();

        for it in 0..set.max_iterations {
            jac.zero_values();
            let asm = self.assemble(&u_free, &p, prev, &iter_states, dt, Some(&mut jac))?;
            self.update_hints(&asm, &mut iter_states, &mut flips, set)?;
            let e0 = self.scaled_error(&asm.residual, s_u, s_q, set);
            log::debug!("coupled newton it {it}: scaled residual {e0:.3e}");
            if e0 <= 1.0 {
                return self.finish(prev, dt, u_free, p, asm, it);
            }

            let rhs: Vec<f64> = asm.residual.iter().map(|&v| -v).collect();
            let dx = solver.solve(&jac, &rhs, &set.solve)?.x;

            // Backtracking on the scaled residual: contact status changes
            // make the residual piecewise smooth, and a full step can
            // overshoot into a state (all points open) whose tangent is
            // singular. Monotone descent only.
            let mut alpha = 1.0f64;
            let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
            for _ in 0..10 {
                let mut ut = u_free.clone();
                let mut pt = p.clone();
                for (v, d) in ut.iter_mut().zip(&dx[..n_free]) {
                    *v += alpha * d;
                }
                for (v, d) in pt.iter_mut().zip(&dx[n_free..]) {
                    *v += alpha * d;
                }
                if let Ok(trial) = self.assemble(&ut, &pt, prev, &iter_states, dt, None) {
                    let et = self.scaled_error(&trial.residual, s_u, s_q, set);
                    if et <= (1.0 - 1e-4 * alpha) * e0 || et <= 1.0 {
                        best = Some((et, ut, pt));
                        break;
                    }
                    if best.as_ref().map(|(b, _, _)| et < *b).unwrap_or(true) {
                        best = Some((et, ut, pt));
                    }
                }
                alpha *= 0.5;
            }
            match best {
                Some((et, ut, pt)) if et < e0 => {
                    u_free = ut;
                    p = pt;
                }
                _ => {
                    return Err(Error::Nonlinear(format!(
                        "coupled line search stalled at scaled residual {e0:.3e}"
                    )))
                }
            }
        }
        Err(Error::Nonlinear(format!(
            "coupled newton did not converge in {} iterations",
            set.max_iterations
        )))
    }

    /// Accept an iterate's contact classifications as the next branch
    /// hints, counting changes to detect cycling.
    fn update_hints(
        &self,
        asm: &AssembledSystem,
        iter_states: &mut [FracPointState],
        flips: &mut [usize],
        set: &SolverSettings,
    ) -> Result<()> {
        for eval in &asm.evals {
            for ce in &eval.cuts {
                if ce.status != iter_states[ce.cv].status {
                    flips[ce.cv] += 1;
                    if flips[ce.cv] > set.max_flips {
                        return Err(Error::Nonlinear(format!(
                            "contact status cycling at fracture control volume {} \
                             ({} changes); cut the time step",
                            ce.cv, flips[ce.cv]
                        )));
                    }
                    iter_states[ce.cv].status = ce.status;
                }
            }
        }
        Ok(())
    }

    fn finish(
        &self,
        prev: &CoupledState,
        dt: f64,
        u_free: Vec<f64>,
        p: Vec<f64>,
        asm: AssembledSystem,
        iterations: usize,
    ) -> Result<StepOutcome> {
        let mut states = prev.states.clone();
        let mut tractions = vec![Vector3::zeros(); self.n_frac()];
        for eval in &asm.evals {
            for ce in &eval.cuts {
                states[ce.cv] = FracPointState {
                    jump: ce.jump,
                    q: ce.q_new,
                    status: ce.status,
                };
                tractions[ce.cv] = ce.traction;
            }
        }
        Ok(StepOutcome {
            state: CoupledState {
                time: prev.time + dt,
                u: self.dofs.expand(&u_free),
                p,
                states,
                div_u: asm.div_u,
                tractions,
            },
            iterations,
        })
    }

    /// Elastic stress initialization: solve equilibrium under the dead
    /// loads at uniform pressure `p0` with every fracture point stuck, then
    /// release the contact constraint. If any point would not stick, the
    /// true contact equilibrium is solved instead; otherwise the elastic
    /// solution already is the equilibrium. Returns the state at time zero
    /// with tractions evaluated.
    pub fn initialize_stress(&self, p0: f64, q0: f64, solve: &SolveOptions) -> Result<CoupledState> {
        let n_cells = self.n_cells();
        let p = vec![p0; n_cells + self.n_frac()];
        let states0: Vec<FracPointState> =
            vec![FracPointState::new(q0); self.n_frac()];
        let frozen = MechSolveSettings {
            frozen_contact: true,
            solve: solve.clone(),
            ..MechSolveSettings::default()
        };
        let sol = solve_mechanics(
            &self.mech,
            &self.grid,
            &self.dofs,
            &self.f_ext,
            &p[..n_cells],
            &p[n_cells..],
            &states0,
            &frozen,
        )?;

        // Evaluate the true local solves at the elastic displacement.
        let (_, evals, div_u) = self.mech_sweep(&sol.u, &p, &states0, None, None)?;
        let all_stick = evals
            .iter()
            .all(|e| e.cuts.iter().all(|c| c.status == FracStatus::Stick));

        let (u, states, tractions, div_u) = if all_stick {
            let mut states = states0;
            let mut tractions = vec![Vector3::zeros(); self.n_frac()];
            for eval in &evals {
                for ce in &eval.cuts {
                    states[ce.cv] = FracPointState {
                        jump: ce.jump,
                        q: ce.q_new,
                        status: ce.status,
                    };
                    tractions[ce.cv] = ce.traction;
                }
            }
            (sol.u, states, tractions, div_u)
        } else {
            // Some fracture points are critically stressed already; fall
            // back to the full contact equilibrium so time stepping starts
            // from a consistent state.
            let unfrozen = MechSolveSettings {
                frozen_contact: false,
                solve: solve.clone(),
                ..MechSolveSettings::default()
            };
            let sol = solve_mechanics(
                &self.mech,
                &self.grid,
                &self.dofs,
                &self.f_ext,
                &p[..n_cells],
                &p[n_cells..],
                &states0,
                &unfrozen,
            )?;
            let (_, _, div_u) = self.mech_sweep(&sol.u, &p, &sol.states, None, None)?;
            (sol.u, sol.states, sol.tractions, div_u)
        };

        Ok(CoupledState {
            time: 0.0,
            u,
            p,
            states,
            div_u,
            tractions,
        })
    }
}

/// Sparsity of the coupled Jacobian. Row blocks: free displacements, matrix
/// pressures, fracture pressures.
fn build_pattern(
    grid: &StructuredGrid,
    mech: &MechProblem,
    flow: &FlowModel,
    dofs: &DofMap,
) -> Result<CsrMatrix> {
    let n_free = dofs.n_free();
    let n_cells = grid.n_cells();
    let n = n_free + n_cells + flow.disc.n_frac;
    let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    for cell in 0..n_cells {
        let dofs_e = element_dofs(grid, cell);
        let free_e: Vec<usize> = dofs_e
            .iter()
            .filter_map(|&d| dofs.full_to_free[d])
            .collect();
        let pm_col = n_free + cell;
        let mut pf_cols: Vec<usize> = Vec::new();
        if let Some(&cc) = mech.cut_cell_of.get(&cell) {
            for cut in &mech.cut_cells[cc].cuts {
                pf_cols.push(n_free + n_cells + cut.cv);
            }
        }
        for &fi in &free_e {
            rows[fi].extend_from_slice(&free_e);
            rows[fi].push(pm_col);
            rows[fi].extend_from_slice(&pf_cols);
        }
        rows[pm_col].extend_from_slice(&free_e);
        rows[pm_col].extend_from_slice(&pf_cols);
    }
    for c in &flow.disc.connections {
        rows[n_free + c.i].push(n_free + c.j);
        rows[n_free + c.j].push(n_free + c.i);
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
        col_idx.extend_from_slice(r);
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_pattern(n, row_ptr, col_idx)
}
