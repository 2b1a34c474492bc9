//! Assembled flow balance: backward-Euler accumulation, two-point fluxes
//! and well terms, with an exact sparse Jacobian.
//!
//! The residual of unknown i is a volumetric rate (m^3/s):
//!   R_i = storage_i/dt + sum_j flux_{i->j} - q_well_into_i,
//! so at convergence fluid volume is conserved control volume by control
//! volume. Because the balance is linear in pressure, the implicit solvers
//! converge in a single Newton step; the loop exists to verify the result.

use super::disc::FlowDisc;
use super::props::FlowProps;
use super::wells::{Well, WellControl};
use crate::linalg::{CsrMatrix, LinearSolver, SolveOptions};
use crate::{Error, Result};

/// Previous-step data for a backward-Euler step. Volumetric strain arrays
/// are per matrix cell; leave them empty for flow-only problems.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub p_prev: &'a [f64],
    pub dt: f64,
    pub div_u: &'a [f64],
    pub div_u_prev: &'a [f64],
}

/// Flow discretization bound to fluid properties and wells, with the
/// Jacobian sparsity pattern built once up front.
#[derive(Debug)]
pub struct FlowModel {
    pub disc: FlowDisc,
    pub props: FlowProps,
    pub wells: Vec<Well>,
    pattern: CsrMatrix,
}

impl FlowModel {
    pub fn new(disc: FlowDisc, props: FlowProps, wells: Vec<Well>) -> Result<Self> {
        props.validate()?;
        for w in &wells {
            w.validate(disc.n_dofs())?;
        }
        let pattern = build_pattern(&disc)?;
        Ok(Self {
            disc,
            props,
            wells,
            pattern,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.disc.n_dofs()
    }

    /// A zero-valued matrix with the flow Jacobian's sparsity.
    pub fn jacobian_like(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    /// Accumulate the flow residual into `out` and, optionally, Jacobian
    /// entries through `add(row, col, value)`. `step: None` drops the
    /// accumulation terms (steady state). `out` must be zeroed by the
    /// caller; indices are local flow unknowns, so a coupled assembler can
    /// remap them through the closure.
    pub fn accumulate(
        &self,
        p: &[f64],
        step: Option<StepContext<'_>>,
        out: &mut [f64],
        mut add: Option<&mut dyn FnMut(usize, usize, f64)>,
    ) -> Result<()> {
        let n = self.n_dofs();
        if p.len() != n || out.len() != n {
            return Err(Error::Config(format!(
                "flow state length {} does not match {} unknowns",
                p.len().min(out.len()),
                n
            )));
        }
        let mu = self.props.viscosity;
        let rho = self.props.density;
        let g = self.props.gravity;

        if let Some(ctx) = step {
            if !(ctx.dt > 0.0) {
                return Err(Error::Scheduling(format!(
                    "time step must be positive, got {}",
                    ctx.dt
                )));
            }
            if ctx.p_prev.len() != n {
                return Err(Error::Config(
                    "previous pressure length does not match unknown count".into(),
                ));
            }
            let inv_m = self.props.inv_biot_modulus();
            let c_f = self.props.fluid_compressibility;
            let b = self.props.biot;
            for i in 0..self.disc.n_cells {
                let coeff = self.disc.volumes[i] * inv_m / ctx.dt;
                out[i] += coeff * (p[i] - ctx.p_prev[i]);
                if let Some(add) = add.as_deref_mut() {
                    add(i, i, coeff);
                }
                let du = ctx.div_u.get(i).copied().unwrap_or(0.0);
                let du_prev = ctx.div_u_prev.get(i).copied().unwrap_or(0.0);
                out[i] += self.disc.volumes[i] * b * (du - du_prev) / ctx.dt;
            }
            for cv in 0..self.disc.n_frac {
                let i = self.disc.frac_dof(cv);
                let coeff = self.disc.volumes[i] * c_f / ctx.dt;
                out[i] += coeff * (p[i] - ctx.p_prev[i]);
                if let Some(add) = add.as_deref_mut() {
                    add(i, i, coeff);
                }
            }
        }

        for c in &self.disc.connections {
            let lam = c.trans / mu;
            let head = rho * g.dot(&c.dx);
            let q = lam * (p[c.i] - p[c.j] - head);
            out[c.i] += q;
            out[c.j] -= q;
            if let Some(add) = add.as_deref_mut() {
                add(c.i, c.i, lam);
                add(c.i, c.j, -lam);
                add(c.j, c.j, lam);
                add(c.j, c.i, -lam);
            }
        }

        for w in &self.wells {
            match w.control {
                WellControl::Bhp(p_bh) => {
                    for comp in &w.completions {
                        let lam = comp.wi / mu;
                        out[comp.cv] -= lam * (p_bh - p[comp.cv]);
                        if let Some(add) = add.as_deref_mut() {
                            add(comp.cv, comp.cv, lam);
                        }
                    }
                }
                WellControl::Rate(q_total) => {
                    let wi_sum: f64 = w.completions.iter().map(|c| c.wi).sum();
                    for comp in &w.completions {
                        out[comp.cv] -= q_total * comp.wi / wi_sum;
                    }
                }
            }
        }
        Ok(())
    }

    /// Volumetric rate of each well into the reservoir (m^3/s, positive =
    /// injection) at the given pressure state.
    pub fn well_rates(&self, p: &[f64]) -> Vec<f64> {
        let mu = self.props.viscosity;
        self.wells
            .iter()
            .map(|w| match w.control {
                WellControl::Bhp(p_bh) => w
                    .completions
                    .iter()
                    .map(|c| c.wi / mu * (p_bh - p[c.cv]))
                    .sum(),
                WellControl::Rate(q) => q,
            })
            .collect()
    }

    /// Magnitude scale for residual convergence checks: the largest well
    /// throughput, or a storage-based rate when no wells act.
    fn rate_scale(&self, p: &[f64], dt: Option<f64>) -> f64 {
        let well: f64 = self
            .well_rates(p)
            .iter()
            .fold(0.0f64, |a, &q| a.max(q.abs()));
        let p_scale = p.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0e6);
        let dt = dt.unwrap_or(86_400.0);
        let s = self.props.inv_biot_modulus().max(self.props.fluid_compressibility);
        let v_max = self.disc.volumes.iter().fold(0.0f64, |a, &v| a.max(v));
        // The storage floor keeps the scale attainable when wells sit at
        // equilibrium and their throughput is pure rounding noise.
        well.max(v_max * s * p_scale / dt).max(1e-30)
    }

    /// Solve one linear implicit system: at `p_ref + dp` the residual
    /// vanishes. Shared by the steady and transient drivers.
    fn solve_balance(
        &self,
        p_init: &[f64],
        step: Option<StepContext<'_>>,
        opts: &SolveOptions,
    ) -> Result<Vec<f64>> {
        let n = self.n_dofs();
        let mut p = p_init.to_vec();
        let mut solver = LinearSolver::new();
        let scale = self.rate_scale(&p, step.map(|s| s.dt)).max(1e-30);
        // The balance is linear in p, so one step lands on the solution;
        // extra iterations only mop up linear-solver round-off.
        for _ in 0..5 {
            let mut r = vec![0.0; n];
            let mut jac = self.pattern.clone();
            jac.zero_values();
            {
                let mut add = |i: usize, j: usize, v: f64| jac.add_at(i, j, v);
                self.accumulate(&p, step, &mut r, Some(&mut add))?;
            }
            let rmax = r.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if rmax <= 1e-10 * scale {
                return Ok(p);
            }
            let rhs: Vec<f64> = r.iter().map(|&v| -v).collect();
            let sol = solver.solve(&jac, &rhs, opts)?;
            for (pi, di) in p.iter_mut().zip(&sol.x) {
                *pi += di;
            }
        }
        // Verify the final iterate rather than trusting the loop count.
        let mut r = vec![0.0; n];
        self.accumulate(&p, step, &mut r, None)?;
        let rmax = r.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if rmax <= 1e-8 * scale {
            Ok(p)
        } else {
            Err(Error::Nonlinear(format!(
                "flow balance did not converge: residual {rmax:.3e} vs scale {scale:.3e}"
            )))
        }
    }

    /// Steady-state pressure: accumulation dropped, so at least one
    /// pressure-controlled well must anchor the level.
    pub fn steady_state(&self, p_init: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
        if !self
            .wells
            .iter()
            .any(|w| matches!(w.control, WellControl::Bhp(_)))
        {
            return Err(Error::Config(
                "steady-state flow needs at least one pressure-controlled well".into(),
            ));
        }
        self.solve_balance(p_init, None, opts)
    }

    /// One backward-Euler step of length `dt` from `p_prev`, with frozen
    /// mechanics (volumetric strain unchanged).
    pub fn step(&self, p_prev: &[f64], dt: f64, opts: &SolveOptions) -> Result<Vec<f64>> {
        let ctx = StepContext {
            p_prev,
            dt,
            div_u: &[],
            div_u_prev: &[],
        };
        self.solve_balance(p_prev, Some(ctx), opts)
    }
}

/// Sparsity of the flow Jacobian: diagonal plus both triangles of every
/// connection.
fn build_pattern(disc: &FlowDisc) -> Result<CsrMatrix> {
    let n = disc.n_dofs();
    let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for c in &disc.connections {
        rows[c.i].push(c.j);
        rows[c.j].push(c.i);
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
