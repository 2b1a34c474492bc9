//! Assembled mechanics problem: bulk elasticity plus embedded-discontinuity
//! enrichment of the cells cut by fractures, with per-element evaluation of
//! internal forces and every sensitivity the monolithic Jacobian needs.

use super::contact::{
    solve_local, solve_pair, ContactProps, FracPointState, FracStatus, LocalSolution,
};
use super::element::{ElemMatrix, ElemVector, ElementGeometry};
use super::tensor::{
    frame_rotation, identity_voigt, isotropic_stiffness, lame_params, outer_sym_voigt,
    traction_matrix, Stiffness,
};
use crate::mesh::{FractureMesh, StructuredGrid};
use crate::{Error, Result};
use nalgebra::{Matrix3, SMatrix, Vector3};
use std::collections::HashMap;

/// Elastic and poroelastic material constants.
#[derive(Debug, Clone, Copy)]
pub struct MaterialProps {
    /// Young's modulus, Pa.
    pub youngs: f64,
    /// Poisson ratio.
    pub poisson: f64,
    /// Effective-stress (pore pressure) coefficient.
    pub biot: f64,
}

/// Precomputed enrichment geometry of one fracture cut inside one cell.
#[derive(Debug, Clone)]
pub struct CutData {
    pub cv: usize,
    pub fracture: usize,
    /// Frame rotation with rows (n, t1, t2).
    pub rot: Matrix3<f64>,
    pub grad_f_bar: Vector3<f64>,
    pub area: f64,
    /// sum_gp w|J| B^T C G_gp, mapping a global jump to element forces.
    pub m_e: SMatrix<f64, 24, 3>,
    /// d(t_hat)/d(eps_bar): R N(n) C.
    pub that_eps: SMatrix<f64, 3, 6>,
}

/// A cell cut by one or more fractures, with the frame influence matrices
/// a[i][j] relating jump j to traction relief at cut i.
#[derive(Debug, Clone)]
pub struct CutCell {
    pub cell: usize,
    pub cuts: Vec<CutData>,
    pub a: Vec<Vec<Matrix3<f64>>>,
}

/// Element kernels shared by all cells of one size on a tensor-product grid.
#[derive(Debug, Clone)]
pub struct ElemClass {
    pub geom: ElementGeometry,
    /// Bulk element stiffness.
    pub k_bulk: ElemMatrix,
    /// sum w|J| B^T I_voigt: nodal forces of a unit isotropic stress.
    pub v_int: ElemVector,
}

/// Mechanics problem over a grid with embedded fractures.
#[derive(Debug)]
pub struct MechProblem {
    /// Distinct element kernels, one per cell size occurring in the grid.
    pub classes: Vec<ElemClass>,
    /// Class index of every cell.
    pub class_of: Vec<u32>,
    pub c: Stiffness,
    pub lambda: f64,
    pub mu: f64,
    pub biot: f64,
    /// Contact parameters per fracture.
    pub contact: Vec<ContactProps>,
    pub cut_cells: Vec<CutCell>,
    pub cut_cell_of: HashMap<usize, usize>,
    pub n_dofs: usize,
    /// Number of fracture control volumes referenced by the cuts.
    pub n_cvs: usize,
}

impl MechProblem {
    pub fn new(
        grid: &StructuredGrid,
        fractures: &FractureMesh,
        material: MaterialProps,
        contact: Vec<ContactProps>,
    ) -> Result<Self> {
        if contact.len() != fractures.fractures.len() {
            return Err(Error::Config(format!(
                "{} contact parameter sets for {} fractures",
                contact.len(),
                fractures.fractures.len()
            )));
        }
        let c = isotropic_stiffness(material.youngs, material.poisson);
        let (lambda, mu) = lame_params(material.youngs, material.poisson);

        // One element class per distinct cell size (a tensor-product grid has
        // few: the count is bounded by nx + ny + nz combinations in practice).
        let iv = identity_voigt();
        let mut classes: Vec<ElemClass> = Vec::new();
        let mut class_by_size: HashMap<(u64, u64, u64), u32> = HashMap::new();
        let mut class_of = vec![0u32; grid.n_cells()];
        for (cell, ci) in class_of.iter_mut().enumerate() {
            let w = grid.cell_widths(cell);
            let key = (w.x.to_bits(), w.y.to_bits(), w.z.to_bits());
            *ci = *class_by_size.entry(key).or_insert_with(|| {
                let geom = ElementGeometry::new(w);
                let k_bulk = geom.stiffness(&c);
                let mut v_int = ElemVector::zeros();
                for b in &geom.b {
                    v_int += b.transpose() * iv * geom.w_det;
                }
                classes.push(ElemClass { geom, k_bulk, v_int });
                (classes.len() - 1) as u32
            });
        }

        // Group CVs by host cell and precompute enrichment operators.
        let mut cut_cells: Vec<CutCell> = Vec::new();
        let mut cut_cell_of = HashMap::new();
        let mut cells: Vec<usize> = fractures.cell_cvs.keys().copied().collect();
        cells.sort_unstable();
        for cell in cells {
            let geom = &classes[class_of[cell] as usize].geom;
            let cv_ids = &fractures.cell_cvs[&cell];
            let mut cuts = Vec::with_capacity(cv_ids.len());
            for &cv in cv_ids {
                let fc = &fractures.cvs[cv];
                let surf = &fractures.fractures[fc.fracture];
                let n = surf.normal();
                let rot = frame_rotation(&n, &surf.tau1(), &surf.tau2());
                let mut m_e = SMatrix::<f64, 24, 3>::zeros();
                for (g, b) in geom.b.iter().enumerate() {
                    let grad = fc.cut.ramp.grad_f_gauss[g];
                    let mut g_mat = SMatrix::<f64, 6, 3>::zeros();
                    for col in 0..3 {
                        g_mat.set_column(col, &outer_sym_voigt(&grad, &Vector3::ith(col, 1.0)));
                    }
                    m_e += b.transpose() * c * g_mat * geom.w_det;
                }
                let that_eps = rot * traction_matrix(&n) * c;
                cuts.push(CutData {
                    cv,
                    fracture: fc.fracture,
                    rot,
                    grad_f_bar: fc.cut.ramp.grad_f_bar,
                    area: fc.cut.area,
                    m_e,
                    that_eps,
                });
            }
            // Frame influence matrices a[i][j] = R_i L(n_i, g_j) R_j^T with
            // L(n, g) = lambda n g^T + mu (n.g) I + mu g n^T.
            let n_cuts = cuts.len();
            let mut a = vec![vec![Matrix3::zeros(); n_cuts]; n_cuts];
            for i in 0..n_cuts {
                let n_i = cuts[i].rot.row(0).transpose();
                for j in 0..n_cuts {
                    let g_j = cuts[j].grad_f_bar;
                    let l = lambda * n_i * g_j.transpose()
                        + mu * n_i.dot(&g_j) * Matrix3::identity()
                        + mu * g_j * n_i.transpose();
                    a[i][j] = cuts[i].rot * l * cuts[j].rot.transpose();
                }
            }
            cut_cell_of.insert(cell, cut_cells.len());
            cut_cells.push(CutCell { cell, cuts, a });
        }

        Ok(MechProblem {
            classes,
            class_of,
            c,
            lambda,
            mu,
            biot: material.biot,
            contact,
            cut_cells,
            cut_cell_of,
            n_dofs: 3 * grid.n_nodes(),
            n_cvs: fractures.n_cvs(),
        })
    }

    /// Element kernels of a cell.
    pub fn class(&self, cell: usize) -> &ElemClass {
        &self.classes[self.class_of[cell] as usize]
    }

    /// Internal force of an uncut element: K d - biot p_m v_int.
    pub fn plain_internal_force(&self, cell: usize, d: &ElemVector, p_m: f64) -> ElemVector {
        let cl = self.class(cell);
        cl.k_bulk * d - cl.v_int * (self.biot * p_m)
    }

    /// Evaluate a cut element: local contact solves, internal force, and all
    /// consistent sensitivities. `p_f` and `prev` are indexed like
    /// `cut_cell.cuts`.
    pub fn eval_cut_element(
        &self,
        cut_cell: &CutCell,
        d: &ElemVector,
        p_m: f64,
        p_f: &[f64],
        prev: &[FracPointState],
    ) -> Result<ElementEval> {
        let m = cut_cell.cuts.len();
        debug_assert_eq!(p_f.len(), m);
        debug_assert_eq!(prev.len(), m);
        let cl = self.class(cut_cell.cell);
        let e_n = Vector3::x();
        let eps_bar = cl.geom.b_bar * d;

        let mut t_hat = Vec::with_capacity(m);
        for (i, cut) in cut_cell.cuts.iter().enumerate() {
            t_hat.push(cut.that_eps * eps_bar + e_n * (p_f[i] - self.biot * p_m));
        }

        // cross[i][k] = d(jump_i)/d(t_hat_k), frame components.
        let (sols, cross): (Vec<LocalSolution>, Vec<Vec<Matrix3<f64>>>) = match m {
            1 => {
                let sol = solve_local(
                    &t_hat[0],
                    &cut_cell.a[0][0],
                    &prev[0],
                    &self.contact[cut_cell.cuts[0].fracture],
                )?;
                let cr = vec![vec![sol.djump_dthat]];
                (vec![sol], cr)
            }
            2 => {
                let pair = solve_pair(
                    [&t_hat[0], &t_hat[1]],
                    &[
                        [cut_cell.a[0][0], cut_cell.a[0][1]],
                        [cut_cell.a[1][0], cut_cell.a[1][1]],
                    ],
                    [&prev[0], &prev[1]],
                    [
                        &self.contact[cut_cell.cuts[0].fracture],
                        &self.contact[cut_cell.cuts[1].fracture],
                    ],
                )?;
                let cr = vec![
                    vec![pair.cross[0][0], pair.cross[0][1]],
                    vec![pair.cross[1][0], pair.cross[1][1]],
                ];
                (pair.sols.to_vec(), cr)
            }
            n => {
                return Err(Error::UnsupportedState(format!(
                    "cell {} is crossed by {n} fractures; at most two are supported",
                    cut_cell.cell
                )))
            }
        };

        // Internal force: bulk part minus jump relief minus pore pressure.
        let mut f_int = cl.k_bulk * d - cl.v_int * (self.biot * p_m);
        for (i, cut) in cut_cell.cuts.iter().enumerate() {
            let jump_g = cut.rot.transpose() * sols[i].jump;
            f_int -= cut.m_e * jump_g;
        }

        //

        // Chain rules. d(t_hat_k)/dd = that_eps_k B_bar; /dp_m = -biot e_n;
        // /dp_f_l = delta_kl e_n.
        let mut k_uu = cl.k_bulk;
        let mut dfint_dpm = -cl.v_int * self.biot;
        let volume = cl.geom.volume;
        // Trace row: d(tr eps_bar)/dd = v_int / V.
        let tr_row = cl.v_int / volume;
        let mut div = eps_bar[0] + eps_bar[1] + eps_bar[2];
        let mut ddiv_dd = tr_row;
        let mut ddiv_dpm = 0.0;

        let mut cut_evals: Vec<CutEval> = Vec::with_capacity(m);
        // First pass: jump sensitivities per cut.
        let mut duf_dd: Vec<SMatrix<f64, 3, 24>> = Vec::with_capacity(m);
        let mut duf_dpm: Vec<Vector3<f64>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut dd = SMatrix::<f64, 3, 24>::zeros();
            let mut dpm = Vector3::zeros();
            for k in 0..m {
                dd += cross[i][k] * cut_cell.cuts[k].that_eps * cl.geom.b_bar;
                dpm += cross[i][k] * e_n * (-self.biot);
            }
            duf_dd.push(dd);
            duf_dpm.push(dpm);
        }

        for (i, cut) in cut_cell.cuts.iter().enumerate() {
            let m_rot = cut.m_e * cut.rot.transpose(); // 24x3, frame jump -> force
            k_uu -= m_rot * duf_dd[i];
            dfint_dpm -= m_rot * duf_dpm[i];

            let jump_g = cut.rot.transpose() * sols[i].jump;
            div -= cut.grad_f_bar.dot(&jump_g);
            let g_frame_row = (cut.rot * cut.grad_f_bar).transpose(); // g^T R^T expressed in frame
            ddiv_dd -= (g_frame_row * duf_dd[i]).transpose();
            ddiv_dpm -= (g_frame_row * duf_dpm[i]).x;
        }

        for l in 0..m {
            // Sensitivities to p_F of cut l.
            let mut dfint_dpf = ElemVector::zeros();
            let mut ddiv_dpf = 0.0;
            for i in 0..m {
                let duf_dpf_i = cross[i][l] * e_n;
                let m_rot = cut_cell.cuts[i].m_e * cut_cell.cuts[i].rot.transpose();
                dfint_dpf -= m_rot * duf_dpf_i;
                let g_frame = cut_cell.cuts[i].rot * cut_cell.cuts[i].grad_f_bar;
                ddiv_dpf -= g_frame.dot(&duf_dpf_i);
            }
            let djump_dpf: Vec<(usize, Vector3<f64>)> = (0..m)
                .map(|k| (cut_cell.cuts[k].cv, cross[l][k] * e_n))
                .collect();
            cut_evals.push(CutEval {
                cv: cut_cell.cuts[l].cv,
                status: sols[l].status,
                jump: sols[l].jump,
                traction: sols[l].traction,
                q_new: sols[l].q_new,
                dlambda: sols[l].dlambda,
                djump_dd: duf_dd[l],
                djump_dpm: duf_dpm[l],
                djump_dpf,
                dfint_dpf,
                ddiv_dpf,
            });
        }

        Ok(ElementEval {
            f_int,
            k_uu,
            dfint_dpm,
            div,
            ddiv_dd,
            ddiv_dpm,
            cuts: cut_evals,
        })
    }
}

/// Everything the global assembly needs from one cut element.
#[derive(Debug, Clone)]
pub struct ElementEval {
    pub f_int: ElemVector,
    pub k_uu: ElemMatrix,
    pub dfint_dpm: ElemVector,
    /// Bulk volumetric strain (regular part, jump contribution removed).
    pub div: f64,
    pub ddiv_dd: ElemVector,
    pub ddiv_dpm: f64,
    pub cuts: Vec<CutEval>,
}

/// Per-cut outputs and sensitivities of one element evaluation.
#[derive(Debug, Clone)]
pub struct CutEval {
    pub cv: usize,
    pub status: FracStatus,
    /// Jump in frame components (normal, tangential 1, tangential 2).
    pub jump: Vector3<f64>,
    /// Traction in frame components.
    pub traction: Vector3<f64>,
    pub q_new: f64,
    pub dlambda: f64,
    /// d(jump)/d(element displacements), frame rows.
    pub djump_dd: SMatrix<f64, 3, 24>,
    pub djump_dpm: Vector3<f64>,
    /// d(jump of this cut)/d(p_F of CV k) for every cut k in the element.
    pub djump_dpf: Vec<(usize, Vector3<f64>)>,
    /// d(f_int)/d(p_F of this cut's CV).
    pub dfint_dpf: ElemVector,
    /// d(div)/d(p_F of this cut's CV).
    pub ddiv_dpf: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::element::{element_dofs, gather_element};
    use crate::mesh::FractureSurface;
    use approx::assert_relative_eq;
    use nalgebra::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MPA: f64 = 1e6;

    fn single_cell_problem(strike: f64, dip: f64) -> (StructuredGrid, FractureMesh, MechProblem) {
        let grid = StructuredGrid::new(1, 1, 1, 1.0, 1.0, 1.0, Point3::origin()).unwrap();
        let frac = FractureSurface {
            center: Point3::new(0.5, 0.5, 0.5),
            strike_deg: strike,
            dip_deg: dip,
            length: 8.0,
            height: 8.0,
            conductivity: 1.0,
            aperture: 1e-3,
        };
        let fm = FractureMesh::build(&grid, vec![frac]).unwrap();
        let prob = MechProblem::new(
            &grid,
            &fm,
            MaterialProps {
                youngs: 20e9,
                poisson: 0.25,
                biot: 0.8,
            },
            vec![ContactProps {
                friction: 0.6,
                dilation: 0.1,
                hardening: 5e8,
            }],
        )
        .unwrap();
        (grid, fm, prob)
    }

    /// Nodal displacements of a uniform strain field on one cell.
    fn strain_displacements(grid: &StructuredGrid, eps: &[f64; 6]) -> ElemVector {
        let mut d = ElemVector::zeros();
        for (a, &node) in grid.cell_nodes(0).iter().enumerate() {
            let p = grid.node_coords(node);
            d[3 * a] = eps[0] * p.x + 0.5 * eps[3] * p.y + 0.5 * eps[5] * p.z;
            d[3 * a + 1] = 0.5 * eps[3] * p.x + eps[1] * p.y + 0.5 * eps[4] * p.z;
            d[3 * a + 2] = 0.5 * eps[5] * p.x + 0.5 * eps[4] * p.y + eps[2] * p.z;
        }
        d
    }

    #[test]
    fn stick_element_reduces_to_bulk_elasticity() {
        let (grid, _fm, prob) = single_cell_problem(90.0, 90.0);
        // Compressive normal strain keeps the fracture stuck.
        let d = strain_displacements(&grid, &[-1e-4, -1e-4, -1e-4, 2e-5, 0.0, 0.0]);
        let prev = FracPointState::new(0.0);
        let eval = prob
            .eval_cut_element(&prob.cut_cells[0], &d, 0.0, &[0.0], &[prev])
            .unwrap();
        assert_eq!(eval.cuts[0].status, FracStatus::Stick);
        // Stick: tangent is exactly the bulk stiffness; force matches K d.
        assert_relative_eq!((eval.k_uu - prob.class(0).k_bulk).norm(), 0.0, epsilon = 1e-30);
        assert_relative_eq!((eval.f_int - prob.class(0).k_bulk * d).norm(), 0.0, epsilon = 1e-30);
        assert_relative_eq!(eval.div, -3e-4, max_relative = 1e-10);
    }

    #[test]
    fn pressurized_open_fracture_is_traction_free() {
        let (_grid, _fm, prob) = single_cell_problem(90.0, 90.0);
        let d = ElemVector::zeros();
        let prev = FracPointState::new(0.0);
        // High fracture pressure with zero matrix pressure: t_hat_n > 0.
        let eval = prob
            .eval_cut_element(&prob.cut_cells[0], &d, 0.0, &[5.0 * MPA], &[prev])
            .unwrap();
        assert_eq!(eval.cuts[0].status, FracStatus::Open);
        assert!(eval.cuts[0].jump.x > 0.0);
        assert_relative_eq!(eval.cuts[0].traction.norm(), 0.0, epsilon = 1e-3);
        // The open jump relieves exactly the pressure-induced traction, and
        // the bulk sees the jump as an eigenstrain force.
        assert!(eval.f_int.norm() > 0.0);
    }

    #[test]
    fn matrix_pressure_counteracts_fracture_pressure() {
        // Equal matrix and fracture pressure with biot = 1: the effective
        // normal traction is zero; with biot = 0.8 it is tensile.
        let (grid, fm, _) = single_cell_problem(90.0, 90.0);
        let mk = |biot: f64| {
            MechProblem::new(
                &grid,
                &fm,
                MaterialProps {
                    youngs: 20e9,
                    poisson: 0.25,
                    biot,
                },
                vec![ContactProps {
                    friction: 0.6,
                    dilation: 0.0,
                    hardening: 0.0,
                }],
            )
            .unwrap()
        };
        let d = ElemVector::zeros();
        let prev = FracPointState::new(0.0);
        let p = 5.0 * MPA;
        let e1 = mk(1.0)
            .eval_cut_element(&mk(1.0).cut_cells[0], &d, p, &[p], &[prev])
            .unwrap();
        assert_eq!(e1.cuts[0].status, FracStatus::Stick);
        assert_relative_eq!(e1.cuts[0].traction.x, 0.0, epsilon = 1e-6);
        let e08 = mk(0.8)
            .eval_cut_element(&mk(0.8).cut_cells[0], &d, p, &[p], &[prev])
            .unwrap();
        assert_eq!(e08.cuts[0].status, FracStatus::Open);
    }

    /// Central finite differences of f_int and div against the analytic
    /// element sensitivities, on randomized slipping/opening states.
    #[test]
    fn element_sensitivities_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        'outer: for trial in 0..40 {
            let (strike, dip) = if trial % 2 == 0 { (90.0, 90.0) } else { (30.0, 70.0) };
            let (grid, _fm, prob) = single_cell_problem(strike, dip);
            let mut eps = [0.0; 6];
            for e in eps.iter_mut() {
                *e = rng.gen_range(-3e-4..3e-4);
            }
            let d0 = strain_displacements(&grid, &eps);
            let p_m = rng.gen_range(0.0..4.0) * MPA;
            let p_f = rng.gen_range(0.0..8.0) * MPA;
            let prev = FracPointState::new(0.0);

            let Ok(eval) = prob.eval_cut_element(&prob.cut_cells[0], &d0, p_m, &[p_f], &[prev])
            else {
                continue;
            };
            if eval.cuts[0].status == FracStatus::Stick {
                continue;
            }
            // Stay away from status boundaries.
            let t = eval.cuts[0].traction;
            match eval.cuts[0].status {
                FracStatus::Slip => {
                    if t.x > -0.2 * MPA || eval.cuts[0].dlambda < 1e-7 {
                        continue;
                    }
                }
                FracStatus::Open => {
                    if eval.cuts[0].jump.x < 1e-6 {
                        continue;
                    }
                }
                FracStatus::Stick => unreachable!(),
            }

            // Displacement sensitivities.
            let hd = 1e-8;
            for dof in [0usize, 4, 10, 17, 23] {
                let mut dp = d0;
                dp[dof] += hd;
                let mut dm = d0;
                dm[dof] -= hd;
                let Ok(ep) = prob.eval_cut_element(&prob.cut_cells[0], &dp, p_m, &[p_f], &[prev])
                else {
                    continue 'outer;
                };
                let Ok(em) = prob.eval_cut_element(&prob.cut_cells[0], &dm, p_m, &[p_f], &[prev])
                else {
                    continue 'outer;
                };
                if ep.cuts[0].status != eval.cuts[0].status
                    || em.cuts[0].status != eval.cuts[0].status
                {
                    continue 'outer;
                }
                let fd_col = (ep.f_int - em.f_int) / (2.0 * hd);
                let an_col = eval.k_uu.column(dof);
                assert!(
                    (fd_col - an_col).norm() <= 2e-6 * eval.k_uu.norm().max(1e-30),
                    "k_uu column {dof} mismatch"
                );
                let fd_div = (ep.div - em.div) / (2.0 * hd);
                assert!(
                    (fd_div - eval.ddiv_dd[dof]).abs() <= 1e-5 * eval.ddiv_dd.norm().max(1e-12),
                    "ddiv/dd mismatch at dof {dof}"
                );
                let fd_jump = (ep.cuts[0].jump - em.cuts[0].jump) / (2.0 * hd);
                let an_jump = eval.cuts[0].djump_dd.column(dof);
                assert!(
                    (fd_jump - an_jump).norm() <= 1e-5 * eval.cuts[0].djump_dd.norm().max(1e-30),
                    "djump/dd mismatch at dof {dof}"
                );
            }

            // Pressure sensitivities.
            let hp = 1.0; // Pa
            for which in 0..2 {
                let (pmp, pfp) = if which == 0 { (p_m + hp, p_f) } else { (p_m, p_f + hp) };
                let (pmm, pfm) = if which == 0 { (p_m - hp, p_f) } else { (p_m, p_f - hp) };
                let Ok(ep) = prob.eval_cut_element(&prob.cut_cells[0], &d0, pmp, &[pfp], &[prev])
                else {
                    continue 'outer;
                };
                let Ok(em) = prob.eval_cut_element(&prob.cut_cells[0], &d0, pmm, &[pfm], &[prev])
                else {
                    continue 'outer;
                };
                if ep.cuts[0].status != eval.cuts[0].status
                    || em.cuts[0].status != eval.cuts[0].status
                {
                    continue 'outer;
                }
                let fd_f = (ep.f_int - em.f_int) / (2.0 * hp);
                let an_f = if which == 0 { eval.dfint_dpm } else { eval.cuts[0].dfint_dpf };
                assert!(
                    (fd_f - an_f).norm() <= 1e-5 * an_f.norm().max(1e-12),
                    "dfint/dp mismatch ({which})"
                );
                let fd_div = (ep.div - em.div) / (2.0 * hp);
                let an_div = if which == 0 { eval.ddiv_dpm } else { eval.cuts[0].ddiv_dpf };
                assert!(
                    (fd_div - an_div).abs() <= 1e-5 * an_div.abs().max(1e-18),
                    "ddiv/dp mismatch ({which})"
                );
                let fd_jump = (ep.cuts[0].jump - em.cuts[0].jump) / (2.0 * hp);
                let an_jump = if which == 0 {
                    eval.cuts[0].djump_dpm
                } else {
                    eval.cuts[0].djump_dpf[0].1
                };
                assert!(
                    (fd_jump - an_jump).norm() <= 1e-5 * an_jump.norm().max(1e-20),
                    "djump/dp mismatch ({which})"
                );
            }
            tested += 1;
        }
        assert!(tested >= 8, "too few element FD checks ran: {tested}");
    }

    #[test]
    fn uncut_force_matches_manual_expression() {
        let (grid, _fm, prob) = single_cell_problem(90.0, 90.0);
        let d = strain_displacements(&grid, &[1e-4, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let dofs = element_dofs(&grid, 0);
        let mut u = vec![0.0; prob.n_dofs];
        for (i, &dof) in dofs.iter().enumerate() {
            u[dof] = d[i];
        }
        let gathered = gather_element(&u, &dofs);
        assert_relative_eq!((gathered - d).norm(), 0.0, epsilon = 1e-30);
        let f = prob.plain_internal_force(0, &d, 2.0 * MPA);
        let expect = prob.class(0).k_bulk * d - prob.class(0).v_int * (0.8 * 2.0 * MPA);
        assert_relative_eq!((f - expect).norm(), 0.0, epsilon = 1e-30);
    }
}
