//! Local fracture contact solve for one embedded-discontinuity point.
//!
//! All vectors here are fracture-frame components ordered (normal,
//! tangential-1, tangential-2), tension positive. Given the traction the
//! bulk would exert at zero additional jump (`t_hat`) and the influence
//! matrix `a` relating jump to traction relief, the effective traction is
//!
//!   t = t_hat - a * jump.
//!
//! The solve classifies the point as stick, frictional slip (Coulomb with
//! optional dilation and linear hardening of cohesion), or open (traction
//! free), and returns the jump together with its sensitivity to `t_hat`
//! for consistent global linearization.

use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3, Vector4};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracStatus {
    Stick,
    Slip,
    Open,
}

/// Contact-law parameters of one fracture.
#[derive(Debug, Clone, Copy)]
pub struct ContactProps {
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Dilation factor: normal opening per unit slip magnitude.
    pub dilation: f64,
    /// Linear hardening modulus of the cohesion (Pa per unit slip).
    pub hardening: f64,
}

/// Converged mechanical state of one fracture point, carried across steps.
#[derive(Debug, Clone, Copy)]
pub struct FracPointState {
    /// Displacement jump, frame components (n, t1, t2).
    pub jump: Vector3<f64>,
    /// Current cohesion (initial value plus accumulated hardening).
    pub q: f64,
    /// Last classification. The local solves read it as a branch hint and
    /// try this status first, so a global Newton loop can keep a point on
    /// the branch of its current iterate by updating this field.
    pub status: FracStatus,
}

impl FracPointState {
    pub fn new(q0: f64) -> Self {
        FracPointState {
            jump: Vector3::zeros(),
            q: q0,
            status: FracStatus::Stick,
        }
    }
}

/// Result of the local solve at one fracture point.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub jump: Vector3<f64>,
    pub traction: Vector3<f64>,
    pub status: FracStatus,
    pub dlambda: f64,
    pub q_new: f64,
    /// d(jump)/d(t_hat), frame components; zero for stick.
    pub djump_dthat: Matrix3<f64>,
}

/// Influence matrix in fracture-frame components from the Lame parameters
/// and the frame components `g` of the enrichment-ramp gradient:
///
///   a = lambda e_n g^T + mu g e_n^T + mu g_n I.
pub fn influence_matrix(lambda: f64, mu: f64, g: &Vector3<f64>) -> Matrix3<f64> {
    let e_n = Vector3::x();
    lambda * e_n * g.transpose() + mu * g * e_n.transpose() + mu * g.x * Matrix3::identity()
}

/// Coulomb yield value: F = |t_tau| + friction * t_n - q (slip when > 0).
pub fn yield_value(t: &Vector3<f64>, q: f64, props: &ContactProps) -> f64 {
    t.yz().norm() + props.friction * t.x - q
}

const MAX_LOCAL_ITER: usize = 50;

pub fn solve_local(
    t_hat: &Vector3<f64>,
    a: &Matrix3<f64>,
    prev: &FracPointState,
    props: &ContactProps,
) -> Result<LocalSolution> {
    let t_scale = t_hat.norm().max(prev.q).max(1.0);
    let tol_t = 1e-12 * t_scale;

    // The local problem can have several admissible roots (e.g. a slip root
    // and an open root for the same loading). `prev.status` carries the
    // branch of the surrounding Newton iterate; trying it first keeps the
    // iteration on the branch its own linearization predicted. Each branch
    // still enforces its own admissibility checks, so a wrong hint falls
    // through to the canonical classification below.
    match prev.status {
        FracStatus::Slip => {
            if let Ok(SlipOutcome::Slipping(sol)) = solve_slip(t_hat, a, prev, props, t_scale) {
                return Ok(sol);
            }
        }
        FracStatus::Open => {
            if let Some(sol) = try_open(t_hat, a, prev) {
                return Ok(sol);
            }
        }
        FracStatus::Stick => {}
    }

    // Stick trial: jump frozen at the previous converged value.
    let t_trial = t_hat - a * prev.jump;

    if t_trial.x > tol_t {
        if let Some(sol) = try_open(t_hat, a, prev) {
            return Ok(sol);
        }
    }
    if yield_value(&t_trial, prev.q, props) > tol_t {
        match solve_slip(t_hat, a, prev, props, t_scale)? {
            SlipOutcome::Slipping(sol) => return Ok(sol),
            SlipOutcome::TensileAtSolution => {
                if let Some(sol) = try_open(t_hat, a, prev) {
                    return Ok(sol);
                }
                return Err(Error::Nonlinear(
                    "contact state did not resolve: slip solution is tensile \
                     but the open solve does not separate"
                        .into(),
                ));
            }
            SlipOutcome::Unloading => {}
        }
    }

    Ok(LocalSolution {
        jump: prev.jump,
        traction: t_trial,
        status: FracStatus::Stick,
        dlambda: 0.0,
        q_new: prev.q,
        djump_dthat: Matrix3::zeros(),
    })
}

/// Traction-free solve: a * jump = t_hat. Valid when it separates.
fn try_open(t_hat: &Vector3<f64>, a: &Matrix3<f64>, prev: &FracPointState) -> Option<LocalSolution> {
    let a_inv = a.try_inverse()?;
    let jump = a_inv * t_hat;
    if jump.x <= 0.0 {
        return None;
    }
    Some(LocalSolution {
        jump,
        traction: Vector3::zeros(),
        status: FracStatus::Open,
        dlambda: 0.0,
        q_new: prev.q,
        djump_dthat: a_inv,
    })
}

enum SlipOutcome {
    Slipping(LocalSolution),
    /// Normal traction turned tensile at the converged slip state.
    TensileAtSolution,
    /// Converged multiplier is negative: elastic unloading, keep stick.
    Unloading,
}

/// Backward-Euler return mapping for frictional slip with dilation and
/// linear hardening. Unknowns: jump (3 frame components) and the slip
/// increment dlambda. Residuals:
///
///   r_u = jump - jump_prev - dlambda * m(t),  m = (dilation, dir(t_tau))
///   r_f = |t_tau| + friction * t_n - (q_prev + hardening * dlambda)
///
/// with t = t_hat - a * jump. The tangential flow direction follows the
/// current traction, which makes the system mildly nonlinear even though
/// each fixed direction would be linear.
fn solve_slip(
    t_hat: &Vector3<f64>,
    a: &Matrix3<f64>,
    prev: &FracPointState,
    props: &ContactProps,
    t_scale: f64,
) -> Result<SlipOutcome> {
    let a_norm = a.norm().max(1e-300);
    let len_scale = (t_scale / a_norm + prev.jump.norm()).max(1e-300);
    let tol_u = 1e-12 * len_scale;
    let tol_f = 1e-12 * t_scale;

    let mut jump = prev.jump;
    let mut dl = 0.0_f64;

    for _ in 0..MAX_LOCAL_ITER {
        let t = t_hat - a * jump;
        let t_tau = t.yz();
        let tau_norm = t_tau.norm();
        if tau_norm < 1e-14 * t_scale {
            return Err(Error::Nonlinear(
                "slip direction is undefined: tangential traction vanished".into(),
            ));
        }
        let dir = t_tau / tau_norm;

        let m = Vector3::new(props.dilation, dir.x, dir.y);
        let r_u = jump - prev.jump - dl * m;
        let r_f = tau_norm + props.friction * t.x - (prev.q + props.hardening * dl);

        if r_u.norm() <= tol_u && r_f.abs() <= tol_f {
            break;
        }

        // d(m)/d(t): tangential block (I - dir dir^T)/|t_tau|, zero row for
        // the constant dilation component.
        let p_dir = (Matrix2::identity() - dir * dir.transpose()) / tau_norm;
        let mut dm_dt = Matrix3::zeros();
        dm_dt.fixed_view_mut::<2, 2>(1, 1).copy_from(&p_dir);

        // n_f = dF/dt = (friction, dir).
        let n_f = Vector3::new(props.friction, dir.x, dir.y);

        let mut jac = Matrix4::zeros();
        let j_uu = Matrix3::identity() + dl * dm_dt * a;
        jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&j_uu);
        jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-m));
        jac.fixed_view_mut::<1, 3>(3, 0)
            .copy_from(&(-(a.transpose() * n_f)).transpose());
        jac[(3, 3)] = -props.hardening;

        let rhs = Vector4::new(r_u.x, r_u.y, r_u.z, r_f);
        let dz = jac.lu().solve(&(-rhs)).ok_or_else(|| {
            Error::Nonlinear("singular local contact system during slip solve".into())
        })?;
        jump += Vector3::new(dz.x, dz.y, dz.z);
        dl += dz.w;
    }

    let t = t_hat - a * jump;
    let t_tau = t.yz();
    let tau_norm = t_tau.norm();
    let dir = t_tau / tau_norm;
    let m = Vector3::new(props.dilation, dir.x, dir.y);
    let r_u = jump - prev.jump - dl * m;
    let r_f = tau_norm + props.friction * t.x - (prev.q + props.hardening * dl);
    if r_u.norm() > tol_u * 10.0 || r_f.abs() > tol_f * 10.0 {
        return Err(Error::Nonlinear(format!(
            "local slip solve stalled: |r_u| = {:.3e}, |r_f| = {:.3e}",
            r_u.norm(),
            r_f.abs()
        )));
    }
    if dl < 0.0 {
        return Ok(SlipOutcome::Unloading);
    }
    if t.x > 1e-10 * t_scale {
        return Ok(SlipOutcome::TensileAtSolution);
    }

    // Consistent sensitivity d(jump)/d(t_hat) from the converged residuals:
    // the 4x4 system J dz = -dr/dt_hat with dr_u/dt_hat = -dl * dm_dt and
    // dr_f/dt_hat = n_f, solved column by column; the jump rows are kept.
    let p_dir = (Matrix2::identity() - dir * dir.transpose()) / tau_norm;
    let mut dm_dt = Matrix3::zeros();
    dm_dt.fixed_view_mut::<2, 2>(1, 1).copy_from(&p_dir);
    let n_f = Vector3::new(props.friction, dir.x, dir.y);

    let mut jac = Matrix4::zeros();
    let j_uu = Matrix3::identity() + dl * dm_dt * a;
    jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&j_uu);
    jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-m));
    jac.fixed_view_mut::<1, 3>(3, 0)
        .copy_from(&(-(a.transpose() * n_f)).transpose());
    jac[(3, 3)] = -props.hardening;
    let lu = jac.lu();

    let mut djump = Matrix3::zeros();
    for c in 0..3 {
        let mut rhs = Vector4::zeros();
        // -dr/dt_hat_c: r_u picks dl * dm_dt column, r_f picks -n_f entry.
        let col = dm_dt.column(c) * dl;
        rhs.fixed_view_mut::<3, 1>(0, 0).copy_from(&col);
        rhs.w = -n_f[c];
        let dz = lu.solve(&rhs).ok_or_else(|| {
            Error::Nonlinear("singular local contact system in sensitivity solve".into())
        })?;
        djump.set_column(c, &Vector3::new(dz.x, dz.y, dz.z));
    }

    Ok(SlipOutcome::Slipping(LocalSolution {
        jump,
        traction: t,
        status: FracStatus::Slip,
        dlambda: dl,
        q_new: prev.q + props.hardening * dl,
        djump_dthat: djump,
    }))
}

/// Joint solution for two fracture points inside one element, where each
/// traction sees both jumps: t_i = t_hat_i - sum_j a[i][j] * jump_j.
#[derive(Debug, Clone)]
pub struct PairSolution {
    pub sols: [LocalSolution; 2],
    /// cross[i][k] = d(jump_i)/d(t_hat_k).
    pub cross: [[Matrix3<f64>; 2]; 2],
}

/// Resolve the statuses of two mutually coupled fracture points. Supported
/// status pairs: stick/stick, slip/stick, slip/slip. A point that wants to
/// open while sharing an element with another fracture is rejected as an
/// unsupported state.
pub fn solve_pair(
    t_hat: [&Vector3<f64>; 2],
    a: &[[Matrix3<f64>; 2]; 2],
    prev: [&FracPointState; 2],
    props: [&ContactProps; 2],
) -> Result<PairSolution> {
    let t_scale = t_hat[0].norm().max(t_hat[1].norm()).max(1.0);
    let tol_t = 1e-12 * t_scale;

    // Start the status fixed point from the hinted branches (open is not
    // representable here, so such a hint degrades to stick).
    let hint = |p: &FracPointState| match p.status {
        FracStatus::Slip => FracStatus::Slip,
        _ => FracStatus::Stick,
    };
    let mut statuses = [hint(prev[0]), hint(prev[1])];
    for _ in 0..12 {
        let trial = solve_pair_for_statuses(statuses, t_hat, a, prev, props, t_scale)?;

        // Classify each point at the trial jumps.
        let mut want = statuses;
        for i in 0..2 {
            let t = &trial.sols[i].traction;
            if t.x > 10.0 * tol_t {
                return Err(Error::UnsupportedState(
                    "fracture opening inside an element crossed by two fractures".into(),
                ));
            }
            want[i] = match statuses[i] {
                FracStatus::Stick => {
                    if yield_value(t, prev[i].q, props[i]) > tol_t {
                        FracStatus::Slip
                    } else {
                        FracStatus::Stick
                    }
                }
                FracStatus::Slip => {
                    if trial.sols[i].dlambda < 0.0 {
                        FracStatus::Stick
                    } else {
                        FracStatus::Slip
                    }
                }
                FracStatus::Open => unreachable!("open is rejected above"),
            };
        }
        if want == statuses {
            return Ok(trial);
        }
        statuses = want;
    }
    Err(Error::Nonlinear(
        "coupled two-fracture contact statuses did not settle".into(),
    ))
}

/// Solve the pair with the statuses fixed. Slip points run the return
/// mapping (a negative multiplier is reported through dlambda rather than
/// being an error); stick points keep their previous jump.
fn solve_pair_for_statuses(
    statuses: [FracStatus; 2],
    t_hat: [&Vector3<f64>; 2],
    a: &[[Matrix3<f64>; 2]; 2],
    prev: [&FracPointState; 2],
    props: [&ContactProps; 2],
    t_scale: f64,
) -> Result<PairSolution> {
    use FracStatus::{Slip, Stick};
    let stick_sol = |i: usize, other_jump: &Vector3<f64>| LocalSolution {
        jump: prev[i].jump,
        traction: t_hat[i] - a[i][i] * prev[i].jump - a[i][1 - i] * other_jump,
        status: Stick,
        dlambda: 0.0,
        q_new: prev[i].q,
        djump_dthat: Matrix3::zeros(),
    };

    match statuses {
        [Stick, Stick] => {
            let s0 = stick_sol(0, &prev[1].jump);
            let s1 = stick_sol(1, &prev[0].jump);
            Ok(PairSolution {
                sols: [s0, s1],
                cross: [[Matrix3::zeros(); 2]; 2],
            })
        }
        [Slip, Stick] | [Stick, Slip] => {
            let i = if statuses[0] == Slip { 0 } else { 1 };
            let k = 1 - i;
            // The stuck jump only shifts the slipping point's loading.
            let t_eff = t_hat[i] - a[i][k] * prev[k].jump;
            let sol_i = slip_or_unloading(&t_eff, &a[i][i], prev[i], props[i], t_scale)?;
            let sol_k = stick_sol(k, &sol_i.jump);
            let mut cross = [[Matrix3::zeros(); 2]; 2];
            cross[i][i] = sol_i.djump_dthat;
            let mut sols = [sol_i.clone(), sol_k];
            if i == 1 {
                sols.swap(0, 1);
            }
            Ok(PairSolution { sols, cross })
        }
        [Slip, Slip] => solve_double_slip(t_hat, a, prev, props, t_scale),
        _ => Err(Error::UnsupportedState(
            "unsupported status pair in coupled contact solve".into(),
        )),
    }
}

/// Run the slip return mapping; a tensile solution is an unsupported state
/// here (pair context), unloading is reported with dlambda < 0 so the
/// status loop can demote the point.
fn slip_or_unloading(
    t_hat: &Vector3<f64>,
    a: &Matrix3<f64>,
    prev: &FracPointState,
    props: &ContactProps,
    t_scale: f64,
) -> Result<LocalSolution> {
    match solve_slip(t_hat, a, prev, props, t_scale)? {
        SlipOutcome::Slipping(sol) => Ok(sol),
        SlipOutcome::TensileAtSolution => Err(Error::UnsupportedState(
            "fracture opening inside an element crossed by two fractures".into(),
        )),
        SlipOutcome::Unloading => Ok(LocalSolution {
            jump: prev.jump,
            traction: t_hat - a * prev.jump,
            status: FracStatus::Slip,
            dlambda: -1.0,
            q_new: prev.q,
            djump_dthat: Matrix3::zeros(),
        }),
    }
}

/// Both points slipping: 8-unknown Newton on the concatenated return
/// mappings, followed by the implicit-function sensitivities.
fn solve_double_slip(
    t_hat: [&Vector3<f64>; 2],
    a: &[[Matrix3<f64>; 2]; 2],
    prev: [&FracPointState; 2],
    props: [&ContactProps; 2],
    t_scale: f64,
) -> Result<PairSolution> {
    use nalgebra::{SMatrix, SVector};
    type Vec8 = SVector<f64, 8>;
    type Mat8 = SMatrix<f64, 8, 8>;

    let a_norm = a[0][0].norm().max(a[1][1].norm()).max(1e-300);
    let len_scale = (t_scale / a_norm + prev[0].jump.norm() + prev[1].jump.norm()).max(1e-300);
    let tol_u = 1e-12 * len_scale;
    let tol_f = 1e-12 * t_scale;

    let mut jump = [prev[0].jump, prev[1].jump];
    let mut dl = [0.0_f64; 2];

    // Packed unknown layout: [u0 (3), dl0, u1 (3), dl1].
    let off = |i: usize| 4 * i;

    let eval = |jump: &[Vector3<f64>; 2], dl: &[f64; 2]| -> Result<([Vector3<f64>; 2], [Vector2<f64>; 2], [f64; 2], Vec8)> {
        let mut t = [Vector3::zeros(); 2];
        let mut dirs = [Vector2::zeros(); 2];
        let mut taus = [0.0; 2];
        let mut r = Vec8::zeros();
        for i in 0..2 {
            t[i] = t_hat[i] - a[i][0] * jump[0] - a[i][1] * jump[1];
            let t_tau = t[i].yz();
            taus[i] = t_tau.norm();
            if taus[i] < 1e-14 * t_scale {
                return Err(Error::Nonlinear(
                    "slip direction is undefined in coupled contact solve".into(),
                ));
            }
            dirs[i] = t_tau / taus[i];
            let m = Vector3::new(props[i].dilation, dirs[i].x, dirs[i].y);
            let r_u = jump[i] - prev[i].jump - dl[i] * m;
            let r_f = taus[i] + props[i].friction * t[i].x - (prev[i].q + props[i].hardening * dl[i]);
            r[off(i)] = r_u.x;
            r[off(i) + 1] = r_u.y;
            r[off(i) + 2] = r_u.z;
            r[off(i) + 3] = r_f;
        }
        Ok((t, dirs, taus, r))
    };

    let jacobian = |dirs: &[Vector2<f64>; 2], taus: &[f64; 2], dl: &[f64; 2]| -> Mat8 {
        let mut jac = Mat8::zeros();
        for i in 0..2 {
            let p_dir = (Matrix2::identity() - dirs[i] * dirs[i].transpose()) / taus[i];
            let mut dm_dt = Matrix3::zeros();
            dm_dt.fixed_view_mut::<2, 2>(1, 1).copy_from(&p_dir);
            let n_f = Vector3::new(props[i].friction, dirs[i].x, dirs[i].y);
            let m = Vector3::new(props[i].dilation, dirs[i].x, dirs[i].y);
            for j in 0..2 {
                let mut j_uu = dl[i] * dm_dt * a[i][j];
                if i == j {
                    j_uu += Matrix3::identity();
                }
                jac.fixed_view_mut::<3, 3>(off(i), off(j)).copy_from(&j_uu);
                jac.fixed_view_mut::<1, 3>(off(i) + 3, off(j))
                    .copy_from(&(-(a[i][j].transpose() * n_f)).transpose());
            }
            jac.fixed_view_mut::<3, 1>(off(i), off(i) + 3).copy_from(&(-m));
            jac[(off(i) + 3, off(i) + 3)] = -props[i].hardening;
        }
        jac
    };

    let mut converged = false;
    for _ in 0..MAX_LOCAL_ITER {
        let (_t, dirs, taus, r) = eval(&jump, &dl)?;
        let ru_norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[4] * r[4] + r[5] * r[5]
            + r[6] * r[6])
            .sqrt();
        let rf_norm = r[3].abs().max(r[7].abs());
        if ru_norm <= tol_u && rf_norm <= tol_f {
            converged = true;
            break;
        }
        let jac = jacobian(&dirs, &taus, &dl);
        let dz = jac.lu().solve(&(-r)).ok_or_else(|| {
            Error::Nonlinear("singular coupled two-point slip system".into())
        })?;
        for i in 0..2 {
            jump[i] += Vector3::new(dz[off(i)], dz[off(i) + 1], dz[off(i) + 2]);
            dl[i] += dz[off(i) + 3];
        }
    }
    let (t, dirs, taus, r) = eval(&jump, &dl)?;
    if !converged {
        let rn = r.norm();
        return Err(Error::Nonlinear(format!(
            "coupled two-point slip solve stalled: |r| = {rn:.3e}"
        )));
    }

    // Sensitivities d(jump_i)/d(t_hat_k) by the implicit function theorem on
    // the converged system.
    let jac = jacobian(&dirs, &taus, &dl);
    let lu = jac.lu();
    let mut cross = [[Matrix3::zeros(); 2]; 2];
    for k in 0..2 {
        let p_dir = (Matrix2::identity() - dirs[k] * dirs[k].transpose()) / taus[k];
        let mut dm_dt = Matrix3::zeros();
        dm_dt.fixed_view_mut::<2, 2>(1, 1).copy_from(&p_dir);
        let n_f = Vector3::new(props[k].friction, dirs[k].x, dirs[k].y);
        for c in 0..3 {
            // -d r/d t_hat_k[c]: only point k's residuals depend on t_hat_k.
            let mut rhs = Vec8::zeros();
            let col = dm_dt.column(c) * dl[k];
            rhs[off(k)] = col.x;
            rhs[off(k) + 1] = col.y;
            rhs[off(k) + 2] = col.z;
            rhs[off(k) + 3] = -n_f[c];
            let dz = lu.solve(&rhs).ok_or_else(|| {
                Error::Nonlinear("singular coupled slip system in sensitivity solve".into())
            })?;
            for i in 0..2 {
                cross[i][k].set_column(c, &Vector3::new(dz[off(i)], dz[off(i) + 1], dz[off(i) + 2]));
            }
        }
    }

    let mk_sol = |i: usize| LocalSolution {
        jump: jump[i],
        traction: t[i],
        status: FracStatus::Slip,
        dlambda: dl[i],
        q_new: prev[i].q + props[i].hardening * dl[i],
        djump_dthat: cross[i][i],
    };
    Ok(PairSolution {
        sols: [mk_sol(0), mk_sol(1)],
        cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::tensor::{
        frame_rotation, isotropic_stiffness, outer_sym_voigt, traction_matrix, voigt_to_stress,
    };
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MPA: f64 = 1e6;

    fn props(friction: f64, dilation: f64, hardening: f64) -> ContactProps {
        ContactProps {
            friction,
            dilation,
            hardening,
        }
    }

    /// Influence matrix on an axis-aligned configuration: g along the
    /// normal with magnitude 1/h.
    fn diag_a(e: f64, nu: f64, h: f64) -> Matrix3<f64> {
        let (lambda, mu) = super::super::tensor::lame_params(e, nu);
        influence_matrix(lambda, mu, &Vector3::new(1.0 / h, 0.0, 0.0))
    }

    #[test]
    fn influence_matrix_matches_tensor_contraction() {
        // Hand formula vs the full Voigt pipeline
        // a_ij = [R (n . C : sym(grad_f x R^T e_j))]_i for random frames.
        let (e, nu) = (25e9, 0.22);
        let (lambda, mu) = super::super::tensor::lame_params(e, nu);
        let c = isotropic_stiffness(e, nu);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let t1 = n.cross(&Vector3::new(0.3, -0.9, 0.4)).normalize();
            let t2 = n.cross(&t1);
            let r = frame_rotation(&n, &t1, &t2);
            let grad_f = Vector3::new(rng.gen(), rng.gen(), rng.gen()) + n * 2.0;
            let g_frame = r * grad_f;
            let a_hand = influence_matrix(lambda, mu, &g_frame);
            let nmat = traction_matrix(&n);
            let mut a_num = Matrix3::zeros();
            for j in 0..3 {
                let u_global = r.transpose() * Vector3::ith(j, 1.0);
                let dsig = c * outer_sym_voigt(&grad_f, &u_global);
                let t_global = nmat * dsig;
                a_num.set_column(j, &(r * t_global));
            }
            // The Voigt route evaluates n . C : sym(grad_f x u) directly.
            let _ = voigt_to_stress(&(c * outer_sym_voigt(&grad_f, &Vector3::x())));
            assert_relative_eq!((a_hand - a_num).norm(), 0.0, epsilon = 1e-6 * a_num.norm());
        }
    }

    #[test]
    fn compressed_point_sticks() {
        let a = diag_a(20e9, 0.25, 1.0);
        let t_hat = Vector3::new(-5.0 * MPA, 1.0 * MPA, 0.0);
        let prev = FracPointState::new(0.0);
        let sol = solve_local(&t_hat, &a, &prev, &props(0.6, 0.0, 0.0)).unwrap();
        assert_eq!(sol.status, FracStatus::Stick);
        assert_relative_eq!(sol.jump.norm(), 0.0, epsilon = 1e-30);
        assert_relative_eq!(sol.traction.x, -5.0 * MPA, max_relative = 1e-12);
        assert_relative_eq!(sol.djump_dthat.norm(), 0.0, epsilon = 1e-30);
    }

    #[test]
    fn coulomb_slip_returns_to_yield_surface() {
        // t_n = -5 MPa, |t_tau| = 5 MPa, friction 0.6: slip reduces the
        // tangential traction to 3 MPa; with zero dilation and a diagonal
        // influence matrix the normal traction is untouched.
        let a = diag_a(20e9, 0.25, 1.0);
        let t_hat = Vector3::new(-5.0 * MPA, 5.0 * MPA, 0.0);
        let prev = FracPointState::new(0.0);
        let sol = solve_local(&t_hat, &a, &prev, &props(0.6, 0.0, 0.0)).unwrap();
        assert_eq!(sol.status, FracStatus::Slip);
        assert_relative_eq!(sol.traction.x, -5.0 * MPA, max_relative = 1e-10);
        assert_relative_eq!(sol.traction.y, 3.0 * MPA, max_relative = 1e-10);
        assert_relative_eq!(sol.traction.z, 0.0, epsilon = 1.0);
        // Slip magnitude recovers the traction drop through the shear
        // stiffness mu * g_n.
        let mu_l = 20e9 / (2.0 * 1.25);
        assert_relative_eq!(sol.jump.y, 2.0 * MPA / mu_l, max_relative = 1e-10);
        assert_relative_eq!(sol.dlambda, sol.jump.y, max_relative = 1e-10);
        assert!(sol.jump.x.abs() < 1e-20);
    }

    #[test]
    fn tensile_point_opens_traction_free() {
        let a = diag_a(20e9, 0.25, 1.0);
        let t_hat = Vector3::new(10.0 * MPA, 2.0 * MPA, -1.0 * MPA);
        let prev = FracPointState::new(0.0);
        let sol = solve_local(&t_hat, &a, &prev, &props(0.6, 0.0, 0.0)).unwrap();
        assert_eq!(sol.status, FracStatus::Open);
        assert_relative_eq!(sol.traction.norm(), 0.0, epsilon = 1e-8 * MPA * 1e-6);
        assert!(sol.jump.x > 0.0);
        // a * jump = t_hat exactly.
        assert_relative_eq!((a * sol.jump - t_hat).norm(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn dilation_opens_while_slipping() {
        let a = diag_a(20e9, 0.25, 1.0);
        let t_hat = Vector3::new(-5.0 * MPA, 5.0 * MPA, 0.0);
        let prev = FracPointState::new(0.0);
        let theta = 0.1;
        let sol = solve_local(&t_hat, &a, &prev, &props(0.6, theta, 0.0)).unwrap();
        assert_eq!(sol.status, FracStatus::Slip);
        assert_relative_eq!(sol.jump.x, theta * sol.dlambda, max_relative = 1e-10);
        assert!(sol.jump.x > 0.0);
        // Dilation against the normal stiffness raises compression, so the
        // final normal traction is more negative than the trial.
        assert!(sol.traction.x < -5.0 * MPA);
        // Still exactly on the yield surface.
        assert_relative_eq!(
            yield_value(&sol.traction, sol.q_new, &props(0.6, theta, 0.0)),
            0.0,
            epsilon = 1e-10 * 5.0 * MPA
        );
    }

    #[test]
    fn hardening_strengthens_with_slip() {
        let a = diag_a(20e9, 0.25, 1.0);
        let t_hat = Vector3::new(-5.0 * MPA, 5.0 * MPA, 0.0);
        let prev = FracPointState::new(0.5 * MPA);
        let h = 1e9;
        let sol = solve_local(&t_hat, &a, &prev, &props(0.6, 0.0, h)).unwrap();
        assert_eq!(sol.status, FracStatus::Slip);
        assert!(sol.q_new > prev.q);
        assert_relative_eq!(sol.q_new, prev.q + h * sol.dlambda, max_relative = 1e-12);
        // Final state on the hardened yield surface.
        let f = sol.traction.yz().norm() + 0.6 * sol.traction.x - sol.q_new;
        assert_relative_eq!(f, 0.0, epsilon = 1e-9 * MPA);
    }

    /// Random fully-populated (but sensible) influence matrix.
    fn random_a(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let (lambda, mu) = super::super::tensor::lame_params(
            rng.gen_range(5e9..40e9),
            rng.gen_range(0.1..0.35),
        );
        let h = rng.gen_range(0.5..4.0);
        // Ramp gradient tilted away from the normal, as in skewed cuts.
        let g = Vector3::new(
            1.0 / h,
            rng.gen_range(-0.3..0.3) / h,
            rng.gen_range(-0.3..0.3) / h,
        );
        influence_matrix(lambda, mu, &g)
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut tested = [0usize; 2];
        for _ in 0..200 {
            let a = random_a(&mut rng);
            let pr = props(
                rng.gen_range(0.3..0.9),
                rng.gen_range(0.0..0.3),
                rng.gen_range(0.0..2e9),
            );
            let mut prev = FracPointState::new(rng.gen_range(0.0..0.5 * MPA));
            prev.jump = Vector3::new(0.0, rng.gen_range(-1e-4..1e-4), rng.gen_range(-1e-4..1e-4));
            let t_hat = Vector3::new(
                rng.gen_range(-10.0 * MPA..8.0 * MPA),
                rng.gen_range(-8.0 * MPA..8.0 * MPA),
                rng.gen_range(-8.0 * MPA..8.0 * MPA),
            ) + a * prev.jump;
            let Ok(sol) = solve_local(&t_hat, &a, &prev, &pr) else {
                continue;
            };
            if sol.status == FracStatus::Stick {
                continue;
            }
            // Keep clear of status boundaries so the finite difference sees
            // a smooth branch.
            let t_trial = t_hat - a * prev.jump;
            let margin = 0.05 * MPA;
            match sol.status {
                FracStatus::Slip => {
                    if yield_value(&t_trial, prev.q, &pr) < margin || sol.traction.x > -margin {
                        continue;
                    }
                    tested[0] += 1;
                }
                FracStatus::Open => {
                    if t_trial.x < margin || sol.jump.x < 1e-9 {
                        continue;
                    }
                    tested[1] += 1;
                }
                FracStatus::Stick => unreachable!(),
            }
            let delta = 1e-7 * t_hat.norm().max(MPA);
            let mut fd = Matrix3::zeros();
            let mut consistent = true;
            for c in 0..3 {
                let mut tp = t_hat;
                tp[c] += delta;
                let mut tm = t_hat;
                tm[c] -= delta;
                let sp = solve_local(&tp, &a, &prev, &pr).unwrap();
                let sm = solve_local(&tm, &a, &prev, &pr).unwrap();
                if sp.status != sol.status || sm.status != sol.status {
                    consistent = false;
                    break;
                }
                fd.set_column(c, &((sp.jump - sm.jump) / (2.0 * delta)));
            }
            if !consistent {
                continue;
            }
            let scale = sol.djump_dthat.norm().max(1e-30);
            assert!(
                (fd - sol.djump_dthat).norm() <= 1e-6 * scale,
                "consistent tangent mismatch: rel err {:.3e} for {:?}",
                (fd - sol.djump_dthat).norm() / scale,
                sol.status
            );
        }
        assert!(tested[0] >= 20, "too few slip states exercised: {}", tested[0]);
        assert!(tested[1] >= 10, "too few open states exercised: {}", tested[1]);
    }

    #[test]
    fn decoupled_pair_matches_independent_solves() {
        // With zero cross-influence the pair solve must reproduce two
        // independent single-point solves.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let a00 = random_a(&mut rng);
            let a11 = random_a(&mut rng);
            let a = [[a00, Matrix3::zeros()], [Matrix3::zeros(), a11]];
            let pr0 = props(rng.gen_range(0.3..0.9), rng.gen_range(0.0..0.2), 0.0);
            let pr1 = props(rng.gen_range(0.3..0.9), 0.0, rng.gen_range(0.0..1e9));
            let prev0 = FracPointState::new(0.0);
            let prev1 = FracPointState::new(0.1 * MPA);
            let th0 = Vector3::new(-6.0 * MPA, rng.gen_range(0.0..8.0) * MPA, 1.0 * MPA);
            let th1 = Vector3::new(-4.0 * MPA, -2.0 * MPA, rng.gen_range(0.0..6.0) * MPA);
            let pair = solve_pair([&th0, &th1], &a, [&prev0, &prev1], [&pr0, &pr1]);
            let s0 = solve_local(&th0, &a00, &prev0, &pr0);
            let s1 = solve_local(&th1, &a11, &prev1, &pr1);
            match (pair, s0, s1) {
                (Ok(pair), Ok(s0), Ok(s1)) => {
                    // Skip cases that want to open: the pair path rejects
                    // them by design.
                    if s0.status == FracStatus::Open || s1.status == FracStatus::Open {
                        continue;
                    }
                    assert_eq!(pair.sols[0].status, s0.status);
                    assert_eq!(pair.sols[1].status, s1.status);
                    assert_relative_eq!(
                        (pair.sols[0].jump - s0.jump).norm(),
                        0.0,
                        epsilon = 1e-12 * s0.jump.norm().max(1e-12)
                    );
                    assert_relative_eq!(
                        (pair.sols[1].jump - s1.jump).norm(),
                        0.0,
                        epsilon = 1e-12 * s1.jump.norm().max(1e-12)
                    );
                    assert_relative_eq!(
                        (pair.cross[0][0] - s0.djump_dthat).norm(),
                        0.0,
                        epsilon = 1e-9 * s0.djump_dthat.norm().max(1e-30)
                    );
                    assert!(pair.cross[0][1].norm() == 0.0);
                    assert!(pair.cross[1][0].norm() == 0.0);
                }
                _ => continue,
            }
        }
    }

    /// A pair of genuinely coupled influence matrices built from two
    /// distinct fracture orientations through the elastic tensor.
    fn coupled_pair_system(
        rng: &mut ChaCha8Rng,
    ) -> ([[Matrix3<f64>; 2]; 2], [Vector3<f64>; 2]) {
        let (lambda, mu) =
            super::super::tensor::lame_params(rng.gen_range(10e9..30e9), rng.gen_range(0.15..0.3));
        let n0 = Vector3::new(1.0, 0.0, 0.0);
        let n1 = Vector3::new(rng.gen_range(-0.4..0.4), 1.0, rng.gen_range(-0.2..0.2)).normalize();
        let mk_frame = |n: &Vector3<f64>| {
            let t1 = n.cross(&Vector3::z()).normalize();
            let t2 = n.cross(&t1);
            frame_rotation(n, &t1, &t2)
        };
        let r0 = mk_frame(&n0);
        let r1 = mk_frame(&n1);
        let h = rng.gen_range(0.5..2.0);
        let g0 = n0 / h;
        let g1 = n1 / h;
        let cross_l = |ni: &Vector3<f64>, gj: &Vector3<f64>| {
            lambda * ni * gj.transpose()
                + mu * ni.dot(gj) * Matrix3::identity()
                + mu * gj * ni.transpose()
        };
        let a = [
            [r0 * cross_l(&n0, &g0) * r0.transpose(), r0 * cross_l(&n0, &g1) * r1.transpose()],
            [r1 * cross_l(&n1, &g0) * r0.transpose(), r1 * cross_l(&n1, &g1) * r1.transpose()],
        ];
        let th = [
            Vector3::new(-5.0 * MPA, rng.gen_range(4.0..9.0) * MPA, 0.5 * MPA),
            Vector3::new(-6.0 * MPA, rng.gen_range(4.0..9.0) * MPA, -0.5 * MPA),
        ];
        (a, th)
    }

    #[test]
    fn coupled_double_slip_satisfies_both_return_mappings() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut slipped_both = 0;
        for _ in 0..100 {
            let (a, th) = coupled_pair_system(&mut rng);
            let pr = props(0.6, 0.05, 0.0);
            let prev = FracPointState::new(0.0);
            let Ok(pair) = solve_pair([&th[0], &th[1]], &a, [&prev, &prev], [&pr, &pr]) else {
                continue;
            };
            // Tractions must be consistent with both jumps simultaneously.
            for i in 0..2 {
                let t = th[i] - a[i][0] * pair.sols[0].jump - a[i][1] * pair.sols[1].jump;
                assert_relative_eq!(
                    (t - pair.sols[i].traction).norm(),
                    0.0,
                    epsilon = 1e-8 * MPA
                );
                match pair.sols[i].status {
                    FracStatus::Slip => {
                        assert!(yield_value(&t, pair.sols[i].q_new, &pr).abs() < 1e-7 * MPA);
                        assert!(pair.sols[i].dlambda >= 0.0);
                    }
                    FracStatus::Stick => {
                        assert!(yield_value(&t, prev.q, &pr) < 1e-7 * MPA);
                    }
                    FracStatus::Open => panic!("open must be rejected in pair solve"),
                }
            }
            if pair.sols.iter().all(|s| s.status == FracStatus::Slip) {
                slipped_both += 1;
            }
        }
        assert!(slipped_both > 30, "too few double-slip cases: {slipped_both}");
    }

    #[test]
    fn pair_cross_sensitivities_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        'outer: for _ in 0..60 {
            let (a, th) = coupled_pair_system(&mut rng);
            let pr = props(0.55, 0.08, 5e8);
            let prev = FracPointState::new(0.0);
            let Ok(pair) = solve_pair([&th[0], &th[1]], &a, [&prev, &prev], [&pr, &pr]) else {
                continue;
            };
            if !pair.sols.iter().all(|s| s.status == FracStatus::Slip) {
                continue;
            }
            // Solid margins from both status boundaries.
            if pair.sols.iter().any(|s| s.traction.x > -0.2 * MPA || s.dlambda < 1e-6) {
                continue;
            }
            let delta = 1e-7 * (th[0].norm() + th[1].norm());
            for k in 0..2 {
                for c in 0..3 {
                    let mut tp = [th[0], th[1]];
                    tp[k][c] += delta;
                    let mut tm = [th[0], th[1]];
                    tm[k][c] -= delta;
                    let Ok(sp) = solve_pair([&tp[0], &tp[1]], &a, [&prev, &prev], [&pr, &pr])
                    else {
                        continue 'outer;
                    };
                    let Ok(sm) = solve_pair([&tm[0], &tm[1]], &a, [&prev, &prev], [&pr, &pr])
                    else {
                        continue 'outer;
                    };
                    if sp.sols.iter().any(|s| s.status != FracStatus::Slip)
                        || sm.sols.iter().any(|s| s.status != FracStatus::Slip)
                    {
                        continue 'outer;
                    }
                    for i in 0..2 {
                        let fd = (sp.sols[i].jump - sm.sols[i].jump) / (2.0 * delta);
                        let an = pair.cross[i][k].column(c);
                        let scale = pair.cross[i][k].norm().max(1e-30);
                        assert!(
                            (fd - an).norm() <= 1e-5 * scale,
                            "pair tangent mismatch [{i}][{k}] col {c}: {:.3e}",
                            (fd - an).norm() / scale
                        );
                    }
                }
            }
            tested += 1;
        }
        assert!(tested >= 10, "too few coupled FD checks ran: {tested}");
    }

    #[test]
    fn opening_in_pair_is_unsupported() {
        let a00 = diag_a(20e9, 0.25, 1.0);
        let a = [[a00, Matrix3::zeros()], [Matrix3::zeros(), a00]];
        let pr = props(0.6, 0.0, 0.0);
        let prev = FracPointState::new(0.0);
        let th0 = Vector3::new(5.0 * MPA, 1.0 * MPA, 0.0);
        let th1 = Vector3::new(-5.0 * MPA, 1.0 * MPA, 0.0);
        let err = solve_pair([&th0, &th1], &a, [&prev, &prev], [&pr, &pr]).unwrap_err();
        assert!(matches!(err, crate::Error::UnsupportedState(_)));
    }

    #[test]
    fn return_mapping_invariants_hold_in_bulk() {
        // Large randomized sweep: every outcome satisfies the contact
        // conditions to tight tolerance.
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let a = random_a(&mut rng);
            let pr = props(
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..0.4),
                rng.gen_range(0.0..5e9),
            );
            let mut prev = FracPointState::new(rng.gen_range(0.0..1.0 * MPA));
            prev.jump = Vector3::new(
                rng.gen_range(0.0..1e-4),
                rng.gen_range(-3e-4..3e-4),
                rng.gen_range(-3e-4..3e-4),
            );
            let t_hat = Vector3::new(
                rng.gen_range(-20.0 * MPA..15.0 * MPA),
                rng.gen_range(-10.0 * MPA..10.0 * MPA),
                rng.gen_range(-10.0 * MPA..10.0 * MPA),
            );
            let Ok(sol) = solve_local(&t_hat, &a, &prev, &pr) else {
                continue;
            };
            let tol = 1e-8 * t_hat.norm().max(MPA);
            // Traction consistency in every status.
            assert_relative_eq!(
                (sol.traction - (t_hat - a * sol.jump)).norm(),
                0.0,
                epsilon = tol
            );
            match sol.status {
                FracStatus::Stick => {
                    counts[0] += 1;
                    assert_eq!(sol.jump, prev.jump);
                    assert!(yield_value(&sol.traction, sol.q_new, &pr) <= tol);
                    assert!(sol.traction.x <= tol);
                }
                FracStatus::Slip => {
                    counts[1] += 1;
                    assert!(sol.dlambda >= 0.0);
                    assert!(sol.traction.x <= tol);
                    assert!(
                        yield_value(&sol.traction, sol.q_new, &pr).abs() <= tol,
                        "slip state off the yield surface"
                    );
                    // Dilation exactly ties normal opening to slip.
                    assert_relative_eq!(
                        sol.jump.x - prev.jump.x,
                        pr.dilation * sol.dlambda,
                        epsilon = 1e-12 * prev.jump.norm().max(1e-9)
                    );
                    assert!(sol.jump.x >= prev.jump.x - 1e-18);
                }
                FracStatus::Open => {
                    counts[2] += 1;
                    assert!(sol.traction.norm() <= tol);
                    assert!(sol.jump.x > 0.0);
                }
            }
            // Determinism: same inputs, same answer.
            let again = solve_local(&t_hat, &a, &prev, &pr).unwrap();
            assert_eq!(again.status, sol.status);
            assert_relative_eq!((again.jump - sol.jump).norm(), 0.0, epsilon = 1e-18);
        }
        assert!(counts.iter().all(|&c| c > 300), "status mix too thin: {counts:?}");
    }
}
