//! Voigt-notation tensor utilities for the mechanics kernels.
//!
//! Conventions (tension positive throughout):
//! - strain vector  [exx, eyy, ezz, 2exy, 2eyz, 2ezx]
//! - stress vector  [sxx, syy, szz, sxy, syz, szx]
//! so that stress . strain is the energy density without extra factors.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

pub type Voigt = SVector<f64, 6>;
pub type Stiffness = SMatrix<f64, 6, 6>;

/// Lame parameters from Young's modulus and Poisson ratio.
pub fn lame_params(e: f64, nu: f64) -> (f64, f64) {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}

/// Isotropic linear-elastic stiffness in Voigt form.
pub fn isotropic_stiffness(e: f64, nu: f64) -> Stiffness {
    let (lambda, mu) = lame_params(e, nu);
    let mut c = Stiffness::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] += 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    c
}

/// Voigt strain vector of the symmetrized outer product sym(a x b), with
/// engineering (doubled) shear components.
pub fn outer_sym_voigt(a: &Vector3<f64>, b: &Vector3<f64>) -> Voigt {
    Voigt::from_column_slice(&[
        a.x * b.x,
        a.y * b.y,
        a.z * b.z,
        a.x * b.y + a.y * b.x,
        a.y * b.z + a.z * b.y,
        a.z * b.x + a.x * b.z,
    ])
}

/// 3x6 matrix N(n) with t = N(n) . stress_voigt = sigma . n.
pub fn traction_matrix(n: &Vector3<f64>) -> SMatrix<f64, 3, 6> {
    SMatrix::<f64, 3, 6>::from_row_slice(&[
        n.x, 0.0, 0.0, n.y, 0.0, n.z, //
        0.0, n.y, 0.0, n.x, n.z, 0.0, //
        0.0, 0.0, n.z, 0.0, n.y, n.x,
    ])
}

/// Voigt form of the identity tensor (for pressure terms): stress p*I.
pub fn identity_voigt() -> Voigt {
    Voigt::from_column_slice(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
}

/// Trace of a Voigt strain or stress vector.
pub fn voigt_trace(v: &Voigt) -> f64 {
    v[0] + v[1] + v[2]
}

/// Voigt stress vector of a symmetric 3x3 tensor.
pub fn stress_to_voigt(s: &Matrix3<f64>) -> Voigt {
    Voigt::from_column_slice(&[
        s[(0, 0)],
        s[(1, 1)],
        s[(2, 2)],
        s[(0, 1)],
        s[(1, 2)],
        s[(2, 0)],
    ])
}

/// Symmetric 3x3 tensor from a Voigt stress vector.
pub fn voigt_to_stress(v: &Voigt) -> Matrix3<f64> {
    Matrix3::new(v[0], v[3], v[5], v[3], v[1], v[4], v[5], v[4], v[2])
}

/// Rotation whose rows are (n, t1, t2): maps global vectors to fracture-frame
/// components with the normal first.
pub fn frame_rotation(n: &Vector3<f64>, t1: &Vector3<f64>, t2: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_rows(&[n.transpose(), t1.transpose(), t2.transpose()])
}
