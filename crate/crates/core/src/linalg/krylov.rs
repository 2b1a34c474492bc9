//! Restarted GMRES and BiCGStab with right preconditioning.

use super::csr::CsrMatrix;
use super::ilu::Ilu0;
use crate::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub struct KrylovResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Right-preconditioned GMRES(m). Solves A x = b to a relative residual of
/// `tol` (measured against ||b||), starting from x = 0.
pub fn gmres(
    a: &CsrMatrix,
    m: &Ilu0,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovResult> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(KrylovResult {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut x = vec![0.0; n];
    let mut total_iters = 0;
    let mut scratch = vec![0.0; n];

    loop {
        // r = b - A x
        let mut r = b.to_vec();
        a.matvec_into(&x, &mut scratch);
        for i in 0..n {
            r[i] -= scratch[i];
        }
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            return Ok(KrylovResult {
                x,
                iterations: total_iters,
                rel_residual: beta / bnorm,
            });
        }
        if total_iters >= max_iter {
            return Err(Error::LinearSolve(format!(
                "GMRES stalled at rel residual {:.3e} after {} iterations",
                beta / bnorm,
                total_iters
            )));
        }

        // Arnoldi with Givens-rotated Hessenberg.
        let k_max = restart.min(max_iter - total_iters);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(k_max + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; k_max]; k_max + 1];
        let mut cs = vec![0.0; k_max];
        let mut sn = vec![0.0; k_max];
        let mut g = vec![0.0; k_max + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..k_max {
            // w = A M^-1 v_k
            m.apply(&v[k], &mut scratch);
            let mut w = a.matvec(&scratch);
            for (j, vj) in v.iter().enumerate().take(k + 1) {
                h[j][k] = dot(&w, vj);
                axpy(-h[j][k], vj, &mut w);
            }
            let wnorm = norm2(&w);
            h[k + 1][k] = wnorm;
            // Apply accumulated rotations to the new column (rows 0..=k only,
            // so h[k+1][k] keeps the fresh norm until the new rotation below).
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total_iters += 1;
            let rel = g[k + 1].abs() / bnorm;
            if rel <= tol || total_iters >= max_iter || wnorm == 0.0 {
                break;
            }
            if k + 1 < k_max {
                v.push(w.iter().map(|wi| wi / wnorm).collect());
            }
        }

        // Back-substitute y from the triangular system and update x += M^-1 (V y).
        let k = k_used;
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut z);
        }
        m.apply(&z, &mut scratch);
        for i in 0..n {
            x[i] += scratch[i];
        }
    }
}

/// Right-preconditioned BiCGStab, starting from x = 0.
pub fn bicgstab(
    a: &CsrMatrix,
    m: &Ilu0,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovResult> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(KrylovResult {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < f64::MIN_POSITIVE * 1e10 {
            return Err(Error::LinearSolve(format!(
                "BiCGStab breakdown (rho) at iteration {it}"
            )));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut phat);
        a.matvec_into(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s);
        if norm2(&s) / bnorm <= tol {
            axpy(alpha, &phat, &mut x);
            let rel = compute_rel_residual(a, &x, b, bnorm);
            return Ok(KrylovResult {
                x,
                iterations: it,
                rel_residual: rel,
            });
        }
        m.apply(&s, &mut shat);
        a.matvec_into(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::LinearSolve(format!(
                "BiCGStab breakdown (t) at iteration {it}"
            )));
        }
        omega = dot(&t, &s) / tt;
        axpy(alpha, &phat, &mut x);
        axpy(omega, &shat, &mut x);
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / bnorm <= tol {
            let rel = compute_rel_residual(a, &x, b, bnorm);
            return Ok(KrylovResult {
                x,
                iterations: it,
                rel_residual: rel,
            });
        }
        if omega == 0.0 {
            return Err(Error::LinearSolve(format!(
                "BiCGStab breakdown (omega) at iteration {it}"
            )));
        }
    }
    Err(Error::LinearSolve(format!(
        "BiCGStab did not converge in {max_iter} iterations"
    )))
}

fn compute_rel_residual(a: &CsrMatrix, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
    let ax = a.matvec(x);
    let mut s = 0.0;
    for i in 0..b.len() {
        s += (b[i] - ax[i]) * (b[i] - ax[i]);
    }
    s.sqrt() / bnorm
}
