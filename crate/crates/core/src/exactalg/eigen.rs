//! Symmetric-definite generalized eigenvalues by Cholesky reduction and cyclic Jacobi.

use super::matrix::FloatMatrix;
use crate::error::{Error, Result};

/// Off-diagonal threshold relative to the Frobenius norm of the reduced matrix.
pub const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in increasing order (cyclic Jacobi rotations).
pub fn symmetric_eigenvalues(a: &FloatMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("eigenvalues of a {}x{} matrix", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut m = a.clone();
    // Symmetrize away rounding noise from the reduction.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let norm = m.frobenius_norm();
    let off = |m: &FloatMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > JACOBI_TOL * norm {
        if sweeps == MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalues of `g⁻¹h` in increasing order for SPD `g` and `h`.
///
/// `g = L Lᵀ` reduces the pencil to the symmetric matrix `L⁻¹ h L⁻ᵀ`, which has
/// the same spectrum.
pub fn gen_eigenvalues(g: &FloatMatrix, h: &FloatMatrix) -> Result<Vec<f64>> {
    if !g.is_square() || !h.is_square() || g.rows() != h.rows() {
        return Err(Error::Dimension(format!("pencil of {}x{} and {}x{} matrices", g.rows(), g.cols(), h.rows(), h.cols())));
    }
    if !g.is_symmetric(1e-12) {
        return Err(Error::NotSpd("first matrix of the pencil is not symmetric".into()));
    }
    if !h.is_symmetric(1e-12) {
        return Err(Error::NotSpd("second matrix of the pencil is not symmetric".into()));
    }
    let l = g.cholesky().map_err(|e| Error::NotSpd(format!("first matrix of the pencil: {e}")))?;
    h.cholesky().map_err(|e| Error::NotSpd(format!("second matrix of the pencil: {e}")))?;
    let li = l.lower_triangular_inverse()?;
    let reduced = li.mul(h).mul(&li.transpose());
    symmetric_eigenvalues(&reduced)
}
