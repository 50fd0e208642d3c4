//! Independent cross-check for the SLD Fisher information.
//!
//! The spectral formula in [`crate::fisher`] is verified against a
//! completely different computational route: solve the Lyapunov equation
//! ρL + Lρ = 2∂ρ with ∂ρ = −i[H, ρ] as a dense linear system in the
//! vectorized superoperator picture, then evaluate F = tr(∂ρ·L). No
//! eigendecomposition is involved — the system is solved by Gaussian
//! elimination with partial pivoting — so the two routes share no numerics
//! beyond matrix multiplication.

use crate::error::{Error, Result};
use crate::linalg::{commutator, devectorize, vectorize, Complex64, ComplexMatrix, HermitianOperator};
use crate::states::DensityMatrix;

/// Pivot threshold (relative to the largest initial entry) below which the
/// linear system is reported singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Solve A·x = b by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(n, b.len()));
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m
        .data()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);

    for col in 0..n {
        // Partial pivot: largest magnitude in the column at or below `col`.
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, m[(r, col)].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pivot_mag <= PIVOT_TOL * scale {
            return Err(Error::SingularSystem(pivot_mag / scale));
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(pivot_row, c)];
                m[(pivot_row, c)] = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[(col, col)];
        for r in col + 1..n {
            let factor = m[(r, col)] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..n {
                let sub = factor * m[(col, c)];
                m[(r, c)] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[r] -= sub;
        }
    }
    // Back substitution.
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[(r, c)] * x[c];
        }
        x[r] = acc / m[(r, r)];
    }
    Ok(x)
}

/// Symmetric logarithmic derivative L of the unitary family
/// ρ_t = e^{−iHt} ρ e^{iHt}: the solution of ρL + Lρ = 2∂ρ with
/// ∂ρ = −i[H, ρ], vectorized as (ρ⊗I + I⊗ρᵀ)·vec(L) = 2·vec(∂ρ).
pub fn sld_operator(rho: &DensityMatrix, h: &HermitianOperator) -> Result<ComplexMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), h.dim()));
    }
    let d = rho.dim();
    let drho = commutator(h.matrix(), rho.matrix()).scale(Complex64::new(0.0, -1.0));
    let id = ComplexMatrix::identity(d);
    let a = &rho.matrix().kron(&id) + &id.kron(&rho.matrix().transpose());
    let b: Vec<Complex64> = vectorize(&drho).iter().map(|z| z * 2.0).collect();
    let x = gauss_solve(&a, &b)?;
    devectorize(&x, d, d)
}

/// SLD Fisher information via the Lyapunov route: F = tr(∂ρ·L). Requires a
/// full-rank state — on rank-deficient ρ the superoperator is singular and
/// the error is propagated.
pub fn sld_fisher_lyapunov(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    let l = sld_operator(rho, h)?;
    let drho = commutator(h.matrix(), rho.matrix()).scale(Complex64::new(0.0, -1.0));
    Ok((&drho * &l).trace().re)
}
