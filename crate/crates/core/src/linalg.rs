//! Dense complex-matrix kernels.
//!
//! Everything downstream consumes these primitives: Hermitian
//! eigendecomposition (cyclic Jacobi), PSD matrix square root, polar
//! decomposition with explicit kernel completion, Kronecker products,
//! partial traces, and the row-major vectorization correspondence
//! (Y⊗Z)|X⟩⟩ = |Y·X·Zᵀ⟩⟩.
//!
//! All operations are pure functions over immutable values; tolerances are
//! relative to the Frobenius norm of the operand unless stated otherwise.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Per-entry tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalue floor below which an operator is rejected as non-PSD.
pub const PSD_EIG_FLOOR: f64 = -1e-10;
/// Sweep cap for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius threshold for Jacobi convergence, times ‖M‖_F.
pub const JACOBI_OFF_TOL: f64 = 1e-14;
/// Singular values below this times ‖A‖_F are treated as null in the polar
/// decomposition and the unitary factor is completed on those directions.
pub const NULL_SINGULAR_REL: f64 = 1e-12;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::ShapeMismatch(r, c, r, row.len()));
            }
            data.extend_from_slice(row);
        }
        let m = Self { rows: r, cols: c, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag_re(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Kronecker product, left factor major: (A⊗B)[(i,k),(j,l)] = A[i,j]·B[k,l].
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// (M + M†)/2.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Max per-entry deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }
}

/// AB − BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &(a * b) - &(b * a)
}

/// Hermitian operator: validated square complex matrix with M = M†.
///
/// Construction checks per-entry Hermiticity within [`HERMITIAN_TOL`] and
/// then replaces the matrix with (M+M†)/2 so downstream algebra sees an
/// exactly Hermitian operand.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare { rows: mat.rows, cols: mat.cols });
        }
        mat.check_finite()?;
        let defect = mat.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { mat: mat.hermitized() })
    }

    /// Symmetrize unconditionally. For operands that are Hermitian by
    /// construction or where symmetrization is the documented step (e.g.
    /// finite-difference derivatives).
    pub fn hermitized(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare { rows: mat.rows, cols: mat.cols });
        }
        mat.check_finite()?;
        Ok(Self { mat: mat.hermitized() })
    }

    pub fn from_real_diag(entries: &[f64]) -> Self {
        Self { mat: ComplexMatrix::diag_re(entries) }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// Real expectation tr(ρX)-style pairing tr(A·self) for Hermitian A is
    /// left to callers; this is the plain trace of the operator.
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }

    /// Linear combination Σ c_k X_k of Hermitian operators with real weights.
    pub fn linear_combination(ops: &[Self], weights: &[f64]) -> Result<Self> {
        if ops.is_empty() || ops.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "linear combination needs matching nonempty operator and weight lists".into(),
            ));
        }
        let dim = ops[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (op, &w) in ops.iter().zip(weights) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch(dim, op.dim()));
            }
            acc = &acc + &op.matrix().scale_re(w);
        }
        Self::hermitized(acc)
    }
}

/// Result of a Hermitian eigendecomposition: `values` ascending, `vectors`
/// unitary with eigenvector columns in matching order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Σ_i g(λ_i)·|v_i⟩⟨v_i| — spectral function application.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let gl = g(self.values[k]);
            if gl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * gl;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Complex spectral function, for unitary construction e^{iθλ}.
    pub fn apply_complex(&self, g: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let gl = g(self.values[k]);
            for i in 0..n {
                let vik = v[(i, k)] * gl;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian operator by cyclic Jacobi rotations.
///
/// Rejects (rather than returns partial results) if the off-diagonal mass
/// has not fallen below `JACOBI_OFF_TOL·‖M‖_F` after [`JACOBI_MAX_SWEEPS`].
pub fn eig_hermitian(op: &HermitianOperator) -> Result<EigenSystem> {
    let n = op.dim();
    let mut a = op.matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    let thresh = JACOBI_OFF_TOL * norm;

    if n > 1 && norm > 0.0 {
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&a) <= thresh {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&a) > thresh {
            return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenSystem { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing A[p][q]; updates A ← J†AJ, V ← V·J.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let abs_apq = apq.norm();
    if abs_apq == 0.0 {
        return;
    }
    let phase = apq / abs_apq; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Rotation block: J[p][p]=c, J[p][q]=s, J[q][p]=-s·e^{-iφ}, J[q][q]=c·e^{-iφ}.
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase.conj() * (-s);
    let jqq = phase.conj() * c;

    let n = a.rows();
    // Columns p, q of A (rows follow by Hermiticity).
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp * jpp + arq * jqp;
        let new_rq = arp * jpq + arq * jqq;
        a[(r, p)] = new_rp;
        a[(r, q)] = new_rq;
        a[(p, r)] = new_rp.conj();
        a[(q, r)] = new_rq.conj();
    }
    a[(p, p)] = Complex64::new(app - t * abs_apq, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * abs_apq, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp * jpp + vrq * jqp;
        v[(r, q)] = vrp * jpq + vrq * jqq;
    }
}

/// PSD square root via the spectral decomposition. Eigenvalues in
/// [`PSD_EIG_FLOOR`], 0) are clamped to zero; anything below the floor is a
/// non-PSD input and is rejected.
pub fn sqrt_psd(op: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = eig_hermitian(op)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < PSD_EIG_FLOOR {
        return Err(Error::NotPsd(min));
    }
    let m = eig.apply(|x| if x > 0.0 { x.sqrt() } else { 0.0 });
    HermitianOperator::hermitized(m)
}

/// Unitary factor V of the polar decomposition A = V·√(A†A).
///
/// Computed from the eigendecomposition of A†A; on singular directions
/// (singular value < [`NULL_SINGULAR_REL`]·‖A‖_F) the factor is completed to
/// a unitary by orthonormal basis extension. Any completion is valid there —
/// it is a gauge choice on the kernel.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let gram = HermitianOperator::hermitized(&a.dagger() * a)?;
    let eig = eig_hermitian(&gram)?;
    let cutoff = NULL_SINGULAR_REL * a.frobenius_norm();

    // Left singular vectors u_i = A·w_i/σ_i on the support.
    let mut left: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut null_slots: Vec<usize> = Vec::new();
    for k in 0..n {
        let sigma = eig.values[k].max(0.0).sqrt();
        if sigma <= cutoff {
            left.push(vec![Complex64::new(0.0, 0.0); n]);
            null_slots.push(k);
        } else {
            let wk: Vec<Complex64> = (0..n).map(|i| eig.vectors[(i, k)]).collect();
            let mut uk = a.mul_vec(&wk);
            // Renormalize; σ from the Gram eigenvalue already matches ‖A w_k‖.
            let norm = uk.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut uk {
                *z /= norm;
            }
            left.push(uk);
        }
    }
    if !null_slots.is_empty() {
        complete_orthonormal(&mut left, &null_slots);
    }

    // V = Σ_k u_k w_k†.
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, uk) in left.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                v[(i, j)] += uk[i] * eig.vectors[(j, k)].conj();
            }
        }
    }
    Ok(v)
}

/// Fill the zeroed slots of `vecs` with unit vectors orthonormal to every
/// other member, by repeatedly orthogonalizing the best standard basis
/// candidate (largest residual) against the current set.
fn complete_orthonormal(vecs: &mut [Vec<Complex64>], slots: &[usize]) {
    let n = vecs[0].len();
    let mut filled: Vec<usize> = (0..vecs.len()).filter(|k| !slots.contains(k)).collect();
    for &slot in slots {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for cand in 0..n {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[cand] = Complex64::new(1.0, 0.0);
            // Two orthogonalization passes for stability.
            for _ in 0..2 {
                for &k in &filled {
                    let overlap: Complex64 =
                        vecs[k].iter().zip(&v).map(|(u, x)| u.conj() * x).sum();
                    for (xi, ui) in v.iter_mut().zip(&vecs[k]) {
                        *xi -= overlap * ui;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.expect("dimension exhausted during completion");
        for z in &mut v {
            *z /= norm;
        }
        vecs[slot] = v;
        filled.push(slot);
    }
}

/// Modified Gram–Schmidt orthonormalization of the columns of a tall matrix
/// (rows ≥ cols). Returns the isometry Q with Q†Q = I; the implicit
/// triangular factor has positive diagonal, which is what makes QR of a
/// Ginibre matrix sample the unitary group uniformly.
pub fn orthonormalize_columns(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (m, k) = (g.rows(), g.cols());
    if m < k {
        return Err(Error::ShapeMismatch(m, k, k, k));
    }
    let mut cols: Vec<Vec<Complex64>> = (0..k)
        .map(|j| (0..m).map(|i| g[(i, j)]).collect())
        .collect();
    for j in 0..k {
        // Re-orthogonalize once against the already-finished columns for
        // numerical robustness (classical "MGS twice" remedy).
        for _ in 0..2 {
            for prev in 0..j {
                let overlap: Complex64 = cols[prev]
                    .iter()
                    .zip(&cols[j])
                    .map(|(u, x)| u.conj() * x)
                    .sum();
                let prev_col = cols[prev].clone();
                for (x, u) in cols[j].iter_mut().zip(&prev_col) {
                    *x -= overlap * u;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-10 * (m as f64).sqrt() {
            return Err(Error::LinearlyDependent(norm));
        }
        for z in &mut cols[j] {
            *z /= norm;
        }
    }
    Ok(ComplexMatrix::from_fn(m, k, |i, j| cols[j][i]))
}

/// Which tensor factor `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    /// Keep the left (major) factor, trace out the right.
    First,
    /// Keep the right (minor) factor, trace out the left.
    Second,
}

/// Partial trace of a (d1·d2)×(d1·d2) matrix with composite index
/// (a,b) = a·d2 + b.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: (usize, usize),
    keep: Keep,
) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    let total = d1 * d2;
    if m.rows() != total || m.cols() != total {
        return Err(Error::ShapeMismatch(m.rows(), m.cols(), total, total));
    }
    match keep {
        Keep::First => {
            let mut out = ComplexMatrix::zeros(d1, d1);
            for a in 0..d1 {
                for ap in 0..d1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..d2 {
                        acc += m[(a * d2 + b, ap * d2 + b)];
                    }
                    out[(a, ap)] = acc;
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = ComplexMatrix::zeros(d2, d2);
            for b in 0..d2 {
                for bp in 0..d2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..d1 {
                        acc += m[(a * d2 + b, a * d2 + bp)];
                    }
                    out[(b, bp)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Row-major vectorization |X⟩⟩ = Σ_ij x_ij |i⟩⊗|j⟩, so that
/// (Y⊗Z)·vec(X) = vec(Y·X·Zᵀ) and vec(I) is the unnormalized maximally
/// entangled vector Σ_i |i⟩|i⟩.
pub fn vectorize(x: &ComplexMatrix) -> Vec<Complex64> {
    x.data().to_vec()
}

/// Inverse of [`vectorize`] for the given shape.
pub fn devectorize(v: &[Complex64], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::ShapeMismatch(1, v.len(), rows, cols));
    }
    Ok(ComplexMatrix {
        rows,
        cols,
        data: v.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        })
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
        HermitianOperator::hermitized(random_matrix(n, rng)).unwrap()
    }

    fn pauli_x() -> HermitianOperator {
        HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.5, 0.0)],
            vec![c(0.2, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_diagonal_is_trivial() {
        let op = HermitianOperator::from_real_diag(&[1.0, 2.0]);
        let eig = eig_hermitian(&op).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0]);
        assert!(eig.vectors.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn eig_pauli_x() {
        // Characteristic polynomial λ² − 1 = 0 → eigenvalues ∓1.
        let eig = eig_hermitian(&pauli_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5, 8] {
            let op = random_hermitian(n, &mut rng);
            let eig = eig_hermitian(&op).unwrap();
            let rebuilt = eig.apply(|x| x);
            let err = (&rebuilt - op.matrix()).frobenius_norm();
            assert!(err <= 1e-10 * op.frobenius_norm().max(1.0), "n={n} err={err:e}");
            let gram = &eig.vectors.dagger() * &eig.vectors;
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10);
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eig_similarity_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let op = random_hermitian(4, &mut rng);
        // Unitary from the eigenvectors of an unrelated random Hermitian.
        let u = eig_hermitian(&random_hermitian(4, &mut rng)).unwrap().vectors;
        let conj = HermitianOperator::hermitized(&(&u * op.matrix()) * &u.dagger()).unwrap();
        let e1 = eig_hermitian(&op).unwrap().values;
        let e2 = eig_hermitian(&conj).unwrap().values;
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sqrt_psd_examples() {
        let id = HermitianOperator::from_real_diag(&[1.0, 1.0, 1.0]);
        let r = sqrt_psd(&id).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);

        let d = HermitianOperator::from_real_diag(&[4.0, 9.0]);
        let r = sqrt_psd(&d).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::diag_re(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn sqrt_psd_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_matrix(5, &mut rng);
        let psd = HermitianOperator::hermitized(&g * &g.dagger()).unwrap();
        let root = sqrt_psd(&psd).unwrap();
        let back = root.matrix() * root.matrix();
        assert!((&back - psd.matrix()).frobenius_norm() <= 1e-9 * psd.frobenius_norm());
    }

    #[test]
    fn sqrt_psd_rejects_negative() {
        let neg = HermitianOperator::from_real_diag(&[1.0, -0.5]);
        assert!(matches!(sqrt_psd(&neg), Err(Error::NotPsd(_))));
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap()
        .scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let v = polar_unitary(&h).unwrap();
        assert!(v.max_abs_diff(&h) < 1e-10);
    }

    #[test]
    fn polar_of_signed_diagonal() {
        let a = ComplexMatrix::diag_re(&[2.0, -3.0]);
        let v = polar_unitary(&a).unwrap();
        assert!(v.max_abs_diff(&ComplexMatrix::diag_re(&[1.0, -1.0])) < 1e-12);
    }

    #[test]
    fn polar_of_psd_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = random_matrix(4, &mut rng);
        let psd = &g * &g.dagger();
        let v = polar_unitary(&psd).unwrap();
        assert!(v.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn polar_reconstructs_and_completes_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // Rank-deficient: zero out a column.
        let mut a = random_matrix(4, &mut rng);
        for i in 0..4 {
            a[(i, 2)] = c(0.0, 0.0);
        }
        let v = polar_unitary(&a).unwrap();
        let gram = &v.dagger() * &v;
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10, "unitary completion");
        let habs = sqrt_psd(&HermitianOperator::hermitized(&a.dagger() * &a).unwrap()).unwrap();
        let rebuilt = &v * habs.matrix();
        assert!((&rebuilt - &a).frobenius_norm() <= 1e-9 * a.frobenius_norm());
        // V†·A = |A| is PSD.
        let va = HermitianOperator::hermitized(&v.dagger() * &a).unwrap();
        let min = eig_hermitian(&va).unwrap().values[0];
        assert!(min >= -1e-9 * a.frobenius_norm());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_matrix(2, &mut rng);
        let b = random_matrix(3, &mut rng);
        let ab = a.kron(&b);
        let kept = partial_trace(&ab, (2, 3), Keep::Second).unwrap();
        let expect = b.scale(a.trace());
        assert!(kept.max_abs_diff(&expect) < 1e-12);
        let kept_a = partial_trace(&ab, (2, 3), Keep::First).unwrap();
        assert!(kept_a.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        // Trace preservation.
        assert!((ab.trace() - kept.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_maximally_entangled() {
        // |Φ⟩ = (|00⟩+|11⟩)/√2; tracing either side leaves I/2.
        let phi = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let mut proj = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                proj[(i, j)] = phi[i] * phi[j].conj() * 0.5;
            }
        }
        let red = partial_trace(&proj, (2, 2), Keep::First).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-14);
    }

    #[test]
    fn vectorize_identity_is_phi_plus() {
        let v = vectorize(&ComplexMatrix::identity(2));
        assert_eq!(v, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn vectorization_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let n = 2 + (rng.random::<u32>() % 3) as usize;
            let y = random_matrix(n, &mut rng);
            let z = random_matrix(n, &mut rng);
            let x = random_matrix(n, &mut rng);
            let lhs = y.kron(&z).mul_vec(&vectorize(&x));
            let rhs = vectorize(&(&(&y * &x) * &z.transpose()));
            let err = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-13, "err={err:e}");
        }
    }

    #[test]
    fn devectorize_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let x = random_matrix(3, &mut rng);
        let back = devectorize(&vectorize(&x), 3, 3).unwrap();
        assert_eq!(back, x);
    }
}
