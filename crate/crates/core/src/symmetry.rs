//! Symmetry groups as Hermitian generator sets and the unitaries they
//! generate.
//!
//! A [`GeneratorSet`] is a linearly independent family {X_k} closed over by
//! the one-parameter unitaries U(t) = exp(−i Σ_k t_k X_k). Symmetric
//! (free) states are exactly those commuting with every generator, which
//! [`symmetry_defect`] quantifies as a Frobenius commutator norm. Presets
//! cover the two groups exercised throughout: a single-generator U(1) phase
//! group with arbitrary integer spectrum, and spin-j SU(2) with the ladder
//! construction of (Jx, Jy, Jz).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, eig_hermitian, Complex64, ComplexMatrix, HermitianOperator,
};
use crate::states::{DensityMatrix, PureState};

/// Relative floor on the Gram-matrix spectrum below which a generator set is
/// rejected as linearly dependent.
pub const GRAM_TOL: f64 = 1e-10;
/// Default commutator-norm threshold for calling a state symmetric.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Linearly independent family of Hermitian generators on one Hilbert space.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    ops: Vec<HermitianOperator>,
}

impl GeneratorSet {
    /// Validates a common dimension and linear independence: the Gram matrix
    /// G_kl = tr(X_k X_l) must have smallest eigenvalue above
    /// [`GRAM_TOL`]·max(1, max_k G_kk).
    pub fn new(ops: Vec<HermitianOperator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter("empty generator set".into()));
        }
        let dim = ops[0].dim();
        for op in &ops {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch(dim, op.dim()));
            }
        }
        let n = ops.len();
        let mut gram = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                let tr = (ops[k].matrix() * ops[l].matrix()).trace().re;
                gram[(k, l)] = Complex64::new(tr, 0.0);
            }
        }
        let scale = (0..n).map(|k| gram[(k, k)].re).fold(1.0f64, f64::max);
        let eig = eig_hermitian(&HermitianOperator::hermitized(gram)?)?;
        let min = eig.values[0];
        if min <= GRAM_TOL * scale {
            return Err(Error::LinearlyDependent(min));
        }
        Ok(Self { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn get(&self, k: usize) -> &HermitianOperator {
        &self.ops[k]
    }

    pub fn ops(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn iter(&self) -> impl Iterator<Item = &HermitianOperator> {
        self.ops.iter()
    }

    /// Largest pairwise commutator norm; zero exactly when the generators
    /// commute (an abelian group).
    pub fn commutation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.len() {
            for l in k + 1..self.len() {
                worst = worst
                    .max(commutator(self.ops[k].matrix(), self.ops[l].matrix()).frobenius_norm());
            }
        }
        worst
    }
}

/// U(t) = exp(−i Σ_k t_k X_k), via the spectral decomposition of the
/// Hermitian combination.
pub fn unitary_at(gens: &GeneratorSet, params: &[f64]) -> Result<ComplexMatrix> {
    if params.len() != gens.len() {
        return Err(Error::DimensionMismatch(gens.len(), params.len()));
    }
    let combo = HermitianOperator::linear_combination(gens.ops(), params)?;
    let eig = eig_hermitian(&combo)?;
    Ok(eig.apply_complex(|lambda| Complex::from_polar(1.0, -lambda)))
}

/// exp(−i t X) for a single generator.
pub fn unitary_single(gen: &HermitianOperator, t: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(gen)?;
    Ok(eig.apply_complex(|lambda| Complex::from_polar(1.0, -lambda * t)))
}

/// U ρ U† with U = exp(−i t X).
pub fn evolve(rho: &DensityMatrix, gen: &HermitianOperator, t: f64) -> Result<DensityMatrix> {
    let u = unitary_single(gen, t)?;
    DensityMatrix::new(&(&u * rho.matrix()) * &u.dagger())
}

/// U|ψ⟩ with U = exp(−i t X).
pub fn evolve_pure(psi: &PureState, gen: &HermitianOperator, t: f64) -> Result<PureState> {
    let u = unitary_single(gen, t)?;
    psi.apply(&u)
}

/// Symmetry witness: max_k ‖[ρ, X_k]‖_F. Vanishes exactly on states that
/// commute with every generator, i.e. the free states of the group.
pub fn symmetry_defect(rho: &DensityMatrix, gens: &GeneratorSet) -> Result<f64> {
    if rho.dim() != gens.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), gens.dim()));
    }
    let mut worst = 0.0f64;
    for op in gens.iter() {
        worst = worst.max(commutator(rho.matrix(), op.matrix()).frobenius_norm());
    }
    Ok(worst)
}

/// Whether the symmetry witness clears `tol`, scaled by the generator norms:
/// the state is called symmetric when
/// max_k ‖[ρ, X_k]‖_F ≤ tol · max(1, max_k ‖X_k‖_F).
pub fn is_symmetric(rho: &DensityMatrix, gens: &GeneratorSet, tol: f64) -> Result<bool> {
    let defect = symmetry_defect(rho, gens)?;
    let scale = gens
        .iter()
        .map(HermitianOperator::frobenius_norm)
        .fold(1.0f64, f64::max);
    Ok(defect <= tol * scale)
}

/// A symmetric state built from a generator: g(X)/tr g(X) commutes with X by
/// construction. `g` must be nonnegative somewhere on the spectrum.
pub fn symmetric_state_from_generator(
    gen: &HermitianOperator,
    g: impl Fn(f64) -> f64,
) -> Result<DensityMatrix> {
    let eig = eig_hermitian(gen)?;
    let weights: Vec<f64> = eig.values.iter().map(|&x| g(x).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "spectral weight function vanishes on the whole spectrum".into(),
        ));
    }
    let mat = eig.apply({
        let weights = weights.clone();
        let vals = eig.values.clone();
        move |x| {
            // Match eigenvalue to its slot; exact since x comes from `vals`.
            let k = vals.iter().position(|&v| v == x).unwrap();
            weights[k] / total
        }
    });
    DensityMatrix::new(mat)
}

/// Single-generator U(1) phase group with the given real spectrum, as the
/// diagonal generator diag(spectrum).
pub fn preset_u1(spectrum: &[f64]) -> Result<GeneratorSet> {
    if spectrum.len() < 2 {
        return Err(Error::InvalidParameter(
            "a phase generator needs dimension at least 2".into(),
        ));
    }
    GeneratorSet::new(vec![HermitianOperator::from_real_diag(spectrum)])
}

/// Spin-j SU(2) generator triple (Jx, Jy, Jz) in dimension 2j+1, built from
/// the ladder operators; `two_j` is 2j so half-integer spins are exact.
/// Satisfies [Jx, Jy] = i·Jz and cyclic permutations.
pub fn preset_su2(two_j: u32) -> Result<GeneratorSet> {
    if two_j == 0 {
        return Err(Error::InvalidParameter(
            "spin 0 carries the trivial representation".into(),
        ));
    }
    let d = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    // Basis index a ↔ magnetic number m = j − a (descending).
    let m_of = |a: usize| j - a as f64;
    let mut jplus = ComplexMatrix::zeros(d, d);
    for a in 1..d {
        let m = m_of(a);
        let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        jplus[(a - 1, a)] = Complex64::new(amp, 0.0);
    }
    let jminus = jplus.dagger();
    let jx = (&jplus + &jminus).scale_re(0.5);
    let jy = (&jplus - &jminus).scale(Complex64::new(0.0, -0.5));
    let jz = ComplexMatrix::from_fn(d, d, |a, b| {
        if a == b {
            Complex64::new(m_of(a), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    GeneratorSet::new(vec![
        HermitianOperator::new(jx)?,
        HermitianOperator::new(jy)?,
        HermitianOperator::new(jz)?,
    ])
}

/// Generator set from explicit matrices.
pub fn preset_custom(mats: Vec<ComplexMatrix>) -> Result<GeneratorSet> {
    let ops = mats
        .into_iter()
        .map(HermitianOperator::new)
        .collect::<Result<Vec<_>>>()?;
    GeneratorSet::new(ops)
}

/// Rotation vector θ·n̂ of a 2×2 special unitary U = exp(−i θ n̂·σ⃗/2),
/// θ ∈ [0, 2π]. A U(2) input is first stripped of its determinant phase.
/// Feeding the result to [`unitary_at`] with a spin-j triple gives the same
/// group element in the 2j+1-dimensional representation.
pub fn su2_rotation_vector(u: &ComplexMatrix) -> Result<[f64; 3]> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::ShapeMismatch(u.rows(), u.cols(), 2, 2));
    }
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let det_norm = det.norm();
    if (det_norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "matrix is not unitary (|det| = {det_norm})"
        )));
    }
    // Divide out a global phase √det to land in SU(2).
    let phase = Complex::from_polar(1.0, det.arg() / 2.0);
    let a = u[(0, 0)] / phase;
    let b = u[(0, 1)] / phase;
    // U = cos(θ/2)·I − i sin(θ/2)·n̂·σ⃗ ⇒ sin(θ/2)·n̂ = (−Im b, −Re b, −Im a).
    let sn = [-b.im, -b.re, -a.im];
    let s = (sn[0] * sn[0] + sn[1] * sn[1] + sn[2] * sn[2]).sqrt();
    let theta = 2.0 * s.atan2(a.re);
    if s < 1e-12 {
        // U ≈ ±I: any axis represents the same rotation.
        return Ok([0.0, 0.0, theta]);
    }
    Ok([theta * sn[0] / s, theta * sn[1] / s, theta * sn[2] / s])
}
