//! States, ensembles, purification, and Haar/Ginibre random samplers.
//!
//! [`DensityMatrix`] is the validated workhorse: Hermitian, positive
//! semidefinite (tiny negative eigenvalues clamped), unit trace (exactly
//! renormalized on construction). [`Ensemble`] is a convex pure-state
//! decomposition of such a state; [`random_ensemble`] draws one uniformly
//! via a Haar random isometry mixing the spectral decomposition, which is
//! the standard parametrization of all rank-compatible decompositions.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, orthonormalize_columns, partial_trace, sqrt_psd, Complex64, ComplexMatrix,
    EigenSystem, HermitianOperator, Keep,
};

/// Norm below which a vector is considered identically zero.
pub const ZERO_NORM_TOL: f64 = 1e-12;
/// Allowed deviation of a density-matrix trace from one before rejection.
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed deviation of ensemble weights from a normalized distribution.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Eigenvalues above this count toward the rank of a state.
pub const RANK_EIG_TOL: f64 = 1e-12;
/// Ensemble members with weight below this are dropped as numerically absent.
pub const WEIGHT_DROP_TOL: f64 = 1e-15;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes the input; rejects vectors with norm below
    /// [`ZERO_NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("empty state vector".into()));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < ZERO_NORM_TOL {
            return Err(Error::ZeroNorm(norm));
        }
        let amplitudes = amplitudes.into_iter().map(|z| z / norm).collect();
        Ok(Self { amplitudes })
    }

    /// Computational basis vector |k⟩.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rank-one projector |ψ⟩⟨ψ|.
    pub fn projector(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        })
    }

    /// ⟨ψ|X|ψ⟩ for Hermitian X.
    pub fn expectation(&self, op: &HermitianOperator) -> f64 {
        let xv = op.matrix().mul_vec(&self.amplitudes);
        self.amplitudes
            .iter()
            .zip(&xv)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Apply a matrix and renormalize; errors if the image is (numerically)
    /// the zero vector.
    pub fn apply(&self, m: &ComplexMatrix) -> Result<Self> {
        Self::new(m.mul_vec(&self.amplitudes))
    }
}

/// Validated density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (entrywise 1e-12), positivity (eigenvalues
    /// ≥ −1e-10, smaller dips clamped to zero), and unit trace (within
    /// [`TRACE_TOL`], then renormalized exactly).
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(mat)?;
        Self::from_hermitian(op)
    }

    fn from_hermitian(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let eig = eig_hermitian(&op)?;
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min < crate::linalg::PSD_EIG_FLOOR {
            return Err(Error::NotPsd(min));
        }
        let mat = if min < 0.0 || (tr - 1.0) != 0.0 {
            // Clamp eigenvalue dips, rebuild, renormalize.
            let rebuilt = eig.apply(|x| x.max(0.0));
            let t = rebuilt.trace().re;
            rebuilt.scale_re(1.0 / t).hermitized()
        } else {
            op.into_matrix()
        };
        Ok(Self { mat })
    }

    pub fn pure(ps: &PureState) -> Self {
        Self { mat: ps.projector() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    /// Convex mixture λρ + (1−λ)σ.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {lambda} outside [0,1]"
            )));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            mat: &self.mat.scale_re(lambda) + &other.mat.scale_re(1.0 - lambda),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn as_hermitian(&self) -> HermitianOperator {
        HermitianOperator::hermitized(self.mat.clone()).expect("stored matrix is square")
    }

    pub fn eig(&self) -> Result<EigenSystem> {
        eig_hermitian(&self.as_hermitian())
    }

    /// tr(ρ²) ∈ (0, 1], equal to 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Number of eigenvalues above [`RANK_EIG_TOL`].
    pub fn rank(&self) -> Result<usize> {
        Ok(self.eig()?.values.iter().filter(|&&p| p > RANK_EIG_TOL).count())
    }

    /// tr(ρX) for Hermitian X.
    pub fn expectation(&self, op: &HermitianOperator) -> f64 {
        (&self.mat * op.matrix()).trace().re
    }

    pub fn sqrt(&self) -> Result<HermitianOperator> {
        sqrt_psd(&self.as_hermitian())
    }
}

/// Convex decomposition of a density matrix into weighted pure states.
#[derive(Debug, Clone)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<PureState>,
}

impl Ensemble {
    /// Weights must be strictly positive and sum to one within
    /// [`WEIGHT_SUM_TOL`]; they are renormalized exactly on construction.
    pub fn new(weights: Vec<f64>, states: Vec<PureState>) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(Error::InvalidParameter(
                "ensemble needs matching nonempty weight and state lists".into(),
            ));
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch(dim, s.dim()));
            }
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOL
        {
            return Err(Error::InvalidProbabilities(sum));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights, states })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &PureState)> {
        self.weights.iter().copied().zip(self.states.iter())
    }

    /// Σ_i p_i |φ_i⟩⟨φ_i|.
    pub fn average(&self) -> Result<DensityMatrix> {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, s) in self.iter() {
            acc = &acc + &s.projector().scale_re(w);
        }
        DensityMatrix::new(acc)
    }
}

/// Purification of ρ on ancilla⊗system (ancilla is the left factor):
/// (I ⊗ √ρ)·Σ_i|i⟩|i⟩, which is already normalized since tr ρ = 1.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let d = rho.dim();
    let root = rho.sqrt()?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            amplitudes[i * d + j] = root.matrix()[(j, i)];
        }
    }
    PureState::new(amplitudes)
}

/// Reduced state of a pure state on ancilla⊗system, tracing out the ancilla.
pub fn reduced_system_state(psi: &PureState, system_dim: usize) -> Result<DensityMatrix> {
    let total = psi.dim();
    if system_dim == 0 || total % system_dim != 0 {
        return Err(Error::DimensionMismatch(total, system_dim));
    }
    let anc = total / system_dim;
    let red = partial_trace(&psi.projector(), (anc, system_dim), Keep::Second)?;
    DensityMatrix::new(red)
}

/// Uhlmann fidelity F(ρ, σ) = tr √(√ρ σ √ρ) ∈ [0, 1].
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let r = rho.sqrt()?;
    let inner = &(r.matrix() * sigma.matrix()) * r.matrix();
    let root = sqrt_psd(&HermitianOperator::hermitized(inner)?)?;
    Ok(root.trace())
}

fn standard_complex(rng: &mut impl Rng) -> Complex64 {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| standard_complex(rng))
}

/// Haar random pure state: normalized Gaussian amplitude vector.
pub fn random_pure(dim: usize, rng: &mut impl Rng) -> Result<PureState> {
    PureState::new((0..dim).map(|_| standard_complex(rng)).collect())
}

/// Random density matrix of the given rank from the Ginibre construction
/// GG†/tr(GG†) with G of shape dim×rank.
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} invalid for dimension {dim}"
        )));
    }
    let g = ginibre(dim, rank, rng);
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_re(1.0 / tr))
}

/// GUE-style random Hermitian operator (G + G†)/2.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    HermitianOperator::hermitized(ginibre(dim, dim, rng))
        .expect("symmetrized Gaussian matrix is Hermitian")
}

/// Haar random unitary: QR of a Ginibre matrix via modified Gram–Schmidt,
/// whose triangular factor has positive diagonal by construction.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    orthonormalize_columns(&ginibre(dim, dim, rng))
}

/// Pure-state decomposition of ρ induced by an m×r isometry U acting on the
/// spectral decomposition: |φ̃_i⟩ = Σ_j U_ij √p_j |ψ_j⟩, weight ⟨φ̃_i|φ̃_i⟩.
/// Members with weight below [`WEIGHT_DROP_TOL`] are dropped. Every
/// decomposition of ρ into at most m pure states arises this way.
pub fn ensemble_from_isometry(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<Ensemble> {
    let eig = rho.eig()?;
    let d = rho.dim();
    let support: Vec<usize> = (0..d).filter(|&k| eig.values[k] > RANK_EIG_TOL).collect();
    let r = support.len();
    let m = u.rows();
    if u.cols() != r {
        return Err(Error::ShapeMismatch(u.rows(), u.cols(), m, r));
    }
    if m < r {
        return Err(Error::EnsembleTooSmall { size: m, rank: r });
    }
    let gram = &u.dagger() * u;
    let defect = gram.max_abs_diff(&ComplexMatrix::identity(r));
    if defect > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "mixing matrix is not an isometry (U†U deviates from identity by {defect:.3e})"
        )));
    }

    let mut weights = Vec::with_capacity(m);
    let mut states = Vec::with_capacity(m);
    for i in 0..m {
        let mut amp = vec![Complex64::new(0.0, 0.0); d];
        for (jj, &k) in support.iter().enumerate() {
            let coeff = u[(i, jj)] * eig.values[k].sqrt();
            for a in 0..d {
                amp[a] += coeff * eig.vectors[(a, k)];
            }
        }
        let w: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
        if w < WEIGHT_DROP_TOL {
            continue;
        }
        weights.push(w);
        states.push(PureState::new(amp)?);
    }
    Ensemble::new(weights, states)
}

/// Uniformly random pure-state decomposition of ρ with m members
/// (m ≥ rank ρ required), via a Haar random isometry.
pub fn random_ensemble(rho: &DensityMatrix, m: usize, rng: &mut impl Rng) -> Result<Ensemble> {
    let r = rho.rank()?;
    if m < r {
        return Err(Error::EnsembleTooSmall { size: m, rank: r });
    }
    let u = orthonormalize_columns(&ginibre(m, r, rng))?;
    ensemble_from_isometry(rho, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_state_normalizes() {
        let s = PureState::new(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!((s.amplitudes()[1].im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pure_state_rejects_zero() {
        assert!(matches!(
            PureState::new(vec![c(0.0, 0.0), c(1e-13, 0.0)]),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn density_validation() {
        // Trace off by more than the tolerance.
        let bad = ComplexMatrix::diag_re(&[0.6, 0.6]);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::InvalidTrace(_))));
        // Negative eigenvalue beyond the floor.
        let neg = ComplexMatrix::diag_re(&[1.2, -0.2]);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPsd(_))));
        // Tiny dip is clamped and renormalized.
        let dip = ComplexMatrix::diag_re(&[1.0 + 5e-11, -5e-11]);
        let rho = DensityMatrix::new(dip).unwrap();
        let eig = rho.eig().unwrap();
        assert!(eig.values[0] >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn purity_detects_pure_and_mixed() {
        let pure = DensityMatrix::pure(&PureState::basis(3, 1));
        assert!(pure.is_pure(1e-12));
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((mixed.purity() - 1.0 / 3.0).abs() < 1e-15);
        assert!(!mixed.is_pure(1e-9));
    }

    #[test]
    fn purification_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..=4usize {
            let rho = random_density(dim, dim, &mut rng).unwrap();
            let psi = purify(&rho).unwrap();
            assert_eq!(psi.dim(), dim * dim);
            let back = reduced_system_state(&psi, dim).unwrap();
            assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-10);
        }
    }

    #[test]
    fn purification_of_diagonal_qubit() {
        let rho = DensityMatrix::new(ComplexMatrix::diag_re(&[0.75, 0.25])).unwrap();
        let psi = purify(&rho).unwrap();
        let amp = psi.amplitudes();
        assert!((amp[0].re - 0.75f64.sqrt()).abs() < 1e-12); // |0⟩|0⟩
        assert!((amp[3].re - 0.25f64.sqrt()).abs() < 1e-12); // |1⟩|1⟩
        assert!(amp[1].norm() < 1e-15);
        assert!(amp[2].norm() < 1e-15);
    }

    #[test]
    fn fidelity_anchor_and_symmetry() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let zero = DensityMatrix::pure(&PureState::basis(2, 0));
        let f = uhlmann_fidelity(&mixed, &zero).unwrap();
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-10);
        let g = uhlmann_fidelity(&zero, &mixed).unwrap();
        assert!((f - g).abs() < 1e-12);
        // Self-fidelity is one.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(3, 3, &mut rng).unwrap();
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_density_has_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(4, 2, &mut rng).unwrap();
        assert_eq!(rho.rank().unwrap(), 2);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2usize, 3, 5] {
            let u = random_unitary(dim, &mut rng).unwrap();
            let gram = &u.dagger() * &u;
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-12);
        }
    }

    #[test]
    fn ensemble_average_recovers_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(3, 3, &mut rng).unwrap();
        for m in [3usize, 5, 8] {
            let ens = random_ensemble(&rho, m, &mut rng).unwrap();
            let avg = ens.average().unwrap();
            assert!(
                avg.matrix().max_abs_diff(rho.matrix()) < 1e-10,
                "m={m} decomposition must average back to the state"
            );
        }
    }

    #[test]
    fn ensemble_too_small_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(4, 3, &mut rng).unwrap();
        assert!(matches!(
            random_ensemble(&rho, 2, &mut rng),
            Err(Error::EnsembleTooSmall { size: 2, rank: 3 })
        ));
    }

    #[test]
    fn identity_isometry_recovers_spectral_decomposition() {
        let rho = DensityMatrix::new(ComplexMatrix::diag_re(&[0.7, 0.3])).unwrap();
        let ens = ensemble_from_isometry(&rho, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(ens.len(), 2);
        // Weights are the eigenvalues (ascending spectral order).
        let mut w = ens.weights().to_vec();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((w[0] - 0.3).abs() < 1e-12 && (w[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ensemble_weight_validation() {
        let s = PureState::basis(2, 0);
        assert!(matches!(
            Ensemble::new(vec![0.5, -0.5], vec![s.clone(), s.clone()]),
            Err(Error::InvalidProbabilities(_))
        ));
        assert!(matches!(
            Ensemble::new(vec![0.5, 0.4], vec![s.clone(), s]),
            Err(Error::InvalidProbabilities(_))
        ));
    }
}
