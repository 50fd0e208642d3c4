//! Quantum channels as Kraus lists, covariance checking, group twirls, and
//! covariant instruments.
//!
//! A channel ℰ is covariant for a generator set when it commutes with every
//! group conjugation: ℰ(UρU†) = Uℰ(ρ)U† for all U = exp(−iΣt_kX_k). By
//! linearity this is equivalent to the vanishing of the superoperator
//! commutator [Ŝ, U⊗Ū], which is what [`check_covariance`] measures on a
//! parameter grid.
//!
//! Covariant channels are manufactured two ways: by twirling an arbitrary
//! channel over the group ([`twirl`]) — a deterministic Riemann average for
//! phase groups with commensurate spectra, a Haar Monte-Carlo average for
//! SU(2) — and by tracing out a symmetric environment after a covariant
//! unitary dilation ([`dilation_covariant`]). Selective (measurement-like)
//! operations enter through [`projective_instrument`], whose branches are
//! the eigenprojectors of an observable commuting with every generator.
//!
//! Twirling averages the Choi matrix and re-extracts a fresh Kraus list from
//! its eigendecomposition, so `KrausChannel` stays the single channel
//! representation throughout.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, eig_hermitian, vectorize, Complex64, ComplexMatrix, HermitianOperator,
};
use crate::states::{DensityMatrix, PureState};
use crate::symmetry::{symmetry_defect, unitary_at, GeneratorSet};

/// Completeness slack: Σ K†K may deviate from (or exceed) the identity by at
/// most this much.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Covariance threshold for deterministic checks.
pub const COVARIANCE_TOL: f64 = 1e-8;
/// Branch weights below this are reported as never firing.
pub const BRANCH_WEIGHT_TOL: f64 = 1e-12;
/// Choi eigenvalues below this are discarded during Kraus re-extraction.
pub const CHOI_EIG_TOL: f64 = 1e-12;
/// Largest denominator tried when rationalizing spectral gaps for the
/// deterministic phase-group twirl.
pub const MAX_GAP_DENOMINATOR: u64 = 64;

/// Whether a Kraus list resolves the identity or only stays below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    /// Σ K†K = I: a deterministic channel (CPTP).
    Preserving,
    /// Σ K†K ⪯ I: one branch of a selective operation.
    NonIncreasing,
}

/// CP map given by its Kraus operators (all dimOut×dimIn).
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
    completeness: Completeness,
    /// Covariance guarantee recorded by the constructor that built this
    /// channel (exact-grid twirls: 1e-9; Monte-Carlo twirls: the statistical
    /// tolerance). None for channels with no such pedigree.
    covariance_tolerance: Option<f64>,
}

impl KrausChannel {
    /// Validates shapes and the completeness relation: Σ K†K must equal the
    /// identity within [`COMPLETENESS_TOL`] (preserving) or stay below
    /// I + [`COMPLETENESS_TOL`] while PSD (non-increasing).
    pub fn new(kraus: Vec<ComplexMatrix>, completeness: Completeness) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::IncompleteKraus("empty Kraus list".into()));
        }
        let dim_out = kraus[0].rows();
        let dim_in = kraus[0].cols();
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::ShapeMismatch(k.rows(), k.cols(), dim_out, dim_in));
            }
            k.check_finite()?;
        }
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            sum = &sum + &(&k.dagger() * k);
        }
        let id = ComplexMatrix::identity(dim_in);
        match completeness {
            Completeness::Preserving => {
                let dev = sum.max_abs_diff(&id);
                if dev > COMPLETENESS_TOL {
                    return Err(Error::IncompleteKraus(format!(
                        "Σ K†K deviates from identity by {dev:.3e}"
                    )));
                }
            }
            Completeness::NonIncreasing => {
                let gap = HermitianOperator::hermitized(&id - &sum)?;
                let min = eig_hermitian(&gap)?.values[0];
                if min < -COMPLETENESS_TOL {
                    return Err(Error::IncompleteKraus(format!(
                        "Σ K†K exceeds the identity by {:.3e}",
                        -min
                    )));
                }
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            completeness,
            covariance_tolerance: None,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
            completeness: Completeness::Preserving,
            covariance_tolerance: Some(0.0),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    pub fn covariance_tolerance(&self) -> Option<f64> {
        self.covariance_tolerance
    }

    pub fn with_covariance_tolerance(mut self, tol: f64) -> Self {
        self.covariance_tolerance = Some(tol);
        self
    }

    /// Σ_k K ρ K† on a raw matrix, no normalization.
    pub fn apply_raw(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &(&(k * m) * &k.dagger());
        }
        out
    }

    /// Deterministic application; requires a trace-preserving channel. The
    /// output trace is renormalized within the completeness slack.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.completeness != Completeness::Preserving {
            return Err(Error::IncompleteKraus(
                "selective branch applied as a deterministic channel; use apply_branch".into(),
            ));
        }
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(self.dim_in, rho.dim()));
        }
        let out = self.apply_raw(rho.matrix());
        let t = out.trace().re;
        if (t - 1.0).abs() > COMPLETENESS_TOL {
            return Err(Error::InvalidTrace(t));
        }
        DensityMatrix::new(out.scale_re(1.0 / t))
    }

    /// Selective application: (p, σ) with p = tr ℰ(ρ) and σ = ℰ(ρ)/p.
    /// Branches that numerically never fire (p < [`BRANCH_WEIGHT_TOL`]) are
    /// signalled so callers can skip them in averages.
    pub fn apply_branch(&self, rho: &DensityMatrix) -> Result<(f64, DensityMatrix)> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(self.dim_in, rho.dim()));
        }
        let out = self.apply_raw(rho.matrix());
        let w = out.trace().re;
        if w < BRANCH_WEIGHT_TOL {
            return Err(Error::BranchNeverFires(w));
        }
        if w > 1.0 + COMPLETENESS_TOL {
            return Err(Error::InvalidProbabilities(w));
        }
        Ok((w.min(1.0), DensityMatrix::new(out.scale_re(1.0 / w))?))
    }

    /// Superoperator matrix Ŝ = Σ_k K⊗K̄ acting on row-major vectorized
    /// operators: Ŝ·vec(ρ) = vec(ℰ(ρ)).
    pub fn superoperator(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(
            self.dim_out * self.dim_out,
            self.dim_in * self.dim_in,
        );
        for k in &self.kraus {
            s = &s + &k.kron(&k.conj());
        }
        s
    }

    /// Choi matrix J = Σ_k vec(K_k)·vec(K_k)†, PSD of size dimOut·dimIn.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim_out * self.dim_in;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = vectorize(k);
            for a in 0..n {
                for b in 0..n {
                    j[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        j
    }
}

/// Rebuild a Kraus list from a Choi matrix by eigendecomposition, dropping
/// eigenvalues below [`CHOI_EIG_TOL`]; eigenvalues below the PSD floor mean
/// the matrix is not a CP map's Choi matrix.
pub fn kraus_from_choi(
    j: &ComplexMatrix,
    dim_out: usize,
    dim_in: usize,
    completeness: Completeness,
) -> Result<KrausChannel> {
    let n = dim_out * dim_in;
    if j.rows() != n || j.cols() != n {
        return Err(Error::ShapeMismatch(j.rows(), j.cols(), n, n));
    }
    let eig = eig_hermitian(&HermitianOperator::new(j.clone())?)?;
    let scale = eig.values.last().copied().unwrap_or(0.0).max(1.0);
    if eig.values[0] < -1e-9 * scale {
        return Err(Error::NotPsd(eig.values[0]));
    }
    let mut kraus = Vec::new();
    for (idx, &lam) in eig.values.iter().enumerate() {
        if lam < CHOI_EIG_TOL {
            continue;
        }
        let col: Vec<Complex64> = (0..n).map(|i| eig.vectors[(i, idx)] * lam.sqrt()).collect();
        kraus.push(devectorize(&col, dim_out, dim_in)?);
    }
    KrausChannel::new(kraus, completeness)
}

/// Result of a covariance check.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceCheck {
    /// Whether the deviation cleared the tolerance used.
    pub covariant: bool,
    /// Largest superoperator-commutator Frobenius norm over the grid.
    pub max_deviation: f64,
    /// The tolerance the verdict was taken against.
    pub tolerance: f64,
}

/// Deterministic default parameter grid: three points along each generator
/// axis plus mixed directions when there is more than one generator.
pub fn default_grid(gens: &GeneratorSet) -> Vec<Vec<f64>> {
    let n = gens.len();
    let mut grid = Vec::new();
    for k in 0..n {
        for &t in &[0.7, 1.9, 3.3] {
            let mut v = vec![0.0; n];
            v[k] = t;
            grid.push(v);
        }
    }
    if n > 1 {
        grid.push((0..n).map(|k| 0.7 + 0.31 * k as f64).collect());
        grid.push((0..n).map(|k| -(1.1 + 0.47 * k as f64)).collect());
    }
    grid
}

/// Check ℰ(UρU†) = Uℰ(ρ)U† over the grid, with an explicit tolerance.
/// The deviation at a grid point is ‖[Ŝ, U⊗Ū]‖_F — by linearity this
/// aggregates the defect over a complete operator basis of inputs at once.
pub fn check_covariance_with_tol(
    ch: &KrausChannel,
    gens: &GeneratorSet,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<CovarianceCheck> {
    if ch.dim_in != ch.dim_out {
        return Err(Error::DimensionMismatch(ch.dim_in, ch.dim_out));
    }
    if ch.dim_in != gens.dim() {
        return Err(Error::DimensionMismatch(ch.dim_in, gens.dim()));
    }
    let s = ch.superoperator();
    let mut max_dev = 0.0f64;
    for t in grid {
        let u = unitary_at(gens, t)?;
        let w = u.kron(&u.conj());
        let dev = (&(&s * &w) - &(&w * &s)).frobenius_norm();
        max_dev = max_dev.max(dev);
    }
    Ok(CovarianceCheck {
        covariant: max_dev <= tolerance,
        max_deviation: max_dev,
        tolerance,
    })
}

/// Covariance check with the channel's recorded tolerance (falling back to
/// the deterministic [`COVARIANCE_TOL`]) on the default grid.
pub fn check_covariance(ch: &KrausChannel, gens: &GeneratorSet) -> Result<CovarianceCheck> {
    let tol = ch.covariance_tolerance.unwrap_or(COVARIANCE_TOL).max(COVARIANCE_TOL);
    check_covariance_with_tol(ch, gens, &default_grid(gens), tol)
}

/// How a twirl averages over the group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwirlScheme {
    /// Deterministic Riemann grid for a single-generator phase group. The
    /// period is derived from the spectral gaps when they are commensurate
    /// (rationalizable with denominators ≤ [`MAX_GAP_DENOMINATOR`]);
    /// otherwise an explicit period must be supplied. `points` is a floor —
    /// it is raised to the smallest count that integrates every conjugation
    /// frequency exactly when the period is derived.
    U1Grid { points: usize, period: Option<f64> },
    /// Haar Monte-Carlo average for an SU(2) generator triple; the recorded
    /// covariance tolerance is 2/√samples.
    Su2Haar { samples: u64, seed: u64 },
    /// Product of per-generator deterministic grids; requires commuting
    /// generators.
    RnGrid { points: usize },
}

/// Average U_g† ∘ ℰ ∘ U_g over the group, producing a covariant channel.
pub fn twirl(ch: &KrausChannel, gens: &GeneratorSet, scheme: TwirlScheme) -> Result<KrausChannel> {
    if ch.dim_in != ch.dim_out {
        return Err(Error::DimensionMismatch(ch.dim_in, ch.dim_out));
    }
    if ch.dim_in != gens.dim() {
        return Err(Error::DimensionMismatch(ch.dim_in, gens.dim()));
    }
    match scheme {
        TwirlScheme::U1Grid { points, period } => {
            if gens.len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "phase-group twirl needs a single generator, got {}",
                    gens.len()
                )));
            }
            twirl_u1(ch, gens.get(0), points, period)
        }
        TwirlScheme::Su2Haar { samples, seed } => twirl_su2(ch, gens, samples, seed),
        TwirlScheme::RnGrid { points } => {
            let defect = gens.commutation_defect();
            if defect > 1e-10 {
                return Err(Error::NonCommutingGenerators(defect));
            }
            let mut out = ch.clone();
            for k in 0..gens.len() {
                let single = GeneratorSet::new(vec![gens.get(k).clone()])?;
                out = twirl(&out, &single, TwirlScheme::U1Grid { points, period: None })?;
            }
            // Sequential single-generator twirls commute and compose to the
            // joint average; each pass is exact, so the product is too.
            Ok(out.with_covariance_tolerance(1e-9))
        }
    }
}

/// Continued-fraction rationalization of x ≥ 0: best p/q with
/// q ≤ [`MAX_GAP_DENOMINATOR`], or None if the residual exceeds `tol`.
fn rationalize(x: f64, tol: f64) -> Option<(u64, u64)> {
    let mut best: Option<(u64, u64)> = None;
    let mut best_err = f64::INFINITY;
    // Stern–Brocot style scan is overkill at q ≤ 64; direct search is clear.
    for q in 1..=MAX_GAP_DENOMINATOR {
        let p = (x * q as f64).round();
        if p < 0.0 {
            return None;
        }
        let err = (x - p / q as f64).abs();
        if err < best_err {
            best_err = err;
            best = Some((p as u64, q));
        }
    }
    match best {
        Some(pq) if best_err <= tol => Some(pq),
        _ => None,
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn twirl_u1(
    ch: &KrausChannel,
    gen: &HermitianOperator,
    points: usize,
    period: Option<f64>,
) -> Result<KrausChannel> {
    let eig = eig_hermitian(gen)?;
    let (t_period, required) = match period {
        Some(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameter(format!("invalid period {t}")));
            }
            (t, points.max(2))
        }
        None => {
            // Distinct eigenvalues, clustered at 1e-10.
            let mut distinct: Vec<f64> = Vec::new();
            for &v in &eig.values {
                if distinct.last().map_or(true, |&d| (v - d).abs() > 1e-10) {
                    distinct.push(v);
                }
            }
            if distinct.len() < 2 {
                // Scalar generator: every unitary is a global phase and the
                // channel is untouched by the twirl.
                return Ok(ch.clone().with_covariance_tolerance(1e-9));
            }
            let gaps: Vec<f64> = distinct.windows(2).map(|w| w[1] - w[0]).collect();
            let g_min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            // Rationalize every gap against the smallest one.
            let mut lcm: u64 = 1;
            for &g in &gaps {
                let ratio = g / g_min;
                let (_, q) = rationalize(ratio, 1e-9 * ratio.max(1.0)).ok_or_else(|| {
                    Error::IncommensurateSpectrum(format!(
                        "gap ratio {ratio} has no rational form with denominator ≤ {MAX_GAP_DENOMINATOR}; \
                         supply an explicit period"
                    ))
                })?;
                lcm = lcm / gcd(lcm, q) * q;
            }
            let delta = g_min / lcm as f64;
            // Conjugation frequencies live on δ·{−2s..2s} where s spans the
            // spectrum; a Riemann sum with M > 2s points integrates them all
            // exactly.
            let span = ((distinct.last().unwrap() - distinct[0]) / delta).round() as usize;
            (2.0 * std::f64::consts::PI / delta, points.max(2 * span + 1))
        }
    };

    let d = ch.dim_in;
    let n = d * d;
    let mut j_avg = ComplexMatrix::zeros(n, n);
    let j = ch.choi();
    for m in 0..required {
        let t = t_period * m as f64 / required as f64;
        let u = eig.apply_complex(|lam| Complex::from_polar(1.0, -lam * t));
        let w = u.dagger().kron(&u.transpose());
        j_avg = &j_avg + &(&(&w * &j) * &w.dagger());
    }
    j_avg = j_avg.scale_re(1.0 / required as f64);
    let out = kraus_from_choi(&j_avg, d, d, ch.completeness)?;
    let tol = if period.is_none() {
        1e-9
    } else {
        // User-supplied period: record the measured deviation instead of a
        // derived guarantee.
        let gens = GeneratorSet::new(vec![gen.clone()])?;
        check_covariance_with_tol(&out, &gens, &default_grid(&gens), f64::INFINITY)?.max_deviation
    };
    Ok(out.with_covariance_tolerance(tol))
}

fn twirl_su2(ch: &KrausChannel, gens: &GeneratorSet, samples: u64, seed: u64) -> Result<KrausChannel> {
    if gens.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "an SU(2) twirl needs the (Jx, Jy, Jz) triple, got {} generators",
            gens.len()
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("zero twirl samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ch.dim_in;
    let n = d * d;
    let j = ch.choi();
    let mut j_avg = ComplexMatrix::zeros(n, n);
    for _ in 0..samples {
        // Haar on SU(2) = Haar on U(2) with the determinant phase stripped.
        let u2 = crate::states::random_unitary(2, &mut rng)?;
        let vec3 = crate::symmetry::su2_rotation_vector(&u2)?;
        let u = unitary_at(gens, &vec3)?;
        let w = u.dagger().kron(&u.transpose());
        j_avg = &j_avg + &(&(&w * &j) * &w.dagger());
    }
    j_avg = j_avg.scale_re(1.0 / samples as f64);
    let out = kraus_from_choi(&j_avg, d, d, ch.completeness)?;
    Ok(out.with_covariance_tolerance(2.0 / (samples as f64).sqrt()))
}

/// Channel from a covariant unitary dilation: ℰ(ρ) = tr_R[V(ρ⊗|η⟩⟨η|)V†]
/// with system-major index ordering on S⊗R.
///
/// Preconditions checked on the default grid: V commutes with the combined
/// group action U_S(t)⊗U_R(t), and η is symmetric for the ancilla
/// generators.
pub fn dilation_covariant(
    v: &ComplexMatrix,
    eta: &PureState,
    gens_s: &GeneratorSet,
    gens_r: &GeneratorSet,
) -> Result<KrausChannel> {
    let ds = gens_s.dim();
    let dr = gens_r.dim();
    if gens_s.len() != gens_r.len() {
        return Err(Error::DimensionMismatch(gens_s.len(), gens_r.len()));
    }
    if v.rows() != ds * dr || v.cols() != ds * dr {
        return Err(Error::ShapeMismatch(v.rows(), v.cols(), ds * dr, ds * dr));
    }
    if eta.dim() != dr {
        return Err(Error::DimensionMismatch(dr, eta.dim()));
    }
    let unitarity = (&v.dagger() * v).max_abs_diff(&ComplexMatrix::identity(ds * dr));
    if unitarity > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "dilation map is not unitary (deviation {unitarity:.3e})"
        )));
    }
    // η symmetric under the ancilla group.
    let eta_rho = DensityMatrix::pure(eta);
    for (idx, op) in gens_r.iter().enumerate() {
        let single = GeneratorSet::new(vec![op.clone()])?;
        let defect = symmetry_defect(&eta_rho, &single)?;
        if defect > 1e-9 {
            return Err(Error::NotCovariantGenerator { index: idx, norm: defect });
        }
    }
    // V commutes with the combined action on the grid.
    let scale = v.frobenius_norm().max(1.0);
    for t in default_grid(gens_s) {
        let us = unitary_at(gens_s, &t)?;
        let ur = unitary_at(gens_r, &t)?;
        let u = us.kron(&ur);
        let dev = (&(v * &u) - &(&u * v)).frobenius_norm();
        if dev > 1e-9 * scale {
            return Err(Error::DilationNotCovariant(t.clone(), dev));
        }
    }
    // Kraus operators K_r = (I_S ⊗ ⟨r|_R) V (I_S ⊗ |η⟩_R).
    let amp = eta.amplitudes();
    let mut kraus = Vec::with_capacity(dr);
    for r in 0..dr {
        let mut k = ComplexMatrix::zeros(ds, ds);
        for a in 0..ds {
            for b in 0..ds {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..dr {
                    acc += v[(a * dr + r, b * dr + s)] * amp[s];
                }
                k[(a, b)] = acc;
            }
        }
        kraus.push(k);
    }
    KrausChannel::new(kraus, Completeness::Preserving)
}

/// One fired branch of a selective operation.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub weight: f64,
    pub state: DensityMatrix,
}

/// Selective covariant operation: trace-non-increasing branches summing to a
/// trace-preserving map, each branch individually covariant.
#[derive(Debug, Clone)]
pub struct CovariantInstrument {
    branches: Vec<KrausChannel>,
}

impl CovariantInstrument {
    /// Validates the branch sum: Σ_j Σ_k K†K = I within [`COMPLETENESS_TOL`].
    pub fn new(branches: Vec<KrausChannel>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::IncompleteKraus("instrument with no branches".into()));
        }
        let dim = branches[0].dim_in();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for b in &branches {
            if b.dim_in() != dim || b.dim_out() != dim {
                return Err(Error::DimensionMismatch(dim, b.dim_in()));
            }
            for k in b.kraus() {
                sum = &sum + &(&k.dagger() * k);
            }
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus(format!(
                "instrument branches sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[KrausChannel] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches[0].dim_in()
    }

    /// All fired branches with their Born weights; never-firing branches are
    /// skipped. Weights of the returned outcomes sum to 1 within tolerance.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Vec<BranchOutcome>> {
        let mut out = Vec::new();
        for b in &self.branches {
            match b.apply_branch(rho) {
                Ok((weight, state)) => out.push(BranchOutcome { weight, state }),
                Err(Error::BranchNeverFires(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if out.is_empty() {
            return Err(Error::BranchNeverFires(0.0));
        }
        Ok(out)
    }
}

/// Projective instrument from an observable commuting with every generator:
/// branches ρ ↦ Π_j ρ Π_j over the eigenprojectors of B (eigenvalues
/// clustered at 1e-10). Each branch is automatically covariant because the
/// projectors commute with every group unitary.
pub fn projective_instrument(
    b: &HermitianOperator,
    gens: &GeneratorSet,
) -> Result<CovariantInstrument> {
    if b.dim() != gens.dim() {
        return Err(Error::DimensionMismatch(gens.dim(), b.dim()));
    }
    for (idx, op) in gens.iter().enumerate() {
        let norm = crate::linalg::commutator(b.matrix(), op.matrix()).frobenius_norm();
        if norm > 1e-10 {
            return Err(Error::NotCovariantGenerator { index: idx, norm });
        }
    }
    let eig = eig_hermitian(b)?;
    let d = b.dim();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        match clusters.last_mut() {
            Some(cl) if (eig.values[i] - eig.values[cl[0]]).abs() <= 1e-10 => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut branches = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let mut proj = ComplexMatrix::zeros(d, d);
        for &k in cl {
            for i in 0..d {
                for j in 0..d {
                    proj[(i, j)] += eig.vectors[(i, k)] * eig.vectors[(j, k)].conj();
                }
            }
        }
        branches.push(KrausChannel::new(vec![proj], Completeness::NonIncreasing)?);
    }
    CovariantInstrument::new(branches)
}

/// Random CPTP channel: a stack of Ginibre Kraus operators right-normalized
/// by the inverse square root of their completeness sum.
pub fn random_cptp(dim: usize, n_kraus: usize, rng: &mut impl rand::Rng) -> Result<KrausChannel> {
    if n_kraus == 0 {
        return Err(Error::InvalidParameter("need at least one Kraus operator".into()));
    }
    let gs: Vec<ComplexMatrix> = (0..n_kraus)
        .map(|_| crate::states::ginibre(dim, dim, rng))
        .collect();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for g in &gs {
        sum = &sum + &(&g.dagger() * g);
    }
    let eig = eig_hermitian(&HermitianOperator::hermitized(sum)?)?;
    if eig.values[0] <= 1e-12 {
        return Err(Error::RankDeficient(eig.values[0]));
    }
    let inv_root = eig.apply(|x| 1.0 / x.sqrt());
    let kraus = gs.iter().map(|g| g * &inv_root).collect();
    KrausChannel::new(kraus, Completeness::Preserving)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{fisher_matrix, StandardOperatorFunction};
    use crate::states::{random_density, random_pure};
    use crate::symmetry::{preset_su2, preset_u1};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z_dephasing() -> KrausChannel {
        let k0 = ComplexMatrix::diag_re(&[1.0, 0.0]);
        let k1 = ComplexMatrix::diag_re(&[0.0, 1.0]);
        KrausChannel::new(vec![k0, k1], Completeness::Preserving).unwrap()
    }

    fn depolarizing(p: f64) -> KrausChannel {
        let sx = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let sy = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let sz = ComplexMatrix::diag_re(&[1.0, -1.0]);
        let id = ComplexMatrix::identity(2);
        let kraus = vec![
            id.scale_re((1.0 - p).sqrt()),
            sx.scale_re((p / 3.0).sqrt()),
            sy.scale_re((p / 3.0).sqrt()),
            sz.scale_re((p / 3.0).sqrt()),
        ];
        KrausChannel::new(kraus, Completeness::Preserving).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        DensityMatrix::pure(&PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap())
    }

    #[test]
    fn completeness_validation() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        assert!(matches!(
            KrausChannel::new(vec![half.clone()], Completeness::Preserving),
            Err(Error::IncompleteKraus(_))
        ));
        // But it is a fine non-increasing branch.
        assert!(KrausChannel::new(vec![half], Completeness::NonIncreasing).is_ok());
        // A branch exceeding the identity is rejected.
        let big = ComplexMatrix::identity(2).scale_re(1.5);
        assert!(matches!(
            KrausChannel::new(vec![big], Completeness::NonIncreasing),
            Err(Error::IncompleteKraus(_))
        ));
    }

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let rho = random_density(3, 3, &mut rng).unwrap();
        let out = KrausChannel::identity(3).apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn dephasing_kills_coherence() {
        let out = z_dephasing().apply(&plus_state()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-14);
    }

    #[test]
    fn projective_branch_born_rule() {
        let proj0 = KrausChannel::new(
            vec![ComplexMatrix::diag_re(&[1.0, 0.0])],
            Completeness::NonIncreasing,
        )
        .unwrap();
        let (w, s) = proj0.apply_branch(&plus_state()).unwrap();
        assert!((w - 0.5).abs() < 1e-14);
        assert!(s.matrix().max_abs_diff(&ComplexMatrix::diag_re(&[1.0, 0.0])) < 1e-14);
        // A branch orthogonal to the state never fires.
        let proj1 = KrausChannel::new(
            vec![ComplexMatrix::diag_re(&[0.0, 1.0])],
            Completeness::NonIncreasing,
        )
        .unwrap();
        let zero = DensityMatrix::pure(&PureState::basis(2, 0));
        assert!(matches!(
            proj1.apply_branch(&zero),
            Err(Error::BranchNeverFires(_))
        ));
    }

    #[test]
    fn superoperator_matches_kraus_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let ch = random_cptp(3, 2, &mut rng).unwrap();
        let rho = random_density(3, 3, &mut rng).unwrap();
        let via_kraus = ch.apply_raw(rho.matrix());
        let via_super = devectorize(
            &ch.superoperator().mul_vec(&vectorize(rho.matrix())),
            3,
            3,
        )
        .unwrap();
        assert!(via_kraus.max_abs_diff(&via_super) < 1e-12);
    }

    #[test]
    fn choi_round_trip_preserves_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let ch = random_cptp(3, 4, &mut rng).unwrap();
        let back = kraus_from_choi(&ch.choi(), 3, 3, Completeness::Preserving).unwrap();
        let rho = random_density(3, 3, &mut rng).unwrap();
        let a = ch.apply_raw(rho.matrix());
        let b = back.apply_raw(rho.matrix());
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn covariance_verdicts() {
        let u1z = preset_u1(&[1.0, -1.0]).unwrap();
        let u1x = GeneratorSet::new(vec![HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap()])
        .unwrap();

        // Dephasing along z is covariant for σz, not for σx.
        let deph = z_dephasing();
        assert!(check_covariance(&deph, &u1z).unwrap().covariant);
        let against_x = check_covariance(&deph, &u1x).unwrap();
        assert!(!against_x.covariant);
        assert!(against_x.max_deviation > 1e-2);

        // Depolarizing commutes with every conjugation.
        let dep = depolarizing(0.3);
        assert!(check_covariance(&dep, &u1z).unwrap().covariant);
        assert!(check_covariance(&dep, &u1x).unwrap().covariant);
        let su2 = preset_su2(1).unwrap();
        assert!(check_covariance(&dep, &su2).unwrap().covariant);
    }

    #[test]
    fn u1_twirl_produces_exact_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let gens = preset_u1(&[1.0, -1.0]).unwrap();
        for _ in 0..5 {
            let ch = random_cptp(2, 3, &mut rng).unwrap();
            let tw = twirl(&ch, &gens, TwirlScheme::U1Grid { points: 64, period: None }).unwrap();
            let check = check_covariance_with_tol(&tw, &gens, &default_grid(&gens), 1e-9).unwrap();
            assert!(
                check.covariant,
                "deviation {:.3e} after deterministic twirl",
                check.max_deviation
            );
            assert_eq!(tw.covariance_tolerance(), Some(1e-9));
        }
    }

    #[test]
    fn u1_twirl_of_identity_is_identity() {
        let gens = preset_u1(&[0.0, 1.0, 3.0]).unwrap();
        let tw = twirl(
            &KrausChannel::identity(3),
            &gens,
            TwirlScheme::U1Grid { points: 16, period: None },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let rho = random_density(3, 3, &mut rng).unwrap();
        let out = tw.apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn u1_twirl_refuses_incommensurate_without_period() {
        // Spectrum gaps 1 and √2 cannot be rationalized with q ≤ 64.
        let gens = preset_u1(&[0.0, 1.0, 1.0 + std::f64::consts::SQRT_2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        let ch = random_cptp(3, 2, &mut rng).unwrap();
        let res = twirl(&ch, &gens, TwirlScheme::U1Grid { points: 32, period: None });
        assert!(matches!(res, Err(Error::IncommensurateSpectrum(_))));
        // With an explicit period the twirl proceeds and records its
        // measured deviation instead of a guarantee.
        let tw = twirl(
            &ch,
            &gens,
            TwirlScheme::U1Grid { points: 256, period: Some(2.0 * std::f64::consts::PI) },
        )
        .unwrap();
        assert!(tw.covariance_tolerance().is_some());
    }

    #[test]
    fn su2_twirl_covariance_shrinks_with_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        let gens = preset_su2(1).unwrap();
        let ch = random_cptp(2, 2, &mut rng).unwrap();
        let grid = default_grid(&gens);
        let small = twirl(&ch, &gens, TwirlScheme::Su2Haar { samples: 200, seed: 7 }).unwrap();
        let dev_small = check_covariance_with_tol(&small, &gens, &grid, f64::INFINITY)
            .unwrap()
            .max_deviation;
        let large = twirl(&ch, &gens, TwirlScheme::Su2Haar { samples: 3200, seed: 7 }).unwrap();
        let dev_large = check_covariance_with_tol(&large, &gens, &grid, f64::INFINITY)
            .unwrap()
            .max_deviation;
        assert!(
            dev_small <= 2.0 / (200f64).sqrt(),
            "Monte-Carlo deviation {dev_small:.3e} above its statistical budget"
        );
        assert!(
            dev_large < dev_small,
            "more samples must tighten covariance: {dev_large:.3e} vs {dev_small:.3e}"
        );
    }

    #[test]
    fn rn_twirl_requires_commuting_generators() {
        let su2 = preset_su2(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        let ch = random_cptp(2, 2, &mut rng).unwrap();
        assert!(matches!(
            twirl(&ch, &su2, TwirlScheme::RnGrid { points: 8 }),
            Err(Error::NonCommutingGenerators(_))
        ));
    }

    #[test]
    fn rn_twirl_covariant_for_commuting_pair() {
        // Two commuting diagonal generators on a two-qubit space.
        let x1 = HermitianOperator::from_real_diag(&[1.0, 1.0, -1.0, -1.0]);
        let x2 = HermitianOperator::from_real_diag(&[1.0, -1.0, 1.0, -1.0]);
        let gens = GeneratorSet::new(vec![x1, x2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(139);
        let ch = random_cptp(4, 2, &mut rng).unwrap();
        let tw = twirl(&ch, &gens, TwirlScheme::RnGrid { points: 8 }).unwrap();
        let check = check_covariance_with_tol(&tw, &gens, &default_grid(&gens), 1e-9).unwrap();
        assert!(check.covariant, "deviation {:.3e}", check.max_deviation);
    }

    #[test]
    fn twirled_channel_preserves_symmetric_states() {
        let gens = preset_u1(&[0.0, 1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(149);
        let ch = random_cptp(3, 3, &mut rng).unwrap();
        let tw = twirl(&ch, &gens, TwirlScheme::U1Grid { points: 16, period: None }).unwrap();
        let sym = DensityMatrix::new(ComplexMatrix::diag_re(&[0.5, 0.3, 0.2])).unwrap();
        let out = tw.apply(&sym).unwrap();
        let defect = symmetry_defect(&out, &gens).unwrap();
        assert!(defect < 1e-9, "covariant channel broke symmetry: {defect:.3e}");
    }

    #[test]
    fn monotonicity_under_exact_twirl() {
        let mut rng = ChaCha8Rng::seed_from_u64(151);
        let gens = preset_u1(&[1.0, -1.0]).unwrap();
        let f = StandardOperatorFunction::sld();
        for _ in 0..20 {
            let rho = random_density(2, 2, &mut rng).unwrap();
            let ch = random_cptp(2, 2, &mut rng).unwrap();
            let tw = twirl(&ch, &gens, TwirlScheme::U1Grid { points: 16, period: None }).unwrap();
            let before = fisher_matrix(&rho, &gens, &f).unwrap();
            let after = fisher_matrix(&tw.apply(&rho).unwrap(), &gens, &f).unwrap();
            assert!(
                after.psd_leq(&before).unwrap(),
                "information grew: {} → {}",
                before.get(0, 0),
                after.get(0, 0)
            );
        }
    }

    #[test]
    fn dilation_examples() {
        // V = I gives the identity channel.
        let g = preset_u1(&[1.0, -1.0]).unwrap();
        let eta = PureState::basis(2, 0);
        let id = dilation_covariant(&ComplexMatrix::identity(4), &eta, &g, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(157);
        let rho = random_density(2, 2, &mut rng).unwrap();
        assert!(id.apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);

        // Swap with a symmetric ancilla gives the constant channel ρ ↦ |η⟩⟨η|.
        let mut swap = ComplexMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                swap[(a * 2 + b, b * 2 + a)] = c(1.0, 0.0);
            }
        }
        let ch = dilation_covariant(&swap, &eta, &g, &g).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(&eta.projector()) < 1e-12);
        let check = check_covariance(&ch, &g).unwrap();
        assert!(check.covariant);

        // An entangling exponential of X⊗X commutes with the joint action.
        let x = HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let gens_x = GeneratorSet::new(vec![x.clone()]).unwrap();
        let xx = HermitianOperator::hermitized(x.matrix().kron(x.matrix())).unwrap();
        let v = crate::symmetry::unitary_single(&xx, 0.8).unwrap();
        let eta_x = PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap(); // |+⟩, symmetric for σx
        let ch = dilation_covariant(&v, &eta_x, &gens_x, &gens_x).unwrap();
        assert!(check_covariance(&ch, &gens_x).unwrap().covariant);

        // A non-commuting dilation is refused.
        let bad = crate::symmetry::unitary_single(
            &HermitianOperator::hermitized(
                ComplexMatrix::diag_re(&[1.0, -1.0]).kron(&ComplexMatrix::identity(2)),
            )
            .unwrap(),
            0.9,
        )
        .unwrap();
        assert!(matches!(
            dilation_covariant(&bad, &eta_x, &gens_x, &gens_x),
            Err(Error::DilationNotCovariant(_, _))
        ));
    }

    #[test]
    fn projective_instrument_from_commuting_observable() {
        let gens = preset_u1(&[1.0, -1.0]).unwrap();
        let inst = projective_instrument(&HermitianOperator::from_real_diag(&[1.0, -1.0]), &gens)
            .unwrap();
        assert_eq!(inst.branches().len(), 2);
        for b in inst.branches() {
            assert!(check_covariance_with_tol(b, &gens, &default_grid(&gens), 1e-9)
                .unwrap()
                .covariant);
        }
        let outcomes = inst.apply(&plus_state()).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);

        // Jz does not commute with the full su2 triple.
        let su2 = preset_su2(2).unwrap();
        assert!(matches!(
            projective_instrument(su2.get(2), &su2),
            Err(Error::NotCovariantGenerator { .. })
        ));

        // The Casimir is a multiple of the identity on an irrep: one branch.
        let (jx, jy, jz) = (su2.get(0).matrix(), su2.get(1).matrix(), su2.get(2).matrix());
        let casimir =
            HermitianOperator::hermitized(&(&(jx * jx) + &(jy * jy)) + &(jz * jz)).unwrap();
        let inst = projective_instrument(&casimir, &su2).unwrap();
        assert_eq!(inst.branches().len(), 1);
    }

    #[test]
    fn selective_monotonicity_for_projective_instruments() {
        let mut rng = ChaCha8Rng::seed_from_u64(163);
        let gens = preset_u1(&[1.0, -1.0]).unwrap();
        let inst = projective_instrument(&HermitianOperator::from_real_diag(&[1.0, -1.0]), &gens)
            .unwrap();
        let f = StandardOperatorFunction::sld();
        for _ in 0..20 {
            let rho = DensityMatrix::pure(&random_pure(2, &mut rng).unwrap());
            let before = fisher_matrix(&rho, &gens, &f).unwrap();
            let mut avg = crate::fisher::SymmetricRealMatrix::zeros(1);
            for outcome in inst.apply(&rho).unwrap() {
                let fm = fisher_matrix(&outcome.state, &gens, &f).unwrap();
                avg = avg
                    .sub(&fm.scale(-outcome.weight))
                    .expect("same shape");
            }
            assert!(
                avg.psd_leq(&before).unwrap(),
                "selective average grew: {} → {}",
                before.get(0, 0),
                avg.get(0, 0)
            );
        }
    }
}
