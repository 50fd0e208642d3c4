//! Metric-adjusted quantum Fisher information.
//!
//! For a state ρ = Σ_i p_i|ψ_i⟩⟨ψ_i| and Hermitian generators {X_k}, the
//! Fisher information matrix associated with a standard operator function f
//! is
//!
//! ```text
//! F_kl = Σ_{ij} (p_i − p_j)² / (p_j · f(p_i/p_j)) · ⟨ψ_i|X_k|ψ_j⟩⟨ψ_j|X_l|ψ_i⟩
//! ```
//!
//! The denominator m(p_i, p_j) = p_j·f(p_i/p_j) is a symmetric mean thanks to
//! the axiom f(x) = x·f(1/x), and is always evaluated as max·f(min/max) so
//! the function argument stays in (0, 1]. Pairs with both eigenvalues zero
//! carry no weight and are skipped; pairs with exactly one zero use the
//! continuous extension m → p·f(0), which diverges when f(0) = 0 — that case
//! is reported as an explicit unbounded-information error instead of an Inf.
//!
//! [`skew_info_matrix`] is the f(0)/2-rescaled matrix Î, which is squeezed
//! between 0 and the covariance matrix V̂ and coincides with V̂ on pure
//! states — the quantum share of the fluctuations.

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, Complex64, ComplexMatrix, EigenSystem, HermitianOperator,
};
use crate::states::DensityMatrix;
use crate::symmetry::GeneratorSet;

/// Eigenvalues at or below this are treated as exact zeros of the spectrum.
pub const EIG_ZERO_TOL: f64 = 1e-12;
/// Matrix elements above this (relative to max(1, ‖X‖_F)) count as genuine
/// coupling across the support boundary when deciding divergence.
pub const COUPLING_TOL: f64 = 1e-12;
/// Slack for the PSD order comparator A ⪯ B, scaled by
/// max(1, ‖A‖_F, ‖B‖_F).
pub const PSD_ORDER_TOL: f64 = 1e-9;
/// Symmetry slack accepted on construction of a [`SymmetricRealMatrix`].
pub const SYMMETRY_ENTRY_TOL: f64 = 1e-10;

/// Monotone standard operator function: f(1) = 1, f(x) = x·f(1/x), with the
/// boundary value f(0⁺) recorded separately. The axioms are checked
/// numerically at registration on the dyadic grid {2^k : k = −20..20}.
pub struct StandardOperatorFunction {
    name: String,
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    f_zero: f64,
}

impl std::fmt::Debug for StandardOperatorFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StandardOperatorFunction")
            .field("name", &self.name)
            .field("f_zero", &self.f_zero)
            .finish()
    }
}

impl StandardOperatorFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_zero: f64,
    ) -> Result<Self> {
        let this = Self {
            name: name.into(),
            eval: Box::new(eval),
            f_zero,
        };
        this.check_axioms()?;
        Ok(this)
    }

    fn check_axioms(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidOperatorFunction(msg));
        let one = (self.eval)(1.0);
        if (one - 1.0).abs() > 1e-12 {
            return fail(format!("{}: f(1) = {one}, expected 1", self.name));
        }
        let grid: Vec<f64> = (-20..=20).map(|k| 2f64.powi(k)).collect();
        let mut prev = f64::NEG_INFINITY;
        for &x in &grid {
            let fx = (self.eval)(x);
            if !fx.is_finite() || fx <= 0.0 {
                return fail(format!("{}: f({x}) = {fx} is not positive", self.name));
            }
            let sym = x * (self.eval)(1.0 / x);
            if (fx - sym).abs() > 1e-10 * fx {
                return fail(format!(
                    "{}: symmetry axiom violated at x = {x}: f(x) = {fx}, x·f(1/x) = {sym}",
                    self.name
                ));
            }
            if fx < prev - 1e-12 {
                return fail(format!("{}: not monotone at x = {x}", self.name));
            }
            prev = fx;
        }
        if self.f_zero < 0.0 || self.f_zero > (self.eval)(2f64.powi(-20)) + 1e-12 {
            return fail(format!(
                "{}: boundary value f(0) = {} inconsistent with the grid",
                self.name, self.f_zero
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// f(x) on (0, ∞).
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// The boundary value f(0⁺).
    pub fn f_zero(&self) -> f64 {
        self.f_zero
    }

    /// Symmetric mean m(a, b) = b·f(a/b) for a, b > 0, evaluated with the
    /// argument in (0, 1].
    pub fn mean(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        hi * (self.eval)(lo / hi)
    }

    /// Symmetric logarithmic derivative function f(x) = (1+x)/2, f(0) = ½.
    pub fn sld() -> Self {
        Self::new("sld", |x| (1.0 + x) / 2.0, 0.5).expect("builtin passes axioms")
    }

    /// Wigner–Yanase function f(x) = ((1+√x)/2)², f(0) = ¼.
    pub fn wigner_yanase() -> Self {
        Self::new(
            "wy",
            |x| {
                let s = (1.0 + x.sqrt()) / 2.0;
                s * s
            },
            0.25,
        )
        .expect("builtin passes axioms")
    }

    /// Kubo–Mori function f(x) = (x−1)/ln x, f(0) = 0; the removable
    /// singularity at x = 1 takes its analytic limit value 1 within
    /// |x − 1| < 1e-8.
    pub fn kubo_mori() -> Self {
        Self::new(
            "km",
            |x| {
                if (x - 1.0).abs() < 1e-8 {
                    1.0
                } else {
                    (x - 1.0) / x.ln()
                }
            },
            0.0,
        )
        .expect("builtin passes axioms")
    }

    /// Look up a builtin by its short name: `sld`, `wy`, or `km`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sld" => Ok(Self::sld()),
            "wy" => Ok(Self::wigner_yanase()),
            "km" => Ok(Self::kubo_mori()),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }
}

/// Real symmetric N×N matrix (row-major), the shape shared by the Fisher
/// matrix F̂, the covariance matrix V̂, and the skew information Î.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricRealMatrix {
    n: usize,
    data: Vec<f64>,
}

/// The Fisher information matrix is structurally just a symmetric real
/// matrix; the alias marks intent at API boundaries.
pub type FisherMatrix = SymmetricRealMatrix;

impl SymmetricRealMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Accepts row-major entries, checks symmetry within
    /// [`SYMMETRY_ENTRY_TOL`]·max(1, scale), and stores the symmetrized
    /// matrix.
    pub fn from_entries(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch(1, data.len(), n, n));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = data.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in k + 1..n {
                worst = worst.max((data[k * n + l] - data[l * n + k]).abs());
            }
        }
        if worst > SYMMETRY_ENTRY_TOL * scale {
            return Err(Error::InvalidParameter(format!(
                "matrix is not symmetric: max asymmetry {worst:.3e}"
            )));
        }
        let mut sym = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                sym[k * n + l] = (data[k * n + l] + data[l * n + k]) / 2.0;
            }
        }
        Ok(Self { n, data: sym })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.n + l]
    }

    pub(crate) fn set_sym(&mut self, k: usize, l: usize, v: f64) {
        self.data[k * self.n + l] = v;
        self.data[l * self.n + k] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { n: self.n, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// λᵀ M λ.
    pub fn quadratic_form(&self, lambda: &[f64]) -> f64 {
        assert_eq!(lambda.len(), self.n);
        let mut acc = 0.0;
        for k in 0..self.n {
            for l in 0..self.n {
                acc += lambda[k] * self.get(k, l) * lambda[l];
            }
        }
        acc
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let m = ComplexMatrix::from_fn(self.n, self.n, |i, j| {
            Complex64::new(self.get(i, j), 0.0)
        });
        Ok(eig_hermitian(&HermitianOperator::hermitized(m)?)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.first().expect("nonempty spectrum"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("nonempty spectrum"))
    }

    /// PSD within the comparator slack: min eig ≥ −[`PSD_ORDER_TOL`]·max(1, ‖M‖_F).
    pub fn is_psd(&self) -> Result<bool> {
        let tol = PSD_ORDER_TOL * self.frobenius_norm().max(1.0);
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Matrix order self ⪯ other: min eig(other − self) ≥
    /// −[`PSD_ORDER_TOL`]·max(1, ‖self‖_F, ‖other‖_F). One comparator for
    /// every matrix inequality in the crate.
    pub fn psd_leq(&self, other: &Self) -> Result<bool> {
        let diff = other.sub(self)?;
        let tol = PSD_ORDER_TOL
            * self
                .frobenius_norm()
                .max(other.frobenius_norm())
                .max(1.0);
        Ok(diff.min_eigenvalue()? >= -tol)
    }
}

/// Fisher matrix straight from spectral data (eigenvalues p and eigenvector
/// columns). This is the computational core shared by [`fisher_matrix`] and
/// [`fisher_scalar`]; it is public so callers can probe basis-gauge
/// questions with an explicitly chosen eigenbasis.
pub fn fisher_from_spectral(
    eig: &EigenSystem,
    ops: &[HermitianOperator],
    f: &StandardOperatorFunction,
) -> Result<FisherMatrix> {
    let d = eig.dim();
    let nops = ops.len();
    for op in ops {
        if op.dim() != d {
            return Err(Error::DimensionMismatch(d, op.dim()));
        }
    }

    // M_k = V† X_k V: generator matrix elements in the eigenbasis.
    let mut m: Vec<ComplexMatrix> = Vec::with_capacity(nops);
    let v = &eig.vectors;
    let vd = v.dagger();
    for op in ops {
        m.push(&(&vd * op.matrix()) * v);
    }
    let coupling_scale: Vec<f64> = ops
        .iter()
        .map(|op| COUPLING_TOL * op.frobenius_norm().max(1.0))
        .collect();

    let p = &eig.values;
    let mut out = SymmetricRealMatrix::zeros(nops);
    for k in 0..nops {
        for l in k..nops {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    let (pi, pj) = (p[i].max(0.0), p[j].max(0.0));
                    let zi = pi <= EIG_ZERO_TOL;
                    let zj = pj <= EIG_ZERO_TOL;
                    if zi && zj {
                        // Both outside the support: the numerator vanishes
                        // identically and the pair carries no information.
                        continue;
                    }
                    let denom = if zi || zj {
                        // Continuous extension m(p, 0) = p·f(0).
                        let big = pi.max(pj);
                        if f.f_zero() == 0.0 {
                            let coupled = (0..nops).any(|kk| {
                                m[kk][(i, j)].norm() > coupling_scale[kk]
                            });
                            if coupled {
                                return Err(Error::UnboundedFisher);
                            }
                            continue;
                        }
                        big * f.f_zero()
                    } else {
                        f.mean(pi, pj)
                    };
                    let diff = pi - pj;
                    let w = diff * diff / denom;
                    if w == 0.0 {
                        continue;
                    }
                    acc += m[k][(i, j)] * m[l][(i, j)].conj() * w;
                }
            }
            // The i↔j sum is real by construction; the residual imaginary
            // part is pure roundoff.
            out.set_sym(k, l, acc.re);
        }
    }
    Ok(out)
}

/// Quantum Fisher information matrix F̂ of ρ over the generator set.
pub fn fisher_matrix(
    rho: &DensityMatrix,
    gens: &GeneratorSet,
    f: &StandardOperatorFunction,
) -> Result<FisherMatrix> {
    if rho.dim() != gens.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), gens.dim()));
    }
    fisher_from_spectral(&rho.eig()?, gens.ops(), f)
}

/// Scalar Fisher information of a single Hermitian observable: exactly the
/// 1×1 matrix kernel evaluated on the singleton family.
pub fn fisher_scalar(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    f: &StandardOperatorFunction,
) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), h.dim()));
    }
    let m = fisher_from_spectral(&rho.eig()?, std::slice::from_ref(h), f)?;
    Ok(m.get(0, 0))
}

/// Symmetrized covariance matrix
/// V_kl = ½⟨{X_k − ⟨X_k⟩, X_l − ⟨X_l⟩}⟩_ρ = Re tr(ρX_kX_l) − ⟨X_k⟩⟨X_l⟩.
pub fn covariance_matrix(rho: &DensityMatrix, gens: &GeneratorSet) -> Result<SymmetricRealMatrix> {
    if rho.dim() != gens.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), gens.dim()));
    }
    let nops = gens.len();
    let means: Vec<f64> = gens.iter().map(|op| rho.expectation(op)).collect();
    let mut out = SymmetricRealMatrix::zeros(nops);
    for k in 0..nops {
        for l in k..nops {
            let second = (&(rho.matrix() * gens.get(k).matrix()) * gens.get(l).matrix())
                .trace()
                .re;
            out.set_sym(k, l, second - means[k] * means[l]);
        }
    }
    Ok(out)
}

/// Scalar variance V_ρ(H) = ⟨H²⟩ − ⟨H⟩².
pub fn variance(rho: &DensityMatrix, h: &HermitianOperator) -> f64 {
    let mean = rho.expectation(h);
    let second = (&(rho.matrix() * h.matrix()) * h.matrix()).trace().re;
    second - mean * mean
}

/// Covariance matrix of Hermitian operators on a pure state, computed
/// vector-side (no density matrix materialized):
/// C_kl = Re⟨Y_kψ|Y_lψ⟩ − ⟨Y_k⟩⟨Y_l⟩. Useful where the operators live on a
/// purification space of dimension d².
pub fn pure_covariance_matrix(
    psi: &crate::states::PureState,
    ops: &[HermitianOperator],
) -> Result<SymmetricRealMatrix> {
    let d = psi.dim();
    let nops = ops.len();
    let mut images: Vec<Vec<Complex64>> = Vec::with_capacity(nops);
    let mut means: Vec<f64> = Vec::with_capacity(nops);
    for op in ops {
        if op.dim() != d {
            return Err(Error::DimensionMismatch(d, op.dim()));
        }
        let img = op.matrix().mul_vec(psi.amplitudes());
        let mean: f64 = psi
            .amplitudes()
            .iter()
            .zip(&img)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        images.push(img);
        means.push(mean);
    }
    let mut out = SymmetricRealMatrix::zeros(nops);
    for k in 0..nops {
        for l in k..nops {
            let inner: Complex64 = images[k]
                .iter()
                .zip(&images[l])
                .map(|(a, b)| a.conj() * b)
                .sum();
            out.set_sym(k, l, inner.re - means[k] * means[l]);
        }
    }
    Ok(out)
}

/// Metric-adjusted skew information matrix Î = (f(0)/2)·F̂: vanishes on
/// symmetric states, equals V̂ on pure states, and satisfies 0 ⪯ Î ⪯ V̂.
pub fn skew_info_matrix(
    rho: &DensityMatrix,
    gens: &GeneratorSet,
    f: &StandardOperatorFunction,
) -> Result<SymmetricRealMatrix> {
    Ok(fisher_matrix(rho, gens, f)?.scale(f.f_zero() / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;
    use crate::states::{random_density, random_hermitian, random_unitary, PureState};
    use crate::symmetry::{preset_su2, preset_u1};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn sigma_y() -> HermitianOperator {
        HermitianOperator::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.0, 0.0), c(0.0, -1.0)],
                vec![c(0.0, 1.0), c(0.0, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn sigma_z() -> HermitianOperator {
        HermitianOperator::from_real_diag(&[1.0, -1.0])
    }

    fn pauli_xy() -> GeneratorSet {
        GeneratorSet::new(vec![sigma_x(), sigma_y()]).unwrap()
    }

    #[test]
    fn builtin_functions_pass_axioms_and_boundary_values() {
        let sld = StandardOperatorFunction::sld();
        let wy = StandardOperatorFunction::wigner_yanase();
        let km = StandardOperatorFunction::kubo_mori();
        assert_eq!(sld.f_zero(), 0.5);
        assert_eq!(wy.f_zero(), 0.25);
        assert_eq!(km.f_zero(), 0.0);
        assert_eq!(sld.eval(1.0), 1.0);
        assert_eq!(km.eval(1.0), 1.0);
        // KM near the removable singularity stays at the limit value.
        assert_eq!(km.eval(1.0 + 1e-9), 1.0);
        assert!(matches!(
            StandardOperatorFunction::by_name("bogus"),
            Err(Error::UnknownFunction(_))
        ));
    }

    #[test]
    fn axiom_checks_reject_bad_functions() {
        // Violates f(1) = 1.
        assert!(StandardOperatorFunction::new("double", |x| 1.0 + x, 1.0).is_err());
        // Violates the symmetry axiom x·f(1/x) = f(x).
        assert!(StandardOperatorFunction::new("asym", |x| x.powf(0.7), 0.0).is_err());
        // Not monotone.
        assert!(StandardOperatorFunction::new(
            "bump",
            |x| (2.0 * x / (1.0 + x * x)).max(1e-6),
            0.0
        )
        .is_err());
    }

    #[test]
    fn mean_is_symmetric_and_bounded() {
        for f in [
            StandardOperatorFunction::sld(),
            StandardOperatorFunction::wigner_yanase(),
            StandardOperatorFunction::kubo_mori(),
        ] {
            for &(a, b) in &[(0.3, 0.7), (0.01, 0.99), (0.5, 0.5), (1e-6, 1.0)] {
                let m1 = f.mean(a, b);
                let m2 = f.mean(b, a);
                assert!((m1 - m2).abs() <= 1e-15 * m1.abs().max(1.0));
                // Between min and max (standard means are).
                assert!(m1 >= a.min(b) - 1e-15 && m1 <= a.max(b) + 1e-15);
            }
        }
    }

    #[test]
    fn scalar_anchor_diagonal_qubit() {
        let rho = DensityMatrix::new(ComplexMatrix::diag_re(&[0.75, 0.25])).unwrap();
        let f = fisher_scalar(&rho, &sigma_x(), &StandardOperatorFunction::sld()).unwrap();
        assert!((f - 1.0).abs() <= 1e-10, "got {f}");
    }

    #[test]
    fn scalar_anchor_pure_plus() {
        let plus = PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rho = DensityMatrix::pure(&plus);
        let f = fisher_scalar(&rho, &sigma_z(), &StandardOperatorFunction::sld()).unwrap();
        assert!((f - 4.0).abs() <= 1e-10, "got {f}");
    }

    #[test]
    fn commuting_pair_gives_zero() {
        let rho = DensityMatrix::new(ComplexMatrix::diag_re(&[0.6, 0.4])).unwrap();
        for f in ["sld", "wy", "km"] {
            let f = StandardOperatorFunction::by_name(f).unwrap();
            let val = fisher_scalar(&rho, &sigma_z(), &f).unwrap();
            assert!(val.abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_anchor_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(2);
        let f = fisher_matrix(&rho, &pauli_xy(), &StandardOperatorFunction::sld()).unwrap();
        assert!(f.max_abs_entry() < 1e-12);
    }

    #[test]
    fn matrix_anchor_ground_state() {
        let rho = DensityMatrix::pure(&PureState::basis(2, 0));
        let f = fisher_matrix(&rho, &pauli_xy(), &StandardOperatorFunction::sld()).unwrap();
        assert!((f.get(0, 0) - 4.0).abs() <= 1e-10);
        assert!((f.get(1, 1) - 4.0).abs() <= 1e-10);
        assert!(f.get(0, 1).abs() <= 1e-10);
    }

    #[test]
    fn singleton_matrix_equals_scalar_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..20 {
            let rho = random_density(3, 3, &mut rng).unwrap();
            let h = random_hermitian(3, &mut rng);
            let gens = GeneratorSet::new(vec![h.clone()]).unwrap();
            let f = StandardOperatorFunction::wigner_yanase();
            let scalar = fisher_scalar(&rho, &h, &f).unwrap();
            let matrix = fisher_matrix(&rho, &gens, &f).unwrap();
            assert_eq!(scalar, matrix.get(0, 0), "same kernel, bitwise equal");
        }
    }

    #[test]
    fn lambda_contraction_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let f = StandardOperatorFunction::sld();
        for _ in 0..10 {
            let rho = random_density(3, 3, &mut rng).unwrap();
            let gens = preset_su2(2).unwrap();
            let fm = fisher_matrix(&rho, &gens, &f).unwrap();
            for _ in 0..10 {
                let lambda: Vec<f64> =
                    (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
                let combo = HermitianOperator::linear_combination(gens.ops(), &lambda).unwrap();
                let direct = fisher_scalar(&rho, &combo, &f).unwrap();
                let contracted = fm.quadratic_form(&lambda);
                let scale = direct.abs().max(1.0);
                assert!(
                    (direct - contracted).abs() <= 1e-10 * scale,
                    "contraction mismatch: {direct} vs {contracted}"
                );
            }
        }
    }

    #[test]
    fn covariance_anchors() {
        let zero = DensityMatrix::pure(&PureState::basis(2, 0));
        let v = covariance_matrix(&zero, &pauli_xy()).unwrap();
        assert!((v.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((v.get(1, 1) - 1.0).abs() < 1e-14);
        assert!(v.get(0, 1).abs() < 1e-14);

        // Eigenstate of σz has zero variance for it.
        let gens_xz = GeneratorSet::new(vec![sigma_x(), sigma_z()]).unwrap();
        let v = covariance_matrix(&zero, &gens_xz).unwrap();
        assert!(v.get(1, 1).abs() < 1e-14);

        let mixed = DensityMatrix::maximally_mixed(2);
        let v = covariance_matrix(&mixed, &gens_xz).unwrap();
        assert!((v.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((v.get(1, 1) - 1.0).abs() < 1e-14);
        assert!(v.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn covariance_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let gens = preset_su2(3).unwrap();
        let rho = random_density(4, 4, &mut rng).unwrap();
        let v = covariance_matrix(&rho, &gens).unwrap();
        for _ in 0..25 {
            let lambda: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let combo = HermitianOperator::linear_combination(gens.ops(), &lambda).unwrap();
            let direct = variance(&rho, &combo);
            assert!((direct - v.quadratic_form(&lambda)).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn skew_info_pure_equals_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for name in ["sld", "wy"] {
            let f = StandardOperatorFunction::by_name(name).unwrap();
            let rho = random_density(3, 1, &mut rng).unwrap();
            let gens = preset_su2(2).unwrap();
            let i_mat = skew_info_matrix(&rho, &gens, &f).unwrap();
            let v_mat = covariance_matrix(&rho, &gens).unwrap();
            assert!(
                i_mat.max_abs_diff(&v_mat) <= 1e-9,
                "{name}: pure-state skew information must equal the covariance"
            );
        }
    }

    #[test]
    fn skew_info_sandwich_on_mixed_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let gens = pauli_xy();
        for name in ["sld", "wy", "km"] {
            let f = StandardOperatorFunction::by_name(name).unwrap();
            for _ in 0..20 {
                let rho = random_density(2, 2, &mut rng).unwrap();
                let i_mat = skew_info_matrix(&rho, &gens, &f).unwrap();
                let v_mat = covariance_matrix(&rho, &gens).unwrap();
                assert!(i_mat.is_psd().unwrap());
                assert!(i_mat.psd_leq(&v_mat).unwrap(), "{name}: Î ⪯ V̂ violated");
            }
        }
    }

    #[test]
    fn symmetric_state_has_zero_skew_info() {
        let gens = preset_u1(&[0.0, 1.0, 3.0]).unwrap();
        let rho = DensityMatrix::new(ComplexMatrix::diag_re(&[0.5, 0.3, 0.2])).unwrap();
        let i_mat = skew_info_matrix(&rho, &gens, &StandardOperatorFunction::sld()).unwrap();
        assert!(i_mat.max_abs_entry() < 1e-14);
    }

    #[test]
    fn unbounded_on_rank_deficient_with_coupling() {
        // Kubo–Mori has f(0) = 0: a pure state with σx coupling across the
        // support boundary has divergent information.
        let rho = DensityMatrix::pure(&PureState::basis(2, 0));
        let km = StandardOperatorFunction::kubo_mori();
        assert!(matches!(
            fisher_scalar(&rho, &sigma_x(), &km),
            Err(Error::UnboundedFisher)
        ));
        // Without coupling (commuting observable) the value is zero.
        let val = fisher_scalar(&rho, &sigma_z(), &km).unwrap();
        assert!(val.abs() < 1e-14);
        // SLD and WY stay finite on the same input.
        for name in ["sld", "wy"] {
            let f = StandardOperatorFunction::by_name(name).unwrap();
            assert!(fisher_scalar(&rho, &sigma_x(), &f).is_ok());
        }
    }

    #[test]
    fn gauge_invariance_under_degenerate_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        // Spectrum with a twofold degeneracy.
        let u = random_unitary(3, &mut rng).unwrap();
        let diag = ComplexMatrix::diag_re(&[0.25, 0.25, 0.5]);
        let rho = DensityMatrix::new(&(&u * &diag) * &u.dagger()).unwrap();
        let gens = preset_su2(2).unwrap();
        let f = StandardOperatorFunction::sld();

        let eig = rho.eig().unwrap();
        let base = fisher_from_spectral(&eig, gens.ops(), &f).unwrap();

        // Rotate inside each eigenvalue cluster (within 1e-10) by a random
        // unitary block; the Fisher matrix must not move.
        let d = eig.dim();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in 0..d {
            match clusters.last_mut() {
                Some(cl) if (eig.values[i] - eig.values[cl[0]]).abs() <= 1e-10 => cl.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let mut rotated = eig.vectors.clone();
        for cl in clusters.iter().filter(|cl| cl.len() > 1) {
            let block = random_unitary(cl.len(), &mut rng).unwrap();
            let orig = rotated.clone();
            for (bj, &j) in cl.iter().enumerate() {
                for i in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (bk, &k) in cl.iter().enumerate() {
                        acc += orig[(i, k)] * block[(bk, bj)];
                    }
                    rotated[(i, j)] = acc;
                }
            }
        }
        let gauged = EigenSystem {
            values: eig.values.clone(),
            vectors: rotated,
        };
        let moved = fisher_from_spectral(&gauged, gens.ops(), &f).unwrap();
        assert!(
            base.max_abs_diff(&moved) <= 1e-9,
            "degenerate-cluster gauge moved the matrix by {:.3e}",
            base.max_abs_diff(&moved)
        );
    }

    #[test]
    fn unitary_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let f = StandardOperatorFunction::sld();
        for _ in 0..10 {
            let rho = random_density(3, 3, &mut rng).unwrap();
            let gens = preset_su2(2).unwrap();
            let u = random_unitary(3, &mut rng).unwrap();
            let rho_u = DensityMatrix::new(&(&u * rho.matrix()) * &u.dagger()).unwrap();
            let gens_u = GeneratorSet::new(
                gens.iter()
                    .map(|op| {
                        HermitianOperator::hermitized(&(&u * op.matrix()) * &u.dagger()).unwrap()
                    })
                    .collect(),
            )
            .unwrap();
            let f1 = fisher_matrix(&rho, &gens, &f).unwrap();
            let f2 = fisher_matrix(&rho_u, &gens_u, &f).unwrap();
            assert!(f1.max_abs_diff(&f2) <= 1e-9 * f1.max_abs_entry().max(1.0));
        }
    }

    #[test]
    fn fisher_matrix_is_psd_in_random_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for _ in 0..30 {
            let d = 2 + (rng.random::<u32>() % 3) as usize;
            let rho = random_density(d, d, &mut rng).unwrap();
            let ops: Vec<HermitianOperator> =
                (0..2).map(|_| random_hermitian(d, &mut rng)).collect();
            let gens = GeneratorSet::new(ops).unwrap();
            for name in ["sld", "wy", "km"] {
                let f = StandardOperatorFunction::by_name(name).unwrap();
                let fm = fisher_matrix(&rho, &gens, &f).unwrap();
                let tol = 1e-9 * fm.frobenius_norm().max(1.0);
                assert!(fm.min_eigenvalue().unwrap() >= -tol, "{name} not PSD");
            }
        }
    }

    #[test]
    fn fisher_vanishes_iff_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let f = StandardOperatorFunction::sld();
        for _ in 0..10 {
            let h = random_hermitian(3, &mut rng);
            let sym = crate::symmetry::symmetric_state_from_generator(&h, |x| x.exp()).unwrap();
            let val = fisher_scalar(&sym, &h, &f).unwrap();
            assert!(val.abs() < 1e-12);
            assert!(commutator(sym.matrix(), h.matrix()).frobenius_norm() < 1e-12);
        }
    }
}
