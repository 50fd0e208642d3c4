//! Subcommand implementations and the exit-code contract.
//!
//! Every command resolves to one of four exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success; for `verify`/`minvar`/`counterexample`, every check passed |
//! | 1    | a verification check failed — the report is still written |
//! | 2    | invalid input: bad flags, malformed files, unknown names, shape mismatches |
//! | 3    | unbounded Fisher value, or a rank-deficient state refused without `--regularize` |
//!
//! Outputs go to `--out` when given, stdout otherwise, always via the fixed
//! 17-digit JSON encoding so identical `(config, seed)` pairs produce
//! byte-identical bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfim_core::fisher::{fisher_matrix, fisher_scalar, pure_covariance_matrix};
use qfim_core::linalg::HermitianOperator;
use qfim_core::states::purify;
use qfim_core::theoremlab::{
    combined_generator, counterexample_yu, extract_optimal_xr, regularize, verify_luo_matrix,
    verify_min_cov_matrix, verify_resource_measure, VerificationReport, REGULARIZATION_EPSILON,
};
use qfim_core::Error;

use crate::config::{
    CounterexampleConfig, FisherConfig, MinvarConfig, OutputFormat, Suite, VerifyConfig,
};
use crate::schema::{
    complex_rows, load_gens, load_state, to_csv, to_json, FisherOutput, MinvarOutput, RealRows,
    SuiteReport,
};

/// Error carrying the process exit code; the message goes to stderr.
#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

/// Invalid-input error (exit 2).
pub fn invalid(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 2,
        message: message.into(),
    }
}

/// Map a library error onto the exit contract: an unbounded Fisher value has
/// its own signal, everything else is invalid input.
fn core_err(e: Error) -> CmdError {
    let code = match e {
        Error::UnboundedFisher => 3,
        _ => 2,
    };
    CmdError {
        code,
        message: e.to_string(),
    }
}

/// Number of λ directions in the `fisher` contraction self-check.
const CONTRACTION_PROBES: usize = 8;

/// Write `text` to the `--out` path, or to stdout when none was given.
fn emit(out: Option<&str>, text: &str) -> Result<(), CmdError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| invalid(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Derive a per-task seed from the master seed; tasks are salted so suites
/// never share RNG streams.
fn sub_seed(seed: u64, salt: u64) -> u64 {
    seed.rotate_left(23) ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn real_rows(m: &qfim_core::fisher::SymmetricRealMatrix) -> RealRows {
    (0..m.n())
        .map(|k| (0..m.n()).map(|l| m.get(k, l)).collect())
        .collect()
}

/// `qfim fisher`: compute F̂, cross-check it against scalar contractions along
/// random directions, and write the matrix.
pub fn cmd_fisher(cfg: FisherConfig) -> Result<i32, CmdError> {
    let rho = load_state(&cfg.state)?;
    let gens = load_gens(&cfg.gens)?;
    let fhat = fisher_matrix(&rho, &gens, &cfg.f).map_err(core_err)?;

    // Self-check: λᵀF̂λ must match the scalar Fisher value of the contracted
    // generator λ·X. The two sides follow different code paths (matrix kernel
    // vs. single-observable kernel), so agreement is a real consistency test.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0_f64;
    for _ in 0..CONTRACTION_PROBES {
        let lambda: Vec<f64> = (0..gens.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let quad = fhat.quadratic_form(&lambda);
        let op = HermitianOperator::linear_combination(gens.ops(), &lambda).map_err(core_err)?;
        let scalar = fisher_scalar(&rho, &op, &cfg.f).map_err(core_err)?;
        worst = worst.max((quad - scalar).abs() / quad.abs().max(1.0));
    }

    let output = FisherOutput {
        f_name: cfg.f.name().to_string(),
        dim: rho.dim(),
        generators: gens.len(),
        matrix: real_rows(&fhat),
        contraction_residual: worst,
        seed: cfg.seed,
    };
    let text = match cfg.format {
        OutputFormat::Json => to_json(&output)?,
        OutputFormat::Csv => to_csv(&output.matrix),
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(if worst <= cfg.tol { 0 } else { 1 })
}

/// `qfim verify`: run the selected suites over the group presets, write the
/// aggregate report (pass or fail), and exit 0 only if every check passed.
pub fn cmd_verify(cfg: VerifyConfig) -> Result<i32, CmdError> {
    let mut reports: Vec<VerificationReport> = Vec::new();

    if matches!(cfg.suite, Suite::All | Suite::Resource) {
        for (i, preset) in cfg.presets.iter().enumerate() {
            reports.push(
                verify_resource_measure(
                    preset,
                    &cfg.f,
                    cfg.trials,
                    sub_seed(cfg.seed, 1 + i as u64),
                    cfg.inject_noncovariant,
                )
                .map_err(core_err)?,
            );
        }
    }
    if matches!(cfg.suite, Suite::All | Suite::Luo) {
        reports.push(verify_luo_matrix(cfg.trials, sub_seed(cfg.seed, 101)).map_err(core_err)?);
    }
    if matches!(cfg.suite, Suite::All | Suite::Minvar) {
        // A handful of ad-hoc full-rank states; each report carries the
        // equality check plus several random competitor frames.
        let states = (cfg.trials / 5).clamp(4, 16);
        for i in 0..states {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 201 + i));
            let d = 2 + (i as usize % 3);
            let n_gens = 1 + (i as usize % 3);
            let rho = qfim_core::states::random_density(d, d, &mut rng).map_err(core_err)?;
            let ops: Vec<HermitianOperator> = (0..n_gens)
                .map(|_| qfim_core::states::random_hermitian(d, &mut rng))
                .collect();
            let gens = qfim_core::symmetry::GeneratorSet::new(ops).map_err(core_err)?;
            reports.push(
                verify_min_cov_matrix(&rho, &gens, cfg.step, 5, sub_seed(cfg.seed, 301 + i))
                    .map_err(core_err)?,
            );
        }
    }
    if matches!(cfg.suite, Suite::All | Suite::Counterexample) {
        let ensembles = cfg.trials.saturating_mul(50).max(1000);
        reports.push(
            counterexample_yu(ensembles, 3, sub_seed(cfg.seed, 401)).map_err(core_err)?,
        );
    }

    let passed = reports.iter().all(|r| r.passed);
    let report = SuiteReport {
        command: "verify".into(),
        suite: cfg.suite.name().into(),
        seed: cfg.seed,
        trials: cfg.trials,
        f_name: cfg.f.name().to_string(),
        groups: cfg.presets.iter().map(|p| p.label()).collect(),
        injected_noncovariant: cfg.inject_noncovariant,
        passed,
        reports,
    };
    emit(cfg.out.as_deref(), &to_json(&report)?)?;
    Ok(if passed { 0 } else { 1 })
}

/// `qfim minvar`: extract the optimal ancilla frame generators for one state,
/// compare 4·V̂ of the purification against F̂ entrywise, and report both
/// sides along with the extracted frames.
pub fn cmd_minvar(cfg: MinvarConfig) -> Result<i32, CmdError> {
    let loaded = load_state(&cfg.state)?;
    let gens = load_gens(&cfg.gens)?;
    if loaded.dim() != gens.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match generator dimension {}",
            loaded.dim(),
            gens.dim()
        )));
    }

    let rank = loaded.rank().map_err(core_err)?;
    let deficient = rank < loaded.dim();
    let rho = if deficient {
        if !cfg.regularize {
            return Err(CmdError {
                code: 3,
                message: format!(
                    "state has rank {rank} < {}; the transport frame needs full rank \
                     (pass --regularize to blend with the maximally mixed state)",
                    loaded.dim()
                ),
            });
        }
        regularize(&loaded, REGULARIZATION_EPSILON).map_err(core_err)?
    } else {
        loaded
    };

    let sld = qfim_core::fisher::StandardOperatorFunction::sld();
    let fhat = fisher_matrix(&rho, &gens, &sld).map_err(core_err)?;
    let psi = purify(&rho).map_err(core_err)?;

    let mut frames = Vec::with_capacity(gens.len());
    let mut residuals = Vec::with_capacity(gens.len());
    let mut combined = Vec::with_capacity(gens.len());
    for k in 0..gens.len() {
        let pd = extract_optimal_xr(&rho, gens.get(k), cfg.step).map_err(core_err)?;
        residuals.push(pd.residual);
        combined.push(combined_generator(&pd.xr, gens.get(k)).map_err(core_err)?);
        frames.push(complex_rows(&pd.xr.into_matrix()));
    }
    let vhat4 = pure_covariance_matrix(&psi, &combined)
        .map_err(core_err)?
        .scale(4.0);
    let residual = fhat.max_abs_diff(&vhat4);
    let passed = residual <= cfg.tol;

    let output = MinvarOutput {
        f_name: sld.name().to_string(),
        dim: rho.dim(),
        generators: gens.len(),
        step: cfg.step,
        regularized: deficient,
        fisher: real_rows(&fhat),
        four_variance: real_rows(&vhat4),
        entrywise_residual: residual,
        budget: cfg.tol,
        frame_generators: frames,
        frame_residuals: residuals,
        passed,
        seed: cfg.seed,
    };
    emit(cfg.out.as_deref(), &to_json(&output)?)?;
    Ok(if passed { 0 } else { 1 })
}

/// `qfim counterexample`: the Fisher matrix of the maximally mixed qubit over
/// (σx, σy) vanishes, yet every pure-state ensemble for it keeps an
/// ensemble-averaged variance trace of 2 — variances do not contract.
pub fn cmd_counterexample(cfg: CounterexampleConfig) -> Result<i32, CmdError> {
    let report = counterexample_yu(cfg.trials, 3, cfg.seed).map_err(core_err)?;
    let passed = report.passed;
    emit(cfg.out.as_deref(), &to_json(&report)?)?;
    Ok(if passed { 0 } else { 1 })
}
