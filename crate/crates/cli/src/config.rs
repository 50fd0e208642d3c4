//! Command-line surface and run configuration.
//!
//! Every subcommand accepts `--config <file>`: a JSON object whose keys are
//! the flag names in snake_case (`{"seed": 7, "inject_noncovariant": true}`).
//! Explicit flags override config-file values, the config file overrides the
//! built-in defaults, and unknown keys are rejected. There are no
//! environment variables.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use qfim_core::fisher::StandardOperatorFunction;
use qfim_core::theoremlab::{GroupPreset, EQUALITY_BUDGET, XR_STEP_DEFAULT};

use crate::commands::{invalid, CmdError};
use crate::schema::parse_json;

/// Default trial count for `verify`.
pub const DEFAULT_TRIALS: u64 = 20;
/// Default ensemble count for `counterexample`.
pub const DEFAULT_ENSEMBLES: u64 = 10_000;
/// Default budget for the λ-contraction self-check in `fisher`.
pub const CONTRACTION_BUDGET: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "qfim",
    version,
    about = "Fisher-information matrices for symmetric dynamics: computation, \
             verification suites, and the purification variance identity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a Fisher information matrix for a state and generator set.
    ///
    /// Exit codes: 0 success, 1 contraction self-check above --tol,
    /// 2 invalid input, 3 unbounded Fisher value (rank-deficient state under
    /// a divergent operator weight).
    Fisher(FisherArgs),
    /// Run verification suites and write a machine-readable report.
    ///
    /// Exit codes: 0 all suites passed, 1 at least one check failed (the
    /// report is still written), 2 invalid input.
    Verify(VerifyArgs),
    /// Check the purification variance identity on one state.
    ///
    /// Exit codes: 0 identity holds within budget, 1 residual above budget,
    /// 2 invalid input, 3 state is rank-deficient and --regularize was not
    /// given.
    Minvar(MinvarArgs),
    /// Exhibit the gap between the Fisher matrix and ensemble-averaged
    /// variances on the maximally mixed qubit.
    ///
    /// Exit codes: 0 gap confirmed on every ensemble, 1 check failed,
    /// 2 invalid input.
    Counterexample(CounterexampleArgs),
}

/// One JSON object mirroring the flag names; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub state: Option<String>,
    pub gens: Option<String>,
    pub group: Option<String>,
    pub j: Option<f64>,
    pub f: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub tol: Option<f64>,
    pub h: Option<f64>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub suite: Option<String>,
    pub regularize: Option<bool>,
    pub inject_noncovariant: Option<bool>,
}

impl ConfigFile {
    fn load(path: Option<&str>) -> Result<Self, CmdError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = crate::schema::read_file(p)?;
                parse_json(&text, p)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    /// Path to a JSON density matrix: {"matrix": [[[re,im],...],...]}.
    #[arg(long)]
    pub state: Option<String>,
    /// Path to a JSON generator list: {"generators": [matrix,...]}.
    #[arg(long)]
    pub gens: Option<String>,
    /// Operator function: sld, wy, or km.
    #[arg(long)]
    pub f: Option<String>,
    /// RNG seed for the λ-contraction self-check.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Budget for the contraction self-check residual.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
    /// Output format: json (default) or csv (matrix only).
    #[arg(long)]
    pub format: Option<String>,
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run: all, resource, luo, minvar, or counterexample.
    #[arg(long)]
    pub suite: Option<String>,
    /// Restrict to one group preset: u1 (qubit phase), su2 (spin-j), or rn
    /// (commuting pair on four levels). Default: a battery of all three
    /// kinds.
    #[arg(long)]
    pub group: Option<String>,
    /// Spin quantum number for --group su2; must be a positive half-integer.
    #[arg(long)]
    pub j: Option<f64>,
    /// Operator function for the resource suite: sld, wy, or km.
    #[arg(long)]
    pub f: Option<String>,
    /// RNG seed; identical (config, seed) pairs produce byte-identical
    /// reports.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials per check.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Central-difference step for the minvar suite.
    #[arg(long)]
    pub h: Option<f64>,
    /// Report path; stdout when omitted. The report is written on failure
    /// too.
    #[arg(long)]
    pub out: Option<String>,
    /// Output format; only json is valid for structured reports.
    #[arg(long)]
    pub format: Option<String>,
    /// Negative control: route the monotonicity checks through a
    /// non-covariant channel. A correct build then FAILS verification.
    #[arg(long)]
    pub inject_noncovariant: bool,
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Args)]
pub struct MinvarArgs {
    /// Path to a JSON density matrix.
    #[arg(long)]
    pub state: Option<String>,
    /// Path to a JSON generator list.
    #[arg(long)]
    pub gens: Option<String>,
    /// RNG seed (reserved for report headers; the computation is
    /// deterministic).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Central-difference step for the transport-frame derivative.
    #[arg(long)]
    pub h: Option<f64>,
    /// Entrywise budget for |F - 4V|.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Blend a rank-deficient state with the maximally mixed one instead of
    /// refusing it.
    #[arg(long)]
    pub regularize: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
    /// Output format; only json is valid for structured reports.
    #[arg(long)]
    pub format: Option<String>,
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// RNG seed for ensemble sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random pure-state ensembles to test.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
    /// Output format; only json is valid for structured reports.
    #[arg(long)]
    pub format: Option<String>,
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self, CmdError> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(invalid(format!(
                "unknown format {other:?}; expected json or csv"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Resource,
    Luo,
    Minvar,
    Counterexample,
}

impl Suite {
    fn parse(s: &str) -> Result<Self, CmdError> {
        match s {
            "all" => Ok(Self::All),
            "resource" => Ok(Self::Resource),
            "luo" => Ok(Self::Luo),
            "minvar" => Ok(Self::Minvar),
            "counterexample" => Ok(Self::Counterexample),
            other => Err(invalid(format!(
                "unknown suite {other:?}; expected all, resource, luo, minvar, or counterexample"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::All => "all",
            Self::Resource => "resource",
            Self::Luo => "luo",
            Self::Minvar => "minvar",
            Self::Counterexample => "counterexample",
        }
    }
}

/// Fully resolved `fisher` run.
#[derive(Debug)]
pub struct FisherConfig {
    pub state: String,
    pub gens: String,
    pub f: StandardOperatorFunction,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<String>,
    pub format: OutputFormat,
}

/// Fully resolved `verify` run.
#[derive(Debug)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub presets: Vec<GroupPreset>,
    pub f: StandardOperatorFunction,
    pub seed: u64,
    pub trials: u64,
    pub step: f64,
    pub out: Option<String>,
    pub inject_noncovariant: bool,
}

/// Fully resolved `minvar` run.
#[derive(Debug)]
pub struct MinvarConfig {
    pub state: String,
    pub gens: String,
    pub seed: u64,
    pub step: f64,
    pub tol: f64,
    pub regularize: bool,
    pub out: Option<String>,
}

/// Fully resolved `counterexample` run.
#[derive(Debug)]
pub struct CounterexampleConfig {
    pub seed: u64,
    pub trials: u64,
    pub out: Option<String>,
}

fn parse_f(name: Option<String>) -> Result<StandardOperatorFunction, CmdError> {
    let name = name.unwrap_or_else(|| "sld".into());
    StandardOperatorFunction::by_name(&name).map_err(|e| invalid(e.to_string()))
}

fn positive(value: f64, what: &str) -> Result<f64, CmdError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{what} must be positive, got {value}")))
    }
}

fn at_least_one(value: u64, what: &str) -> Result<u64, CmdError> {
    if value == 0 {
        Err(invalid(format!("{what} must be at least 1")))
    } else {
        Ok(value)
    }
}

/// Reject CSV for commands whose output is a structured report, per the
/// fixed encoding conventions.
fn json_only(format: Option<String>, command: &str) -> Result<(), CmdError> {
    match format.as_deref().map(OutputFormat::parse).transpose()? {
        None | Some(OutputFormat::Json) => Ok(()),
        Some(OutputFormat::Csv) => Err(invalid(format!(
            "csv output is limited to flat matrices; {command} writes a structured report"
        ))),
    }
}

/// The preset battery used when no --group is given: both abelian kinds at
/// two dimensions, a genuinely non-abelian spin, and a two-generator torus.
fn preset_battery() -> Vec<GroupPreset> {
    vec![
        GroupPreset::U1 {
            spectrum: vec![0.0, 1.0],
        },
        GroupPreset::U1 {
            spectrum: vec![0.0, 1.0, 3.0],
        },
        GroupPreset::Su2 { two_j: 2 },
        GroupPreset::Rn {
            spectra: vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
        },
    ]
}

fn resolve_presets(group: Option<String>, j: Option<f64>) -> Result<Vec<GroupPreset>, CmdError> {
    let Some(group) = group else {
        if j.is_some() {
            return Err(invalid("--j requires --group su2"));
        }
        return Ok(preset_battery());
    };
    match group.as_str() {
        "u1" => {
            if j.is_some() {
                return Err(invalid("--j requires --group su2"));
            }
            Ok(vec![GroupPreset::U1 {
                spectrum: vec![0.0, 1.0],
            }])
        }
        "su2" => {
            let j = j.unwrap_or(1.0);
            let two_j = 2.0 * j;
            let rounded = two_j.round();
            if !(two_j.is_finite() && two_j > 0.0 && (two_j - rounded).abs() <= 1e-9) {
                return Err(invalid(format!(
                    "--j must be a positive half-integer, got {j}"
                )));
            }
            Ok(vec![GroupPreset::Su2 {
                two_j: rounded as u32,
            }])
        }
        "rn" => {
            if j.is_some() {
                return Err(invalid("--j requires --group su2"));
            }
            Ok(vec![GroupPreset::Rn {
                spectra: vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
            }])
        }
        other => Err(invalid(format!(
            "unknown group {other:?}; expected u1, su2, or rn"
        ))),
    }
}

impl FisherArgs {
    pub fn resolve(self) -> Result<FisherConfig, CmdError> {
        let cfg = ConfigFile::load(self.config.as_deref())?;
        let state = self
            .state
            .or(cfg.state)
            .ok_or_else(|| invalid("--state is required"))?;
        let gens = self
            .gens
            .or(cfg.gens)
            .ok_or_else(|| invalid("--gens is required"))?;
        Ok(FisherConfig {
            state,
            gens,
            f: parse_f(self.f.or(cfg.f))?,
            seed: self.seed.or(cfg.seed).unwrap_or(0),
            tol: positive(self.tol.or(cfg.tol).unwrap_or(CONTRACTION_BUDGET), "--tol")?,
            out: self.out.or(cfg.out),
            format: self
                .format
                .or(cfg.format)
                .map_or(Ok(OutputFormat::Json), |s| OutputFormat::parse(&s))?,
        })
    }
}

impl VerifyArgs {
    pub fn resolve(self) -> Result<VerifyConfig, CmdError> {
        let cfg = ConfigFile::load(self.config.as_deref())?;
        json_only(self.format.or(cfg.format), "verify")?;
        let suite = self
            .suite
            .or(cfg.suite)
            .map_or(Ok(Suite::All), |s| Suite::parse(&s))?;
        Ok(VerifyConfig {
            suite,
            presets: resolve_presets(self.group.or(cfg.group), self.j.or(cfg.j))?,
            f: parse_f(self.f.or(cfg.f))?,
            seed: self.seed.or(cfg.seed).unwrap_or(0),
            trials: at_least_one(self.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS), "--trials")?,
            step: positive(self.h.or(cfg.h).unwrap_or(XR_STEP_DEFAULT), "--h")?,
            out: self.out.or(cfg.out),
            inject_noncovariant: self.inject_noncovariant
                || cfg.inject_noncovariant.unwrap_or(false),
        })
    }
}

impl MinvarArgs {
    pub fn resolve(self) -> Result<MinvarConfig, CmdError> {
        let cfg = ConfigFile::load(self.config.as_deref())?;
        json_only(self.format.or(cfg.format), "minvar")?;
        let state = self
            .state
            .or(cfg.state)
            .ok_or_else(|| invalid("--state is required"))?;
        let gens = self
            .gens
            .or(cfg.gens)
            .ok_or_else(|| invalid("--gens is required"))?;
        Ok(MinvarConfig {
            state,
            gens,
            seed: self.seed.or(cfg.seed).unwrap_or(0),
            step: positive(self.h.or(cfg.h).unwrap_or(XR_STEP_DEFAULT), "--h")?,
            tol: positive(self.tol.or(cfg.tol).unwrap_or(EQUALITY_BUDGET), "--tol")?,
            regularize: self.regularize || cfg.regularize.unwrap_or(false),
            out: self.out.or(cfg.out),
        })
    }
}

impl CounterexampleArgs {
    pub fn resolve(self) -> Result<CounterexampleConfig, CmdError> {
        let cfg = ConfigFile::load(self.config.as_deref())?;
        json_only(self.format.or(cfg.format), "counterexample")?;
        Ok(CounterexampleConfig {
            seed: self.seed.or(cfg.seed).unwrap_or(0),
            trials: at_least_one(
                self.trials.or(cfg.trials).unwrap_or(DEFAULT_ENSEMBLES),
                "--trials",
            )?,
            out: self.out.or(cfg.out),
        })
    }
}
