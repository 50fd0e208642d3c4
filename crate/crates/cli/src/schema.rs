//! JSON and CSV encodings shared by every subcommand.
//!
//! The conventions are fixed so that reports are byte-reproducible across
//! runs and machines:
//!
//! - complex entries are `[re, im]` pairs;
//! - matrices are arrays of rows;
//! - every float is serialized with 17 significant digits (`d.16e` notation),
//!   enough to round-trip an `f64` exactly;
//! - CSV output exists only for flat real matrices — structured reports
//!   refuse it.
//!
//! Input files use the same conventions. Unknown keys are rejected rather
//! than ignored, so a typo in a config or state file fails loudly.

use std::io;

use serde::{Deserialize, Serialize};

use qfim_core::linalg::{Complex64, ComplexMatrix, HermitianOperator};
use qfim_core::states::DensityMatrix;
use qfim_core::symmetry::GeneratorSet;
use qfim_core::theoremlab::VerificationReport;

use crate::commands::{invalid, CmdError};

/// One complex number as `[re, im]`.
pub type ComplexEntry = [f64; 2];
/// A complex matrix as an array of rows of `[re, im]` pairs.
pub type ComplexRows = Vec<Vec<ComplexEntry>>;
/// A real matrix as an array of rows.
pub type RealRows = Vec<Vec<f64>>;

/// On-disk description of a density matrix: `{"matrix": [[[re,im],...],...]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub matrix: ComplexRows,
}

/// On-disk description of a generator list:
/// `{"generators": [matrix, matrix, ...]}` with each matrix Hermitian.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GensFile {
    pub generators: Vec<ComplexRows>,
}

/// Envelope written by `qfim verify`: the per-theorem reports plus enough
/// header information to reproduce the run exactly.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteReport {
    pub command: String,
    pub suite: String,
    pub seed: u64,
    pub trials: u64,
    pub f_name: String,
    pub groups: Vec<String>,
    pub injected_noncovariant: bool,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

/// Output of `qfim fisher`: the matrix in row-major real entries plus the
/// λ-contraction self-check residual.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherOutput {
    pub f_name: String,
    pub dim: usize,
    pub generators: usize,
    pub matrix: RealRows,
    pub contraction_residual: f64,
    pub seed: u64,
}

/// Output of `qfim minvar`: both sides of the variance identity, the
/// entrywise residual, and the extracted ancilla generators.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinvarOutput {
    pub f_name: String,
    pub dim: usize,
    pub generators: usize,
    pub step: f64,
    pub regularized: bool,
    pub fisher: RealRows,
    pub four_variance: RealRows,
    pub entrywise_residual: f64,
    pub budget: f64,
    pub frame_generators: Vec<ComplexRows>,
    pub frame_residuals: Vec<f64>,
    pub passed: bool,
    pub seed: u64,
}

/// serde_json formatter that prints every `f64` with 17 significant digits.
///
/// `{:.16e}` always emits a mantissa digit, a point, sixteen fractional
/// digits, and a decimal exponent — a valid JSON number that parses back to
/// the identical bit pattern.
#[derive(Default)]
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize a value to a JSON string under the 17-digit convention,
/// terminated by a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CmdError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| invalid(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| invalid(format!("serialization produced invalid UTF-8: {e}")))
}

/// Render a flat real matrix as CSV, one row per line, floats in the same
/// 17-digit notation as the JSON output.
pub fn to_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Convert a dense complex matrix to rows of `[re, im]` pairs.
pub fn complex_rows(m: &ComplexMatrix) -> ComplexRows {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parse rows of `[re, im]` pairs into a dense matrix, demanding a nonempty
/// rectangular shape with finite entries.
pub fn matrix_from_rows(rows: &ComplexRows) -> Result<ComplexMatrix, CmdError> {
    let converted: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(&converted).map_err(|e| invalid(format!("bad matrix: {e}")))
}

/// Read and validate a density matrix from a `StateFile` JSON document.
pub fn load_state(path: &str) -> Result<DensityMatrix, CmdError> {
    let text = read_file(path)?;
    let file: StateFile = parse_json(&text, path)?;
    let mat = matrix_from_rows(&file.matrix)?;
    DensityMatrix::new(mat).map_err(|e| invalid(format!("{path}: not a density matrix: {e}")))
}

/// Read and validate a generator set from a `GensFile` JSON document.
pub fn load_gens(path: &str) -> Result<GeneratorSet, CmdError> {
    let text = read_file(path)?;
    let file: GensFile = parse_json(&text, path)?;
    let mut ops = Vec::with_capacity(file.generators.len());
    for (k, rows) in file.generators.iter().enumerate() {
        let mat = matrix_from_rows(rows)?;
        let op = HermitianOperator::new(mat)
            .map_err(|e| invalid(format!("{path}: generator {k} is not Hermitian: {e}")))?;
        ops.push(op);
    }
    GeneratorSet::new(ops).map_err(|e| invalid(format!("{path}: bad generator set: {e}")))
}

/// Read a whole file, mapping I/O problems to the invalid-input exit code.
pub fn read_file(path: &str) -> Result<String, CmdError> {
    std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {path}: {e}")))
}

/// Parse JSON with the file name and serde's line/column diagnostic attached.
pub fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, path: &str) -> Result<T, CmdError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("{path}: {e}")))
}
