//! Matrix, operator, measurement and report files.
//!
//! Matrices are CSV (one row per line) or the binary `SRFM` format: the
//! ASCII magic `SRFM`, `n1` and `n2` as little-endian `u32`, four reserved
//! zero bytes (16-byte header), then the entries as little-endian `f64` in column-major order. Which one is read
//! is decided by the magic bytes, so the extension does not matter; writers
//! pick the format from the extension (`.srfm` or `.bin` for binary).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srf_core::solver::StageRecord;
use srf_core::ssp::ChainDiagnostics;
use srf_core::{AffineOperator, DenseMatrix, MeasurementVector, SolveReport};

use crate::error::{LabError, LabResult};

pub const SRFM_MAGIC: &[u8; 4] = b"SRFM";
const HEADER_LEN: usize = 16;

fn read_bytes(path: &Path) -> LabResult<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> LabResult<()> {
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

pub fn encode_srfm(x: &DenseMatrix) -> Vec<u8> {
    let (n1, n2) = x.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n1 * n2);
    out.extend_from_slice(SRFM_MAGIC);
    out.extend_from_slice(&(n1 as u32).to_le_bytes());
    out.extend_from_slice(&(n2 as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for v in x.as_column_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_srfm(bytes: &[u8]) -> Result<DenseMatrix, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != SRFM_MAGIC {
        return Err("missing SRFM header".into());
    }
    let n1 = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n2 = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n1 * n2 {
        return Err(format!(
            "expected {} bytes of data for a {n1}x{n2} matrix, found {}",
            8 * n1 * n2,
            body.len()
        ));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_column_slice(n1, n2, &data).map_err(|e| e.to_string())
}

pub fn parse_matrix_csv(text: &str) -> Result<DenseMatrix, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| format!("row {}: not a number: {field:?}", line + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format!(
                    "row {} has {} columns, expected {}",
                    line + 1,
                    row.len(),
                    first.len()
                ));
            }
        }
        rows.push(row);
    }
    let n1 = rows.len();
    let n2 = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    DenseMatrix::from_row_slice(n1, n2, &flat).map_err(|e| e.to_string())
}

pub fn format_matrix_csv(x: &DenseMatrix) -> String {
    let mut out = String::new();
    for row in x.to_rows() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: &Path) -> LabResult<DenseMatrix> {
    let bytes = read_bytes(path)?;
    let parsed = if bytes.starts_with(SRFM_MAGIC) {
        decode_srfm(&bytes)
    } else {
        std::str::from_utf8(&bytes)
            .map_err(|_| "not UTF-8 text and no SRFM header".to_string())
            .and_then(parse_matrix_csv)
    };
    parsed.map_err(|m| LabError::format(path, m))
}

fn is_binary_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("srfm" | "bin")
    )
}

pub fn write_matrix(path: &Path, x: &DenseMatrix) -> LabResult<()> {
    if is_binary_path(path) {
        write_bytes(path, &encode_srfm(x))
    } else {
        write_bytes(path, format_matrix_csv(x).as_bytes())
    }
}

/// One value per line.
pub fn read_measurements(path: &Path) -> LabResult<MeasurementVector> {
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| LabError::format(path, "not UTF-8"))?;
    let mut values = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        let field = raw.trim().trim_end_matches(',');
        if field.is_empty() {
            continue;
        }
        let v = field
            .parse::<f64>()
            .map_err(|_| LabError::format(path, format!("line {}: not a number: {field:?}", line + 1)))?;
        values.push(v);
    }
    MeasurementVector::new(values).map_err(|e| LabError::format(path, e))
}

pub fn write_measurements(path: &Path, b: &MeasurementVector) -> LabResult<()> {
    let mut out = String::new();
    for v in b.as_slice() {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// On-disk operator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorFile {
    EntrySampling {
        shape: [usize; 2],
        omega: Vec<[usize; 2]>,
    },
    GeneralDense {
        m: usize,
        shape: [usize; 2],
        /// Matrix file holding `A` as `m × (n1 n2)`, resolved relative to
        /// the operator file.
        data_file: PathBuf,
    },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> LabResult<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| LabError::format(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::format(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_operator(path: &Path) -> LabResult<AffineOperator> {
    match read_json::<OperatorFile>(path)? {
        OperatorFile::EntrySampling { shape, omega } => {
            let omega = omega.into_iter().map(|[i, j]| (i, j)).collect();
            AffineOperator::entry_sampling(omega, shape[0], shape[1]).map_err(|e| LabError::format(path, e))
        }
        OperatorFile::GeneralDense { m, shape, data_file } => {
            let data_path = path.parent().unwrap_or(Path::new("")).join(&data_file);
            let a = read_matrix(&data_path)?;
            if a.shape() != (m, shape[0] * shape[1]) {
                return Err(LabError::format(
                    &data_path,
                    format!(
                        "expected a {m}x{} matrix, found {}x{}",
                        shape[0] * shape[1],
                        a.rows(),
                        a.cols()
                    ),
                ));
            }
            AffineOperator::general_dense(a.into_inner(), shape[0], shape[1]).map_err(|e| LabError::format(path, e))
        }
    }
}

/// Writes `op` to `path`; a dense operator's matrix goes to `data_file`
/// next to it.
pub fn write_operator(path: &Path, op: &AffineOperator, data_file: &str) -> LabResult<()> {
    let (n1, n2) = op.shape();
    let file = match op {
        AffineOperator::EntrySampling { omega, .. } => OperatorFile::EntrySampling {
            shape: [n1, n2],
            omega: omega.iter().map(|&(i, j)| [i, j]).collect(),
        },
        AffineOperator::GeneralDense { a_matrix, .. } => {
            let data_path = path.parent().unwrap_or(Path::new("")).join(data_file);
            write_matrix(&data_path, &DenseMatrix::from_inner(a_matrix.clone())?)?;
            OperatorFile::GeneralDense {
                m: op.m(),
                shape: [n1, n2],
                data_file: PathBuf::from(data_file),
            }
        }
    };
    write_json(path, &file)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MaskFile {
    Bare(Vec<[usize; 2]>),
    Wrapped { omega: Vec<[usize; 2]> },
}

/// Ω as a bare `[[i, j], ...]` list, `{"omega": [...]}`, or an
/// `entry_sampling` operator file.
pub fn read_mask(path: &Path) -> LabResult<Vec<(usize, usize)>> {
    let mask: MaskFile = read_json(path)?;
    let omega = match mask {
        MaskFile::Bare(o) | MaskFile::Wrapped { omega: o } => o,
    };
    Ok(omega.into_iter().map(|[i, j]| (i, j)).collect())
}

/// The JSON report written next to every solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsnr_db: Option<f64>,
    pub outer_trace: Vec<StageRecord>,
    pub solution_file: PathBuf,
    pub solver: String,
    pub outer_iters: usize,
    pub total_inner_steps: usize,
    pub ill_conditioned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssp_diagnostics: Option<ChainDiagnostics>,
}

impl ReportFile {
    pub fn new(report: &SolveReport, solver: &str, solution_file: &Path, rsnr_db: Option<f64>) -> Self {
        Self {
            converged: report.converged,
            rsnr_db,
            outer_trace: report.outer_trace.clone(),
            solution_file: solution_file.to_path_buf(),
            solver: solver.to_string(),
            outer_iters: report.outer_iters(),
            total_inner_steps: report.total_inner_steps,
            ill_conditioned: report.ill_conditioned,
            ssp_diagnostics: None,
        }
    }
}

pub fn read_report(path: &Path) -> LabResult<ReportFile> {
    read_json(path)
}
