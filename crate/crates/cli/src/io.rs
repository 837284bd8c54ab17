//! Input/output plumbing: CSV parsing with header auto-detection, dataset
//! assembly, atomic file writes, and seed/thread/grid resolution.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use sketchridge_core::estimators::Dataset;
use sketchridge_core::linalg::ThinSvd;
use sketchridge_core::tuning::{default_lambda_grid, DEFAULT_GRID_SIZE};

use crate::error::{CliError, CliResult};

/// Environment variable consulted when no `--seed` flag is given.
pub const SEED_ENV: &str = "SKETCHRIDGE_SEED";

/// A parsed CSV matrix. When the first row is non-numeric it is taken as a
/// header; otherwise column names are generated as `c0, c1, ...`.
pub struct CsvMatrix {
    /// Column names (real or generated).
    pub names: Vec<String>,
    /// Whether `names` came from an actual header row.
    pub has_header: bool,
    /// The numeric payload.
    pub data: DMatrix<f64>,
}

/// Reads a CSV file of numbers, auto-detecting a single header row.
pub fn read_matrix_csv(path: &Path) -> CliResult<CsvMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut has_header = false;
    let mut width: Option<usize> = None;

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record =
            record.map_err(|e| CliError::Input(format!("{}: line {line}: {e}", path.display())))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue; // tolerate blank lines
        }
        let parsed: Result<Vec<f64>, (usize, String)> = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| (col + 1, field.to_string()))
            })
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(CliError::Input(format!(
                            "{}: line {line}: expected {w} columns, found {}",
                            path.display(),
                            values.len()
                        )));
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err((col, field)) => {
                if idx == 0 {
                    // Non-numeric first row: treat it as the header.
                    names = record.iter().map(|f| f.trim().to_string()).collect();
                    has_header = true;
                    width = Some(names.len());
                } else {
                    return Err(CliError::Input(format!(
                        "{}: line {line}: could not parse '{field}' as a number (column {col})",
                        path.display()
                    )));
                }
            }
        }
    }

    let ncols =
        width.ok_or_else(|| CliError::Input(format!("{}: no data rows found", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Input(format!(
            "{}: header only, no data rows",
            path.display()
        )));
    }
    if !has_header {
        names = (0..ncols).map(|j| format!("c{j}")).collect();
    }
    let nrows = rows.len();
    let data = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    Ok(CsvMatrix {
        names,
        has_header,
        data,
    })
}

/// A loaded regression problem plus bookkeeping for the output report.
pub struct LoadedDataset {
    /// Design/response pair, validated.
    pub data: Dataset,
    /// Names of the predictor columns.
    pub feature_names: Vec<String>,
    /// Where the response came from (column name or file path).
    pub response: String,
}

/// Loads `X` and `Y` from either a single CSV (`--response-col`) or two
/// files (`--response`).
pub fn load_dataset(
    input: &Path,
    response_col: Option<&str>,
    response_file: Option<&Path>,
) -> CliResult<LoadedDataset> {
    let matrix = read_matrix_csv(input)?;
    match (response_col, response_file) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--response-col and --response are mutually exclusive".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "a response is required: --response-col NAME for a column of the input, \
             or --response FILE for a separate CSV"
                .into(),
        )),
        (Some(col), None) => {
            let idx = resolve_column(&matrix, col)?;
            let p = matrix.data.ncols();
            if p < 2 {
                return Err(CliError::Input(
                    "the input needs at least one predictor besides the response".into(),
                ));
            }
            let y = DVector::from_iterator(
                matrix.data.nrows(),
                matrix.data.column(idx).iter().copied(),
            );
            let x = matrix.data.clone().remove_column(idx);
            let mut names = matrix.names.clone();
            let response = names.remove(idx);
            let data = Dataset::new(x, y)?;
            Ok(LoadedDataset {
                data,
                feature_names: names,
                response,
            })
        }
        (None, Some(file)) => {
            let resp = read_matrix_csv(file)?;
            if resp.data.ncols() != 1 {
                return Err(CliError::Input(format!(
                    "{}: the response file must have exactly 1 column, found {}",
                    file.display(),
                    resp.data.ncols()
                )));
            }
            if resp.data.nrows() != matrix.data.nrows() {
                return Err(CliError::Input(format!(
                    "row mismatch: {} has {} rows but {} has {}",
                    input.display(),
                    matrix.data.nrows(),
                    file.display(),
                    resp.data.nrows()
                )));
            }
            let y = DVector::from_iterator(resp.data.nrows(), resp.data.column(0).iter().copied());
            let data = Dataset::new(matrix.data.clone(), y)?;
            Ok(LoadedDataset {
                data,
                feature_names: matrix.names,
                response: file.display().to_string(),
            })
        }
    }
}

/// Resolves a response column given as a header name or a 0-based index.
fn resolve_column(matrix: &CsvMatrix, col: &str) -> CliResult<usize> {
    if matrix.has_header {
        if let Some(idx) = matrix.names.iter().position(|n| n == col) {
            return Ok(idx);
        }
    }
    if let Ok(idx) = col.parse::<usize>() {
        if idx < matrix.data.ncols() {
            return Ok(idx);
        }
        return Err(CliError::Input(format!(
            "response column index {idx} out of range (input has {} columns)",
            matrix.data.ncols()
        )));
    }
    Err(CliError::Input(format!(
        "response column '{col}' not found{}",
        if matrix.has_header {
            ""
        } else {
            " (the input has no header row; use a 0-based index)"
        }
    )))
}

/// Resolves the seed: explicit flag, then the `SKETCHRIDGE_SEED`
/// environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            CliError::Input(format!("{SEED_ENV}='{raw}' is not a valid unsigned seed"))
        }),
        Err(_) => Ok(0),
    }
}

/// Caps the global rayon pool when `--threads` is given. Must run before
/// any parallel work.
pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("could not configure threads: {e}")))?;
    }
    Ok(())
}

/// Builds the λ grid: an explicit log-spaced grid when `--lambda-min` and
/// `--lambda-max` are both given, the data-driven default otherwise.
pub fn resolve_lambda_grid(
    qx_svd: &ThinSvd,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
) -> CliResult<Vec<f64>> {
    match (min, max) {
        (Some(lo), Some(hi)) => {
            if !lo.is_finite() || lo <= 0.0 || !hi.is_finite() || hi < lo {
                return Err(CliError::Usage(format!(
                    "need 0 < --lambda-min <= --lambda-max, got {lo} and {hi}"
                )));
            }
            if lo == hi {
                return Ok(vec![lo]);
            }
            let count = count.unwrap_or(DEFAULT_GRID_SIZE);
            if count < 2 {
                return Err(CliError::Usage(
                    "--lambda-count must be at least 2 for a proper range".into(),
                ));
            }
            let (llo, lhi) = (lo.log10(), hi.log10());
            Ok((0..count)
                .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (count - 1) as f64))
                .collect())
        }
        (None, None) => Ok(default_lambda_grid(
            qx_svd,
            count.unwrap_or(DEFAULT_GRID_SIZE),
        )),
        _ => Err(CliError::Usage(
            "--lambda-min and --lambda-max must be given together".into(),
        )),
    }
}

/// Writes bytes atomically: a temp file in the destination directory,
/// flushed, then renamed over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Serializes a value as pretty JSON (with a trailing newline) and writes
/// it atomically, or prints it to stdout when no path is given.
pub fn emit_json<T: serde::Serialize>(path: Option<&PathBuf>, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses a comma-separated list of method names into canonical order.
pub fn parse_methods(raw: Option<&str>) -> CliResult<Vec<sketchridge_core::estimators::Method>> {
    use sketchridge_core::estimators::Method;
    match raw {
        None => Ok(Method::ALL.to_vec()),
        Some(list) => {
            let mut picked = Vec::new();
            for token in list.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    continue;
                }
                let method = Method::parse(token).map_err(|e| CliError::Usage(e.to_string()))?;
                picked.push(method);
            }
            if picked.is_empty() {
                return Err(CliError::Usage("--methods lists no methods".into()));
            }
            Ok(Method::ALL
                .iter()
                .copied()
                .filter(|m| picked.contains(m))
                .collect())
        }
    }
}
