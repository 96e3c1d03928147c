//! File formats: atom lists, objective descriptions, JSON reports with
//! 17 significant digits, trace CSV and atomic writes.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::PhiReport;
use crate::polytope::AtomMatrix;
use crate::solver::{builtin_function, Objective, RunTrace};

/// Parses atoms from CSV (one atom per line) or JSON `{"m": .., "atoms": [[..], ..]}`.
pub fn parse_atoms(text: &str) -> Result<AtomMatrix> {
    if text.trim_start().starts_with('{') {
        parse_atoms_json(text)
    } else {
        parse_atoms_csv(text)
    }
}

pub fn read_atoms(path: &Path) -> Result<AtomMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_atoms(&text)
}

fn parse_atoms_csv(text: &str) -> Result<AtomMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("atom file: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let atom = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("atom {}: bad number {f:?}", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        columns.push(atom);
    }
    if columns.is_empty() {
        return Err(Error::Parse("atom file contains no atoms".into()));
    }
    from_columns_checked(&columns)
}

#[derive(Deserialize)]
struct AtomsJson {
    m: Option<usize>,
    atoms: Vec<Vec<f64>>,
}

fn parse_atoms_json(text: &str) -> Result<AtomMatrix> {
    let parsed: AtomsJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("atom JSON: {e}")))?;
    if parsed.atoms.is_empty() {
        return Err(Error::Parse("atom JSON contains no atoms".into()));
    }
    if let Some(m) = parsed.m {
        if let Some(bad) = parsed.atoms.iter().find(|a| a.len() != m) {
            return Err(Error::Parse(format!("atom has {} coordinates, expected m = {m}", bad.len())));
        }
    }
    from_columns_checked(&parsed.atoms)
}

fn from_columns_checked(columns: &[Vec<f64>]) -> Result<AtomMatrix> {
    AtomMatrix::from_columns(columns).map_err(|e| match e {
        Error::DimensionMismatch { expected, found } => {
            Error::Parse(format!("ragged atoms: expected {expected} coordinates, found {found}"))
        }
        Error::InvalidInput(msg) => Error::Parse(msg),
        other => other,
    })
}

/// Objective file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: String,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 {
        return Err(Error::Parse(format!("{name} is empty")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ObjectiveSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("objective JSON: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds the objective. Dimension and constant errors keep their own
    /// variants so callers can map them to distinct exit codes.
    pub fn build(&self) -> Result<Objective> {
        let b = DVector::from_vec(self.b.clone());
        match self.kind.as_str() {
            "quadratic" => {
                let q = self.q.as_ref().ok_or_else(|| Error::Parse("quadratic objective needs Q".into()))?;
                let q = matrix_from_rows("Q", q)?;
                if q.nrows() != q.ncols() {
                    return Err(Error::Parse("Q must be square".into()));
                }
                if q.nrows() != b.len() {
                    return Err(Error::DimensionMismatch { expected: q.nrows(), found: b.len() });
                }
                if let (Some(mu), Some(l)) = (self.mu, self.lipschitz) {
                    if mu > l {
                        return Err(Error::MuExceedsLipschitz { mu, lipschitz: l });
                    }
                }
                Objective::quadratic(q, b)
            }
            "composite" => {
                let e = self.e.as_ref().ok_or_else(|| Error::Parse("composite objective needs E".into()))?;
                let e = matrix_from_rows("E", e)?;
                let name = self.h.as_deref().unwrap_or("half-squared-norm");
                let h = builtin_function(name).ok_or_else(|| Error::Parse(format!("unknown builtin h {name:?}")))?;
                let mu = self.mu.ok_or_else(|| Error::Parse("composite objective needs mu".into()))?;
                let l = self.lipschitz.ok_or_else(|| Error::Parse("composite objective needs L".into()))?;
                if e.ncols() != b.len() {
                    return Err(Error::DimensionMismatch { expected: e.ncols(), found: b.len() });
                }
                Objective::composite(e, b, h, mu, l)
            }
            other => Err(Error::Parse(format!("unknown objective kind {other:?}"))),
        }
    }
}

/// `serde_json` formatter writing every float with 17 significant digits.
struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialises to JSON with 17 significant digits for floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser).map_err(|e| Error::Parse(format!("JSON encoding: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Formats a float for CSV output with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// JSON shape of a measure report.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureJson {
    pub measure: String,
    pub value: f64,
    pub face_atoms: Option<Vec<usize>>,
    pub witness_u: Vec<f64>,
    pub witness_v: Vec<f64>,
    pub p: Option<Vec<f64>>,
}

impl MeasureJson {
    pub fn from_report(measure: &str, report: &PhiReport) -> Self {
        Self {
            measure: measure.to_string(),
            value: report.value,
            face_atoms: report.minimizing_face.as_ref().map(|f| f.atom_indices.clone()),
            witness_u: report.witness.u.iter().copied().collect(),
            witness_v: report.witness.v.iter().copied().collect(),
            p: report.optimal_p.as_ref().map(|p| p.iter().copied().collect()),
        }
    }
}

pub const TRACE_HEADER: [&str; 7] = ["k", "f", "step_kind", "gamma", "gamma_max", "support_size", "fw_gap"];

/// Trace CSV, one row per record.
pub fn trace_csv(trace: &RunTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("CSV encoding: {e}"));
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &trace.records {
        let kind = r.step_kind.map_or("none", |k| k.as_str());
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.f_value),
            kind.to_string(),
            fmt_f64(r.gamma),
            fmt_f64(r.gamma_max),
            r.support_size.to_string(),
            fmt_f64(r.fw_gap),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("CSV encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV writer emits UTF-8"))
}

/// Generic CSV from a header and preformatted rows.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("CSV encoding: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("CSV encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV writer emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_atoms() {
        let a = parse_atoms("0,0\n1, 0\n# comment\n\n0,1\n").unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.len(), 3);
        assert_eq!(a.atom(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn json_atoms() {
        let a = parse_atoms(r#"{"m": 3, "atoms": [[1,0,0],[0,1,0]]}"#).unwrap();
        assert_eq!(a.dim(), 3);
        assert_eq!(a.len(), 2);
        assert!(matches!(parse_atoms(r#"{"m": 2, "atoms": [[1,0,0]]}"#), Err(Error::Parse(_))));
    }

    #[test]
    fn malformed_atoms() {
        assert!(matches!(parse_atoms("1,2\n3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_atoms("1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_atoms(""), Err(Error::Parse(_))));
        assert!(matches!(parse_atoms("1,nan\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn objective_files() {
        let q = ObjectiveSpec::parse(r#"{"kind":"quadratic","Q":[[1,0],[0,1]],"b":[0,0]}"#).unwrap();
        assert_eq!(q.build().unwrap().dim(), 2);
        let c = ObjectiveSpec::parse(
            r#"{"kind":"composite","E":[[1,0],[0,2]],"b":[0,1],"h":"half-squared-norm","mu":1,"L":1}"#,
        )
        .unwrap();
        assert_eq!(c.build().unwrap().kind(), "composite");
        let bad = ObjectiveSpec::parse(r#"{"kind":"composite","E":[[1]],"b":[0],"mu":2,"L":1}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::MuExceedsLipschitz { .. })));
        let mismatch = ObjectiveSpec::parse(r#"{"kind":"quadratic","Q":[[1,0],[0,1]],"b":[0]}"#).unwrap();
        assert!(matches!(mismatch.build(), Err(Error::DimensionMismatch { .. })));
        assert!(ObjectiveSpec::parse("{").is_err());
    }

    #[test]
    fn json_has_seventeen_digits() {
        let s = to_json(&serde_json::json!({ "v": 1.0f64 / 3.0 })).unwrap();
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["v"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }
}
