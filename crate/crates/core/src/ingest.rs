//! Loading embeddings and multiverse manifests, and writing result artifacts.
//!
//! Embeddings come from CSV (optional single header row) or NPY v1.0
//! (2-D, C-order, little-endian `f4`/`f8`). Structured results are written
//! as JSON; matrices as CSV with an id header row and id first column.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x d` matrix of latent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub data: DMatrix<f64>,
    pub source_id: String,
    pub normalized: bool,
    /// Divisor applied by normalization, present iff `normalized`.
    pub diameter_used: Option<f64>,
}

impl Embedding {
    /// Builds an unnormalized embedding, checking shape and finiteness.
    pub fn new(data: DMatrix<f64>, source_id: impl Into<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Domain(format!(
                "embedding must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for row in 0..data.nrows() {
            for col in 0..data.ncols() {
                let v = data[(row, col)];
                if !v.is_finite() {
                    return Err(Error::Data {
                        row,
                        col,
                        msg: format!("non-finite value {v}"),
                    });
                }
            }
        }
        Ok(Embedding {
            data,
            source_id: source_id.into(),
            normalized: false,
            diameter_used: None,
        })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[Vec<f64>], source_id: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Format("ragged rows".into()));
        }
        Self::new(
            DMatrix::from_fn(n, d, |i, j| rows[i][j]),
            source_id,
        )
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }
}

/// Supported on-disk embedding formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Csv,
    Npy,
}

impl EmbeddingFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("npy") => EmbeddingFormat::Npy,
            _ => EmbeddingFormat::Csv,
        }
    }
}

pub fn load_embedding(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Embedding> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match format {
        EmbeddingFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| Error::Format(format!("CSV is not UTF-8: {e}")))?;
            parse_csv_embedding(text, id)
        }
        EmbeddingFormat::Npy => parse_npy_embedding(&bytes, id),
    }
}

pub fn parse_csv_embedding(text: &str, source_id: impl Into<String>) -> Result<Embedding> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    if let Some((_, first)) = lines.peek() {
        let tok = first.split(',').next().unwrap_or("").trim();
        if tok.parse::<f64>().is_err() {
            lines.next();
        }
    }

    let mut values = Vec::new();
    let mut width = None;
    let mut n = 0usize;
    for (line_no, line) in lines {
        let mut count = 0;
        for (col, tok) in line.split(',').enumerate() {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| {
                Error::Format(format!("line {}: cannot parse `{tok}` as a number", line_no + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Data {
                    row: n,
                    col,
                    msg: format!("non-finite value `{tok}`"),
                });
            }
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::Format(format!(
                    "ragged rows: line {} has {count} columns, expected {w}",
                    line_no + 1
                )))
            }
            _ => {}
        }
        n += 1;
    }
    let d = width.ok_or_else(|| Error::Format("CSV contains no data rows".into()))?;
    Embedding::new(DMatrix::from_row_slice(n, d, &values), source_id)
}

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

pub fn parse_npy_embedding(bytes: &[u8], source_id: impl Into<String>) -> Result<Embedding> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(Error::Format("missing NPY magic string".into()));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(Error::Format(format!(
            "unsupported NPY version {}.{} (only 1.0)",
            bytes[6], bytes[7]
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let body_start = 10 + header_len;
    if bytes.len() < body_start {
        return Err(Error::Format("truncated NPY header".into()));
    }
    let header = std::str::from_utf8(&bytes[10..body_start])
        .map_err(|_| Error::Format("NPY header is not ASCII".into()))?;

    let descr = npy_header_value(header, "descr")?;
    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    let width = match descr {
        "<f8" => 8,
        "<f4" => 4,
        other => return Err(Error::Format(format!("unsupported NPY dtype `{other}`"))),
    };
    if npy_header_value(header, "fortran_order")? != "False" {
        return Err(Error::Format("Fortran-ordered NPY arrays are not supported".into()));
    }
    let shape = npy_header_value(header, "shape")?;
    let dims: Vec<usize> = shape
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Format(format!("bad NPY shape `{shape}`"))))
        .collect::<Result<_>>()?;
    let [n, d] = dims[..] else {
        return Err(Error::Format(format!("NPY array must be 2-D, got shape {shape}")));
    };

    let body = &bytes[body_start..];
    if body.len() < n * d * width {
        return Err(Error::Format(format!(
            "NPY body holds {} bytes, shape ({n}, {d}) needs {}",
            body.len(),
            n * d * width
        )));
    }
    let mut values = Vec::with_capacity(n * d);
    for (idx, chunk) in body.chunks_exact(width).take(n * d).enumerate() {
        let v = if width == 8 {
            f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"))
        } else {
            f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64
        };
        if !v.is_finite() {
            return Err(Error::Data {
                row: idx / d,
                col: idx % d,
                msg: format!("non-finite value {v}"),
            });
        }
        values.push(v);
    }
    Embedding::new(DMatrix::from_row_slice(n, d, &values), source_id)
}

// Extracts the raw value text for `key` from a Python dict literal.
fn npy_header_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let missing = || Error::Format(format!("NPY header lacks `{key}`"));
    let start = header
        .find(&format!("'{key}'"))
        .or_else(|| header.find(&format!("\"{key}\"")))
        .ok_or_else(missing)?;
    let rest = &header[start + key.len() + 2..];
    let rest = rest.trim_start().strip_prefix(':').ok_or_else(missing)?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(missing)?;
    Ok(rest[..end].trim())
}

/// Serializes an embedding as a little-endian `f8` NPY v1.0 file.
pub fn write_npy(e: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        e.n(),
        e.d()
    );
    // Total header (magic + version + len + dict) is padded to 64 bytes.
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + e.n() * e.d() * 8);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for i in 0..e.n() {
        for j in 0..e.d() {
            out.extend_from_slice(&e.data[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|err| Error::io(path, err))
}

/// Writes an embedding as headerless CSV with shortest round-trip decimals.
pub fn write_embedding_csv(e: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..e.n() {
        for j in 0..e.d() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", e.data[(i, j)]).expect("write to String");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|err| Error::io(path, err))
}

/// One universe: a parameter vector plus the embedding it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseSpec {
    pub id: String,
    pub params: IndexMap<String, serde_json::Value>,
    #[serde(rename = "embedding")]
    pub embedding_path: PathBuf,
}

impl UniverseSpec {
    /// Canonical text for a parameter value; equality of keys is exact equality.
    pub fn param_key(&self, name: &str) -> Option<String> {
        self.params.get(name).map(|v| v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiverseManifest {
    pub universes: Vec<UniverseSpec>,
    #[serde(default)]
    pub metadata: IndexMap<String, String>,
}

impl MultiverseManifest {
    /// Validates the invariants: non-empty, unique ids, scalar parameter
    /// values and one shared parameter-name set.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .universes
            .first()
            .ok_or_else(|| Error::Manifest("manifest lists no universes".into()))?;
        let mut seen = HashSet::new();
        let names: HashSet<&String> = first.params.keys().collect();
        for u in &self.universes {
            if !seen.insert(u.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate universe id `{}`", u.id)));
            }
            let these: HashSet<&String> = u.params.keys().collect();
            if these != names {
                return Err(Error::Manifest(format!(
                    "universe `{}` has parameters {:?}, expected {:?}",
                    u.id,
                    sorted(&these),
                    sorted(&names)
                )));
            }
            for (k, v) in &u.params {
                if !(v.is_string() || v.is_number()) {
                    return Err(Error::Manifest(format!(
                        "universe `{}`: parameter `{k}` must be a string or number",
                        u.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parameter names in the order of the first universe.
    pub fn param_names(&self) -> Vec<String> {
        self.universes
            .first()
            .map(|u| u.params.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Cardinality `c` of the parameter vector.
    pub fn cardinality(&self) -> usize {
        self.universes.first().map_or(0, |u| u.params.len())
    }

    pub fn ids(&self) -> Vec<String> {
        self.universes.iter().map(|u| u.id.clone()).collect()
    }
}

fn sorted<'a>(s: &HashSet<&'a String>) -> Vec<&'a String> {
    let mut v: Vec<_> = s.iter().copied().collect();
    v.sort();
    v
}

/// Loads and validates a manifest. Relative embedding paths are resolved
/// against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiverseManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest = parse_manifest(&text)?;
    if let Some(dir) = path.parent() {
        for u in &mut manifest.universes {
            if u.embedding_path.is_relative() {
                u.embedding_path = dir.join(&u.embedding_path);
            }
        }
    }
    Ok(manifest)
}

pub fn parse_manifest(text: &str) -> Result<MultiverseManifest> {
    let manifest: MultiverseManifest =
        serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}

/// A labelled square matrix, the on-disk form of distance matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl LabeledMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.values) {
            out.push_str(id);
            for v in row {
                write!(out, ",{v}").expect("write to String");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout written by [`LabeledMatrix::to_csv`]. Lines
    /// starting with `#` are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("matrix CSV is empty".into()))?;
        let ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut values = Vec::with_capacity(ids.len());
        for (row, line) in lines.enumerate() {
            let mut toks = line.split(',');
            let label = toks.next().unwrap_or("").trim();
            if ids.get(row).map(String::as_str) != Some(label) {
                return Err(Error::Format(format!(
                    "matrix row {row} is labelled `{label}`, expected `{}`",
                    ids.get(row).map_or("<none>", |s| s.as_str())
                )));
            }
            let vals: Vec<f64> = toks
                .enumerate()
                .map(|(col, t)| {
                    let v: f64 = t.trim().parse().map_err(|_| {
                        Error::Format(format!("matrix row {row}: cannot parse `{t}`"))
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::Data {
                            row,
                            col,
                            msg: "non-finite matrix entry".into(),
                        })
                    }
                })
                .collect::<Result<_>>()?;
            if vals.len() != ids.len() {
                return Err(Error::Format(format!(
                    "matrix row {row} has {} entries, expected {}",
                    vals.len(),
                    ids.len()
                )));
            }
            values.push(vals);
        }
        if values.len() != ids.len() {
            return Err(Error::Format(format!(
                "matrix has {} rows for {} ids",
                values.len(),
                ids.len()
            )));
        }
        Ok(LabeledMatrix { ids, values })
    }
}

/// Anything that can be written by [`save_artifact`].
pub trait Artifact {
    /// Renders the artifact for a destination path; the extension may pick
    /// between encodings.
    fn render(&self, path: &Path) -> Result<String>;
}

/// JSON encoding shared by every structured result.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<LabeledMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LabeledMatrix::from_csv(&text)
}

impl Artifact for LabeledMatrix {
    fn render(&self, path: &Path) -> Result<String> {
        if is_json(path) {
            to_json(self)
        } else {
            Ok(self.to_csv())
        }
    }
}

pub(crate) fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn save_artifact<A: Artifact + ?Sized>(value: &A, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = value.render(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
