//! Shared data model and file formats.
//!
//! Features, labels and predictions are CSV; model parameters and selection
//! manifests are JSON. Floats are written with Rust's shortest round-trip
//! representation, so every file reloads to the identical `f64`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for every random draw in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Derive an independent stream for a named sub-task.
    pub fn derive(self, salt: u64) -> RngSeed {
        // splitmix64 finalizer
        let mut z = self.0 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// `n` instances with `d` finite features each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch {
                what: "ids vs feature rows",
                left: ids.len(),
                right: rows.len(),
            });
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(ids, values, dim)
    }

    fn from_flat(ids: Vec<String>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if ids.is_empty() || dim == 0 {
            return Err(Error::LengthMismatch {
                what: "feature matrix needs n >= 1 and d >= 1",
                left: ids.len(),
                right: dim,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedRow {
                path: "<memory>".into(),
                line: (pos / dim) as u64 + 1,
                reason: format!("non-finite feature {}", values[pos]),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId { id: id.clone() });
            }
        }
        Ok(FeatureMatrix {
            ids,
            values,
            dim,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn d(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            if r >= self.n() {
                return Err(Error::IndexOutOfRange { index: r, n: self.n() });
            }
            ids.push(self.ids[r].clone());
            values.extend_from_slice(self.row(r));
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(FeatureMatrix {
            ids,
            values,
            dim: self.dim,
            index,
        })
    }
}

/// Parse a features CSV with header `id,f0,...,f{d-1}`.
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = open_csv(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyFile { path: path.into() });
    }
    if &header[0] != "id" || header.len() < 2 {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: "expected `id,f0,...`".into(),
        });
    }
    let dim = header.len() - 1;

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(Error::MalformedRow {
                path: path.into(),
                line,
                reason: format!("expected {} fields, found {}", dim + 1, record.len()),
            });
        }
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id });
        }
        for field in record.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| Error::MalformedRow {
                path: path.into(),
                line,
                reason: format!("non-numeric feature {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedRow {
                    path: path.into(),
                    line,
                    reason: format!("non-finite feature {field:?}"),
                });
            }
            values.push(v);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    FeatureMatrix::from_flat(ids, values, dim)
}

pub fn save_features(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut w = create_csv(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..features.d()).map(|k| format!("f{k}")));
    write_record(&mut w, path, &header)?;
    for (i, id) in features.ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(features.row(i).iter().map(|v| v.to_string()));
        write_record(&mut w, path, &rec)?;
    }
    flush_csv(w, path)
}

/// Expert labels mapped to class indices `1..=K`. Index 0 is reserved for
/// an abstaining labeling function and never stored here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTable {
    entries: BTreeMap<String, usize>,
    label_names: Vec<String>,
}

impl LabelTable {
    /// Build from `(id, label)` pairs. Class indices follow the sorted order
    /// of the distinct label strings.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let names: BTreeSet<&str> = pairs.iter().map(|(_, l)| l.as_str()).collect();
        let label_names: Vec<String> = names.into_iter().map(String::from).collect();
        if label_names.len() == 1 {
            return Err(Error::SingleClass {
                label: label_names[0].clone(),
            });
        }
        Self::with_names(pairs, label_names)
    }

    /// Build with an explicit label vocabulary; a single class is accepted.
    pub fn with_names(pairs: &[(String, String)], label_names: Vec<String>) -> Result<Self> {
        let lookup: HashMap<&str, usize> = label_names
            .iter()
            .enumerate()
            .map(|(k, name)| (name.as_str(), k + 1))
            .collect();
        let mut entries = BTreeMap::new();
        for (id, label) in pairs {
            let class = *lookup.get(label.as_str()).ok_or_else(|| Error::UnknownId {
                id: format!("label {label:?}"),
            })?;
            if entries.insert(id.clone(), class).is_some() {
                return Err(Error::DuplicateId { id: id.clone() });
            }
        }
        Ok(LabelTable { entries, label_names })
    }

    pub fn k(&self) -> usize {
        self.label_names.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_of(&self, id: &str) -> Option<usize> {
        self.entries.get(id).copied()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Original label string of a class index in `1..=K`.
    pub fn name_of(&self, class: usize) -> &str {
        &self.label_names[class - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(id, &c)| (id.as_str(), c))
    }
}

/// Raw `(id, label)` rows of an `id,label` CSV, in file order. Labels are
/// trimmed and may be empty (an unfilled annotation template).
pub fn read_label_rows(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = open_csv(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .clone();
    if header.len() != 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: "expected `id,label`".into(),
        });
    }
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                path: path.into(),
                line,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id });
        }
        rows.push((id, record[1].trim().to_string()));
    }
    Ok(rows)
}

/// Load expert labels for a known id set.
pub fn load_labels(path: &Path, ids: &[String]) -> Result<LabelTable> {
    let rows = read_label_rows(path)?;
    check_label_rows(&rows, ids)?;
    LabelTable::from_pairs(&rows)
}

pub(crate) fn check_label_rows(rows: &[(String, String)], ids: &[String]) -> Result<()> {
    let known: HashSet<&str> = ids.iter().map(String::as_str).collect();
    for (id, label) in rows {
        if !known.contains(id.as_str()) {
            return Err(Error::UnknownId { id: id.clone() });
        }
        if label.is_empty() {
            return Err(Error::UnfilledTemplate { id: id.clone() });
        }
    }
    Ok(())
}

pub fn save_label_rows(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let mut w = create_csv(path)?;
    write_record(&mut w, path, ["id", "label"])?;
    for (id, label) in rows {
        write_record(&mut w, path, [id, label])?;
    }
    flush_csv(w, path)
}

/// Per-instance predicted labels with their class posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub probs: Vec<Vec<f64>>,
}

/// Write `id,predicted_label,p_1,...,p_K`.
pub fn save_predictions(path: &Path, preds: &Predictions, k: usize) -> Result<()> {
    if preds.ids.len() != preds.labels.len() {
        return Err(Error::LengthMismatch {
            what: "ids vs labels",
            left: preds.ids.len(),
            right: preds.labels.len(),
        });
    }
    if preds.ids.len() != preds.probs.len() {
        return Err(Error::LengthMismatch {
            what: "ids vs posterior rows",
            left: preds.ids.len(),
            right: preds.probs.len(),
        });
    }
    for (id, row) in preds.ids.iter().zip(&preds.probs) {
        if row.len() != k {
            return Err(Error::LengthMismatch {
                what: "posterior row vs class count",
                left: row.len(),
                right: k,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::PosteriorNotNormalized { id: id.clone(), sum });
        }
    }

    let mut w = create_csv(path)?;
    let mut header = vec!["id".to_string(), "predicted_label".to_string()];
    header.extend((1..=k).map(|c| format!("p_{c}")));
    write_record(&mut w, path, &header)?;
    for ((id, label), row) in preds.ids.iter().zip(&preds.labels).zip(&preds.probs) {
        let mut rec = vec![id.clone(), label.clone()];
        rec.extend(row.iter().map(|p| p.to_string()));
        write_record(&mut w, path, &rec)?;
    }
    flush_csv(w, path)
}

pub fn load_predictions(path: &Path) -> Result<Predictions> {
    let mut reader = open_csv(path)?;
    let header = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "predicted_label" {
        return Err(Error::MalformedHeader {
            path: path.into(),
            reason: "expected `id,predicted_label,p_1,...`".into(),
        });
    }
    let k = header.len() - 2;
    let mut preds = Predictions {
        ids: Vec::new(),
        labels: Vec::new(),
        probs: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != k + 2 {
            return Err(Error::MalformedRow {
                path: path.into(),
                line,
                reason: format!("expected {} fields, found {}", k + 2, record.len()),
            });
        }
        let row = record
            .iter()
            .skip(2)
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::MalformedRow {
                    path: path.into(),
                    line,
                    reason: format!("non-numeric probability {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        preds.ids.push(record[0].to_string());
        preds.labels.push(record[1].to_string());
        preds.probs.push(row);
    }
    Ok(preds)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path.display().to_string(), e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::json(path.display().to_string(), e))
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if file
        .metadata()
        .map_err(|e| Error::io(path.display().to_string(), e))?
        .len()
        == 0
    {
        return Err(Error::EmptyFile { path: path.into() });
    }
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

pub(crate) fn create_csv(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(csv::WriterBuilder::new().flexible(true).from_writer(file))
}

pub(crate) fn write_record<I, T>(w: &mut csv::Writer<File>, path: &Path, rec: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(rec)
        .map_err(|e| Error::csv(path.display().to_string(), e))
}

pub(crate) fn flush_csv(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}
