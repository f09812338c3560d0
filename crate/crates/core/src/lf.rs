//! Exemplar labeling functions.
//!
//! Every expert-labeled exemplar becomes one continuous labeling function:
//! on an instance it votes the exemplar's class (or abstains when the raw
//! similarity falls below a threshold) and reports the similarity mapped
//! into the open unit interval.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, FeatureMatrix, LabelTable};
use crate::error::{Error, Result};
use crate::similarity::{raw_similarity, to_unit_interval, Kernel};

/// Scores are clamped into `[SCORE_MARGIN, 1 - SCORE_MARGIN]`.
pub const SCORE_MARGIN: f64 = 1e-6;

/// The default threshold never abstains.
pub const NEVER_ABSTAIN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarLF {
    /// 1-based position in selection order.
    pub index: usize,
    pub exemplar_id: String,
    /// Class in `1..=K`.
    pub class: u32,
    pub features: Vec<f64>,
}

/// One labeling function per exemplar, in `order`.
pub fn make_lfs(order: &[String], labels: &LabelTable, features: &FeatureMatrix) -> Result<Vec<ExemplarLF>> {
    if order.is_empty() {
        return Err(Error::EmptyExemplarSet);
    }
    let lfs = order
        .iter()
        .enumerate()
        .map(|(pos, id)| {
            let class = labels
                .class_of(id)
                .ok_or_else(|| Error::UnfilledTemplate { id: id.clone() })?;
            let row = features
                .index_of(id)
                .ok_or_else(|| Error::MissingFeatureRow { id: id.clone() })?;
            Ok(ExemplarLF {
                index: pos + 1,
                exemplar_id: id.clone(),
                class: class as u32,
                features: features.row(row).to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if lfs.iter().all(|lf| lf.class == lfs[0].class) {
        log::warn!(
            "all {} exemplars share class {}; aggregation is degenerate",
            lfs.len(),
            lfs[0].class
        );
    }
    Ok(lfs)
}

/// Vote and score of one labeling function on one instance. A vote of 0
/// means abstain.
pub fn apply_lf(lf: &ExemplarLF, u: &[f64], kernel: Kernel, threshold: f64) -> Result<(u32, f64)> {
    let r = raw_similarity(&lf.features, u, kernel)?;
    let s = to_unit_interval(r).clamp(SCORE_MARGIN, 1.0 - SCORE_MARGIN);
    let tau = if r.value() < threshold { 0 } else { lf.class };
    Ok((tau, s))
}

/// Votes `tau` and scores `s` of `b` labeling functions on `m` instances,
/// both row-major `m x b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LFMatrix {
    pub ids: Vec<String>,
    pub tau: Vec<u32>,
    pub s: Vec<f64>,
    pub lf_classes: Vec<u32>,
}

impl LFMatrix {
    pub fn new(ids: Vec<String>, tau: Vec<u32>, s: Vec<f64>, lf_classes: Vec<u32>) -> Result<Self> {
        let (m, b) = (ids.len(), lf_classes.len());
        for (what, len) in [("tau entries vs m*b", tau.len()), ("score entries vs m*b", s.len())] {
            if len != m * b {
                return Err(Error::LengthMismatch {
                    what,
                    left: len,
                    right: m * b,
                });
            }
        }
        for (idx, (&t, &v)) in tau.iter().zip(&s).enumerate() {
            let k = lf_classes[idx % b];
            if t != 0 && t != k {
                return Err(Error::InvalidConfig(format!(
                    "lf {} votes {t} but owns class {k}",
                    idx % b + 1
                )));
            }
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::NonFiniteDensity { score: v });
            }
        }
        Ok(LFMatrix {
            ids,
            tau,
            s,
            lf_classes,
        })
    }

    pub fn m(&self) -> usize {
        self.ids.len()
    }

    pub fn b(&self) -> usize {
        self.lf_classes.len()
    }

    #[inline]
    pub fn tau(&self, i: usize, j: usize) -> u32 {
        self.tau[i * self.b() + j]
    }

    #[inline]
    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.b() + j]
    }

    /// Write `id,tau_1,s_1,...,tau_b,s_b`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = data::create_csv(path)?;
        let mut header = vec!["id".to_string()];
        for j in 1..=self.b() {
            header.push(format!("tau_{j}"));
            header.push(format!("s_{j}"));
        }
        data::write_record(&mut w, path, &header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            for j in 0..self.b() {
                rec.push(self.tau(i, j).to_string());
                rec.push(self.s(i, j).to_string());
            }
            data::write_record(&mut w, path, &rec)?;
        }
        data::flush_csv(w, path)
    }

    pub fn load_csv(path: &Path, lf_classes: Vec<u32>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
        let b = lf_classes.len();
        let width = reader
            .headers()
            .map_err(|e| Error::csv(path.display().to_string(), e))?
            .len();
        if width != 1 + 2 * b {
            return Err(Error::MalformedHeader {
                path: path.into(),
                reason: format!("expected {} columns for {b} labeling functions", 1 + 2 * b),
            });
        }
        let (mut ids, mut tau, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path.display().to_string(), e))?;
            let line = record.position().map_or(0, |p| p.line());
            let malformed = |reason: String| Error::MalformedRow {
                path: path.into(),
                line,
                reason,
            };
            if record.len() != width {
                return Err(malformed(format!("expected {width} fields")));
            }
            ids.push(record[0].to_string());
            for j in 0..b {
                let t = &record[1 + 2 * j];
                let v = &record[2 + 2 * j];
                tau.push(t.parse().map_err(|_| malformed(format!("bad vote {t:?}")))?);
                s.push(v.parse().map_err(|_| malformed(format!("bad score {v:?}")))?);
            }
        }
        LFMatrix::new(ids, tau, s, lf_classes)
    }
}

/// Sidecar describing the columns of an LF matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LFMeta {
    pub lf_classes: Vec<u32>,
    pub exemplar_ids: Vec<String>,
    pub label_names: Vec<String>,
    pub kernel: Kernel,
    pub threshold: f64,
}

/// Apply every labeling function to every row of `pool`.
pub fn apply_all(lfs: &[ExemplarLF], pool: &FeatureMatrix, kernel: Kernel, threshold: f64) -> Result<LFMatrix> {
    let rows: Vec<usize> = (0..pool.n()).collect();
    apply_to_rows(lfs, pool, &rows, kernel, threshold)
}

/// Apply every labeling function to the listed rows of `features`, in order.
pub fn apply_to_rows(
    lfs: &[ExemplarLF],
    features: &FeatureMatrix,
    rows: &[usize],
    kernel: Kernel,
    threshold: f64,
) -> Result<LFMatrix> {
    let b = lfs.len();
    if let Some(&index) = rows.iter().find(|&&r| r >= features.n()) {
        return Err(Error::IndexOutOfRange { index, n: features.n() });
    }
    let scored: Vec<Vec<(u32, f64)>> = rows
        .par_iter()
        .map(|&i| {
            lfs.iter()
                .map(|lf| {
                    apply_lf(lf, features.row(i), kernel, threshold).map_err(|e| match e {
                        Error::ZeroVarianceVector { .. } | Error::ZeroNormVector { .. } => e.with_id(&format!(
                            "{} vs exemplar {} (lf {})",
                            features.ids()[i],
                            lf.exemplar_id,
                            lf.index
                        )),
                        other => other,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut tau = Vec::with_capacity(rows.len() * b);
    let mut s = Vec::with_capacity(rows.len() * b);
    for (t, v) in scored.into_iter().flatten() {
        tau.push(t);
        s.push(v);
    }
    Ok(LFMatrix {
        ids: rows.iter().map(|&i| features.ids()[i].clone()).collect(),
        tau,
        s,
        lf_classes: lfs.iter().map(|lf| lf.class).collect(),
    })
}
