//! Pairwise similarity between feature vectors.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Correlation of the mean-centered vectors.
    #[default]
    Pearson,
    /// Inner product of the L2-normalized vectors.
    Cosine,
}

impl Kernel {
    fn tag(self) -> u8 {
        match self {
            Kernel::Pearson => 0,
            Kernel::Cosine => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Kernel> {
        match tag {
            0 => Some(Kernel::Pearson),
            1 => Some(Kernel::Cosine),
            _ => None,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Pearson => "pearson",
            Kernel::Cosine => "cosine",
        })
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pearson" => Ok(Kernel::Pearson),
            "cosine" => Ok(Kernel::Cosine),
            other => Err(format!("unknown kernel {other:?} (expected pearson|cosine)")),
        }
    }
}

/// Similarity in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RawScore(f64);

impl RawScore {
    /// Clamps floating-point spill outside `[-1, 1]`.
    pub fn new(r: f64) -> RawScore {
        RawScore(r.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Raw similarity of two vectors under `kernel`.
///
/// The result is bitwise symmetric in its arguments.
pub fn raw_similarity(u: &[f64], v: &[f64], kernel: Kernel) -> Result<RawScore> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (dot, nu, nv) = match kernel {
        Kernel::Pearson => {
            let mu = mean(u);
            let mv = mean(v);
            let mut dot = 0.0;
            let mut nu = 0.0;
            let mut nv = 0.0;
            for (&a, &b) in u.iter().zip(v) {
                let (a, b) = (a - mu, b - mv);
                dot += a * b;
                nu += a * a;
                nv += b * b;
            }
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::ZeroVarianceVector { id: None });
            }
            (dot, nu, nv)
        }
        Kernel::Cosine => {
            let mut dot = 0.0;
            let mut nu = 0.0;
            let mut nv = 0.0;
            for (&a, &b) in u.iter().zip(v) {
                dot += a * b;
                nu += a * a;
                nv += b * b;
            }
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::ZeroNormVector { id: None });
            }
            (dot, nu, nv)
        }
    };
    // sqrt(x * x) == x exactly, so identical vectors score exactly 1.
    Ok(RawScore::new(dot / (nu * nv).sqrt()))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Affine map `[-1, 1] -> [0, 1]`.
pub fn to_unit_interval(r: RawScore) -> f64 {
    (r.0 + 1.0) / 2.0
}

/// Symmetric `n x n` similarity matrix with unit diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Vec<f64>,
    n: usize,
    kernel: Kernel,
}

impl SimilarityMatrix {
    /// Wrap a dense row-major matrix, checking the invariants.
    pub fn from_dense(values: Vec<f64>, n: usize, kernel: Kernel) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                what: "similarity entries vs n^2",
                left: values.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                let ok = v == values[j * n + i] && (0.0..=1.0).contains(&v) && (i != j || v == 1.0);
                if !ok {
                    return Err(Error::InvalidSimilarity { i, j, value: v });
                }
            }
        }
        Ok(SimilarityMatrix { values, n, kernel })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Persist as `SIMM` magic, `n` (u64 LE), kernel tag (u8), then the upper
    /// triangle including the diagonal as row-major f64 LE.
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let ctx = || path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(ctx(), e))?;
        let mut w = BufWriter::new(file);
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(ctx(), e));
        write(CACHE_MAGIC)?;
        write(&(self.n as u64).to_le_bytes())?;
        write(&[self.kernel.tag()])?;
        for i in 0..self.n {
            for j in i..self.n {
                write(&self.get(i, j).to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(ctx(), e))
    }

    pub fn load_cache(path: &Path) -> Result<Self> {
        let ctx = || path.display().to_string();
        let bad = |reason: &str| Error::BadCache {
            path: path.into(),
            reason: reason.into(),
        };
        let file = File::open(path).map_err(|e| Error::io(ctx(), e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(ctx(), e))?;
        if bytes.len() < 13 || &bytes[..4] != CACHE_MAGIC {
            return Err(bad("missing header"));
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let kernel = Kernel::from_tag(bytes[12]).ok_or_else(|| bad("unknown kernel tag"))?;
        let payload = &bytes[13..];
        if payload.len() != n * (n + 1) / 2 * 8 {
            return Err(bad("payload length does not match n"));
        }
        let mut values = vec![0.0; n * n];
        let mut chunks = payload.chunks_exact(8);
        for i in 0..n {
            for j in i..n {
                let v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        SimilarityMatrix::from_dense(values, n, kernel).map_err(|_| bad("invariants violated"))
    }
}

const CACHE_MAGIC: &[u8; 4] = b"SIMM";

/// Build `S_ij = (r_ij + 1) / 2` for every pair of rows.
pub fn build_similarity_matrix(features: &FeatureMatrix, kernel: Kernel) -> Result<SimilarityMatrix> {
    let n = features.n();
    // Upper triangle only, one pair at a time; the lower half is mirrored.
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    raw_similarity(features.row(i), features.row(j), kernel)
                        .map(to_unit_interval)
                        .map_err(|e| {
                            let id = offending_id(features, i, j, kernel);
                            e.with_id(id)
                        })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    if n == 1 {
        // No pairs to compute; still reject a degenerate lone vector.
        let row = features.row(0);
        raw_similarity(row, row, kernel).map_err(|e| e.with_id(&features.ids()[0]))?;
    }

    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        values[i * n + i] = 1.0;
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(SimilarityMatrix { values, n, kernel })
}

fn offending_id(features: &FeatureMatrix, i: usize, j: usize, kernel: Kernel) -> &str {
    let ids = features.ids();
    let self_check = |k: usize| raw_similarity(features.row(k), features.row(k), kernel).is_err();
    if self_check(i) || !self_check(j) {
        &ids[i]
    } else {
        &ids[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        FeatureMatrix::new(ids, rows).unwrap()
    }

    #[test]
    fn self_similarity_is_one() {
        let u = [0.3, -1.2, 4.0, 2.2];
        for k in [Kernel::Pearson, Kernel::Cosine] {
            assert_eq!(raw_similarity(&u, &u, k).unwrap().value(), 1.0);
        }
    }

    #[test]
    fn cosine_orthogonal() {
        let r = raw_similarity(&[1.0, 0.0], &[0.0, 1.0], Kernel::Cosine).unwrap();
        assert_eq!(r.value(), 0.0);
    }

    #[test]
    fn pearson_anti_linear() {
        let r = raw_similarity(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0], Kernel::Pearson).unwrap();
        assert!((r.value() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_vectors() {
        assert!(matches!(
            raw_similarity(&[2.0, 2.0], &[1.0, 3.0], Kernel::Pearson),
            Err(Error::ZeroVarianceVector { .. })
        ));
        assert!(matches!(
            raw_similarity(&[0.0, 0.0], &[1.0, 3.0], Kernel::Cosine),
            Err(Error::ZeroNormVector { .. })
        ));
        assert!(matches!(
            raw_similarity(&[0.0, 1.0], &[1.0, 3.0, 4.0], Kernel::Cosine),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_interval_map() {
        assert_eq!(to_unit_interval(RawScore::new(1.0)), 1.0);
        assert_eq!(to_unit_interval(RawScore::new(-1.0)), 0.0);
        assert_eq!(to_unit_interval(RawScore::new(0.5)), 0.75);
        assert_eq!(RawScore::new(1.0 + 1e-15).value(), 1.0);
    }

    #[test]
    fn small_matrices() {
        let s = build_similarity_matrix(&fm(vec![vec![1.0, 2.0]]), Kernel::Cosine).unwrap();
        assert_eq!(s.row(0), [1.0]);

        let s = build_similarity_matrix(&fm(vec![vec![1.0, 2.0], vec![1.0, 2.0]]), Kernel::Pearson).unwrap();
        assert_eq!(s.row(0), [1.0, 1.0]);
        assert_eq!(s.row(1), [1.0, 1.0]);

        let s = build_similarity_matrix(&fm(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), Kernel::Cosine).unwrap();
        assert_eq!(s.row(0), [1.0, 0.5]);
        assert_eq!(s.row(1), [0.5, 1.0]);
    }

    #[test]
    fn degenerate_row_reports_its_id() {
        let f = fm(vec![vec![1.0, 2.0, 0.5], vec![3.0, 3.0, 3.0], vec![0.0, 1.0, 5.0]]);
        match build_similarity_matrix(&f, Kernel::Pearson) {
            Err(Error::ZeroVarianceVector { id: Some(id) }) => assert_eq!(id, "r1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cache_round_trip() {
        let f = fm(vec![vec![1.0, 0.2, 3.0], vec![0.0, 1.0, -2.0], vec![0.5, 0.5, 0.1]]);
        let s = build_similarity_matrix(&f, Kernel::Cosine).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sim.bin");
        s.save_cache(&p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 13 + 6 * 8);
        assert_eq!(SimilarityMatrix::load_cache(&p).unwrap(), s);

        std::fs::write(&p, b"SIMM\x02").unwrap();
        assert!(matches!(SimilarityMatrix::load_cache(&p), Err(Error::BadCache { .. })));
    }
}
