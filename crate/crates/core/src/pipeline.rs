//! End-to-end orchestration: select exemplars, wait for the expert, build
//! labeling functions from the annotated exemplars, aggregate their votes
//! and label the rest of the pool.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cage::{self, CageParams, ParamsFile, TrainConfig, TrainOutput};
use crate::data::{self, FeatureMatrix, LabelTable, Predictions, RngSeed};
use crate::error::{Error, Result};
use crate::lf::{self, LFMatrix, LFMeta, NEVER_ABSTAIN};
use crate::select::{self, ObjectiveKind, SubmodularObjective, DEFAULT_EPSILON};
use crate::similarity::{self, Kernel, SimilarityMatrix};

pub const MANIFEST_FILE: &str = "selection.json";
pub const TEMPLATE_FILE: &str = "annotation_template.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PARAMS_FILE: &str = "params.json";
pub const LF_MATRIX_FILE: &str = "lf_matrix.csv";
pub const LF_META_FILE: &str = "lf_matrix.json";
pub const SIMILARITY_FILE: &str = "similarity.bin";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectConfig {
    pub objective: ObjectiveKind,
    pub budget: usize,
    pub kernel: Kernel,
    pub epsilon: f64,
    pub seed: RngSeed,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            objective: ObjectiveKind::FacilityLocation,
            budget: 10,
            kernel: Kernel::Pearson,
            epsilon: DEFAULT_EPSILON,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub kernel: Kernel,
    pub abstain_threshold: f64,
    pub train: TrainConfig,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            kernel: Kernel::Pearson,
            abstain_threshold: NEVER_ABSTAIN,
            train: TrainConfig::default(),
        }
    }
}

/// Selected exemplars in pick order, with the greedy trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub objective: ObjectiveKind,
    pub budget: usize,
    pub seed: RngSeed,
    pub kernel: Kernel,
    pub epsilon: f64,
    pub pool_size: usize,
    pub ids: Vec<String>,
    pub indices: Vec<usize>,
    pub gains: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

/// Pick the exemplar set from an already built similarity matrix.
pub fn select_exemplars(
    features: &FeatureMatrix,
    sim: &SimilarityMatrix,
    cfg: &SelectConfig,
) -> Result<SelectionManifest> {
    if sim.n() != features.n() {
        return Err(Error::LengthMismatch {
            what: "similarity matrix vs feature rows",
            left: sim.n(),
            right: features.n(),
        });
    }
    let mut obj = SubmodularObjective::new(cfg.objective, sim);
    if cfg.objective == ObjectiveKind::LogDeterminant {
        obj = obj.with_epsilon(cfg.epsilon)?;
    }
    let result = select::greedy_select(&obj, cfg.budget, cfg.seed)?;
    Ok(SelectionManifest {
        objective: cfg.objective,
        budget: cfg.budget,
        seed: cfg.seed,
        kernel: sim.kernel(),
        epsilon: cfg.epsilon,
        pool_size: features.n(),
        ids: result.indices.iter().map(|&i| features.ids()[i].clone()).collect(),
        indices: result.indices,
        gains: result.gains,
        objective_trace: result.objective_trace,
    })
}

/// Select exemplars and write the manifest plus an empty `id,label`
/// annotation template into `out_dir`.
pub fn run_select(
    features_path: &Path,
    similarity_cache: Option<&Path>,
    cfg: &SelectConfig,
    out_dir: &Path,
) -> Result<SelectionManifest> {
    let features = data::load_features(features_path)?;
    let sim = match similarity_cache {
        Some(path) => {
            let sim = SimilarityMatrix::load_cache(path)?;
            if sim.n() != features.n() || sim.kernel() != cfg.kernel {
                return Err(Error::BadCache {
                    path: path.into(),
                    reason: format!(
                        "cache holds n={} {} but the run needs n={} {}",
                        sim.n(),
                        sim.kernel(),
                        features.n(),
                        cfg.kernel
                    ),
                });
            }
            sim
        }
        None => similarity::build_similarity_matrix(&features, cfg.kernel)?,
    };
    let manifest = select_exemplars(&features, &sim, cfg)?;
    ensure_dir(out_dir)?;
    data::save_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    let template: Vec<(String, String)> = manifest.ids.iter().map(|id| (id.clone(), String::new())).collect();
    data::save_label_rows(&out_dir.join(TEMPLATE_FILE), &template)?;
    Ok(manifest)
}

/// Everything produced by labeling a pool.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub predictions: Predictions,
    pub label_names: Vec<String>,
    pub params: ParamsFile,
    pub lf_matrix: LFMatrix,
    pub lf_meta: LFMeta,
}

/// Label every non-exemplar row of `features`. `exemplars` lists the
/// selected ids in pick order and `annotations` their expert labels.
pub fn label_pool(
    features: &FeatureMatrix,
    exemplars: &[String],
    annotations: &[(String, String)],
    cfg: &LabelConfig,
) -> Result<LabelOutcome> {
    cfg.train.validate()?;
    data::check_label_rows(annotations, exemplars)?;
    let annotated: HashSet<&str> = annotations.iter().map(|(id, _)| id.as_str()).collect();
    if let Some(id) = exemplars.iter().find(|id| !annotated.contains(id.as_str())) {
        return Err(Error::UnfilledTemplate { id: id.clone() });
    }
    let labels = match LabelTable::from_pairs(annotations) {
        Err(Error::SingleClass { label }) => {
            log::warn!("every exemplar is labeled {label:?}; all predictions will be {label:?}");
            LabelTable::with_names(annotations, vec![label])?
        }
        other => other?,
    };
    let k = labels.k();

    let lfs = lf::make_lfs(exemplars, &labels, features)?;
    let unlabeled = unlabeled_rows(features, exemplars)?;
    let lf_matrix = lf::apply_to_rows(&lfs, features, &unlabeled, cfg.kernel, cfg.abstain_threshold)?;

    let trained = if k >= 2 && lf_matrix.m() > 0 {
        cage::train(&lf_matrix, k, &cfg.train)?
    } else {
        let params = CageParams::initial(lf_matrix.b(), k, cfg.train.qc_default)?;
        TrainOutput {
            initial_ll: cage::log_likelihood(&params, &lf_matrix)?,
            params,
            ll_trace: Vec::new(),
        }
    };
    let post = cage::posterior(&trained.params, &lf_matrix)?;
    let predictions = Predictions {
        ids: lf_matrix.ids.clone(),
        labels: post
            .predicted
            .iter()
            .map(|&c| labels.name_of(c as usize).to_string())
            .collect(),
        probs: post.probs,
    };
    let label_names = labels.label_names().to_vec();
    Ok(LabelOutcome {
        params: ParamsFile::new(&trained, label_names.clone(), &cfg.train),
        lf_meta: LFMeta {
            lf_classes: lf_matrix.lf_classes.clone(),
            exemplar_ids: exemplars.to_vec(),
            label_names: label_names.clone(),
            kernel: cfg.kernel,
            threshold: cfg.abstain_threshold,
        },
        predictions,
        label_names,
        lf_matrix,
    })
}

/// Rows of the pool outside the exemplar set, in pool order.
fn unlabeled_rows(features: &FeatureMatrix, exemplars: &[String]) -> Result<Vec<usize>> {
    let mut labeled = HashSet::with_capacity(exemplars.len());
    for id in exemplars {
        let row = features
            .index_of(id)
            .ok_or_else(|| Error::MissingFeatureRow { id: id.clone() })?;
        if !labeled.insert(row) {
            return Err(Error::DuplicateId { id: id.clone() });
        }
    }
    let unlabeled: Vec<usize> = (0..features.n()).filter(|i| !labeled.contains(i)).collect();
    // X = U + L, disjoint.
    assert_eq!(unlabeled.len() + labeled.len(), features.n());
    Ok(unlabeled)
}

/// Load a filled template and write predictions, parameters and the LF
/// matrix into `out_dir`.
pub fn run_label(
    features_path: &Path,
    manifest_path: &Path,
    annotations_path: &Path,
    cfg: &LabelConfig,
    out_dir: &Path,
) -> Result<LabelOutcome> {
    let features = data::load_features(features_path)?;
    let manifest: SelectionManifest = data::load_json(manifest_path)?;
    let annotations = data::read_label_rows(annotations_path)?;
    let outcome = label_pool(&features, &manifest.ids, &annotations, cfg)?;
    ensure_dir(out_dir)?;
    write_label_outputs(&outcome, out_dir)?;
    Ok(outcome)
}

pub fn write_label_outputs(outcome: &LabelOutcome, out_dir: &Path) -> Result<()> {
    data::save_predictions(
        &out_dir.join(PREDICTIONS_FILE),
        &outcome.predictions,
        outcome.label_names.len(),
    )?;
    data::save_json(&out_dir.join(PARAMS_FILE), &outcome.params)?;
    outcome.lf_matrix.save_csv(&out_dir.join(LF_MATRIX_FILE))?;
    data::save_json(&out_dir.join(LF_META_FILE), &outcome.lf_meta)
}

/// Apply a trained model to every non-exemplar row of `features`.
pub fn predict_pool(features: &FeatureMatrix, params: &ParamsFile, meta: &LFMeta) -> Result<Predictions> {
    let model = params.params()?;
    let pairs: Vec<(String, String)> = meta
        .exemplar_ids
        .iter()
        .zip(&meta.lf_classes)
        .map(|(id, &c)| (id.clone(), params.label_names[c as usize - 1].clone()))
        .collect();
    let labels = LabelTable::with_names(&pairs, params.label_names.clone())?;
    let lfs = lf::make_lfs(&meta.exemplar_ids, &labels, features)?;
    let rows = unlabeled_rows(features, &meta.exemplar_ids)?;
    let lf_matrix = lf::apply_to_rows(&lfs, features, &rows, meta.kernel, meta.threshold)?;
    let post = cage::posterior(&model, &lf_matrix)?;
    Ok(Predictions {
        ids: lf_matrix.ids,
        labels: post
            .predicted
            .iter()
            .map(|&c| params.label_names[c as usize - 1].clone())
            .collect(),
        probs: post.probs,
    })
}

pub fn run_predict(features_path: &Path, model_dir: &Path, out_dir: &Path) -> Result<Predictions> {
    let features = data::load_features(features_path)?;
    let params: ParamsFile = data::load_json(&model_dir.join(PARAMS_FILE))?;
    let meta: LFMeta = data::load_json(&model_dir.join(LF_META_FILE))?;
    let preds = predict_pool(&features, &params, &meta)?;
    ensure_dir(out_dir)?;
    data::save_predictions(&out_dir.join(PREDICTIONS_FILE), &preds, params.k)?;
    Ok(preds)
}

/// Accuracy and confusion matrix of predictions against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Sorted union of true and predicted label strings.
    pub classes: Vec<String>,
    /// `confusion[t][p]`: instances of true class `t` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub m_eval: usize,
}

/// Every predicted id must have a truth label; extra truth rows (such as
/// the exemplars) are ignored. An empty prediction set scores 0.
pub fn evaluate(preds: &Predictions, truth: &[(String, String)]) -> Result<EvalReport> {
    let truth: HashMap<&str, &str> = truth.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
    let pairs = preds
        .ids
        .iter()
        .zip(&preds.labels)
        .map(|(id, p)| {
            truth
                .get(id.as_str())
                .map(|&t| (t, p.as_str()))
                .ok_or_else(|| Error::MissingGroundTruth { id: id.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let classes: Vec<String> = pairs
        .iter()
        .flat_map(|&(t, p)| [t, p])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let pos: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in &pairs {
        confusion[pos[t]][pos[p]] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let m_eval = pairs.len();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = (0..k)
        .map(|c| ratio(confusion[c][c], (0..k).map(|t| confusion[t][c]).sum()))
        .collect();
    let recall = (0..k)
        .map(|c| ratio(confusion[c][c], confusion[c].iter().sum()))
        .collect();
    Ok(EvalReport {
        accuracy: ratio(correct, m_eval).unwrap_or(0.0),
        classes,
        confusion,
        precision,
        recall,
        m_eval,
    })
}

pub fn run_evaluate(predictions_path: &Path, truth_path: &Path, report_path: Option<&Path>) -> Result<EvalReport> {
    let preds = data::load_predictions(predictions_path)?;
    let truth = data::read_label_rows(truth_path)?;
    let report = evaluate(&preds, &truth)?;
    if let Some(path) = report_path {
        data::save_json(path, &report)?;
    }
    Ok(report)
}

/// Two Gaussian classes for desk-scale experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub dim: usize,
    /// Distance between the two class means.
    pub separation: f64,
    /// Isotropic noise standard deviation.
    pub noise: f64,
    pub seed: RngSeed,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("synthetic data needs n >= 1 and d >= 1".into()));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise must be positive, got {}",
                self.noise
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "separation must be non-negative, got {}",
                self.separation
            )));
        }
        Ok(())
    }
}

pub const SYNTHETIC_LABELS: [&str; 2] = ["negative", "positive"];

/// Class means at `+-(separation / 2) e` for a seeded random unit vector
/// `e`, rows shuffled. Returns features and `(id, label)` truth rows.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(FeatureMatrix, Vec<(String, String)>)> {
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, StandardNormal};

    spec.validate()?;
    let mut rng = spec.seed.rng();
    let direction: Vec<f64> = loop {
        let e: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = e.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            break e.into_iter().map(|v| v / norm).collect();
        }
    };
    let n = 2 * spec.n_per_class;
    let mut classes: Vec<usize> = (0..n).map(|i| i / spec.n_per_class).collect();
    classes.shuffle(&mut rng);

    let width = n.to_string().len();
    let mut ids = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for (i, &c) in classes.iter().enumerate() {
        let sign = if c == 0 { -1.0 } else { 1.0 };
        let row: Vec<f64> = direction
            .iter()
            .map(|&e| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sign * spec.separation / 2.0 * e + spec.noise * z
            })
            .collect();
        let id = format!("x{i:0width$}");
        truth.push((id.clone(), SYNTHETIC_LABELS[c].to_string()));
        ids.push(id);
        rows.push(row);
    }
    Ok((FeatureMatrix::new(ids, rows)?, truth))
}

pub fn run_gen_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (features, truth) = gen_synthetic(spec)?;
    ensure_dir(out_dir)?;
    let fpath = out_dir.join("features.csv");
    let tpath = out_dir.join("truth.csv");
    data::save_features(&fpath, &features)?;
    data::save_label_rows(&tpath, &truth)?;
    Ok((fpath, tpath))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub objectives: Vec<ObjectiveKind>,
    pub budgets: Vec<usize>,
    pub repeats: usize,
    /// Repeat `r` runs with seed `seed + r`.
    pub seed: RngSeed,
    pub kernel: Kernel,
    pub epsilon: f64,
    pub label: LabelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub objective: ObjectiveKind,
    pub budget: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub m_eval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub objective: ObjectiveKind,
    pub budget: usize,
    pub median_accuracy: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Sorted by (objective, budget, seed) in configuration order.
    pub runs: Vec<GridRun>,
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn median(&self, objective: ObjectiveKind, budget: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.objective == objective && c.budget == budget)
            .map(|c| c.median_accuracy)
    }
}

/// Run every (objective, budget) pair on `repeats` seeded datasets. The
/// expert is simulated by copying truth labels onto the selected exemplars;
/// accuracy is measured on the remaining pool.
pub fn run_experiment_grid<F>(cfg: &GridConfig, dataset: F) -> Result<GridResult>
where
    F: Fn(RngSeed) -> Result<(FeatureMatrix, Vec<(String, String)>)> + Sync,
{
    use rayon::prelude::*;

    if cfg.repeats == 0 || cfg.objectives.is_empty() || cfg.budgets.is_empty() {
        return Err(Error::InvalidConfig(
            "grid needs at least one objective, budget and repeat".into(),
        ));
    }
    let seeds: Vec<RngSeed> = (0..cfg.repeats as u64)
        .map(|r| RngSeed(cfg.seed.0.wrapping_add(r)))
        .collect();

    let per_seed: Vec<Vec<GridRun>> = seeds
        .par_iter()
        .map(|&seed| {
            let (features, truth) = dataset(seed)?;
            let sim = similarity::build_similarity_matrix(&features, cfg.kernel)?;
            let truth_map: HashMap<&str, &str> = truth.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
            let mut cells = Vec::new();
            for &objective in &cfg.objectives {
                for &budget in &cfg.budgets {
                    cells.push((objective, budget));
                }
            }
            cells
                .par_iter()
                .map(|&(objective, budget)| {
                    let select_cfg = SelectConfig {
                        objective,
                        budget,
                        kernel: cfg.kernel,
                        epsilon: cfg.epsilon,
                        seed,
                    };
                    let manifest = select_exemplars(&features, &sim, &select_cfg)?;
                    let annotations = manifest
                        .ids
                        .iter()
                        .map(|id| {
                            truth_map
                                .get(id.as_str())
                                .map(|l| (id.clone(), l.to_string()))
                                .ok_or_else(|| Error::MissingGroundTruth { id: id.clone() })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let outcome = label_pool(&features, &manifest.ids, &annotations, &cfg.label)?;
                    let report = evaluate(&outcome.predictions, &truth)?;
                    Ok(GridRun {
                        objective,
                        budget,
                        seed: seed.0,
                        accuracy: report.accuracy,
                        m_eval: report.m_eval,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(per_seed.len() * cfg.objectives.len() * cfg.budgets.len());
    let mut cells = Vec::new();
    for (oi, &objective) in cfg.objectives.iter().enumerate() {
        for (bi, &budget) in cfg.budgets.iter().enumerate() {
            let idx = oi * cfg.budgets.len() + bi;
            let mut accs = Vec::with_capacity(per_seed.len());
            for seed_runs in &per_seed {
                accs.push(seed_runs[idx].accuracy);
                runs.push(seed_runs[idx].clone());
            }
            cells.push(GridCell {
                objective,
                budget,
                median_accuracy: median(&mut accs),
                repeats: accs.len(),
            });
        }
    }
    Ok(GridResult { runs, cells })
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Write `grid_runs.csv` (one row per seed) and `grid_table.csv` (median
/// accuracy, one row per objective, one column per budget).
pub fn write_grid(result: &GridResult, cfg: &GridConfig, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let path = out_dir.join("grid_runs.csv");
    let mut w = data::create_csv(&path)?;
    data::write_record(&mut w, &path, ["objective", "budget", "seed", "accuracy", "m_eval"])?;
    for r in &result.runs {
        data::write_record(
            &mut w,
            &path,
            [
                r.objective.to_string(),
                r.budget.to_string(),
                r.seed.to_string(),
                r.accuracy.to_string(),
                r.m_eval.to_string(),
            ],
        )?;
    }
    data::flush_csv(w, &path)?;

    let path = out_dir.join("grid_table.csv");
    let mut w = data::create_csv(&path)?;
    let mut header = vec!["objective".to_string()];
    header.extend(cfg.budgets.iter().map(|b| b.to_string()));
    data::write_record(&mut w, &path, &header)?;
    for &objective in &cfg.objectives {
        let mut rec = vec![objective.to_string()];
        for &budget in &cfg.budgets {
            rec.push(result.median(objective, budget).unwrap_or(f64::NAN).to_string());
        }
        data::write_record(&mut w, &path, &rec)?;
    }
    data::flush_csv(w, &path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(ids: &[&str], labels: &[&str]) -> Predictions {
        Predictions {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            probs: vec![vec![1.0]; ids.len()],
        }
    }

    fn truth(rows: &[(&str, &str)]) -> Vec<(String, String)> {
        rows.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn perfect_predictions() {
        let t = truth(&[("a", "x"), ("b", "y"), ("c", "x")]);
        let r = evaluate(&preds(&["a", "b", "c"], &["x", "y", "x"]), &t).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, vec![vec![2, 0], vec![0, 1]]);
        assert_eq!(r.precision, vec![Some(1.0), Some(1.0)]);
    }

    #[test]
    fn three_of_four() {
        let t = truth(&[("a", "x"), ("b", "y"), ("c", "x"), ("d", "y")]);
        let r = evaluate(&preds(&["a", "b", "c", "d"], &["x", "y", "x", "x"]), &t).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.m_eval, 4);
        assert_eq!(r.confusion, vec![vec![2, 0], vec![1, 1]]);
        assert_eq!(r.recall, vec![Some(1.0), Some(0.5)]);
        assert_eq!(r.precision[0], Some(2.0 / 3.0));
    }

    #[test]
    fn missing_truth() {
        let t = truth(&[("a", "x")]);
        assert!(matches!(
            evaluate(&preds(&["a", "z"], &["x", "x"]), &t),
            Err(Error::MissingGroundTruth { id }) if id == "z"
        ));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn synthetic_shape_and_determinism() {
        let spec = SyntheticSpec {
            n_per_class: 10,
            dim: 4,
            separation: 6.0,
            noise: 1.0,
            seed: RngSeed(3),
        };
        let (f1, t1) = gen_synthetic(&spec).unwrap();
        let (f2, t2) = gen_synthetic(&spec).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(t1, t2);
        assert_eq!((f1.n(), f1.d()), (20, 4));
        let positives = t1.iter().filter(|(_, l)| l == "positive").count();
        assert_eq!(positives, 10);
        assert!(SyntheticSpec { noise: 0.0, ..spec }.validate().is_err());
    }
}
