//! Generative label aggregation over continuous labeling functions.
//!
//! For an instance with votes `tau_j` and scores `s_j` the joint with the
//! latent class `y` is
//!
//! ```text
//! P(y, tau, s) = 1/Z * prod_j psi_theta(tau_j, y) * psi_pi(tau_j, s_j, y)
//! psi_theta    = exp(theta_jy) if tau_j != 0, else 1
//! psi_pi       = Beta(s_j; q pi, (1-q) pi)   if tau_j == y
//!              = Beta(s_j; (1-q) pi, q pi)   if tau_j != 0, tau_j != y
//!              = 1                           if tau_j == 0
//! Z            = sum_y prod_j (1 + exp(theta_jy))
//! ```
//!
//! with `pi_jy = exp(rho_jy)` and a fixed per-LF quality guess `q_j`. Beta
//! densities are fully normalized: agreement and disagreement use different
//! shape pairs, so their normalizers do not cancel across classes.
//!
//! Training maximizes the marginal log-likelihood `sum_i log sum_y P(y,
//! tau_i, s_i)` by full-batch gradient ascent in `(theta, rho)`. Steps are
//! taken along the gradient of the per-instance mean, so a learning rate
//! behaves the same on pools of any size.
//!
//! Class arguments are class labels in `1..=K`; a vote of 0 is an abstain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::RngSeed;
use crate::error::{Error, Result};
use crate::lf::LFMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CageParams {
    k: usize,
    b: usize,
    /// `b x K`, row-major by LF.
    theta: Vec<f64>,
    /// `b x K`, `pi = exp(rho)`.
    rho: Vec<f64>,
    qc: Vec<f64>,
}

impl CageParams {
    /// `theta = 0`, `rho = 0` (so `pi = 1`), every quality guess `qc`.
    pub fn initial(b: usize, k: usize, qc: f64) -> Result<Self> {
        Self::new(k, vec![0.0; b * k], vec![0.0; b * k], vec![qc; b])
    }

    pub fn new(k: usize, theta: Vec<f64>, rho: Vec<f64>, qc: Vec<f64>) -> Result<Self> {
        let b = qc.len();
        if k == 0 {
            return Err(Error::InvalidConfig("at least one class is required".into()));
        }
        for (what, len) in [("theta vs b*K", theta.len()), ("rho vs b*K", rho.len())] {
            if len != b * k {
                return Err(Error::LengthMismatch {
                    what,
                    left: len,
                    right: b * k,
                });
            }
        }
        if let Some(q) = qc.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::InvalidConfig(format!("quality guess {q} outside (0, 1)")));
        }
        if theta.iter().chain(&rho).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(CageParams { k, b, theta, rho, qc })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// `theta_jy` for LF `j` (0-based) and class `y` in `1..=K`.
    pub fn theta(&self, j: usize, y: u32) -> f64 {
        self.theta[j * self.k + (y as usize - 1)]
    }

    pub fn rho(&self, j: usize, y: u32) -> f64 {
        self.rho[j * self.k + (y as usize - 1)]
    }

    pub fn pi(&self, j: usize, y: u32) -> f64 {
        self.rho(j, y).exp()
    }

    pub fn qc(&self, j: usize) -> f64 {
        self.qc[j]
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta
    }

    pub fn rho_grid(&self) -> &[f64] {
        &self.rho
    }

    pub fn qc_all(&self) -> &[f64] {
        &self.qc
    }

    fn check_shape(&self, lf: &LFMatrix) -> Result<()> {
        if lf.b() != self.b {
            return Err(Error::LengthMismatch {
                what: "labeling functions vs parameter rows",
                left: lf.b(),
                right: self.b,
            });
        }
        if let Some(&c) = lf.lf_classes.iter().find(|&&c| c == 0 || c as usize > self.k) {
            return Err(Error::InvalidConfig(format!(
                "labeling function class {c} outside 1..={}",
                self.k
            )));
        }
        Ok(())
    }

    /// Beta shapes `(alpha, beta)` of LF `j` under class `y`, for the
    /// agreement (`agree = true`) or disagreement branch.
    pub fn beta_shapes(&self, j: usize, y: u32, agree: bool) -> (f64, f64) {
        let pi = self.pi(j, y);
        let q = self.qc[j];
        if agree {
            (q * pi, (1.0 - q) * pi)
        } else {
            ((1.0 - q) * pi, q * pi)
        }
    }
}

/// Log Beta density, computed through log-gamma.
pub fn beta_ln_pdf(s: f64, alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0) * s.ln() + (beta - 1.0) * (-s).ln_1p() - ln_beta_fn(alpha, beta)
}

fn ln_beta_fn(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta)
}

/// `log psi_theta`: `theta_jy` when LF `j` fires, 0 when it abstains.
pub fn log_psi_theta(params: &CageParams, j: usize, tau: u32, y: u32) -> f64 {
    if tau == 0 {
        0.0
    } else {
        params.theta(j, y)
    }
}

/// `log psi_pi`: the agreement or disagreement Beta log-density of the
/// score, 0 when LF `j` abstains.
pub fn log_psi_pi(params: &CageParams, j: usize, tau: u32, s: f64, y: u32) -> Result<f64> {
    if tau == 0 {
        return Ok(0.0);
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::NonFiniteDensity { score: s });
    }
    let (a, b) = params.beta_shapes(j, y, tau == y);
    Ok(beta_ln_pdf(s, a, b))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Per-class `sum_j log(1 + exp(theta_jy))`.
fn class_log_partition(params: &CageParams) -> Vec<f64> {
    (1..=params.k as u32)
        .map(|y| (0..params.b).map(|j| softplus(params.theta(j, y))).sum())
        .collect()
}

/// `log Z_theta = log sum_y prod_j (1 + exp(theta_jy))`.
pub fn log_z_theta(params: &CageParams) -> f64 {
    log_sum_exp(&class_log_partition(params))
}

/// Per (LF, class) terms that do not depend on the instance.
struct BranchTable {
    k: usize,
    /// `[agree, disagree]` per `(j, y)`: shapes and log normalizer.
    shapes: Vec<[(f64, f64, f64); 2]>,
    /// `[agree, disagree]` per `(j, y)`: instance-free part of
    /// `d log Beta / d pi`, i.e. `psi(pi) - a psi(alpha) - c psi(beta)`.
    dpi_const: Vec<[f64; 2]>,
}

impl BranchTable {
    fn new(params: &CageParams, with_grad: bool) -> Self {
        let mut shapes = Vec::with_capacity(params.b * params.k);
        let mut dpi_const = Vec::new();
        for j in 0..params.b {
            for y in 1..=params.k as u32 {
                let agree = params.beta_shapes(j, y, true);
                let disagree = params.beta_shapes(j, y, false);
                shapes.push([
                    (agree.0, agree.1, ln_beta_fn(agree.0, agree.1)),
                    (disagree.0, disagree.1, ln_beta_fn(disagree.0, disagree.1)),
                ]);
                if with_grad {
                    let q = params.qc[j];
                    let pi = params.pi(j, y);
                    let psi_pi = digamma(pi);
                    dpi_const.push([
                        psi_pi - q * digamma(agree.0) - (1.0 - q) * digamma(agree.1),
                        psi_pi - (1.0 - q) * digamma(disagree.0) - q * digamma(disagree.1),
                    ]);
                }
            }
        }
        BranchTable {
            k: params.k,
            shapes,
            dpi_const,
        }
    }

    #[inline]
    fn ln_pdf(&self, j: usize, y: usize, branch: usize, s: f64) -> f64 {
        let (a, b, norm) = self.shapes[j * self.k + y][branch];
        (a - 1.0) * s.ln() + (b - 1.0) * (-s).ln_1p() - norm
    }
}

/// Unnormalized log joint `log prod_j psi_theta * psi_pi` of instance `i`
/// for each class (0-based columns).
fn class_scores(params: &CageParams, table: &BranchTable, lf: &LFMatrix, i: usize) -> Vec<f64> {
    let mut scores = vec![0.0; params.k];
    for j in 0..params.b {
        let tau = lf.tau(i, j);
        if tau == 0 {
            continue;
        }
        let s = lf.s(i, j);
        for (y, score) in scores.iter_mut().enumerate() {
            let branch = usize::from(tau as usize != y + 1);
            *score += params.theta[j * params.k + y] + table.ln_pdf(j, y, branch, s);
        }
    }
    scores
}

/// Softmax of a score row; the normalizer is summed in sorted order so the
/// result is exactly equivariant under class permutations.
fn normalize(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let mut sorted = exps.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Marginal log-likelihood `sum_i log sum_y exp(score_iy) - m log Z`.
pub fn log_likelihood(params: &CageParams, lf: &LFMatrix) -> Result<f64> {
    params.check_shape(lf)?;
    let table = BranchTable::new(params, false);
    let per_instance: Vec<f64> = (0..lf.m())
        .into_par_iter()
        .map(|i| log_sum_exp(&class_scores(params, &table, lf, i)))
        .collect();
    // Fixed-order reduction keeps the result bit-deterministic.
    let data: f64 = per_instance.iter().sum();
    Ok(data - lf.m() as f64 * log_z_theta(params))
}

/// Gradient of the log-likelihood in the unconstrained `(theta, rho)`
/// coordinates, both `b x K` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
}

pub fn grad_log_likelihood(params: &CageParams, lf: &LFMatrix) -> Result<Gradient> {
    params.check_shape(lf)?;
    let (b, k) = (params.b, params.k);
    let table = BranchTable::new(params, true);

    let per_instance: Vec<Vec<f64>> = (0..lf.m())
        .into_par_iter()
        .map(|i| {
            let post = normalize(&class_scores(params, &table, lf, i));
            let mut g = vec![0.0; 2 * b * k];
            for j in 0..b {
                let tau = lf.tau(i, j);
                if tau == 0 {
                    continue;
                }
                let s = lf.s(i, j);
                let q = params.qc[j];
                let (ln_s, ln_1s) = (s.ln(), (-s).ln_1p());
                for (y, &p) in post.iter().enumerate() {
                    let idx = j * k + y;
                    let agree = tau as usize == y + 1;
                    let (a, c, branch) = if agree { (q, 1.0 - q, 0) } else { (1.0 - q, q, 1) };
                    let dpi = a * ln_s + c * ln_1s + table.dpi_const[idx][branch];
                    g[idx] += p;
                    g[b * k + idx] += p * dpi * params.rho[idx].exp();
                }
            }
            g
        })
        .collect();

    let mut grad = vec![0.0; 2 * b * k];
    for g in &per_instance {
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }

    // - m d(log Z)/d theta_jy = - m w_y sigmoid(theta_jy), w = softmax of the
    // per-class log partitions.
    let weights = normalize(&class_log_partition(params));
    let m = lf.m() as f64;
    for j in 0..b {
        for (y, w) in weights.iter().enumerate() {
            grad[j * k + y] -= m * w * sigmoid(params.theta[j * k + y]);
        }
    }
    let rho = grad.split_off(b * k);
    Ok(Gradient { theta: grad, rho })
}

/// Class posteriors per instance with their argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// `m` rows of `K` probabilities.
    pub probs: Vec<Vec<f64>>,
    /// Class labels in `1..=K`, ties to the lowest class.
    pub predicted: Vec<u32>,
}

/// `P(y | tau_i, s_i)`; `Z` cancels in the conditional.
pub fn posterior(params: &CageParams, lf: &LFMatrix) -> Result<Posterior> {
    params.check_shape(lf)?;
    let table = BranchTable::new(params, false);
    let probs: Vec<Vec<f64>> = (0..lf.m())
        .into_par_iter()
        .map(|i| normalize(&class_scores(params, &table, lf, i)))
        .collect();
    let predicted = probs.iter().map(|row| argmax(row) as u32 + 1).collect();
    Ok(Posterior { probs, predicted })
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (y, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = y;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub qc_default: f64,
    /// Recorded for provenance; initialization and full-batch ascent are
    /// deterministic.
    pub seed: RngSeed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 100,
            qc_default: 0.85,
            seed: RngSeed(0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.qc_default > 0.0 && self.qc_default < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "quality guess must lie in (0, 1), got {}",
                self.qc_default
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub params: CageParams,
    /// Log-likelihood of the initial parameters.
    pub initial_ll: f64,
    /// Log-likelihood after each epoch.
    pub ll_trace: Vec<f64>,
}

/// Fit `K`-class parameters from the default initialization.
pub fn train(lf: &LFMatrix, k: usize, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let init = CageParams::initial(lf.b(), k, cfg.qc_default)?;
    train_from(init, lf, cfg)
}

/// Full-batch gradient ascent from `init`: each epoch moves
/// `learning_rate / m` along the log-likelihood gradient.
pub fn train_from(init: CageParams, lf: &LFMatrix, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if lf.b() == 0 || lf.m() == 0 || init.k < 2 {
        return Err(Error::InvalidConfig(format!(
            "training needs b >= 1, m >= 1, K >= 2 (got b={}, m={}, K={})",
            lf.b(),
            lf.m(),
            init.k
        )));
    }
    let mut params = init;
    let initial_ll = log_likelihood(&params, lf)?;
    if !initial_ll.is_finite() {
        return Err(Error::DivergedTraining {
            epoch: 0,
            value: initial_ll,
        });
    }
    let step = cfg.learning_rate / lf.m() as f64;
    let mut ll_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let g = grad_log_likelihood(&params, lf)?;
        for (p, d) in params.theta.iter_mut().zip(&g.theta) {
            *p += step * d;
        }
        for (p, d) in params.rho.iter_mut().zip(&g.rho) {
            *p += step * d;
        }
        let ll = log_likelihood(&params, lf)?;
        if !ll.is_finite() || params.theta.iter().chain(&params.rho).any(|v| !v.is_finite()) {
            return Err(Error::DivergedTraining { epoch, value: ll });
        }
        ll_trace.push(ll);
    }
    Ok(TrainOutput {
        params,
        initial_ll,
        ll_trace,
    })
}

/// On-disk form of trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct ParamsFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub b: usize,
    pub label_names: Vec<String>,
    pub theta: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub qc: Vec<f64>,
    pub train_config: TrainConfig,
    pub initial_ll: f64,
    pub ll_trace: Vec<f64>,
}

impl ParamsFile {
    pub fn new(out: &TrainOutput, label_names: Vec<String>, cfg: &TrainConfig) -> Self {
        let p = &out.params;
        let grid = |v: &[f64]| v.chunks(p.k).map(<[f64]>::to_vec).collect();
        ParamsFile {
            k: p.k,
            b: p.b,
            label_names,
            theta: grid(&p.theta),
            rho: grid(&p.rho),
            qc: p.qc.clone(),
            train_config: *cfg,
            initial_ll: out.initial_ll,
            ll_trace: out.ll_trace.clone(),
        }
    }

    pub fn params(&self) -> Result<CageParams> {
        if self.theta.len() != self.b || self.rho.len() != self.b {
            return Err(Error::LengthMismatch {
                what: "parameter rows vs b",
                left: self.theta.len(),
                right: self.b,
            });
        }
        let flat = |g: &[Vec<f64>]| -> Result<Vec<f64>> {
            match g.iter().find(|row| row.len() != self.k) {
                Some(row) => Err(Error::LengthMismatch {
                    what: "parameter columns vs K",
                    left: row.len(),
                    right: self.k,
                }),
                None => Ok(g.concat()),
            }
        };
        CageParams::new(self.k, flat(&self.theta)?, flat(&self.rho)?, self.qc.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_lf(tau: u32, s: f64) -> LFMatrix {
        LFMatrix::new(vec!["u".into()], vec![tau], vec![s], vec![1]).unwrap()
    }

    #[test]
    fn theta_potential() {
        let mut p = CageParams::initial(1, 2, 0.85).unwrap();
        assert_eq!(log_psi_theta(&p, 0, 0, 1), 0.0);
        assert_eq!(log_psi_theta(&p, 0, 1, 1), 0.0);
        p.theta[0] = 1.5;
        assert_eq!(log_psi_theta(&p, 0, 1, 1), 1.5);
        assert_eq!(log_psi_theta(&p, 0, 0, 1), 0.0);
    }

    #[test]
    fn symmetric_beta_at_center() {
        // Beta(1/2, 1/2) has density 1 / (pi sqrt(s (1-s))), so 2/pi at s = 1/2.
        let p = CageParams::initial(1, 2, 0.5).unwrap();
        let v = log_psi_pi(&p, 0, 1, 0.5, 1).unwrap();
        assert!((v - (2.0 / PI).ln()).abs() < 1e-13);
        assert_eq!(v, log_psi_pi(&p, 0, 1, 0.5, 2).unwrap());
    }

    #[test]
    fn agreement_density_against_reflection_formula() {
        // B(q, 1-q) = pi / sin(pi q) when alpha + beta = 1.
        let p = CageParams::initial(1, 2, 0.85).unwrap();
        let (s, q) = (0.9f64, 0.85f64);
        let expected = (q - 1.0) * s.ln() + (-q) * (1.0 - s).ln() - (PI / (PI * q).sin()).ln();
        assert!((log_psi_pi(&p, 0, 1, s, 1).unwrap() - expected).abs() < 1e-12);
        let expected_d = (-q) * s.ln() + (q - 1.0) * (1.0 - s).ln() - (PI / (PI * q).sin()).ln();
        assert!((log_psi_pi(&p, 0, 1, s, 2).unwrap() - expected_d).abs() < 1e-12);
    }

    #[test]
    fn abstain_and_bad_scores() {
        let p = CageParams::initial(1, 2, 0.85).unwrap();
        assert_eq!(log_psi_pi(&p, 0, 0, 0.3, 1).unwrap(), 0.0);
        assert_eq!(log_psi_pi(&p, 0, 0, 1.0, 2).unwrap(), 0.0);
        assert!(matches!(
            log_psi_pi(&p, 0, 1, 1.0, 1),
            Err(Error::NonFiniteDensity { .. })
        ));
        assert!(matches!(
            log_psi_pi(&p, 0, 1, 0.0, 1),
            Err(Error::NonFiniteDensity { .. })
        ));
    }

    #[test]
    fn partition_closed_forms() {
        let p = CageParams::initial(3, 2, 0.85).unwrap();
        assert!((log_z_theta(&p) - 16f64.ln()).abs() < 1e-14);
        let p = CageParams::initial(1, 1, 0.85).unwrap();
        assert!((log_z_theta(&p) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn likelihood_edge_cases() {
        let p = CageParams::initial(1, 2, 0.85).unwrap();
        let empty = LFMatrix::new(vec![], vec![], vec![], vec![1]).unwrap();
        assert_eq!(log_likelihood(&p, &empty).unwrap(), 0.0);

        let mut p = CageParams::initial(2, 3, 0.7).unwrap();
        p.theta = vec![0.3, -0.2, 1.0, 0.5, 0.0, -1.0];
        let abstain = LFMatrix::new(vec!["u".into()], vec![0, 0], vec![0.4, 0.6], vec![1, 3]).unwrap();
        let ll = log_likelihood(&p, &abstain).unwrap();
        assert!((ll - (3f64.ln() - log_z_theta(&p))).abs() < 1e-13);
    }

    #[test]
    fn all_abstain_gradient_is_partition_only() {
        let mut p = CageParams::initial(2, 2, 0.85).unwrap();
        p.theta = vec![0.4, -0.3, 1.2, 0.1];
        let lf = LFMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0; 6],
            vec![0.5; 6],
            vec![1, 2],
        )
        .unwrap();
        let g = grad_log_likelihood(&p, &lf).unwrap();
        assert!(g.rho.iter().all(|&v| v == 0.0));
        let z: Vec<f64> = class_log_partition(&p);
        let lz = log_sum_exp(&z);
        for j in 0..2 {
            for (y, zy) in z.iter().enumerate() {
                let w = (zy - lz).exp();
                let expected = -3.0 * w * sigmoid(p.theta[j * 2 + y]);
                assert!((g.theta[j * 2 + y] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn abstaining_row_is_uniform() {
        let p = CageParams::initial(1, 3, 0.85).unwrap();
        let post = posterior(&p, &one_lf(0, 0.9)).unwrap();
        assert_eq!(post.probs[0], vec![1.0 / 3.0; 3]);
        assert_eq!(post.predicted, [1]);
    }

    #[test]
    fn single_lf_two_class_closed_form() {
        let p = CageParams::initial(1, 2, 0.85).unwrap();
        let post = posterior(&p, &one_lf(1, 0.9)).unwrap();
        let (s, q) = (0.9f64, 0.85f64);
        // Both branches share B(q, 1-q); the ratio only needs the kernels.
        let agree = s.powf(q - 1.0) * (1.0 - s).powf(-q);
        let disagree = s.powf(-q) * (1.0 - s).powf(q - 1.0);
        let expected = agree / (agree + disagree);
        assert!((post.probs[0][0] - expected).abs() < 1e-12);
        assert_eq!(post.predicted, [1]);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..ok },
            TrainConfig {
                learning_rate: 0.0,
                ..ok
            },
            TrainConfig { qc_default: 1.0, ..ok },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn training_needs_two_classes() {
        let lf = one_lf(1, 0.8);
        assert!(train(&lf, 1, &TrainConfig::default()).is_err());
    }

    #[test]
    fn params_file_round_trip() {
        let lf = LFMatrix::new(
            vec!["a".into(), "b".into()],
            vec![1, 2, 1, 0],
            vec![0.8, 0.3, 0.6, 0.45],
            vec![1, 2],
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train(&lf, 2, &cfg).unwrap();
        let file = ParamsFile::new(&out, vec!["x".into(), "y".into()], &cfg);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"K\":2"));
        let back: ParamsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.params().unwrap(), out.params);
    }
}
