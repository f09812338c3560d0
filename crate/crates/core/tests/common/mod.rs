//! Independent reference evaluators shared by the integration suites.
//!
//! Nothing here calls into the incremental or log-space code paths being
//! checked: determinants come from Gaussian elimination, partition
//! functions from enumeration and likelihoods from direct products of
//! probabilities.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Continuous};

use seedlabel::cage::CageParams;
use seedlabel::data::FeatureMatrix;
use seedlabel::lf::LFMatrix;
use seedlabel::similarity::{build_similarity_matrix, Kernel, SimilarityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let ids = (0..n).map(|i| format!("i{i}")).collect();
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    FeatureMatrix::new(ids, rows).unwrap()
}

/// Pearson similarity of random features: a valid (PSD) similarity matrix.
pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let d = rng.random_range(3..8);
    build_similarity_matrix(&random_features(rng, n, d), Kernel::Pearson).unwrap()
}

pub fn brute_fl_value(sim: &SimilarityMatrix, set: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..sim.n() {
        let mut best = 0.0f64;
        for &j in set {
            best = best.max(sim.get(i, j));
        }
        total += best;
    }
    total
}

/// `log det(S_A + eps I)` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn brute_logdet(sim: &SimilarityMatrix, set: &[usize], eps: f64) -> f64 {
    let k = set.len();
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            (0..k)
                .map(|c| sim.get(set[r], set[c]) + if r == c { eps } else { 0.0 })
                .collect()
        })
        .collect();
    let (mut logdet, mut sign) = (0.0, 1.0);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if pivot != col {
            a.swap(col, pivot);
            sign = -sign;
        }
        let p = a[col][col];
        assert!(p != 0.0, "singular");
        sign *= p.signum();
        logdet += p.abs().ln();
        for r in col + 1..k {
            let f = a[r][col] / p;
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    assert!(sign > 0.0, "determinant is negative");
    logdet
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Greedy facility location by re-evaluating `f(A + j)` from scratch for
/// every candidate. Values within 1e-12 (relative) of the best are ties and
/// go to the lowest index.
pub fn exhaustive_argmax_greedy(sim: &SimilarityMatrix, budget: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..budget {
        let values: Vec<(usize, f64)> = (0..sim.n())
            .filter(|j| !chosen.contains(j))
            .map(|j| {
                let mut trial = chosen.clone();
                trial.push(j);
                (j, brute_fl_value(sim, &trial))
            })
            .collect();
        let best = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        let floor = best - 1e-12 * best.abs().max(1.0);
        chosen.push(values.iter().find(|v| v.1 >= floor).unwrap().0);
    }
    chosen
}

/// `Z = sum_y sum_{fire pattern} prod_j (fire_j ? exp(theta_jy) : 1)`.
pub fn brute_z(params: &CageParams) -> f64 {
    let b = params.b();
    let mut z = 0.0;
    for y in 1..=params.k() as u32 {
        for pattern in 0u32..(1 << b) {
            let mut prod = 1.0;
            for j in 0..b {
                if pattern & (1 << j) != 0 {
                    prod *= params.theta(j, y).exp();
                }
            }
            z += prod;
        }
    }
    z
}

fn beta_pdf(s: f64, a: f64, b: f64) -> f64 {
    Beta::new(a, b).unwrap().pdf(s)
}

/// Joint `P(y, tau_i, s_i) * Z` as a product of raw potentials.
pub fn brute_joint_unnormalized(params: &CageParams, lf: &LFMatrix, i: usize, y: u32) -> f64 {
    let mut prod = 1.0;
    for j in 0..lf.b() {
        let tau = lf.tau(i, j);
        if tau == 0 {
            continue;
        }
        let (q, pi) = (params.qc(j), params.pi(j, y));
        let dens = if tau == y {
            beta_pdf(lf.s(i, j), q * pi, (1.0 - q) * pi)
        } else {
            beta_pdf(lf.s(i, j), (1.0 - q) * pi, q * pi)
        };
        prod *= params.theta(j, y).exp() * dens;
    }
    prod
}

/// `sum_i log(sum_y joint) - m log Z`, marginalizing in probability space.
pub fn brute_log_likelihood(params: &CageParams, lf: &LFMatrix) -> f64 {
    let z = brute_z(params);
    (0..lf.m())
        .map(|i| {
            let marginal: f64 = (1..=params.k() as u32)
                .map(|y| brute_joint_unnormalized(params, lf, i, y))
                .sum();
            marginal.ln() - z.ln()
        })
        .sum()
}

/// Random LF matrix: LF `j` owns a random class; each vote abstains with
/// probability `abstain`; scores uniform in (0.02, 0.98).
pub fn random_lf_matrix(rng: &mut ChaCha8Rng, m: usize, b: usize, k: usize, abstain: f64) -> LFMatrix {
    let classes: Vec<u32> = (0..b).map(|_| rng.random_range(1..=k as u32)).collect();
    let mut tau = Vec::with_capacity(m * b);
    let mut s = Vec::with_capacity(m * b);
    for _ in 0..m {
        for &c in &classes {
            tau.push(if rng.random_bool(abstain) { 0 } else { c });
            s.push(rng.random_range(0.02..0.98));
        }
    }
    let ids = (0..m).map(|i| format!("u{i}")).collect();
    LFMatrix::new(ids, tau, s, classes).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, b: usize, k: usize) -> CageParams {
    let theta = (0..b * k).map(|_| rng.random_range(-1.5..1.5)).collect();
    let rho = (0..b * k).map(|_| rng.random_range(-1.0..1.5)).collect();
    let qc = (0..b).map(|_| rng.random_range(0.55..0.95)).collect();
    CageParams::new(k, theta, rho, qc).unwrap()
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central finite differences of `f` over every coordinate of `theta` then
/// `rho`.
pub fn finite_difference_grad(params: &CageParams, h: f64, f: impl Fn(&CageParams) -> f64) -> (Vec<f64>, Vec<f64>) {
    let k = params.k();
    let theta = params.theta_grid().to_vec();
    let rho = params.rho_grid().to_vec();
    let qc = params.qc_all().to_vec();
    let probe = |t: &[f64], r: &[f64]| f(&CageParams::new(k, t.to_vec(), r.to_vec(), qc.clone()).unwrap());
    let mut g_theta = Vec::with_capacity(theta.len());
    for c in 0..theta.len() {
        let (mut up, mut dn) = (theta.clone(), theta.clone());
        up[c] += h;
        dn[c] -= h;
        g_theta.push((probe(&up, &rho) - probe(&dn, &rho)) / (2.0 * h));
    }
    let mut g_rho = Vec::with_capacity(rho.len());
    for c in 0..rho.len() {
        let (mut up, mut dn) = (rho.clone(), rho.clone());
        up[c] += h;
        dn[c] -= h;
        g_rho.push((probe(&theta, &up) - probe(&theta, &dn)) / (2.0 * h));
    }
    (g_theta, g_rho)
}
