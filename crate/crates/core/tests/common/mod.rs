#![allow(dead_code)]

use lacboost::data::{Label, QMode};
use lacboost::{Dataset, SimplexQp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `P = BᵀB / k` with `B` a `k × n` Gaussian matrix. `k < n` gives a
/// singular `P`.
pub fn random_psd_qp(rng: &mut ChaCha8Rng, n: usize) -> SimplexQp {
    let k = rng.random_range(1..=n + 2);
    let b: Vec<f64> = (0..k * n).map(|_| normal(rng)).collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (0..k).map(|r| b[r * n + i] * b[r * n + j]).sum::<f64>() / k as f64;
        }
    }
    let c: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    SimplexQp::new(p, c).unwrap()
}

/// Gaussian features; positives shifted by `shift` along every coordinate.
pub fn gaussian_dataset(rng: &mut ChaCha8Rng, m1: usize, m2: usize, d: usize, shift: f64) -> Dataset {
    let pos: Vec<Vec<f64>> = (0..m1).map(|_| (0..d).map(|_| shift + normal(rng)).collect()).collect();
    let neg: Vec<Vec<f64>> = (0..m2).map(|_| (0..d).map(|_| normal(rng)).collect()).collect();
    Dataset::from_classes(&pos, &neg).unwrap()
}

pub fn labels(m1: usize, m2: usize) -> Vec<Label> {
    let mut l = vec![Label::Positive; m1];
    l.extend(vec![Label::Negative; m2]);
    l
}

/// `ρᵀQρ` written as a sum over pairs inside each active class block.
pub fn pairwise_quadratic_form(rho: &[f64], m1: usize, m2: usize, mode: QMode, exact: bool) -> f64 {
    let m = (m1 + m2) as f64;
    let mut blocks = vec![&rho[..m1]];
    if mode == QMode::Lda {
        blocks.push(&rho[m1..]);
    }
    blocks
        .into_iter()
        .map(|blk| {
            if exact {
                let mut s = 0.0;
                for i in 0..blk.len() {
                    for j in i + 1..blk.len() {
                        s += (blk[i] - blk[j]).powi(2);
                    }
                }
                s / ((blk.len() - 1) as f64 * m)
            } else {
                blk.iter().map(|v| v * v).sum::<f64>() / m
            }
        })
        .sum()
}

/// Dense `n × n` row-major covariance with denominator `m − 1`.
pub fn dense_covariance(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    let n = rows[0].len();
    let mean: Vec<f64> = (0..n).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m as f64).collect();
    let mut cov = vec![0.0; n * n];
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|v| *v /= (m - 1) as f64);
    cov
}

/// Primal active-set solve of `min ½wᵀPw − cᵀw` over the simplex with `P`
/// shifted by `ridge·I` so every KKT system is nonsingular. Returns `w` and
/// the objective under the unshifted `P`.
pub fn active_set_qp(qp: &SimplexQp, ridge: f64) -> (Vec<f64>, f64) {
    use nalgebra::{DMatrix, DVector};
    let n = qp.n();
    let p = |i: usize, j: usize| qp.p_at(i, j) + if i == j { ridge } else { 0.0 };
    let c = qp.c();
    let start = (0..n)
        .min_by(|&a, &b| (0.5 * p(a, a) - c[a]).partial_cmp(&(0.5 * p(b, b) - c[b])).unwrap())
        .unwrap();
    let mut w = vec![0.0; n];
    w[start] = 1.0;
    let mut free = vec![false; n];
    free[start] = true;
    for _ in 0..100 * n + 100 {
        let f: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
        let k = f.len();
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (a, &i) in f.iter().enumerate() {
            for (b, &j) in f.iter().enumerate() {
                kkt[(a, b)] = p(i, j);
            }
            kkt[(a, k)] = -1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = c[i];
        }
        rhs[k] = 1.0;
        let sol = kkt.lu().solve(&rhs).expect("nonsingular KKT system");
        let target: Vec<f64> = (0..k).map(|a| sol[a]).collect();
        if target.iter().all(|&v| v >= 0.0) {
            for (a, &i) in f.iter().enumerate() {
                w[i] = target[a];
            }
            let lambda = sol[k];
            let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p(i, j) * w[j]).sum::<f64>() - c[i]).collect();
            let worst = (0..n)
                .filter(|&j| !free[j])
                .min_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap());
            match worst {
                Some(j) if g[j] < lambda - 1e-13 * (1.0 + lambda.abs()) => free[j] = true,
                _ => return (w.clone(), qp.objective(&w)),
            }
        } else {
            // step toward the equality solution until a weight hits zero
            let mut alpha = 1.0;
            let mut block = None;
            for (a, &i) in f.iter().enumerate() {
                if target[a] < w[i] {
                    let t = w[i] / (w[i] - target[a]);
                    if t < alpha {
                        alpha = t;
                        block = Some(i);
                    }
                }
            }
            for (a, &i) in f.iter().enumerate() {
                w[i] += alpha * (target[a] - w[i]);
            }
            if let Some(i) = block {
                w[i] = 0.0;
                free[i] = false;
            }
        }
    }
    panic!("active-set solver did not terminate");
}
