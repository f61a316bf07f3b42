use serde::{Deserialize, Serialize};

use super::{auto_lipschitz, fw_gap, QpSolution, SimplexQp};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// How the exponentiated-gradient step size `τ_k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule<T> {
    /// `τ_k = √(2 ln n) / (L_f √k)`.
    Theory,
    /// Constant `τ`.
    Fixed(T),
    /// Starts at `1 / max|P_ij|` and backtracks until the entropic
    /// sufficient-decrease condition holds, growing again after each accepted
    /// step.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgConfig<T> {
    pub max_iters: usize,
    pub tol: T,
    /// `L_f`; `None` uses [`auto_lipschitz`].
    pub lipschitz: Option<T>,
    pub step_schedule: StepSchedule<T>,
    pub warm_start: Option<Vec<T>>,
}

impl<T: Scalar> Default for EgConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: T::lit(1e-7),
            lipschitz: None,
            step_schedule: StepSchedule::Adaptive,
            warm_start: None,
        }
    }
}

impl<T: Scalar> EgConfig<T> {
    pub fn with_warm_start(mut self, w: Vec<T>) -> Self {
        self.warm_start = Some(w);
        self
    }
}

const EXPONENT_CLAMP: f64 = 500.0;
const MAX_BACKTRACKS: usize = 80;

struct Iterate<T> {
    w: Vec<T>,
    grad: Vec<T>,
    f: T,
}

impl<T: Scalar> Iterate<T> {
    fn at(qp: &SimplexQp<T>, w: Vec<T>) -> Self {
        let pw = qp.p_times(&w);
        let grad: Vec<T> = pw.iter().zip(qp.c()).map(|(&a, &b)| a - b).collect();
        let f = T::lit(0.5) * dot(&w, &pw) - dot(qp.c(), &w);
        Self { w, grad, f }
    }
}

/// Entropic (exponentiated) gradient descent over the simplex.
///
/// Each step is `w_j ← w_j exp(−τ_k ∇f_j(w)) / Σ_l w_l exp(−τ_k ∇f_l(w))`
/// with the exact normaliser. The loop stops once the Frank–Wolfe gap falls
/// below `tol·(1 + |f|)`, or once both the objective change and the ℓ₁ move
/// of an accepted step fall below the tolerance. The lowest-objective iterate
/// seen is returned.
pub fn eg_solve<T: Scalar>(qp: &SimplexQp<T>, config: &EgConfig<T>) -> Result<QpSolution<T>> {
    let n = qp.n();
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let w0 = match &config.warm_start {
        Some(w) => {
            validate_interior(w, n)?;
            w.clone()
        }
        None => vec![T::one() / T::from_count(n); n],
    };
    if n == 1 {
        let it = Iterate::at(qp, vec![T::one()]);
        return Ok(QpSolution { w: it.w, objective: it.f, iters: 0, converged: true, gap: T::zero() });
    }

    let lf = config.lipschitz.unwrap_or_else(|| auto_lipschitz(qp));
    let log_term = (T::lit(2.0) * T::from_count(n).ln()).sqrt();
    let p_max = qp.p().iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let tau_cap = T::lit(1e12);
    let mut tau_adaptive = if p_max > T::zero() {
        T::one() / p_max
    } else {
        T::one() / lf.max(T::lit(1e-12))
    }
    .min(tau_cap);

    let mut cur = Iterate::at(qp, w0);
    let mut best_w = cur.w.clone();
    let mut best_f = cur.f;
    let mut converged = false;
    let mut iters = 0;

    for k in 1..=config.max_iters {
        if cur.grad.iter().any(|g| !g.is_finite()) || !cur.f.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: k - 1 });
        }
        let gap = fw_gap(&cur.w, &cur.grad);
        if gap <= config.tol * (T::one() + cur.f.abs()) {
            converged = true;
            break;
        }
        iters = k;

        let next = match config.step_schedule {
            StepSchedule::Theory => {
                if !(lf > T::zero()) {
                    return Err(Error::InvalidArgument("Lipschitz constant must be positive".into()));
                }
                let tau = log_term / (lf * T::from_count(k).sqrt());
                Iterate::at(qp, exp_step(&cur.w, &cur.grad, tau))
            }
            StepSchedule::Fixed(tau) => Iterate::at(qp, exp_step(&cur.w, &cur.grad, tau)),
            StepSchedule::Adaptive => {
                let mut accepted = None;
                for _ in 0..MAX_BACKTRACKS {
                    let w = exp_step(&cur.w, &cur.grad, tau_adaptive);
                    let cand = Iterate::at(qp, w);
                    let lin: T = cur.grad.iter().zip(&cand.w).zip(&cur.w).map(|((&g, &a), &b)| g * (a - b)).sum();
                    let bound = cur.f + lin + kl(&cand.w, &cur.w) / tau_adaptive;
                    let slack = T::lit(16.0) * T::epsilon() * (T::one() + cur.f.abs());
                    if cand.f <= bound + slack {
                        accepted = Some(cand);
                        break;
                    }
                    tau_adaptive = tau_adaptive * T::lit(0.5);
                }
                let cand = match accepted {
                    Some(c) => c,
                    // numerically flat: the step is below resolution
                    None => break,
                };
                tau_adaptive = (tau_adaptive * T::lit(1.5)).min(tau_cap);
                cand
            }
        };

        let moved: T = next.w.iter().zip(&cur.w).map(|(&a, &b)| (a - b).abs()).sum();
        let df = (next.f - cur.f).abs();
        let stalled = df < config.tol * (T::one() + next.f.abs()) && moved < config.tol;
        cur = next;
        if cur.f < best_f {
            best_f = cur.f;
            best_w.clone_from(&cur.w);
        }
        if stalled {
            converged = true;
            break;
        }
    }

    if cur.f < best_f {
        best_f = cur.f;
        best_w.clone_from(&cur.w);
    }
    let gap = qp.simplex_gap(&best_w);
    Ok(QpSolution { w: best_w, objective: best_f, iters, converged, gap })
}

fn exp_step<T: Scalar>(w: &[T], grad: &[T], tau: T) -> Vec<T> {
    let g_min = grad.iter().copied().fold(T::infinity(), T::min);
    let clamp = T::lit(EXPONENT_CLAMP);
    let mut next: Vec<T> = w
        .iter()
        .zip(grad)
        .map(|(&wj, &gj)| {
            let e = (-tau * (gj - g_min)).max(-clamp).min(clamp);
            wj * e.exp()
        })
        .collect();
    let z: T = next.iter().copied().sum();
    let floor = T::min_positive_value();
    for v in &mut next {
        *v = (*v / z).max(floor);
    }
    next
}

fn kl<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| if x > T::zero() { x * (x / y).ln() } else { T::zero() })
        .sum::<T>()
        .max(T::zero())
}

fn validate_interior<T: Scalar>(w: &[T], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::BadWarmStart(format!("length {} but n = {n}", w.len())));
    }
    if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::BadWarmStart("entries must be strictly positive".into()));
    }
    let sum: T = w.iter().copied().sum();
    let tol = T::lit(1e-12).max(T::lit(4.0) * T::from_count(n) * T::epsilon());
    if (sum - T::one()).abs() > tol {
        return Err(Error::BadWarmStart(format!("entries sum to {sum}")));
    }
    Ok(())
}
