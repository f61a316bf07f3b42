//! Accelerated projected-gradient solver with exact Euclidean projection.
//! Slow but simple; used as ground truth in tests and as the fallback when an
//! extra half-space constraint is active.

use super::{fw_gap, QpSolution, SimplexQp};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

/// Euclidean projection onto the unit simplex (sort-and-threshold).
pub fn project_simplex<T: Scalar>(z: &[T]) -> Vec<T> {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (k, &v) in sorted.iter().enumerate() {
        cumsum = cumsum + v;
        let t = (cumsum - T::one()) / T::from_count(k + 1);
        if v - t > T::zero() {
            theta = t;
        } else {
            break;
        }
    }
    z.iter().map(|&v| (v - theta).max(T::zero())).collect()
}

/// Projection onto `{w ∈ Δ : aᵀw ≥ 0}` by bisection on the multiplier of the
/// half-space: `w(λ) = Π_Δ(z + λa)` with `aᵀw(λ)` non-decreasing in `λ`.
fn project_simplex_halfspace<T: Scalar>(z: &[T], a: &[T]) -> Vec<T> {
    let w0 = project_simplex(z);
    if dot(a, &w0) >= T::zero() {
        return w0;
    }
    let shifted = |lam: T| -> Vec<T> {
        let zz: Vec<T> = z.iter().zip(a).map(|(&x, &y)| x + lam * y).collect();
        project_simplex(&zz)
    };
    let mut hi = T::one();
    while dot(a, &shifted(hi)) < T::zero() {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if dot(a, &shifted(mid)) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    shifted(hi)
}

/// Frank–Wolfe gap over `Δ ∩ {aᵀw ≥ 0}`. The feasible vertices are simplex
/// vertices with `a_j ≥ 0` and edge points where `aᵀv = 0`.
fn halfspace_gap<T: Scalar>(w: &[T], g: &[T], a: &[T]) -> T {
    let n = w.len();
    let mut best = T::infinity();
    for j in 0..n {
        if a[j] >= T::zero() {
            best = best.min(g[j]);
        }
    }
    for i in 0..n {
        if a[i] >= T::zero() {
            continue;
        }
        for j in 0..n {
            if a[j] <= T::zero() {
                continue;
            }
            let d = a[j] - a[i];
            let v = (a[j] * g[i] - a[i] * g[j]) / d;
            best = best.min(v);
        }
    }
    (dot(w, g) - best).max(T::zero())
}

fn solve<T: Scalar>(qp: &SimplexQp<T>, tol: T, halfspace: Option<&[T]>) -> Result<QpSolution<T>> {
    let n = qp.n();
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(a) = halfspace {
        if a.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len() });
        }
        if a.iter().all(|&v| v < T::zero()) {
            return Err(Error::InvalidArgument("half-space does not meet the simplex".into()));
        }
    }
    let project = |z: &[T]| match halfspace {
        Some(a) => project_simplex_halfspace(z, a),
        None => project_simplex(z),
    };
    let gap_at = |w: &[T], g: &[T]| match halfspace {
        Some(a) => halfspace_gap(w, g, a),
        None => fw_gap(w, g),
    };

    // Gershgorin bound on the largest eigenvalue of P
    let lip = qp
        .p()
        .chunks_exact(n)
        .map(|row| row.iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let step = if lip > T::zero() { T::one() / lip } else { T::one() };

    let mut x = project(&vec![T::one() / T::from_count(n); n]);
    let mut fx = qp.objective(&x);
    let mut y = x.clone();
    let mut t = T::one();
    let mut residual = T::infinity();

    for k in 0..REFERENCE_MAX_ITERS {
        let gx = qp.gradient(&x);
        residual = gap_at(&x, &gx);
        if residual <= tol * (T::one() + fx.abs()) {
            return Ok(QpSolution { w: x, objective: fx, iters: k, converged: true, gap: residual });
        }
        let gy = qp.gradient(&y);
        let z: Vec<T> = y.iter().zip(&gy).map(|(&v, &g)| v - step * g).collect();
        let x_new = project(&z);
        let f_new = qp.objective(&x_new);
        if f_new > fx {
            // function-value restart: drop momentum and take a plain step from x
            t = T::one();
            y = x.clone();
            continue;
        }
        let t_new = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5);
        let beta = (t - T::one()) / t_new;
        y = x_new.iter().zip(&x).map(|(&a, &b)| a + beta * (a - b)).collect();
        x = x_new;
        fx = f_new;
        t = t_new;
    }
    Err(Error::NoConvergence { iterations: REFERENCE_MAX_ITERS, residual: residual.as_f64() })
}

/// Solves to Frank–Wolfe gap `≤ tol·(1 + |f|)` or fails.
pub fn reference_solve<T: Scalar>(qp: &SimplexQp<T>, tol: T) -> Result<QpSolution<T>> {
    solve(qp, tol, None)
}

/// As [`reference_solve`] with the extra constraint `aᵀw ≥ 0`.
pub fn reference_solve_halfspace<T: Scalar>(qp: &SimplexQp<T>, a: &[T], tol: T) -> Result<QpSolution<T>> {
    solve(qp, tol, Some(a))
}
