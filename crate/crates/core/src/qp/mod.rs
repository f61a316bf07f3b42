//! Convex quadratic programs over the unit simplex:
//! `min_w ½ wᵀPw − cᵀw  s.t.  w ≥ 0, 1ᵀw = 1`.

mod eg;
mod reference;

pub use eg::{eg_solve, EgConfig, StepSchedule};
pub use reference::{project_simplex, reference_solve, reference_solve_halfspace, REFERENCE_MAX_ITERS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexQp<T> {
    n: usize,
    /// Row-major `n × n`.
    p: Vec<T>,
    c: Vec<T>,
}

impl<T: Scalar> SimplexQp<T> {
    pub fn new(p: Vec<T>, c: Vec<T>) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::InvalidArgument("quadratic program needs n >= 1".into()));
        }
        if p.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: p.len() });
        }
        if p.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("P and c must be finite".into()));
        }
        let scale = p.iter().fold(T::one(), |a, &v| a.max(v.abs()));
        let tol = T::lit(1e-10).max(T::lit(100.0) * T::epsilon()) * scale;
        for i in 0..n {
            for j in i + 1..n {
                if (p[i * n + j] - p[j * n + i]).abs() > tol {
                    return Err(Error::InvalidArgument(format!("P is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, p, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn p_at(&self, i: usize, j: usize) -> T {
        self.p[i * self.n + j]
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    /// Same problem with `P` and `c` multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            p: self.p.iter().map(|&v| v * s).collect(),
            c: self.c.iter().map(|&v| v * s).collect(),
        }
    }

    pub(crate) fn p_times(&self, w: &[T]) -> Vec<T> {
        self.p.chunks_exact(self.n).map(|row| dot(row, w)).collect()
    }

    /// `∇f(w) = Pw − c`.
    pub fn gradient(&self, w: &[T]) -> Vec<T> {
        self.p_times(w).iter().zip(&self.c).map(|(&a, &b)| a - b).collect()
    }

    pub fn objective(&self, w: &[T]) -> T {
        let pw = self.p_times(w);
        T::lit(0.5) * dot(w, &pw) - dot(&self.c, w)
    }

    /// Frank–Wolfe gap `wᵀ∇f − min_j ∇f_j`, an upper bound on `f(w) − f*`.
    pub fn simplex_gap(&self, w: &[T]) -> T {
        let g = self.gradient(w);
        fw_gap(w, &g)
    }
}

pub(crate) fn fw_gap<T: Scalar>(w: &[T], g: &[T]) -> T {
    let min = g.iter().copied().fold(T::infinity(), T::min);
    (dot(w, g) - min).max(T::zero())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution<T> {
    pub w: Vec<T>,
    pub objective: T,
    pub iters: usize,
    pub converged: bool,
    /// Optimality certificate at `w` (see [`SimplexQp::simplex_gap`]).
    pub gap: T,
}

/// Upper bound on `max_{w ∈ Δ} ‖∇f(w)‖_∞`: largest absolute row sum of `P`
/// plus `‖c‖_∞`.
pub fn auto_lipschitz<T: Scalar>(qp: &SimplexQp<T>) -> T {
    let row_max = qp
        .p
        .chunks_exact(qp.n)
        .map(|row| row.iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let c_max = qp.c.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    row_max + c_max
}
