use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{find_offset, BoosterConfig, OffsetFlag, StrongClassifier};
use crate::data::{build_q_matrix, ClassMeanVectors, Dataset, MarginMatrix, QMatrix};
use crate::error::{Error, Result};
use crate::qp::{eg_solve, reference_solve_halfspace, QpSolution, SimplexQp};
use crate::scalar::{dot, Scalar};
use crate::weak::{best_stump, DecisionStump, WeakLearnerPool};

/// Example weights `u` and the largest edge `r` of the selected columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DualState<T> {
    pub u: Vec<T>,
    pub r: T,
}

/// `u = θe − Qρ` and `r = max_j uᵀA_j` (`−∞` while `A` has no columns).
///
/// `u` is returned unclamped: it multiplies the equality `ρ = Aw` and is
/// therefore free in sign.
pub fn recover_dual<T: Scalar>(
    q: &QMatrix<T>,
    rho: &[T],
    theta: T,
    e: &ClassMeanVectors<T>,
    a: &MarginMatrix,
) -> Result<DualState<T>> {
    if e.e.len() != rho.len() {
        return Err(Error::DimensionMismatch { expected: e.e.len(), got: rho.len() });
    }
    let qrho = q.apply(rho)?;
    let u: Vec<T> = qrho.iter().zip(&e.e).map(|(&qr, &ei)| theta * ei - qr).collect();
    let r = max_edge(a, &u)?;
    Ok(DualState { u, r })
}

fn max_edge<T: Scalar>(a: &MarginMatrix, u: &[T]) -> Result<T> {
    Ok(a.edges(u)?.into_iter().fold(T::neg_infinity(), T::max))
}

/// `½ρᵀQρ − θeᵀρ`.
pub fn primal_objective<T: Scalar>(q: &QMatrix<T>, rho: &[T], theta: T, e: &ClassMeanVectors<T>) -> Result<T> {
    Ok(T::lit(0.5) * q.bilinear(rho, rho)? - theta * dot(&e.e, rho))
}

/// `−r − ½(u − θe)ᵀ(Q + δI)⁻¹(u − θe)`.
pub fn dual_objective<T: Scalar>(q: &QMatrix<T>, dual: &DualState<T>, theta: T, e: &ClassMeanVectors<T>) -> Result<T> {
    let v: Vec<T> = dual.u.iter().zip(&e.e).map(|(&u, &ei)| u - theta * ei).collect();
    let z = q.solve_regularized(&v)?;
    Ok(-dual.r - T::lit(0.5) * dot(&v, &z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// No candidate violates dual feasibility by more than `epsilon`.
    Converged,
    MaxClassifiers,
    /// The pool produced nothing with a usable edge.
    PoolExhausted,
}

/// Result of one column-generation step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<T> {
    Added { stump: DecisionStump<T>, edge: T, objective: T, eg_iters: usize },
    Optimal { edge: T },
    Exhausted,
}

/// State of the restricted problem `min_{w ∈ Δ} ½wᵀAᵀQAw − θeᵀAw` as
/// columns are appended.
#[derive(Debug, Clone)]
pub struct ColumnGeneration<'a, T> {
    data: &'a Dataset<T>,
    config: BoosterConfig<T>,
    q: QMatrix<T>,
    e: ClassMeanVectors<T>,
    a: MarginMatrix,
    stumps: Vec<DecisionStump<T>>,
    /// Row-major `AᵀQA`.
    p: Vec<T>,
    c: Vec<T>,
    w: Vec<T>,
    dual: DualState<T>,
    objective: Option<T>,
}

impl<'a, T: Scalar> ColumnGeneration<'a, T> {
    pub fn new(data: &'a Dataset<T>, config: BoosterConfig<T>) -> Result<Self> {
        config.validate()?;
        let mut q = build_q_matrix(data.m1(), data.m2(), config.mode.q_mode(), config.exact_q)?;
        q.delta = config.delta;
        let e = data.class_means();
        let u = e.e.iter().map(|&v| config.theta * v).collect();
        Ok(Self {
            data,
            q,
            e,
            a: MarginMatrix::empty(data.m()),
            stumps: Vec::new(),
            p: Vec::new(),
            c: Vec::new(),
            w: Vec::new(),
            dual: DualState { u, r: T::neg_infinity() },
            objective: None,
            config,
        })
    }

    pub fn n(&self) -> usize {
        self.stumps.len()
    }

    pub fn config(&self) -> &BoosterConfig<T> {
        &self.config
    }

    pub fn stumps(&self) -> &[DecisionStump<T>] {
        &self.stumps
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn dual(&self) -> &DualState<T> {
        &self.dual
    }

    pub fn objective(&self) -> Option<T> {
        self.objective
    }

    pub fn margin_matrix(&self) -> &MarginMatrix {
        &self.a
    }

    pub fn q(&self) -> &QMatrix<T> {
        &self.q
    }

    pub fn class_means(&self) -> &ClassMeanVectors<T> {
        &self.e
    }

    /// The restricted problem over the current columns.
    pub fn qp(&self) -> Result<SimplexQp<T>> {
        SimplexQp::new(self.p.clone(), self.c.clone())
    }

    /// Appends `h` as a new column of `A` and extends `P` and `c`. Does not re-solve.
    pub fn push_column(&mut self, stump: DecisionStump<T>) -> Result<()> {
        if stump.feature_index >= self.data.n_features() {
            return Err(Error::OutOfBounds(format!(
                "stump feature {} of {}",
                stump.feature_index,
                self.data.n_features()
            )));
        }
        let col = MarginMatrix::column_for(self.data, &stump);
        let n = self.n();
        let k = n + 1;
        let mut p = vec![T::zero(); k * k];
        for i in 0..n {
            p[i * k..i * k + n].copy_from_slice(&self.p[i * n..i * n + n]);
            let v = self.q.bilinear_signs(self.a.column(i), &col);
            p[i * k + n] = v;
            p[n * k + i] = v;
        }
        p[n * k + n] = self.q.bilinear_signs(&col, &col);
        self.p = p;
        self.c.push(self.config.theta * self.e.dot_column(&col));
        self.a.push_column(col)?;
        self.stumps.push(stump);
        Ok(())
    }

    /// Previous weights rescaled by `n_old / n`, each new column at `1 / n`.
    fn warm_start(&self) -> Option<Vec<T>> {
        let n = self.n();
        let n_old = self.w.len();
        if n_old == 0 || n_old > n {
            return None;
        }
        let scale = T::from_count(n_old) / T::from_count(n);
        let fresh = T::one() / T::from_count(n);
        let mut w: Vec<T> = self.w.iter().map(|&v| v * scale).chain((n_old..n).map(|_| fresh)).collect();
        if w.iter().any(|&v| !(v > T::zero())) {
            let kappa = T::lit(1e-9);
            w.iter_mut().for_each(|v| *v = (T::one() - kappa) * v.max(T::zero()) + kappa / T::from_count(n));
        }
        let s: T = w.iter().copied().sum();
        w.iter_mut().for_each(|v| *v = *v / s);
        Some(w)
    }

    /// Re-solves the restricted problem and recovers `(u, r)`.
    pub fn solve(&mut self) -> Result<QpSolution<T>> {
        let n = self.n();
        if n == 0 {
            return Err(Error::NoWeakClassifiers);
        }
        let qp = self.qp()?;
        let mut eg = self.config.eg.clone();
        eg.warm_start = self.warm_start();
        let mut sol = eg_solve(&qp, &eg)?;

        // The previous optimum padded with zeros stays feasible, so the
        // restricted objective never has to go up.
        if let Some(prev) = self.objective {
            if sol.objective > prev && self.w.len() < n {
                let mut padded = self.w.clone();
                padded.resize(n, T::zero());
                let f = qp.objective(&padded);
                if f < sol.objective {
                    debug!("keeping previous weights: {} < {}", f, sol.objective);
                    let gap = qp.simplex_gap(&padded);
                    sol = QpSolution { w: padded, objective: f, iters: sol.iters, converged: sol.converged, gap };
                }
            }
        }

        let mut rho = self.a.margins(&sol.w)?;
        let mut nu = T::zero();
        if self.config.nonneg_mean_gap && dot(&self.e.e, &rho) < T::zero() {
            let gap_dir: Vec<T> = (0..n).map(|j| self.e.dot_column(self.a.column(j))).collect();
            sol = reference_solve_halfspace(&qp, &gap_dir, self.config.eg.tol)?;
            rho = self.a.margins(&sol.w)?;
            nu = halfspace_multiplier(&qp.gradient(&sol.w), &gap_dir, &sol.w);
            debug!("mean-gap constraint active, multiplier {nu}");
        }

        let mut dual = recover_dual(&self.q, &rho, self.config.theta + nu, &self.e, &self.a)?;
        if self.config.clamp_dual {
            dual.u.iter_mut().for_each(|v| *v = v.max(T::zero()));
            dual.r = max_edge(&self.a, &dual.u)?;
        }
        self.dual = dual;
        self.w.clone_from(&sol.w);
        self.objective = Some(sol.objective);
        Ok(sol)
    }

    /// Finds the best weak learner under the current `u` and, unless it
    /// already satisfies `edge < r + ε`, appends it and re-solves. With
    /// `force` the candidate is appended regardless of the test.
    pub fn step(&mut self, pool: &mut WeakLearnerPool, force: bool) -> Result<StepOutcome<T>> {
        let choice = match best_stump(pool, self.data, &self.dual.u) {
            Ok(c) => c,
            Err(Error::ZeroWeights) => return Ok(StepOutcome::Exhausted),
            Err(e) => return Err(e),
        };
        if self.n() == 0 && !(choice.edge > T::zero()) {
            return Ok(StepOutcome::Exhausted);
        }
        if self.n() > 0 && choice.edge < self.dual.r + self.config.epsilon && !force {
            return Ok(StepOutcome::Optimal { edge: choice.edge });
        }
        self.push_column(choice.stump)?;
        let sol = self.solve()?;
        Ok(StepOutcome::Added { stump: choice.stump, edge: choice.edge, objective: sol.objective, eg_iters: sol.iters })
    }

    /// `Σ_j w_j h_j(x_i)` for every training row.
    pub fn scores(&self) -> Result<Vec<T>> {
        let rho = self.a.margins(&self.w)?;
        Ok(rho.iter().enumerate().map(|(i, &r)| r * self.data.label(i).as_scalar::<T>()).collect())
    }

    pub fn primal_objective(&self) -> Result<T> {
        let rho = self.a.margins(&self.w)?;
        primal_objective(&self.q, &rho, self.config.theta, &self.e)
    }

    pub fn dual_objective(&self) -> Result<T> {
        dual_objective(&self.q, &self.dual, self.config.theta, &self.e)
    }

    pub fn classifier(&self, b: T) -> Result<StrongClassifier<T>> {
        StrongClassifier::new(self.stumps.clone(), self.w.clone(), b)
    }
}

/// Least-squares fit of `g_j = λ − ν a_j` over the support of `w`, clipped to `ν ≥ 0`.
fn halfspace_multiplier<T: Scalar>(g: &[T], a: &[T], w: &[T]) -> T {
    let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] > T::lit(1e-9)).collect();
    if support.len() < 2 {
        return T::zero();
    }
    let k = T::from_count(support.len());
    let ma = support.iter().map(|&j| a[j]).sum::<T>() / k;
    let mg = support.iter().map(|&j| g[j]).sum::<T>() / k;
    let saa: T = support.iter().map(|&j| (a[j] - ma) * (a[j] - ma)).sum();
    if !(saa > T::zero()) {
        return T::zero();
    }
    let sag: T = support.iter().map(|&j| (a[j] - ma) * (g[j] - mg)).sum();
    (-sag / saa).max(T::zero())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainReport<T> {
    pub stop_reason: StopReason,
    /// Set when the pool ran dry before convergence.
    pub truncated: bool,
    /// Restricted objective after each column was added.
    pub objective_history: Vec<T>,
    pub eg_iterations: Vec<usize>,
    pub edges: Vec<T>,
    pub primal_objective: T,
    pub dual_objective: T,
    pub r: T,
    pub offset_flag: OffsetFlag,
    pub detection_rate: T,
    pub fp_rate: T,
    pub training_error: T,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub classifier: StrongClassifier<T>,
    pub dual: DualState<T>,
    pub report: TrainReport<T>,
}

/// Column generation: add the most violated weak learner, re-solve the
/// restricted problem with warm-started EG, repeat until no candidate beats
/// `r + ε` or `n_max` learners are in use. The offset is then chosen by
/// `config.offset`.
pub fn train<T: Scalar>(
    data: &Dataset<T>,
    pool: &mut WeakLearnerPool,
    config: &BoosterConfig<T>,
) -> Result<TrainOutcome<T>> {
    let mut cg = ColumnGeneration::new(data, config.clone())?;
    let mut objective_history = Vec::new();
    let mut eg_iterations = Vec::new();
    let mut edges = Vec::new();
    let stop_reason = loop {
        if cg.n() >= config.n_max {
            break StopReason::MaxClassifiers;
        }
        match cg.step(pool, false)? {
            StepOutcome::Added { edge, objective, eg_iters, .. } => {
                if let Some(&prev) = objective_history.last() {
                    if objective > prev {
                        warn!("restricted objective rose from {prev} to {objective}");
                    }
                }
                objective_history.push(objective);
                eg_iterations.push(eg_iters);
                edges.push(edge);
            }
            StepOutcome::Optimal { .. } => break StopReason::Converged,
            StepOutcome::Exhausted => break StopReason::PoolExhausted,
        }
    };
    if cg.n() == 0 {
        return Err(Error::NoWeakClassifiers);
    }
    let scores = cg.scores()?;
    let offset = find_offset(&scores, data.labels(), config.offset)?;
    let classifier = cg.classifier(offset.b)?;
    let report = TrainReport {
        stop_reason,
        truncated: stop_reason == StopReason::PoolExhausted,
        objective_history,
        eg_iterations,
        edges,
        primal_objective: cg.primal_objective()?,
        dual_objective: cg.dual_objective()?,
        r: cg.dual().r,
        offset_flag: offset.flag,
        detection_rate: offset.detection_rate,
        fp_rate: offset.fp_rate,
        training_error: classifier.training_error(data),
    };
    debug!(
        "{} stopped ({:?}) with {} weak learners",
        config.mode.name(),
        stop_reason,
        classifier.len()
    );
    Ok(TrainOutcome { classifier, dual: cg.dual().clone(), report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, QMode};

    fn four_points() -> Dataset<f64> {
        Dataset::from_rows(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![Label::Negative, Label::Negative, Label::Positive, Label::Positive],
        )
        .unwrap()
    }

    #[test]
    fn dual_at_zero_margins_is_theta_e() {
        let q = build_q_matrix::<f64>(2, 3, QMode::Lda, true).unwrap();
        let e = ClassMeanVectors::new(2, 3);
        let a = MarginMatrix::empty(5);
        let d = recover_dual(&q, &[0.0; 5], 0.1, &e, &a).unwrap();
        assert!((d.u[0] - 0.05).abs() < 1e-15 && (d.u[4] - 0.1 / 3.0).abs() < 1e-15);
        assert_eq!(d.r, f64::NEG_INFINITY);
    }

    #[test]
    fn lac_constant_positive_margins_leave_theta_e() {
        let q = build_q_matrix::<f64>(2, 2, QMode::Lac, true).unwrap();
        let e = ClassMeanVectors::new(2, 2);
        let mut a = MarginMatrix::empty(4);
        a.push_column(vec![1, 1, -1, 1]).unwrap();
        let d = recover_dual(&q, &[0.7, 0.7, -0.3, 0.9], 0.2, &e, &a).unwrap();
        assert!((d.u[0] - 0.1).abs() < 1e-15 && (d.u[1] - 0.1).abs() < 1e-15);
        // negative block is untouched in LAC mode
        assert!((d.u[2] - 0.1).abs() < 1e-15);
        assert!((d.r - 0.2).abs() < 1e-15);
    }

    #[test]
    fn separable_points_need_one_stump() {
        let data = four_points();
        let mut pool = WeakLearnerPool::exhaustive(1);
        let cfg = BoosterConfig { n_max: 2, ..BoosterConfig::default() };
        let out = train(&data, &mut pool, &cfg).unwrap();
        assert_eq!(out.report.training_error, 0.0);
        assert!(out.classifier.len() <= 2);
    }

    #[test]
    fn duplicate_feature_pool_stops_on_epsilon_test() {
        // three copies of one separating feature: every best candidate is the same split
        let rows: Vec<Vec<f64>> = [0.1, 0.35, 0.2, 0.8, 0.9, 0.4].iter().map(|&v| vec![v, v, v]).collect();
        let labels = [1, 1, 1, -1, -1, -1].iter().map(|&s| Label::from_sign(s).unwrap()).collect();
        let data = Dataset::from_rows(rows, labels).unwrap();
        let mut pool = WeakLearnerPool::exhaustive(3);
        let out = train(&data, &mut pool, &BoosterConfig::default()).unwrap();
        assert_eq!(out.report.stop_reason, StopReason::Converged);
        assert_eq!(out.classifier.len(), 1);
    }

    #[test]
    fn primal_and_dual_meet() {
        let data = four_points();
        let mut pool = WeakLearnerPool::exhaustive(1);
        let out = train(&data, &mut pool, &BoosterConfig::default()).unwrap();
        assert!((out.report.primal_objective - out.report.dual_objective).abs() < 1e-6);
    }
}
