use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{CascadeModel, Exit, NegativeSource, NodeTargets};
use crate::boost::{find_offset, BoostMode, BoosterConfig, ColumnGeneration, Offset, OffsetFlag, OffsetTarget, StepOutcome};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weak::WeakLearnerPool;

/// Weak learners added per node: 4, 4, 4, 8, 8, 16, 16, 32, 32, 64, then 64 onward.
pub fn default_exit_schedule() -> Vec<usize> {
    vec![4, 4, 4, 8, 8, 16, 16, 32, 32, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CascadeConfig<T> {
    pub booster: BoosterConfig<T>,
    pub targets: NodeTargets<T>,
    /// New weak learners per node; the last entry repeats.
    pub exit_schedule: Vec<usize>,
    pub max_nodes: usize,
    /// Nodes before this one (1-based) use the FisherBoost objective.
    pub lac_start_node: usize,
    /// Extra weak learners a node may add beyond its schedule to reach `d_min`.
    pub node_budget: usize,
    /// Size of the negative training set at every node.
    pub negatives_per_node: usize,
    /// Exits reuse every earlier weak learner. When false each exit only sees
    /// its own node's learners.
    pub multi_exit: bool,
    /// Record the bootstrapped negatives in the report.
    pub keep_bootstrap: bool,
}

impl<T: Scalar> Default for CascadeConfig<T> {
    fn default() -> Self {
        Self {
            booster: BoosterConfig { mode: BoostMode::LacBoost, ..BoosterConfig::default() },
            targets: NodeTargets::default(),
            exit_schedule: default_exit_schedule(),
            max_nodes: 20,
            lac_start_node: 3,
            node_budget: 64,
            negatives_per_node: 1000,
            multi_exit: true,
            keep_bootstrap: false,
        }
    }
}

impl<T: Scalar> CascadeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.booster.validate()?;
        self.targets.validate()?;
        if self.exit_schedule.is_empty() || self.exit_schedule.contains(&0) {
            return Err(Error::InvalidArgument("exit schedule entries must be >= 1".into()));
        }
        if self.max_nodes == 0 {
            return Err(Error::InvalidArgument("max_nodes must be >= 1".into()));
        }
        if self.negatives_per_node < 2 {
            return Err(Error::InvalidArgument("negatives_per_node must be >= 2".into()));
        }
        Ok(())
    }

    /// Scheduled new learners at node `t` (1-based).
    pub fn scheduled(&self, t: usize) -> usize {
        let s = &self.exit_schedule;
        s[(t - 1).min(s.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CascadeStop {
    TargetReached,
    MaxNodes,
    NegativesExhausted,
    WeakLearnersExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NodeReport<T> {
    pub node: usize,
    pub mode: BoostMode,
    pub n_total: usize,
    pub n_new: usize,
    pub negatives: usize,
    pub detection_rate: T,
    pub fp_rate: T,
    pub b: T,
    /// `d ≥ d_min` and `f ≤ f_max` hold on the node's training set.
    pub met_targets: bool,
    pub offset_flag: OffsetFlag,
}

/// Negatives added to the training set just before node `node` was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BootstrapBatch<T> {
    pub node: usize,
    pub rows: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CascadeReport<T> {
    pub nodes: Vec<NodeReport<T>>,
    pub detection_rate: T,
    pub fp_rate: T,
    pub stop: CascadeStop,
    pub negatives_consumed: usize,
    pub bootstrapped: Vec<BootstrapBatch<T>>,
}

#[derive(Debug, Clone)]
pub struct CascadeOutcome<T> {
    pub model: CascadeModel<T>,
    pub report: CascadeReport<T>,
}

/// Offset for a node: the largest `b` keeping detection at `d_min`, accepted
/// if its false-positive rate is within `f_max`. Otherwise the lowest `b`
/// meeting `f_max` (one step lower if needed for detection) is reported as
/// a miss.
fn node_offset<T: Scalar>(scores: &[T], labels: &[Label], targets: &NodeTargets<T>) -> Result<(Offset<T>, bool)> {
    let by_detection = find_offset(scores, labels, OffsetTarget::MinDetection(targets.d_min))?;
    if by_detection.flag == OffsetFlag::Ok && by_detection.fp_rate <= targets.f_max {
        return Ok((by_detection, true));
    }
    let by_fp = find_offset(scores, labels, OffsetTarget::MaxFp { max_fp: targets.f_max, min_detection: targets.d_min })?;
    let met = by_fp.detection_rate >= targets.d_min && by_fp.fp_rate <= targets.f_max;
    Ok((by_fp, met))
}

/// Trains a multi-exit cascade. Every node re-solves the coefficients over
/// all learners selected so far, sets its offset against `(d_min, f_max)`,
/// drops the negatives it rejects and bootstraps replacements from the
/// false positives of the cascade built so far.
pub fn train_cascade<T: Scalar>(
    positives: &[Vec<T>],
    negatives: &mut dyn NegativeSource<T>,
    pool: &mut WeakLearnerPool,
    config: &CascadeConfig<T>,
) -> Result<CascadeOutcome<T>> {
    config.validate()?;
    let d = pool.n_features();
    if positives.is_empty() {
        return Err(Error::InvalidDataset("no positive examples".into()));
    }
    if let Some(r) = positives.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: r.len() });
    }
    if negatives.n_features() != d {
        return Err(Error::DimensionMismatch { expected: d, got: negatives.n_features() });
    }
    let targets = config.targets;
    let mut neg = negatives.draw(config.negatives_per_node, &mut |_| true)?;
    let mut classifiers = Vec::new();
    let mut exits: Vec<Exit<T>> = Vec::new();
    let mut nodes = Vec::new();
    let mut bootstrapped = Vec::new();
    let mut model = CascadeModel::new(Vec::new(), Vec::new(), config.lac_start_node, targets)?;
    let (mut d_all, mut f_all) = (T::one(), T::one());

    let stop = loop {
        if f_all <= targets.f_target {
            break CascadeStop::TargetReached;
        }
        if exits.len() >= config.max_nodes {
            break CascadeStop::MaxNodes;
        }
        if neg.len() < 2 {
            break CascadeStop::NegativesExhausted;
        }
        let t = exits.len() + 1;
        let data = Dataset::from_classes(positives, &neg)?;
        let mut booster = config.booster.clone();
        if t < config.lac_start_node {
            booster.mode = BoostMode::FisherBoost;
        }
        let mode = booster.mode;
        let mut cg = ColumnGeneration::new(&data, booster)?;
        let first = if config.multi_exit {
            for &h in &classifiers {
                cg.push_column(h)?;
            }
            0
        } else {
            classifiers.len()
        };
        let inherited = cg.n();
        let want = config.scheduled(t);

        let mut exhausted = false;
        let mut picked: Option<(Offset<T>, bool)> = None;
        loop {
            match cg.step(pool, true)? {
                StepOutcome::Added { .. } => {}
                StepOutcome::Exhausted | StepOutcome::Optimal { .. } => exhausted = true,
            }
            let added = cg.n() - inherited;
            if added == 0 && exhausted {
                break;
            }
            if added >= want || exhausted {
                let scores = cg.scores()?;
                let (off, met) = node_offset(&scores, data.labels(), &targets)?;
                let done = met || exhausted || added >= want + config.node_budget;
                picked = Some((off, met));
                if done {
                    break;
                }
            }
        }
        let Some((offset, met)) = picked else {
            break CascadeStop::WeakLearnersExhausted;
        };
        if !met {
            warn!("node {t} missed its targets: d = {}, f = {}", offset.detection_rate, offset.fp_rate);
        }
        let n_new = cg.n() - inherited;
        classifiers.extend_from_slice(&cg.stumps()[inherited..]);
        exits.push(Exit { n_t: classifiers.len(), first, w: cg.weights().to_vec(), b: offset.b });
        d_all = d_all * offset.detection_rate;
        f_all = f_all * offset.fp_rate;
        info!(
            "node {t}: {} learners ({} new), d = {}, f = {}, F = {}",
            classifiers.len(),
            n_new,
            offset.detection_rate,
            offset.fp_rate,
            f_all
        );
        nodes.push(NodeReport {
            node: t,
            mode,
            n_total: classifiers.len(),
            n_new,
            negatives: neg.len(),
            detection_rate: offset.detection_rate,
            fp_rate: offset.fp_rate,
            b: offset.b,
            met_targets: met,
            offset_flag: offset.flag,
        });
        model = CascadeModel::new(classifiers.clone(), exits.clone(), config.lac_start_node, targets)?;
        if exhausted {
            break CascadeStop::WeakLearnersExhausted;
        }

        neg.retain(|x| model.accepts(x));
        if f_all <= targets.f_target {
            break CascadeStop::TargetReached;
        }
        let need = config.negatives_per_node.saturating_sub(neg.len());
        let fresh = negatives.draw(need, &mut |x| model.accepts(x))?;
        if config.keep_bootstrap {
            bootstrapped.push(BootstrapBatch { node: t + 1, rows: fresh.clone() });
        }
        neg.extend(fresh);
    };

    let report = CascadeReport {
        nodes,
        detection_rate: d_all,
        fp_rate: f_all,
        stop,
        negatives_consumed: negatives.consumed(),
        bootstrapped,
    };
    Ok(CascadeOutcome { model, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{Background, SyntheticNegatives};

    #[test]
    fn separable_data_needs_one_node() {
        let positives: Vec<Vec<f64>> = (0..20).map(|i| vec![5.0 + i as f64 * 0.1]).collect();
        let mut negs = SyntheticNegatives::new(Background::Uniform { low: vec![-1.0], high: vec![1.0] }, 9).unwrap();
        let mut pool = WeakLearnerPool::exhaustive(1);
        let cfg = CascadeConfig { exit_schedule: vec![1], negatives_per_node: 50, ..CascadeConfig::default() };
        let out = train_cascade(&positives, &mut negs, &mut pool, &cfg).unwrap();
        assert_eq!(out.model.n_exits(), 1);
        assert_eq!(out.model.classifiers.len(), 1);
        assert_eq!(out.report.stop, CascadeStop::TargetReached);
        assert_eq!(out.report.fp_rate, 0.0);
        assert_eq!(out.report.detection_rate, 1.0);
    }

    #[test]
    fn schedule_repeats_last_entry() {
        let cfg = CascadeConfig::<f64> { exit_schedule: vec![2, 5], ..CascadeConfig::default() };
        assert_eq!((cfg.scheduled(1), cfg.scheduled(2), cfg.scheduled(9)), (2, 5, 5));
    }
}
