use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lacboost::boost::{BoostMode, OffsetTarget};
use lacboost::data::DEFAULT_DELTA;
use lacboost::qp::StepSchedule;
use lacboost::toy::ToyKind;
use lacboost::{BoosterConfig, CascadeConfig, EgConfig, NodeTargets};
use serde::{Deserialize, Serialize};

use crate::error::usage;

#[derive(Parser, Debug)]
#[command(name = "lacboost", version, about = "Totally-corrective asymmetric boosting and cascade training")]
pub struct Cli {
    /// JSON file whose keys (the long flag names) override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded two-dimensional toy dataset as CSV.
    GenToy(GenToyArgs),
    /// Train a single strong classifier.
    Train(TrainArgs),
    /// Train a multi-exit cascade.
    TrainCascade(TrainCascadeArgs),
    /// Evaluate a saved model.
    Eval(EvalArgs),
    /// ROC of a saved model by sweeping the final offset.
    Roc(RocArgs),
    /// Solve a quadratic program over the simplex.
    SolveQp(SolveQpArgs),
    /// Normality and covariance diagnostics plus worst-case accuracy.
    Analyze(AnalyzeArgs),
    /// Pick the regularisation parameter from a grid by short cascade runs.
    ThetaSweep(ThetaSweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenToy(_) => "gen-toy",
            Command::Train(_) => "train",
            Command::TrainCascade(_) => "train-cascade",
            Command::Eval(_) => "eval",
            Command::Roc(_) => "roc",
            Command::SolveQp(_) => "solve-qp",
            Command::Analyze(_) => "analyze",
            Command::ThetaSweep(_) => "theta-sweep",
        }
    }
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> anyhow::Result<&'a T> {
    v.as_ref().ok_or_else(|| usage(format!("--{flag} is required")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyArg {
    Gaussians2d,
    Separable,
    Xor,
}

impl From<ToyArg> for ToyKind {
    fn from(k: ToyArg) -> Self {
        match k {
            ToyArg::Gaussians2d => ToyKind::Gaussians2d,
            ToyArg::Separable => ToyKind::Separable,
            ToyArg::Xor => ToyKind::Xor,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenToyArgs {
    #[arg(long, value_enum, default_value_t = ToyArg::Gaussians2d)]
    pub kind: ToyArg,
    #[arg(long, default_value_t = 100)]
    pub n_pos: usize,
    #[arg(long, default_value_t = 400)]
    pub n_neg: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenToyArgs {
    pub fn out(&self) -> anyhow::Result<&PathBuf> {
        required(&self.out, "out")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepArg {
    Adaptive,
    Theory,
    Fixed,
}

/// Knobs shared by every command that runs column generation.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BoostArgs {
    #[arg(long, default_value_t = 1.0 / 20.0)]
    pub theta: f64,
    /// Column generation stops once no weak learner beats `r + epsilon`.
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub n_max: usize,
    /// Replace the exact within-class blocks by the scaled identity.
    #[arg(long)]
    pub approx_q: bool,
    #[arg(long)]
    pub nonneg_mean_gap: bool,
    #[arg(long)]
    pub clamp_dual: bool,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub eg_max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub eg_tol: f64,
    #[arg(long, value_enum, default_value_t = StepArg::Adaptive)]
    pub eg_step: StepArg,
    /// Step size for `--eg-step fixed`.
    #[arg(long)]
    pub eg_step_size: Option<f64>,
    /// Fraction of feature columns scanned per weak-learner search.
    #[arg(long, default_value_t = 1.0)]
    pub pool_fraction: f64,
}

pub fn step_schedule(step: StepArg, size: Option<f64>) -> anyhow::Result<StepSchedule<f64>> {
    Ok(match step {
        StepArg::Adaptive => StepSchedule::Adaptive,
        StepArg::Theory => StepSchedule::Theory,
        StepArg::Fixed => StepSchedule::Fixed(size.ok_or_else(|| usage("--eg-step fixed needs --eg-step-size"))?),
    })
}

impl BoostArgs {
    pub fn booster(&self, mode: BoostMode, offset: OffsetTarget<f64>) -> anyhow::Result<BoosterConfig> {
        let cfg = BoosterConfig {
            theta: self.theta,
            epsilon: self.epsilon,
            n_max: self.n_max,
            mode,
            exact_q: !self.approx_q,
            nonneg_mean_gap: self.nonneg_mean_gap,
            clamp_dual: self.clamp_dual,
            delta: self.delta,
            eg: EgConfig {
                max_iters: self.eg_max_iters,
                tol: self.eg_tol,
                step_schedule: step_schedule(self.eg_step, self.eg_step_size)?,
                ..EgConfig::default()
            },
            offset,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Lacboost,
    Fisherboost,
    Adaboost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CascadeModeArg {
    Lacboost,
    Fisherboost,
}

impl From<CascadeModeArg> for BoostMode {
    fn from(m: CascadeModeArg) -> Self {
        match m {
            CascadeModeArg::Lacboost => BoostMode::LacBoost,
            CascadeModeArg::Fisherboost => BoostMode::FisherBoost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetArg {
    Balanced,
    MinError,
    MinDetection,
    MaxFp,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Training CSV with a `label` column of +1/-1.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Lacboost)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = OffsetArg::Balanced)]
    pub offset: OffsetArg,
    /// Detection goal for `min-detection` and `max-fp` offsets.
    #[arg(long, default_value_t = 0.997)]
    pub d_min: f64,
    /// False-positive goal for the `max-fp` offset.
    #[arg(long, default_value_t = 0.5)]
    pub f_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

impl TrainArgs {
    pub fn data(&self) -> anyhow::Result<&PathBuf> {
        required(&self.data, "data")
    }

    pub fn out(&self) -> anyhow::Result<&PathBuf> {
        required(&self.out, "out")
    }

    pub fn offset_target(&self) -> OffsetTarget<f64> {
        match self.offset {
            OffsetArg::Balanced => OffsetTarget::Balanced,
            OffsetArg::MinError => OffsetTarget::MinError,
            OffsetArg::MinDetection => OffsetTarget::MinDetection(self.d_min),
            OffsetArg::MaxFp => OffsetTarget::MaxFp { max_fp: self.f_max, min_detection: self.d_min },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativesArg {
    /// The CSV's own negatives, scanned once in file order.
    Data,
    /// Gaussian with the per-feature mean and spread of the CSV negatives.
    Gaussian,
    /// Uniform over the per-feature range of the CSV negatives.
    Uniform,
}

/// Cascade knobs shared by `train-cascade` and `theta-sweep`.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CascadeArgs {
    #[arg(long, value_enum, default_value_t = CascadeModeArg::Lacboost)]
    pub mode: CascadeModeArg,
    #[arg(long, default_value_t = 0.997)]
    pub d_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub f_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub f_target: f64,
    /// New weak learners per node; the last entry repeats.
    #[arg(long, value_delimiter = ',', default_value = "4,4,4,8,8,16,16,32,32,64")]
    pub exit_schedule: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub max_nodes: usize,
    /// Nodes before this one (1-based) use the FisherBoost objective.
    #[arg(long, default_value_t = 3)]
    pub lac_start_node: usize,
    /// Extra learners a node may add to reach its targets.
    #[arg(long, default_value_t = 64)]
    pub node_budget: usize,
    #[arg(long, default_value_t = 1000)]
    pub negatives_per_node: usize,
    /// Every exit only sees its own node's learners.
    #[arg(long)]
    pub single_exit: bool,
    #[arg(long, value_enum, default_value_t = NegativesArg::Data)]
    pub negatives: NegativesArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub boost: BoostArgs,
}

impl CascadeArgs {
    pub fn cascade_config(&self, theta: f64) -> anyhow::Result<CascadeConfig> {
        let mut booster = self.boost.booster(self.mode.into(), OffsetTarget::Balanced)?;
        booster.theta = theta;
        let cfg = CascadeConfig {
            booster,
            targets: NodeTargets::new(self.d_min, self.f_max, self.f_target)?,
            exit_schedule: self.exit_schedule.clone(),
            max_nodes: self.max_nodes,
            lac_start_node: self.lac_start_node,
            node_budget: self.node_budget,
            negatives_per_node: self.negatives_per_node,
            multi_exit: !self.single_exit,
            keep_bootstrap: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainCascadeArgs {
    /// Training CSV; positives are fixed, negatives feed bootstrapping.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory of positive windows (PGM or CSV grids), instead of `--data`.
    #[arg(long)]
    pub positives: Option<PathBuf>,
    /// Directory of background images negatives are cropped from.
    #[arg(long)]
    pub backgrounds: Option<PathBuf>,
    /// Random subset of the Haar features to use; 0 keeps all of them.
    #[arg(long, default_value_t = 0)]
    pub haar_features: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-node CSV report.
    #[arg(long)]
    pub node_report: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub cascade: CascadeArgs,
}

impl TrainCascadeArgs {
    pub fn out(&self) -> anyhow::Result<&PathBuf> {
        required(&self.out, "out")
    }
}

/// Labelled evaluation data: a CSV or a directory with `pos/` and `neg/` windows.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub windows: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Per-node metrics CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    pub fn model(&self) -> anyhow::Result<&PathBuf> {
        required(&self.model, "model")
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RocArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Offsets of the final exit to evaluate; defaults to every breakpoint.
    #[arg(long, value_delimiter = ',')]
    pub offsets: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RocArgs {
    pub fn model(&self) -> anyhow::Result<&PathBuf> {
        required(&self.model, "model")
    }

    pub fn out(&self) -> anyhow::Result<&PathBuf> {
        required(&self.out, "out")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Eg,
    Reference,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolveQpArgs {
    /// JSON with `P` (rows or flat row-major) and `c`.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverArg::Eg)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = StepArg::Adaptive)]
    pub step: StepArg,
    #[arg(long)]
    pub step_size: Option<f64>,
}

impl SolveQpArgs {
    pub fn problem(&self) -> anyhow::Result<&PathBuf> {
        required(&self.problem, "problem")
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Exit to analyse (1-based); defaults to the last one.
    #[arg(long)]
    pub exit: Option<usize>,
    /// CSV of normal-plot pairs for the positive scores.
    #[arg(long)]
    pub qq_out: Option<PathBuf>,
    /// CSV summary of the weak-output covariance on negatives.
    #[arg(long)]
    pub diag_out: Option<PathBuf>,
}

impl AnalyzeArgs {
    pub fn model(&self) -> anyhow::Result<&PathBuf> {
        required(&self.model, "model")
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ThetaSweepArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Candidate values; defaults to 1/10, 1/12, 1/15, 1/20, 1/25, 1/30, 1/40, 1/50.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Nodes per trial cascade.
    #[arg(long, default_value_t = 5)]
    pub nodes: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub cascade: CascadeArgs,
}

impl ThetaSweepArgs {
    pub fn data(&self) -> anyhow::Result<&PathBuf> {
        required(&self.data, "data")
    }

    pub fn out(&self) -> anyhow::Result<&PathBuf> {
        required(&self.out, "out")
    }
}
