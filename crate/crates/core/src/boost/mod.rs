//! Totally-corrective asymmetric boosting (FisherBoost / LACBoost) by column
//! generation, the AdaBoost baseline, offset search and closed-form LAC/LDA
//! post-processing.

mod adaboost;
mod colgen;
mod config;
mod offset;
mod postprocess;
mod strong;

pub use adaboost::{adaboost_train, AdaBoostOutcome, ADABOOST_ALPHA_CAP};
pub use colgen::{
    dual_objective, primal_objective, recover_dual, train, ColumnGeneration, DualState, StepOutcome,
    StopReason, TrainOutcome, TrainReport,
};
pub use config::{BoostMode, BoosterConfig, THETA_GRID};
pub use offset::{find_offset, Offset, OffsetFlag, OffsetTarget};
pub use postprocess::{lac_lda_postprocess, Postprocessed};
pub use strong::{ModelFile, StrongClassifier};
