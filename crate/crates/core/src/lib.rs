//! Totally-corrective asymmetric boosting for cascade detectors.
//!
//! FisherBoost and LACBoost select decision stumps by column generation and
//! fit their coefficients by solving a quadratic program over the simplex
//! with entropic gradient descent. Around that core sit the AdaBoost
//! baseline, closed-form LAC/LDA post-processing, multi-exit cascade
//! training with bootstrapped negatives and worst-case accuracy analysis.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` choice.

pub mod boost;
pub mod cascade;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mpm;
pub mod qp;
pub mod scalar;
pub mod toy;
pub mod weak;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset = data::Dataset<f64>;
pub type QMatrix = data::QMatrix<f64>;
pub type SimplexQp = qp::SimplexQp<f64>;
pub type EgConfig = qp::EgConfig<f64>;
pub type QpSolution = qp::QpSolution<f64>;
pub type BoosterConfig = boost::BoosterConfig<f64>;
pub type StrongClassifier = boost::StrongClassifier<f64>;
pub type ModelFile = boost::ModelFile<f64>;
pub type DecisionStump = weak::DecisionStump<f64>;
pub type CascadeConfig = cascade::CascadeConfig<f64>;
pub type CascadeModel = cascade::CascadeModel<f64>;
pub type NodeTargets = cascade::NodeTargets<f64>;

pub type Dataset32 = data::Dataset<f32>;
pub type SimplexQp32 = qp::SimplexQp<f32>;
pub type StrongClassifier32 = boost::StrongClassifier<f32>;
