use serde::{Deserialize, Serialize};

use super::OffsetTarget;
use crate::data::QMode;
use crate::error::{Error, Result};
use crate::qp::EgConfig;
use crate::scalar::Scalar;

/// Candidate regularisation values swept when tuning `theta`.
pub const THETA_GRID: [f64; 8] = [
    1.0 / 10.0,
    1.0 / 12.0,
    1.0 / 15.0,
    1.0 / 20.0,
    1.0 / 25.0,
    1.0 / 30.0,
    1.0 / 40.0,
    1.0 / 50.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoostMode {
    /// Within-class scatter of both classes (Fisher LDA objective).
    FisherBoost,
    /// Positive-class scatter only (LAC objective).
    LacBoost,
}

impl BoostMode {
    pub fn q_mode(self) -> QMode {
        match self {
            BoostMode::FisherBoost => QMode::Lda,
            BoostMode::LacBoost => QMode::Lac,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoostMode::FisherBoost => "FisherBoost",
            BoostMode::LacBoost => "LACBoost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoosterConfig<T> {
    pub theta: T,
    /// Column generation stops once the best new edge is below `r + epsilon`.
    pub epsilon: T,
    pub n_max: usize,
    pub mode: BoostMode,
    /// Exact block `Q` or its `(1/m) I` approximation.
    pub exact_q: bool,
    /// Enforce `μ₁ − μ₂ ≥ 0` on the projected class means.
    pub nonneg_mean_gap: bool,
    /// Clamp negative recovered example weights to zero.
    pub clamp_dual: bool,
    /// Ridge used wherever `Q` has to be inverted.
    pub delta: T,
    pub eg: EgConfig<T>,
    pub offset: OffsetTarget<T>,
}

impl<T: Scalar> Default for BoosterConfig<T> {
    fn default() -> Self {
        Self {
            theta: T::lit(1.0 / 20.0),
            epsilon: T::lit(1e-5),
            n_max: 100,
            mode: BoostMode::FisherBoost,
            exact_q: true,
            nonneg_mean_gap: false,
            clamp_dual: false,
            delta: T::lit(crate::data::DEFAULT_DELTA),
            eg: EgConfig::default(),
            offset: OffsetTarget::Balanced,
        }
    }
}

impl<T: Scalar> BoosterConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > T::zero()) {
            return Err(Error::InvalidArgument(format!("theta must be > 0, got {}", self.theta)));
        }
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be >= 1".into()));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::InvalidArgument("delta must be > 0".into()));
        }
        Ok(())
    }
}
