use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TargetMode;
use crate::transforms::ScalingMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Mse,
    Mae,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// Optimisation and data-handling settings. Field names follow the
/// hyperparameter table they come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub num_warm_up_steps: u64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub beta_1: f64,
    pub beta_2: f64,
    pub delta: f64,
    pub early_stopping_patience: usize,
    pub weight_decay: f64,
    pub tfidf_error: f64,
    pub validation_split_ratio: f64,
    pub training_split_ratio: f64,
    pub loss: LossKind,
    pub seed: u64,
    pub scaling: ScalingMode,
    pub target_mode: TargetMode,
    /// Learning rate used instead of `learning_rate` when the model has a BiLSTM language path.
    pub bilstm_learning_rate: f64,
    /// Feature columns or groups to train on; `all` selects every column.
    pub features: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            num_warm_up_steps: 4,
            learning_rate: 3e-5,
            max_epochs: 120,
            beta_1: 0.91,
            beta_2: 0.998,
            delta: 1e-4,
            early_stopping_patience: 8,
            weight_decay: 1e-5,
            tfidf_error: 0.1,
            validation_split_ratio: 0.2,
            training_split_ratio: 0.8,
            loss: LossKind::Mse,
            seed: 42,
            scaling: ScalingMode::MinMax,
            target_mode: TargetMode::Multi,
            bilstm_learning_rate: 1e-3,
            features: vec!["all".into()],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        for (name, lr) in [
            ("learning_rate", self.learning_rate),
            ("bilstm_learning_rate", self.bilstm_learning_rate),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return fail(format!("{name} must be positive, got {lr}"));
            }
        }
        for (name, b) in [("beta_1", self.beta_1), ("beta_2", self.beta_2)] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if self.delta < 0.0 || self.weight_decay < 0.0 || self.tfidf_error < 0.0 {
            return fail("delta, weight_decay and tfidf_error must be non-negative".into());
        }
        if (self.training_split_ratio + self.validation_split_ratio - 1.0).abs() > 1e-9 {
            return fail(format!(
                "training_split_ratio {} and validation_split_ratio {} must sum to 1",
                self.training_split_ratio, self.validation_split_ratio
            ));
        }
        if self.features.is_empty() {
            return fail("features must name at least one column or group".into());
        }
        Ok(())
    }
}
