use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_COLUMNS;
use crate::neural::Activation;
use crate::transforms::ScalingMode;

/// How the feature and language paths are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Per-token mean of the two `d_model` representations, then one shared head.
    #[default]
    RepresentationMean,
    /// One head per path; the two output vectors are averaged.
    PredictionMean,
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::RepresentationMean => "representation_mean",
            FusionMode::PredictionMean => "prediction_mean",
        })
    }
}

impl FromStr for FusionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "representation_mean" => Ok(FusionMode::RepresentationMean),
            "prediction_mean" => Ok(FusionMode::PredictionMean),
            other => Err(Error::Config(format!("unknown fusion mode `{other}`"))),
        }
    }
}

/// Architecture of a [`GazeModel`](super::GazeModel).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the engineered feature input.
    pub feature_dim: usize,
    /// Hidden widths of the per-token dense stack before the projection to `d_model`.
    pub feature_dense: Vec<usize>,
    pub d_model: usize,
    pub heads: usize,
    pub ffn_ratio: usize,
    /// Width of the language path's token vectors; `None` disables the path.
    pub language_dim: Option<usize>,
    pub lstm_hidden: usize,
    /// Hidden widths of the output head before its final layer.
    pub head_hidden: Vec<usize>,
    pub dropout: f64,
    pub activation: Activation,
    pub output_activation: Activation,
    pub fusion_mode: FusionMode,
    /// 5 for multi-target models, 1 for single-target models.
    pub outputs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            feature_dim: FEATURE_COLUMNS.len(),
            feature_dense: vec![64],
            d_model: 128,
            heads: 4,
            ffn_ratio: 2,
            language_dim: None,
            lstm_hidden: 64,
            head_hidden: Vec::new(),
            dropout: 0.1,
            activation: Activation::Gelu,
            output_activation: Activation::Sigmoid,
            fusion_mode: FusionMode::RepresentationMean,
            outputs: 5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive".into());
        }
        if self.d_model == 0 || self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return fail(format!(
                "model width {} is not divisible by {} heads",
                self.d_model, self.heads
            ));
        }
        if self.ffn_ratio == 0 {
            return fail("ffn_ratio must be positive".into());
        }
        if self.language_dim == Some(0) || (self.language_dim.is_some() && self.lstm_hidden == 0) {
            return fail("language path needs positive input and hidden widths".into());
        }
        if self.feature_dense.contains(&0) || self.head_hidden.contains(&0) {
            return fail("layer widths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.outputs != 1 && self.outputs != 5 {
            return fail(format!("outputs must be 1 or 5, got {}", self.outputs));
        }
        Ok(())
    }

    pub fn has_language(&self) -> bool {
        self.language_dim.is_some()
    }

    /// A warning when a bounded output activation is paired with targets that are
    /// not scaled into its range.
    pub fn scaling_warning(&self, scaling: ScalingMode) -> Option<String> {
        (self.output_activation == Activation::Sigmoid && scaling != ScalingMode::MinMax).then(|| {
            format!(
                "warning: sigmoid output head with `{scaling}` target scaling: targets outside (0, 1) \
                 cannot be reached and predictions below that range will saturate"
            )
        })
    }
}
