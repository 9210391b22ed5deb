//! Trained-model bundles: parameters, scalers, feature manifest and configs in one directory.
//!
//! ```text
//! <dir>/bundle.toml     manifest: feature columns + hash, target mode, language source
//! <dir>/model.toml      ModelConfig
//! <dir>/scalers.toml    feature and target ScalerParams
//! <dir>/params.ckpt     multi-target parameters, or
//! <dir>/params-<T>.ckpt one file per target in single-target mode
//! ```

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::GazeModel;
use crate::corpus::TARGET_NAMES;
use crate::error::{Error, Result};
use crate::features::manifest_hash;
use crate::neural::checkpoint;
use crate::scalar::Scalar;
use crate::transforms::ScalerParams;

pub const BUNDLE_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// One model with five outputs.
    #[default]
    Multi,
    /// Five one-output models, one per target.
    Single,
}

impl std::fmt::Display for TargetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetMode::Multi => "multi",
            TargetMode::Single => "single",
        })
    }
}

impl std::str::FromStr for TargetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(TargetMode::Multi),
            "single" => Ok(TargetMode::Single),
            other => Err(Error::Config(format!("unknown target mode `{other}`"))),
        }
    }
}

/// Description of the language inputs a bundle was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LanguageInfo {
    /// `none`, `embeddings` or `contextual`.
    pub kind: String,
    pub path: Option<String>,
    pub sha256: Option<String>,
    pub dim: Option<usize>,
    pub case_fold: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub format: u32,
    pub feature_columns: Vec<String>,
    pub manifest_hash: String,
    pub target_mode: TargetMode,
    /// Token-level TF-IDF fallback the features were computed with.
    pub tfidf_error: f64,
    pub language: LanguageInfo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Scalers<T> {
    pub features: ScalerParams<T>,
    pub targets: ScalerParams<T>,
}

/// Everything needed to turn a featurized corpus into predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle<T> {
    pub manifest: BundleManifest,
    pub scalers: Scalers<T>,
    /// One model in multi-target mode; five, in target order, in single-target mode.
    pub models: Vec<GazeModel<T>>,
}

fn write_toml<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_toml<S: DeserializeOwned>(path: &Path) -> Result<S> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))
}

fn params_file(mode: TargetMode, index: usize) -> String {
    match mode {
        TargetMode::Multi => "params.ckpt".into(),
        TargetMode::Single => format!("params-{}.ckpt", TARGET_NAMES[index]),
    }
}

impl<T: Scalar> Bundle<T> {
    pub fn model_config(&self) -> &ModelConfig {
        self.models[0].config()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_toml(&dir.join("bundle.toml"), &self.manifest)?;
        write_toml(&dir.join("model.toml"), self.model_config())?;
        write_toml(&dir.join("scalers.toml"), &self.scalers.cast_f64())?;
        for (i, m) in self.models.iter().enumerate() {
            checkpoint::save(m, &dir.join(params_file(self.manifest.target_mode, i)))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: BundleManifest = read_toml(&dir.join("bundle.toml"))?;
        if manifest.format != BUNDLE_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported bundle format {}",
                manifest.format
            )));
        }
        let recomputed = manifest_hash(&manifest.feature_columns);
        if recomputed != manifest.manifest_hash {
            return Err(Error::ManifestMismatch {
                expected: manifest.manifest_hash.clone(),
                got: recomputed,
            });
        }
        let config: ModelConfig = read_toml(&dir.join("model.toml"))?;
        if config.feature_dim != manifest.feature_columns.len() {
            return Err(Error::Checkpoint(format!(
                "model expects {} features, manifest lists {}",
                config.feature_dim,
                manifest.feature_columns.len()
            )));
        }
        let scalers: Scalers<f64> = read_toml(&dir.join("scalers.toml"))?;
        let count = match manifest.target_mode {
            TargetMode::Multi => 1,
            TargetMode::Single => TARGET_NAMES.len(),
        };
        let models = (0..count)
            .map(|i| {
                let mut m = GazeModel::new(config.clone(), 0)?;
                checkpoint::load(&mut m, &dir.join(params_file(manifest.target_mode, i)))?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            manifest,
            scalers: Scalers {
                features: scalers.features.cast(),
                targets: scalers.targets.cast(),
            },
            models,
        })
    }
}

impl<T: Scalar> Scalers<T> {
    fn cast_f64(&self) -> Scalers<f64> {
        Scalers {
            features: self.features.cast(),
            targets: self.targets.cast(),
        }
    }
}
