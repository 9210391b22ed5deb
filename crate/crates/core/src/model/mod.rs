//! The two-path gaze model, its inputs, and prediction in original units.

pub mod bundle;
pub mod config;
pub mod embeddings;
pub mod network;

use rayon::prelude::*;

pub use bundle::{Bundle, BundleManifest, LanguageInfo, Scalers, TargetMode};
pub use config::{FusionMode, ModelConfig};
pub use embeddings::{ContextualEmbeddings, EmbeddingTable, LanguageSource};
pub use network::{GazeModel, InputGrads, ModelCache};

use crate::corpus::{Corpus, GazeTargets};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::neural::Tensor;
use crate::scalar::Scalar;
use crate::transforms::{gpt_to_residual, training_space_to_targets, ScalerParams};

/// Model-ready tensors for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceInput<T> {
    pub sentence_id: i64,
    /// Scaled features, `[T × F]`.
    pub features: Tensor<T>,
    /// Language-path vectors, `[T × d]`.
    pub language: Option<Tensor<T>>,
    /// Residual-space, scaled targets, `[T × 5]`.
    pub targets: Option<Tensor<T>>,
}

impl<T: Scalar> SentenceInput<T> {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scales features (and targets, when the corpus has them) and looks up
/// language vectors, sentence by sentence.
pub fn prepare_inputs<T: Scalar>(
    corpus: &Corpus,
    features: &FeatureMatrix,
    feature_scaler: &ScalerParams<T>,
    target_scaler: Option<&ScalerParams<T>>,
    language: Option<&LanguageSource>,
) -> Result<Vec<SentenceInput<T>>> {
    if features.num_sentences() != corpus.sentences.len() || features.num_rows() != corpus.num_tokens() {
        return Err(Error::Alignment {
            what: "feature rows",
            expected: corpus.num_tokens(),
            got: features.num_rows(),
        });
    }
    corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let rows = features.sentence_rows(i);
            if rows.len() != s.len() {
                return Err(Error::Alignment {
                    what: "feature rows in sentence",
                    expected: s.len(),
                    got: rows.len(),
                });
            }
            let mut data = Vec::with_capacity(rows.len() * features.width());
            for r in rows {
                let typed: Vec<T> = r.iter().map(|&v| T::of(v)).collect();
                data.extend(feature_scaler.apply(&typed)?);
            }
            let x = Tensor::matrix(rows.len(), features.width(), data)?;
            let targets = match (target_scaler, &s.targets) {
                (Some(scaler), Some(gold)) => {
                    let mut data = Vec::with_capacity(gold.len() * 5);
                    for &g in gold {
                        data.extend(scaler.apply(&gpt_to_residual(g).map(T::of))?);
                    }
                    Some(Tensor::matrix(gold.len(), 5, data)?)
                }
                _ => None,
            };
            let language = language.map(|l| l.sentence_matrix(s)).transpose()?;
            Ok(SentenceInput {
                sentence_id: s.sentence_id,
                features: x,
                language,
                targets,
            })
        })
        .collect()
}

/// Scaled-space predictions `[T × 5]` of a model set: one five-output model, or
/// five one-output models whose columns are stacked in target order.
pub fn predict_scaled<T: Scalar>(models: &[GazeModel<T>], input: &SentenceInput<T>) -> Result<Tensor<T>> {
    match models {
        [single] if single.config().outputs == 5 => single.predict(&input.features, input.language.as_ref()),
        five if five.len() == 5 => {
            let mut out = Tensor::zeros(&[input.len(), 5]);
            for (k, m) in five.iter().enumerate() {
                let y = m.predict(&input.features, input.language.as_ref())?;
                if y.cols() != 1 {
                    return Err(Error::shape("predict", "single-target model with several outputs"));
                }
                out.set_columns(k, &y);
            }
            Ok(out)
        }
        other => Err(Error::Config(format!(
            "cannot assemble predictions from {} models",
            other.len()
        ))),
    }
}

/// Scaled predictions back to original units: invert scaling, restore GPT, clip.
pub fn to_original_units<T: Scalar>(scaled: &Tensor<T>, target_scaler: &ScalerParams<T>) -> Result<Vec<GazeTargets>> {
    (0..scaled.rows())
        .map(|r| training_space_to_targets(scaled.row(r), target_scaler).map(GazeTargets::clipped))
        .collect()
}

/// Predictions in original units for every token of `corpus`, in corpus order.
pub fn predict<T: Scalar>(
    bundle: &Bundle<T>,
    corpus: &Corpus,
    features: &FeatureMatrix,
    language: Option<&LanguageSource>,
) -> Result<Vec<GazeTargets>> {
    let hash = features.manifest_hash();
    if hash != bundle.manifest.manifest_hash {
        return Err(Error::ManifestMismatch {
            expected: bundle.manifest.manifest_hash.clone(),
            got: hash,
        });
    }
    if bundle.model_config().has_language() != language.is_some() {
        return Err(Error::Config(if language.is_some() {
            "bundle was trained without a language path".into()
        } else {
            "bundle needs language inputs (embeddings or contextual vectors)".into()
        }));
    }
    let inputs = prepare_inputs(corpus, features, &bundle.scalers.features, None, language)?;
    let per_sentence = inputs
        .par_iter()
        .map(|input| to_original_units(&predict_scaled(&bundle.models, input)?, &bundle.scalers.targets))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sentence.into_iter().flatten().collect())
}
