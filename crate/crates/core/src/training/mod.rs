//! Training loop: batching, loss, warmup AdamW, early stopping and the
//! single-/multi-target regimes.

pub mod config;
pub mod history;
pub mod loss;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{LossKind, TrainConfig};
pub use history::{histories_csv, EpochRecord, TrainHistory};
pub use loss::{loss, loss_sum};

use crate::corpus::{split_train_val, Corpus, GazeTargets, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{mae, r2, Metrics};
use crate::features::FeatureMatrix;
use crate::model::{
    predict_scaled, prepare_inputs, to_original_units, Bundle, BundleManifest, GazeModel, LanguageInfo, LanguageSource,
    ModelConfig, Scalers, SentenceInput, TargetMode,
};
use crate::neural::checkpoint::{restore, snapshot, NamedTensor};
use crate::neural::{lr_at_step, AdamW, AdamWConfig, DropoutKey, Parameterized, Tensor};
use crate::scalar::Scalar;
use crate::transforms::{fit_scaler, residual_rows, ScalerParams};

/// Shuffles sentence indices by `(seed, epoch)` and cuts them into batches of at
/// most `batch_size`.
pub fn make_batches(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Earliest epoch (1-based) with the minimal validation loss.
pub fn best_epoch(val_losses: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in val_losses.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i + 1, v));
        }
    }
    best.map(|(e, _)| e)
}

/// Loads the parameters saved for the history's best epoch.
pub fn restore_best<T: Scalar, M: Parameterized<T>>(
    model: &mut M,
    history: &TrainHistory,
    checkpoints: &[(usize, Vec<NamedTensor>)],
) -> Result<usize> {
    let epoch =
        best_epoch(&history.val_losses()).ok_or_else(|| Error::Validation("no completed epoch to restore".into()))?;
    let (_, tensors) = checkpoints
        .iter()
        .find(|(e, _)| *e == epoch)
        .ok_or_else(|| Error::Checkpoint(format!("no checkpoint kept for epoch {epoch}")))?;
    restore(model, tensors)?;
    Ok(epoch)
}

/// Which targets a model is fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    All,
    Single(usize),
}

impl Objective {
    fn gold<T: Scalar>(self, targets: &Tensor<T>) -> Tensor<T> {
        match self {
            Objective::All => targets.clone(),
            Objective::Single(k) => targets.columns(k, 1),
        }
    }

    fn name(self) -> String {
        match self {
            Objective::All => "all".into(),
            Objective::Single(k) => TARGET_NAMES[k].into(),
        }
    }

    fn stream(self) -> u64 {
        match self {
            Objective::All => 0,
            Objective::Single(k) => k as u64 + 1,
        }
    }
}

fn gold_of<T: Scalar>(input: &SentenceInput<T>) -> Result<&Tensor<T>> {
    input
        .targets
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("sentence {} has no targets", input.sentence_id)))
}

fn nan5() -> [f64; 5] {
    [f64::NAN; 5]
}

/// Validation loss (scaled space) and original-unit MAE/R2 per predicted target.
fn validate<T: Scalar>(
    model: &GazeModel<T>,
    val: &[SentenceInput<T>],
    objective: Objective,
    kind: LossKind,
    target_scaler: &ScalerParams<T>,
) -> Result<(f64, [f64; 5], [f64; 5])> {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut pred_units: Vec<GazeTargets> = Vec::new();
    let mut gold_units: Vec<GazeTargets> = Vec::new();
    for input in val {
        let targets = gold_of(input)?;
        let y = model.predict(&input.features, input.language.as_ref())?;
        let gold = objective.gold(targets);
        let (s, _) = loss_sum(&y, &gold, kind)?;
        total += s.as_f64();
        count += y.len();
        let full = match objective {
            Objective::All => y,
            Objective::Single(k) => {
                let mut f = targets.clone();
                f.set_columns(k, &y);
                f
            }
        };
        pred_units.extend(to_original_units(&full, target_scaler)?);
        gold_units.extend(to_original_units(targets, target_scaler)?);
    }
    let mut vm = nan5();
    let mut vr = nan5();
    let ks: Vec<usize> = match objective {
        Objective::All => (0..5).collect(),
        Objective::Single(k) => vec![k],
    };
    for k in ks {
        let p: Vec<f64> = pred_units.iter().map(|t| t.to_array()[k]).collect();
        let g: Vec<f64> = gold_units.iter().map(|t| t.to_array()[k]).collect();
        vm[k] = mae(&p, &g)?;
        vr[k] = r2(&p, &g).unwrap_or(f64::NAN);
    }
    Ok((total / count.max(1) as f64, vm, vr))
}

fn diverged(e: Error, epoch: usize, batch: usize, lr: f64) -> Error {
    match e {
        Error::NonFinite(_) => Error::Diverged { epoch, batch, lr },
        other => other,
    }
}

/// Trains `model` on `train`, early-stopping on `val`, and leaves it holding the
/// best-epoch parameters.
pub fn fit<T: Scalar>(
    model: &mut GazeModel<T>,
    train: &[SentenceInput<T>],
    val: &[SentenceInput<T>],
    cfg: &TrainConfig,
    base_lr: f64,
    objective: Objective,
    target_scaler: &ScalerParams<T>,
) -> Result<TrainHistory> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Validation(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut opt = AdamW::new(AdamWConfig {
        lr: base_lr,
        beta1: cfg.beta_1,
        beta2: cfg.beta_2,
        weight_decay: cfg.weight_decay,
        ..AdamWConfig::default()
    });
    let mut history = TrainHistory {
        model: objective.name(),
        ..TrainHistory::default()
    };
    let root = DropoutKey {
        seed: cfg.seed,
        stream: objective.stream(),
    };
    let mut best: Option<(usize, f64, Vec<NamedTensor>)> = None;
    let mut reference = f64::INFINITY;
    let mut last_improvement = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let epoch_key = root.derive(epoch as u64);
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        let mut lr = lr_at_step(opt.step_count() + 1, base_lr, cfg.num_warm_up_steps);
        for (b, batch) in make_batches(train.len(), cfg.batch_size, cfg.seed, epoch as u64)
            .iter()
            .enumerate()
        {
            let batch_no = b + 1;
            lr = lr_at_step(opt.step_count() + 1, base_lr, cfg.num_warm_up_steps);
            model.zero_grad();
            let elements: usize = batch.iter().map(|&i| train[i].len()).sum::<usize>() * model.config().outputs;
            let inv = T::one() / T::of_usize(elements);
            for &i in batch {
                let input = &train[i];
                let gold = objective.gold(gold_of(input)?);
                let key = epoch_key.derive(i as u64);
                let (y, cache) = model
                    .forward(&input.features, input.language.as_ref(), Some(key))
                    .map_err(|e| diverged(e, epoch, batch_no, lr))?;
                let (s, grad) = loss_sum(&y, &gold, cfg.loss)?;
                if !s.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        batch: batch_no,
                        lr,
                    });
                }
                epoch_loss += s.as_f64();
                epoch_count += y.len();
                model.backward(&cache, &grad.scale(inv))?;
            }
            opt.step(model, lr)?;
            history.lr_trace.push(lr);
        }
        let (val_loss, val_mae, val_r2) =
            validate(model, val, objective, cfg.loss, target_scaler).map_err(|e| diverged(e, epoch, 0, lr))?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, batch: 0, lr });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / epoch_count.max(1) as f64,
            val_loss,
            val_mae,
            val_r2,
            lr,
        });
        history.stopped_epoch = epoch;
        if best.as_ref().is_none_or(|(_, b, _)| val_loss < *b) {
            best = Some((epoch, val_loss, snapshot(model)));
        }
        if val_loss < reference - cfg.delta {
            reference = val_loss;
            last_improvement = epoch;
        } else if epoch - last_improvement >= cfg.early_stopping_patience {
            break;
        }
    }
    let (epoch, _, tensors) = best.expect("at least one epoch ran");
    history.best_epoch = restore_best(model, &history, &[(epoch, tensors)])?;
    Ok(history)
}

/// A prepared train/validation split with scalers fitted on the training side.
#[derive(Clone, Debug)]
pub struct PreparedSplit<T> {
    pub train: Vec<SentenceInput<T>>,
    pub val: Vec<SentenceInput<T>>,
    pub val_gold: Vec<GazeTargets>,
    pub scalers: Scalers<T>,
    pub columns: Vec<String>,
    pub train_ids: Vec<i64>,
    pub val_ids: Vec<i64>,
}

fn rows_as<T: Scalar>(m: &FeatureMatrix) -> Vec<Vec<T>> {
    m.rows.iter().map(|r| r.iter().map(|&v| T::of(v)).collect()).collect()
}

/// Splits `corpus`, selects `cfg.features`, fits both scalers on the training
/// sentences and builds model inputs for both sides.
pub fn prepare_split<T: Scalar>(
    corpus: &Corpus,
    features: &FeatureMatrix,
    language: Option<&LanguageSource>,
    cfg: &TrainConfig,
) -> Result<PreparedSplit<T>> {
    cfg.validate()?;
    if !corpus.has_targets {
        return Err(Error::Validation("training corpus has no targets".into()));
    }
    let selected = features.select(&cfg.features)?;
    let (tr, va) = split_train_val(corpus, cfg.training_split_ratio, cfg.seed)?;
    let ids = |c: &Corpus| c.sentences.iter().map(|s| s.sentence_id).collect::<Vec<_>>();
    let (train_ids, val_ids) = (ids(&tr), ids(&va));
    let tr_feat = selected.sentences(&train_ids)?;
    let va_feat = selected.sentences(&val_ids)?;
    let tr_gold = tr.targets().expect("labelled corpus");
    let scalers = Scalers {
        features: fit_scaler(&rows_as::<T>(&tr_feat), cfg.scaling)?,
        targets: fit_scaler(&residual_rows::<T>(&tr_gold), cfg.scaling)?,
    };
    let train = prepare_inputs(&tr, &tr_feat, &scalers.features, Some(&scalers.targets), language)?;
    let val = prepare_inputs(&va, &va_feat, &scalers.features, Some(&scalers.targets), language)?;
    Ok(PreparedSplit {
        train,
        val,
        val_gold: va.targets().expect("labelled corpus"),
        scalers,
        columns: selected.columns,
        train_ids,
        val_ids,
    })
}

/// The architecture actually trained: widths taken from the data, outputs from the target mode.
pub fn effective_model_config(
    model: &ModelConfig,
    feature_dim: usize,
    language_dim: Option<usize>,
    mode: TargetMode,
) -> ModelConfig {
    ModelConfig {
        feature_dim,
        language_dim,
        outputs: match mode {
            TargetMode::Multi => 5,
            TargetMode::Single => 1,
        },
        ..model.clone()
    }
}

/// Learning rate for a model: the BiLSTM rate when a language path is present.
pub fn base_learning_rate(cfg: &TrainConfig, model: &ModelConfig) -> f64 {
    if model.has_language() {
        cfg.bilstm_learning_rate
    } else {
        cfg.learning_rate
    }
}

/// Fits one multi-target model, or five single-target models concurrently.
pub fn fit_models<T: Scalar>(
    train: &[SentenceInput<T>],
    val: &[SentenceInput<T>],
    cfg: &TrainConfig,
    model: &ModelConfig,
    target_scaler: &ScalerParams<T>,
) -> Result<(Vec<GazeModel<T>>, Vec<TrainHistory>)> {
    let lr = base_learning_rate(cfg, model);
    let objectives: Vec<Objective> = match cfg.target_mode {
        TargetMode::Multi => vec![Objective::All],
        TargetMode::Single => (0..5).map(Objective::Single).collect(),
    };
    let results = objectives
        .into_par_iter()
        .map(|obj| {
            let seed = cfg.seed.wrapping_add(obj.stream());
            let mut m = GazeModel::new(model.clone(), seed)?;
            let h = fit(&mut m, train, val, cfg, lr, obj, target_scaler)?;
            Ok((m, h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().unzip())
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub bundle: Bundle<T>,
    pub histories: Vec<TrainHistory>,
    /// Original-unit metrics of the restored model(s) on the validation split.
    pub val_metrics: Metrics,
    pub train_ids: Vec<i64>,
    pub val_ids: Vec<i64>,
    pub warnings: Vec<String>,
}

/// Full pipeline: split, scale, fit, restore best, and score the validation split.
pub fn train<T: Scalar>(
    corpus: &Corpus,
    features: &FeatureMatrix,
    language: Option<(&LanguageSource, LanguageInfo)>,
    cfg: &TrainConfig,
    model: &ModelConfig,
) -> Result<TrainOutcome<T>> {
    let source = language.as_ref().map(|(s, _)| *s);
    let split = prepare_split::<T>(corpus, features, source, cfg)?;
    let mc = effective_model_config(
        model,
        split.columns.len(),
        source.map(LanguageSource::dim),
        cfg.target_mode,
    );
    mc.validate()?;
    let warnings: Vec<String> = mc.scaling_warning(cfg.scaling).into_iter().collect();
    let (models, histories) = fit_models(&split.train, &split.val, cfg, &mc, &split.scalers.targets)?;

    let mut pred = Vec::with_capacity(split.val_gold.len());
    for input in &split.val {
        pred.extend(to_original_units(
            &predict_scaled(&models, input)?,
            &split.scalers.targets,
        )?);
    }
    let val_metrics = Metrics::from_pairs(&pred, &split.val_gold)?;

    let manifest = BundleManifest {
        format: crate::model::bundle::BUNDLE_FORMAT,
        manifest_hash: crate::features::manifest_hash(&split.columns),
        feature_columns: split.columns.clone(),
        target_mode: cfg.target_mode,
        tfidf_error: cfg.tfidf_error,
        language: language.map(|(_, info)| info).unwrap_or_else(|| LanguageInfo {
            kind: "none".into(),
            ..LanguageInfo::default()
        }),
    };
    Ok(TrainOutcome {
        bundle: Bundle {
            manifest,
            scalers: split.scalers,
            models,
        },
        histories,
        val_metrics,
        train_ids: split.train_ids,
        val_ids: split.val_ids,
        warnings,
    })
}
