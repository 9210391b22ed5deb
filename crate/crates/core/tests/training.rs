mod common;

use std::collections::HashMap;

use gazepred::corpus::{Corpus, GazeTargets};
use gazepred::model::{
    predict, predict_scaled, EmbeddingTable, FusionMode, GazeModel, LanguageInfo, LanguageSource, ModelConfig,
    TargetMode,
};
use gazepred::neural::{Activation, Parameterized, Tensor};
use gazepred::training::{prepare_split, train, TrainConfig};

use common::{corpus_from_words, features, plausible_targets, random_sentences, VOCAB};

fn small_model() -> ModelConfig {
    ModelConfig {
        d_model: 16,
        feature_dense: vec![8],
        ..ModelConfig::default()
    }
}

fn fixture(n: usize, seed: u64) -> Corpus {
    let words = random_sentences(n, 3, 9, seed);
    corpus_from_words(&words, Some(&plausible_targets(&words, seed + 1)))
}

fn params_of(m: &GazeModel<f64>) -> Vec<(String, Vec<f64>)> {
    m.params()
        .into_iter()
        .map(|(n, p)| (n, p.value.data().to_vec()))
        .collect()
}

fn toy_embeddings() -> EmbeddingTable {
    let mut r = common::rng(77);
    use rand::Rng;
    let rows = VOCAB
        .iter()
        .step_by(2)
        .map(|w| (w.to_lowercase(), (0..5).map(|_| r.random_range(-1.0..1.0)).collect()))
        .collect();
    EmbeddingTable::from_rows(rows, true).unwrap()
}

#[test]
fn warmup_then_constant_learning_rate_with_defaults() {
    let corpus = fixture(20, 1);
    let cfg = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let out = train::<f64>(&corpus, &features(&corpus), None, &cfg, &small_model()).unwrap();
    let trace = &out.histories[0].lr_trace;
    assert!(trace.len() > 5);
    assert!(trace[..4].windows(2).all(|w| w[0] < w[1]), "{trace:?}");
    assert!(trace[3..].iter().all(|&lr| lr == 3e-5), "{trace:?}");
}

#[test]
fn early_stopping_respects_patience() {
    let corpus = fixture(20, 2);
    for patience in [1, 2, 4] {
        let cfg = TrainConfig {
            max_epochs: 60,
            early_stopping_patience: patience,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&corpus, &features(&corpus), None, &cfg, &small_model()).unwrap();
        let h = &out.histories[0];
        assert!(
            h.stopped_epoch - h.best_epoch <= patience + 1,
            "{} {}",
            h.stopped_epoch,
            h.best_epoch
        );
        assert!(h.best_epoch >= 1 && h.best_epoch <= h.stopped_epoch);
    }
}

#[test]
fn single_target_composite_matches_each_model() {
    let corpus = fixture(16, 3);
    let feats = features(&corpus);
    let cfg = TrainConfig {
        max_epochs: 2,
        learning_rate: 1e-3,
        target_mode: TargetMode::Single,
        ..TrainConfig::default()
    };
    let out = train::<f64>(&corpus, &feats, None, &cfg, &small_model()).unwrap();
    assert_eq!(out.bundle.models.len(), 5);
    assert_eq!(out.histories.len(), 5);
    let split = prepare_split::<f64>(&corpus, &feats, None, &cfg).unwrap();
    for input in &split.val {
        let composite = predict_scaled(&out.bundle.models, input).unwrap();
        for (k, m) in out.bundle.models.iter().enumerate() {
            let own = m.predict(&input.features, None).unwrap();
            assert_eq!(composite.columns(k, 1), own);
        }
    }
}

#[test]
fn validation_targets_never_reach_the_gradient() {
    let corpus = fixture(20, 4);
    let feats = features(&corpus);
    let cfg = TrainConfig {
        max_epochs: 1,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let a = train::<f64>(&corpus, &feats, None, &cfg, &small_model()).unwrap();
    let mut perturbed = corpus.clone();
    let val: std::collections::HashSet<i64> = a.val_ids.iter().copied().collect();
    for s in perturbed.sentences.iter_mut().filter(|s| val.contains(&s.sentence_id)) {
        for t in s.targets.as_mut().unwrap() {
            *t = GazeTargets::from_array(t.to_array().map(|v| 100.0 - v));
        }
    }
    let b = train::<f64>(&perturbed, &feats, None, &cfg, &small_model()).unwrap();
    assert_eq!(params_of(&a.bundle.models[0]), params_of(&b.bundle.models[0]));

    let longer = TrainConfig {
        max_epochs: 4,
        early_stopping_patience: 100,
        ..cfg
    };
    let a = train::<f64>(&corpus, &feats, None, &longer, &small_model()).unwrap();
    let b = train::<f64>(&perturbed, &feats, None, &longer, &small_model()).unwrap();
    assert_eq!(a.histories[0].train_losses(), b.histories[0].train_losses());
    assert_ne!(a.histories[0].val_losses(), b.histories[0].val_losses());
}

#[test]
fn duplicated_sentence_gets_identical_predictions() {
    let mut words = random_sentences(6, 4, 8, 5);
    words.push(words[2].clone());
    let corpus = corpus_from_words(&words, Some(&plausible_targets(&words, 6)));
    let feats = features(&corpus);
    let cfg = TrainConfig {
        max_epochs: 2,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let out = train::<f64>(&corpus, &feats, None, &cfg, &small_model()).unwrap();
    let preds = predict(&out.bundle, &corpus, &feats, None).unwrap();
    let by_key: HashMap<(i64, i64), GazeTargets> =
        corpus.tokens().map(|t| (t.sentence_id, t.word_id)).zip(preds).collect();
    for j in 0..words[2].len() as i64 {
        assert_eq!(by_key[&(2, j)], by_key[&(6, j)]);
    }
}

#[test]
fn embedding_table_is_frozen_during_training() {
    let corpus = fixture(12, 7);
    let feats = features(&corpus);
    let table = toy_embeddings();
    let before = table.clone();
    let source = LanguageSource::Embeddings(table);
    let info = LanguageInfo {
        kind: "embeddings".into(),
        dim: Some(5),
        ..LanguageInfo::default()
    };
    let inputs_before: Vec<Tensor<f64>> = corpus
        .sentences
        .iter()
        .map(|s| source.sentence_matrix(s).unwrap())
        .collect();
    let cfg = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let model = ModelConfig {
        lstm_hidden: 4,
        ..small_model()
    };
    let out = train::<f64>(&corpus, &feats, Some((&source, info)), &cfg, &model).unwrap();
    assert!(out.bundle.model_config().has_language());
    let LanguageSource::Embeddings(after) = &source else {
        unreachable!()
    };
    assert_eq!(after, &before);
    let inputs_after: Vec<Tensor<f64>> = corpus
        .sentences
        .iter()
        .map(|s| source.sentence_matrix(s).unwrap())
        .collect();
    assert_eq!(inputs_before, inputs_after);
    assert!(out.histories[0]
        .lr_trace
        .iter()
        .all(|&lr| lr <= cfg.bilstm_learning_rate));
}

#[test]
fn forward_is_finite_at_extreme_inputs() {
    for fusion in [FusionMode::RepresentationMean, FusionMode::PredictionMean] {
        for output_activation in [Activation::Sigmoid, Activation::Identity] {
            let cfg = ModelConfig {
                feature_dim: 4,
                language_dim: Some(3),
                lstm_hidden: 3,
                fusion_mode: fusion,
                output_activation,
                head_hidden: vec![4],
                ..small_model()
            };
            let m = GazeModel::<f64>::new(cfg, 11).unwrap();
            for x in [1000.0, -1000.0] {
                let f = Tensor::from_vec(&[3, 4], vec![x; 12]).unwrap();
                let l = Tensor::from_vec(&[3, 3], vec![-x; 9]).unwrap();
                let y = m.predict(&f, Some(&l)).unwrap();
                assert!(y.data().iter().all(|v| v.is_finite()));
            }
        }
    }
}

#[test]
fn f32_models_train_and_predict() {
    let corpus = fixture(12, 8);
    let feats = features(&corpus);
    let cfg = TrainConfig {
        max_epochs: 2,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let out = train::<f32>(&corpus, &feats, None, &cfg, &small_model()).unwrap();
    let preds = predict(&out.bundle, &corpus, &feats, None).unwrap();
    assert_eq!(preds.len(), corpus.num_tokens());
    assert!(preds
        .iter()
        .all(|p| p.to_array().iter().all(|v| (0.0..=100.0).contains(v))));
}

#[test]
fn bundles_round_trip_through_disk() {
    let corpus = fixture(12, 9);
    let feats = features(&corpus);
    let cfg = TrainConfig {
        max_epochs: 2,
        target_mode: TargetMode::Single,
        ..TrainConfig::default()
    };
    let out = train::<f64>(&corpus, &feats, None, &cfg, &small_model()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.bundle.save(dir.path()).unwrap();
    let loaded = gazepred::Bundle64::load(dir.path()).unwrap();
    assert_eq!(loaded.manifest, out.bundle.manifest);
    assert_eq!(loaded.scalers, out.bundle.scalers);
    for (a, b) in loaded.models.iter().zip(&out.bundle.models) {
        assert_eq!(a.config(), b.config());
        assert_eq!(params_of(a), params_of(b));
    }
    assert_eq!(
        predict(&loaded, &corpus, &feats, None).unwrap(),
        predict(&out.bundle, &corpus, &feats, None).unwrap()
    );
}
