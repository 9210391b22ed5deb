mod common;

use std::collections::{HashMap, HashSet};

use gazepred::corpus::{predictions_csv, read_corpus, split_train_val, Corpus, GazeTargets};
use gazepred::evaluation::{mae, r2, target_correlations};
use gazepred::features::{build_feature_matrix, Lemmatizer, LexiconTagger};
use gazepred::neural::{mean_pool, Tensor};
use gazepred::training::{prepare_split, TrainConfig};
use gazepred::transforms::{fit_scaler, gpt_to_residual, residual_to_gpt, ScalingMode};
use nalgebra::{Matrix5, SymmetricEigen};
use proptest::prelude::*;

use common::{corpus_from_words, VOCAB};

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(VOCAB).prop_map(str::to_string)
}

fn sentences(max_sentences: usize, max_len: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(word(), 1..=max_len), 1..=max_sentences)
}

fn target() -> impl Strategy<Value = GazeTargets> {
    prop::array::uniform5(0.0f64..=100.0).prop_map(GazeTargets::from_array)
}

fn labelled(max_sentences: usize, max_len: usize) -> impl Strategy<Value = Corpus> {
    sentences(max_sentences, max_len)
        .prop_flat_map(|words| {
            let shapes: Vec<usize> = words.iter().map(Vec::len).collect();
            let targets = shapes
                .into_iter()
                .map(|n| prop::collection::vec(target(), n))
                .collect::<Vec<_>>();
            (Just(words), targets)
        })
        .prop_map(|(words, targets)| corpus_from_words(&words, Some(&targets)))
}

fn with_eos_csv(corpus: &Corpus) -> String {
    let mut out = String::from("sentence_id,word_id,word,nFix,FFD,GPT,TRT,fixProp\n");
    for s in &corpus.sentences {
        let targets = s.targets.as_ref().unwrap();
        for (t, g) in s.tokens.iter().zip(targets) {
            let v = g.to_array();
            out.push_str(&format!(
                "{},{},\"{}\",{},{},{},{},{}\n",
                t.sentence_id, t.word_id, t.text, v[0], v[1], v[2], v[3], v[4]
            ));
        }
        out.push_str(&format!("{},{},<EOS>,0,0,0,0,0\n", s.sentence_id, s.tokens.len()));
    }
    out
}

fn feature_map(corpus: &Corpus) -> HashMap<(i64, i64), Vec<f64>> {
    let m = build_feature_matrix(corpus, &LexiconTagger, &Lemmatizer::rules(), 0.1).unwrap();
    m.keys.iter().copied().zip(m.rows.iter().cloned()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictions_round_trip_through_the_loader(corpus in labelled(6, 8)) {
        let preds: Vec<GazeTargets> = corpus.targets().unwrap();
        let csv = predictions_csv(&corpus, &preds, 4).unwrap();
        let back = read_corpus(csv.as_slice(), true).unwrap();
        let keys = |c: &Corpus| c.tokens().map(|t| (t.sentence_id, t.word_id, t.text.clone())).collect::<Vec<_>>();
        prop_assert_eq!(keys(&back), keys(&corpus));
        for (a, b) in back.targets().unwrap().iter().zip(&preds) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                prop_assert!((x - y).abs() <= 5e-5);
            }
        }
    }

    #[test]
    fn eos_stripping_is_idempotent(corpus in labelled(6, 8)) {
        let once = read_corpus(with_eos_csv(&corpus).as_bytes(), true).unwrap();
        let csv = predictions_csv(&once, &once.targets().unwrap(), 6).unwrap();
        let twice = read_corpus(csv.as_slice(), true).unwrap();
        prop_assert_eq!(once.sentences.len(), twice.sentences.len());
        prop_assert_eq!(once.num_tokens(), corpus.num_tokens());
        prop_assert_eq!(twice.num_tokens(), corpus.num_tokens());
    }

    #[test]
    fn split_is_a_partition(corpus in labelled(12, 3), ratio in 0.05f64..0.95, seed in any::<u64>()) {
        prop_assume!(corpus.sentences.len() >= 2);
        match split_train_val(&corpus, ratio, seed) {
            Ok((train, val)) => {
                let a: HashSet<i64> = train.sentences.iter().map(|s| s.sentence_id).collect();
                let b: HashSet<i64> = val.sentences.iter().map(|s| s.sentence_id).collect();
                let all: HashSet<i64> = corpus.sentences.iter().map(|s| s.sentence_id).collect();
                prop_assert!(a.is_disjoint(&b));
                prop_assert_eq!(a.union(&b).copied().collect::<HashSet<_>>(), all);
                prop_assert!(!a.is_empty() && !b.is_empty());
            }
            Err(_) => {
                let n = corpus.sentences.len() as f64;
                let k = (n * ratio).round();
                prop_assert!(k < 1.0 || k > n - 1.0);
            }
        }
    }

    #[test]
    fn residual_transform_is_an_involution(t in target()) {
        let back = residual_to_gpt(gpt_to_residual(t)).to_array();
        for (a, b) in back.iter().zip(t.to_array()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let r = gpt_to_residual(t);
        let again = gpt_to_residual(residual_to_gpt(r));
        for (a, b) in again.iter().zip(r) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn min_max_training_rows_lie_in_unit_box(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..40)) {
        let p = fit_scaler(&rows, ScalingMode::MinMax).unwrap();
        for row in &rows {
            for v in p.apply(row).unwrap() {
                prop_assert!((0.0..=1.0).contains(&v), "{}", v);
            }
        }
    }

    #[test]
    fn standard_training_rows_are_standardised(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
        let p = fit_scaler(&rows, ScalingMode::Standard).unwrap();
        prop_assume!(p.spread.iter().all(|&s| s > 1e-3));
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| p.apply(r).unwrap()).collect();
        let n = rows.len() as f64;
        for c in 0..3 {
            let mean = scaled.iter().map(|r| r[c]).sum::<f64>() / n;
            let std = (scaled.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9, "mean {}", mean);
            prop_assert!((std - 1.0).abs() < 1e-6, "std {}", std);
        }
    }

    #[test]
    fn features_ignore_sentence_order(words in sentences(8, 10)) {
        let forward = corpus_from_words(&words, None);
        let mut reversed = forward.clone();
        reversed.sentences.reverse();
        prop_assert_eq!(feature_map(&forward), feature_map(&reversed));
        let a = build_feature_matrix(&forward, &LexiconTagger, &Lemmatizer::rules(), 0.1).unwrap();
        let b = build_feature_matrix(&forward, &LexiconTagger, &Lemmatizer::rules(), 0.1).unwrap();
        prop_assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    }

    #[test]
    fn feature_value_domains(words in sentences(6, 12)) {
        let m = build_feature_matrix(&corpus_from_words(&words, None), &LexiconTagger, &Lemmatizer::rules(), 0.1).unwrap();
        let col = |name: &str| m.column(name).unwrap();
        for flag in ["stopword", "number", "endword"] {
            prop_assert!(col(flag).iter().all(|&v| v == 1.0 || v == -1.0));
        }
        prop_assert!(col("word_len").iter().all(|&v| v >= 1.0));
        prop_assert!(col("tfidf").iter().all(|&v| v >= 0.0));
        let pos: Vec<usize> = m.columns.iter().enumerate().filter(|(_, c)| c.starts_with("pos_")).map(|(i, _)| i).collect();
        prop_assert_eq!(pos.len(), 8);
        for row in &m.rows {
            prop_assert_eq!(pos.iter().map(|&i| row[i]).sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn r2_ignores_pair_order(pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..30), seed in any::<u64>()) {
        let (pred, gold): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        prop_assume!(gold.iter().any(|&g| (g - gold[0]).abs() > 1e-6));
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        use rand::seq::SliceRandom;
        idx.shuffle(&mut common::rng(seed));
        let p2: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
        let g2: Vec<f64> = idx.iter().map(|&i| gold[i]).collect();
        let a = r2(&pred, &gold).unwrap();
        let b = r2(&p2, &g2).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn mae_is_symmetric(pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..30)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert_eq!(mae(&a, &b).unwrap(), mae(&b, &a).unwrap());
        prop_assert_eq!(mae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn target_correlations_are_psd(corpus in labelled(6, 6)) {
        prop_assume!(corpus.num_tokens() >= 3);
        let m = target_correlations(&corpus).unwrap();
        prop_assume!(m.iter().flatten().all(|v| v.is_finite()));
        let mat = Matrix5::from_fn(|i, j| m[i][j]);
        let eig = SymmetricEigen::new(mat);
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-8), "{:?}", eig.eigenvalues);
    }

    #[test]
    fn representation_mean_is_symmetric(a in prop::collection::vec(-1e3f64..1e3, 12), b in prop::collection::vec(-1e3f64..1e3, 12)) {
        let ta = Tensor::from_vec(&[3, 4], a).unwrap();
        let tb = Tensor::from_vec(&[3, 4], b).unwrap();
        prop_assert_eq!(mean_pool(&ta, &tb).unwrap(), mean_pool(&tb, &ta).unwrap());
    }

    #[test]
    fn scalers_never_read_validation_rows(corpus in labelled(10, 5), bump in 0.0f64..100.0) {
        prop_assume!(corpus.sentences.len() >= 5);
        let feats = build_feature_matrix(&corpus, &LexiconTagger, &Lemmatizer::rules(), 0.1).unwrap();
        let cfg = TrainConfig::default();
        let a = prepare_split::<f64>(&corpus, &feats, None, &cfg).unwrap();
        let mut perturbed = corpus.clone();
        let val: HashSet<i64> = a.val_ids.iter().copied().collect();
        for s in perturbed.sentences.iter_mut().filter(|s| val.contains(&s.sentence_id)) {
            for t in s.targets.as_mut().unwrap() {
                *t = GazeTargets::from_array(t.to_array().map(|v| (v + bump) % 100.0));
            }
        }
        let b = prepare_split::<f64>(&perturbed, &feats, None, &cfg).unwrap();
        prop_assert_eq!(&a.scalers, &b.scalers);
        prop_assert_eq!(&a.train, &b.train);
    }
}
