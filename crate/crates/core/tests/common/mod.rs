#![allow(dead_code)]

use gazepred::corpus::{Corpus, GazeTargets, Sentence, Token};
use gazepred::features::{build_feature_matrix, FeatureMatrix, Lemmatizer, LexiconTagger};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const VOCAB: &[&str] = &[
    "the",
    "The",
    "a",
    "A",
    "I",
    "of",
    "and",
    "to",
    "in",
    "was",
    "he",
    "she",
    "it",
    "on",
    "with",
    "by",
    "from",
    "at",
    "his",
    "her",
    "their",
    "they",
    "is",
    "were",
    "an",
    "as",
    "for",
    "after",
    "born",
    "family",
    "moved",
    "city",
    "Chicago",
    "river",
    "university",
    "professor",
    "history",
    "novel",
    "received",
    "reviews",
    "critics",
    "war",
    "ended",
    "company",
    "founded",
    "Motor",
    "bridge",
    "opened",
    "harbour",
    "committee",
    "approved",
    "proposals",
    "scientists",
    "observed",
    "comet",
    "telescope",
    "painting",
    "museum",
    "library",
    "closed",
    "summer",
    "visited",
    "grandmother",
    "quickly",
    "slowly",
    "beautiful",
    "large",
    "small",
    "old",
    "new",
    "running",
    "studied",
    "1903",
    "12",
    "7",
    "1998",
    "well-known",
    "so-called",
    "U.S.",
    "Dr.",
    "(born",
    "1950)",
    "Kennedy's",
    "president",
    "elected",
    "senator",
    "married",
    "actress",
    "singer",
    "album",
    "released",
    "songs",
    "band",
    "toured",
    "Europe",
    "America",
    "during",
    "years",
    "became",
    "later",
    "first",
    "second",
    "only",
    "very",
    "also",
    "musicians",
    "extraordinarily",
    "responsibilities",
    "international",
    "organization",
    "x",
    "I'm",
    "--",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sentences drawn from [`VOCAB`]; the last word of each carries a full stop.
pub fn random_sentences(n: usize, min_len: usize, max_len: usize, seed: u64) -> Vec<Vec<String>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let len = r.random_range(min_len..=max_len);
            let mut words: Vec<String> = (0..len)
                .map(|_| VOCAB[r.random_range(0..VOCAB.len())].to_string())
                .collect();
            if let Some(last) = words.last_mut() {
                last.push('.');
            }
            words
        })
        .collect()
}

pub fn corpus_from_words(words: &[Vec<String>], targets: Option<&[Vec<GazeTargets>]>) -> Corpus {
    let sentences = words
        .iter()
        .enumerate()
        .map(|(i, ws)| Sentence {
            sentence_id: i as i64,
            tokens: ws
                .iter()
                .enumerate()
                .map(|(j, w)| Token {
                    sentence_id: i as i64,
                    word_id: j as i64,
                    text: w.clone(),
                })
                .collect(),
            targets: targets.map(|t| t[i].clone()),
        })
        .collect();
    Corpus::new(sentences).expect("valid synthetic corpus")
}

pub fn features(corpus: &Corpus) -> FeatureMatrix {
    build_feature_matrix(corpus, &LexiconTagger, &Lemmatizer::rules(), 0.1).expect("features")
}

/// Gaze-like targets from simple word properties plus noise, for smoke tests.
pub fn plausible_targets(words: &[Vec<String>], seed: u64) -> Vec<Vec<GazeTargets>> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    words
        .iter()
        .map(|ws| {
            ws.iter()
                .enumerate()
                .map(|(j, w)| {
                    let len = w.chars().filter(|c| c.is_alphanumeric()).count() as f64;
                    let end = if j + 1 == ws.len() { 1.0 } else { 0.0 };
                    let mut n = || noise.sample(&mut r);
                    let trt = (8.0 + 3.0 * len + 5.0 * end + n()).clamp(0.0, 100.0);
                    let gpt = (trt - 2.0 + 4.0 * end + n()).clamp(0.0, 100.0);
                    GazeTargets::from_array([
                        (6.0 + 2.0 * len + n()).clamp(0.0, 100.0),
                        (12.0 + 0.8 * len + n()).clamp(0.0, 100.0),
                        gpt,
                        trt,
                        (30.0 + 5.0 * len + 2.0 * n()).clamp(0.0, 100.0),
                    ])
                })
                .collect()
        })
        .collect()
}
