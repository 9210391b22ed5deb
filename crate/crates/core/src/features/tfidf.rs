//! Sentence-level TF-IDF with smoothed idf and l2-normalised document vectors.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Corpus;

/// Value assigned to the short function words "a", "A" and "I" when they carry no term.
pub const SHORT_WORD_FALLBACK: f64 = 0.01;

/// Lowercased alphanumeric runs of at least two characters.
pub fn terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            current.push(c);
        } else {
            if current.chars().count() >= 2 {
                out.push(current.to_lowercase());
            }
            current.clear();
        }
    }
    out
}

fn fallback(text: &str, tfidf_error: f64) -> f64 {
    if matches!(text, "a" | "A" | "I") {
        SHORT_WORD_FALLBACK
    } else {
        tfidf_error
    }
}

/// TF-IDF weight for every token, keyed by `(sentence_id, word_id)`.
///
/// Each sentence is one document. A token that yields exactly one term takes
/// that term's weight in its sentence; any other token (no term, or several
/// terms such as a hyphenated compound) takes the fallback constant.
pub fn compute_tfidf(corpus: &Corpus, tfidf_error: f64) -> HashMap<(i64, i64), f64> {
    let doc_terms: Vec<Vec<Vec<String>>> = corpus
        .sentences
        .iter()
        .map(|s| s.tokens.iter().map(|t| terms(&t.text)).collect())
        .collect();

    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in &doc_terms {
        let mut seen: Vec<&str> = doc.iter().flatten().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let n_docs = doc_terms.len() as f64;
    let idf = |t: &str| ((1.0 + n_docs) / (1.0 + df[t] as f64)).ln() + 1.0;

    let mut out = HashMap::with_capacity(corpus.num_tokens());
    for (sentence, doc) in corpus.sentences.iter().zip(&doc_terms) {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in doc.iter().flatten() {
            *counts.entry(t).or_default() += 1;
        }
        let weights: BTreeMap<&str, f64> = counts.iter().map(|(&t, &c)| (t, c as f64 * idf(t))).collect();
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        for (token, token_terms) in sentence.tokens.iter().zip(doc) {
            let value = match token_terms.as_slice() {
                [only] => weights[only.as_str()] / norm,
                _ => fallback(&token.text, tfidf_error),
            };
            out.insert((token.sentence_id, token.word_id), value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};

    fn corpus(sentences: &[&str]) -> Corpus {
        Corpus::new(
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| Sentence {
                    sentence_id: i as i64,
                    tokens: s
                        .split_whitespace()
                        .enumerate()
                        .map(|(j, w)| Token {
                            sentence_id: i as i64,
                            word_id: j as i64,
                            text: w.to_string(),
                        })
                        .collect(),
                    targets: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn term_pattern() {
        assert_eq!(terms("didn't"), ["didn"]);
        assert_eq!(terms("well-known"), ["well", "known"]);
        assert!(terms("7").is_empty());
        assert!(terms("I").is_empty());
        assert_eq!(terms("Cat."), ["cat"]);
    }

    #[test]
    fn two_document_example() {
        let c = corpus(&["good morning", "good night"]);
        let v = compute_tfidf(&c, 0.1);
        // idf(good) = 1, idf(morning) = ln(3/2) + 1
        let m = (1.5f64).ln() + 1.0;
        let norm = (1.0 + m * m).sqrt();
        assert!((v[&(0, 0)] - 1.0 / norm).abs() < 1e-12);
        assert!((v[&(0, 1)] - m / norm).abs() < 1e-12);
        assert!((v[&(0, 0)] - 0.580).abs() < 1e-3);
        assert!((v[&(0, 1)] - 0.815).abs() < 1e-3);
    }

    #[test]
    fn fallback_routing() {
        let c = corpus(&["I saw a well-known 7 A"]);
        let v = compute_tfidf(&c, 0.1);
        assert_eq!(v[&(0, 0)], 0.01);
        assert_eq!(v[&(0, 2)], 0.01);
        assert_eq!(v[&(0, 3)], 0.1);
        assert_eq!(v[&(0, 4)], 0.1);
        assert_eq!(v[&(0, 5)], 0.01);
        // the remaining terms are saw, well, known, each with idf 1
        assert!((v[&(0, 1)] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(compute_tfidf(&c, 0.3)[&(0, 4)], 0.3);
    }
}
