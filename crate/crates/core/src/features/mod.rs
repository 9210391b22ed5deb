//! Engineered per-token features and the column manifest that names them.

pub mod lemma;
pub mod pos;
pub mod stopwords;
pub mod tfidf;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use lemma::{lemma_len_diff, Lemmatizer};
pub use pos::{collapse_pos_tag, pos_onehot, CollapsedTag, LexiconTagger, PosTagger, SidecarTagger};
pub use tfidf::compute_tfidf;

use crate::corpus::{Corpus, Sentence, Token};
use crate::error::{Error, Result};
use lemma::split_punctuation;

/// All feature columns, in matrix order.
pub const FEATURE_COLUMNS: [&str; 14] = [
    "word_len",
    "lem_word_len",
    "stopword",
    "number",
    "endword",
    "pos_NN",
    "pos_VB",
    "pos_JJ",
    "pos_RB",
    "pos_DT",
    "pos_IN",
    "pos_PRP",
    "pos_UNK",
    "tfidf",
];

/// Named feature groups used for ablations. `pos_tag` covers the eight one-hot columns.
pub const FEATURE_GROUPS: [&str; 7] = [
    "word_len",
    "lem_word_len",
    "stopword",
    "number",
    "endword",
    "pos_tag",
    "tfidf",
];

const POS_OFFSET: usize = 5;

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// Characters in the raw token text, punctuation included.
pub fn word_len(token: &Token) -> i64 {
    token.text.chars().count() as i64
}

pub fn is_stopword(token: &Token) -> f64 {
    let (_, core, _) = split_punctuation(&token.text);
    flag(stopwords::is_stopword_str(&core.to_lowercase()))
}

/// Digits with an optional single decimal point; the integer part may use
/// comma thousands separators.
pub(crate) fn looks_numeric(core: &str) -> bool {
    let (int, frac) = match core.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (core, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some(f) = frac {
        if !digits(f) {
            return false;
        }
    }
    if digits(int) {
        return true;
    }
    let groups: Vec<&str> = int.split(',').collect();
    groups.len() > 1
        && (1..=3).contains(&groups[0].len())
        && digits(groups[0])
        && groups[1..].iter().all(|g| g.len() == 3 && digits(g))
}

pub fn is_number(token: &Token) -> f64 {
    let (_, core, _) = split_punctuation(&token.text);
    flag(looks_numeric(core))
}

pub fn is_endword(index: usize, sentence: &Sentence) -> f64 {
    flag(index + 1 == sentence.len())
}

/// The full feature record for one token.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub word_len: i64,
    pub lem_word_len: i64,
    pub stopword: f64,
    pub number: f64,
    pub endword: f64,
    pub pos: CollapsedTag,
    pub tfidf: f64,
}

impl FeatureVector {
    pub fn pos_onehot(&self) -> [f64; 8] {
        pos_onehot(self.pos)
    }

    pub fn to_row(&self) -> [f64; 14] {
        let mut row = [0.0; 14];
        row[0] = self.word_len as f64;
        row[1] = self.lem_word_len as f64;
        row[2] = self.stopword;
        row[3] = self.number;
        row[4] = self.endword;
        row[POS_OFFSET..POS_OFFSET + 8].copy_from_slice(&self.pos_onehot());
        row[13] = self.tfidf;
        row
    }
}

/// Resolves feature or group names to column indices, in canonical column order.
pub fn resolve_columns<S: AsRef<str>>(names: &[S]) -> Result<Vec<usize>> {
    if names.is_empty() {
        return Err(Error::Config("empty feature subset".into()));
    }
    let mut picked = [false; 14];
    for name in names {
        let name = name.as_ref().trim();
        if name == "all" {
            picked = [true; 14];
        } else if name == "pos_tag" {
            picked[POS_OFFSET..POS_OFFSET + 8].fill(true);
        } else if let Some(i) = FEATURE_COLUMNS.iter().position(|&c| c == name) {
            picked[i] = true;
        } else {
            return Err(Error::Config(format!("unknown feature `{name}`")));
        }
    }
    Ok((0..14).filter(|&i| picked[i]).collect())
}

/// Columns of a feature group (or single column) by name.
pub fn group_columns(group: &str) -> Result<Vec<usize>> {
    resolve_columns(&[group])
}

/// SHA-256 over the newline-joined column names.
pub fn manifest_hash<S: AsRef<str>>(columns: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, c) in columns.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(c.as_ref().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Per-token features for a corpus, row-aligned with `corpus.tokens()`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub keys: Vec<(i64, i64)>,
    pub words: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `offsets[i]..offsets[i + 1]` are the rows of sentence `i`.
    pub offsets: Vec<usize>,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn sentence_rows(&self, i: usize) -> &[Vec<f64>] {
        &self.rows[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn manifest_hash(&self) -> String {
        manifest_hash(&self.columns)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Keeps only the named features or groups.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let wanted = resolve_columns(names)?;
        let idx = wanted
            .iter()
            .map(|&w| {
                self.columns
                    .iter()
                    .position(|c| c == FEATURE_COLUMNS[w])
                    .ok_or_else(|| Error::Config(format!("feature `{}` not in matrix", FEATURE_COLUMNS[w])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            keys: self.keys.clone(),
            words: self.words.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            offsets: self.offsets.clone(),
        })
    }

    /// Sentence id of each block of rows.
    pub fn sentence_ids(&self) -> Vec<i64> {
        self.offsets[..self.offsets.len() - 1]
            .iter()
            .map(|&o| self.keys[o].0)
            .collect()
    }

    /// The rows of the given sentences, in the order listed.
    pub fn sentences(&self, ids: &[i64]) -> Result<FeatureMatrix> {
        let index: std::collections::HashMap<i64, usize> = self
            .sentence_ids()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut out = FeatureMatrix {
            columns: self.columns.clone(),
            keys: Vec::new(),
            words: Vec::new(),
            rows: Vec::new(),
            offsets: vec![0],
        };
        for id in ids {
            let &i = index
                .get(id)
                .ok_or_else(|| Error::Validation(format!("sentence {id} has no feature rows")))?;
            let range = self.offsets[i]..self.offsets[i + 1];
            out.keys.extend_from_slice(&self.keys[range.clone()]);
            out.words.extend_from_slice(&self.words[range.clone()]);
            out.rows.extend_from_slice(&self.rows[range]);
            out.offsets.push(out.rows.len());
        }
        Ok(out)
    }

    /// CSV with `sentence_id,word_id,word` followed by the manifest columns.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sentence_id".to_string(), "word_id".into(), "word".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for ((key, word), row) in self.keys.iter().zip(&self.words).zip(&self.rows) {
            let mut rec = vec![key.0.to_string(), key.1.to_string(), word.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let bytes = self.to_csv()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }
}

/// Extracts [`FeatureVector`]s for every token, sentence by sentence.
pub fn extract_features(
    corpus: &Corpus,
    tagger: &dyn PosTagger,
    lemmatizer: &Lemmatizer,
    tfidf_error: f64,
) -> Result<Vec<Vec<FeatureVector>>> {
    let tfidf = compute_tfidf(corpus, tfidf_error);
    corpus
        .sentences
        .par_iter()
        .map(|s| {
            let tags = tagger.tag(s)?;
            if tags.len() != s.len() {
                return Err(Error::Alignment {
                    what: "POS tags",
                    expected: s.len(),
                    got: tags.len(),
                });
            }
            Ok(s.tokens
                .iter()
                .zip(&tags)
                .enumerate()
                .map(|(i, (t, tag))| FeatureVector {
                    word_len: word_len(t),
                    lem_word_len: lemma_len_diff(t, lemmatizer),
                    stopword: is_stopword(t),
                    number: is_number(t),
                    endword: is_endword(i, s),
                    pos: collapse_pos_tag(tag),
                    tfidf: tfidf[&(t.sentence_id, t.word_id)],
                })
                .collect())
        })
        .collect()
}

/// The full 14-column matrix and its manifest.
pub fn build_feature_matrix(
    corpus: &Corpus,
    tagger: &dyn PosTagger,
    lemmatizer: &Lemmatizer,
    tfidf_error: f64,
) -> Result<FeatureMatrix> {
    let vectors = extract_features(corpus, tagger, lemmatizer, tfidf_error)?;
    let mut offsets = vec![0];
    let mut rows = Vec::with_capacity(corpus.num_tokens());
    for s in &vectors {
        rows.extend(s.iter().map(|v| v.to_row().to_vec()));
        offsets.push(rows.len());
    }
    Ok(FeatureMatrix {
        columns: FEATURE_COLUMNS.iter().map(|c| c.to_string()).collect(),
        keys: corpus.tokens().map(|t| (t.sentence_id, t.word_id)).collect(),
        words: corpus.tokens().map(|t| t.text.clone()).collect(),
        rows,
        offsets,
    })
}
