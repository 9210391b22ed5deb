//! Token-level gaze CSV: loading, validation, splitting and prediction output.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EOS_MARKER: &str = "<EOS>";

/// Column names of the five gaze targets, in file and vector order.
pub const TARGET_NAMES: [&str; 5] = ["nFix", "FFD", "GPT", "TRT", "fixProp"];

pub const TARGET_MIN: f64 = 0.0;
pub const TARGET_MAX: f64 = 100.0;

/// Index of a target within [`TARGET_NAMES`].
pub fn target_index(name: &str) -> Option<usize> {
    TARGET_NAMES.iter().position(|&t| t == name)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub sentence_id: i64,
    pub word_id: i64,
    pub text: String,
}

/// The five per-token gaze measures in original (0–100) units.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GazeTargets {
    pub nFix: f64,
    pub FFD: f64,
    pub GPT: f64,
    pub TRT: f64,
    pub fixProp: f64,
}

impl GazeTargets {
    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            nFix: v[0],
            FFD: v[1],
            GPT: v[2],
            TRT: v[3],
            fixProp: v[4],
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.nFix, self.FFD, self.GPT, self.TRT, self.fixProp]
    }

    pub fn clipped(self) -> Self {
        Self::from_array(self.to_array().map(|v| v.clamp(TARGET_MIN, TARGET_MAX)))
    }

    fn in_range(self) -> bool {
        self.to_array()
            .iter()
            .all(|v| v.is_finite() && (TARGET_MIN..=TARGET_MAX).contains(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: i64,
    pub tokens: Vec<Token>,
    pub targets: Option<Vec<GazeTargets>>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub has_targets: bool,
}

impl Corpus {
    /// Builds a corpus, checking the sentence-level invariants.
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Validation("corpus has no sentences".into()));
        }
        let has_targets = sentences[0].targets.is_some();
        let mut seen = HashSet::new();
        for s in &sentences {
            if !seen.insert(s.sentence_id) {
                return Err(Error::Validation(format!("duplicate sentence_id {}", s.sentence_id)));
            }
            if s.tokens.is_empty() {
                return Err(Error::Validation(format!("sentence {} has no tokens", s.sentence_id)));
            }
            match &s.targets {
                Some(t) if t.len() != s.tokens.len() => {
                    return Err(Error::Alignment {
                        what: "target rows",
                        expected: s.tokens.len(),
                        got: t.len(),
                    })
                }
                Some(_) if !has_targets => {
                    return Err(Error::Validation("mixed labelled and unlabelled sentences".into()))
                }
                None if has_targets => return Err(Error::Validation("mixed labelled and unlabelled sentences".into())),
                _ => {}
            }
        }
        Ok(Self { sentences, has_targets })
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    /// Gold targets of every token in corpus order.
    pub fn targets(&self) -> Option<Vec<GazeTargets>> {
        if !self.has_targets {
            return None;
        }
        Some(
            self.sentences
                .iter()
                .flat_map(|s| s.targets.as_deref().unwrap_or_default().iter().copied())
                .collect(),
        )
    }

    /// Keeps the sentences whose ids are in `ids`, in corpus order.
    pub fn subset(&self, ids: &HashSet<i64>) -> Result<Corpus> {
        Corpus::new(
            self.sentences
                .iter()
                .filter(|s| ids.contains(&s.sentence_id))
                .cloned()
                .collect(),
        )
    }
}

struct Columns {
    sentence_id: usize,
    word_id: usize,
    word: usize,
    targets: Option<[usize; 5]>,
}

fn locate_columns(headers: &csv::StringRecord, expect_targets: bool) -> Result<Columns> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let targets = if expect_targets {
        let mut idx = [0; 5];
        for (slot, name) in idx.iter_mut().zip(TARGET_NAMES) {
            *slot = find(name)?;
        }
        Some(idx)
    } else {
        None
    };
    Ok(Columns {
        sentence_id: find("sentence_id")?,
        word_id: find("word_id")?,
        word: find("word")?,
        targets,
    })
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, row: u64, column: &str) -> Result<T> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| Error::Parse {
        row,
        message: format!("column {column}: cannot parse {raw:?}"),
    })
}

/// Loads a token-level gaze CSV.
///
/// Rows are grouped by `sentence_id` (sentences ordered by first appearance),
/// tokens sorted by `word_id`, and `<EOS>` tokens dropped together with their
/// target rows. Row numbers in errors are 1-based file lines.
pub fn load_corpus(path: &Path, expect_targets: bool) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, expect_targets)
}

pub fn read_corpus<R: std::io::Read>(reader: R, expect_targets: bool) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = locate_columns(&headers, expect_targets)?;

    type Row = (i64, String, Option<GazeTargets>, u64);
    let mut order: Vec<i64> = Vec::new();
    let mut groups: HashMap<i64, Vec<Row>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let sentence_id: i64 = parse_field(&record, cols.sentence_id, row, "sentence_id")?;
        let word_id: i64 = parse_field(&record, cols.word_id, row, "word_id")?;
        let text = record.get(cols.word).unwrap_or("").to_string();
        let targets = match cols.targets {
            Some(idx) => {
                let mut v = [0.0; 5];
                for (k, (&i, name)) in idx.iter().zip(TARGET_NAMES).enumerate() {
                    v[k] = parse_field(&record, i, row, name)?;
                }
                let t = GazeTargets::from_array(v);
                if !t.in_range() {
                    return Err(Error::Validation(format!(
                        "row {row}: gold targets {v:?} outside [{TARGET_MIN}, {TARGET_MAX}]"
                    )));
                }
                Some(t)
            }
            None => None,
        };
        let entry = groups.entry(sentence_id).or_insert_with(|| {
            order.push(sentence_id);
            Vec::new()
        });
        entry.push((word_id, text, targets, row));
    }

    let mut sentences = Vec::with_capacity(order.len());
    for sid in order {
        let mut rows = groups.remove(&sid).expect("group exists for recorded id");
        rows.sort_by_key(|r| r.0);
        for pair in rows.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Validation(format!(
                    "duplicate (sentence_id, word_id) = ({sid}, {}) at row {}",
                    pair[1].0, pair[1].3
                )));
            }
            if pair[1].0 != pair[0].0 + 1 {
                return Err(Error::Validation(format!(
                    "sentence {sid}: word_id jumps from {} to {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        let mut tokens = Vec::with_capacity(rows.len());
        let mut targets = Vec::with_capacity(rows.len());
        for (word_id, text, t, row) in rows {
            if text.trim() == EOS_MARKER {
                continue;
            }
            if text.is_empty() {
                return Err(Error::Validation(format!("row {row}: empty token text")));
            }
            tokens.push(Token {
                sentence_id: sid,
                word_id,
                text,
            });
            if let Some(t) = t {
                targets.push(t);
            }
        }
        if tokens.is_empty() {
            return Err(Error::Validation(format!(
                "sentence {sid} has no tokens after removing {EOS_MARKER}"
            )));
        }
        sentences.push(Sentence {
            sentence_id: sid,
            tokens,
            targets: expect_targets.then_some(targets),
        });
    }
    Corpus::new(sentences)
}

/// Partitions sentences into (train, validation).
///
/// The assignment depends only on `seed`, the set of sentence ids and `train_ratio`:
/// ids are sorted, shuffled with a seeded ChaCha8 generator, and the first
/// `round(train_ratio · n)` go to training. Each side keeps corpus order.
pub fn split_train_val(corpus: &Corpus, train_ratio: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !corpus.has_targets {
        return Err(Error::Validation("cannot split an unlabelled corpus".into()));
    }
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!("train ratio {train_ratio} must lie in (0, 1)")));
    }
    let mut ids: Vec<i64> = corpus.sentences.iter().map(|s| s.sentence_id).collect();
    let n = ids.len();
    let n_train = (train_ratio * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Config(format!(
            "train ratio {train_ratio} on {n} sentences leaves one side empty"
        )));
    }
    ids.sort_unstable();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_ids: HashSet<i64> = ids[..n_train].iter().copied().collect();
    let val_ids: HashSet<i64> = ids[n_train..].iter().copied().collect();
    Ok((corpus.subset(&train_ids)?, corpus.subset(&val_ids)?))
}

/// Writes per-token predictions, clipped to the target range, as
/// `sentence_id,word_id,word,nFix,FFD,GPT,TRT,fixProp`.
pub fn write_predictions(path: &Path, corpus: &Corpus, predictions: &[GazeTargets], decimals: usize) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let bytes = predictions_csv(corpus, predictions, decimals)?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn predictions_csv(corpus: &Corpus, predictions: &[GazeTargets], decimals: usize) -> Result<Vec<u8>> {
    let expected = corpus.num_tokens();
    if predictions.len() != expected {
        return Err(Error::Alignment {
            what: "predictions",
            expected,
            got: predictions.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sentence_id", "word_id", "word"];
    header.extend(TARGET_NAMES);
    wtr.write_record(&header)?;
    for (token, pred) in corpus.tokens().zip(predictions) {
        let mut rec = vec![
            token.sentence_id.to_string(),
            token.word_id.to_string(),
            token.text.clone(),
        ];
        rec.extend(pred.clipped().to_array().iter().map(|v| format!("{v:.decimals$}")));
        wtr.write_record(&rec)?;
    }
    wtr.into_inner().map_err(|e| Error::Serialize(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "sentence_id,word_id,word,nFix,FFD,GPT,TRT,fixProp\n";

    fn parse(body: &str, expect: bool) -> Result<Corpus> {
        read_corpus(body.as_bytes(), expect)
    }

    #[test]
    fn eos_rows_are_dropped_with_their_targets() {
        let csv = format!("{HEADER}0,0,The,1,2,3,4,5\n0,1,cat,6,7,8,9,10\n0,2,<EOS>,0,0,0,0,0\n");
        let c = parse(&csv, true).unwrap();
        assert_eq!(c.sentences.len(), 1);
        let s = &c.sentences[0];
        let words: Vec<_> = s.tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["The", "cat"]);
        assert_eq!(s.targets.as_ref().unwrap().len(), 2);
        assert_eq!(s.targets.as_ref().unwrap()[1].nFix, 6.0);
    }

    #[test]
    fn unlabelled_layout() {
        let c = parse("sentence_id,word_id,word\n3,0,Hello\n3,1,world\n", false).unwrap();
        assert!(!c.has_targets);
        assert!(c.sentences[0].targets.is_none());
        // a labelled file can also be read as unlabelled
        let c = parse(&format!("{HEADER}0,0,a,1,1,1,1,1\n"), false).unwrap();
        assert!(!c.has_targets);
    }

    #[test]
    fn schema_and_value_errors() {
        let err = parse("sentence_id,word_id,word,nFix,FFD,GPT,TRT\n0,0,a,1,1,1,1\n", true).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "fixProp"), "{err}");

        let err = parse(&format!("{HEADER}0,0,a,1,1,1,1,1\n0,1,b,x,1,1,1,1\n"), true).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");

        let err = parse(&format!("{HEADER}0,0,a,-1,1,1,1,1\n"), true).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");

        let err = parse(&format!("{HEADER}0,0,a,1,1,1,1,1\n0,0,b,1,1,1,1,1\n"), true).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn tokens_sorted_by_word_id_and_sentences_by_first_appearance() {
        let csv = format!("{HEADER}5,1,b,1,1,1,1,1\n2,0,x,1,1,1,1,1\n5,0,a,1,1,1,1,1\n");
        let c = parse(&csv, true).unwrap();
        assert_eq!(c.sentences[0].sentence_id, 5);
        assert_eq!(c.sentences[0].tokens[0].text, "a");
        assert_eq!(c.sentences[1].sentence_id, 2);
    }

    fn ten_sentences() -> Corpus {
        let mut csv = HEADER.to_string();
        for s in 0..10 {
            csv.push_str(&format!("{s},0,w{s},1,2,3,4,5\n"));
        }
        parse(&csv, true).unwrap()
    }

    #[test]
    fn split_counts_and_determinism() {
        let c = ten_sentences();
        let (train, val) = split_train_val(&c, 0.8, 7).unwrap();
        assert_eq!((train.sentences.len(), val.sentences.len()), (8, 2));
        let (train2, val2) = split_train_val(&c, 0.8, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(val, val2);
        assert!(split_train_val(&c, 1.0, 7).is_err());
        assert!(split_train_val(&c, 0.01, 7).is_err());
    }

    #[test]
    fn prediction_output_format() {
        let c = parse(&format!("{HEADER}0,0,The,1,2,3,4,5\n0,1,cat,6,7,8,9,10\n"), true).unwrap();
        let preds = vec![
            GazeTargets::from_array([103.2, 1.0, 2.0, 3.0, 4.0]),
            GazeTargets::from_array([-3.0, 1.23456, 2.0, 3.0, 4.0]),
        ];
        let text = String::from_utf8(predictions_csv(&c, &preds, 4).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], HEADER.trim_end());
        assert_eq!(lines[1], "0,0,The,100.0000,1.0000,2.0000,3.0000,4.0000");
        assert_eq!(lines[2], "0,1,cat,0.0000,1.2346,2.0000,3.0000,4.0000");
        assert_eq!(lines.len(), 3);

        let err = predictions_csv(&c, &preds[..1], 4).unwrap_err();
        assert!(err.to_string().contains("expected 2"), "{err}");
    }
}
