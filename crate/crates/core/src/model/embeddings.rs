//! Frozen token representations for the language path.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::features::lemma::split_punctuation;
use crate::neural::Tensor;
use crate::scalar::Scalar;

/// Word vectors read from a whitespace-separated text file.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    vocab: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    unk: Vec<f64>,
    case_fold: bool,
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` rows. The first occurrence of a
    /// (folded) token wins; the unknown vector is the mean of the kept rows.
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>, case_fold: bool) -> Result<Self> {
        let Some(dim) = rows.first().map(|r| r.1.len()) else {
            return Err(Error::Validation("embedding table has no rows".into()));
        };
        if dim == 0 {
            return Err(Error::Validation("embedding vectors have zero width".into()));
        }
        let mut vocab = HashMap::new();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
        for (token, v) in rows {
            if v.len() != dim {
                return Err(Error::Alignment {
                    what: "embedding components",
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("embedding vector for `{token}`")));
            }
            let key = if case_fold { token.to_lowercase() } else { token };
            if let Entry::Vacant(slot) = vocab.entry(key) {
                slot.insert(vectors.len());
                vectors.push(v);
            }
        }
        let mut unk = vec![0.0; dim];
        for v in &vectors {
            for (u, x) in unk.iter_mut().zip(v) {
                *u += x;
            }
        }
        let n = vectors.len() as f64;
        unk.iter_mut().for_each(|u| *u /= n);
        Ok(Self {
            vocab,
            vectors,
            unk,
            case_fold,
        })
    }

    /// Parses `token v1 … vd` lines. A leading `V d` header line is skipped.
    pub fn parse(text: &str, case_fold: bool) -> Result<Self> {
        let mut rows = Vec::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i as u64 + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let values = rest
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    row: lineno,
                    message: format!("bad embedding component: {e}"),
                })?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::Parse {
                        row: lineno,
                        message: format!("expected {d} components, got {}", values.len()),
                    })
                }
                _ => {}
            }
            rows.push((token.to_string(), values));
        }
        Self::from_rows(rows, case_fold)
    }

    pub fn load(path: &Path, case_fold: bool) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, case_fold)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unk.len()
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index_of(token).is_some()
    }

    fn key<'a>(&self, token: &'a str) -> std::borrow::Cow<'a, str> {
        if self.case_fold {
            token.to_lowercase().into()
        } else {
            token.into()
        }
    }

    fn index_of(&self, token: &str) -> Option<usize> {
        self.vocab.get(self.key(token).as_ref()).copied()
    }

    /// Vector for a raw token: exact (folded) match first, then the token with
    /// surrounding punctuation removed, then the unknown vector.
    pub fn lookup(&self, token: &str) -> &[f64] {
        let idx = self.index_of(token).or_else(|| {
            let (_, core, _) = split_punctuation(token);
            (!core.is_empty()).then(|| self.index_of(core)).flatten()
        });
        idx.map_or(&self.unk, |i| &self.vectors[i])
    }
}

/// Externally computed per-token vectors keyed by `(sentence_id, word_id)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualEmbeddings {
    vectors: HashMap<(i64, i64), Vec<f64>>,
    dim: usize,
}

impl ContextualEmbeddings {
    pub fn from_map(vectors: HashMap<(i64, i64), Vec<f64>>) -> Result<Self> {
        let dim = vectors
            .values()
            .next()
            .map(Vec::len)
            .ok_or_else(|| Error::Validation("contextual embedding file has no rows".into()))?;
        if let Some(v) = vectors.values().find(|v| v.len() != dim) {
            return Err(Error::Alignment {
                what: "contextual embedding components",
                expected: dim,
                got: v.len(),
            });
        }
        Ok(Self { vectors, dim })
    }

    /// Reads a CSV with `sentence_id,word_id` followed by the vector components.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let expect = |i: usize, name: &str| {
            if headers.get(i).map(str::trim) == Some(name) {
                Ok(())
            } else {
                Err(Error::MissingColumn(name.to_string()))
            }
        };
        expect(0, "sentence_id")?;
        expect(1, "word_id")?;
        let mut vectors = HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map_or(0, |p| p.line());
            let parse_err = |m: String| Error::Parse { row, message: m };
            let key = |i: usize| -> Result<i64> {
                rec.get(i)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("non-integer key".into()))
            };
            let v = rec
                .iter()
                .skip(2)
                .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(parse_err("non-finite component".into()));
            }
            vectors.insert((key(0)?, key(1)?), v);
        }
        Self::from_map(vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, sentence_id: i64, word_id: i64) -> Option<&[f64]> {
        self.vectors.get(&(sentence_id, word_id)).map(Vec::as_slice)
    }
}

/// Where the language path's per-token inputs come from.
#[derive(Clone, Debug, PartialEq)]
pub enum LanguageSource {
    Embeddings(EmbeddingTable),
    Contextual(ContextualEmbeddings),
}

impl LanguageSource {
    pub fn dim(&self) -> usize {
        match self {
            LanguageSource::Embeddings(t) => t.dim(),
            LanguageSource::Contextual(c) => c.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LanguageSource::Embeddings(_) => "embeddings",
            LanguageSource::Contextual(_) => "contextual",
        }
    }

    /// `[T × dim]` input matrix for one sentence.
    pub fn sentence_matrix<T: Scalar>(&self, sentence: &Sentence) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(sentence.len() * self.dim());
        for t in &sentence.tokens {
            let v = match self {
                LanguageSource::Embeddings(table) => table.lookup(&t.text),
                LanguageSource::Contextual(c) => c.get(t.sentence_id, t.word_id).ok_or_else(|| {
                    Error::Validation(format!(
                        "no contextual vector for (sentence_id, word_id) = ({}, {})",
                        t.sentence_id, t.word_id
                    ))
                })?,
            };
            data.extend(v.iter().map(|&x| T::of(x)));
        }
        Tensor::matrix(sentence.len(), self.dim(), data)
    }
}
