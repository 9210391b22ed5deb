//! Part-of-speech tags: pluggable fine-grained taggers and the collapsed tag set.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lemma::split_punctuation;
use super::looks_numeric;
use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Collapsed tag set, in one-hot order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CollapsedTag {
    NN,
    VB,
    JJ,
    RB,
    DT,
    IN,
    PRP,
    UNK,
}

impl CollapsedTag {
    pub const ALL: [CollapsedTag; 8] = [
        CollapsedTag::NN,
        CollapsedTag::VB,
        CollapsedTag::JJ,
        CollapsedTag::RB,
        CollapsedTag::DT,
        CollapsedTag::IN,
        CollapsedTag::PRP,
        CollapsedTag::UNK,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CollapsedTag::NN => "NN",
            CollapsedTag::VB => "VB",
            CollapsedTag::JJ => "JJ",
            CollapsedTag::RB => "RB",
            CollapsedTag::DT => "DT",
            CollapsedTag::IN => "IN",
            CollapsedTag::PRP => "PRP",
            CollapsedTag::UNK => "UNK",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for CollapsedTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a Penn-style fine tag onto the collapsed set. Total: unknown tags go to `UNK`.
pub fn collapse_pos_tag(fine: &str) -> CollapsedTag {
    let fine = fine.trim();
    if fine.starts_with("NN") {
        CollapsedTag::NN
    } else if fine.starts_with("VB") {
        CollapsedTag::VB
    } else if fine.starts_with("JJ") {
        CollapsedTag::JJ
    } else if fine.starts_with("RB") {
        CollapsedTag::RB
    } else if fine == "DT" || fine == "WDT" {
        CollapsedTag::DT
    } else if fine == "IN" {
        CollapsedTag::IN
    } else if fine.starts_with("PRP") {
        CollapsedTag::PRP
    } else {
        CollapsedTag::UNK
    }
}

/// One-hot vector of length 8 in [`CollapsedTag::ALL`] order.
pub fn pos_onehot(tag: CollapsedTag) -> [f64; 8] {
    let mut v = [0.0; 8];
    v[tag.index()] = 1.0;
    v
}

/// A source of fine-grained tags for whole sentences.
pub trait PosTagger: Send + Sync {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<String>>;
}

const LEXICON: &[(&str, &str)] = &[
    ("the", "DT"),
    ("a", "DT"),
    ("an", "DT"),
    ("this", "DT"),
    ("these", "DT"),
    ("those", "DT"),
    ("every", "DT"),
    ("each", "DT"),
    ("some", "DT"),
    ("any", "DT"),
    ("no", "DT"),
    ("another", "DT"),
    ("all", "DT"),
    ("both", "DT"),
    ("that", "IN"),
    ("which", "WDT"),
    ("whose", "WP$"),
    ("who", "WP"),
    ("whom", "WP"),
    ("what", "WP"),
    ("when", "WRB"),
    ("where", "WRB"),
    ("why", "WRB"),
    ("how", "WRB"),
    ("of", "IN"),
    ("in", "IN"),
    ("on", "IN"),
    ("at", "IN"),
    ("by", "IN"),
    ("for", "IN"),
    ("with", "IN"),
    ("about", "IN"),
    ("against", "IN"),
    ("between", "IN"),
    ("into", "IN"),
    ("through", "IN"),
    ("during", "IN"),
    ("before", "IN"),
    ("after", "IN"),
    ("above", "IN"),
    ("below", "IN"),
    ("from", "IN"),
    ("over", "IN"),
    ("under", "IN"),
    ("since", "IN"),
    ("until", "IN"),
    ("while", "IN"),
    ("because", "IN"),
    ("as", "IN"),
    ("than", "IN"),
    ("whether", "IN"),
    ("if", "IN"),
    ("though", "IN"),
    ("although", "IN"),
    ("upon", "IN"),
    ("within", "IN"),
    ("without", "IN"),
    ("among", "IN"),
    ("across", "IN"),
    ("behind", "IN"),
    ("beyond", "IN"),
    ("near", "IN"),
    ("toward", "IN"),
    ("towards", "IN"),
    ("throughout", "IN"),
    ("despite", "IN"),
    ("per", "IN"),
    ("via", "IN"),
    ("like", "IN"),
    ("unlike", "IN"),
    ("onto", "IN"),
    ("off", "IN"),
    ("out", "IN"),
    ("up", "RP"),
    ("down", "RP"),
    ("i", "PRP"),
    ("me", "PRP"),
    ("you", "PRP"),
    ("he", "PRP"),
    ("him", "PRP"),
    ("she", "PRP"),
    ("it", "PRP"),
    ("we", "PRP"),
    ("us", "PRP"),
    ("they", "PRP"),
    ("them", "PRP"),
    ("myself", "PRP"),
    ("yourself", "PRP"),
    ("himself", "PRP"),
    ("herself", "PRP"),
    ("itself", "PRP"),
    ("ourselves", "PRP"),
    ("themselves", "PRP"),
    ("my", "PRP$"),
    ("your", "PRP$"),
    ("his", "PRP$"),
    ("her", "PRP$"),
    ("its", "PRP$"),
    ("our", "PRP$"),
    ("their", "PRP$"),
    ("and", "CC"),
    ("but", "CC"),
    ("or", "CC"),
    ("nor", "CC"),
    ("yet", "CC"),
    ("to", "TO"),
    ("can", "MD"),
    ("could", "MD"),
    ("will", "MD"),
    ("would", "MD"),
    ("shall", "MD"),
    ("should", "MD"),
    ("may", "MD"),
    ("might", "MD"),
    ("must", "MD"),
    ("is", "VBZ"),
    ("are", "VBP"),
    ("am", "VBP"),
    ("was", "VBD"),
    ("were", "VBD"),
    ("be", "VB"),
    ("been", "VBN"),
    ("being", "VBG"),
    ("has", "VBZ"),
    ("have", "VBP"),
    ("had", "VBD"),
    ("do", "VBP"),
    ("does", "VBZ"),
    ("did", "VBD"),
    ("said", "VBD"),
    ("made", "VBN"),
    ("went", "VBD"),
    ("took", "VBD"),
    ("came", "VBD"),
    ("became", "VBD"),
    ("got", "VBD"),
    ("gave", "VBD"),
    ("found", "VBD"),
    ("knew", "VBD"),
    ("thought", "VBD"),
    ("told", "VBD"),
    ("began", "VBD"),
    ("left", "VBD"),
    ("not", "RB"),
    ("n't", "RB"),
    ("very", "RB"),
    ("also", "RB"),
    ("too", "RB"),
    ("just", "RB"),
    ("now", "RB"),
    ("then", "RB"),
    ("here", "RB"),
    ("there", "EX"),
    ("so", "RB"),
    ("only", "RB"),
    ("even", "RB"),
    ("still", "RB"),
    ("never", "RB"),
    ("always", "RB"),
    ("often", "RB"),
    ("again", "RB"),
    ("already", "RB"),
    ("soon", "RB"),
    ("ever", "RB"),
    ("quite", "RB"),
    ("rather", "RB"),
    ("almost", "RB"),
    ("later", "RB"),
    ("once", "RB"),
    ("more", "RBR"),
    ("most", "RBS"),
    ("less", "RBR"),
    ("other", "JJ"),
    ("many", "JJ"),
    ("much", "JJ"),
    ("few", "JJ"),
    ("new", "JJ"),
    ("old", "JJ"),
    ("good", "JJ"),
    ("great", "JJ"),
    ("first", "JJ"),
    ("last", "JJ"),
    ("long", "JJ"),
    ("little", "JJ"),
    ("own", "JJ"),
    ("same", "JJ"),
    ("big", "JJ"),
    ("high", "JJ"),
    ("small", "JJ"),
    ("large", "JJ"),
    ("young", "JJ"),
    ("early", "JJ"),
    ("such", "JJ"),
];

/// Lexicon lookup with suffix, capitalisation and shape heuristics; unknown words are `NN`.
#[derive(Clone, Debug, Default)]
pub struct LexiconTagger;

impl LexiconTagger {
    pub fn tag_word(&self, text: &str, position: usize) -> String {
        let (_, core, _) = split_punctuation(text);
        if core.is_empty() {
            return match text.trim() {
                "." | "!" | "?" => ".",
                "," => ",",
                ";" | ":" | "-" | "--" | "..." => ":",
                _ => "SYM",
            }
            .to_string();
        }
        if looks_numeric(core) || core.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            return "CD".into();
        }
        let lower = core.to_lowercase();
        if let Some((_, tag)) = LEXICON.iter().find(|(w, _)| *w == lower) {
            return tag.to_string();
        }
        let capitalised = core.chars().next().is_some_and(char::is_uppercase);
        if capitalised && position > 0 {
            return if lower.ends_with('s') && lower.len() > 3 {
                "NNPS"
            } else {
                "NNP"
            }
            .into();
        }
        let n = lower.chars().count();
        let suffix_tag = |suffixes: &[&str]| suffixes.iter().any(|s| lower.ends_with(s) && n > s.len() + 2);
        if suffix_tag(&["ly"]) {
            "RB"
        } else if suffix_tag(&["ing"]) {
            "VBG"
        } else if suffix_tag(&["ed"]) {
            "VBD"
        } else if suffix_tag(&["tion", "sion", "ness", "ment", "ity", "ism", "ship", "ance", "ence"]) {
            "NN"
        } else if suffix_tag(&["ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish", "ary"]) {
            "JJ"
        } else if suffix_tag(&["est"]) {
            "JJS"
        } else if suffix_tag(&["ize", "ise", "ify"]) {
            "VB"
        } else if lower.ends_with('s')
            && !lower.ends_with("ss")
            && !lower.ends_with("us")
            && !lower.ends_with("is")
            && n > 3
        {
            "NNS"
        } else {
            "NN"
        }
        .into()
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<String>> {
        Ok(sentence
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| self.tag_word(&t.text, i))
            .collect())
    }
}

/// Precomputed fine tags keyed by `(sentence_id, word_id)`.
#[derive(Clone, Debug, Default)]
pub struct SidecarTagger {
    tags: HashMap<(i64, i64), String>,
}

impl SidecarTagger {
    pub fn from_map(tags: HashMap<(i64, i64), String>) -> Self {
        Self { tags }
    }

    /// Reads a `sentence_id,word_id,tag` CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (s, w, t) = (col("sentence_id")?, col("word_id")?, col("tag")?);
        let mut tags = HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map_or(0, |p| p.line());
            let key = |i: usize| -> Result<i64> {
                rec.get(i).unwrap_or("").trim().parse().map_err(|_| Error::Parse {
                    row,
                    message: "non-integer key in tag sidecar".into(),
                })
            };
            tags.insert((key(s)?, key(w)?), rec.get(t).unwrap_or("").trim().to_string());
        }
        Ok(Self { tags })
    }
}

impl PosTagger for SidecarTagger {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<String>> {
        sentence
            .tokens
            .iter()
            .map(|t| {
                self.tags.get(&(t.sentence_id, t.word_id)).cloned().ok_or_else(|| {
                    Error::Validation(format!(
                        "no POS tag for (sentence_id, word_id) = ({}, {})",
                        t.sentence_id, t.word_id
                    ))
                })
            })
            .collect()
    }
}
