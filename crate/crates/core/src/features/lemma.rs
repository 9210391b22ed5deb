//! Rule-based English lemmatizer.
//!
//! Lookup is case-insensitive: an exception table first, then suffix rules for
//! `-ies`, `-es`, `-s`, `-ing`, `-ed` with consonant-doubling undo and silent-`e`
//! restoration. Words the rules do not recognise lemmatize to themselves.

use std::collections::HashMap;
use std::path::Path;

use crate::corpus::Token;
use crate::error::{Error, Result};

const EXCEPTIONS: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("doing", "do"),
    ("went", "go"),
    ("gone", "go"),
    ("goes", "go"),
    ("saw", "see"),
    ("seen", "see"),
    ("took", "take"),
    ("taken", "take"),
    ("made", "make"),
    ("said", "say"),
    ("says", "say"),
    ("got", "get"),
    ("came", "come"),
    ("knew", "know"),
    ("known", "know"),
    ("thought", "think"),
    ("found", "find"),
    ("gave", "give"),
    ("given", "give"),
    ("told", "tell"),
    ("became", "become"),
    ("left", "leave"),
    ("felt", "feel"),
    ("brought", "bring"),
    ("began", "begin"),
    ("begun", "begin"),
    ("kept", "keep"),
    ("held", "hold"),
    ("wrote", "write"),
    ("written", "write"),
    ("stood", "stand"),
    ("heard", "hear"),
    ("meant", "mean"),
    ("met", "meet"),
    ("ran", "run"),
    ("paid", "pay"),
    ("sat", "sit"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("led", "lead"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("lost", "lose"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("sent", "send"),
    ("built", "build"),
    ("understood", "understand"),
    ("drew", "draw"),
    ("drawn", "draw"),
    ("broke", "break"),
    ("broken", "break"),
    ("spent", "spend"),
    ("rose", "rise"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("bought", "buy"),
    ("wore", "wear"),
    ("worn", "wear"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("won", "win"),
    ("fought", "fight"),
    ("taught", "teach"),
    ("caught", "catch"),
    ("sold", "sell"),
    ("died", "die"),
    ("lying", "lie"),
    ("dying", "die"),
    ("using", "use"),
    ("used", "use"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("people", "person"),
    ("lives", "life"),
    ("wives", "wife"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("halves", "half"),
    ("wolves", "wolf"),
];

/// Words whose endings look inflectional but are not.
const FIXED: &[&str] = &[
    "this",
    "his",
    "its",
    "us",
    "thus",
    "yes",
    "bus",
    "gas",
    "news",
    "series",
    "species",
    "always",
    "perhaps",
    "sometimes",
    "during",
    "thing",
    "nothing",
    "something",
    "anything",
    "everything",
    "king",
    "ring",
    "spring",
    "string",
    "morning",
    "evening",
    "bring",
    "sing",
    "wing",
    "swing",
    "ceiling",
    "wedding",
    "pudding",
    "bed",
    "red",
    "need",
    "seed",
    "speed",
    "feed",
    "indeed",
    "hundred",
    "united",
    "sacred",
    "naked",
    "wicked",
    "kindred",
    "bless",
    "less",
    "unless",
    "across",
    "chaos",
    "basis",
    "analysis",
    "crisis",
    "thesis",
    "status",
    "virus",
    "campus",
    "bonus",
    "focus",
    "census",
    "famous",
    "various",
    "serious",
    "previous",
    "was",
    "has",
    "does",
    "cross",
    "boss",
    "loss",
    "miss",
    "kiss",
    "gross",
    "press",
    "dress",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| is_vowel(c) || c == 'y')
}

/// Consonant-vowel-consonant ending where the last consonant is not w, x or y.
fn ends_cvc(s: &str) -> bool {
    let c: Vec<char> = s.chars().collect();
    let n = c.len();
    n >= 2
        && !is_vowel(c[n - 1])
        && !matches!(c[n - 1], 'w' | 'x' | 'y')
        && is_vowel(c[n - 2])
        && (n == 2 || !is_vowel(c[n - 3]))
}

fn undo_verb_suffix(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 3 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) && !matches!(chars[n - 1], 'l' | 's' | 'z') {
        return chars[..n - 1].iter().collect();
    }
    if n <= 3 && ends_cvc(stem) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Lemma of a lowercase alphabetic word.
pub fn lemmatize_word(word: &str) -> String {
    if let Some(&(_, lemma)) = EXCEPTIONS.iter().find(|(w, _)| *w == word) {
        return lemma.to_string();
    }
    let n = word.chars().count();
    if FIXED.contains(&word) || n <= 3 || !word.chars().all(|c| c.is_ascii_alphabetic()) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if n > 4 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("ied") {
        if n > 4 {
            return format!("{stem}y");
        }
    }
    if word.ends_with("sses") {
        return word[..word.len() - 2].to_string();
    }
    for suffix in ["xes", "ches", "shes", "zes"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            return format!("{stem}{}", &suffix[..suffix.len() - 2]);
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        return word[..word.len() - 1].to_string();
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.chars().count() >= 2 && has_vowel(stem) {
            return undo_verb_suffix(stem);
        }
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if word.ends_with("eed") {
            return word.to_string();
        }
        if stem.chars().count() >= 2 && has_vowel(stem) {
            return undo_verb_suffix(stem);
        }
    }
    word.to_string()
}

/// Splits `text` into leading punctuation, core, trailing punctuation.
pub(crate) fn split_punctuation(text: &str) -> (&str, &str, &str) {
    let start = text.find(|c: char| c.is_alphanumeric()).unwrap_or(text.len());
    let end = text
        .rfind(|c: char| c.is_alphanumeric())
        .map_or(start, |i| i + text[i..].chars().next().map_or(1, char::len_utf8));
    let end = end.max(start);
    (&text[..start], &text[start..end], &text[end..])
}

/// Source of lemmas: the built-in rules, optionally overridden per token.
#[derive(Clone, Debug, Default)]
pub struct Lemmatizer {
    overrides: HashMap<(i64, i64), String>,
}

impl Lemmatizer {
    pub fn rules() -> Self {
        Self::default()
    }

    /// Loads `sentence_id,word_id,lemma` overrides.
    pub fn with_sidecar(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (s, w, l) = (col("sentence_id")?, col("word_id")?, col("lemma")?);
        let mut overrides = HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map_or(0, |p| p.line());
            let parse = |i: usize| -> Result<i64> {
                rec.get(i).unwrap_or("").trim().parse().map_err(|_| Error::Parse {
                    row,
                    message: "non-integer key in lemma sidecar".into(),
                })
            };
            overrides.insert((parse(s)?, parse(w)?), rec.get(l).unwrap_or("").to_string());
        }
        Ok(Self { overrides })
    }

    /// Lemma string for a token: the lowercased lemma of its alphanumeric core with
    /// surrounding punctuation kept. Unrecognised words come back unchanged.
    pub fn lemma(&self, token: &Token) -> String {
        if let Some(l) = self.overrides.get(&(token.sentence_id, token.word_id)) {
            return l.clone();
        }
        let (pre, core, post) = split_punctuation(&token.text);
        let lower = core.to_lowercase();
        let lemma = lemmatize_word(&lower);
        if lemma == lower {
            token.text.clone()
        } else {
            format!("{pre}{lemma}{post}")
        }
    }
}

/// `chars(word) − chars(lemma(word))`.
pub fn lemma_len_diff(token: &Token, lemmatizer: &Lemmatizer) -> i64 {
    token.text.chars().count() as i64 - lemmatizer.lemma(token).chars().count() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(text: &str) -> Token {
        Token {
            sentence_id: 0,
            word_id: 0,
            text: text.into(),
        }
    }

    #[test]
    fn rule_table() {
        let cases = [
            ("running", "run"),
            ("cats", "cat"),
            ("studies", "study"),
            ("studied", "study"),
            ("boxes", "box"),
            ("churches", "church"),
            ("classes", "class"),
            ("walked", "walk"),
            ("stopped", "stop"),
            ("hoped", "hope"),
            ("making", "make"),
            ("hopping", "hop"),
            ("sitting", "sit"),
            ("falling", "fall"),
            ("children", "child"),
            ("was", "be"),
            ("this", "this"),
            ("morning", "morning"),
            ("need", "need"),
            ("agreed", "agreed"),
            ("class", "class"),
            ("status", "status"),
            ("cat", "cat"),
        ];
        for (word, lemma) in cases {
            assert_eq!(lemmatize_word(word), lemma, "{word}");
        }
    }

    #[test]
    fn length_differences() {
        let l = Lemmatizer::rules();
        assert_eq!(lemma_len_diff(&tok("running"), &l), 4);
        assert_eq!(lemma_len_diff(&tok("cat"), &l), 0);
        assert_eq!(lemma_len_diff(&tok("7"), &l), 0);
        assert_eq!(lemma_len_diff(&tok("Running,"), &l), 4);
        assert_eq!(l.lemma(&tok("Running,")), "run,");
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(split_punctuation("\"Hello,\""), ("\"", "Hello", ",\""));
        assert_eq!(split_punctuation("--"), ("--", "", ""));
        assert_eq!(split_punctuation("don't."), ("", "don't", "."));
    }
}
