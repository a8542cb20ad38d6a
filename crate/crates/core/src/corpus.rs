//! Text normalization shared by every scorer: tokenization, stopword
//! filtering, content-term sets and IDF statistics.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AirError, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Fragments shorter than this (in chars) are dropped.
    pub min_token_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_len: 1,
        }
    }
}

/// Splits `text` on every non-alphanumeric character.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|frag| !frag.is_empty() && frag.chars().count() >= config.min_token_len)
        .map(|frag| {
            if config.lowercase {
                frag.to_lowercase()
            } else {
                frag.to_string()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The versioned English list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| AirError::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A set of unique content terms. Ordered so that iteration, and therefore
/// every floating-point sum over it, is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermSet(BTreeSet<String>);

impl TermSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn insert(&mut self, term: impl Into<String>) -> bool {
        self.0.insert(term.into())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &TermSet) -> TermSet {
        TermSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &TermSet) -> TermSet {
        TermSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &TermSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn extend_from(&mut self, other: &TermSet) {
        self.0.extend(other.0.iter().cloned());
    }
}

impl<S: Into<String>> FromIterator<S> for TermSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TermSet(iter.into_iter().map(Into::into).collect())
    }
}

impl<'a> IntoIterator for &'a TermSet {
    type Item = &'a String;
    type IntoIter = std::collections::btree_set::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn content_terms<S: AsRef<str>>(tokens: &[S], stopwords: &StopwordList) -> TermSet {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// A candidate justification sentence with its content-term set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub text: String,
    pub terms: TermSet,
}

/// Tokenizer plus stopword list: the single text pipeline used for queries,
/// pooled sentences and the BM25 index alike.
#[derive(Debug, Clone)]
pub struct Analyzer {
    pub tokenizer: TokenizerConfig,
    pub stopwords: StopwordList,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self {
            tokenizer: TokenizerConfig::default(),
            stopwords: StopwordList::bundled(),
        }
    }
}

impl Analyzer {
    pub fn new(tokenizer: TokenizerConfig, stopwords: StopwordList) -> Self {
        Self {
            tokenizer,
            stopwords,
        }
    }

    /// Stopword-filtered tokens, duplicates kept (what BM25 counts).
    pub fn index_tokens(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.tokenizer)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }

    pub fn terms(&self, text: &str) -> TermSet {
        content_terms(&tokenize(text, &self.tokenizer), &self.stopwords)
    }

    pub fn sentence(&self, id: usize, text: impl Into<String>) -> Sentence {
        let text = text.into();
        let terms = self.terms(&text);
        Sentence { id, text, terms }
    }
}

/// Document frequencies over a sentence collection.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    doc_count: usize,
    doc_freq: HashMap<String, u32>,
}

impl CorpusStats {
    pub fn build<'a, I>(sentences: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        Self::from_term_sets(sentences.into_iter().map(|s| &s.terms))
    }

    pub fn from_term_sets<'a, I>(sets: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TermSet>,
    {
        let mut doc_count = 0usize;
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        for set in sets {
            doc_count += 1;
            for term in set.iter() {
                *doc_freq.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        if doc_count == 0 {
            return Err(AirError::EmptyCorpus);
        }
        Ok(Self {
            doc_count,
            doc_freq,
        })
    }

    /// Every term gets the same idf; handy for tests and lexical baselines.
    pub fn uniform(doc_count: usize) -> Self {
        Self {
            doc_count: doc_count.max(1),
            doc_freq: HashMap::new(),
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn vocab_len(&self) -> usize {
        self.doc_freq.len()
    }

    /// `ln((N + 1) / (df + 1)) + 1`; unseen terms use df = 0.
    pub fn idf(&self, term: &str) -> f64 {
        smoothed_idf(self.doc_count, self.doc_freq(term))
    }

    /// Writes `N_DOCS\t<count>` then one `term\tdf` line per term, sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut terms: Vec<(&String, &u32)> = self.doc_freq.iter().collect();
        terms.sort();
        let mut out = String::new();
        let _ = writeln!(out, "N_DOCS\t{}", self.doc_count);
        for (term, df) in terms {
            let _ = writeln!(out, "{term}\t{df}");
        }
        let mut file = fs::File::create(path).map_err(|e| AirError::io(path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| AirError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| AirError::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let parse_err = |line: usize, message: &str| AirError::ParseError {
            location: format!("{}:{}", path.display(), line),
            message: message.to_string(),
        };
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing N_DOCS header"))?
            .map_err(|e| AirError::io(path, e))?;
        let doc_count = header
            .strip_prefix("N_DOCS\t")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| parse_err(1, "bad N_DOCS header"))?;
        if doc_count == 0 {
            return Err(AirError::EmptyCorpus);
        }
        let mut doc_freq = HashMap::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| AirError::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (term, df) = line
                .rsplit_once('\t')
                .ok_or_else(|| parse_err(i + 2, "expected term<TAB>df"))?;
            let df: u32 = df
                .parse()
                .map_err(|_| parse_err(i + 2, "document frequency is not an integer"))?;
            doc_freq.insert(term.to_string(), df);
        }
        Ok(Self {
            doc_count,
            doc_freq,
        })
    }
}

pub(crate) fn smoothed_idf(doc_count: usize, df: u32) -> f64 {
    ((doc_count as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
}
