//! Inverted-index BM25 (Lucene variant) used to pool candidate sentences
//! out of large knowledge bases.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Analyzer, TermSet};
use crate::data::{AnswerCandidate, CandidatePool, KnowledgeBase, PoolProvenance, QuestionRecord};
use crate::error::{AirError, Result};

const MAGIC: &[u8; 8] = b"AIRBM25\0";
const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_POOL_SIZE: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Lucene's non-negative BM25 idf.
pub fn bm25_idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// One term's contribution for a document.
#[inline]
pub fn bm25_term_score(idf: f64, tf: f64, doc_len: f64, avg_len: f64, params: Bm25Params) -> f64 {
    let norm = 1.0 - params.b + params.b * doc_len / avg_len;
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub sentence_id: u32,
    pub tf: u32,
}

/// Sentence ids are the 0-based positions of the indexed texts.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    params: Bm25Params,
    postings: HashMap<String, Vec<Posting>>,
    sentence_lengths: Vec<u32>,
    avg_len: f64,
}

impl InvertedIndex {
    pub fn build<I, S>(texts: I, analyzer: &Analyzer, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut sentence_lengths = Vec::new();
        let mut tf: HashMap<String, u32> = HashMap::new();
        for (id, text) in texts.into_iter().enumerate() {
            let tokens = analyzer.index_tokens(text.as_ref());
            sentence_lengths.push(tokens.len() as u32);
            tf.clear();
            for tok in tokens {
                *tf.entry(tok).or_insert(0) += 1;
            }
            for (term, count) in tf.drain() {
                postings.entry(term).or_default().push(Posting {
                    sentence_id: id as u32,
                    tf: count,
                });
            }
        }
        if sentence_lengths.is_empty() {
            return Err(AirError::EmptyCorpus);
        }
        // ids are pushed in increasing order, so lists are already sorted
        let avg_len = mean_len(&sentence_lengths);
        Ok(Self {
            params,
            postings,
            sentence_lengths,
            avg_len,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.sentence_lengths.len()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn sentence_len(&self, id: usize) -> Option<u32> {
        self.sentence_lengths.get(id).copied()
    }

    pub fn vocab_len(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Top-`k` sentences by BM25, descending score then ascending id.
    /// Zero-score sentences are never returned.
    pub fn search(&self, query: &TermSet, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || query.is_empty() {
            return Vec::new();
        }
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in query.iter() {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = bm25_idf(self.doc_count(), list.len());
            for p in list {
                let len = self.sentence_lengths[p.sentence_id as usize] as f64;
                *acc.entry(p.sentence_id).or_insert(0.0) +=
                    bm25_term_score(idf, p.tf as f64, len, self.avg_len, self.params);
            }
        }
        let mut hits: Vec<(usize, f64)> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(id, s)| (id as usize, s))
            .collect();
        sort_ranked(&mut hits);
        hits.truncate(k);
        hits
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| AirError::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| AirError::io(path, e))
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.params.k1.to_le_bytes())?;
        w.write_all(&self.params.b.to_le_bytes())?;
        w.write_all(&(self.sentence_lengths.len() as u64).to_le_bytes())?;
        for len in &self.sentence_lengths {
            w.write_all(&len.to_le_bytes())?;
        }
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort();
        w.write_all(&(terms.len() as u64).to_le_bytes())?;
        for term in terms {
            let list = &self.postings[term];
            w.write_all(&(term.len() as u32).to_le_bytes())?;
            w.write_all(term.as_bytes())?;
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for p in list {
                w.write_all(&p.sentence_id.to_le_bytes())?;
                w.write_all(&p.tf.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| AirError::io(path, e))?;
        let mut r = BufReader::new(file);
        Self::read_from(&mut r).map_err(|e| match e {
            ReadError::Io(source) => AirError::io(path, source),
            ReadError::Format(msg) => AirError::BadIndexFile(format!("{}: {msg}", path.display())),
        })
    }

    fn read_from<R: Read>(r: &mut R) -> std::result::Result<Self, ReadError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ReadError::Format("not a BM25 index (bad magic)".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(ReadError::Format(format!("unsupported format version {version}")));
        }
        let params = Bm25Params {
            k1: f64::from_le_bytes(read_array(r)?),
            b: f64::from_le_bytes(read_array(r)?),
        };
        let n = read_u64(r)? as usize;
        if n == 0 {
            return Err(ReadError::Format("index holds no sentences".into()));
        }
        let mut sentence_lengths = Vec::with_capacity(n);
        for _ in 0..n {
            sentence_lengths.push(read_u32(r)?);
        }
        let term_count = read_u64(r)? as usize;
        let mut postings = HashMap::with_capacity(term_count);
        for _ in 0..term_count {
            let len = read_u32(r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let term = String::from_utf8(buf)
                .map_err(|_| ReadError::Format("term is not UTF-8".into()))?;
            let count = read_u32(r)? as usize;
            let mut list = Vec::with_capacity(count);
            for _ in 0..count {
                let sentence_id = read_u32(r)?;
                let tf = read_u32(r)?;
                if sentence_id as usize >= n {
                    return Err(ReadError::Format(format!(
                        "posting for `{term}` points past the last sentence"
                    )));
                }
                list.push(Posting { sentence_id, tf });
            }
            postings.insert(term, list);
        }
        let avg_len = mean_len(&sentence_lengths);
        Ok(Self {
            params,
            postings,
            sentence_lengths,
            avg_len,
        })
    }
}

/// BM25 pool for one answer candidate, queried with the content terms of
/// question text plus answer text.
pub fn pool_candidates(
    question: &QuestionRecord,
    answer: &AnswerCandidate,
    index: &InvertedIndex,
    kb: &KnowledgeBase,
    analyzer: &Analyzer,
    pool_size: usize,
) -> CandidatePool {
    let query = analyzer.terms(&format!("{} {}", question.question_text, answer.text));
    let hits = index.search(&query, pool_size);
    let entries = hits
        .into_iter()
        .enumerate()
        .filter_map(|(rank, (id, _))| kb.text(id).map(|t| (rank, analyzer.sentence(id, t))))
        .map(|(rank, sentence)| crate::data::PoolEntry {
            source_rank: rank,
            sentence,
        })
        .collect();
    CandidatePool {
        entries,
        provenance: PoolProvenance::Bm25 { pool_size },
    }
}

pub(crate) fn sort_ranked(hits: &mut [(usize, f64)]) {
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

fn mean_len(lengths: &[u32]) -> f64 {
    lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64
}

enum ReadError {
    Io(std::io::Error),
    Format(String),
}

impl From<std::io::Error> for ReadError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ReadError::Format("truncated file".into())
        } else {
            ReadError::Io(e)
        }
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
