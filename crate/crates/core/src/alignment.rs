//! IDF-weighted max-pooled alignment between a query and a sentence.
//!
//! For each query term the most similar sentence term is found (cosine over
//! unit vectors); the sentence score is the IDF-weighted sum of those maxima.
//! Negative maxima are kept as-is.

use serde::{Deserialize, Serialize};

use crate::bm25::sort_ranked;
use crate::corpus::{CorpusStats, Sentence, TermSet};
use crate::data::CandidatePool;
use crate::embedding::EmbeddingTable;
use crate::error::{AirError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    #[default]
    Embedding,
    /// Exact string match only.
    Lexical,
}

impl std::str::FromStr for Matcher {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(Matcher::Embedding),
            "lexical" => Ok(Matcher::Lexical),
            other => Err(format!("unknown matcher `{other}` (expected embedding|lexical)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermAlignment {
    pub term: String,
    pub idf: f64,
    pub best_match: Option<String>,
    pub best_sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub total: f64,
    /// One entry per unique query term, in term order.
    pub per_term: Vec<TermAlignment>,
}

/// Best similarity of `q` against any sentence term. Ties go to the
/// lexicographically smallest term; an empty sentence gives `(0.0, None)`.
pub fn align_term(q: &str, sentence_terms: &TermSet, table: &EmbeddingTable) -> (f64, Option<String>) {
    let mut best: Option<(f64, &str)> = None;
    for p in sentence_terms.iter() {
        let sim = table.cos_sim(q, p);
        if best.is_none_or(|(b, _)| sim > b) {
            best = Some((sim, p));
        }
    }
    match best {
        Some((sim, p)) => (sim, Some(p.to_string())),
        None => (0.0, None),
    }
}

fn align_term_lexical(q: &str, sentence_terms: &TermSet) -> (f64, Option<String>) {
    if sentence_terms.contains(q) {
        (1.0, Some(q.to_string()))
    } else {
        (0.0, None)
    }
}

pub fn score_sentence(
    query_terms: &TermSet,
    sentence: &Sentence,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<AlignmentScore> {
    score_with(Matcher::Embedding, query_terms, sentence, table, stats)
}

pub fn score_sentence_lexical(
    query_terms: &TermSet,
    sentence: &Sentence,
    stats: &CorpusStats,
) -> Result<AlignmentScore> {
    score_with(Matcher::Lexical, query_terms, sentence, &EmbeddingTable::empty(0), stats)
}

pub fn score_with(
    matcher: Matcher,
    query_terms: &TermSet,
    sentence: &Sentence,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<AlignmentScore> {
    if query_terms.is_empty() {
        return Err(AirError::EmptyQuery);
    }
    let mut per_term = Vec::with_capacity(query_terms.len());
    let mut total = 0.0;
    for q in query_terms.iter() {
        let idf = stats.idf(q);
        let (best_sim, best_match) = match matcher {
            Matcher::Embedding => align_term(q, &sentence.terms, table),
            Matcher::Lexical => align_term_lexical(q, &sentence.terms),
        };
        total += idf * best_sim;
        per_term.push(TermAlignment {
            term: q.to_string(),
            idf,
            best_match,
            best_sim,
        });
    }
    Ok(AlignmentScore { total, per_term })
}

/// Scores every pool sentence; descending total, ties by ascending id.
pub fn rank_candidates(
    query_terms: &TermSet,
    pool: &CandidatePool,
    matcher: Matcher,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<Vec<(usize, AlignmentScore)>> {
    if pool.is_empty() {
        return Err(AirError::EmptyPool);
    }
    let mut scored = pool
        .sentences()
        .map(|s| score_with(matcher, query_terms, s, table, stats).map(|sc| (s.id, sc)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total.total_cmp(&a.1.total).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// Only the ranked (id, total) pairs.
pub fn rank_totals(
    query_terms: &TermSet,
    pool: &CandidatePool,
    matcher: Matcher,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<Vec<(usize, f64)>> {
    if pool.is_empty() {
        return Err(AirError::EmptyPool);
    }
    let mut hits = pool
        .sentences()
        .map(|s| score_with(matcher, query_terms, s, table, stats).map(|sc| (s.id, sc.total)))
        .collect::<Result<Vec<_>>>()?;
    sort_ranked(&mut hits);
    Ok(hits)
}
