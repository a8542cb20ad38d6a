//! The iterative retriever.
//!
//! Each hop ranks the candidate pool against the current query, appends the
//! best unused sentence to the chain, and recomputes which original query
//! terms are still uncovered (soft matching at threshold `M`). The next query
//! is the uncovered remainder, expanded with the newest sentence's fresh
//! terms once the remainder has at most `T` terms. Retrieval stops when
//! every term is covered or a hop covers nothing new.

use serde::{Deserialize, Serialize};

use crate::alignment::{rank_totals, Matcher};
use crate::corpus::{CorpusStats, Sentence, TermSet};
use crate::data::CandidatePool;
use crate::embedding::EmbeddingTable;
use crate::error::{AirError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    /// Remainder-focused reformulation.
    #[default]
    Controlled,
    /// Whole retrieved sentences are appended to the query each hop.
    Uncontrolled,
}

impl std::str::FromStr for RetrievalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "controlled" => Ok(Self::Controlled),
            "uncontrolled" => Ok(Self::Uncontrolled),
            other => Err(format!("unknown mode `{other}` (expected controlled|uncontrolled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirConfig {
    /// Soft-match cosine threshold `M`.
    pub soft_match_threshold: f64,
    /// Expansion threshold `T`: expand once `|remainder| <= T`.
    pub expansion_threshold: usize,
    pub max_hops: usize,
    pub chain_count: usize,
    pub mode: RetrievalMode,
    pub matcher: Matcher,
    /// Forces exactly this many hops, overriding the natural stop criteria.
    pub fixed_hops: Option<usize>,
    /// Expand with every retrieved sentence instead of only the latest one.
    pub expand_all_previous: bool,
}

impl Default for AirConfig {
    fn default() -> Self {
        Self {
            soft_match_threshold: 0.95,
            expansion_threshold: 2,
            max_hops: 6,
            chain_count: 1,
            mode: RetrievalMode::Controlled,
            matcher: Matcher::Embedding,
            fixed_hops: None,
            expand_all_previous: false,
        }
    }
}

impl AirConfig {
    /// Paragraph-pool defaults (`T = 2`).
    pub fn multirc() -> Self {
        Self::default()
    }

    /// Large-KB defaults (`T = 4`).
    pub fn qasc() -> Self {
        Self {
            expansion_threshold: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.soft_match_threshold;
        if !(m > 0.0 && m <= 1.0) {
            return Err(AirError::InvalidConfig(format!("M must be in (0, 1], got {m}")));
        }
        if self.max_hops == 0 {
            return Err(AirError::InvalidConfig("max_hops must be at least 1".into()));
        }
        if self.chain_count == 0 {
            return Err(AirError::InvalidConfig("chain count must be at least 1".into()));
        }
        if let Some(f) = self.fixed_hops {
            if f == 0 || f > self.max_hops {
                return Err(AirError::InvalidConfig(format!(
                    "fixed_hops ({f}) must be between 1 and max_hops ({})",
                    self.max_hops
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryState {
    pub original_terms: TermSet,
    pub remainder: TermSet,
    pub coverage: f64,
    pub current_query: TermSet,
    pub hop: usize,
}

impl QueryState {
    pub fn initial(original: TermSet) -> Self {
        Self {
            remainder: original.clone(),
            current_query: original.clone(),
            original_terms: original,
            coverage: 0.0,
            hop: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AllCovered,
    NoNewTerms,
    PoolExhausted,
    MaxHops,
    FixedHopsReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopTrace {
    pub query_terms: TermSet,
    pub chosen_sentence_id: usize,
    pub score: f64,
    pub coverage: f64,
    pub remainder_terms: TermSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceChain {
    pub sentence_ids: Vec<usize>,
    pub hops: Vec<HopTrace>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelChains {
    pub chains: Vec<EvidenceChain>,
    /// Union of all chains' sentences, first-seen order.
    pub merged_sentence_ids: Vec<usize>,
}

/// True when some justification term is at least `threshold`-similar to `q`
/// (exact membership for the lexical matcher).
pub fn soft_covered(
    q: &str,
    justification_terms: &TermSet,
    table: &EmbeddingTable,
    threshold: f64,
    matcher: Matcher,
) -> bool {
    match matcher {
        Matcher::Lexical => justification_terms.contains(q),
        Matcher::Embedding => justification_terms
            .iter()
            .any(|p| table.cos_sim(q, p) >= threshold),
    }
}

pub fn compute_remainder(
    original: &TermSet,
    chain_sentences: &[&Sentence],
    table: &EmbeddingTable,
    threshold: f64,
    matcher: Matcher,
) -> TermSet {
    let mut covered_by = TermSet::new();
    for s in chain_sentences {
        covered_by.extend_from(&s.terms);
    }
    original
        .iter()
        .filter(|q| !soft_covered(q, &covered_by, table, threshold, matcher))
        .collect()
}

/// Fraction of original terms soft-covered by the chain; the same notion of
/// "covered" as [`compute_remainder`].
pub fn compute_coverage(
    original: &TermSet,
    chain_sentences: &[&Sentence],
    table: &EmbeddingTable,
    threshold: f64,
    matcher: Matcher,
) -> Result<f64> {
    if original.is_empty() {
        return Err(AirError::EmptyQuery);
    }
    let remainder = compute_remainder(original, chain_sentences, table, threshold, matcher);
    Ok(coverage_of(original.len(), remainder.len()))
}

fn coverage_of(original: usize, remaining: usize) -> f64 {
    (original - remaining) as f64 / original as f64
}

/// Next query after a hop. `chain` holds the sentences retrieved so far,
/// the most recent last; `state.remainder` must already reflect them.
pub fn reformulate(state: &QueryState, chain: &[&Sentence], config: &AirConfig) -> TermSet {
    let Some(last) = chain.last() else {
        return state.current_query.clone();
    };
    match config.mode {
        RetrievalMode::Uncontrolled => state.current_query.union(&last.terms),
        RetrievalMode::Controlled => {
            if state.remainder.len() > config.expansion_threshold {
                return state.remainder.clone();
            }
            let mut query = state.remainder.clone();
            let sources: &[&Sentence] = if config.expand_all_previous {
                chain
            } else {
                std::slice::from_ref(last)
            };
            for s in sources {
                query.extend_from(&s.terms.difference(&state.original_terms));
            }
            query
        }
    }
}

pub fn retrieve_chain(
    query: &TermSet,
    pool: &CandidatePool,
    config: &AirConfig,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<EvidenceChain> {
    check_inputs(query, pool, config)?;
    run_chain(query, pool, config, table, stats, None)
}

/// `p = config.chain_count` chains, chain `i` seeded with the rank-`i`
/// sentence for the initial query.
pub fn retrieve_parallel(
    query: &TermSet,
    pool: &CandidatePool,
    config: &AirConfig,
    table: &EmbeddingTable,
    stats: &CorpusStats,
) -> Result<ParallelChains> {
    check_inputs(query, pool, config)?;
    let p = config.chain_count;
    if pool.len() < p {
        return Err(AirError::PoolTooSmall {
            requested: p,
            pool: pool.len(),
        });
    }
    let initial = rank_totals(query, pool, config.matcher, table, stats)?;
    let chains = initial
        .iter()
        .take(p)
        .map(|&(id, score)| run_chain(query, pool, config, table, stats, Some((id, score))))
        .collect::<Result<Vec<_>>>()?;
    let merged_sentence_ids = merge_ids(chains.iter().map(|c| c.sentence_ids.as_slice()));
    Ok(ParallelChains {
        chains,
        merged_sentence_ids,
    })
}

/// Merged chain sentences padded with the rest of the pool in initial-query
/// order, truncated to `k`.
pub fn padded_ranking(
    merged: &[usize],
    query: &TermSet,
    pool: &CandidatePool,
    matcher: Matcher,
    table: &EmbeddingTable,
    stats: &CorpusStats,
    k: usize,
) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = merged.iter().copied().take(k).collect();
    if out.len() < k {
        for (id, _) in rank_totals(query, pool, matcher, table, stats)? {
            if out.len() == k {
                break;
            }
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    Ok(out)
}

fn merge_ids<'a>(lists: impl Iterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for list in lists {
        for &id in list {
            if seen.insert(id) {
                out.push(id);
            }
        }
    }
    out
}

fn check_inputs(query: &TermSet, pool: &CandidatePool, config: &AirConfig) -> Result<()> {
    config.validate()?;
    if query.is_empty() {
        return Err(AirError::EmptyQuery);
    }
    if pool.is_empty() {
        return Err(AirError::EmptyPool);
    }
    Ok(())
}

fn run_chain(
    query: &TermSet,
    pool: &CandidatePool,
    config: &AirConfig,
    table: &EmbeddingTable,
    stats: &CorpusStats,
    forced_first: Option<(usize, f64)>,
) -> Result<EvidenceChain> {
    let mut state = QueryState::initial(query.clone());
    let mut chain: Vec<&Sentence> = Vec::new();
    let mut hops = Vec::new();

    let stop_reason = loop {
        // an exhausted query (possible only under fixed_hops) falls back to the original
        let ranking_query = if state.current_query.is_empty() {
            &state.original_terms
        } else {
            &state.current_query
        };
        let pick = match forced_first.filter(|_| state.hop == 0) {
            Some(first) => Some(first),
            None => rank_totals(ranking_query, pool, config.matcher, table, stats)?
                .into_iter()
                .find(|(id, _)| !chain.iter().any(|s| s.id == *id)),
        };
        let Some((id, score)) = pick else {
            break StopReason::PoolExhausted;
        };
        let sentence = pool.get(id).expect("ranked ids come from the pool");
        chain.push(sentence);
        state.hop += 1;

        let previous = std::mem::take(&mut state.remainder);
        state.remainder = previous
            .iter()
            .filter(|q| {
                !soft_covered(
                    q,
                    &sentence.terms,
                    table,
                    config.soft_match_threshold,
                    config.matcher,
                )
            })
            .collect();
        state.coverage = coverage_of(state.original_terms.len(), state.remainder.len());
        hops.push(HopTrace {
            query_terms: ranking_query.clone(),
            chosen_sentence_id: id,
            score,
            coverage: state.coverage,
            remainder_terms: state.remainder.clone(),
        });

        let exhausted = chain.len() == pool.len();
        if let Some(fixed) = config.fixed_hops {
            if state.hop == fixed {
                break StopReason::FixedHopsReached;
            }
            if exhausted {
                break StopReason::PoolExhausted;
            }
        } else {
            if state.remainder.is_empty() {
                break StopReason::AllCovered;
            }
            if state.remainder == previous {
                break StopReason::NoNewTerms;
            }
            if state.hop >= config.max_hops {
                break StopReason::MaxHops;
            }
            if exhausted {
                break StopReason::PoolExhausted;
            }
        }
        state.current_query = reformulate(&state, &chain, config);
    };

    Ok(EvidenceChain {
        sentence_ids: chain.iter().map(|s| s.id).collect(),
        hops,
        stop_reason,
    })
}

/// One line of the trace stream: every chain retrieved for a
/// (question, answer) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub question_id: String,
    pub answer_id: String,
    pub chains: Vec<EvidenceChain>,
    pub merged_sentence_ids: Vec<usize>,
    /// Merged ids padded from the initial-query ranking, at most 10.
    #[serde(default)]
    pub ranked_sentence_ids: Vec<usize>,
}
