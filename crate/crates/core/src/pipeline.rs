//! Glue between datasets and the retriever: builds the candidate pool for
//! each (question, answer) pair and runs retrieval across a dataset.

use rayon::prelude::*;

use crate::air::{padded_ranking, retrieve_parallel, AirConfig, TraceRecord};
use crate::bm25::{pool_candidates, InvertedIndex};
use crate::corpus::{Analyzer, CorpusStats};
use crate::data::{AnswerCandidate, CandidatePool, KnowledgeBase, QuestionRecord};
use crate::embedding::EmbeddingTable;
use crate::error::{AirError, Result};

/// Ranked-list length used for recall@k traces.
pub const RANKED_LIST_LEN: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct KbSource<'a> {
    pub kb: &'a KnowledgeBase,
    pub index: &'a InvertedIndex,
    pub pool_size: usize,
}

/// Everything retrieval reads; all of it is immutable and shared by workers.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalContext<'a> {
    pub analyzer: &'a Analyzer,
    pub table: &'a EmbeddingTable,
    pub stats: &'a CorpusStats,
    pub kb: Option<KbSource<'a>>,
}

impl RetrievalContext<'_> {
    pub fn pool(&self, record: &QuestionRecord, answer: &AnswerCandidate) -> Result<CandidatePool> {
        if let Some(pool) = record.paragraph_pool(self.analyzer) {
            return Ok(pool);
        }
        let kb = self.kb.ok_or_else(|| {
            AirError::InvalidConfig(format!(
                "question `{}` needs a knowledge base but none was given",
                record.question_id
            ))
        })?;
        Ok(pool_candidates(
            record,
            answer,
            kb.index,
            kb.kb,
            self.analyzer,
            kb.pool_size,
        ))
    }
}

/// Traces for every answer of one question, in answer order. Pairs with no
/// content terms or an empty pool yield a trace with no chains.
pub fn retrieve_record(
    ctx: &RetrievalContext<'_>,
    record: &QuestionRecord,
    config: &AirConfig,
) -> Result<Vec<TraceRecord>> {
    config.validate()?;
    record
        .answers
        .iter()
        .map(|answer| {
            let query = record.query_terms(answer, ctx.analyzer);
            let pool = ctx.pool(record, answer)?;
            let mut trace = TraceRecord {
                question_id: record.question_id.clone(),
                answer_id: answer.id.clone(),
                chains: Vec::new(),
                merged_sentence_ids: Vec::new(),
                ranked_sentence_ids: Vec::new(),
            };
            if query.is_empty() || pool.is_empty() {
                return Ok(trace);
            }
            let cfg = AirConfig {
                chain_count: config.chain_count.min(pool.len()),
                ..*config
            };
            let par = retrieve_parallel(&query, &pool, &cfg, ctx.table, ctx.stats)?;
            trace.ranked_sentence_ids = padded_ranking(
                &par.merged_sentence_ids,
                &query,
                &pool,
                cfg.matcher,
                ctx.table,
                ctx.stats,
                RANKED_LIST_LEN,
            )?;
            trace.chains = par.chains;
            trace.merged_sentence_ids = par.merged_sentence_ids;
            Ok(trace)
        })
        .collect()
}

/// Runs every record on the current rayon pool. Output is sorted by
/// question id (answers keep their dataset order), independent of scheduling.
pub fn retrieve_all(
    ctx: &RetrievalContext<'_>,
    records: &[QuestionRecord],
    config: &AirConfig,
) -> Result<Vec<TraceRecord>> {
    let per_record: Vec<Vec<TraceRecord>> = records
        .par_iter()
        .map(|r| retrieve_record(ctx, r, config))
        .collect::<Result<_>>()?;
    let mut traces: Vec<TraceRecord> = per_record.into_iter().flatten().collect();
    traces.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok(traces)
}
