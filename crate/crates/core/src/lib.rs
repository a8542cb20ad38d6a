//! Unsupervised iterative evidence retrieval.
//!
//! Given a question and a candidate answer, the retriever builds a chain of
//! justification sentences from a candidate pool (a paragraph, or a BM25
//! slice of a large knowledge base). Sentences are scored by IDF-weighted
//! max-pooled embedding alignment; after each hop the query is narrowed to
//! the terms the chain has not yet covered.
//!
//! Modules, bottom-up:
//! - [`corpus`]: tokenization, stopwords, term sets, IDF statistics
//! - [`embedding`]: GloVe-format vectors and cosine similarity
//! - [`bm25`]: inverted index and candidate pooling
//! - [`alignment`]: sentence scoring and ranking
//! - [`air`]: the iterative retriever and its traces
//! - [`data`]: MultiRC / QASC ingestion
//! - [`pipeline`]: dataset-wide retrieval
//! - [`eval`]: metrics and experiment drivers

pub mod air;
pub mod alignment;
pub mod bm25;
pub mod corpus;
pub mod data;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod pipeline;

pub use air::{
    retrieve_chain, retrieve_parallel, AirConfig, EvidenceChain, ParallelChains, RetrievalMode,
    StopReason, TraceRecord,
};
pub use alignment::{AlignmentScore, Matcher};
pub use bm25::{Bm25Params, InvertedIndex};
pub use corpus::{Analyzer, CorpusStats, Sentence, StopwordList, TermSet, TokenizerConfig};
pub use data::{CandidatePool, KnowledgeBase, QuestionRecord};
pub use embedding::EmbeddingTable;
pub use error::{AirError, Result};
