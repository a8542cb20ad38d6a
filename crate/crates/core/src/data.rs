//! Dataset ingestion. MultiRC-style paragraphs and QASC-style KB questions
//! are both normalized into [`QuestionRecord`]s so retrieval and evaluation
//! never branch on the dataset.
//!
//! Accepted MultiRC shapes:
//! - top level: `{"data": [...]}` or a bare array of paragraph entries;
//! - paragraph entry: `{"id", "paragraph": {"text" | "sentences", "questions"}}`,
//!   where `text` carries `<b>Sent k: </b>` markers (and optional `<br>`), and
//!   `sentences` is a pre-split array of strings;
//! - question: `question`, `answers[] {text, isAnswer}`, `sentences_used`
//!   (0-based indices into the paragraph's sentences), optional `idx`/`id`.
//!
//! QASC questions are line-delimited JSON in the ARC layout
//! (`question.stem`, `question.choices[] {label, text}`, `answerKey`,
//! `fact1`, `fact2`); the KB is one fact per line.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Analyzer, CorpusStats, Sentence, TermSet};
use crate::error::{AirError, Result};

pub const QASC_CHOICES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    Paragraph {
        paragraph_id: String,
        sentences: Vec<String>,
    },
    KbPool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub question_text: String,
    pub answers: Vec<AnswerCandidate>,
    pub candidate_source: CandidateSource,
    /// Paragraph-local sentence ids (MultiRC) or KB line ids (QASC).
    pub gold_sentence_ids: BTreeSet<usize>,
    /// Raw gold strings, kept for KB questions whether or not they resolved.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gold_texts: Vec<String>,
}

impl QuestionRecord {
    /// The candidate pool when the question carries its own paragraph.
    pub fn paragraph_pool(&self, analyzer: &Analyzer) -> Option<CandidatePool> {
        match &self.candidate_source {
            CandidateSource::Paragraph { sentences, .. } => {
                Some(CandidatePool::from_texts(sentences, analyzer))
            }
            CandidateSource::KbPool => None,
        }
    }

    pub fn query_terms(&self, answer: &AnswerCandidate, analyzer: &Analyzer) -> TermSet {
        analyzer.terms(&format!("{} {}", self.question_text, answer.text))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub sentence: Sentence,
    pub source_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolProvenance {
    Paragraph,
    Bm25 { pool_size: usize },
}

/// The sentences a retriever may choose from for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub entries: Vec<PoolEntry>,
    pub provenance: PoolProvenance,
}

impl CandidatePool {
    /// Paragraph pool; sentence ids are positions.
    pub fn from_texts<S: AsRef<str>>(texts: &[S], analyzer: &Analyzer) -> Self {
        Self::from_sentences(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| analyzer.sentence(i, t.as_ref()))
                .collect(),
        )
    }

    pub fn from_sentences(sentences: Vec<Sentence>) -> Self {
        let entries = sentences
            .into_iter()
            .enumerate()
            .map(|(source_rank, sentence)| PoolEntry {
                sentence,
                source_rank,
            })
            .collect();
        Self {
            entries,
            provenance: PoolProvenance::Paragraph,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> + '_ {
        self.entries.iter().map(|e| &e.sentence)
    }

    pub fn get(&self, sentence_id: usize) -> Option<&Sentence> {
        self.sentences().find(|s| s.id == sentence_id)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.sentences().map(|s| s.id).collect()
    }
}

/// A fact collection addressed by 0-based line number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    lines: Vec<String>,
}

impl KnowledgeBase {
    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            lines: lines.into_iter().map(Into::into).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| AirError::io(path, e))?;
        let mut lines = Vec::new();
        for line in BufReader::with_capacity(1 << 20, file).lines() {
            let line = line.map_err(|e| AirError::io(path, e))?;
            lines.push(line.trim_end_matches('\r').to_string());
        }
        Ok(Self { lines })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn text(&self, id: usize) -> Option<&str> {
        self.lines.get(id).map(String::as_str)
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Line id of the first fact whose normalized text equals `text`'s.
    pub fn find_normalized(&self, text: &str) -> Option<usize> {
        let needle = normalize_text(text);
        self.lines.iter().position(|l| normalize_text(l) == needle)
    }
}

/// Lowercase with whitespace runs collapsed to one space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn sent_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)<b>\s*Sent\s+\d+\s*:\s*</b>").expect("valid regex"))
}

fn br_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)<br\s*/?>").expect("valid regex"))
}

/// Splits a marked MultiRC paragraph at its `<b>Sent k: </b>` markers.
/// Returns `None` when the text carries no markers.
pub fn split_marked_paragraph(text: &str) -> Option<Vec<String>> {
    let marker = sent_marker();
    let starts: Vec<_> = marker.find_iter(text).collect();
    if starts.is_empty() {
        return None;
    }
    let prefix = br_marker().replace_all(&text[..starts[0].start()], "");
    let mut out = Vec::with_capacity(starts.len());
    for (i, m) in starts.iter().enumerate() {
        let end = starts.get(i + 1).map_or(text.len(), |n| n.start());
        let body = br_marker().replace_all(&text[m.end()..end], "");
        let mut sentence = String::new();
        if i == 0 && !prefix.trim().is_empty() {
            sentence.push_str(prefix.trim());
            sentence.push(' ');
        }
        sentence.push_str(body.trim());
        out.push(sentence);
    }
    Some(out)
}

fn parse_json(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| AirError::ParseError {
        location: format!("{origin} byte {}", byte_offset(text, e.line(), e.column())),
        message: e.to_string(),
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    line_start + column.saturating_sub(1)
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| AirError::MissingField(name.to_string()))
}

fn str_field<'a>(v: &'a Value, name: &str) -> Result<&'a str> {
    field(v, name)?.as_str().ok_or_else(|| AirError::ParseError {
        location: name.to_string(),
        message: "expected a string".into(),
    })
}

fn id_string(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn load_multirc(path: impl AsRef<Path>) -> Result<Vec<QuestionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| AirError::io(path, e))?;
    parse_multirc(&text, &path.display().to_string())
}

pub fn parse_multirc(text: &str, origin: &str) -> Result<Vec<QuestionRecord>> {
    let root = parse_json(text, origin)?;
    let entries = match &root {
        Value::Array(a) => a,
        Value::Object(_) => field(&root, "data")?
            .as_array()
            .ok_or_else(|| AirError::ParseError {
                location: format!("{origin}: data"),
                message: "expected an array".into(),
            })?,
        _ => {
            return Err(AirError::ParseError {
                location: origin.to_string(),
                message: "expected an object or array at top level".into(),
            })
        }
    };

    let mut records = Vec::new();
    for (p_idx, entry) in entries.iter().enumerate() {
        let paragraph_id = id_string(entry.get("id")).unwrap_or_else(|| format!("p{p_idx}"));
        let para = field(entry, "paragraph")?;
        let sentences = if let Some(list) = para.get("sentences").and_then(Value::as_array) {
            list.iter()
                .map(|s| {
                    s.as_str().map(str::to_string).ok_or_else(|| AirError::ParseError {
                        location: format!("{origin}: {paragraph_id}.sentences"),
                        message: "sentences must be strings".into(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let raw = str_field(para, "text")?;
            split_marked_paragraph(raw).ok_or_else(|| AirError::ParseError {
                location: format!("{origin}: {paragraph_id}.text"),
                message: "paragraph has no <b>Sent k: </b> markers".into(),
            })?
        };

        let questions = field(para, "questions")?
            .as_array()
            .ok_or_else(|| AirError::ParseError {
                location: format!("{origin}: {paragraph_id}.questions"),
                message: "expected an array".into(),
            })?;
        for (q_idx, q) in questions.iter().enumerate() {
            let q_local = id_string(q.get("idx").or_else(|| q.get("id")))
                .unwrap_or_else(|| q_idx.to_string());
            let question_id = format!("{paragraph_id}::{q_local}");
            let question_text = str_field(q, "question")?.to_string();

            let mut answers = Vec::new();
            let mut seen = HashSet::new();
            for (a_idx, a) in field(q, "answers")?
                .as_array()
                .ok_or_else(|| AirError::ParseError {
                    location: format!("{origin}: {question_id}.answers"),
                    message: "expected an array".into(),
                })?
                .iter()
                .enumerate()
            {
                let mut id = id_string(a.get("idx").or_else(|| a.get("id")))
                    .unwrap_or_else(|| a_idx.to_string());
                if !seen.insert(id.clone()) {
                    id = a_idx.to_string();
                    seen.insert(id.clone());
                }
                answers.push(AnswerCandidate {
                    id,
                    text: str_field(a, "text")?.to_string(),
                    is_correct: a.get("isAnswer").and_then(Value::as_bool),
                });
            }

            let mut gold = BTreeSet::new();
            if let Some(used) = q.get("sentences_used").and_then(Value::as_array) {
                for u in used {
                    let id = u.as_u64().ok_or_else(|| AirError::ParseError {
                        location: format!("{origin}: {question_id}.sentences_used"),
                        message: "expected non-negative integers".into(),
                    })? as usize;
                    if id >= sentences.len() {
                        return Err(AirError::ParseError {
                            location: format!("{origin}: {question_id}.sentences_used"),
                            message: format!(
                                "gold sentence {id} outside paragraph of {} sentences",
                                sentences.len()
                            ),
                        });
                    }
                    gold.insert(id);
                }
            }

            records.push(QuestionRecord {
                question_id,
                question_text,
                answers,
                candidate_source: CandidateSource::Paragraph {
                    paragraph_id: paragraph_id.clone(),
                    sentences: sentences.clone(),
                },
                gold_sentence_ids: gold,
                gold_texts: Vec::new(),
            });
        }
    }
    Ok(records)
}

pub fn load_qasc(
    questions_path: impl AsRef<Path>,
    kb_path: impl AsRef<Path>,
) -> Result<(Vec<QuestionRecord>, KnowledgeBase)> {
    let questions_path = questions_path.as_ref();
    let text = fs::read_to_string(questions_path).map_err(|e| AirError::io(questions_path, e))?;
    let kb = KnowledgeBase::load(kb_path)?;
    let records = parse_qasc(&text, &questions_path.display().to_string(), &kb)?;
    Ok((records, kb))
}

pub fn parse_qasc(text: &str, origin: &str, kb: &KnowledgeBase) -> Result<Vec<QuestionRecord>> {
    let mut raw = Vec::new();
    let mut offset = 0usize;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).map_err(|e| AirError::ParseError {
            location: format!("{origin} line {} byte {}", i + 1, start + e.column().saturating_sub(1)),
            message: e.to_string(),
        })?;
        raw.push(v);
    }

    // resolve all gold facts with a single pass over the KB
    let mut wanted: HashMap<String, Option<usize>> = HashMap::new();
    for v in &raw {
        for key in ["fact1", "fact2"] {
            if let Some(f) = v.get(key).and_then(Value::as_str) {
                wanted.insert(normalize_text(f), None);
            }
        }
    }
    for (id, line) in kb.lines().iter().enumerate() {
        if let Some(slot) = wanted.get_mut(&normalize_text(line)) {
            slot.get_or_insert(id);
        }
    }

    let mut records = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let question_id = id_string(v.get("id")).unwrap_or_else(|| format!("q{i}"));
        let q = field(v, "question")?;
        let stem = str_field(q, "stem")?.to_string();
        let choices = field(q, "choices")?
            .as_array()
            .ok_or_else(|| AirError::ParseError {
                location: format!("{origin}: {question_id}.choices"),
                message: "expected an array".into(),
            })?;
        if choices.len() != QASC_CHOICES {
            return Err(AirError::WrongChoiceCount(choices.len()));
        }
        let key = v.get("answerKey").and_then(Value::as_str);
        let answers = choices
            .iter()
            .enumerate()
            .map(|(c_idx, c)| {
                let label = id_string(c.get("label")).unwrap_or_else(|| c_idx.to_string());
                Ok(AnswerCandidate {
                    is_correct: key.map(|k| k == label),
                    id: label,
                    text: str_field(c, "text")?.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut gold_texts = Vec::new();
        let mut gold = BTreeSet::new();
        for k in ["fact1", "fact2"] {
            if let Some(f) = v.get(k).and_then(Value::as_str) {
                gold_texts.push(f.to_string());
                if let Some(Some(id)) = wanted.get(&normalize_text(f)) {
                    gold.insert(*id);
                }
            }
        }
        records.push(QuestionRecord {
            question_id,
            question_text: stem,
            answers,
            candidate_source: CandidateSource::KbPool,
            gold_sentence_ids: gold,
            gold_texts,
        });
    }
    Ok(records)
}

/// IDF statistics for a dataset: every distinct paragraph's sentences, or
/// the whole KB when one is given.
pub fn dataset_corpus_stats(
    records: &[QuestionRecord],
    kb: Option<&KnowledgeBase>,
    analyzer: &Analyzer,
) -> Result<CorpusStats> {
    if let Some(kb) = kb {
        let sets: Vec<TermSet> = kb.lines().iter().map(|l| analyzer.terms(l)).collect();
        return CorpusStats::from_term_sets(&sets);
    }
    let mut seen = HashSet::new();
    let mut sets = Vec::new();
    for r in records {
        if let CandidateSource::Paragraph {
            paragraph_id,
            sentences,
        } = &r.candidate_source
        {
            if seen.insert(paragraph_id.as_str()) {
                sets.extend(sentences.iter().map(|s| analyzer.terms(s)));
            }
        }
    }
    CorpusStats::from_term_sets(&sets)
}

/// Every content term in the dataset (questions, answers, paragraph
/// sentences and KB lines); used to filter embedding files at load time.
pub fn dataset_vocab(records: &[QuestionRecord], kb: Option<&KnowledgeBase>, analyzer: &Analyzer) -> TermSet {
    let mut vocab = TermSet::new();
    for r in records {
        vocab.extend_from(&analyzer.terms(&r.question_text));
        for a in &r.answers {
            vocab.extend_from(&analyzer.terms(&a.text));
        }
        if let CandidateSource::Paragraph { sentences, .. } = &r.candidate_source {
            for s in sentences {
                vocab.extend_from(&analyzer.terms(s));
            }
        }
    }
    if let Some(kb) = kb {
        for line in kb.lines() {
            vocab.extend_from(&analyzer.terms(line));
        }
    }
    vocab
}

/// Normalized cache format: one `QuestionRecord` JSON object per line.
pub fn write_records_jsonl<W: Write>(records: &[QuestionRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records_jsonl(text: &str, origin: &str) -> Result<Vec<QuestionRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AirError::ParseError {
                location: format!("{origin} line {}", i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}
