//! Evidence-selection metrics and the experiment drivers built on them.
//!
//! All metric values are fractions in `[0, 1]`; percentages appear only in
//! rendered tables and CSV grids.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::air::{retrieve_chain, AirConfig, RetrievalMode, TraceRecord};
use crate::alignment::{rank_totals, Matcher};
use crate::bm25::{Bm25Params, InvertedIndex};
use crate::corpus::TermSet;
use crate::data::{normalize_text, CandidatePool, CandidateSource, PoolProvenance, QuestionRecord};
use crate::error::{AirError, Result};
use crate::pipeline::{retrieve_all, RetrievalContext, RANKED_LIST_LEN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionPrf {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub aggregation: String,
    pub evaluated: usize,
    /// Units whose gold set is empty; left out of the averages.
    pub excluded_no_gold: usize,
    pub per_question: Vec<QuestionPrf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub both_found: f64,
    pub at_least_one_found: f64,
    pub k: usize,
    pub questions: usize,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn check_keys<A, B>(left: &BTreeMap<String, A>, right: &BTreeMap<String, B>) -> Result<()> {
    if let Some(k) = left.keys().find(|k| !right.contains_key(*k)) {
        return Err(AirError::IdMismatch(format!("`{k}` has no gold entry")));
    }
    if let Some(k) = right.keys().find(|k| !left.contains_key(*k)) {
        return Err(AirError::IdMismatch(format!("`{k}` has no retrieved entry")));
    }
    Ok(())
}

/// Macro-averaged precision, recall and F1 over aligned ids.
pub fn selection_prf(
    retrieved: &BTreeMap<String, BTreeSet<usize>>,
    gold: &BTreeMap<String, BTreeSet<usize>>,
) -> Result<SelectionMetrics> {
    check_keys(retrieved, gold)?;
    let mut per_question = Vec::new();
    let mut excluded = 0;
    for (id, got) in retrieved {
        let want = &gold[id];
        if want.is_empty() {
            excluded += 1;
            continue;
        }
        let hit = got.intersection(want).count() as f64;
        let precision = if got.is_empty() { 0.0 } else { hit / got.len() as f64 };
        let recall = hit / want.len() as f64;
        per_question.push(QuestionPrf {
            id: id.clone(),
            precision,
            recall,
            f1: harmonic(precision, recall),
        });
    }
    let n = per_question.len();
    let mean = |f: fn(&QuestionPrf) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_question.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(SelectionMetrics {
        precision: mean(|q| q.precision),
        recall: mean(|q| q.recall),
        f1: mean(|q| q.f1),
        aggregation: "macro".into(),
        evaluated: n,
        excluded_no_gold: excluded,
        per_question,
    })
}

/// Fraction of questions with both / at least one of their two gold items
/// in the top `k` of the ranked list.
pub fn recall_at_k<K: Ord>(
    ranked: &BTreeMap<String, Vec<K>>,
    gold_pairs: &BTreeMap<String, Vec<K>>,
    k: usize,
) -> Result<RecallAtK> {
    check_keys(ranked, gold_pairs)?;
    let mut both = 0usize;
    let mut one = 0usize;
    for (id, list) in ranked {
        let gold = &gold_pairs[id];
        if gold.len() != 2 {
            return Err(AirError::GoldArityError {
                id: id.clone(),
                found: gold.len(),
            });
        }
        let top = &list[..list.len().min(k)];
        let found = gold.iter().filter(|g| top.contains(g)).count();
        if found == 2 {
            both += 1;
        }
        if found >= 1 {
            one += 1;
        }
    }
    let n = ranked.len();
    let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    Ok(RecallAtK {
        both_found: frac(both),
        at_least_one_found: frac(one),
        k,
        questions: n,
    })
}

pub fn recall_at_10<K: Ord>(
    ranked: &BTreeMap<String, Vec<K>>,
    gold_pairs: &BTreeMap<String, Vec<K>>,
) -> Result<RecallAtK> {
    recall_at_k(ranked, gold_pairs, 10)
}

/// Key of one evaluated (question, answer) unit.
pub fn unit_key(question_id: &str, answer_id: &str) -> String {
    format!("{question_id}#{answer_id}")
}

/// P/R/F1 of each trace's merged sentences against its question's gold.
pub fn prf_from_traces(traces: &[TraceRecord], records: &[QuestionRecord]) -> Result<SelectionMetrics> {
    let by_id: BTreeMap<&str, &QuestionRecord> =
        records.iter().map(|r| (r.question_id.as_str(), r)).collect();
    let mut retrieved = BTreeMap::new();
    let mut gold = BTreeMap::new();
    for t in traces {
        let rec = by_id.get(t.question_id.as_str()).ok_or_else(|| {
            AirError::IdMismatch(format!("trace question `{}` is not in the dataset", t.question_id))
        })?;
        let key = unit_key(&t.question_id, &t.answer_id);
        retrieved.insert(key.clone(), t.merged_sentence_ids.iter().copied().collect());
        gold.insert(key, rec.gold_sentence_ids.clone());
    }
    selection_prf(&retrieved, &gold)
}

fn sentence_text<'a>(
    rec: &'a QuestionRecord,
    ctx_kb: Option<&'a crate::data::KnowledgeBase>,
    id: usize,
) -> Option<&'a str> {
    match &rec.candidate_source {
        CandidateSource::Paragraph { sentences, .. } => sentences.get(id).map(String::as_str),
        CandidateSource::KbPool => ctx_kb.and_then(|kb| kb.text(id)),
    }
}

/// Recall@10 of the correct answer's ranked list against the two gold
/// facts, matched by normalized text. Questions without a known correct
/// answer are skipped.
pub fn recall_from_traces(
    traces: &[TraceRecord],
    records: &[QuestionRecord],
    kb: Option<&crate::data::KnowledgeBase>,
) -> Result<RecallAtK> {
    let by_unit: BTreeMap<(String, String), &TraceRecord> = traces
        .iter()
        .map(|t| ((t.question_id.clone(), t.answer_id.clone()), t))
        .collect();
    let mut ranked = BTreeMap::new();
    let mut gold = BTreeMap::new();
    for rec in records {
        let Some(correct) = rec.answers.iter().find(|a| a.is_correct == Some(true)) else {
            continue;
        };
        let trace = by_unit
            .get(&(rec.question_id.clone(), correct.id.clone()))
            .ok_or_else(|| {
                AirError::IdMismatch(format!(
                    "no trace for question `{}` answer `{}`",
                    rec.question_id, correct.id
                ))
            })?;
        let list: Vec<String> = trace
            .ranked_sentence_ids
            .iter()
            .filter_map(|&id| sentence_text(rec, kb, id))
            .map(normalize_text)
            .collect();
        let golds: Vec<String> = if rec.gold_texts.is_empty() {
            rec.gold_sentence_ids
                .iter()
                .filter_map(|&id| sentence_text(rec, kb, id))
                .map(normalize_text)
                .collect()
        } else {
            rec.gold_texts.iter().map(|g| normalize_text(g)).collect()
        };
        ranked.insert(rec.question_id.clone(), list);
        gold.insert(rec.question_id.clone(), golds);
    }
    recall_at_k(&ranked, &gold, RANKED_LIST_LEN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftVariant {
    Bm25,
    LexicalUncontrolled,
    AlignmentTopK,
    AirUncontrolled,
    AirControlled,
}

impl DriftVariant {
    pub const ALL: [DriftVariant; 5] = [
        DriftVariant::Bm25,
        DriftVariant::LexicalUncontrolled,
        DriftVariant::AlignmentTopK,
        DriftVariant::AirUncontrolled,
        DriftVariant::AirControlled,
    ];

    pub fn column(self) -> &'static str {
        match self {
            DriftVariant::Bm25 => "bm25",
            DriftVariant::LexicalUncontrolled => "air_lexical_uncontrolled",
            DriftVariant::AlignmentTopK => "alignment",
            DriftVariant::AirUncontrolled => "air_uncontrolled",
            DriftVariant::AirControlled => "air_controlled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftTable {
    pub hops: Vec<usize>,
    pub variants: Vec<DriftVariant>,
    /// `f1[h][v]` for `hops[h]` and `variants[v]`.
    pub f1: Vec<Vec<f64>>,
}

impl DriftTable {
    pub fn get(&self, hop: usize, variant: DriftVariant) -> Option<f64> {
        let h = self.hops.iter().position(|&x| x == hop)?;
        let v = self.variants.iter().position(|&x| x == variant)?;
        Some(self.f1[h][v])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("hops");
        for v in &self.variants {
            out.push(',');
            out.push_str(v.column());
        }
        out.push('\n');
        for (h, row) in self.hops.iter().zip(&self.f1) {
            let _ = write!(out, "{h}");
            for x in row {
                let _ = write!(out, ",{}", percent(*x));
            }
            out.push('\n');
        }
        out
    }
}

pub fn percent(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

fn top_h_bm25(pool: &CandidatePool, query: &TermSet, ctx: &RetrievalContext<'_>, h: usize) -> Result<Vec<usize>> {
    if let PoolProvenance::Bm25 { .. } = pool.provenance {
        let mut entries: Vec<_> = pool.entries.iter().collect();
        entries.sort_by_key(|e| e.source_rank);
        return Ok(entries.into_iter().take(h).map(|e| e.sentence.id).collect());
    }
    let texts: Vec<&str> = pool.sentences().map(|s| s.text.as_str()).collect();
    let index = InvertedIndex::build(&texts, ctx.analyzer, Bm25Params::default())?;
    let ids = pool.ids();
    Ok(index.search(query, h).into_iter().map(|(pos, _)| ids[pos]).collect())
}

fn drift_retrieve(
    variant: DriftVariant,
    h: usize,
    query: &TermSet,
    pool: &CandidatePool,
    ctx: &RetrievalContext<'_>,
    base: &AirConfig,
) -> Result<Vec<usize>> {
    let chain_cfg = |mode, matcher| AirConfig {
        mode,
        matcher,
        fixed_hops: Some(h),
        max_hops: base.max_hops.max(h),
        chain_count: 1,
        ..*base
    };
    let cfg = match variant {
        DriftVariant::Bm25 => return top_h_bm25(pool, query, ctx, h),
        DriftVariant::AlignmentTopK => {
            return Ok(rank_totals(query, pool, Matcher::Embedding, ctx.table, ctx.stats)?
                .into_iter()
                .take(h)
                .map(|(id, _)| id)
                .collect())
        }
        DriftVariant::LexicalUncontrolled => chain_cfg(RetrievalMode::Uncontrolled, Matcher::Lexical),
        DriftVariant::AirUncontrolled => chain_cfg(RetrievalMode::Uncontrolled, Matcher::Embedding),
        DriftVariant::AirControlled => chain_cfg(RetrievalMode::Controlled, Matcher::Embedding),
    };
    Ok(retrieve_chain(query, pool, &cfg, ctx.table, ctx.stats)?.sentence_ids)
}

/// F1 of every variant forced to retrieve exactly `h` sentences, for each
/// `h` in `hops`.
pub fn run_drift_experiment(
    ctx: &RetrievalContext<'_>,
    records: &[QuestionRecord],
    base: &AirConfig,
    hops: &[usize],
    variants: &[DriftVariant],
) -> Result<DriftTable> {
    let units: Vec<(String, TermSet, CandidatePool, BTreeSet<usize>)> = records
        .iter()
        .flat_map(|r| r.answers.iter().map(move |a| (r, a)))
        .map(|(r, a)| {
            let pool = ctx.pool(r, a)?;
            Ok((
                unit_key(&r.question_id, &a.id),
                r.query_terms(a, ctx.analyzer),
                pool,
                r.gold_sentence_ids.clone(),
            ))
        })
        .collect::<Result<_>>()?;
    let gold: BTreeMap<String, BTreeSet<usize>> =
        units.iter().map(|(k, _, _, g)| (k.clone(), g.clone())).collect();

    let mut f1 = Vec::with_capacity(hops.len());
    for &h in hops {
        let mut row = Vec::with_capacity(variants.len());
        for &variant in variants {
            let retrieved: BTreeMap<String, BTreeSet<usize>> = units
                .par_iter()
                .map(|(key, query, pool, _)| {
                    let ids = if query.is_empty() || pool.is_empty() {
                        Vec::new()
                    } else {
                        drift_retrieve(variant, h, query, pool, ctx, base)?
                    };
                    Ok((key.clone(), ids.into_iter().collect()))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .collect();
            row.push(selection_prf(&retrieved, &gold)?.f1);
        }
        f1.push(row);
    }
    Ok(DriftTable {
        hops: hops.to_vec(),
        variants: variants.to_vec(),
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum SensitivityScore {
    F1 { f1: f64 },
    Recall { both_found: f64, at_least_one_found: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub value: f64,
    pub score: SensitivityScore,
}

/// F1 for paragraph datasets, recall@10 for KB datasets.
pub fn score_run(
    ctx: &RetrievalContext<'_>,
    records: &[QuestionRecord],
    config: &AirConfig,
) -> Result<SensitivityScore> {
    let traces = retrieve_all(ctx, records, config)?;
    match ctx.kb {
        Some(src) => {
            let r = recall_from_traces(&traces, records, Some(src.kb))?;
            Ok(SensitivityScore::Recall {
                both_found: r.both_found,
                at_least_one_found: r.at_least_one_found,
            })
        }
        None => Ok(SensitivityScore::F1 {
            f1: prf_from_traces(&traces, records)?.f1,
        }),
    }
}

pub fn run_sensitivity_m(
    ctx: &RetrievalContext<'_>,
    records: &[QuestionRecord],
    base: &AirConfig,
    grid: &[f64],
) -> Result<Vec<SensitivityRow>> {
    grid.iter()
        .map(|&m| {
            let cfg = AirConfig {
                soft_match_threshold: m,
                ..*base
            };
            Ok(SensitivityRow {
                value: m,
                score: score_run(ctx, records, &cfg)?,
            })
        })
        .collect()
}

pub fn run_sensitivity_t(
    ctx: &RetrievalContext<'_>,
    records: &[QuestionRecord],
    base: &AirConfig,
    grid: &[usize],
) -> Result<Vec<SensitivityRow>> {
    grid.iter()
        .map(|&t| {
            let cfg = AirConfig {
                expansion_threshold: t,
                ..*base
            };
            Ok(SensitivityRow {
                value: t as f64,
                score: score_run(ctx, records, &cfg)?,
            })
        })
        .collect()
}

pub fn sensitivity_csv(param: &str, rows: &[SensitivityRow]) -> String {
    let mut out = String::new();
    match rows.first().map(|r| r.score) {
        Some(SensitivityScore::Recall { .. }) => {
            let _ = writeln!(out, "{param},both_found,at_least_one_found");
        }
        _ => {
            let _ = writeln!(out, "{param},f1");
        }
    }
    for r in rows {
        let _ = match r.score {
            SensitivityScore::F1 { f1 } => writeln!(out, "{},{}", r.value, percent(f1)),
            SensitivityScore::Recall {
                both_found,
                at_least_one_found,
            } => writeln!(
                out,
                "{},{},{}",
                r.value,
                percent(both_found),
                percent(at_least_one_found)
            ),
        };
    }
    out
}

/// Aligned-column summary for terminals.
pub fn render_prf_table(m: &SelectionMetrics) -> String {
    format!(
        "{:<10} {:>6} {:>6} {:>6}\n{:<10} {:>6} {:>6} {:>6}\n(evaluated {}, excluded without gold {})\n",
        "metric",
        "P",
        "R",
        "F1",
        m.aggregation,
        percent(m.precision),
        percent(m.recall),
        percent(m.f1),
        m.evaluated,
        m.excluded_no_gold
    )
}

pub fn render_recall_table(r: &RecallAtK) -> String {
    format!(
        "{:<12} {:>10} {:>10}\n{:<12} {:>10} {:>10}\n(questions {})\n",
        "recall",
        "both",
        "at_least_1",
        format!("@{}", r.k),
        percent(r.both_found),
        percent(r.at_least_one_found),
        r.questions
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(items: &[(&str, &[usize])]) -> BTreeMap<String, BTreeSet<usize>> {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn perfect_and_disjoint() {
        let g = sets(&[("a", &[1, 2]), ("b", &[0])]);
        let m = selection_prf(&g, &g).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let r = sets(&[("a", &[3]), ("b", &[])]);
        let m = selection_prf(&r, &g).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn macro_f1_hand_arithmetic() {
        // (P, R) = (1, 0.5) and (0.5, 1): each F1 = 2/3
        let g = sets(&[("q1", &[1, 2]), ("q2", &[5])]);
        let r = sets(&[("q1", &[1]), ("q2", &[5, 6])]);
        let m = selection_prf(&r, &g).unwrap();
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_gold_is_excluded_and_ids_must_align() {
        let g = sets(&[("q1", &[1]), ("q2", &[])]);
        let r = sets(&[("q1", &[1]), ("q2", &[4])]);
        let m = selection_prf(&r, &g).unwrap();
        assert_eq!(m.evaluated, 1);
        assert_eq!(m.excluded_no_gold, 1);
        assert_eq!(m.f1, 1.0);
        let r = sets(&[("q1", &[1])]);
        assert!(matches!(selection_prf(&r, &g), Err(AirError::IdMismatch(_))));
    }

    fn lists(items: &[(&str, &[u32])]) -> BTreeMap<String, Vec<u32>> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
    }

    #[test]
    fn recall_at_10_placements() {
        let ranked = lists(&[
            ("top", &[7, 8, 1, 2]),
            ("late", &[1, 2, 3, 4, 5, 6, 9, 10, 11, 12, 8]),
            ("none", &[1, 2, 3]),
        ]);
        let gold = lists(&[("top", &[7, 8]), ("late", &[1, 8]), ("none", &[40, 41])]);
        let r = recall_at_10(&ranked, &gold).unwrap();
        // enumeration: top → both; late → one (8 at rank 11); none → neither
        assert!((r.both_found - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.at_least_one_found - 2.0 / 3.0).abs() < 1e-12);
        let bad = lists(&[("top", &[7]), ("late", &[1, 8]), ("none", &[40, 41])]);
        assert!(matches!(recall_at_10(&ranked, &bad), Err(AirError::GoldArityError { .. })));
    }

    #[test]
    fn drift_csv_shape() {
        let t = DriftTable {
            hops: vec![1, 2],
            variants: DriftVariant::ALL.to_vec(),
            f1: vec![vec![0.388, 0.388, 0.465, 0.465, 0.5]; 2],
        };
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "hops,bm25,air_lexical_uncontrolled,alignment,air_uncontrolled,air_controlled");
        assert_eq!(lines[1], "1,38.8,38.8,46.5,46.5,50.0");
        assert_eq!(t.get(2, DriftVariant::AlignmentTopK), Some(0.465));
    }
}
