//! Fixture paths and independent reference implementations shared by the
//! integration tests. Nothing here calls into the scoring code it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use air_core::{EmbeddingTable, TermSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn micro_embeddings() -> EmbeddingTable {
    EmbeddingTable::load(fixture("embeddings_micro.txt"), None).expect("fixture embeddings")
}

pub fn ts(terms: &[&str]) -> TermSet {
    terms.iter().copied().collect()
}

/// Full-scan BM25 over raw token lists (Lucene idf, k1/b as given).
/// Sums each document's term contributions in sorted query-term order.
pub fn bm25_full_scan(docs: &[Vec<String>], query: &BTreeSet<String>, k1: f64, b: f64) -> Vec<(usize, f64)> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    let mut out = Vec::new();
    for (id, doc) in docs.iter().enumerate() {
        let mut score = 0.0;
        let mut any = false;
        for term in query {
            let tf = doc.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|d| d.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = 1.0 - b + b * doc.len() as f64 / avg;
            score += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            any = true;
        }
        if any && score > 0.0 {
            out.push((id, score));
        }
    }
    // selection sort: highest score first, lowest id on ties
    let mut ranked = Vec::with_capacity(out.len());
    while !out.is_empty() {
        let mut best = 0;
        for i in 1..out.len() {
            let (bi, bs) = out[best];
            let (ci, cs) = out[i];
            if cs > bs || (cs == bs && ci < bi) {
                best = i;
            }
        }
        ranked.push(out.remove(best));
    }
    ranked
}

/// Σ idf(q) · max_p dot(v_q, v_p) with the exact-string OOV policy,
/// computed with explicit loops over raw vectors.
pub fn alignment_double_loop(
    query: &[String],
    sentence: &[String],
    vectors: &BTreeMap<String, Vec<f32>>,
    idf: &dyn Fn(&str) -> f64,
) -> f64 {
    let mut total = 0.0;
    for q in query {
        let mut best = f64::NEG_INFINITY;
        for p in sentence {
            let sim = if q == p {
                1.0
            } else {
                match (vectors.get(q), vectors.get(p)) {
                    (Some(a), Some(b)) => {
                        let mut acc = 0.0f64;
                        for i in 0..a.len() {
                            acc += a[i] as f64 * b[i] as f64;
                        }
                        acc.clamp(-1.0, 1.0)
                    }
                    _ => 0.0,
                }
            };
            if sim > best {
                best = sim;
            }
        }
        if sentence.is_empty() {
            best = 0.0;
        }
        total += idf(q) * best;
    }
    total
}

/// Lexical controlled retrieval over plain string sets, written directly
/// from the hop rules. Returns the chosen sentence indices.
pub fn lexical_chain_reference(
    query: &BTreeSet<String>,
    sentences: &[BTreeSet<String>],
    idf: &dyn Fn(&str) -> f64,
    expansion_threshold: usize,
    max_hops: usize,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut remainder = query.clone();
    let mut current = query.clone();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in sentences.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let score: f64 = current.iter().filter(|t| s.contains(*t)).map(|t| idf(t)).sum();
            if best.is_none() || score > best.unwrap().1 {
                best = Some((i, score));
            }
        }
        let Some((pick, _)) = best else { break };
        chosen.push(pick);
        let next: BTreeSet<String> = remainder.difference(&sentences[pick]).cloned().collect();
        let unchanged = next == remainder;
        remainder = next;
        if remainder.is_empty() || unchanged || chosen.len() >= max_hops || chosen.len() == sentences.len() {
            break;
        }
        current = if remainder.len() > expansion_threshold {
            remainder.clone()
        } else {
            let fresh: BTreeSet<String> = sentences[pick].difference(query).cloned().collect();
            remainder.union(&fresh).cloned().collect()
        };
    }
    chosen
}
