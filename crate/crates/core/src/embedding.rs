//! Pretrained word vectors in GloVe text format.
//!
//! Vectors are L2-normalized at load time, so cosine similarity is a plain
//! dot product in the alignment inner loop.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::TermSet;
use crate::error::{AirError, Result};

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    duplicates_skipped: usize,
}

impl EmbeddingTable {
    /// An empty table: every distinct pair of terms is OOV.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    /// Builds a table from raw (unnormalized) vectors. First occurrence of a
    /// word wins.
    pub fn from_vectors<S, I>(dim: usize, vectors: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, Vec<f64>)>,
    {
        let mut table = Self::empty(dim);
        for (i, (word, v)) in vectors.into_iter().enumerate() {
            if v.len() != dim {
                return Err(AirError::InconsistentDim {
                    line_no: i + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            table.push(word.into(), &v, i + 1)?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, vocab_filter: Option<&TermSet>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| AirError::io(path, e))?;
        Self::from_reader(BufReader::with_capacity(1 << 20, file), vocab_filter)
            .map_err(|e| match e {
                AirError::Io { source, .. } => AirError::io(path, source),
                other => other,
            })
    }

    pub fn from_reader<R: BufRead>(reader: R, vocab_filter: Option<&TermSet>) -> Result<Self> {
        let mut table = Self::default();
        let mut dim: Option<usize> = None;
        let mut values: Vec<f64> = Vec::new();
        let mut saw_line = false;

        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| AirError::io("<embeddings>", e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let word = fields.next().unwrap_or_default();
            let rest: Vec<&str> = fields.collect();

            if !saw_line {
                saw_line = true;
                if rest.len() == 1
                    && word.parse::<u64>().is_ok()
                    && rest[0].parse::<u64>().is_ok()
                {
                    // "count dim" header
                    continue;
                }
            }
            if rest.is_empty() {
                return Err(AirError::MalformedLine {
                    line_no,
                    reason: "word has no vector components".into(),
                });
            }
            let expected = *dim.get_or_insert(rest.len());
            if rest.len() != expected {
                return Err(AirError::InconsistentDim {
                    line_no,
                    expected,
                    found: rest.len(),
                });
            }
            table.dim = expected;
            if let Some(filter) = vocab_filter {
                if !filter.contains(word) {
                    continue;
                }
            }
            if table.index.contains_key(word) {
                table.duplicates_skipped += 1;
                continue;
            }
            values.clear();
            for f in &rest {
                let v: f64 = f.parse().map_err(|_| AirError::MalformedLine {
                    line_no,
                    reason: format!("`{f}` is not a number"),
                })?;
                values.push(v);
            }
            table.push(word.to_string(), &values, line_no)?;
        }
        if dim.is_none() {
            return Err(AirError::EmptyFile);
        }
        Ok(table)
    }

    fn push(&mut self, word: String, raw: &[f64], line_no: usize) -> Result<()> {
        if self.index.contains_key(&word) {
            self.duplicates_skipped += 1;
            return Ok(());
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(AirError::MalformedLine {
                line_no,
                reason: "vector has zero or non-finite norm".into(),
            });
        }
        self.index.insert(word, self.index.len());
        self.data.extend(raw.iter().map(|x| (x / norm) as f32));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Lines ignored because their word had already been loaded.
    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// The stored unit vector for `term`.
    pub fn vector(&self, term: &str) -> Option<&[f32]> {
        self.index
            .get(term)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    /// Cosine similarity. Identical strings are 1.0 whether or not they are
    /// in the vocabulary; any other pair involving an OOV term is 0.0.
    pub fn cos_sim(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.vector(a), self.vector(b)) {
            (Some(va), Some(vb)) => dot(va, vb).clamp(-1.0, 1.0),
            _ => 0.0,
        }
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<EmbeddingTable> {
        EmbeddingTable::from_reader(text.as_bytes(), None)
    }

    #[test]
    fn normalizes_on_load() {
        let t = parse("cat 3 4\n").unwrap();
        assert_eq!(t.dim(), 2);
        let v = t.vector("cat").unwrap();
        assert!((v[0] as f64 - 0.6).abs() < 1e-6);
        assert!((v[1] as f64 - 0.8).abs() < 1e-6);
    }

    #[test]
    fn duplicate_words_keep_first() {
        let t = parse("cat 1 0\ncat 0 1\ndog 0 1\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.duplicates_skipped(), 1);
        assert_eq!(t.vector("cat").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn mixed_dims_name_the_line() {
        match parse("a 1 0\nb 1 0 0\n") {
            Err(AirError::InconsistentDim {
                line_no, expected, found,
            }) => assert_eq!((line_no, expected, found), (2, 2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_empty() {
        assert!(matches!(parse("lonely\n"), Err(AirError::MalformedLine { line_no: 1, .. })));
        assert!(matches!(parse("a 1 x\n"), Err(AirError::MalformedLine { line_no: 1, .. })));
        assert!(matches!(parse(""), Err(AirError::EmptyFile)));
        assert!(matches!(parse("\n\n"), Err(AirError::EmptyFile)));
    }

    #[test]
    fn header_line_is_skipped() {
        let t = parse("2 3\niron 1 0 0\nsteel 0 1 0\n").unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn vocab_filter_limits_rows() {
        let filter: TermSet = ["iron"].into_iter().collect();
        let t = EmbeddingTable::from_reader("iron 1 0\nsteel 0 1\n".as_bytes(), Some(&filter))
            .unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.contains("iron"));
        assert!(!t.contains("steel"));
    }

    #[test]
    fn cos_sim_examples() {
        let t = parse("a 1 0\nb 0.6 0.8\niron 2 1\n").unwrap();
        assert!((t.cos_sim("iron", "iron") - 1.0).abs() < 1e-6);
        assert_eq!(t.cos_sim("zqx1", "iron"), 0.0);
        assert_eq!(t.cos_sim("zqx1", "zqx1"), 1.0);
        // explicit loop oracle
        let (va, vb) = (t.vector("a").unwrap(), t.vector("b").unwrap());
        let mut acc = 0.0f64;
        for i in 0..2 {
            acc += va[i] as f64 * vb[i] as f64;
        }
        assert!((acc - 0.6).abs() < 1e-6);
        assert_eq!(t.cos_sim("a", "b"), acc);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_unit(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 6), 2..8)
        ) {
            let rows: Vec<_> = rows
                .into_iter()
                .filter(|r| r.iter().any(|x| x.abs() > 1e-3))
                .enumerate()
                .map(|(i, r)| (format!("w{i}"), r))
                .collect();
            let t = EmbeddingTable::from_vectors(6, rows.clone()).unwrap();
            for (a, _) in &rows {
                let v = t.vector(a).unwrap();
                let n: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                prop_assert!((n - 1.0).abs() < 1e-6);
                for (b, _) in &rows {
                    let ab = t.cos_sim(a, b);
                    prop_assert_eq!(ab, t.cos_sim(b, a));
                    prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
                }
            }
        }
    }
}
