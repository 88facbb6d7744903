//! TF-IDF features over preprocessed token lists.
//!
//! Default (`Raw`) weighting:
//!
//! ```text
//! tf(t, d)     = count(t in d) / |d|
//! idf(t)       = ln(N / df(t))
//! tfidf(t, d)  = tf(t, d) * idf(t)
//! ```
//!
//! `SmoothL2` uses `idf = ln((1 + N) / (1 + df)) + 1` and L2-normalizes each
//! row. Vocabulary columns are assigned in lexicographic term order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::FeatureError;

/// Sparse row with strictly increasing indices below `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> Result<Self, FeatureError> {
        for (i, &(index, w)) in entries.iter().enumerate() {
            if index >= dim {
                return Err(FeatureError::IndexOutOfRange { index, dim });
            }
            if !w.is_finite() {
                return Err(FeatureError::NonFinite { index });
            }
            if i > 0 && entries[i - 1].0 >= index {
                return Err(FeatureError::Unsorted);
            }
        }
        Ok(SparseVector { entries, dim })
    }

    /// Builds from dense values, keeping non-zeros.
    pub fn from_dense(values: &[f64]) -> Result<Self, FeatureError> {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        Self::new(entries, values.len())
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|(_, w)| *w == 0.0)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Appends 0/1 indicator columns after the existing dimension.
    pub fn augment(&self, indicators: &[bool]) -> SparseVector {
        let mut entries = self.entries.clone();
        entries.extend(
            indicators
                .iter()
                .enumerate()
                .filter(|(_, on)| **on)
                .map(|(k, _)| (self.dim + k, 1.0)),
        );
        SparseVector {
            entries,
            dim: self.dim + indicators.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfidfMode {
    #[default]
    Raw,
    SmoothL2,
}

impl fmt::Display for TfidfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfidfMode::Raw => "raw",
            TfidfMode::SmoothL2 => "smooth_l2",
        })
    }
}

impl std::str::FromStr for TfidfMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(TfidfMode::Raw),
            "smooth_l2" => Ok(TfidfMode::SmoothL2),
            other => Err(format!("unknown tf-idf mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    doc_count: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.df[i])
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    fn from_parts(terms: Vec<String>, df: Vec<usize>, doc_count: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            index,
            df,
            doc_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    mode: TfidfMode,
}

/// Fits the raw-formula model.
pub fn fit_vocabulary(docs: &[Vec<String>], min_df: usize) -> Result<TfidfModel, FeatureError> {
    TfidfModel::fit(docs, min_df, TfidfMode::Raw)
}

/// `count(term in doc) / |doc|`.
pub fn term_frequency(term: &str, doc: &[String]) -> Result<f64, FeatureError> {
    if doc.is_empty() {
        return Err(FeatureError::EmptyDocument);
    }
    let count = doc.iter().filter(|t| *t == term).count();
    Ok(count as f64 / doc.len() as f64)
}

impl TfidfModel {
    pub fn fit(docs: &[Vec<String>], min_df: usize, mode: TfidfMode) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::NoDocuments);
        }
        if min_df == 0 {
            return Err(FeatureError::InvalidMinDf);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let (terms, dfs): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|(_, c)| *c >= min_df)
            .map(|(t, c)| (t.to_string(), c))
            .unzip();
        if terms.is_empty() {
            return Err(FeatureError::EmptyVocabulary { min_df });
        }
        let n = docs.len();
        let idf = dfs.iter().map(|&d| idf_value(mode, n, d)).collect();
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_parts(terms, dfs, n),
            idf,
            mode,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn mode(&self) -> TfidfMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.index_of(term).map(|i| self.idf[i])
    }

    pub fn idf_values(&self) -> &[f64] {
        &self.idf
    }

    fn counts(&self, doc: &[String]) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for t in doc {
            if let Some(i) = self.vocabulary.index_of(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        counts
    }

    /// TF-IDF row. Out-of-vocabulary tokens still count toward `|d|`.
    pub fn transform(&self, doc: &[String]) -> SparseVector {
        if doc.is_empty() {
            return SparseVector::zeros(self.dim());
        }
        let len = doc.len() as f64;
        let mut entries: Vec<(usize, f64)> = self
            .counts(doc)
            .into_iter()
            .map(|(i, c)| (i, (c as f64 / len) * self.idf[i]))
            .filter(|(_, w)| *w != 0.0)
            .collect();
        if self.mode == TfidfMode::SmoothL2 {
            let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                entries.iter_mut().for_each(|(_, w)| *w /= norm);
            }
        }
        SparseVector {
            entries,
            dim: self.dim(),
        }
    }

    /// Raw in-vocabulary term counts.
    pub fn count_vector(&self, doc: &[String]) -> SparseVector {
        SparseVector {
            entries: self
                .counts(doc)
                .into_iter()
                .map(|(i, c)| (i, c as f64))
                .collect(),
            dim: self.dim(),
        }
    }

    const MAGIC: &'static str = "vaxconcern-tfidf";
    const VERSION: u32 = 1;

    /// Header `vaxconcern-tfidf<TAB>1<TAB>mode<TAB>N<TAB>V`, then one
    /// `term<TAB>df<TAB>idf` line per column in index order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            Self::MAGIC,
            Self::VERSION,
            self.mode,
            self.vocabulary.doc_count,
            self.dim()
        )?;
        for (i, term) in self.vocabulary.terms.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}", term, self.vocabulary.df[i], self.idf[i])?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, FeatureError> {
        let bad = |line: usize, message: &str| FeatureError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing header"))?
            .map_err(|e| bad(1, &e.to_string()))?;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 5 || h[0] != Self::MAGIC {
            return Err(bad(1, "not a tf-idf model file"));
        }
        if h[1] != Self::VERSION.to_string() {
            return Err(bad(1, &format!("unsupported format version {}", h[1])));
        }
        let mode: TfidfMode = h[2].parse().map_err(|e: String| bad(1, &e))?;
        let n: usize = h[3].parse().map_err(|_| bad(1, "bad document count"))?;
        let v: usize = h[4].parse().map_err(|_| bad(1, "bad vocabulary size"))?;

        let mut terms = Vec::with_capacity(v);
        let mut dfs = Vec::with_capacity(v);
        let mut idf = Vec::with_capacity(v);
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line.map_err(|e| bad(line_no, &e.to_string()))?;
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(bad(line_no, "expected term, df, idf"));
            }
            let df: usize = parts[1].parse().map_err(|_| bad(line_no, "bad df"))?;
            if df == 0 || df > n {
                return Err(bad(line_no, "df outside 1..=N"));
            }
            if terms
                .last()
                .is_some_and(|prev: &String| prev.as_str() >= parts[0])
            {
                return Err(bad(line_no, "terms out of order"));
            }
            terms.push(parts[0].to_string());
            dfs.push(df);
            idf.push(
                parts[2]
                    .parse::<f64>()
                    .map_err(|_| bad(line_no, "bad idf"))?,
            );
        }
        if terms.len() != v {
            return Err(bad(1, "vocabulary size does not match header"));
        }
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_parts(terms, dfs, n),
            idf,
            mode,
        })
    }
}

fn idf_value(mode: TfidfMode, n: usize, df: usize) -> f64 {
    match mode {
        TfidfMode::Raw => (n as f64 / df as f64).ln(),
        TfidfMode::SmoothL2 => ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn three_docs() -> Vec<Vec<String>> {
        vec![
            doc(&["vaccine", "bad"]),
            doc(&["vaccine", "good"]),
            doc(&["bad", "data"]),
        ]
    }

    #[test]
    fn document_frequencies() {
        let m = fit_vocabulary(&three_docs(), 1).unwrap();
        let v = m.vocabulary();
        assert_eq!(v.df("vaccine"), Some(2));
        assert_eq!(v.df("bad"), Some(2));
        assert_eq!(v.df("good"), Some(1));
        assert_eq!(v.df("data"), Some(1));
        assert_eq!(v.doc_count(), 3);
        assert_eq!(v.terms(), &["bad", "data", "good", "vaccine"]);
    }

    #[test]
    fn idf_hand_values() {
        let m = fit_vocabulary(&three_docs(), 1).unwrap();
        assert!((m.idf("vaccine").unwrap() - 0.405_465_108_108_164_4).abs() < 1e-9);
        let every = fit_vocabulary(&[doc(&["a"]), doc(&["a", "b"])], 1).unwrap();
        assert_eq!(every.idf("a"), Some(0.0));
    }

    #[test]
    fn term_frequency_examples() {
        assert_eq!(
            term_frequency("vaccine", &doc(&["vaccine", "bad"])).unwrap(),
            0.5
        );
        assert_eq!(
            term_frequency("absent", &doc(&["vaccine", "bad"])).unwrap(),
            0.0
        );
        assert_eq!(
            term_frequency("x", &doc(&["x", "x", "x", "y"])).unwrap(),
            0.75
        );
        assert_eq!(term_frequency("x", &[]), Err(FeatureError::EmptyDocument));
    }

    #[test]
    fn transform_examples() {
        let m = fit_vocabulary(&three_docs(), 1).unwrap();
        let v = m.transform(&doc(&["vaccine", "bad"]));
        let vi = m.vocabulary().index_of("vaccine").unwrap();
        assert!((v.get(vi) - 0.202_732_554_054_082_2).abs() < 1e-9);
        assert!(m.transform(&doc(&["zzz", "qqq"])).entries().is_empty());
        let b = m.transform(&doc(&["bad", "bad"]));
        assert!((b.get(m.vocabulary().index_of("bad").unwrap()) - 1.5f64.ln()).abs() < 1e-9);
        assert!(m.transform(&[]).entries().is_empty());
    }

    #[test]
    fn count_vector_examples() {
        let m = fit_vocabulary(&three_docs(), 1).unwrap();
        let c = m.count_vector(&doc(&["vaccine", "vaccine", "bad"]));
        assert_eq!(c.get(m.vocabulary().index_of("vaccine").unwrap()), 2.0);
        assert_eq!(c.get(m.vocabulary().index_of("bad").unwrap()), 1.0);
        assert_eq!(c.nnz(), 2);
        assert!(m.count_vector(&[]).entries().is_empty());
        assert!(m.count_vector(&doc(&["oov"])).entries().is_empty());
    }

    #[test]
    fn min_df_and_errors() {
        let m = fit_vocabulary(&three_docs(), 2).unwrap();
        assert_eq!(m.vocabulary().terms(), &["bad", "vaccine"]);
        assert_eq!(
            fit_vocabulary(&three_docs(), 4),
            Err(FeatureError::EmptyVocabulary { min_df: 4 })
        );
        assert_eq!(fit_vocabulary(&[], 1), Err(FeatureError::NoDocuments));
    }

    #[test]
    fn identical_documents_give_zero_idf() {
        let docs = vec![doc(&["a", "b"]); 4];
        let m = fit_vocabulary(&docs, 1).unwrap();
        assert!(m.idf_values().iter().all(|v| *v == 0.0));
        assert!(m.transform(&docs[0]).entries().is_empty());
    }

    #[test]
    fn smooth_l2_rows_have_unit_norm() {
        let m = TfidfModel::fit(&three_docs(), 1, TfidfMode::SmoothL2).unwrap();
        let v = m.transform(&doc(&["vaccine", "bad", "good"]));
        assert!((v.l2_norm() - 1.0).abs() < 1e-12);
        assert!((m.idf("good").unwrap() - ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sparse_vector_validation() {
        assert_eq!(
            SparseVector::new(vec![(1, 1.0), (0, 1.0)], 3),
            Err(FeatureError::Unsorted)
        );
        assert_eq!(
            SparseVector::new(vec![(3, 1.0)], 3),
            Err(FeatureError::IndexOutOfRange { index: 3, dim: 3 })
        );
        assert_eq!(
            SparseVector::new(vec![(0, f64::NAN)], 3),
            Err(FeatureError::NonFinite { index: 0 })
        );
        let a = SparseVector::new(vec![(1, 2.0)], 3)
            .unwrap()
            .augment(&[true, false, true]);
        assert_eq!(a.dim(), 6);
        assert_eq!(a.entries(), &[(1, 2.0), (3, 1.0), (5, 1.0)]);
    }

    #[test]
    fn persistence_round_trip_and_rejects_garbage() {
        for mode in [TfidfMode::Raw, TfidfMode::SmoothL2] {
            let m = TfidfModel::fit(&three_docs(), 1, mode).unwrap();
            let mut buf = Vec::new();
            m.write(&mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.starts_with(&format!("vaxconcern-tfidf\t1\t{mode}\t3\t4\n")));
            assert_eq!(TfidfModel::read(buf.as_slice()).unwrap(), m);
        }
        assert!(TfidfModel::read("nope\n".as_bytes()).is_err());
        assert!(TfidfModel::read("vaxconcern-tfidf\t1\traw\t3\t2\nb\t1\t1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn transform_matches_tf_times_idf(
            docs in proptest::collection::vec(proptest::collection::vec("[a-e]", 1..6), 1..8),
            probe in proptest::collection::vec("[a-g]", 1..8)
        ) {
            let m = fit_vocabulary(&docs, 1).unwrap();
            let v = m.transform(&probe);
            prop_assert!(SparseVector::new(v.entries().to_vec(), v.dim()).is_ok());
            prop_assert!(v.entries().iter().all(|(_, w)| *w >= 0.0));
            for (i, term) in m.vocabulary().terms().iter().enumerate() {
                let expected = term_frequency(term, &probe).unwrap() * m.idf(term).unwrap();
                prop_assert_eq!(v.get(i), expected);
            }
        }
    }
}
