//! Tweet datasets: CSV ingestion, train/validation splits and summary counts.
//!
//! Labeled files carry the header `id,text,labels`, unlabeled ones `id,text`.
//! The label column holds space-separated canonical label names.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::CorpusError;
use crate::labels::{ConcernLabel, LabelSet};
use crate::rng::SeededRng;
use crate::textprep::Preprocessor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub gold: Option<LabelSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Labeled,
    Unlabeled,
}

impl DatasetFormat {
    pub fn header(self) -> &'static [&'static str] {
        match self {
            DatasetFormat::Labeled => &["id", "text", "labels"],
            DatasetFormat::Unlabeled => &["id", "text"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<TweetRecord>,
    pub source: Option<PathBuf>,
    pub format: DatasetFormat,
}

impl Dataset {
    pub fn new(records: Vec<TweetRecord>, format: DatasetFormat) -> Self {
        Dataset {
            records,
            source: None,
            format,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }

    /// Gold sets in record order; fails on the first unlabeled record.
    pub fn gold(&self) -> Result<Vec<LabelSet>, CorpusError> {
        self.records
            .iter()
            .map(|r| {
                r.gold
                    .ok_or_else(|| CorpusError::Unlabeled { id: r.id.clone() })
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path)?;
        self.write_csv(file)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.format.header())?;
        for r in &self.records {
            match self.format {
                DatasetFormat::Labeled => {
                    let labels = r.gold.map(|g| g.to_string()).unwrap_or_default();
                    w.write_record([r.id.as_str(), r.text.as_str(), labels.as_str()])?;
                }
                DatasetFormat::Unlabeled => w.write_record([r.id.as_str(), r.text.as_str()])?,
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads a dataset, checking the header against `format`.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut ds = read_dataset(file, path, Some(format))?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

/// Loads a dataset whose format is inferred from its header.
pub fn load_dataset_any(path: &Path) -> Result<Dataset, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut ds = read_dataset(file, path, None)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

pub fn read_dataset<R: Read>(
    input: R,
    path: &Path,
    format: Option<DatasetFormat>,
) -> Result<Dataset, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let detected = [DatasetFormat::Labeled, DatasetFormat::Unlabeled]
        .into_iter()
        .find(|f| {
            header
                .iter()
                .map(String::as_str)
                .eq(f.header().iter().copied())
        });
    let format = match (format, detected) {
        (Some(want), Some(got)) if want == got => want,
        (None, Some(got)) => got,
        (want, _) => {
            let expected = want.map_or("id,text[,labels]".to_string(), |f| f.header().join(","));
            return Err(CorpusError::Header {
                path: path.to_path_buf(),
                expected,
                found: header.join(","),
            });
        }
    };
    let width = format.header().len();

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i as u64 + 1;
        let row = row.map_err(|e| CorpusError::Malformed {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.len() != width {
            return Err(CorpusError::Malformed {
                row: row_no,
                message: format!("expected {width} columns, found {}", row.len()),
            });
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(CorpusError::EmptyId { row: row_no });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { row: row_no, id });
        }
        let gold = match format {
            DatasetFormat::Unlabeled => None,
            DatasetFormat::Labeled => {
                let mut set = LabelSet::empty();
                for token in row[2].split_whitespace() {
                    let label =
                        ConcernLabel::parse(token).map_err(|_| CorpusError::UnknownLabel {
                            row: row_no,
                            token: token.to_string(),
                        })?;
                    set.insert(label);
                }
                if set.is_empty() {
                    return Err(CorpusError::EmptyLabels { row: row_no });
                }
                if set.has_conflicting_none() {
                    warn!("row {row_no} (`{id}`): `none` appears together with other labels");
                }
                Some(set)
            }
        };
        records.push(TweetRecord {
            id,
            text: row[1].to_string(),
            gold,
        });
    }
    Ok(Dataset {
        records,
        source: None,
        format,
    })
}

/// Size of the first partition: `floor(ratio * n)`, with a small epsilon so
/// that exact products survive float rounding.
pub fn train_size(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Seeded shuffle, then the first `train_size` records go to the first
/// partition and the rest to the second.
pub fn split_train_validation(
    ds: &Dataset,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), CorpusError> {
    let n = ds.len();
    let degenerate = CorpusError::DegenerateSplit { ratio, n };
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(degenerate);
    }
    let k = train_size(n, ratio);
    if k == 0 || k == n {
        return Err(degenerate);
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let take = |idx: &[usize]| Dataset {
        records: idx.iter().map(|&i| ds.records[i].clone()).collect(),
        source: None,
        format: ds.format,
    };
    Ok((take(&order[..k]), take(&order[k..])))
}

/// Number of records carrying each label.
pub fn label_distribution(ds: &Dataset) -> Result<BTreeMap<ConcernLabel, usize>, CorpusError> {
    let mut counts: BTreeMap<ConcernLabel, usize> =
        ConcernLabel::ALL.iter().map(|l| (*l, 0)).collect();
    for r in &ds.records {
        let gold = r
            .gold
            .ok_or_else(|| CorpusError::Unlabeled { id: r.id.clone() })?;
        for l in gold.iter() {
            *counts.get_mut(&l).unwrap() += 1;
        }
    }
    Ok(counts)
}

/// The `k` most frequent preprocessed terms; ties sort lexicographically.
pub fn top_terms(ds: &Dataset, k: usize, prep: &Preprocessor) -> Vec<(String, usize)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in ds.texts() {
        for term in prep.preprocess(text) {
            *counts.entry(term).or_default() += 1;
        }
    }
    let mut terms: Vec<(String, usize)> = counts.into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    terms.truncate(k);
    terms
}

pub fn write_label_distribution<W: Write>(
    counts: &BTreeMap<ConcernLabel, usize>,
    out: W,
) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "count"])?;
    for (l, c) in counts {
        w.write_record([l.name(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_top_terms<W: Write>(terms: &[(String, usize)], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term", "count"])?;
    for (t, c) in terms {
        w.write_record([t.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Dataset, CorpusError> {
        read_dataset(text.as_bytes(), Path::new("mem.csv"), None)
    }

    fn synthetic(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| TweetRecord {
                    id: format!("t{i}"),
                    text: format!("tweet {i}"),
                    gold: Some(LabelSet::single(ConcernLabel::ALL[i % 12])),
                })
                .collect(),
            DatasetFormat::Labeled,
        )
    }

    #[test]
    fn labeled_rows_map_to_records() {
        let ds = parse("id,text,labels\nt1,\"vaccine gave me a fever\",\"side-effect\"\n").unwrap();
        assert_eq!(ds.records[0].id, "t1");
        assert_eq!(ds.records[0].text, "vaccine gave me a fever");
        assert_eq!(
            ds.records[0].gold,
            Some(LabelSet::single(ConcernLabel::SideEffect))
        );
    }

    #[test]
    fn multi_label_row() {
        let ds = parse("id,text,labels\nt2,\"BREAKING: FDA announces 2 deaths …\",\"side-effect mandatory political\"\n").unwrap();
        assert_eq!(ds.records[0].gold.unwrap().len(), 3);
    }

    #[test]
    fn load_errors() {
        let err = parse("id,text,labels\nt1,x,side-effect\nt2,y,sideeffect\n").unwrap_err();
        assert!(
            matches!(err, CorpusError::UnknownLabel { row: 2, ref token } if token == "sideeffect")
        );
        assert!(matches!(
            parse("id,text,labels\nt1,x\n").unwrap_err(),
            CorpusError::Malformed { row: 1, .. }
        ));
        assert!(matches!(
            parse("id,text,labels\nt1,x,pharma\nt1,y,pharma\n").unwrap_err(),
            CorpusError::DuplicateId { row: 2, .. }
        ));
        assert!(matches!(
            parse("id,body\n").unwrap_err(),
            CorpusError::Header { .. }
        ));
        assert!(matches!(
            parse("id,text,labels\nt1,x,\n").unwrap_err(),
            CorpusError::EmptyLabels { row: 1 }
        ));
        let missing =
            load_dataset(Path::new("/nonexistent/x.csv"), DatasetFormat::Labeled).unwrap_err();
        assert!(matches!(missing, CorpusError::Open { .. }));
    }

    #[test]
    fn none_with_other_labels_is_accepted() {
        let ds = parse("id,text,labels\nt1,x,none pharma\n").unwrap();
        assert_eq!(ds.records[0].gold.unwrap().len(), 2);
    }

    #[test]
    fn format_mismatch_is_a_header_error() {
        let err = read_dataset(
            "id,text\nt1,x\n".as_bytes(),
            Path::new("m"),
            Some(DatasetFormat::Labeled),
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::Header { .. }));
    }

    #[test]
    fn split_sizes_match_the_80_20_counts() {
        assert_eq!(train_size(9921, 0.8), 7936);
        let (a, b) = split_train_validation(&synthetic(9921), 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (7936, 1985));
    }

    #[test]
    fn split_is_deterministic_and_seed_dependent() {
        let ds = synthetic(10);
        assert_eq!(
            split_train_validation(&ds, 0.8, 3).unwrap(),
            split_train_validation(&ds, 0.8, 3).unwrap()
        );

        let ds = synthetic(5);
        let firsts: HashSet<Vec<String>> = (0..10)
            .map(|seed| {
                let (a, _) = split_train_validation(&ds, 0.8, seed).unwrap();
                let mut ids: Vec<String> = a.records.iter().map(|r| r.id.clone()).collect();
                ids.sort();
                ids
            })
            .collect();
        assert!(firsts.len() > 1);
    }

    #[test]
    fn degenerate_split() {
        assert!(split_train_validation(&synthetic(1), 0.8, 0).is_err());
        assert!(split_train_validation(&synthetic(10), 1.0, 0).is_err());
        assert!(split_train_validation(&synthetic(10), 0.0, 0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let empty = Dataset::new(vec![], DatasetFormat::Labeled);
        assert!(label_distribution(&empty)
            .unwrap()
            .values()
            .all(|c| *c == 0));

        let ds = parse("id,text,labels\nt1,a,side-effect\nt2,b,side-effect pharma\n").unwrap();
        let d = label_distribution(&ds).unwrap();
        assert_eq!(d[&ConcernLabel::SideEffect], 2);
        assert_eq!(d[&ConcernLabel::Pharma], 1);
        assert_eq!(d.values().sum::<usize>(), 3);

        let unl = parse("id,text\nt1,a\n").unwrap();
        assert!(label_distribution(&unl).is_err());
    }

    #[test]
    fn top_terms_examples() {
        let ds = parse("id,text\na,vaccine bad\nb,vaccine good\n").unwrap();
        let p = Preprocessor::default();
        assert_eq!(top_terms(&ds, 1, &p), vec![("vaccine".to_string(), 2)]);
        let all = top_terms(&ds, 10, &p);
        assert_eq!(all.len(), 3);
        assert_eq!(all[1].0, "bad");
        assert_eq!(all[2].0, "good");
        assert!(top_terms(&Dataset::new(vec![], DatasetFormat::Unlabeled), 5, &p).is_empty());
    }

    proptest! {
        #[test]
        fn save_load_round_trip(rows in proptest::collection::vec(("[a-z0-9]{1,6}", "\\PC{0,40}", 1u16..4096), 0..20)) {
            let mut seen = HashSet::new();
            let records: Vec<TweetRecord> = rows
                .into_iter()
                .filter(|(id, _, _)| seen.insert(id.clone()))
                .map(|(id, text, bits)| TweetRecord { id, text, gold: LabelSet::from_bits(bits) })
                .collect();
            let ds = Dataset::new(records, DatasetFormat::Labeled);
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            let back = read_dataset(buf.as_slice(), Path::new("m"), None).unwrap();
            prop_assert_eq!(back.records, ds.records);
        }

        #[test]
        fn split_partitions_are_disjoint_and_exhaustive(n in 2usize..60, ratio in 0.05f64..0.95, seed in 0u64..1000) {
            let ds = synthetic(n);
            if let Ok((a, b)) = split_train_validation(&ds, ratio, seed) {
                prop_assert_eq!(a.len() + b.len(), n);
                let ids: HashSet<_> = a.records.iter().chain(&b.records).map(|r| r.id.clone()).collect();
                prop_assert_eq!(ids.len(), n);
            }
        }
    }
}
