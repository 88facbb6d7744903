//! Shared inputs for the benchmarks.

use vaxconcern::pipeline::tokenize_dataset;
use vaxconcern::synthetic::mini_corpus;
use vaxconcern::{Dataset, LabelSet, Preprocessor, TweetRecord};

/// The synthetic corpus repeated `copies` times with fresh ids and seeds.
pub fn corpus(copies: usize) -> Dataset {
    let mut records: Vec<TweetRecord> = Vec::new();
    for c in 0..copies {
        for r in mini_corpus(c as u64 + 1).records {
            records.push(TweetRecord {
                id: format!("{c}-{}", r.id),
                ..r
            });
        }
    }
    Dataset::new(records, vaxconcern::DatasetFormat::Labeled)
}

pub fn tokens(ds: &Dataset) -> Vec<Vec<String>> {
    tokenize_dataset(&Preprocessor::default(), ds)
}

pub fn gold(ds: &Dataset) -> Vec<LabelSet> {
    ds.gold().expect("labelled corpus")
}
