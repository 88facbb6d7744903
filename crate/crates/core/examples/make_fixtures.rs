//! Regenerates the files under `fixtures/`.
//!
//! cargo run -p vaxconcern --example make_fixtures -- <fixtures-dir>

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use vaxconcern::corpus::{load_dataset, split_train_validation};
use vaxconcern::llm::{
    build_prompt, escape_cell, render_response, request_digest, select_exemplars, Exemplar,
    ExemplarSet, LlmParams, PromptAssets,
};
use vaxconcern::synthetic::{mini_corpus, DEFAULT_SEED};
use vaxconcern::{ConcernLabel, Dataset, DatasetFormat, Preprocessor, TweetRecord};

pub const GOLDEN_TWEET: &str =
    "Big Pharma only cares about PROFIT 💰 and the jab was rushed!! @someone https://t.co/abc";

fn cleaned(prep: &Preprocessor, ds: &Dataset) -> Dataset {
    Dataset::new(
        ds.records
            .iter()
            .map(|r| TweetRecord {
                text: prep.clean(&r.text),
                ..r.clone()
            })
            .collect(),
        ds.format,
    )
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(dir.join("golden")).unwrap();
    let prep = Preprocessor::default();
    let assets = PromptAssets::builtin();

    let corpus = mini_corpus(DEFAULT_SEED);
    corpus.save(&dir.join("mini_corpus.csv")).unwrap();

    // mirrors `llm-run` defaults: seed 42, 80:20 split, 58 exemplars, cleaned text
    let (train, test) = split_train_validation(&corpus, 0.8, 42).unwrap();
    let exemplars = select_exemplars(&cleaned(&prep, &train), 58, 42).unwrap();
    let params = LlmParams::default();
    let mut table = String::from("# request digest<TAB>completion\n");
    for r in &test.records {
        let prompt = build_prompt(&prep.clean(&r.text), &assets, &exemplars);
        let gold = r.gold.unwrap();
        let why: Vec<String> = gold
            .iter()
            .map(|l| format!("the wording fits {l}"))
            .collect();
        let completion = render_response(gold, &format!("Golden answer: {}.", why.join(", ")));
        writeln!(
            table,
            "{}\t{}",
            request_digest(&prompt.text, &params),
            escape_cell(&completion)
        )
        .unwrap();
    }
    fs::write(dir.join("golden/mock.tsv"), table).unwrap();

    let twelve: Vec<Exemplar> = ConcernLabel::ALL
        .iter()
        .map(|l| {
            let r = corpus
                .records
                .iter()
                .find(|r| r.gold.unwrap().contains(*l))
                .unwrap();
            Exemplar {
                id: r.id.clone(),
                text: prep.clean(&r.text),
                labels: r.gold.unwrap(),
            }
        })
        .collect();
    let set = ExemplarSet::new(twelve).unwrap();
    let prompt = build_prompt(&prep.clean(GOLDEN_TWEET), &assets, &set);
    fs::write(dir.join("golden/prompt.txt"), prompt.text).unwrap();

    write_tokens(
        &prep,
        &dir.join("preprocess_input.csv"),
        &dir.join("golden/preprocess_tokens.tsv"),
    );
}

fn write_tokens(prep: &Preprocessor, input: &Path, output: &Path) {
    let ds = load_dataset(input, DatasetFormat::Unlabeled).unwrap();
    let mut out = String::new();
    for r in &ds.records {
        writeln!(out, "{}\t{}", r.id, prep.preprocess(&r.text).join(" ")).unwrap();
    }
    fs::write(output, out).unwrap();
}
