use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vaxconcern::llm::{
    build_prompt, parse_response, render_response, request_digest, select_exemplars, LlmParams,
    PromptAssets,
};
use vaxconcern::LabelSet;
use vaxconcern_bench::corpus;

fn prompt(c: &mut Criterion) {
    let ds = corpus(1);
    let exemplars = select_exemplars(&ds, 58, 42).unwrap();
    let assets = PromptAssets::builtin();
    let params = LlmParams::default();
    let tweet = ds.records[0].text.as_str();
    c.bench_function("build_prompt/58-shot", |b| {
        b.iter(|| build_prompt(black_box(tweet), &assets, &exemplars))
    });
    let text = build_prompt(tweet, &assets, &exemplars).text;
    c.bench_function("request_digest", |b| {
        b.iter(|| request_digest(black_box(&text), &params))
    });
}

fn response(c: &mut Criterion) {
    let raw = render_response(
        LabelSet::from_bits(0b0101_0110_0110).unwrap(),
        "The tweet names several concerns.",
    );
    c.bench_function("parse_response", |b| {
        b.iter(|| parse_response(black_box(&raw)).unwrap())
    });
}

criterion_group!(benches, prompt, response);
criterion_main!(benches);
