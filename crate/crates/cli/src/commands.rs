use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use vaxconcern::corpus::{
    label_distribution, load_dataset, load_dataset_any, split_train_validation, top_terms,
    write_label_distribution, write_top_terms,
};
use vaxconcern::error::{BackendError, LlmError};
use vaxconcern::llm::{
    classify_llm, render_response, select_exemplars, Backend, HttpBackend, LlmContext, LlmOutcome,
    MockBackend, MockFallback, PromptAssets, ResponseCache, Source,
};
use vaxconcern::runfile::{align, load_run, write_run, write_sidecar, RunRow, SidecarRow};
use vaxconcern::{
    assets, evaluate_over, ConcernLabel, Dataset, DatasetFormat, LabelSet, Preprocessor,
    TrainedPipeline,
};

use crate::config::{Config, PromptText};
use crate::manifest::{Manifest, RunDir};
use crate::{BackendKind, Cli, CliError, Command, MockFallbackKind};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    cfg.classical.train.seed = cfg.seed;
    cfg.validate().map_err(CliError::Usage)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let force = cli.force;
    pool.install(|| match cli.command {
        Command::Eda(a) => eda(&cfg, force, &a.data, a.top, &a.name),
        Command::Split(a) => split(&cfg, force, &a.data, a.ratio, &a.name),
        Command::Train(a) => {
            let name = a.name.unwrap_or_else(|| a.method.to_string());
            train(&cfg, force, &a.data, a.method, &name)
        }
        Command::Predict(a) => predict(&cfg, force, &a.model, &a.data, a.name),
        Command::Eval(a) => eval(&cfg, &a.run, &a.data, &a.labels, a.csv.as_deref()),
        Command::LlmRun(a) => llm_run(&cfg, force, &a),
    })
}

fn create<P: AsRef<Path>>(path: P) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn eda(
    cfg: &Config,
    force: bool,
    data: &Path,
    top: Option<usize>,
    name: &str,
) -> Result<(), CliError> {
    let ds = load_dataset(data, DatasetFormat::Labeled)?;
    let dir = RunDir::create(&cfg.out, name, force)?;
    let mut m = Manifest::new(name, "eda", cfg);
    m.input(data)?;

    let dist = label_distribution(&ds)?;
    write_label_distribution(&dist, create(dir.file("label_distribution.csv"))?)?;
    let prep = Preprocessor::new(cfg.classical.preprocess.clone())?;
    let terms = top_terms(&ds, top.unwrap_or(cfg.eda.top_terms), &prep);
    write_top_terms(&terms, create(dir.file("top_terms.csv"))?)?;

    println!("{} records", ds.len());
    for (l, c) in &dist {
        println!("{:<12} {:>6}", l.name(), c);
    }
    println!(
        "top terms: {}",
        terms
            .iter()
            .map(|(t, c)| format!("{t} ({c})"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    m.outputs = vec!["label_distribution.csv".into(), "top_terms.csv".into()];
    m.stat("records", ds.len());
    dir.finish(&m)
}

fn split(
    cfg: &Config,
    force: bool,
    data: &Path,
    ratio: Option<f64>,
    name: &str,
) -> Result<(), CliError> {
    let ratio = ratio.unwrap_or(cfg.split.ratio);
    let ds = load_dataset_any(data)?;
    let (train, test) = split_train_validation(&ds, ratio, cfg.seed)?;
    let dir = RunDir::create(&cfg.out, name, force)?;
    let mut m = Manifest::new(name, "split", cfg);
    m.input(data)?;
    train.save(&dir.file("train.csv"))?;
    test.save(&dir.file("test.csv"))?;
    println!(
        "{} -> {} train / {} test in {}",
        ds.len(),
        train.len(),
        test.len(),
        dir.path.display()
    );
    m.outputs = vec!["train.csv".into(), "test.csv".into()];
    m.stat("ratio", ratio);
    m.stat("train", train.len());
    m.stat("test", test.len());
    dir.finish(&m)
}

fn train(
    cfg: &Config,
    force: bool,
    data: &Path,
    method: vaxconcern::Method,
    name: &str,
) -> Result<(), CliError> {
    let ds = load_dataset(data, DatasetFormat::Labeled)?;
    let dir = RunDir::create(&cfg.out, name, force)?;
    let mut m = Manifest::new(name, "train", cfg);
    m.method = Some(method.to_string());
    m.input(data)?;
    let started = std::time::Instant::now();
    let pipeline = vaxconcern::train_pipeline(&ds, method, &cfg.classical)?;
    pipeline.save(&dir.file("model.json"))?;
    println!(
        "trained {method} on {} records ({} features) in {:.2}s -> {}",
        ds.len(),
        pipeline.tfidf.dim(),
        started.elapsed().as_secs_f64(),
        dir.file("model.json").display()
    );
    m.outputs = vec!["model.json".into()];
    m.stat("records", ds.len());
    m.stat("features", pipeline.tfidf.dim());
    dir.finish(&m)
}

fn predict(
    cfg: &Config,
    force: bool,
    model: &Path,
    data: &Path,
    name: Option<String>,
) -> Result<(), CliError> {
    let pipeline = TrainedPipeline::load(model)?;
    let ds = load_dataset_any(data)?;
    let name = name.unwrap_or_else(|| format!("{}-run", pipeline.method));
    let dir = RunDir::create(&cfg.out, &name, force)?;
    let mut m = Manifest::new(&name, "predict", cfg);
    m.method = Some(pipeline.method.to_string());
    m.input(model)?;
    m.input(data)?;
    let preds = pipeline.predict(&ds)?;
    let rows: Vec<RunRow> = ds
        .records
        .iter()
        .zip(preds)
        .map(|(r, labels)| RunRow {
            id: r.id.clone(),
            labels,
        })
        .collect();
    write_run(&rows, create(dir.file("run.csv"))?)?;
    println!(
        "{} predictions -> {}",
        rows.len(),
        dir.file("run.csv").display()
    );
    m.outputs = vec!["run.csv".into()];
    m.stat("records", rows.len());
    dir.finish(&m)
}

fn eval(
    cfg: &Config,
    run: &Path,
    data: &Path,
    labels: &[String],
    csv: Option<&Path>,
) -> Result<(), CliError> {
    let universe: Vec<ConcernLabel> = if labels.is_empty() {
        ConcernLabel::ALL.to_vec()
    } else {
        labels
            .iter()
            .map(|t| ConcernLabel::parse(t).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let gold_ds = load_dataset(data, DatasetFormat::Labeled)?;
    let rows = load_run(run)?;
    let (gold, pred) = align(&gold_ds, &rows)?;
    let report = evaluate_over(&gold, &pred, &universe, &cfg.eval)?;
    print!("{}", report.render_table());
    if let Some(path) = csv {
        report.write_csv(create(path)?)?;
    }
    Ok(())
}

fn prompt_text(cfg: &Config, prep: &Preprocessor, text: &str) -> String {
    match cfg.llm.text {
        PromptText::Clean => prep.clean(text),
        PromptText::Raw => text.to_string(),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn llm_run(cfg: &Config, force: bool, a: &crate::LlmRunArgs) -> Result<(), CliError> {
    let ds = load_dataset_any(&a.data)?;
    let train = load_dataset(&a.train, DatasetFormat::Labeled)?;
    let prep = Preprocessor::new(cfg.classical.preprocess.clone())?;

    let pool = Dataset::new(
        train
            .records
            .iter()
            .map(|r| vaxconcern::TweetRecord {
                text: prompt_text(cfg, &prep, &r.text),
                ..r.clone()
            })
            .collect(),
        DatasetFormat::Labeled,
    );
    let exemplars = select_exemplars(&pool, a.exemplars.unwrap_or(cfg.llm.exemplars), cfg.seed)?;
    let llm = &cfg.llm;
    let prompt_assets = PromptAssets::from_tables(
        &llm.descriptions.load(assets::CONCERN_DESCRIPTIONS)?,
        &llm.keywords.load(assets::CONCERN_KEYWORDS)?,
        &llm.template.load(assets::PROMPT_TEMPLATE)?,
    )?;

    let backend: Box<dyn Backend> = match a.backend {
        BackendKind::Mock => {
            let table = match &a.mock_table {
                Some(p) => MockBackend::load_table(p)
                    .map_err(|e| CliError::Usage(format!("mock table: {e}")))?,
                None => Default::default(),
            };
            let fallback = match a.mock_fallback {
                MockFallbackKind::Keywords => MockFallback::Keywords(prompt_assets.clone()),
                MockFallbackKind::None => MockFallback::Fixed(render_response(
                    LabelSet::single(ConcernLabel::None),
                    "No concern found.",
                )),
                MockFallbackKind::Fail => MockFallback::Fail,
            };
            Box::new(MockBackend::new(table, fallback))
        }
        BackendKind::Http => Box::new(
            HttpBackend::from_env(&llm.endpoint, Duration::from_secs(llm.timeout_secs))
                .map_err(LlmError::from)?,
        ),
    };
    let cache = if a.no_cache {
        ResponseCache::in_memory()
    } else {
        let path = resolve(&cfg.out, a.cache.as_deref().unwrap_or(&llm.cache));
        ResponseCache::open(&path)?
    };

    let dir = RunDir::create(&cfg.out, &a.name, force)?;
    let mut m = Manifest::new(&a.name, "llm-run", cfg);
    m.method = Some("llm".into());
    m.input(&a.data)?;
    m.input(&a.train)?;
    if let Some(p) = &a.mock_table {
        m.input(p)?;
    }

    let params = llm.params();
    let ctx = LlmContext {
        backend: backend.as_ref(),
        cache: &cache,
        assets: &prompt_assets,
        exemplars: &exemplars,
        params: &params,
        policy: llm.retry,
    };
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.min(llm.concurrency))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes: Vec<LlmOutcome> = workers.install(|| {
        ds.records
            .par_iter()
            .map(|r| classify_llm(&prompt_text(cfg, &prep, &r.text), &ctx))
            .collect::<Result<_, _>>()
    })?;

    let rows: Vec<RunRow> = ds
        .records
        .iter()
        .zip(&outcomes)
        .map(|(r, o)| RunRow {
            id: r.id.clone(),
            labels: o.labels,
        })
        .collect();
    let sidecar: Vec<SidecarRow> = ds
        .records
        .iter()
        .zip(&outcomes)
        .map(|(r, o)| SidecarRow {
            id: r.id.clone(),
            reasoning: o.reasoning.clone(),
            warnings: o.warnings.clone(),
        })
        .collect();
    write_run(&rows, create(dir.file("run.csv"))?)?;
    write_sidecar(&sidecar, create(dir.file("reasoning.csv"))?)?;
    let ex_rows: Vec<RunRow> = exemplars
        .items()
        .iter()
        .map(|e| RunRow {
            id: e.id.clone(),
            labels: e.labels,
        })
        .collect();
    write_run(&ex_rows, create(dir.file("exemplars.csv"))?)?;

    let failures = outcomes
        .iter()
        .filter(|o| o.provenance.source == Source::Failed)
        .count();
    let calls = backend.calls();
    println!(
        "{} records -> {} (backend calls {calls}, cache hits {}, failures {failures})",
        rows.len(),
        dir.file("run.csv").display(),
        cache.hits()
    );
    m.outputs = vec![
        "run.csv".into(),
        "reasoning.csv".into(),
        "exemplars.csv".into(),
    ];
    m.stat("records", rows.len());
    m.stat("backend_calls", calls);
    m.stat("cache_hits", cache.hits());
    m.stat("failures", failures);
    if let Some(p) = cache.path() {
        m.stat("cache", p.display().to_string());
    }
    dir.finish(&m)?;

    if !rows.is_empty() && failures == rows.len() {
        let last = outcomes
            .iter()
            .rev()
            .find_map(|o| o.provenance.error.clone())
            .unwrap_or_default();
        return Err(LlmError::Backend(BackendError::Transport(format!(
            "all {failures} requests failed; last error: {last}"
        )))
        .into());
    }
    Ok(())
}
