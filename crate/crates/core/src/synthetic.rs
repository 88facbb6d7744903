//! A small generated corpus whose labels are recoverable from vocabulary.
//!
//! Every label owns a pool of words and phrases that no other label uses.
//! Each tweet carries exactly one label and draws two or three items from
//! that label's pool, mixed with shared filler and the usual social-media
//! noise (handles, links, hashtags, emoji).

use crate::corpus::{Dataset, DatasetFormat, TweetRecord};
use crate::labels::{ConcernLabel, LabelSet};
use crate::rng::SeededRng;

pub const PER_LABEL: usize = 20;
pub const DEFAULT_SEED: u64 = 2023;

fn pool(label: ConcernLabel) -> &'static [&'static str] {
    use ConcernLabel::*;
    match label {
        Unnecessary => &[
            "natural immunity",
            "survival rate",
            "vitamin",
            "immune system",
            "herbal",
            "garlic",
            "elderberry",
            "ivermectin",
        ],
        Mandatory => &[
            "mandate",
            "compulsory",
            "my body my choice",
            "passport",
            "coerce",
            "employer",
            "fired",
            "consent",
        ],
        Pharma => &[
            "big pharma",
            "pfizer",
            "profit",
            "billions",
            "lawsuit",
            "shareholders",
            "greed",
            "patent",
        ],
        Conspiracy => &[
            "microchip",
            "depopulation",
            "plandemic",
            "hoax",
            "bill gates",
            "agenda",
            "illuminati",
            "surveillance",
        ],
        Political => &[
            "politician",
            "democrats",
            "republicans",
            "biden",
            "election",
            "propaganda",
            "senator",
            "congress",
        ],
        Country => &[
            "russia", "china", "sputnik", "sinovac", "beijing", "kremlin", "imported", "foreign",
        ],
        Rushed => &[
            "not tested",
            "experimental",
            "long term",
            "emergency use",
            "approval",
            "shortcut",
            "hurried",
            "warp speed",
        ],
        Ingredients => &[
            "mrna",
            "fetal cells",
            "aluminum",
            "mercury",
            "chemicals",
            "toxic",
            "graphene",
            "preservative",
        ],
        SideEffect => &[
            "adverse",
            "blood clot",
            "paralysis",
            "infertility",
            "allergic",
            "myocarditis",
            "seizure",
            "hospitalized",
        ],
        Ineffective => &[
            "ineffective",
            "useless",
            "breakthrough",
            "waning",
            "efficacy",
            "reinfected",
            "pointless",
            "failed",
        ],
        Religious => &[
            "god",
            "church",
            "faith",
            "pray",
            "mark of the beast",
            "scripture",
            "pastor",
            "sin",
        ],
        None => &[
            "appointment",
            "booked",
            "clinic",
            "queue",
            "weekend",
            "sticker",
            "selfie",
            "grateful",
        ],
    }
}

const OPENERS: &[&str] = &[
    "honestly",
    "so",
    "just saw this:",
    "reminder:",
    "wow",
    "thread:",
    "ok",
    "look",
];
const SUBJECTS: &[&str] = &[
    "the vaccine",
    "this jab",
    "the shot",
    "that covid vaccine",
    "the booster",
];
const LINKS: &[&str] = &["and", "plus", "also", "with", "then"];
const CLOSERS: &[&str] = &[
    "think about it",
    "just saying",
    "read more",
    "again today",
    "everyone knows",
    "wake up",
];
const HANDLES: &[&str] = &["@newsdesk", "@healthwatch", "@dailyupdate", "@citizen42"];
const EMOJI: &[&str] = &["😷", "🤔", "💉", "😂", "👀"];

fn pick<'a>(rng: &mut SeededRng, items: &[&'a str]) -> &'a str {
    items[rng.below(items.len())]
}

/// Text of one tweet for `label`.
fn tweet(label: ConcernLabel, rng: &mut SeededRng) -> String {
    let words = pool(label);
    let k = 2 + rng.below(2);
    let mut idx: Vec<usize> = (0..words.len()).collect();
    rng.shuffle(&mut idx);
    let chosen: Vec<&str> = idx[..k].iter().map(|&i| words[i]).collect();

    let mut parts = Vec::new();
    if rng.below(3) == 0 {
        parts.push(pick(rng, HANDLES).to_string());
    }
    parts.push(pick(rng, OPENERS).to_string());
    parts.push(pick(rng, SUBJECTS).to_string());
    parts.push(chosen[0].to_string());
    for c in &chosen[1..] {
        parts.push(pick(rng, LINKS).to_string());
        parts.push(c.to_string());
    }
    parts.push(pick(rng, CLOSERS).to_string());
    if rng.below(3) == 0 {
        parts.push(format!("#{}", chosen[0].replace(' ', "")));
    }
    if rng.below(2) == 0 {
        parts.push(pick(rng, EMOJI).to_string());
    }
    if rng.below(3) == 0 {
        parts.push(format!("https://t.co/x{:05}", rng.below(100_000)));
    }
    let mut text = parts.join(" ");
    if rng.below(2) == 0 {
        text = capitalize(&text);
    }
    text
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        Option::None => String::new(),
    }
}

/// `PER_LABEL` single-label tweets per concern, interleaved by label.
pub fn mini_corpus(seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut records = Vec::with_capacity(PER_LABEL * ConcernLabel::COUNT);
    for _ in 0..PER_LABEL {
        for label in ConcernLabel::ALL {
            records.push(TweetRecord {
                id: format!("syn{:03}", records.len() + 1),
                text: tweet(label, &mut rng),
                gold: Some(LabelSet::single(label)),
            });
        }
    }
    Dataset::new(records, DatasetFormat::Labeled)
}
