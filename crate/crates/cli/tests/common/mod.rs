//! Fixture corpora and an in-process runner shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use rand::Rng;

use swb_core::annotation::TrainingLabel;
use swb_core::corpus::{write_jsonl, Post};
use swb_core::rng::substream;
use swb_core::{Category, Dimension};

pub const CORPUS: &str = "fixture";

/// Result of one in-process invocation.
pub struct Run {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn swb(data_dir: &Path, args: &[&str]) -> Run {
    let mut argv: Vec<String> = vec!["swb".into(), "--data-dir".into(), data_dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = swb_cli::main_with(argv, &mut out, &mut err);
    Run {
        status,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

const WORDS: [&[&str]; 4] = [
    &["happy", "great", "love"],
    &["ok", "normal", "usual"],
    &["sad", "awful", "hate"],
    &["train", "weather", "news"],
];

/// Short templated posts over `days` days, so token signatures repeat the
/// way they do in real keyword-selected samples.
pub fn fixture_posts(n: usize, days: usize, seed: u64) -> (Vec<Post>, Vec<Category>) {
    let mut rng = substream(seed, "fixture-corpus", 0);
    let start = Utc.with_ymd_and_hms(2016, 3, 1, 8, 0, 0).unwrap();
    let mut posts = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for i in 0..n {
        let day = i % days;
        // positive share drifts over the window
        let p_pos = 0.2 + 0.3 * day as f64 / days as f64;
        let u: f64 = rng.random();
        let c = if u < p_pos {
            Category::Positive
        } else if u < p_pos + 0.2 {
            Category::Neutral
        } else if u < p_pos + 0.45 {
            Category::Negative
        } else {
            Category::Offtopic
        };
        let words = WORDS[c.index()];
        let a = words[rng.random_range(0..words.len())];
        let b = words[rng.random_range(0..words.len())];
        let tail = if rng.random_bool(0.5) { " today" } else { "" };
        posts.push(Post {
            id: format!("p{i:05}"),
            created_at: start + Duration::days(day as i64) + Duration::minutes(i as i64 % 600),
            text: format!("{a} {b}{tail}"),
            lang: "en".into(),
            country: "us".into(),
            retweet: false,
        });
        latent.push(c);
    }
    (posts, latent)
}

/// Training rows for the first `n_labeled` posts on every dimension.
pub fn fixture_labels(posts: &[Post], latent: &[Category], n_labeled: usize) -> Vec<TrainingLabel> {
    let mut rows = Vec::new();
    for d in Dimension::ALL {
        for (p, c) in posts.iter().zip(latent).take(n_labeled) {
            rows.push(TrainingLabel {
                post_id: p.id.clone(),
                dimension: d,
                label: *c,
            });
        }
    }
    rows
}

/// Writes posts and labels under `dir` and ingests the posts as corpus
/// [`CORPUS`]. Returns the data directory and the training-label path.
pub fn ingest_fixture(dir: &Path, n: usize, days: usize, n_labeled: usize) -> (PathBuf, PathBuf) {
    let (posts, latent) = fixture_posts(n, days, 5);
    let input = dir.join("posts.jsonl");
    write_jsonl(&input, &posts).unwrap();
    let labels = dir.join("training.jsonl");
    write_jsonl(&labels, &fixture_labels(&posts, &latent, n_labeled)).unwrap();
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    let run = swb(&data, &["--corpus", CORPUS, "ingest", "--input", input.to_str().unwrap()]);
    assert_eq!(run.status, 0, "{}", run.stderr);
    (data, labels)
}
