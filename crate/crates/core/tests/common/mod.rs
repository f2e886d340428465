//! Synthetic SATB corpora shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use choralforge::range_transform::RangePreset;
use choralforge::sampler::{test_bank, BankSet};
use choralforge::score_io::{to_text_score, Note, PartName, Score, VoicePart};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PPQ: u16 = 480;
pub const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Interval steps, weighted toward small moves, with fifths and octaves thrown in.
const STEPS: [i32; 13] = [-12, -7, -5, -3, -2, -1, 0, 1, 2, 3, 5, 7, 12];

/// A random melodic line for `part`, mostly inside its vocal range.
pub fn random_part(rng: &mut impl Rng, part: PartName, beats: u32) -> VoicePart {
    let range = RangePreset::VoicesOfRapture.range_for(&part);
    let (lo, hi) = (range.low() as i32, range.high() as i32);
    let mut pitch = rng.random_range(lo + 4..=hi - 4);
    let end = beats * PPQ as u32;
    let half = PPQ as u32 / 2;
    let mut t = 0;
    let mut notes = vec![];
    while t < end {
        if !notes.is_empty() && rng.random_bool(0.15) {
            t += half * rng.random_range(1..=2);
            continue;
        }
        let dur = (half * rng.random_range(1..=4)).min(end - t);
        notes.push(Note::new(t, dur, pitch as u8, 80));
        t += dur;
        let step = STEPS[rng.random_range(0..STEPS.len())];
        pitch = (pitch + step).clamp(lo - 3, hi + 3);
    }
    VoicePart::new(part, notes)
}

pub fn random_satb(rng: &mut impl Rng, beats: u32) -> Score {
    let parts = PartName::SATB.into_iter().map(|p| random_part(rng, p, beats)).collect();
    Score::new(parts, PPQ, 120.0).unwrap()
}

/// `n` pieces named `piece00`, `piece01`, ... of `beats` beats each at 120 bpm.
pub fn corpus(n: usize, beats: u32, seed: u64) -> Vec<(String, Score)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("piece{i:02}"), random_satb(&mut rng, beats))).collect()
}

/// Write the corpus as text scores into `dir`.
pub fn write_corpus(dir: &Path, pieces: &[(String, Score)]) {
    fs::create_dir_all(dir).unwrap();
    for (id, score) in pieces {
        fs::write(dir.join(format!("{id}.txt")), to_text_score(score)).unwrap();
    }
}

/// A pipeline config over `scores/` writing to `dataset/`, all paths relative to `root`.
pub fn write_config(root: &Path, extra: &str) -> std::path::PathBuf {
    let path = root.join("pipeline.toml");
    let text = format!("input = \"scores\"\noutput = \"dataset\"\n{extra}");
    fs::write(&path, text).unwrap();
    path
}

pub fn vowels() -> Vec<String> {
    VOWELS.map(String::from).to_vec()
}

pub fn satb_banks(sample_rate: u32) -> BankSet {
    PartName::SATB
        .into_iter()
        .map(|p| {
            let bank = Arc::new(test_bank(&p, &vowels(), sample_rate));
            (p, bank)
        })
        .collect::<BTreeMap<_, _>>()
}

/// Every regular file under `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}
