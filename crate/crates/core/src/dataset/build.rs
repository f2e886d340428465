use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{mixture_path, stem_path, MANIFEST_FILE, MANIFEST_VERSION};
use super::{
    mix, split, DatasetError, DatasetManifest, FailedPiece, FitSummary, MixPolicy, PieceEntry,
    Split, SplitConfig,
};
use crate::audio::{encode_wav_f32, write_atomic};
use crate::expression::{make_performance, ExpressionConfig, Mode};
use crate::range_transform::{augment, PitchRange, RangeMap, TransposeSet};
use crate::sampler::{hex, render_score, BankSet, RenderConfig};
use crate::score_io::{PartName, Score};

/// Hidden file recording the input hash each rendition was built from.
pub const STATE_FILE: &str = ".build-state.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub mode: Mode,
    pub ranges: RangeMap,
    pub transpose: TransposeSet,
    pub expression: ExpressionConfig,
    pub render: RenderConfig,
    pub mix: MixPolicy,
    pub split: SplitConfig,
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.expression
            .validate()
            .map_err(|e| DatasetError::Config(e.to_string()))?;
        self.render
            .validate()
            .map_err(|e| DatasetError::Config(e.to_string()))?;
        self.mix.validate()?;
        self.split.sizes.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourcePiece {
    pub id: String,
    pub score: Score,
}

/// One unit of work: a source piece at one transposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedPiece {
    pub id: String,
    pub source: String,
    pub transpose_offset: i32,
    pub split: Split,
    pub up_to_date: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub manifest: DatasetManifest,
    pub rendered: usize,
    pub reused: usize,
    pub files_written: usize,
}

pub fn rendition_id(source: &str, offset: i32) -> String {
    format!("{source}_tr{offset:+}")
}

#[derive(Serialize)]
struct HashInput<'a> {
    version: u32,
    score: &'a Score,
    offset: i32,
    mode: Mode,
    ranges: BTreeMap<&'a PartName, PitchRange>,
    expression: &'a ExpressionConfig,
    render: &'a RenderConfig,
    mix: &'a MixPolicy,
    banks: BTreeMap<&'a PartName, &'a str>,
}

struct Prepared<'a> {
    sources: Vec<&'a SourcePiece>,
    splits: BTreeMap<String, Split>,
    fingerprints: BTreeMap<PartName, String>,
    previous: Option<DatasetManifest>,
    state: BTreeMap<String, String>,
}

fn prepare<'a>(
    sources: &'a [SourcePiece],
    banks: &BankSet,
    cfg: &BuildConfig,
    root: &Path,
) -> Result<Prepared<'a>, DatasetError> {
    cfg.validate()?;
    let mut sorted: Vec<&SourcePiece> = sources.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let ids: Vec<String> = sorted.iter().map(|s| s.id.clone()).collect();
    let splits = split(&ids, &cfg.split)?;
    for s in &sorted {
        for part in &s.score.parts {
            if !banks.contains_key(&part.name) {
                return Err(DatasetError::Config(format!(
                    "piece '{}': no bank assigned to part '{}'",
                    s.id, part.name
                )));
            }
        }
    }
    if cfg.mode == Mode::Expressive {
        for (part, bank) in banks {
            if let Some(s) = cfg.expression.syllable_set.iter().find(|s| !bank.has_key_for(s)) {
                return Err(DatasetError::Config(format!(
                    "bank '{}' for part '{part}' has no zones for syllable '{s}'",
                    bank.name()
                )));
            }
        }
    }
    let fingerprints = banks.iter().map(|(p, b)| (p.clone(), b.fingerprint())).collect();
    let previous = DatasetManifest::load(&root.join(MANIFEST_FILE)).ok();
    let state = fs::read_to_string(root.join(STATE_FILE))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    Ok(Prepared {
        sources: sorted,
        splits,
        fingerprints,
        previous,
        state,
    })
}

fn input_hash(source: &SourcePiece, offset: i32, cfg: &BuildConfig, fingerprints: &BTreeMap<PartName, String>) -> String {
    let parts: Vec<&PartName> = source.score.parts.iter().map(|p| &p.name).collect();
    let input = HashInput {
        version: MANIFEST_VERSION,
        score: &source.score,
        offset,
        mode: cfg.mode,
        ranges: parts.iter().map(|&p| (p, cfg.ranges.range_for(p))).collect(),
        expression: &cfg.expression,
        render: &cfg.render,
        mix: &cfg.mix,
        banks: parts
            .iter()
            .filter_map(|&p| fingerprints.get(p).map(|f| (p, f.as_str())))
            .collect(),
    };
    let json = serde_json::to_vec(&input).expect("hash input serializes");
    hex(&Sha256::digest(&json))
}

fn reusable(prep: &Prepared, root: &Path, id: &str, hash: &str) -> Option<PieceEntry> {
    if prep.state.get(id).map(String::as_str) != Some(hash) {
        return None;
    }
    let entry = prep.previous.as_ref()?.piece(id)?;
    let files_exist = entry.stems.values().chain([&entry.mixture]).all(|p| root.join(p).is_file());
    files_exist.then(|| entry.clone())
}

/// The work a build would do, without touching the disk.
pub fn plan_build(
    sources: &[SourcePiece],
    banks: &BankSet,
    cfg: &BuildConfig,
    root: &Path,
) -> Result<Vec<PlannedPiece>, DatasetError> {
    let prep = prepare(sources, banks, cfg, root)?;
    let mut plan = vec![];
    for s in &prep.sources {
        for &offset in cfg.transpose.offsets() {
            let id = rendition_id(&s.id, offset);
            let hash = input_hash(s, offset, cfg, &prep.fingerprints);
            plan.push(PlannedPiece {
                up_to_date: reusable(&prep, root, &id, &hash).is_some(),
                id,
                source: s.id.clone(),
                transpose_offset: offset,
                split: prep.splits[&s.id],
            });
        }
    }
    Ok(plan)
}

/// Write `bytes` unless the file already holds exactly them. Returns whether it wrote.
fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool, DatasetError> {
    if fs::read(path).is_ok_and(|old| old == bytes) {
        return Ok(false);
    }
    write_atomic(path, bytes)?;
    Ok(true)
}

fn render_piece(
    source: &SourcePiece,
    offset: i32,
    split: Split,
    banks: &BankSet,
    cfg: &BuildConfig,
    root: &Path,
) -> Result<(PieceEntry, usize), String> {
    let id = rendition_id(&source.id, offset);
    let aug = augment(&source.score, &cfg.ranges, offset).map_err(|e| e.to_string())?;
    for (report, part) in aug.reports.iter().zip(&aug.score.parts) {
        if report.clamped() > 0 {
            warn!("{id}/{}: {} note(s) clamped to the range edge", part.name, report.clamped());
        }
    }
    let perf = make_performance(&aug.score, &id, &cfg.expression, cfg.mode).map_err(|e| e.to_string())?;
    let stems = render_score(&perf, banks, &cfg.render).map_err(|e| e.to_string())?;
    let mixed = mix(stems, &cfg.mix).map_err(|e| e.to_string())?;
    let sr = cfg.render.sample_rate;
    let mut written = 0;
    let mut stem_paths = BTreeMap::new();
    for (part, audio) in &mixed.stems {
        let rel = stem_path(&id, part);
        written += write_if_changed(&root.join(&rel), &encode_wav_f32(audio, sr)).map_err(|e| e.to_string())? as usize;
        stem_paths.insert(part.clone(), rel);
    }
    let mix_rel = mixture_path(&id);
    written += write_if_changed(&root.join(&mix_rel), &encode_wav_f32(&mixed.mixture, sr)).map_err(|e| e.to_string())? as usize;
    let entry = PieceEntry {
        id,
        source: source.id.clone(),
        split,
        transpose_offset: offset,
        seed: cfg.expression.seed,
        banks: perf
            .parts
            .iter()
            .map(|p| (p.name.clone(), banks[&p.name].name().to_string()))
            .collect(),
        tempo_bpm: aug.score.tempo_bpm,
        duration_s: perf.duration_s(),
        num_samples: mixed.mixture.len(),
        gain: mixed.gain,
        stems: stem_paths,
        mixture: mix_rel,
        fit: FitSummary {
            altered: aug.altered_notes(),
            clamped: aug.clamped_notes(),
        },
    };
    Ok((entry, written))
}

enum Outcome {
    Reused(PieceEntry),
    Rendered(PieceEntry, usize),
    Failed(FailedPiece),
}

/// Fit, perform, render and mix every source at every transposition, then
/// write the manifest. Renditions whose inputs are unchanged and whose files
/// exist are reused. A failing rendition is recorded and the build goes on.
pub fn build_dataset(
    sources: &[SourcePiece],
    banks: &BankSet,
    cfg: &BuildConfig,
    root: &Path,
    jobs: Option<usize>,
) -> Result<BuildOutcome, DatasetError> {
    let prep = prepare(sources, banks, cfg, root)?;
    let work: Vec<(&SourcePiece, i32)> = prep
        .sources
        .iter()
        .flat_map(|&s| cfg.transpose.offsets().iter().map(move |&o| (s, o)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| DatasetError::Config(e.to_string()))?;
    let results: Vec<(String, Outcome)> = pool.install(|| {
        work.par_iter()
            .map(|&(source, offset)| {
                let id = rendition_id(&source.id, offset);
                let split = prep.splits[&source.id];
                let hash = input_hash(source, offset, cfg, &prep.fingerprints);
                if let Some(mut entry) = reusable(&prep, root, &id, &hash) {
                    info!("{id}: up to date");
                    entry.split = split;
                    return (hash, Outcome::Reused(entry));
                }
                match render_piece(source, offset, split, banks, cfg, root) {
                    Ok((entry, written)) => {
                        info!("{id}: rendered {:.1} s", entry.duration_s);
                        (hash, Outcome::Rendered(entry, written))
                    }
                    Err(error) => {
                        warn!("{id}: failed: {error}");
                        (
                            hash,
                            Outcome::Failed(FailedPiece {
                                id,
                                source: source.id.clone(),
                                transpose_offset: offset,
                                error,
                            }),
                        )
                    }
                }
            })
            .collect()
    });

    let mut manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        sample_rate: cfg.render.sample_rate,
        mode: cfg.mode,
        pieces: vec![],
        failed: vec![],
    };
    let mut state = BTreeMap::new();
    let (mut rendered, mut reused, mut files_written) = (0, 0, 0);
    for (hash, outcome) in results {
        match outcome {
            Outcome::Reused(entry) => {
                reused += 1;
                state.insert(entry.id.clone(), hash);
                manifest.pieces.push(entry);
            }
            Outcome::Rendered(entry, written) => {
                rendered += 1;
                files_written += written;
                state.insert(entry.id.clone(), hash);
                manifest.pieces.push(entry);
            }
            Outcome::Failed(f) => manifest.failed.push(f),
        }
    }
    manifest.validate()?;
    files_written += write_if_changed(&root.join(MANIFEST_FILE), manifest.to_json().as_bytes())? as usize;
    let state_json = serde_json::to_string_pretty(&state).expect("state serializes") + "\n";
    write_if_changed(&root.join(STATE_FILE), state_json.as_bytes())?;
    Ok(BuildOutcome {
        manifest,
        rendered,
        reused,
        files_written,
    })
}
