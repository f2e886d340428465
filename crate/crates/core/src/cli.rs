//! The `choralforge` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde_json::json;

use crate::audio::{read_wav, write_atomic, write_wav_f32};
use crate::config::{ConfigError, PipelineConfig};
use crate::dataset::{
    build_dataset, extract_segments, plan_build, rendition_id, DatasetManifest, PieceEntry, Split,
};
use crate::evalkit::{
    estimate_path, median_sdr, oracle_separate, Metric, OracleKind, SdrReport, StftConfig, TrackAudio,
    DEFAULT_SEGMENT_S,
};
use crate::expression::make_performance;
use crate::range_transform::augment;
use crate::score_io::{write_midi, PartName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "choralforge", version, about = "Choral dataset synthesis and separation evaluation")]
pub struct Cli {
    /// Output format for results on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render every score at every transposition and write the dataset manifest.
    Build {
        config: PathBuf,
        /// Print the planned work without writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Worker threads (default: all cores).
        #[arg(long, short)]
        jobs: Option<usize>,
    },
    /// Score estimates against the dataset references.
    Eval {
        manifest: PathBuf,
        estimates: PathBuf,
        #[arg(long, default_value = "sdr")]
        metric: Metric,
        /// Generate oracle estimates into `estimates` first.
        #[arg(long)]
        oracle: Option<OracleKind>,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = DEFAULT_SEGMENT_S)]
        segment_s: f64,
        /// Report path (default: `<estimates>/report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write oracle-mask estimates for one split.
    Oracle {
        manifest: PathBuf,
        out: PathBuf,
        #[arg(long, default_value = "irm")]
        kind: OracleKind,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Write one expressive MIDI file per piece and transposition.
    ExportMidi { config: PathBuf, out: PathBuf },
    /// Dump random training segments from one split.
    Segments {
        manifest: PathBuf,
        out: PathBuf,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SEGMENT_S)]
        segment_s: f64,
    },
    /// Check a configuration file without rendering.
    Validate { config: PathBuf },
}

/// A failed command: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn validation(message: impl ToString) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::validation(e)
    }
}

type Outcome = Result<(serde_json::Value, String, i32), Failure>;

/// Parse arguments, run, print, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();

    let result = match &cli.command {
        Command::Build { config, dry_run, jobs } => cmd_build(config, *dry_run, *jobs),
        Command::Eval {
            manifest,
            estimates,
            metric,
            oracle,
            split,
            segment_s,
            report,
        } => cmd_eval(manifest, estimates, *metric, *oracle, *split, *segment_s, report.as_deref()),
        Command::Oracle { manifest, out, kind, split } => cmd_oracle(manifest, out, *kind, *split),
        Command::ExportMidi { config, out } => cmd_export_midi(config, out),
        Command::Segments {
            manifest,
            out,
            split,
            count,
            seed,
            segment_s,
        } => cmd_segments(manifest, out, *split, *count, *seed, *segment_s),
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok((value, text, code)) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&value).expect("json")),
                Format::Text => print!("{text}"),
            }
            code
        }
        Err(f) => {
            error!("{}", f.message);
            if cli.format == Format::Json {
                let kind = if f.code == EXIT_VALIDATION { "validation" } else { "runtime" };
                println!("{}", json!({ "error": f.message, "kind": kind }));
            }
            f.code
        }
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig, Failure> {
    let cfg = PipelineConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_validate(path: &Path) -> Outcome {
    let cfg = load_config(path)?;
    let sources = cfg.load_sources()?;
    let banks = cfg.load_banks()?;
    let plan = plan_build(&sources, &banks, &cfg.build_config(), &cfg.output).map_err(Failure::validation)?;
    let text = format!(
        "ok: {} scores, {} renditions, banks: {}\n",
        sources.len(),
        plan.len(),
        banks
            .iter()
            .map(|(p, b)| format!("{p}={}", b.name()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let value = json!({
        "valid": true,
        "scores": sources.len(),
        "renditions": plan.len(),
        "banks": banks.iter().map(|(p, b)| (p.to_string(), b.name().to_string())).collect::<BTreeMap<_, _>>(),
    });
    Ok((value, text, EXIT_OK))
}

fn cmd_build(path: &Path, dry_run: bool, jobs: Option<usize>) -> Outcome {
    let cfg = load_config(path)?;
    let sources = cfg.load_sources()?;
    let banks = cfg.load_banks()?;
    let build = cfg.build_config();
    if dry_run {
        let plan = plan_build(&sources, &banks, &build, &cfg.output).map_err(Failure::validation)?;
        let mut text = String::new();
        for p in &plan {
            let state = if p.up_to_date { "up to date" } else { "render" };
            text.push_str(&format!("{:<32} {:<5} {state}\n", p.id, p.split.as_str()));
        }
        let pending = plan.iter().filter(|p| !p.up_to_date).count();
        text.push_str(&format!("{} renditions, {pending} to render\n", plan.len()));
        return Ok((json!({ "dry_run": true, "plan": plan }), text, EXIT_OK));
    }
    let out = build_dataset(&sources, &banks, &build, &cfg.output, jobs).map_err(|e| match e {
        crate::dataset::DatasetError::Config(_) | crate::dataset::DatasetError::Split(_) => Failure::validation(e),
        other => Failure::runtime(other),
    })?;
    let m = &out.manifest;
    let minutes = m.total_duration_s() / 60.0;
    let manifest_path = cfg.output.join(crate::dataset::MANIFEST_FILE);
    let mut text = format!(
        "{} pieces ({} rendered, {} reused), {minutes:.2} min of audio, {} failed\nmanifest: {}\n",
        m.pieces.len(),
        out.rendered,
        out.reused,
        m.failed.len(),
        manifest_path.display()
    );
    for f in &m.failed {
        text.push_str(&format!("failed {}: {}\n", f.id, f.error));
    }
    let value = json!({
        "pieces": m.pieces.len(),
        "rendered": out.rendered,
        "reused": out.reused,
        "files_written": out.files_written,
        "minutes": minutes,
        "failed": m.failed,
        "manifest": manifest_path,
    });
    let code = if m.failed.is_empty() { EXIT_OK } else { EXIT_RUNTIME };
    Ok((value, text, code))
}

fn manifest_and_root(path: &Path) -> Result<(DatasetManifest, PathBuf), Failure> {
    let manifest = DatasetManifest::load(path).map_err(Failure::validation)?;
    let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((manifest, root))
}

fn read_audio(path: &Path) -> Result<Vec<f32>, Failure> {
    read_wav(path).map(|m| m.samples).map_err(Failure::runtime)
}

fn write_oracle_estimates(
    manifest: &DatasetManifest,
    root: &Path,
    out: &Path,
    kind: OracleKind,
    split: Split,
) -> Result<usize, Failure> {
    let cfg = StftConfig::default();
    let mut count = 0;
    for entry in manifest.split(split) {
        let mixture = read_audio(&root.join(&entry.mixture))?;
        let parts: Vec<&PartName> = entry.stems.keys().collect();
        let stems: Vec<Vec<f32>> = entry
            .stems
            .values()
            .map(|rel| read_audio(&root.join(rel)))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&[f32]> = stems.iter().map(Vec::as_slice).collect();
        let estimates = oracle_separate(&mixture, &refs, kind, &cfg).map_err(|e| Failure::runtime(format!("{}: {e}", entry.id)))?;
        for (part, audio) in parts.into_iter().zip(estimates) {
            write_wav_f32(&estimate_path(out, &entry.id, part), &audio, manifest.sample_rate).map_err(Failure::runtime)?;
        }
        info!("{}: {} estimates written", entry.id, kind.as_str());
        count += 1;
    }
    Ok(count)
}

fn cmd_oracle(manifest_path: &Path, out: &Path, kind: OracleKind, split: Split) -> Outcome {
    let (manifest, root) = manifest_and_root(manifest_path)?;
    let count = write_oracle_estimates(&manifest, &root, out, kind, split)?;
    let text = format!("{count} pieces, {} estimates in {}\n", kind.as_str(), out.display());
    Ok((json!({ "pieces": count, "kind": kind, "out": out }), text, EXIT_OK))
}

/// Load references and estimates for `split`; every missing estimate is listed in the error.
fn load_pairs<'m>(
    manifest: &'m DatasetManifest,
    root: &Path,
    estimates: &Path,
    split: Split,
) -> Result<Vec<(&'m PieceEntry, PartName, Vec<f32>, Vec<f32>)>, Failure> {
    let entries: Vec<&PieceEntry> = manifest.split(split).collect();
    if entries.is_empty() {
        return Err(Failure::validation(format!("split '{split}' has no pieces")));
    }
    let missing: Vec<String> = entries
        .iter()
        .flat_map(|e| e.stems.keys().map(move |p| estimate_path(estimates, &e.id, p)))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Failure::validation(format!(
            "{} missing estimate file(s):\n  {}",
            missing.len(),
            missing.join("\n  ")
        )));
    }
    let mut pairs = vec![];
    for e in entries {
        for (part, rel) in &e.stems {
            let reference = read_audio(&root.join(rel))?;
            let estimate = read_audio(&estimate_path(estimates, &e.id, part))?;
            pairs.push((e, part.clone(), reference, estimate));
        }
    }
    Ok(pairs)
}

fn cmd_eval(
    manifest_path: &Path,
    estimates: &Path,
    metric: Metric,
    oracle: Option<OracleKind>,
    split: Split,
    segment_s: f64,
    report_path: Option<&Path>,
) -> Outcome {
    let (manifest, root) = manifest_and_root(manifest_path)?;
    if let Some(kind) = oracle {
        write_oracle_estimates(&manifest, &root, estimates, kind, split)?;
    }
    let pairs = load_pairs(&manifest, &root, estimates, split)?;
    let mut parts: BTreeMap<PartName, Vec<TrackAudio>> = BTreeMap::new();
    for (entry, part, reference, estimate) in &pairs {
        parts.entry(part.clone()).or_default().push(TrackAudio {
            id: &entry.id,
            reference,
            estimate,
        });
    }
    let report: SdrReport =
        median_sdr(&parts, manifest.sample_rate, segment_s, metric).map_err(Failure::runtime)?;
    let default_path = estimates.join("report.json");
    let path = report_path.unwrap_or(&default_path);
    let json_text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_atomic(path, json_text.as_bytes()).map_err(Failure::runtime)?;
    let text = format!("{}report: {}\n", report.table(), path.display());
    let value = serde_json::to_value(&report).expect("report serializes");
    Ok((value, text, EXIT_OK))
}

fn cmd_export_midi(config: &Path, out: &Path) -> Outcome {
    let cfg = load_config(config)?;
    let sources = cfg.load_sources()?;
    let build = cfg.build_config();
    build.validate().map_err(Failure::validation)?;
    let mut written = vec![];
    let mut failed = vec![];
    for source in &sources {
        for &offset in build.transpose.offsets() {
            let id = rendition_id(&source.id, offset);
            let result = augment(&source.score, &build.ranges, offset)
                .map_err(|e| e.to_string())
                .and_then(|aug| {
                    make_performance(&aug.score, &id, &build.expression, build.mode).map_err(|e| e.to_string())
                })
                .and_then(|perf| write_midi(&perf).map_err(|e| e.to_string()));
            match result {
                Ok(bytes) => {
                    let path = out.join(format!("{id}.mid"));
                    write_atomic(&path, &bytes).map_err(Failure::runtime)?;
                    written.push(path);
                }
                Err(e) => failed.push(json!({ "id": id, "error": e })),
            }
        }
    }
    let mut text = format!("{} MIDI files in {}\n", written.len(), out.display());
    for f in &failed {
        text.push_str(&format!("failed {}: {}\n", f["id"], f["error"]));
    }
    let code = if failed.is_empty() { EXIT_OK } else { EXIT_RUNTIME };
    Ok((json!({ "files": written, "failed": failed }), text, code))
}

fn cmd_segments(manifest_path: &Path, out: &Path, split: Split, count: usize, seed: u64, segment_s: f64) -> Outcome {
    let (manifest, root) = manifest_and_root(manifest_path)?;
    let sampler = extract_segments(&manifest, &root, split, segment_s, crate::rng::stream(seed, &["segments", split.as_str()]))
        .map_err(Failure::validation)?;
    let mut index = vec![];
    for (k, seg) in sampler.take(count).enumerate() {
        let dir = out.join(format!("seg_{k:05}"));
        write_wav_f32(&dir.join("mix.wav"), &seg.mixture, manifest.sample_rate).map_err(Failure::runtime)?;
        for (part, audio) in &seg.stems {
            write_wav_f32(&dir.join(format!("{}.wav", part.as_str())), audio, manifest.sample_rate)
                .map_err(Failure::runtime)?;
        }
        index.push(json!({ "index": k, "piece": seg.piece_id, "start": seg.start }));
    }
    let index_json = serde_json::to_string_pretty(&index).expect("json") + "\n";
    write_atomic(&out.join("segments.json"), index_json.as_bytes()).map_err(Failure::runtime)?;
    let text = format!("{} segments of {segment_s} s in {}\n", index.len(), out.display());
    Ok((json!({ "segments": index }), text, EXIT_OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_errors_are_validation_errors() {
        assert_eq!(run(["choralforge", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(run(["choralforge", "eval", "m.json", "est", "--metric", "pesq"]), EXIT_VALIDATION);
        assert_eq!(run(["choralforge", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_config_is_a_validation_error() {
        assert_eq!(run(["choralforge", "-q", "validate", "/nonexistent/pipeline.toml"]), EXIT_VALIDATION);
    }
}
