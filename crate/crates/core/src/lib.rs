//! Synthesis of expressive multi-voice choral datasets from symbolic scores,
//! and median-SDR evaluation of voice-part separation.
//!
//! The pipeline runs score → range fitting and transposition → expressive
//! performance → sample playback → mixing, and writes a manifest describing
//! every rendered piece. [`evalkit`] scores separation estimates against the
//! rendered stems.

pub mod score_io;
pub mod expression;
pub mod range_transform;
pub mod rng;
pub mod audio;
pub mod sampler;
pub mod evalkit;
pub mod dataset;
pub mod config;
pub mod cli;
