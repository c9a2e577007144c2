//! Error types for each subsystem.

use std::path::PathBuf;

use thiserror::Error;

/// Errors from WAV decoding and encoding.
#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: multichannel audio rejected ({channels} channels, expected mono)")]
    Multichannel { path: PathBuf, channels: u16 },
    #[error("{path}: unsupported encoding ({detail})")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("{path}: sample out of range or not finite at index {index}")]
    SampleOutOfRange { path: PathBuf, index: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Errors from bank manifest loading and validation.
#[derive(Debug, Error)]
pub enum BankError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: manifest parse error: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{path}: sample-rate mismatch (clip {found} Hz, bank {expected} Hz)")]
    SampleRateMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: NaN or infinite samples")]
    NonFiniteSamples { path: PathBuf },
    #[error("{path}: peak {peak} exceeds 1.0")]
    PeakExceedsOne { path: PathBuf, peak: f64 },
    #[error("{path}: empty clip")]
    EmptyClip { path: PathBuf },
    #[error("class {label}: empty class (no clips listed)")]
    EmptyClass { label: String },
    #[error("backgrounds empty")]
    NoBackgrounds,
    #[error("vocabulary mismatch: {message}")]
    VocabularyMismatch { message: String },
    #[error("room {room_id}: fewer than 2 RIRs")]
    TooFewRirs { room_id: String },
    #[error("{path}: RIR has no nonzero sample")]
    SilentRir { path: PathBuf },
}

/// Errors from soundscape sampling and rendering.
#[derive(Debug, Error)]
pub enum SynthError {
    #[error("silent source: {id}")]
    SilentSource { id: String },
    #[error("missing source id: {id}")]
    MissingSource { id: String },
    #[error("profile class absent from bank: {label}")]
    ClassNotInBank { label: String },
    #[error("invalid profile: {message}")]
    InvalidProfile { message: String },
    #[error("finite TNTSNR requires at least one target event (clip {clip_id})")]
    NoTargetEvents { clip_id: String },
    #[error("invalid soundscape recipe for clip {clip_id}: {message}")]
    InvalidSpec { clip_id: String, message: String },
}

/// Errors from reverb operations.
#[derive(Debug, Error)]
pub enum ReverbError {
    #[error("all-zero RIR: {id}")]
    AllZeroRir { id: String },
    #[error("sample-rate mismatch: event {event_rate} Hz, RIR {rir_rate} Hz")]
    RateMismatch { event_rate: u32, rir_rate: u32 },
    #[error("empty room list")]
    NoRooms,
}

/// Errors from annotation parsing and construction.
#[derive(Debug, Error)]
pub enum AnnotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid annotation: {message}")]
    Invalid { message: String },
}

/// Errors from scoring.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("annotation references unknown clip: {clip_id}")]
    UnknownClip { clip_id: String },
    #[error("label outside vocabulary: {label}")]
    UnknownLabel { label: String },
    #[error("invalid metric configuration: {message}")]
    InvalidConfig { message: String },
}

/// Errors from suite construction.
#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Reverb(#[from] ReverbError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("suite {suite}: clip count {n} not divisible by vocabulary size {vocab}")]
    NotDivisible { suite: String, n: usize, vocab: usize },
    #[error("suite {suite}: manifest already exists at {path} (pass force to overwrite)")]
    AlreadyExists { suite: String, path: PathBuf },
    #[error("suite {suite}: {message}")]
    Protocol { suite: String, message: String },
    #[error("{path}: manifest parse error: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// Errors from score-table analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("system {system}: missing suite {suite}")]
    MissingSuite { system: String, suite: String },
    #[error("system {system}: missing tag {tag}")]
    MissingTag { system: String, tag: String },
    #[error("empty group for key {key}")]
    EmptyGroup { key: String },
    #[error("schema mismatch: {message}")]
    Schema { message: String },
    #[error("event outside all bins: {message}")]
    OutsideBins { message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}
