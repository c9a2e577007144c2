//! Deterministic synthetic-soundscape generation and event-based scoring.
//!
//! The crate builds evaluation suites from a bank of isolated sounds,
//! renders them reproducibly from integer seeds, scores event predictions
//! with a collar-based F-score, and produces comparison tables linking
//! the two. Everything downstream of a (bank, profile, seed) triple is
//! byte-identical across runs and worker counts.

pub mod analysis;
pub mod annot;
pub mod bank;
pub mod error;
pub mod fixtures;
pub mod level;
pub mod metric;
pub mod profile;
pub mod reverb;
pub mod rng;
pub mod soundscape;
pub mod suite;
pub mod wav;

pub use annot::{AnnotationSet, EventAnnotation, Time};
pub use error::{
    AnalysisError, AnnotError, BankError, MetricError, ReverbError, SuiteError, SynthError,
    WavError,
};
pub use metric::{evaluate, ClassScore, MetricConfig, ScoreReport, UnknownLabelPolicy};
pub use profile::GenerationProfile;
pub use soundscape::{ConditionTag, RenderedClip, SoundscapeSpec, Tntsnr};
