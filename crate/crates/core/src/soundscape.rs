//! Soundscape recipes: sampling, rendering, and condition application.
//!
//! A SoundscapeSpec is a fully resolved recipe: every source choice, trim,
//! onset, gain, and impulse-response assignment is pinned at sampling time
//! and serialized, so rendering is a pure function of (spec, bank) and any
//! suite can be re-rendered from its spec files alone.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::annot::{EventAnnotation, Time};
use crate::bank::SourceBank;
use crate::error::SynthError;
use crate::level::{db_to_gain, gain_for_snr, gain_to_db, rms_level_db, BG_REF_DB};
use crate::profile::GenerationProfile;
use crate::reverb::{self, ReverbMode, RirAssignment};
use crate::rng::{derive_rng, derive_seed};

/// Target to non-target SNR condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tntsnr {
    /// No non-target events at all.
    Infinite,
    /// Non-target events sit this many dB below the mean target level.
    Db(f64),
}

impl Tntsnr {
    pub fn is_infinite(self) -> bool {
        matches!(self, Tntsnr::Infinite)
    }

    /// Compact label for suite names: "inf", "15", "0", "7.5".
    pub fn label(self) -> String {
        match self {
            Tntsnr::Infinite => "inf".to_string(),
            Tntsnr::Db(x) if x == x.trunc() && x.abs() < 1e15 => format!("{}", x as i64),
            Tntsnr::Db(x) => format!("{x}"),
        }
    }
}

impl Serialize for Tntsnr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Tntsnr::Infinite => s.serialize_str("inf"),
            Tntsnr::Db(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Tntsnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Tntsnr, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Tntsnr;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "\"inf\" or a dB number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Tntsnr, E> {
                if v == "inf" {
                    Ok(Tntsnr::Infinite)
                } else {
                    Err(E::custom(format!("expected \"inf\" or a number, got {v:?}")))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Tntsnr, E> {
                Ok(Tntsnr::Db(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Tntsnr, E> {
                Ok(Tntsnr::Db(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Tntsnr, E> {
                Ok(Tntsnr::Db(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// The controlled condition a clip was rendered under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionTag {
    pub tntsnr: Tntsnr,
    pub reverb: ReverbMode,
}

impl ConditionTag {
    /// No non-target events, no reverberation.
    pub fn dry_reference() -> ConditionTag {
        ConditionTag {
            tntsnr: Tntsnr::Infinite,
            reverb: ReverbMode::None,
        }
    }
}

/// Background bed choice for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPlacement {
    pub source_id: String,
    /// Start offset into the source, in samples. The clip window tiles
    /// (wraps around) when the source is shorter than the clip.
    pub offset: usize,
    /// Linear gain scaling the window to `level_db`. May be 0 for a
    /// silent background.
    pub gain: f64,
    /// RMS level of the scaled background window, dBFS.
    pub level_db: f64,
}

/// One event placed in a clip, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedEvent {
    pub source_id: String,
    /// Target class, or None for a non-target event (never annotated).
    pub label: Option<String>,
    /// Placement and trim in samples at the spec's sample rate.
    pub onset: usize,
    pub trim_start: usize,
    pub trim_len: usize,
    pub gain: f64,
    /// Scaled event RMS level minus background RMS level, dB.
    pub snr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rir: Option<RirAssignment>,
}

/// Fully resolved, serializable recipe for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundscapeSpec {
    pub clip_id: String,
    /// Scalar seed recorded for provenance; all draws for this clip came
    /// from the stream this seed identifies.
    pub seed: u64,
    pub sample_rate: u32,
    pub duration_samples: usize,
    pub background: BackgroundPlacement,
    pub events: Vec<PlacedEvent>,
    pub condition: ConditionTag,
}

impl SoundscapeSpec {
    pub fn duration_seconds(&self) -> f64 {
        self.duration_samples as f64 / self.sample_rate as f64
    }

    pub fn target_events(&self) -> impl Iterator<Item = &PlacedEvent> {
        self.events.iter().filter(|e| e.label.is_some())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |message: String| {
            Err(SynthError::InvalidSpec {
                clip_id: self.clip_id.clone(),
                message,
            })
        };
        if self.sample_rate == 0 {
            return fail("sample_rate is 0".into());
        }
        if self.duration_samples == 0 {
            return fail("duration is 0".into());
        }
        if !(self.background.gain >= 0.0) || !self.background.gain.is_finite() {
            return fail(format!("background gain {}", self.background.gain));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.onset >= self.duration_samples {
                return fail(format!("event {i}: onset {} outside clip", e.onset));
            }
            if e.trim_len == 0 {
                return fail(format!("event {i}: empty trim"));
            }
            if !(e.gain > 0.0) || !e.gain.is_finite() {
                return fail(format!("event {i}: gain {}", e.gain));
            }
            if !e.snr_db.is_finite() {
                return fail(format!("event {i}: snr {}", e.snr_db));
            }
        }
        Ok(())
    }
}

/// Rendered audio plus its reference annotations.
#[derive(Debug, Clone)]
pub struct RenderedClip {
    pub samples: Vec<f64>,
    /// Target events only, sorted by (onset, offset, label).
    pub annotations: Vec<EventAnnotation>,
    /// Single common attenuation applied when the mix peak exceeded 1.0;
    /// 0.0 when untouched. Inter-source level differences are preserved.
    pub master_gain_db: f64,
}

/// `n` samples starting at `offset`, wrapping around the source.
fn tiled_window(samples: &[f64], offset: usize, n: usize) -> Vec<f64> {
    let len = samples.len();
    (0..n).map(|i| samples[(offset + i) % len]).collect()
}

/// Uniform excerpt: the whole source, or a clip-length window of it.
fn trim_window(rng: &mut ChaCha8Rng, src_len: usize, clip_len: usize) -> (usize, usize) {
    if src_len > clip_len {
        (rng.random_range(0..=src_len - clip_len), clip_len)
    } else {
        (0, src_len)
    }
}

/// Index draw from a normalized weight vector.
fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return i;
        }
    }
    weights.len() - 1
}

/// Draw one soundscape recipe for `clip_index` under `master_seed`.
///
/// Deterministic in (profile, bank, master_seed, clip_index): every random
/// decision comes from one derived stream in a fixed draw order, namely
/// background choice, background offset, anchor class, co-occurrence
/// coin flips, then per class its event count and per event the source,
/// trim, onset, and SNR.
pub fn sample_spec(
    profile: &GenerationProfile,
    bank: &SourceBank,
    clip_id: &str,
    master_seed: u64,
    clip_index: u64,
) -> Result<SoundscapeSpec, SynthError> {
    profile.validate()?;
    for label in &profile.vocabulary {
        if !bank.vocabulary.contains(label) {
            return Err(SynthError::ClassNotInBank {
                label: label.clone(),
            });
        }
    }
    let sr = bank.sample_rate;
    let n = (profile.clip_duration * sr as f64).round() as usize;
    if n == 0 {
        return Err(SynthError::InvalidProfile {
            message: format!("clip_duration {} rounds to zero samples", profile.clip_duration),
        });
    }
    let mut rng = derive_rng(master_seed, "spec", clip_index);

    let bg = &bank.backgrounds[rng.random_range(0..bank.backgrounds.len())];
    let bg_len = bg.samples.len();
    let bg_offset = if bg_len >= n {
        rng.random_range(0..=bg_len - n)
    } else {
        rng.random_range(0..bg_len)
    };
    let window = tiled_window(&bg.samples, bg_offset, n);
    let bg_level = rms_level_db(&window);
    if bg_level == f64::NEG_INFINITY {
        return Err(SynthError::SilentSource { id: bg.id.clone() });
    }
    let background = BackgroundPlacement {
        source_id: bg.id.clone(),
        offset: bg_offset,
        gain: db_to_gain(BG_REF_DB - bg_level),
        level_db: BG_REF_DB,
    };

    let weights: Vec<f64> = profile
        .vocabulary
        .iter()
        .map(|v| profile.classes[v].clip_weight)
        .collect();
    let anchor = profile.vocabulary[categorical(&mut rng, &weights)].clone();
    let mut present = vec![anchor.clone()];
    for (other, p) in &profile.classes[&anchor].cooccurrence {
        if *other != anchor && rng.random::<f64>() < *p {
            present.push(other.clone());
        }
    }

    let mut events = Vec::new();
    for label in &present {
        let class_profile = &profile.classes[label];
        let count = 1 + categorical(&mut rng, &class_profile.events_per_clip);
        let clips = &bank.targets[label];
        for _ in 0..count {
            let src = &clips[rng.random_range(0..clips.len())];
            let (trim_start, trim_len) = trim_window(&mut rng, src.samples.len(), n);
            let onset = rng.random_range(0..n);
            let snr_db = rng.random_range(profile.fbsnr_range[0]..=profile.fbsnr_range[1]);
            // gain resolved against the in-clip support, so truncation at
            // the clip edge cannot bias the realized SNR
            let placed_len = trim_len.min(n - onset);
            let excerpt = &src.samples[trim_start..trim_start + placed_len];
            let gain = gain_for_snr(snr_db, rms_level_db(excerpt), BG_REF_DB, &src.id)?;
            events.push(PlacedEvent {
                source_id: src.id.clone(),
                label: Some(label.clone()),
                onset,
                trim_start,
                trim_len,
                gain,
                snr_db,
                rir: None,
            });
        }
    }

    Ok(SoundscapeSpec {
        clip_id: clip_id.to_string(),
        seed: derive_seed(master_seed, "spec", clip_index),
        sample_rate: sr,
        duration_samples: n,
        background,
        events,
        condition: ConditionTag::dry_reference(),
    })
}

/// Reference annotations implied by a spec: target events only, with the
/// dry placement's timings and offsets clamped to the clip edge.
pub fn reference_annotations(spec: &SoundscapeSpec) -> Result<Vec<EventAnnotation>, SynthError> {
    let mut annotations = Vec::new();
    for event in spec.target_events() {
        let end = (event.onset + event.trim_len).min(spec.duration_samples);
        let ann = EventAnnotation::new(
            spec.clip_id.clone(),
            event.label.clone().unwrap(),
            Time::from_samples(event.onset, spec.sample_rate),
            Time::from_samples(end, spec.sample_rate),
        )
        .map_err(|e| SynthError::InvalidSpec {
            clip_id: spec.clip_id.clone(),
            message: e.to_string(),
        })?;
        annotations.push(ann);
    }
    annotations.sort_by(|a, b| {
        (a.onset, a.offset, &a.label).cmp(&(b.onset, b.offset, &b.label))
    });
    Ok(annotations)
}

/// Render a spec into audio plus annotations. Pure in (spec, bank).
pub fn render(spec: &SoundscapeSpec, bank: &SourceBank) -> Result<RenderedClip, SynthError> {
    spec.validate()?;
    let n = spec.duration_samples;
    let bg = bank
        .clip(&spec.background.source_id)
        .ok_or_else(|| SynthError::MissingSource {
            id: spec.background.source_id.clone(),
        })?;
    let mut mix = tiled_window(&bg.samples, spec.background.offset % bg.samples.len(), n);
    for v in mix.iter_mut() {
        *v *= spec.background.gain;
    }

    for event in &spec.events {
        let src = bank
            .clip(&event.source_id)
            .ok_or_else(|| SynthError::MissingSource {
                id: event.source_id.clone(),
            })?;
        let end = event.trim_start + event.trim_len;
        if end > src.samples.len() {
            return Err(SynthError::InvalidSpec {
                clip_id: spec.clip_id.clone(),
                message: format!(
                    "trim [{}, {end}) outside source {} ({} samples)",
                    event.trim_start,
                    event.source_id,
                    src.samples.len()
                ),
            });
        }
        let mut scaled: Vec<f64> = src.samples[event.trim_start..end]
            .iter()
            .map(|x| x * event.gain)
            .collect();
        if spec.condition.reverb != ReverbMode::None {
            if let Some(assignment) = &event.rir {
                let invalid = |message: String| SynthError::InvalidSpec {
                    clip_id: spec.clip_id.clone(),
                    message,
                };
                let room = bank
                    .room(&assignment.room_id)
                    .ok_or_else(|| invalid(format!("unknown room {}", assignment.room_id)))?;
                let rir = room
                    .rirs
                    .get(assignment.rir_index)
                    .ok_or_else(|| {
                        invalid(format!(
                            "room {} has no RIR {}",
                            assignment.room_id, assignment.rir_index
                        ))
                    })?;
                let truncated = reverb::truncate_rir(rir, spec.condition.reverb)
                    .map_err(|e| invalid(e.to_string()))?;
                scaled = reverb::convolve(&scaled, spec.sample_rate, &truncated)
                    .map_err(|e| invalid(e.to_string()))?;
            }
        }
        // place at the onset; anything past the clip edge is cut
        let budget = n - event.onset;
        for (i, v) in scaled.iter().take(budget).enumerate() {
            mix[event.onset + i] += v;
        }
    }

    let annotations = reference_annotations(spec)?;

    let peak = mix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut master_gain_db = 0.0;
    if peak > 1.0 {
        let g = 1.0 / peak;
        for v in mix.iter_mut() {
            *v = (*v * g).clamp(-1.0, 1.0);
        }
        master_gain_db = gain_to_db(g);
    }

    Ok(RenderedClip {
        samples: mix,
        annotations,
        master_gain_db,
    })
}

/// Add non-target events at the requested level gap below the mean target
/// level. Infinite leaves the spec untouched. Placements (count, sources,
/// trims, onsets) depend only on the seed, never on the gap, so different
/// gap values share identical placements and differ only in gain.
pub fn apply_tntsnr(
    spec: &SoundscapeSpec,
    bank: &SourceBank,
    tntsnr: Tntsnr,
    master_seed: u64,
    clip_index: u64,
) -> Result<SoundscapeSpec, SynthError> {
    let gap = match tntsnr {
        Tntsnr::Infinite => return Ok(spec.clone()),
        Tntsnr::Db(gap) => gap,
    };
    let target_snrs: Vec<f64> = spec.target_events().map(|e| e.snr_db).collect();
    if target_snrs.is_empty() {
        return Err(SynthError::NoTargetEvents {
            clip_id: spec.clip_id.clone(),
        });
    }
    if bank.non_targets.is_empty() {
        return Err(SynthError::InvalidSpec {
            clip_id: spec.clip_id.clone(),
            message: "bank has no non-target clips".to_string(),
        });
    }
    // every target sits at background level + snr, so the mean target
    // level is the anchor plus the mean drawn SNR
    let target_mean_db =
        spec.background.level_db + target_snrs.iter().sum::<f64>() / target_snrs.len() as f64;
    let nt_level_db = target_mean_db - gap;

    let mut rng = derive_rng(master_seed, "tntsnr", clip_index);
    let count = rng.random_range(1..=3usize);
    let n = spec.duration_samples;
    let mut out = spec.clone();
    for _ in 0..count {
        let src = &bank.non_targets[rng.random_range(0..bank.non_targets.len())];
        let (trim_start, trim_len) = trim_window(&mut rng, src.samples.len(), n);
        let onset = rng.random_range(0..n);
        let placed_len = trim_len.min(n - onset);
        let excerpt = &src.samples[trim_start..trim_start + placed_len];
        let level = rms_level_db(excerpt);
        if level == f64::NEG_INFINITY {
            return Err(SynthError::SilentSource { id: src.id.clone() });
        }
        out.events.push(PlacedEvent {
            source_id: src.id.clone(),
            label: None,
            onset,
            trim_start,
            trim_len,
            gain: db_to_gain(nt_level_db - level),
            snr_db: nt_level_db - spec.background.level_db,
            rir: None,
        });
    }
    out.condition.tntsnr = Tntsnr::Db(gap);
    Ok(out)
}
