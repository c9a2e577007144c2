//! Evaluation-suite protocols: planning, rendering, and manifests.
//!
//! A plan is a named list of fully resolved specs; writing a plan renders
//! audio (optionally), serializes every spec, emits one annotation file,
//! and commits a manifest last so no partial suite ever looks complete.
//! Given (bank, seed), plans and rendered bytes are identical across runs
//! and worker counts.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annot::AnnotationSet;
use crate::bank::{sha256_hex, SourceBank};
use crate::error::SuiteError;
use crate::level::{gain_for_snr, rms_level_db, BG_REF_DB};
use crate::profile::GenerationProfile;
use crate::reverb::{assign_rirs_to_spec, ReverbMode};
use crate::rng::{derive_rng, derive_seed};
use crate::soundscape::{
    apply_tntsnr, reference_annotations, render, sample_spec, ConditionTag, PlacedEvent,
    SoundscapeSpec, Tntsnr,
};
use crate::wav::{read_wav, write_wav, SampleFormat};

/// Default clip counts matching the full-scale protocols.
pub const REF_CLIPS: usize = 828;
pub const SIXTY_SECOND_CLIPS: usize = 152;
pub const ONSET_CLIPS: usize = 1000;
pub const SINGLE_CLIPS: usize = 1000;

/// Onset windows in seconds, one per aligned variant.
pub const ONSET_WINDOWS: [(f64, f64); 3] = [(0.25, 0.75), (5.25, 5.75), (9.25, 9.75)];
/// Variant suite names, keyed to the window centers.
pub const ONSET_NAMES: [&str; 3] = ["500ms", "5500ms", "9500ms"];

/// Grid axes: non-target level gaps and reverberation modes.
pub const GRID_TNTSNR: [Tntsnr; 3] = [Tntsnr::Infinite, Tntsnr::Db(15.0), Tntsnr::Db(0.0)];
pub const GRID_REVERB: [ReverbMode; 3] = [ReverbMode::None, ReverbMode::Short, ReverbMode::Long];

const CLIP_SECONDS: f64 = 10.0;
const DEFAULT_FBSNR: [f64; 2] = [6.0, 30.0];

/// Directory name of a condition-grid cell.
pub fn cell_name(tntsnr: Tntsnr, reverb: ReverbMode) -> String {
    let reverb_word = match reverb {
        ReverbMode::None => "no",
        ReverbMode::Short => "short",
        ReverbMode::Long => "long",
    };
    format!("TNTSNR_{}_{}_reverb", tntsnr.label(), reverb_word)
}

/// A named suite: resolved specs plus provenance.
#[derive(Debug, Clone)]
pub struct SuitePlan {
    pub name: String,
    pub protocol: String,
    pub condition: ConditionTag,
    pub specs: Vec<SoundscapeSpec>,
    pub profile_sha256: Option<String>,
}

impl SuitePlan {
    pub fn clip_count(&self) -> usize {
        self.specs.len()
    }
}

/// One clip's files, relative to the suite directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub clip_id: String,
    pub spec_path: String,
    pub audio_path: String,
}

/// Suite provenance: everything needed to reproduce or verify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub name: String,
    pub protocol: String,
    pub clip_count: usize,
    pub sample_rate: u32,
    pub master_seed: u64,
    pub condition: ConditionTag,
    pub profile_sha256: Option<String>,
    pub bank_manifest_sha256: String,
    pub audio_rendered: bool,
    pub clips: Vec<ClipEntry>,
}

fn clip_id(prefix: &str, index: usize) -> String {
    format!("{prefix}_{index:04}")
}

fn profile_hash(profile: &GenerationProfile) -> String {
    // serde's field order and BTreeMap key order make this canonical
    sha256_hex(serde_json::to_string(profile).expect("profile serializes").as_bytes())
}

/// Reference protocol: `n` clips drawn from the profile, dry, no
/// non-target events.
pub fn plan_ref(
    profile: &GenerationProfile,
    bank: &SourceBank,
    master_seed: u64,
    n: usize,
) -> Result<SuitePlan, SuiteError> {
    let suite_seed = derive_seed(master_seed, "suite-ref", 0);
    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        specs.push(sample_spec(
            profile,
            bank,
            &clip_id("ref", i),
            suite_seed,
            i as u64,
        )?);
    }
    Ok(SuitePlan {
        name: "ref".to_string(),
        protocol: "ref".to_string(),
        condition: ConditionTag::dry_reference(),
        specs,
        profile_sha256: Some(profile_hash(profile)),
    })
}

/// Long-clip protocol: same per-clip count and class distributions as
/// the reference, stretched over 60 s clips, so event time density drops
/// by the duration ratio.
pub fn plan_60s(
    profile: &GenerationProfile,
    bank: &SourceBank,
    master_seed: u64,
    n: usize,
) -> Result<SuitePlan, SuiteError> {
    let long = profile.with_clip_duration(60.0);
    let suite_seed = derive_seed(master_seed, "suite-60s", 0);
    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        specs.push(sample_spec(
            &long,
            bank,
            &clip_id("60s", i),
            suite_seed,
            i as u64,
        )?);
    }
    Ok(SuitePlan {
        name: "60s".to_string(),
        protocol: "60s".to_string(),
        condition: ConditionTag::dry_reference(),
        specs,
        profile_sha256: Some(profile_hash(&long)),
    })
}

/// Onset-variant protocol: three aligned suites of `n` single-event
/// clips. Clip `i` shares one source excerpt, gain, and background in
/// all three variants; only the onset differs, drawn uniformly inside
/// each variant's window.
pub fn plan_onset_variants(
    bank: &SourceBank,
    master_seed: u64,
    n: usize,
) -> Result<Vec<SuitePlan>, SuiteError> {
    let suite_seed = derive_seed(master_seed, "suite-onset", 0);
    let sr = bank.sample_rate;
    let clip_len = (CLIP_SECONDS * sr as f64).round() as usize;
    let mut variants: Vec<Vec<SoundscapeSpec>> = vec![Vec::with_capacity(n); 3];
    for i in 0..n {
        let id = clip_id("onset", i);
        // one stream per clip: shared draws first, then the three onsets
        let mut rng = derive_rng(suite_seed, "spec", i as u64);
        let base = base_single_event(bank, &mut rng, clip_len, DEFAULT_FBSNR, &id)?;
        for (v, (lo, hi)) in ONSET_WINDOWS.iter().enumerate() {
            let lo_s = (lo * sr as f64).round() as usize;
            let hi_s = (hi * sr as f64).round() as usize;
            let onset = rng.random_range(lo_s..=hi_s);
            let mut spec = base.clone();
            spec.seed = derive_seed(suite_seed, "spec", i as u64);
            spec.events[0].onset = onset;
            variants[v].push(spec);
        }
    }
    Ok(ONSET_NAMES
        .iter()
        .zip(variants)
        .map(|(name, specs)| SuitePlan {
            name: name.to_string(),
            protocol: "onset".to_string(),
            condition: ConditionTag::dry_reference(),
            specs,
            profile_sha256: None,
        })
        .collect())
}

/// Single-event protocol: `n` clips, exactly `n / |vocabulary|` per
/// class, one target event each.
pub fn plan_single(
    bank: &SourceBank,
    master_seed: u64,
    n: usize,
) -> Result<SuitePlan, SuiteError> {
    let vocab = bank.vocabulary.len();
    if vocab == 0 || n % vocab != 0 {
        return Err(SuiteError::NotDivisible {
            suite: "single".to_string(),
            n,
            vocab,
        });
    }
    let suite_seed = derive_seed(master_seed, "suite-single", 0);
    let sr = bank.sample_rate;
    let clip_len = (CLIP_SECONDS * sr as f64).round() as usize;
    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        let id = clip_id("single", i);
        let mut rng = derive_rng(suite_seed, "spec", i as u64);
        // round-robin classes: any n divisible by |vocab| stays flat
        let label = bank.vocabulary[i % vocab].clone();
        let mut spec =
            single_event_spec(bank, &mut rng, clip_len, DEFAULT_FBSNR, &id, &label, true)?;
        spec.seed = derive_seed(suite_seed, "spec", i as u64);
        spec.events[0].onset = rng.random_range(0..clip_len);
        // gain against the in-clip support, as for the reference protocol
        resolve_gain_in_clip(bank, &mut spec)?;
        specs.push(spec);
    }
    Ok(SuitePlan {
        name: "single".to_string(),
        protocol: "single".to_string(),
        condition: ConditionTag::dry_reference(),
        specs,
        profile_sha256: None,
    })
}

/// Condition grid: nine cells sharing the reference plan's target events
/// byte for byte. Non-target placements and RIR assignments come from one
/// grid seed, so cells differ only in the controlled factors.
pub fn plan_condition_grid(
    ref_plan: &SuitePlan,
    bank: &SourceBank,
    master_seed: u64,
) -> Result<Vec<SuitePlan>, SuiteError> {
    if bank.rooms.is_empty() {
        return Err(SuiteError::Protocol {
            suite: "grid".to_string(),
            message: "bank has no rooms for the reverberant cells".to_string(),
        });
    }
    let grid_seed = derive_seed(master_seed, "suite-grid", 0);
    let mut out = Vec::with_capacity(9);
    for tntsnr in GRID_TNTSNR {
        for reverb in GRID_REVERB {
            let mut specs = Vec::with_capacity(ref_plan.specs.len());
            for (i, spec) in ref_plan.specs.iter().enumerate() {
                let with_nt = apply_tntsnr(spec, bank, tntsnr, grid_seed, i as u64)?;
                let cell = assign_rirs_to_spec(&with_nt, &bank.rooms, reverb, grid_seed, i as u64)?;
                specs.push(cell);
            }
            out.push(SuitePlan {
                name: cell_name(tntsnr, reverb),
                protocol: "grid".to_string(),
                condition: ConditionTag { tntsnr, reverb },
                specs,
                profile_sha256: ref_plan.profile_sha256.clone(),
            });
        }
    }
    Ok(out)
}

/// Draw a one-event spec with a uniform class, leaving the onset at 0 for
/// the caller to place. The gain is resolved against the whole excerpt so
/// it can be shared across placements that truncate differently.
fn base_single_event(
    bank: &SourceBank,
    rng: &mut rand_chacha::ChaCha8Rng,
    clip_len: usize,
    fbsnr: [f64; 2],
    id: &str,
) -> Result<SoundscapeSpec, SuiteError> {
    let class_index = rng.random_range(0..bank.vocabulary.len());
    let label = bank.vocabulary[class_index].clone();
    single_event_spec(bank, rng, clip_len, fbsnr, id, &label, false)
}

fn single_event_spec(
    bank: &SourceBank,
    rng: &mut rand_chacha::ChaCha8Rng,
    clip_len: usize,
    fbsnr: [f64; 2],
    id: &str,
    label: &str,
    defer_gain: bool,
) -> Result<SoundscapeSpec, SuiteError> {
    let bg = &bank.backgrounds[rng.random_range(0..bank.backgrounds.len())];
    let bg_len = bg.samples.len();
    let bg_offset = if bg_len >= clip_len {
        rng.random_range(0..=bg_len - clip_len)
    } else {
        rng.random_range(0..bg_len)
    };
    let window: Vec<f64> = (0..clip_len)
        .map(|i| bg.samples[(bg_offset + i) % bg_len])
        .collect();
    let bg_level = rms_level_db(&window);
    if bg_level == f64::NEG_INFINITY {
        return Err(SuiteError::Synth(crate::error::SynthError::SilentSource {
            id: bg.id.clone(),
        }));
    }
    let clips = &bank.targets[label];
    let src = &clips[rng.random_range(0..clips.len())];
    let (trim_start, trim_len) = if src.samples.len() > clip_len {
        (rng.random_range(0..=src.samples.len() - clip_len), clip_len)
    } else {
        (0, src.samples.len())
    };
    let snr_db = rng.random_range(fbsnr[0]..=fbsnr[1]);
    let gain = if defer_gain {
        1.0
    } else {
        let excerpt = &src.samples[trim_start..trim_start + trim_len];
        gain_for_snr(snr_db, rms_level_db(excerpt), BG_REF_DB, &src.id)?
    };
    Ok(SoundscapeSpec {
        clip_id: id.to_string(),
        seed: 0,
        sample_rate: bank.sample_rate,
        duration_samples: clip_len,
        background: crate::soundscape::BackgroundPlacement {
            source_id: bg.id.clone(),
            offset: bg_offset,
            gain: crate::level::db_to_gain(BG_REF_DB - bg_level),
            level_db: BG_REF_DB,
        },
        events: vec![PlacedEvent {
            source_id: src.id.clone(),
            label: Some(label.to_string()),
            onset: 0,
            trim_start,
            trim_len,
            gain,
            snr_db,
            rir: None,
        }],
        condition: ConditionTag::dry_reference(),
    })
}

/// Re-resolve every event gain against its in-clip (truncated) support.
fn resolve_gain_in_clip(bank: &SourceBank, spec: &mut SoundscapeSpec) -> Result<(), SuiteError> {
    let n = spec.duration_samples;
    for event in &mut spec.events {
        let src = bank
            .clip(&event.source_id)
            .ok_or_else(|| crate::error::SynthError::MissingSource {
                id: event.source_id.clone(),
            })?;
        let placed = event.trim_len.min(n - event.onset);
        let excerpt = &src.samples[event.trim_start..event.trim_start + placed];
        event.gain = gain_for_snr(
            event.snr_db,
            rms_level_db(excerpt),
            spec.background.level_db,
            &event.source_id,
        )?;
    }
    Ok(())
}

/// How a plan is committed to disk.
#[derive(Debug, Clone)]
pub struct WriteOptions {
    /// Render and write WAV files; specs and annotations are always written.
    pub write_audio: bool,
    /// Overwrite an existing suite directory.
    pub force: bool,
}

impl Default for WriteOptions {
    fn default() -> WriteOptions {
        WriteOptions {
            write_audio: true,
            force: false,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a suite directory: `audio/*.wav`, `specs/*.json`,
/// `annotations.tsv`, then `manifest.json` last via rename, so a manifest
/// on disk always describes a complete suite. Clips render in parallel;
/// bytes do not depend on the worker count.
pub fn write_suite(
    plan: &SuitePlan,
    bank: &SourceBank,
    out_root: &Path,
    master_seed: u64,
    options: &WriteOptions,
) -> Result<SuiteManifest, SuiteError> {
    let dir = out_root.join(&plan.name);
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() && !options.force {
        return Err(SuiteError::AlreadyExists {
            suite: plan.name.clone(),
            path: manifest_path,
        });
    }
    let audio_dir = dir.join("audio");
    let spec_dir = dir.join("specs");
    fs::create_dir_all(&audio_dir).map_err(io_err(&audio_dir))?;
    fs::create_dir_all(&spec_dir).map_err(io_err(&spec_dir))?;

    let per_clip: Vec<Vec<crate::annot::EventAnnotation>> = plan
        .specs
        .par_iter()
        .map(|spec| -> Result<_, SuiteError> {
            let spec_path = spec_dir.join(format!("{}.json", spec.clip_id));
            let json = serde_json::to_string_pretty(spec).map_err(|e| SuiteError::Manifest {
                path: spec_path.clone(),
                message: e.to_string(),
            })?;
            fs::write(&spec_path, json + "\n").map_err(io_err(&spec_path))?;
            if options.write_audio {
                let rendered = render(spec, bank)?;
                let wav_path = audio_dir.join(format!("{}.wav", spec.clip_id));
                write_wav(
                    &wav_path,
                    &rendered.samples,
                    spec.sample_rate,
                    SampleFormat::Int16,
                )?;
                Ok(rendered.annotations)
            } else {
                Ok(reference_annotations(spec)?)
            }
        })
        .collect::<Result<_, _>>()?;

    let mut annotations = AnnotationSet::new();
    for (spec, events) in plan.specs.iter().zip(per_clip) {
        annotations.add_clip(&spec.clip_id);
        for event in events {
            annotations.push(event);
        }
    }
    let tsv_path = dir.join("annotations.tsv");
    annotations
        .write_tsv(&tsv_path)
        .map_err(|e| SuiteError::Protocol {
            suite: plan.name.clone(),
            message: e.to_string(),
        })?;

    let manifest = SuiteManifest {
        name: plan.name.clone(),
        protocol: plan.protocol.clone(),
        clip_count: plan.specs.len(),
        sample_rate: bank.sample_rate,
        master_seed,
        condition: plan.condition,
        profile_sha256: plan.profile_sha256.clone(),
        bank_manifest_sha256: bank.manifest_sha256.clone(),
        audio_rendered: options.write_audio,
        clips: plan
            .specs
            .iter()
            .map(|spec| ClipEntry {
                clip_id: spec.clip_id.clone(),
                spec_path: format!("specs/{}.json", spec.clip_id),
                audio_path: format!("audio/{}.wav", spec.clip_id),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| SuiteError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    let tmp_path = dir.join("manifest.json.tmp");
    fs::write(&tmp_path, json + "\n").map_err(io_err(&tmp_path))?;
    fs::rename(&tmp_path, &manifest_path).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

/// Load a suite's manifest and every serialized spec, in manifest order.
pub fn load_suite(
    suite_dir: &Path,
) -> Result<(SuiteManifest, Vec<SoundscapeSpec>), SuiteError> {
    let manifest_path = suite_dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: SuiteManifest =
        serde_json::from_str(&text).map_err(|e| SuiteError::Manifest {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
    let mut specs = Vec::with_capacity(manifest.clips.len());
    for entry in &manifest.clips {
        let spec_path = suite_dir.join(&entry.spec_path);
        let text = fs::read_to_string(&spec_path).map_err(io_err(&spec_path))?;
        let spec: SoundscapeSpec =
            serde_json::from_str(&text).map_err(|e| SuiteError::Manifest {
                path: spec_path.clone(),
                message: e.to_string(),
            })?;
        specs.push(spec);
    }
    Ok((manifest, specs))
}

/// Re-render every spec of a written suite and compare against the audio
/// on disk. Returns the ids of clips whose bytes differ.
pub fn verify_suite(suite_dir: &Path, bank: &SourceBank) -> Result<Vec<String>, SuiteError> {
    let (manifest, specs) = load_suite(suite_dir)?;
    if !manifest.audio_rendered {
        return Err(SuiteError::Protocol {
            suite: manifest.name.clone(),
            message: "suite was written without audio".to_string(),
        });
    }
    let mismatches: Vec<Option<String>> = specs
        .par_iter()
        .zip(&manifest.clips)
        .map(|(spec, entry)| -> Result<Option<String>, SuiteError> {
            let rendered = render(spec, bank)?;
            let wav_path = suite_dir.join(&entry.audio_path);
            let (disk, rate) = read_wav(&wav_path)?;
            let fresh = requantize(&rendered.samples);
            let matches = rate == spec.sample_rate
                && disk.len() == fresh.len()
                && disk
                    .iter()
                    .zip(&fresh)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            Ok(if matches {
                None
            } else {
                Some(entry.clip_id.clone())
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(mismatches.into_iter().flatten().collect())
}

/// The values a written-then-read 16-bit file reports.
fn requantize(samples: &[f64]) -> Vec<f64> {
    samples
        .iter()
        .map(|x| {
            let q = (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
            q as f64 / 32768.0
        })
        .collect()
}
