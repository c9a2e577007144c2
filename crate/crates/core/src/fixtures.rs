//! Self-contained demo source bank for tests, examples, and smoke runs.
//!
//! The generated bank is entirely synthetic (tone stacks, filtered noise,
//! chirps, exponentially decaying impulse responses) but satisfies every
//! bank invariant and exercises every role, so full suites can be built
//! and scored without any external audio. Deterministic in its seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bank::{BankManifest, RoomManifest};
use crate::error::BankError;
use crate::rng::derive_rng;
use crate::wav::{write_wav, SampleFormat};

/// Class labels used by the demo bank: ten common domestic sound classes.
pub const DEMO_CLASSES: [&str; 10] = [
    "Alarm_bell_ringing",
    "Blender",
    "Cat",
    "Dishes",
    "Dog",
    "Electric_shaver_toothbrush",
    "Frying",
    "Running_water",
    "Speech",
    "Vacuum_cleaner",
];

/// Event durations cycled across the bank, spanning all duration bins.
const DURATIONS: [f64; 8] = [0.45, 0.80, 1.60, 2.40, 3.60, 4.40, 5.50, 7.50];

/// Fraction of noise (vs tonal content) per class, indexed like DEMO_CLASSES.
const NOISE_MIX: [f64; 10] = [0.10, 0.50, 0.15, 0.70, 0.20, 0.60, 0.90, 0.85, 0.30, 0.75];

/// Write a complete demo bank under `dir` and return the manifest path.
///
/// Layout: `targets/<Class>/clip_NN.wav`, `non_targets/nt_NN.wav`,
/// `backgrounds/bg_NN.wav`, `rirs/<room>/rir_NN.wav`, `bank.json`.
pub fn write_demo_bank(
    dir: &Path,
    sample_rate: u32,
    clips_per_class: usize,
    seed: u64,
) -> Result<PathBuf, BankError> {
    let sr = sample_rate as f64;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BankError::Io { path, source }
    };

    let mut targets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (ci, class) in DEMO_CLASSES.iter().enumerate() {
        let class_dir = dir.join("targets").join(class);
        std::fs::create_dir_all(&class_dir).map_err(io_err(&class_dir))?;
        let mut paths = Vec::new();
        for j in 0..clips_per_class {
            let mut rng = derive_rng(seed, "demo-target", (ci * 1000 + j) as u64);
            let base = DURATIONS[(ci * clips_per_class + j) % DURATIONS.len()];
            let duration = base * rng.random_range(0.9..1.1);
            let n = (duration * sr).round() as usize;
            let f0 = 150.0 + 70.0 * ci as f64 + rng.random_range(-10.0..10.0);
            let tonal = tone_stack(&mut rng, n, sr, f0);
            let noise = filtered_noise(&mut rng, n, 0.15 + 0.1 * (ci % 3) as f64);
            let mix = NOISE_MIX[ci];
            let mut samples: Vec<f64> = tonal
                .iter()
                .zip(&noise)
                .map(|(t, x)| (1.0 - mix) * t + mix * x)
                .collect();
            apply_envelope(&mut samples, sr, &mut rng);
            normalize_peak(&mut samples, 0.5);
            let rel = format!("targets/{class}/clip_{j:02}.wav");
            write_wav(&dir.join(&rel), &samples, sample_rate, SampleFormat::Int16)?;
            paths.push(rel);
        }
        targets.insert(class.to_string(), paths);
    }

    let nt_dir = dir.join("non_targets");
    std::fs::create_dir_all(&nt_dir).map_err(io_err(&nt_dir))?;
    let mut non_targets = Vec::new();
    for j in 0..6usize {
        let mut rng = derive_rng(seed, "demo-nontarget", j as u64);
        let duration = rng.random_range(0.4..2.2);
        let n = (duration * sr).round() as usize;
        let mut samples = if j % 2 == 0 {
            chirp(n, sr, 300.0 + 120.0 * j as f64, 1400.0 + 200.0 * j as f64)
        } else {
            filtered_noise(&mut rng, n, 0.4)
        };
        apply_envelope(&mut samples, sr, &mut rng);
        normalize_peak(&mut samples, 0.5);
        let rel = format!("non_targets/nt_{j:02}.wav");
        write_wav(&dir.join(&rel), &samples, sample_rate, SampleFormat::Int16)?;
        non_targets.push(rel);
    }

    let bg_dir = dir.join("backgrounds");
    std::fs::create_dir_all(&bg_dir).map_err(io_err(&bg_dir))?;
    let mut backgrounds = Vec::new();
    for j in 0..3usize {
        let mut rng = derive_rng(seed, "demo-background", j as u64);
        let n = (12.0 * sr).round() as usize;
        let mut samples = filtered_noise(&mut rng, n, 0.05 + 0.1 * j as f64);
        normalize_peak(&mut samples, 0.4);
        let rel = format!("backgrounds/bg_{j:02}.wav");
        write_wav(&dir.join(&rel), &samples, sample_rate, SampleFormat::Int16)?;
        backgrounds.push(rel);
    }

    let mut rooms = Vec::new();
    for (ri, (room_id, tail_seconds)) in [("room_a", 0.25), ("room_b", 0.80)].iter().enumerate() {
        let room_dir = dir.join("rirs").join(room_id);
        std::fs::create_dir_all(&room_dir).map_err(io_err(&room_dir))?;
        let mut rirs = Vec::new();
        for j in 0..4usize {
            let mut rng = derive_rng(seed, "demo-rir", (ri * 100 + j) as u64);
            let samples = impulse_response(&mut rng, sr, *tail_seconds);
            let rel = format!("rirs/{room_id}/rir_{j:02}.wav");
            write_wav(&dir.join(&rel), &samples, sample_rate, SampleFormat::Float32)?;
            rirs.push(rel);
        }
        rooms.push(RoomManifest {
            room_id: room_id.to_string(),
            rirs,
        });
    }

    let manifest = BankManifest {
        sample_rate,
        vocabulary: Some(DEMO_CLASSES.iter().map(|s| s.to_string()).collect()),
        targets,
        non_targets,
        backgrounds,
        rooms,
    };
    let manifest_path = dir.join("bank.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    std::fs::write(&manifest_path, bytes).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// Fundamental plus three decaying harmonics, lightly amplitude-modulated.
fn tone_stack(rng: &mut ChaCha8Rng, n: usize, sr: f64, f0: f64) -> Vec<f64> {
    let phases: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let am_rate = rng.random_range(1.0..6.0);
    let am_phase = rng.random_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let mut x = 0.0;
            for (h, phase) in phases.iter().enumerate() {
                let k = (h + 1) as f64;
                x += (2.0 * PI * f0 * k * t + phase).sin() / k;
            }
            let am = 1.0 + 0.3 * (2.0 * PI * am_rate * t + am_phase).sin();
            x * am
        })
        .collect()
}

/// White noise through a one-pole lowpass with coefficient `alpha`.
fn filtered_noise(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Vec<f64> {
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            y += alpha * (x - y);
            y
        })
        .collect()
}

/// Linear frequency sweep from `f0` to `f1` over the clip.
fn chirp(n: usize, sr: f64, f0: f64, f1: f64) -> Vec<f64> {
    let dur = n as f64 / sr;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            (2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t)).sin()
        })
        .collect()
}

/// Short attack and release ramps with a nonzero floor, so the clip's
/// support covers its whole length and RMS is well defined everywhere.
fn apply_envelope(samples: &mut [f64], sr: f64, rng: &mut ChaCha8Rng) {
    let attack = ((0.02 * sr) as usize).min(samples.len() / 4).max(1);
    let release = ((0.05 * sr) as usize).min(samples.len() / 4).max(1);
    let floor = rng.random_range(0.06..0.12);
    let n = samples.len();
    for (i, x) in samples.iter_mut().enumerate() {
        let mut g = 1.0f64;
        if i < attack {
            g = g.min(floor + (1.0 - floor) * i as f64 / attack as f64);
        }
        if i >= n - release {
            g = g.min(floor + (1.0 - floor) * (n - 1 - i) as f64 / release as f64);
        }
        *x *= g;
    }
}

/// Direct impulse after a short delay, a few early reflections, then an
/// exponentially decaying noise tail. The direct path stays the unique
/// amplitude maximum.
fn impulse_response(rng: &mut ChaCha8Rng, sr: f64, tail_seconds: f64) -> Vec<f64> {
    let direct = rng.random_range(40..80usize);
    let tail = (tail_seconds * sr).round() as usize;
    let n = direct + tail + 1;
    let mut h = vec![0.0f64; n];
    h[direct] = 1.0;
    for _ in 0..3 {
        let at = direct + rng.random_range(tail / 20..tail / 3);
        h[at] += rng.random_range(0.15..0.45);
    }
    let tau = tail_seconds / 5.0;
    for i in (direct + 1)..n {
        let t = (i - direct) as f64 / sr;
        h[i] += 0.35 * (-t / tau).exp() * rng.random_range(-1.0..1.0);
    }
    // keep reflections plus tail strictly below the direct impulse
    let side_peak = h
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != direct)
        .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
    if side_peak >= 1.0 {
        let scale = 0.8 / side_peak;
        for (i, x) in h.iter_mut().enumerate() {
            if i != direct {
                *x *= scale;
            }
        }
    }
    normalize_peak(&mut h, 0.9);
    h
}

fn normalize_peak(samples: &mut [f64], target: f64) {
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let g = target / peak;
        for x in samples.iter_mut() {
            *x *= g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_bank_is_deterministic() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_demo_bank(d1.path(), 16000, 2, 11).unwrap();
        write_demo_bank(d2.path(), 16000, 2, 11).unwrap();
        for rel in [
            "targets/Dog/clip_00.wav",
            "targets/Speech/clip_01.wav",
            "non_targets/nt_03.wav",
            "backgrounds/bg_01.wav",
            "rirs/room_b/rir_02.wav",
            "bank.json",
        ] {
            let a = std::fs::read(d1.path().join(rel)).unwrap();
            let b = std::fs::read(d2.path().join(rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between identically seeded banks");
        }
        let other = tempfile::tempdir().unwrap();
        write_demo_bank(other.path(), 16000, 2, 12).unwrap();
        assert_ne!(
            std::fs::read(d1.path().join("targets/Dog/clip_00.wav")).unwrap(),
            std::fs::read(other.path().join("targets/Dog/clip_00.wav")).unwrap(),
            "different seeds must differ"
        );
    }

    #[test]
    fn rir_direct_path_is_unique_maximum() {
        let mut rng = derive_rng(3, "demo-rir-test", 0);
        for tail in [0.25, 0.8] {
            let h = impulse_response(&mut rng, 16000.0, tail);
            let (argmax, peak) = h
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(ai, am), (i, x)| {
                    if x.abs() > am {
                        (i, x.abs())
                    } else {
                        (ai, am)
                    }
                });
            assert!((40..80).contains(&argmax), "direct at {argmax}");
            assert!((peak - 0.9).abs() < 1e-9);
            let second = h
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != argmax)
                .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
            assert!(second < peak, "direct path must dominate");
        }
    }

    #[test]
    fn durations_cover_all_bins() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_bank(dir.path(), 16000, 5, 7).unwrap();
        let bank = crate::bank::load_bank(&manifest).unwrap();
        let durations: Vec<f64> = bank
            .targets
            .values()
            .flatten()
            .map(|c| c.duration_seconds())
            .collect();
        for (lo, hi) in [(0.0, 1.0), (1.0, 3.0), (3.0, 5.0), (5.0, 10.0)] {
            assert!(
                durations.iter().any(|&d| d >= lo && d < hi),
                "no clip in [{lo}, {hi})"
            );
        }
    }
}
