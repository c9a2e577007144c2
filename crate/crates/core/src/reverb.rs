//! Room impulse response assignment, truncation, and convolution.
//!
//! Reverberation applies to events only, never to the background, and
//! never moves annotations: timings stay those of the dry placement. The
//! wet event is renormalized to the dry event's energy so the event/
//! background SNR axis stays orthogonal to the reverb axis.

use rand::seq::SliceRandom;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bank::{Rir, RoomSet};
use crate::error::ReverbError;
use crate::rng::derive_rng;
use crate::soundscape::SoundscapeSpec;

/// Reverberation applied to a clip's events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum ReverbMode {
    /// Dry.
    None,
    /// RIR truncated 200 ms after the direct path.
    Short,
    /// Full RIR.
    Long,
}

impl ReverbMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReverbMode::None => "none",
            ReverbMode::Short => "short",
            ReverbMode::Long => "long",
        }
    }
}

/// One event's impulse-response choice, recorded in the soundscape recipe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RirAssignment {
    pub room_id: String,
    /// Index into the room's RIR list.
    pub rir_index: usize,
}

/// Index of the maximum absolute amplitude (first occurrence on ties).
pub fn find_direct_path(rir: &Rir) -> Result<usize, ReverbError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in rir.samples.iter().enumerate() {
        let a = x.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    match best {
        Some((i, a)) if a > 0.0 => Ok(i),
        _ => Err(ReverbError::AllZeroRir {
            id: rir.id.clone(),
        }),
    }
}

/// Truncate per mode: `Short` keeps samples up to 200 ms after the direct
/// path (inclusive); `Long` and already-short RIRs pass through unchanged.
pub fn truncate_rir(rir: &Rir, mode: ReverbMode) -> Result<Rir, ReverbError> {
    match mode {
        ReverbMode::Long | ReverbMode::None => Ok(rir.clone()),
        ReverbMode::Short => {
            let direct = find_direct_path(rir)?;
            let keep = direct + (0.2 * rir.sample_rate as f64).round() as usize + 1;
            let mut out = rir.clone();
            out.samples.truncate(keep);
            Ok(out)
        }
    }
}

/// Full linear convolution; output length is `x.len() + h.len() - 1`.
///
/// Small products run the direct O(n·m) sum (exact); larger ones run a
/// zero-padded FFT. The path depends only on lengths, so outputs stay
/// deterministic for fixed inputs.
pub fn convolve_raw(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    if x.len().saturating_mul(h.len()) <= 1 << 15 {
        let mut y = vec![0.0f64; out_len];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &hj) in h.iter().enumerate() {
                y[i + j] += xi * hj;
            }
        }
        return y;
    }
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut b: Vec<Complex<f64>> = h
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    fft.process(&mut a);
    fft.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= *bi;
    }
    ifft.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Convolve an event with a RIR and renormalize the wet result to the dry
/// event's energy, so the wet event measured over the dry support keeps
/// the dry RMS level. A unit-impulse RIR is an exact no-op (or shift).
pub fn convolve(event: &[f64], event_rate: u32, rir: &Rir) -> Result<Vec<f64>, ReverbError> {
    if rir.sample_rate != event_rate {
        return Err(ReverbError::RateMismatch {
            event_rate,
            rir_rate: rir.sample_rate,
        });
    }
    if rir.samples.iter().all(|&x| x == 0.0) {
        return Err(ReverbError::AllZeroRir {
            id: rir.id.clone(),
        });
    }
    let mut wet = convolve_raw(event, &rir.samples);
    let dry_energy: f64 = event.iter().map(|&v| v * v).sum();
    let wet_energy: f64 = wet.iter().map(|&v| v * v).sum();
    if dry_energy > 0.0 && wet_energy > 0.0 {
        let g = (dry_energy / wet_energy).sqrt();
        if g != 1.0 {
            for v in wet.iter_mut() {
                *v *= g;
            }
        }
    }
    Ok(wet)
}

/// Choose a room and one RIR per event for clip `clip_index`.
///
/// Rooms rotate round-robin over a seeded shuffle, so no room repeats
/// within a batch until all rooms have been used. Events inside a clip
/// receive distinct RIRs while the room has unused ones, then reuse is
/// allowed. Assignments for a prefix of events do not change when more
/// events are appended.
pub fn assign_rirs(
    rooms: &[RoomSet],
    n_events: usize,
    master_seed: u64,
    clip_index: u64,
) -> Result<Vec<RirAssignment>, ReverbError> {
    if rooms.is_empty() {
        return Err(ReverbError::NoRooms);
    }
    let mut order: Vec<usize> = (0..rooms.len()).collect();
    order.shuffle(&mut derive_rng(master_seed, "reverb-room-order", 0));
    let room = &rooms[order[(clip_index as usize) % rooms.len()]];

    let mut rng = derive_rng(master_seed, "reverb-rir", clip_index);
    let n_rirs = room.rirs.len();
    let mut used = vec![false; n_rirs];
    let mut out = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let exhausted = used.iter().all(|&u| u);
        let k = loop {
            let k = rng.random_range(0..n_rirs);
            if exhausted || !used[k] {
                break k;
            }
        };
        used[k] = true;
        out.push(RirAssignment {
            room_id: room.room_id.clone(),
            rir_index: k,
        });
    }
    Ok(out)
}

/// Stamp a reverb mode onto a spec, assigning per-event RIRs when the
/// mode needs them. Assignments depend only on (rooms, seed, clip index),
/// so short and long renders of one clip share identical RIR choices.
pub fn assign_rirs_to_spec(
    spec: &SoundscapeSpec,
    rooms: &[RoomSet],
    mode: ReverbMode,
    master_seed: u64,
    clip_index: u64,
) -> Result<SoundscapeSpec, ReverbError> {
    let mut out = spec.clone();
    out.condition.reverb = mode;
    if mode == ReverbMode::None {
        for event in &mut out.events {
            event.rir = None;
        }
        return Ok(out);
    }
    let assignments = assign_rirs(rooms, out.events.len(), master_seed, clip_index)?;
    for (event, assignment) in out.events.iter_mut().zip(assignments) {
        event.rir = Some(assignment);
    }
    Ok(out)
}
