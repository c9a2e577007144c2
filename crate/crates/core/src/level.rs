//! Signal level measurement and gain arithmetic.
//!
//! Levels are RMS expressed in dB relative to full scale (dBFS). A silent
//! or empty signal has no finite level; functions that need one return an
//! error instead of propagating -inf or NaN into gain computations.

use crate::error::SynthError;

/// Background anchor level in dBFS RMS. Every rendered clip's background
/// is scaled to this level before events are mixed against it.
pub const BG_REF_DB: f64 = -30.0;

/// Root-mean-square amplitude. Zero for an empty slice.
pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = samples.iter().map(|&x| x * x).sum();
    (sum_sq / samples.len() as f64).sqrt()
}

/// RMS level in dBFS. Silent input yields `f64::NEG_INFINITY`, never NaN.
pub fn rms_level_db(samples: &[f64]) -> f64 {
    let r = rms(samples);
    if r <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * r.log10()
    }
}

/// Linear gain for a dB change.
pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// dB equivalent of a linear gain. Non-positive gain yields -inf.
pub fn gain_to_db(gain: f64) -> f64 {
    if gain <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * gain.log10()
    }
}

/// Linear gain that places an event at `snr_db` above a background.
///
/// `event_level_db` and `background_level_db` are the unscaled RMS levels
/// of the two signals. A silent event has no level to shift, so the gain
/// is undefined and the `id` is reported in the error.
pub fn gain_for_snr(
    snr_db: f64,
    event_level_db: f64,
    background_level_db: f64,
    id: &str,
) -> Result<f64, SynthError> {
    if event_level_db == f64::NEG_INFINITY {
        return Err(SynthError::SilentSource { id: id.to_string() });
    }
    Ok(db_to_gain(snr_db - (event_level_db - background_level_db)))
}
