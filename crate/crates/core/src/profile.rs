//! Generation profiles: the distributions soundscape recipes are drawn from.
//!
//! A profile fixes the clip duration, the foreground/background SNR range,
//! and per-class distributions (how often a class anchors a clip, how many
//! events it contributes, and which other classes tend to appear with it).
//! The shipped defaults are illustrative and are not measured statistics
//! of any public challenge set.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// Distribution parameters for one class.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassProfile {
    /// Probability that this class anchors a clip. Weights sum to 1 over
    /// the vocabulary.
    pub clip_weight: f64,
    /// events_per_clip[i] is the probability of i+1 events when the class
    /// is present. Sums to 1.
    pub events_per_clip: Vec<f64>,
    /// Probability that each named class also appears, given this class
    /// anchors the clip.
    #[serde(default)]
    pub cooccurrence: BTreeMap<String, f64>,
}

/// Everything sample_spec needs to draw a soundscape recipe.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenerationProfile {
    /// Free-form note about where the numbers come from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub vocabulary: Vec<String>,
    /// Seconds.
    pub clip_duration: f64,
    /// [low, high] in dB; foreground event to background SNR draws are
    /// uniform over this closed interval.
    pub fbsnr_range: [f64; 2],
    pub classes: BTreeMap<String, ClassProfile>,
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl GenerationProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |message: String| Err(SynthError::InvalidProfile { message });
        if !(self.clip_duration > 0.0) {
            return fail(format!("clip_duration must be > 0, got {}", self.clip_duration));
        }
        if !(self.fbsnr_range[0] <= self.fbsnr_range[1]) {
            return fail(format!(
                "fbsnr_range low {} exceeds high {}",
                self.fbsnr_range[0], self.fbsnr_range[1]
            ));
        }
        if self.vocabulary.is_empty() {
            return fail("vocabulary is empty".to_string());
        }
        let mut sorted = self.vocabulary.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.vocabulary.len() {
            return fail("vocabulary contains duplicates".to_string());
        }
        let class_keys: Vec<&String> = self.classes.keys().collect();
        if class_keys.len() != sorted.len() || !sorted.iter().all(|v| self.classes.contains_key(v))
        {
            return fail("classes map must cover exactly the vocabulary".to_string());
        }

        let mut weight_sum = 0.0;
        for (label, class) in &self.classes {
            if class.clip_weight < 0.0 {
                return fail(format!("{label}: negative clip_weight"));
            }
            weight_sum += class.clip_weight;
            if class.events_per_clip.is_empty() {
                return fail(format!("{label}: events_per_clip is empty"));
            }
            let mut count_sum = 0.0;
            for &w in &class.events_per_clip {
                if w < 0.0 {
                    return fail(format!("{label}: negative events_per_clip weight"));
                }
                count_sum += w;
            }
            if (count_sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return fail(format!(
                    "{label}: events_per_clip sums to {count_sum}, expected 1"
                ));
            }
            for (other, &p) in &class.cooccurrence {
                if !self.vocabulary.contains(other) {
                    return fail(format!("{label}: co-occurring class {other} not in vocabulary"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return fail(format!("{label}: co-occurrence with {other} is {p}"));
                }
            }
        }
        if (weight_sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return fail(format!("clip_weights sum to {weight_sum}, expected 1"));
        }
        Ok(())
    }

    /// Parse and validate a profile from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<GenerationProfile, SynthError> {
        let bytes = std::fs::read(path).map_err(|e| SynthError::InvalidProfile {
            message: format!("{}: {e}", path.display()),
        })?;
        let profile: GenerationProfile =
            serde_json::from_slice(&bytes).map_err(|e| SynthError::InvalidProfile {
                message: format!("{}: {e}", path.display()),
            })?;
        profile.validate()?;
        Ok(profile)
    }

    /// The same profile with a different clip duration; distributions are
    /// unchanged, so longer clips keep per-clip counts and thin out in
    /// event density.
    pub fn with_clip_duration(&self, clip_duration: f64) -> GenerationProfile {
        GenerationProfile {
            clip_duration,
            ..self.clone()
        }
    }

    /// Illustrative defaults over the demo vocabulary. Not statistics of
    /// any public dataset.
    pub fn default_demo() -> GenerationProfile {
        let vocabulary: Vec<String> = crate::fixtures::DEMO_CLASSES
            .iter()
            .map(|s| s.to_string())
            .collect();
        let spec: [(&str, f64, &[f64], &[(&str, f64)]); 10] = [
            ("Alarm_bell_ringing", 0.09, &[0.55, 0.30, 0.15], &[("Speech", 0.30)]),
            ("Blender", 0.08, &[0.70, 0.30], &[("Dishes", 0.25), ("Speech", 0.20)]),
            ("Cat", 0.10, &[0.50, 0.30, 0.20], &[("Speech", 0.25)]),
            ("Dishes", 0.12, &[0.35, 0.35, 0.30], &[("Speech", 0.35), ("Running_water", 0.25)]),
            ("Dog", 0.11, &[0.45, 0.35, 0.20], &[("Speech", 0.30), ("Cat", 0.10)]),
            ("Electric_shaver_toothbrush", 0.07, &[0.80, 0.20], &[("Running_water", 0.20)]),
            ("Frying", 0.08, &[0.75, 0.25], &[("Dishes", 0.40), ("Speech", 0.15)]),
            ("Running_water", 0.10, &[0.60, 0.25, 0.15], &[("Dishes", 0.30)]),
            ("Speech", 0.15, &[0.30, 0.40, 0.30], &[("Dishes", 0.20), ("Dog", 0.15), ("Cat", 0.10)]),
            ("Vacuum_cleaner", 0.10, &[0.85, 0.15], &[("Speech", 0.10)]),
        ];
        let classes = spec
            .iter()
            .map(|(label, weight, counts, cooc)| {
                (
                    label.to_string(),
                    ClassProfile {
                        clip_weight: *weight,
                        events_per_clip: counts.to_vec(),
                        cooccurrence: cooc
                            .iter()
                            .map(|(k, p)| (k.to_string(), *p))
                            .collect(),
                    },
                )
            })
            .collect();
        GenerationProfile {
            description: Some(
                "Illustrative default distributions for the demo vocabulary; \
                 not measured statistics of any public dataset."
                    .to_string(),
            ),
            vocabulary,
            clip_duration: 10.0,
            fbsnr_range: [6.0, 30.0],
            classes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_demo_validates() {
        let p = GenerationProfile::default_demo();
        p.validate().unwrap();
        assert_eq!(p.vocabulary.len(), 10);
        assert_eq!(p.clip_duration, 10.0);
        assert_eq!(p.fbsnr_range, [6.0, 30.0]);
    }

    #[test]
    fn json_round_trip() {
        let p = GenerationProfile::default_demo();
        let json = serde_json::to_string_pretty(&p).unwrap();
        let back: GenerationProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn file_load_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.json");
        let p = GenerationProfile::default_demo();
        std::fs::write(&path, serde_json::to_vec_pretty(&p).unwrap()).unwrap();
        let loaded = GenerationProfile::from_json_file(&path).unwrap();
        assert_eq!(loaded, p);
    }

    #[test]
    fn bad_weight_sum_rejected() {
        let mut p = GenerationProfile::default_demo();
        p.classes.get_mut("Dog").unwrap().clip_weight += 0.5;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("clip_weights sum"), "{err}");
    }

    #[test]
    fn bad_count_distribution_rejected() {
        let mut p = GenerationProfile::default_demo();
        p.classes.get_mut("Dog").unwrap().events_per_clip = vec![0.5, 0.4];
        assert!(p.validate().is_err());
    }

    #[test]
    fn unknown_cooccurrence_class_rejected() {
        let mut p = GenerationProfile::default_demo();
        p.classes
            .get_mut("Dog")
            .unwrap()
            .cooccurrence
            .insert("Helicopter".to_string(), 0.2);
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("Helicopter"), "{err}");
    }

    #[test]
    fn vocabulary_class_mismatch_rejected() {
        let mut p = GenerationProfile::default_demo();
        p.classes.remove("Dog");
        assert!(p.validate().is_err());
        let mut q = GenerationProfile::default_demo();
        q.vocabulary.push("Extra".to_string());
        assert!(q.validate().is_err());
    }

    #[test]
    fn inverted_snr_range_rejected() {
        let mut p = GenerationProfile::default_demo();
        p.fbsnr_range = [30.0, 6.0];
        assert!(p.validate().is_err());
    }

    #[test]
    fn duration_override_keeps_distributions() {
        let p = GenerationProfile::default_demo();
        let q = p.with_clip_duration(60.0);
        q.validate().unwrap();
        assert_eq!(q.clip_duration, 60.0);
        assert_eq!(q.classes, p.classes);
    }
}
