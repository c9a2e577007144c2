//! Source bank: the isolated sounds every suite is built from.
//!
//! A bank is pinned by a single human-editable JSON manifest listing
//! target clips per class, non-target clips, backgrounds, and room
//! impulse responses, all as paths relative to the manifest. Loading
//! validates every invariant up front so rendering never has to.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::BankError;

/// Role a clip plays during synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRole {
    Target,
    NonTarget,
    Background,
}

/// One decoded mono source recording.
#[derive(Debug, Clone)]
pub struct SourceClip {
    /// Manifest-relative path; unique within the bank.
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub role: SourceRole,
}

impl SourceClip {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One room impulse response.
#[derive(Debug, Clone)]
pub struct Rir {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// A simulated room: several impulse responses, one per source location.
#[derive(Debug, Clone)]
pub struct RoomSet {
    pub room_id: String,
    pub rirs: Vec<Rir>,
}

/// Parsed form of the bank manifest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankManifest {
    pub sample_rate: u32,
    /// Class labels the bank claims to cover. Defaults to the target map's
    /// keys; when present it must match them exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
    /// class label → manifest-relative clip paths
    pub targets: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub non_targets: Vec<String>,
    pub backgrounds: Vec<String>,
    #[serde(default)]
    pub rooms: Vec<RoomManifest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoomManifest {
    pub room_id: String,
    pub rirs: Vec<String>,
}

/// Fully loaded and validated source bank.
#[derive(Debug, Clone)]
pub struct SourceBank {
    pub sample_rate: u32,
    /// Sorted class labels; equals the target map's key set.
    pub vocabulary: Vec<String>,
    pub targets: BTreeMap<String, Vec<SourceClip>>,
    pub non_targets: Vec<SourceClip>,
    pub backgrounds: Vec<SourceClip>,
    pub rooms: Vec<RoomSet>,
    /// SHA-256 of the manifest file bytes, recorded into suite manifests.
    pub manifest_sha256: String,
}

impl SourceBank {
    /// Look up any clip (target, non-target, or background) by id.
    pub fn clip(&self, id: &str) -> Option<&SourceClip> {
        self.targets
            .values()
            .flatten()
            .chain(self.non_targets.iter())
            .chain(self.backgrounds.iter())
            .find(|c| c.id == id)
    }

    pub fn room(&self, room_id: &str) -> Option<&RoomSet> {
        self.rooms.iter().find(|r| r.room_id == room_id)
    }

    pub fn target_count(&self) -> usize {
        self.targets.values().map(Vec::len).sum()
    }
}

/// Load and validate a bank from its manifest file.
pub fn load_bank(manifest_path: &Path) -> Result<SourceBank, BankError> {
    let bytes = std::fs::read(manifest_path).map_err(|source| BankError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest_sha256 = hex(&Sha256::digest(&bytes));
    let manifest: BankManifest =
        serde_json::from_slice(&bytes).map_err(|e| BankError::Manifest {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    if manifest.sample_rate == 0 {
        return Err(BankError::Manifest {
            path: manifest_path.to_path_buf(),
            message: "sample_rate must be positive".to_string(),
        });
    }

    let mut targets = BTreeMap::new();
    for (label, paths) in &manifest.targets {
        if paths.is_empty() {
            return Err(BankError::EmptyClass {
                label: label.clone(),
            });
        }
        let clips = paths
            .iter()
            .map(|p| load_clip(base, p, manifest.sample_rate, SourceRole::Target))
            .collect::<Result<Vec<_>, _>>()?;
        targets.insert(label.clone(), clips);
    }

    let vocabulary: Vec<String> = targets.keys().cloned().collect();
    if let Some(declared) = &manifest.vocabulary {
        let mut declared_sorted = declared.clone();
        declared_sorted.sort();
        if declared_sorted != vocabulary {
            return Err(BankError::VocabularyMismatch {
                message: format!(
                    "declared [{}] but target classes are [{}]",
                    declared.join(", "),
                    vocabulary.join(", ")
                ),
            });
        }
    }

    if manifest.backgrounds.is_empty() {
        return Err(BankError::NoBackgrounds);
    }
    let backgrounds = manifest
        .backgrounds
        .iter()
        .map(|p| load_clip(base, p, manifest.sample_rate, SourceRole::Background))
        .collect::<Result<Vec<_>, _>>()?;
    let non_targets = manifest
        .non_targets
        .iter()
        .map(|p| load_clip(base, p, manifest.sample_rate, SourceRole::NonTarget))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rooms = Vec::new();
    for room in &manifest.rooms {
        if room.rirs.len() < 2 {
            return Err(BankError::TooFewRirs {
                room_id: room.room_id.clone(),
            });
        }
        let mut rirs = Vec::new();
        for p in &room.rirs {
            let full = base.join(p);
            let (samples, rate) = crate::wav::read_wav(&full)?;
            if rate != manifest.sample_rate {
                return Err(BankError::SampleRateMismatch {
                    path: full,
                    expected: manifest.sample_rate,
                    found: rate,
                });
            }
            if samples.iter().any(|x| !x.is_finite()) {
                return Err(BankError::NonFiniteSamples { path: full });
            }
            if samples.iter().all(|&x| x == 0.0) {
                return Err(BankError::SilentRir { path: full });
            }
            rirs.push(Rir {
                id: p.clone(),
                samples,
                sample_rate: rate,
            });
        }
        rooms.push(RoomSet {
            room_id: room.room_id.clone(),
            rirs,
        });
    }

    Ok(SourceBank {
        sample_rate: manifest.sample_rate,
        vocabulary,
        targets,
        non_targets,
        backgrounds,
        rooms,
        manifest_sha256,
    })
}

fn load_clip(
    base: &Path,
    rel: &str,
    expected_rate: u32,
    role: SourceRole,
) -> Result<SourceClip, BankError> {
    let full = base.join(rel);
    let (samples, rate) = crate::wav::read_wav(&full)?;
    if rate != expected_rate {
        return Err(BankError::SampleRateMismatch {
            path: full,
            expected: expected_rate,
            found: rate,
        });
    }
    if samples.is_empty() {
        return Err(BankError::EmptyClip { path: full });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(BankError::NonFiniteSamples { path: full });
    }
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 1.0 {
        return Err(BankError::PeakExceedsOne { path: full, peak });
    }
    Ok(SourceClip {
        id: rel.to_string(),
        samples,
        sample_rate: rate,
        role,
    })
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a byte slice as lowercase hex. Shared by manifest hashing.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn demo_bank_loads_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixtures::write_demo_bank(dir.path(), 16000, 5, 7).unwrap();
        let bank = load_bank(&manifest).unwrap();
        assert_eq!(bank.vocabulary.len(), 10);
        assert_eq!(bank.target_count(), 50);
        assert_eq!(bank.backgrounds.len(), 3);
        assert!(bank.non_targets.len() >= 4);
        assert_eq!(bank.rooms.len(), 2);
        for room in &bank.rooms {
            assert!(room.rirs.len() >= 2);
        }
        for clip in bank.targets.values().flatten() {
            assert!(clip.duration_seconds() > 0.0);
            assert!(clip.samples.iter().all(|x| x.is_finite() && x.abs() <= 1.0));
        }
    }

    #[test]
    fn loading_twice_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let a = load_bank(&manifest).unwrap();
        let b = load_bank(&manifest).unwrap();
        assert_eq!(a.manifest_sha256, b.manifest_sha256);
        assert_eq!(a.vocabulary, b.vocabulary);
        for (ca, cb) in a
            .targets
            .values()
            .flatten()
            .zip(b.targets.values().flatten())
        {
            assert_eq!(ca.id, cb.id);
            assert_eq!(ca.samples, cb.samples);
        }
    }

    #[test]
    fn rejects_sample_rate_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        // overwrite one referenced clip with a different-rate file
        let victim = dir.path().join("targets/Dog/clip_00.wav");
        crate::wav::write_wav(&victim, &[0.1; 8000], 8000, crate::wav::SampleFormat::Int16)
            .unwrap();
        let err = load_bank(&manifest).unwrap_err();
        assert!(err.to_string().contains("sample-rate mismatch"), "{err}");
    }

    #[test]
    fn rejects_empty_backgrounds() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let mut manifest: BankManifest =
            serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
        manifest.backgrounds.clear();
        std::fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        let err = load_bank(&manifest_path).unwrap_err();
        assert!(err.to_string().contains("backgrounds empty"), "{err}");
    }

    #[test]
    fn rejects_empty_class() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let mut manifest: BankManifest =
            serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
        manifest.targets.get_mut("Dog").unwrap().clear();
        std::fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        let err = load_bank(&manifest_path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("empty class") && msg.contains("Dog"), "{msg}");
    }

    #[test]
    fn rejects_vocabulary_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let mut manifest: BankManifest =
            serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
        manifest.vocabulary = Some(vec!["Dog".to_string(), "UnknownClass".to_string()]);
        std::fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            load_bank(&manifest_path).unwrap_err(),
            BankError::VocabularyMismatch { .. }
        ));
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let victim = dir.path().join("backgrounds/bg_00.wav");
        std::fs::remove_file(&victim).unwrap();
        let err = load_bank(&manifest_path).unwrap_err();
        assert!(err.to_string().contains("bg_00.wav"), "{err}");
    }

    #[test]
    fn rejects_room_with_one_rir() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let mut manifest: BankManifest =
            serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
        manifest.rooms[0].rirs.truncate(1);
        std::fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            load_bank(&manifest_path).unwrap_err(),
            BankError::TooFewRirs { .. }
        ));
    }

    #[test]
    fn clip_lookup_covers_all_roles() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = fixtures::write_demo_bank(dir.path(), 16000, 2, 7).unwrap();
        let bank = load_bank(&manifest).unwrap();
        let target_id = bank.targets["Dog"][0].id.clone();
        let bg_id = bank.backgrounds[0].id.clone();
        let nt_id = bank.non_targets[0].id.clone();
        assert_eq!(bank.clip(&target_id).unwrap().role, SourceRole::Target);
        assert_eq!(bank.clip(&bg_id).unwrap().role, SourceRole::Background);
        assert_eq!(bank.clip(&nt_id).unwrap().role, SourceRole::NonTarget);
        assert!(bank.clip("nope.wav").is_none());
    }
}
