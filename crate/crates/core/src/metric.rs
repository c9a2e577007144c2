//! Collar-based event F-score over strong labels.
//!
//! An estimate matches a reference when labels agree, onsets differ by at
//! most a fixed collar, and offsets differ by at most a collar that grows
//! with event length. Per clip and class, true positives are counted with
//! a maximum-cardinality bipartite matching, so the score never depends on
//! input ordering. Class scores are averaged unweighted into the macro F.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annot::{AnnotationSet, EventAnnotation, Time};
use crate::error::MetricError;

/// Collar configuration for pair validity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Maximum |onset difference| for a valid pair.
    pub onset_collar: Time,
    /// Floor of the offset collar.
    pub offset_collar_min: Time,
    /// Offset collar grows to this fraction of the reference event length.
    pub offset_collar_pct: f64,
}

impl Default for MetricConfig {
    fn default() -> MetricConfig {
        MetricConfig {
            onset_collar: Time::from_millis(200),
            offset_collar_min: Time::from_millis(200),
            offset_collar_pct: 0.20,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.onset_collar <= Time::ZERO
            || self.offset_collar_min <= Time::ZERO
            || self.offset_collar_pct <= 0.0
            || self.offset_collar_pct >= 1.0
        {
            return Err(MetricError::InvalidConfig {
                message: format!(
                    "collars must be positive and pct in (0, 1), got onset {}, offset min {}, pct {}",
                    self.onset_collar, self.offset_collar_min, self.offset_collar_pct
                ),
            });
        }
        Ok(())
    }
}

/// How evaluate treats labels outside the configured vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownLabelPolicy {
    /// Fail with the offending label.
    Error,
    /// Drop such annotations from both sides.
    Ignore,
}

/// Offset collar for one reference event: the greater of the configured
/// floor and the configured fraction of the event's length.
pub fn offset_collar(reference: &EventAnnotation, cfg: &MetricConfig) -> Time {
    let scaled = Time((cfg.offset_collar_pct * reference.duration().0 as f64).round() as i64);
    scaled.max(cfg.offset_collar_min)
}

/// Pair validity: same label, onsets within the onset collar, offsets
/// within the reference event's offset collar. Both events must belong to
/// the same clip; callers match within one clip at a time.
pub fn is_valid_pair(
    reference: &EventAnnotation,
    estimate: &EventAnnotation,
    cfg: &MetricConfig,
) -> bool {
    reference.label == estimate.label
        && reference.onset.abs_diff(estimate.onset) <= cfg.onset_collar
        && reference.offset.abs_diff(estimate.offset) <= offset_collar(reference, cfg)
}

/// Maximum-cardinality matching between one clip's references and
/// estimates, returned as (reference index, estimate index) pairs.
///
/// Augmenting-path search per class; the matching size (hence tp/fp/fn)
/// is the bipartite maximum and does not depend on input order.
pub fn match_events(
    refs: &[EventAnnotation],
    ests: &[EventAnnotation],
    cfg: &MetricConfig,
) -> Vec<(usize, usize)> {
    let mut by_class: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, r) in refs.iter().enumerate() {
        by_class.entry(&r.label).or_default().0.push(i);
    }
    for (j, e) in ests.iter().enumerate() {
        by_class.entry(&e.label).or_default().1.push(j);
    }

    let mut pairs = Vec::new();
    for (_, (ref_idx, est_idx)) in by_class {
        if ref_idx.is_empty() || est_idx.is_empty() {
            continue;
        }
        let adjacency: Vec<Vec<usize>> = ref_idx
            .iter()
            .map(|&i| {
                est_idx
                    .iter()
                    .enumerate()
                    .filter(|&(_, &j)| is_valid_pair(&refs[i], &ests[j], cfg))
                    .map(|(v, _)| v)
                    .collect()
            })
            .collect();
        let mut est_owner: Vec<Option<usize>> = vec![None; est_idx.len()];
        for u in 0..ref_idx.len() {
            let mut visited = vec![false; est_idx.len()];
            augment(u, &adjacency, &mut est_owner, &mut visited);
        }
        for (v, owner) in est_owner.iter().enumerate() {
            if let Some(u) = owner {
                pairs.push((ref_idx[*u], est_idx[v]));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn augment(
    u: usize,
    adjacency: &[Vec<usize>],
    est_owner: &mut Vec<Option<usize>>,
    visited: &mut [bool],
) -> bool {
    for &v in &adjacency[u] {
        if visited[v] {
            continue;
        }
        visited[v] = true;
        match est_owner[v] {
            None => {
                est_owner[v] = Some(u);
                return true;
            }
            Some(owner) => {
                if augment(owner, adjacency, est_owner, visited) {
                    est_owner[v] = Some(u);
                    return true;
                }
            }
        }
    }
    false
}

/// Counts and derived percentages for one class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// Percentage in [0, 100]; 0 when the denominator is 0.
    pub precision: f64,
    /// Percentage in [0, 100]; 0 when the denominator is 0.
    pub recall: f64,
    /// Percentage in [0, 100]; 0 when precision + recall is 0.
    pub f1: f64,
}

impl ClassScore {
    pub fn from_counts(label: String, tp: u64, fp: u64, fn_: u64) -> ClassScore {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScore {
            label,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Full evaluation result at the single fixed operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    /// One entry per vocabulary class, in vocabulary order. Classes with
    /// no events on either side appear with zero scores.
    pub classes: Vec<ClassScore>,
    /// Unweighted mean of class F-scores, zero-score classes included.
    pub macro_f1: f64,
    pub clips_scored: u64,
    /// All scores are taken at one fixed decision point; no threshold
    /// sweep is involved.
    pub operating_point: String,
}

impl ScoreReport {
    /// Aligned plain-text table, one row per class plus the macro line.
    pub fn render_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.label.len())
            .chain(std::iter::once("class".len()))
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:width$}  {:>6} {:>6} {:>6} {:>10} {:>8} {:>8}",
            "class", "tp", "fp", "fn", "precision", "recall", "f1"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:width$}  {:>6} {:>6} {:>6} {:>10.2} {:>8.2} {:>8.2}",
                c.label,
                c.true_positives,
                c.false_positives,
                c.false_negatives,
                c.precision,
                c.recall,
                c.f1
            );
        }
        let _ = writeln!(out, "macro_f1: {:.2}", self.macro_f1);
        out
    }
}

/// Score `estimate` against `reference` over `vocabulary`.
///
/// Every clip in the reference roster is scored; estimate clips missing
/// from it are an error, estimate clips simply absent count as empty
/// predictions. Per-clip counting is order-independent, so clips are
/// scored in parallel and summed.
pub fn evaluate(
    reference: &AnnotationSet,
    estimate: &AnnotationSet,
    cfg: &MetricConfig,
    vocabulary: &[String],
    policy: UnknownLabelPolicy,
) -> Result<ScoreReport, MetricError> {
    cfg.validate()?;
    for clip in estimate.roster() {
        if !reference.has_clip(clip) {
            return Err(MetricError::UnknownClip {
                clip_id: clip.to_string(),
            });
        }
    }
    if policy == UnknownLabelPolicy::Error {
        for e in reference.iter_events().chain(estimate.iter_events()) {
            if !vocabulary.contains(&e.label) {
                return Err(MetricError::UnknownLabel {
                    label: e.label.clone(),
                });
            }
        }
    }

    let clips: Vec<&str> = reference.roster().collect();
    let in_vocab = |e: &&EventAnnotation| vocabulary.contains(&e.label);
    let counts: BTreeMap<String, (u64, u64, u64)> = clips
        .par_iter()
        .map(|clip| {
            let refs: Vec<EventAnnotation> = reference
                .events(clip)
                .iter()
                .filter(in_vocab)
                .cloned()
                .collect();
            let ests: Vec<EventAnnotation> = estimate
                .events(clip)
                .iter()
                .filter(in_vocab)
                .cloned()
                .collect();
            let pairs = match_events(&refs, &ests, cfg);
            let mut local: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
            for (i, _) in &pairs {
                local.entry(refs[*i].label.clone()).or_default().0 += 1;
            }
            let matched_refs: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let matched_ests: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            for (i, r) in refs.iter().enumerate() {
                if !matched_refs.contains(&i) {
                    local.entry(r.label.clone()).or_default().2 += 1;
                }
            }
            for (j, e) in ests.iter().enumerate() {
                if !matched_ests.contains(&j) {
                    local.entry(e.label.clone()).or_default().1 += 1;
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut acc, local| {
            for (label, (tp, fp, fn_)) in local {
                let slot = acc.entry(label).or_default();
                slot.0 += tp;
                slot.1 += fp;
                slot.2 += fn_;
            }
            acc
        });

    let classes: Vec<ClassScore> = vocabulary
        .iter()
        .map(|label| {
            let (tp, fp, fn_) = counts.get(label).copied().unwrap_or_default();
            ClassScore::from_counts(label.clone(), tp, fp, fn_)
        })
        .collect();
    let macro_f1 = if classes.is_empty() {
        0.0
    } else {
        classes.iter().map(|c| c.f1).sum::<f64>() / classes.len() as f64
    };
    Ok(ScoreReport {
        classes,
        macro_f1,
        clips_scored: clips.len() as u64,
        operating_point: "single fixed threshold".to_string(),
    })
}
