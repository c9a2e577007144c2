//! Comparison artifacts: score tables, difference columns, grouped means,
//! factor breakdowns, and precision/recall exports.
//!
//! Tables move through CSV; charts are minimal self-contained SVG. Every
//! export is a deterministic byte stream given identical inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::annot::AnnotationSet;
use crate::error::AnalysisError;
use crate::metric::{match_events, ClassScore, MetricConfig, ScoreReport};

/// Score-column names accepted in tables: the generated suites, the grid
/// cells (plus their common shorthands), and the official evaluation set.
pub fn known_suite_column(name: &str) -> bool {
    matches!(
        name,
        "ref" | "60s" | "500ms" | "5500ms" | "9500ms" | "single" | "2020_eval"
    ) || matches!(name, "TNTSNR_inf" | "TNTSNR_15" | "TNTSNR_0")
        || matches!(name, "no_reverb" | "short_reverb" | "long_reverb")
        || (name.starts_with("TNTSNR_") && name.ends_with("_reverb"))
}

/// One system's tags and per-suite scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRow {
    pub system: String,
    pub tags: BTreeMap<String, String>,
    pub scores: BTreeMap<String, f64>,
}

/// Published or generated scores, one row per system.
///
/// CSV schema: header `system,<tag...>,<suite...>`; a column is a suite
/// (score) column when its name is a known suite name, and a tag
/// otherwise. Scores are percentages in [0, 100]; an empty cell means the
/// system was not run on that suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScoreTable {
    pub tag_columns: Vec<String>,
    pub suite_columns: Vec<String>,
    pub rows: Vec<SystemRow>,
}

impl SystemScoreTable {
    pub fn read_csv(path: &Path) -> Result<SystemScoreTable, AnalysisError> {
        let text = fs::read_to_string(path).map_err(|source| AnalysisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<SystemScoreTable, AnalysisError> {
        let err = |line: usize, message: String| AnalysisError::Csv {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty file".to_string()))?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns.first() != Some(&"system") {
            return Err(AnalysisError::Schema {
                message: format!("first column must be \"system\", got {:?}", columns.first()),
            });
        }
        let mut tag_columns = Vec::new();
        let mut suite_columns = Vec::new();
        for &name in &columns[1..] {
            if name.is_empty() {
                return Err(AnalysisError::Schema {
                    message: "empty column name".to_string(),
                });
            }
            if known_suite_column(name) {
                suite_columns.push(name.to_string());
            } else {
                tag_columns.push(name.to_string());
            }
        }
        let mut rows = Vec::new();
        for (index, line) in lines {
            let line_no = index + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != columns.len() {
                return Err(err(
                    line_no,
                    format!("expected {} cells, got {}", columns.len(), cells.len()),
                ));
            }
            let mut row = SystemRow {
                system: cells[0].to_string(),
                tags: BTreeMap::new(),
                scores: BTreeMap::new(),
            };
            if row.system.is_empty() {
                return Err(err(line_no, "empty system name".to_string()));
            }
            for (&name, &cell) in columns[1..].iter().zip(&cells[1..]) {
                if known_suite_column(name) {
                    if cell.is_empty() {
                        continue;
                    }
                    let score: f64 = cell.parse().map_err(|_| {
                        err(line_no, format!("column {name}: not a number: {cell:?}"))
                    })?;
                    if !(0.0..=100.0).contains(&score) {
                        return Err(err(
                            line_no,
                            format!("column {name}: score {score} outside [0, 100]"),
                        ));
                    }
                    row.scores.insert(name.to_string(), score);
                } else {
                    row.tags.insert(name.to_string(), cell.to_string());
                }
            }
            rows.push(row);
        }
        Ok(SystemScoreTable {
            tag_columns,
            suite_columns,
            rows,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("system");
        for t in &self.tag_columns {
            out.push(',');
            out.push_str(t);
        }
        for s in &self.suite_columns {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.system);
            for t in &self.tag_columns {
                out.push(',');
                out.push_str(row.tags.get(t).map(String::as_str).unwrap_or(""));
            }
            for s in &self.suite_columns {
                out.push(',');
                if let Some(v) = row.scores.get(s) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// One system's difference between two suites.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub system: String,
    pub score_a: f64,
    pub score_b: f64,
    /// (b − a) rounded to one decimal, computed on the table's values as
    /// given (published tables are usually already rounded).
    pub diff: f64,
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Per-system difference column (suite_b − suite_a), one decimal.
pub fn diff_table(
    table: &SystemScoreTable,
    suite_a: &str,
    suite_b: &str,
) -> Result<Vec<DiffRow>, AnalysisError> {
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let get = |suite: &str| {
            row.scores
                .get(suite)
                .copied()
                .ok_or_else(|| AnalysisError::MissingSuite {
                    system: row.system.clone(),
                    suite: suite.to_string(),
                })
        };
        let score_a = get(suite_a)?;
        let score_b = get(suite_b)?;
        out.push(DiffRow {
            system: row.system.clone(),
            score_a,
            score_b,
            diff: round1(score_b - score_a),
        });
    }
    Ok(out)
}

/// CSV render of a difference column: one decimal everywhere.
pub fn diff_table_csv(rows: &[DiffRow], suite_a: &str, suite_b: &str) -> String {
    let mut out = format!("system,{suite_a},{suite_b},{suite_b}-{suite_a}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.1},{:.1},{:.1}\n",
            r.system, r.score_a, r.score_b, r.diff
        ));
    }
    out
}

/// Unweighted per-group mean of every suite column. The group label is
/// the composite of the requested tag values, joined with "/".
pub fn group_mean(
    table: &SystemScoreTable,
    group_keys: &[String],
) -> Result<BTreeMap<String, BTreeMap<String, f64>>, AnalysisError> {
    if table.rows.is_empty() {
        return Err(AnalysisError::EmptyGroup {
            key: group_keys.join("/"),
        });
    }
    let mut groups: BTreeMap<String, Vec<&SystemRow>> = BTreeMap::new();
    for row in &table.rows {
        let mut parts = Vec::with_capacity(group_keys.len());
        for key in group_keys {
            let value = row
                .tags
                .get(key)
                .ok_or_else(|| AnalysisError::MissingTag {
                    system: row.system.clone(),
                    tag: key.clone(),
                })?;
            parts.push(value.clone());
        }
        groups.entry(parts.join("/")).or_default().push(row);
    }
    let mut out = BTreeMap::new();
    for (label, rows) in groups {
        let mut means = BTreeMap::new();
        for suite in &table.suite_columns {
            let values: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.scores.get(suite).copied())
                .collect();
            if values.is_empty() {
                continue;
            }
            means.insert(suite.clone(), values.iter().sum::<f64>() / values.len() as f64);
        }
        out.insert(label, means);
    }
    Ok(out)
}

/// CSV render of grouped means, full float precision.
pub fn group_mean_csv(
    means: &BTreeMap<String, BTreeMap<String, f64>>,
    suite_columns: &[String],
) -> String {
    let mut out = String::from("group");
    for s in suite_columns {
        out.push(',');
        out.push_str(s);
    }
    out.push('\n');
    for (label, per_suite) in means {
        out.push_str(label);
        for s in suite_columns {
            out.push(',');
            if let Some(v) = per_suite.get(s) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Event factor a breakdown partitions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownFactor {
    /// Reference event length in seconds.
    Duration,
    /// Reference event onset in seconds.
    Onset,
}

/// Bin layout for a factor breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownSpec {
    pub factor: BreakdownFactor,
    /// Strictly increasing edges; bin i is [e\[i\], e\[i+1\]), with the
    /// last bin closed on the right.
    pub edges: Vec<f64>,
}

impl BreakdownSpec {
    pub fn duration_default() -> BreakdownSpec {
        BreakdownSpec {
            factor: BreakdownFactor::Duration,
            edges: vec![0.0, 1.0, 3.0, 5.0, 10.0],
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.edges.len() < 2 {
            return Err(AnalysisError::Schema {
                message: "breakdown needs at least two bin edges".to_string(),
            });
        }
        if !self.edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(AnalysisError::Schema {
                message: format!("bin edges must be strictly increasing: {:?}", self.edges),
            });
        }
        Ok(())
    }

    /// Bin index for a factor value; None when outside all bins.
    pub fn bin_of(&self, value: f64) -> Option<usize> {
        let last = self.edges.len() - 1;
        if value == self.edges[last] {
            return Some(last - 1);
        }
        (0..last).find(|&i| self.edges[i] <= value && value < self.edges[i + 1])
    }

    pub fn bin_label(&self, index: usize) -> String {
        let close = if index + 2 == self.edges.len() { ']' } else { ')' };
        format!("[{}, {}{close}", self.edges[index], self.edges[index + 1])
    }
}

/// One bin's score report.
#[derive(Debug, Clone)]
pub struct BinReport {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub report: ScoreReport,
}

/// Score estimates against references, partitioned by a factor of the
/// reference events. A matched estimate inherits its reference's bin; an
/// unmatched estimate is binned by the same-class reference with the
/// nearest onset in its clip, or by its own factor value when the clip
/// has no same-class reference.
pub fn breakdown(
    reference: &AnnotationSet,
    estimate: &AnnotationSet,
    cfg: &MetricConfig,
    vocabulary: &[String],
    spec: &BreakdownSpec,
) -> Result<Vec<BinReport>, AnalysisError> {
    spec.validate()?;
    cfg.validate()?;
    let n_bins = spec.edges.len() - 1;
    let factor_value = |onset: crate::annot::Time, offset: crate::annot::Time| match spec.factor {
        BreakdownFactor::Duration => (offset - onset).as_seconds(),
        BreakdownFactor::Onset => onset.as_seconds(),
    };
    // per bin, per class: (tp, fp, fn)
    let mut counts: Vec<BTreeMap<&str, (u64, u64, u64)>> = vec![BTreeMap::new(); n_bins];
    let empty: &[crate::annot::EventAnnotation] = &[];

    for clip_id in reference.roster() {
        let refs = reference.events(clip_id);
        let ests = if estimate.has_clip(clip_id) {
            estimate.events(clip_id)
        } else {
            empty
        };
        for label in vocabulary {
            let refs_c: Vec<_> = refs.iter().filter(|e| &e.label == label).collect();
            let ests_c: Vec<_> = ests.iter().filter(|e| &e.label == label).collect();
            if refs_c.is_empty() && ests_c.is_empty() {
                continue;
            }
            let refs_owned: Vec<_> = refs_c.iter().map(|e| (*e).clone()).collect();
            let ests_owned: Vec<_> = ests_c.iter().map(|e| (*e).clone()).collect();
            let pairs = match_events(&refs_owned, &ests_owned, cfg);
            let bin_err = |value: f64, role: &str| AnalysisError::OutsideBins {
                message: format!(
                    "clip {clip_id}, class {label}: {role} factor value {value} \
                     outside bins {:?}",
                    spec.edges
                ),
            };
            let mut ref_matched = vec![false; refs_owned.len()];
            let mut est_matched = vec![false; ests_owned.len()];
            for &(ri, ei) in &pairs {
                ref_matched[ri] = true;
                est_matched[ei] = true;
                let value = factor_value(refs_owned[ri].onset, refs_owned[ri].offset);
                let bin = spec.bin_of(value).ok_or_else(|| bin_err(value, "reference"))?;
                counts[bin].entry(label).or_default().0 += 1;
            }
            for (ri, matched) in ref_matched.iter().enumerate() {
                if !matched {
                    let value = factor_value(refs_owned[ri].onset, refs_owned[ri].offset);
                    let bin = spec.bin_of(value).ok_or_else(|| bin_err(value, "reference"))?;
                    counts[bin].entry(label).or_default().2 += 1;
                }
            }
            for (ei, matched) in est_matched.iter().enumerate() {
                if !matched {
                    let est = &ests_owned[ei];
                    // false positives attach to the closest same-class
                    // reference; with none present, to their own value
                    let value = refs_owned
                        .iter()
                        .min_by_key(|r| r.onset.abs_diff(est.onset))
                        .map(|r| factor_value(r.onset, r.offset))
                        .unwrap_or_else(|| factor_value(est.onset, est.offset));
                    let bin = spec.bin_of(value).ok_or_else(|| bin_err(value, "estimate"))?;
                    counts[bin].entry(label).or_default().1 += 1;
                }
            }
        }
    }

    let clips_scored = reference.clip_count() as u64;
    Ok((0..n_bins)
        .map(|bin| {
            let classes: Vec<ClassScore> = vocabulary
                .iter()
                .map(|label| {
                    let (tp, fp, fn_) = counts[bin]
                        .get(label.as_str())
                        .copied()
                        .unwrap_or_default();
                    ClassScore::from_counts(label.clone(), tp, fp, fn_)
                })
                .collect();
            let macro_f1 =
                classes.iter().map(|c| c.f1).sum::<f64>() / classes.len().max(1) as f64;
            BinReport {
                label: spec.bin_label(bin),
                lo: spec.edges[bin],
                hi: spec.edges[bin + 1],
                report: ScoreReport {
                    classes,
                    macro_f1,
                    clips_scored,
                    operating_point: "single fixed threshold".to_string(),
                },
            }
        })
        .collect())
}

/// CSV render of a breakdown: one row per bin.
pub fn breakdown_csv(bins: &[BinReport]) -> String {
    let mut out = String::from("bin,lo,hi,tp,fp,fn,macro_f1\n");
    for b in bins {
        let tp: u64 = b.report.classes.iter().map(|c| c.true_positives).sum();
        let fp: u64 = b.report.classes.iter().map(|c| c.false_positives).sum();
        let fn_: u64 = b.report.classes.iter().map(|c| c.false_negatives).sum();
        out.push_str(&format!(
            "{},{},{},{tp},{fp},{fn_},{:.2}\n",
            b.label, b.lo, b.hi, b.report.macro_f1
        ));
    }
    out
}

/// Macro precision and recall of a report: unweighted class means,
/// consistent with the macro F-score.
pub fn macro_precision_recall(report: &ScoreReport) -> (f64, f64) {
    let n = report.classes.len().max(1) as f64;
    let p = report.classes.iter().map(|c| c.precision).sum::<f64>() / n;
    let r = report.classes.iter().map(|c| c.recall).sum::<f64>() / n;
    (p, r)
}

/// Per-system precision/recall points as CSV. Full float precision, so
/// re-parsing reproduces the values exactly.
pub fn precision_recall_csv(reports: &[(String, ScoreReport)]) -> String {
    let mut out = String::from("system,precision,recall\n");
    for (system, report) in reports {
        let (p, r) = macro_precision_recall(report);
        out.push_str(&format!("{system},{p},{r}\n"));
    }
    out
}

/// Minimal deterministic SVG scatter of per-system (precision, recall).
pub fn precision_recall_svg(reports: &[(String, ScoreReport)]) -> String {
    let (w, h, margin) = (640.0, 480.0, 60.0);
    let x = |p: f64| margin + (p / 100.0) * (w - 2.0 * margin);
    let y = |r: f64| (h - margin) - (r / 100.0) * (h - 2.0 * margin);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = h - margin,
        r = w - margin,
        t = margin
    ));
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{tick}</text>\n",
            x(tick),
            h - margin + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{tick}</text>\n",
            margin - 6.0,
            y(tick) + 3.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">precision</text>\n",
        w / 2.0,
        h - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">recall</text>\n",
        h / 2.0,
        h / 2.0
    ));
    for (system, report) in reports {
        let (p, r) = macro_precision_recall(report);
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"steelblue\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{system}</text>\n",
            x(p),
            y(r),
            x(p) + 6.0,
            y(r) - 6.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// 3x3 grid of macro F by condition, from cell-named scores
/// ("TNTSNR_<level>_<mode>_reverb"). Rows are TNTSNR levels, columns
/// reverb modes.
pub fn grid_matrix_csv(scores: &BTreeMap<String, f64>) -> Result<String, AnalysisError> {
    let levels = ["inf", "15", "0"];
    let modes = ["no", "short", "long"];
    let mut out = String::from("tntsnr,no_reverb,short_reverb,long_reverb\n");
    for level in levels {
        out.push_str(level);
        for mode in modes {
            let name = format!("TNTSNR_{level}_{mode}_reverb");
            let value = scores.get(&name).ok_or_else(|| AnalysisError::Schema {
                message: format!("missing grid cell {name}"),
            })?;
            out.push_str(&format!(",{value:.2}"));
        }
        out.push('\n');
    }
    Ok(out)
}
