//! Command-line entry point: suite generation, scoring, and analysis.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 bank or profile
//! validation error, 4 annotation/prediction parse error, 5 analysis
//! schema mismatch.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use sedscape_core::analysis::{
    breakdown, diff_table, diff_table_csv, breakdown_csv, group_mean, group_mean_csv,
    precision_recall_csv, precision_recall_svg, BreakdownFactor, BreakdownSpec, SystemScoreTable,
};
use sedscape_core::annot::{AnnotationSet, Time};
use sedscape_core::bank::{load_bank, SourceBank};
use sedscape_core::error::{AnalysisError, AnnotError, BankError, MetricError, SuiteError};
use sedscape_core::fixtures::write_demo_bank;
use sedscape_core::metric::{evaluate, MetricConfig, ScoreReport, UnknownLabelPolicy};
use sedscape_core::profile::GenerationProfile;
use sedscape_core::suite::{
    plan_60s, plan_condition_grid, plan_onset_variants, plan_ref, plan_single, write_suite,
    SuitePlan, WriteOptions, ONSET_CLIPS, REF_CLIPS, SINGLE_CLIPS, SIXTY_SECOND_CLIPS,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_SCHEMA: u8 = 5;

#[derive(Parser)]
#[command(
    name = "sedscape",
    version,
    about = "Deterministic synthetic-soundscape generation and event-based scoring"
)]
struct Cli {
    /// JSON config file whose keys mirror the long option names;
    /// explicit flags win over file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build evaluation suites from a source bank.
    Generate(GenerateArgs),
    /// Score a predictions file against reference annotations.
    Evaluate(EvaluateArgs),
    /// Produce comparison tables and figure data from score CSVs.
    Analyze(AnalyzeArgs),
    /// Check a bank manifest and every referenced audio file.
    ValidateBank(ValidateBankArgs),
    /// Write a small synthetic bank for smoke tests and examples.
    DemoBank(DemoBankArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Bank manifest path.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Generation profile JSON; defaults to the built-in demo profile.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Master seed. Required: all randomness flows from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; one directory per suite is created inside.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suites to build: ref, 60s, onset, single, grid, or all.
    /// Repeatable; defaults to all.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Override the clip count of each selected protocol
    /// (grid inherits ref's count).
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads; defaults to all cores. Never changes output bytes.
    #[arg(long)]
    workers: Option<usize>,
    /// Skip audio rendering; specs and annotations are still written.
    #[arg(long)]
    no_audio: bool,
    /// Overwrite existing suite directories.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Reference: a suite directory (its annotations.tsv is used) or a
    /// TSV annotation file.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Predicted events, TSV: clip_id, onset, offset, label.
    #[arg(long)]
    estimate: Option<PathBuf>,
    /// Directory for report.json and report.txt (default: current).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Class vocabulary (comma separated); defaults to the classes
    /// present in the reference.
    #[arg(long, value_delimiter = ',')]
    vocabulary: Vec<String>,
    /// Onset collar in milliseconds (default 200).
    #[arg(long)]
    onset_collar_ms: Option<i64>,
    /// Offset collar floor in milliseconds (default 200).
    #[arg(long)]
    offset_collar_min_ms: Option<i64>,
    /// Offset collar as a fraction of the reference event length
    /// (default 0.2).
    #[arg(long)]
    offset_collar_pct: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// System score table CSV (header: system,<tags...>,<suites...>).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Emit a difference column between two suites: --diff A B.
    #[arg(long, num_args = 2, value_names = ["SUITE_A", "SUITE_B"])]
    diff: Vec<String>,
    /// Emit per-group means, grouping rows by these tag columns.
    #[arg(long, value_delimiter = ',')]
    group: Vec<String>,
    /// Score-report JSON files (from evaluate) for the
    /// precision/recall export.
    #[arg(long = "pr", value_name = "REPORT_JSON")]
    pr_reports: Vec<PathBuf>,
    /// Reference annotations for a duration breakdown of a predictions
    /// file: --breakdown REF_TSV EST_TSV.
    #[arg(long, num_args = 2, value_names = ["REF_TSV", "EST_TSV"])]
    breakdown: Vec<PathBuf>,
    /// Duration bin edges in seconds for --breakdown.
    #[arg(long, value_delimiter = ',')]
    duration_bins: Vec<f64>,
    /// Bin by event onset instead of duration in --breakdown.
    #[arg(long)]
    by_onset: bool,
    /// Directory for the emitted artifacts (default: current).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateBankArgs {
    /// Bank manifest path.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct DemoBankArgs {
    /// Directory to create the bank in.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample rate in Hz (default 16000).
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Isolated clips per target class (default 3).
    #[arg(long)]
    clips_per_class: Option<usize>,
    /// Seed for the bank's synthesized content (default 7).
    #[arg(long)]
    seed: Option<u64>,
}

/// File counterpart of the flags; any key may appear.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    bank: Option<PathBuf>,
    profile: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    suites: Option<Vec<String>>,
    n: Option<usize>,
    workers: Option<usize>,
    no_audio: Option<bool>,
    force: Option<bool>,
    reference: Option<PathBuf>,
    estimate: Option<PathBuf>,
    vocabulary: Option<Vec<String>>,
    table: Option<PathBuf>,
    sample_rate: Option<u32>,
    clips_per_class: Option<usize>,
    onset_collar_ms: Option<i64>,
    offset_collar_min_ms: Option<i64>,
    offset_collar_pct: Option<f64>,
}

fn fail(code: u8, message: impl Display) -> ! {
    eprintln!("error: {message}");
    process::exit(code as i32);
}

fn load_config(path: Option<&Path>) -> FileConfig {
    let Some(path) = path else {
        return FileConfig::default();
    };
    let text = fs::read_to_string(path)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())));
    serde_json::from_str(&text)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn bank_exit(e: &BankError) -> u8 {
    match e {
        BankError::Io { .. } => EXIT_CONFIG,
        _ => EXIT_VALIDATION,
    }
}

fn suite_exit(e: &SuiteError) -> u8 {
    match e {
        SuiteError::Synth(_)
        | SuiteError::Reverb(_)
        | SuiteError::NotDivisible { .. }
        | SuiteError::Protocol { .. } => EXIT_VALIDATION,
        _ => EXIT_CONFIG,
    }
}

fn annot_exit(e: &AnnotError) -> u8 {
    match e {
        AnnotError::Io { .. } => EXIT_CONFIG,
        _ => EXIT_PARSE,
    }
}

fn metric_exit(e: &MetricError) -> u8 {
    match e {
        MetricError::InvalidConfig { .. } => EXIT_CONFIG,
        _ => EXIT_PARSE,
    }
}

fn analysis_exit(e: &AnalysisError) -> u8 {
    match e {
        AnalysisError::Io { .. } => EXIT_CONFIG,
        _ => EXIT_SCHEMA,
    }
}

fn init_workers(workers: Option<usize>) {
    let Some(workers) = workers else { return };
    if workers == 0 {
        fail(EXIT_CONFIG, "--workers must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("worker pool: {e}")));
}

fn main() {
    let cli = Cli::parse();
    let file = load_config(cli.config.as_deref());
    match cli.command {
        Command::Generate(args) => cmd_generate(args, file),
        Command::Evaluate(args) => cmd_evaluate(args, file),
        Command::Analyze(args) => cmd_analyze(args, file),
        Command::ValidateBank(args) => cmd_validate_bank(args, file),
        Command::DemoBank(args) => cmd_demo_bank(args, file),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Protocol {
    Ref,
    Sixty,
    Onset,
    Single,
    Grid,
}

fn resolve_suites(names: &[String]) -> Vec<Protocol> {
    use Protocol::*;
    let mut selected = std::collections::BTreeSet::new();
    let all = [Ref, Sixty, Onset, Single, Grid];
    if names.is_empty() {
        return all.to_vec();
    }
    for name in names {
        match name.as_str() {
            "ref" => {
                selected.insert(Ref);
            }
            "60s" => {
                selected.insert(Sixty);
            }
            "onset" => {
                selected.insert(Onset);
            }
            "single" => {
                selected.insert(Single);
            }
            "grid" => {
                selected.insert(Grid);
            }
            "all" => selected.extend(all),
            other => fail(
                EXIT_CONFIG,
                format!("unknown suite {other:?}; expected ref, 60s, onset, single, grid, or all"),
            ),
        }
    }
    selected.into_iter().collect()
}

fn load_profile(path: Option<&Path>) -> GenerationProfile {
    match path {
        None => GenerationProfile::default_demo(),
        Some(path) => GenerationProfile::from_json_file(path).unwrap_or_else(|e| {
            fail(EXIT_VALIDATION, format!("{}: {e}", path.display()))
        }),
    }
}

fn cmd_generate(args: GenerateArgs, file: FileConfig) {
    let seed = args.seed.or(file.seed).unwrap_or_else(|| {
        fail(
            EXIT_CONFIG,
            "generate requires --seed; all randomness flows from it",
        )
    });
    let bank_path = args
        .bank
        .or(file.bank)
        .unwrap_or_else(|| fail(EXIT_CONFIG, "generate requires --bank"));
    let out = args
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("suites"));
    let suites = if args.suites.is_empty() {
        file.suites.unwrap_or_default()
    } else {
        args.suites
    };
    let n = args.n.or(file.n);
    init_workers(args.workers.or(file.workers));
    let options = WriteOptions {
        write_audio: !(args.no_audio || file.no_audio.unwrap_or(false)),
        force: args.force || file.force.unwrap_or(false),
    };

    let bank = load_bank(&bank_path).unwrap_or_else(|e| fail(bank_exit(&e), e));
    let profile = load_profile(args.profile.or(file.profile).as_deref());
    profile
        .validate()
        .unwrap_or_else(|e| fail(EXIT_VALIDATION, e));
    fs::create_dir_all(&out)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", out.display())));

    let selected = resolve_suites(&suites);
    let need_ref = selected.contains(&Protocol::Ref) || selected.contains(&Protocol::Grid);
    let ref_plan = if need_ref {
        Some(
            plan_ref(&profile, &bank, seed, n.unwrap_or(REF_CLIPS))
                .unwrap_or_else(|e| fail(suite_exit(&e), e)),
        )
    } else {
        None
    };

    let mut plans: Vec<SuitePlan> = Vec::new();
    for protocol in &selected {
        match protocol {
            Protocol::Ref => plans.push(ref_plan.clone().expect("planned above")),
            Protocol::Sixty => plans.push(
                plan_60s(&profile, &bank, seed, n.unwrap_or(SIXTY_SECOND_CLIPS))
                    .unwrap_or_else(|e| fail(suite_exit(&e), e)),
            ),
            Protocol::Onset => plans.extend(
                plan_onset_variants(&bank, seed, n.unwrap_or(ONSET_CLIPS))
                    .unwrap_or_else(|e| fail(suite_exit(&e), e)),
            ),
            Protocol::Single => plans.push(
                plan_single(&bank, seed, n.unwrap_or(SINGLE_CLIPS))
                    .unwrap_or_else(|e| fail(suite_exit(&e), e)),
            ),
            Protocol::Grid => plans.extend(
                plan_condition_grid(ref_plan.as_ref().expect("planned above"), &bank, seed)
                    .unwrap_or_else(|e| fail(suite_exit(&e), e)),
            ),
        }
    }

    for plan in &plans {
        let manifest = write_suite(plan, &bank, &out, seed, &options)
            .unwrap_or_else(|e| fail(suite_exit(&e), e));
        let seconds: f64 = plan
            .specs
            .iter()
            .map(|s| s.duration_samples as f64 / s.sample_rate as f64)
            .sum();
        println!(
            "suite {}: {} clips, {:.1} s audio",
            manifest.name, manifest.clip_count, seconds
        );
    }
}

fn read_annotations(path: &Path) -> AnnotationSet {
    let file = if path.is_dir() {
        path.join("annotations.tsv")
    } else {
        path.to_path_buf()
    };
    AnnotationSet::read_tsv(&file).unwrap_or_else(|e| fail(annot_exit(&e), e))
}

fn cmd_evaluate(args: EvaluateArgs, file: FileConfig) {
    let reference_path = args
        .reference
        .or(file.reference)
        .unwrap_or_else(|| fail(EXIT_CONFIG, "evaluate requires --reference"));
    let estimate_path = args
        .estimate
        .or(file.estimate)
        .unwrap_or_else(|| fail(EXIT_CONFIG, "evaluate requires --estimate"));
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));

    let reference = read_annotations(&reference_path);
    let estimate = read_annotations(&estimate_path);
    let vocabulary: Vec<String> = if args.vocabulary.is_empty() {
        file.vocabulary
            .unwrap_or_else(|| reference.labels().into_iter().collect())
    } else {
        args.vocabulary
    };
    if vocabulary.is_empty() {
        fail(
            EXIT_CONFIG,
            "empty vocabulary: the reference has no events and none was given",
        );
    }
    let cfg = MetricConfig {
        onset_collar: Time::from_millis(
            args.onset_collar_ms.or(file.onset_collar_ms).unwrap_or(200),
        ),
        offset_collar_min: Time::from_millis(
            args.offset_collar_min_ms
                .or(file.offset_collar_min_ms)
                .unwrap_or(200),
        ),
        offset_collar_pct: args
            .offset_collar_pct
            .or(file.offset_collar_pct)
            .unwrap_or(0.2),
    };
    let report = evaluate(
        &reference,
        &estimate,
        &cfg,
        &vocabulary,
        UnknownLabelPolicy::Error,
    )
    .unwrap_or_else(|e| fail(metric_exit(&e), e));

    fs::create_dir_all(&out)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", out.display())));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let json_path = out.join("report.json");
    fs::write(&json_path, json + "\n")
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", json_path.display())));
    let txt_path = out.join("report.txt");
    fs::write(&txt_path, report.render_table())
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", txt_path.display())));
    println!("macro_f1: {:.1}", report.macro_f1);
}

fn write_artifact(out: &Path, name: &str, content: &str) {
    let path = out.join(name);
    fs::write(&path, content)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())));
    println!("wrote {}", path.display());
}

fn cmd_analyze(args: AnalyzeArgs, file: FileConfig) {
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
    let table_path = args.table.or(file.table);
    let wants_table_op = !args.diff.is_empty() || !args.group.is_empty();
    if !wants_table_op && args.pr_reports.is_empty() && args.breakdown.is_empty() {
        fail(
            EXIT_CONFIG,
            "analyze needs at least one of --diff, --group, --pr, --breakdown",
        );
    }
    fs::create_dir_all(&out)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", out.display())));

    if wants_table_op {
        let table_path = table_path
            .unwrap_or_else(|| fail(EXIT_CONFIG, "--diff/--group require --table"));
        let table =
            SystemScoreTable::read_csv(&table_path).unwrap_or_else(|e| fail(analysis_exit(&e), e));
        if let [a, b] = args.diff.as_slice() {
            let rows = diff_table(&table, a, b).unwrap_or_else(|e| fail(analysis_exit(&e), e));
            let csv = diff_table_csv(&rows, a, b);
            print!("{csv}");
            write_artifact(&out, &format!("diff_{a}_{b}.csv"), &csv);
        }
        if !args.group.is_empty() {
            let means =
                group_mean(&table, &args.group).unwrap_or_else(|e| fail(analysis_exit(&e), e));
            let csv = group_mean_csv(&means, &table.suite_columns);
            print!("{csv}");
            write_artifact(&out, &format!("group_by_{}.csv", args.group.join("-")), &csv);
        }
    }

    if !args.pr_reports.is_empty() {
        let mut reports: Vec<(String, ScoreReport)> = Vec::new();
        for path in &args.pr_reports {
            let text = fs::read_to_string(path)
                .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())));
            let report: ScoreReport = serde_json::from_str(&text).unwrap_or_else(|e| {
                fail(EXIT_SCHEMA, format!("{}: {e}", path.display()))
            });
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            reports.push((name, report));
        }
        write_artifact(&out, "precision_recall.csv", &precision_recall_csv(&reports));
        write_artifact(&out, "precision_recall.svg", &precision_recall_svg(&reports));
    }

    if let [ref_path, est_path] = args.breakdown.as_slice() {
        let reference = read_annotations(ref_path);
        let estimate = read_annotations(est_path);
        let vocabulary: Vec<String> = reference.labels().into_iter().collect();
        let factor = if args.by_onset {
            BreakdownFactor::Onset
        } else {
            BreakdownFactor::Duration
        };
        let spec = if args.duration_bins.is_empty() {
            BreakdownSpec {
                factor,
                ..BreakdownSpec::duration_default()
            }
        } else {
            BreakdownSpec {
                factor,
                edges: args.duration_bins.clone(),
            }
        };
        let bins = breakdown(
            &reference,
            &estimate,
            &MetricConfig::default(),
            &vocabulary,
            &spec,
        )
        .unwrap_or_else(|e| fail(analysis_exit(&e), e));
        let csv = breakdown_csv(&bins);
        print!("{csv}");
        let name = match factor {
            BreakdownFactor::Duration => "breakdown_duration.csv",
            BreakdownFactor::Onset => "breakdown_onset.csv",
        };
        write_artifact(&out, name, &csv);
    }
}

fn bank_summary(bank: &SourceBank) -> String {
    let targets: usize = bank.target_count();
    format!(
        "bank OK: {} classes, {} target clips, {} non-targets, {} backgrounds, {} rooms @ {} Hz",
        bank.vocabulary.len(),
        targets,
        bank.non_targets.len(),
        bank.backgrounds.len(),
        bank.rooms.len(),
        bank.sample_rate
    )
}

fn cmd_validate_bank(args: ValidateBankArgs, file: FileConfig) {
    let bank_path = args
        .bank
        .or(file.bank)
        .unwrap_or_else(|| fail(EXIT_CONFIG, "validate-bank requires --bank"));
    let bank = load_bank(&bank_path).unwrap_or_else(|e| fail(bank_exit(&e), e));
    println!("{}", bank_summary(&bank));
}

fn cmd_demo_bank(args: DemoBankArgs, file: FileConfig) {
    let out = args
        .out
        .or(file.out)
        .unwrap_or_else(|| fail(EXIT_CONFIG, "demo-bank requires --out"));
    let sample_rate = args.sample_rate.or(file.sample_rate).unwrap_or(16000);
    let clips_per_class = args.clips_per_class.or(file.clips_per_class).unwrap_or(3);
    let seed = args.seed.or(file.seed).unwrap_or(7);
    fs::create_dir_all(&out)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, format!("{}: {e}", out.display())));
    let manifest = write_demo_bank(&out, sample_rate, clips_per_class, seed)
        .unwrap_or_else(|e| fail(bank_exit(&e), e));
    println!("wrote {}", manifest.display());
}
