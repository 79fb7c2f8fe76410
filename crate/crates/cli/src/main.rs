mod output;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use teamcomm::analysis::{
    analyze_corpus, compare_moi, compare_teams, descriptive_summary, metric_rows, pair_frequencies, select_tags,
    survey_report, timeline, AnalysisConfig, Grouping, MetricsRow, PairSelection, SessionAnalysis, SurveyResponse,
};
use teamcomm::ingest::{is_session_dir, load_session_dir, write_session_dir, IngestConfig, PausePolicy};
use teamcomm::model::{validate_session, Session};
use teamcomm::moi::{MoiConfig, PhaseBounds};
use teamcomm::network::{NetworkTag, Normalization};
use teamcomm::patterns::{kneedle_elbow, select_frequent_pairs};
use teamcomm::stats::{Correction, TestMode};
use teamcomm::synth::{generate_corpus, SynthConfig, GENERATOR};
use teamcomm::timeline::ProgressWindow;

use output::{Format, Meta, Sink};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "teamcomm", version, about = "Communication-network analysis of team voice transcripts")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Length of a moment-of-interest window, in seconds.
    #[arg(long, global = true, default_value_t = 30)]
    moi_window_s: u64,
    /// Largest start gap between adjacent utterances, in seconds.
    #[arg(long, global = true, default_value_t = 5.0)]
    pairing_gap_s: f64,
    /// Players (killer + assisters) a kill needs to count as a moment of interest.
    #[arg(long, global = true, default_value_t = 3)]
    min_involved: usize,
    #[arg(long, global = true, default_value = "pairs")]
    normalization: Normalization,
    /// Phase boundaries in minutes.
    #[arg(long, global = true, default_value = "5,14,25")]
    phase_bounds: String,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "teamcomm-out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Clamp utterances that start inside a pause instead of dropping them.
    #[arg(long, global = true)]
    clamp_pauses: bool,
    /// Treat malformed input rows as errors instead of skipping them.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Args, Clone, Default)]
struct Selection {
    /// Comma-separated DA pairs to analyse (e.g. `D:C,Q:I,all`).
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<NetworkTag>,
    /// Analyse the k most frequent pairs instead of the knee selection.
    #[arg(long, conflicts_with = "pairs")]
    top_k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sensitivity: f64,
}

#[derive(Args, Clone)]
struct Stats {
    #[arg(long, default_value = "auto")]
    test_mode: String,
    #[arg(long, default_value = "none")]
    correction: String,
}

#[derive(Subcommand)]
enum Command {
    /// Validate session directories and report problems.
    IngestCheck { inputs: Vec<PathBuf> },
    /// Per-window network metrics and a descriptive summary.
    Analyze {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        selection: Selection,
    },
    /// Paired MoI vs. non-MoI comparison (Wilcoxon signed-rank).
    CompareMoi {
        /// Session directories; ignored when --metrics is given.
        inputs: Vec<PathBuf>,
        /// A metrics table written by `analyze`.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[command(flatten)]
        selection: Selection,
        #[command(flatten)]
        stats: Stats,
    },
    /// Between-cohort or between-team comparison of MoI networks.
    CompareTeams {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long, default_value = "cohort")]
        grouping: Grouping,
        #[command(flatten)]
        selection: Selection,
        #[command(flatten)]
        stats: Stats,
    },
    /// Progress curves, confidence bands and phase rates.
    Timeline {
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "all")]
        grouping: Grouping,
        /// Only sessions of this team.
        #[arg(long)]
        team: Option<String>,
        /// Count ±30 s around each progress point instead of a 30 s window.
        #[arg(long)]
        wide: bool,
        #[arg(long, default_value_t = 5)]
        bin_pct: usize,
        #[command(flatten)]
        selection: Selection,
    },
    /// DA-pair frequencies and the knee of the frequency curve.
    DaPairs {
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
    },
    /// Kruskal–Wallis over Likert survey responses (`group,Q1,...`).
    Survey {
        input: PathBuf,
        #[command(flatten)]
        stats: Stats,
    },
    /// Generate a synthetic corpus in the ingest file layout.
    Synth {
        #[arg(long, default_value_t = 1)]
        games: usize,
        /// TOML profile; missing fields take default values.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

fn parse_phase_bounds(s: &str) -> Result<PhaseBounds> {
    let parts: Vec<u64> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().context("phase bounds")?;
    let minutes: [u64; 3] = parts.try_into().map_err(|_| anyhow::anyhow!("phase bounds need three values"))?;
    Ok(PhaseBounds::from_minutes(minutes)?)
}

fn parse_test_mode(s: &str) -> Result<TestMode> {
    Ok(match s {
        "auto" => TestMode::Auto,
        "exact" => TestMode::Exact,
        "approx" => TestMode::Approx,
        other => bail!("unknown test mode '{other}'"),
    })
}

fn parse_correction(s: &str) -> Result<Correction> {
    Ok(match s {
        "none" => Correction::None,
        "bonferroni" => Correction::Bonferroni,
        "holm" => Correction::Holm,
        other => bail!("unknown correction '{other}'"),
    })
}

fn analysis_config(g: &Global, selection: Option<&Selection>, stats: Option<&Stats>) -> Result<AnalysisConfig> {
    let moi = MoiConfig { window_ms: g.moi_window_s * 1000, min_kill_involvement: g.min_involved, ..MoiConfig::default() };
    moi.validate()?;
    if !(g.pairing_gap_s.is_finite() && g.pairing_gap_s >= 0.0) {
        bail!("pairing gap must be a non-negative number of seconds");
    }
    let mut cfg = AnalysisConfig {
        moi,
        ingest: IngestConfig {
            pause_policy: if g.clamp_pauses { PausePolicy::ClampToPauseStart } else { PausePolicy::DropUtterancesDuringPause },
            strict: g.strict,
        },
        max_gap_ms: (g.pairing_gap_s * 1000.0).round() as u64,
        normalization: g.normalization,
        phase_bounds: parse_phase_bounds(&g.phase_bounds)?,
        ..AnalysisConfig::default()
    };
    if let Some(s) = selection {
        cfg.selection = if !s.pairs.is_empty() {
            PairSelection::Explicit { tags: s.pairs.clone() }
        } else if let Some(k) = s.top_k {
            PairSelection::Top { k }
        } else {
            PairSelection::Auto { sensitivity: s.sensitivity }
        };
    }
    if let Some(s) = stats {
        cfg.test_mode = parse_test_mode(&s.test_mode)?;
        cfg.correction = parse_correction(&s.correction)?;
    }
    Ok(cfg)
}

/// Session directories named directly or found one level below a named
/// directory, in sorted order.
fn session_dirs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if is_session_dir(p) {
            out.push(p.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(p)
            .with_context(|| format!("reading {}", p.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| is_session_dir(d))
            .collect();
        if found.is_empty() {
            bail!("{} is not a session directory and contains none", p.display());
        }
        found.sort();
        out.extend(found);
    }
    if out.is_empty() {
        bail!("no input sessions given");
    }
    Ok(out)
}

fn load_sessions(inputs: &[PathBuf], cfg: &AnalysisConfig) -> Result<Vec<Session>> {
    let mut sessions = Vec::new();
    let mut failures = 0;
    let dirs = session_dirs(inputs)?;
    for dir in &dirs {
        match load_session_dir(dir, cfg.ingest) {
            Ok(sync) => {
                if !sync.warnings.is_empty() {
                    eprintln!("{}: {} warning(s)", dir.display(), sync.warnings.len());
                }
                sessions.push(sync.session);
            }
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e}", dir.display());
            }
        }
    }
    if failures == dirs.len() {
        bail!("no session could be loaded");
    }
    Ok(sessions)
}

fn analyze_all(sessions: &[Session], cfg: &AnalysisConfig) -> Result<Vec<SessionAnalysis>> {
    let mut ok = Vec::new();
    for (s, r) in sessions.iter().zip(analyze_corpus(sessions, cfg)) {
        match r {
            Ok(a) => ok.push(a),
            Err(e) => eprintln!("{}: {e}", s.id),
        }
    }
    if ok.is_empty() {
        bail!("no session could be analysed");
    }
    Ok(ok)
}

fn rows_from_sessions(inputs: &[PathBuf], cfg: &AnalysisConfig) -> Result<(Vec<SessionAnalysis>, Vec<NetworkTag>, Vec<MetricsRow>)> {
    let sessions = load_sessions(inputs, cfg)?;
    let analyses = analyze_all(&sessions, cfg)?;
    let tags = select_tags(&pair_frequencies(&analyses), &cfg.selection)?;
    let rows = metric_rows(&analyses, &tags, cfg.normalization)?;
    Ok((analyses, tags, rows))
}

fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.with_context(|| format!("parsing {}", path.display()))).collect()
}

fn metrics_input(inputs: &[PathBuf], metrics: &Option<PathBuf>, cfg: &AnalysisConfig) -> Result<Vec<MetricsRow>> {
    match metrics {
        Some(p) => read_metrics(p),
        None => Ok(rows_from_sessions(inputs, cfg)?.2),
    }
}

#[derive(serde::Serialize)]
struct CheckRow {
    path: String,
    status: &'static str,
    utterances: usize,
    events: usize,
    warnings: usize,
    detail: String,
}

fn parse_survey(path: &Path) -> Result<(Vec<String>, Vec<SurveyResponse>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    if headers.len() < 2 {
        bail!("survey needs a group column and at least one question");
    }
    let questions: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut responses = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                errors.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let mut answers = Vec::new();
        for (q, field) in questions.iter().zip(rec.iter().skip(1)) {
            match field.parse::<u8>() {
                Ok(v) if (1..=7).contains(&v) => answers.push(v),
                _ => errors.push(format!("line {line}, {q}: '{field}' is not an integer from 1 to 7")),
            }
        }
        if answers.len() == questions.len() {
            responses.push(SurveyResponse { group: rec[0].to_string(), answers });
        }
    }
    if !errors.is_empty() {
        bail!("malformed survey rows:\n  {}", errors.join("\n  "));
    }
    Ok((questions, responses))
}

fn config_json(cfg: &AnalysisConfig, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "analysis": cfg,
        "conventions": {
            "wilcoxon_w": "min(T+, T-), zero differences dropped",
            "mann_whitney_u": "min(U_a, U_b)",
            "p_values": "two-sided",
        },
        "command": extra,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::IngestCheck { inputs } => {
            let cfg = analysis_config(g, None, None)?;
            let mut rows = Vec::new();
            let mut failed = 0;
            for dir in session_dirs(&inputs)? {
                let row = match load_session_dir(&dir, cfg.ingest) {
                    Ok(sync) => {
                        let violations = validate_session(&sync.session);
                        let status = if violations.is_empty() { "ok" } else { "invalid" };
                        failed += usize::from(!violations.is_empty());
                        CheckRow {
                            path: dir.display().to_string(),
                            status,
                            utterances: sync.session.utterances.len(),
                            events: sync.session.events.len(),
                            warnings: sync.warnings.len(),
                            detail: violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                        }
                    }
                    Err(e) => {
                        failed += 1;
                        CheckRow {
                            path: dir.display().to_string(),
                            status: "error",
                            utterances: 0,
                            events: 0,
                            warnings: 0,
                            detail: e.to_string(),
                        }
                    }
                };
                say!("{}\t{}\t{}", row.status, row.path, row.detail);
                rows.push(row);
            }
            let mut sink = Sink::new(g.out.clone(), g.format, Meta::new("ingest-check", config_json(&cfg, json!({}))));
            sink.table("ingest_check", &rows)?;
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Analyze { inputs, selection } => {
            let cfg = analysis_config(g, Some(&selection), None)?;
            let (analyses, tags, rows) = rows_from_sessions(&inputs, &cfg)?;
            let tag_names: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
            let mut sink = Sink::new(g.out.clone(), g.format, Meta::new("analyze", config_json(&cfg, json!({ "tags": tag_names }))));
            sink.table("metrics", &rows)?;
            sink.table("summary", &descriptive_summary(&analyses))?;
            say!("{} sessions, {} tags, {} metric rows", analyses.len(), tags.len(), rows.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareMoi { inputs, metrics, selection, stats } => {
            let cfg = analysis_config(g, Some(&selection), Some(&stats))?;
            let rows = metrics_input(&inputs, &metrics, &cfg)?;
            let report = compare_moi(&rows, cfg.test_mode)?;
            if report.tests.iter().all(|t| t.n1 == 0) {
                eprintln!("no MoI window has a usable paired control; the report is empty");
            }
            let mut sink = Sink::new(g.out.clone(), g.format, Meta::new("compare-moi", config_json(&cfg, json!({}))));
            sink.table("compare_moi", &report.tests)?;
            sink.table("compare_moi_groups", &report.groups)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareTeams { inputs, metrics, grouping, selection, stats } => {
            let cfg = analysis_config(g, Some(&selection), Some(&stats))?;
            let rows = metrics_input(&inputs, &metrics, &cfg)?;
            let report = compare_teams(&rows, grouping, cfg.test_mode, cfg.correction)?;
            let meta = Meta::new("compare-teams", config_json(&cfg, json!({ "grouping": grouping })));
            let mut sink = Sink::new(g.out.clone(), g.format, meta);
            sink.table("compare_teams", &report.tests)?;
            sink.table("compare_teams_groups", &report.groups)?;
            if grouping == Grouping::Team {
                sink.table("compare_teams_posthoc", &report.post_hoc)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Timeline { inputs, grouping, team, wide, bin_pct, selection } => {
            let mut cfg = analysis_config(g, Some(&selection), None)?;
            cfg.progress_window = if wide { ProgressWindow::Wide } else { ProgressWindow::Centered };
            cfg.bin_pct = bin_pct;
            let sessions = load_sessions(&inputs, &cfg)?;
            let mut analyses = analyze_all(&sessions, &cfg)?;
            if let Some(t) = &team {
                analyses.retain(|a| &a.team_label == t);
                if analyses.is_empty() {
                    bail!("no session of team '{t}'");
                }
            }
            let tags = select_tags(&pair_frequencies(&analyses), &cfg.selection)?;
            let report = timeline(&analyses, &tags, grouping, &cfg)?;
            let meta = Meta::new("timeline", config_json(&cfg, json!({ "grouping": grouping, "team": team })));
            let mut sink = Sink::new(g.out.clone(), g.format, meta);
            sink.table("timeline_bands", &report.bands)?;
            sink.table("timeline_curves", &report.curves)?;
            sink.table("phase_rates", &report.phase_rates)?;
            sink.table("phase_summary", &report.phase_summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DaPairs { inputs, sensitivity } => {
            let cfg = analysis_config(g, None, None)?;
            let sessions = load_sessions(&inputs, &cfg)?;
            let analyses = analyze_all(&sessions, &cfg)?;
            let table = pair_frequencies(&analyses);
            let sorted = table.sorted_desc();
            let curve: Vec<f64> = sorted.iter().map(|(_, c)| *c as f64).collect();
            let knee = if table.total() == 0 { None } else { kneedle_elbow(&curve, sensitivity)? };
            let selected = select_frequent_pairs(&table, None, sensitivity).unwrap_or_default();
            #[derive(serde::Serialize)]
            struct Row {
                rank: usize,
                pair: String,
                count: u64,
                selected: bool,
            }
            let rows: Vec<Row> = sorted
                .iter()
                .enumerate()
                .map(|(i, (p, c))| Row { rank: i + 1, pair: p.to_string(), count: *c, selected: selected.contains(p) })
                .collect();
            let meta = Meta::new("da-pairs", config_json(&cfg, json!({ "sensitivity": sensitivity, "knee": knee })));
            let mut sink = Sink::new(g.out.clone(), g.format, meta);
            sink.table("da_pairs", &rows)?;
            match knee {
                Some(k) => say!("knee at {k}: {}", selected.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")),
                None => say!("no knee found; pass --pairs or --top-k to analysis commands"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Survey { input, stats } => {
            let cfg = analysis_config(g, None, Some(&stats))?;
            let (questions, responses) = parse_survey(&input)?;
            let report = survey_report(&questions, &responses, cfg.test_mode, cfg.correction)?;
            let meta = Meta::new("survey", config_json(&cfg, json!({ "input": input.display().to_string() })));
            let mut sink = Sink::new(g.out.clone(), g.format, meta);
            sink.table("survey", &report.tests)?;
            sink.table("survey_groups", &report.groups)?;
            sink.table("survey_posthoc", &report.post_hoc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { games, profile } => {
            let mut cfg: SynthConfig = match &profile {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => SynthConfig::default(),
            };
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            let corpus = generate_corpus(&cfg, games)?;
            let mut truths = Vec::new();
            for (session, truth) in &corpus {
                write_session_dir(session, &g.out.join(&session.id))?;
                truths.push(json!({ "session": session.id, "truth": truth }));
            }
            let manifest = json!({ "generator": GENERATOR, "games": games, "config": cfg, "sessions": truths });
            output::write_atomic(&g.out.join("synth.json"), format!("{}\n", serde_json::to_string_pretty(&manifest)?).as_bytes())?;
            say!("wrote {games} session(s) to {}", g.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
