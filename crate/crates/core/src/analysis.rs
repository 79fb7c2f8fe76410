//! The end-to-end pipeline: windows, per-window networks and metrics, and
//! the comparison reports built on top of them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IngestConfig;
use crate::model::{validate_session, Cohort, EventKind, GamePhase, Session, Violation, Window, WindowKind};
use crate::moi::{detect_mois, pair_non_moi, MoiConfig, MoiError, PhaseBounds};
use crate::network::{
    build_networks, extract_adjacency_pairs, metrics, AdjacencyPair, NetworkError, NetworkTag, Normalization,
    DEFAULT_MAX_GAP_MS,
};
use crate::patterns::{count_da_pairs, select_frequent_pairs, DaPairFrequencyTable, PatternError};
use crate::stats::{
    box_stats, kruskal_wallis, mann_whitney_u, post_hoc_pairwise, significance_stars, summarize, wilcoxon_signed_rank,
    Correction, Method, StatsError, TestMode, TestResult,
};
use crate::timeline::{aggregate_band, bin_curve, phase_rate, progress_curve, ProgressWindow, TimelineError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("session {id} is invalid: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSession { id: String, violations: Vec<Violation> },
    #[error(transparent)]
    Moi(#[from] MoiError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error("comparison needs at least 2 groups, found {0}")]
    TooFewGroups(usize),
    #[error("group '{group}' has fewer than 2 sessions for a confidence band")]
    BandNeedsTwoSessions { group: String },
}

/// How the analysed DA pairs are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PairSelection {
    /// Knee of the corpus-wide frequency curve.
    Auto { sensitivity: f64 },
    /// The `k` most frequent pairs.
    Top { k: usize },
    Explicit { tags: Vec<NetworkTag> },
}

impl Default for PairSelection {
    fn default() -> Self {
        PairSelection::Auto { sensitivity: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub moi: MoiConfig,
    pub ingest: IngestConfig,
    pub max_gap_ms: u64,
    pub normalization: Normalization,
    pub phase_bounds: PhaseBounds,
    pub selection: PairSelection,
    pub test_mode: TestMode,
    pub correction: Correction,
    pub progress_window: ProgressWindow,
    pub bin_pct: usize,
    pub ci_level: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            moi: MoiConfig::default(),
            ingest: IngestConfig::default(),
            max_gap_ms: DEFAULT_MAX_GAP_MS,
            normalization: Normalization::Pairs,
            phase_bounds: PhaseBounds::default(),
            selection: PairSelection::default(),
            test_mode: TestMode::Auto,
            correction: Correction::None,
            progress_window: ProgressWindow::Centered,
            bin_pct: 5,
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    /// Index of the MoI within its session; a control shares its MoI's id.
    pub pair_id: usize,
    pub paired: bool,
    pub kind: WindowKind,
    /// Kind of the event behind the MoI (for controls, of the paired MoI).
    pub event_kind: EventKind,
    pub phase: GamePhase,
    pub window: Window,
    pub utterance_count: usize,
    pub pairs: Vec<AdjacencyPair>,
    pub control_shift_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionAnalysis {
    pub session_id: String,
    pub team_label: String,
    pub cohort: Cohort,
    pub duration_ms: u64,
    pub utterance_count: usize,
    /// Adjacency pairs over the whole session.
    pub pairs: Vec<AdjacencyPair>,
    pub windows: Vec<WindowRecord>,
    pub unpaired_mois: usize,
}

fn midpoint(w: &Window) -> u64 {
    w.start_ms + (w.end_ms - w.start_ms) / 2
}

pub fn analyze_session(s: &Session, cfg: &AnalysisConfig) -> Result<SessionAnalysis, AnalysisError> {
    cfg.moi.validate()?;
    let violations = validate_session(s);
    if !violations.is_empty() {
        return Err(AnalysisError::InvalidSession { id: s.id.clone(), violations });
    }
    let pairs = extract_adjacency_pairs(&s.utterances, cfg.max_gap_ms)?;
    let mois = detect_mois(s, &cfg.moi);
    let mut windows = Vec::new();
    let mut unpaired = 0;
    for (pair_id, moi) in mois.iter().enumerate() {
        let control = pair_non_moi(s, moi, &mois, &cfg.moi).ok();
        unpaired += usize::from(control.is_none());
        windows.push(WindowRecord {
            pair_id,
            paired: control.is_some(),
            kind: WindowKind::Moi,
            event_kind: moi.source_event.kind,
            phase: cfg.phase_bounds.phase_of(midpoint(&moi.window)),
            window: moi.window,
            utterance_count: moi.utterances.len(),
            pairs: extract_adjacency_pairs(moi.utterances, cfg.max_gap_ms)?,
            control_shift_ms: None,
        });
        if let Some(p) = control {
            let c = p.control;
            windows.push(WindowRecord {
                pair_id,
                paired: true,
                kind: WindowKind::NonMoi,
                event_kind: moi.source_event.kind,
                phase: cfg.phase_bounds.phase_of(midpoint(&c.window)),
                window: c.window,
                utterance_count: c.utterances.len(),
                pairs: extract_adjacency_pairs(c.utterances, cfg.max_gap_ms)?,
                control_shift_ms: Some(c.shift_ms),
            });
        }
    }
    Ok(SessionAnalysis {
        session_id: s.id.clone(),
        team_label: s.team_label.clone(),
        cohort: s.cohort,
        duration_ms: s.duration_ms,
        utterance_count: s.utterances.len(),
        pairs,
        windows,
        unpaired_mois: unpaired,
    })
}

/// Analyses sessions in parallel; results keep the input order.
pub fn analyze_corpus(sessions: &[Session], cfg: &AnalysisConfig) -> Vec<Result<SessionAnalysis, AnalysisError>> {
    sessions.par_iter().map(|s| analyze_session(s, cfg)).collect()
}

/// DA-pair counts over whole sessions.
pub fn pair_frequencies(analyses: &[SessionAnalysis]) -> DaPairFrequencyTable {
    count_da_pairs(analyses.iter().map(|a| a.pairs.as_slice()))
}

/// The tags to report, in frequency order, followed by `All`.
pub fn select_tags(table: &DaPairFrequencyTable, selection: &PairSelection) -> Result<Vec<NetworkTag>, AnalysisError> {
    let tags = match selection {
        PairSelection::Explicit { tags } => return Ok(tags.clone()),
        PairSelection::Auto { sensitivity } => select_frequent_pairs(table, None, *sensitivity)?,
        PairSelection::Top { k } => select_frequent_pairs(table, Some(*k), 1.0)?,
    };
    Ok(tags.into_iter().map(NetworkTag::Pair).chain([NetworkTag::All]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub session: String,
    pub team: String,
    pub cohort: Cohort,
    pub pair_id: usize,
    pub paired: bool,
    pub kind: WindowKind,
    pub event_kind: EventKind,
    pub phase: GamePhase,
    pub start_ms: u64,
    pub end_ms: u64,
    pub tag: NetworkTag,
    pub normalization: Normalization,
    pub rho: f64,
    pub c_od: f64,
    pub c_id: f64,
    /// Centralization normalizer: pair count or utterance count.
    pub u: u64,
    pub utterances: usize,
    pub degenerate: bool,
}

/// One row per window and tag.
pub fn metric_rows(
    analyses: &[SessionAnalysis],
    tags: &[NetworkTag],
    normalization: Normalization,
) -> Result<Vec<MetricsRow>, AnalysisError> {
    let da_tags: Vec<_> = tags
        .iter()
        .filter_map(|t| match t {
            NetworkTag::Pair(p) => Some(*p),
            NetworkTag::All => None,
        })
        .collect();
    let mut rows = Vec::new();
    for a in analyses {
        for w in &a.windows {
            let nets = build_networks(&w.pairs, &da_tags);
            for tag in tags {
                let m = metrics(&nets[tag], normalization, Some(w.utterance_count))?;
                let u = match normalization {
                    Normalization::Pairs => m.pair_count,
                    Normalization::Utterances => w.utterance_count as u64,
                };
                rows.push(MetricsRow {
                    session: a.session_id.clone(),
                    team: a.team_label.clone(),
                    cohort: a.cohort,
                    pair_id: w.pair_id,
                    paired: w.paired,
                    kind: w.kind,
                    event_kind: w.event_kind,
                    phase: w.phase,
                    start_ms: w.window.start_ms,
                    end_ms: w.window.end_ms,
                    tag: *tag,
                    normalization,
                    rho: m.rho,
                    c_od: m.c_od,
                    c_id: m.c_id,
                    u,
                    utterances: w.utterance_count,
                    degenerate: m.degenerate,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rho,
    COd,
    CId,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rho, Metric::COd, Metric::CId];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rho => "rho",
            Metric::COd => "c_od",
            Metric::CId => "c_id",
        }
    }

    pub fn of(self, row: &MetricsRow) -> f64 {
        match self {
            Metric::Rho => row.rho,
            Metric::COd => row.c_od,
            Metric::CId => row.c_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub grouping: String,
    pub group: String,
    pub sessions: usize,
    pub mois: usize,
    pub mois_per_game_mean: Option<f64>,
    pub mois_per_game_sd: Option<f64>,
    /// Session utterances for `overall`/`team`; utterances inside the
    /// group's MoIs for `event_kind`/`phase`.
    pub utterances: usize,
    pub utterances_per_game_mean: Option<f64>,
    pub utterances_per_game_sd: Option<f64>,
}

fn summary_row(grouping: &str, group: &str, per_session: &[(usize, usize)]) -> SummaryRow {
    let mois: Vec<f64> = per_session.iter().map(|p| p.0 as f64).collect();
    let utt: Vec<f64> = per_session.iter().map(|p| p.1 as f64).collect();
    let (m, u) = (summarize(&mois), summarize(&utt));
    SummaryRow {
        grouping: grouping.into(),
        group: group.into(),
        sessions: per_session.len(),
        mois: per_session.iter().map(|p| p.0).sum(),
        mois_per_game_mean: m.mean,
        mois_per_game_sd: m.sd,
        utterances: per_session.iter().map(|p| p.1).sum(),
        utterances_per_game_mean: u.mean,
        utterances_per_game_sd: u.sd,
    }
}

/// MoI and utterance counts overall, per team, per event kind and per phase.
pub fn descriptive_summary(analyses: &[SessionAnalysis]) -> Vec<SummaryRow> {
    let mois = |a: &SessionAnalysis| a.windows.iter().filter(|w| w.kind == WindowKind::Moi).count();
    let mut out = vec![summary_row(
        "overall",
        "all",
        &analyses.iter().map(|a| (mois(a), a.utterance_count)).collect::<Vec<_>>(),
    )];
    let mut teams: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for a in analyses {
        teams.entry(&a.team_label).or_default().push((mois(a), a.utterance_count));
    }
    out.extend(teams.iter().map(|(t, v)| summary_row("team", t, v)));
    let category = |f: &dyn Fn(&WindowRecord) -> bool| -> Vec<(usize, usize)> {
        analyses
            .iter()
            .map(|a| {
                let ws = a.windows.iter().filter(|w| w.kind == WindowKind::Moi && f(w));
                ws.fold((0, 0), |(n, u), w| (n + 1, u + w.utterance_count))
            })
            .collect()
    };
    for kind in EventKind::ALL {
        out.push(summary_row("event_kind", kind.as_str(), &category(&|w| w.event_kind == kind)));
    }
    for phase in GamePhase::ALL {
        out.push(summary_row("phase", phase.as_str(), &category(&|w| w.phase == phase)));
    }
    out
}

/// One statistical test in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub comparison: String,
    pub pair: String,
    pub metric: String,
    pub stat: Option<f64>,
    pub p: Option<f64>,
    pub method: Option<Method>,
    /// Paired: pairs used. Two groups: first group size. More: group count.
    pub n1: usize,
    /// Paired: nonzero differences. Two groups: second group size. More:
    /// total observations.
    pub n2: usize,
    pub stars: String,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatRow {
    pub pair: String,
    pub metric: String,
    pub group: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHocRow {
    pub pair: String,
    pub metric: String,
    pub group_a: String,
    pub group_b: String,
    pub u: f64,
    pub p: f64,
    pub adjusted_p: f64,
    pub method: Method,
    pub stars: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tests: Vec<TestRow>,
    pub groups: Vec<GroupStatRow>,
    pub post_hoc: Vec<PostHocRow>,
}

fn test_row(comparison: &str, pair: &str, metric: &str, r: &TestResult, n1: usize, n2: usize) -> TestRow {
    TestRow {
        comparison: comparison.into(),
        pair: pair.into(),
        metric: metric.into(),
        stat: Some(r.statistic),
        p: Some(r.p_value),
        method: Some(r.method),
        n1,
        n2,
        stars: significance_stars(r.p_value).into(),
        degenerate: r.degenerate,
    }
}

fn group_stat(pair: &str, metric: &str, group: &str, values: &[f64]) -> GroupStatRow {
    let s = summarize(values);
    GroupStatRow { pair: pair.into(), metric: metric.into(), group: group.into(), n: s.count, mean: s.mean, sd: s.sd }
}

fn tags_in_order(rows: &[MetricsRow]) -> Vec<NetworkTag> {
    let mut seen = Vec::new();
    for r in rows {
        if !seen.contains(&r.tag) {
            seen.push(r.tag);
        }
    }
    seen
}

/// Paired MoI vs. control comparison per tag and metric (Wilcoxon).
///
/// A pair is used only when both windows have a non-degenerate network for
/// that tag.
pub fn compare_moi(rows: &[MetricsRow], mode: TestMode) -> Result<Report, AnalysisError> {
    let mut report = Report::default();
    let mut index: BTreeMap<(&str, usize, NetworkTag, bool), &MetricsRow> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.paired) {
        index.insert((&r.session, r.pair_id, r.tag, r.kind == WindowKind::Moi), r);
    }
    for tag in tags_in_order(rows) {
        let label = tag.to_string();
        let joined: Vec<(&MetricsRow, &MetricsRow)> = index
            .iter()
            .filter(|((_, _, t, is_moi), _)| *t == tag && *is_moi)
            .filter_map(|((s, id, t, _), m)| index.get(&(*s, *id, *t, false)).map(|c| (*m, *c)))
            .filter(|(m, c)| !m.degenerate && !c.degenerate)
            .collect();
        for metric in Metric::ALL {
            let pairs: Vec<(f64, f64)> = joined.iter().map(|(m, c)| (metric.of(m), metric.of(c))).collect();
            let moi: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ctl: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            report.groups.push(group_stat(&label, metric.as_str(), "moi", &moi));
            report.groups.push(group_stat(&label, metric.as_str(), "non_moi", &ctl));
            if pairs.is_empty() {
                report.tests.push(TestRow {
                    comparison: "moi_vs_non_moi".into(),
                    pair: label.clone(),
                    metric: metric.as_str().into(),
                    stat: None,
                    p: None,
                    method: None,
                    n1: 0,
                    n2: 0,
                    stars: String::new(),
                    degenerate: true,
                });
                continue;
            }
            let r = wilcoxon_signed_rank(&pairs, mode)?;
            let mut row = test_row("moi_vs_non_moi", &label, metric.as_str(), &r, r.n[0], r.n[1]);
            row.degenerate |= pairs.len() < 2;
            report.tests.push(row);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    All,
    Cohort,
    Team,
}

impl Grouping {
    fn key(self, team: &str, cohort: Cohort) -> String {
        match self {
            Grouping::All => "all".into(),
            Grouping::Cohort => cohort.as_str().into(),
            Grouping::Team => team.into(),
        }
    }
}

impl std::str::FromStr for Grouping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Grouping::All),
            "cohort" => Ok(Grouping::Cohort),
            "team" => Ok(Grouping::Team),
            other => Err(format!("unknown grouping '{other}'")),
        }
    }
}

/// Two groups: Mann–Whitney. More (or `force_kw`): Kruskal–Wallis plus
/// pairwise post hoc tests.
#[allow(clippy::too_many_arguments)]
pub fn compare_groups(
    report: &mut Report,
    comparison: &str,
    pair: &str,
    metric: &str,
    groups: &[(String, Vec<f64>)],
    force_kw: bool,
    mode: TestMode,
    correction: Correction,
) -> Result<(), AnalysisError> {
    for (g, v) in groups {
        report.groups.push(group_stat(pair, metric, g, v));
    }
    if groups.len() == 2 && !force_kw {
        let r = mann_whitney_u(&groups[0].1, &groups[1].1, mode)?;
        report.tests.push(test_row(comparison, pair, metric, &r, groups[0].1.len(), groups[1].1.len()));
        return Ok(());
    }
    let values: Vec<&[f64]> = groups.iter().map(|g| g.1.as_slice()).collect();
    let r = kruskal_wallis(&values)?;
    let total = values.iter().map(|v| v.len()).sum();
    report.tests.push(test_row(comparison, pair, metric, &r, groups.len(), total));
    if groups.len() >= 3 {
        for ph in post_hoc_pairwise(&values, mode, correction)? {
            report.post_hoc.push(PostHocRow {
                pair: pair.into(),
                metric: metric.into(),
                group_a: groups[ph.a].0.clone(),
                group_b: groups[ph.b].0.clone(),
                u: ph.result.statistic,
                p: ph.result.p_value,
                adjusted_p: ph.adjusted_p,
                method: ph.result.method,
                stars: significance_stars(ph.adjusted_p).into(),
            });
        }
    }
    Ok(())
}

/// Between-cohort (Mann–Whitney) or between-team (Kruskal–Wallis with post
/// hoc tests) comparison of non-degenerate MoI networks. Team mode adds an
/// `average` pair per metric: each team's mean over all its pair-tag rows.
pub fn compare_teams(
    rows: &[MetricsRow],
    grouping: Grouping,
    mode: TestMode,
    correction: Correction,
) -> Result<Report, AnalysisError> {
    let moi: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == WindowKind::Moi && !r.degenerate).collect();
    let keys: std::collections::BTreeSet<String> = moi.iter().map(|r| grouping.key(&r.team, r.cohort)).collect();
    if keys.len() < 2 {
        return Err(AnalysisError::TooFewGroups(keys.len()));
    }
    let comparison = match grouping {
        Grouping::Team => "between_teams",
        _ => "between_cohorts",
    };
    let mut report = Report::default();
    for tag in tags_in_order(rows) {
        for metric in Metric::ALL {
            let groups: Vec<(String, Vec<f64>)> = keys
                .iter()
                .map(|k| {
                    let v = moi
                        .iter()
                        .filter(|r| r.tag == tag && grouping.key(&r.team, r.cohort) == *k)
                        .map(|r| metric.of(r))
                        .collect();
                    (k.clone(), v)
                })
                .collect();
            if groups.iter().any(|g| g.1.is_empty()) {
                report.tests.push(TestRow {
                    comparison: comparison.into(),
                    pair: tag.to_string(),
                    metric: metric.as_str().into(),
                    stat: None,
                    p: None,
                    method: None,
                    n1: groups.len(),
                    n2: groups.iter().map(|g| g.1.len()).sum(),
                    stars: String::new(),
                    degenerate: true,
                });
                for (g, v) in &groups {
                    report.groups.push(group_stat(&tag.to_string(), metric.as_str(), g, v));
                }
                continue;
            }
            let force_kw = grouping == Grouping::Team;
            compare_groups(&mut report, comparison, &tag.to_string(), metric.as_str(), &groups, force_kw, mode, correction)?;
        }
    }
    if grouping == Grouping::Team {
        for metric in Metric::ALL {
            for k in &keys {
                let v: Vec<f64> = moi
                    .iter()
                    .filter(|r| matches!(r.tag, NetworkTag::Pair(_)) && grouping.key(&r.team, r.cohort) == *k)
                    .map(|r| metric.of(r))
                    .collect();
                report.groups.push(group_stat("average", metric.as_str(), k, &v));
            }
        }
    }
    Ok(report)
}

/// Survey answers of one respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub group: String,
    pub answers: Vec<u8>,
}

/// Per-question Kruskal–Wallis across groups, with post hoc tests.
pub fn survey_report(
    questions: &[String],
    responses: &[SurveyResponse],
    mode: TestMode,
    correction: Correction,
) -> Result<Report, AnalysisError> {
    let mut by_group: BTreeMap<&str, Vec<&SurveyResponse>> = BTreeMap::new();
    for r in responses {
        by_group.entry(&r.group).or_default().push(r);
    }
    if by_group.len() < 2 {
        return Err(AnalysisError::TooFewGroups(by_group.len()));
    }
    let mut report = Report::default();
    for (qi, q) in questions.iter().enumerate() {
        let groups: Vec<(String, Vec<f64>)> = by_group
            .iter()
            .map(|(g, rs)| (g.to_string(), rs.iter().map(|r| f64::from(r.answers[qi])).collect()))
            .collect();
        compare_groups(&mut report, "survey", q, "likert", &groups, true, mode, correction)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub group: String,
    pub tag: NetworkTag,
    pub bin_start_pct: usize,
    pub mean: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub session: String,
    pub group: String,
    pub tag: NetworkTag,
    pub bin_start_pct: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRateRow {
    pub session: String,
    pub group: String,
    pub tag: NetworkTag,
    pub phase: GamePhase,
    pub rate_per_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoxRow {
    pub group: String,
    pub tag: NetworkTag,
    pub phase: GamePhase,
    pub n: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimelineReport {
    pub bands: Vec<BandRow>,
    pub curves: Vec<CurveRow>,
    pub phase_rates: Vec<PhaseRateRow>,
    pub phase_summary: Vec<PhaseBoxRow>,
}

/// Binned progress curves per session, confidence bands per group, and
/// per-phase pair rates.
pub fn timeline(
    analyses: &[SessionAnalysis],
    tags: &[NetworkTag],
    grouping: Grouping,
    cfg: &AnalysisConfig,
) -> Result<TimelineReport, AnalysisError> {
    let mut groups: BTreeMap<String, Vec<&SessionAnalysis>> = BTreeMap::new();
    for a in analyses {
        groups.entry(grouping.key(&a.team_label, a.cohort)).or_default().push(a);
    }
    let mut out = TimelineReport::default();
    for (group, members) in &groups {
        if members.len() < 2 {
            return Err(AnalysisError::BandNeedsTwoSessions { group: group.clone() });
        }
        for &tag in tags {
            let mut binned = Vec::new();
            let mut rates: [Vec<f64>; 4] = Default::default();
            for a in members {
                let curve = progress_curve(&a.session_id, a.duration_ms, &a.pairs, tag, cfg.progress_window);
                let b = bin_curve(&curve.values, cfg.bin_pct)?;
                for (i, v) in b.iter().enumerate() {
                    out.curves.push(CurveRow {
                        session: a.session_id.clone(),
                        group: group.clone(),
                        tag,
                        bin_start_pct: i * cfg.bin_pct,
                        value: *v,
                    });
                }
                binned.push(b);
                let r = phase_rate(a.duration_ms, &a.pairs, tag, &cfg.phase_bounds);
                for phase in GamePhase::ALL {
                    let v = r[phase as usize];
                    if let Some(v) = v {
                        rates[phase as usize].push(v);
                    }
                    out.phase_rates.push(PhaseRateRow {
                        session: a.session_id.clone(),
                        group: group.clone(),
                        tag,
                        phase,
                        rate_per_min: v,
                    });
                }
            }
            let band = aggregate_band(&binned, cfg.ci_level)?;
            for (i, b) in band.bins.iter().enumerate() {
                out.bands.push(BandRow {
                    group: group.clone(),
                    tag,
                    bin_start_pct: i * cfg.bin_pct,
                    mean: b.mean,
                    lo: b.lower,
                    hi: b.upper,
                    n: b.n,
                });
            }
            for phase in GamePhase::ALL {
                let v = &rates[phase as usize];
                let b = box_stats(v);
                out.phase_summary.push(PhaseBoxRow {
                    group: group.clone(),
                    tag,
                    phase,
                    n: v.len(),
                    min: b.map(|b| b.min),
                    q1: b.map(|b| b.q1),
                    median: b.map(|b| b.median),
                    q3: b.map(|b| b.q3),
                    max: b.map(|b| b.max),
                });
            }
        }
    }
    Ok(out)
}
