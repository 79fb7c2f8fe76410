//! Logger file parsing and wall-clock → game-time synchronization.
//!
//! A session directory holds:
//!
//! * `events.csv`: clock section (`key=value` lines) plus the event table
//!   with header `kind,time_ms,killer,victim,assisters`.
//! * `recording_start.txt`: UTC instant at which voice recording began,
//!   either integer epoch milliseconds or RFC 3339.
//! * `player_<id>.jsonl`: one transcript per player; offsets are relative
//!   to the recording start.
//! * `session.json`: `id`, `team_label`, `cohort`.
//!
//! `docs/formats.md` at the repository root describes every format with samples.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    sort_utterances, Cohort, DialogueAct, EventKind, GameEvent, ModelError, PauseInterval, PlayerId, Session,
    Utterance,
};

pub const EVENT_HEADER: &str = "kind,time_ms,killer,victim,assisters";
pub const EVENTS_FILE: &str = "events.csv";
pub const RECORDING_FILE: &str = "recording_start.txt";
pub const META_FILE: &str = "session.json";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowError {
    #[error("expected 5 fields, found {0}")]
    FieldCount(usize),
    #[error("unparseable timestamp `{0}`")]
    BadTimestamp(String),
    #[error("participant id {0} is outside 1..=10")]
    ParticipantOutOfRange(i64),
    #[error("unparseable participant `{0}`")]
    BadParticipant(String),
    #[error("victim must be present exactly for ChampionKill")]
    VictimMismatch,
    #[error("dialogue act code {0} is outside 0..=3")]
    BadDaCode(i64),
    #[error("utterance ends ({end_ms}) before it starts ({start_ms})")]
    InvalidUtteranceSpan { start_ms: u64, end_ms: u64 },
    #[error("speaker {found} does not match transcript owner {expected}")]
    SpeakerMismatch { expected: PlayerId, found: PlayerId },
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("event log has no `{EVENT_HEADER}` header line")]
    MissingHeader,
    #[error("event log clock section lacks `{0}`")]
    MissingClockField(&'static str),
    #[error("line {line}: bad clock entry `{text}`")]
    BadClockLine { line: usize, text: String },
    #[error("line {line}: {error}")]
    Row { line: usize, error: RowError },
    #[error("pauses overlap or are out of order")]
    OverlappingPauses,
    #[error("recording started at {recording_start_utc_ms} after the match ended at {match_end_utc_ms}")]
    RecordingAfterMatchEnd { recording_start_utc_ms: i64, match_end_utc_ms: i64 },
    #[error("bad recording timestamp `{0}`")]
    BadRecordingTimestamp(String),
    #[error("bad session metadata: {0}")]
    BadMeta(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Non-fatal problems found while ingesting; numeric outputs never depend on
/// whether these are inspected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning")]
pub enum IngestWarning {
    UnknownEventKind { line: usize, kind: String },
    SkippedRow { line: usize, reason: String },
    UtteranceOutsideGame { speaker: PlayerId, raw_start_ms: u64, game_start_ms: i64 },
    UtteranceDuringPause { speaker: PlayerId, raw_start_ms: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PausePolicy {
    /// Utterances starting strictly inside a pause are discarded.
    #[default]
    DropUtterancesDuringPause,
    /// Utterances starting inside a pause are kept at the pause's game time.
    ClampToPauseStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestConfig {
    pub pause_policy: PausePolicy,
    /// Fail on the first malformed row instead of skipping it with a warning.
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecordingMeta {
    pub recording_start_utc_ms: i64,
}

/// Clock section of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameClock {
    pub match_start_utc_ms: i64,
    pub duration_ms: u64,
    pub pauses: Vec<PauseInterval>,
}

impl GameClock {
    fn total_pause_ms(&self) -> i64 {
        self.pauses.iter().map(PauseInterval::duration_ms).sum()
    }

    /// Wall instant at which the game clock reaches `duration_ms`.
    pub fn match_end_utc_ms(&self) -> i64 {
        self.match_start_utc_ms + self.duration_ms as i64 + self.total_pause_ms()
    }

    /// Maps a wall instant onto game time. Pause time elapsed before `wall`
    /// (including the elapsed part of a pause in progress) is subtracted, so
    /// the mapping is continuous and nondecreasing.
    pub fn game_time(&self, wall_utc_ms: i64) -> i64 {
        let paused: i64 = self
            .pauses
            .iter()
            .map(|p| (wall_utc_ms - p.start_utc_ms).clamp(0, p.duration_ms()))
            .sum();
        wall_utc_ms - self.match_start_utc_ms - paused
    }

    /// Pause strictly containing `wall`, if any.
    pub fn pause_containing(&self, wall_utc_ms: i64) -> Option<&PauseInterval> {
        self.pauses
            .iter()
            .find(|p| p.start_utc_ms < wall_utc_ms && wall_utc_ms < p.end_utc_ms)
    }

    /// Earliest wall instant whose game time equals `game_ms`.
    pub fn wall_time(&self, game_ms: u64) -> i64 {
        let game = game_ms as i64;
        let mut wall = self.match_start_utc_ms + game;
        for p in &self.pauses {
            if self.game_time(p.start_utc_ms) < game {
                wall += p.duration_ms();
            }
        }
        wall
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<GameEvent>,
    pub clock: GameClock,
    pub warnings: Vec<IngestWarning>,
}

fn parse_participant(field: &str) -> Result<PlayerId, RowError> {
    let id: i64 = field
        .trim()
        .parse()
        .map_err(|_| RowError::BadParticipant(field.to_string()))?;
    PlayerId::new(id).map_err(|_| RowError::ParticipantOutOfRange(id))
}

fn parse_event_row(line: &str) -> Result<Option<GameEvent>, RowError> {
    let fields: Vec<&str> = line.splitn(5, ',').collect();
    if fields.len() != 5 {
        return Err(RowError::FieldCount(fields.len()));
    }
    let Ok(kind) = fields[0].trim().parse::<EventKind>() else {
        return Ok(None);
    };
    let time_ms: u64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| RowError::BadTimestamp(fields[1].to_string()))?;
    let killer = parse_participant(fields[2])?;
    let victim = match fields[3].trim() {
        "" => None,
        v => Some(parse_participant(v)?),
    };
    if victim.is_some() != (kind == EventKind::ChampionKill) {
        return Err(RowError::VictimMismatch);
    }
    let list = fields[4].trim().trim_matches('"').trim();
    let inner = list
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| RowError::Malformed(format!("assisters `{list}` is not a bracketed list")))?;
    let assisters = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_participant)
        .collect::<Result<BTreeSet<_>, _>>()?;
    Ok(Some(GameEvent { kind, time_ms, killer, victim, assisters }))
}

/// Parses an event log: clock `key=value` lines and the event table.
/// Unknown event kinds are skipped with a warning; malformed rows are fatal
/// only when `strict`.
pub fn parse_event_log(text: &str, strict: bool) -> Result<EventLog, IngestError> {
    let mut match_start = None;
    let mut duration = None;
    let mut pauses = Vec::new();
    let mut events = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let bad = || IngestError::BadClockLine { line: line_no, text: line.to_string() };
            match key.trim() {
                "match_start_utc_ms" => match_start = Some(value.trim().parse::<i64>().map_err(|_| bad())?),
                "duration_ms" => duration = Some(value.trim().parse::<u64>().map_err(|_| bad())?),
                "pause" => {
                    let (a, b) = value.split_once(':').ok_or_else(bad)?;
                    let start_utc_ms = a.trim().parse::<i64>().map_err(|_| bad())?;
                    let end_utc_ms = b.trim().parse::<i64>().map_err(|_| bad())?;
                    if start_utc_ms >= end_utc_ms {
                        return Err(bad());
                    }
                    pauses.push(PauseInterval { start_utc_ms, end_utc_ms });
                }
                _ => return Err(bad()),
            }
            continue;
        }
        if !seen_header {
            if line.replace(' ', "") == EVENT_HEADER {
                seen_header = true;
                continue;
            }
            return Err(IngestError::MissingHeader);
        }
        match parse_event_row(line) {
            Ok(Some(event)) => events.push(event),
            Ok(None) => warnings.push(IngestWarning::UnknownEventKind {
                line: line_no,
                kind: line.split(',').next().unwrap_or_default().to_string(),
            }),
            Err(error) if strict => return Err(IngestError::Row { line: line_no, error }),
            Err(error) => warnings.push(IngestWarning::SkippedRow { line: line_no, reason: error.to_string() }),
        }
    }
    if !seen_header {
        return Err(IngestError::MissingHeader);
    }
    pauses.sort_by_key(|p| p.start_utc_ms);
    events.sort_by_key(|e| e.time_ms);
    Ok(EventLog {
        events,
        clock: GameClock {
            match_start_utc_ms: match_start.ok_or(IngestError::MissingClockField("match_start_utc_ms"))?,
            duration_ms: duration.ok_or(IngestError::MissingClockField("duration_ms"))?,
            pauses,
        },
        warnings,
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpeakerField {
    Id(i64),
    Name(String),
}

#[derive(Debug, Deserialize)]
struct TranscriptRecord {
    speaker: Option<SpeakerField>,
    #[serde(default)]
    text: String,
    start_ms: u64,
    end_ms: u64,
    da: i64,
}

fn resolve_speaker(field: Option<SpeakerField>, owner: PlayerId) -> Result<PlayerId, RowError> {
    let found = match field {
        None => return Ok(owner),
        Some(SpeakerField::Id(id)) => PlayerId::new(id).map_err(|_| RowError::ParticipantOutOfRange(id))?,
        Some(SpeakerField::Name(name)) => match name.trim().parse::<i64>() {
            Ok(id) => PlayerId::new(id).map_err(|_| RowError::ParticipantOutOfRange(id))?,
            Err(_) => {
                let role = name.parse().map_err(|_| RowError::BadParticipant(name.clone()))?;
                PlayerId::from_role(owner.side(), role)
            }
        },
    };
    if found != owner {
        return Err(RowError::SpeakerMismatch { expected: owner, found });
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub speaker: PlayerId,
    /// Times are offsets from the recording start, not game time.
    pub utterances: Vec<Utterance>,
    pub warnings: Vec<IngestWarning>,
}

/// Parses one player's JSON-lines transcript. The `speaker` key may carry
/// the player id or a role name (`"Bot"`); it must agree with `speaker`.
pub fn parse_transcript(text: &str, speaker: PlayerId, strict: bool) -> Result<Transcript, IngestError> {
    let mut utterances = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<TranscriptRecord>(line)
            .map_err(|e| RowError::Malformed(e.to_string()))
            .and_then(|rec| {
                let speaker = resolve_speaker(rec.speaker, speaker)?;
                let da = DialogueAct::from_code(rec.da).map_err(|_| RowError::BadDaCode(rec.da))?;
                if rec.end_ms < rec.start_ms {
                    return Err(RowError::InvalidUtteranceSpan { start_ms: rec.start_ms, end_ms: rec.end_ms });
                }
                Ok(Utterance { speaker, text: rec.text, start_ms: rec.start_ms, end_ms: rec.end_ms, da })
            });
        match parsed {
            Ok(u) => utterances.push(u),
            Err(error) if strict => return Err(IngestError::Row { line: idx + 1, error }),
            Err(error) => warnings.push(IngestWarning::SkippedRow { line: idx + 1, reason: error.to_string() }),
        }
    }
    sort_utterances(&mut utterances);
    Ok(Transcript { speaker, utterances, warnings })
}

/// Identity of a session, carried alongside the logger files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub team_label: String,
    pub cohort: Cohort,
}

#[derive(Debug, Clone)]
pub struct Synchronized {
    pub session: Session,
    pub warnings: Vec<IngestWarning>,
}

/// Moves every transcript onto the game-time axis and assembles a session.
///
/// Game time of an utterance is its wall instant minus match start, minus
/// the pause time elapsed before that instant. Utterances landing before 0
/// or after the game's end are dropped with a warning.
pub fn synchronize(
    log: &EventLog,
    transcripts: &[Transcript],
    meta: RawRecordingMeta,
    info: SessionInfo,
    cfg: IngestConfig,
) -> Result<Synchronized, IngestError> {
    let clock = &log.clock;
    if clock.pauses.windows(2).any(|w| w[0].end_utc_ms > w[1].start_utc_ms) {
        return Err(IngestError::OverlappingPauses);
    }
    if meta.recording_start_utc_ms > clock.match_end_utc_ms() {
        return Err(IngestError::RecordingAfterMatchEnd {
            recording_start_utc_ms: meta.recording_start_utc_ms,
            match_end_utc_ms: clock.match_end_utc_ms(),
        });
    }

    let mut warnings = log.warnings.clone();
    let mut utterances = Vec::new();
    for t in transcripts {
        warnings.extend(t.warnings.iter().cloned());
        for u in &t.utterances {
            let wall_start = meta.recording_start_utc_ms + u.start_ms as i64;
            if clock.pause_containing(wall_start).is_some() && cfg.pause_policy == PausePolicy::DropUtterancesDuringPause
            {
                warnings.push(IngestWarning::UtteranceDuringPause { speaker: u.speaker, raw_start_ms: u.start_ms });
                continue;
            }
            let start = clock.game_time(wall_start);
            if start < 0 || start > clock.duration_ms as i64 {
                warnings.push(IngestWarning::UtteranceOutsideGame {
                    speaker: u.speaker,
                    raw_start_ms: u.start_ms,
                    game_start_ms: start,
                });
                continue;
            }
            let end = clock
                .game_time(meta.recording_start_utc_ms + u.end_ms as i64)
                .min(clock.duration_ms as i64);
            utterances.push(Utterance {
                speaker: u.speaker,
                text: u.text.clone(),
                start_ms: start as u64,
                end_ms: end as u64,
                da: u.da,
            });
        }
    }
    sort_utterances(&mut utterances);

    Ok(Synchronized {
        session: Session {
            id: info.id,
            team_label: info.team_label,
            cohort: info.cohort,
            match_start_utc_ms: clock.match_start_utc_ms,
            duration_ms: clock.duration_ms,
            pauses: clock.pauses.clone(),
            events: log.events.clone(),
            utterances,
        },
        warnings,
    })
}

/// Accepts integer epoch milliseconds or an RFC 3339 timestamp.
pub fn parse_recording_start(text: &str) -> Result<RawRecordingMeta, IngestError> {
    let t = text.trim();
    let ms = match t.parse::<i64>() {
        Ok(ms) => ms,
        Err(_) => chrono::DateTime::parse_from_rfc3339(t)
            .map_err(|_| IngestError::BadRecordingTimestamp(t.to_string()))?
            .timestamp_millis(),
    };
    if ms < 0 {
        return Err(IngestError::BadRecordingTimestamp(t.to_string()));
    }
    Ok(RawRecordingMeta { recording_start_utc_ms: ms })
}

// ---------------------------------------------------------------------------
// Writers

pub fn write_event_log(events: &[GameEvent], clock: &GameClock) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "match_start_utc_ms={}", clock.match_start_utc_ms);
    let _ = writeln!(out, "duration_ms={}", clock.duration_ms);
    for p in &clock.pauses {
        let _ = writeln!(out, "pause={}:{}", p.start_utc_ms, p.end_utc_ms);
    }
    out.push_str(EVENT_HEADER);
    out.push('\n');
    for e in events {
        let victim = e.victim.map(|v| v.to_string()).unwrap_or_default();
        let assisters: Vec<String> = e.assisters.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{},{},{},{},[{}]", e.kind, e.time_ms, e.killer, victim, assisters.join(","));
    }
    out
}

#[derive(Serialize)]
struct TranscriptRecordOut<'a> {
    speaker: u8,
    text: &'a str,
    start_ms: u64,
    end_ms: u64,
    da: u8,
}

/// Writes utterances as JSON lines; times are written as given.
pub fn write_transcript(utterances: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utterances {
        let rec = TranscriptRecordOut {
            speaker: u.speaker.get(),
            text: &u.text,
            start_ms: u.start_ms,
            end_ms: u.end_ms,
            da: u.da.code(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("transcript record serializes"));
        out.push('\n');
    }
    out
}

pub fn transcript_file_name(speaker: PlayerId) -> String {
    format!("player_{speaker}.jsonl")
}

/// In-memory image of a session directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionFiles {
    pub events_csv: String,
    pub recording_start: String,
    pub meta_json: String,
    pub transcripts: Vec<(PlayerId, String)>,
}

/// Renders a synchronized session back into logger files. The recording is
/// taken to start at match start; raw offsets are the earliest wall offsets
/// that map back onto each game time, so re-ingesting reproduces the session.
pub fn export_session(session: &Session) -> SessionFiles {
    let clock = GameClock {
        match_start_utc_ms: session.match_start_utc_ms,
        duration_ms: session.duration_ms,
        pauses: session.pauses.clone(),
    };
    let mut speakers: Vec<PlayerId> = session.utterances.iter().map(|u| u.speaker).collect();
    speakers.sort();
    speakers.dedup();
    let transcripts = speakers
        .into_iter()
        .map(|speaker| {
            let raw: Vec<Utterance> = session
                .utterances
                .iter()
                .filter(|u| u.speaker == speaker)
                .map(|u| Utterance {
                    start_ms: (clock.wall_time(u.start_ms) - clock.match_start_utc_ms) as u64,
                    end_ms: (clock.wall_time(u.end_ms) - clock.match_start_utc_ms) as u64,
                    ..u.clone()
                })
                .collect();
            (speaker, write_transcript(&raw))
        })
        .collect();
    let info = SessionInfo { id: session.id.clone(), team_label: session.team_label.clone(), cohort: session.cohort };
    SessionFiles {
        events_csv: write_event_log(&session.events, &clock),
        recording_start: format!("{}\n", session.match_start_utc_ms),
        meta_json: format!("{}\n", serde_json::to_string_pretty(&info).expect("session info serializes")),
        transcripts,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

pub fn write_session_dir(session: &Session, dir: &Path) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = export_session(session);
    let put = |name: &str, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    };
    put(EVENTS_FILE, &files.events_csv)?;
    put(RECORDING_FILE, &files.recording_start)?;
    put(META_FILE, &files.meta_json)?;
    for (speaker, body) in &files.transcripts {
        put(&transcript_file_name(*speaker), body)?;
    }
    Ok(())
}

/// True when `dir` looks like a session directory.
pub fn is_session_dir(dir: &Path) -> bool {
    dir.join(EVENTS_FILE).is_file()
}

/// Loads and synchronizes one session directory.
pub fn load_session_dir(dir: &Path, cfg: IngestConfig) -> Result<Synchronized, IngestError> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(io_err(&path))
    };
    let log = parse_event_log(&read(EVENTS_FILE)?, cfg.strict)?;
    let meta = parse_recording_start(&read(RECORDING_FILE)?)?;
    let info: SessionInfo = match dir.join(META_FILE).is_file() {
        true => serde_json::from_str(&read(META_FILE)?).map_err(|e| IngestError::BadMeta(e.to_string()))?,
        false => SessionInfo {
            id: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            team_label: String::new(),
            cohort: Cohort::Professional,
        },
    };
    let mut transcripts = Vec::new();
    for id in 1..=10 {
        let speaker = PlayerId::new(id)?;
        let name = transcript_file_name(speaker);
        if dir.join(&name).is_file() {
            transcripts.push(parse_transcript(&read(&name)?, speaker, cfg.strict)?);
        }
    }
    synchronize(&log, &transcripts, meta, info, cfg)
}
