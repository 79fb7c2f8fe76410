//! Shared domain types: players, utterances, game events and sessions.
//!
//! Two time axes exist. Wall-clock instants (`*_utc_ms`, signed milliseconds
//! since the Unix epoch) appear only on [`Session::match_start_utc_ms`] and
//! [`PauseInterval`]. Everything else is game time: unsigned milliseconds
//! from game start, frozen while the match is paused.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum game length for a session to be analyzable (15 minutes).
pub const MIN_SESSION_DURATION_MS: u64 = 15 * 60 * 1000;

/// Players per team; communication networks always have this many nodes.
pub const TEAM_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("player id {0} is outside 1..=10")]
    PlayerOutOfRange(i64),
    #[error("dialogue act code {0} is outside 0..=3")]
    UnknownDialogueAct(i64),
    #[error("unrecognized dialogue act `{0}`")]
    BadDialogueAct(String),
    #[error("unrecognized role `{0}`")]
    BadRole(String),
    #[error("malformed dialogue-act pair `{0}` (expected e.g. `D:C`)")]
    BadDaPair(String),
    #[error("unrecognized cohort `{0}`")]
    BadCohort(String),
}

/// Illocutionary category of an utterance. Integer codes follow the
/// transcript convention: 0 = Inform, 1 = Question, 2 = Directive,
/// 3 = Commissive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DialogueAct {
    Inform,
    Question,
    Directive,
    Commissive,
}

impl DialogueAct {
    pub const ALL: [DialogueAct; 4] = [
        DialogueAct::Inform,
        DialogueAct::Question,
        DialogueAct::Directive,
        DialogueAct::Commissive,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Result<Self, ModelError> {
        match code {
            0 => Ok(DialogueAct::Inform),
            1 => Ok(DialogueAct::Question),
            2 => Ok(DialogueAct::Directive),
            3 => Ok(DialogueAct::Commissive),
            other => Err(ModelError::UnknownDialogueAct(other)),
        }
    }

    /// Single-letter abbreviation (`I`, `Q`, `D`, `C`).
    pub fn letter(self) -> char {
        match self {
            DialogueAct::Inform => 'I',
            DialogueAct::Question => 'Q',
            DialogueAct::Directive => 'D',
            DialogueAct::Commissive => 'C',
        }
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for DialogueAct {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "inform" | "0" => Ok(DialogueAct::Inform),
            "q" | "question" | "1" => Ok(DialogueAct::Question),
            "d" | "directive" | "2" => Ok(DialogueAct::Directive),
            "c" | "commissive" | "3" => Ok(DialogueAct::Commissive),
            _ => Err(ModelError::BadDialogueAct(s.to_string())),
        }
    }
}

/// Team position, in the standard position order used for player ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Top,
    Jungle,
    Mid,
    Bot,
    Support,
}

impl Role {
    pub const ALL: [Role; TEAM_SIZE] = [Role::Top, Role::Jungle, Role::Mid, Role::Bot, Role::Support];

    /// Node index of this role inside a communication network.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Role::Top => 'T',
            Role::Jungle => 'J',
            Role::Mid => 'M',
            Role::Bot => 'B',
            Role::Support => 'S',
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Role::Top => "Top",
            Role::Jungle => "Jungle",
            Role::Mid => "Mid",
            Role::Bot => "Bot",
            Role::Support => "Support",
        };
        f.write_str(name)
    }
}

impl FromStr for Role {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" | "t" => Ok(Role::Top),
            "jungle" | "jg" | "j" => Ok(Role::Jungle),
            "mid" | "middle" | "m" => Ok(Role::Mid),
            "bot" | "bottom" | "adc" | "b" => Ok(Role::Bot),
            "support" | "sup" | "s" => Ok(Role::Support),
            _ => Err(ModelError::BadRole(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Blue,
    Red,
}

/// Logger player identifier: 1–5 blue side, 6–10 red side, each side in
/// position order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct PlayerId(u8);

impl PlayerId {
    pub fn new(id: i64) -> Result<Self, ModelError> {
        if (1..=10).contains(&id) {
            Ok(PlayerId(id as u8))
        } else {
            Err(ModelError::PlayerOutOfRange(id))
        }
    }

    /// The player holding `role` on `side`.
    pub fn from_role(side: Side, role: Role) -> Self {
        let base = match side {
            Side::Blue => 1,
            Side::Red => 6,
        };
        PlayerId(base + role as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn role(self) -> Role {
        Role::ALL[usize::from(self.0 - 1) % TEAM_SIZE]
    }

    pub fn side(self) -> Side {
        if self.0 <= 5 {
            Side::Blue
        } else {
            Side::Red
        }
    }
}

impl TryFrom<i64> for PlayerId {
    type Error = ModelError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        PlayerId::new(value)
    }
}

impl From<PlayerId> for u8 {
    fn from(id: PlayerId) -> u8 {
        id.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Role of a raw logger id.
pub fn role_of(id: i64) -> Result<Role, ModelError> {
    PlayerId::new(id).map(PlayerId::role)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: PlayerId,
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub da: DialogueAct,
}

impl Utterance {
    /// Canonical ordering key: start, then end, then speaker id.
    pub fn order_key(&self) -> (u64, u64, u8) {
        (self.start_ms, self.end_ms, self.speaker.get())
    }
}

/// Sorts utterances into the canonical `(start_ms, end_ms, speaker)` order
/// every analysis step expects.
pub fn sort_utterances(utterances: &mut [Utterance]) {
    utterances.sort_by_key(Utterance::order_key);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ChampionKill,
    EliteMonsterKill,
    BuildingDestruction,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [
        EventKind::ChampionKill,
        EventKind::EliteMonsterKill,
        EventKind::BuildingDestruction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ChampionKill => "ChampionKill",
            EventKind::EliteMonsterKill => "EliteMonsterKill",
            EventKind::BuildingDestruction => "BuildingDestruction",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = ();

    /// Accepts the canonical names and the logger's spaced spelling
    /// (`Champion Kill`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
        match squashed.to_ascii_lowercase().as_str() {
            "championkill" => Ok(EventKind::ChampionKill),
            "elitemonsterkill" => Ok(EventKind::EliteMonsterKill),
            "buildingdestruction" | "buildingkill" => Ok(EventKind::BuildingDestruction),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub kind: EventKind,
    pub time_ms: u64,
    pub killer: PlayerId,
    pub victim: Option<PlayerId>,
    pub assisters: BTreeSet<PlayerId>,
}

/// A pause in wall-clock time; the game clock is frozen inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauseInterval {
    pub start_utc_ms: i64,
    pub end_utc_ms: i64,
}

impl PauseInterval {
    pub fn duration_ms(&self) -> i64 {
        self.end_utc_ms - self.start_utc_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Professional,
    Amateur,
}

impl Cohort {
    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::Professional => "professional",
            Cohort::Amateur => "amateur",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cohort {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "professional" | "pro" => Ok(Cohort::Professional),
            "amateur" | "am" => Ok(Cohort::Amateur),
            _ => Err(ModelError::BadCohort(s.to_string())),
        }
    }
}

/// One recorded match of one team, synchronized onto game time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub team_label: String,
    pub cohort: Cohort,
    pub match_start_utc_ms: i64,
    pub duration_ms: u64,
    pub pauses: Vec<PauseInterval>,
    pub events: Vec<GameEvent>,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowKind {
    #[serde(rename = "moi")]
    Moi,
    #[serde(rename = "non_moi")]
    NonMoi,
}

impl WindowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::Moi => "moi",
            WindowKind::NonMoi => "non_moi",
        }
    }
}

/// Half-open game-time interval `[start_ms, end_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub start_ms: u64,
    pub end_ms: u64,
    pub kind: WindowKind,
}

impl Window {
    pub fn len_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start_ms < other.end_ms && other.start_ms < self.end_ms
    }

    pub fn contains(&self, t_ms: u64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }
}

/// Ordered pair of dialogue acts on two consecutive utterances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DaPair {
    pub first: DialogueAct,
    pub second: DialogueAct,
}

impl DaPair {
    pub const fn new(first: DialogueAct, second: DialogueAct) -> Self {
        DaPair { first, second }
    }

    /// Dense index in `0..16`, `first` major.
    pub fn index(self) -> usize {
        self.first as usize * 4 + self.second as usize
    }

    pub fn from_index(index: usize) -> Self {
        DaPair::new(DialogueAct::ALL[(index / 4) % 4], DialogueAct::ALL[index % 4])
    }

    pub fn all() -> impl Iterator<Item = DaPair> {
        (0..16).map(DaPair::from_index)
    }
}

impl fmt::Display for DaPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.second)
    }
}

impl FromStr for DaPair {
    type Err = ModelError;

    /// Parses `D:C`, `D->C` or `DC`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadDaPair(s.to_string());
        let t = s.trim();
        let (a, b) = if let Some((a, b)) = t.split_once("->") {
            (a, b)
        } else if let Some((a, b)) = t.split_once(':') {
            (a, b)
        } else if t.len() == 2 && t.is_ascii() {
            t.split_at(1)
        } else {
            return Err(bad());
        };
        Ok(DaPair::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GamePhase {
    EarlyLaning,
    LateLaning,
    TeamFight,
    Endgame,
}

impl GamePhase {
    pub const ALL: [GamePhase; 4] = [
        GamePhase::EarlyLaning,
        GamePhase::LateLaning,
        GamePhase::TeamFight,
        GamePhase::Endgame,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GamePhase::EarlyLaning => "early_laning",
            GamePhase::LateLaning => "late_laning",
            GamePhase::TeamFight => "team_fight",
            GamePhase::Endgame => "endgame",
        }
    }
}

impl fmt::Display for GamePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Machine-readable session problems reported by [`validate_session`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum Violation {
    TooShort { duration_ms: u64 },
    InvalidUtteranceSpan { index: usize },
    UtterancesUnsorted { index: usize },
    UtteranceOutOfRange { index: usize },
    MixedTeamSpeakers { index: usize },
    EventsUnsorted { index: usize },
    EventOutOfRange { index: usize },
    VictimMismatch { index: usize },
    KillerAssists { index: usize },
    VictimParticipates { index: usize },
    InvalidPause { index: usize },
    PausesOverlap { index: usize },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::TooShort { .. } => "TooShort",
            Violation::InvalidUtteranceSpan { .. } => "InvalidUtteranceSpan",
            Violation::UtterancesUnsorted { .. } => "UtterancesUnsorted",
            Violation::UtteranceOutOfRange { .. } => "UtteranceOutOfRange",
            Violation::MixedTeamSpeakers { .. } => "MixedTeamSpeakers",
            Violation::EventsUnsorted { .. } => "EventsUnsorted",
            Violation::EventOutOfRange { .. } => "EventOutOfRange",
            Violation::VictimMismatch { .. } => "VictimMismatch",
            Violation::KillerAssists { .. } => "KillerAssists",
            Violation::VictimParticipates { .. } => "VictimParticipates",
            Violation::InvalidPause { .. } => "InvalidPause",
            Violation::PausesOverlap { .. } => "PausesOverlap",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooShort { duration_ms } => write!(f, "TooShort (duration {duration_ms} ms)"),
            Violation::InvalidUtteranceSpan { index }
            | Violation::UtterancesUnsorted { index }
            | Violation::UtteranceOutOfRange { index }
            | Violation::MixedTeamSpeakers { index } => write!(f, "{} (utterance #{index})", self.code()),
            Violation::EventsUnsorted { index }
            | Violation::EventOutOfRange { index }
            | Violation::VictimMismatch { index }
            | Violation::KillerAssists { index }
            | Violation::VictimParticipates { index } => write!(f, "{} (event #{index})", self.code()),
            Violation::InvalidPause { index } | Violation::PausesOverlap { index } => {
                write!(f, "{} (pause #{index})", self.code())
            }
        }
    }
}

/// Checks every session invariant. An empty result means the session can be
/// analyzed.
pub fn validate_session(s: &Session) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.duration_ms < MIN_SESSION_DURATION_MS {
        out.push(Violation::TooShort { duration_ms: s.duration_ms });
    }

    let team_side = s.utterances.first().map(|u| u.speaker.side());
    for (index, u) in s.utterances.iter().enumerate() {
        if u.start_ms > u.end_ms {
            out.push(Violation::InvalidUtteranceSpan { index });
        }
        if u.start_ms > s.duration_ms {
            out.push(Violation::UtteranceOutOfRange { index });
        }
        if Some(u.speaker.side()) != team_side {
            out.push(Violation::MixedTeamSpeakers { index });
        }
        if index > 0 && s.utterances[index - 1].order_key() > u.order_key() {
            out.push(Violation::UtterancesUnsorted { index });
        }
    }

    for (index, e) in s.events.iter().enumerate() {
        if index > 0 && s.events[index - 1].time_ms > e.time_ms {
            out.push(Violation::EventsUnsorted { index });
        }
        if e.time_ms > s.duration_ms {
            out.push(Violation::EventOutOfRange { index });
        }
        if e.victim.is_some() != (e.kind == EventKind::ChampionKill) {
            out.push(Violation::VictimMismatch { index });
        }
        if e.assisters.contains(&e.killer) {
            out.push(Violation::KillerAssists { index });
        }
        if let Some(v) = e.victim {
            if v == e.killer || e.assisters.contains(&v) {
                out.push(Violation::VictimParticipates { index });
            }
        }
    }

    for (index, p) in s.pauses.iter().enumerate() {
        if p.start_utc_ms >= p.end_utc_ms {
            out.push(Violation::InvalidPause { index });
        }
        if index > 0 && s.pauses[index - 1].end_utc_ms > p.start_utc_ms {
            out.push(Violation::PausesOverlap { index });
        }
    }
    out
}
