//! Moments of interest: detection around collaborative events, matched
//! control windows, and game-phase segmentation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EventKind, GameEvent, GamePhase, Session, Utterance, Window, WindowKind};

/// Step by which a control window is moved back while searching.
pub const CONTROL_SHIFT_STEP_MS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoiError {
    #[error("window length must be positive and even, got {0} ms")]
    BadWindow(u64),
    #[error("min_kill_involvement must be at least 1")]
    BadInvolvement,
    #[error("phase bounds must be strictly increasing, got {0:?}")]
    BadPhaseBounds([u64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InvolvementCounting {
    /// Killer and assisters count toward the threshold.
    #[default]
    KillerPlusAssisters,
    /// The victim counts as well.
    KillerAssistersPlusVictim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoiConfig {
    pub window_ms: u64,
    pub min_kill_involvement: usize,
    pub involvement_counting: InvolvementCounting,
    /// Distinct speakers a control window needs.
    pub min_speakers: usize,
    /// How far back from its initial position a control may be moved.
    /// `None` searches all the way to game start.
    pub max_pairing_shift_ms: Option<u64>,
}

impl Default for MoiConfig {
    fn default() -> Self {
        MoiConfig {
            window_ms: 30_000,
            min_kill_involvement: 3,
            involvement_counting: InvolvementCounting::KillerPlusAssisters,
            min_speakers: 2,
            max_pairing_shift_ms: None,
        }
    }
}

impl MoiConfig {
    pub fn half_span_ms(&self) -> u64 {
        self.window_ms / 2
    }

    pub fn validate(&self) -> Result<(), MoiError> {
        if self.window_ms == 0 || !self.window_ms.is_multiple_of(2) {
            return Err(MoiError::BadWindow(self.window_ms));
        }
        if self.min_kill_involvement == 0 {
            return Err(MoiError::BadInvolvement);
        }
        Ok(())
    }

    fn qualifies(&self, event: &GameEvent) -> bool {
        match event.kind {
            EventKind::ChampionKill => {
                let mut involved = 1 + event.assisters.len();
                if self.involvement_counting == InvolvementCounting::KillerAssistersPlusVictim && event.victim.is_some() {
                    involved += 1;
                }
                involved >= self.min_kill_involvement
            }
            EventKind::EliteMonsterKill | EventKind::BuildingDestruction => true,
        }
    }
}

/// Utterances of a session whose start lies in `[start_ms, end_ms)`.
/// Relies on the session's canonical start-time ordering.
pub fn utterances_in(utterances: &[Utterance], start_ms: u64, end_ms: u64) -> &[Utterance] {
    let lo = utterances.partition_point(|u| u.start_ms < start_ms);
    let hi = utterances.partition_point(|u| u.start_ms < end_ms);
    &utterances[lo..hi.max(lo)]
}

fn distinct_speakers(utterances: &[Utterance]) -> usize {
    let mut seen = [false; 11];
    for u in utterances {
        seen[usize::from(u.speaker.get())] = true;
    }
    seen.iter().filter(|s| **s).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoiWindow<'s> {
    pub window: Window,
    pub source_event: &'s GameEvent,
    pub utterances: &'s [Utterance],
}

impl MoiWindow<'_> {
    pub fn center_ms(&self) -> u64 {
        self.source_event.time_ms
    }
}

/// Finds every moment of interest in `s`, ordered by event time.
///
/// Kills need enough involved players; elite-monster kills and building
/// destructions always qualify. Windows that would reach outside the game
/// are dropped, as are windows without any utterance.
pub fn detect_mois<'s>(s: &'s Session, cfg: &MoiConfig) -> Vec<MoiWindow<'s>> {
    let half = cfg.half_span_ms();
    let mut out: Vec<MoiWindow<'s>> = s
        .events
        .iter()
        .filter(|e| cfg.qualifies(e))
        .filter(|e| e.time_ms >= half && e.time_ms + half <= s.duration_ms)
        .filter_map(|e| {
            let window = Window { start_ms: e.time_ms - half, end_ms: e.time_ms + half, kind: WindowKind::Moi };
            let utterances = utterances_in(&s.utterances, window.start_ms, window.end_ms);
            (!utterances.is_empty()).then_some(MoiWindow { window, source_event: e, utterances })
        })
        .collect();
    out.sort_by_key(|m| m.window.start_ms);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlWindow<'s> {
    pub window: Window,
    pub utterances: &'s [Utterance],
    /// Distance the window moved back from the slot right before the MoI.
    pub shift_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedWindows<'s> {
    pub moi: MoiWindow<'s>,
    pub control: ControlWindow<'s>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no valid control window before the MoI starting at {moi_start_ms} ms")]
pub struct NoValidControl {
    pub moi_start_ms: u64,
}

/// Matches `moi` with the nearest earlier valid control window.
///
/// The search starts at the window ending exactly at the MoI's start and
/// steps back one second at a time until the candidate overlaps no MoI,
/// has at least one utterance and `min_speakers` distinct speakers.
pub fn pair_non_moi<'s>(
    s: &'s Session,
    moi: &MoiWindow<'s>,
    all_mois: &[MoiWindow<'s>],
    cfg: &MoiConfig,
) -> Result<PairedWindows<'s>, NoValidControl> {
    let fail = NoValidControl { moi_start_ms: moi.window.start_ms };
    let len = cfg.window_ms;
    let Some(initial) = moi.window.start_ms.checked_sub(len) else {
        return Err(fail);
    };
    let mut shift = 0;
    loop {
        if cfg.max_pairing_shift_ms.is_some_and(|max| shift > max) {
            return Err(fail);
        }
        let Some(start) = initial.checked_sub(shift) else {
            return Err(fail);
        };
        let window = Window { start_ms: start, end_ms: start + len, kind: WindowKind::NonMoi };
        let overlaps = all_mois.iter().any(|m| m.window.overlaps(&window));
        if !overlaps {
            let utterances = utterances_in(&s.utterances, window.start_ms, window.end_ms);
            if !utterances.is_empty() && distinct_speakers(utterances) >= cfg.min_speakers {
                return Ok(PairedWindows {
                    moi: moi.clone(),
                    control: ControlWindow { window, utterances, shift_ms: shift },
                });
            }
        }
        shift += CONTROL_SHIFT_STEP_MS;
    }
}

/// Phase transition instants in game time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseBounds {
    /// Ends of early laning, late laning and team fight, in ms.
    pub bounds_ms: [u64; 3],
}

impl Default for PhaseBounds {
    fn default() -> Self {
        PhaseBounds { bounds_ms: [5 * 60_000, 14 * 60_000, 25 * 60_000] }
    }
}

impl PhaseBounds {
    pub fn from_minutes(minutes: [u64; 3]) -> Result<Self, MoiError> {
        let bounds_ms = minutes.map(|m| m * 60_000);
        if !(bounds_ms[0] > 0 && bounds_ms[0] < bounds_ms[1] && bounds_ms[1] < bounds_ms[2]) {
            return Err(MoiError::BadPhaseBounds(bounds_ms));
        }
        Ok(PhaseBounds { bounds_ms })
    }

    /// Left-closed, right-open phase membership.
    pub fn phase_of(&self, time_ms: u64) -> GamePhase {
        let [a, b, c] = self.bounds_ms;
        if time_ms < a {
            GamePhase::EarlyLaning
        } else if time_ms < b {
            GamePhase::LateLaning
        } else if time_ms < c {
            GamePhase::TeamFight
        } else {
            GamePhase::Endgame
        }
    }

    /// `[start, end)` of a phase; `None` end means unbounded.
    pub fn span(&self, phase: GamePhase) -> (u64, Option<u64>) {
        let [a, b, c] = self.bounds_ms;
        match phase {
            GamePhase::EarlyLaning => (0, Some(a)),
            GamePhase::LateLaning => (a, Some(b)),
            GamePhase::TeamFight => (b, Some(c)),
            GamePhase::Endgame => (c, None),
        }
    }
}

/// Phase of a game instant under the default 5/14/25-minute boundaries.
pub fn phase_of(time_ms: u64) -> GamePhase {
    PhaseBounds::default().phase_of(time_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cohort, DialogueAct, PlayerId};
    use std::collections::BTreeSet;

    fn pid(i: i64) -> PlayerId {
        PlayerId::new(i).unwrap()
    }

    fn utt(speaker: i64, start: u64) -> Utterance {
        Utterance { speaker: pid(speaker), text: String::new(), start_ms: start, end_ms: start + 800, da: DialogueAct::Inform }
    }

    fn kill(t: u64, assisters: &[i64]) -> GameEvent {
        GameEvent {
            kind: EventKind::ChampionKill,
            time_ms: t,
            killer: pid(3),
            victim: Some(pid(7)),
            assisters: assisters.iter().map(|a| pid(*a)).collect(),
        }
    }

    fn building(t: u64) -> GameEvent {
        GameEvent { kind: EventKind::BuildingDestruction, time_ms: t, killer: pid(1), victim: None, assisters: BTreeSet::new() }
    }

    fn session(events: Vec<GameEvent>, utterances: Vec<Utterance>) -> Session {
        Session {
            id: "s".into(),
            team_label: "t".into(),
            cohort: Cohort::Amateur,
            match_start_utc_ms: 0,
            duration_ms: 1_800_000,
            pauses: vec![],
            events,
            utterances,
        }
    }

    #[test]
    fn kill_with_two_assisters_is_moi() {
        let s = session(vec![kill(600_000, &[2, 4])], vec![utt(1, 590_000)]);
        let m = detect_mois(&s, &MoiConfig::default());
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].window.start_ms, m[0].window.end_ms), (585_000, 615_000));
        assert_eq!(m[0].utterances.len(), 1);
    }

    #[test]
    fn involvement_counting_modes() {
        let s = session(vec![kill(600_000, &[2])], vec![utt(1, 590_000)]);
        assert!(detect_mois(&s, &MoiConfig::default()).is_empty());
        let with_victim =
            MoiConfig { involvement_counting: InvolvementCounting::KillerAssistersPlusVictim, ..MoiConfig::default() };
        assert_eq!(detect_mois(&s, &with_victim).len(), 1);
    }

    #[test]
    fn silent_and_edge_windows_excluded() {
        let s = session(vec![kill(600_000, &[2, 4])], vec![utt(1, 584_999), utt(2, 615_000)]);
        assert!(detect_mois(&s, &MoiConfig::default()).is_empty());
        let edge = session(vec![building(14_999), building(1_785_001)], vec![utt(1, 1_000), utt(1, 1_790_000)]);
        assert!(detect_mois(&edge, &MoiConfig::default()).is_empty());
        let fits = session(vec![building(15_000), building(1_785_000)], vec![utt(1, 1_000), utt(1, 1_790_000)]);
        assert_eq!(detect_mois(&fits, &MoiConfig::default()).len(), 2);
    }

    #[test]
    fn control_immediately_before() {
        let s = session(vec![kill(600_000, &[2, 4])], vec![utt(1, 560_000), utt(2, 570_000), utt(1, 590_000)]);
        let cfg = MoiConfig::default();
        let mois = detect_mois(&s, &cfg);
        let p = pair_non_moi(&s, &mois[0], &mois, &cfg).unwrap();
        assert_eq!((p.control.window.start_ms, p.control.window.end_ms), (555_000, 585_000));
        assert_eq!(p.control.shift_ms, 0);
    }

    #[test]
    fn control_shifts_one_second_past_neighbour() {
        // a second MoI starting at 584 s overlaps the initial candidate
        // [555, 585) by exactly one second
        let s = session(
            vec![building(599_000), kill(600_000, &[2, 4])],
            vec![utt(1, 560_000), utt(2, 570_000), utt(1, 590_000)],
        );
        let cfg = MoiConfig::default();
        let mois = detect_mois(&s, &cfg);
        assert_eq!(mois.len(), 2);
        let p = pair_non_moi(&s, &mois[1], &mois, &cfg).unwrap();
        assert_eq!((p.control.window.start_ms, p.control.window.end_ms), (554_000, 584_000));
        assert_eq!(p.control.shift_ms, 1_000);
    }

    #[test]
    fn control_skips_whole_earlier_moi() {
        // an earlier MoI [526, 556) can only be escaped by moving the control
        // entirely before it
        let s = session(
            vec![building(541_000), kill(600_000, &[2, 4])],
            vec![utt(1, 500_000), utt(2, 510_000), utt(1, 540_000), utt(1, 560_000), utt(2, 570_000), utt(1, 590_000)],
        );
        let cfg = MoiConfig::default();
        let mois = detect_mois(&s, &cfg);
        let p = pair_non_moi(&s, &mois[1], &mois, &cfg).unwrap();
        assert_eq!((p.control.window.start_ms, p.control.window.end_ms), (496_000, 526_000));
    }

    #[test]
    fn control_exhaustion() {
        let s = session(vec![building(30_000)], vec![utt(2, 3_000), utt(1, 20_000)]);
        let cfg = MoiConfig::default();
        let mois = detect_mois(&s, &cfg);
        assert_eq!(mois[0].window.start_ms, 15_000);
        assert_eq!(pair_non_moi(&s, &mois[0], &mois, &cfg), Err(NoValidControl { moi_start_ms: 15_000 }));
    }

    #[test]
    fn control_shift_cap() {
        let s = session(vec![kill(600_000, &[2, 4])], vec![utt(1, 500_000), utt(2, 501_000), utt(1, 590_000)]);
        let capped = MoiConfig { max_pairing_shift_ms: Some(10_000), ..MoiConfig::default() };
        let mois = detect_mois(&s, &capped);
        assert!(pair_non_moi(&s, &mois[0], &mois, &capped).is_err());
        let open = MoiConfig::default();
        let p = pair_non_moi(&s, &mois[0], &mois, &open).unwrap();
        assert_eq!(p.control.window.end_ms, 530_000);
    }

    #[test]
    fn single_speaker_control_rejected() {
        let s = session(vec![kill(600_000, &[2, 4])], vec![utt(1, 560_000), utt(1, 570_000), utt(1, 590_000)]);
        let cfg = MoiConfig::default();
        let mois = detect_mois(&s, &cfg);
        assert!(pair_non_moi(&s, &mois[0], &mois, &cfg).is_err());
        let lax = MoiConfig { min_speakers: 1, ..cfg };
        assert!(pair_non_moi(&s, &mois[0], &mois, &lax).is_ok());
    }

    #[test]
    fn phase_boundaries() {
        assert_eq!(phase_of(0), GamePhase::EarlyLaning);
        assert_eq!(phase_of(299_999), GamePhase::EarlyLaning);
        assert_eq!(phase_of(300_000), GamePhase::LateLaning);
        assert_eq!(phase_of(839_999), GamePhase::LateLaning);
        assert_eq!(phase_of(840_000), GamePhase::TeamFight);
        assert_eq!(phase_of(1_499_999), GamePhase::TeamFight);
        assert_eq!(phase_of(1_500_000), GamePhase::Endgame);
        assert_eq!(phase_of(u64::MAX), GamePhase::Endgame);
        assert!(PhaseBounds::from_minutes([5, 5, 25]).is_err());
        assert_eq!(PhaseBounds::from_minutes([5, 14, 25]).unwrap(), PhaseBounds::default());
    }

    #[test]
    fn config_validation() {
        assert!(MoiConfig::default().validate().is_ok());
        assert!(MoiConfig { window_ms: 29_999, ..MoiConfig::default() }.validate().is_err());
        assert!(MoiConfig { min_kill_involvement: 0, ..MoiConfig::default() }.validate().is_err());
    }
}
