//! Dialogue-act pair frequency over normalized game progress, binned curves
//! with cross-session confidence bands, and per-phase pair rates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::model::GamePhase;
use crate::moi::PhaseBounds;
use crate::network::{AdjacencyPair, NetworkTag};

/// Progress points per curve, one per percent of game duration.
pub const PROGRESS_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("bin width {0}% does not divide 100")]
    BadBinWidth(usize),
    #[error("curve has {0} points, expected {PROGRESS_POINTS}")]
    BadCurveLength(usize),
    #[error("confidence band needs at least 2 curves, got {0}")]
    TooFewCurves(usize),
    #[error("curves have different lengths")]
    RaggedCurves,
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
}

/// Width of the window counted around each progress point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgressWindow {
    /// 30 s total, centred on the progress point.
    #[default]
    Centered,
    /// ±30 s around the progress point.
    Wide,
}

impl ProgressWindow {
    pub fn half_span_ms(self) -> u64 {
        match self {
            ProgressWindow::Centered => 15_000,
            ProgressWindow::Wide => 30_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProgressWindow::Centered => "centered",
            ProgressWindow::Wide => "wide",
        }
    }
}

impl std::str::FromStr for ProgressWindow {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "centered" | "centred" => Ok(ProgressWindow::Centered),
            "wide" => Ok(ProgressWindow::Wide),
            other => Err(format!("unknown progress window '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressCurve {
    pub session_id: String,
    pub tag: NetworkTag,
    /// Entry `p − 1` holds the ratio at `p`% progress. All entries are
    /// absent when the session has no pairs at all.
    pub values: Vec<Option<f64>>,
}

/// Share of the session's pairs that match `tag` and fall in the window
/// around each percent of game progress. Windows are clipped to the game.
pub fn progress_curve(
    session_id: &str,
    duration_ms: u64,
    pairs: &[AdjacencyPair],
    tag: NetworkTag,
    window: ProgressWindow,
) -> ProgressCurve {
    let total = pairs.len();
    let mut stamps: Vec<u64> = pairs
        .iter()
        .filter(|p| tag.matches(p.da_pair) && p.sent_at_ms <= duration_ms)
        .map(|p| p.sent_at_ms)
        .collect();
    stamps.sort_unstable();
    let h = window.half_span_ms();
    let values = (1..=PROGRESS_POINTS as u64)
        .map(|p| {
            if total == 0 {
                return None;
            }
            let t = duration_ms * p / PROGRESS_POINTS as u64;
            let lo = stamps.partition_point(|&s| s < t.saturating_sub(h));
            let hi = stamps.partition_point(|&s| s < t + h);
            Some((hi - lo) as f64 / total as f64)
        })
        .collect();
    ProgressCurve { session_id: session_id.to_string(), tag, values }
}

/// Means of consecutive `bin_pct`-point bins over the present values.
pub fn bin_curve(values: &[Option<f64>], bin_pct: usize) -> Result<Vec<Option<f64>>, TimelineError> {
    if bin_pct == 0 || !PROGRESS_POINTS.is_multiple_of(bin_pct) {
        return Err(TimelineError::BadBinWidth(bin_pct));
    }
    if values.len() != PROGRESS_POINTS {
        return Err(TimelineError::BadCurveLength(values.len()));
    }
    Ok(values
        .chunks(bin_pct)
        .map(|bin| {
            let present: Vec<f64> = bin.iter().flatten().copied().collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBin {
    pub mean: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Curves with a value in this bin.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiBand {
    pub level: f64,
    pub bins: Vec<BandBin>,
}

/// Cross-curve mean with a Student-t interval per bin. Bins holding a
/// single value get a mean but no bounds.
pub fn aggregate_band(curves: &[Vec<Option<f64>>], level: f64) -> Result<CiBand, TimelineError> {
    if curves.len() < 2 {
        return Err(TimelineError::TooFewCurves(curves.len()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(TimelineError::BadLevel(level));
    }
    let len = curves[0].len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(TimelineError::RaggedCurves);
    }
    let bins = (0..len)
        .map(|i| {
            let xs: Vec<f64> = curves.iter().filter_map(|c| c[i]).collect();
            let n = xs.len();
            if n == 0 {
                return BandBin { mean: None, lower: None, upper: None, n };
            }
            let mean = xs.iter().sum::<f64>() / n as f64;
            if n == 1 {
                return BandBin { mean: Some(mean), lower: None, upper: None, n };
            }
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(1.0 - (1.0 - level) / 2.0);
            let half = t * (var / n as f64).sqrt();
            BandBin { mean: Some(mean), lower: Some(mean - half), upper: Some(mean + half), n }
        })
        .collect();
    Ok(CiBand { level, bins })
}

/// Matching pairs per minute in each phase, using the phase's length
/// clipped to the session. Phases the session never reaches are absent.
pub fn phase_rate(
    duration_ms: u64,
    pairs: &[AdjacencyPair],
    tag: NetworkTag,
    bounds: &PhaseBounds,
) -> [Option<f64>; 4] {
    let mut counts = [0u64; 4];
    for p in pairs.iter().filter(|p| tag.matches(p.da_pair) && p.sent_at_ms <= duration_ms) {
        counts[bounds.phase_of(p.sent_at_ms) as usize] += 1;
    }
    GamePhase::ALL.map(|phase| {
        let (start, end) = bounds.span(phase);
        let end = end.map_or(duration_ms, |e| e.min(duration_ms));
        let len_ms = end.saturating_sub(start);
        (len_ms > 0).then(|| counts[phase as usize] as f64 / (len_ms as f64 / 60_000.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DaPair, DialogueAct::*, PlayerId};

    const DC: DaPair = DaPair::new(Directive, Commissive);
    const QI: DaPair = DaPair::new(Question, Inform);

    fn at(t: u64, da: DaPair) -> AdjacencyPair {
        AdjacencyPair {
            sender: PlayerId::new(1).unwrap(),
            receiver: PlayerId::new(2).unwrap(),
            da_pair: da,
            sent_at_ms: t,
            gap_ms: 0,
        }
    }

    #[test]
    fn single_pair_membership() {
        let c = progress_curve("s", 100_000, &[at(50_000, DC)], NetworkTag::Pair(DC), ProgressWindow::Centered);
        assert_eq!(c.values.len(), 100);
        for (i, v) in c.values.iter().enumerate() {
            let t = 1_000 * (i as i64 + 1);
            let inside = t - 15_000 <= 50_000 && 50_000 < t + 15_000;
            assert_eq!(*v, Some(if inside { 1.0 } else { 0.0 }), "point {}", i + 1);
        }
        let other = progress_curve("s", 100_000, &[at(50_000, DC)], NetworkTag::Pair(QI), ProgressWindow::Centered);
        assert!(other.values.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn wide_window_doubles_reach() {
        let c = progress_curve("s", 100_000, &[at(50_000, DC)], NetworkTag::All, ProgressWindow::Wide);
        assert_eq!(c.values.iter().filter(|v| **v == Some(1.0)).count(), 60);
    }

    #[test]
    fn no_pairs_is_absent() {
        let c = progress_curve("s", 100_000, &[], NetworkTag::All, ProgressWindow::Centered);
        assert!(c.values.iter().all(Option::is_none));
    }

    #[test]
    fn edge_clipping_keeps_final_instant() {
        let c = progress_curve("s", 100_000, &[at(100_000, DC)], NetworkTag::All, ProgressWindow::Centered);
        assert_eq!(c.values[99], Some(1.0));
        assert_eq!(c.values[0], Some(0.0));
    }

    #[test]
    fn binning() {
        let constant = vec![Some(0.2); 100];
        assert!(bin_curve(&constant, 5).unwrap().iter().all(|b| *b == Some(0.2)));
        let mut v = vec![Some(0.0); 100];
        v[4] = Some(0.5);
        assert_eq!(bin_curve(&v, 5).unwrap()[0], Some(0.1));
        let mut sparse = vec![None; 100];
        sparse[7] = Some(0.4);
        let b = bin_curve(&sparse, 5).unwrap();
        assert_eq!((b[0], b[1]), (None, Some(0.4)));
        assert_eq!(bin_curve(&constant, 7), Err(TimelineError::BadBinWidth(7)));
        assert_eq!(bin_curve(&constant[..50], 5), Err(TimelineError::BadCurveLength(50)));
    }

    #[test]
    fn band_two_values() {
        let band = aggregate_band(&[vec![Some(0.1)], vec![Some(0.3)]], 0.95).unwrap();
        let b = band.bins[0];
        assert!((b.mean.unwrap() - 0.2).abs() < 1e-15);
        // one degree of freedom: t quantile is tan(π(q − ½))
        let t = (std::f64::consts::PI * 0.475).tan();
        let half = t * (0.02f64).sqrt() / 2f64.sqrt();
        assert!((b.upper.unwrap() - (0.2 + half)).abs() < 1e-9);
        assert!((b.lower.unwrap() - (0.2 - half)).abs() < 1e-9);
    }

    #[test]
    fn band_identical_and_sparse() {
        let band = aggregate_band(&[vec![Some(0.4), None], vec![Some(0.4), Some(0.1)]], 0.95).unwrap();
        assert_eq!(band.bins[0].lower, Some(0.4));
        assert_eq!(band.bins[0].upper, Some(0.4));
        assert_eq!(band.bins[1], BandBin { mean: Some(0.1), lower: None, upper: None, n: 1 });
        assert_eq!(aggregate_band(&[vec![Some(0.1)]], 0.95), Err(TimelineError::TooFewCurves(1)));
        assert!(aggregate_band(&[vec![Some(0.1)], vec![]], 0.95).is_err());
    }

    #[test]
    fn phase_rates() {
        let pairs: Vec<_> = (0..10).map(|i| at(15 * 60_000 + i * 1_000, DC)).collect();
        let r = phase_rate(30 * 60_000, &pairs, NetworkTag::Pair(DC), &PhaseBounds::default());
        assert_eq!(r[GamePhase::TeamFight as usize], Some(10.0 / 11.0));
        assert_eq!(r[GamePhase::EarlyLaning as usize], Some(0.0));
        assert_eq!(r[GamePhase::Endgame as usize], Some(0.0));
        let short = phase_rate(20 * 60_000, &pairs, NetworkTag::Pair(DC), &PhaseBounds::default());
        assert_eq!(short[GamePhase::Endgame as usize], None);
        assert_eq!(short[GamePhase::TeamFight as usize], Some(10.0 / 6.0));
    }
}
