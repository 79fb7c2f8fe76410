//! Generator calibration and recovery of planted structure, plus
//! Monte-Carlo checks of the asymptotic approximations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use teamcomm::analysis::{analyze_corpus, compare_moi, metric_rows, AnalysisConfig, SessionAnalysis};
use teamcomm::model::{DaPair, DialogueAct::*, Role, Session, WindowKind};
use teamcomm::network::{NetworkTag, Normalization};
use teamcomm::stats::{kruskal_wallis, TestMode};
use teamcomm::synth::{generate_corpus, SynthConfig};
use teamcomm::timeline::aggregate_band;

fn corpus(cfg: &SynthConfig, games: usize) -> (Vec<Session>, Vec<SessionAnalysis>) {
    let sessions: Vec<Session> = generate_corpus(cfg, games).unwrap().into_iter().map(|(s, _)| s).collect();
    let analyses = analyze_corpus(&sessions, &AnalysisConfig::default()).into_iter().map(Result::unwrap).collect();
    (sessions, analyses)
}

#[test]
fn utterance_volume_matches_the_reported_average() {
    // 537.2 utterances per 30-minute game with 20% of initiations answered
    let per_player = 537.2 / (30.0 * 5.0 * 1.2);
    let cfg = SynthConfig { seed: 537, utterance_rate_per_min: [per_player; 4], ..SynthConfig::default() };
    let games = generate_corpus(&cfg, 200).unwrap();
    let mean = games.iter().map(|(s, _)| s.utterances.len() as f64).sum::<f64>() / games.len() as f64;
    let expected = games[0].1.expected_utterances;
    assert!((expected - 537.2).abs() < 1e-6, "configured expectation {expected}");
    // per-game sd is about 25, so the mean of 200 has sd under 2
    assert!((mean - 537.2).abs() < 8.0, "mean {mean}");
}

#[test]
fn a_single_dominant_speaker_gives_full_out_centralization() {
    let cfg = SynthConfig {
        seed: 11,
        dominance: [0.0, 0.0, 0.0, 0.0, 1.0],
        da_distribution: [[0.0, 0.0, 1.0, 0.0]; 4],
        reply_probability: 0.6,
        reply_da: [[0.0, 0.0, 0.0, 1.0]; 4],
        ..SynthConfig::default()
    };
    let (_, analyses) = corpus(&cfg, 4);
    let dc = NetworkTag::Pair(DaPair::new(Directive, Commissive));
    let rows = metric_rows(&analyses, &[dc], Normalization::Pairs).unwrap();
    let live: Vec<_> = rows.iter().filter(|r| !r.degenerate).collect();
    assert!(live.len() > 50);
    for r in live {
        assert_eq!(r.c_od, 1.0, "{} window {}", r.session, r.pair_id);
    }
    // the generator's ground truth agrees on who dominates
    let truth = generate_corpus(&cfg, 1).unwrap().remove(0).1;
    assert_eq!(truth.dominance_order[0], Role::Support);
    assert!(truth.planted_replies[Role::Support.index()].iter().sum::<u64>() > 0);
}

#[test]
fn busier_moments_of_interest_are_detected() {
    let cfg = SynthConfig { seed: 21, moi_rate_multiplier: 2.5, ..SynthConfig::default() };
    let (_, analyses) = corpus(&cfg, 6);
    let rows = metric_rows(&analyses, &[NetworkTag::All], Normalization::Pairs).unwrap();
    let report = compare_moi(&rows, TestMode::Auto).unwrap();
    let rho = report.tests.iter().find(|t| t.metric == "rho").unwrap();
    assert!(rho.p.unwrap() < 0.001, "p = {:?}", rho.p);
    let mean = |kind| {
        let v: Vec<f64> = rows.iter().filter(|r| r.kind == kind && !r.degenerate).map(|r| r.rho).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(WindowKind::Moi) > mean(WindowKind::NonMoi));
}

#[test]
fn band_coverage_is_close_to_nominal() {
    let mut rng = ChaCha20Rng::seed_from_u64(95);
    let truth = 0.3;
    let noise = Normal::new(truth, 0.05).unwrap();
    let reps = 4000;
    let mut covered = 0;
    for _ in 0..reps {
        let curves: Vec<Vec<Option<f64>>> = (0..8).map(|_| vec![Some(noise.sample(&mut rng))]).collect();
        let b = &aggregate_band(&curves, 0.95).unwrap().bins[0];
        if b.lower.unwrap() <= truth && truth <= b.upper.unwrap() {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!((rate - 0.95).abs() < 0.015, "coverage {rate}");
}

#[test]
fn kruskal_chi_square_p_tracks_the_permutation_p() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for shift in [0.0, 0.3, 0.6] {
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|g| (0..12).map(|_| rng.random::<f64>() + shift * g as f64).collect())
            .collect();
        let observed = kruskal_wallis(&groups).unwrap();
        let mut pooled: Vec<f64> = groups.concat();
        let perms = 20_000;
        let mut extreme = 0;
        for _ in 0..perms {
            pooled.shuffle(&mut rng);
            let g: Vec<&[f64]> = pooled.chunks(12).collect();
            if kruskal_wallis(&g).unwrap().statistic >= observed.statistic - 1e-12 {
                extreme += 1;
            }
        }
        let perm_p = extreme as f64 / perms as f64;
        assert!((perm_p - observed.p_value).abs() < 0.02, "shift {shift}: chi2 {} perm {perm_p}", observed.p_value);
    }
}
