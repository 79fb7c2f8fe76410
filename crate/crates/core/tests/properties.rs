mod common;

use proptest::prelude::*;

use teamcomm::ingest::{load_session_dir, write_session_dir, IngestConfig};
use teamcomm::model::{role_of, sort_utterances, validate_session, DialogueAct, Role, Utterance};
use teamcomm::moi::{detect_mois, pair_non_moi, MoiConfig};
use teamcomm::network::{build_networks, extract_adjacency_pairs, metrics, CommNetwork, NetworkTag, Normalization};
use teamcomm::patterns::kneedle_elbow;
use teamcomm::stats::{kruskal_wallis, mann_whitney_u, wilcoxon_signed_rank, TestMode};
use teamcomm::synth::{generate_session, SynthConfig, SynthPause};
use teamcomm::timeline::{aggregate_band, bin_curve, progress_curve, ProgressWindow};

fn weights() -> impl Strategy<Value = [[u32; 5]; 5]> {
    prop::array::uniform5(prop::array::uniform5(0u32..=5)).prop_map(|mut w| {
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = 0;
        }
        w
    })
}

fn to_net(w: &[[u32; 5]; 5]) -> CommNetwork {
    let mut edges = Vec::new();
    for (i, row) in w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > 0 {
                edges.push((Role::ALL[i], Role::ALL[j], x));
            }
        }
    }
    CommNetwork::from_edges(NetworkTag::All, &edges)
}

fn utterances(max_len: usize) -> impl Strategy<Value = Vec<Utterance>> {
    prop::collection::vec((1u8..=5, 0u64..8_000, 0usize..4), 0..=max_len).prop_map(|raw| {
        let mut t = 0;
        let mut out: Vec<Utterance> = raw
            .into_iter()
            .map(|(s, gap, da)| {
                t += gap;
                common::utt(s, t, t + 500, DialogueAct::ALL[da])
            })
            .collect();
        sort_utterances(&mut out);
        out
    })
}

fn sample(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50i32..50, len).prop_map(|v| v.into_iter().map(f64::from).collect())
}

/// Tie-free sample of exactly `len` values.
fn distinct_sample(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..1_000_000, len).prop_map(|s| s.into_iter().map(f64::from).collect())
}

fn disjoint(a: &[f64], b: &[f64]) -> bool {
    a.iter().all(|x| !b.contains(x))
}

proptest! {
    #[test]
    fn roles_repeat_every_five_ids(id in 1i64..=5) {
        prop_assert_eq!(role_of(id).unwrap(), role_of(id + 5).unwrap());
        prop_assert_eq!(role_of(id).unwrap(), Role::ALL[(id - 1) as usize]);
    }

    #[test]
    fn pairs_match_brute_force(utts in utterances(50), gap in prop::sample::select(vec![0u64, 1_000, 5_000, 7_500])) {
        let got: Vec<common::RawPair> = extract_adjacency_pairs(&utts, gap)
            .unwrap()
            .iter()
            .map(|p| (p.sender.get(), p.receiver.get(), p.da_pair.first, p.da_pair.second, p.sent_at_ms))
            .collect();
        prop_assert_eq!(got, common::adjacency_pairs(&utts, gap));
    }

    #[test]
    fn metrics_match_literal_formula(w in weights(), extra in 0usize..10) {
        let net = to_net(&w);
        let u = common::total_weight(&w);
        let m = metrics(&net, Normalization::Pairs, None).unwrap();
        prop_assert!((m.rho - common::density(&w)).abs() <= 1e-12);
        prop_assert!((m.c_od - common::centralization(&w, true, u)).abs() <= 1e-12);
        prop_assert!((m.c_id - common::centralization(&w, false, u)).abs() <= 1e-12);
        let n = u as usize + extra;
        let mu = metrics(&net, Normalization::Utterances, Some(n)).unwrap();
        prop_assert!((mu.c_od - common::centralization(&w, true, n as f64)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&m.rho));
        prop_assert!((0.0..=1.0).contains(&m.c_od) && (0.0..=1.0).contains(&m.c_id));
    }

    #[test]
    fn degrees_sum_to_pair_count(w in weights()) {
        let m = metrics(&to_net(&w), Normalization::Pairs, None).unwrap();
        let out: u64 = m.per_node.iter().map(|n| n.out_degree).sum();
        let inn: u64 = m.per_node.iter().map(|n| n.in_degree).sum();
        prop_assert_eq!(out, m.pair_count);
        prop_assert_eq!(inn, m.pair_count);
        prop_assert_eq!(m.degenerate, m.pair_count == 0);
    }

    #[test]
    fn relabelling_nodes_keeps_metrics(w in weights(), perm in Just([0usize, 1, 2, 3, 4]).prop_shuffle()) {
        let mut p = [[0u32; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                p[perm[i]][perm[j]] = w[i][j];
            }
        }
        let a = metrics(&to_net(&w), Normalization::Pairs, None).unwrap();
        let b = metrics(&to_net(&p), Normalization::Pairs, None).unwrap();
        prop_assert_eq!(a.rho, b.rho);
        prop_assert_eq!(a.c_od, b.c_od);
        prop_assert_eq!(a.c_id, b.c_id);
        for i in 0..5 {
            prop_assert_eq!(a.per_node[i], b.per_node[perm[i]]);
        }
    }

    #[test]
    fn pair_networks_partition_all(utts in utterances(60)) {
        let pairs = extract_adjacency_pairs(&utts, 5_000).unwrap();
        let all_tags: Vec<_> = teamcomm::model::DaPair::all().collect();
        let nets = build_networks(&pairs, &all_tags);
        let total: u64 = nets.iter().filter(|(t, _)| **t != NetworkTag::All).map(|(_, n)| n.pair_count()).sum();
        prop_assert_eq!(total, nets[&NetworkTag::All].pair_count());
        prop_assert_eq!(total, pairs.len() as u64);
    }

    #[test]
    fn knee_ignores_affine_rescaling(
        tail in prop::collection::vec(0u32..40, 3..16),
        head in prop::collection::vec(50u32..2_000, 1..6),
        scale in 0.01f64..1_000.0,
        shift in -500.0f64..500.0,
    ) {
        let mut y: Vec<f64> = head.into_iter().chain(tail).map(f64::from).collect();
        y.sort_by(|a, b| b.total_cmp(a));
        let scaled: Vec<f64> = y.iter().map(|v| v * scale + shift).collect();
        prop_assert_eq!(kneedle_elbow(&y, 1.0).unwrap(), kneedle_elbow(&scaled, 1.0).unwrap());
    }

    #[test]
    fn p_values_are_probabilities(a in sample(1..=30), b in sample(1..=30), c in sample(1..=10)) {
        let pairs: Vec<(f64, f64)> = a.iter().zip(&b).map(|(x, y)| (*x, *y)).collect();
        for mode in [TestMode::Auto, TestMode::Exact, TestMode::Approx] {
            let w = wilcoxon_signed_rank(&pairs, mode).unwrap();
            prop_assert!((0.0..=1.0).contains(&w.p_value));
            let u = mann_whitney_u(&a, &b, mode).unwrap();
            prop_assert!((0.0..=1.0).contains(&u.p_value));
        }
        let k = kruskal_wallis(&[a, b, c]).unwrap();
        prop_assert!((0.0..=1.0).contains(&k.p_value));
    }

    #[test]
    fn shuffling_within_groups_changes_nothing(
        a in sample(1..=8),
        b in sample(1..=8),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.shuffle(&mut rng);
        b2.shuffle(&mut rng);
        let x = mann_whitney_u(&a, &b, TestMode::Auto).unwrap();
        let y = mann_whitney_u(&a2, &b2, TestMode::Auto).unwrap();
        prop_assert_eq!(x.statistic, y.statistic);
        prop_assert_eq!(x.p_value, y.p_value);
        let k1 = kruskal_wallis(&[a.clone(), b.clone()]).unwrap();
        let k2 = kruskal_wallis(&[b2, a2]).unwrap();
        prop_assert!((k1.statistic - k2.statistic).abs() <= 1e-9);
    }

    #[test]
    fn shifting_a_group_away_never_raises_p(
        a in sample(1..=8),
        b in sample(1..=8),
        step in 0.0f64..40.0,
    ) {
        // once b sits on the upper side, moving it further up can only lower p
        let ub: f64 = b.iter().flat_map(|y| a.iter().map(move |x| match y.total_cmp(x) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        })).sum();
        prop_assume!(ub >= (a.len() * b.len()) as f64 / 2.0);
        let moved: Vec<f64> = b.iter().map(|v| v + step).collect();
        let p1 = mann_whitney_u(&a, &b, TestMode::Exact).unwrap();
        let p2 = mann_whitney_u(&a, &moved, TestMode::Exact).unwrap();
        prop_assert!(p2.p_value <= p1.p_value + 1e-12, "{} -> {}", p1.p_value, p2.p_value);
    }

    #[test]
    fn exact_and_normal_agree_for_large_samples(a in distinct_sample(30), b in distinct_sample(30)) {
        prop_assume!(disjoint(&a, &b));
        let e = mann_whitney_u(&a, &b, TestMode::Exact).unwrap();
        let n = mann_whitney_u(&a, &b, TestMode::Approx).unwrap();
        prop_assert!((e.p_value - n.p_value).abs() < 0.01, "exact {} normal {}", e.p_value, n.p_value);
        let pairs: Vec<(f64, f64)> = a.iter().zip(&b).map(|(x, y)| (*x, *y)).collect();
        let we = wilcoxon_signed_rank(&pairs, TestMode::Exact).unwrap();
        let wn = wilcoxon_signed_rank(&pairs, TestMode::Approx).unwrap();
        prop_assert!((we.p_value - wn.p_value).abs() < 0.01, "exact {} normal {}", we.p_value, wn.p_value);
    }

    #[test]
    fn two_group_kruskal_tracks_mann_whitney(a in distinct_sample(25), b in distinct_sample(25)) {
        prop_assume!(disjoint(&a, &b));
        let k = kruskal_wallis(&[a.clone(), b.clone()]).unwrap();
        let u = mann_whitney_u(&a, &b, TestMode::Approx).unwrap();
        prop_assert!((k.p_value - u.p_value).abs() < 0.01, "kw {} mw {}", k.p_value, u.p_value);
    }

    #[test]
    fn binning_preserves_the_mean(values in prop::collection::vec(0.0f64..1.0, 100), bin in prop::sample::select(vec![1usize, 2, 4, 5, 10, 20, 25, 50, 100])) {
        let curve: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let binned = bin_curve(&curve, bin).unwrap();
        prop_assert_eq!(binned.len(), 100 / bin);
        let m1 = values.iter().sum::<f64>() / 100.0;
        let m2 = binned.iter().flatten().sum::<f64>() / binned.len() as f64;
        prop_assert!((m1 - m2).abs() <= 1e-12);
    }

    #[test]
    fn band_bounds_bracket_the_mean(
        curves in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0.0f64..1.0), 20), 2..8),
        level in 0.5f64..0.999,
    ) {
        let band = aggregate_band(&curves, level).unwrap();
        for b in &band.bins {
            match (b.lower, b.mean, b.upper) {
                (Some(lo), Some(m), Some(hi)) => prop_assert!(lo <= m && m <= hi),
                (None, m, None) => prop_assert!(b.n < 2 && (m.is_some() == (b.n == 1))),
                _ => prop_assert!(false, "half-present bounds"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_sessions_are_valid_and_round_trip(seed in any::<u64>(), pause in prop::option::of(60_000u64..1_500_000)) {
        let cfg = SynthConfig {
            seed,
            pauses: pause.map(|at| vec![SynthPause { at_game_ms: at, duration_ms: 45_000 }]).unwrap_or_default(),
            ..SynthConfig::default()
        };
        let (session, _) = generate_session(&cfg).unwrap();
        prop_assert!(validate_session(&session).is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_session_dir(&session, dir.path()).unwrap();
        let back = load_session_dir(dir.path(), IngestConfig::default()).unwrap();
        prop_assert!(back.warnings.is_empty(), "{:?}", back.warnings);
        prop_assert_eq!(back.session, session);
    }

    #[test]
    fn windows_respect_their_invariants(seed in any::<u64>()) {
        let cfg = MoiConfig::default();
        let (session, _) = generate_session(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
        let mois = detect_mois(&session, &cfg);
        for m in &mois {
            prop_assert_eq!(m.window.len_ms(), 30_000);
            prop_assert!(m.window.end_ms <= session.duration_ms);
            prop_assert!(!m.utterances.is_empty());
            if let Ok(p) = pair_non_moi(&session, m, &mois, &cfg) {
                let c = p.control.window;
                prop_assert_eq!(c.len_ms(), 30_000);
                prop_assert!(c.end_ms <= m.window.start_ms);
                prop_assert_eq!(c.end_ms + p.control.shift_ms, m.window.start_ms);
                prop_assert!(mois.iter().all(|o| !o.window.overlaps(&c)));
                let speakers: std::collections::BTreeSet<_> = p.control.utterances.iter().map(|u| u.speaker).collect();
                prop_assert!(speakers.len() >= 2);
            }
        }
    }

    #[test]
    fn pair_curves_never_exceed_the_all_curve(seed in any::<u64>(), wide in any::<bool>()) {
        let (session, _) = generate_session(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
        let pairs = extract_adjacency_pairs(&session.utterances, 5_000).unwrap();
        let window = if wide { ProgressWindow::Wide } else { ProgressWindow::Centered };
        let all = progress_curve(&session.id, session.duration_ms, &pairs, NetworkTag::All, window);
        let mut sum = vec![0.0; all.values.len()];
        for p in teamcomm::model::DaPair::all() {
            let c = progress_curve(&session.id, session.duration_ms, &pairs, NetworkTag::Pair(p), window);
            for (i, (v, a)) in c.values.iter().zip(&all.values).enumerate() {
                let (v, a) = (v.unwrap(), a.unwrap());
                prop_assert!(v <= a + 1e-12);
                sum[i] += v;
            }
        }
        for (s, a) in sum.iter().zip(&all.values) {
            prop_assert!((s - a.unwrap()).abs() <= 1e-9);
        }
    }
}
