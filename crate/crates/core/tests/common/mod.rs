//! Independent reference implementations used by the integration tests.
//! They follow the textbook definitions directly and favour clarity over
//! speed, so they share no code with the library.
#![allow(dead_code)]

use teamcomm::model::{DialogueAct, PlayerId, Utterance};

pub const N: usize = 5;

/// Connected unordered node pairs over all possible unordered pairs.
pub fn density(w: &[[u32; N]; N]) -> f64 {
    let mut present = 0.0;
    let mut possible = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i < j {
                possible += 1.0;
                if w[i][j] > 0 || w[j][i] > 0 {
                    present += 1.0;
                }
            }
        }
    }
    present / possible
}

/// Out-degree (row sums) or in-degree (column sums) per node.
pub fn degrees(w: &[[u32; N]; N], out: bool) -> [f64; N] {
    let mut c = [0.0; N];
    for (i, ci) in c.iter_mut().enumerate() {
        for j in 0..N {
            *ci += f64::from(if out { w[i][j] } else { w[j][i] });
        }
    }
    c
}

/// sum_i (c_max - c_i) / ((N - 1) U), zero when U is zero.
pub fn centralization(w: &[[u32; N]; N], out: bool, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let c = degrees(w, out);
    let c_max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut numerator = 0.0;
    for ci in c {
        numerator += c_max - ci;
    }
    numerator / ((N as f64 - 1.0) * u)
}

pub fn total_weight(w: &[[u32; N]; N]) -> f64 {
    w.iter().flatten().map(|&x| f64::from(x)).sum()
}

/// (sender id, receiver id, first act, second act, sender start).
pub type RawPair = (u8, u8, DialogueAct, DialogueAct, u64);

/// Walks every index and looks only at its immediate successor.
pub fn adjacency_pairs(utts: &[Utterance], max_gap_ms: u64) -> Vec<RawPair> {
    let mut out = Vec::new();
    for i in 0..utts.len() {
        if i + 1 >= utts.len() {
            break;
        }
        let a = &utts[i];
        let b = &utts[i + 1];
        if a.speaker == b.speaker {
            continue;
        }
        if b.start_ms - a.start_ms > max_gap_ms {
            continue;
        }
        out.push((a.speaker.get(), b.speaker.get(), a.da, b.da, a.start_ms));
    }
    out
}

pub fn utt(speaker: u8, start_ms: u64, end_ms: u64, da: DialogueAct) -> Utterance {
    Utterance {
        speaker: PlayerId::new(i64::from(speaker)).unwrap(),
        text: format!("u{start_ms}"),
        start_ms,
        end_ms,
        da,
    }
}

/// Midranks by counting: rank = #smaller + (#equal + 1) / 2.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&y| y < v).count() as f64;
            let equal = x.iter().filter(|&&y| y == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided Wilcoxon p by enumerating all 2^m sign patterns.
/// Returns (W, p) with W = min(T+, T-).
pub fn wilcoxon_enumerate(diffs: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let m = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let r = midranks(&abs);
    let total: f64 = r.iter().sum();
    let t_plus: f64 = d.iter().zip(&r).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let w = t_plus.min(total - t_plus);
    let mut hits = 0u64;
    for mask in 0u64..(1 << m) {
        let tp: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| r[k]).sum();
        if tp.min(total - tp) <= w + 1e-9 {
            hits += 1;
        }
    }
    (w, hits as f64 / 2f64.powi(m as i32))
}

/// Two-sided Mann-Whitney p by enumerating every way to pick which of the
/// pooled observations carry label `a`. Returns (U, p), U = min(Ua, Ub).
pub fn mann_whitney_enumerate(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let (na, nb) = (a.len(), b.len());
    let r = midranks(&pooled);
    let u_of = |ra: f64| {
        let ua = ra - (na * (na + 1)) as f64 / 2.0;
        ua.min((na * nb) as f64 - ua)
    };
    let u_obs = u_of(r[..na].iter().sum());
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        let ra: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| r[k]).sum();
        if u_of(ra) <= u_obs + 1e-9 {
            hits += 1;
        }
    }
    (u_obs, hits as f64 / total as f64)
}

/// Kruskal-Wallis H with the usual tie correction, straight from the formula.
pub fn kruskal_h(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let r = midranks(&pooled);
    let mut at = 0;
    let mut s = 0.0;
    for g in groups {
        let rs: f64 = r[at..at + g.len()].iter().sum();
        s += rs * rs / g.len() as f64;
        at += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    h / (1.0 - ties / (n * n * n - n))
}
