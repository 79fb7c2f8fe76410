//! Rank-based tests (Wilcoxon signed-rank, Mann–Whitney U, Kruskal–Wallis)
//! and descriptive summaries.
//!
//! Exact p-values are computed from the full permutation distribution of the
//! rank statistic, conditional on the observed ties. Ranks are handled as
//! doubled integers (midranks are multiples of ½), so the exact
//! distributions are counted without any floating-point comparison.
//! All p-values are two-sided.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

/// Largest nonzero-difference count for which `Auto` uses the exact
/// Wilcoxon distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;
/// Largest `n_a · n_b` for which `Auto` uses the exact Mann–Whitney
/// distribution.
pub const MANN_WHITNEY_EXACT_MAX_PRODUCT: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    Empty,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("exact distribution too large to enumerate")]
    ExactTooLarge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    #[default]
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    NormalApprox,
    ChiSquareApprox,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::NormalApprox => "normal",
            Method::ChiSquareApprox => "chi2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// W = min(T+, T−), U = min(U_a, U_b), or H.
    pub statistic: f64,
    pub p_value: f64,
    /// Sample sizes: `[pairs, nonzero differences]` for Wilcoxon, group
    /// sizes otherwise.
    pub n: Vec<usize>,
    pub method: Method,
    /// No variation to test (all differences zero, all values tied).
    pub degenerate: bool,
}

impl TestResult {
    fn degenerate(statistic: f64, n: Vec<usize>, method: Method) -> Self {
        TestResult { statistic, p_value: 1.0, n, method, degenerate: true }
    }
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Doubled midranks (1-based) of `values` and the sizes of tie groups.
pub(crate) fn doubled_midranks(values: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j, midrank (i+1+j)/2, doubled
        let r2 = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = r2;
        }
        if j - i > 1 {
            ties.push((j - i) as u64);
        }
        i = j;
    }
    (ranks, ties)
}

fn tie_term(ties: &[u64]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

fn two_sided_normal(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Wilcoxon signed-rank test on paired observations.
///
/// Zero differences are dropped; `W = min(T+, T−)` over midranks of `|d|`.
/// The approximation uses tie-corrected variance and a 0.5 continuity
/// correction.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)], mode: TestMode) -> Result<TestResult, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::Empty);
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    check_finite(&diffs)?;
    let nonzero: Vec<f64> = diffs.into_iter().filter(|d| *d != 0.0).collect();
    let m = nonzero.len();
    let n = vec![pairs.len(), m];
    if m == 0 {
        return Ok(TestResult::degenerate(0.0, n, Method::Exact));
    }

    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks2, ties) = doubled_midranks(&abs);
    let total2: u64 = ranks2.iter().sum();
    let plus2: u64 = nonzero.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w2 = plus2.min(total2 - plus2);
    let statistic = w2 as f64 / 2.0;

    let exact = match mode {
        TestMode::Exact => true,
        TestMode::Approx => false,
        TestMode::Auto => m <= WILCOXON_EXACT_MAX,
    };
    if exact {
        if m > 120 {
            return Err(StatsError::ExactTooLarge);
        }
        // counts[s] = sign assignments whose positive doubled-rank sum is s
        let mut counts = vec![0u128; total2 as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let extreme: u128 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as u64).min(total2 - *s as u64) <= w2)
            .map(|(_, c)| c)
            .sum();
        let p_value = extreme as f64 / (1u128 << m) as f64;
        return Ok(TestResult { statistic, p_value, n, method: Method::Exact, degenerate: false });
    }

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
    if var <= 0.0 {
        return Ok(TestResult::degenerate(statistic, n, Method::NormalApprox));
    }
    let d = ((statistic - mean).abs() - 0.5).max(0.0);
    let p_value = two_sided_normal(d / var.sqrt());
    Ok(TestResult { statistic, p_value, n, method: Method::NormalApprox, degenerate: false })
}

/// Mann–Whitney U test for two independent samples, `U = min(U_a, U_b)`.
///
/// The exact mode counts all group-label assignments (conditional on ties);
/// the approximation is normal with tie-corrected variance.
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: TestMode) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let n = vec![na, nb];
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let big_n = all.len();
    let (ranks2, ties) = doubled_midranks(&all);
    let ra2: u64 = ranks2[..na].iter().sum();
    let ua2 = ra2 - (na * (na + 1)) as u64;
    let prod2 = 2 * (na * nb) as u64;
    let u2 = ua2.min(prod2 - ua2);
    let statistic = u2 as f64 / 2.0;

    if ties.len() == 1 && ties[0] as usize == big_n {
        return Ok(TestResult::degenerate(statistic, n, Method::Exact));
    }

    let exact = match mode {
        TestMode::Exact => true,
        TestMode::Approx => false,
        TestMode::Auto => na * nb <= MANN_WHITNEY_EXACT_MAX_PRODUCT,
    };
    if exact {
        let p_value = mann_whitney_exact_p(&ranks2, na.min(nb), u2, prod2)?;
        return Ok(TestResult { statistic, p_value, n, method: Method::Exact, degenerate: false });
    }

    let (naf, nbf, nf) = (na as f64, nb as f64, big_n as f64);
    let mean = naf * nbf / 2.0;
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term(&ties) / (nf * (nf - 1.0)));
    let p_value = two_sided_normal((statistic - mean) / var.sqrt());
    Ok(TestResult { statistic, p_value, n, method: Method::NormalApprox, degenerate: false })
}

/// Fraction of size-`k` label assignments whose doubled `min(U, nm − U)`
/// is at most `u2`. The statistic is symmetric in the two groups, so the
/// smaller group size may be used for `k`.
fn mann_whitney_exact_p(ranks2: &[u64], k: usize, u2: u64, prod2: u64) -> Result<f64, StatsError> {
    let mut top = ranks2.to_vec();
    top.sort_unstable_by(|a, b| b.cmp(a));
    let max_sum = top[..k].iter().sum::<u64>() as usize;
    // counts[j][s]: subsets of size j with doubled rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    for &r in ranks2 {
        let r = r as usize;
        for j in (1..=k).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let (src, dst) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                if src[s - r] != 0 {
                    dst[s] = dst[s].checked_add(src[s - r]).ok_or(StatsError::ExactTooLarge)?;
                }
            }
        }
    }
    let offset = (k * (k + 1)) as u64;
    let mut total = 0u128;
    let mut extreme = 0u128;
    for (s, &c) in counts[k].iter().enumerate() {
        if c == 0 {
            continue;
        }
        total = total.checked_add(c).ok_or(StatsError::ExactTooLarge)?;
        let us = s as u64 - offset;
        if us.min(prod2 - us) <= u2 {
            extreme += c;
        }
    }
    Ok(extreme as f64 / total as f64)
}

/// Kruskal–Wallis H test with tie correction; p from χ² with `k − 1` df.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: groups.len() });
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(StatsError::Empty);
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    check_finite(&all)?;
    let n: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    let big_n = all.len() as f64;
    let (ranks2, ties) = doubled_midranks(&all);

    let correction = 1.0 - tie_term(&ties) / (big_n * big_n * big_n - big_n);
    if correction <= 0.0 {
        return Ok(TestResult::degenerate(0.0, n, Method::ChiSquareApprox));
    }
    let mut offset = 0;
    let mut weighted = 0.0;
    for &size in &n {
        let r2: u64 = ranks2[offset..offset + size].iter().sum();
        let r = r2 as f64 / 2.0;
        weighted += r * r / size as f64;
        offset += size;
    }
    let h = (12.0 / (big_n * (big_n + 1.0)) * weighted - 3.0 * (big_n + 1.0)) / correction;
    let h = h.max(0.0);
    let chi2 = ChiSquared::new((groups.len() - 1) as f64).expect("df is positive");
    Ok(TestResult {
        statistic: h,
        p_value: chi2.sf(h).clamp(0.0, 1.0),
        n,
        method: Method::ChiSquareApprox,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    None,
    Bonferroni,
    Holm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub a: usize,
    pub b: usize,
    pub result: TestResult,
    pub adjusted_p: f64,
}

/// Mann–Whitney U for every unordered pair of groups (`a < b`).
pub fn post_hoc_pairwise<S: AsRef<[f64]>>(
    groups: &[S],
    mode: TestMode,
    correction: Correction,
) -> Result<Vec<PairwiseResult>, StatsError> {
    if groups.len() < 3 {
        return Err(StatsError::TooFewGroups { needed: 3, got: groups.len() });
    }
    let mut out = Vec::new();
    for a in 0..groups.len() {
        for b in (a + 1)..groups.len() {
            let result = mann_whitney_u(groups[a].as_ref(), groups[b].as_ref(), mode)?;
            out.push(PairwiseResult { a, b, adjusted_p: result.p_value, result });
        }
    }
    let m = out.len() as f64;
    match correction {
        Correction::None => {}
        Correction::Bonferroni => {
            for r in &mut out {
                r.adjusted_p = (r.result.p_value * m).min(1.0);
            }
        }
        Correction::Holm => {
            let mut order: Vec<usize> = (0..out.len()).collect();
            order.sort_by(|&x, &y| out[x].result.p_value.total_cmp(&out[y].result.p_value));
            let mut running = 0.0f64;
            for (rank, &idx) in order.iter().enumerate() {
                let adj = ((m - rank as f64) * out[idx].result.p_value).min(1.0);
                running = running.max(adj);
                out[idx].adjusted_p = running;
            }
        }
    }
    Ok(out)
}

/// `*`, `**`, `***` at .05 / .01 / .001.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1 denominator); needs two values.
    pub sd: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary { count, mean: None, sd: None };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let sd = (count > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (count - 1) as f64).sqrt()
    });
    Summary { count, mean: Some(mean), sd }
}

/// Linearly interpolated quantile of sorted data (the common "type 7"
/// definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(BoxStats {
        min: *v.first()?,
        q1: quantile_sorted(&v, 0.25)?,
        median: quantile_sorted(&v, 0.5)?,
        q3: quantile_sorted(&v, 0.75)?,
        max: *v.last()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks() {
        let (r, t) = doubled_midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![7, 2, 7, 4]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn wilcoxon_identical_is_degenerate() {
        let r = wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 2.0)], TestMode::Auto).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_all_positive() {
        let pairs: Vec<(f64, f64)> = (1..=5).map(|d| (d as f64, 0.0)).collect();
        let r = wilcoxon_signed_rank(&pairs, TestMode::Exact).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 2.0 / 32.0);
        assert_eq!(r.method, Method::Exact);
    }

    #[test]
    fn wilcoxon_empty() {
        assert_eq!(wilcoxon_signed_rank(&[], TestMode::Auto), Err(StatsError::Empty));
    }

    #[test]
    fn mann_whitney_separated() {
        let r = mann_whitney_u(&[1., 2., 3.], &[4., 5., 6.], TestMode::Auto).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 0.1);
        assert_eq!(r.method, Method::Exact);
    }

    #[test]
    fn mann_whitney_identical() {
        let a = [1., 2., 3., 4.];
        let r = mann_whitney_u(&a, &a, TestMode::Auto).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert!(r.p_value > 0.99);
        let approx = mann_whitney_u(&a, &a, TestMode::Approx).unwrap();
        assert!(approx.p_value > 0.99);
        let flat = mann_whitney_u(&[2., 2.], &[2., 2., 2.], TestMode::Auto).unwrap();
        assert!(flat.degenerate);
    }

    #[test]
    fn kruskal_three_groups() {
        let r = kruskal_wallis(&[vec![1., 2.], vec![3., 4.], vec![5., 6.]]).unwrap();
        assert!((r.statistic - 32.0 / 7.0).abs() < 1e-12);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
        let flat = kruskal_wallis(&[vec![3., 3.], vec![3.], vec![3., 3.]]).unwrap();
        assert!(flat.degenerate);
        assert_eq!(flat.statistic, 0.0);
        assert!(matches!(kruskal_wallis(&[vec![1.0]]), Err(StatsError::TooFewGroups { .. })));
    }

    #[test]
    fn post_hoc_shape() {
        let groups: Vec<Vec<f64>> = (0..5).map(|g| (0..6).map(|i| (g * 10 + i) as f64).collect()).collect();
        let r = post_hoc_pairwise(&groups, TestMode::Auto, Correction::None).unwrap();
        assert_eq!(r.len(), 10);
        let same: Vec<Vec<f64>> = (0..4).map(|_| vec![1., 2., 3., 4.]).collect();
        let r = post_hoc_pairwise(&same, TestMode::Auto, Correction::Holm).unwrap();
        assert!(r.iter().all(|x| x.result.p_value > 0.99 && x.adjusted_p > 0.99));
        assert!(post_hoc_pairwise(&groups[..2], TestMode::Auto, Correction::None).is_err());
    }

    #[test]
    fn corrections() {
        let groups = vec![vec![1., 2., 3.], vec![4., 5., 6.], vec![7., 8., 9.]];
        let raw = post_hoc_pairwise(&groups, TestMode::Auto, Correction::None).unwrap();
        let bonf = post_hoc_pairwise(&groups, TestMode::Auto, Correction::Bonferroni).unwrap();
        for (r, b) in raw.iter().zip(&bonf) {
            assert_eq!(b.adjusted_p, (r.result.p_value * 3.0).min(1.0));
        }
        let holm = post_hoc_pairwise(&groups, TestMode::Auto, Correction::Holm).unwrap();
        for (h, b) in holm.iter().zip(&bonf) {
            assert!(h.adjusted_p <= b.adjusted_p);
        }
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.0009), "***");
        assert_eq!(significance_stars(0.001), "**");
        assert_eq!(significance_stars(0.049), "*");
        assert_eq!(significance_stars(0.05), "");
    }

    #[test]
    fn summaries() {
        let s = summarize(&[]);
        assert_eq!((s.count, s.mean, s.sd), (0, None, None));
        let s = summarize(&[1., 2., 3.]);
        assert_eq!((s.count, s.mean, s.sd), (3, Some(2.0), Some(1.0)));
        assert_eq!(summarize(&[4.0]).sd, None);
    }

    #[test]
    fn quantiles() {
        let b = box_stats(&[4., 1., 3., 2.]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (1., 1.75, 2.5, 3.25, 4.));
        assert!(box_stats(&[]).is_none());
    }
}
