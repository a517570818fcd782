//! Mann-Whitney U tests and bootstrap summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pooled sample size up to which p-values are computed by enumeration.
pub const EXACT_LIMIT: usize = 12;
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Number of comparisons the significance level is divided by.
pub const DEFAULT_BONFERRONI: usize = 16;
/// Groups smaller than this are flagged in summaries.
pub const LOW_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: number of pairs `(a_i, b_j)` with
    /// `a_i > b_j`, ties counting one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: PMethod,
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Statistics("Mann-Whitney needs non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Statistics("Mann-Whitney samples must be finite".into()));
    }
    Ok(())
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

fn u_from_rank_sum(rank_sum: f64, n1: usize) -> f64 {
    rank_sum - (n1 * (n1 + 1)) as f64 / 2.0
}

fn pooled(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

/// Exact two-sided p by enumerating every assignment of the pooled midranks
/// to the first sample.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (n1, n) = (a.len(), a.len() + b.len());
    if n > 24 {
        return Err(Error::Statistics(format!("exact enumeration of n = {n} is not supported")));
    }
    let (ranks, _) = midranks(&pooled(a, b));
    let u = u_from_rank_sum(ranks[..n1].iter().sum(), n1);
    let centre = (n1 * (n - n1)) as f64 / 2.0;
    let observed = (u - centre).abs();

    let (mut extreme, mut total) = (0u64, 0u64);
    let mut chosen = Vec::with_capacity(n1);
    enumerate(&ranks, n1, 0, &mut chosen, &mut |sum| {
        total += 1;
        if (u_from_rank_sum(sum, n1) - centre).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    });
    Ok(MannWhitney {
        u,
        p: (extreme as f64 / total as f64).min(1.0),
        method: PMethod::Exact,
    })
}

fn enumerate(ranks: &[f64], k: usize, from: usize, chosen: &mut Vec<f64>, visit: &mut impl FnMut(f64)) {
    if chosen.len() == k {
        visit(chosen.iter().sum());
        return;
    }
    let remaining = k - chosen.len();
    for i in from..=ranks.len() - remaining {
        chosen.push(ranks[i]);
        enumerate(ranks, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check_samples(a, b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let (ranks, ties) = midranks(&pooled(a, b));
    let u = u_from_rank_sum(ranks[..a.len()].iter().sum(), a.len());
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = if n > 1.0 {
        n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / variance.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p,
        method: PMethod::Normal,
    })
}

/// Exact for pooled size up to [`EXACT_LIMIT`], normal approximation above.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.len() + b.len() <= EXACT_LIMIT {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub low_n: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub u: f64,
    pub p: f64,
    pub method: PMethod,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub alpha: f64,
    pub bonferroni: usize,
    pub groups: Vec<GroupSummary>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub alpha: f64,
    pub bonferroni: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            alpha: DEFAULT_ALPHA,
            bonferroni: DEFAULT_BONFERRONI,
            resamples: BOOTSTRAP_RESAMPLES,
            seed: 0,
        }
    }
}

impl SummaryOptions {
    pub fn threshold(&self) -> f64 {
        self.alpha / self.bonferroni.max(1) as f64
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Percentile-bootstrap 95% confidence interval of the mean.
pub fn bootstrap_ci(x: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(Error::Statistics("bootstrap of an empty sample".into()));
    }
    if resamples == 0 {
        return Err(Error::Statistics("bootstrap needs at least one resample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..x.len()).map(|_| x[rng.random_range(0..x.len())]).sum::<f64>() / x.len() as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&means, 0.025), quantile_sorted(&means, 0.975)))
}

/// Per-group summaries plus every pairwise Mann-Whitney comparison, in
/// input order.
pub fn summarize(groups: &[(String, Vec<f64>)], options: &SummaryOptions) -> Result<StatsReport> {
    let mut summaries = Vec::with_capacity(groups.len());
    for (i, (name, values)) in groups.iter().enumerate() {
        if values.is_empty() {
            return Err(Error::Statistics(format!("group {name} is empty")));
        }
        let (ci_low, ci_high) = bootstrap_ci(values, options.resamples, options.seed.wrapping_add(i as u64))?;
        summaries.push(GroupSummary {
            name: name.clone(),
            n: values.len(),
            mean: mean(values),
            median: median(values),
            ci_low,
            ci_high,
            low_n: values.len() < LOW_N,
        });
    }
    let mut comparisons = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let r = mann_whitney_u(&groups[i].1, &groups[j].1)?;
            comparisons.push(Comparison {
                a: groups[i].0.clone(),
                b: groups[j].0.clone(),
                u: r.u,
                p: r.p,
                method: r.method,
                significant: r.p < options.threshold(),
            });
        }
    }
    Ok(StatsReport {
        alpha: options.alpha,
        bonferroni: options.bonferroni,
        groups: summaries,
        comparisons,
    })
}
