//! Paired comparison of a kNN-Avg setting against the baseline.
//!
//! Significance comes from a two-sided Wilcoxon signed-rank test on the
//! seed-paired runs; direction comes from the Vargha-Delaney A12 effect size
//! of the kNN arm over the baseline arm.
//!
//! Zero differences are dropped before ranking (Wilcoxon's original
//! treatment). Up to [`EXACT_LIMIT`] non-zero pairs the p-value is exact,
//! taken from the permutation distribution of the signed midranks, so ties
//! are handled exactly too. Larger samples use the normal approximation
//! with tie-corrected variance and a continuity correction.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::metrics::MetricReport;

pub const EXACT_LIMIT: usize = 25;
pub const MIN_PAIRS: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WilcoxonOutcome {
    Tested {
        p_value: f64,
        /// Sum of the ranks of positive differences.
        w_plus: f64,
        /// Number of non-zero differences.
        n: usize,
        exact: bool,
    },
    /// Fewer than [`MIN_PAIRS`] non-zero differences.
    InsufficientData { nonzero: usize },
}

impl WilcoxonOutcome {
    /// The p-value, with insufficient data read as "no evidence" (1.0).
    pub fn p_value(&self) -> f64 {
        match *self {
            WilcoxonOutcome::Tested { p_value, .. } => p_value,
            WilcoxonOutcome::InsufficientData { .. } => 1.0,
        }
    }
}

/// Midranks (1-based) of `values`, which must be sorted ascending.
fn midranks(sorted: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; sorted.len()];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].fill(r);
        i = j + 1;
    }
    ranks
}

fn standard_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided Wilcoxon signed-rank test of `a - b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::contract(format!("need at least {MIN_PAIRS} pairs, got {}", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::contract("paired samples must be finite"));
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Ok(WilcoxonOutcome::InsufficientData { nonzero: n });
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_LIMIT {
        // Null distribution of W+ over the 2^n sign assignments, on doubled
        // ranks so midranks stay integral.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max_sum: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max_sum + 1];
        counts[0] = 1.0;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let total = 2f64.powi(n as i32);
        let observed = (2.0 * w_plus).round() as usize;
        let lower: f64 = counts[..=observed].iter().sum::<f64>() / total;
        let upper: f64 = counts[observed..].iter().sum::<f64>() / total;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(WilcoxonOutcome::Tested {
            p_value: p,
            w_plus,
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < abs.len() {
        let mut j = i;
        while j + 1 < abs.len() && abs[j + 1] == abs[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = (2.0 * standard_normal_sf(z)).min(1.0);
    Ok(WilcoxonOutcome::Tested {
        p_value: p,
        w_plus,
        n,
        exact: false,
    })
}

/// Probability that a random draw from `a` exceeds one from `b`, ties counting half.
pub fn vargha_delaney_a12(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("A12 needs two non-empty samples"));
    }
    let mut score = 0.0;
    for x in a {
        for y in b {
            if x > y {
                score += 1.0;
            } else if x == y {
                score += 0.5;
            }
        }
    }
    Ok(score / (a.len() * b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "HV")]
    Hypervolume,
    #[serde(rename = "IGD")]
    Igd,
    #[serde(rename = "DeltaF")]
    DeltaF,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Hypervolume, Metric::Igd, Metric::DeltaF];

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Hypervolume)
    }

    pub fn of(self, r: &MetricReport) -> f64 {
        match self {
            Metric::Hypervolume => r.hv_mean_adjusted,
            Metric::Igd => r.igd_mean_adjusted,
            Metric::DeltaF => r.delta_f,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Hypervolume => "HV",
            Metric::Igd => "IGD",
            Metric::DeltaF => "DeltaF",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Better,
    Equivalent,
    Worse,
}

impl Verdict {
    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Better => "✓",
            Verdict::Equivalent => "≡",
            Verdict::Worse => "✗",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Better => "BETTER",
            Verdict::Equivalent => "EQUIVALENT",
            Verdict::Worse => "WORSE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub metric: Metric,
    pub k: usize,
    pub max_dist: f64,
    pub p_value: f64,
    /// A12 of the kNN arm over the baseline arm.
    pub a12: f64,
    pub verdict: Verdict,
    pub pairs: usize,
    pub insufficient_data: bool,
}

/// One run's indicators tagged with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededReport {
    pub seed: u64,
    pub report: MetricReport,
}

/// Verdict of kNN setting `(k, max_dist)` against the baseline on `metric`.
///
/// Runs are paired by seed; both arms must cover exactly the same seeds.
pub fn compare_setting(
    knn_runs: &[SeededReport],
    baseline_runs: &[SeededReport],
    k: usize,
    max_dist: f64,
    metric: Metric,
    alpha: f64,
) -> Result<ComparisonVerdict> {
    let mut knn: Vec<&SeededReport> = knn_runs.iter().collect();
    let mut base: Vec<&SeededReport> = baseline_runs.iter().collect();
    knn.sort_by_key(|r| r.seed);
    base.sort_by_key(|r| r.seed);
    let seeds = |v: &[&SeededReport]| v.iter().map(|r| r.seed).collect::<Vec<_>>();
    let (ks, bs) = (seeds(&knn), seeds(&base));
    if ks != bs {
        return Err(Error::contract(format!(
            "kNN and baseline runs are not seed-paired ({} vs {} runs)",
            ks.len(),
            bs.len()
        )));
    }
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::contract("duplicate seeds within one arm"));
    }
    let a: Vec<f64> = knn.iter().map(|r| metric.of(&r.report)).collect();
    let b: Vec<f64> = base.iter().map(|r| metric.of(&r.report)).collect();
    verdict_from_samples(&a, &b, k, max_dist, metric, alpha)
}

/// Verdict from already paired samples (`knn[i]` pairs with `baseline[i]`).
pub fn verdict_from_samples(
    knn: &[f64],
    baseline: &[f64],
    k: usize,
    max_dist: f64,
    metric: Metric,
    alpha: f64,
) -> Result<ComparisonVerdict> {
    let outcome = wilcoxon_signed_rank(knn, baseline)?;
    let a12 = vargha_delaney_a12(knn, baseline)?;
    let p_value = outcome.p_value();
    let verdict = if p_value >= alpha || a12 == 0.5 {
        Verdict::Equivalent
    } else {
        let knn_higher = a12 > 0.5;
        if knn_higher == metric.higher_is_better() {
            Verdict::Better
        } else {
            Verdict::Worse
        }
    };
    Ok(ComparisonVerdict {
        metric,
        k,
        max_dist,
        p_value,
        a12,
        verdict,
        pairs: knn.len(),
        insufficient_data: matches!(outcome, WilcoxonOutcome::InsufficientData { .. }),
    })
}
