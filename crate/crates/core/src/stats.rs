//! Pearson correlation with a permutation test, the Mann-Whitney U test
//! (normal approximation and exact enumeration), and five-number summaries.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest pooled sample enumerated exactly by [`mann_whitney_exact`].
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
    Permutation,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApprox => "normal_approx",
            TestMethod::Permutation => "permutation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub method: TestMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sample"));
    }
    Ok(())
}

fn centered(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

struct PreparedPearson {
    dx: Vec<f64>,
    dy: Vec<f64>,
    denom: f64,
}

impl PreparedPearson {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch(xs.len(), ys.len()));
        }
        if xs.len() < 3 {
            return Err(Error::UndefinedCorrelation(format!(
                "need at least 3 pairs, got {}",
                xs.len()
            )));
        }
        check_finite(xs)?;
        check_finite(ys)?;
        let dx = centered(xs);
        let dy = centered(ys);
        let sxx: f64 = dx.iter().map(|v| v * v).sum();
        let syy: f64 = dy.iter().map(|v| v * v).sum();
        if sxx == 0.0 || syy == 0.0 {
            return Err(Error::UndefinedCorrelation("a series is constant".into()));
        }
        Ok(Self {
            dx,
            dy,
            denom: (sxx * syy).sqrt(),
        })
    }

    fn r_with(&self, dy: &[f64]) -> f64 {
        let sxy: f64 = self.dx.iter().zip(dy).map(|(a, b)| a * b).sum();
        (sxy / self.denom).clamp(-1.0, 1.0)
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let prep = PreparedPearson::new(xs, ys)?;
    Ok(prep.r_with(&prep.dy))
}

/// Two-sided permutation test for Pearson's r: `ys` is shuffled
/// `permutations` times with a ChaCha8 stream seeded by `seed`, and
/// `p = (1 + #{|r_perm| ≥ |r|}) / (permutations + 1)`.
pub fn pearson_permutation_test(
    xs: &[f64],
    ys: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    let prep = PreparedPearson::new(xs, ys)?;
    let r = prep.r_with(&prep.dy);
    let threshold = r.abs() - 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = prep.dy.clone();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        if prep.r_with(&shuffled).abs() >= threshold {
            extreme += 1;
        }
    }
    Ok(TestResult {
        statistic: r,
        p_value: (extreme + 1) as f64 / (permutations + 1) as f64,
        n1: xs.len(),
        n2: ys.len(),
        method: TestMethod::Permutation,
    })
}

/// Permutation p-value for the correlation of `xs` and `ys`.
pub fn pearson_pvalue(xs: &[f64], ys: &[f64], permutations: usize, seed: u64) -> Result<f64> {
    Ok(pearson_permutation_test(xs, ys, permutations, seed)?.p_value)
}

/// Midranks (1-based) of the pooled sample, in input order.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// `sum(t³ − t)` over tie groups of the pooled sample.
fn tie_term(pooled: &[f64]) -> f64 {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|a, b| a == b)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum()
}

fn u_statistic(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let ranks = midranks(&pooled);
    let n1 = xs.len() as f64;
    let r1: f64 = ranks[..xs.len()].iter().sum();
    (r1 - n1 * (n1 + 1.0) / 2.0, ranks)
}

fn check_samples(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySeries);
    }
    check_finite(xs)?;
    check_finite(ys)
}

/// Mann-Whitney U for `xs` against `ys`; exact enumeration when the pooled
/// sample has at most [`EXACT_LIMIT`] values, otherwise the tie- and
/// continuity-corrected normal approximation.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    check_samples(xs, ys)?;
    if xs.len() + ys.len() <= EXACT_LIMIT {
        mann_whitney_exact(xs, ys)
    } else {
        mann_whitney_normal(xs, ys)
    }
}

/// Two-sided normal approximation with tie correction and a 0.5 continuity
/// correction.
pub fn mann_whitney_normal(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    check_samples(xs, ys)?;
    let (u, _) = u_statistic(xs, ys);
    let n1 = xs.len() as f64;
    let n2 = ys.len() as f64;
    let n = n1 + n2;
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term(&pooled) / (n * (n - 1.0)));
    let mean = n1 * n2 / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(TestResult {
        statistic: u,
        p_value: p,
        n1: xs.len(),
        n2: ys.len(),
        method: TestMethod::NormalApprox,
    })
}

/// Exact two-sided p-value: the fraction of all `C(n1+n2, n1)` group
/// assignments of the pooled midranks whose U is at least as far from
/// `n1·n2/2` as the observed U.
pub fn mann_whitney_exact(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    check_samples(xs, ys)?;
    let n = xs.len() + ys.len();
    if n > EXACT_LIMIT {
        return Err(Error::SizeLimit {
            limit: EXACT_LIMIT,
            got: n,
        });
    }
    let (u, ranks) = u_statistic(xs, ys);
    // Doubled midranks are integers, so comparisons are exact.
    let doubled: Vec<i64> = ranks.iter().map(|r| (r * 2.0).round() as i64).collect();
    let n1 = xs.len();
    let offset2 = (n1 * (n1 + 1)) as i64;
    let mean4 = (n1 * ys.len()) as i64 * 2;
    let observed = ((u * 4.0).round() as i64 - mean4).abs();
    let mut total = 0u64;
    let mut extreme = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let rank_sum2: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
        let dev = (2 * (rank_sum2 - offset2) - mean4).abs();
        total += 1;
        if dev >= observed {
            extreme += 1;
        }
    }
    Ok(TestResult {
        statistic: u,
        p_value: extreme as f64 / total as f64,
        n1,
        n2: ys.len(),
        method: TestMethod::Exact,
    })
}

/// Linear-interpolation quantile of sorted data: position `(n − 1)·q`.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize(values: &[f64]) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DistributionSummary {
        n: values.len(),
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}

/// Star notation for a p-value: `****` p ≤ 1e-4, `***` p ≤ 1e-3,
/// `**` p ≤ 1e-2, `*` p ≤ 5e-2, otherwise `ns`.
pub fn significance_band(p: f64) -> &'static str {
    if p <= 1e-4 {
        "****"
    } else if p <= 1e-3 {
        "***"
    } else if p <= 1e-2 {
        "**"
    } else if p <= 5e-2 {
        "*"
    } else {
        "ns"
    }
}
