use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Shape("pearson needs two equal-length vectors of at least 2 values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    /// `U` of the first sample.
    pub u_a: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: MwuMethod,
}

/// Exact enumeration is used while `min(n_a, n_b) <= 8`; larger samples use
/// the normal approximation.
const EXACT_MAX_SMALL: usize = 8;
/// Upper bound on the work of the exact rank-sum recursion; beyond it the
/// normal approximation is used even for small samples.
const EXACT_MAX_WORK: usize = 50_000_000;

/// Ranks of the pooled sample (midranks for ties), doubled so that they are
/// integers, plus the tie-correction term `Σ (t³ − t)`.
fn doubled_midranks(a: &[f64], b: &[f64]) -> (Vec<usize>, f64) {
    let mut pooled: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share the midrank (i+j+2)/2
        let doubled = i + j + 2;
        for item in &pooled[i..=j] {
            ranks[item.1] = doubled;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

fn validate(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("Mann-Whitney U needs finite values".into()));
    }
    Ok(())
}

fn u_statistics(a: &[f64], ranks: &[usize]) -> (f64, f64, usize) {
    let na = a.len() as f64;
    let nb = (ranks.len() - a.len()) as f64;
    let rank_sum2: usize = ranks[..a.len()].iter().sum();
    let u_a = rank_sum2 as f64 / 2.0 - na * (na + 1.0) / 2.0;
    (u_a, na * nb - u_a, rank_sum2)
}

/// Mann-Whitney U test with the method picked by sample size.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    validate(a, b)?;
    let small = a.len().min(b.len());
    let n = a.len() + b.len();
    let work = n * small * 2 * n * small;
    if small <= EXACT_MAX_SMALL && work <= EXACT_MAX_WORK {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_asymptotic(a, b)
    }
}

/// Two-sided p-value from the complete permutation distribution of the
/// (midrank) rank sum, `p = min(1, 2·min(P(R ≤ r), P(R ≥ r)))`.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    validate(a, b)?;
    let (ranks, _) = doubled_midranks(a, b);
    let (u_a, u_b, observed) = u_statistics(a, &ranks);

    // count subsets of size n_a by doubled rank sum
    let k_max = a.len();
    let max_sum: usize = {
        let mut sorted = ranks.clone();
        sorted.sort_unstable_by(|x, y| y.cmp(x));
        sorted[..k_max].iter().sum()
    };
    let width = max_sum + 1;
    let mut counts = vec![0.0_f64; (k_max + 1) * width];
    counts[0] = 1.0;
    for (i, &r) in ranks.iter().enumerate() {
        for k in (1..=k_max.min(i + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(k * width);
            let prev = &lower[(k - 1) * width..];
            let cur = &mut upper[..width];
            for s in (0..width - r).rev() {
                let c = prev[s];
                if c != 0.0 {
                    cur[s + r] += c;
                }
            }
        }
    }
    let dist = &counts[k_max * width..];
    let total: f64 = dist.iter().sum();
    let below: f64 = dist[..=observed].iter().sum();
    let above: f64 = dist[observed..].iter().sum();
    let p_value = (2.0 * below.min(above) / total).min(1.0);
    Ok(MannWhitney { u: u_a.min(u_b), u_a, p_value, method: MwuMethod::Exact })
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn mann_whitney_u_asymptotic(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    validate(a, b)?;
    let (ranks, ties) = doubled_midranks(a, b);
    let (u_a, u_b, _) = u_statistics(a, &ranks);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let tie_term = if n > 1.0 { ties / (n * (n - 1.0)) } else { 0.0 };
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / libm::sqrt(var);
        libm::erfc(z / core::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MannWhitney { u: u_a.min(u_b), u_a, p_value, method: MwuMethod::Asymptotic })
}
