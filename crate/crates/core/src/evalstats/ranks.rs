//! Friedman and Wilcoxon signed-rank tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample handled by the exact Wilcoxon distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p: f64,
    pub df: usize,
}

fn friedman_ranks(scores: &[Vec<f64>]) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let k = scores.len();
    let n = scores.first().map_or(0, Vec::len);
    if k < 3 || n < 2 {
        return Err(Error::InvalidArgument(format!("Friedman test needs >= 3 models and >= 2 blocks, got {k} x {n}")));
    }
    if scores.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("ragged score matrix".into()));
    }
    // ranks[block][model]
    let ranks = (0..n).map(|b| average_ranks(&scores.iter().map(|m| m[b]).collect::<Vec<_>>())).collect();
    Ok((k, n, ranks))
}

/// Tie-corrected statistic from per-model rank sums; 0 when every block is
/// fully tied.
fn friedman_from_sums(sums: &[f64], n: usize, k: usize, sum_sq_ranks: f64) -> f64 {
    let kf = k as f64;
    let centre = n as f64 * (kf + 1.0) / 2.0;
    let num: f64 = sums.iter().map(|r| (r - centre).powi(2)).sum();
    let den = sum_sq_ranks - n as f64 * kf * (kf + 1.0).powi(2) / 4.0;
    if den <= 1e-12 {
        0.0
    } else {
        (kf - 1.0) * num / den
    }
}

/// Friedman rank test over a `models x blocks` score matrix, average ranks
/// for ties, p from the chi-square distribution with `k - 1` df.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<FriedmanResult> {
    let (k, n, ranks) = friedman_ranks(scores)?;
    let sums: Vec<f64> = (0..k).map(|m| ranks.iter().map(|r| r[m]).sum()).collect();
    let sq: f64 = ranks.iter().flatten().map(|r| r * r).sum();
    let statistic = friedman_from_sums(&sums, n, k, sq);
    let chi = ChiSquared::new((k - 1) as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p = if statistic == 0.0 { 1.0 } else { chi.sf(statistic) };
    Ok(FriedmanResult { statistic, p, df: k - 1 })
}

fn permutations(v: &[i64]) -> Vec<Vec<i64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Exact permutation p-value of the Friedman statistic: every block's ranks
/// are permuted independently. The distribution of rank-sum vectors is
/// built block by block, so cost grows with the number of distinct sums
/// rather than `(k!)^n`.
pub fn friedman_exact_p(scores: &[Vec<f64>]) -> Result<f64> {
    let (k, n, ranks) = friedman_ranks(scores)?;
    if k > 6 {
        return Err(Error::InvalidArgument("exact Friedman p limited to k <= 6".into()));
    }
    let observed = friedman_test(scores)?.statistic;
    let sq: f64 = ranks.iter().flatten().map(|r| r * r).sum();
    // doubled ranks keep half-integers exact
    let mut dist: HashMap<Vec<i64>, f64> = HashMap::from([(vec![0; k], 1.0)]);
    for block in &ranks {
        let doubled: Vec<i64> = block.iter().map(|r| (2.0 * r).round() as i64).collect();
        let perms = permutations(&doubled);
        let w = 1.0 / perms.len() as f64;
        let mut next = HashMap::with_capacity(dist.len() * 2);
        for (sums, p) in &dist {
            for perm in &perms {
                let s: Vec<i64> = sums.iter().zip(perm).map(|(a, b)| a + b).collect();
                *next.entry(s).or_insert(0.0) += p * w;
            }
        }
        dist = next;
    }
    let p = dist
        .iter()
        .filter(|(s, _)| {
            let sums: Vec<f64> = s.iter().map(|&v| v as f64 / 2.0).collect();
            friedman_from_sums(&sums, n, k, sq) >= observed - 1e-9
        })
        .map(|(_, p)| p)
        .sum::<f64>();
    Ok(p.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences.
    pub n: usize,
    pub p_two_sided: f64,
    /// `P(W+ >= observed)` under the null: evidence that `a > b`.
    pub p_greater: f64,
    pub p_less: f64,
    pub exact: bool,
}

impl WilcoxonResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_two_sided < alpha
    }
}

/// Wilcoxon signed-rank test of paired samples. Zero differences are
/// dropped; ties share average ranks. Exact null distribution up to 25
/// pairs, tie-corrected normal approximation above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::shape("wilcoxon_signed_rank", &[a.len()], &[b.len()]));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    if n < 5 {
        return Err(Error::InvalidArgument(format!("Wilcoxon test needs >= 5 non-zero differences, got {n}")));
    }
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let (p_greater, p_less, exact) = if n <= WILCOXON_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut count = vec![0.0f64; max + 1];
        count[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                count[s] += count[s - r];
            }
        }
        let all = 2f64.powi(n as i32);
        let obs = (2.0 * w_plus).round() as usize;
        let ge: f64 = count[obs..].iter().sum();
        let le: f64 = count[..=obs].iter().sum();
        (ge / all, le / all, true)
    } else {
        let mean = total / 2.0;
        let mut ties = HashMap::new();
        for r in &ranks {
            *ties.entry((2.0 * r).round() as i64).or_insert(0usize) += 1;
        }
        let tie_term: f64 = ties.values().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let nf = n as f64;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let z = (w_plus - mean) / var.sqrt();
        let norm = Normal::standard();
        (norm.sf(z), norm.cdf(z), false)
    };
    Ok(WilcoxonResult {
        w_plus,
        w_minus,
        n,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
        p_greater,
        p_less,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn friedman_full_ties() {
        let s = vec![vec![1.0, 2.0, 3.0]; 4];
        let r = friedman_test(&s).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
        assert!(friedman_test(&s[..2]).is_err());
    }

    #[test]
    fn friedman_one_model_best() {
        // model 0 ranks 1 everywhere, others alternate 2/3 and 3/4 ...
        let n = 10;
        let scores: Vec<Vec<f64>> = (0..4)
            .map(|m| (0..n).map(|b| if m == 0 { 0.0 } else { ((m + b) % 3) as f64 + 1.0 }).collect())
            .collect();
        // rank sums by hand: model 0 -> 10; others share ranks 2..4
        let mut sums = [0.0; 4];
        for b in 0..n {
            let col: Vec<f64> = scores.iter().map(|m| m[b]).collect();
            for (m, s) in sums.iter_mut().enumerate() {
                *s += 1.0 + col.iter().filter(|v| **v < col[m]).count() as f64;
            }
        }
        let want = 12.0 / (n as f64 * 4.0 * 5.0) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n as f64 * 5.0;
        assert!((friedman_test(&scores).unwrap().statistic - want).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_all_positive_five() {
        let a = [2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 1.0, 1.0, 1.0, 1.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.p_greater, 1.0 / 32.0);
        assert_eq!(r.p_two_sided, 1.0 / 16.0);
        let s = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!((s.w_plus, s.p_two_sided), (r.w_minus, r.p_two_sided));
        assert!(wilcoxon_signed_rank(&a, &a).is_err());
    }
}
