//! The statistical procedures used by the evaluation.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no observations")]
    EmptyInput,
    #[error("contingency table has an empty row or column")]
    DegenerateTable,
}

/// Sample size up to which the signed-rank p-value is computed exactly.
pub const EXACT_WILCOXON_MAX_N: usize = 12;

/// Significance level used when reporting comparisons.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped; the statistic is min(W+, W-).
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let statistic = w_plus.min(w_minus);
    let n = diffs.len();
    let p_value = if n <= EXACT_WILCOXON_MAX_N {
        exact_signed_rank_p(&ranks, statistic)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_groups: HashMap<u64, usize> = HashMap::new();
        for v in &abs {
            *tie_groups.entry(v.to_bits()).or_insert(0) += 1;
        }
        let tie_term: f64 = tie_groups.values().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        if var <= 0.0 {
            1.0
        } else {
            let z = (statistic - mean) / var.sqrt();
            erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
        }
    };
    Ok(TestResult { statistic, p_value })
}

/// `2 * P(W+ <= statistic)` under the null, by counting sign assignments.
/// Ranks are averages of integers, so doubled ranks are exact integers.
fn exact_signed_rank_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (statistic * 2.0).round() as usize;
    let below: u64 = counts[..=limit.min(total)].iter().sum();
    let all = 1u64 << ranks.len();
    (2.0 * below as f64 / all as f64).min(1.0)
}

/// Pearson chi-square on a 2x2 table, optionally with Yates' continuity
/// correction (|O-E| reduced by 0.5, floored at zero). One degree of freedom.
pub fn chi_square(table: [[u64; 2]; 2], yates: bool) -> Result<TestResult, StatsError> {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if rows.contains(&0) || cols.contains(&0) {
        return Err(StatsError::DegenerateTable);
    }
    let n = (rows[0] + rows[1]) as f64;
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            let mut dev = (table[i][j] as f64 - expected).abs();
            if yates {
                dev = (dev - 0.5).max(0.0);
            }
            statistic += dev * dev / expected;
        }
    }
    // survival function of chi-square(1): Q(1/2, x/2)
    let p_value = if statistic == 0.0 { 1.0 } else { gamma_ur(0.5, statistic / 2.0) };
    Ok(TestResult { statistic, p_value })
}

pub fn chi_square_yates(table: [[u64; 2]; 2]) -> Result<TestResult, StatsError> {
    chi_square(table, true)
}

/// Cohen's kappa for two raters. Perfect agreement is 1 even when chance
/// agreement is also 1.
pub fn cohens_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    if p_o == 1.0 {
        return Ok(1.0);
    }
    let mut ca: HashMap<&T, usize> = HashMap::new();
    let mut cb: HashMap<&T, usize> = HashMap::new();
    for x in a {
        *ca.entry(x).or_insert(0) += 1;
    }
    for y in b {
        *cb.entry(y).or_insert(0) += 1;
    }
    let p_e: f64 = ca
        .iter()
        .map(|(k, &c)| c as f64 / n * cb.get(k).copied().unwrap_or(0) as f64 / n)
        .sum();
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// False when the denominator was zero and the value was set to 0.
    pub precision_defined: bool,
    pub recall_defined: bool,
}

pub fn precision_recall(c: ConfusionCounts) -> PrecisionRecall {
    let ratio = |num: u64, den: u64| if den == 0 { (0.0, false) } else { (num as f64 / den as f64, true) };
    let (precision, precision_defined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_defined) = ratio(c.tp, c.tp + c.fn_);
    PrecisionRecall { precision, recall, precision_defined, recall_defined }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&a, &[0.0; 6]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.03125).abs() < 1e-15);
        let r = wilcoxon_signed_rank(&[-1.0, 1.0, -2.0, 2.0], &[0.0; 4]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::AllZeroDifferences));
        assert_eq!(wilcoxon_signed_rank(&[1.0], &[]), Err(StatsError::LengthMismatch(1, 0)));
    }

    #[test]
    fn wilcoxon_normal_approximation() {
        // 20 positive differences: z is far in the tail
        let a: Vec<f64> = (1..=20).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 20]).unwrap();
        assert_eq!(r.statistic, 0.0);
        // mean 105, sd sqrt(717.5): z = -3.9199
        assert!((r.p_value - 8.857e-5).abs() < 1e-6, "{}", r.p_value);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 1.0, 2.0]), [4.0, 1.5, 1.5, 3.0]);
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_yates([[20, 5], [5, 20]]).unwrap();
        assert!((r.statistic - 15.68).abs() < 1e-9);
        assert!(r.p_value < 1e-3);
        let r = chi_square_yates([[10, 10], [10, 10]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(chi_square_yates([[0, 0], [3, 4]]), Err(StatsError::DegenerateTable));
        // chi2(1) survival at 3.841459 is 0.05
        let x = chi_square([[30, 20], [20, 30]], false).unwrap();
        assert!((x.statistic - 4.0).abs() < 1e-12);
        assert!((x.p_value - 0.0455003).abs() < 1e-6);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohens_kappa(&["y", "n", "y"], &["y", "n", "y"]).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&["y", "n"], &["n", "y"]).unwrap(), -1.0);
        // p_o = 0.5, p_e = 0.5
        let k = cohens_kappa(&["y", "y", "n", "n"], &["y", "n", "y", "n"]).unwrap();
        assert!(k.abs() < 1e-12);
        assert_eq!(cohens_kappa(&["y"], &[]), Err(StatsError::LengthMismatch(1, 0)));
        assert_eq!(cohens_kappa::<&str>(&[], &[]), Err(StatsError::EmptyInput));
    }

    #[test]
    fn precision_recall_examples() {
        let pr = precision_recall(ConfusionCounts { tp: 8, fp: 16, tn: 0, fn_: 0 });
        assert!((pr.precision * 100.0 - 33.33).abs() < 0.01);
        assert_eq!(pr.recall, 1.0);
        let pr = precision_recall(ConfusionCounts { tp: 13, fp: 0, tn: 5, fn_: 102 });
        assert!((pr.recall * 100.0 - 11.30).abs() < 0.01);
        let pr = precision_recall(ConfusionCounts::default());
        assert_eq!(pr.precision, 0.0);
        assert!(!pr.precision_defined);
    }
}
