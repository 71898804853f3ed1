//! Agreement between metric scores and human judgements.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Stat;
use crate::dataset::read_jsonl;
use crate::error::{Error, Result};

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Number of tied pairs within runs of equal values in a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort counting inversions (swaps).
fn sort_count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], buf) + sort_count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's τ-b in O(n log n). `None` for mismatched lengths, fewer than
/// two items, NaNs, or a constant series.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 || x.iter().chain(y).any(|v| v.is_nan()) {
        return None;
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let n3 = tied_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = sort_count_swaps(&mut ys, &mut Vec::with_capacity(n));
    let n2 = tied_pairs(&ys);
    if n0 == n1 || n0 == n2 {
        return None;
    }
    // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
    let numerator = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    // One square root of the exact product keeps monotone series at exactly ±1.
    let denominator = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    Some((numerator / denominator).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub n: usize,
    pub pearson: Stat,
    pub kendall_tau_b: Stat,
}

pub fn metric_correlation(scores: &[f64], judgements: &[f64]) -> Result<Correlation> {
    if scores.len() != judgements.len() {
        return Err(Error::data(format!("{} metric scores but {} judgements", scores.len(), judgements.len())));
    }
    if scores.len() < 3 {
        return Err(Error::data(format!("correlation needs at least 3 items, got {}", scores.len())));
    }
    Ok(Correlation {
        n: scores.len(),
        pearson: pearson(scores, judgements).into(),
        kendall_tau_b: kendall_tau_b(scores, judgements).into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rating {
    Bad,
    Average,
    Good,
}

impl Rating {
    pub fn value(self) -> f64 {
        match self {
            Rating::Bad => 0.0,
            Rating::Average => 1.0,
            Rating::Good => 2.0,
        }
    }
}

/// A human judgement of one prediction. Gold and prediction texts are
/// optional; when absent they are looked up by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub id: String,
    pub rating: Rating,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
}

pub fn read_judgements(path: impl AsRef<Path>) -> Result<Vec<Judgement>> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let a = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
                if x[i] == x[j] && y[i] == y[j] {
                } else if x[i] == x[j] {
                    tx += 1;
                } else if y[i] == y[j] {
                    ty += 1;
                } else if a > 0.0 {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
        (c - d) as f64 / (((c + d + tx) as f64) * ((c + d + ty) as f64)).sqrt()
    }

    #[test]
    fn matches_reference_value_with_ties() {
        let x = [1.0, 2.0, 2.0, 3.0, 1.0, 2.0];
        let y = [0.0, 1.0, 1.0, 2.0, 2.0, 0.0];
        let t = kendall_tau_b(&x, &y).unwrap();
        assert!((t - 0.2611164839335468).abs() < 1e-12, "{t}");
        assert!((t - brute_tau_b(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn monotone_and_constant() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(kendall_tau_b(&x, &x), Some(1.0));
        assert_eq!(kendall_tau_b(&x, &rev), Some(-1.0));
        assert!((pearson(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(kendall_tau_b(&x, &[1.0; 10]), None);
        assert_eq!(pearson(&x, &[1.0; 10]), None);
    }

    #[test]
    fn correlation_report_marks_undefined() {
        let c = metric_correlation(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.kendall_tau_b, Stat::Undefined);
        assert_eq!(serde_json::to_value(c).unwrap()["pearson"], "undefined");
        assert!(metric_correlation(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rating_scale() {
        let j: Judgement = serde_json::from_str(r#"{"id":"1","rating":"average"}"#).unwrap();
        assert_eq!(j.rating.value(), 1.0);
    }
}
