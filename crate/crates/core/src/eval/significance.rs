use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::Stat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub n: usize,
    pub mean_difference: f64,
    pub t: Stat,
    pub p_value: Stat,
}

/// Two-sided paired Student t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::data(format!("paired samples differ in length ({} vs {})", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::data("a paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(TTest { n, mean_difference: mean, t: Stat::Undefined, p_value: Stat::Undefined });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(Error::data)?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok(TTest { n, mean_difference: mean, t: Stat::Value(t), p_value: Stat::Value(p) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_computation() {
        let r = paired_t_test(&[0.9, 0.8, 0.7, 0.95, 0.6], &[0.85, 0.7, 0.72, 0.9, 0.5]).unwrap();
        assert!((r.t.value().unwrap() - 2.54021158510848).abs() < 1e-9);
        assert!((r.p_value.value().unwrap() - 0.06396653057897189).abs() < 1e-9);
    }

    #[test]
    fn identical_samples_are_undefined() {
        let r = paired_t_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.p_value, Stat::Undefined);
    }
}
