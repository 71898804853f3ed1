//! Train/validation/test split generation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Splits;
use crate::error::{Error, Result};
use crate::types::DatasetExample;

/// Maximum deviation of a disjoint split from its target size, as a
/// fraction of the corpus.
pub const DISJOINT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    CommonNounDisjoint,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitSizes {
    Ratios([f64; 3]),
    Counts([usize; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub sizes: SplitSizes,
    pub seed: u64,
}

impl SplitSpec {
    pub fn disjoint(ratios: [f64; 3], seed: u64) -> Self {
        SplitSpec { mode: SplitMode::CommonNounDisjoint, sizes: SplitSizes::Ratios(ratios), seed }
    }

    pub fn random(counts: [usize; 3], seed: u64) -> Self {
        SplitSpec { mode: SplitMode::Random, sizes: SplitSizes::Counts(counts), seed }
    }
}

impl SplitSizes {
    /// Concrete split sizes for a corpus of `n` examples. Ratios are
    /// converted with largest-remainder rounding so the sizes sum to `n`.
    pub fn resolve(&self, n: usize) -> Result<[usize; 3]> {
        match self {
            SplitSizes::Counts(c) => {
                let total: usize = c.iter().sum();
                if total > n {
                    return Err(Error::data(format!("split sizes {c:?} sum to {total}, exceeding the corpus size {n}")));
                }
                if total < n {
                    return Err(Error::data(format!("split sizes {c:?} sum to {total}, short of the corpus size {n}")));
                }
                Ok(*c)
            }
            SplitSizes::Ratios(r) => {
                if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::data(format!("split ratios {r:?} must be non-negative and sum to 1")));
                }
                let exact: Vec<f64> = r.iter().map(|x| x * n as f64).collect();
                let mut sizes = [0usize; 3];
                for (s, e) in sizes.iter_mut().zip(&exact) {
                    *s = e.floor() as usize;
                }
                let mut order: Vec<usize> = (0..3).collect();
                order.sort_by(|&a, &b| {
                    let ra = exact[a] - exact[a].floor();
                    let rb = exact[b] - exact[b].floor();
                    rb.total_cmp(&ra).then(a.cmp(&b))
                });
                let mut missing = n - sizes.iter().sum::<usize>();
                for i in order.into_iter().cycle() {
                    if missing == 0 {
                        break;
                    }
                    sizes[i] += 1;
                    missing -= 1;
                }
                Ok(sizes)
            }
        }
    }
}

fn distribute(examples: &[DatasetExample], assignment: &[usize]) -> Splits {
    let mut splits = Splits::default();
    for (ex, &slot) in examples.iter().zip(assignment) {
        match slot {
            0 => splits.train.push(ex.clone()),
            1 => splits.validation.push(ex.clone()),
            _ => splits.test.push(ex.clone()),
        }
    }
    splits
}

/// Split so that every common noun occurs in exactly one split.
///
/// Groups are shuffled by seed, stably ordered by decreasing size, then each
/// is placed in the split with the largest remaining budget.
pub fn split_by_common_noun(examples: &[DatasetExample], spec: &SplitSpec) -> Result<Splits> {
    if spec.mode != SplitMode::CommonNounDisjoint {
        return Err(Error::config("split_by_common_noun requires mode common-noun-disjoint"));
    }
    let n = examples.len();
    let targets = spec.sizes.resolve(n)?;
    let tolerance = (DISJOINT_TOLERANCE * n as f64).floor() as i64;

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        groups.entry(ex.compound.common_noun.as_str()).or_default().push(i);
    }
    let mut groups: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    groups.shuffle(&mut rng);
    groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()));

    let mut remaining: [i64; 3] = targets.map(|t| t as i64);
    let mut assignment = vec![0usize; n];
    for (noun, members) in &groups {
        let size = members.len() as i64;
        let slot = (0..3).max_by(|&a, &b| remaining[a].cmp(&remaining[b]).then(b.cmp(&a))).unwrap_or(0);
        if size > remaining[slot] + tolerance {
            return Err(Error::data(format!(
                "common-noun group {noun:?} has {size} examples, more than any split can absorb (largest remaining budget {})",
                remaining[slot]
            )));
        }
        remaining[slot] -= size;
        for &m in members {
            assignment[m] = slot;
        }
    }
    if let Some(slot) = (0..3).find(|&s| remaining[s].abs() > tolerance) {
        let largest = groups.first().map(|g| g.0).unwrap_or_default();
        return Err(Error::data(format!(
            "cannot meet split targets {targets:?} within ±{tolerance} examples ({} off in split {slot}); largest common-noun group is {largest:?}",
            remaining[slot]
        )));
    }
    Ok(distribute(examples, &assignment))
}

/// Seeded random split with exact sizes.
pub fn split_random(examples: &[DatasetExample], spec: &SplitSpec) -> Result<Splits> {
    let sizes = spec.sizes.resolve(examples.len())?;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let mut splits = Splits::default();
    let (train, rest) = order.split_at(sizes[0]);
    let (val, test) = rest.split_at(sizes[1]);
    splits.train = train.iter().map(|&i| examples[i].clone()).collect();
    splits.validation = val.iter().map(|&i| examples[i].clone()).collect();
    splits.test = test.iter().map(|&i| examples[i].clone()).collect();
    Ok(splits)
}

/// Dispatch on `spec.mode`.
pub fn split(examples: &[DatasetExample], spec: &SplitSpec) -> Result<Splits> {
    match spec.mode {
        SplitMode::CommonNounDisjoint => split_by_common_noun(examples, spec),
        SplitMode::Random => split_random(examples, spec),
    }
}
