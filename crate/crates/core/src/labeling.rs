//! Group labelings and the adjusted Rand index.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group ids in `1..=k`, one per observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    /// Requires every group in `1..=max(labels)` to be used.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        let lab = Self::with_groups(labels, k)?;
        let mut used = vec![false; k];
        lab.labels.iter().for_each(|&l| used[l - 1] = true);
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!("group {} has no members", j + 1)));
        }
        Ok(lab)
    }

    /// Allows empty groups among `1..=k`.
    pub fn with_groups(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&l) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::InvalidArgument(format!("label {l} outside 1..={k}")));
        }
        Ok(Labeling { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        self.labels.iter().for_each(|&l| s[l - 1] += 1);
        s
    }
}

fn pairs(c: u64) -> u128 {
    let c = c as u128;
    c * c.saturating_sub(1) / 2
}

/// Adjusted Rand index of two partitions given as arbitrary integer ids.
/// Returns 1 when the index is 0/0, which happens only for identical
/// partitions (all singletons or a single block on both sides).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooShort);
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: u128 = table.values().map(|&c| pairs(c)).sum();
    let sa: u128 = rows.values().map(|&c| pairs(c)).sum();
    let sb: u128 = cols.values().map(|&c| pairs(c)).sum();
    // (index - sa sb / C) / ((sa + sb) / 2 - sa sb / C), scaled by 2C so
    // that only the final division rounds
    let total = pairs(n as u64);
    let num = 2 * (index * total) as i128 - 2 * (sa * sb) as i128;
    let den = ((sa + sb) * total) as i128 - 2 * (sa * sb) as i128;
    if den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}
