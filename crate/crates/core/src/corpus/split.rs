use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::RngStream;

/// Train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

/// Split sizes by the largest-remainder method: floors first, leftover
/// items to the largest fractional parts (earlier split wins ties).
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must be nonnegative and sum to 1")));
    }
    let nonzero = fractions.iter().filter(|f| **f > 0.0).count();
    if n < nonzero {
        return Err(Error::Data(format!("{n} dialogues cannot fill {nonzero} splits")));
    }
    let quotas = fractions.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut leftover = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if fractions[k] > 0.0 {
            sizes[k] += 1;
            leftover -= 1;
        }
    }
    Ok(sizes)
}

/// Seeded shuffle followed by a contiguous three-way cut.
pub fn split_corpus<T>(items: Vec<T>, fractions: [f64; 3], seed: u64) -> Result<Splits<T>> {
    let [n_train, n_valid, _] = split_sizes(items.len(), fractions)?;
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let mut order: Vec<usize> = (0..slots.len()).collect();
    RngStream::new(seed).shuffle(&mut order);
    let mut take = |range: std::ops::Range<usize>| -> Vec<T> {
        order[range].iter().map(|&i| slots[i].take().expect("each index used once")).collect()
    };
    let train = take(0..n_train);
    let valid = take(n_train..n_train + n_valid);
    let test = take(n_train + n_valid..order.len());
    Ok(Splits { train, valid, test })
}

/// Downsamples every class to the size of the smallest one. Classes are
/// given by `label_of`; the kept subset preserves input order.
pub fn balance_classes<T, F>(items: Vec<T>, label_of: F, seed: u64) -> Vec<T>
where
    F: Fn(&T) -> usize,
{
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, item) in items.iter().enumerate() {
        by_class.entry(label_of(item)).or_default().push(k);
    }
    let Some(min) = by_class.values().map(Vec::len).min() else {
        return items;
    };
    let mut rng = RngStream::new(seed);
    let mut keep = vec![false; items.len()];
    for idx in by_class.values_mut() {
        rng.shuffle(idx);
        for &k in &idx[..min] {
            keep[k] = true;
        }
    }
    items
        .into_iter()
        .zip(keep)
        .filter_map(|(item, k)| k.then_some(item))
        .collect()
}
