use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::features::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 42,
            stratified: true,
        }
    }
}

/// `floor(fraction * n)`, immune to `0.7 * 80 = 55.999…`.
fn train_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Seeded train/test partition. When stratified, each class contributes
/// exactly `floor(train_fraction * n_c)` rows to train. Both halves keep the
/// original row order.
pub fn stratified_split(ds: &Dataset, cfg: &SplitConfig) -> Result<(Dataset, Dataset), LearnError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(LearnError::BadFraction(cfg.train_fraction));
    }
    if ds.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut in_train = vec![false; ds.len()];

    let groups: Vec<Vec<usize>> = if cfg.stratified {
        let mut by_class = vec![Vec::new(); ds.num_classes()];
        for (i, row) in ds.rows.iter().enumerate() {
            by_class[row.label].push(i);
        }
        by_class.retain(|g| !g.is_empty());
        by_class
    } else {
        vec![(0..ds.len()).collect()]
    };

    for mut group in groups {
        let k = train_count(cfg.train_fraction, group.len());
        if k == 0 || k == group.len() {
            let label = ds.rows[group[0]].label;
            return Err(LearnError::ClassTooSmall {
                label,
                count: group.len(),
            });
        }
        group.shuffle(&mut rng);
        for &i in &group[..k] {
            in_train[i] = true;
        }
    }

    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_train[i]);
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}
