//! Seeded Gaussian clusters in divergence space, shaped like a small
//! fingerprint corpus: five sources, 80/80/80/80/48 images, six features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::features::{Dataset, FeatureVector, DEFAULT_QFS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub class_sizes: Vec<usize>,
    /// Offset of the lowest class mean.
    pub base: f64,
    /// Gap between neighbouring class means in each feature.
    pub spacing: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            class_sizes: vec![80, 80, 80, 80, 48],
            base: 6.0,
            spacing: 2.0,
            sigma: 0.25,
            seed: 42,
        }
    }
}

/// Per-feature multipliers; each is coprime with 5, so for five classes every
/// feature places the class means at distinct grid slots.
const MIXERS: [usize; 6] = [1, 2, 3, 4, 2, 3];

impl ClusterSpec {
    /// `means[class][feature]`. Within each feature the means are a
    /// permutation of `base + spacing · {0, …, k−1}` when `k` is coprime with
    /// every mixer, so any two classes differ by at least `spacing` in every
    /// coordinate.
    pub fn means(&self) -> Vec<Vec<f64>> {
        let k = self.class_sizes.len();
        (0..k)
            .map(|c| {
                MIXERS
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| self.base + self.spacing * ((a * c + j) % k) as f64)
                    .collect()
            })
            .collect()
    }

    /// Smallest per-feature gap between class means, in units of `sigma`.
    pub fn min_separation(&self) -> f64 {
        let m = self.means();
        let mut best = f64::INFINITY;
        for a in 0..m.len() {
            for b in a + 1..m.len() {
                for (x, y) in m[a].iter().zip(&m[b]) {
                    best = best.min((x - y).abs() / self.sigma);
                }
            }
        }
        best
    }

    /// Rows are emitted class by class; values are clamped at zero so the
    /// table stays a valid divergence table.
    pub fn generate(&self) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.sigma).expect("finite sigma");
        let names = (1..=self.class_sizes.len())
            .map(|i| format!("DB{i}"))
            .collect();
        let mut ds = Dataset::new(DEFAULT_QFS.to_vec(), names);
        for (label, (mu, &n)) in self.means().iter().zip(&self.class_sizes).enumerate() {
            for i in 0..n {
                ds.rows.push(FeatureVector {
                    d: mu
                        .iter()
                        .map(|m| (m + noise.sample(&mut rng)).max(0.0))
                        .collect(),
                    label,
                    source: format!("synthetic/DB{}/{:03}", label + 1, i + 1),
                });
            }
        }
        ds
    }
}
