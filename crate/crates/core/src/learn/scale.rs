use serde::{Deserialize, Serialize};

use crate::features::Dataset;

pub const SD_FLOOR: f64 = 1e-12;

/// Per-feature z-score statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Statistics of a non-empty set of equal-length rows.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let width = rows.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(SD_FLOOR))
            .collect();
        Self { mean, sd }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform_dataset(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for row in &mut out.rows {
            row.d = self.transform(&row.d);
        }
        out
    }
}

/// Fits statistics on `train` and applies them to `train` and every other set.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> (Dataset, Vec<Dataset>, Standardizer) {
    let rows: Vec<Vec<f64>> = train.rows.iter().map(|r| r.d.clone()).collect();
    let stats = Standardizer::fit(&rows);
    let scaled = stats.transform_dataset(train);
    let rest = others.iter().map(|d| stats.transform_dataset(d)).collect();
    (scaled, rest, stats)
}
