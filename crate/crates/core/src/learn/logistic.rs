//! Multinomial (softmax) logistic regression trained by full-batch gradient
//! descent on standardized features.

use serde::{Deserialize, Serialize};

use super::{softmax, Classifier, LearnError, Standardizer};
use crate::features::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty `λ/2 · ‖W‖²` (bias excluded).
    pub l2: f64,
}

impl Default for LrHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// `C × F`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub standardizer: Standardizer,
    pub hyper: LrHyper,
    /// Mean training loss after each epoch's update.
    pub loss_curve: Vec<f64>,
}

impl LrModel {
    /// Zero-initialized model.
    pub fn zeros(n_classes: usize, n_features: usize, standardizer: Standardizer) -> Self {
        Self {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
            standardizer,
            hyper: LrHyper::default(),
            loss_curve: Vec::new(),
        }
    }

    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.n_features..(c + 1) * self.n_features];
                self.bias[c] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Weights then biases, flattened.
    pub fn params(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let nw = self.weights.len();
        self.weights.copy_from_slice(&flat[..nw]);
        self.bias.copy_from_slice(&flat[nw..]);
    }

    /// Mean cross-entropy plus L2 penalty on already-standardized inputs,
    /// with its gradient laid out like [`LrModel::params`].
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let (c_n, f_n) = (self.n_classes, self.n_features);
        let n = x.len() as f64;
        let mut grad = vec![0.0; c_n * f_n + c_n];
        let mut loss = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let p = softmax(&self.logits(xi));
            loss -= p[yi].max(f64::MIN_POSITIVE).ln();
            for c in 0..c_n {
                let d = (p[c] - if c == yi { 1.0 } else { 0.0 }) / n;
                for f in 0..f_n {
                    grad[c * f_n + f] += d * xi[f];
                }
                grad[c_n * f_n + c] += d;
            }
        }
        loss /= n;
        if l2 > 0.0 {
            for (g, w) in grad.iter_mut().zip(&self.weights) {
                *g += l2 * w;
            }
            loss += 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        }
        (loss, grad)
    }
}

impl Classifier for LrModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(&self.standardizer.transform(x)))
    }
}

/// Fits standardization on `train`, then runs `epochs` full-batch gradient
/// steps from zero weights.
pub fn train_logistic_regression(train: &Dataset, hyper: &LrHyper) -> Result<LrModel, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let (raw, y) = super::columns(train);
    if train.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(LearnError::SingleClass);
    }
    let standardizer = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.transform(r)).collect();
    let mut model = LrModel::zeros(train.num_classes(), train.num_features(), standardizer);
    model.hyper = *hyper;

    let mut params = model.params();
    let (_, mut grad) = model.loss_and_gradient(&x, &y, hyper.l2);
    for _ in 0..hyper.epochs {
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= hyper.learning_rate * g;
        }
        model.set_params(&params);
        let (loss, g) = model.loss_and_gradient(&x, &y, hyper.l2);
        model.loss_curve.push(loss);
        grad = g;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn clusters(seed: u64, centers: &[[f64; 2]], per_class: usize, sd: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut ds = Dataset::new(vec![50, 60], vec![]);
        for (label, c) in centers.iter().enumerate() {
            for _ in 0..per_class {
                ds.rows.push(FeatureVector {
                    d: vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)],
                    label,
                    source: String::new(),
                });
            }
        }
        ds
    }

    #[test]
    fn separates_two_clusters() {
        let train = clusters(1, &[[0.0, 0.0], [5.0, 5.0]], 40, 0.5);
        let test = clusters(2, &[[0.0, 0.0], [5.0, 5.0]], 20, 0.5);
        let m = train_logistic_regression(&train, &LrHyper::default()).unwrap();
        let r = super::super::evaluate(&m, &test).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for w in m.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_eq!(m.loss_curve.len(), 500);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let train = clusters(3, &[[0.0, 1.0], [2.0, -1.0], [1.0, 3.0]], 6, 1.0);
        let (x, y) = super::super::columns(&train);
        let mut m = LrModel::zeros(3, 2, Standardizer::fit(&x));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let p0: Vec<f64> = m.params().iter().map(|_| normal.sample(&mut rng)).collect();
        m.set_params(&p0);
        let (_, grad) = m.loss_and_gradient(&x, &y, 0.3);
        let h = 1e-5;
        for k in 0..p0.len() {
            let mut plus = p0.clone();
            plus[k] += h;
            let mut minus = p0.clone();
            minus[k] -= h;
            m.set_params(&plus);
            let lp = m.loss_and_gradient(&x, &y, 0.3).0;
            m.set_params(&minus);
            let lm = m.loss_and_gradient(&x, &y, 0.3).0;
            let numeric = (lp - lm) / (2.0 * h);
            let rel = (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {k}: {numeric} vs {}", grad[k]);
        }
    }

    #[test]
    fn heavy_penalty_collapses_to_priors() {
        let train = clusters(5, &[[0.0, 0.0], [3.0, 3.0]], 10, 0.5);
        let mut extra = train.clone();
        extra.rows.truncate(15); // priors 10/15 and 5/15
        let hyper = LrHyper {
            l2: 1e3,
            epochs: 30_000,
            learning_rate: 1e-3,
        };
        let m = train_logistic_regression(&extra, &hyper).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-3));
        let s = m.scores(&[10.0, -10.0]);
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-2, "{s:?}");
    }

    #[test]
    fn single_class_is_rejected() {
        let mut d = clusters(1, &[[0.0, 0.0]], 5, 1.0);
        d.label_names = vec!["only".into()];
        assert_eq!(
            train_logistic_regression(&d, &LrHyper::default()),
            Err(LearnError::SingleClass)
        );
    }

    #[test]
    fn softmax_outputs_sum_to_one() {
        let train = clusters(8, &[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], 10, 0.7);
        let m = train_logistic_regression(&train, &LrHyper::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let wide = Normal::new(0.0, 50.0).unwrap();
        for _ in 0..200 {
            let s = m.scores(&[wide.sample(&mut rng), wide.sample(&mut rng)]);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
