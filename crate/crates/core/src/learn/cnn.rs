//! Small 1-D convolutional network over the feature sequence:
//!
//! ```text
//! x (F) ─conv1d k=3, 16 ch, same pad─▶ ReLU ─flatten (16·F)─▶ dense (C) ─▶ softmax
//! ```
//!
//! Trained by plain mini-batch gradient descent on mean cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax, Classifier, LearnError, Standardizer};
use crate::features::Dataset;

pub const CONV_KERNEL: usize = 3;
pub const CONV_CHANNELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CnnHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 150,
            batch_size: 16,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub n_features: usize,
    pub n_classes: usize,
    /// `[channel][tap]`, flattened.
    pub conv_weights: Vec<f64>,
    pub conv_bias: Vec<f64>,
    /// `C × (channels · F)`, row-major; hidden index is `channel * F + position`.
    pub dense_weights: Vec<f64>,
    pub dense_bias: Vec<f64>,
    pub standardizer: Standardizer,
    pub hyper: CnnHyper,
    /// Training-set loss after each epoch.
    pub loss_curve: Vec<f64>,
    /// Training-set accuracy after each epoch.
    pub accuracy_curve: Vec<f64>,
}

/// Intermediate values of one forward pass.
struct Forward {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl CnnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(
        n_features: usize,
        n_classes: usize,
        rng: &mut impl Rng,
        standardizer: Standardizer,
    ) -> Self {
        let hidden = CONV_CHANNELS * n_features;
        let conv_r = (6.0 / (CONV_KERNEL + CONV_KERNEL * CONV_CHANNELS) as f64).sqrt();
        let dense_r = (6.0 / (hidden + n_classes) as f64).sqrt();
        let conv_weights = (0..CONV_CHANNELS * CONV_KERNEL)
            .map(|_| rng.random_range(-conv_r..conv_r))
            .collect();
        let dense_weights = (0..n_classes * hidden)
            .map(|_| rng.random_range(-dense_r..dense_r))
            .collect();
        Self {
            n_features,
            n_classes,
            conv_weights,
            conv_bias: vec![0.0; CONV_CHANNELS],
            dense_weights,
            dense_bias: vec![0.0; n_classes],
            standardizer,
            hyper: CnnHyper::default(),
            loss_curve: Vec::new(),
            accuracy_curve: Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.conv_weights.len()
            + self.conv_bias.len()
            + self.dense_weights.len()
            + self.dense_bias.len()
    }

    /// Conv weights, conv bias, dense weights, dense bias, flattened.
    pub fn params(&self) -> Vec<f64> {
        self.conv_weights
            .iter()
            .chain(&self.conv_bias)
            .chain(&self.dense_weights)
            .chain(&self.dense_bias)
            .copied()
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut at = 0;
        for part in [
            &mut self.conv_weights,
            &mut self.conv_bias,
            &mut self.dense_weights,
            &mut self.dense_bias,
        ] {
            let n = part.len();
            part.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
    }

    fn forward(&self, z: &[f64]) -> Forward {
        let f_n = self.n_features;
        let mut pre = vec![0.0; CONV_CHANNELS * f_n];
        for ch in 0..CONV_CHANNELS {
            let w = &self.conv_weights[ch * CONV_KERNEL..(ch + 1) * CONV_KERNEL];
            for pos in 0..f_n {
                let mut acc = self.conv_bias[ch];
                for (tap, wk) in w.iter().enumerate() {
                    // same padding: input index pos + tap - 1, zero outside
                    if let Some(v) = (pos + tap).checked_sub(1).and_then(|i| z.get(i)) {
                        acc += wk * v;
                    }
                }
                pre[ch * f_n + pos] = acc;
            }
        }
        let hidden: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
        let h_n = hidden.len();
        let logits: Vec<f64> = (0..self.n_classes)
            .map(|c| {
                let w = &self.dense_weights[c * h_n..(c + 1) * h_n];
                self.dense_bias[c] + w.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        Forward {
            pre,
            hidden,
            probs: softmax(&logits),
        }
    }

    /// Mean cross-entropy over already-standardized rows and its gradient,
    /// laid out like [`CnnModel::params`].
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[usize]) -> (f64, Vec<f64>) {
        let f_n = self.n_features;
        let h_n = CONV_CHANNELS * f_n;
        let n_cw = self.conv_weights.len();
        let n_cb = self.conv_bias.len();
        let n_dw = self.dense_weights.len();
        let (o_cb, o_dw, o_db) = (n_cw, n_cw + n_cb, n_cw + n_cb + n_dw);
        let mut grad = vec![0.0; self.param_count()];
        let n = x.len() as f64;
        let mut loss = 0.0;
        let mut d_hidden = vec![0.0; h_n];

        for (xi, &yi) in x.iter().zip(y) {
            let fw = self.forward(xi);
            loss -= fw.probs[yi].max(f64::MIN_POSITIVE).ln();

            d_hidden.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..self.n_classes {
                let d = (fw.probs[c] - if c == yi { 1.0 } else { 0.0 }) / n;
                grad[o_db + c] += d;
                let w = &self.dense_weights[c * h_n..(c + 1) * h_n];
                let g = &mut grad[o_dw + c * h_n..o_dw + (c + 1) * h_n];
                for j in 0..h_n {
                    g[j] += d * fw.hidden[j];
                    d_hidden[j] += d * w[j];
                }
            }
            for ch in 0..CONV_CHANNELS {
                for pos in 0..f_n {
                    let j = ch * f_n + pos;
                    if fw.pre[j] <= 0.0 {
                        continue;
                    }
                    let d = d_hidden[j];
                    grad[o_cb + ch] += d;
                    for tap in 0..CONV_KERNEL {
                        if let Some(v) = (pos + tap).checked_sub(1).and_then(|i| xi.get(i)) {
                            grad[ch * CONV_KERNEL + tap] += d * v;
                        }
                    }
                }
            }
        }
        (loss / n, grad)
    }

    fn loss_and_accuracy(&self, x: &[Vec<f64>], y: &[usize]) -> (f64, f64) {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (xi, &yi) in x.iter().zip(y) {
            let p = self.forward(xi).probs;
            loss -= p[yi].max(f64::MIN_POSITIVE).ln();
            if super::argmax(&p) == yi {
                correct += 1;
            }
        }
        let n = x.len() as f64;
        (loss / n, correct as f64 / n)
    }
}

impl Classifier for CnnModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.forward(&self.standardizer.transform(x)).probs
    }
}

/// Fits standardization on `train`, initializes from `hyper.seed`, and runs
/// mini-batch gradient descent. Batch order is reshuffled every epoch from
/// the same seeded generator.
pub fn train_cnn(train: &Dataset, hyper: &CnnHyper) -> Result<CnnModel, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    if train.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(LearnError::SingleClass);
    }
    let (raw, y) = super::columns(train);
    let standardizer = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.transform(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut model = CnnModel::init(
        train.num_features(),
        train.num_classes(),
        &mut rng,
        standardizer,
    );
    model.hyper = *hyper;

    let batch = hyper.batch_size.max(1);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut params = model.params();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (_, grad) = model.loss_and_gradient(&bx, &by);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= hyper.learning_rate * g;
            }
            model.set_params(&params);
        }
        let (loss, acc) = model.loss_and_accuracy(&x, &y);
        model.loss_curve.push(loss);
        model.accuracy_curve.push(acc);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use rand_distr::{Distribution, Normal};

    fn clusters(seed: u64, n_classes: usize, per_class: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut ds = Dataset::new(vec![50, 60, 70, 80, 90, 100], vec![]);
        for label in 0..n_classes {
            for _ in 0..per_class {
                let d = (0..6)
                    .map(|j| {
                        5.0 + 2.0 * ((label * (j + 1)) % n_classes) as f64 + noise.sample(&mut rng)
                    })
                    .collect();
                ds.rows.push(FeatureVector {
                    d,
                    label,
                    source: String::new(),
                });
            }
        }
        ds
    }

    #[test]
    fn architecture_parameter_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = CnnModel::init(6, 5, &mut rng, Standardizer::fit(&[vec![0.0; 6]]));
        assert_eq!(m.param_count(), 3 * 16 + 16 + 6 * 16 * 5 + 5);
        let r = (6.0f64 / 51.0).sqrt();
        assert!(m.conv_weights.iter().all(|w| w.abs() < r));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = clusters(1, 3, 4);
        let (raw, y) = crate::learn::columns(&data);
        let st = Standardizer::fit(&raw);
        let x: Vec<Vec<f64>> = raw.iter().map(|r| st.transform(r)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = CnnModel::init(6, 3, &mut rng, st);
        let normal = Normal::new(0.0, 0.5).unwrap();
        let p0: Vec<f64> = m.params().iter().map(|_| normal.sample(&mut rng)).collect();
        m.set_params(&p0);
        let (_, grad) = m.loss_and_gradient(&x, &y);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..p0.len() {
            let mut p = p0.clone();
            p[k] += h;
            m.set_params(&p);
            let lp = m.loss_and_gradient(&x, &y).0;
            p[k] -= 2.0 * h;
            m.set_params(&p);
            let lm = m.loss_and_gradient(&x, &y).0;
            let numeric = (lp - lm) / (2.0 * h);
            let rel = (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-7);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn same_seed_same_weights() {
        let data = clusters(3, 3, 10);
        let hyper = CnnHyper {
            epochs: 5,
            ..CnnHyper::default()
        };
        let a = train_cnn(&data, &hyper).unwrap();
        let b = train_cnn(&data, &hyper).unwrap();
        assert_eq!(a, b);
        let c = train_cnn(&data, &CnnHyper { seed: 7, ..hyper }).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn learns_separable_clusters() {
        let train = clusters(4, 5, 30);
        let test = clusters(5, 5, 10);
        let m = train_cnn(&train, &CnnHyper::default()).unwrap();
        assert_eq!(m.loss_curve.len(), 150);
        assert!(m.loss_curve.last() < m.loss_curve.first());
        let r = crate::learn::evaluate(&m, &test).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for v in [-100.0, 0.0, 12.5, 1e4] {
            let s = m.scores(&[v; 6]);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data = clusters(1, 1, 5);
        assert_eq!(
            train_cnn(&data, &CnnHyper::default()),
            Err(LearnError::SingleClass)
        );
    }
}
