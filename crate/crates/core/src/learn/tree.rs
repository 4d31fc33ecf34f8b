//! CART classification tree grown greedily on Gini impurity.

use serde::{Deserialize, Serialize};

use super::{Classifier, LearnError};
use crate::features::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until every leaf is pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: usize,
        counts: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
    pub criterion: String,
    pub config: TreeConfig,
}

impl TreeModel {
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_label(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

impl Classifier for TreeModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        s[self.leaf_label(x)] = 1.0;
        s
    }
}

/// `Σ_c n_c²` over a count vector.
fn sum_sq(counts: &[u64]) -> u128 {
    counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum()
}

/// Gini decrease is monotone in `Σ n_lc²/n_l + Σ n_rc²/n_r`; kept as an
/// exact fraction so equal splits compare equal and ties resolve by order.
#[derive(Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(left: &[u64], n_left: u64, right: &[u64], n_right: u64) -> Self {
        let (nl, nr) = (u128::from(n_left), u128::from(n_right));
        Self {
            num: sum_sq(left) * nr + sum_sq(right) * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if a < m && m < b {
        m
    } else {
        a
    }
}

fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    config: TreeConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], parent: &[u64]) -> Option<Candidate> {
        let n_features = self.x[idx[0]].len();
        let n = idx.len() as u64;
        let min_leaf = self.config.min_leaf.max(1) as u64;
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for f in 0..n_features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0u64; self.n_classes];
            let mut right = parent.to_vec();
            for k in 0..order.len() - 1 {
                let c = self.y[order[k]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if a == b {
                    continue;
                }
                let n_left = k as u64 + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let score = SplitScore::new(&left, n_left, &right, n - n_left);
                if best.as_ref().is_none_or(|b| score.beats(&b.score)) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: midpoint(a, b),
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || depth_capped || idx.len() < 2 {
            None
        } else {
            self.best_split(&idx, &counts)
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf {
                label: majority(&counts),
                counts,
            });
            return id;
        };

        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf {
            label: 0,
            counts: Vec::new(),
        });
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows a CART tree. Among equally good splits the lowest feature index,
/// then the lowest threshold, wins. Splits with zero impurity decrease are
/// still taken, which lets XOR-like patterns resolve at the next level.
pub fn train_decision_tree(train: &Dataset, config: &TreeConfig) -> Result<TreeModel, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let (x, y) = super::columns(train);
    let mut builder = Builder {
        x: &x,
        y: &y,
        n_classes: train.num_classes(),
        config: *config,
        nodes: Vec::new(),
    };
    builder.grow((0..x.len()).collect(), 0);
    Ok(TreeModel {
        nodes: builder.nodes,
        n_features: train.num_features(),
        n_classes: train.num_classes(),
        criterion: "gini".into(),
        config: *config,
    })
}
