//! CART trees and the random forest built from them.
//!
//! Splits are always of the form `x[f] <= t` where `t` is a value observed
//! in the training data at that node, so the partition a tree learns (and
//! its predictions) depend only on the per-feature ordering of the inputs.
//! Among equally good splits the lowest feature index wins, then the lowest
//! threshold.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::label::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_samples_split: 2,
            max_depth: None,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<L> {
    Leaf {
        value: L,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

fn walk<'a, L>(nodes: &'a [Node<L>], x: &[f64]) -> &'a L {
    let mut at = 0;
    loop {
        match &nodes[at] {
            Node::Leaf { value } => return value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x[*feature] <= *threshold { *left } else { *right },
        }
    }
}

/// Best split of `indices` on one feature, as `(score, threshold)`.
///
/// `score` is whatever the criterion returns for a prefix/suffix partition;
/// lower is better.
fn best_threshold<S, F>(
    rows: &[Vec<f64>],
    feature: usize,
    indices: &mut [usize],
    mut init: S,
    mut push: impl FnMut(&mut S, usize),
    score: F,
) -> Option<(f64, f64)>
where
    F: Fn(&S, usize) -> f64,
{
    indices.sort_unstable_by(|&a, &b| {
        rows[a][feature]
            .total_cmp(&rows[b][feature])
            .then(a.cmp(&b))
    });
    let mut best: Option<(f64, f64)> = None;
    for k in 0..indices.len() - 1 {
        push(&mut init, indices[k]);
        let here = rows[indices[k]][feature];
        let next = rows[indices[k + 1]][feature];
        if here == next {
            continue;
        }
        let s = score(&init, k + 1);
        if best.is_none_or(|(b, _)| s < b) {
            best = Some((s, here));
        }
    }
    best
}

struct Pending {
    slot: usize,
    indices: Vec<usize>,
    depth: usize,
}

/// Iterative grower shared by the classification and regression trees.
///
/// `leaf` turns a node's rows into a leaf value; `is_pure` stops growth;
/// `split_score` evaluates one feature and returns `(score, threshold)`.
fn grow<L>(
    rows: &[Vec<f64>],
    root: Vec<usize>,
    params: &TreeParams,
    mut rng: Option<&mut ChaCha8Rng>,
    leaf: impl Fn(&[usize]) -> L,
    is_pure: impl Fn(&[usize]) -> bool,
    split_score: impl Fn(usize, &mut [usize]) -> Option<(f64, f64)>,
) -> Vec<Node<L>>
where
    L: Clone,
{
    let dim = rows.first().map_or(0, Vec::len);
    let mut nodes: Vec<Option<Node<L>>> = vec![None];
    let mut stack = vec![Pending {
        slot: 0,
        indices: root,
        depth: 0,
    }];
    let mut features: Vec<usize> = (0..dim).collect();
    let mut scratch = Vec::new();

    while let Some(Pending {
        slot,
        indices,
        depth,
    }) = stack.pop()
    {
        let stop = indices.len() < params.min_samples_split
            || params.max_depth.is_some_and(|d| depth >= d)
            || is_pure(&indices);
        let mut chosen: Option<(f64, usize, f64)> = None;
        if !stop {
            let take = params.max_features.map_or(dim, |m| m.min(dim));
            if let Some(rng) = rng.as_deref_mut() {
                features.sort_unstable();
                features.shuffle(rng);
            }
            let mut evaluate = |cands: &mut Vec<usize>, chosen: &mut Option<(f64, usize, f64)>| {
                cands.sort_unstable();
                for &f in cands.iter() {
                    scratch.clear();
                    scratch.extend_from_slice(&indices);
                    if let Some((s, t)) = split_score(f, &mut scratch) {
                        let better = match chosen {
                            None => true,
                            Some((bs, bf, bt)) => {
                                s < *bs || (s == *bs && (f < *bf || (f == *bf && t < *bt)))
                            }
                        };
                        if better {
                            *chosen = Some((s, f, t));
                        }
                    }
                }
            };
            let mut cands: Vec<usize> = features[..take].to_vec();
            evaluate(&mut cands, &mut chosen);
            // keep drawing one feature at a time until some split exists
            let mut next = take;
            while chosen.is_none() && next < dim {
                let mut one = vec![features[next]];
                evaluate(&mut one, &mut chosen);
                next += 1;
            }
        }

        match chosen {
            None => nodes[slot] = Some(Node::Leaf { value: leaf(&indices) }),
            Some((_, feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| rows[i][feature] <= threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(None);
                nodes.push(None);
                nodes[slot] = Some(Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                });
                // right pushed first so the left subtree is expanded first
                stack.push(Pending {
                    slot: right,
                    indices: r,
                    depth: depth + 1,
                });
                stack.push(Pending {
                    slot: left,
                    indices: l,
                    depth: depth + 1,
                });
            }
        }
    }
    nodes.into_iter().map(|n| n.expect("every slot filled")).collect()
}

fn class_counts(labels: &[Label], indices: &[usize]) -> [u32; 2] {
    let mut c = [0u32; 2];
    for &i in indices {
        c[labels[i].index()] += 1;
    }
    c
}

/// `n * gini = n - sum(c_k^2) / n`.
fn weighted_gini(c: [f64; 2]) -> f64 {
    let n = c[0] + c[1];
    if n == 0.0 {
        0.0
    } else {
        n - (c[0] * c[0] + c[1] * c[1]) / n
    }
}

fn fit_classifier(
    rows: &[Vec<f64>],
    labels: &[Label],
    indices: Vec<usize>,
    params: &TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> Vec<Node<[u32; 2]>> {
    grow(
        rows,
        indices,
        params,
        rng,
        |idx| class_counts(labels, idx),
        |idx| {
            let c = class_counts(labels, idx);
            c[0] == 0 || c[1] == 0
        },
        |f, idx| {
            let total = class_counts(labels, idx);
            let total = [total[0] as f64, total[1] as f64];
            best_threshold(
                rows,
                f,
                idx,
                [0.0f64; 2],
                |acc, i| acc[labels[i].index()] += 1.0,
                |left, _| {
                    let right = [total[0] - left[0], total[1] - left[1]];
                    weighted_gini(*left) + weighted_gini(right)
                },
            )
        },
    )
}

fn majority(counts: &[u32; 2]) -> Label {
    if counts[1] > counts[0] {
        Label::Deepfake3
    } else {
        Label::Deepfake2
    }
}

/// CART classification tree with Gini impurity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node<[u32; 2]>>,
}

impl DecisionTree {
    pub fn fit(data: &LabeledDataset, params: &TreeParams) -> Self {
        let nodes = fit_classifier(
            data.rows(),
            data.labels(),
            (0..data.len()).collect(),
            params,
            None,
        );
        Self { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        majority(walk(&self.nodes, x))
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node<[u32; 2]>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
        }
    }
}

/// Bagged CART trees with per-split feature subsampling.
///
/// Tree `t` draws all of its randomness (bootstrap rows, then per-node
/// feature permutations) from ChaCha8 seeded with the forest seed on
/// stream `t`, so each tree is reproducible on its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(data: &LabeledDataset, params: &ForestParams, seed: u64) -> Self {
        use rand::Rng;

        let n = data.len();
        let dim = data.dimension();
        let mtry = params
            .max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .max(1);
        let tree_params = TreeParams {
            max_features: Some(mtry),
            ..TreeParams::default()
        };
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let nodes = fit_classifier(
                    data.rows(),
                    data.labels(),
                    sample,
                    &tree_params,
                    Some(&mut rng),
                );
                DecisionTree { nodes }
            })
            .collect();
        Self { trees }
    }

    /// Majority of tree votes; an even split goes to Deepfake-2.
    pub fn predict(&self, x: &[f64]) -> Label {
        let three = self
            .trees
            .iter()
            .filter(|t| t.predict(x) == Label::Deepfake3)
            .count();
        if 2 * three > self.trees.len() {
            Label::Deepfake3
        } else {
            Label::Deepfake2
        }
    }
}

/// Depth-limited least-squares tree with externally supplied leaf values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node<f64>>,
}

impl RegressionTree {
    /// Fits `targets` by squared error; each leaf gets `leaf_value(indices)`.
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[f64],
        max_depth: usize,
        leaf_value: impl Fn(&[usize]) -> f64,
    ) -> Self {
        let params = TreeParams {
            min_samples_split: 2,
            max_depth: Some(max_depth),
            max_features: None,
        };
        let nodes = grow(
            rows,
            (0..rows.len()).collect(),
            &params,
            None,
            leaf_value,
            |idx| idx.iter().all(|&i| targets[i] == targets[idx[0]]),
            |f, idx| {
                let total: f64 = idx.iter().map(|&i| targets[i]).sum();
                let n = idx.len() as f64;
                best_threshold(
                    rows,
                    f,
                    idx,
                    0.0f64,
                    |acc, i| *acc += targets[i],
                    |left_sum, left_n| {
                        let ln = left_n as f64;
                        let right_sum = total - left_sum;
                        // SSE = const - (S_l^2 / n_l + S_r^2 / n_r)
                        -(left_sum * left_sum / ln + right_sum * right_sum / (n - ln))
                    },
                )
            },
        );
        Self { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        *walk(&self.nodes, x)
    }
}
