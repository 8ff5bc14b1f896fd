use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: u8,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A CART tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

/// Each tree draws from its own stream so that results do not depend on
/// which thread builds which tree.
fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

pub(crate) fn bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn gini(zeros: usize, ones: usize) -> f64 {
    let n = (zeros + ones) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (zeros as f64 / n, ones as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn majority(ones: usize, total: usize) -> u8 {
    u8::from(2 * ones > total)
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    max_depth: usize,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    /// Best `(weighted impurity, threshold)` for one feature, or `None` when
    /// the feature is constant on `rows`.
    fn best_threshold(&self, rows: &[usize], feature: usize, total_ones: usize) -> Option<(f64, f64)> {
        let mut vals: Vec<(f64, u8)> = rows.iter().map(|&i| (self.x.get(i, feature), self.y[i])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len();
        let mut best: Option<(f64, f64)> = None;
        let mut left_ones = 0;
        for i in 0..n - 1 {
            left_ones += usize::from(vals[i].1);
            let (lo, hi) = (vals[i].0, vals[i + 1].0);
            if lo >= hi {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            let right_ones = total_ones - left_ones;
            let imp = (nl as f64 * gini(nl - left_ones, left_ones)
                + nr as f64 * gini(nr - right_ones, right_ones))
                / n as f64;
            let mut thr = lo + (hi - lo) / 2.0;
            if thr >= hi {
                thr = lo;
            }
            if best.is_none_or(|(b, _)| imp < b) {
                best = Some((imp, thr));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let ones = rows.iter().filter(|&&i| self.y[i] == 1).count();
        self.nodes.push(TreeNode::Leaf {
            label: majority(ones, rows.len()),
        });
        if depth >= self.max_depth || rows.len() < 2 || ones == 0 || ones == rows.len() {
            return id;
        }
        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        features.shuffle(&mut self.rng);
        let mut evaluated = 0;
        let mut best: Option<(f64, usize, f64)> = None;
        for f in features {
            if evaluated == self.max_features {
                break;
            }
            if let Some((imp, thr)) = self.best_threshold(&rows, f, ones) {
                evaluated += 1;
                if best.is_none_or(|(b, _, _)| imp < b) {
                    best = Some((imp, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.x.get(i, feature) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl ForestModel {
    pub fn fit(x: &Matrix, y: &[u8], n_trees: usize, max_depth: usize, seed: u64) -> Self {
        let max_features = ((x.cols() as f64).sqrt().ceil() as usize).max(1);
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t);
                let rows = bootstrap(&mut rng, x.rows());
                let mut b = Builder {
                    x,
                    y,
                    max_depth,
                    max_features,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(rows, 0);
                DecisionTree { nodes: b.nodes }
            })
            .collect();
        ForestModel {
            n_features: x.cols(),
            trees,
        }
    }

    /// Majority vote; an exact tie yields 0.
    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let ones = self.trees.iter().filter(|t| t.predict_row(row) == 1).count();
                majority(ones, self.trees.len())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::accuracy;

    fn noisy(seed: u64, n: usize, d: usize) -> (Matrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Matrix::from_vec(n, d, data).unwrap();
        let y = (0..n)
            .map(|i| {
                let s = x.get(i, 0) + 0.5 * x.get(i, 1 % d);
                u8::from(s + rng.random_range(-0.4..0.4) > 0.0)
            })
            .collect();
        (x, y)
    }

    #[test]
    fn single_stump_separates_line() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [2.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let mut checked = 0;
        for seed in 0..20 {
            let rows = bootstrap(&mut tree_rng(seed, 0), 4);
            if !(rows.iter().any(|&i| y[i] == 0) && rows.iter().any(|&i| y[i] == 1)) {
                continue;
            }
            let f = ForestModel::fit(&x, &y, 1, 1, seed);
            assert_eq!(f.trees.len(), 1);
            assert_eq!(f.trees[0].depth(), 1);
            assert_eq!(accuracy(&f.predict(&x), &y), 1.0);
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn respects_depth_and_tree_count() {
        let (x, y) = noisy(1, 120, 6);
        let f = ForestModel::fit(&x, &y, 7, 3, 5);
        assert_eq!(f.trees.len(), 7);
        assert!(f.trees.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn tie_vote_is_negative() {
        let leaf = |label| DecisionTree {
            nodes: vec![TreeNode::Leaf { label }],
        };
        let f = ForestModel {
            n_features: 1,
            trees: vec![leaf(1), leaf(0)],
        };
        assert_eq!(f.predict(&Matrix::zeros(2, 1)), vec![0, 0]);
    }

    #[test]
    fn independent_of_thread_count() {
        let (x, y) = noisy(3, 200, 8);
        let fit = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ForestModel::fit(&x, &y, 20, 100, 42))
        };
        let a = fit(1);
        let b = fit(4);
        assert_eq!(a, b);
        assert_ne!(a, ForestModel::fit(&x, &y, 20, 100, 43));
    }

    #[test]
    fn forest_not_worse_than_best_tree() {
        for seed in 0..20 {
            let (x, y) = noisy(100 + seed, 150, 5);
            let f = ForestModel::fit(&x, &y, 25, 100, seed);
            let forest_acc = accuracy(&f.predict(&x), &y);
            let best_tree = f
                .trees
                .iter()
                .map(|t| {
                    let p: Vec<u8> = x.iter_rows().map(|r| t.predict_row(r)).collect();
                    accuracy(&p, &y)
                })
                .fold(0.0, f64::max);
            assert!(forest_acc >= 0.95 * best_tree, "seed {seed}: {forest_acc} vs {best_tree}");
        }
    }
}
