//! Random forest of Gini CART trees.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of features drawn as split candidates at every node.
    pub max_features: usize,
    pub bootstrap: bool,
    pub class_weight: bool,
}

impl ForestParams {
    pub fn default_for(n_features: usize) -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 1,
            max_features: ((n_features as f64).sqrt().round() as usize).clamp(1, n_features.max(1)),
            bootstrap: true,
            class_weight: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf {
        probs: Vec<T>,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Nodes in depth-first order; the root is `nodes[0]`. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict_proba(&self, row: &[T]) -> &[T] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { probs } => return probs,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Grower<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [usize],
    /// Bootstrap multiplicity of each row.
    count: Vec<usize>,
    /// Multiplicity times class weight.
    weight: Vec<T>,
    classes: usize,
    params: &'a ForestParams,
    nodes: Vec<Node<T>>,
}

struct SplitChoice<T> {
    feature: usize,
    threshold: T,
    score: T,
}

impl<T: Scalar> Grower<'_, T> {
    fn class_weights(&self, rows: &[usize]) -> Vec<T> {
        let mut cw = vec![T::zero(); self.classes];
        for &r in rows {
            cw[self.y[r]] = cw[self.y[r]] + self.weight[r];
        }
        cw
    }

    fn leaf(&mut self, rows: &[usize]) -> usize {
        let cw = self.class_weights(rows);
        let total: T = cw.iter().copied().sum();
        let probs = if total > T::zero() {
            cw.into_iter().map(|v| v / total).collect()
        } else {
            vec![T::one() / T::from_count(self.classes); self.classes]
        };
        self.nodes.push(Node::Leaf { probs });
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<SplitChoice<T>> {
        let min_leaf = self.params.min_leaf.max(1);
        let total_count: usize = rows.iter().map(|&r| self.count[r]).sum();
        let total_w = self.class_weights(rows);
        let parent = weighted_gini(&total_w);
        let mut best: Option<SplitChoice<T>> = None;
        let mut sorted = rows.to_vec();
        for &f in features {
            sorted.sort_by(|&a, &b| {
                self.x[(a, f)]
                    .partial_cmp(&self.x[(b, f)])
                    .expect("finite")
                    .then(a.cmp(&b))
            });
            let mut left_w = vec![T::zero(); self.classes];
            let mut left_count = 0;
            for p in 1..sorted.len() {
                let prev = sorted[p - 1];
                left_w[self.y[prev]] = left_w[self.y[prev]] + self.weight[prev];
                left_count += self.count[prev];
                let (a, b) = (self.x[(prev, f)], self.x[(sorted[p], f)]);
                if a == b || left_count < min_leaf || total_count - left_count < min_leaf {
                    continue;
                }
                let right_w: Vec<T> = total_w.iter().zip(&left_w).map(|(&t, &l)| t - l).collect();
                let score = weighted_gini(&left_w) + weighted_gini(&right_w);
                if score < parent && best.as_ref().is_none_or(|s| score < s.score) {
                    let mid = (a + b) / T::lit(2.0);
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: if mid < b { mid } else { a },
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let total_count: usize = rows.iter().map(|&r| self.count[r]).sum();
        let pure = rows.iter().all(|&r| self.y[r] == self.y[rows[0]]);
        if pure || depth >= self.params.max_depth || total_count < 2 * self.params.min_leaf.max(1) {
            return self.leaf(&rows);
        }
        let d = self.x.cols();
        let k = self.params.max_features.clamp(1, d);
        let mut features = sample(rng, d, k).into_vec();
        features.sort_unstable();
        let Some(split) = self.best_split(&rows, &features) else {
            return self.leaf(&rows);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, split.feature)] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { probs: Vec::new() });
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Total weight times Gini impurity, i.e. `W - sum(w_c^2) / W`.
fn weighted_gini<T: Scalar>(w: &[T]) -> T {
    let total: T = w.iter().copied().sum();
    if total <= T::zero() {
        return T::zero();
    }
    total - w.iter().map(|&v| v * v).sum::<T>() / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
    pub classes: usize,
}

impl<T: Scalar> Forest<T> {
    /// `class_w[c]` multiplies the weight of every sample of class `c`.
    pub fn fit(x: &Matrix<T>, y: &[usize], class_w: &[T], classes: usize, params: &ForestParams, seed: u64) -> Self {
        let n = x.rows();
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let mut count = vec![0usize; n];
                if params.bootstrap {
                    for _ in 0..n {
                        count[rng.random_range(0..n)] += 1;
                    }
                } else {
                    count.fill(1);
                }
                let weight = (0..n).map(|r| T::from_count(count[r]) * class_w[y[r]]).collect();
                let rows: Vec<usize> = (0..n).filter(|&r| count[r] > 0).collect();
                let mut g = Grower {
                    x,
                    y,
                    count,
                    weight,
                    classes,
                    params,
                    nodes: Vec::new(),
                };
                g.grow(rows, 0, &mut rng);
                Tree { nodes: g.nodes }
            })
            .collect();
        Self { trees, classes }
    }

    pub fn predict_proba(&self, row: &[T]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.classes];
        for t in &self.trees {
            for (a, &p) in acc.iter_mut().zip(t.predict_proba(row)) {
                *a = *a + p;
            }
        }
        let n = T::from_count(self.trees.len());
        acc.into_iter().map(|v| v / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> ForestParams {
        ForestParams {
            n_trees: 1,
            max_depth: 1,
            min_leaf: 1,
            max_features: 2,
            bootstrap: false,
            class_weight: false,
        }
    }

    /// Exhaustive search over every feature and every midpoint between distinct values.
    fn brute_force_split(x: &Matrix<f64>, y: &[usize]) -> (usize, f64) {
        let gini = |rows: &[usize]| {
            let n = rows.len() as f64;
            let mut c = [0.0; 2];
            for &r in rows {
                c[y[r]] += 1.0;
            }
            n - (c[0] * c[0] + c[1] * c[1]) / n
        };
        let mut best = (usize::MAX, 0.0, f64::INFINITY);
        for f in 0..x.cols() {
            let mut vals = x.col(f);
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for w in vals.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = (0..x.rows()).partition(|&i| x[(i, f)] <= thr);
                let s = gini(&l) + gini(&r);
                if s < best.2 {
                    best = (f, thr, s);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn stump_matches_exhaustive_split() {
        let x = Matrix::from_rows(&[
            [0.3_f64, 5.0],
            [1.2, 3.5],
            [0.7, 4.1],
            [2.2, 1.0],
            [1.9, 0.2],
            [0.1, 2.9],
            [2.8, 3.0],
            [1.5, 0.8],
        ]);
        let y = [0, 0, 0, 1, 1, 0, 1, 1];
        let f = Forest::fit(&x, &y, &[1.0, 1.0], 2, &stump(), 7);
        let (feature, threshold) = brute_force_split(&x, &y);
        match &f.trees[0].nodes[0] {
            Node::Split {
                feature: fi,
                threshold: th,
                ..
            } => {
                assert_eq!(*fi, feature);
                assert_eq!(*th, threshold);
            }
            Node::Leaf { .. } => panic!("expected a split"),
        }
        assert_eq!(f.trees[0].depth(), 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = Matrix::from_rows(&[[0.0_f64, 1.0], [1.0, 0.0], [0.5, 0.5], [0.9, 0.2], [0.1, 0.8]]);
        let y = [0, 1, 0, 1, 0];
        let p = ForestParams::default_for(2);
        assert_eq!(
            Forest::fit(&x, &y, &[1.0, 1.0], 2, &p, 3),
            Forest::fit(&x, &y, &[1.0, 1.0], 2, &p, 3)
        );
    }
}
