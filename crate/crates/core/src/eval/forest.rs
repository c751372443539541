use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::{rng_stream, Error, Result, Rng};

/// Forest hyperparameters; `max_features = None` means `⌊√n_features⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

/// Bagged CART classifiers with Gini splits.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    n_classes: usize,
    n_features: usize,
    seed: u64,
    trees: Vec<Tree>,
}

fn argmax_lowest(counts: &[usize]) -> usize {
    (0..counts.len()).fold(0, |b, i| if counts[i] > counts[b] { i } else { b })
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| (c as f64 / n) * (c as f64 / n))
        .sum::<f64>()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    config: ForestConfig,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best threshold on `feature`: (weighted impurity, threshold).
    fn best_split(&self, idx: &mut [usize], feature: usize) -> Option<(f64, f64)> {
        idx.sort_by(|&a, &b| {
            self.x[a][feature]
                .total_cmp(&self.x[b][feature])
                .then(a.cmp(&b))
        });
        let n = idx.len();
        let min_leaf = self.config.min_samples_leaf.max(1);
        let mut left = vec![0usize; self.n_classes];
        let mut right = self.counts(idx);
        let mut best: Option<(f64, f64)> = None;
        for s in 1..n {
            let c = self.y[idx[s - 1]];
            left[c] += 1;
            right[c] -= 1;
            let (a, b) = (self.x[idx[s - 1]][feature], self.x[idx[s]][feature]);
            if a == b || s < min_leaf || n - s < min_leaf {
                continue;
            }
            let score =
                (s as f64 * gini(&left, s) + (n - s) as f64 * gini(&right, n - s)) / n as f64;
            if best.is_none_or(|(bs, _)| score < bs) {
                let mid = a + (b - a) / 2.0;
                best = Some((score, if mid < b { mid } else { a }));
            }
        }
        best
    }

    fn build(&self, sample: Vec<usize>, rng: &mut Rng) -> Tree {
        let mut nodes = vec![Node::Leaf { counts: Vec::new() }];
        let mut stack = vec![(0usize, sample, 0usize)];
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        while let Some((slot, mut idx, depth)) = stack.pop() {
            let counts = self.counts(&idx);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_done = self.config.max_depth.is_some_and(|d| depth >= d);
            let too_small = idx.len() < 2 * self.config.min_samples_leaf.max(1);
            let mut chosen = None;
            if !(pure || depth_done || too_small) {
                order.shuffle(rng);
                for (tried, &f) in order.iter().enumerate() {
                    if tried >= self.mtry && chosen.is_some() {
                        break;
                    }
                    if let Some((score, thr)) = self.best_split(&mut idx, f) {
                        if chosen.is_none_or(|(s, _, _)| score < s) {
                            chosen = Some((score, f, thr));
                        }
                    }
                }
            }
            match chosen {
                None => nodes[slot] = Node::Leaf { counts },
                Some((_, feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

impl Tree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
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
                Node::Leaf { counts } => return argmax_lowest(counts),
            }
        }
    }

    fn leaves(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts),
            Node::Split { .. } => None,
        })
    }
}

impl ForestModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sum of leaf sample counts for tree `i`, equal to the bootstrap size.
    pub fn tree_sample_count(&self, i: usize) -> usize {
        self.trees[i]
            .leaves()
            .map(|c| c.iter().sum::<usize>())
            .sum()
    }
}

/// Fits `config.n_trees` trees, each on its own bootstrap sample drawn from
/// stream `i` of `seed`.
pub fn rf_train(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    config: &ForestConfig,
    seed: u64,
) -> Result<ForestModel> {
    let n = features.len();
    if n == 0 || labels.len() != n {
        return Err(Error::dim(
            "rf_train",
            format!("{} labels (non-empty)", n),
            format!("{}", labels.len()),
        ));
    }
    let n_features = features[0].len();
    if n_features == 0 || features.iter().any(|f| f.len() != n_features) {
        return Err(Error::Parameter(
            "feature rows must share a positive length".into(),
        ));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rf_train"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::index("rf_train", bad, format!("0..{n_classes}")));
    }
    if config.n_trees == 0 {
        return Err(Error::Parameter("n_trees must be positive".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        log::warn!(
            "training data has a single class; the forest always predicts {}",
            labels[0]
        );
    }
    let mtry = config
        .max_features
        .unwrap_or_else(|| libm::floor(libm::sqrt(n_features as f64)) as usize)
        .clamp(1, n_features);
    let builder = Builder {
        x: features,
        y: labels,
        n_classes,
        mtry,
        config: *config,
    };
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = rng_stream(seed, t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            builder.build(sample, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        n_classes,
        n_features,
        seed,
        trees,
    })
}

/// Majority vote over trees; ties go to the lowest class id.
pub fn rf_predict(model: &ForestModel, features: &[Vec<f64>]) -> Result<Vec<usize>> {
    features
        .iter()
        .map(|x| {
            if x.len() != model.n_features {
                return Err(Error::dim(
                    "rf_predict",
                    format!("{} features", model.n_features),
                    format!("{}", x.len()),
                ));
            }
            let mut votes = vec![0usize; model.n_classes];
            for t in &model.trees {
                votes[t.predict(x)] += 1;
            }
            Ok(argmax_lowest(&votes))
        })
        .collect()
}
