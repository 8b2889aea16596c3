use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::Execution;

/// Column-major feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// One vector per feature, each of length `n_rows`.
    pub columns: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from string labels; classes are numbered in order of
    /// first appearance.
    pub fn from_columns<S: AsRef<str>>(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        labels: &[S],
    ) -> Result<Self, StatsError> {
        let mut class_names: Vec<String> = Vec::new();
        let ids = labels
            .iter()
            .map(|l| match class_names.iter().position(|c| c == l.as_ref()) {
                Some(i) => i,
                None => {
                    class_names.push(l.as_ref().to_string());
                    class_names.len() - 1
                }
            })
            .collect();
        let d = Self { feature_names, columns, labels: ids, class_names };
        d.validate()?;
        Ok(d)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    fn validate(&self) -> Result<(), StatsError> {
        if self.labels.is_empty() || self.columns.is_empty() {
            return Err(StatsError::EmptyDataset);
        }
        if self.feature_names.len() != self.columns.len() {
            return Err(StatsError::InvalidArgument("feature names and columns differ in count".into()));
        }
        if let Some(c) = self.columns.iter().find(|c| c.len() != self.labels.len()) {
            return Err(StatsError::LengthMismatch(c.len(), self.labels.len()));
        }
        if self.columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::InvalidArgument("missing or non-finite feature value".into()));
        }
        let first = self.labels[0];
        if self.labels.iter().all(|&l| l == first) {
            return Err(StatsError::SingleClass);
        }
        Ok(())
    }

    fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1).max(self.class_names.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means ⌊√p⌋.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 500, mtry: None, min_leaf: 1, seed: 1, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean out-of-bag accuracy drop under permutation, in percentage points.
    pub mda: f64,
    /// Mean total Gini decrease (count-weighted) per tree.
    pub mdg: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split { feature, threshold, left, right } => {
                    at = if value(feature) <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }

    fn uses(&self, feature: usize) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    pub importance: Vec<FeatureImportance>,
    /// Majority-vote accuracy over rows that were out of bag at least once.
    pub oob_accuracy: f64,
    n_classes: usize,
}

impl RandomForest {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut votes = vec![0u32; self.n_classes];
        for t in &self.trees {
            votes[t.predict_with(|f| row[f])] += 1;
        }
        argmax(&votes)
    }
}

fn argmax(v: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in v.iter().enumerate() {
        if c > v[best] {
            best = i;
        }
    }
    best
}

struct TreeOutcome {
    tree: Tree,
    gini: Vec<f64>,
    /// Accuracy drop per feature, `None` without out-of-bag rows.
    drop: Option<Vec<f64>>,
    oob_votes: Vec<(u32, u32)>,
}

struct Grower<'a> {
    data: &'a Dataset,
    n_classes: usize,
    mtry: usize,
    min_leaf: usize,
    rng: ChaCha8Rng,
    gini: Vec<f64>,
    buf: Vec<(f64, usize)>,
    features: Vec<usize>,
}

impl Grower<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &r in rows {
            c[self.data.labels[r]] += 1;
        }
        c
    }

    /// Best split of `rows` on `feature`: (score, threshold, left size), where
    /// score is Σc_L²/n_L + Σc_R²/n_R.
    fn best_on(&mut self, feature: usize, rows: &[usize], total: &[u32]) -> Option<(f64, f64, usize)> {
        let col = &self.data.columns[feature];
        self.buf.clear();
        self.buf.extend(rows.iter().map(|&r| (col[r], self.data.labels[r])));
        self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.buf.len();
        if self.buf[0].0 == self.buf[n - 1].0 {
            return None;
        }
        let mut left = vec![0u32; self.n_classes];
        let mut sq_left = 0.0f64;
        let mut sq_right: f64 = total.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
        let mut best: Option<(f64, f64, usize)> = None;
        for i in 0..n - 1 {
            let c = self.buf[i].1;
            let l = f64::from(left[c]);
            let r = f64::from(total[c] - left[c]);
            sq_left += 2.0 * l + 1.0;
            sq_right -= 2.0 * r - 1.0;
            left[c] += 1;
            let nl = i + 1;
            if self.buf[i].0 == self.buf[i + 1].0 || nl < self.min_leaf || n - nl < self.min_leaf {
                continue;
            }
            let score = sq_left / nl as f64 + sq_right / (n - nl) as f64;
            if best.is_none_or(|(s, _, _)| score > s) {
                let threshold = self.buf[i].0 + (self.buf[i + 1].0 - self.buf[i].0) / 2.0;
                best = Some((score, threshold, nl));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>) -> Tree {
        let mut nodes = vec![Node::Leaf(0)];
        let mut stack = vec![(0usize, rows)];
        while let Some((at, rows)) = stack.pop() {
            let counts = self.class_counts(&rows);
            let majority = argmax(&counts);
            let n = rows.len();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || n < 2 * self.min_leaf.max(1) {
                nodes[at] = Node::Leaf(majority);
                continue;
            }
            let parent = counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum::<f64>() / n as f64;
            let p = self.features.len();
            for i in 0..self.mtry {
                let j = self.rng.random_range(i..p);
                self.features.swap(i, j);
            }
            let mut best: Option<(f64, usize, f64)> = None;
            for i in 0..self.mtry {
                let f = self.features[i];
                if let Some((score, threshold, _)) = self.best_on(f, &rows, &counts) {
                    if best.is_none_or(|(s, _, _)| score > s) {
                        best = Some((score, f, threshold));
                    }
                }
            }
            match best {
                Some((score, feature, threshold)) if score - parent > 1e-12 => {
                    self.gini[feature] += score - parent;
                    let col = &self.data.columns[feature];
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&x| col[x] <= threshold);
                    let left = nodes.len() as u32;
                    nodes.push(Node::Leaf(0));
                    nodes.push(Node::Leaf(0));
                    nodes[at] = Node::Split { feature, threshold, left, right: left + 1 };
                    stack.push((left as usize + 1, r));
                    stack.push((left as usize, l));
                }
                _ => nodes[at] = Node::Leaf(majority),
            }
        }
        Tree { nodes }
    }
}

fn train_tree(data: &Dataset, cfg: &ForestConfig, mtry: usize, index: usize) -> TreeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = data.n_rows();
    let p = data.columns.len();
    let mut in_bag = vec![false; n];
    let rows: Vec<usize> = (0..n)
        .map(|_| {
            let r = rng.random_range(0..n);
            in_bag[r] = true;
            r
        })
        .collect();

    let mut g = Grower {
        data,
        n_classes: data.n_classes(),
        mtry,
        min_leaf: cfg.min_leaf.max(1),
        rng,
        gini: vec![0.0; p],
        buf: Vec::with_capacity(n),
        features: (0..p).collect(),
    };
    let tree = g.grow(rows);
    let mut rng = g.rng;
    let gini = g.gini;

    let oob: Vec<usize> = (0..n).filter(|&r| !in_bag[r]).collect();
    let predict = |r: usize| tree.predict_with(|f| data.columns[f][r]);
    let oob_votes: Vec<(u32, u32)> = oob.iter().map(|&r| (r as u32, predict(r) as u32)).collect();
    let drop = if oob.is_empty() {
        None
    } else {
        let base = oob_votes.iter().filter(|(r, c)| data.labels[*r as usize] == *c as usize).count();
        let mut drops = vec![0.0; p];
        for (f, d) in drops.iter_mut().enumerate() {
            if !tree.uses(f) {
                continue;
            }
            let mut shuffled: Vec<f64> = oob.iter().map(|&r| data.columns[f][r]).collect();
            shuffled.shuffle(&mut rng);
            let correct = oob
                .iter()
                .zip(&shuffled)
                .filter(|(&r, &v)| {
                    tree.predict_with(|k| if k == f { v } else { data.columns[k][r] }) == data.labels[r]
                })
                .count();
            *d = (base as f64 - correct as f64) / oob.len() as f64;
        }
        Some(drops)
    };
    TreeOutcome { tree, gini, drop, oob_votes }
}

/// Trains a random forest of CART trees and reports per-feature MDA and MDG.
///
/// Each tree draws its bootstrap sample, split candidates and permutations
/// from its own generator derived from `(seed, tree index)`, and results are
/// reduced in tree order, so output does not depend on scheduling.
pub fn rf_train_and_importance(data: &Dataset, cfg: &ForestConfig) -> Result<RandomForest, StatsError> {
    data.validate()?;
    if cfg.n_trees == 0 {
        return Err(StatsError::InvalidArgument("n_trees must be positive".into()));
    }
    let p = data.columns.len();
    let mtry = cfg.mtry.unwrap_or(((p as f64).sqrt().floor() as usize).max(1)).clamp(1, p);
    let outcomes = cfg.execution.map_range(cfg.n_trees, |i| train_tree(data, cfg, mtry, i));

    let n_classes = data.n_classes();
    let mut gini = vec![0.0; p];
    let mut drop = vec![0.0; p];
    let mut with_oob = 0usize;
    let mut votes = vec![vec![0u32; n_classes]; data.n_rows()];
    let mut trees = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for f in 0..p {
            gini[f] += o.gini[f];
        }
        if let Some(d) = &o.drop {
            with_oob += 1;
            for f in 0..p {
                drop[f] += d[f];
            }
        }
        for (r, c) in o.oob_votes {
            votes[r as usize][c as usize] += 1;
        }
        trees.push(o.tree);
    }
    let n_trees = trees.len() as f64;
    let importance = (0..p)
        .map(|f| FeatureImportance {
            feature: data.feature_names[f].clone(),
            mda: if with_oob == 0 { 0.0 } else { 100.0 * drop[f] / with_oob as f64 },
            mdg: gini[f] / n_trees,
        })
        .collect();
    let (mut hit, mut seen) = (0usize, 0usize);
    for (r, v) in votes.iter().enumerate() {
        if v.iter().any(|&c| c > 0) {
            seen += 1;
            if argmax(v) == data.labels[r] {
                hit += 1;
            }
        }
    }
    let oob_accuracy = if seen == 0 { 0.0 } else { hit as f64 / seen as f64 };
    Ok(RandomForest { trees, importance, oob_accuracy, n_classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_score_matches_direct_formula() {
        // two classes, perfectly separable on the only feature
        let d = Dataset::from_columns(vec!["x".into()], vec![vec![1.0, 2.0, 3.0, 4.0]], &["a", "a", "b", "b"]).unwrap();
        let cfg = ForestConfig { n_trees: 1, mtry: Some(1), ..Default::default() };
        let f = rf_train_and_importance(&d, &cfg).unwrap();
        assert_eq!(f.predict(&[1.5]), 0);
        assert_eq!(f.predict(&[3.5]), 1);
        assert!(f.importance[0].mdg > 0.0);
    }

    #[test]
    fn rejects_bad_datasets() {
        let one = Dataset::from_columns(vec!["x".into()], vec![vec![1.0, 2.0]], &["a", "a"]);
        assert_eq!(one.unwrap_err(), StatsError::SingleClass);
        let nan = Dataset::from_columns(vec!["x".into()], vec![vec![f64::NAN, 2.0]], &["a", "b"]);
        assert!(nan.is_err());
        let empty = Dataset::from_columns::<&str>(vec!["x".into()], vec![vec![]], &[]);
        assert_eq!(empty.unwrap_err(), StatsError::EmptyDataset);
    }
}
