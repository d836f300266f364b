//! Greedy CART trees: classification (Gini or entropy) and regression
//! (variance reduction), sharing one split search.
//!
//! Thresholds are midpoints between consecutive distinct sorted values.
//! Among equally good splits the lowest feature index wins, then the lowest
//! threshold.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Improvements closer than this are treated as ties.
const GAIN_EPS: f64 = 1e-12;

/// `(gain, feature, threshold, left rows, right rows)`.
type Split = (f64, usize, f64, Vec<usize>, Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

impl fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitCriterion::Gini => "gini",
            SplitCriterion::Entropy => "entropy",
        })
    }
}

impl FromStr for SplitCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(SplitCriterion::Gini),
            "entropy" => Ok(SplitCriterion::Entropy),
            _ => Err(Error::InvalidArgument(format!("unknown criterion {s:?}"))),
        }
    }
}

/// Features considered at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxFeatures {
    /// All features.
    Auto,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Auto => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2().floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaxFeatures::Auto => "auto",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        })
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MaxFeatures::Auto),
            "sqrt" | "sqr" => Ok(MaxFeatures::Sqrt),
            "log2" | "log" => Ok(MaxFeatures::Log2),
            _ => Err(Error::InvalidArgument(format!("unknown max_features {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: SplitCriterion::Gini,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: MaxFeatures::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class counts (classification) or the single mean value (regression).
    Leaf { value: Vec<f64> },
}

/// A fitted tree. Nodes are stored in creation order; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub params: TreeParams,
    pub n_features: usize,
    pub n_classes: usize,
    pub nodes: Vec<Node>,
    /// Training samples reaching each node.
    pub node_samples: Vec<usize>,
}

impl TreeModel {
    fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { value } => return value,
            }
        }
    }

    /// Majority class of the leaf; ties go to the lowest label.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let counts = self.leaf(row);
        let mut best = 0;
        for (c, &v) in counts.iter().enumerate() {
            if v > counts[best] {
                best = c;
            }
        }
        best
    }

    /// Fraction of the leaf's training samples in `class`.
    pub fn class_fraction(&self, row: &[f64], class: usize) -> f64 {
        let counts = self.leaf(row);
        let total: f64 = counts.iter().sum();
        counts.get(class).copied().unwrap_or(0.0) / total
    }

    /// Regression output (leaf mean).
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        self.leaf(row)[0]
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        rows_of(x).iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .zip(&self.node_samples)
            .filter(|(n, _)| matches!(n, Node::Leaf { .. }))
            .map(|(_, &s)| s)
            .collect()
    }
}

pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Clone, Copy)]
pub(crate) enum Target<'a> {
    Classes { y: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

#[derive(Clone, Copy)]
pub(crate) enum Impurity {
    Gini,
    Entropy,
    Variance,
}

impl From<SplitCriterion> for Impurity {
    fn from(c: SplitCriterion) -> Self {
        match c {
            SplitCriterion::Gini => Impurity::Gini,
            SplitCriterion::Entropy => Impurity::Entropy,
        }
    }
}

/// Running sufficient statistics of one side of a split.
#[derive(Clone)]
struct Stats {
    n: f64,
    counts: Vec<f64>,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn new(n_classes: usize) -> Self {
        Stats {
            n: 0.0,
            counts: vec![0.0; n_classes],
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn add(&mut self, target: Target<'_>, i: usize, sign: f64) {
        self.n += sign;
        match target {
            Target::Classes { y, .. } => self.counts[y[i]] += sign,
            Target::Values(v) => {
                self.sum += sign * v[i];
                self.sum_sq += sign * v[i] * v[i];
            }
        }
    }

    fn impurity(&self, kind: Impurity) -> f64 {
        if self.n <= 0.0 {
            return 0.0;
        }
        match kind {
            Impurity::Gini => 1.0 - self.counts.iter().map(|c| (c / self.n).powi(2)).sum::<f64>(),
            Impurity::Entropy => -self
                .counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|c| {
                    let p = c / self.n;
                    p * p.log2()
                })
                .sum::<f64>(),
            Impurity::Variance => {
                let m = self.sum / self.n;
                (self.sum_sq / self.n - m * m).max(0.0)
            }
        }
    }
}

pub(crate) struct Builder<'a> {
    rows: &'a [Vec<f64>],
    target: Target<'a>,
    impurity: Impurity,
    params: TreeParams,
    n_features: usize,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
    node_samples: Vec<usize>,
    /// Weighted impurity decrease credited to each feature.
    pub(crate) importances: Vec<f64>,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(
        rows: &'a [Vec<f64>],
        target: Target<'a>,
        impurity: Impurity,
        params: TreeParams,
        rng: Option<&'a mut ChaCha8Rng>,
    ) -> Self {
        let n_features = rows.first().map_or(0, Vec::len);
        Builder {
            rows,
            target,
            impurity,
            params,
            n_features,
            rng,
            nodes: Vec::new(),
            node_samples: Vec::new(),
            importances: vec![0.0; n_features],
        }
    }

    fn n_classes(&self) -> usize {
        match self.target {
            Target::Classes { n_classes, .. } => n_classes,
            Target::Values(_) => 0,
        }
    }

    fn stats_of(&self, idx: &[usize]) -> Stats {
        let mut s = Stats::new(self.n_classes());
        for &i in idx {
            s.add(self.target, i, 1.0);
        }
        s
    }

    fn leaf_value(&self, stats: &Stats) -> Vec<f64> {
        match self.target {
            Target::Classes { .. } => stats.counts.clone(),
            Target::Values(_) => vec![stats.sum / stats.n],
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let k = self.params.max_features.count(self.n_features);
        if k >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut chosen = match self.rng.as_deref_mut() {
            Some(rng) => sample(rng, self.n_features, k).into_vec(),
            None => (0..k).collect(),
        };
        chosen.sort_unstable();
        chosen
    }

    /// Best split over candidate features.
    fn best_split(&mut self, idx: &[usize], parent: &Stats) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let parent_imp = parent.impurity(self.impurity);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            let mut left = Stats::new(self.n_classes());
            let mut right = parent.clone();
            for pos in 0..n - 1 {
                let i = order[pos];
                left.add(self.target, i, 1.0);
                right.add(self.target, i, -1.0);
                let nl = pos + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.rows[i][f], self.rows[order[pos + 1]][f]);
                if lo == hi {
                    continue;
                }
                let child = (nl as f64 * left.impurity(self.impurity)
                    + (n - nl) as f64 * right.impurity(self.impurity))
                    / n as f64;
                let gain = parent_imp - child;
                if best.is_none_or(|(g, _, _)| gain > g + GAIN_EPS) {
                    best = Some((gain, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        // Zero-gain splits are allowed on impure nodes, so XOR-like
        // structure below the root can still be separated.
        let (gain, feature, threshold) = best?;
        let gain = gain.max(0.0);
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        Some((gain, feature, threshold, l, r))
    }

    fn grow(&mut self, idx: Vec<usize>, total: usize) -> usize {
        let stats = self.stats_of(&idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(&stats),
        });
        self.node_samples.push(idx.len());
        let impure = stats.impurity(self.impurity) > GAIN_EPS;
        if !impure || idx.len() < self.params.min_samples_split.max(2) {
            return at;
        }
        if let Some((gain, feature, threshold, l, r)) = self.best_split(&idx, &stats) {
            self.importances[feature] += gain * idx.len() as f64 / total as f64;
            let left = self.grow(l, total);
            let right = self.grow(r, total);
            self.nodes[at] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        at
    }

    pub(crate) fn build(mut self, idx: Vec<usize>) -> (TreeModel, Vec<f64>) {
        let total = idx.len();
        self.grow(idx, total);
        let model = TreeModel {
            params: self.params,
            n_features: self.n_features,
            n_classes: self.n_classes(),
            nodes: self.nodes,
            node_samples: self.node_samples,
        };
        (model, self.importances)
    }
}

/// Fit a classification tree. `rng` drives per-node feature sampling and
/// is unused when `max_features` is `Auto`.
pub fn tree_fit(
    x: &DMatrix<f64>,
    y: &[usize],
    n_classes: usize,
    params: TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<TreeModel> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidArgument("decision tree needs a non-empty design".into()));
    }
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows, labels {}",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let rows = rows_of(x);
    let builder = Builder::new(
        &rows,
        Target::Classes { y, n_classes },
        params.criterion.into(),
        params,
        Some(rng),
    );
    Ok(builder.build((0..rows.len()).collect()).0)
}
