//! Gain-ratio classification tree over the two cluster indices.
//!
//! Every distinct compensation value is a class. Internal nodes test
//! `feature <= threshold`. Candidate splits follow the C4.5 rule: among the
//! splits whose information gain is at least the average gain of all
//! candidates, take the highest gain ratio. Ties go to `input1` before
//! `input2`, then to the smaller threshold. Growth continues until a region is
//! single-valued, so the unpruned tree reproduces its training table exactly.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::CompensationTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Input1,
    Input2,
}

impl Feature {
    fn of(self, row: &Row) -> u32 {
        match self {
            Feature::Input1 => row.i,
            Feature::Input2 => row.j,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feature::Input1 => "Input1",
            Feature::Input2 => "Input2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: i32,
    },
    Split {
        feature: Feature,
        threshold: u32,
        le: Box<TreeNode>,
        gt: Box<TreeNode>,
    },
}

impl TreeNode {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { le, gt, .. } => 1 + le.depth().max(gt.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { le, gt, .. } => le.leaves() + gt.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompensationTree {
    clusters: u32,
    root: TreeNode,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    i: u32,
    j: u32,
    value: i32,
}

fn entropy(counts: &BTreeMap<i32, usize>, n: usize) -> f64 {
    let n = n as f64;
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn class_counts<'a>(rows: impl Iterator<Item = &'a Row>) -> BTreeMap<i32, usize> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(r.value).or_insert(0) += 1;
    }
    m
}

/// Most frequent value; ties resolve to the smallest value.
fn majority(counts: &BTreeMap<i32, usize>) -> i32 {
    let mut best = (0usize, 0i32);
    for (&v, &c) in counts {
        if c > best.0 {
            best = (c, v);
        }
    }
    best.1
}

struct Candidate {
    feature: Feature,
    threshold: u32,
    gain: f64,
    ratio: f64,
}

const EPS: f64 = 1e-12;

fn best_split(rows: &[Row]) -> Option<(Feature, u32)> {
    let n = rows.len();
    let base = entropy(&class_counts(rows.iter()), n);
    let mut cands = Vec::new();
    for feature in [Feature::Input1, Feature::Input2] {
        let mut values: Vec<u32> = rows.iter().map(|r| feature.of(r)).collect();
        values.sort_unstable();
        values.dedup();
        for &t in &values[..values.len().saturating_sub(1)] {
            let (le, gt): (Vec<&Row>, Vec<&Row>) = rows.iter().partition(|r| feature.of(r) <= t);
            let (nl, nr) = (le.len(), gt.len());
            let pl = nl as f64 / n as f64;
            let pr = nr as f64 / n as f64;
            let rem = pl * entropy(&class_counts(le.into_iter()), nl)
                + pr * entropy(&class_counts(gt.into_iter()), nr);
            let gain = (base - rem).max(0.0);
            let split_info = -(pl * pl.log2() + pr * pr.log2());
            cands.push(Candidate {
                feature,
                threshold: t,
                gain,
                ratio: gain / split_info,
            });
        }
    }
    if cands.is_empty() {
        return None;
    }
    let avg = cands.iter().map(|c| c.gain).sum::<f64>() / cands.len() as f64;
    let mut best: Option<&Candidate> = None;
    for c in cands.iter().filter(|c| c.gain + EPS >= avg) {
        if best.is_none_or(|b| c.ratio > b.ratio + EPS) {
            best = Some(c);
        }
    }
    best.map(|c| (c.feature, c.threshold))
}

fn grow(rows: &mut [Row]) -> TreeNode {
    let counts = class_counts(rows.iter());
    if counts.len() <= 1 {
        return TreeNode::Leaf {
            value: counts.keys().next().copied().unwrap_or(0),
        };
    }
    let Some((feature, threshold)) = best_split(rows) else {
        return TreeNode::Leaf {
            value: majority(&counts),
        };
    };
    // Stable partition keeps the (i, j) ordering inside each half.
    rows.sort_by_key(|r| (feature.of(r) > threshold, r.i, r.j));
    let mid = rows.partition_point(|r| feature.of(r) <= threshold);
    let (le, gt) = rows.split_at_mut(mid);
    TreeNode::Split {
        feature,
        threshold,
        le: Box::new(grow(le)),
        gt: Box::new(grow(gt)),
    }
}

/// Fits an unpruned tree to the table's `(i, j) -> value` rows.
pub fn train_tree(table: &CompensationTable) -> CompensationTree {
    let mut rows: Vec<Row> = table
        .cells()
        .map(|(i, j, value)| Row { i, j, value })
        .collect();
    rows.sort_by_key(|r| (r.i, r.j));
    CompensationTree {
        clusters: table.clusters(),
        root: grow(&mut rows),
    }
}

impl CompensationTree {
    pub fn new(clusters: u32, root: TreeNode) -> Result<Self> {
        let t = CompensationTree { clusters, root };
        t.validate()?;
        Ok(t)
    }

    /// Single leaf predicting zero everywhere.
    pub fn zero(clusters: u32) -> Self {
        CompensationTree {
            clusters,
            root: TreeNode::Leaf { value: 0 },
        }
    }

    pub fn clusters(&self) -> u32 {
        self.clusters
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaves()
    }

    /// Checks that every threshold falls strictly inside the interval left
    /// open by its ancestors, so no path carries contradictory tests and
    /// every cluster pair reaches a leaf.
    pub fn validate(&self) -> Result<()> {
        fn walk(node: &TreeNode, bounds: [(u32, u32); 2], path: &mut String) -> Result<()> {
            if let TreeNode::Split {
                feature,
                threshold,
                le,
                gt,
            } = node
            {
                let k = *feature as usize;
                let (lo, hi) = bounds[k];
                if *threshold < lo || *threshold >= hi {
                    return Err(Error::Config(format!(
                        "split {feature} <= {threshold} at {path}root is outside the reachable range [{lo}, {hi}]"
                    )));
                }
                let mut left = bounds;
                left[k] = (lo, *threshold);
                let mut right = bounds;
                right[k] = (threshold + 1, hi);
                let len = path.len();
                path.push_str("le/");
                walk(le, left, path)?;
                path.truncate(len);
                path.push_str("gt/");
                walk(gt, right, path)?;
                path.truncate(len);
            }
            Ok(())
        }
        if self.clusters == 0 {
            return Err(Error::Config("tree over zero clusters".into()));
        }
        let full = (1, self.clusters);
        walk(&self.root, [full, full], &mut String::new())
    }

    pub fn predict(&self, cluster1: u32, cluster2: u32) -> Result<i32> {
        for k in [cluster1, cluster2] {
            if k == 0 || k > self.clusters {
                return Err(Error::ClusterOutOfRange {
                    index: k,
                    count: self.clusters,
                });
            }
        }
        Ok(self.predict_unchecked(cluster1, cluster2))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, cluster1: u32, cluster2: u32) -> i32 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    le,
                    gt,
                } => {
                    let x = match feature {
                        Feature::Input1 => cluster1,
                        Feature::Input2 => cluster2,
                    };
                    node = if x <= *threshold { le } else { gt };
                }
            }
        }
    }

    /// Indented text rendering, one test per line.
    pub fn dump(&self) -> String {
        fn walk(node: &TreeNode, indent: usize, s: &mut String) {
            match node {
                TreeNode::Leaf { value } => {
                    let _ = writeln!(s, "{:indent$}=> {value}", "", indent = indent);
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    le,
                    gt,
                } => {
                    for (op, child) in [("<=", le), (">", gt)] {
                        if let TreeNode::Leaf { value } = child.as_ref() {
                            let _ = writeln!(
                                s,
                                "{:indent$}{feature} {op} {threshold}: {value}",
                                "",
                                indent = indent
                            );
                        } else {
                            let _ = writeln!(
                                s,
                                "{:indent$}{feature} {op} {threshold}:",
                                "",
                                indent = indent
                            );
                            walk(child, indent + 4, s);
                        }
                    }
                }
            }
        }
        let mut s = format!(
            "# decision tree: {} clusters per input, depth {}, {} leaves\n",
            self.clusters,
            self.depth(),
            self.leaf_count()
        );
        walk(&self.root, 0, &mut s);
        s
    }
}

pub fn predict(model: &CompensationTree, cluster1: u32, cluster2: u32) -> Result<i32> {
    model.predict(cluster1, cluster2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_table_gives_single_leaf() {
        let tree = train_tree(&CompensationTable::zeros(16));
        assert_eq!(tree.root(), &TreeNode::Leaf { value: 0 });
        assert_eq!(tree.predict(7, 3).unwrap(), 0);
    }

    #[test]
    fn checkerboard_still_reproduced() {
        // No single threshold split has positive gain on a 2x2 checkerboard.
        let t = CompensationTable::new(2, vec![5, -5, -5, 5]).unwrap();
        let tree = train_tree(&t);
        for (i, j, v) in t.cells() {
            assert_eq!(tree.predict(i, j).unwrap(), v);
        }
    }

    #[test]
    fn simple_threshold_table() {
        // Value depends only on input1 > 9.
        let values = (1..=16)
            .flat_map(|i| (1..=16).map(move |_| if i <= 9 { 4 } else { 40 }))
            .collect();
        let t = CompensationTable::new(16, values).unwrap();
        let tree = train_tree(&t);
        assert_eq!(
            tree.root(),
            &TreeNode::Split {
                feature: Feature::Input1,
                threshold: 9,
                le: Box::new(TreeNode::Leaf { value: 4 }),
                gt: Box::new(TreeNode::Leaf { value: 40 }),
            }
        );
        assert!(tree.dump().contains("Input1 <= 9: 4"));
    }

    #[test]
    fn out_of_range_cluster() {
        let tree = CompensationTree::zero(16);
        assert!(matches!(
            tree.predict(0, 1),
            Err(Error::ClusterOutOfRange {
                index: 0,
                count: 16
            })
        ));
        assert!(tree.predict(1, 17).is_err());
    }

    #[test]
    fn contradictory_thresholds_rejected() {
        let bad = TreeNode::Split {
            feature: Feature::Input1,
            threshold: 4,
            le: Box::new(TreeNode::Split {
                feature: Feature::Input1,
                threshold: 6,
                le: Box::new(TreeNode::Leaf { value: 1 }),
                gt: Box::new(TreeNode::Leaf { value: 2 }),
            }),
            gt: Box::new(TreeNode::Leaf { value: 3 }),
        };
        assert!(CompensationTree::new(16, bad).is_err());
    }

    #[test]
    fn majority_ties_prefer_smaller_value() {
        let counts: BTreeMap<i32, usize> = [(7, 2), (-3, 2), (1, 1)].into_iter().collect();
        assert_eq!(majority(&counts), -3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unpruned_tree_equals_table(
            clusters in 2u32..=8,
            seed in proptest::collection::vec(-4i32..4, 64),
        ) {
            let values: Vec<i32> = (0..clusters * clusters)
                .map(|k| seed[k as usize % seed.len()] * 4)
                .collect();
            let t = CompensationTable::new(clusters, values).unwrap();
            let tree = train_tree(&t);
            tree.validate().unwrap();
            for (i, j, v) in t.cells() {
                prop_assert_eq!(tree.predict(i, j).unwrap(), v);
            }
            // Every path narrows each feature interval at most clusters - 1 times.
            prop_assert!(tree.depth() <= 2 * (clusters as usize - 1));
        }

        #[test]
        fn row_order_does_not_matter(perm_seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let values: Vec<i32> = (0..64).map(|k| (k * 37) % 11 - 5).collect();
            let t = CompensationTable::new(8, values).unwrap();
            let mut rows: Vec<Row> = t.cells().map(|(i, j, value)| Row { i, j, value }).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
            rows.shuffle(&mut rng);
            rows.sort_by_key(|r| (r.i, r.j));
            let shuffled = CompensationTree { clusters: 8, root: grow(&mut rows) };
            prop_assert_eq!(shuffled, train_tree(&t));
        }
    }
}
