//! CART induction with Gini impurity.
//!
//! Split quality is compared on exact integer counts: for a binary partition
//! with class counts (a, b) and (c, d) the weighted child impurity is
//! `1 - S / n` with `S = (a² + b²)/(a + b) + (c² + d²)/(c + d)`, so the best
//! split maximises `S`, which is compared as a fraction.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Column, ExplainError, LabeledDataset, Row};
use crate::risk_model::Domain;
use crate::sim::{FeatureAssignment, FeatureValue, Label};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Fewest rows either side of a split may hold.
    pub min_leaf: usize,
    pub min_gain: Real,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf: 5,
            min_gain: 1e-6,
        }
    }
}

/// A node test; rows passing it go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Test {
    /// `value <= threshold`
    Le {
        column: usize,
        feature: String,
        threshold: Real,
    },
    /// `value == category`
    Eq {
        column: usize,
        feature: String,
        category: String,
    },
}

impl Test {
    pub fn column(&self) -> usize {
        match self {
            Test::Le { column, .. } | Test::Eq { column, .. } => *column,
        }
    }

    fn passes_row(&self, row: &Row) -> bool {
        match self {
            Test::Le { column, threshold, .. } => row.number(*column) <= *threshold,
            Test::Eq { column, category, .. } => row.category(*column) == category,
        }
    }

    pub fn passes(&self, a: &FeatureAssignment) -> Result<bool, ExplainError> {
        let (name, value) = match self {
            Test::Le { feature, .. } | Test::Eq { feature, .. } => {
                (feature, a.get(feature).ok_or_else(|| ExplainError::MissingFeature(feature.clone()))?)
            }
        };
        match (self, value) {
            (Test::Le { threshold, .. }, FeatureValue::Number(v)) => Ok(v <= threshold),
            (Test::Eq { category, .. }, FeatureValue::Category(c)) => Ok(c == category),
            _ => Err(ExplainError::WrongType(name.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub test: Test,
    pub gain: Real,
    pub left: Box<Node>,
    pub right: Box<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub compliant: usize,
    pub non_compliant: usize,
    /// Share of non-compliant rows reaching this node.
    pub likelihood: Real,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<Split>,
}

impl Node {
    pub fn support(&self) -> usize {
        self.compliant + self.non_compliant
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn depth(&self) -> usize {
        match &self.split {
            None => 0,
            Some(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match &self.split {
            None => 1,
            Some(s) => s.left.leaves() + s.right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub columns: Vec<Column>,
    pub params: TreeParams,
    pub root: Node,
}

/// A scored split of some rows on one column.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub test: Test,
    /// Reduction in Gini impurity.
    pub gain: Real,
    /// Rows passing the test.
    pub left: usize,
    score: (u128, u128),
}

impl SplitCandidate {
    /// Exact comparison of split quality.
    pub fn better_than(&self, o: &SplitCandidate) -> bool {
        cmp_frac(self.score, o.score) == Ordering::Greater
    }
}

fn cmp_frac((n1, d1): (u128, u128), (n2, d2): (u128, u128)) -> Ordering {
    (n1 * d2).cmp(&(n2 * d1))
}

fn counts(rows: &[&Row]) -> (u128, u128) {
    let nc = rows.iter().filter(|r| r.label == Label::NonCompliance).count() as u128;
    (rows.len() as u128 - nc, nc)
}

fn candidate(test: Test, left: (u128, u128), total: (u128, u128)) -> SplitCandidate {
    let (a, b) = left;
    let (c, d) = (total.0 - a, total.1 - b);
    let (nl, nr) = (a + b, c + d);
    let score = ((a * a + b * b) * nr + (c * c + d * d) * nl, nl * nr);
    let n = (nl + nr) as Real;
    let parent = (total.0 * total.0 + total.1 * total.1) as Real / (n * n);
    let gain = score.0 as Real / score.1 as Real / n - parent;
    SplitCandidate {
        test,
        gain,
        left: nl as usize,
        score,
    }
}

/// Best admissible split of `rows` on column `col`: numeric columns try
/// midpoints between consecutive distinct values, categorical columns try
/// each category against the rest. Each side must keep at least `min_leaf`
/// rows. Ties go to the lower threshold or earlier category.
pub fn best_split(
    columns: &[Column],
    rows: &[&Row],
    col: usize,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let total = counts(rows);
    let n = rows.len();
    let column = &columns[col];
    let admissible = |left: usize| left >= min_leaf.max(1) && n - left >= min_leaf.max(1);
    let mut best: Option<SplitCandidate> = None;
    let mut consider = |c: SplitCandidate| {
        if admissible(c.left) && best.as_ref().is_none_or(|b| c.better_than(b)) {
            best = Some(c);
        }
    };
    match &column.domain {
        Domain::Interval { .. } => {
            let mut sorted: Vec<(Real, bool)> = rows
                .iter()
                .map(|r| (r.number(col), r.label == Label::NonCompliance))
                .collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = (0u128, 0u128);
            for i in 0..sorted.len().saturating_sub(1) {
                if sorted[i].1 {
                    left.1 += 1;
                } else {
                    left.0 += 1;
                }
                let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                if lo == hi {
                    continue;
                }
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                consider(candidate(
                    Test::Le {
                        column: col,
                        feature: column.name.clone(),
                        threshold,
                    },
                    left,
                    total,
                ));
            }
        }
        Domain::Set(values) => {
            for v in values {
                let inside: Vec<&Row> = rows.iter().copied().filter(|r| r.category(col) == v).collect();
                if inside.is_empty() || inside.len() == n {
                    continue;
                }
                consider(candidate(
                    Test::Eq {
                        column: col,
                        feature: column.name.clone(),
                        category: v.clone(),
                    },
                    counts(&inside),
                    total,
                ));
            }
        }
    }
    best
}

fn leaf(rows: &[&Row]) -> Node {
    let (c, nc) = counts(rows);
    let n = rows.len();
    Node {
        compliant: c as usize,
        non_compliant: nc as usize,
        likelihood: if n == 0 { 0.0 } else { nc as Real / n as Real },
        split: None,
    }
}

fn grow(columns: &[Column], rows: &[&Row], depth: usize, p: &TreeParams) -> Node {
    let mut node = leaf(rows);
    if depth >= p.max_depth || node.compliant == 0 || node.non_compliant == 0 {
        return node;
    }
    let mut best: Option<SplitCandidate> = None;
    for col in 0..columns.len() {
        if let Some(c) = best_split(columns, rows, col, p.min_leaf) {
            if best.as_ref().is_none_or(|b| c.better_than(b)) {
                best = Some(c);
            }
        }
    }
    let Some(best) = best.filter(|b| b.gain >= p.min_gain) else {
        return node;
    };
    let (l, r): (Vec<&Row>, Vec<&Row>) = rows.iter().partition(|row| best.test.passes_row(row));
    node.split = Some(Split {
        left: Box::new(grow(columns, &l, depth + 1, p)),
        right: Box::new(grow(columns, &r, depth + 1, p)),
        test: best.test,
        gain: best.gain,
    });
    node
}

/// Grow a classification tree predicting non-compliance. Nodes stop
/// splitting at `max_depth`, when pure, or when no admissible split gains at
/// least `min_gain`.
pub fn induce_tree(data: &LabeledDataset, params: TreeParams) -> Result<Tree, ExplainError> {
    if data.is_empty() {
        return Err(ExplainError::EmptyDataset);
    }
    let rows: Vec<&Row> = data.rows.iter().collect();
    Ok(Tree {
        columns: data.columns.clone(),
        params,
        root: grow(&data.columns, &rows, 0, &params),
    })
}

/// Non-compliance likelihood of the leaf `a` falls into.
pub fn predict(tree: &Tree, a: &FeatureAssignment) -> Result<Real, ExplainError> {
    let mut node = &tree.root;
    while let Some(s) = &node.split {
        node = if s.test.passes(a)? { &s.left } else { &s.right };
    }
    Ok(node.likelihood)
}
