//! Rule extraction: a CART tree over evaluated feature assignments, the
//! root-to-leaf paths that predict non-compliance, and fresh samples inside
//! those regions.

mod rules;
mod tree;

use serde::{Deserialize, Serialize};

use crate::falsify::{Archive, FeatureSpace, Labelled};
use crate::risk_model::{Domain, FeatureKind, Likelihood};
use crate::sim::{FeatureValue, Label};
use crate::Real;

pub use rules::{
    extract_rules, generate_counterexamples, render_report, AugmentationSet, Constraint, Rule,
};
pub use tree::{best_split, induce_tree, predict, Node, Split, SplitCandidate, Test, Tree, TreeParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("assignment is missing feature `{0}`")]
    MissingFeature(String),
    #[error("feature `{0}` has the wrong value type")]
    WrongType(String),
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(Real),
    #[error("rule #{0} describes an empty region")]
    EmptyRegion(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
    pub domain: Domain,
}

impl Column {
    pub fn is_numeric(&self) -> bool {
        matches!(self.domain, Domain::Interval { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<FeatureValue>,
    pub label: Label,
    pub triggered: Vec<String>,
}

impl Row {
    fn number(&self, col: usize) -> Real {
        match self.values[col] {
            FeatureValue::Number(v) => v,
            FeatureValue::Category(_) => Real::NAN,
        }
    }

    fn category(&self, col: usize) -> &str {
        match &self.values[col] {
            FeatureValue::Category(c) => c,
            FeatureValue::Number(_) => "",
        }
    }
}

/// Feature values and labels, one row per archive point, columns in
/// feature-space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (compliant, non-compliant) row counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let nc = self
            .rows
            .iter()
            .filter(|r| r.label == Label::NonCompliance)
            .count();
        (self.rows.len() - nc, nc)
    }
}

pub fn build_dataset<V: Labelled>(
    archive: &Archive<V>,
    space: &FeatureSpace,
) -> Result<LabeledDataset, ExplainError> {
    let columns = space
        .dims
        .iter()
        .map(|d| Column {
            name: d.name.clone(),
            kind: d.kind,
            domain: d.domain.clone(),
        })
        .collect();
    let rows = archive
        .points
        .iter()
        .map(|p| {
            let values = space
                .dims
                .iter()
                .map(|d| {
                    p.assignment
                        .get(&d.name)
                        .cloned()
                        .ok_or_else(|| ExplainError::MissingFeature(d.name.clone()))
                })
                .collect::<Result<_, _>>()?;
            Ok(Row {
                values,
                label: p.outcome.label(),
                triggered: p.outcome.triggered(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(LabeledDataset { columns, rows })
}

/// Fraction of rows in which `event` triggered.
pub fn estimate_event_likelihood(data: &LabeledDataset, event: &str) -> Result<Likelihood, ExplainError> {
    if data.is_empty() {
        return Err(ExplainError::EmptyDataset);
    }
    let hits = data
        .rows
        .iter()
        .filter(|r| r.triggered.iter().any(|t| t == event))
        .count();
    Ok(Likelihood {
        fraction: hits as Real / data.len() as Real,
        samples: data.len() as u64,
    })
}
