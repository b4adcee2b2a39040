//! Falsification: metaheuristic search over the domain-feature space of a
//! situation for assignments that make a negative event's condition hold.
//!
//! Every algorithm works in the unit hypercube; [`FeatureSpace`] maps unit
//! vectors to typed feature assignments and back.

mod archive;
mod campaign;
mod search;

use serde::{Deserialize, Serialize};

use crate::risk_model::{CompareOp, Domain, FeatureKind, RiskModel};
use crate::sim::scenario::in_domain;
use crate::sim::{FeatureAssignment, FeatureValue, Metric, ScenarioError, VerdictError};
use crate::Real;

pub use archive::{
    read_archive, write_archive_csv, ArchiveHeader, ArchiveRecord, Labelled, LoadedArchive,
};
pub use campaign::{evaluate_assignment, run_campaign, Campaign, CampaignArchive};
pub use search::{run_search, Algorithm, Archive, EvaluatedPoint, SearchConfig};

#[derive(Debug, thiserror::Error)]
pub enum FalsifyError {
    #[error("unknown situation `{0}`")]
    UnknownSituation(String),
    #[error("situation `{0}` references no domain features")]
    EmptySpace(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event `{event}` is not exposed by situation `{situation}`")]
    NotExposed { event: String, situation: String },
    #[error("event `{event}` uses unknown metric `{metric}`")]
    UnknownMetric { event: String, metric: String },
    #[error("assignment is missing feature `{0}`")]
    MissingFeature(String),
    #[error("feature `{feature}`: value {value} is outside its domain")]
    OutOfDomain { feature: String, value: String },
    #[error("expected a {expected}-dimensional unit vector, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("at least one simulator seed is required")]
    NoSeeds,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Verdict(#[from] VerdictError),
    #[error("archive: {0}")]
    Archive(String),
}

/// One axis of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dim {
    pub name: String,
    pub kind: FeatureKind,
    pub domain: Domain,
}

impl Dim {
    fn bounds(&self) -> (Real, Real) {
        match &self.domain {
            Domain::Interval { lo, hi } => (*lo, *hi),
            Domain::Set(v) => (0.0, v.len() as Real),
        }
    }

    /// Integers inside an integer dimension's interval.
    fn integer_range(&self) -> (Real, Real) {
        let (lo, hi) = self.bounds();
        (lo.ceil(), hi.floor())
    }

    fn encode(&self, value: &FeatureValue) -> Result<Real, FalsifyError> {
        let out_of_domain = || FalsifyError::OutOfDomain {
            feature: self.name.clone(),
            value: value.to_string(),
        };
        if !in_domain(self.kind, &self.domain, value) {
            return Err(out_of_domain());
        }
        match (&self.domain, value) {
            (Domain::Interval { lo, hi }, FeatureValue::Number(v)) => Ok((v - lo) / (hi - lo)),
            (Domain::Set(values), FeatureValue::Category(c)) => {
                let i = values.iter().position(|x| x == c).ok_or_else(out_of_domain)?;
                Ok((i as Real + 0.5) / values.len() as Real)
            }
            _ => Err(out_of_domain()),
        }
    }

    fn decode(&self, u: Real) -> FeatureValue {
        let u = u.clamp(0.0, 1.0);
        match (&self.domain, self.kind) {
            (Domain::Interval { lo, hi }, FeatureKind::Integer) => {
                let (a, b) = self.integer_range();
                FeatureValue::Number((lo + u * (hi - lo)).round().clamp(a, b))
            }
            (Domain::Interval { lo, hi }, _) => {
                FeatureValue::Number((lo + u * (hi - lo)).clamp(*lo, *hi))
            }
            (Domain::Set(values), _) => {
                let k = values.len();
                let i = ((u * k as Real).floor() as usize).min(k.saturating_sub(1));
                FeatureValue::Category(values[i].clone())
            }
        }
    }
}

/// Ordered domain features of one situation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub situation: String,
    pub dims: Vec<Dim>,
}

/// The search space spanned by the features a situation lists, in the order
/// the situation lists them.
pub fn make_feature_space(model: &RiskModel, situation: &str) -> Result<FeatureSpace, FalsifyError> {
    let sit = model
        .situation(situation)
        .ok_or_else(|| FalsifyError::UnknownSituation(situation.to_string()))?;
    if sit.features.is_empty() {
        return Err(FalsifyError::EmptySpace(situation.to_string()));
    }
    let dims = sit
        .features
        .iter()
        .map(|name| {
            let f = model
                .feature(name)
                .ok_or_else(|| FalsifyError::UnknownFeature(name.clone()))?;
            Ok(Dim {
                name: f.name.clone(),
                kind: f.kind,
                domain: f.domain.clone(),
            })
        })
        .collect::<Result<_, FalsifyError>>()?;
    Ok(FeatureSpace {
        situation: situation.to_string(),
        dims,
    })
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    /// Unit-cube coordinates of an in-domain assignment. Categorical values
    /// map to the centre of their bucket.
    pub fn encode(&self, a: &FeatureAssignment) -> Result<Vec<Real>, FalsifyError> {
        self.dims
            .iter()
            .map(|d| {
                let v = a
                    .get(&d.name)
                    .ok_or_else(|| FalsifyError::MissingFeature(d.name.clone()))?;
                d.encode(v)
            })
            .collect()
    }

    /// Typed assignment for a unit vector; components are clamped to [0, 1].
    pub fn decode(&self, u: &[Real]) -> Result<FeatureAssignment, FalsifyError> {
        if u.len() != self.dims.len() {
            return Err(FalsifyError::Dimension {
                expected: self.dims.len(),
                got: u.len(),
            });
        }
        Ok(self
            .dims
            .iter()
            .zip(u)
            .map(|(d, &x)| (d.name.clone(), d.decode(x)))
            .collect())
    }

    /// Check that `a` assigns exactly this space's features, all in domain.
    pub fn check(&self, a: &FeatureAssignment) -> Result<(), FalsifyError> {
        self.encode(a)?;
        if let Some(extra) = a.keys().find(|k| !self.dims.iter().any(|d| &d.name == *k)) {
            return Err(FalsifyError::UnknownFeature(extra.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// What the search drives towards for one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub event: String,
    pub metric: Metric,
    pub direction: Direction,
    pub threshold: Real,
}

/// `metric < t` is falsified by driving the metric down, `metric > t` by
/// driving it up. The search itself always minimises robustness.
pub fn objective_from_event(model: &RiskModel, event: &str) -> Result<Objective, FalsifyError> {
    let ev = model
        .event(event)
        .ok_or_else(|| FalsifyError::UnknownEvent(event.to_string()))?;
    let metric = ev
        .condition
        .metric
        .parse()
        .map_err(|_| FalsifyError::UnknownMetric {
            event: ev.name.clone(),
            metric: ev.condition.metric.clone(),
        })?;
    Ok(Objective {
        event: ev.name.clone(),
        metric,
        direction: match ev.condition.op {
            CompareOp::Lt => Direction::Minimize,
            CompareOp::Gt => Direction::Maximize,
        },
        threshold: ev.condition.threshold,
    })
}
