//! Risk models: actors, goals, situations, events with quantitative
//! conditions, indicators and the domain features that span the test space.
//!
//! Models are written in a small line-oriented DSL (`.riskml`):
//!
//! ```text
//! actor operator
//! goal safe_collaboration owner operator "no hazardous robot motion near the operator"
//! feature illuminance continuous [10, 1000] lux binds environment.illuminance
//! feature shift categorical {day, night} binds environment.shift
//! event insufficient_distance negative when min_margin < 0 impacts -safe_collaboration
//! situation close_collaboration "hands over the belt" scenario "default_cell.scenario"
//!     exposes insufficient_distance features illuminance indicators sep:min_distance
//! ```
//!
//! `#` starts a comment. Declarations may appear in any order.

mod cases;
mod lexer;
mod parser;
mod serialize;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Real;

pub use cases::{derive_assurance_cases, AssuranceCase, Claim, EvidenceSlot, EvidenceStatus};
pub use parser::{parse_risk_model, ParseDiagnostic, ParseError};
pub use serialize::serialize_model;
pub use validate::{validate, Diagnostic, ElementKind, Violation};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskModel {
    pub actors: Vec<Actor>,
    pub goals: Vec<Goal>,
    pub situations: Vec<Situation>,
    pub events: Vec<Event>,
    pub indicators: Vec<Indicator>,
    pub features: Vec<DomainFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub name: String,
    pub owner: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Situation {
    pub name: String,
    pub description: String,
    pub scenario_ref: String,
    pub exposes: Vec<String>,
    pub features: Vec<String>,
    pub indicators: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        }
    }
}

/// `metric op threshold`, evaluated on a trace summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub metric: String,
    pub op: CompareOp,
    pub threshold: Real,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.metric, self.op.symbol(), self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    pub goal: String,
    pub sign: Sign,
}

/// Estimated occurrence frequency together with the number of samples behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Likelihood {
    pub fraction: Real,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub polarity: Polarity,
    pub condition: Condition,
    pub impacts: Vec<Impact>,
    pub likelihood: Option<Likelihood>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub situation: String,
    pub metric: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Integer,
    Categorical,
}

impl FeatureKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FeatureKind::Continuous => "continuous",
            FeatureKind::Integer => "integer",
            FeatureKind::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval { lo: Real, hi: Real },
    Set(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFeature {
    pub name: String,
    pub kind: FeatureKind,
    pub domain: Domain,
    /// Empty for categorical features.
    pub units: String,
    /// Dotted path of the scenario field the feature drives.
    pub binding: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotateError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("likelihood {fraction} for `{event}` is outside [0, 1]")]
    OutOfRange { event: String, fraction: Real },
}

impl RiskModel {
    /// The shipped default model.
    pub fn default_model() -> Self {
        parse_risk_model(crate::DEFAULT_MODEL).expect("shipped model parses")
    }

    pub fn goal(&self, name: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn situation(&self, name: &str) -> Option<&Situation> {
        self.situations.iter().find(|s| s.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&DomainFeature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn indicator(&self, name: &str) -> Option<&Indicator> {
        self.indicators.iter().find(|i| i.name == name)
    }

    /// Digest of the canonical serialization; stable under formatting and
    /// comment changes of the source file.
    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(serialize_model(self))
    }

    /// Copy of the model with event likelihoods set from `estimates`.
    pub fn annotate_likelihoods(
        &self,
        estimates: &BTreeMap<String, Likelihood>,
    ) -> Result<RiskModel, AnnotateError> {
        let mut out = self.clone();
        for (name, l) in estimates {
            let ev = out
                .events
                .iter_mut()
                .find(|e| &e.name == name)
                .ok_or_else(|| AnnotateError::UnknownEvent(name.clone()))?;
            if !(0.0..=1.0).contains(&l.fraction) {
                return Err(AnnotateError::OutOfRange {
                    event: name.clone(),
                    fraction: l.fraction,
                });
            }
            ev.likelihood = Some(*l);
        }
        Ok(out)
    }
}

/// Free-function form of [`RiskModel::annotate_likelihoods`].
pub fn annotate_likelihoods(
    model: &RiskModel,
    estimates: &BTreeMap<String, Likelihood>,
) -> Result<RiskModel, AnnotateError> {
    model.annotate_likelihoods(estimates)
}
