use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::trace::{Metric, TraceMetrics};
use crate::risk_model::{CompareOp, Polarity, RiskModel};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Compliance,
    NonCompliance,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Compliance => "compliance",
            Label::NonCompliance => "non_compliance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "compliance" => Some(Label::Compliance),
            "non_compliance" => Some(Label::NonCompliance),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOutcome {
    pub triggered: bool,
    /// Negative iff the event condition holds on the trace.
    pub robustness: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub per_event: BTreeMap<String, EventOutcome>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictError {
    #[error("unknown situation `{0}`")]
    UnknownSituation(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event `{event}` refers to unknown metric `{metric}`")]
    UnknownMetric { event: String, metric: String },
}

/// Sign-normalised distance of `value` from the threshold: negative exactly
/// when `value op threshold` holds.
pub fn robustness(op: CompareOp, value: Real, threshold: Real) -> Real {
    match op {
        CompareOp::Lt => value - threshold,
        CompareOp::Gt => threshold - value,
    }
}

impl Verdict {
    /// Build a verdict from per-event outcomes, labelling with the polarity of
    /// each event in `model`.
    pub fn from_outcomes(
        model: &RiskModel,
        per_event: BTreeMap<String, EventOutcome>,
    ) -> Result<Self, VerdictError> {
        let mut label = Label::Compliance;
        for (name, o) in &per_event {
            let ev = model
                .event(name)
                .ok_or_else(|| VerdictError::UnknownEvent(name.clone()))?;
            if ev.polarity == Polarity::Negative && o.triggered {
                label = Label::NonCompliance;
            }
        }
        Ok(Verdict { per_event, label })
    }
}

/// Check every event exposed by `situation` against the trace summary.
pub fn evaluate_events(
    metrics: &TraceMetrics,
    model: &RiskModel,
    situation: &str,
) -> Result<Verdict, VerdictError> {
    let sit = model
        .situation(situation)
        .ok_or_else(|| VerdictError::UnknownSituation(situation.to_string()))?;
    let mut per_event = BTreeMap::new();
    for name in &sit.exposes {
        let ev = model
            .event(name)
            .ok_or_else(|| VerdictError::UnknownEvent(name.clone()))?;
        let metric: Metric =
            ev.condition
                .metric
                .parse()
                .map_err(|_| VerdictError::UnknownMetric {
                    event: ev.name.clone(),
                    metric: ev.condition.metric.clone(),
                })?;
        let r = robustness(ev.condition.op, metrics.value(metric), ev.condition.threshold);
        per_event.insert(
            ev.name.clone(),
            EventOutcome {
                triggered: r < 0.0,
                robustness: r,
            },
        );
    }
    Verdict::from_outcomes(model, per_event)
}
