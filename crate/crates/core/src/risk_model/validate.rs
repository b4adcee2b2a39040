use std::collections::HashSet;
use std::fmt;

use super::parser::is_ident;
use super::*;
use crate::sim::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Actor,
    Goal,
    Feature,
    Event,
    Situation,
    Indicator,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Actor => "actor",
            ElementKind::Goal => "goal",
            ElementKind::Feature => "feature",
            ElementKind::Event => "event",
            ElementKind::Situation => "situation",
            ElementKind::Indicator => "indicator",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    InvalidName,
    Duplicate,
    Unresolved { kind: ElementKind, name: String },
    EmptyDomain,
    EmptyBinding,
    MissingUnits,
    NoImpacts,
    PolarityMismatch { goal: String },
    LikelihoodRange,
    UnknownMetric { metric: String },
    NonFiniteThreshold,
    NoExposedEvents,
    NoFeatures,
    IndicatorMismatch { indicator: String },
}

impl Violation {
    /// Duplicate names and dangling references, which the parser rejects.
    pub fn is_resolution(&self) -> bool {
        matches!(self, Violation::Duplicate | Violation::Unresolved { .. })
    }
}

/// One broken rule, attached to exactly one declared element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: ElementKind,
    pub name: String,
    /// Position of the element within its kind's list.
    pub index: usize,
    pub violation: Violation,
}

impl Diagnostic {
    pub fn message(&self) -> String {
        match &self.violation {
            Violation::InvalidName => format!("invalid name `{}`", self.name),
            Violation::Duplicate => format!("duplicate {} {}", self.kind, self.name),
            Violation::Unresolved { kind, name } => format!("unresolved {kind} {name}"),
            Violation::EmptyDomain => "empty domain".into(),
            Violation::EmptyBinding => "empty binding".into(),
            Violation::MissingUnits => "missing units".into(),
            Violation::NoImpacts => "no impacts".into(),
            Violation::PolarityMismatch { goal } => {
                format!("negative event with positive impact on {goal}")
            }
            Violation::LikelihoodRange => "likelihood outside [0, 1]".into(),
            Violation::UnknownMetric { metric } => format!("unknown metric {metric}"),
            Violation::NonFiniteThreshold => "threshold not finite".into(),
            Violation::NoExposedEvents => "exposes no events".into(),
            Violation::NoFeatures => "references no domain features".into(),
            Violation::IndicatorMismatch { indicator } => {
                format!("indicator {indicator} belongs to another situation")
            }
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.kind, self.name, self.message())
    }
}

struct Checker<'m> {
    model: &'m RiskModel,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, kind: ElementKind, index: usize, name: &str, violation: Violation) {
        self.out.push(Diagnostic {
            kind,
            name: name.to_string(),
            index,
            violation,
        });
    }

    fn names<'a>(&mut self, kind: ElementKind, names: impl Iterator<Item = &'a String>) {
        let mut seen = HashSet::new();
        for (i, n) in names.enumerate() {
            if !is_ident(n) {
                self.push(kind, i, n, Violation::InvalidName);
            }
            if !seen.insert(n.as_str()) {
                self.push(kind, i, n, Violation::Duplicate);
            }
        }
    }

    fn resolve(&mut self, kind: ElementKind, index: usize, name: &str, target: ElementKind, r: &str) {
        let m = self.model;
        let found = match target {
            ElementKind::Actor => m.actors.iter().any(|a| a.name == r),
            ElementKind::Goal => m.goal(r).is_some(),
            ElementKind::Feature => m.feature(r).is_some(),
            ElementKind::Event => m.event(r).is_some(),
            ElementKind::Situation => m.situation(r).is_some(),
            ElementKind::Indicator => m.indicator(r).is_some(),
        };
        if !found {
            self.push(
                kind,
                index,
                name,
                Violation::Unresolved {
                    kind: target,
                    name: r.to_string(),
                },
            );
        }
    }

    fn metric(&mut self, kind: ElementKind, index: usize, name: &str, metric: &str) {
        if metric.parse::<Metric>().is_err() {
            self.push(
                kind,
                index,
                name,
                Violation::UnknownMetric {
                    metric: metric.to_string(),
                },
            );
        }
    }
}

/// Check every structural rule of a risk model; an empty result means the
/// model is well formed.
pub fn validate(model: &RiskModel) -> Vec<Diagnostic> {
    use ElementKind as K;
    let mut c = Checker {
        model,
        out: Vec::new(),
    };
    c.names(K::Actor, model.actors.iter().map(|a| &a.name));
    c.names(K::Goal, model.goals.iter().map(|g| &g.name));
    c.names(K::Feature, model.features.iter().map(|f| &f.name));
    c.names(K::Event, model.events.iter().map(|e| &e.name));
    c.names(K::Situation, model.situations.iter().map(|s| &s.name));
    c.names(K::Indicator, model.indicators.iter().map(|i| &i.name));

    for (i, g) in model.goals.iter().enumerate() {
        c.resolve(K::Goal, i, &g.name, K::Actor, &g.owner);
    }

    for (i, f) in model.features.iter().enumerate() {
        let empty = match (&f.kind, &f.domain) {
            (FeatureKind::Categorical, Domain::Set(v)) => v.is_empty(),
            (FeatureKind::Categorical, Domain::Interval { .. }) => true,
            (_, Domain::Interval { lo, hi }) => !(lo.is_finite() && hi.is_finite() && lo < hi),
            (_, Domain::Set(_)) => true,
        };
        if empty {
            c.push(K::Feature, i, &f.name, Violation::EmptyDomain);
        }
        if f.kind != FeatureKind::Categorical && f.units.trim().is_empty() {
            c.push(K::Feature, i, &f.name, Violation::MissingUnits);
        }
        if f.binding.trim().is_empty() {
            c.push(K::Feature, i, &f.name, Violation::EmptyBinding);
        }
    }

    for (i, e) in model.events.iter().enumerate() {
        if e.impacts.is_empty() {
            c.push(K::Event, i, &e.name, Violation::NoImpacts);
        }
        for imp in &e.impacts {
            c.resolve(K::Event, i, &e.name, K::Goal, &imp.goal);
            if e.polarity == Polarity::Negative && imp.sign == Sign::Plus {
                c.push(
                    K::Event,
                    i,
                    &e.name,
                    Violation::PolarityMismatch {
                        goal: imp.goal.clone(),
                    },
                );
            }
        }
        c.metric(K::Event, i, &e.name, &e.condition.metric);
        if !e.condition.threshold.is_finite() {
            c.push(K::Event, i, &e.name, Violation::NonFiniteThreshold);
        }
        if let Some(l) = e.likelihood {
            if !(0.0..=1.0).contains(&l.fraction) {
                c.push(K::Event, i, &e.name, Violation::LikelihoodRange);
            }
        }
    }

    for (i, s) in model.situations.iter().enumerate() {
        if s.exposes.is_empty() {
            c.push(K::Situation, i, &s.name, Violation::NoExposedEvents);
        }
        if s.features.is_empty() {
            c.push(K::Situation, i, &s.name, Violation::NoFeatures);
        }
        for e in &s.exposes {
            c.resolve(K::Situation, i, &s.name, K::Event, e);
        }
        for f in &s.features {
            c.resolve(K::Situation, i, &s.name, K::Feature, f);
        }
        for ind in &s.indicators {
            c.resolve(K::Situation, i, &s.name, K::Indicator, ind);
            if let Some(x) = model.indicator(ind) {
                if x.situation != s.name {
                    c.push(
                        K::Situation,
                        i,
                        &s.name,
                        Violation::IndicatorMismatch {
                            indicator: ind.clone(),
                        },
                    );
                }
            }
        }
    }

    for (i, ind) in model.indicators.iter().enumerate() {
        c.resolve(K::Indicator, i, &ind.name, K::Situation, &ind.situation);
        c.metric(K::Indicator, i, &ind.name, &ind.metric);
    }

    c.out
}
