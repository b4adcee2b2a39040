use std::fmt::Write;

use super::parser::is_ident;
use super::*;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn category(v: &str) -> String {
    if is_ident(v) {
        v.to_string()
    } else {
        quote(v)
    }
}

fn sign(s: Sign) -> char {
    match s {
        Sign::Plus => '+',
        Sign::Minus => '-',
    }
}

/// Canonical `.riskml` text for a model; parsing it yields the same model.
pub fn serialize_model(model: &RiskModel) -> String {
    let mut out = String::new();
    for a in &model.actors {
        writeln!(out, "actor {}", a.name).unwrap();
    }
    if !model.goals.is_empty() {
        out.push('\n');
    }
    for g in &model.goals {
        writeln!(out, "goal {} owner {} {}", g.name, g.owner, quote(&g.description)).unwrap();
    }
    if !model.features.is_empty() {
        out.push('\n');
    }
    for f in &model.features {
        match &f.domain {
            Domain::Interval { lo, hi } => writeln!(
                out,
                "feature {} {} [{}, {}] {} binds {}",
                f.name,
                f.kind.keyword(),
                lo,
                hi,
                f.units,
                f.binding
            ),
            Domain::Set(values) => {
                let vs: Vec<String> = values.iter().map(|v| category(v)).collect();
                writeln!(
                    out,
                    "feature {} {} {{{}}} binds {}",
                    f.name,
                    f.kind.keyword(),
                    vs.join(", "),
                    f.binding
                )
            }
        }
        .unwrap();
    }
    if !model.events.is_empty() {
        out.push('\n');
    }
    for e in &model.events {
        let polarity = match e.polarity {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        };
        let impacts: Vec<String> = e
            .impacts
            .iter()
            .map(|i| format!("{}{}", sign(i.sign), i.goal))
            .collect();
        write!(
            out,
            "event {} {} when {} impacts {}",
            e.name,
            polarity,
            e.condition,
            impacts.join(", ")
        )
        .unwrap();
        if let Some(l) = e.likelihood {
            write!(out, " likelihood {} of {}", l.fraction, l.samples).unwrap();
        }
        out.push('\n');
    }
    if !model.situations.is_empty() {
        out.push('\n');
    }
    for s in &model.situations {
        write!(
            out,
            "situation {} {} scenario {}\n    exposes {}\n    features {}",
            s.name,
            quote(&s.description),
            quote(&s.scenario_ref),
            s.exposes.join(", "),
            s.features.join(", ")
        )
        .unwrap();
        if !s.indicators.is_empty() {
            let inds: Vec<String> = s
                .indicators
                .iter()
                .map(|name| {
                    let metric = model
                        .indicator(name)
                        .map(|i| i.metric.as_str())
                        .unwrap_or_default();
                    format!("{name}:{metric}")
                })
                .collect();
            write!(out, "\n    indicators {}", inds.join(", ")).unwrap();
        }
        out.push('\n');
    }
    out
}
