use std::fmt::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Test, Tree};
use super::{Column, ExplainError};
use crate::falsify::FeatureSpace;
use crate::risk_model::{Domain, FeatureKind};
use crate::sim::{FeatureAssignment, FeatureValue};
use crate::Real;

/// Restriction of one feature along a tree path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `lo <= x <= hi`, or `lo < x <= hi` when `lo_open`.
    Range {
        feature: String,
        lo: Real,
        hi: Real,
        lo_open: bool,
    },
    OneOf { feature: String, values: Vec<String> },
}

impl Constraint {
    pub fn feature(&self) -> &str {
        match self {
            Constraint::Range { feature, .. } | Constraint::OneOf { feature, .. } => feature,
        }
    }

    pub fn admits(&self, v: &FeatureValue) -> bool {
        match (self, v) {
            (Constraint::Range { lo, hi, lo_open, .. }, FeatureValue::Number(x)) => {
                (if *lo_open { x > lo } else { x >= lo }) && x <= hi
            }
            (Constraint::OneOf { values, .. }, FeatureValue::Category(c)) => values.contains(c),
            _ => false,
        }
    }
}

fn num(x: Real) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Range {
                feature,
                lo,
                hi,
                lo_open,
            } => write!(
                f,
                "{feature} in {}{}, {}]",
                if *lo_open { '(' } else { '[' },
                num(*lo),
                num(*hi)
            ),
            Constraint::OneOf { feature, values } => {
                write!(f, "{feature} in {{{}}}", values.join(", "))
            }
        }
    }
}

/// A root-to-leaf path whose leaf predicts non-compliance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// 1-based rank after sorting.
    pub id: usize,
    /// One entry per feature tested on the path, in column order.
    pub constraints: Vec<Constraint>,
    pub likelihood: Real,
    pub support: usize,
}

impl Rule {
    /// True if every constrained feature of `a` lies inside the rule.
    pub fn matches(&self, a: &FeatureAssignment) -> bool {
        self.constraints
            .iter()
            .all(|c| a.get(c.feature()).is_some_and(|v| c.admits(v)))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.constraints.iter().map(|c| c.to_string()).collect();
        let body = if body.is_empty() {
            "always".to_string()
        } else {
            body.join(" and ")
        };
        write!(
            f,
            "rule #{}: {body} → non-compliance, likelihood {}, support {}",
            self.id,
            num(self.likelihood),
            self.support
        )
    }
}

#[derive(Clone)]
enum State {
    Range { lo: Real, hi: Real, lo_open: bool, touched: bool },
    Set { values: Vec<String>, touched: bool },
}

fn initial(columns: &[Column]) -> Vec<State> {
    columns
        .iter()
        .map(|c| match &c.domain {
            Domain::Interval { lo, hi } => State::Range {
                lo: *lo,
                hi: *hi,
                lo_open: false,
                touched: false,
            },
            Domain::Set(v) => State::Set {
                values: v.clone(),
                touched: false,
            },
        })
        .collect()
}

fn narrow(state: &mut [State], test: &Test, left: bool) {
    match (test, &mut state[test.column()]) {
        (Test::Le { threshold, .. }, State::Range { lo, hi, lo_open, touched }) => {
            *touched = true;
            if left {
                *hi = hi.min(*threshold);
            } else if *threshold >= *lo {
                *lo = *threshold;
                *lo_open = true;
            }
        }
        (Test::Eq { category, .. }, State::Set { values, touched }) => {
            *touched = true;
            values.retain(|v| (v == category) == left);
        }
        _ => {}
    }
}

fn collect(node: &Node, columns: &[Column], state: Vec<State>, theta: Real, out: &mut Vec<Rule>) {
    match &node.split {
        Some(s) => {
            for left in [true, false] {
                let mut st = state.clone();
                narrow(&mut st, &s.test, left);
                let child = if left { &s.left } else { &s.right };
                collect(child, columns, st, theta, out);
            }
        }
        None if node.likelihood >= theta && node.non_compliant > 0 => {
            let constraints = columns
                .iter()
                .zip(state)
                .filter_map(|(c, s)| match s {
                    State::Range { lo, hi, lo_open, touched: true } => Some(Constraint::Range {
                        feature: c.name.clone(),
                        lo,
                        hi,
                        lo_open,
                    }),
                    State::Set { values, touched: true } => Some(Constraint::OneOf {
                        feature: c.name.clone(),
                        values,
                    }),
                    _ => None,
                })
                .collect();
            out.push(Rule {
                id: 0,
                constraints,
                likelihood: node.likelihood,
                support: node.support(),
            });
        }
        None => {}
    }
}

/// Rules for every leaf whose non-compliance likelihood is at least `theta`,
/// ranked by likelihood and then support, both descending.
pub fn extract_rules(tree: &Tree, theta: Real) -> Result<Vec<Rule>, ExplainError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(ExplainError::Threshold(theta));
    }
    let mut rules = Vec::new();
    collect(&tree.root, &tree.columns, initial(&tree.columns), theta, &mut rules);
    // stable sort keeps tree order among equal rules
    rules.sort_by(|a, b| {
        b.likelihood
            .total_cmp(&a.likelihood)
            .then(b.support.cmp(&a.support))
    });
    for (i, r) in rules.iter_mut().enumerate() {
        r.id = i + 1;
    }
    Ok(rules)
}

/// Fresh assignments sampled inside a rule's region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSet {
    pub rule: usize,
    pub seed: u64,
    pub assignments: Vec<FeatureAssignment>,
}

enum Region {
    Real { lo: Real, hi: Real, lo_open: bool },
    Int { lo: i64, hi: i64 },
    Pick(Vec<String>),
}

fn region(rule: &Rule, kind: FeatureKind, name: &str, domain: &Domain) -> Option<Region> {
    let c = rule.constraints.iter().find(|c| c.feature() == name);
    match domain {
        Domain::Interval { lo: dlo, hi: dhi } => {
            let (lo, hi, lo_open) = match c {
                Some(Constraint::Range { lo, hi, lo_open, .. }) => {
                    if lo >= dlo {
                        (*lo, hi.min(*dhi), *lo_open)
                    } else {
                        (*dlo, hi.min(*dhi), false)
                    }
                }
                _ => (*dlo, *dhi, false),
            };
            if kind == FeatureKind::Integer {
                let a = if lo_open { lo.floor() + 1.0 } else { lo.ceil() };
                let b = hi.floor();
                (a <= b).then_some(Region::Int {
                    lo: a as i64,
                    hi: b as i64,
                })
            } else {
                (lo < hi).then_some(Region::Real { lo, hi, lo_open })
            }
        }
        Domain::Set(values) => {
            let pick: Vec<String> = match c {
                Some(Constraint::OneOf { values: allowed, .. }) => values
                    .iter()
                    .filter(|v| allowed.contains(v))
                    .cloned()
                    .collect(),
                _ => values.clone(),
            };
            (!pick.is_empty()).then_some(Region::Pick(pick))
        }
    }
}

/// Sample `n` assignments uniformly inside `rule`, with unconstrained
/// features drawn uniformly from their domains.
pub fn generate_counterexamples(
    rule: &Rule,
    space: &FeatureSpace,
    n: usize,
    seed: u64,
) -> Result<AugmentationSet, ExplainError> {
    let regions = space
        .dims
        .iter()
        .map(|d| region(rule, d.kind, &d.name, &d.domain).ok_or(ExplainError::EmptyRegion(rule.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignments = (0..n)
        .map(|_| {
            space
                .dims
                .iter()
                .zip(&regions)
                .map(|(d, r)| {
                    let v = match r {
                        Region::Real { lo, hi, lo_open } => loop {
                            let x = rng.gen_range(*lo..=*hi);
                            if !(*lo_open && x == *lo) {
                                break FeatureValue::Number(x);
                            }
                        },
                        Region::Int { lo, hi } => FeatureValue::Number(rng.gen_range(*lo..=*hi) as Real),
                        Region::Pick(v) => FeatureValue::Category(v[rng.gen_range(0..v.len())].clone()),
                    };
                    (d.name.clone(), v)
                })
                .collect()
        })
        .collect();
    Ok(AugmentationSet {
        rule: rule.id,
        seed,
        assignments,
    })
}

/// One line per rule, best first.
pub fn render_report(rules: &[Rule]) -> String {
    let mut out = String::new();
    for r in rules {
        writeln!(out, "{r}").unwrap();
    }
    if rules.is_empty() {
        out.push_str("no rule reaches the likelihood threshold\n");
    }
    out
}
