use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use riskloop::risk_model::{
    derive_assurance_cases, parse_risk_model, serialize_model, validate, Domain, ElementKind,
    Likelihood, RiskModel,
};

const METRICS: [&str; 5] = [
    "min_margin",
    "min_distance",
    "objects_fallen",
    "detection_miss_ratio",
    "collision",
];

#[derive(Debug, Clone)]
struct EventShape {
    negative: bool,
    metric: usize,
    less: bool,
    threshold: f64,
    goals: BTreeSet<usize>,
    likelihood: Option<(f64, u64)>,
}

#[derive(Debug, Clone)]
struct ModelShape {
    goals: usize,
    features: Vec<(u8, f64, f64)>,
    events: Vec<EventShape>,
    situations: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
}

fn event(goals: usize) -> impl Strategy<Value = EventShape> {
    (
        any::<bool>(),
        0..METRICS.len(),
        any::<bool>(),
        -10.0..10.0f64,
        proptest::collection::btree_set(0..goals, 1..=goals),
        proptest::option::of((0.0..=1.0f64, 1u64..500)),
    )
        .prop_map(|(negative, metric, less, threshold, goals, likelihood)| EventShape {
            negative,
            metric,
            less,
            threshold,
            goals,
            likelihood,
        })
}

fn model_shape() -> impl Strategy<Value = ModelShape> {
    (1usize..4, 1usize..4, 1usize..5).prop_flat_map(|(goals, n_features, n_events)| {
        (
            Just(goals),
            proptest::collection::vec((0u8..3, -100.0..100.0f64, 0.5..100.0f64), n_features),
            proptest::collection::vec(event(goals), n_events),
            proptest::collection::vec(
                (
                    proptest::collection::btree_set(0..n_events, 1..=n_events),
                    proptest::collection::btree_set(0..n_features, 1..=n_features),
                ),
                1..4,
            ),
        )
            .prop_map(|(goals, features, events, situations)| ModelShape {
                goals,
                features,
                events,
                situations,
            })
    })
}

fn join(ids: &BTreeSet<usize>, prefix: &str) -> String {
    ids.iter().map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(", ")
}

fn source(shape: &ModelShape) -> String {
    let mut s = String::from("actor op\n");
    for g in 0..shape.goals {
        s += &format!("goal g{g} owner op \"goal number {g}\"\n");
    }
    for (i, &(kind, lo, width)) in shape.features.iter().enumerate() {
        s += &match kind {
            0 => format!("feature f{i} continuous [{lo}, {}] m binds belt.speed\n", lo + width),
            1 => format!(
                "feature f{i} integer [{}, {}] n binds belt.object_count\n",
                lo.floor(),
                (lo + width).ceil()
            ),
            _ => format!("feature f{i} categorical {{a, b, c}} binds controller.mode\n"),
        };
    }
    for (i, e) in shape.events.iter().enumerate() {
        let sign = if e.negative { "-" } else { "+" };
        let impacts: Vec<String> = e.goals.iter().map(|g| format!("{sign}g{g}")).collect();
        s += &format!(
            "event e{i} {} when {} {} {} impacts {}",
            if e.negative { "negative" } else { "positive" },
            METRICS[e.metric],
            if e.less { "<" } else { ">" },
            e.threshold,
            impacts.join(", ")
        );
        if let Some((f, n)) = e.likelihood {
            s += &format!(" likelihood {f} of {n}");
        }
        s.push('\n');
    }
    for (i, (exposes, features)) in shape.situations.iter().enumerate() {
        s += &format!(
            "situation s{i} \"situation {i}\" scenario \"cell.scenario\" exposes {} features {}\n",
            join(exposes, "e"),
            join(features, "f")
        );
    }
    s
}

/// |{(s, g) : some negative event exposed by s impacts g}|, counted from the
/// generator's own description of the model.
fn expected_cases(shape: &ModelShape) -> usize {
    shape.situations
        .iter()
        .map(|(exposes, _)| {
            (0..shape.goals)
                .filter(|g| {
                    exposes
                        .iter()
                        .any(|&e| shape.events[e].negative && shape.events[e].goals.contains(g))
                })
                .count()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_then_parse_is_identity(shape in model_shape()) {
        let m = parse_risk_model(&source(&shape)).unwrap();
        let text = serialize_model(&m);
        let back = parse_risk_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn case_count_law(shape in model_shape()) {
        let m = parse_risk_model(&source(&shape)).unwrap();
        let cases = derive_assurance_cases(&m);
        prop_assert_eq!(cases.len(), expected_cases(&shape));
        prop_assert_eq!(&cases, &derive_assurance_cases(&m));
        for c in &cases {
            prop_assert_eq!(c.sub_claims().len(), c.evidence.len());
            prop_assert!(!c.sub_claims().is_empty());
        }
    }

    #[test]
    fn annotations_survive_serialisation(fraction in 0.0..=1.0f64, samples in 1u64..10_000) {
        let m = RiskModel::default_model();
        let l = Likelihood { fraction, samples };
        let a = m
            .annotate_likelihoods(&BTreeMap::from([("dropped_object".to_string(), l)]))
            .unwrap();
        let back = parse_risk_model(&serialize_model(&a)).unwrap();
        prop_assert_eq!(back.event("dropped_object").unwrap().likelihood, Some(l));
        prop_assert_eq!(back.event("insufficient_distance").unwrap().likelihood, None);
    }
}

#[test]
fn shipped_model_round_trips() {
    let m = RiskModel::default_model();
    assert_eq!(parse_risk_model(&serialize_model(&m)).unwrap(), m);
    assert_eq!(m.digest(), parse_risk_model(&serialize_model(&m)).unwrap().digest());
}

#[test]
fn every_diagnostic_names_one_element() {
    let mut m = RiskModel::default_model();
    m.goals[0].owner = "nobody".into();
    m.features[1].domain = Domain::Interval { lo: 1.0, hi: 0.0 };
    m.events[0].impacts[0].goal = "missing".into();
    m.situations[0].exposes.push("ghost".into());
    let diags = validate(&m);
    assert_eq!(diags.len(), 4, "{diags:?}");
    for d in &diags {
        let declared = match d.kind {
            ElementKind::Actor => m.actors[d.index].name.as_str(),
            ElementKind::Goal => &m.goals[d.index].name,
            ElementKind::Feature => &m.features[d.index].name,
            ElementKind::Event => &m.events[d.index].name,
            ElementKind::Situation => &m.situations[d.index].name,
            ElementKind::Indicator => &m.indicators[d.index].name,
        };
        assert_eq!(declared, d.name);
    }
    let named: BTreeSet<&str> = diags.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(
        named,
        BTreeSet::from(["safe_collaboration", "belt_speed", "insufficient_distance", "close_collaboration"])
    );
}
