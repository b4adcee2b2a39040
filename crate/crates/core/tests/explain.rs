use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskloop::explain::{
    extract_rules, generate_counterexamples, induce_tree, predict, Column, Constraint,
    LabeledDataset, Node, Row, Test, Tree, TreeParams,
};
use riskloop::falsify::{make_feature_space, FeatureSpace};
use riskloop::risk_model::{parse_risk_model, Domain};
use riskloop::sim::{FeatureAssignment, FeatureValue, Label};
use riskloop::Real;

fn space() -> FeatureSpace {
    let model = parse_risk_model(
        "actor a\ngoal g owner a \"t\"\n\
         event e negative when min_margin < 0 impacts -g\n\
         feature lux continuous [10, 1000] lux binds environment.illuminance\n\
         feature count integer [2, 9] objects binds belt.object_count\n\
         feature mode categorical {ssm, monitored_stop, off} binds controller.mode\n\
         situation s \"t\" scenario \"x\" exposes e features lux, count, mode\n",
    )
    .unwrap();
    make_feature_space(&model, "s").unwrap()
}

fn sample(space: &FeatureSpace, rng: &mut ChaCha8Rng) -> FeatureAssignment {
    let u: Vec<Real> = (0..space.len()).map(|_| rng.gen()).collect();
    space.decode(&u).unwrap()
}

fn num(a: &FeatureAssignment, k: &str) -> Real {
    match a[k] {
        FeatureValue::Number(v) => v,
        _ => unreachable!(),
    }
}

/// Noisy labels: dark or crowded cells fail more often, `off` always fails.
fn dataset(seed: u64, n: usize, noise: Real) -> (FeatureSpace, LabeledDataset) {
    let space = space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Column> = space
        .dims
        .iter()
        .map(|d| Column {
            name: d.name.clone(),
            kind: d.kind,
            domain: d.domain.clone(),
        })
        .collect();
    let rows = (0..n)
        .map(|_| {
            let a = sample(&space, &mut rng);
            let bad = num(&a, "lux") < 150.0
                || (num(&a, "count") >= 7.0 && num(&a, "lux") < 400.0)
                || a["mode"] == FeatureValue::Category("off".into());
            let flip = rng.gen_bool(noise);
            Row {
                values: space.dims.iter().map(|d| a[&d.name].clone()).collect(),
                label: if bad != flip { Label::NonCompliance } else { Label::Compliance },
                triggered: Vec::new(),
            }
        })
        .collect();
    (space, LabeledDataset { columns, rows })
}

fn leaves(n: &Node) -> Vec<&Node> {
    match &n.split {
        None => vec![n],
        Some(s) => {
            let mut v = leaves(&s.left);
            v.extend(leaves(&s.right));
            v
        }
    }
}

fn to_assignment(data: &LabeledDataset, row: &Row) -> FeatureAssignment {
    data.columns
        .iter()
        .zip(&row.values)
        .map(|(c, v)| (c.name.clone(), v.clone()))
        .collect()
}

/// Leaf reached by `row`, following the tests by hand.
fn leaf_of<'t>(tree: &'t Tree, row: &Row) -> &'t Node {
    let mut node = &tree.root;
    while let Some(s) = &node.split {
        let left = match (&s.test, &row.values[s.test.column()]) {
            (Test::Le { threshold, .. }, FeatureValue::Number(v)) => v <= threshold,
            (Test::Eq { category, .. }, FeatureValue::Category(c)) => c == category,
            _ => unreachable!(),
        };
        node = if left { &s.left } else { &s.right };
    }
    node
}

fn params(max_depth: usize, min_leaf: usize) -> TreeParams {
    TreeParams {
        max_depth,
        min_leaf,
        ..Default::default()
    }
}

#[test]
fn dark_cells_are_split_near_one_hundred_lux() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let columns = vec![Column {
        name: "illuminance".into(),
        kind: riskloop::risk_model::FeatureKind::Continuous,
        domain: Domain::Interval { lo: 50.0, hi: 10_000.0 },
    }];
    let xs: Vec<Real> = (0..500).map(|_| rng.gen_range(50.0..=10_000.0)).collect();
    let rows = xs
        .iter()
        .map(|&x| Row {
            values: vec![FeatureValue::Number(x)],
            label: if x < 100.0 { Label::NonCompliance } else { Label::Compliance },
            triggered: Vec::new(),
        })
        .collect();
    let data = LabeledDataset { columns, rows };
    // only a handful of the 500 draws fall below 100 lux, fewer than the
    // default minimum leaf size
    let dark = xs.iter().filter(|&&x| x < 100.0).count();
    assert!((1..5).contains(&dark));
    let tree = induce_tree(&data, params(6, 1)).unwrap();
    assert_eq!(tree.root.depth(), 1);
    let below = xs.iter().copied().filter(|&x| x < 100.0).fold(Real::MIN, Real::max);
    let above = xs.iter().copied().filter(|&x| x >= 100.0).fold(Real::MAX, Real::min);
    match &tree.root.split.as_ref().unwrap().test {
        Test::Le { threshold, .. } => assert!(below <= *threshold && *threshold < above),
        t => panic!("unexpected test {t:?}"),
    }
    let rules = extract_rules(&tree, 0.5).unwrap();
    assert_eq!(rules.len(), 1);
    assert_eq!(rules[0].likelihood, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leaves_partition_the_rows(seed in any::<u64>(), n in 1usize..300, depth in 0usize..7, min_leaf in 1usize..10) {
        let (_, data) = dataset(seed, n, 0.1);
        let tree = induce_tree(&data, params(depth, min_leaf)).unwrap();
        let ls = leaves(&tree.root);
        prop_assert_eq!(ls.iter().map(|l| l.support()).sum::<usize>(), n);
        for l in &ls {
            prop_assert!(l.support() >= min_leaf.min(n));
        }
        // recount each leaf from the rows that reach it
        for l in ls {
            let mine: Vec<&Row> = data.rows.iter().filter(|r| std::ptr::eq(leaf_of(&tree, r), l)).collect();
            let nc = mine.iter().filter(|r| r.label == Label::NonCompliance).count();
            prop_assert_eq!((mine.len() - nc, nc), (l.compliant, l.non_compliant));
        }
        for r in &data.rows {
            prop_assert_eq!(predict(&tree, &to_assignment(&data, r)).unwrap(), leaf_of(&tree, r).likelihood);
        }
    }

    #[test]
    fn rules_cover_exactly_the_likely_leaves(seed in any::<u64>(), theta in 0.05..=1.0f64) {
        let (space, data) = dataset(seed, 250, 0.1);
        let tree = induce_tree(&data, params(5, 3)).unwrap();
        let rules = extract_rules(&tree, theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..1000 {
            let a = sample(&space, &mut rng);
            let p = predict(&tree, &a).unwrap();
            let covered = rules.iter().filter(|r| r.matches(&a)).count();
            prop_assert!(covered <= 1);
            prop_assert_eq!(covered == 1, p >= theta && p > 0.0, "p = {}", p);
        }
        for w in rules.windows(2) {
            prop_assert!(
                w[0].likelihood > w[1].likelihood
                    || (w[0].likelihood == w[1].likelihood && w[0].support >= w[1].support)
            );
        }
        for (i, r) in rules.iter().enumerate() {
            prop_assert_eq!(r.id, i + 1);
        }
    }

    #[test]
    fn counterexamples_stay_inside_their_rule(seed in any::<u64>(), n in 1usize..40) {
        let (space, data) = dataset(seed, 200, 0.05);
        let tree = induce_tree(&data, params(4, 2)).unwrap();
        for rule in extract_rules(&tree, 0.2).unwrap() {
            let set = generate_counterexamples(&rule, &space, n, seed).unwrap();
            prop_assert_eq!(set.assignments.len(), n);
            for a in &set.assignments {
                prop_assert!(rule.matches(a));
                space.check(a).unwrap();
                prop_assert!(predict(&tree, a).unwrap() >= rule.likelihood - 1e-12);
            }
            let again = generate_counterexamples(&rule, &space, n, seed).unwrap();
            prop_assert_eq!(&again.assignments, &set.assignments);
        }
    }

    #[test]
    fn raising_theta_never_adds_rules(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (_, data) = dataset(seed, 200, 0.2);
        let tree = induce_tree(&data, params(6, 2)).unwrap();
        prop_assert!(extract_rules(&tree, hi).unwrap().len() <= extract_rules(&tree, lo).unwrap().len());
        let again = induce_tree(&data, params(6, 2)).unwrap();
        prop_assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&tree).unwrap());
    }
}

#[test]
fn rule_constraints_are_consistent() {
    let (_, data) = dataset(7, 400, 0.1);
    let tree = induce_tree(&data, params(6, 2)).unwrap();
    for r in extract_rules(&tree, 0.0).unwrap() {
        let mut seen = std::collections::BTreeSet::new();
        for c in &r.constraints {
            assert!(seen.insert(c.feature().to_string()), "{r}");
            match c {
                Constraint::Range { lo, hi, .. } => assert!(lo <= hi, "{r}"),
                Constraint::OneOf { values, .. } => assert!(!values.is_empty(), "{r}"),
            }
        }
    }
}
