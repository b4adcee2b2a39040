use proptest::prelude::*;

use riskloop::falsify::{
    make_feature_space, run_search, Algorithm, Archive, FalsifyError, FeatureSpace, SearchConfig,
};
use riskloop::risk_model::parse_risk_model;
use riskloop::sim::{FeatureAssignment, FeatureValue};
use riskloop::Real;

const ALGORITHMS: [Algorithm; 4] = [
    Algorithm::Random,
    Algorithm::HillClimb,
    Algorithm::SimulatedAnnealing,
    Algorithm::Genetic,
];

/// Unit cube of `d` continuous features x0..x{d-1}.
fn cube(d: usize) -> FeatureSpace {
    let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let mut src = String::from("actor a\ngoal g owner a \"t\"\nevent e negative when min_margin < 0 impacts -g\n");
    for n in &names {
        src += &format!("feature {n} continuous [0, 1] m binds belt.speed\n");
    }
    src += &format!(
        "situation s \"t\" scenario \"x\" exposes e features {}\n",
        names.join(", ")
    );
    make_feature_space(&parse_risk_model(&src).unwrap(), "s").unwrap()
}

fn num(a: &FeatureAssignment, k: &str) -> Real {
    match a[k] {
        FeatureValue::Number(v) => v,
        _ => unreachable!(),
    }
}

fn sphere(a: &FeatureAssignment) -> Result<(Real, ()), FalsifyError> {
    Ok((a.keys().map(|k| (num(a, k) - 0.5).powi(2)).sum(), ()))
}

fn config(algorithm: Algorithm, budget: usize, seed: u64) -> SearchConfig {
    SearchConfig {
        algorithm,
        budget,
        seed,
        ..Default::default()
    }
}

fn trajectory<V>(a: &Archive<V>) -> Vec<(Vec<Real>, u64)> {
    a.points
        .iter()
        .map(|p| (p.unit.clone(), p.robustness.to_bits()))
        .collect()
}

#[test]
fn hill_climb_solves_the_sphere() {
    let space = cube(3);
    let mut best: Vec<Real> = (0..20)
        .map(|seed| {
            let a = run_search(&space, &config(Algorithm::HillClimb, 300, seed), sphere).unwrap();
            a.best_point().unwrap().robustness
        })
        .collect();
    best.sort_by(Real::total_cmp);
    let median = (best[9] + best[10]) / 2.0;
    assert!(median <= 1e-3, "median best {median}");
}

#[test]
fn constant_objective_has_no_violations_and_first_best() {
    let space = cube(2);
    for alg in ALGORITHMS {
        let a = run_search(&space, &config(alg, 50, 3), |_| Ok((1.0, ()))).unwrap();
        assert_eq!(a.len(), 50);
        assert!(a.violations.is_empty());
        assert_eq!(a.best, Some(0));
    }
}

#[test]
fn random_baseline_is_uniform() {
    let d = 4;
    let a = run_search(&cube(d), &config(Algorithm::Random, 10_000, 11), |_| Ok((1.0, ()))).unwrap();
    let sigma = (1.0 / 12.0 / 10_000.0 as Real).sqrt();
    for i in 0..d {
        let mean = a.points.iter().map(|p| p.unit[i]).sum::<Real>() / 10_000.0;
        assert!((mean - 0.5).abs() <= 3.0 * sigma, "dim {i}: mean {mean}");
    }
}

#[test]
fn archive_does_not_depend_on_thread_count() {
    let space = cube(3);
    for alg in [Algorithm::Random, Algorithm::Genetic] {
        let cfg = config(alg, 120, 9);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_search(&space, &cfg, sphere).unwrap())
        };
        let (one, many) = (run(1), run(4));
        assert_eq!(trajectory(&one), trajectory(&many));
        assert_eq!(one.best, many.best);
    }
}

#[test]
fn cold_annealing_is_hill_climbing() {
    let space = cube(3);
    for seed in 0..10 {
        let hc = run_search(&space, &config(Algorithm::HillClimb, 200, seed), sphere).unwrap();
        let sa = run_search(
            &space,
            &SearchConfig {
                initial_temperature: 1e-12,
                ..config(Algorithm::SimulatedAnnealing, 200, seed)
            },
            sphere,
        )
        .unwrap();
        assert_eq!(trajectory(&hc), trajectory(&sa), "seed {seed}");
    }
}

/// Replays the hill-climbing acceptance rule over an archive. Returns the
/// incumbent index after each evaluation, or `None` where a restart begins.
fn incumbents(robustness: &[Real]) -> Vec<Option<usize>> {
    let mut out = vec![None];
    let mut inc = 0;
    let mut rejected = 0;
    for (i, &r) in robustness.iter().enumerate().skip(1) {
        if rejected >= 20 {
            out.push(None);
            inc = i;
            rejected = 0;
        } else {
            out.push(Some(inc));
            if r < robustness[inc] {
                inc = i;
                rejected = 0;
            } else {
                rejected += 1;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluation_count_law(alg in 0usize..4, budget in 1usize..80, seed in any::<u64>(), stop in any::<bool>(), cut in 0.0..0.2f64) {
        let cfg = SearchConfig { stop_at_first_violation: stop, ..config(ALGORITHMS[alg], budget, seed) };
        let a = run_search(&cube(2), &cfg, |x| Ok((sphere(x)?.0 - cut, ()))).unwrap();
        if stop {
            prop_assert!(a.len() <= budget);
            if let Some(&v) = a.violations.first() {
                prop_assert_eq!(v, a.len() - 1);
            } else {
                prop_assert_eq!(a.len(), budget);
            }
        } else {
            prop_assert_eq!(a.len(), budget);
        }
        for (i, p) in a.points.iter().enumerate() {
            prop_assert_eq!(p.index, i);
        }
    }

    #[test]
    fn best_and_violations_match_the_points(alg in 0usize..4, seed in any::<u64>(), levels in 2u32..6) {
        // a coarse staircase objective produces many ties
        let a = run_search(&cube(2), &config(ALGORITHMS[alg], 60, seed), |x| {
            let r = sphere(x)?.0;
            Ok(((r * levels as Real).floor() / levels as Real - 0.1, ()))
        }).unwrap();
        let rs: Vec<Real> = a.points.iter().map(|p| p.robustness).collect();
        let min = rs.iter().copied().fold(Real::INFINITY, Real::min);
        prop_assert_eq!(a.best, rs.iter().position(|&r| r == min));
        let neg: Vec<usize> = (0..rs.len()).filter(|&i| rs[i] < 0.0).collect();
        prop_assert_eq!(&a.violations, &neg);
    }

    #[test]
    fn same_seed_same_archive(alg in 0usize..4, seed in any::<u64>()) {
        let cfg = config(ALGORITHMS[alg], 40, seed);
        let a = run_search(&cube(3), &cfg, sphere).unwrap();
        let b = run_search(&cube(3), &cfg, sphere).unwrap();
        prop_assert_eq!(trajectory(&a), trajectory(&b));
    }

    #[test]
    fn hill_climb_incumbent_never_worsens_between_restarts(seed in any::<u64>(), sigma in 0.01..0.5f64) {
        let cfg = SearchConfig { sigma, ..config(Algorithm::HillClimb, 150, seed) };
        let a = run_search(&cube(2), &cfg, sphere).unwrap();
        let rs: Vec<Real> = a.points.iter().map(|p| p.robustness).collect();
        let parents = incumbents(&rs);
        let mut last = Real::INFINITY;
        for (i, parent) in parents.iter().enumerate() {
            match parent {
                None => last = rs[i],
                Some(j) => {
                    // every proposal is a Gaussian step away from the incumbent,
                    // and the incumbent only ever improves
                    let step = a.points[i].unit.iter().zip(&a.points[*j].unit);
                    prop_assert!(step.into_iter().all(|(y, x)| (y - x).abs() <= 7.0 * sigma));
                    prop_assert!(rs[*j] <= last);
                    last = rs[*j];
                }
            }
        }
    }

    #[test]
    fn encode_decode_round_trip(u in proptest::collection::vec(0.0..=1.0f64, 3)) {
        let model = parse_risk_model(
            "actor a\ngoal g owner a \"t\"\n\
             event e negative when min_margin < 0 impacts -g\n\
             feature lux continuous [10, 1000] lux binds environment.illuminance\n\
             feature count integer [2, 9] objects binds belt.object_count\n\
             feature mode categorical {ssm, monitored_stop, off} binds controller.mode\n\
             situation s \"t\" scenario \"x\" exposes e features lux, count, mode\n",
        ).unwrap();
        let space = make_feature_space(&model, "s").unwrap();
        let a = space.decode(&u).unwrap();
        space.check(&a).unwrap();
        let again = space.decode(&space.encode(&a).unwrap()).unwrap();
        prop_assert_eq!(&again["count"], &a["count"]);
        prop_assert_eq!(&again["mode"], &a["mode"]);
        let (x, y) = (num(&a, "lux"), num(&again, "lux"));
        prop_assert!((x - y).abs() <= 4.0 * Real::EPSILON * x.abs());
    }
}
