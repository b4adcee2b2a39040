use num_traits::Float;
use proptest::prelude::*;

use riskloop::risk_model::{Domain, Polarity, RiskModel};
use riskloop::sim::perception::{detection_probability, illuminance_gate, PerceptionModel};
use riskloop::sim::ssm::{protective_distance, SsmParams};
use riskloop::sim::{
    bind_assignment, evaluate_events, simulate, FeatureAssignment, FeatureValue, Label, Scenario,
    Trace, TraceMetrics,
};
use riskloop::Real;

/// A point of the default feature space from unit coordinates.
fn assignment(model: &RiskModel, u: &[Real]) -> FeatureAssignment {
    model
        .features
        .iter()
        .zip(u)
        .map(|(f, &x)| match f.domain {
            Domain::Interval { lo, hi } => (f.name.clone(), FeatureValue::Number(lo + x * (hi - lo))),
            Domain::Set(_) => unreachable!("the default space is continuous"),
        })
        .collect()
}

fn csv(trace: &Trace) -> Vec<u8> {
    let mut out = Vec::new();
    trace.write_csv(&mut out).unwrap();
    out
}

fn perception<T: Float>() -> PerceptionModel<T> {
    let c = |x: f64| T::from(x).unwrap();
    PerceptionModel {
        p_base: c(0.99),
        e_min: c(100.0),
        e_sat: c(150.0),
        contrast_exponent: c(0.5),
    }
}

fn ssm<T: Float>() -> SsmParams<T> {
    let c = |x: f64| T::from(x).unwrap();
    SsmParams {
        human_speed: c(1.6),
        reaction_time: c(0.1),
        brake_decel: c(2.0),
        clearance: c(0.1),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_are_well_formed_and_reproducible(
        u in proptest::collection::vec(0.0..=1.0f64, 6),
        seed in any::<u64>(),
    ) {
        let model = RiskModel::default_model();
        let sc = bind_assignment(&Scenario::default_cell(), &model, &assignment(&model, &u)).unwrap();
        let trace = simulate(&sc, seed);

        let elsewhere = std::thread::spawn({
            let sc = sc.clone();
            move || simulate(&sc, seed)
        })
        .join()
        .unwrap();
        prop_assert_eq!(csv(&trace), csv(&elsewhere));
        prop_assert_eq!(trace.summary, elsewhere.summary);

        prop_assert_eq!(trace.steps.len(), (sc.duration / sc.dt).floor() as usize);
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!((w[1].t - w[0].t - sc.dt).abs() < 1e-9);
        }
        let c = sc.controller.clearance;
        for s in &trace.steps {
            prop_assert!(s.d >= 0.0);
            prop_assert!(s.s_p >= c);
        }
        let m: TraceMetrics = trace.summary;
        prop_assert!(m.min_distance >= 0.0);
        prop_assert!(m.min_margin <= m.min_distance);
        prop_assert!((0.0..=1.0).contains(&m.detection_miss_ratio));
        let min_d = trace.steps.iter().map(|s| s.d).fold(Real::INFINITY, Real::min);
        prop_assert_eq!(m.min_distance, min_d);
        let min_margin = trace.steps.iter().map(|s| s.margin).fold(Real::INFINITY, Real::min);
        prop_assert_eq!(m.min_margin, min_margin);
    }

    #[test]
    fn label_is_non_compliance_iff_a_negative_event_is_violated(
        min_margin in -1.0..1.0f64,
        extra in 0.0..1.0f64,
        fallen in 0u32..3,
        miss in 0.0..=1.0f64,
    ) {
        let model = RiskModel::default_model();
        let m = TraceMetrics {
            min_margin,
            min_distance: min_margin.max(0.0) + extra,
            objects_fallen: fallen,
            detection_miss_ratio: miss,
            collision: 0,
        };
        let v = evaluate_events(&m, &model, "close_collaboration").unwrap();
        for o in v.per_event.values() {
            prop_assert_eq!(o.triggered, o.robustness < 0.0);
        }
        let violated = v.per_event.iter().any(|(name, o)| {
            model.event(name).unwrap().polarity == Polarity::Negative && o.robustness < 0.0
        });
        prop_assert_eq!(v.label == Label::NonCompliance, violated);
    }
}

proptest! {
    #[test]
    fn lighting_never_hurts_detection(a in 0.0..20_000.0f64, b in 0.0..20_000.0f64, contrast in 0.0..=1.0f64, occ in 0.0..=1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = perception::<f64>();
        prop_assert!(illuminance_gate(lo, &p) <= illuminance_gate(hi, &p));
        prop_assert!(detection_probability(lo, contrast, occ, &p) <= detection_probability(hi, contrast, occ, &p));
        let p32 = perception::<f32>();
        prop_assert!(illuminance_gate(lo as f32, &p32) <= illuminance_gate(hi as f32, &p32));
    }

    #[test]
    fn protective_distance_grows_with_speed(a in 0.0..5.0f64, b in 0.0..5.0f64) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = ssm::<f64>();
        prop_assert!(protective_distance(lo, &p).unwrap() < protective_distance(hi, &p).unwrap());
    }
}

#[test]
fn protective_distance_at_rest_and_by_hand() {
    let p = ssm::<f64>();
    assert_eq!(protective_distance(0.0, &p).unwrap(), 1.6 * 0.1 + 0.1);
    // 0.16 + 0.1 + 1/4 + 0.1
    assert!((protective_distance(1.0, &p).unwrap() - 0.61).abs() <= 1e-12);
    let p32 = ssm::<f32>();
    assert!((protective_distance(1.0f32, &p32).unwrap() - 0.61).abs() <= 1e-6);
    assert!(protective_distance(-0.1, &p).is_err());
}

#[test]
fn default_cell_matches_its_asset() {
    let from_file = Scenario::from_toml(riskloop::DEFAULT_SCENARIO).unwrap();
    assert_eq!(from_file, Scenario::default_cell());
    assert_eq!(Scenario::from_toml(&from_file.to_toml()).unwrap(), from_file);
}
