use ppde::path_space::{pw_distance, PwPath};
use ppde::regularization::{power_bound_slack, step_v_constant};
use proptest::prelude::*;

const T: f64 = 1.0;

/// A path on `[0, 1]` through `values` at equally spaced knots.
fn path(kind: bool, values: Vec<f64>) -> PwPath {
    let n = values.len();
    let knots: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    if kind {
        PwPath::linear(1, knots, values)
    } else {
        PwPath::step(1, knots, values)
    }
}

fn arb_path() -> impl Strategy<Value = PwPath> {
    (any::<bool>(), prop::collection::vec(-3.0f64..3.0, 1..8)).prop_map(|(k, v)| path(k, v))
}

fn arb_p() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![3.0, 5.0, 7.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_is_symmetric(a in arb_path(), b in arb_path(), t in 0.0..T, s in 0.0..T, p in arb_p()) {
        let ab = pw_distance(t, &a, s, &b, p, T);
        let ba = pw_distance(s, &b, t, &a, p, T);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
    }

    #[test]
    fn distance_to_self_vanishes(a in arb_path(), t in 0.0..T, p in arb_p()) {
        prop_assert!(pw_distance(t, &a, t, &a, p, T).abs() <= 1e-12);
    }

    #[test]
    fn triangle_inequality(
        a in arb_path(), b in arb_path(), c in arb_path(),
        t in 0.0..T, s in 0.0..T, r in 0.0..T, p in arb_p(),
    ) {
        let ac = pw_distance(t, &a, r, &c, p, T);
        let via = pw_distance(t, &a, s, &b, p, T) + pw_distance(s, &b, r, &c, p, T);
        prop_assert!(ac <= via + 1e-9 * (1.0 + via), "{ac} > {via}");
    }

    #[test]
    fn distance_dominates_time_gap(a in arb_path(), b in arb_path(), t in 0.0..T, s in 0.0..T, p in arb_p()) {
        prop_assert!(pw_distance(t, &a, s, &b, p, T) >= (t - s).abs() - 1e-15);
    }

    #[test]
    fn step_inequality_holds(
        a in prop::collection::vec(-10.0f64..10.0, 1..4),
        b in prop::collection::vec(-10.0f64..10.0, 1..4),
        p in arb_p(),
    ) {
        let d = a.len().min(b.len());
        let (a, b) = (&a[..d], &b[..d]);
        prop_assert!(power_bound_slack(a, b, p, step_v_constant(p)) >= 0.0);
    }
}
