//! Property tests over the public API.

use ambiguity_core::fixtures::{betting_model, entropic_multiplier};
use ambiguity_core::models::{
    AmbiguityFunction, ConfidenceOO, PreferenceModel, SecondOrderRM, Smooth, VariationalMenu,
};
use ambiguity_core::{expectation, relative_entropy, Act, Belief, Functional, UtilityInterval};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn belief3() -> impl Strategy<Value = Belief> {
    prop::collection::vec(0.01f64..1.0, 3).prop_map(|w| Belief::from_unnormalized(w).unwrap())
}

fn act3(lo: f64, hi: f64) -> impl Strategy<Value = Act> {
    prop::collection::vec(lo..hi, 3).prop_map(|v| Act::new(v).unwrap())
}

fn nonneg3(hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..hi, 3)
}

fn b(w: [f64; 3]) -> Belief {
    Belief::new(w.to_vec()).unwrap()
}

/// Models on three states with the interval each is checked on.
fn models() -> Vec<(&'static str, PreferenceModel, UtilityInterval)> {
    let q = vec![b([0.2, 0.3, 0.5]), b([0.5, 0.25, 0.25])];
    let k = UtilityInterval::closed(1.0, 20.0).unwrap();
    vec![
        (
            "maxmin",
            VariationalMenu::maxmin(q.clone()).unwrap().into(),
            k,
        ),
        (
            "menu",
            VariationalMenu::new(vec![
                (q[0].clone(), 0.0),
                (q[1].clone(), 0.5),
                (b([0.8, 0.1, 0.1]), 1.0),
            ])
            .unwrap()
            .into(),
            k,
        ),
        ("multiplier", entropic_multiplier(2.0).unwrap().into(), k),
        (
            "confidence",
            ConfidenceOO::new(q.clone(), 0.1).unwrap().into(),
            k,
        ),
        (
            "second_order_sqrt",
            SecondOrderRM::new(q.clone(), AmbiguityFunction::Sqrt)
                .unwrap()
                .into(),
            k,
        ),
        (
            "smooth_log",
            Smooth::new(q.clone(), vec![0.4, 0.6], AmbiguityFunction::Log)
                .unwrap()
                .into(),
            k,
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_entropy_is_nonnegative(p in belief3(), q in belief3()) {
        prop_assert!(relative_entropy(&p, &q).unwrap() >= -TOL);
        prop_assert!(relative_entropy(&p, &p).unwrap().abs() <= TOL);
    }

    #[test]
    fn expectation_is_affine(f in act3(-5.0, 5.0), p in belief3(), a in 0.1f64..3.0, c in -2.0f64..2.0) {
        let e = expectation(f.values(), &p).unwrap();
        let g = f.scaled(a).shifted(c);
        prop_assert!((expectation(g.values(), &p).unwrap() - (a * e + c)).abs() <= 1e-9);
    }

    #[test]
    fn models_are_monotone(f in act3(1.0, 10.0), d in nonneg3(10.0)) {
        let g = Act::new(f.values().iter().zip(&d).map(|(x, y)| x + y).collect()).unwrap();
        for (name, m, k) in models() {
            let v = m.bind(k, 1e-12);
            let (vf, vg) = (v.apply(&f).unwrap(), v.apply(&g).unwrap());
            prop_assert!(vf <= vg + 1e-7, "{}: {} > {}", name, vf, vg);
        }
    }

    #[test]
    fn models_are_normalized(c in 1.0f64..20.0) {
        for (name, m, k) in models() {
            let v = m.bind(k, 1e-12).apply(&Act::constant(3, c)).unwrap();
            prop_assert!((v - c).abs() <= 1e-7, "{}: {} vs {}", name, v, c);
        }
    }

    #[test]
    fn values_lie_between_worst_and_best(f in act3(1.0, 20.0)) {
        for (name, m, k) in models() {
            let v = m.bind(k, 1e-12).apply(&f).unwrap();
            prop_assert!(v >= f.min() - 1e-7 && v <= f.max() + 1e-7, "{}: {}", name, v);
        }
    }

    #[test]
    fn maxmin_is_translation_and_scale_equivariant(f in act3(-5.0, 5.0), c in -3.0f64..3.0, a in 0.1f64..4.0) {
        let m = VariationalMenu::maxmin(vec![b([0.2, 0.3, 0.5]), b([0.5, 0.25, 0.25])]).unwrap();
        let v = m.eval(&f).unwrap();
        prop_assert!((m.eval(&f.shifted(c)).unwrap() - (v + c)).abs() <= 1e-9);
        prop_assert!((m.eval(&f.scaled(a)).unwrap() - a * v).abs() <= 1e-9);
    }

    #[test]
    fn entropic_multiplier_is_translation_equivariant(f in act3(0.0, 5.0), c in 0.0f64..3.0) {
        let m = entropic_multiplier(1.5).unwrap();
        prop_assert!((m.eval(&f.shifted(c)).unwrap() - (m.eval(&f).unwrap() + c)).abs() <= 1e-9);
    }

    #[test]
    fn phi_inverse_round_trips(t in 1.0f64..50.0) {
        for phi in [
            AmbiguityFunction::Sqrt,
            AmbiguityFunction::SqrtPlusLinear,
            AmbiguityFunction::Log,
            AmbiguityFunction::power(0.3).unwrap(),
        ] {
            let back = phi.inverse(phi.value(t));
            prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0), "{}: {}", phi.name(), back);
        }
    }

    #[test]
    fn betting_value_dominates_each_self(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let v = betting_model();
        let f = Act::from([x, y]);
        let hs = v.components(&f).unwrap();
        let top = v.eval(&f).unwrap();
        prop_assert!(hs.iter().all(|h| *h <= top + 1e-12));
        prop_assert!(hs.iter().any(|h| (*h - top).abs() <= 1e-12));
    }
}
