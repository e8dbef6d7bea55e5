use proptest::prelude::*;

use super::*;
use crate::fixtures::{betting_interval, betting_model, entropic_multiplier, squared_min};
use crate::models::{AmbiguityFunction, SecondOrderRM, VariationalMenu};
use crate::report::Verdict;

fn unit() -> UtilityInterval {
    UtilityInterval::closed(0.0, 1.0).unwrap()
}

fn ten() -> UtilityInterval {
    UtilityInterval::closed(0.0, 10.0).unwrap()
}

fn min_s(f: &Act) -> f64 {
    f.min()
}

fn maxmin() -> VariationalMenu {
    VariationalMenu::maxmin(vec![
        Belief::new(vec![0.3, 0.7]).unwrap(),
        Belief::new(vec![0.6, 0.4]).unwrap(),
    ])
    .unwrap()
}

fn eu(p: &[f64]) -> impl Fn(&Act) -> f64 {
    let p = p.to_vec();
    move |f: &Act| f.iter().zip(&p).map(|(a, b)| a * b).sum()
}

#[test]
fn s_at_xi_equal_phi_is_identity() {
    let phi = Act::from([0.3, 0.9]);
    for kind in [
        EnvelopeKind::SXi,
        EnvelopeKind::IXi,
        EnvelopeKind::HXi,
        EnvelopeKind::JXi,
    ] {
        let v = envelope_eval(
            &maxmin(),
            &EnvelopeSpec::new(kind, phi.clone()),
            &phi,
            &unit(),
        )
        .unwrap();
        assert!((v - maxmin().eval(&phi).unwrap()).abs() < 1e-14, "{kind:?}");
    }
}

#[test]
fn empty_sets_follow_conventions() {
    // xi - 0.3 = (-0.1, 0.5) leaves K
    let spec = EnvelopeSpec::new(EnvelopeKind::SXi, Act::from([0.2, 0.8]));
    let phi = Act::from([0.5, 0.5]);
    assert_eq!(
        envelope_eval(&min_s, &spec, &phi, &unit()).unwrap(),
        f64::NEG_INFINITY
    );
    let spec = EnvelopeSpec::new(EnvelopeKind::IXi, Act::from([0.0, 1.0]));
    let phi = Act::from([1.0, 0.0]);
    assert_eq!(
        envelope_eval(&min_s, &spec, &phi, &unit()).unwrap(),
        f64::INFINITY
    );
    let spec = EnvelopeSpec::new(EnvelopeKind::JXi, Act::from([0.0, 1.0]));
    let phi = Act::from([0.5, 0.5]);
    assert_eq!(
        envelope_eval(&min_s, &spec, &phi, &unit()).unwrap(),
        f64::INFINITY
    );
    let spec = EnvelopeSpec::new(EnvelopeKind::HXi, Act::from([0.0, 0.0]));
    assert_eq!(
        envelope_eval(&min_s, &spec, &phi, &unit()).unwrap(),
        f64::NEG_INFINITY
    );
}

#[test]
fn hand_computed_envelopes() {
    let phi = Act::from([0.5, 0.5]);
    let xi = Act::from([0.2, 0.4]);
    // I_xi: smallest k with xi + k >= phi is 0.3, giving (0.5, 0.7)
    let v = envelope_eval(
        &min_s,
        &EnvelopeSpec::new(EnvelopeKind::IXi, xi.clone()),
        &phi,
        &unit(),
    )
    .unwrap();
    assert!((v - 0.5).abs() < 1e-15);
    // J_xi: smallest alpha is 2.5, giving (0.5, 1.0)
    let v = envelope_eval(
        &eu(&[0.5, 0.5]),
        &EnvelopeSpec::new(EnvelopeKind::JXi, xi.clone()),
        &phi,
        &unit(),
    )
    .unwrap();
    assert!((v - 0.75).abs() < 1e-15);
    // H_xi: largest alpha is 1.25, giving (0.25, 0.5)
    let v = envelope_eval(
        &eu(&[0.5, 0.5]),
        &EnvelopeSpec::new(EnvelopeKind::HXi, xi),
        &phi,
        &unit(),
    )
    .unwrap();
    assert!((v - 0.375).abs() < 1e-15);
}

#[test]
fn scaling_kinds_need_nonnegative_k() {
    let k = UtilityInterval::closed(-1.0, 1.0).unwrap();
    let spec = EnvelopeSpec::new(EnvelopeKind::JXi, Act::from([0.2, 0.4]));
    let r = envelope_eval(&min_s, &spec, &Act::from([0.5, 0.5]), &k);
    assert!(matches!(r, Err(Error::DomainIncompatible { .. })));
}

#[test]
fn non_monotone_functional_is_caught() {
    let bad = |f: &Act| -f[0] - f[1];
    let spec = EnvelopeSpec::new(EnvelopeKind::IXi, Act::from([0.1, 0.2]));
    let r = envelope_eval(&bad, &spec, &Act::from([0.5, 0.5]), &unit());
    assert!(matches!(r, Err(Error::NonMonotone { .. })));
    // the scan makes no such assumption
    let v = envelope_eval_scan(&bad, &spec, &Act::from([0.5, 0.5]), &unit(), 1001).unwrap();
    // k runs over [0.4, 0.8]
    assert!((v + 1.9).abs() < 1e-12);
}

#[test]
fn scan_agrees_with_closed_form() {
    let phi = Act::from([0.4, 0.7]);
    let m = maxmin();
    for kind in [
        EnvelopeKind::SXi,
        EnvelopeKind::IXi,
        EnvelopeKind::HXi,
        EnvelopeKind::JXi,
    ] {
        for xi in [
            Act::from([0.1, 0.3]),
            Act::from([0.6, 0.2]),
            Act::from([0.5, 0.5]),
        ] {
            let spec = EnvelopeSpec::new(kind, xi);
            let a = envelope_eval(&m, &spec, &phi, &unit()).unwrap();
            let b = envelope_eval_scan(&m, &spec, &phi, &unit(), 4001).unwrap();
            if a.is_finite() {
                // the scan's best point can only be worse than the endpoint
                let gap = if kind.is_upper() { b - a } else { a - b };
                assert!((-1e-12..1e-3).contains(&gap), "{kind:?}: {a} vs {b}");
            } else {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn max_envelope_holds_for_models() {
    let phi = Act::from([0.35, 0.8]);
    let xis = crate::sampling::SampleBox::inside(&unit(), 2, None).unwrap();
    let mut rng = rng_from_seed(11);
    let xis: Vec<Act> = (0..100).map(|i| xis.stratified(&mut rng, i)).collect();
    let r = verify_max_envelope(&maxmin(), &unit(), &phi, &xis, 1e-8).unwrap();
    assert!(r.verdict.is_consistent(), "{r:?}");
    assert_eq!(r.samples_run, 4 * 101);
    let v = betting_model();
    let r = verify_max_envelope(&v, &betting_interval(), &phi, &xis, 1e-8).unwrap();
    assert!(r.verdict.is_consistent(), "{r:?}");
}

#[test]
fn variational_check_separates_fixtures() {
    let phi = Act::from([0.6, 0.9]);
    let psis = sample_below(&phi, &unit(), 500, 3);
    let m = entropic_multiplier(0.5).unwrap();
    assert!(variational_rep_check(&m, &unit(), &phi, &psis, 1e-9)
        .unwrap()
        .verdict
        .is_consistent());
    let sq = SecondOrderRM::new(vec![Belief::uniform(2)], AmbiguityFunction::Sqrt).unwrap();
    assert!(variational_rep_check(&sq, &unit(), &phi, &psis, 1e-9)
        .unwrap()
        .verdict
        .is_consistent());
    let r = variational_rep_check(&squared_min, &unit(), &phi, &psis, 1e-9).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(!r.witnesses.is_empty());
}

#[test]
fn confidence_check_separates_fixtures() {
    let phi = Act::from([0.6, 0.9]);
    let xis = sample_scaled_below(&phi, 500, 4);
    assert_eq!(xis.len(), 500);
    assert!(xis.iter().all(|x| x.le(&phi)));
    let r = confidence_rep_check(&betting_model(), &betting_interval(), &phi, &xis, 1e-9).unwrap();
    assert!(r.verdict.is_consistent(), "{r:?}");
    assert!(
        confidence_rep_check(&eu(&[0.2, 0.8]), &unit(), &phi, &xis, 1e-12)
            .unwrap()
            .verdict
            .is_consistent()
    );
    let m = entropic_multiplier(0.5).unwrap();
    assert_eq!(
        confidence_rep_check(&m, &unit(), &phi, &xis, 1e-9)
            .unwrap()
            .verdict,
        Verdict::Violated
    );
    let k = UtilityInterval::closed(0.5, 1.0).unwrap();
    assert!(matches!(
        confidence_rep_check(&m, &k, &phi, &[], 1e-9),
        Err(Error::DomainIncompatible { .. })
    ));
}

#[test]
fn dual_of_expected_utility_is_identity() {
    let p = Belief::new(vec![0.3, 0.7]).unwrap();
    let t_grid: Vec<f64> = (1..=9).map(|i| i as f64).collect();
    let g = build_dual_grid(&eu(&[0.3, 0.7]), &ten(), &t_grid, &[p], 1e-12).unwrap();
    for (t, v) in g.t_grid.iter().zip(&g.values[0]) {
        assert!((v - t).abs() < 1e-7, "{t}: {v}");
    }
    for prop in [
        DualProperty::ShiftSuper,
        DualProperty::ScaleSuper,
        DualProperty::Monotone,
    ] {
        let r = check_dual_properties(&g, prop, 1e-6).unwrap();
        assert!(r.verdict.is_consistent(), "{prop:?}: {r:?}");
    }
}

#[test]
fn dual_of_min_at_vertex() {
    let g = build_dual_grid(&min_s, &unit(), &[0.3], &[Belief::vertex(2, 0)], 1e-12).unwrap();
    assert!((g.values[0][0] - 0.3).abs() < 1e-7);
}

#[test]
fn infeasible_cells_are_negative_infinity() {
    let k = UtilityInterval::closed(0.2, 1.0).unwrap();
    let g = build_dual_grid(&min_s, &k, &[0.1, 0.5], &[Belief::uniform(2)], 1e-12).unwrap();
    assert_eq!(g.values[0][0], f64::NEG_INFINITY);
    assert!(g.argmax[0][0].is_none());
    assert!(g.values[0][1].is_finite());
}

#[test]
fn grid_misalignment() {
    let p = [Belief::uniform(2)];
    assert!(matches!(
        build_dual_grid(&min_s, &unit(), &[0.5, 0.2], &p, 1e-9),
        Err(Error::GridMisaligned(_))
    ));
    assert!(matches!(
        build_dual_grid(&min_s, &unit(), &[0.5], &[], 1e-9),
        Err(Error::GridMisaligned(_))
    ));
    let g = build_dual_grid(&min_s, &unit(), &[0.5], &p, 1e-9).unwrap();
    assert!(matches!(
        check_dual_properties(&g, DualProperty::ShiftSuper, 1e-6),
        Err(Error::GridMisaligned(_))
    ));
}

#[test]
fn dual_grid_csv_layout() {
    let g = build_dual_grid(
        &min_s,
        &unit(),
        &[0.25, 0.5],
        &[Belief::uniform(2), Belief::vertex(2, 1)],
        1e-12,
    )
    .unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,p1,p2,value");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.25,0.5,0.5,"));
}

#[test]
fn extension_examples() {
    let k = unit();
    let psi = Act::from([1.5, 2.0]);
    let e = extend_functional(&min_s, &k, ExtensionKind::ConstSuperadd, &psi, 200, 1).unwrap();
    assert!((e.value - 1.5).abs() < 1e-12);
    assert!(e.lower_bound);
    let inside = Act::from([0.2, 0.7]);
    let e = extend_functional(&min_s, &k, ExtensionKind::ConstSuperadd, &inside, 200, 1).unwrap();
    assert_eq!(e.value, 0.2);
    assert!(!e.lower_bound);
    let c = Act::constant(3, 4.0);
    let e = extend_functional(&maxmin_3(), &k, ExtensionKind::ConstSuperadd, &c, 100, 2).unwrap();
    assert!((e.value - 4.0).abs() < 1e-12);
    let e = extend_functional(&min_s, &k, ExtensionKind::PosSuperhomog, &psi, 200, 1).unwrap();
    assert!((e.value - 1.5).abs() < 1e-12);
}

fn maxmin_3() -> VariationalMenu {
    VariationalMenu::maxmin(vec![Belief::uniform(3), Belief::vertex(3, 2)]).unwrap()
}

fn act2(lo: f64, hi: f64) -> impl Strategy<Value = Act> {
    prop::collection::vec(lo..=hi, 2).prop_map(Act::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn envelope_bounds(phi in act2(0.0, 1.0), xi in act2(0.0, 1.0)) {
        let m = maxmin();
        let target = m.eval(&phi).unwrap();
        for kind in [EnvelopeKind::SXi, EnvelopeKind::IXi, EnvelopeKind::HXi, EnvelopeKind::JXi] {
            let v = envelope_eval(&m, &EnvelopeSpec::new(kind, xi.clone()), &phi, &unit()).unwrap();
            if kind.is_upper() {
                prop_assert!(v >= target - 1e-12);
            } else {
                prop_assert!(v <= target + 1e-12);
            }
        }
    }

    #[test]
    fn upper_envelope_is_quasiconvex(a in act2(0.0, 1.0), b in act2(0.0, 1.0), xi in act2(0.0, 1.0), alpha in 0.0..=1.0f64) {
        let m = maxmin();
        let spec = EnvelopeSpec::new(EnvelopeKind::IXi, xi);
        let ia = envelope_eval(&m, &spec, &a, &unit()).unwrap();
        let ib = envelope_eval(&m, &spec, &b, &unit()).unwrap();
        let im = envelope_eval(&m, &spec, &a.mix(&b, alpha), &unit()).unwrap();
        prop_assert!(im <= ia.max(ib) + 1e-12);
        let spec = EnvelopeSpec::new(EnvelopeKind::SXi, spec.xi);
        let sa = envelope_eval(&m, &spec, &a, &unit()).unwrap();
        let sb = envelope_eval(&m, &spec, &b, &unit()).unwrap();
        let sm = envelope_eval(&m, &spec, &a.mix(&b, alpha), &unit()).unwrap();
        prop_assert!(sm >= sa.min(sb) - 1e-12);
    }

    #[test]
    fn dual_grid_is_monotone(p0 in 0.0..=1.0f64) {
        let p = Belief::new(vec![p0, 1.0 - p0]).unwrap();
        let t_grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let g = build_dual_grid(&betting_model(), &betting_interval(), &t_grid, &[p], 1e-10).unwrap();
        let r = check_dual_properties(&g, DualProperty::Monotone, 1e-9).unwrap();
        prop_assert!(r.verdict.is_consistent());
    }
}
