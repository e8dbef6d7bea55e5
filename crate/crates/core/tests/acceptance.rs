//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use ambiguity_core::attitudes::{
    check_scale_property, check_shift_property, coefficient, CoefficientKind, CoefficientMethod,
    Direction, PropertyCheckConfig,
};
use ambiguity_core::duality::{
    build_dual_grid, check_dual_properties, confidence_rep_check, sample_below,
    sample_scaled_below, variational_rep_check, verify_max_envelope, DualProperty,
};
use ambiguity_core::fixtures::{
    betting_economy, betting_interval, betting_model, betting_status_quo, entropic_multiplier,
    root_min, squared_min,
};
use ambiguity_core::models::{
    multiplier_inner_min, multiplier_inner_min_numeric, AmbiguityFunction, ConfidenceOO,
    MultiplierOO, PreferenceModel, SecondOrderRM, Smooth, VariationalMenu,
};
use ambiguity_core::risksharing::{
    check_strict_pseudoconcavity_at_certainty, pareto_improve_search, RiskSampleConfig,
    SearchConfig, DEFAULT_FD_STEP,
};
use ambiguity_core::{rng_from_seed, Act, Belief, Functional, UtilityInterval};

const PUBLISHED_TOL: f64 = 1e-3;
const MIN_BET_GAIN: f64 = 0.011;
const ANALYTIC_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-6;
const ATTITUDE_TOL: f64 = 1e-9;
const INNER_MIN_TOL: f64 = 1e-4;
const ENVELOPE_TOL: f64 = 1e-8;
const REP_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-6;
const SLOPE_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn b(w: &[f64]) -> Belief {
    Belief::new(w.to_vec()).unwrap()
}

fn random_belief<R: Rng>(rng: &mut R, n: usize) -> Belief {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    Belief::from_unnormalized(w).unwrap()
}

fn random_act<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Act {
    Act::from((0..n).map(|_| rng.gen_range(lo..=hi)).collect::<Vec<_>>())
}

fn c1() -> Outcome {
    let v = betting_model();
    let at_half = v
        .components(&Act::from([0.5, 0.5]))
        .map_err(|e| e.to_string())?;
    let at_bet = v
        .components(&Act::from([0.4, 0.6]))
        .map_err(|e| e.to_string())?;
    let published_half = [0.4, 0.5, 0.4];
    let published_bet = [0.4778, 0.512, 0.3222];
    for (got, want) in at_half
        .iter()
        .chain(&at_bet)
        .zip(published_half.iter().chain(&published_bet))
    {
        ensure(
            (got - want).abs() <= PUBLISHED_TOL,
            format!("H value {got:.5} vs {want}"),
        )?;
    }
    let v_bet = v.eval(&Act::from([0.4, 0.6])).unwrap();
    let v_other = v.eval(&Act::from([0.6, 0.4])).unwrap();
    let v_half = v.eval(&Act::from([0.5, 0.5])).unwrap();
    ensure(
        (v_bet - 0.512).abs() <= PUBLISHED_TOL && (v_other - 0.512).abs() <= PUBLISHED_TOL,
        "V at the bet",
    )?;
    ensure(
        v_bet > v_half && (v_half - 0.5).abs() <= PUBLISHED_TOL,
        "V at certainty",
    )?;
    let imp = pareto_improve_search(
        &betting_economy(),
        &betting_status_quo(),
        &SearchConfig::default(),
    )
    .map_err(|e| e.to_string())?
    .ok_or("no improvement found")?;
    ensure(
        imp.gains.iter().all(|&g| g >= MIN_BET_GAIN),
        format!("gains {:?}", imp.gains),
    )?;
    Ok(format!(
        "V(0.4,0.6)={v_bet:.5} > V(1/2,1/2)={v_half:.5}; search gains {:.5}, {:.5}",
        imp.gains[0], imp.gains[1]
    ))
}

fn c2() -> Outcome {
    let mut worst = [0.0f64; 2];
    for i in 1..=20 {
        let t = 0.5 * i as f64;
        let ara_exact = 1.0 / (2.0 * t);
        let rra_exact = 1.0 / (4.0 * t.sqrt() + 2.0);
        for (m, method) in [
            CoefficientMethod::Analytic,
            CoefficientMethod::FiniteDifference,
        ]
        .into_iter()
        .enumerate()
        {
            let ara = coefficient(&AmbiguityFunction::Sqrt, CoefficientKind::Ara, t, method)
                .map_err(|e| e.to_string())?;
            let rra = coefficient(
                &AmbiguityFunction::SqrtPlusLinear,
                CoefficientKind::Rra,
                t,
                method,
            )
            .map_err(|e| e.to_string())?;
            worst[m] = worst[m]
                .max((ara - ara_exact).abs())
                .max((rra - rra_exact).abs());
        }
    }
    ensure(
        worst[0] <= ANALYTIC_TOL,
        format!("analytic error {:e}", worst[0]),
    )?;
    ensure(
        worst[1] <= FD_TOL,
        format!("finite-difference error {:e}", worst[1]),
    )?;
    Ok(format!(
        "max error analytic {:.1e}, finite difference {:.1e}",
        worst[0], worst[1]
    ))
}

fn c3() -> Outcome {
    let k = UtilityInterval::closed(0.0, 10.0).unwrap();
    let q = vec![b(&[0.2, 0.3, 0.5]), b(&[0.6, 0.2, 0.2])];
    let cfg = PropertyCheckConfig::new(1000, ATTITUDE_TOL, 3, 3).unwrap();
    let sqrt: PreferenceModel = SecondOrderRM::new(q.clone(), AmbiguityFunction::Sqrt)
        .unwrap()
        .into();
    let shift = check_shift_property(&sqrt.bind(k, 1e-12), &k, &cfg, Direction::Super, false)
        .map_err(|e| e.to_string())?;
    ensure(
        shift.is_consistent(),
        format!("sqrt model: {} shift violations", shift.violations),
    )?;
    let spl: PreferenceModel = SecondOrderRM::new(q, AmbiguityFunction::SqrtPlusLinear)
        .unwrap()
        .into();
    let scale = check_scale_property(&spl.bind(k, 1e-12), &k, &cfg, Direction::Super, false)
        .map_err(|e| e.to_string())?;
    ensure(
        scale.is_consistent(),
        format!("sqrt+linear model: {} scale violations", scale.violations),
    )?;
    let unit = betting_interval();
    let broken = check_shift_property(&squared_min, &unit, &cfg, Direction::Super, false)
        .map_err(|e| e.to_string())?;
    let w = broken
        .witnesses
        .first()
        .ok_or("squared-min fixture produced no witness")?;
    let phi = Act::from(w.input("phi").unwrap().to_vec());
    let shift_k = w.input("k").unwrap()[0];
    ensure(
        squared_min(&phi.shifted(shift_k)) < squared_min(&phi) + shift_k,
        "witness does not reproduce",
    )?;
    Ok(format!(
        "{} + {} samples clean; squared-min witness gap {:.3e}",
        shift.samples_run, scale.samples_run, w.gap
    ))
}

fn c4() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = 2 + i % 3;
        let mut q = random_belief(&mut rng, n);
        if i % 10 == 9 {
            // a benchmark without full support
            let mut w = q.weights().to_vec();
            w[0] = 0.0;
            q = Belief::from_unnormalized(w).unwrap();
        }
        let phi = random_act(&mut rng, n, 0.0, 10.0);
        let lambda = rng.gen_range(0.1..=5.0);
        let closed = multiplier_inner_min(&q, &phi, lambda);
        let numeric =
            multiplier_inner_min_numeric(&q, &phi, lambda, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max((closed - numeric).abs());
    }
    ensure(
        worst <= INNER_MIN_TOL,
        format!("max disagreement {worst:e}"),
    )?;
    Ok(format!("200 instances, max disagreement {worst:.1e}"))
}

fn c5() -> Outcome {
    let unit = betting_interval();
    let smooth_k = UtilityInterval::closed(1.0, 10.0).unwrap();
    let pair = vec![b(&[0.3, 0.7]), b(&[0.7, 0.3])];
    let models: Vec<(&str, PreferenceModel, UtilityInterval)> = vec![
        ("dual_self_max", betting_model().into(), unit),
        (
            "multiplier_oo",
            MultiplierOO::new(pair.clone(), 0.5, 0.5).unwrap().into(),
            unit,
        ),
        (
            "confidence_oo",
            ConfidenceOO::new(pair.clone(), 0.5).unwrap().into(),
            unit,
        ),
        (
            "second_order_rm",
            SecondOrderRM::new(pair.clone(), AmbiguityFunction::Sqrt)
                .unwrap()
                .into(),
            unit,
        ),
        (
            "smooth",
            Smooth::new(
                pair.clone(),
                vec![0.5, 0.5],
                AmbiguityFunction::SqrtPlusLinear,
            )
            .unwrap()
            .into(),
            smooth_k,
        ),
        (
            "variational_menu",
            VariationalMenu::new(vec![(pair[0].clone(), 0.0), (pair[1].clone(), 0.05)])
                .unwrap()
                .into(),
            unit,
        ),
    ];
    let mut rng = rng_from_seed(5);
    for (name, model, k) in &models {
        let f = model.clone().bind(*k, 1e-12);
        for _ in 0..10 {
            let phi = random_act(&mut rng, 2, k.lo, k.hi);
            let xis: Vec<Act> = (0..10)
                .map(|_| random_act(&mut rng, 2, k.lo, k.hi))
                .collect();
            let r = verify_max_envelope(&f, k, &phi, &xis, ENVELOPE_TOL)
                .map_err(|e| format!("{name}: {e}"))?;
            ensure(
                r.verdict.is_consistent(),
                format!("{name}: envelope violated {:?}", r.witnesses.first()),
            )?;
        }
    }
    let phi = Act::from([0.6, 0.9]);
    let psis = sample_below(&phi, &unit, 500, 5);
    let superadditive: Vec<(&str, Box<dyn Functional>)> = vec![
        (
            "variational_menu",
            Box::new(models[5].1.clone().bind(unit, 1e-12)),
        ),
        (
            "multiplier_oo",
            Box::new(models[1].1.clone().bind(unit, 1e-12)),
        ),
        (
            "second_order_rm",
            Box::new(models[3].1.clone().bind(unit, 1e-12)),
        ),
    ];
    for (name, f) in &superadditive {
        let r = variational_rep_check(f.as_ref(), &unit, &phi, &psis, REP_TOL)
            .map_err(|e| e.to_string())?;
        ensure(
            r.verdict.is_consistent(),
            format!("variational check failed on {name}"),
        )?;
    }
    let r = variational_rep_check(&squared_min, &unit, &phi, &psis, REP_TOL)
        .map_err(|e| e.to_string())?;
    ensure(
        !r.verdict.is_consistent() && !r.witnesses.is_empty(),
        "squared-min passed the variational check",
    )?;
    let xis = sample_scaled_below(&phi, 500, 5);
    let superhomogeneous: Vec<(&str, Box<dyn Functional>)> = vec![
        (
            "dual_self_max",
            Box::new(models[0].1.clone().bind(unit, 1e-12)),
        ),
        (
            "confidence_oo",
            Box::new(models[2].1.clone().bind(unit, 1e-12)),
        ),
        ("maxmin", Box::new(VariationalMenu::maxmin(pair).unwrap())),
    ];
    for (name, f) in &superhomogeneous {
        let r = confidence_rep_check(f.as_ref(), &unit, &phi, &xis, REP_TOL)
            .map_err(|e| e.to_string())?;
        ensure(
            r.verdict.is_consistent(),
            format!(
                "confidence check failed on {name}: {:?}",
                r.witnesses.first()
            ),
        )?;
    }
    let r =
        confidence_rep_check(&root_min, &unit, &phi, &xis, REP_TOL).map_err(|e| e.to_string())?;
    ensure(
        !r.verdict.is_consistent() && !r.witnesses.is_empty(),
        "root-min passed the confidence check",
    )?;
    Ok("6 models x 100 (xi, phi) envelopes; representation checks separate the fixtures".into())
}

fn belief_grid() -> Vec<Belief> {
    (0..20)
        .map(|i| {
            let x = i as f64 / 19.0;
            Belief::new(vec![x, 1.0 - x]).unwrap()
        })
        .collect()
}

fn c6() -> Outcome {
    let k = UtilityInterval::closed(0.0, 10.0).unwrap();
    let t_grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    let sqrt = SecondOrderRM::new(vec![b(&[0.4, 0.6])], AmbiguityFunction::Sqrt).unwrap();
    let g =
        build_dual_grid(&sqrt, &k, &t_grid, &belief_grid(), 1e-12).map_err(|e| e.to_string())?;
    let shift =
        check_dual_properties(&g, DualProperty::ShiftSuper, DUAL_TOL).map_err(|e| e.to_string())?;
    ensure(shift.samples_run > 0, "no interior pairs")?;
    ensure(
        shift.verdict.is_consistent(),
        format!("shift: {:?}", shift.witnesses.first()),
    )?;
    let unit = betting_interval();
    let t_unit: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let g = build_dual_grid(&betting_model(), &unit, &t_unit, &belief_grid(), 1e-12)
        .map_err(|e| e.to_string())?;
    let scale =
        check_dual_properties(&g, DualProperty::ScaleSuper, DUAL_TOL).map_err(|e| e.to_string())?;
    ensure(scale.samples_run > 0, "no interior pairs")?;
    ensure(
        scale.verdict.is_consistent(),
        format!("scale: {:?}", scale.witnesses.first()),
    )?;
    Ok(format!(
        "shift_super on {} interior pairs, scale_super on {} pairs",
        shift.samples_run, scale.samples_run
    ))
}

fn c7() -> Outcome {
    let v = entropic_multiplier(1.0).map_err(|e| e.to_string())?;
    let cfg = RiskSampleConfig {
        samples: 10_000,
        seed: 7,
        tolerance: 1e-9,
        bound: 2.0,
    };
    let clean = check_strict_pseudoconcavity_at_certainty(&v, 2, 1.0, DEFAULT_FD_STEP, &cfg, &[])
        .map_err(|e| e.to_string())?;
    ensure(
        clean.report.verdict.is_consistent(),
        format!("entropic fixture: {:?}", clean.report.witnesses.first()),
    )?;
    let probe = Act::from([0.4, 0.6]);
    let only_probe = RiskSampleConfig { samples: 0, ..cfg };
    let bet = check_strict_pseudoconcavity_at_certainty(
        &betting_model(),
        2,
        0.5,
        DEFAULT_FD_STEP,
        &only_probe,
        std::slice::from_ref(&probe),
    )
    .map_err(|e| e.to_string())?;
    let w = bet
        .report
        .witnesses
        .iter()
        .find(|w| w.input("g") == Some(probe.values()))
        .ok_or("no witness at g = (0.4, 0.6)")?;
    ensure(w.lhs.abs() <= SLOPE_TOL, format!("q.(g - x) = {:e}", w.lhs))?;
    Ok(format!(
        "entropic fixture clean on {} samples; bet witness q.(g-x) = {:.1e}",
        clean.report.samples_run, w.lhs
    ))
}

fn c8() -> Outcome {
    let k = UtilityInterval::closed(1.0, 10.0).unwrap();
    let mut rng = rng_from_seed(8);
    let vertices = vec![b(&[1.0, 0.0]), b(&[0.0, 1.0])];
    let spl: PreferenceModel = Smooth::new(
        vertices.clone(),
        vec![0.3, 0.7],
        AmbiguityFunction::SqrtPlusLinear,
    )
    .unwrap()
    .into();
    let cfg = PropertyCheckConfig::new(1000, ATTITUDE_TOL, 8, 2).unwrap();
    let r = check_scale_property(&spl.bind(k, 1e-12), &k, &cfg, Direction::Super, false)
        .map_err(|e| e.to_string())?;
    ensure(
        r.is_consistent(),
        format!("sqrt+linear smooth model: {:?}", r.witnesses.first()),
    )?;
    // counterexample search: 100 random mixing weights x 100 samples each
    let mut spent = 0;
    for round in 0..100 {
        let m = rng.gen::<f64>();
        let model: PreferenceModel = Smooth::new(
            vertices.clone(),
            vec![m, 1.0 - m],
            AmbiguityFunction::ExpCapped,
        )
        .unwrap()
        .into();
        let cfg = PropertyCheckConfig::new(100, ATTITUDE_TOL, 800 + round, 2).unwrap();
        let r = check_scale_property(&model.bind(k, 1e-12), &k, &cfg, Direction::Super, false)
            .map_err(|e| e.to_string())?;
        spent += r.samples_run;
        if let Some(w) = r.witnesses.first() {
            return Ok(format!(
                "sqrt+linear clean; exp-capped violation after {spent} samples (mu = {m:.3}, gap {:.3e})",
                w.gap
            ));
        }
    }
    Err(format!(
        "sqrt+linear clean; no exp-capped violation found within {spent} samples"
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "betting example reproduction",
            c1,
            Some(Duration::from_secs(5)),
        ),
        ("coefficient identities", c2, None),
        (
            "attitude property suites",
            c3,
            Some(Duration::from_secs(30)),
        ),
        (
            "multiplier inner minimum",
            c4,
            Some(Duration::from_secs(60)),
        ),
        ("envelope representation", c5, None),
        ("dual grid properties", c6, None),
        ("certainty pseudoconcavity", c7, None),
        ("smooth model relative attitude", c8, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > *limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {}: PASS  {name}: {detail} [{elapsed:.2?}]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {}: FAIL  {name}: {detail} [{elapsed:.2?}]",
                    i + 1
                );
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
