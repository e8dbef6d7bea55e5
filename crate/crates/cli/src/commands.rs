use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use ambiguity_core::attitudes::{
    check_monotone, check_normalized, check_quasiconcave, classify_attitude, coefficient,
    coefficient_curve, is_optimizer_backed, CoefficientKind, CoefficientMethod,
    PropertyCheckConfig, OPTIMIZER_TOLERANCE_FACTOR,
};
use ambiguity_core::duality::{
    build_dual_grid, check_dual_properties, extend_functional, verify_max_envelope,
};
use ambiguity_core::fixtures::{betting_model, betting_status_quo};
use ambiguity_core::models::{evaluate, AmbiguityFunction};
use ambiguity_core::risksharing::{
    equilibrium_with_transfers_check, is_feasible, is_full_insurance, pareto_improve_search,
    supporting_probabilities_at_certainty, RiskSampleConfig, SearchConfig, DEFAULT_FD_STEP,
};
use ambiguity_core::{rng_from_seed, Act, Belief, Functional};

use crate::config::{self, CommandName, ConfigError, ExperimentConfig};
use crate::report::{CheckSummary, Report};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Inner optimizer tolerance for bound models and dual cells.
const OPT_TOL: f64 = 1e-12;

/// Supporting beliefs closer than this count as shared.
const DEFAULT_BELIEF_TOL: f64 = 1e-6;

const SAMPLE_BOX_WIDTH: f64 = 10.0;

/// Published values are quoted to about three decimals.
const PUBLISHED_TOL: f64 = 1e-3;
const COEFFICIENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    tol: f64,
    out: Option<&'a Path>,
    rng: ChaCha8Rng,
}

impl Run<'_> {
    /// Next seed drawn from the run's single generator.
    fn subseed(&mut self) -> u64 {
        self.rng.gen()
    }

    fn csv_file(&self, name: &str) -> Result<Option<File>> {
        let Some(dir) = self.out else {
            return Ok(None);
        };
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        Ok(Some(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

pub fn run(command: CommandName, cfg: &ExperimentConfig, opts: &Options) -> Result<Report> {
    cfg.check_command(command, opts.seed)?;
    let tol = opts.tol.or(cfg.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if !(tol > 0.0 && tol.is_finite()) {
        bail!("tolerance must be positive, got {tol}");
    }
    let seed = opts.seed.or(cfg.seed);
    let mut run = Run {
        cfg,
        tol,
        out: opts.out.as_deref(),
        rng: rng_from_seed(seed.unwrap_or(0)),
    };
    let (checks, results) = match command {
        CommandName::Eval => eval(&mut run)?,
        CommandName::Audit => audit(&mut run)?,
        CommandName::Dualize => dualize(&mut run)?,
        CommandName::Share => share(&mut run)?,
        CommandName::Repro => repro(&mut run)?,
    };
    Ok(Report::new(command.as_str(), seed, tol, checks, results))
}

type Outcome = (Vec<CheckSummary>, Value);

fn eval(run: &mut Run) -> Result<Outcome> {
    let (model, k) = run.cfg.bound_model()?;
    if run.cfg.acts.is_empty() {
        return Err(ConfigError::schema("/acts", "eval needs at least one act").into());
    }
    let acts = config::acts(&run.cfg.acts, "/acts")?;
    let mut values = Vec::with_capacity(acts.len());
    for (i, act) in acts.iter().enumerate() {
        let v =
            evaluate(&model, act, &k, OPT_TOL).with_context(|| format!("evaluating /acts/{i}"))?;
        values.push(json!({ "act": act, "value": v }));
    }
    Ok((
        Vec::new(),
        json!({ "model": model.kind(), "interval": k.to_string(), "values": values }),
    ))
}

fn audit(run: &mut Run) -> Result<Outcome> {
    let (model, k) = run.cfg.bound_model()?;
    let spec = ExperimentConfig::required(&run.cfg.audit, "/audit")?;
    let dim = spec
        .dim
        .or_else(|| model.dimension())
        .ok_or_else(|| ConfigError::schema("/audit/dim", "the model does not fix a dimension"))?;
    let mut pcfg = PropertyCheckConfig::new(spec.samples, run.tol, run.subseed(), dim)
        .map_err(|e| ConfigError::schema("/audit", e))?;
    if let Some([lo, hi]) = spec.bounds {
        pcfg = pcfg.with_bounds(lo, hi);
    }
    let classification = classify_attitude(&model, &k, &pcfg)?;

    let mut shape_cfg = pcfg.clone();
    if is_optimizer_backed(&model) {
        shape_cfg.tolerance *= OPTIMIZER_TOLERANCE_FACTOR;
    }
    let bound = model.clone().bind(k, OPT_TOL);
    let mut checks = Vec::new();
    for (name, r) in [
        ("monotone", check_monotone(&bound, &k, &shape_cfg)?),
        ("normalized", check_normalized(&bound, &k, &shape_cfg)?),
    ] {
        checks.push(CheckSummary {
            name: name.into(),
            verdict: r.verdict,
            samples_run: r.samples_run,
            violations: r.violations,
            tolerance: r.tolerance,
            witnesses: r.witnesses,
        });
    }
    let quasiconcave = check_quasiconcave(&bound, &k, &shape_cfg)?;
    if let Some(expect) = &spec.expect {
        if let Some(a) = expect.absolute {
            checks.push(CheckSummary::single(
                "expected_absolute_attitude",
                a == classification.absolute,
                run.tol,
            ));
        }
        if let Some(r) = expect.relative {
            checks.push(CheckSummary::single(
                "expected_relative_attitude",
                r == classification.relative,
                run.tol,
            ));
        }
    }

    let mut curves = Vec::new();
    for (i, c) in spec.coefficients.iter().enumerate() {
        let phi = c.phi.build(&format!("/audit/coefficients/{i}/phi"))?;
        let curve = coefficient_curve(&phi, c.kind, &c.grid, c.method)
            .with_context(|| format!("coefficient curve /audit/coefficients/{i}"))?;
        if let Some(f) = run.csv_file(&format!("coefficients_{i}.csv"))? {
            curve.write_csv(f)?;
        }
        curves.push(curve);
    }
    Ok((
        checks,
        json!({
            "model": model.kind(),
            "interval": k.to_string(),
            "absolute": classification.absolute,
            "relative": classification.relative,
            "attitude_checks": classification.reports,
            "quasiconcave": quasiconcave,
            "coefficients": curves,
        }),
    ))
}

fn two_state_beliefs(count: usize) -> Result<Vec<Belief>> {
    if count < 2 {
        return Err(ConfigError::schema("/dual/belief_count", "need at least two beliefs").into());
    }
    Ok((0..count)
        .map(|i| {
            let x = i as f64 / (count - 1) as f64;
            Belief::new(vec![x, 1.0 - x]).expect("grid belief")
        })
        .collect())
}

fn dualize(run: &mut Run) -> Result<Outcome> {
    let (model, k) = run.cfg.bound_model()?;
    let spec = ExperimentConfig::required(&run.cfg.dual, "/dual")?;
    let beliefs = match (&spec.beliefs, spec.belief_count) {
        (Some(ws), _) => ws
            .iter()
            .enumerate()
            .map(|(i, w)| config::belief(w, &format!("/dual/beliefs/{i}")))
            .collect::<Result<Vec<_>, _>>()?,
        (None, Some(c)) => two_state_beliefs(c)?,
        (None, None) => {
            return Err(ConfigError::schema("/dual/beliefs", "give beliefs or belief_count").into())
        }
    };
    let bound = model.clone().bind(k, OPT_TOL);
    let grid = build_dual_grid(&bound, &k, &spec.t_grid, &beliefs, OPT_TOL)?;
    if let Some(f) = run.csv_file("dual_grid.csv")? {
        grid.write_csv(f)?;
    }
    let mut checks = Vec::new();
    for p in &spec.properties {
        let r = check_dual_properties(&grid, *p, run.tol)?;
        checks.push(CheckSummary::from_report(r.check.clone(), &r));
    }
    if let Some(env) = &spec.envelope {
        let phi = config::act(&env.phi, "/dual/envelope/phi")?;
        let (lo, hi) = (k.desk_lo(), k.desk_hi());
        let lo = if lo.is_finite() {
            lo
        } else {
            hi.min(0.0) - SAMPLE_BOX_WIDTH
        };
        let hi = if hi.is_finite() {
            hi
        } else {
            lo + SAMPLE_BOX_WIDTH
        };
        let mut rng = rng_from_seed(run.subseed());
        let xis: Vec<Act> = (0..env.xi_samples)
            .map(|_| {
                Act::from(
                    (0..phi.len())
                        .map(|_| rng.gen_range(lo..=hi))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let r = verify_max_envelope(&bound, &k, &phi, &xis, run.tol)?;
        checks.push(CheckSummary::from_report(r.check.clone(), &r));
    }
    let mut extensions = Vec::new();
    for (i, e) in spec.extensions.iter().enumerate() {
        let psi = config::act(&e.psi, &format!("/dual/extensions/{i}/psi"))?;
        let seed = run.subseed();
        let x = extend_functional(&bound, &k, e.kind, &psi, e.samples, seed)
            .with_context(|| format!("extension /dual/extensions/{i}"))?;
        extensions.push(
            json!({ "kind": e.kind, "psi": psi, "value": x.value, "lower_bound": x.lower_bound }),
        );
    }
    Ok((
        checks,
        json!({
            "model": model.kind(),
            "interval": k.to_string(),
            "grid": grid,
            "extensions": extensions,
        }),
    ))
}

fn share(run: &mut Run) -> Result<Outcome> {
    let e = run.cfg.economy(OPT_TOL)?;
    let a = run.cfg.allocation(&e)?;
    let spec = run.cfg.share.clone().unwrap_or_default();
    let feasible = is_feasible(&e, &a)?;
    let full = is_full_insurance(&a);
    let mut checks = vec![CheckSummary::single("feasibility", feasible, run.tol)];
    let mut results = serde_json::Map::new();
    results.insert(
        "agents".into(),
        json!(e.agents().iter().map(|x| &x.name).collect::<Vec<_>>()),
    );
    results.insert("allocation".into(), to_value(&a));
    results.insert("feasible".into(), json!(feasible));
    results.insert("full_insurance".into(), json!(full));
    if !feasible {
        return Ok((checks, Value::Object(results)));
    }

    let defaults = SearchConfig::default();
    let s = spec.search.clone().unwrap_or_default();
    let search = SearchConfig {
        grid_step: s.grid_step.unwrap_or(defaults.grid_step),
        margin: s.margin.unwrap_or(defaults.margin),
        restarts: s.restarts.unwrap_or(defaults.restarts),
        iterations: s.iterations.unwrap_or(defaults.iterations),
        seed: run.subseed(),
    };
    let improvement = pareto_improve_search(&e, &a, &search)?;
    checks.push(CheckSummary::single(
        "pareto_efficiency",
        improvement.is_none(),
        search.margin,
    ));
    results.insert(
        "improvement".into(),
        match &improvement {
            Some(imp) => to_value(imp),
            None => json!("none found in budget"),
        },
    );

    if full && a.bundles.iter().all(|f| f[0] > 0.0) {
        let h = spec.fd_step.unwrap_or(DEFAULT_FD_STEP);
        let belief_tol = spec.belief_tolerance.unwrap_or(DEFAULT_BELIEF_TOL);
        let mut supporting = Vec::new();
        let mut unavailable = None;
        for (agent, f) in e.agents().iter().zip(&a.bundles) {
            match supporting_probabilities_at_certainty(agent.utility.as_ref(), e.states(), f[0], h)
            {
                Ok(q) => supporting.push(q),
                Err(err) => {
                    unavailable = Some(format!("{}: {err}", agent.name));
                    break;
                }
            }
        }
        let shared = match unavailable {
            Some(reason) => json!({ "unavailable": reason }),
            None => {
                let intersect = supporting.iter().all(|q| {
                    q.iter()
                        .zip(supporting[0].iter())
                        .all(|(x, y)| (x - y).abs() <= belief_tol)
                });
                json!({
                    "beliefs": supporting,
                    "intersect": intersect,
                    "predicted_efficient": intersect,
                    "precondition_failure": intersect && improvement.is_some(),
                })
            }
        };
        results.insert("shared_beliefs".into(), shared);
    }

    if let Some(eq) = &spec.equilibrium {
        let cfg = RiskSampleConfig {
            samples: eq.samples,
            seed: run.subseed(),
            tolerance: run.tol,
            bound: e.aggregate(),
        };
        let r = equilibrium_with_transfers_check(&e, &a, &eq.prices, &eq.transfers, &cfg)?;
        checks.push(CheckSummary::from_report(r.check.clone(), &r));
    }
    Ok((checks, Value::Object(results)))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproRow {
    pub quantity: String,
    pub computed: f64,
    pub published: f64,
    pub abs_error: f64,
    pub tolerance: f64,
}

impl ReproRow {
    fn new(quantity: &str, computed: f64, published: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.to_owned(),
            computed,
            published,
            abs_error: (computed - published).abs(),
            tolerance,
        }
    }

    fn ok(&self) -> bool {
        self.abs_error <= self.tolerance
    }
}

/// Every published number the library can recompute.
pub fn repro_rows() -> Result<Vec<ReproRow>> {
    let v = betting_model();
    let half = betting_status_quo().bundles[0].clone();
    let bet = Act::from([0.4, 0.6]);
    let other = Act::from([0.6, 0.4]);
    let h_half = v.components(&half)?;
    let h_bet = v.components(&bet)?;
    let mut rows = Vec::new();
    for (i, published) in [0.4, 0.5, 0.4].into_iter().enumerate() {
        rows.push(ReproRow::new(
            &format!("H{}(1/2,1/2)", i + 1),
            h_half[i],
            published,
            PUBLISHED_TOL,
        ));
    }
    for (i, published) in [43.0 / 90.0, 0.512, 29.0 / 90.0].into_iter().enumerate() {
        rows.push(ReproRow::new(
            &format!("H{}(0.4,0.6)", i + 1),
            h_bet[i],
            published,
            PUBLISHED_TOL,
        ));
    }
    rows.push(ReproRow::new(
        "V1(0.4,0.6)",
        v.apply(&bet)?,
        0.512,
        PUBLISHED_TOL,
    ));
    rows.push(ReproRow::new(
        "V2(0.6,0.4)",
        v.apply(&other)?,
        0.512,
        PUBLISHED_TOL,
    ));
    rows.push(ReproRow::new(
        "V(1/2,1/2)",
        v.apply(&half)?,
        0.5,
        PUBLISHED_TOL,
    ));
    let ara = coefficient(
        &AmbiguityFunction::Sqrt,
        CoefficientKind::Ara,
        2.0,
        CoefficientMethod::Analytic,
    )?;
    rows.push(ReproRow::new("ara(sqrt, 2)", ara, 0.25, COEFFICIENT_TOL));
    let rra = coefficient(
        &AmbiguityFunction::SqrtPlusLinear,
        CoefficientKind::Rra,
        1.0,
        CoefficientMethod::Analytic,
    )?;
    rows.push(ReproRow::new(
        "rra(sqrt_plus_linear, 1)",
        rra,
        1.0 / 6.0,
        COEFFICIENT_TOL,
    ));
    Ok(rows)
}

fn repro(run: &mut Run) -> Result<Outcome> {
    let rows = repro_rows()?;
    if let Some(f) = run.csv_file("repro.csv")? {
        let mut w = csv::Writer::from_writer(f);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let failing = rows.iter().filter(|r| !r.ok()).count();
    let max_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let check = CheckSummary {
        name: "published_values".into(),
        verdict: if failing == 0 {
            ambiguity_core::Verdict::Consistent
        } else {
            ambiguity_core::Verdict::Violated
        },
        samples_run: rows.len(),
        violations: failing,
        tolerance: PUBLISHED_TOL,
        witnesses: Vec::new(),
    };
    Ok((
        vec![check],
        json!({ "rows": rows, "max_abs_error": max_error }),
    ))
}

/// Fixed-width table of the reproduction rows.
pub fn repro_table(rows: &[ReproRow]) -> String {
    let mut s = format!(
        "{:<26} {:>12} {:>12} {:>10}\n",
        "quantity", "computed", "published", "abs error"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<26} {:>12.6} {:>12.6} {:>10.1e}{}\n",
            r.quantity,
            r.computed,
            r.published,
            r.abs_error,
            if r.ok() { "" } else { "  FAIL" }
        ));
    }
    s
}
