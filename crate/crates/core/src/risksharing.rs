//! Exchange economies with one good and no aggregate uncertainty:
//! feasibility, Pareto-improvement search, supporting probabilities at
//! certainty and the checks built on them.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::primitives::{dot, Act, Belief, Functional};
use crate::report::{CheckReport, Witness};
use crate::sampling::{par_map, rng_from_seed};

/// Componentwise tolerance of `sum_i f_i = aggregate`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Tolerance on constancy of a full-insurance bundle.
pub const FULL_INSURANCE_TOL: f64 = 1e-12;

/// Tolerance on endowments summing to a constant vector.
pub const ENDOWMENT_TOL: f64 = 1e-12;

/// Default finite-difference step for gradients at certainty.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// One-sided slopes further apart than this (relative) mark a kink.
const KINK_TOL: f64 = 1e-3;

/// Gradient components below `-NICE_TOL` fail niceness; smaller negatives
/// are rounding and are clamped to zero.
const NICE_TOL: f64 = 1e-9;

#[derive(Clone)]
pub struct Agent {
    pub name: String,
    pub utility: Arc<dyn Functional>,
}

impl Agent {
    pub fn new(name: impl Into<String>, utility: Arc<dyn Functional>) -> Self {
        Self {
            name: name.into(),
            utility,
        }
    }

    fn value(&self, bundle: &Act) -> Result<f64> {
        self.utility.apply(bundle)
    }
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Agent")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct Economy {
    agents: Vec<Agent>,
    endowments: Vec<Act>,
    aggregate: f64,
}

impl Economy {
    /// Endowments must be nonnegative and sum to a constant vector.
    pub fn new(agents: Vec<Agent>, endowments: Vec<Act>) -> Result<Self> {
        if agents.is_empty() || agents.len() != endowments.len() {
            return Err(Error::InvalidEconomy(format!(
                "{} agents but {} endowments",
                agents.len(),
                endowments.len()
            )));
        }
        let n = endowments[0].len();
        if n == 0 {
            return Err(Error::InvalidEconomy(
                "endowments must cover at least one state".into(),
            ));
        }
        for w in &endowments {
            check_dim(n, w.len())?;
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidEconomy(
                    "endowments must be finite and nonnegative".into(),
                ));
            }
        }
        let totals = column_sums(&endowments, n);
        let aggregate = totals[0];
        if totals.iter().any(|t| (t - aggregate).abs() > ENDOWMENT_TOL) {
            return Err(Error::InvalidEconomy(format!(
                "aggregate endowment {totals:?} is not constant across states"
            )));
        }
        Ok(Self {
            agents,
            endowments,
            aggregate,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn endowments(&self) -> &[Act] {
        &self.endowments
    }

    /// The constant aggregate endowment per state.
    pub fn aggregate(&self) -> f64 {
        self.aggregate
    }

    pub fn states(&self) -> usize {
        self.endowments[0].len()
    }

    /// The status quo in which every agent consumes their endowment.
    pub fn endowment_allocation(&self) -> Allocation {
        Allocation::new(self.endowments.clone())
    }

    fn utilities(&self, a: &Allocation) -> Result<Vec<f64>> {
        self.agents
            .iter()
            .zip(&a.bundles)
            .map(|(agent, f)| agent.value(f))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub bundles: Vec<Act>,
}

impl Allocation {
    pub fn new(bundles: Vec<Act>) -> Self {
        Self { bundles }
    }
}

fn column_sums(acts: &[Act], n: usize) -> Vec<f64> {
    let mut totals = vec![0.0; n];
    for a in acts {
        for (t, v) in totals.iter_mut().zip(a.iter()) {
            *t += v;
        }
    }
    totals
}

/// Nonnegative bundles summing to the aggregate in every state.
pub fn is_feasible(e: &Economy, a: &Allocation) -> Result<bool> {
    if a.bundles.len() != e.agents.len() {
        return Err(Error::DimensionMismatch {
            expected: e.agents.len(),
            found: a.bundles.len(),
        });
    }
    let n = e.states();
    for f in &a.bundles {
        check_dim(n, f.len())?;
    }
    if a.bundles.iter().any(|f| f.iter().any(|&v| !(v >= 0.0))) {
        return Ok(false);
    }
    Ok(column_sums(&a.bundles, n)
        .iter()
        .all(|t| (t - e.aggregate).abs() <= FEASIBILITY_TOL))
}

/// Every bundle is constant across states.
pub fn is_full_insurance(a: &Allocation) -> bool {
    a.bundles.iter().all(|f| f.is_constant(FULL_INSURANCE_TOL))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Grid step as a fraction of the aggregate (two agents, two states).
    pub grid_step: f64,
    /// Gain an agent needs to count as strictly better off.
    pub margin: f64,
    /// Random restarts for larger economies.
    pub restarts: usize,
    /// Proposed transfers per restart.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            margin: 1e-6,
            restarts: 16,
            iterations: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub allocation: Allocation,
    pub utilities: Vec<f64>,
    pub gains: Vec<f64>,
}

/// Search objective: the worst gain first, then the total gain. Bundles a
/// utility rejects as out of domain score `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    min_gain: f64,
    max_gain: f64,
    total_gain: f64,
}

impl Score {
    const INFEASIBLE: Score = Score {
        min_gain: f64::NEG_INFINITY,
        max_gain: f64::NEG_INFINITY,
        total_gain: f64::NEG_INFINITY,
    };

    fn beats(&self, other: &Score) -> bool {
        self.min_gain > other.min_gain
            || (self.min_gain == other.min_gain && self.total_gain > other.total_gain)
    }
}

struct Scorer<'a> {
    economy: &'a Economy,
    base: Vec<f64>,
}

impl Scorer<'_> {
    fn gains(&self, bundles: &[Act]) -> Result<Option<Vec<f64>>> {
        let mut gains = Vec::with_capacity(bundles.len());
        for ((agent, f), b) in self.economy.agents.iter().zip(bundles).zip(&self.base) {
            match agent.value(f) {
                Ok(v) => gains.push(v - b),
                Err(Error::OutOfDomain { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(gains))
    }

    fn score(&self, bundles: &[Act]) -> Result<Score> {
        Ok(match self.gains(bundles)? {
            None => Score::INFEASIBLE,
            Some(g) => Score {
                min_gain: g.iter().copied().fold(f64::INFINITY, f64::min),
                max_gain: g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                total_gain: g.iter().sum(),
            },
        })
    }
}

/// Looks for a feasible allocation that makes every agent weakly better off
/// and one agent better off by more than `cfg.margin`. `None` means nothing
/// was found within the budget, which is evidence of efficiency, not proof.
pub fn pareto_improve_search(
    e: &Economy,
    a: &Allocation,
    cfg: &SearchConfig,
) -> Result<Option<Improvement>> {
    if !is_feasible(e, a)? {
        return Err(Error::InvalidEconomy(
            "starting allocation is not feasible".into(),
        ));
    }
    if !(cfg.grid_step > 0.0 && cfg.grid_step <= 0.5) || !(cfg.margin > 0.0) {
        return Err(Error::InvalidConfig(
            "grid_step must lie in (0, 1/2] and margin be positive".into(),
        ));
    }
    let scorer = Scorer {
        economy: e,
        base: e.utilities(a)?,
    };
    let best = if e.agents.len() == 2 && e.states() == 2 {
        two_by_two_search(&scorer, cfg)?
    } else {
        restart_search(&scorer, a, cfg)?
    };
    let Some(bundles) = best else {
        return Ok(None);
    };
    // independent re-verification before anything is returned
    let candidate = Allocation::new(bundles);
    if !is_feasible(e, &candidate)? {
        return Ok(None);
    }
    let utilities = e.utilities(&candidate)?;
    let gains: Vec<f64> = utilities
        .iter()
        .zip(&scorer.base)
        .map(|(u, b)| u - b)
        .collect();
    let dominates = gains.iter().all(|&g| g >= 0.0) && gains.iter().any(|&g| g > cfg.margin);
    Ok(dominates.then_some(Improvement {
        allocation: candidate,
        utilities,
        gains,
    }))
}

fn dominating(score: &Score, margin: f64) -> bool {
    score.min_gain >= 0.0 && score.max_gain > margin
}

/// Exhaustive grid over agent 1's bundle, then coordinate refinement.
fn two_by_two_search(scorer: &Scorer<'_>, cfg: &SearchConfig) -> Result<Option<Vec<Act>>> {
    let total = scorer.economy.aggregate;
    let steps = (1.0 / cfg.grid_step).round() as usize;
    let split = |x: f64, y: f64| {
        let (x, y) = (x.clamp(0.0, total), y.clamp(0.0, total));
        vec![Act::from([x, y]), Act::from([total - x, total - y])]
    };
    let points: Vec<(f64, f64)> = (0..=steps)
        .flat_map(|i| (0..=steps).map(move |j| (i, j)))
        .map(|(i, j)| {
            (
                total * i as f64 / steps as f64,
                total * j as f64 / steps as f64,
            )
        })
        .collect();
    let scores = par_map(&points, |&(x, y)| scorer.score(&split(x, y)))?;
    let mut best: Option<(usize, Score)> = None;
    for (idx, s) in scores.iter().enumerate() {
        if dominating(s, cfg.margin) && best.is_none_or(|(_, b)| s.beats(&b)) {
            best = Some((idx, *s));
        }
    }
    let Some((idx, mut score)) = best else {
        return Ok(None);
    };
    let (mut x, mut y) = points[idx];
    let mut step = total * cfg.grid_step;
    while step > 1e-9 * total.max(1.0) {
        let mut moved = false;
        for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (nx, ny) = (x + dx, y + dy);
            if !(0.0..=total).contains(&nx) || !(0.0..=total).contains(&ny) {
                continue;
            }
            let s = scorer.score(&split(nx, ny))?;
            if s.beats(&score) {
                (x, y, score) = (nx, ny, s);
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(Some(split(x, y)))
}

/// Random pairwise transfers from the status quo, restarted in parallel.
fn restart_search(
    scorer: &Scorer<'_>,
    a: &Allocation,
    cfg: &SearchConfig,
) -> Result<Option<Vec<Act>>> {
    let n_agents = scorer.economy.agents.len();
    if n_agents < 2 {
        return Ok(None);
    }
    let n = scorer.economy.states();
    let total = scorer.economy.aggregate;
    let restarts: Vec<u64> = (0..cfg.restarts.max(1) as u64).collect();
    let results = par_map(&restarts, |&r| {
        let mut rng = rng_from_seed(cfg.seed.wrapping_add(r));
        let mut bundles = a.bundles.clone();
        let mut score = scorer.score(&bundles)?;
        let mut scale = 0.25 * total.max(f64::MIN_POSITIVE);
        let mut stalls = 0;
        for _ in 0..cfg.iterations {
            let i = rng.gen_range(0..n_agents);
            let j = (i + rng.gen_range(1..n_agents)) % n_agents;
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
            let mut trial = bundles.clone();
            let fi: Vec<f64> = trial[i].iter().zip(&z).map(|(v, d)| v + d).collect();
            let fj: Vec<f64> = trial[j].iter().zip(&z).map(|(v, d)| v - d).collect();
            if fi.iter().chain(&fj).any(|&v| v < 0.0) {
                continue;
            }
            trial[i] = Act::from(fi);
            trial[j] = Act::from(fj);
            let s = scorer.score(&trial)?;
            if s.beats(&score) {
                bundles = trial;
                score = s;
                stalls = 0;
            } else {
                stalls += 1;
                if stalls >= 50 {
                    scale /= 2.0;
                    stalls = 0;
                }
            }
        }
        Ok((bundles, score))
    })?;
    let mut best: Option<(Vec<Act>, Score)> = None;
    for (bundles, s) in results {
        if dominating(&s, cfg.margin) && best.as_ref().is_none_or(|(_, b)| s.beats(b)) {
            best = Some((bundles, s));
        }
    }
    Ok(best.map(|(b, _)| b))
}

/// Normalized central-difference gradient of `v` at the constant bundle
/// `x` in `n` states, with step `h * max(1, x)`.
///
/// Fails with `NotDifferentiable` when one-sided slopes disagree and with
/// `NotNice` when the gradient has a negative component or vanishes.
pub fn supporting_probabilities_at_certainty<F: Functional + ?Sized>(
    v: &F,
    n: usize,
    x: f64,
    h: f64,
) -> Result<Belief> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "certainty level must be positive, got {x}"
        )));
    }
    if !(h > 0.0) || n == 0 {
        return Err(Error::InvalidConfig(
            "step must be positive and n at least 1".into(),
        ));
    }
    let step = h * x.max(1.0);
    let center = v.apply(&Act::constant(n, x))?;
    let mut grad = Vec::with_capacity(n);
    for s in 0..n {
        let mut up = vec![x; n];
        up[s] += step;
        let mut down = vec![x; n];
        down[s] -= step;
        let vu = v.apply(&Act::from(up))?;
        let vd = v.apply(&Act::from(down))?;
        let central = (vu - vd) / (2.0 * step);
        let forward = (vu - center) / step;
        let backward = (center - vd) / step;
        if (forward - backward).abs() > KINK_TOL * (1.0 + central.abs()) {
            return Err(Error::NotDifferentiable(format!(
                "one-sided slopes {backward} and {forward} differ in state {s}"
            )));
        }
        if central < -NICE_TOL {
            return Err(Error::NotNice(format!(
                "gradient component {central} in state {s}"
            )));
        }
        grad.push(central.max(0.0));
    }
    let sum: f64 = grad.iter().sum();
    if !(sum > NICE_TOL) {
        return Err(Error::NotNice("gradient vanishes at certainty".into()));
    }
    Ok(Belief::from_normalized_unchecked(
        grad.into_iter().map(|g| g / sum).collect(),
    ))
}

/// Sampling budget shared by the certainty checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskSampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Bundles are drawn from `[0, bound]^n`.
    pub bound: f64,
}

impl RiskSampleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::InvalidConfig(
                "tolerance and bound must be positive".into(),
            ));
        }
        Ok(())
    }

    fn uniform_bundle<R: Rng>(&self, rng: &mut R, n: usize) -> Act {
        Act::from(
            (0..n)
                .map(|_| rng.gen_range(0.0..=self.bound))
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoconcavityReport {
    pub supporting: Belief,
    pub report: CheckReport,
}

/// Flags bundles `g` with `V(g) >= V(x) - tol` and `q . (g - x) <= tol`,
/// where `q` is the supporting belief at `x`. `probes` are checked before
/// the random samples.
pub fn check_strict_pseudoconcavity_at_certainty<F: Functional + ?Sized>(
    v: &F,
    n: usize,
    x: f64,
    h: f64,
    cfg: &RiskSampleConfig,
    probes: &[Act],
) -> Result<PseudoconcavityReport> {
    cfg.validate()?;
    let q = supporting_probabilities_at_certainty(v, n, x, h)?;
    for p in probes {
        check_dim(n, p.len())?;
    }
    let certain = Act::constant(n, x);
    let vx = v.apply(&certain)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut bundles: Vec<Act> = probes.to_vec();
    while bundles.len() < probes.len() + cfg.samples {
        let g = cfg.uniform_bundle(&mut rng, n);
        if g != certain {
            bundles.push(g);
        }
    }
    let tol = cfg.tolerance;
    let outcomes = par_map(&bundles, |g| {
        let vg = v.apply(g)?;
        let slope: f64 = q.iter().zip(g.iter()).map(|(qs, gs)| qs * (gs - x)).sum();
        let flagged = vg >= vx - tol && slope <= tol;
        Ok(flagged.then(|| {
            Witness::new(slope, 0.0)
                .with("g", g)
                .with_scalar("value_g", vg)
                .with_scalar("value_x", vx)
        }))
    })?;
    let mut report = CheckReport::new("strict_pseudoconcavity_at_certainty", tol);
    for w in outcomes {
        report.record(w);
    }
    Ok(PseudoconcavityReport {
        supporting: q,
        report: report.finish(),
    })
}

/// `V(alpha f + (1 - alpha) x) >= alpha V(f) + (1 - alpha) x` on sampled
/// `(f, x, alpha)` and on the given probe triples.
pub fn concavity_at_certainty_check<F: Functional + ?Sized>(
    v: &F,
    n: usize,
    cfg: &RiskSampleConfig,
    probes: &[(Act, f64, f64)],
) -> Result<CheckReport> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut triples: Vec<(Act, f64, f64)> = probes.to_vec();
    for _ in 0..cfg.samples {
        let f = cfg.uniform_bundle(&mut rng, n);
        let x = rng.gen_range(0.0..=cfg.bound);
        let alpha = rng.gen_range(0.0..1.0);
        triples.push((f, x, alpha));
    }
    let tol = cfg.tolerance;
    let outcomes = par_map(&triples, |(f, x, alpha)| {
        check_dim(n, f.len())?;
        let mixed = v.apply(&f.mix(&Act::constant(n, *x), *alpha))?;
        let chord = alpha * v.apply(f)? + (1.0 - alpha) * x;
        Ok((chord - mixed > tol).then(|| {
            Witness::new(mixed, chord)
                .with("f", f)
                .with_scalar("x", *x)
                .with_scalar("alpha", *alpha)
        }))
    })?;
    let mut report = CheckReport::new("concavity_at_certainty", tol);
    for w in outcomes {
        report.record(w);
    }
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharedBeliefsReport {
    pub beliefs: Vec<Belief>,
    /// Supporting sets are singletons, so they meet iff all beliefs agree.
    pub intersect: bool,
    /// What the equivalence between shared beliefs and efficiency predicts.
    pub predicted_efficient: bool,
    pub improvement: Option<Improvement>,
    /// Beliefs are shared yet a Pareto improvement exists, so the
    /// equivalence's preconditions cannot all hold.
    pub precondition_failure: bool,
}

/// Compares the agents' supporting beliefs at a full-insurance allocation
/// and, when `search` is given, looks for a Pareto improvement.
pub fn shared_beliefs_test(
    e: &Economy,
    a: &Allocation,
    tol: f64,
    h: f64,
    search: Option<&SearchConfig>,
) -> Result<SharedBeliefsReport> {
    if !is_feasible(e, a)? || !is_full_insurance(a) {
        return Err(Error::InvalidEconomy(
            "shared-beliefs test needs a feasible full-insurance allocation".into(),
        ));
    }
    let n = e.states();
    let beliefs = e
        .agents
        .iter()
        .zip(&a.bundles)
        .map(|(agent, f)| supporting_probabilities_at_certainty(agent.utility.as_ref(), n, f[0], h))
        .collect::<Result<Vec<_>>>()?;
    let intersect = beliefs.iter().all(|b| {
        b.iter()
            .zip(beliefs[0].iter())
            .all(|(x, y)| (x - y).abs() <= tol)
    });
    let improvement = match search {
        Some(cfg) => pareto_improve_search(e, a, cfg)?,
        None => None,
    };
    Ok(SharedBeliefsReport {
        precondition_failure: intersect && improvement.is_some(),
        beliefs,
        intersect,
        predicted_efficient: intersect,
        improvement,
    })
}

/// Checks that each bundle is affordable at `prices` after `transfers` and
/// that no sampled affordable bundle is strictly preferred.
pub fn equilibrium_with_transfers_check(
    e: &Economy,
    a: &Allocation,
    prices: &[f64],
    transfers: &[f64],
    cfg: &RiskSampleConfig,
) -> Result<CheckReport> {
    cfg.validate()?;
    let n = e.states();
    check_dim(e.agents.len(), transfers.len())?;
    check_dim(n, prices.len())?;
    let imbalance: f64 = transfers.iter().sum();
    if imbalance.abs() > FEASIBILITY_TOL {
        return Err(Error::UnbalancedTransfers(imbalance));
    }
    if prices.iter().any(|p| !(p > &0.0 && p.is_finite())) {
        return Err(Error::InvalidEconomy("prices must be positive".into()));
    }
    if !is_feasible(e, a)? {
        return Err(Error::InvalidEconomy("allocation is not feasible".into()));
    }
    let tol = cfg.tolerance;
    let norm2 = dot(prices, prices);
    let mut rng = rng_from_seed(cfg.seed);
    let mut cases: Vec<(usize, Act, f64)> = Vec::new();
    for (i, (f, w)) in a.bundles.iter().zip(&e.endowments).enumerate() {
        let budget = dot(prices, w) + transfers[i];
        let cost = dot(prices, f);
        if cost > budget + tol {
            return Err(Error::BudgetViolated {
                agent: i,
                cost,
                budget,
            });
        }
        let radius = 0.1 * (1.0 + f.max());
        for k in 0..cfg.samples {
            let g: Vec<f64> = if k % 2 == 0 {
                // a point of the budget line through random simplex weights
                let raw: Vec<f64> = (0..n).map(|_| -open_log(&mut rng)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter()
                    .zip(prices)
                    .map(|(r, p)| budget.max(0.0) * r / total / p)
                    .collect()
            } else {
                let mut g: Vec<f64> = f
                    .iter()
                    .map(|v| v + rng.gen_range(-radius..=radius))
                    .collect();
                let shift = (budget - dot(prices, &g)) / norm2;
                for (gs, p) in g.iter_mut().zip(prices) {
                    *gs = (*gs + shift * p).max(0.0);
                }
                g
            };
            cases.push((i, Act::from(g), budget));
        }
    }
    let held = e.utilities(a)?;
    let outcomes = par_map(&cases, |(i, g, budget)| {
        match e.agents[*i].value(g) {
            Ok(vg) => Ok(Some((vg > held[*i] + tol).then(|| {
                Witness::new(held[*i], vg)
                    .with_scalar("agent", *i as f64)
                    .with("g", g)
                    .with_scalar("budget", *budget)
            }))),
            // bundles outside an agent's utility domain are not choices
            Err(Error::OutOfDomain { .. }) => Ok(None),
            Err(err) => Err(err),
        }
    })?;
    let mut report = CheckReport::new("equilibrium_with_transfers", tol);
    for w in outcomes.into_iter().flatten() {
        report.record(w);
    }
    Ok(report.finish())
}

/// `ln U` for `U` uniform on `(0, 1]`.
fn open_log<R: Rng>(rng: &mut R) -> f64 {
    crate::sampling::open_unit(rng).ln()
}
