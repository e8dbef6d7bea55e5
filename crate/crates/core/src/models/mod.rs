//! Concrete certainty-equivalent functionals `I : B0(K) -> R`.
//!
//! Every model here is monotone and normalized (`I(k) = k` on constants);
//! [`evaluate`] is the single entry point that checks the act against `K` and
//! the model's own utility domain before dispatching.

mod aggregator;
mod phi;

pub use aggregator::{Aggregator, CustomAggregator};
pub use phi::{AmbiguityFunction, CustomPhi};

use crate::error::{check_dim, Error, Result};
use crate::optimize::minimize_over_support;
use crate::primitives::{dot, relative_entropy_raw, Act, Belief, Functional, UtilityInterval};

pub(crate) use aggregator::log_sum_exp;

/// Tolerance on mixing weights summing to one.
const MIX_SUM_TOL: f64 = 1e-12;

/// `max_H H(phi)` over a nonempty list of aggregators.
#[derive(Debug, Clone)]
pub struct DualSelfMax {
    aggregators: Vec<Aggregator>,
}

impl DualSelfMax {
    pub fn new(aggregators: Vec<Aggregator>) -> Result<Self> {
        if aggregators.is_empty() {
            return Err(Error::InvalidModel(
                "dual-self max needs at least one aggregator".into(),
            ));
        }
        let dims: Vec<usize> = aggregators
            .iter()
            .filter_map(Aggregator::dimension)
            .collect();
        if let Some(&n) = dims.first() {
            for &d in &dims {
                check_dim(n, d)?;
            }
        }
        Ok(Self { aggregators })
    }

    pub fn aggregators(&self) -> &[Aggregator] {
        &self.aggregators
    }

    /// Value of every aggregator at `act`, in order.
    pub fn components(&self, act: &Act) -> Result<Vec<f64>> {
        self.aggregators.iter().map(|h| h.eval(act)).collect()
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        Ok(self
            .components(act)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Multiplier preferences with an outside option:
/// `max_{q in C_f} min_p { <p, phi> + lambda R(p || q) }` with
/// `C_f = { q in Q : <q, phi> >= theta } ∪ { uniform }`.
#[derive(Debug, Clone)]
pub struct MultiplierOO {
    q_set: Vec<Belief>,
    theta: f64,
    lambda: f64,
}

impl MultiplierOO {
    pub fn new(q_set: Vec<Belief>, theta: f64, lambda: f64) -> Result<Self> {
        check_menu_params(&q_set, theta)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            q_set,
            theta,
            lambda,
        })
    }

    pub fn q_set(&self) -> &[Belief] {
        &self.q_set
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn menu(&self, act: &Act) -> Result<Vec<Belief>> {
        act_menu(&self.q_set, self.theta, act)
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        check_nonnegative(act)?;
        let menu = self.menu(act)?;
        Ok(menu
            .iter()
            .map(|q| multiplier_inner_min(q, act, self.lambda))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Entropic-confidence preferences with an outside option:
/// `max_{q in D_f} min_{p << q} <p, phi> * exp(R(p || q))`.
#[derive(Debug, Clone)]
pub struct ConfidenceOO {
    q_set: Vec<Belief>,
    theta: f64,
}

impl ConfidenceOO {
    pub fn new(q_set: Vec<Belief>, theta: f64) -> Result<Self> {
        check_menu_params(&q_set, theta)?;
        Ok(Self { q_set, theta })
    }

    pub fn q_set(&self) -> &[Belief] {
        &self.q_set
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn menu(&self, act: &Act) -> Result<Vec<Belief>> {
        act_menu(&self.q_set, self.theta, act)
    }

    pub fn eval(&self, act: &Act, tol: f64) -> Result<f64> {
        check_nonnegative(act)?;
        let mut best = f64::NEG_INFINITY;
        for q in self.menu(act)? {
            best = best.max(confidence_inner_min(&q, act, tol)?);
        }
        Ok(best)
    }
}

/// Second-order expected utility with risk mitigation:
/// `max_{q in Q} phi^{-1}( sum_s q_s phi(act_s) )`.
#[derive(Debug, Clone)]
pub struct SecondOrderRM {
    q_set: Vec<Belief>,
    phi: AmbiguityFunction,
}

impl SecondOrderRM {
    pub fn new(q_set: Vec<Belief>, phi: AmbiguityFunction) -> Result<Self> {
        if q_set.is_empty() {
            return Err(Error::InvalidModel(
                "second-order model needs at least one belief".into(),
            ));
        }
        check_same_dim(&q_set)?;
        Ok(Self { q_set, phi })
    }

    pub fn q_set(&self) -> &[Belief] {
        &self.q_set
    }

    pub fn phi(&self) -> &AmbiguityFunction {
        &self.phi
    }

    /// `phi^{-1}(E_q phi(act))` for a single benchmark `q`.
    pub fn certainty_equivalent(&self, q: &Belief, act: &Act) -> f64 {
        let mean: f64 = q
            .iter()
            .zip(act.iter())
            .filter(|(&qs, _)| qs > 0.0)
            .map(|(&qs, &v)| qs * self.phi.value(v))
            .sum();
        self.phi.inverse(mean)
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        check_dim(self.q_set[0].len(), act.len())?;
        self.phi.domain().check_act(act)?;
        Ok(self
            .q_set
            .iter()
            .map(|q| self.certainty_equivalent(q, act))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Smooth ambiguity certainty equivalent
/// `phi^{-1}( sum_j mu_j phi(<p_j, act>) )` on utilities in `[1, inf)`.
#[derive(Debug, Clone)]
pub struct Smooth {
    priors: Vec<Belief>,
    mu: Vec<f64>,
    phi: AmbiguityFunction,
}

impl Smooth {
    pub fn new(priors: Vec<Belief>, mu: Vec<f64>, phi: AmbiguityFunction) -> Result<Self> {
        if priors.is_empty() || priors.len() != mu.len() {
            return Err(Error::InvalidModel(
                "smooth model needs one mixing weight per prior and at least one prior".into(),
            ));
        }
        check_same_dim(&priors)?;
        if mu.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidModel(
                "mixing weights must be nonnegative".into(),
            ));
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > MIX_SUM_TOL {
            return Err(Error::InvalidModel(format!("mixing weights sum to {sum}")));
        }
        Ok(Self { priors, mu, phi })
    }

    pub fn priors(&self) -> &[Belief] {
        &self.priors
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn phi(&self) -> &AmbiguityFunction {
        &self.phi
    }

    pub fn domain(&self) -> UtilityInterval {
        let d = self.phi.domain();
        if d.lo >= 1.0 {
            d
        } else {
            UtilityInterval {
                lo: 1.0,
                hi: d.hi,
                lo_closed: true,
                hi_closed: d.hi_closed,
            }
        }
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        check_dim(self.priors[0].len(), act.len())?;
        self.domain().check_act(act)?;
        let mean: f64 = self
            .priors
            .iter()
            .zip(&self.mu)
            .filter(|(_, &m)| m > 0.0)
            .map(|(p, &m)| m * self.phi.value(dot(act, p)))
            .sum();
        Ok(self.phi.inverse(mean))
    }
}

/// Finite variational menu: `min_j { <p_j, act> + c_j }`.
#[derive(Debug, Clone)]
pub struct VariationalMenu {
    entries: Vec<(Belief, f64)>,
}

impl VariationalMenu {
    /// Costs must be nonnegative (or `+inf`) with a zero-cost entry, which is
    /// what keeps the functional normalized.
    pub fn new(entries: Vec<(Belief, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidModel(
                "variational menu must be nonempty".into(),
            ));
        }
        let n = entries[0].0.len();
        for (p, c) in &entries {
            check_dim(n, p.len())?;
            if c.is_nan() || *c < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "menu cost must be >= 0, got {c}"
                )));
            }
        }
        if !entries.iter().any(|(_, c)| *c == 0.0) {
            return Err(Error::InvalidModel(
                "variational menu needs a zero-cost entry to stay normalized".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Zero-cost menu over `beliefs`: the maxmin functional `min_p <p, act>`.
    pub fn maxmin(beliefs: Vec<Belief>) -> Result<Self> {
        Self::new(beliefs.into_iter().map(|p| (p, 0.0)).collect())
    }

    pub fn entries(&self) -> &[(Belief, f64)] {
        &self.entries
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        check_dim(self.entries[0].0.len(), act.len())?;
        Ok(self
            .entries
            .iter()
            .filter(|(_, c)| c.is_finite())
            .map(|(p, c)| dot(act, p) + c)
            .fold(f64::INFINITY, f64::min))
    }
}

#[derive(Debug, Clone)]
pub enum PreferenceModel {
    DualSelfMax(DualSelfMax),
    MultiplierOO(MultiplierOO),
    ConfidenceOO(ConfidenceOO),
    SecondOrderRM(SecondOrderRM),
    Smooth(Smooth),
    VariationalMenu(VariationalMenu),
}

impl PreferenceModel {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DualSelfMax(_) => "dual_self_max",
            Self::MultiplierOO(_) => "multiplier_oo",
            Self::ConfidenceOO(_) => "confidence_oo",
            Self::SecondOrderRM(_) => "second_order_rm",
            Self::Smooth(_) => "smooth",
            Self::VariationalMenu(_) => "variational_menu",
        }
    }

    /// Utility levels the model is defined on, when it restricts them.
    pub fn domain(&self) -> Option<UtilityInterval> {
        match self {
            Self::MultiplierOO(_) | Self::ConfidenceOO(_) => Some(UtilityInterval::nonnegative()),
            Self::SecondOrderRM(m) => Some(m.phi.domain()),
            Self::Smooth(m) => Some(m.domain()),
            Self::DualSelfMax(_) | Self::VariationalMenu(_) => None,
        }
    }

    /// Number of states, when the model's beliefs fix it.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::DualSelfMax(m) => m.aggregators.iter().find_map(Aggregator::dimension),
            Self::MultiplierOO(m) => m.q_set.first().map(|b| b.len()),
            Self::ConfidenceOO(m) => m.q_set.first().map(|b| b.len()),
            Self::SecondOrderRM(m) => Some(m.q_set[0].len()),
            Self::Smooth(m) => Some(m.priors[0].len()),
            Self::VariationalMenu(m) => Some(m.entries[0].0.len()),
        }
    }

    /// Ties the model to a utility interval and tolerance as a [`Functional`].
    pub fn bind(self, k: UtilityInterval, tol: f64) -> BoundModel {
        BoundModel {
            model: self,
            k,
            tol,
        }
    }
}

impl From<DualSelfMax> for PreferenceModel {
    fn from(m: DualSelfMax) -> Self {
        Self::DualSelfMax(m)
    }
}

impl From<MultiplierOO> for PreferenceModel {
    fn from(m: MultiplierOO) -> Self {
        Self::MultiplierOO(m)
    }
}

impl From<ConfidenceOO> for PreferenceModel {
    fn from(m: ConfidenceOO) -> Self {
        Self::ConfidenceOO(m)
    }
}

impl From<SecondOrderRM> for PreferenceModel {
    fn from(m: SecondOrderRM) -> Self {
        Self::SecondOrderRM(m)
    }
}

impl From<Smooth> for PreferenceModel {
    fn from(m: Smooth) -> Self {
        Self::Smooth(m)
    }
}

impl From<VariationalMenu> for PreferenceModel {
    fn from(m: VariationalMenu) -> Self {
        Self::VariationalMenu(m)
    }
}

/// Evaluates `model` at `act`, checking the act against `k` and `k` against
/// the model's domain.
pub fn evaluate(model: &PreferenceModel, act: &Act, k: &UtilityInterval, tol: f64) -> Result<f64> {
    if let Some(dom) = model.domain() {
        if !k.is_subset_of(&dom) {
            return Err(Error::DomainIncompatible {
                model: format!("{} on {dom}", model.kind()),
                interval: k.to_string(),
            });
        }
    }
    k.check_act(act)?;
    match model {
        PreferenceModel::DualSelfMax(m) => m.eval(act),
        PreferenceModel::MultiplierOO(m) => multiplier_oo_eval(m, act, tol),
        PreferenceModel::ConfidenceOO(m) => confidence_oo_eval(m, act, tol),
        PreferenceModel::SecondOrderRM(m) => second_order_rm_eval(m, act, tol),
        PreferenceModel::Smooth(m) => smooth_eval(m, act, tol),
        PreferenceModel::VariationalMenu(m) => variational_menu_eval(m, act),
    }
}

pub fn multiplier_oo_eval(m: &MultiplierOO, act: &Act, _tol: f64) -> Result<f64> {
    m.eval(act)
}

pub fn confidence_oo_eval(m: &ConfidenceOO, act: &Act, tol: f64) -> Result<f64> {
    m.eval(act, tol)
}

pub fn second_order_rm_eval(m: &SecondOrderRM, act: &Act, _tol: f64) -> Result<f64> {
    m.eval(act)
}

pub fn smooth_eval(m: &Smooth, act: &Act, _tol: f64) -> Result<f64> {
    m.eval(act)
}

pub fn variational_menu_eval(m: &VariationalMenu, act: &Act) -> Result<f64> {
    m.eval(act)
}

/// Act-dependent benchmark menu of a multiplier or confidence model.
pub fn build_menu(model: &PreferenceModel, act: &Act) -> Result<Vec<Belief>> {
    match model {
        PreferenceModel::MultiplierOO(m) => m.menu(act),
        PreferenceModel::ConfidenceOO(m) => m.menu(act),
        other => Err(Error::InvalidModel(format!(
            "{} has no act-dependent menu",
            other.kind()
        ))),
    }
}

/// `{ q in Q : <q, act> >= theta } ∪ { uniform }`.
fn act_menu(q_set: &[Belief], theta: f64, act: &Act) -> Result<Vec<Belief>> {
    let mut menu = Vec::with_capacity(q_set.len() + 1);
    for q in q_set {
        check_dim(q.len(), act.len())?;
        if dot(act, q) >= theta {
            menu.push(q.clone());
        }
    }
    menu.push(Belief::uniform(act.len()));
    Ok(menu)
}

/// Gibbs closed form of `min_p { <p, phi> + lambda R(p || q) }`:
/// `-lambda ln sum_s q_s exp(-phi_s / lambda)`.
pub fn multiplier_inner_min(q: &Belief, phi: &[f64], lambda: f64) -> f64 {
    let exponents: Vec<f64> = phi.iter().map(|v| -v / lambda).collect();
    -lambda * log_sum_exp(&exponents, q)
}

/// Same quantity as [`multiplier_inner_min`], found by direct minimization
/// over the beliefs absolutely continuous with respect to `q`.
pub fn multiplier_inner_min_numeric(q: &Belief, phi: &[f64], lambda: f64, tol: f64) -> Result<f64> {
    check_dim(q.len(), phi.len())?;
    let obj = |p: &Belief| dot(phi, p) + lambda * relative_entropy_raw(p, q);
    minimize_over_support(&obj, q.len(), &q.support(), tol).map(|(_, v)| v)
}

/// `min_{p << q} <p, phi> * exp(R(p || q))`, for `phi >= 0`.
pub fn confidence_inner_min(q: &Belief, phi: &[f64], tol: f64) -> Result<f64> {
    check_dim(q.len(), phi.len())?;
    let support = q.support();
    // a zero payoff on the support is reached by a point mass at finite entropy
    if support.iter().any(|&s| phi[s] == 0.0) {
        return Ok(0.0);
    }
    let obj = |p: &Belief| {
        let r = relative_entropy_raw(p, q);
        if r.is_infinite() {
            f64::INFINITY
        } else {
            dot(phi, p) * r.exp()
        }
    };
    minimize_over_support(&obj, q.len(), &support, tol).map(|(_, v)| v)
}

/// A model bound to `K` and a tolerance, usable wherever a [`Functional`] is.
#[derive(Debug, Clone)]
pub struct BoundModel {
    pub model: PreferenceModel,
    pub k: UtilityInterval,
    pub tol: f64,
}

impl Functional for BoundModel {
    fn apply(&self, act: &Act) -> Result<f64> {
        evaluate(&self.model, act, &self.k, self.tol)
    }
}

macro_rules! functional_via_eval {
    ($($t:ty),*) => {$(
        impl Functional for $t {
            fn apply(&self, act: &Act) -> Result<f64> {
                self.eval(act)
            }
        }
    )*};
}

functional_via_eval!(
    DualSelfMax,
    MultiplierOO,
    SecondOrderRM,
    Smooth,
    VariationalMenu
);

fn check_menu_params(q_set: &[Belief], theta: f64) -> Result<()> {
    check_same_dim(q_set)?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "outside option must be >= 0, got {theta}"
        )));
    }
    Ok(())
}

fn check_same_dim(beliefs: &[Belief]) -> Result<()> {
    if let Some(first) = beliefs.first() {
        for b in beliefs {
            check_dim(first.len(), b.len())?;
        }
    }
    Ok(())
}

fn check_nonnegative(act: &Act) -> Result<()> {
    UtilityInterval::nonnegative().check_act(act)
}
