//! Envelope functionals, representation checks, the quasiconvex dual
//! `G_T(t, p) = sup { T(phi) : <p, phi> <= t }` on a grid, and extensions
//! of functionals beyond the top of `K`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::optimize::{check_beliefs, maximize_act_constrained_with_argmax};
use crate::primitives::{Act, Belief, Functional, UtilityInterval};
use crate::report::{CheckReport, Witness};
use crate::sampling::{open_unit, par_map, rng_from_seed, DEFAULT_BOX_WIDTH, STRATUM_PERIOD};

/// Slack allowed in the one-point monotonicity check of [`envelope_eval`].
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeKind {
    /// `inf { I(xi + k) : xi + k >= phi }`.
    #[serde(rename = "I_xi")]
    IXi,
    /// `inf { I(alpha xi) : alpha > 0, alpha xi >= phi }`.
    #[serde(rename = "J_xi")]
    JXi,
    /// `sup { I(xi + k) : xi + k <= phi }`.
    #[serde(rename = "S_xi")]
    SXi,
    /// `sup { I(alpha xi) : alpha > 0, alpha xi <= phi }`.
    #[serde(rename = "H_xi")]
    HXi,
}

impl EnvelopeKind {
    fn is_upper(self) -> bool {
        matches!(self, Self::IXi | Self::JXi)
    }

    fn is_scaling(self) -> bool {
        matches!(self, Self::JXi | Self::HXi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSpec {
    pub kind: EnvelopeKind,
    pub xi: Act,
}

impl EnvelopeSpec {
    pub fn new(kind: EnvelopeKind, xi: Act) -> Self {
        Self { kind, xi }
    }
}

/// Feasible parameter range `[lo, hi]` of the shift or scale defining the
/// envelope, or `None` when the defining set is empty.
fn parameter_range(spec: &EnvelopeSpec, phi: &Act, k: &UtilityInterval) -> Option<(f64, f64)> {
    let xi = &spec.xi;
    let (klo, khi) = (k.desk_lo(), k.desk_hi());
    let (lo, hi) = if spec.kind.is_scaling() {
        let ratios = || {
            xi.iter()
                .zip(phi.iter())
                .filter(|(x, _)| **x > 0.0)
                .map(|(x, f)| f / x)
        };
        if xi.iter().all(|&x| x == 0.0) {
            return None;
        }
        // alpha xi in K^n
        let zero_state = xi.contains(&0.0);
        if zero_state && !(klo <= 0.0) {
            return None;
        }
        let min_pos = xi
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        let mut lo = if klo > 0.0 { klo / min_pos } else { 0.0 };
        let mut hi = if khi.is_finite() {
            khi / xi.max()
        } else {
            f64::INFINITY
        };
        if spec.kind.is_upper() {
            // alpha xi >= phi
            if xi
                .iter()
                .zip(phi.iter())
                .any(|(&x, &f)| x == 0.0 && f > 0.0)
            {
                return None;
            }
            lo = lo.max(ratios().fold(f64::NEG_INFINITY, f64::max));
        } else {
            hi = hi.min(ratios().fold(f64::INFINITY, f64::min));
            if !(hi > 0.0) {
                return None;
            }
        }
        (lo, hi)
    } else {
        let mut lo = klo - xi.min();
        let mut hi = khi - xi.max();
        let diffs = phi.iter().zip(xi.iter()).map(|(f, x)| f - x);
        if spec.kind.is_upper() {
            lo = lo.max(diffs.fold(f64::NEG_INFINITY, f64::max));
        } else {
            hi = hi.min(diffs.fold(f64::INFINITY, f64::min));
        }
        (lo, hi)
    };
    (lo <= hi).then_some((lo, hi))
}

fn apply_parameter(spec: &EnvelopeSpec, k: &UtilityInterval, param: f64) -> Act {
    let raw = if spec.kind.is_scaling() {
        spec.xi.scaled(param)
    } else {
        spec.xi.shifted(param)
    };
    // rounding can leave the endpoint a hair outside K
    Act::from(raw.iter().map(|&v| k.clamp(v)).collect::<Vec<_>>())
}

fn check_envelope_domain(spec: &EnvelopeSpec, phi: &Act, k: &UtilityInterval) -> Result<()> {
    check_dim(spec.xi.len(), phi.len())?;
    if spec.kind.is_scaling() && !k.is_subset_of(&UtilityInterval::nonnegative()) {
        return Err(Error::DomainIncompatible {
            model: "scaling envelope on [0, inf)".into(),
            interval: k.to_string(),
        });
    }
    k.check_act(&spec.xi)?;
    k.check_act(phi)
}

/// The envelope value together with the act it was read off, without the
/// monotonicity check.
fn envelope_point<F: Functional + ?Sized>(
    i: &F,
    spec: &EnvelopeSpec,
    phi: &Act,
    k: &UtilityInterval,
) -> Result<(f64, Option<Act>)> {
    check_envelope_domain(spec, phi, k)?;
    let empty = if spec.kind.is_upper() {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let Some((lo, hi)) = parameter_range(spec, phi, k) else {
        return Ok((empty, None));
    };
    // a monotone I is extremal at the end of the range closest to phi
    let param = if spec.kind.is_upper() { lo } else { hi };
    let act = apply_parameter(spec, k, param);
    Ok((i.apply(&act)?, Some(act)))
}

/// Closed-form envelope for a monotone `I`: the extremum sits at the end of
/// the feasible shift or scale range. Empty ranges give `+inf` for the
/// upper envelopes and `-inf` for the lower ones.
///
/// A one-point comparison with `I(phi)` catches non-monotone `I`, for which
/// [`envelope_eval_scan`] is the fallback.
pub fn envelope_eval<F: Functional + ?Sized>(
    i: &F,
    spec: &EnvelopeSpec,
    phi: &Act,
    k: &UtilityInterval,
) -> Result<f64> {
    let (value, act) = envelope_point(i, spec, phi, k)?;
    let Some(act) = act else {
        return Ok(value);
    };
    let at_phi = i.apply(phi)?;
    let slack = MONOTONE_SLACK * (1.0 + at_phi.abs());
    let (lower, upper, lower_value, upper_value) = if spec.kind.is_upper() {
        (phi, &act, at_phi, value)
    } else {
        (&act, phi, value, at_phi)
    };
    if lower_value > upper_value + slack {
        return Err(Error::NonMonotone {
            lower: format!("{:?}", lower.values()),
            upper: format!("{:?}", upper.values()),
            lower_value,
            upper_value,
        });
    }
    Ok(value)
}

/// Envelope by scanning `points` evenly spaced parameters of the feasible
/// range; makes no monotonicity assumption. Unbounded ranges are cut
/// `10 * (1 + |end|)` past their finite end.
pub fn envelope_eval_scan<F: Functional + ?Sized>(
    i: &F,
    spec: &EnvelopeSpec,
    phi: &Act,
    k: &UtilityInterval,
    points: usize,
) -> Result<f64> {
    check_envelope_domain(spec, phi, k)?;
    if points < 2 {
        return Err(Error::InvalidConfig(
            "scan needs at least two points".into(),
        ));
    }
    let upper = spec.kind.is_upper();
    let Some((lo, hi)) = parameter_range(spec, phi, k) else {
        return Ok(if upper {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    };
    let hi = if hi.is_finite() {
        hi
    } else {
        lo + DEFAULT_BOX_WIDTH * (1.0 + lo.abs())
    };
    let lo = if lo.is_finite() {
        lo
    } else {
        hi - DEFAULT_BOX_WIDTH * (1.0 + hi.abs())
    };
    let params: Vec<f64> = (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
        .collect();
    let values = par_map(&params, |&a| i.apply(&apply_parameter(spec, k, a)))?;
    Ok(if upper {
        values.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        values.into_iter().fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Checks `S_xi(phi) <= I(phi) <= I_xi(phi)` over the sampled `xis` (and
/// `H_xi <= I <= J_xi` when `K` is nonnegative), with equality at `xi = phi`.
pub fn verify_max_envelope<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    phi: &Act,
    xis: &[Act],
    tol: f64,
) -> Result<CheckReport> {
    k.check_act(phi)?;
    let target = i.apply(phi)?;
    let mut kinds = vec![EnvelopeKind::SXi, EnvelopeKind::IXi];
    if k.is_subset_of(&UtilityInterval::nonnegative()) {
        kinds.extend([EnvelopeKind::HXi, EnvelopeKind::JXi]);
    }
    let mut cases: Vec<(Act, EnvelopeKind, bool)> = Vec::new();
    for &kind in &kinds {
        cases.push((phi.clone(), kind, true));
        for xi in xis {
            cases.push((xi.clone(), kind, false));
        }
    }
    let outcomes = par_map(&cases, |(xi, kind, at_phi)| {
        let spec = EnvelopeSpec::new(*kind, xi.clone());
        let (value, _) = envelope_point(i, &spec, phi, k)?;
        let w = if *at_phi {
            let gap = (value - target).abs();
            (!(gap <= tol)).then(|| Witness {
                gap,
                ..Witness::new(value, target)
            })
        } else if kind.is_upper() {
            (!(target - value <= tol)).then(|| Witness::new(value, target))
        } else {
            (!(value - target <= tol)).then(|| Witness::new(target, value))
        };
        Ok(w.map(|w| {
            w.with("xi", xi)
                .with("phi", phi)
                .with_scalar("kind", kind_code(*kind))
        }))
    })?;
    let mut report = CheckReport::new("max_envelope", tol);
    for w in outcomes {
        report.record(w);
    }
    Ok(report.finish())
}

/// Numeric tag of an envelope kind inside witness inputs: 0 = I, 1 = J,
/// 2 = S, 3 = H.
fn kind_code(kind: EnvelopeKind) -> f64 {
    match kind {
        EnvelopeKind::IXi => 0.0,
        EnvelopeKind::JXi => 1.0,
        EnvelopeKind::SXi => 2.0,
        EnvelopeKind::HXi => 3.0,
    }
}

/// `I(psi) + min_s (phi_s - psi_s) <= I(phi)` for every sampled `psi <= phi`,
/// with equality at `psi = phi`. A failure refutes constant superadditivity.
pub fn variational_rep_check<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    phi: &Act,
    psis: &[Act],
    tol: f64,
) -> Result<CheckReport> {
    k.check_act(phi)?;
    for psi in psis {
        check_dim(phi.len(), psi.len())?;
        k.check_act(psi)?;
        if !psi.le(phi) {
            return Err(Error::InvalidConfig(
                "variational check needs psi <= phi".into(),
            ));
        }
    }
    let target = i.apply(phi)?;
    let mut cases = vec![phi.clone()];
    cases.extend_from_slice(psis);
    let outcomes = par_map(&cases, |psi| {
        let margin = phi
            .iter()
            .zip(psi.iter())
            .map(|(f, p)| f - p)
            .fold(f64::INFINITY, f64::min);
        let candidate = i.apply(psi)? + margin;
        Ok((!(candidate - target <= tol)).then(|| {
            Witness::new(target, candidate)
                .with("psi", psi)
                .with("phi", phi)
        }))
    })?;
    let mut report = CheckReport::new("variational_representation", tol);
    for w in outcomes {
        report.record(w);
    }
    Ok(report.finish())
}

/// `I(xi) * min_{s: xi_s > 0} phi_s / xi_s <= I(phi)` for every sampled
/// `0 != xi <= phi`, with equality at `xi = phi`. Needs `min K = 0`. A
/// failure refutes positive superhomogeneity.
pub fn confidence_rep_check<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    phi: &Act,
    xis: &[Act],
    tol: f64,
) -> Result<CheckReport> {
    if !(k.lo == 0.0 && k.lo_closed) {
        return Err(Error::DomainIncompatible {
            model: "confidence representation needs min K = 0".into(),
            interval: k.to_string(),
        });
    }
    k.check_act(phi)?;
    if phi.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidConfig(
            "confidence check needs a nonzero act".into(),
        ));
    }
    for xi in xis {
        check_dim(phi.len(), xi.len())?;
        k.check_act(xi)?;
        if !xi.le(phi) || xi.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidConfig(
                "confidence check needs 0 != xi <= phi".into(),
            ));
        }
    }
    let target = i.apply(phi)?;
    let mut cases = vec![phi.clone()];
    cases.extend_from_slice(xis);
    let outcomes = par_map(&cases, |xi| {
        let ratio = xi
            .iter()
            .zip(phi.iter())
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, f)| f / x)
            .fold(f64::INFINITY, f64::min);
        let candidate = i.apply(xi)? * ratio;
        Ok((!(candidate - target <= tol)).then(|| {
            Witness::new(target, candidate)
                .with("xi", xi)
                .with("phi", phi)
                .with_scalar("ratio", ratio)
        }))
    })?;
    let mut report = CheckReport::new("confidence_representation", tol);
    for w in outcomes {
        report.record(w);
    }
    Ok(report.finish())
}

/// Acts `psi <= phi` inside `K`: uniform per state below `phi`, with every
/// tenth draw a small downward perturbation of `phi`.
pub fn sample_below(phi: &Act, k: &UtilityInterval, count: usize, seed: u64) -> Vec<Act> {
    let floor = |v: f64| {
        let lo = k.desk_lo();
        if lo.is_finite() {
            lo
        } else {
            v - DEFAULT_BOX_WIDTH
        }
    };
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|idx| {
            let near = idx % STRATUM_PERIOD == STRATUM_PERIOD - 1;
            Act::from(
                phi.iter()
                    .map(|&v| {
                        let lo = floor(v);
                        let depth = if near { 1e-3 * (v - lo) } else { v - lo };
                        (v - depth * rng.gen::<f64>()).max(lo)
                    })
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// Nonzero acts `0 <= xi <= phi` for a nonnegative `phi`: independent
/// fractions per state, with every tenth draw a scaled copy `gamma phi`.
pub fn sample_scaled_below(phi: &Act, count: usize, seed: u64) -> Vec<Act> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count);
    let mut idx = 0usize;
    while out.len() < count {
        let xi: Act = if idx % STRATUM_PERIOD == STRATUM_PERIOD - 1 {
            phi.scaled(open_unit(&mut rng))
        } else {
            Act::from(phi.iter().map(|v| v * rng.gen::<f64>()).collect::<Vec<_>>())
        };
        idx += 1;
        if xi.iter().any(|&v| v > 0.0) {
            out.push(xi);
        }
        if idx > count * 1000 {
            break;
        }
    }
    out
}

/// `G_T(t, p)` on a grid, one row per belief.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualGrid {
    pub k: UtilityInterval,
    pub t_grid: Vec<f64>,
    pub beliefs: Vec<Belief>,
    /// `values[j][i] = G(t_grid[i], beliefs[j])`; `-inf` when infeasible.
    pub values: Vec<Vec<f64>>,
    /// Maximizing act per cell, `None` when infeasible.
    #[serde(skip)]
    pub argmax: Vec<Vec<Option<Act>>>,
}

impl DualGrid {
    /// CSV with columns `t, p1 .. pn, value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let n = self.beliefs.first().map_or(0, |b| b.len());
        let mut header = vec!["t".to_owned()];
        header.extend((1..=n).map(|s| format!("p{s}")));
        header.push("value".to_owned());
        w.write_record(&header).map_err(csv_err)?;
        for (p, row) in self.beliefs.iter().zip(&self.values) {
            for (t, v) in self.t_grid.iter().zip(row) {
                let mut rec = vec![t.to_string()];
                rec.extend(p.iter().map(f64::to_string));
                rec.push(v.to_string());
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Fills every `(t, p)` cell with the constrained maximum of `T`.
pub fn build_dual_grid<F: Functional + ?Sized>(
    t: &F,
    k: &UtilityInterval,
    t_grid: &[f64],
    beliefs: &[Belief],
    tol: f64,
) -> Result<DualGrid> {
    if t_grid.is_empty()
        || t_grid.windows(2).any(|w| !(w[0] < w[1]))
        || t_grid.iter().any(|v| !v.is_finite())
    {
        return Err(Error::GridMisaligned(
            "t grid must be finite and strictly increasing".into(),
        ));
    }
    let Some(first) = beliefs.first() else {
        return Err(Error::GridMisaligned("belief grid is empty".into()));
    };
    check_beliefs(beliefs, first.len())?;
    let cells: Vec<(usize, usize)> = (0..beliefs.len())
        .flat_map(|j| (0..t_grid.len()).map(move |i| (j, i)))
        .collect();
    let results = par_map(&cells, |&(j, i)| {
        maximize_act_constrained_with_argmax(t, k, &beliefs[j], t_grid[i], tol)
    })?;
    let mut values = vec![Vec::with_capacity(t_grid.len()); beliefs.len()];
    let mut argmax = vec![Vec::with_capacity(t_grid.len()); beliefs.len()];
    for (&(j, _), r) in cells.iter().zip(results) {
        values[j].push(r.value);
        argmax[j].push(r.argmax);
    }
    Ok(DualGrid {
        k: *k,
        t_grid: t_grid.to_vec(),
        beliefs: beliefs.to_vec(),
        values,
        argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualProperty {
    /// `G(t + k, p) >= G(t, p) + k` for `k > 0`.
    ShiftSuper,
    /// `G(alpha t, p) >= alpha G(t, p)` for `alpha > 1`.
    ScaleSuper,
    /// `G` nondecreasing in `t`.
    Monotone,
}

/// Checks `property` over every ordered pair `t_i < t_j` of each row.
///
/// A pair is skipped as a boundary pair when moving the maximizer at `t_i`
/// to `t_j` (by the shift or scale) would leave `K`: only there does a
/// bounded `K` break the implication from `T` to `G`. Infeasible cells are
/// skipped too.
#[allow(clippy::needless_range_loop)]
pub fn check_dual_properties(
    grid: &DualGrid,
    property: DualProperty,
    tol: f64,
) -> Result<CheckReport> {
    if grid.t_grid.len() < 2 {
        return Err(Error::GridMisaligned("need at least two t values".into()));
    }
    if property == DualProperty::ScaleSuper && grid.t_grid.iter().filter(|&&t| t > 0.0).count() < 2
    {
        return Err(Error::GridMisaligned(
            "scale check needs two positive t values".into(),
        ));
    }
    let name = match property {
        DualProperty::ShiftSuper => "dual_shift_super",
        DualProperty::ScaleSuper => "dual_scale_super",
        DualProperty::Monotone => "dual_monotone",
    };
    let hi = grid.k.desk_hi();
    let mut report = CheckReport::new(name, tol);
    for (j, row) in grid.values.iter().enumerate() {
        for a in 0..row.len() {
            let (ta, ga) = (grid.t_grid[a], row[a]);
            let Some(arg) = &grid.argmax[j][a] else {
                continue;
            };
            if !ga.is_finite() {
                continue;
            }
            for b in a + 1..row.len() {
                let (tb, gb) = (grid.t_grid[b], row[b]);
                let bound = match property {
                    DualProperty::ShiftSuper => {
                        if arg.max() + (tb - ta) > hi {
                            continue;
                        }
                        ga + (tb - ta)
                    }
                    DualProperty::ScaleSuper => {
                        if ta <= 0.0 {
                            continue;
                        }
                        let alpha = tb / ta;
                        if arg.max() * alpha > hi {
                            continue;
                        }
                        alpha * ga
                    }
                    DualProperty::Monotone => ga,
                };
                let w = (!(gb >= bound - tol)).then(|| {
                    Witness::new(gb, bound)
                        .with("belief", &grid.beliefs[j])
                        .with_scalar("t_low", ta)
                        .with_scalar("t_high", tb)
                });
                report.record(w);
            }
        }
    }
    Ok(report.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    ConstSuperadd,
    PosSuperhomog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extension {
    pub value: f64,
    /// The sup was only sampled, so the value is a lower bound.
    pub lower_bound: bool,
}

/// Extends `T` from `K^n` to acts with values in `K ∪ [sup K, inf)`.
///
/// `ConstSuperadd` takes `sup T(phi) + min_s (psi_s - phi_s)` and
/// `PosSuperhomog` takes `sup alpha T(phi)` with `alpha phi <= psi`,
/// `alpha >= 1`, over `phi <= psi` in `K^n`. Candidates are the projection
/// of `psi` onto `K^n`, `psi` shifted or scaled down into `K^n`, and
/// `samples` random acts below `psi`.
pub fn extend_functional<F: Functional + ?Sized>(
    t: &F,
    k: &UtilityInterval,
    kind: ExtensionKind,
    psi: &Act,
    samples: usize,
    seed: u64,
) -> Result<Extension> {
    let (lo, hi) = (k.desk_lo(), k.desk_hi());
    if psi
        .iter()
        .any(|&v| !v.is_finite() || !(v >= lo || k.contains(v)))
    {
        return Err(Error::OutOfDomain {
            state: psi.iter().position(|&v| !(v >= lo)).unwrap_or(0),
            value: psi.iter().copied().fold(f64::INFINITY, f64::min),
            domain: format!("{k} extended upward"),
        });
    }
    if k.contains_act(psi) {
        return Ok(Extension {
            value: t.apply(psi)?,
            lower_bound: false,
        });
    }
    if kind == ExtensionKind::PosSuperhomog && !k.is_subset_of(&UtilityInterval::nonnegative()) {
        return Err(Error::DomainIncompatible {
            model: "superhomogeneous extension on [0, inf)".into(),
            interval: k.to_string(),
        });
    }
    let mut candidates = vec![Act::from(
        psi.iter().map(|&v| k.clamp(v)).collect::<Vec<_>>(),
    )];
    let excess = psi.max() - hi;
    if psi.min() - excess >= lo {
        candidates.push(psi.shifted(-excess));
    }
    if kind == ExtensionKind::PosSuperhomog && psi.max() > 0.0 {
        let down = psi.scaled(hi / psi.max());
        if k.contains_act(&down) {
            candidates.push(down);
        }
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..samples {
        let phi: Vec<f64> = psi
            .iter()
            .map(|&v| {
                let top = v.min(hi);
                top - (top - lo) * rng.gen::<f64>()
            })
            .collect();
        candidates.push(Act::from(phi));
    }
    let values = par_map(&candidates, |phi| {
        let tv = t.apply(phi)?;
        Ok(match kind {
            ExtensionKind::ConstSuperadd => {
                tv + psi
                    .iter()
                    .zip(phi.iter())
                    .map(|(p, f)| p - f)
                    .fold(f64::INFINITY, f64::min)
            }
            ExtensionKind::PosSuperhomog => {
                let alpha = psi
                    .iter()
                    .zip(phi.iter())
                    .filter(|(_, f)| **f > 0.0)
                    .map(|(p, f)| p / f)
                    .fold(f64::INFINITY, f64::min);
                if alpha.is_finite() && alpha >= 1.0 {
                    alpha * tv
                } else {
                    tv
                }
            }
        })
    })?;
    Ok(Extension {
        value: values.into_iter().fold(f64::NEG_INFINITY, f64::max),
        lower_bound: true,
    })
}

#[cfg(test)]
mod tests;
