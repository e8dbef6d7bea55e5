//! Sampling checkers for shift and scale properties of certainty
//! equivalents, Arrow–Pratt coefficients of ambiguity functions, and the
//! resulting absolute/relative attitude classification.
//!
//! A sampler can only refute a property. Reports therefore say
//! `consistent`, never "proved", and always carry the sample count.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AmbiguityFunction, PreferenceModel};
use crate::primitives::{Act, Functional, UtilityInterval};
use crate::report::{trim_witnesses, Verdict, Witness};
use crate::sampling::{open_unit, par_map, rng_from_seed, SampleBox, MAX_DRAWS, STRATUM_PERIOD};

/// Default additive tie tolerance for closed-form functionals.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Multiplier on the tie tolerance for optimizer-backed models.
pub const OPTIMIZER_TOLERANCE_FACTOR: f64 = 10.0;

const FD_FIRST_STEP: f64 = 1e-5;
const FD_SECOND_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheckConfig {
    pub sample_count: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub dim: usize,
    /// Sampling box inside `K`; `None` picks a finite sub-box of `K`.
    pub bounds: Option<(f64, f64)>,
}

impl PropertyCheckConfig {
    pub fn new(sample_count: usize, tolerance: f64, seed: u64, dim: usize) -> Result<Self> {
        let cfg = Self {
            sample_count,
            tolerance,
            seed,
            dim,
            bounds: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig(
                "sample_count must be at least 1".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(())
    }

    fn sample_box(&self, k: &UtilityInterval) -> Result<SampleBox> {
        self.validate()?;
        SampleBox::inside(k, self.dim, self.bounds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Super,
    Sub,
    /// Both inequalities at once: additivity or homogeneity.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    ConstSuperadd,
    ConstSubadd,
    ConstAdd,
    PosSuperhomog,
    PosSubhomog,
    PosHomog,
    Monotone,
    Normalized,
    Quasiconcave,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeReport {
    pub property: Property,
    pub strict: bool,
    pub verdict: Verdict,
    pub samples_run: usize,
    pub violations: usize,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

impl AttitudeReport {
    fn assemble(
        property: Property,
        strict: bool,
        tolerance: f64,
        outcomes: Vec<Option<Witness>>,
    ) -> Self {
        let samples_run = outcomes.len();
        let mut witnesses: Vec<Witness> = outcomes.into_iter().flatten().collect();
        let violations = witnesses.len();
        trim_witnesses(&mut witnesses);
        Self {
            property,
            strict,
            verdict: if violations == 0 {
                Verdict::Consistent
            } else {
                Verdict::Violated
            },
            samples_run,
            violations,
            tolerance,
            witnesses,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict.is_consistent()
    }
}

/// Turns `lhs >= rhs` into a witness when it fails: by more than `tol`, or
/// at all when `strict` asks for `lhs > rhs`.
fn judge(lhs: f64, rhs: f64, tol: f64, strict: bool) -> Option<Witness> {
    let gap = rhs - lhs;
    let failed = if strict { !(gap < 0.0) } else { !(gap <= tol) };
    failed.then(|| Witness::new(lhs, rhs))
}

/// Two-sided version for equalities.
fn judge_equal(lhs: f64, rhs: f64, tol: f64) -> Option<Witness> {
    let gap = (lhs - rhs).abs();
    (!(gap <= tol)).then(|| Witness {
        gap,
        ..Witness::new(lhs, rhs)
    })
}

fn draw<T, R: Rng>(rng: &mut R, what: &str, mut f: impl FnMut(&mut R) -> Option<T>) -> Result<T> {
    for _ in 0..MAX_DRAWS {
        if let Some(x) = f(rng) {
            return Ok(x);
        }
    }
    Err(Error::EmptySampleSpace(format!(
        "no feasible {what} after {MAX_DRAWS} draws"
    )))
}

/// `I(phi + k)` against `I(phi) + k` for sampled `phi` and `k > 0` with
/// `phi + k` inside the sampling box.
pub fn check_shift_property<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
    direction: Direction,
    strict: bool,
) -> Result<AttitudeReport> {
    let bx = cfg.sample_box(k)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.sample_count);
    for idx in 0..cfg.sample_count {
        samples.push(draw(&mut rng, "(act, shift) pair", |rng| {
            let phi = bx.stratified(rng, idx);
            let room = bx.hi - phi.max();
            if room <= 0.0 || (strict && phi.is_constant(0.0)) {
                return None;
            }
            let shift = room * open_unit(rng);
            Some((phi, shift))
        })?);
    }
    let tol = cfg.tolerance;
    let outcomes = par_map(&samples, |(phi, shift)| {
        let moved = i.apply(&phi.shifted(*shift))?;
        let base = i.apply(phi)? + shift;
        let w = match direction {
            Direction::Super => judge(moved, base, tol, strict),
            Direction::Sub => judge(base, moved, tol, strict),
            Direction::Both => judge_equal(moved, base, tol),
        };
        Ok(w.map(|w| w.with("phi", phi).with_scalar("k", *shift)))
    })?;
    let property = match direction {
        Direction::Super => Property::ConstSuperadd,
        Direction::Sub => Property::ConstSubadd,
        Direction::Both => Property::ConstAdd,
    };
    Ok(AttitudeReport::assemble(property, strict, tol, outcomes))
}

/// Smallest `gamma` in `[0, 1)` keeping `gamma * phi` inside the box, if any.
fn min_feasible_scale(phi: &Act, bx: &SampleBox) -> Option<f64> {
    let mut gamma_min: f64 = 0.0;
    for &v in phi.iter() {
        if v > 0.0 && bx.lo > 0.0 {
            gamma_min = gamma_min.max(bx.lo / v);
        } else if v < 0.0 && bx.hi < 0.0 {
            gamma_min = gamma_min.max(bx.hi / v);
        } else if v == 0.0 && !(bx.lo <= 0.0 && 0.0 <= bx.hi) {
            return None;
        }
    }
    (gamma_min < 1.0).then_some(gamma_min)
}

/// `I(gamma phi)` against `gamma I(phi)` for sampled `phi` and `gamma` in
/// `(0, 1)` with `gamma phi` inside the sampling box. `Super` is positive
/// superhomogeneity, `I(gamma phi) <= gamma I(phi)`.
pub fn check_scale_property<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
    direction: Direction,
    strict: bool,
) -> Result<AttitudeReport> {
    let bx = cfg.sample_box(k)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.sample_count);
    for idx in 0..cfg.sample_count {
        samples.push(draw(&mut rng, "(act, scale) pair", |rng| {
            let phi = bx.stratified(rng, idx);
            if strict && phi.is_constant(0.0) {
                return None;
            }
            let gamma_min = min_feasible_scale(&phi, &bx)?;
            let gamma = gamma_min + (1.0 - gamma_min) * rng.gen::<f64>();
            (gamma > 0.0 && gamma < 1.0).then_some((phi, gamma))
        })?);
    }
    let tol = cfg.tolerance;
    let outcomes = par_map(&samples, |(phi, gamma)| {
        let scaled = i.apply(&phi.scaled(*gamma))?;
        let base = gamma * i.apply(phi)?;
        let w = match direction {
            Direction::Super => judge(base, scaled, tol, strict),
            Direction::Sub => judge(scaled, base, tol, strict),
            Direction::Both => judge_equal(scaled, base, tol),
        };
        Ok(w.map(|w| w.with("phi", phi).with_scalar("gamma", *gamma)))
    })?;
    let property = match direction {
        Direction::Super => Property::PosSuperhomog,
        Direction::Sub => Property::PosSubhomog,
        Direction::Both => Property::PosHomog,
    };
    Ok(AttitudeReport::assemble(property, strict, tol, outcomes))
}

/// `I(alpha phi + (1 - alpha) psi) >= min(I(phi), I(psi))`. Part of the
/// samples pair an act with its state-reversed mirror at `alpha = 1/2`.
pub fn check_quasiconcave<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
) -> Result<AttitudeReport> {
    let bx = cfg.sample_box(k)?;
    let mut rng = rng_from_seed(cfg.seed);
    let samples: Vec<(Act, Act, f64)> = (0..cfg.sample_count)
        .map(|idx| {
            let phi = bx.stratified(&mut rng, idx);
            if idx % STRATUM_PERIOD == STRATUM_PERIOD / 2 {
                let mirrored: Vec<f64> = phi.iter().rev().copied().collect();
                (phi, Act::from(mirrored), 0.5)
            } else {
                let psi = bx.stratified(&mut rng, idx);
                (phi, psi, open_unit(&mut rng))
            }
        })
        .collect();
    let tol = cfg.tolerance;
    let outcomes = par_map(&samples, |(phi, psi, alpha)| {
        let mixed = i.apply(&phi.mix(psi, *alpha))?;
        let worst = i.apply(phi)?.min(i.apply(psi)?);
        Ok(judge(mixed, worst, tol, false).map(|w| {
            w.with("phi", phi)
                .with("psi", psi)
                .with_scalar("alpha", *alpha)
        }))
    })?;
    Ok(AttitudeReport::assemble(
        Property::Quasiconcave,
        false,
        tol,
        outcomes,
    ))
}

/// `phi <= psi` pointwise implies `I(phi) <= I(psi)`.
pub fn check_monotone<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
) -> Result<AttitudeReport> {
    let bx = cfg.sample_box(k)?;
    let mut rng = rng_from_seed(cfg.seed);
    let samples: Vec<(Act, Act)> = (0..cfg.sample_count)
        .map(|idx| {
            let phi = bx.stratified(&mut rng, idx);
            let psi: Vec<f64> = phi
                .iter()
                .map(|&v| v + (bx.hi - v) * rng.gen::<f64>())
                .collect();
            (phi, Act::from(psi))
        })
        .collect();
    let tol = cfg.tolerance;
    let outcomes = par_map(&samples, |(phi, psi)| {
        Ok(judge(i.apply(psi)?, i.apply(phi)?, tol, false)
            .map(|w| w.with("phi", phi).with("psi", psi)))
    })?;
    Ok(AttitudeReport::assemble(
        Property::Monotone,
        false,
        tol,
        outcomes,
    ))
}

/// `I(c) = c` on sampled constants.
pub fn check_normalized<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
) -> Result<AttitudeReport> {
    let bx = cfg.sample_box(k)?;
    let mut rng = rng_from_seed(cfg.seed);
    let constants: Vec<f64> = (0..cfg.sample_count)
        .map(|_| rng.gen_range(bx.lo..=bx.hi))
        .collect();
    let tol = cfg.tolerance;
    let outcomes = par_map(&constants, |&c| {
        let v = i.apply(&Act::constant(bx.dim, c))?;
        Ok(judge_equal(v, c, tol).map(|w| w.with_scalar("c", c)))
    })?;
    Ok(AttitudeReport::assemble(
        Property::Normalized,
        false,
        tol,
        outcomes,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    /// `-phi''(t) / phi'(t)`.
    Ara,
    /// `-t phi''(t) / phi'(t)`.
    Rra,
}

fn check_interior(phi: &AmbiguityFunction, t: f64) -> Result<UtilityInterval> {
    let dom = phi.domain();
    if dom.contains(t) && t > dom.lo && t < dom.hi {
        Ok(dom)
    } else {
        Err(Error::InvalidConfig(format!(
            "t = {t} is not interior to the domain {dom} of {}",
            phi.name()
        )))
    }
}

/// `(phi'(t), phi''(t))` by the requested method.
fn derivatives(phi: &AmbiguityFunction, t: f64, method: CoefficientMethod) -> Result<(f64, f64)> {
    let dom = check_interior(phi, t)?;
    Ok(match method {
        CoefficientMethod::Analytic => (phi.first_derivative(t), phi.second_derivative(t)),
        CoefficientMethod::FiniteDifference => {
            let room = (t - dom.lo).min(dom.hi - t);
            let scale = t.abs().max(1.0);
            let h1 = (FD_FIRST_STEP * scale).min(room / 2.0);
            let d1 = (phi.value(t + h1) - phi.value(t - h1)) / (2.0 * h1);
            // Richardson-extrapolated second difference; a plain second
            // difference at the first-derivative step loses ~6 digits
            let h2 = (FD_SECOND_STEP * scale).min(room / 3.0);
            let second =
                |h: f64| (phi.value(t + h) - 2.0 * phi.value(t) + phi.value(t - h)) / (h * h);
            let d2 = (4.0 * second(h2) - second(2.0 * h2)) / 3.0;
            (d1, d2)
        }
    })
}

pub fn coefficient(
    phi: &AmbiguityFunction,
    kind: CoefficientKind,
    t: f64,
    method: CoefficientMethod,
) -> Result<f64> {
    let (d1, d2) = derivatives(phi, t, method)?;
    if !(d1 > 0.0) {
        return Err(Error::InvalidModel(format!(
            "{} has phi'({t}) = {d1}, not positive",
            phi.name()
        )));
    }
    let ara = -d2 / d1;
    Ok(match kind {
        CoefficientKind::Ara => ara,
        CoefficientKind::Rra => t * ara,
    })
}

/// Absolute risk aversion `-phi''(t) / phi'(t)` from the stored derivatives.
pub fn ara_coefficient(phi: &AmbiguityFunction, t: f64) -> Result<f64> {
    coefficient(phi, CoefficientKind::Ara, t, CoefficientMethod::Analytic)
}

/// Relative risk aversion `-t phi''(t) / phi'(t)` from the stored derivatives.
pub fn rra_coefficient(phi: &AmbiguityFunction, t: f64) -> Result<f64> {
    coefficient(phi, CoefficientKind::Rra, t, CoefficientMethod::Analytic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Constant,
    Increasing,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientCurve {
    pub kind: CoefficientKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub classification: Trend,
}

impl CoefficientCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        let name = match self.kind {
            CoefficientKind::Ara => "ara",
            CoefficientKind::Rra => "rra",
        };
        w.write_record(["t", name]).map_err(csv_err)?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Coefficient values along a strictly increasing interior grid.
pub fn coefficient_curve(
    phi: &AmbiguityFunction,
    kind: CoefficientKind,
    grid: &[f64],
    method: CoefficientMethod,
) -> Result<CoefficientCurve> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "coefficient grid must be strictly increasing".into(),
        ));
    }
    let values = grid
        .iter()
        .map(|&t| coefficient(phi, kind, t, method))
        .collect::<Result<Vec<_>>>()?;
    let classification = classify_trend(&values);
    Ok(CoefficientCurve {
        kind,
        grid: grid.to_vec(),
        values,
        classification,
    })
}

fn classify_trend(values: &[f64]) -> Trend {
    let mut down = false;
    let mut up = false;
    for w in values.windows(2) {
        let tol = 1e-12 * w[0].abs().max(w[1].abs()).max(1.0);
        let d = w[1] - w[0];
        if d < -tol {
            down = true;
        } else if d > tol {
            up = true;
        }
    }
    match (down, up) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Decreasing,
        (false, true) => Trend::Increasing,
        (true, true) => Trend::Mixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbsoluteAttitude {
    #[serde(rename = "DAAA")]
    Daaa,
    #[serde(rename = "CAAA")]
    Caaa,
    #[serde(rename = "IAAA")]
    Iaaa,
    #[serde(rename = "mixed")]
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelativeAttitude {
    #[serde(rename = "DRAA")]
    Draa,
    #[serde(rename = "CRAA")]
    Craa,
    #[serde(rename = "IRAA")]
    Iraa,
    #[serde(rename = "mixed")]
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttitudeClassification {
    pub absolute: AbsoluteAttitude,
    pub relative: RelativeAttitude,
    /// Shift super, shift sub, scale super, scale sub, in that order.
    pub reports: Vec<AttitudeReport>,
}

/// Classifies any functional from the four non-strict shift/scale checks.
pub fn classify_functional<F: Functional + ?Sized>(
    i: &F,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
) -> Result<AttitudeClassification> {
    let shift_super = check_shift_property(i, k, cfg, Direction::Super, false)?;
    let shift_sub = check_shift_property(i, k, cfg, Direction::Sub, false)?;
    let scale_super = check_scale_property(i, k, cfg, Direction::Super, false)?;
    let scale_sub = check_scale_property(i, k, cfg, Direction::Sub, false)?;
    let absolute = match (shift_super.is_consistent(), shift_sub.is_consistent()) {
        (true, false) => AbsoluteAttitude::Daaa,
        (true, true) => AbsoluteAttitude::Caaa,
        (false, true) => AbsoluteAttitude::Iaaa,
        (false, false) => AbsoluteAttitude::Mixed,
    };
    let relative = match (scale_super.is_consistent(), scale_sub.is_consistent()) {
        (true, false) => RelativeAttitude::Draa,
        (true, true) => RelativeAttitude::Craa,
        (false, true) => RelativeAttitude::Iraa,
        (false, false) => RelativeAttitude::Mixed,
    };
    Ok(AttitudeClassification {
        absolute,
        relative,
        reports: vec![shift_super, shift_sub, scale_super, scale_sub],
    })
}

/// [`classify_functional`] on a bound model. Optimizer-backed models get a
/// tie tolerance of `10 * cfg.tolerance`.
pub fn classify_attitude(
    model: &PreferenceModel,
    k: &UtilityInterval,
    cfg: &PropertyCheckConfig,
) -> Result<AttitudeClassification> {
    let mut cfg = cfg.clone();
    if is_optimizer_backed(model) {
        cfg.tolerance *= OPTIMIZER_TOLERANCE_FACTOR;
    }
    let bound = model.clone().bind(*k, cfg.tolerance);
    classify_functional(&bound, k, &cfg)
}

pub fn is_optimizer_backed(model: &PreferenceModel) -> bool {
    matches!(model, PreferenceModel::ConfidenceOO(_))
}
