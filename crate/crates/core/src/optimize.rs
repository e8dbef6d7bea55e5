//! Generic optimizers shared by the models and the duality tools.
//!
//! [`minimize_over_simplex`] runs exponentiated-gradient (mirror) descent from
//! the vertices, the barycenter and eight pseudo-random interior points, adds a
//! dense grid pass when there are at most three states, and finishes with a
//! pairwise mass-transfer line search around the best candidates.
//! [`maximize_act_constrained`] reduces `sup { T(phi) : <p, phi> <= t }` to a
//! simplex problem over how the budget `t - inf K` is spent across states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::primitives::{dot, Act, Belief, Functional, UtilityInterval};

/// A pure map from beliefs to extended reals (`+inf` allowed, never `NaN`).
pub trait SimplexObjective: Sync {
    fn value(&self, p: &Belief) -> f64;
}

impl<F> SimplexObjective for F
where
    F: Fn(&Belief) -> f64 + Sync,
{
    fn value(&self, p: &Belief) -> f64 {
        self(p)
    }
}

const RANDOM_STARTS: usize = 8;
const START_SEED: u64 = 0x5eed_5eed;
const MAX_EG_ITERS: usize = 2_000;
const FD_STEP: f64 = 1e-7;
const GOLDEN_ITERS: usize = 80;
const POLISH_SWEEPS: usize = 60;
const POLISH_CANDIDATES: usize = 3;

/// Minimizes `obj` over the whole simplex on `n` states.
///
/// Returns `(p*, obj(p*))`. For continuous objectives the value is within `tol`
/// of the infimum at desk scale; `tol` is a termination contract only.
pub fn minimize_over_simplex<O>(obj: &O, n: usize, tol: f64) -> Result<(Belief, f64)>
where
    O: SimplexObjective + ?Sized,
{
    let support: Vec<usize> = (0..n).collect();
    minimize_over_support(obj, n, &support, tol)
}

/// Minimizes `obj` over the face of the simplex spanned by `support`.
pub fn minimize_over_support<O>(
    obj: &O,
    n: usize,
    support: &[usize],
    tol: f64,
) -> Result<(Belief, f64)>
where
    O: SimplexObjective + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidConfig(
            "simplex needs at least one state".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if support.is_empty() || support.iter().any(|&s| s >= n) {
        return Err(Error::InvalidConfig(
            "support must be a nonempty subset of the states".into(),
        ));
    }
    let embed = |y: &[f64]| {
        let mut w = vec![0.0; n];
        for (&s, &v) in support.iter().zip(y) {
            w[s] = v;
        }
        Belief::from_normalized_unchecked(w)
    };
    let reduced = |y: &[f64]| {
        let v = obj.value(&embed(y));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (y, v) = minimize_reduced(&reduced, support.len(), tol);
    if !v.is_finite() && v > 0.0 {
        return Err(Error::ObjectiveEverywhereInfinite);
    }
    Ok((embed(&y), v))
}

fn minimize_reduced<F>(f: &F, m: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        let fv = f(&v);
        candidates.push((v, fv));
    }
    if m == 1 {
        return candidates.pop().unwrap();
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![1.0 / m as f64; m]);
    for i in 0..m {
        let mut v = vec![0.05 / m as f64; m];
        v[i] += 0.95;
        starts.push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED ^ m as u64);
    for _ in 0..RANDOM_STARTS {
        starts.push(random_simplex_point(&mut rng, m));
    }
    if m <= 3 {
        let mut grid = simplex_grid(m);
        let mut scored: Vec<(Vec<f64>, f64)> = grid
            .drain(..)
            .map(|g| {
                let v = f(&g);
                (g, v)
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (g, v) in scored.into_iter().take(4) {
            candidates.push((g.clone(), v));
            starts.push(g);
        }
    }

    for s in starts {
        let fs = f(&s);
        if !fs.is_finite() {
            candidates.push((s, fs));
            continue;
        }
        candidates.push(exponentiated_gradient(f, s, fs, tol));
    }

    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut best = candidates[0].clone();
    for (x, fx) in candidates.into_iter().take(POLISH_CANDIDATES) {
        if !fx.is_finite() {
            continue;
        }
        let polished = pairwise_polish(f, x, fx, tol);
        if polished.1 < best.1 {
            best = polished;
        }
    }
    best
}

fn random_simplex_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

fn simplex_grid(m: usize) -> Vec<Vec<f64>> {
    match m {
        2 => {
            let r = 2000;
            (0..=r)
                .map(|i| {
                    let a = i as f64 / r as f64;
                    vec![a, 1.0 - a]
                })
                .collect()
        }
        3 => {
            let r = 150;
            let mut out = Vec::with_capacity((r + 1) * (r + 2) / 2);
            for i in 0..=r {
                for j in 0..=(r - i) {
                    let a = i as f64 / r as f64;
                    let b = j as f64 / r as f64;
                    out.push(vec![a, b, (1.0 - a - b).max(0.0)]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn normalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn exponentiated_gradient<F>(f: &F, mut x: Vec<f64>, mut fx: f64, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let m = x.len();
    let mut eta: f64 = 1.0;
    let mut probe = vec![0.0; m];
    let mut grad = vec![0.0; m];
    let mut stalls = 0;
    for _ in 0..MAX_EG_ITERS {
        // directional derivative along e_i - x, which stays on the simplex
        for i in 0..m {
            for (j, p) in probe.iter_mut().enumerate() {
                *p = (1.0 - FD_STEP) * x[j];
            }
            probe[i] += FD_STEP;
            let fp = f(&probe);
            grad[i] = if fp.is_finite() {
                (fp - fx) / FD_STEP
            } else {
                1e6
            };
        }
        let gmin = grad.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = grad.iter().map(|g| (g - gmin).abs()).fold(0.0, f64::max);
        if scale < 1e-14 {
            break;
        }
        let mut improved = false;
        eta = (eta * 2.0).min(1e6 / scale.max(1e-12));
        for _ in 0..50 {
            let mut y: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, g)| xi * (-(eta * (g - gmin)).clamp(0.0, 700.0)).exp())
                .collect();
            normalize(&mut y);
            let fy = f(&y);
            if fy < fx {
                let gain = fx - fy;
                x = y;
                fx = fy;
                improved = true;
                if gain < tol * 1e-3 {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            eta *= 0.5;
        }
        if !improved || stalls >= 5 {
            break;
        }
    }
    (x, fx)
}

/// Golden-section search of `g` over `[a, b]`, endpoints included.
pub(crate) fn golden_section<G>(g: G, a: f64, b: f64, iters: usize) -> (f64, f64)
where
    G: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..iters {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
    }
    let mut best = if gc <= gd { (c, gc) } else { (d, gd) };
    for e in [a, b] {
        let ge = g(e);
        if ge < best.1 {
            best = (e, ge);
        }
    }
    best
}

fn pairwise_polish<F>(f: &F, mut x: Vec<f64>, mut fx: f64, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let m = x.len();
    for _ in 0..POLISH_SWEEPS {
        let start = fx;
        for i in 0..m {
            for j in (i + 1)..m {
                // move mass `t` from state j to state i
                let (xi, xj) = (x[i], x[j]);
                let eval = |t: f64| {
                    let mut y = x.clone();
                    y[i] = (xi + t).max(0.0);
                    y[j] = (xj - t).max(0.0);
                    f(&y)
                };
                let (t, ft) = golden_section(eval, -xi, xj, GOLDEN_ITERS);
                if ft < fx {
                    x[i] = (xi + t).max(0.0);
                    x[j] = (xj - t).max(0.0);
                    fx = ft;
                }
            }
        }
        if start - fx <= tol * 1e-3 {
            break;
        }
    }
    (x, fx)
}

/// Result of a constrained act maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedMax {
    /// `-inf` when the constraint set is empty.
    pub value: f64,
    pub argmax: Option<Act>,
}

/// Box `[lo, hi]` used in place of `K` when maximizing under `<p, phi> <= t`.
///
/// Open endpoints shrink inward by `1e-9`; an unbounded side is truncated
/// `10 * (1 + |t|)` beyond the larger of `t` and the opposite finite bound.
pub fn truncated_box(k: &UtilityInterval, t: f64) -> (f64, f64) {
    let reach = 10.0 * (1.0 + t.abs());
    let lo_fin = k.desk_lo();
    let hi_fin = k.desk_hi();
    let lo = if lo_fin.is_finite() {
        lo_fin
    } else if hi_fin.is_finite() {
        t.min(hi_fin) - reach
    } else {
        t - reach
    };
    let hi = if hi_fin.is_finite() {
        hi_fin
    } else if lo_fin.is_finite() {
        t.max(lo_fin) + reach
    } else {
        t + reach
    };
    (lo, hi)
}

/// `sup { T(phi) : phi in K^n, <p, phi> <= t }` for monotone continuous `T`.
///
/// Returns `-inf` when the constraint set is empty; optimizer failures are
/// reported as errors.
pub fn maximize_act_constrained<T>(
    objective: &T,
    k: &UtilityInterval,
    p: &Belief,
    t: f64,
    tol: f64,
) -> Result<f64>
where
    T: Functional + ?Sized,
{
    maximize_act_constrained_with_argmax(objective, k, p, t, tol).map(|r| r.value)
}

pub fn maximize_act_constrained_with_argmax<T>(
    objective: &T,
    k: &UtilityInterval,
    p: &Belief,
    t: f64,
    tol: f64,
) -> Result<ConstrainedMax>
where
    T: Functional + ?Sized,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "budget t must be finite, got {t}"
        )));
    }
    let n = p.len();
    let (lo, hi) = truncated_box(k, t);
    if lo > t {
        return Ok(ConstrainedMax {
            value: f64::NEG_INFINITY,
            argmax: None,
        });
    }
    if hi <= t {
        let top = Act::constant(n, hi);
        let value = objective.apply(&top)?;
        return Ok(ConstrainedMax {
            value,
            argmax: Some(top),
        });
    }

    let support = p.support();
    let budget = t - lo;
    let width = hi - lo;
    let build = |y: &[f64]| {
        let mut phi = vec![hi; n];
        for (&s, &ys) in support.iter().zip(y) {
            phi[s] = lo + (budget * ys / p[s]).min(width);
        }
        Act::from(phi)
    };
    let first_error = std::sync::Mutex::new(None);
    let neg = |q: &Belief| match objective.apply(&build(q.weights())) {
        Ok(v) if v.is_nan() => f64::INFINITY,
        Ok(v) => -v,
        Err(e) => {
            first_error.lock().unwrap().get_or_insert(e);
            f64::INFINITY
        }
    };
    let outcome = minimize_over_simplex(&neg, support.len(), tol);
    let (q, v) = match outcome {
        Ok(r) => r,
        Err(Error::ObjectiveEverywhereInfinite) => {
            return Err(match first_error.into_inner().unwrap() {
                Some(e) => e,
                None => Error::OptimizerFailure("objective undefined on the feasible set".into()),
            })
        }
        Err(e) => return Err(e),
    };
    let argmax = build(q.weights());
    debug_assert!(dot(&argmax, p) <= t + 1e-9 * (1.0 + t.abs()));
    Ok(ConstrainedMax {
        value: -v,
        argmax: Some(argmax),
    })
}

/// Checks that every belief in a slice has dimension `n`.
pub(crate) fn check_beliefs(beliefs: &[Belief], n: usize) -> Result<()> {
    beliefs.iter().try_for_each(|b| check_dim(n, b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::relative_entropy_raw;
    use approx::assert_abs_diff_eq;

    fn linear(phi: Vec<f64>) -> impl Fn(&Belief) -> f64 + Sync {
        move |p: &Belief| dot(&phi, p)
    }

    #[test]
    fn linear_objective_hits_vertex() {
        let (p, v) = minimize_over_simplex(&linear(vec![0.0, 1.0]), 2, 1e-9).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(p.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn constant_objective() {
        let (_, v) = minimize_over_simplex(&|_: &Belief| 3.25, 4, 1e-9).unwrap();
        assert_eq!(v, 3.25);
    }

    #[test]
    fn entropic_objective_matches_gibbs_value() {
        let q = [0.5, 0.5];
        let obj = |p: &Belief| p[1] + relative_entropy_raw(p, &q);
        let (p, v) = minimize_over_simplex(&obj, 2, 1e-10).unwrap();
        let expected = -(0.5 * (1.0 + (-1.0f64).exp())).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
        assert!(v <= obj(&p));
        assert_abs_diff_eq!(expected, 0.379885, epsilon = 1e-6);
    }

    #[test]
    fn everywhere_infinite_is_an_error() {
        let err = minimize_over_simplex(&|_: &Belief| f64::INFINITY, 3, 1e-6).unwrap_err();
        assert_eq!(err, Error::ObjectiveEverywhereInfinite);
    }

    #[test]
    fn support_restriction_respects_face() {
        let (p, v) =
            minimize_over_support(&linear(vec![-5.0, 1.0, 2.0]), 3, &[1, 2], 1e-9).unwrap();
        assert_eq!(p.weights(), &[0.0, 1.0, 0.0]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn constrained_max_of_min_at_vertex_belief() {
        let k = UtilityInterval::closed(0.0, 1.0).unwrap();
        let min = |a: &Act| a.min();
        for s in 0..3 {
            let v = maximize_act_constrained(&min, &k, &Belief::vertex(3, s), 0.3, 1e-9).unwrap();
            assert_abs_diff_eq!(v, 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn constrained_max_of_expectation_binds() {
        let k = UtilityInterval::closed(0.0, 1.0).unwrap();
        let p = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let pp = p.clone();
        let lin = move |a: &Act| dot(a, &pp);
        for t in [0.1, 0.45, 0.9] {
            let v = maximize_act_constrained(&lin, &k, &p, t, 1e-10).unwrap();
            assert_abs_diff_eq!(v, t, epsilon = 1e-8);
        }
    }

    #[test]
    fn constrained_max_infeasible() {
        let k = UtilityInterval::closed(0.5, 1.0).unwrap();
        let v = maximize_act_constrained(&|a: &Act| a.min(), &k, &Belief::uniform(2), 0.2, 1e-9)
            .unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn truncation_of_unbounded_interval() {
        assert_eq!(
            truncated_box(&UtilityInterval::nonnegative(), 2.0),
            (0.0, 32.0)
        );
        assert_eq!(
            truncated_box(&UtilityInterval::real_line(), 0.0),
            (-10.0, 10.0)
        );
    }
}
