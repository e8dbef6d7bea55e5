//! Seeded act samplers over finite boxes inside `K`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::primitives::{Act, UtilityInterval};

/// Width used when `K` is unbounded on a side.
pub const DEFAULT_BOX_WIDTH: f64 = 10.0;

/// Every tenth draw is a stratified (boundary or near-constant) act.
pub(crate) const STRATUM_PERIOD: usize = 10;

/// Relative half-width of the noise around near-constant acts.
const NEAR_CONSTANT_NOISE: f64 = 1e-3;

/// Draws allowed per accepted sample before giving up.
pub(crate) const MAX_DRAWS: usize = 1000;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `[lo, hi]^n` with finite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
}

impl SampleBox {
    /// Finite sub-box of `k`, optionally narrowed to `bounds`.
    pub fn inside(k: &UtilityInterval, dim: usize, bounds: Option<(f64, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        let (lo, hi) = match bounds {
            Some((lo, hi)) => {
                if !(k.contains(lo) && k.contains(hi) && lo < hi) {
                    return Err(Error::InvalidConfig(format!(
                        "sampling bounds [{lo}, {hi}] must be an interval inside {k}"
                    )));
                }
                (lo, hi)
            }
            None => {
                let (lo, hi) = (k.desk_lo(), k.desk_hi());
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => (lo, hi),
                    (true, false) => (lo, lo + DEFAULT_BOX_WIDTH),
                    (false, true) => (hi - DEFAULT_BOX_WIDTH, hi),
                    (false, false) => (-DEFAULT_BOX_WIDTH / 2.0, DEFAULT_BOX_WIDTH / 2.0),
                }
            }
        };
        Ok(Self { lo, hi, dim })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn uniform<R: Rng>(&self, rng: &mut R) -> Act {
        Act::from(
            (0..self.dim)
                .map(|_| rng.gen_range(self.lo..=self.hi))
                .collect::<Vec<_>>(),
        )
    }

    /// States pinned to an endpoint with probability 1/2 each.
    pub fn near_boundary<R: Rng>(&self, rng: &mut R) -> Act {
        Act::from(
            (0..self.dim)
                .map(|_| match rng.gen_range(0..4) {
                    0 => self.lo,
                    1 => self.hi,
                    _ => rng.gen_range(self.lo..=self.hi),
                })
                .collect::<Vec<_>>(),
        )
    }

    pub fn near_constant<R: Rng>(&self, rng: &mut R) -> Act {
        let c = rng.gen_range(self.lo..=self.hi);
        let eps = NEAR_CONSTANT_NOISE * self.width();
        Act::from(
            (0..self.dim)
                .map(|_| (c + rng.gen_range(-eps..=eps)).clamp(self.lo, self.hi))
                .collect::<Vec<_>>(),
        )
    }

    /// Uniform draws, with every tenth draw alternating between the
    /// boundary and near-constant strata.
    pub fn stratified<R: Rng>(&self, rng: &mut R, index: usize) -> Act {
        if index % STRATUM_PERIOD != STRATUM_PERIOD - 1 {
            self.uniform(rng)
        } else if (index / STRATUM_PERIOD).is_multiple_of(2) {
            self.near_boundary(rng)
        } else {
            self.near_constant(rng)
        }
    }
}

/// Uniform on `(0, 1]`.
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Parallel map that keeps input order and reports the first error in that
/// order, so failures are as deterministic as successes.
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    use rayon::prelude::*;
    items
        .par_iter()
        .map(&f)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
