//! Ambiguity functions: strictly increasing transforms applied to utilities
//! (second-order expected utility) or to expected utilities (smooth model).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::primitives::UtilityInterval;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied ambiguity function. All four maps must be pure.
#[derive(Clone)]
pub struct CustomPhi {
    pub name: String,
    pub value: ScalarFn,
    pub first_derivative: ScalarFn,
    pub second_derivative: ScalarFn,
    pub inverse: ScalarFn,
    pub domain: UtilityInterval,
    /// Whether the function is claimed concave on its domain.
    pub concave: bool,
}

impl fmt::Debug for CustomPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhi")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("concave", &self.concave)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum AmbiguityFunction {
    /// `t -> sqrt(t)` on `[0, inf)`.
    Sqrt,
    /// `t -> t + sqrt(t)` on `[0, inf)`.
    SqrtPlusLinear,
    /// `t -> ln(t)` on `[1, inf)`.
    Log,
    /// `t -> t^rho` on `[0, inf)`, `rho` in `(0, 1)`.
    Power {
        rho: f64,
    },
    /// `t -> 1 - exp(-t)` on `[0, inf)`.
    ExpCapped,
    Custom(CustomPhi),
}

impl AmbiguityFunction {
    pub fn power(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho < 1.0 {
            Ok(Self::Power { rho })
        } else {
            Err(Error::InvalidModel(format!(
                "power exponent must lie in (0, 1), got {rho}"
            )))
        }
    }

    /// The affine ambiguity function `t -> t` on the real line.
    pub fn identity() -> Self {
        Self::Custom(CustomPhi {
            name: "identity".into(),
            value: Arc::new(|t| t),
            first_derivative: Arc::new(|_| 1.0),
            second_derivative: Arc::new(|_| 0.0),
            inverse: Arc::new(|y| y),
            domain: UtilityInterval::real_line(),
            concave: true,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Sqrt => "sqrt",
            Self::SqrtPlusLinear => "sqrt_plus_linear",
            Self::Log => "log",
            Self::Power { .. } => "power",
            Self::ExpCapped => "exp_capped",
            Self::Custom(c) => &c.name,
        }
    }

    pub fn domain(&self) -> UtilityInterval {
        match self {
            Self::Log => UtilityInterval {
                lo: 1.0,
                hi: f64::INFINITY,
                lo_closed: true,
                hi_closed: false,
            },
            Self::Custom(c) => c.domain,
            _ => UtilityInterval::nonnegative(),
        }
    }

    pub fn is_concave(&self) -> bool {
        match self {
            Self::Custom(c) => c.concave,
            _ => true,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Sqrt => t.sqrt(),
            Self::SqrtPlusLinear => t + t.sqrt(),
            Self::Log => t.ln(),
            Self::Power { rho } => t.powf(*rho),
            Self::ExpCapped => -(-t).exp_m1(),
            Self::Custom(c) => (c.value)(t),
        }
    }

    /// Inverse map; arguments just outside the range (rounding) are clamped.
    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            Self::Sqrt => {
                let y = y.max(0.0);
                y * y
            }
            Self::SqrtPlusLinear => {
                // s^2 + s = y with s = sqrt(t)
                let y = y.max(0.0);
                let s = 2.0 * y / (1.0 + (1.0 + 4.0 * y).sqrt());
                s * s
            }
            Self::Log => y.max(0.0).exp(),
            Self::Power { rho } => y.max(0.0).powf(1.0 / rho),
            Self::ExpCapped => {
                if y >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-y.max(0.0)).ln_1p()
                }
            }
            Self::Custom(c) => (c.inverse)(y),
        }
    }

    pub fn first_derivative(&self, t: f64) -> f64 {
        match self {
            Self::Sqrt => 0.5 / t.sqrt(),
            Self::SqrtPlusLinear => 1.0 + 0.5 / t.sqrt(),
            Self::Log => 1.0 / t,
            Self::Power { rho } => rho * t.powf(rho - 1.0),
            Self::ExpCapped => (-t).exp(),
            Self::Custom(c) => (c.first_derivative)(t),
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match self {
            Self::Sqrt | Self::SqrtPlusLinear => -0.25 / (t * t.sqrt()),
            Self::Log => -1.0 / (t * t),
            Self::Power { rho } => rho * (rho - 1.0) * t.powf(rho - 2.0),
            Self::ExpCapped => -(-t).exp(),
            Self::Custom(c) => (c.second_derivative)(t),
        }
    }

    /// Spot-checks strict monotonicity, `inverse(value(t)) == t` to `1e-10`
    /// (relative for `|t| > 1`) and, where claimed, concavity on `points`
    /// evenly spaced grid points of `[lo, hi]`.
    pub fn check_on_grid(&self, lo: f64, hi: f64, points: usize) -> Result<()> {
        let dom = self.domain();
        if !(dom.contains(lo) && dom.contains(hi) && lo < hi && points >= 2) {
            return Err(Error::InvalidConfig(format!(
                "grid [{lo}, {hi}] with {points} points does not fit domain {dom}"
            )));
        }
        let grid: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let name = self.name();
        for w in grid.windows(2) {
            if self.value(w[1]) <= self.value(w[0]) {
                return Err(Error::InvalidModel(format!(
                    "{name} is not strictly increasing on [{}, {}]",
                    w[0], w[1]
                )));
            }
        }
        for &t in &grid {
            let back = self.inverse(self.value(t));
            if (back - t).abs() > 1e-10 * t.abs().max(1.0) {
                return Err(Error::InvalidModel(format!(
                    "{name}: inverse(value({t})) = {back}"
                )));
            }
            if self.is_concave() && t > dom.lo && self.second_derivative(t) > 0.0 {
                return Err(Error::InvalidModel(format!("{name} is not concave at {t}")));
            }
        }
        Ok(())
    }
}
