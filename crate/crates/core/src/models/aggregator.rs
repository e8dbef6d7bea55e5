use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::primitives::{dot, Act, Belief};

/// User-supplied aggregator, declared monotone and quasiconcave.
#[derive(Clone)]
pub struct CustomAggregator {
    pub name: String,
    pub eval: Arc<dyn Fn(&Act) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomAggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomAggregator")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// One monotone, quasiconcave map in a dual-self maximum.
#[derive(Debug, Clone)]
pub enum Aggregator {
    /// `<p, phi> + offset`.
    Affine {
        belief: Belief,
        offset: f64,
    },
    /// `(1 / lambda) * ln sum_j w_j exp(lambda <p_j, phi>)`.
    LogSumExp {
        lambda: f64,
        weights: Vec<f64>,
        beliefs: Vec<Belief>,
    },
    Custom(CustomAggregator),
}

impl Aggregator {
    pub fn affine(belief: Belief, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidModel(format!(
                "affine offset must be finite, got {offset}"
            )));
        }
        Ok(Self::Affine { belief, offset })
    }

    pub fn log_sum_exp(lambda: f64, weights: Vec<f64>, beliefs: Vec<Belief>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if weights.len() != beliefs.len() || beliefs.is_empty() {
            return Err(Error::InvalidModel(
                "log-sum-exp needs one weight per belief and at least one belief".into(),
            ));
        }
        // validates nonnegativity and unit sum
        Belief::new(weights.clone())
            .map_err(|e| Error::InvalidModel(format!("log-sum-exp weights: {e}")))?;
        let n = beliefs[0].len();
        for b in &beliefs {
            check_dim(n, b.len())?;
        }
        Ok(Self::LogSumExp {
            lambda,
            weights,
            beliefs,
        })
    }

    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Act) -> f64 + Send + Sync + 'static,
    {
        Self::Custom(CustomAggregator {
            name: name.into(),
            eval: Arc::new(f),
        })
    }

    /// Number of states this aggregator expects, if it fixes one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::Affine { belief, .. } => Some(belief.len()),
            Self::LogSumExp { beliefs, .. } => beliefs.first().map(|b| b.len()),
            Self::Custom(_) => None,
        }
    }

    pub fn eval(&self, act: &Act) -> Result<f64> {
        if let Some(n) = self.dimension() {
            check_dim(n, act.len())?;
        }
        Ok(match self {
            Self::Affine { belief, offset } => dot(act, belief) + offset,
            Self::LogSumExp {
                lambda,
                weights,
                beliefs,
            } => {
                let exponents: Vec<f64> = beliefs.iter().map(|b| lambda * dot(act, b)).collect();
                log_sum_exp(&exponents, weights) / lambda
            }
            Self::Custom(c) => (c.eval)(act),
        })
    }
}

/// `ln sum_j w_j exp(x_j)`, skipping zero weights, shifted for stability.
pub(crate) fn log_sum_exp(x: &[f64], w: &[f64]) -> f64 {
    let top = x
        .iter()
        .zip(w)
        .filter(|(_, &wj)| wj > 0.0)
        .map(|(&xj, _)| xj)
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    let sum: f64 = x
        .iter()
        .zip(w)
        .filter(|(_, &wj)| wj > 0.0)
        .map(|(&xj, &wj)| wj * (xj - top).exp())
        .sum();
    top + sum.ln()
}
