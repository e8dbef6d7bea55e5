#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= tol)` is deliberate: NaN counts as a failure

pub mod attitudes;
pub mod duality;
pub mod error;
pub mod fixtures;
pub mod models;
pub mod optimize;
pub mod primitives;
pub mod report;
pub mod risksharing;
pub(crate) mod sampling;

pub use error::{Error, Result};
pub use primitives::{
    expectation, relative_entropy, Act, Belief, Functional, StateSpace, UtilityInterval,
};
pub use report::{CheckReport, Verdict, Witness};
pub use sampling::rng_from_seed;
