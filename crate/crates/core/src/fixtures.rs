//! Reference instances: the two-agent betting example, a deliberately
//! broken functional, and a strictly subhomogeneous entropic model.

use std::sync::Arc;

use crate::error::Result;
use crate::models::{Aggregator, DualSelfMax, MultiplierOO, PreferenceModel};
use crate::primitives::{Act, Belief, UtilityInterval};
use crate::risksharing::{Agent, Allocation, Economy};

/// Utility range of the betting example.
pub fn betting_interval() -> UtilityInterval {
    UtilityInterval {
        lo: 0.0,
        hi: 1.0,
        lo_closed: true,
        hi_closed: true,
    }
}

/// `H1 = <(1/9, 8/9), f> - 0.1`, `H2` the log-sum-exp blend of `(1/4, 3/4)`
/// and `(3/4, 1/4)` at `lambda = 10`, and `H3 = <(8/9, 1/9), f> - 0.1`.
pub fn betting_aggregators() -> Vec<Aggregator> {
    let b = |w: [f64; 2]| Belief::from_unnormalized(w.to_vec()).expect("valid weights");
    vec![
        Aggregator::Affine {
            belief: b([1.0, 8.0]),
            offset: -0.1,
        },
        Aggregator::LogSumExp {
            lambda: 10.0,
            weights: vec![0.5, 0.5],
            beliefs: vec![b([1.0, 3.0]), b([3.0, 1.0])],
        },
        Aggregator::Affine {
            belief: b([8.0, 1.0]),
            offset: -0.1,
        },
    ]
}

/// `V = max(H1, H2, H3)`.
pub fn betting_model() -> DualSelfMax {
    DualSelfMax::new(betting_aggregators()).expect("betting aggregators share a dimension")
}

/// Two identical agents with utility `V`, each endowed with `(1/2, 1/2)`.
pub fn betting_economy() -> Economy {
    let v: PreferenceModel = betting_model().into();
    let agent = |name: &str| Agent::new(name, Arc::new(v.clone().bind(betting_interval(), 1e-12)));
    Economy::new(
        vec![agent("agent_1"), agent("agent_2")],
        vec![Act::from([0.5, 0.5]), Act::from([0.5, 0.5])],
    )
    .expect("endowments sum to a constant")
}

/// The full-insurance status quo `((1/2, 1/2), (1/2, 1/2))`.
pub fn betting_status_quo() -> Allocation {
    Allocation::new(vec![Act::from([0.5, 0.5]), Act::from([0.5, 0.5])])
}

/// `(min_s phi_s)^2`: monotone and normalized on `{0, 1}` constants only,
/// and not constant superadditive on `[0, 1]`.
pub fn squared_min(act: &Act) -> f64 {
    let m = act.min();
    m * m
}

/// `-lambda ln E_uniform exp(-phi / lambda)`: normalized, constant additive,
/// concave, and strictly positively subhomogeneous on non-constant acts.
pub fn entropic_multiplier(lambda: f64) -> Result<MultiplierOO> {
    // with no benchmark beliefs the menu is the uniform belief alone
    MultiplierOO::new(Vec::new(), 0.0, lambda)
}

/// `sqrt(min_s phi_s)`: monotone, but strictly subhomogeneous and so not
/// positively superhomogeneous on `[0, inf)`.
pub fn root_min(act: &Act) -> f64 {
    act.min().sqrt()
}
