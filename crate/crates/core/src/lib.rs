//! Policy analytics for a three-state degrading asset with periodic scheduled
//! opportunities, Poisson unscheduled opportunities and imperfect repair.
//!
//! The asset moves from the perfect state 2 to the satisfactory state 1 and
//! then fails, after exponential sojourns. A failure is repaired at once at
//! cost `c_cm`. Preventive maintenance in state 1 is possible at scheduled
//! opportunities (every `tau` years) and at unscheduled opportunities
//! (Poisson, rate `lambda`), and restores the asset with probability `p`.
//!
//! * [`model`] holds the parameter vector, the policy family and the cost
//!   breakdown.
//! * [`closed_form`] gives exact cost rates without deferral.
//! * [`optimal_policy`] classifies the optimal policy and its threshold.
//! * [`bellman_verify`] rebuilds the optimality conditions independently.
//! * [`deferral`] evaluates policies whose SO grid restarts after repairs.
//! * [`simulator`] is a discrete-event Monte Carlo oracle for all of them.

pub mod bellman_verify;
pub mod closed_form;
pub mod deferral;
pub mod error;
pub mod model;
pub mod numeric;
pub mod optimal_policy;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{presets, CostBreakdown, ModelParams, Policy, PolicyKind};

/// Long-run cost rate of any policy, with or without deferral.
///
/// Deferral changes nothing for policies that never repair at SOs, because
/// the SO grid is then irrelevant.
pub fn evaluate(params: &ModelParams, policy: &Policy) -> Result<CostBreakdown> {
    let params = params.validate()?;
    policy.check(&params)?;
    match (policy.kind, policy.defer) {
        (PolicyKind::NeverPm, _) => closed_form::cost_rate_only_cm(&params),
        (PolicyKind::OnlyUso, _) => closed_form::cost_rate_only_uso(&params),
        (PolicyKind::OnlySo, false) => closed_form::cost_rate_only_so(&params),
        (PolicyKind::OnlySo, true) => {
            deferral::cost_rate_deferral(&params, params.tau).map(|r| r.breakdown)
        }
        (PolicyKind::ControlLimit { t_tilde }, false) => {
            closed_form::cost_rate_control_limit(&params, t_tilde)
        }
        (PolicyKind::ControlLimit { t_tilde }, true) => {
            deferral::cost_rate_deferral(&params, t_tilde).map(|r| r.breakdown)
        }
    }
}
