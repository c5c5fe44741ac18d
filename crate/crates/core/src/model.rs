//! Parameter vector, policy family and cost breakdown shared by all modules.
//!
//! Time is measured in years and costs in currency units, so every cost rate
//! is currency per year. The repair-failure probability `1 - p` is always
//! derived on the fly and never stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ----------------------------------------------------------------------------
// Parameters
// ----------------------------------------------------------------------------

/// Rates, period, repair quality and costs of the single-asset model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Rate of leaving the failure-free state 2 (per year).
    pub mu2: f64,
    /// Failure rate from the satisfactory state 1 (per year).
    pub mu1: f64,
    /// Arrival rate of unscheduled opportunities (per year).
    pub lambda: f64,
    /// Probability that a preventive action restores the asset.
    pub p: f64,
    /// Spacing of scheduled opportunities (years).
    pub tau: f64,
    /// Cost of a corrective replacement.
    pub c_cm: f64,
    /// Cost of preventive maintenance at a scheduled opportunity.
    pub c_pm_so: f64,
    /// Cost of preventive maintenance at an unscheduled opportunity.
    pub c_pm_uso: f64,
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be finite and > 0, got {v}")))
    }
}

impl ModelParams {
    /// Checks every field and returns the record unchanged.
    pub fn validate(self) -> Result<Self> {
        positive("mu1", self.mu1)?;
        positive("mu2", self.mu2)?;
        positive("tau", self.tau)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::domain(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::domain("p", format!("must lie in (0, 1], got {}", self.p)));
        }
        positive("c_cm", self.c_cm)?;
        positive("c_pm_so", self.c_pm_so)?;
        positive("c_pm_uso", self.c_pm_uso)?;
        Ok(self)
    }

    /// Probability that a preventive action leaves the state unchanged.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Total exit rate `mu1 + mu2` of the two-state chain without repairs.
    pub fn s1(&self) -> f64 {
        self.mu1 + self.mu2
    }

    /// Exit rate with successful USO repairs active, `mu1 + mu2 + lambda p`.
    pub fn s2(&self) -> f64 {
        self.s1() + self.lambda * self.p
    }

    /// Long-run cost rate of doing nothing but corrective replacement.
    ///
    /// This is also an upper bound on the optimal average cost.
    pub fn cm_only_bound(&self) -> f64 {
        self.c_cm * self.mu1 * self.mu2 / (self.mu1 + self.mu2)
    }

    /// Checks that `t_tilde` is a legal control limit for these parameters.
    pub fn check_threshold(&self, t_tilde: f64) -> Result<()> {
        if t_tilde.is_finite() && (0.0..=self.tau).contains(&t_tilde) {
            Ok(())
        } else {
            Err(Error::domain(
                "t_tilde",
                format!("must lie in [0, tau = {}], got {t_tilde}", self.tau),
            ))
        }
    }
}

// ----------------------------------------------------------------------------
// Policies
// ----------------------------------------------------------------------------

/// Which opportunities a policy uses for preventive maintenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Corrective replacement only.
    NeverPm,
    /// Repair in state 1 at every scheduled opportunity, never at USOs.
    OnlySo,
    /// Repair in state 1 at every USO, never at scheduled opportunities.
    OnlyUso,
    /// Repair at every SO and at USOs with more than `t_tilde` years left
    /// until the next SO. `t_tilde = 0` repairs at every USO and
    /// `t_tilde = tau` at none.
    ControlLimit { t_tilde: f64 },
}

/// A maintenance policy together with its deferral flag.
///
/// With `defer` set, the scheduled-opportunity grid restarts `tau` years
/// after every successful maintenance, corrective replacement included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    #[serde(flatten)]
    pub kind: PolicyKind,
    #[serde(default)]
    pub defer: bool,
}

impl Policy {
    pub fn never_pm(defer: bool) -> Self {
        Policy { kind: PolicyKind::NeverPm, defer }
    }

    pub fn only_so(defer: bool) -> Self {
        Policy { kind: PolicyKind::OnlySo, defer }
    }

    pub fn only_uso(defer: bool) -> Self {
        Policy { kind: PolicyKind::OnlyUso, defer }
    }

    /// Control-limit policy with its threshold checked against `params`.
    pub fn control_limit(params: &ModelParams, t_tilde: f64, defer: bool) -> Result<Self> {
        params.check_threshold(t_tilde)?;
        Ok(Policy {
            kind: PolicyKind::ControlLimit { t_tilde },
            defer,
        })
    }

    /// Re-checks a policy that was built or deserialised elsewhere.
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        match self.kind {
            PolicyKind::ControlLimit { t_tilde } => params.check_threshold(t_tilde),
            _ => Ok(()),
        }
    }

    /// True when the policy repairs in state 1 at scheduled opportunities.
    pub fn repairs_at_so(&self) -> bool {
        matches!(self.kind, PolicyKind::OnlySo | PolicyKind::ControlLimit { .. })
    }

    /// True when a USO with `remaining` years left until the next SO
    /// triggers a repair in state 1.
    pub fn repairs_at_uso(&self, remaining: f64) -> bool {
        match self.kind {
            PolicyKind::NeverPm | PolicyKind::OnlySo => false,
            PolicyKind::OnlyUso => true,
            PolicyKind::ControlLimit { t_tilde } => remaining > t_tilde,
        }
    }
}

// ----------------------------------------------------------------------------
// Cost breakdown
// ----------------------------------------------------------------------------

/// Long-run cost rate split by the action that incurs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub so_pm: f64,
    pub uso_pm: f64,
    pub cm: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(so_pm: f64, uso_pm: f64, cm: f64) -> Self {
        CostBreakdown {
            so_pm,
            uso_pm,
            cm,
            total: so_pm + uso_pm + cm,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.so_pm * k, self.uso_pm * k, self.cm * k)
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self::new(
            self.so_pm + other.so_pm,
            self.uso_pm + other.uso_pm,
            self.cm + other.cm,
        )
    }
}

// ----------------------------------------------------------------------------
// Reference parameter sets
// ----------------------------------------------------------------------------

/// Parameter sets used in the examples, tests and bundled scenarios.
pub mod presets {
    use super::ModelParams;

    /// Wind-turbine gearbox: cheap SO repairs, Poisson opportunities from a
    /// neighbouring park, very expensive failures.
    pub fn wind() -> ModelParams {
        ModelParams {
            mu2: 0.31,
            mu1: 0.31,
            lambda: 4.0,
            p: 0.6,
            tau: 1.0,
            c_cm: 300_000.0,
            c_pm_so: 1000.0,
            c_pm_uso: 2000.0,
        }
    }

    /// Lithography machine: preventive and corrective costs of similar size.
    pub fn lithography() -> ModelParams {
        ModelParams {
            c_cm: 75_500.0,
            c_pm_so: 26_500.0,
            c_pm_uso: 28_800.0,
            ..wind()
        }
    }

    /// Synthetic case with a long SO period and fast degradation.
    pub fn artificial() -> ModelParams {
        ModelParams {
            mu2: 0.4,
            mu1: 1.0,
            lambda: 4.0,
            p: 0.5,
            tau: 4.0,
            c_cm: 19_000.0,
            c_pm_so: 5000.0,
            c_pm_uso: 10_000.0,
        }
    }

    /// Example where USO repairs are cheaper than SO repairs.
    pub fn uso_cheaper(p: f64) -> ModelParams {
        ModelParams {
            mu2: 0.9,
            mu1: 1.1,
            lambda: 0.5,
            p,
            tau: 1.0,
            c_cm: 10_000.0,
            c_pm_so: 4500.0,
            c_pm_uso: 4000.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wind_validates() {
        assert!(presets::wind().validate().is_ok());
    }

    #[test]
    fn rejects_named_fields() {
        let bad = ModelParams { p: 0.0, ..presets::wind() };
        assert!(matches!(bad.validate(), Err(Error::Domain { field: "p", .. })));
        let bad = ModelParams { tau: -1.0, ..presets::wind() };
        assert!(matches!(bad.validate(), Err(Error::Domain { field: "tau", .. })));
        let bad = ModelParams { c_pm_uso: -5.0, ..presets::wind() };
        assert!(matches!(bad.validate(), Err(Error::Domain { field: "c_pm_uso", .. })));
        let bad = ModelParams { lambda: f64::NAN, ..presets::wind() };
        assert!(matches!(bad.validate(), Err(Error::Domain { field: "lambda", .. })));
    }

    #[test]
    fn validation_is_idempotent() {
        let once = presets::lithography().validate().unwrap();
        assert_eq!(once.validate().unwrap(), once);
    }

    #[test]
    fn control_limit_range() {
        let w = presets::wind();
        let pol = Policy::control_limit(&w, 0.112, false).unwrap();
        assert_eq!(pol.kind, PolicyKind::ControlLimit { t_tilde: 0.112 });
        assert!(Policy::control_limit(&w, 0.0, true).unwrap().defer);
        assert!(Policy::control_limit(&w, w.tau + 0.1, false).is_err());
        assert_eq!(
            Policy::control_limit(&w, 0.5, true).unwrap(),
            Policy::control_limit(&w, 0.5, true).unwrap()
        );
    }

    #[test]
    fn breakdown_total_is_sum() {
        let b = CostBreakdown::new(1.5, 2.25, 3.0);
        assert_eq!(b.total, 6.75);
        assert_eq!(b.scaled(2.0).total, 13.5);
    }
}
