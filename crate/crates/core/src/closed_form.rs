//! Exact long-run cost rates for policies without deferral.
//!
//! Time inside a period is measured as the remaining time `t` until the next
//! scheduled opportunity, so `t = tau` is just after an SO and `t -> 0` is
//! just before the following one. Repairs at USOs are active while
//! `t > t_tilde`. The probability `p1(t)` of being in the satisfactory state
//! then solves a linear ODE whose coefficients switch at the control limit,
//! and the solution is a constant plus one exponential on each side:
//!
//! ```text
//! p1(t) = a1 + C1 exp(s1 t)   on [0, t~)      (no USO repair)
//! p1(t) = a2 + C2 exp(s2 t)   on [t~, tau)    (USO repair active)
//! ```
//!
//! with `s1 = mu1 + mu2`, `s2 = s1 + lambda p`, `a1 = mu2 / s1` and
//! `a2 = mu2 / s2`. The constants are pinned by continuity at `t~` and by
//! the SO renewal condition `p1(tau-) = (1 - p) p1(0)`. The cost rate needs
//! only `p1(0)` and integrals of `p1`, all of which are taken analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostBreakdown, ModelParams};

// ----------------------------------------------------------------------------
// Stationary profile
// ----------------------------------------------------------------------------

/// Periodic stationary occupancy of state 1 under a control-limit policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub c1: f64,
    pub c2: f64,
    pub t_tilde: f64,
    pub params: ModelParams,
}

/// Integral of `a + c exp(s t)` over `[lo, hi]`.
fn exp_affine_integral(a: f64, c: f64, s: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    a * (hi - lo) + c * ((s * hi).exp() - (s * lo).exp()) / s
}

/// Builds the profile for `0 <= t_tilde <= tau`; requires `p < 1`.
pub fn stationary_profile(params: &ModelParams, t_tilde: f64) -> Result<StationaryProfile> {
    params.check_threshold(t_tilde)?;
    if params.p >= 1.0 {
        return Err(Error::domain(
            "p",
            "p = 1 makes the profile constants singular; use cost_rate_perfect",
        ));
    }
    let (s1, s2) = (params.s1(), params.s2());
    let a1 = params.mu2 / s1;
    let a2 = params.mu2 / s2;
    let q = params.q();
    let lp = params.lambda * params.p;
    let e1 = (-s1 * t_tilde).exp();

    let num = a1 * (1.0 - e1) - a2 * (1.0 / q - e1);
    let den = (s2 * params.tau).exp() / q - (lp * t_tilde).exp();
    let c2 = num / den;
    let c1 = c2 * (lp * t_tilde).exp() - a1 * (lp / s2) * e1;
    Ok(StationaryProfile {
        c1,
        c2,
        t_tilde,
        params: *params,
    })
}

impl StationaryProfile {
    fn a1(&self) -> f64 {
        self.params.mu2 / self.params.s1()
    }

    fn a2(&self) -> f64 {
        self.params.mu2 / self.params.s2()
    }

    /// Occupancy of state 1 at `t` in `[0, tau)`.
    pub fn p1(&self, t: f64) -> f64 {
        if t < self.t_tilde {
            self.a1() + self.c1 * (self.params.s1() * t).exp()
        } else {
            self.a2() + self.c2 * (self.params.s2() * t).exp()
        }
    }

    /// Left limit of `p1` at the control limit, taken on the first branch.
    pub fn p1_left_of_switch(&self) -> f64 {
        self.a1() + self.c1 * (self.params.s1() * self.t_tilde).exp()
    }

    /// Left limit of `p1` at the next SO.
    pub fn p1_before_so(&self) -> f64 {
        if self.t_tilde >= self.params.tau {
            self.p1_left_of_switch()
        } else {
            self.a2() + self.c2 * (self.params.s2() * self.params.tau).exp()
        }
    }

    /// Integral of `p1` over `[lo, hi]` within `[0, tau]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let (s1, s2) = (self.params.s1(), self.params.s2());
        let cut = self.t_tilde;
        exp_affine_integral(self.a1(), self.c1, s1, lo, hi.min(cut))
            + exp_affine_integral(self.a2(), self.c2, s2, lo.max(cut), hi)
    }
}

// ----------------------------------------------------------------------------
// Cost rates
// ----------------------------------------------------------------------------

fn assemble(params: &ModelParams, p1_zero: f64, int_uso: f64, int_all: f64) -> CostBreakdown {
    let tau = params.tau;
    CostBreakdown::new(
        params.c_pm_so * p1_zero / tau,
        params.c_pm_uso * params.lambda * int_uso / tau,
        params.c_cm * params.mu1 * int_all / tau,
    )
}

/// Cost rate of the control-limit policy with threshold `t_tilde`.
///
/// `p = 1` is routed to [`cost_rate_perfect`] and `t_tilde = tau` to
/// [`cost_rate_only_so`].
pub fn cost_rate_control_limit(params: &ModelParams, t_tilde: f64) -> Result<CostBreakdown> {
    params.check_threshold(t_tilde)?;
    if params.p >= 1.0 {
        return cost_rate_perfect(params, t_tilde);
    }
    if t_tilde >= params.tau {
        return cost_rate_only_so(params);
    }
    let prof = stationary_profile(params, t_tilde)?;
    Ok(assemble(
        params,
        prof.p1(0.0),
        prof.integral(t_tilde, params.tau),
        prof.integral(0.0, params.tau),
    ))
}

/// Repairs at scheduled opportunities only. `lambda` plays no role.
pub fn cost_rate_only_so(params: &ModelParams) -> Result<CostBreakdown> {
    let s1 = params.s1();
    let a1 = params.mu2 / s1;
    let em1 = (s1 * params.tau).exp_m1();
    let d = em1 + params.p;
    let p1_zero = a1 * (1.0 - params.p / d);
    let int_all = a1 * (params.tau - params.p * em1 / (s1 * d));
    Ok(CostBreakdown::new(
        params.c_pm_so * p1_zero / params.tau,
        0.0,
        params.c_cm * params.mu1 * int_all / params.tau,
    ))
}

/// Repairs at every USO and never at scheduled opportunities.
pub fn cost_rate_only_uso(params: &ModelParams) -> Result<CostBreakdown> {
    let den = params.s2();
    Ok(CostBreakdown::new(
        0.0,
        params.c_pm_uso * params.lambda * params.mu2 / den,
        params.c_cm * params.mu1 * params.mu2 / den,
    ))
}

/// Corrective replacement only.
pub fn cost_rate_only_cm(params: &ModelParams) -> Result<CostBreakdown> {
    Ok(CostBreakdown::new(0.0, 0.0, params.cm_only_bound()))
}

/// Control-limit cost rate when every preventive action succeeds.
///
/// With `p = 1` the SO leaves the asset in state 2 for sure, so `p1` starts
/// each period at the value that makes it vanish just before the next SO.
pub fn cost_rate_perfect(params: &ModelParams, t_tilde: f64) -> Result<CostBreakdown> {
    params.check_threshold(t_tilde)?;
    if params.p != 1.0 {
        return Err(Error::domain("p", format!("perfect repair needs p = 1, got {}", params.p)));
    }
    let (s1, s2, tau) = (params.s1(), params.s2(), params.tau);
    let a1 = params.mu2 / s1;
    let a2 = params.mu2 / s2;
    let tail = (s2 * (t_tilde - tau)).exp();
    // p1(t) = a2 (1 - exp(s2 (t - tau)))          on [t~, tau)
    // p1(t) = a1 + k exp(s1 (t - t~))              on [0, t~)
    let k = a2 - a1 - a2 * tail;
    let int_uso = a2 * (tau - t_tilde) - a2 * (1.0 - tail) / s2;
    let int_head = a1 * t_tilde + k * (-(-s1 * t_tilde).exp_m1()) / s1;
    let p1_zero = if t_tilde > 0.0 {
        a1 + k * (-s1 * t_tilde).exp()
    } else {
        a2 * (1.0 - (-s2 * tau).exp())
    };
    Ok(assemble(params, p1_zero, int_uso, int_head + int_uso))
}
