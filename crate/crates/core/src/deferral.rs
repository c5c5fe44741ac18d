//! Long-run cost rate when planned maintenance is deferred.
//!
//! With deferral the SO grid restarts `tau` years after every successful
//! maintenance, so those epochs are renewal points. A cycle consists of:
//!
//! 1. a stay in state 2 of mean `1 / mu2`; SOs passing meanwhile cost nothing,
//!    and the time `Y` from the change of state to the next SO follows the
//!    truncated exponential density `mu2 exp(-mu2 (tau - y)) / (1 - exp(-mu2 tau))`;
//! 2. a first interval of length `Y` in state 1. It ends with a successful
//!    USO repair, a failure, or the SO. USO repairs are allowed while more
//!    than `t_tilde` years remain, i.e. during the first `Y - t_tilde` years;
//! 3. if the SO repair fails, a geometric number of further full intervals
//!    of length `tau`, each of which can end the same three ways.
//!
//! Conditionally on `Y = y` every expectation of the first interval is a
//! short combination of exponentials, computed in [`cycle_conditionals`].
//! The expectation over `Y` is one adaptive quadrature, split at `t_tilde`.
//! The further intervals are all identical, so their contribution follows
//! from the `y = tau` conditionals and a geometric series with ratio
//! `p_u = (1 - p) P[reach the SO | y = tau]`.
//!
//! The SO cost of the first interval is charged once, whatever the repair
//! outcome. Its success share is booked with the cycles ending at the SO and
//! its failure share with the cycles that continue, so nothing is counted
//! twice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostBreakdown, ModelParams};
use crate::numeric::{integrate_many, QUAD_ABS_TOL};

// ----------------------------------------------------------------------------
// Residual time to the next SO
// ----------------------------------------------------------------------------

/// Density of the residual time `Y` on `[0, tau]`.
pub fn residual_time_density(params: &ModelParams, y: f64) -> f64 {
    if !(0.0..=params.tau).contains(&y) {
        return 0.0;
    }
    let norm = -(-params.mu2 * params.tau).exp_m1();
    params.mu2 * (-params.mu2 * (params.tau - y)).exp() / norm
}

/// Distribution function of `Y`.
pub fn residual_time_cdf(params: &ModelParams, y: f64) -> f64 {
    let (m, tau) = (params.mu2, params.tau);
    let y = y.clamp(0.0, tau);
    ((-m * (tau - y)).exp() - (-m * tau).exp()) / -(-m * tau).exp_m1()
}

/// Mean of `Y`, that is `tau - (1/mu2 - tau e^{-mu2 tau} / (1 - e^{-mu2 tau}))`.
pub fn residual_time_mean(params: &ModelParams) -> f64 {
    let (m, tau) = (params.mu2, params.tau);
    let e = (-m * tau).exp();
    tau - (1.0 / m - tau * e / (1.0 - e))
}

// ----------------------------------------------------------------------------
// Conditional expectations of the first interval
// ----------------------------------------------------------------------------

/// Outcome probabilities, partial lengths and partial costs of an interval of
/// length `y` in state 1, split by how the interval ends.
///
/// `el_*` is the expected interval length restricted to that outcome and
/// `ec_*` the expected cost restricted to it, including any failed USO
/// repairs along the way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleConditionals {
    pub y: f64,
    pub p_so: f64,
    pub p_uso: f64,
    pub p_cm: f64,
    pub el_uso: f64,
    pub el_so: f64,
    pub el_cm: f64,
    pub ec_uso: CostBreakdown,
    pub ec_so: CostBreakdown,
    pub ec_cm: CostBreakdown,
}

/// `int_u^v s exp(-k s) ds` for `k > 0`.
fn first_moment(k: f64, u: f64, v: f64) -> f64 {
    if v <= u {
        return 0.0;
    }
    ((1.0 + k * u) * (-k * u).exp() - (1.0 + k * v) * (-k * v).exp()) / (k * k)
}

/// Closed-form conditionals of an interval of length `y` under threshold
/// `t_tilde`.
pub fn cycle_conditionals(params: &ModelParams, t_tilde: f64, y: f64) -> Result<CycleConditionals> {
    params.check_threshold(t_tilde)?;
    if !(y.is_finite() && (0.0..=params.tau).contains(&y)) {
        return Err(Error::domain("y", format!("must lie in [0, tau], got {y}")));
    }
    let mu1 = params.mu1;
    let a = params.lambda * params.p;
    let lq = params.lambda * params.q();
    let r = mu1 + a;
    let w = (y - t_tilde).max(0.0);

    let ew = (-r * w).exp();
    let aw = (-a * w).exp();
    let tail = (-mu1 * w).exp() - (-mu1 * y).exp();

    let p_so = (-mu1 * y - a * w).exp();
    let p_uso = a / r * (1.0 - ew);
    let p_cm = mu1 / r * (1.0 - ew) + aw * tail;

    let m_window = first_moment(r, 0.0, w);
    let el_uso = a * m_window;
    let el_so = y * params.p * p_so;
    let el_cm = mu1 * (m_window + aw * first_moment(mu1, w, y));
    // Time spent inside the USO window before a failure.
    let window_before_cm = mu1 * m_window + w * aw * tail;

    let c_uso = params.c_pm_uso;
    Ok(CycleConditionals {
        y,
        p_so,
        p_uso,
        p_cm,
        el_uso,
        el_so,
        el_cm,
        ec_uso: CostBreakdown::new(0.0, c_uso * (p_uso + lq * el_uso), 0.0),
        ec_so: CostBreakdown::new(params.c_pm_so * p_so, c_uso * lq * w * p_so, 0.0),
        ec_cm: CostBreakdown::new(0.0, c_uso * lq * window_before_cm, params.c_cm * p_cm),
    })
}

// ----------------------------------------------------------------------------
// Renewal-reward assembly
// ----------------------------------------------------------------------------

/// Expected cycle cost and length under deferral, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeferralResult {
    pub t_tilde: f64,
    pub cycle_cost: f64,
    /// `1 / mu2` plus the expected time in state 1.
    pub cycle_length: f64,
    pub rate: f64,
    /// Probability that a full interval ends with a failed SO repair.
    pub p_u: f64,
    /// Expected time in state 1 for cycles that end by `Y`.
    pub length_within_y: f64,
    /// Expected time in state 1 for cycles that run past `Y`.
    pub length_beyond_y: f64,
    pub breakdown: CostBreakdown,
}

// Indices into the integrand vector.
const L_END: usize = 0;
const C_END_SO: usize = 1;
const C_END_USO: usize = 2;
const C_END_CM: usize = 3;
const P_CONT: usize = 4;
const L_CONT: usize = 5;
const C_CONT_SO: usize = 6;
const C_CONT_USO: usize = 7;
const N_TERMS: usize = 8;

fn terms(params: &ModelParams, t_tilde: f64, y: f64) -> [f64; N_TERMS] {
    let c = match cycle_conditionals(params, t_tilde, y.clamp(0.0, params.tau)) {
        Ok(c) => c,
        Err(_) => return [f64::NAN; N_TERMS],
    };
    let p = params.p;
    let q = params.q();
    let fy = residual_time_density(params, y);
    let end = c.ec_uso.plus(&c.ec_so.scaled(p)).plus(&c.ec_cm);
    let mut v = [0.0; N_TERMS];
    v[L_END] = c.el_uso + c.el_so + c.el_cm;
    v[C_END_SO] = end.so_pm;
    v[C_END_USO] = end.uso_pm;
    v[C_END_CM] = end.cm;
    v[P_CONT] = q * c.p_so;
    v[L_CONT] = q * c.p_so * y;
    v[C_CONT_SO] = q * c.ec_so.so_pm;
    v[C_CONT_USO] = q * c.ec_so.uso_pm;
    v.map(|x| x * fy)
}

/// Long-run cost rate of the deferred control-limit policy.
pub fn cost_rate_deferral(params: &ModelParams, t_tilde: f64) -> Result<DeferralResult> {
    cost_rate_deferral_tol(params, t_tilde, QUAD_ABS_TOL)
}

/// [`cost_rate_deferral`] with an explicit quadrature tolerance.
pub fn cost_rate_deferral_tol(
    params: &ModelParams,
    t_tilde: f64,
    abs_tol: f64,
) -> Result<DeferralResult> {
    params.check_threshold(t_tilde)?;
    let tau = params.tau;
    let f = |y: f64| terms(params, t_tilde, y);
    let mut e = integrate_many(f, 0.0, t_tilde, abs_tol)?;
    let upper = integrate_many(f, t_tilde, tau, abs_tol)?;
    for k in 0..N_TERMS {
        e[k] += upper[k];
    }

    // A full interval, as met after every failed SO repair.
    let full = cycle_conditionals(params, t_tilde, tau)?;
    let p = params.p;
    let q = params.q();
    let p_u = q * full.p_so;
    let stages = 1.0 / (1.0 - p_u);
    let full_len = full.el_uso + full.el_so + full.el_cm;
    let full_end = full.ec_uso.plus(&full.ec_so.scaled(p)).plus(&full.ec_cm);
    // Cost of an interval that ends with a failed SO repair.
    let lq = params.lambda * q;
    let restart = CostBreakdown::new(params.c_pm_so, params.c_pm_uso * lq * (tau - t_tilde), 0.0);

    let continuation_len = (tau * p_u + full_len) * stages;
    let continuation_cost = restart.scaled(p_u).plus(&full_end).scaled(stages);

    let length_within_y = e[L_END];
    let length_beyond_y = e[L_CONT] + e[P_CONT] * continuation_len;
    let cost = CostBreakdown::new(e[C_END_SO], e[C_END_USO], e[C_END_CM])
        .plus(&CostBreakdown::new(e[C_CONT_SO], e[C_CONT_USO], 0.0))
        .plus(&continuation_cost.scaled(e[P_CONT]));

    let cycle_length = 1.0 / params.mu2 + length_within_y + length_beyond_y;
    Ok(DeferralResult {
        t_tilde,
        cycle_cost: cost.total,
        cycle_length,
        rate: cost.total / cycle_length,
        p_u,
        length_within_y,
        length_beyond_y,
        breakdown: cost.scaled(1.0 / cycle_length),
    })
}

/// Grid search for the threshold minimising the deferred cost rate.
///
/// The grid is `0, step, 2 step, ...` with `tau` appended if it is not hit
/// exactly; ties go to the smallest threshold.
pub fn optimize_deferral_threshold(params: &ModelParams, grid_step: f64) -> Result<(f64, f64)> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::domain("grid_step", format!("must be > 0, got {grid_step}")));
    }
    let grid = threshold_grid(params.tau, grid_step);
    let rates = grid
        .par_iter()
        .map(|&t| cost_rate_deferral(params, t).map(|r| r.rate))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rates.iter().enumerate() {
        if *r < rates[best] {
            best = i;
        }
    }
    Ok((grid[best], rates[best]))
}

/// `0, step, 2 step, ...` up to `tau`, always ending exactly at `tau`.
pub fn threshold_grid(tau: f64, step: f64) -> Vec<f64> {
    let n = (tau / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(tau)).collect();
    if tau - g[n] > 1e-12 {
        g.push(tau);
    } else {
        g[n] = tau;
    }
    g
}
