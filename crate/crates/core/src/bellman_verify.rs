//! Verification layer built on the average-cost optimality equations.
//!
//! Write `D(t)` for the value of being in the satisfactory state minus the
//! value of the perfect state when `t` years remain until the next SO. A
//! repair with success probability `p` and cost `c` is worthwhile exactly when
//! `p D(t) > c`, so every optimal-policy statement reduces to comparing `D`
//! with `c_so / p` (at SOs) and `c_uso / p` (at USOs). `D` solves a linear ODE
//! in `t` that switches between two exponential regimes, and an SO closes the
//! period through `D(0) = c_so + (1 - p) D(tau)` whenever repair is used.
//!
//! This module rebuilds `D` for the ordering `c_so < c_uso` without calling
//! the classifier, then checks the inequalities that each regime requires.
//! The threshold is obtained here by eliminating `t*` in favour of `D(tau)`,
//! which is independent of the direct root search in
//! [`crate::optimal_policy`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::optimal_policy::{CostOrdering, OptimalPolicyResult, Regime};

// ----------------------------------------------------------------------------
// Piecewise exponential representation
// ----------------------------------------------------------------------------

/// `level + coef * exp(rate * (anchor - t))` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpPiece {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub coef: f64,
    pub rate: f64,
    pub anchor: f64,
}

impl ExpPiece {
    pub fn eval(&self, t: f64) -> f64 {
        self.level + self.coef * (self.rate * (self.anchor - t)).exp()
    }
}

/// Case label of the value-difference construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellmanCase {
    /// `D` is constant; no preventive action pays off.
    I,
    /// SO repair pays off, USO repair never does.
    II,
    /// USO repair pays off once more than `t*` years remain.
    III,
    /// Border between II and III: `D(tau) = c_uso / p`.
    IV,
}

/// The function `t -> D(t)` on `[0, tau]` with its case and key values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDifference {
    pub regime: BellmanCase,
    /// `D(tau)`.
    pub boundary_value: f64,
    /// Crossing time with `c_uso / p`; may be negative, in which case the
    /// USO level is exceeded on the whole period.
    pub t_star: Option<f64>,
    /// Boundary value of the glued two-piece solution that defines `t_star`.
    pub glued_boundary: Option<f64>,
    /// Only-corrective cost rate, an upper bound on the optimal average cost.
    pub g_bound: f64,
    pub pieces: Vec<ExpPiece>,
}

impl ValueDifference {
    /// Evaluates `D(t)` for `t` in `[0, tau]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| t <= p.hi)
            .or(self.pieces.last())
            .map(|p| p.eval(t))
            .unwrap_or(f64::NAN)
    }

    /// Value of the glued upper branch at `t_star` minus `c_uso / p`.
    ///
    /// The upper branch is extended analytically when `t_star < 0`.
    pub fn crossing_residual(&self, params: &ModelParams) -> Option<f64> {
        let (t, d_tau) = (self.t_star?, self.glued_boundary?);
        let a = a_level(params);
        let v = a + (d_tau - a) * (params.s2() * (params.tau - t)).exp();
        Some(v - params.c_pm_uso / params.p)
    }
}

fn a_level(params: &ModelParams) -> f64 {
    (params.mu1 * params.c_cm + params.lambda * params.c_pm_uso) / params.s2()
}

fn b_level(params: &ModelParams) -> f64 {
    params.mu1 * params.c_cm / params.s1()
}

// ----------------------------------------------------------------------------
// Construction
// ----------------------------------------------------------------------------

/// Average-cost bound `c_cm mu1 mu2 / (mu1 + mu2)`.
pub fn g_bound(params: &ModelParams) -> f64 {
    params.cm_only_bound()
}

/// Solves for `D(tau)` in the two-piece case by bisection on the wrap-around
/// mismatch, with `t*` written as a function of `D(tau)`.
fn glued_boundary(params: &ModelParams) -> Option<(f64, f64)> {
    let (a, b) = (a_level(params), b_level(params));
    let u = params.c_pm_uso / params.p;
    let (s1, s2, tau) = (params.s1(), params.s2(), params.tau);
    let t_of = |d: f64| tau - ((a - u) / (a - d)).ln() / s2;
    let g = |d: f64| params.c_pm_so + params.q() * d - b - (u - b) * (s1 * t_of(d)).exp();
    let (mut lo, mut hi) = (u, a);
    let glo = g(lo);
    // The mismatch tends to c_so + (1-p) A - B as D(tau) approaches A.
    let ghi = params.c_pm_so + params.q() * a - b;
    if glo == 0.0 {
        return Some((u, tau));
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    Some((d, t_of(d)))
}

/// Builds `D` for `c_so < c_uso` and checks it on a `tau / 1000` grid.
pub fn value_difference(params: &ModelParams) -> Result<ValueDifference> {
    let params = params.validate()?;
    if CostOrdering::of(&params) != CostOrdering::SoCheaper {
        return Err(Error::domain(
            "c_pm_so",
            "value-difference construction needs c_pm_so < c_pm_uso",
        ));
    }
    let p = params.p;
    let (s1, s2, tau) = (params.s1(), params.s2(), params.tau);
    let (a, b) = (a_level(&params), b_level(&params));
    let u = params.c_pm_uso / p;
    let bound = g_bound(&params);

    let vd = if params.mu1 * params.c_cm <= s1 * params.c_pm_so / p {
        ValueDifference {
            regime: BellmanCase::I,
            boundary_value: b,
            t_star: None,
            glued_boundary: None,
            g_bound: bound,
            pieces: vec![ExpPiece {
                lo: 0.0,
                hi: tau,
                level: b,
                coef: 0.0,
                rate: 0.0,
                anchor: tau,
            }],
        }
    } else {
        let em1 = (s1 * tau).exp_m1();
        let d_tau = (params.c_pm_so + b * em1) / (em1 + p);
        let so_piece = ExpPiece {
            lo: 0.0,
            hi: tau,
            level: b,
            coef: d_tau - b,
            rate: s1,
            anchor: tau,
        };
        if (d_tau - u).abs() <= 1e-12 * u {
            ValueDifference {
                regime: BellmanCase::IV,
                boundary_value: d_tau,
                t_star: Some(tau),
                glued_boundary: Some(d_tau),
                g_bound: bound,
                pieces: vec![so_piece],
            }
        } else if d_tau < u {
            ValueDifference {
                regime: BellmanCase::II,
                boundary_value: d_tau,
                t_star: None,
                glued_boundary: None,
                g_bound: bound,
                pieces: vec![so_piece],
            }
        } else {
            let glued = glued_boundary(&params);
            match glued {
                Some((d_glued, t_star)) if t_star >= 0.0 => ValueDifference {
                    regime: BellmanCase::III,
                    boundary_value: d_glued,
                    t_star: Some(t_star),
                    glued_boundary: Some(d_glued),
                    g_bound: bound,
                    pieces: vec![
                        ExpPiece {
                            lo: 0.0,
                            hi: t_star,
                            level: b,
                            coef: u - b,
                            rate: s1,
                            anchor: t_star,
                        },
                        ExpPiece {
                            lo: t_star,
                            hi: tau,
                            level: a,
                            coef: d_glued - a,
                            rate: s2,
                            anchor: tau,
                        },
                    ],
                },
                _ => {
                    // The crossing lies before the SO: USO repair is used over
                    // the whole period and a single upper branch closes it.
                    let em2 = (s2 * tau).exp_m1();
                    let d_one = (params.c_pm_so + a * em2) / (em2 + p);
                    ValueDifference {
                        regime: BellmanCase::III,
                        boundary_value: d_one,
                        t_star: glued.map(|g| g.1),
                        glued_boundary: glued.map(|g| g.0),
                        g_bound: bound,
                        pieces: vec![ExpPiece {
                            lo: 0.0,
                            hi: tau,
                            level: a,
                            coef: d_one - a,
                            rate: s2,
                            anchor: tau,
                        }],
                    }
                }
            }
        }
    };
    check_shape(&params, &vd)?;
    Ok(vd)
}

fn check_shape(params: &ModelParams, vd: &ValueDifference) -> Result<()> {
    let p = params.p;
    let u = params.c_pm_uso / p;
    let so = params.c_pm_so / p;
    let tol = 1e-9 * u.max(1.0);
    let tau = params.tau;
    let fail = |what: String| Err(Error::RegimeMismatch(what));

    let d_tau = vd.boundary_value;
    match vd.regime {
        BellmanCase::I if d_tau > so + tol => {
            return fail(format!("case I needs D(tau) <= c_so/p, got {d_tau}"));
        }
        BellmanCase::II | BellmanCase::IV if d_tau <= so - tol => {
            return fail(format!("case II needs D(tau) > c_so/p, got {d_tau}"));
        }
        BellmanCase::III if d_tau >= a_level(params) + tol => {
            return fail(format!("case III needs D(tau) below the USO level, got {d_tau}"));
        }
        _ => {}
    }
    let wrap = vd.eval(0.0) - params.c_pm_so - params.q() * d_tau;
    if vd.regime != BellmanCase::I && wrap.abs() > tol {
        return fail(format!("wrap-around condition off by {wrap}"));
    }

    let n = 1000;
    for i in 0..=n {
        let t = tau * i as f64 / n as f64;
        let d = vd.eval(t);
        let ok = match vd.regime {
            BellmanCase::I => (d - d_tau).abs() <= tol,
            BellmanCase::II | BellmanCase::IV => d <= u + tol,
            BellmanCase::III => match vd.pieces.len() {
                2 if t <= vd.pieces[0].hi => d <= u + tol,
                _ => d >= u - tol,
            },
        };
        if !ok {
            return fail(format!("{:?} violated at t = {t}: D = {d}", vd.regime));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------------
// Regime report
// ----------------------------------------------------------------------------

/// One inequality with its signed violation; `residual <= 0` means it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub passed: bool,
    pub checks: Vec<RegimeCheck>,
}

fn non_strict(name: &str, residual: f64) -> RegimeCheck {
    RegimeCheck {
        name: name.to_string(),
        residual,
        passed: residual <= 0.0,
    }
}

fn strict(name: &str, residual: f64) -> RegimeCheck {
    RegimeCheck {
        name: name.to_string(),
        residual,
        passed: residual < 0.0,
    }
}

/// Checks that the regime claimed by `result` is consistent with the value
/// difference rebuilt from scratch, and that the cost respects the bound.
pub fn check_regime_conditions(params: &ModelParams, result: &OptimalPolicyResult) -> RegimeReport {
    let mut checks = Vec::new();
    let p = params.p;
    let gain = params.mu1 * params.c_cm;
    let s1 = params.s1();
    let bound = g_bound(params);
    checks.push(non_strict(
        "cost <= corrective-only bound",
        result.cost_rate - bound * (1.0 + 1e-12),
    ));

    match CostOrdering::of(params) {
        CostOrdering::SoCheaper => match value_difference(params) {
            Err(e) => checks.push(RegimeCheck {
                name: format!("value difference construction: {e}"),
                residual: f64::NAN,
                passed: false,
            }),
            Ok(vd) => {
                let d = vd.boundary_value;
                let so = params.c_pm_so / p;
                let uso = params.c_pm_uso / p;
                match result.regime {
                    Regime::NeverPm => checks.push(non_strict("D(tau) <= c_so/p", d - so)),
                    Regime::SoOnly => {
                        checks.push(strict("D(tau) > c_so/p", so - d));
                        checks.push(non_strict("D(tau) <= c_uso/p", d - uso));
                    }
                    Regime::SoAndUsoThreshold | Regime::SoAndUsoAlways => {
                        checks.push(strict("D(tau) > c_uso/p", uso - d));
                        checks.push(strict("D(tau) < USO level", d - a_level(params)));
                        if let (Some(t_hat), Some(t_star)) = (result.t_hat, vd.t_star) {
                            let diff = (t_star.clamp(0.0, params.tau) - t_hat).abs();
                            checks.push(non_strict("threshold agrees (1e-6)", diff - 1e-6));
                        }
                    }
                    other => checks.push(RegimeCheck {
                        name: format!("{other:?} is not a candidate when c_so < c_uso"),
                        residual: 1.0,
                        passed: false,
                    }),
                }
            }
        },
        CostOrdering::Equal => {
            let margin = gain - s1 * params.c_pm_so / p;
            match result.regime {
                Regime::NeverPm => checks.push(non_strict("repair margin <= 0", margin)),
                Regime::Both => checks.push(strict("repair margin > 0", -margin)),
                other => checks.push(RegimeCheck {
                    name: format!("{other:?} is not a candidate for equal costs"),
                    residual: 1.0,
                    passed: false,
                }),
            }
        }
        CostOrdering::UsoCheaper => {
            let uso = gain - s1 * params.c_pm_uso / p;
            let so = gain - s1 * params.c_pm_so / p
                - params.lambda * (params.c_pm_so - params.c_pm_uso);
            match result.regime {
                Regime::NeverPm => checks.push(non_strict("USO repair margin <= 0", uso)),
                Regime::UsoOnly => {
                    checks.push(strict("USO repair margin > 0", -uso));
                    checks.push(non_strict("SO repair margin <= 0", so));
                }
                Regime::Both => {
                    checks.push(strict("USO repair margin > 0", -uso));
                    checks.push(strict("SO repair margin > 0", -so));
                }
                other => checks.push(RegimeCheck {
                    name: format!("{other:?} is not a candidate when c_uso < c_so"),
                    residual: 1.0,
                    passed: false,
                }),
            }
        }
    }
    RegimeReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
