//! Oracles shared by the integration tests and the acceptance suite.
//!
//! Nothing here calls the analytical routines under test except the cost
//! rate that the grid minimiser scans.

#![allow(dead_code)]

use opm_core::closed_form::cost_rate_control_limit;
use opm_core::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ----------------------------------------------------------------------------
// Random parameter draws
// ----------------------------------------------------------------------------

pub fn draw(rng: &mut ChaCha8Rng) -> (ModelParams, f64) {
    let c_so = rng.random_range(500.0..5000.0);
    let params = ModelParams {
        mu1: rng.random_range(0.1..2.0),
        mu2: rng.random_range(0.1..2.0),
        lambda: rng.random_range(0.0..5.0),
        p: rng.random_range(0.2..0.95),
        tau: rng.random_range(0.25..3.0),
        c_cm: rng.random_range(1e4..3e5),
        c_pm_so: c_so,
        c_pm_uso: c_so * rng.random_range(0.5..3.0),
    };
    let t = rng.random_range(0.0..1.0) * params.tau;
    (params, t)
}

pub fn draws(seed: u64, n: usize) -> Vec<(ModelParams, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw(&mut rng)).collect()
}

// ----------------------------------------------------------------------------
// ODE oracle for the stationary profile
// ----------------------------------------------------------------------------

/// Integrates `p1` forward in elapsed time `s` from just after an SO, where
/// USO repairs are active for `s < tau - t_tilde`, and iterates on the value
/// after the SO until the renewal condition closes. Returns samples
/// `(remaining time, p1)`.
pub fn ode_profile(params: &ModelParams, t_tilde: f64, steps: usize) -> Vec<(f64, f64)> {
    let rhs = |x: f64, active: bool| {
        let repair = if active { params.lambda * params.p } else { 0.0 };
        params.mu2 * (1.0 - x) - params.mu1 * x - repair * x
    };
    let rk4 = |x: f64, h: f64, active: bool| {
        let k1 = rhs(x, active);
        let k2 = rhs(x + 0.5 * h * k1, active);
        let k3 = rhs(x + 0.5 * h * k2, active);
        let k4 = rhs(x + h * k3, active);
        x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let switch = params.tau - t_tilde;
    let sweep = |x0: f64, record: bool| {
        let mut out = Vec::new();
        let mut x = x0;
        let mut s = 0.0;
        for (lo, hi, active) in [(0.0, switch, true), (switch, params.tau, false)] {
            if hi <= lo {
                continue;
            }
            let n = ((hi - lo) / params.tau * steps as f64).ceil().max(1.0) as usize;
            let h = (hi - lo) / n as f64;
            for _ in 0..n {
                if record {
                    out.push((params.tau - s, x));
                }
                x = rk4(x, h, active);
                s += h;
            }
        }
        (x, out)
    };
    let mut start = 0.0;
    for _ in 0..500 {
        let (end, _) = sweep(start, false);
        let next = params.q() * end;
        if (next - start).abs() < 1e-15 {
            break;
        }
        start = next;
    }
    let (end, mut out) = sweep(start, true);
    out.push((0.0, end));
    out
}

// ----------------------------------------------------------------------------
// Grid minimiser
// ----------------------------------------------------------------------------

/// Argmin of the closed-form cost rate over a uniform threshold grid.
pub fn grid_argmin(params: &ModelParams, step: f64) -> (f64, f64) {
    let n = (params.tau / step).round() as usize;
    let (mut best_t, mut best_c) = (0.0, f64::INFINITY);
    for i in 0..=n {
        let t = (params.tau * i as f64 / n as f64).min(params.tau);
        let c = cost_rate_control_limit(params, t).unwrap().total;
        if c < best_c {
            best_c = c;
            best_t = t;
        }
    }
    (best_t, best_c)
}
