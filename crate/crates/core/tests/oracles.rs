//! Independent oracles for the analytical modules: a forward-time ODE
//! integrator, direct sampling of the interval outcomes, a grid minimiser and
//! the discrete-event simulator.

use opm_core::closed_form::{cost_rate_control_limit, stationary_profile};
use opm_core::deferral::{cost_rate_deferral, cycle_conditionals, residual_time_cdf};
use opm_core::optimal_policy::{classify_optimal, Regime};
use opm_core::simulator::{simulate, simulate_cycle_stats, SimConfig};
use opm_core::{presets, ModelParams, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;
use support::{draw, draws, grid_argmin, ode_profile};

#[test]
fn profile_matches_ode_on_wind() {
    let w = presets::wind();
    let prof = stationary_profile(&w, 0.112).unwrap();
    let sup = ode_profile(&w, 0.112, 20_000)
        .into_iter()
        .filter(|(t, _)| *t < w.tau)
        .map(|(t, x)| (prof.p1(t) - x).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 1e-8, "sup-norm {sup}");
}

#[test]
fn profile_matches_ode_on_random_draws() {
    for (params, t) in draws(11, 24) {
        let prof = stationary_profile(&params, t).unwrap();
        let sup = ode_profile(&params, t, 20_000)
            .into_iter()
            .filter(|(s, _)| *s < params.tau)
            .map(|(s, x)| (prof.p1(s) - x).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-8, "{params:?} t~={t}: sup-norm {sup}");
    }
}

// ----------------------------------------------------------------------------
// Direct sampling of the interval conditionals
// ----------------------------------------------------------------------------

struct Moments {
    n: f64,
    sum: [f64; 9],
    sq: [f64; 9],
}

impl Moments {
    fn new() -> Self {
        Moments {
            n: 0.0,
            sum: [0.0; 9],
            sq: [0.0; 9],
        }
    }

    fn add(&mut self, v: [f64; 9]) {
        self.n += 1.0;
        for (k, x) in v.into_iter().enumerate() {
            self.sum[k] += x;
            self.sq[k] += x * x;
        }
    }

    fn mean_se(&self, k: usize) -> (f64, f64) {
        let m = self.sum[k] / self.n;
        let var = (self.sq[k] / self.n - m * m).max(0.0);
        (m, (var / self.n).sqrt())
    }
}

/// Simulates an interval of length `y` in state 1: failure clock, USO
/// arrivals with individual success draws, repairs allowed during the first
/// `y - t_tilde` years.
fn sample_interval(params: &ModelParams, t_tilde: f64, y: f64, rng: &mut ChaCha8Rng) -> [f64; 9] {
    let fail = -rng.random::<f64>().ln() / params.mu1;
    let window = (y - t_tilde).max(0.0);
    let mut t = 0.0;
    let mut failed_usos = 0.0;
    let mut success = f64::INFINITY;
    if params.lambda > 0.0 {
        loop {
            t += -rng.random::<f64>().ln() / params.lambda;
            if t >= window.min(fail) {
                break;
            }
            if rng.random::<f64>() < params.p {
                success = t;
                break;
            }
            failed_usos += 1.0;
        }
    }
    let c_uso = params.c_pm_uso;
    // [p_so, p_uso, p_cm, el_uso, el_so, el_cm, ec_uso, ec_so, ec_cm]
    let mut v = [0.0; 9];
    if success < fail && success < y {
        v[1] = 1.0;
        v[3] = success;
        v[6] = c_uso * (failed_usos + 1.0);
    } else if fail < y {
        v[2] = 1.0;
        v[5] = fail;
        v[8] = params.c_cm + c_uso * failed_usos;
    } else {
        v[0] = 1.0;
        // Only the successful share of the SO length is counted.
        v[4] = if rng.random::<f64>() < params.p { y } else { 0.0 };
        v[7] = params.c_pm_so + c_uso * failed_usos;
    }
    v
}

#[test]
fn conditionals_match_direct_sampling() {
    let w = presets::wind();
    let (t, y) = (0.3, 0.8);
    let c = cycle_conditionals(&w, t, y).unwrap();
    let closed = [
        c.p_so,
        c.p_uso,
        c.p_cm,
        c.el_uso,
        c.el_so,
        c.el_cm,
        c.ec_uso.total,
        c.ec_so.total,
        c.ec_cm.total,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut m = Moments::new();
    for _ in 0..1_000_000 {
        m.add(sample_interval(&w, t, y, &mut rng));
    }
    let names = ["p_so", "p_uso", "p_cm", "el_uso", "el_so", "el_cm", "ec_uso", "ec_so", "ec_cm"];
    for k in 0..9 {
        let (mean, se) = m.mean_se(k);
        assert!(
            (mean - closed[k]).abs() <= 4.0 * se,
            "{}: closed {} sampled {} (se {})",
            names[k],
            closed[k],
            mean,
            se
        );
    }
}

// ----------------------------------------------------------------------------
// Simulation equivalence
// ----------------------------------------------------------------------------

fn sim_config(seed: u64) -> SimConfig {
    SimConfig {
        horizon: 1e5,
        replications: 20,
        seed,
        batch: None,
    }
}

#[test]
fn control_limit_rate_matches_simulation() {
    for (i, (params, t)) in draws(31, 20).into_iter().enumerate() {
        let exact = cost_rate_control_limit(&params, t).unwrap().total;
        let pol = Policy::control_limit(&params, t, false).unwrap();
        let est = simulate(&params, &pol, &sim_config(100 + i as u64)).unwrap();
        let z = (est.rate - exact) / est.std_err;
        assert!(z.abs() <= 3.0, "draw {i} {params:?} t~={t}: exact {exact} sim {} z {z}", est.rate);
    }
}

#[test]
fn deferral_rate_matches_simulation() {
    for (i, (params, t)) in draws(47, 20).into_iter().enumerate() {
        let exact = cost_rate_deferral(&params, t).unwrap().rate;
        let pol = Policy::control_limit(&params, t, true).unwrap();
        let est = simulate(&params, &pol, &sim_config(200 + i as u64)).unwrap();
        let z = (est.rate - exact) / est.std_err;
        assert!(z.abs() <= 3.0, "draw {i} {params:?} t~={t}: exact {exact} sim {} z {z}", est.rate);
    }
}

#[test]
fn only_cm_matches_simulation_on_wind() {
    let w = presets::wind();
    let est = simulate(&w, &Policy::never_pm(false), &sim_config(1)).unwrap();
    assert!((est.rate - 46_500.0).abs() <= 3.0 * est.std_err, "{est:?}");
    let freq = w.mu1 * w.mu2 / (w.mu1 + w.mu2);
    assert!(est.counts.cm <= freq * (1.0 + 5.0 * est.std_err / est.rate));
}

#[test]
fn doubling_replications_shrinks_the_error() {
    let w = presets::wind();
    let pol = Policy::control_limit(&w, 0.2, false).unwrap();
    let base = SimConfig {
        horizon: 2e4,
        replications: 40,
        seed: 5,
        batch: None,
    };
    let a = simulate(&w, &pol, &base).unwrap();
    let b = simulate(&w, &pol, &SimConfig { replications: 80, ..base }).unwrap();
    let ratio = b.std_err / a.std_err;
    assert!((ratio - 0.5f64.sqrt()).abs() <= 0.2 * 0.5f64.sqrt(), "ratio {ratio}");
}

// ----------------------------------------------------------------------------
// Renewal cycles
// ----------------------------------------------------------------------------

#[test]
fn cycle_length_and_residual_time_distribution() {
    let w = presets::wind();
    let t = 0.3;
    let exact = cost_rate_deferral(&w, t).unwrap();
    let st = simulate_cycle_stats(&w, t, &sim_config(9)).unwrap();
    let z = (st.mean_length - exact.cycle_length) / st.length_std_err;
    assert!(z.abs() <= 3.0, "mean length {} vs {}", st.mean_length, exact.cycle_length);
    let z = (st.mean_cost - exact.cycle_cost) / st.cost_std_err;
    assert!(z.abs() <= 3.0, "mean cost {} vs {}", st.mean_cost, exact.cycle_cost);

    // Kolmogorov-Smirnov on the first 10^5 residual times.
    let mut ys: Vec<f64> = st.y_samples.iter().copied().take(100_000).collect();
    assert_eq!(ys.len(), 100_000);
    ys.sort_by(f64::total_cmp);
    let n = ys.len() as f64;
    let d = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = residual_time_cdf(&w, y);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS statistic {d} vs {critical}");
}

// ----------------------------------------------------------------------------
// Threshold against grid minimisation
// ----------------------------------------------------------------------------

#[test]
fn threshold_is_the_grid_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    while checked < 50 {
        let (params, _) = draw(&mut rng);
        let params = ModelParams {
            c_pm_uso: params.c_pm_so * rng.random_range(1.05..2.0),
            ..params
        };
        let r = classify_optimal(&params).unwrap();
        if !matches!(r.regime, Regime::SoAndUsoThreshold | Regime::SoAndUsoAlways) {
            continue;
        }
        let t_hat = r.t_hat.unwrap();
        let (best_t, _) = grid_argmin(&params, 1e-4);
        assert!(
            (best_t - t_hat).abs() <= 2e-4,
            "{params:?}: t_hat {t_hat} grid argmin {best_t}"
        );
        checked += 1;
    }
}
