//! Discrete-event Monte Carlo simulation of the maintained asset.
//!
//! The simulation shares no formulas with the analytical modules and serves
//! as their oracle. Each replication draws from its own ChaCha stream keyed
//! by `(seed, replication index)`, so results do not depend on how rayon
//! schedules the work.
//!
//! Event ties have probability zero. If they happen in floating point, the
//! change of state (or failure) is handled first, then the SO, then the USO.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{CostBreakdown, ModelParams, Policy};

// ----------------------------------------------------------------------------
// Configuration and results
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Simulated years per replication.
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
    /// Optional batch length (years) for a batch-means standard error.
    pub batch: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 1e5,
            replications: 20,
            seed: 0,
            batch: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::domain("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if self.replications == 0 {
            return Err(Error::domain("replications", "must be at least 1"));
        }
        if let Some(b) = self.batch {
            if !(b.is_finite() && b > 0.0 && b <= self.horizon) {
                return Err(Error::domain("batch", format!("must lie in (0, horizon], got {b}")));
            }
        }
        Ok(())
    }
}

/// Events per simulated year.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    pub cm: f64,
    pub so_success: f64,
    pub so_failure: f64,
    pub uso_success: f64,
    pub uso_failure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub rate: f64,
    pub std_err: f64,
    /// Half-width of a 95% confidence interval for `rate`.
    pub ci95: f64,
    pub breakdown: CostBreakdown,
    pub counts: EventCounts,
    pub replications: usize,
    pub horizon: f64,
    pub seed: u64,
}

// ----------------------------------------------------------------------------
// Event loop
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    /// Change from state 2 to state 1; carries the time to the next SO.
    Degrade { to_so: f64 },
    Failure,
    SoRepair { success: bool },
    UsoRepair { success: bool },
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    fn exp(&mut self, rate: f64) -> f64 {
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        Exp::new(rate).map(|d| d.sample(&mut self.rng)).unwrap_or(f64::INFINITY)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        use rand::Rng;
        self.rng.random::<f64>() < p
    }
}

/// Runs one replication, reporting every costed or state-changing event with
/// its time and cost.
fn run<F: FnMut(f64, Event, CostBreakdown)>(
    params: &ModelParams,
    policy: &Policy,
    horizon: f64,
    sampler: &mut Sampler,
    mut observe: F,
) {
    let tau = params.tau;
    let mut perfect = true;
    let mut next_change = sampler.exp(params.mu2);
    let mut next_so = tau;
    let mut next_uso = sampler.exp(params.lambda);

    loop {
        let t = next_change.min(next_so).min(next_uso);
        if t > horizon {
            break;
        }
        if next_change <= next_so && next_change <= next_uso {
            if perfect {
                perfect = false;
                next_change = t + sampler.exp(params.mu1);
                observe(t, Event::Degrade { to_so: next_so - t }, CostBreakdown::zero());
            } else {
                perfect = true;
                next_change = t + sampler.exp(params.mu2);
                if policy.defer {
                    next_so = t + tau;
                }
                observe(t, Event::Failure, CostBreakdown::new(0.0, 0.0, params.c_cm));
            }
        } else if next_so <= next_uso {
            next_so += tau;
            if !perfect && policy.repairs_at_so() {
                let success = sampler.bernoulli(params.p);
                if success {
                    perfect = true;
                    next_change = t + sampler.exp(params.mu2);
                    if policy.defer {
                        next_so = t + tau;
                    }
                }
                observe(
                    t,
                    Event::SoRepair { success },
                    CostBreakdown::new(params.c_pm_so, 0.0, 0.0),
                );
            }
        } else {
            next_uso = t + sampler.exp(params.lambda);
            if !perfect && policy.repairs_at_uso(next_so - t) {
                let success = sampler.bernoulli(params.p);
                if success {
                    perfect = true;
                    next_change = t + sampler.exp(params.mu2);
                    if policy.defer {
                        next_so = t + tau;
                    }
                }
                observe(
                    t,
                    Event::UsoRepair { success },
                    CostBreakdown::new(0.0, params.c_pm_uso, 0.0),
                );
            }
        }
    }
}

// ----------------------------------------------------------------------------
// Long-run cost rate
// ----------------------------------------------------------------------------

struct Replication {
    cost: CostBreakdown,
    counts: [u64; 5],
    batches: Vec<f64>,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn t_quantile(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(1.96)
}

/// Estimates the long-run cost rate of `policy` by independent replications.
pub fn simulate(params: &ModelParams, policy: &Policy, config: &SimConfig) -> Result<SimEstimate> {
    let params = params.validate()?;
    policy.check(&params)?;
    config.validate()?;
    let horizon = config.horizon;
    let n_batches = config.batch.map(|b| (horizon / b).floor() as usize).unwrap_or(0);

    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut sampler = Sampler::new(config.seed, i as u64);
            let mut cost = CostBreakdown::zero();
            let mut counts = [0u64; 5];
            let mut batches = vec![0.0; n_batches];
            run(&params, policy, horizon, &mut sampler, |t, ev, c| {
                cost = cost.plus(&c);
                let slot = match ev {
                    Event::Degrade { .. } => None,
                    Event::Failure => Some(0),
                    Event::SoRepair { success: true } => Some(1),
                    Event::SoRepair { success: false } => Some(2),
                    Event::UsoRepair { success: true } => Some(3),
                    Event::UsoRepair { success: false } => Some(4),
                };
                if let Some(k) = slot {
                    counts[k] += 1;
                }
                if let Some(b) = config.batch {
                    let idx = (t / b) as usize;
                    if idx < n_batches {
                        batches[idx] += c.total;
                    }
                }
            });
            Replication {
                cost,
                counts,
                batches,
            }
        })
        .collect();

    let rates: Vec<f64> = reps.iter().map(|r| r.cost.total / horizon).collect();
    let (rate, rep_se) = mean_and_se(&rates);
    let (std_err, dof) = match config.batch {
        Some(b) if n_batches > 0 => {
            let means: Vec<f64> = reps
                .iter()
                .flat_map(|r| r.batches.iter().map(move |c| c / b))
                .collect();
            let n = means.len();
            (mean_and_se(&means).1, n.saturating_sub(1))
        }
        _ => (rep_se, config.replications.saturating_sub(1)),
    };
    let ci95 = if dof == 0 { 0.0 } else { t_quantile(dof) * std_err };

    let n = config.replications as f64;
    let per_year = |k: usize| reps.iter().map(|r| r.counts[k] as f64).sum::<f64>() / (n * horizon);
    let total = reps
        .iter()
        .fold(CostBreakdown::zero(), |acc, r| acc.plus(&r.cost))
        .scaled(1.0 / (n * horizon));

    Ok(SimEstimate {
        rate,
        std_err,
        ci95,
        breakdown: total,
        counts: EventCounts {
            cm: per_year(0),
            so_success: per_year(1),
            so_failure: per_year(2),
            uso_success: per_year(3),
            uso_failure: per_year(4),
        },
        replications: config.replications,
        horizon,
        seed: config.seed,
    })
}

// ----------------------------------------------------------------------------
// Renewal cycles under deferral
// ----------------------------------------------------------------------------

/// How a renewal cycle ended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleEnds {
    pub so: u64,
    pub uso: u64,
    pub cm: u64,
}

/// Empirical statistics of the renewal cycles of a deferred policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycles: u64,
    pub mean_length: f64,
    pub length_std_err: f64,
    pub mean_cost: f64,
    pub cost_std_err: f64,
    /// Residual time from each change to state 1 until the next SO.
    pub y_samples: Vec<f64>,
    pub ends: CycleEnds,
}

/// Simulates the deferred control-limit policy and collects complete
/// renewal cycles, pooled over all replications in index order.
pub fn simulate_cycle_stats(
    params: &ModelParams,
    t_tilde: f64,
    config: &SimConfig,
) -> Result<CycleStats> {
    let params = params.validate()?;
    let policy = Policy::control_limit(&params, t_tilde, true)?;
    config.validate()?;

    type Rep = (Vec<(f64, f64)>, Vec<f64>, CycleEnds);
    let reps: Vec<Rep> = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut sampler = Sampler::new(config.seed, i as u64);
            let mut cycles = Vec::new();
            let mut ys = Vec::new();
            let mut ends = CycleEnds::default();
            let mut start = 0.0;
            let mut cost = 0.0;
            run(&params, &policy, config.horizon, &mut sampler, |t, ev, c| {
                cost += c.total;
                let ended = match ev {
                    Event::Degrade { to_so } => {
                        ys.push(to_so);
                        false
                    }
                    Event::Failure => {
                        ends.cm += 1;
                        true
                    }
                    Event::SoRepair { success } => {
                        ends.so += success as u64;
                        success
                    }
                    Event::UsoRepair { success } => {
                        ends.uso += success as u64;
                        success
                    }
                };
                if ended {
                    cycles.push((t - start, cost));
                    start = t;
                    cost = 0.0;
                }
            });
            // Drop the Y sample of a cycle left incomplete at the horizon.
            ys.truncate(cycles.len());
            (cycles, ys, ends)
        })
        .collect();

    let lengths: Vec<f64> = reps.iter().flat_map(|r| r.0.iter().map(|c| c.0)).collect();
    let costs: Vec<f64> = reps.iter().flat_map(|r| r.0.iter().map(|c| c.1)).collect();
    if lengths.is_empty() {
        return Err(Error::domain("horizon", "too short to complete a single cycle"));
    }
    let (mean_length, length_std_err) = mean_and_se(&lengths);
    let (mean_cost, cost_std_err) = mean_and_se(&costs);
    let ends = reps.iter().fold(CycleEnds::default(), |acc, r| CycleEnds {
        so: acc.so + r.2.so,
        uso: acc.uso + r.2.uso,
        cm: acc.cm + r.2.cm,
    });
    Ok(CycleStats {
        cycles: lengths.len() as u64,
        mean_length,
        length_std_err,
        mean_cost,
        cost_std_err,
        y_samples: reps.into_iter().flat_map(|r| r.1).collect(),
        ends,
    })
}
