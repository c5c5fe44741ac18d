//! Optimal policy classification and the optimal control limit.
//!
//! The structure of the average-cost optimal policy depends on how the two
//! preventive costs compare:
//!
//! * SO repair cheaper than USO repair: never repair, repair at SOs only, or
//!   repair at SOs and at USOs with more than `t_hat` years to go.
//! * Equal costs: never repair, or repair at every opportunity.
//! * USO repair cheaper: never repair, USOs only, or every opportunity.
//!
//! In the first case the threshold comes from a scalar equation. With
//! `A = (mu1 c_cm + lambda c_uso) / s2` and `B = mu1 c_cm / s1`, the value
//! difference between the satisfactory and perfect states is `A + (D - A)
//! exp(s2 (tau - t))` above the threshold and `B + (c_uso/p - B)
//! exp(s1 (t* - t))` below it. Gluing the two at `t*` and closing the period
//! with `D(0) = c_so + (1 - p) D(tau)` leaves
//!
//! ```text
//! R(t) = B - c_so + (c_uso/p - B) e^{s1 t} - (1-p) A - (1-p)(c_uso/p - A) e^{-s2 (tau - t)}
//! ```
//!
//! whose admissible zero is `t*`. This form is the usual one multiplied by a
//! positive factor, so it has the same zeros and stays finite at `p = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{
    cost_rate_control_limit, cost_rate_only_cm, cost_rate_only_so, cost_rate_only_uso,
};
use crate::error::{Error, Result};
use crate::model::{CostBreakdown, ModelParams, Policy};
use crate::numeric::{golden_min, scan_roots};

/// Bisection tolerance on the threshold.
pub const T_STAR_TOL: f64 = 1e-10;

const SCAN_CELLS: usize = 3000;

// ----------------------------------------------------------------------------
// Types
// ----------------------------------------------------------------------------

/// How the two preventive costs compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostOrdering {
    SoCheaper,
    Equal,
    UsoCheaper,
}

impl CostOrdering {
    pub fn of(params: &ModelParams) -> Self {
        if params.c_pm_so < params.c_pm_uso {
            CostOrdering::SoCheaper
        } else if params.c_pm_so == params.c_pm_uso {
            CostOrdering::Equal
        } else {
            CostOrdering::UsoCheaper
        }
    }
}

/// Shape of the optimal policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NeverPm,
    SoOnly,
    /// SO repair plus USO repair above a threshold in `(0, tau]`.
    SoAndUsoThreshold,
    /// SO repair plus USO repair everywhere, the threshold having clamped to 0.
    SoAndUsoAlways,
    UsoOnly,
    Both,
}

/// Optimal policy with its cost and the data behind the decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPolicyResult {
    pub regime: Regime,
    pub ordering: CostOrdering,
    /// Clamped threshold, present for the two threshold regimes.
    pub t_hat: Option<f64>,
    /// Unclamped zero of the threshold equation, when one was found.
    pub t_star_raw: Option<f64>,
    /// Every zero of the threshold equation found on the search bracket.
    pub roots: Vec<f64>,
    pub cost_rate: f64,
    pub breakdown: CostBreakdown,
    pub policy: Policy,
}

impl OptimalPolicyResult {
    /// USO threshold implied by the policy: `tau` when USOs are never used
    /// and 0 when they are always used.
    pub fn uso_threshold(&self, tau: f64) -> f64 {
        match self.regime {
            Regime::NeverPm | Regime::SoOnly => tau,
            Regime::UsoOnly | Regime::Both | Regime::SoAndUsoAlways => 0.0,
            Regime::SoAndUsoThreshold => self.t_hat.unwrap_or(tau),
        }
    }
}

/// Zero of the threshold equation and its clamp to `[0, tau]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TStar {
    pub raw: f64,
    pub hat: f64,
    pub roots: Vec<f64>,
}

// ----------------------------------------------------------------------------
// Threshold equation
// ----------------------------------------------------------------------------

fn a_level(params: &ModelParams) -> f64 {
    (params.mu1 * params.c_cm + params.lambda * params.c_pm_uso) / params.s2()
}

fn b_level(params: &ModelParams) -> f64 {
    params.mu1 * params.c_cm / params.s1()
}

/// Residual of the threshold equation, scaled to stay finite at `p = 1`.
pub fn t_star_residual(params: &ModelParams, t: f64) -> f64 {
    let (a, b) = (a_level(params), b_level(params));
    let u = params.c_pm_uso / params.p;
    let q = params.q();
    b - params.c_pm_so + (u - b) * (params.s1() * t).exp()
        - q * a
        - q * (u - a) * (-params.s2() * (params.tau - t)).exp()
}

/// Solves the threshold equation on `[-tau, 2 tau]`.
///
/// A zero is admissible when the glued value difference reaches `c_uso/p`
/// before the end of the period, which means `t* < tau`. All zeros are
/// returned for diagnosis; the largest admissible one is used.
pub fn solve_t_star(params: &ModelParams) -> Result<TStar> {
    let tau = params.tau;
    let (lo, hi) = (-tau, 2.0 * tau);
    let roots = scan_roots(|t| t_star_residual(params, t), lo, hi, SCAN_CELLS, T_STAR_TOL);
    let raw = roots
        .iter()
        .copied()
        .filter(|&t| t <= tau + T_STAR_TOL)
        .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.max(t))));
    match raw {
        Some(raw) => Ok(TStar {
            raw,
            hat: raw.clamp(0.0, tau),
            roots,
        }),
        None => Err(Error::NoRootInBracket {
            what: "threshold equation",
            lo,
            hi,
        }),
    }
}

/// Minimises the control-limit cost over `[0, tau]` by a grid of spacing
/// `step` followed by golden-section refinement around the best node.
pub fn minimize_threshold(params: &ModelParams, step: f64) -> Result<(f64, f64)> {
    let tau = params.tau;
    let n = (tau / step).ceil().max(1.0) as usize;
    let node = |i: usize| (tau * i as f64 / n as f64).min(tau);
    let costs = (0..=n)
        .map(|i| cost_rate_control_limit(params, node(i)).map(|c| c.total))
        .collect::<Result<Vec<_>>>()?;
    let best = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = node(best.saturating_sub(1));
    let hi = node((best + 1).min(n));
    let (t, c) = golden_min(
        |t| cost_rate_control_limit(params, t).map(|c| c.total).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-9,
    );
    if c < costs[best] {
        Ok((t, c))
    } else {
        Ok((node(best), costs[best]))
    }
}

// ----------------------------------------------------------------------------
// Classification
// ----------------------------------------------------------------------------

/// Parameter values of `p` at which USO and SO repair become worthwhile when
/// USO repair is the cheaper action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PBoundaries {
    pub uso_repair: f64,
    pub so_repair: f64,
}

/// Thresholds on `p` above which USO and SO repair pay off.
pub fn p_boundaries(params: &ModelParams) -> PBoundaries {
    let s1 = params.s1();
    let gain = params.mu1 * params.c_cm;
    PBoundaries {
        uso_repair: s1 * params.c_pm_uso / gain,
        so_repair: s1 * params.c_pm_so
            / (gain - params.lambda * (params.c_pm_so - params.c_pm_uso)),
    }
}

fn result(
    params: &ModelParams,
    regime: Regime,
    policy: Policy,
    breakdown: CostBreakdown,
) -> OptimalPolicyResult {
    OptimalPolicyResult {
        regime,
        ordering: CostOrdering::of(params),
        t_hat: None,
        t_star_raw: None,
        roots: Vec::new(),
        cost_rate: breakdown.total,
        breakdown,
        policy,
    }
}

fn threshold_result(params: &ModelParams) -> Result<OptimalPolicyResult> {
    let (t_hat, raw, roots) = match solve_t_star(params) {
        Ok(ts) => (ts.hat, Some(ts.raw), ts.roots),
        // No admissible zero: fall back on direct minimisation.
        Err(Error::NoRootInBracket { .. }) => (minimize_threshold(params, 1e-3)?.0, None, vec![]),
        Err(e) => return Err(e),
    };
    let breakdown = cost_rate_control_limit(params, t_hat)?;
    let regime = if t_hat > 0.0 {
        Regime::SoAndUsoThreshold
    } else {
        Regime::SoAndUsoAlways
    };
    let mut out = result(
        params,
        regime,
        Policy::control_limit(params, t_hat, false)?,
        breakdown,
    );
    out.t_hat = Some(t_hat);
    out.t_star_raw = raw;
    out.roots = roots;
    Ok(out)
}

fn every_opportunity(params: &ModelParams) -> Result<OptimalPolicyResult> {
    Ok(result(
        params,
        Regime::Both,
        Policy::control_limit(params, 0.0, false)?,
        cost_rate_control_limit(params, 0.0)?,
    ))
}

fn never(params: &ModelParams) -> Result<OptimalPolicyResult> {
    Ok(result(
        params,
        Regime::NeverPm,
        Policy::never_pm(false),
        cost_rate_only_cm(params)?,
    ))
}

/// Classifies the optimal policy and evaluates its cost.
///
/// Ties on a boundary resolve to the cheaper action, i.e. doing nothing.
pub fn classify_optimal(params: &ModelParams) -> Result<OptimalPolicyResult> {
    let params = params.validate()?;
    let p = params.p;
    let s1 = params.s1();
    let gain = params.mu1 * params.c_cm;
    let (c_so, c_uso) = (params.c_pm_so, params.c_pm_uso);
    match CostOrdering::of(&params) {
        CostOrdering::SoCheaper => {
            if gain <= s1 * c_so / p {
                return never(&params);
            }
            let so_limit = c_uso / p + (c_uso - c_so) / (s1 * params.tau).exp_m1();
            if b_level(&params) <= so_limit {
                return Ok(result(
                    &params,
                    Regime::SoOnly,
                    Policy::only_so(false),
                    cost_rate_only_so(&params)?,
                ));
            }
            threshold_result(&params)
        }
        CostOrdering::Equal => {
            if gain > s1 * c_so / p {
                every_opportunity(&params)
            } else {
                never(&params)
            }
        }
        CostOrdering::UsoCheaper => {
            let uso = gain > s1 * c_uso / p;
            let so = gain > s1 * c_so / p + params.lambda * (c_so - c_uso);
            match (uso, so) {
                (false, _) => never(&params),
                (true, false) => Ok(result(
                    &params,
                    Regime::UsoOnly,
                    Policy::only_uso(false),
                    cost_rate_only_uso(&params)?,
                )),
                (true, true) => every_opportunity(&params),
            }
        }
    }
}

/// Cost of the optimal policy.
pub fn optimal_cost(params: &ModelParams) -> Result<CostBreakdown> {
    classify_optimal(params).map(|r| r.breakdown)
}

/// Cost at the true `p` of the policy that would be optimal if every repair
/// succeeded. This measures what is lost by ignoring imperfect repair.
pub fn cost_of_perfect_repair_policy(params: &ModelParams) -> Result<CostBreakdown> {
    let perfect = ModelParams { p: 1.0, ..*params };
    let best = classify_optimal(&perfect)?;
    match best.regime {
        Regime::NeverPm => cost_rate_only_cm(params),
        Regime::SoOnly => cost_rate_only_so(params),
        Regime::UsoOnly => cost_rate_only_uso(params),
        _ => cost_rate_control_limit(params, best.uso_threshold(params.tau)),
    }
}

// ----------------------------------------------------------------------------
// Imperfect-repair penalty
// ----------------------------------------------------------------------------

/// One point of the imperfect-repair penalty curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub p: f64,
    /// Extra optimal cost relative to perfect repair, in percent.
    pub delta_percent: f64,
    /// USO threshold of the optimal policy at this `p`.
    pub t_hat: f64,
    pub regime: Regime,
}

/// The default grid `0.50, 0.51, ..., 1.00`.
pub fn default_p_grid() -> Vec<f64> {
    (50..=100).map(|i| i as f64 / 100.0).collect()
}

/// Relative extra cost of the optimal policy at each `p` against `p = 1`.
pub fn delta_p(params: &ModelParams, p_grid: &[f64]) -> Result<Vec<DeltaPoint>> {
    let base = optimal_cost(&ModelParams { p: 1.0, ..*params })?.total;
    p_grid
        .par_iter()
        .map(|&p| {
            let at = ModelParams { p, ..*params }.validate()?;
            let r = classify_optimal(&at)?;
            Ok(DeltaPoint {
                p,
                delta_percent: 100.0 * (r.cost_rate - base) / base,
                t_hat: r.uso_threshold(at.tau),
                regime: r.regime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use proptest::prelude::*;

    #[test]
    fn uso_cheaper_example_regimes() {
        assert_eq!(classify_optimal(&presets::uso_cheaper(0.9)).unwrap().regime, Regime::Both);
        assert_eq!(classify_optimal(&presets::uso_cheaper(0.78)).unwrap().regime, Regime::UsoOnly);
        assert_eq!(classify_optimal(&presets::uso_cheaper(0.6)).unwrap().regime, Regime::NeverPm);
    }

    #[test]
    fn uso_cheaper_p_boundaries() {
        let b = p_boundaries(&presets::uso_cheaper(0.5));
        assert!((b.uso_repair - 8000.0 / 11000.0).abs() < 1e-15);
        assert!((b.so_repair - 9000.0 / 10750.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_repair_root_has_closed_form() {
        let p = ModelParams { p: 1.0, ..presets::wind() };
        let b = b_level(&p);
        let expect = ((b - p.c_pm_so) / (b - p.c_pm_uso)).ln() / p.s1();
        let ts = solve_t_star(&p).unwrap();
        assert!((ts.raw - expect).abs() < 1e-9);
    }

    #[test]
    fn case_one_cost_is_only_cm() {
        let p = presets::lithography();
        assert!(p.mu1 * p.c_cm < p.s1() * p.c_pm_so / p.p);
        let r = classify_optimal(&p).unwrap();
        assert_eq!(r.regime, Regime::NeverPm);
        assert_eq!(r.cost_rate, cost_rate_only_cm(&p).unwrap().total);
    }

    #[test]
    fn equality_boundary_resolves_to_doing_nothing() {
        // mu1 c_cm = s1 c_so / p exactly in binary floating point.
        let p = ModelParams {
            mu1: 1.0,
            mu2: 1.0,
            lambda: 1.0,
            p: 0.5,
            tau: 1.0,
            c_cm: 4.0,
            c_pm_so: 1.0,
            c_pm_uso: 3.0,
        };
        assert_eq!(classify_optimal(&p).unwrap().regime, Regime::NeverPm);
    }

    #[test]
    fn delta_is_zero_at_one() {
        let d = delta_p(&presets::wind(), &[1.0]).unwrap();
        assert_eq!(d[0].delta_percent, 0.0);
    }

    #[test]
    fn wind_delta_nonincreasing() {
        let d = delta_p(&presets::wind(), &default_p_grid()).unwrap();
        for w in d.windows(2) {
            assert!(w[1].delta_percent <= w[0].delta_percent + 1e-9);
        }
    }

    #[test]
    fn lithography_never_uses_usos_at_low_p() {
        let grid: Vec<f64> = (50..=82).map(|i| i as f64 / 100.0).collect();
        for pt in delta_p(&presets::lithography(), &grid).unwrap() {
            assert_eq!(pt.t_hat, 1.0, "p = {}", pt.p);
        }
    }

    fn so_cheaper_draw() -> impl Strategy<Value = ModelParams> {
        (
            0.1f64..2.0,
            0.1f64..2.0,
            0.0f64..6.0,
            0.3f64..1.0,
            0.2f64..2.0,
            1e4f64..3e5,
            100.0f64..3000.0,
            1.05f64..3.0,
        )
            .prop_map(|(mu1, mu2, lambda, p, tau, c_cm, c_so, r)| ModelParams {
                mu1,
                mu2,
                lambda,
                p,
                tau,
                c_cm,
                c_pm_so: c_so,
                c_pm_uso: c_so * r,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn optimum_dominates_simple_policies(params in so_cheaper_draw()) {
            let r = classify_optimal(&params).unwrap();
            let slack = 1.0 + 1e-9;
            prop_assert!(r.cost_rate <= cost_rate_only_cm(&params).unwrap().total * slack);
            prop_assert!(r.cost_rate <= cost_rate_only_so(&params).unwrap().total * slack);
            prop_assert!(r.cost_rate <= cost_rate_only_uso(&params).unwrap().total * slack);
            prop_assert!(r.cost_rate <= params.cm_only_bound() * slack);
        }

        #[test]
        fn threshold_matches_grid_argmin(params in so_cheaper_draw()) {
            let r = classify_optimal(&params).unwrap();
            if let Some(t_hat) = r.t_hat {
                let (t_grid, c_grid) = minimize_threshold(&params, 1e-4).unwrap();
                let c_hat = r.cost_rate;
                // Either the thresholds agree or the cost surface is flat
                // enough that both are optimal to rounding.
                prop_assert!(
                    (t_grid - t_hat).abs() <= 2e-4 || (c_hat - c_grid).abs() <= 1e-9 * c_hat,
                    "t_hat {t_hat} grid {t_grid} costs {c_hat} {c_grid}"
                );
            }
        }
    }
}
