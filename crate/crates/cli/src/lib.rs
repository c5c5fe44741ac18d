//! Command implementations for the `opm` binary.
//!
//! Every command turns a scenario plus flags into a block of CSV or JSON text.
//! The binary only parses arguments, writes the text and maps errors to exit
//! codes, so the same functions are exercised directly by the tests.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use opm_core::bellman_verify::check_regime_conditions;
use opm_core::closed_form::{
    cost_rate_control_limit, cost_rate_only_so, cost_rate_only_uso, stationary_profile,
};
use opm_core::deferral::{cost_rate_deferral, optimize_deferral_threshold, threshold_grid};
use opm_core::optimal_policy::{
    classify_optimal, cost_of_perfect_repair_policy, delta_p, optimal_cost,
};
use opm_core::simulator::{simulate, SimConfig};
use opm_core::{evaluate, presets, CostBreakdown, ModelParams, Policy, PolicyKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ----------------------------------------------------------------------------
// Errors and exit codes
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad scenario, flag or parameter value.
    Input(String),
    /// A numerical routine failed on valid input.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<opm_core::Error> for CliError {
    fn from(e: opm_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

// ----------------------------------------------------------------------------
// Scenario files
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Lambda,
    Tau,
    P,
    CPmUso,
    TTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// A scenario on disk: the model parameters as a flat object, plus an
/// optional default policy and an optional one-dimensional sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub p: f64,
    pub tau: f64,
    pub c_cm: f64,
    pub c_pm_so: f64,
    pub c_pm_uso: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

impl ScenarioFile {
    pub fn from_params(params: ModelParams) -> Self {
        ScenarioFile {
            mu1: params.mu1,
            mu2: params.mu2,
            lambda: params.lambda,
            p: params.p,
            tau: params.tau,
            c_cm: params.c_cm,
            c_pm_so: params.c_pm_so,
            c_pm_uso: params.c_pm_uso,
            policy: None,
            sweep: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let s: ScenarioFile =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
        s.params()?;
        if let Some(sw) = &s.sweep {
            if sw.values.is_empty() {
                return Err(CliError::Input("sweep.values must not be empty".into()));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validated model parameters.
    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams {
            mu1: self.mu1,
            mu2: self.mu2,
            lambda: self.lambda,
            p: self.p,
            tau: self.tau,
            c_cm: self.c_cm,
            c_pm_so: self.c_pm_so,
            c_pm_uso: self.c_pm_uso,
        }
        .validate()?)
    }
}

/// Applies one sweep value to a parameter vector. Threshold sweeps leave the
/// parameters alone and are handled by the caller.
fn with_value(params: &ModelParams, var: SweepVariable, v: f64) -> CliResult<ModelParams> {
    let mut out = *params;
    match var {
        SweepVariable::Lambda => out.lambda = v,
        SweepVariable::Tau => out.tau = v,
        SweepVariable::P => out.p = v,
        SweepVariable::CPmUso => out.c_pm_uso = v,
        SweepVariable::TTilde => {}
    }
    Ok(out.validate()?)
}

// ----------------------------------------------------------------------------
// Command line
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    Never,
    So,
    Uso,
    Limit,
}

#[derive(Debug, Parser)]
#[command(name = "opm", version, about = "Opportunistic maintenance policy analytics")]
pub struct Cli {
    /// Scenario JSON file; the wind-turbine base case is used when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct PolicyArgs {
    /// Policy to evaluate; falls back to the scenario's policy block.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyChoice>,
    /// Control limit for `--policy limit`.
    #[arg(long)]
    pub t_tilde: Option<f64>,
    /// Restart the SO grid after every successful maintenance.
    #[arg(long)]
    pub defer: bool,
}

#[derive(Debug, Args, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1e5)]
    pub horizon: f64,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Batch length in years for a batch-means error estimate.
    #[arg(long)]
    pub batch: Option<f64>,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            horizon: self.horizon,
            replications: self.reps,
            seed: self.seed,
            batch: self.batch,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cost rate of one policy, or of a sweep over one variable.
    Cost(PolicyArgs),
    /// Optimal policy without deferral, or grid-optimal deferral threshold.
    Optimize {
        #[arg(long)]
        defer: bool,
        #[arg(long, default_value_t = 0.005)]
        grid_step: f64,
    },
    /// Cost rates over the lambda, tau and USO-cost grid.
    Table2 {
        /// Print unrounded values.
        #[arg(long)]
        raw: bool,
    },
    /// Extra optimal cost caused by imperfect repair, over a grid of p.
    DeltaP {
        #[arg(long, default_value_t = 0.5)]
        p_from: f64,
        #[arg(long, default_value_t = 1.0)]
        p_to: f64,
        #[arg(long, default_value_t = 0.01)]
        p_step: f64,
    },
    /// Cost rate with and without deferral over a grid of thresholds.
    DeferCompare {
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Monte Carlo estimate of a policy's cost rate.
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Consistency report for the optimal policy.
    Verify {
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// Runs a parsed command line and returns the text to emit.
pub fn run(cli: &Cli) -> CliResult<String> {
    let scenario = match &cli.scenario {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::from_params(presets::wind()),
    };
    let f = cli.format;
    match &cli.command {
        Command::Cost(args) => cmd_cost(&scenario, args, f),
        Command::Optimize { defer, grid_step } => cmd_optimize(&scenario, *defer, *grid_step, f),
        Command::Table2 { raw } => cmd_table2(&scenario.params()?, *raw, f),
        Command::DeltaP { p_from, p_to, p_step } => {
            cmd_delta_p(&scenario.params()?, *p_from, *p_to, *p_step, f)
        }
        Command::DeferCompare { grid_step } => cmd_defer_compare(&scenario.params()?, *grid_step, f),
        Command::Simulate { policy, sim } => cmd_simulate(&scenario, policy, sim, f),
        Command::Verify { sim } => cmd_verify(&scenario.params()?, sim, f),
    }
}

/// Parses an argument list (without the program name) and runs it, giving
/// exactly the text the binary would print.
pub fn run_args(args: &[&str]) -> CliResult<String> {
    let cli = Cli::try_parse_from(std::iter::once("opm").chain(args.iter().copied()))
        .map_err(|e| CliError::Input(e.to_string()))?;
    run(&cli)
}

// ----------------------------------------------------------------------------
// Output
// ----------------------------------------------------------------------------

fn render<T: Serialize>(rows: &[T], format: Format, single: bool) -> CliResult<String> {
    match format {
        Format::Json => {
            let text = if single && rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            };
            text.map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::Numeric(format!("json output: {e}")))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)
                    .map_err(|e| CliError::Numeric(format!("csv output: {e}")))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Numeric(format!("csv output: {e}")))?;
            String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
        }
    }
}

/// Rounds half away from zero, which is what `f64::round` does.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

// ----------------------------------------------------------------------------
// cost
// ----------------------------------------------------------------------------

fn policy_name(p: &Policy) -> &'static str {
    match p.kind {
        PolicyKind::NeverPm => "never",
        PolicyKind::OnlySo => "so",
        PolicyKind::OnlyUso => "uso",
        PolicyKind::ControlLimit { .. } => "limit",
    }
}

fn policy_threshold(p: &Policy) -> Option<f64> {
    match p.kind {
        PolicyKind::ControlLimit { t_tilde } => Some(t_tilde),
        _ => None,
    }
}

/// Resolves the policy from flags, falling back to the scenario block.
fn resolve_policy(
    scenario: &ScenarioFile,
    params: &ModelParams,
    args: &PolicyArgs,
) -> CliResult<Policy> {
    let policy = match args.policy {
        Some(PolicyChoice::Never) => Policy::never_pm(args.defer),
        Some(PolicyChoice::So) => Policy::only_so(args.defer),
        Some(PolicyChoice::Uso) => Policy::only_uso(args.defer),
        Some(PolicyChoice::Limit) => {
            let t = args
                .t_tilde
                .ok_or_else(|| CliError::Input("--policy limit needs --t-tilde".into()))?;
            Policy::control_limit(params, t, args.defer)?
        }
        None => match scenario.policy {
            Some(mut p) => {
                p.defer |= args.defer;
                p.check(params)?;
                p
            }
            None => {
                return Err(CliError::Input(
                    "no policy: pass --policy or add a policy block to the scenario".into(),
                ))
            }
        },
    };
    if args.t_tilde.is_some() && !matches!(policy.kind, PolicyKind::ControlLimit { .. }) {
        return Err(CliError::Input("--t-tilde only applies to --policy limit".into()));
    }
    Ok(policy)
}

#[derive(Debug, Clone, Serialize)]
struct CostRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    variable: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    policy: &'static str,
    t_tilde: Option<f64>,
    defer: bool,
    so_pm: f64,
    uso_pm: f64,
    cm: f64,
    total: f64,
}

fn cost_row(policy: &Policy, b: CostBreakdown, sweep: Option<(SweepVariable, f64)>) -> CostRow {
    CostRow {
        variable: sweep.map(|s| s.0),
        value: sweep.map(|s| s.1),
        policy: policy_name(policy),
        t_tilde: policy_threshold(policy),
        defer: policy.defer,
        so_pm: b.so_pm,
        uso_pm: b.uso_pm,
        cm: b.cm,
        total: b.total,
    }
}

pub fn cmd_cost(scenario: &ScenarioFile, args: &PolicyArgs, format: Format) -> CliResult<String> {
    let params = scenario.params()?;
    let policy = resolve_policy(scenario, &params, args)?;
    let Some(sweep) = &scenario.sweep else {
        let b = evaluate(&params, &policy)?;
        return render(&[cost_row(&policy, b, None)], format, true);
    };
    let rows = sweep
        .values
        .par_iter()
        .map(|&v| {
            let at = with_value(&params, sweep.variable, v)?;
            let pol = match (sweep.variable, policy.kind) {
                (SweepVariable::TTilde, PolicyKind::ControlLimit { .. }) => {
                    Policy::control_limit(&at, v, policy.defer)?
                }
                (SweepVariable::TTilde, _) => {
                    return Err(CliError::Input(
                        "a t_tilde sweep needs a control-limit policy".into(),
                    ))
                }
                _ => {
                    policy.check(&at)?;
                    policy
                }
            };
            let b = evaluate(&at, &pol)?;
            Ok(cost_row(&pol, b, Some((sweep.variable, v))))
        })
        .collect::<CliResult<Vec<_>>>()?;
    render(&rows, format, false)
}

// ----------------------------------------------------------------------------
// optimize
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct OptimumRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    variable: Option<SweepVariable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    defer: bool,
    regime: Option<String>,
    /// USO threshold of the chosen policy.
    t_tilde: f64,
    t_star_raw: Option<f64>,
    so_pm: f64,
    uso_pm: f64,
    cm: f64,
    total: f64,
}

fn optimum_row(
    params: &ModelParams,
    defer: bool,
    grid_step: f64,
    sweep: Option<(SweepVariable, f64)>,
) -> CliResult<OptimumRow> {
    let (regime, t_tilde, t_star_raw, b) = if defer {
        let (t, _) = optimize_deferral_threshold(params, grid_step)?;
        let b = cost_rate_deferral(params, t)?.breakdown;
        (None, t, None, b)
    } else {
        let r = classify_optimal(params)?;
        let label = serde_json::to_value(r.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string));
        (label, r.uso_threshold(params.tau), r.t_star_raw, r.breakdown)
    };
    Ok(OptimumRow {
        variable: sweep.map(|s| s.0),
        value: sweep.map(|s| s.1),
        defer,
        regime,
        t_tilde,
        t_star_raw,
        so_pm: b.so_pm,
        uso_pm: b.uso_pm,
        cm: b.cm,
        total: b.total,
    })
}

pub fn cmd_optimize(
    scenario: &ScenarioFile,
    defer: bool,
    grid_step: f64,
    format: Format,
) -> CliResult<String> {
    let params = scenario.params()?;
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(CliError::Input(format!("--grid-step must be > 0, got {grid_step}")));
    }
    let Some(sweep) = &scenario.sweep else {
        if format == Format::Json && !defer {
            // The full result carries the root list and the policy.
            let r = classify_optimal(&params)?;
            let mut s = serde_json::to_string_pretty(&r)
                .map_err(|e| CliError::Numeric(format!("json output: {e}")))?;
            s.push('\n');
            return Ok(s);
        }
        return render(&[optimum_row(&params, defer, grid_step, None)?], format, true);
    };
    if sweep.variable == SweepVariable::TTilde {
        return Err(CliError::Input("optimize cannot sweep the threshold itself".into()));
    }
    let rows = sweep
        .values
        .iter()
        .map(|&v| {
            let at = with_value(&params, sweep.variable, v)?;
            optimum_row(&at, defer, grid_step, Some((sweep.variable, v)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    render(&rows, format, false)
}

// ----------------------------------------------------------------------------
// table2
// ----------------------------------------------------------------------------

pub const TABLE_TAUS: [f64; 3] = [0.25, 0.5, 1.0];
pub const TABLE_USO_COSTS: [f64; 3] = [2000.0, 3000.0, 4000.0];
pub const TABLE_LAMBDAS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// One row of the policy comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub tau: f64,
    pub c_pm_uso: f64,
    pub lambda: f64,
    pub pi_uso: f64,
    pub pi_so: f64,
    pub pi_opt: f64,
    /// Policy optimal under perfect repair, costed at the true `p`.
    pub pi_opt_perfect: f64,
}

/// The 36 rows in the order tau, then USO cost, then lambda.
pub fn table2_rows(base: &ModelParams) -> CliResult<Vec<TableRow>> {
    let mut grid = Vec::new();
    for &tau in &TABLE_TAUS {
        for &c_pm_uso in &TABLE_USO_COSTS {
            for &lambda in &TABLE_LAMBDAS {
                grid.push(ModelParams { tau, c_pm_uso, lambda, ..*base });
            }
        }
    }
    grid.par_iter()
        .map(|params| {
            let params = params.validate()?;
            Ok(TableRow {
                tau: params.tau,
                c_pm_uso: params.c_pm_uso,
                lambda: params.lambda,
                pi_uso: cost_rate_only_uso(&params)?.total,
                pi_so: cost_rate_only_so(&params)?.total,
                pi_opt: optimal_cost(&params)?.total,
                pi_opt_perfect: cost_of_perfect_repair_policy(&params)?.total,
            })
        })
        .collect()
}

pub fn cmd_table2(base: &ModelParams, raw: bool, format: Format) -> CliResult<String> {
    let mut rows = table2_rows(base)?;
    if !raw {
        for r in &mut rows {
            r.pi_uso = round_half_away(r.pi_uso);
            r.pi_so = round_half_away(r.pi_so);
            r.pi_opt = round_half_away(r.pi_opt);
            r.pi_opt_perfect = round_half_away(r.pi_opt_perfect);
        }
    }
    render(&rows, format, false)
}

// ----------------------------------------------------------------------------
// delta-p and defer-compare
// ----------------------------------------------------------------------------

pub fn cmd_delta_p(
    params: &ModelParams,
    p_from: f64,
    p_to: f64,
    p_step: f64,
    format: Format,
) -> CliResult<String> {
    if !(p_step > 0.0 && p_from <= p_to && p_from > 0.0 && p_to <= 1.0) {
        return Err(CliError::Input(format!(
            "need 0 < p-from <= p-to <= 1 and p-step > 0, got {p_from}, {p_to}, {p_step}"
        )));
    }
    let n = ((p_to - p_from) / p_step + 1e-9).floor() as usize;
    // Grid points are rounded to 12 decimals so that 0.5 + 37 * 0.01 prints
    // as 0.87 rather than 0.8700000000000001.
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| ((p_from + i as f64 * p_step) * 1e12).round() / 1e12)
        .collect();
    if p_to - grid[n] > 1e-12 {
        grid.push(p_to);
    }
    let pts = delta_p(params, &grid)?;
    render(&pts, format, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeferComparePoint {
    pub t_tilde: f64,
    pub rate_defer: f64,
    pub rate_nodefer: f64,
}

pub fn defer_compare_points(params: &ModelParams, grid_step: f64) -> CliResult<Vec<DeferComparePoint>> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(CliError::Input(format!("--grid-step must be > 0, got {grid_step}")));
    }
    threshold_grid(params.tau, grid_step)
        .into_par_iter()
        .map(|t| {
            let t = (t * 1e12).round() / 1e12;
            let t = t.min(params.tau);
            Ok(DeferComparePoint {
                t_tilde: t,
                rate_defer: cost_rate_deferral(params, t)?.rate,
                rate_nodefer: cost_rate_control_limit(params, t)?.total,
            })
        })
        .collect()
}

pub fn cmd_defer_compare(params: &ModelParams, grid_step: f64, format: Format) -> CliResult<String> {
    render(&defer_compare_points(params, grid_step)?, format, false)
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct SimRow {
    policy: &'static str,
    t_tilde: Option<f64>,
    defer: bool,
    rate: f64,
    std_err: f64,
    ci95: f64,
    so_pm: f64,
    uso_pm: f64,
    cm: f64,
    cm_per_year: f64,
    so_success_per_year: f64,
    so_failure_per_year: f64,
    uso_success_per_year: f64,
    uso_failure_per_year: f64,
    replications: usize,
    horizon: f64,
    seed: u64,
}

pub fn cmd_simulate(
    scenario: &ScenarioFile,
    policy: &PolicyArgs,
    sim: &SimArgs,
    format: Format,
) -> CliResult<String> {
    let params = scenario.params()?;
    let pol = resolve_policy(scenario, &params, policy)?;
    let est = simulate(&params, &pol, &sim.config())?;
    let row = SimRow {
        policy: policy_name(&pol),
        t_tilde: policy_threshold(&pol),
        defer: pol.defer,
        rate: est.rate,
        std_err: est.std_err,
        ci95: est.ci95,
        so_pm: est.breakdown.so_pm,
        uso_pm: est.breakdown.uso_pm,
        cm: est.breakdown.cm,
        cm_per_year: est.counts.cm,
        so_success_per_year: est.counts.so_success,
        so_failure_per_year: est.counts.so_failure,
        uso_success_per_year: est.counts.uso_success,
        uso_failure_per_year: est.counts.uso_failure,
        replications: est.replications,
        horizon: est.horizon,
        seed: est.seed,
    };
    render(&[row], format, true)
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub residual: f64,
    pub passed: bool,
}

/// Regime conditions, profile boundary conditions and formula-versus-
/// simulation comparisons for the optimal policy of `params`.
pub fn verify_rows(params: &ModelParams, sim: &SimConfig) -> CliResult<Vec<VerifyRow>> {
    let result = classify_optimal(params)?;
    let mut rows: Vec<VerifyRow> = check_regime_conditions(params, &result)
        .checks
        .into_iter()
        .map(|c| VerifyRow {
            check: format!("regime: {}", c.name),
            residual: c.residual,
            passed: c.passed,
        })
        .collect();

    let t = result.uso_threshold(params.tau);
    if params.p < 1.0 {
        let prof = stationary_profile(params, t)?;
        let scale = prof.p1(0.0).abs().max(1.0);
        let boundary = prof.p1_before_so() - params.q() * prof.p1(0.0);
        rows.push(VerifyRow {
            check: "profile: value after SO equals (1-p) times value before".into(),
            residual: boundary,
            passed: boundary.abs() <= 1e-10 * scale,
        });
        if t > 0.0 && t < params.tau {
            let jump = prof.p1_left_of_switch() - prof.p1(t);
            rows.push(VerifyRow {
                check: "profile: continuity at the control limit".into(),
                residual: jump,
                passed: jump.abs() <= 1e-10 * scale,
            });
        }
    }

    let comparisons = [
        ("simulation: optimal policy", evaluate(params, &result.policy)?.total, result.policy),
        {
            let pol = Policy::control_limit(params, t, true)?;
            ("simulation: same threshold with deferral", evaluate(params, &pol)?.total, pol)
        },
    ];
    for (name, exact, pol) in comparisons {
        let est = simulate(params, &pol, sim)?;
        let z = if est.std_err > 0.0 {
            (est.rate - exact) / est.std_err
        } else if est.rate == exact {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(VerifyRow {
            check: format!("{name}: z-score, exact {exact:.4}, simulated {:.4}", est.rate),
            residual: z,
            passed: z.abs() <= 3.0,
        });
    }
    Ok(rows)
}

pub fn cmd_verify(params: &ModelParams, sim: &SimArgs, format: Format) -> CliResult<String> {
    let rows = verify_rows(params, &sim.config())?;
    let failed = rows.iter().filter(|r| !r.passed).count();
    eprintln!("verify: {} of {} checks passed", rows.len() - failed, rows.len());
    render(&rows, format, false)
}
