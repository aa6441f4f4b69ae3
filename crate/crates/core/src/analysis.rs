//! Audit harness: the solve + backtrace pipeline under each scalar back end,
//! aggregated into serializable reports.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::backtrace::{extract_path, BacktraceError, Path};
use crate::fmm::{solve, ArrivalField, FmmError, SolveOptions};
use crate::grid::{resample, GridError, Scenario};
use crate::rng::{derive_seed, RngStream};
use crate::scalar::{
    significant_digits, Arith, Ieee, InstabilityCounters, RandomRound, RoundingDraw, Stochastic, StochasticTriple,
};
use crate::shadow::{
    explore_flows, ErrorBound, FlowResult, FlowTrace, ShadowConfig, SiteTally, MIN_MANTISSA_BITS,
};

pub const MAX_MANTISSA_BITS: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Fmm(#[from] FmmError),
    #[error(transparent)]
    Backtrace(#[from] BacktraceError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need-at-least-2-runs")]
    NeedAtLeastTwoRuns,
    #[error("shadow-analysis-failed")]
    ShadowAnalysisFailed,
    #[error("invalid-factor")]
    InvalidFactor,
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("{source}")]
    Stochastic { source: PipelineError, counters: InstabilityCounters },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Pipeline<N> = (ArrivalField<N>, Path<N>);

/// Full-field solve followed by path extraction.
pub fn run_pipeline<A: Arith>(ar: &mut A, scenario: &Scenario) -> Result<Pipeline<A::Num>, PipelineError> {
    let field = solve(ar, scenario, SolveOptions::default())?;
    let path = extract_path(ar, &field, scenario)?;
    Ok((field, path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlainRun {
    pub cost: f64,
    /// Arrival time at the goal.
    pub t_goal: f64,
    pub point_count: usize,
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
    #[serde(skip)]
    pub field: Vec<f64>,
}

pub fn run_plain(scenario: &Scenario, opts: SolveOptions) -> Result<PlainRun, PipelineError> {
    let mut ar = Ieee::new();
    let field = solve(&mut ar, scenario, opts)?;
    let path = extract_path(&mut ar, &field, scenario)?;
    Ok(PlainRun {
        cost: path.cost,
        t_goal: *field.at(scenario.goal),
        point_count: path.point_count(),
        points: path.points,
        field: field.t,
    })
}

/// Mean and sample standard deviation. Identical samples give their common
/// value and zero exactly.
pub fn mean_sigma(xs: &[f64]) -> (f64, Option<f64>) {
    let Some(&first) = xs.first() else { return (f64::NAN, None) };
    let n = xs.len() as f64;
    let mean = first + xs.iter().map(|x| x - first).sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, Some((ss / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub point_count: usize,
    pub t_goal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticCost {
    pub samples: [f64; 3],
    pub mean: f64,
    pub sigma: f64,
    pub relative_error: f64,
    pub significant_digits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticReport {
    pub mode: &'static str,
    pub scenario_name: String,
    pub seed: u64,
    pub cost: StochasticCost,
    pub path: PathSummary,
    pub counters: InstabilityCounters,
}

impl StochasticCost {
    pub fn from_triple(t: &StochasticTriple) -> Self {
        let (mean, sigma) = (t.mean(), t.sigma());
        let relative_error = if sigma == 0.0 { 0.0 } else { sigma / mean.abs() };
        Self { samples: t.0, mean, sigma, relative_error, significant_digits: significant_digits(t) }
    }
}

pub fn run_stochastic(scenario: &Scenario, seed: u64) -> Result<StochasticReport, AnalysisError> {
    let mut ar = Stochastic::seeded(seed);
    let (field, path) = run_pipeline(&mut ar, scenario)
        .map_err(|source| AnalysisError::Stochastic { source, counters: ar.counters() })?;
    Ok(StochasticReport {
        mode: "stochastic",
        scenario_name: scenario.name.clone(),
        seed,
        cost: StochasticCost::from_triple(&path.cost),
        path: PathSummary { point_count: path.point_count(), t_goal: field.at(scenario.goal).mean() },
        counters: ar.counters(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEntry {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiRunCost {
    pub mean: Option<f64>,
    pub sigma: Option<f64>,
    pub reference: f64,
    pub reference_within_4_sigma: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiRunReport {
    pub mode: &'static str,
    pub scenario_name: String,
    pub seed: u64,
    pub perturbed: bool,
    pub cost: MultiRunCost,
    pub path: PathSummary,
    pub runs: Vec<RunEntry>,
    pub failed_runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiRunOptions {
    pub runs: usize,
    pub seed: u64,
    /// `false` replaces random rounding by round-to-nearest in every member.
    pub perturb: bool,
    pub jobs: usize,
}

fn run_member(scenario: &Scenario, index: usize, opts: &MultiRunOptions) -> RunEntry {
    let seed = derive_seed(opts.seed, index as u64);
    let draw = if opts.perturb { RoundingDraw::Random(RngStream::new(seed)) } else { RoundingDraw::Nearest };
    let mut ar = RandomRound::new(draw);
    match run_pipeline(&mut ar, scenario) {
        Ok((_, path)) => RunEntry {
            index,
            seed,
            cost: Some(path.cost),
            point_count: Some(path.point_count()),
            error: None,
        },
        Err(e) => RunEntry { index, seed, cost: None, point_count: None, error: Some(e.to_string()) },
    }
}

pub fn run_multirun(scenario: &Scenario, opts: MultiRunOptions) -> Result<MultiRunReport, AnalysisError> {
    if opts.runs < 2 {
        return Err(AnalysisError::NeedAtLeastTwoRuns);
    }
    let reference = run_plain(scenario, SolveOptions::default())?;
    let jobs = opts.jobs.clamp(1, opts.runs);
    let mut runs: Vec<RunEntry> = if jobs == 1 {
        (0..opts.runs).map(|i| run_member(scenario, i, &opts)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let opts = &opts;
                    s.spawn(move || (j..opts.runs).step_by(jobs).map(|i| run_member(scenario, i, opts)).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("multirun worker panicked")).collect()
        })
    };
    runs.sort_by_key(|r| r.index);
    let costs: Vec<f64> = runs.iter().filter_map(|r| r.cost).collect();
    let (mean, sigma) = if costs.is_empty() { (None, None) } else { let (m, s) = mean_sigma(&costs); (Some(m), s) };
    let within = match (mean, sigma) {
        (Some(m), Some(s)) => Some((reference.cost - m).abs() <= 4.0 * s),
        _ => None,
    };
    Ok(MultiRunReport {
        mode: "multirun",
        scenario_name: scenario.name.clone(),
        seed: opts.seed,
        perturbed: opts.perturb,
        cost: MultiRunCost { mean, sigma, reference: reference.cost, reference_within_4_sigma: within },
        path: PathSummary { point_count: reference.point_count, t_goal: reference.t_goal },
        failed_runs: runs.len() - costs.len(),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowReport {
    pub mode: &'static str,
    pub scenario_name: String,
    pub seed: u64,
    /// Float cost of the first flow.
    pub cost: Option<f64>,
    pub error_bound: ErrorBound,
    pub mantissa_bits: u32,
    pub max_symbols: usize,
    pub max_paths: usize,
    pub flows: Vec<FlowTrace>,
    pub unstable_sites: Vec<SiteTally>,
    pub domain_events: BTreeMap<&'static str, u64>,
    pub unexplored_alternatives: u64,
}

pub fn validate_shadow_config(cfg: &ShadowConfig) -> Result<(), AnalysisError> {
    let bad = |m: &str| Err(AnalysisError::InvalidConfig(m.to_string()));
    if !(MIN_MANTISSA_BITS..=MAX_MANTISSA_BITS).contains(&cfg.mantissa_bits) {
        return bad("mantissa bits must lie in [64, 4096]");
    }
    if cfg.max_symbols == 0 || cfg.max_paths == 0 {
        return bad("symbol and path budgets must be positive");
    }
    Ok(())
}

pub fn run_shadow(scenario: &Scenario, cfg: &ShadowConfig, seed: u64) -> Result<ShadowReport, AnalysisError> {
    validate_shadow_config(cfg)?;
    let ex = explore_flows(cfg, |ar| -> Result<FlowResult, PipelineError> {
        let (_, path) = run_pipeline(ar, scenario)?;
        Ok(FlowResult { path_point_count: path.point_count(), cost: path.cost })
    });
    let error_bound = ex.merged_error.ok_or(AnalysisError::ShadowAnalysisFailed)?;
    Ok(ShadowReport {
        mode: "shadow",
        scenario_name: scenario.name.clone(),
        seed,
        cost: ex.reference_cost,
        error_bound,
        mantissa_bits: ex.mantissa_bits,
        max_symbols: ex.max_symbols,
        max_paths: ex.max_paths,
        flows: ex.flows,
        unstable_sites: ex.sites,
        domain_events: ex.domain_events,
        unexplored_alternatives: ex.unexplored_alternatives,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub cost: f64,
    pub t_goal: f64,
    pub point_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    pub mode: &'static str,
    pub scenario_name: String,
    pub factor: usize,
    pub resolutions: [Resolution; 2],
    pub relative_difference: f64,
}

fn resolution(s: &Scenario) -> Result<Resolution, PipelineError> {
    let r = run_plain(s, SolveOptions::default())?;
    let g = s.geometry();
    Ok(Resolution { nx: g.nx, ny: g.ny, dx: g.dx, dy: g.dy, cost: r.cost, t_goal: r.t_goal, point_count: r.point_count })
}

pub fn compare_refinement(scenario: &Scenario, factor: usize) -> Result<RefinementReport, AnalysisError> {
    if factor != 2 && factor != 4 {
        return Err(AnalysisError::InvalidFactor);
    }
    let fine = resample(scenario, factor)?;
    let coarse = resolution(scenario)?;
    let fine = resolution(&fine)?;
    let relative_difference = (fine.cost - coarse.cost).abs() / coarse.cost.abs();
    Ok(RefinementReport {
        mode: "refine",
        scenario_name: scenario.name.clone(),
        factor,
        resolutions: [coarse, fine],
        relative_difference,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
