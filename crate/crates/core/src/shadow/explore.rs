//! Bounded depth-first exploration of the control flows opened by unstable
//! SPLIT sites. Each flow is a complete re-execution driven by a script of
//! choices; flows are merged by interval hulls.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::Serialize;

use super::arith::{Decision, FlowController, ShadowArith, ShadowConfig, SiteTally};
use super::value::{hull_distance, ErrorBound, Range, ShadowScalar};

/// What one flow produces.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub cost: ShadowScalar,
    pub path_point_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FlowStatus {
    Completed,
    Diverged { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrace {
    pub index: usize,
    #[serde(flatten)]
    pub status: FlowStatus,
    pub decisions: Vec<Decision>,
    pub cost_float: Option<f64>,
    pub cost_ideal: Option<Range>,
    pub cost_ledger: Option<Range>,
    pub error_bound: Option<ErrorBound>,
    pub path_point_count: Option<usize>,
    pub unstable_events: u64,
    pub branch_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exploration {
    pub flows: Vec<FlowTrace>,
    /// `None` when no flow completed.
    pub merged_error: Option<ErrorBound>,
    /// Float cost the merged error is measured from.
    pub reference_cost: Option<f64>,
    pub sites: Vec<SiteTally>,
    pub domain_events: BTreeMap<&'static str, u64>,
    /// Alternatives discovered but not explored within the path budget.
    pub unexplored_alternatives: u64,
    pub mantissa_bits: u32,
    pub max_symbols: usize,
    pub max_paths: usize,
}

/// Runs `run` once per explored flow, at most `cfg.max_paths` times.
///
/// The first flow follows the float semantics everywhere. The remaining
/// flows are taken depth-first, preferring the earliest branch point.
pub fn explore_flows<E, F>(cfg: &ShadowConfig, mut run: F) -> Exploration
where
    E: Display,
    F: FnMut(&mut ShadowArith) -> Result<FlowResult, E>,
{
    let max_paths = cfg.max_paths.max(1);
    let prec = cfg.mantissa_bits;
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    let mut discovered: u64 = 0;
    let mut flows = Vec::new();
    let mut outcomes: Vec<Option<ShadowScalar>> = Vec::new();
    let mut sites: BTreeMap<&'static str, SiteTally> = BTreeMap::new();
    let mut domain_events: BTreeMap<&'static str, u64> = BTreeMap::new();

    while flows.len() < max_paths {
        let Some(script) = stack.pop() else { break };
        let mut arith = ShadowArith::new(cfg.clone(), FlowController::new(script.clone()));
        let result = run(&mut arith);

        let points = arith.flow().points();
        let mut children = Vec::new();
        for (k, p) in points.iter().enumerate().skip(script.len()) {
            for alt in 1..p.options {
                discovered += 1;
                // only the first few can ever be popped before the budget runs out
                if children.len() < max_paths {
                    let mut s: Vec<usize> = points[..k].iter().map(|q| q.choice).collect();
                    s.push(alt);
                    children.push(s);
                }
            }
        }
        stack.extend(children.into_iter().rev());

        for (id, t) in arith.tallies() {
            sites
                .entry(id)
                .and_modify(|m| {
                    m.hits += t.hits;
                    if m.condint.is_none() {
                        m.condint = t.condint.clone();
                    }
                })
                .or_insert_with(|| t.clone());
        }
        for (k, v) in arith.domain_events() {
            *domain_events.entry(k).or_insert(0) += v;
        }

        let index = flows.len();
        let mut trace = FlowTrace {
            index,
            status: FlowStatus::Completed,
            decisions: arith.decisions().to_vec(),
            cost_float: None,
            cost_ideal: None,
            cost_ledger: None,
            error_bound: None,
            path_point_count: None,
            unstable_events: arith.unstable_events(),
            branch_points: points.len(),
        };
        match result {
            Ok(r) => {
                trace.cost_float = Some(r.cost.float);
                trace.cost_ideal = Some(r.cost.ideal.range(prec));
                trace.cost_ledger = Some(r.cost.ledger.range(prec));
                trace.error_bound = Some(r.cost.error_bound(prec));
                trace.path_point_count = Some(r.path_point_count);
                outcomes.push(Some(r.cost));
            }
            Err(e) => {
                trace.status = FlowStatus::Diverged { reason: e.to_string() };
                outcomes.push(None);
            }
        }
        flows.push(trace);
    }

    let explored_alternatives = flows.len() as u64 - 1;
    let reference_cost = outcomes.first().and_then(|o| o.as_ref()).map(|c| c.float);
    let mut merged: Option<ErrorBound> = None;
    for cost in outcomes.iter().flatten() {
        let reference = reference_cost.unwrap_or(cost.float);
        let d = hull_distance(reference, &cost.ideal, prec);
        merged = Some(merged.map_or(d, |m| m.max(d)));
    }

    Exploration {
        flows,
        merged_error: merged,
        reference_cost,
        sites: sites.into_values().collect(),
        domain_events,
        unexplored_alternatives: discovered.saturating_sub(explored_alternatives),
        mantissa_bits: cfg.mantissa_bits,
        max_symbols: cfg.max_symbols,
        max_paths,
    }
}
