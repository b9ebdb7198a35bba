//! Single-cell association: truncation of multiflow solutions, restricted
//! re-optimization and the signal-strength baselines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cellular::{linear_to_db, CellularInstance, CellularScenario, Tier};
use crate::dual::{recover_feasible, solve, SolveReport, SolverSettings};
use crate::error::{Error, Result};
use crate::problem::DecisionPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Optimizer,
    OptimizerPr,
    RangeExpansion { bias_db: f64 },
    MacroOnly,
    PicoOnly,
    Multiflow,
}

/// One serving flow per UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub method: Method,
    /// Serving flow index per UE.
    pub flows: Vec<usize>,
    /// Serving cell per UE id.
    pub cells: BTreeMap<usize, usize>,
}

impl Assignment {
    pub fn from_flows(scenario: &CellularScenario, method: Method, flows: Vec<usize>) -> Result<Self> {
        if flows.len() != scenario.mobiles.len() {
            return Err(Error::Association(format!("{} flows for {} UEs", flows.len(), scenario.mobiles.len())));
        }
        for (i, &l) in flows.iter().enumerate() {
            if scenario.flows.get(l).map(|f| f.ms) != Some(i) {
                return Err(Error::Association(format!("flow {l} is not a candidate of UE {i}")));
            }
        }
        let cells = flows.iter().enumerate().map(|(i, &l)| (i, scenario.flows[l].bs)).collect();
        Ok(Self { method, flows, cells })
    }

    fn from_cells(scenario: &CellularScenario, method: Method, cells: &[usize]) -> Result<Self> {
        let by_ms = scenario.flows_by_ms();
        let flows = cells
            .iter()
            .enumerate()
            .map(|(i, &bs)| {
                by_ms[i]
                    .iter()
                    .copied()
                    .find(|&l| scenario.flows[l].bs == bs)
                    .ok_or_else(|| Error::Association(format!("cell {bs} is not a candidate of UE {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_flows(scenario, method, flows)
    }

    /// Flows kept by the assignment, as a mask over all flows.
    pub fn mask(&self, num_flows: usize) -> Vec<bool> {
        let mut keep = vec![false; num_flows];
        for &l in &self.flows {
            keep[l] = true;
        }
        keep
    }
}

/// Keeps, per UE, the flow with the largest rate. Ties go to the stronger
/// received signal, then the lower cell index; a UE whose flows all carry
/// zero rate keeps its strongest-signal flow.
pub fn truncate_to_single_path(flow_rates: &[f64], scenario: &CellularScenario, method: Method) -> Result<Assignment> {
    if flow_rates.len() != scenario.num_flows() {
        return Err(Error::Dimension(format!("{} rates for {} flows", flow_rates.len(), scenario.num_flows())));
    }
    let chosen = scenario
        .flows_by_ms()
        .iter()
        .map(|members| {
            let all_zero = members.iter().all(|&l| !(flow_rates[l] > 0.0));
            *members
                .iter()
                .max_by(|&&a, &&b| {
                    let by_rate = if all_zero { std::cmp::Ordering::Equal } else { flow_rates[a].total_cmp(&flow_rates[b]) };
                    by_rate
                        .then(scenario.signal(a).total_cmp(&scenario.signal(b)))
                        .then(scenario.flows[b].bs.cmp(&scenario.flows[a].bs))
                })
                .expect("every UE has a flow")
        })
        .collect();
    Assignment::from_flows(scenario, method, chosen)
}

/// `θ` with every flow outside the assignment switched off, then repaired.
pub fn truncate_point(inst: &CellularInstance, theta: &DecisionPoint, assignment: &Assignment) -> DecisionPoint {
    let keep = assignment.mask(inst.num_flows);
    let mut t = theta.clone();
    for (l, &k) in keep.iter().enumerate() {
        if !k {
            t.x[l] = 0.0;
            t.r[inst.flow_index(l)] = 0.0;
        }
    }
    recover_feasible(&restrict(inst, assignment).problem, &t)
}

/// The instance with the bounds of non-selected flows zeroed.
pub fn restrict(inst: &CellularInstance, assignment: &Assignment) -> CellularInstance {
    let keep = assignment.mask(inst.num_flows);
    let mut out = inst.clone();
    let b = &mut out.problem.bounds;
    for (l, &k) in keep.iter().enumerate() {
        if !k {
            b.x[l] = 0.0;
            b.r[inst.num_mobiles + l] = 0.0;
        }
    }
    for (i, &l) in assignment.flows.iter().enumerate() {
        b.r[i] = b.r[inst.num_mobiles + l];
    }
    out
}

/// Re-solves with only the assigned flows allowed to carry traffic, starting
/// from `start` (typically the truncated multiflow point).
pub fn reoptimize_restricted(
    inst: &CellularInstance,
    assignment: &Assignment,
    settings: &SolverSettings,
    start: Option<&DecisionPoint>,
) -> Result<SolveReport> {
    if assignment.flows.len() != inst.num_mobiles {
        return Err(Error::Association("assignment does not match the instance".into()));
    }
    let restricted = restrict(inst, assignment);
    solve(&restricted.problem, settings, start)
}

/// Stages of the single-path optimizer on one instance.
#[derive(Debug, Clone)]
pub struct SinglePathOutcome {
    /// Multiflow solve; its best point also considers the single-path
    /// points, which are feasible for the multiflow problem.
    pub multiflow: SolveReport,
    pub assignment: Assignment,
    pub truncated: DecisionPoint,
    pub truncated_utility: f64,
    /// Restricted re-solve, when requested.
    pub reoptimized: Option<SolveReport>,
}

impl SinglePathOutcome {
    /// The final single-path point.
    pub fn point(&self) -> &DecisionPoint {
        self.reoptimized.as_ref().map_or(&self.truncated, |r| &r.best_feasible)
    }

    pub fn utility(&self) -> f64 {
        self.reoptimized.as_ref().map_or(self.truncated_utility, |r| r.best_utility)
    }

    pub fn diverged(&self) -> bool {
        self.multiflow.diverged || self.reoptimized.as_ref().is_some_and(|r| r.diverged)
    }
}

/// Multiflow solve, truncation to the largest flow per UE, and optionally a
/// restricted re-solve warm-started at the truncated point.
pub fn single_path(
    inst: &CellularInstance,
    scenario: &CellularScenario,
    method: Method,
    settings: &SolverSettings,
    reoptimize: bool,
) -> Result<SinglePathOutcome> {
    let mut multiflow = solve(&inst.problem, settings, None)?;
    let assignment = truncate_to_single_path(inst.flow_rates(&multiflow.best_feasible.r), scenario, method)?;
    let truncated = truncate_point(inst, &multiflow.best_feasible, &assignment);
    let truncated_utility = inst.problem.utility_of_rates(&truncated.r);
    let reoptimized = if reoptimize {
        Some(reoptimize_restricted(inst, &assignment, settings, Some(&truncated))?)
    } else {
        None
    };
    let out = SinglePathOutcome { multiflow: multiflow.clone(), assignment, truncated, truncated_utility, reoptimized };
    if out.utility() > multiflow.best_utility {
        multiflow.best_utility = out.utility();
        multiflow.best_feasible = out.point().clone();
    }
    Ok(SinglePathOutcome { multiflow, ..out })
}

/// Per-tier additive bias in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierBias {
    pub macro_db: f64,
    pub pico_db: f64,
}

impl TierBias {
    pub fn pico(bias_db: f64) -> Self {
        Self { macro_db: 0.0, pico_db: bias_db }
    }

    fn of(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.macro_db,
            Tier::Pico => self.pico_db,
        }
    }
}

/// Per UE, the cell maximizing `rsrp_db + bias(tier)`; ties go to the higher
/// raw RSRP, then the lower index. An infinite bias therefore picks the
/// strongest cell of that tier.
pub fn select_biased(rsrp_db: &[Vec<f64>], tiers: &[Tier], bias: TierBias) -> Vec<usize> {
    rsrp_db
        .iter()
        .map(|row| {
            (0..tiers.len())
                .max_by(|&a, &b| {
                    (row[a] + bias.of(tiers[a]))
                        .total_cmp(&(row[b] + bias.of(tiers[b])))
                        .then(row[a].total_cmp(&row[b]))
                        .then(b.cmp(&a))
                })
                .expect("at least one cell")
        })
        .collect()
}

/// RSRP in dB per (UE, cell).
pub fn rsrp_db(scenario: &CellularScenario) -> Vec<Vec<f64>> {
    scenario.received_matrix().iter().map(|row| row.iter().map(|&p| linear_to_db(p)).collect()).collect()
}

fn tiers(scenario: &CellularScenario) -> Vec<Tier> {
    scenario.base_stations.iter().map(|b| b.tier).collect()
}

pub fn range_expansion(scenario: &CellularScenario, bias: TierBias) -> Result<Assignment> {
    let cells = select_biased(&rsrp_db(scenario), &tiers(scenario), bias);
    Assignment::from_cells(scenario, Method::RangeExpansion { bias_db: bias.pico_db - bias.macro_db }, &cells)
}

/// Strongest cell of the given tier for every UE.
pub fn fixed_tier(scenario: &CellularScenario, tier: Tier) -> Result<Assignment> {
    let tiers = tiers(scenario);
    if !tiers.contains(&tier) {
        return Err(Error::Association(format!("no {tier:?} cells in the scenario")));
    }
    let bias = match tier {
        Tier::Macro => TierBias { macro_db: f64::INFINITY, pico_db: 0.0 },
        Tier::Pico => TierBias::pico(f64::INFINITY),
    };
    let cells = select_biased(&rsrp_db(scenario), &tiers, bias);
    let method = match tier {
        Tier::Macro => Method::MacroOnly,
        Tier::Pico => Method::PicoOnly,
    };
    Assignment::from_cells(scenario, method, &cells)
}

/// Rates when every cell transmits at full power and splits its band (and
/// backhaul cap) equally among the UEs it serves.
pub fn equal_share_rates(assignment: &Assignment, scenario: &CellularScenario) -> Vec<f64> {
    let mut load = vec![0usize; scenario.base_stations.len()];
    for &l in &assignment.flows {
        load[scenario.flows[l].bs] += 1;
    }
    assignment
        .flows
        .iter()
        .map(|&l| {
            let bs = &scenario.base_stations[scenario.flows[l].bs];
            let n = load[scenario.flows[l].bs] as f64;
            let radio = scenario.link_capacity(l, bs.bandwidth / n, scenario.full_power_interference(l));
            bs.backhaul.map_or(radio, |cap| radio.min(cap / n))
        })
        .collect()
}

/// Per-UE totals `r̄ᵢ` of a solved cellular point.
pub fn ue_rates(inst: &CellularInstance, theta: &DecisionPoint) -> Vec<f64> {
    inst.total_rates(&theta.r).to_vec()
}

/// Cell carrying the most rate for each UE of a multiflow point.
pub fn dominant_cells(inst: &CellularInstance, scenario: &CellularScenario, theta: &DecisionPoint) -> Vec<usize> {
    let rates = inst.flow_rates(&theta.r);
    scenario
        .flows_by_ms()
        .iter()
        .map(|m| {
            let l = *m.iter().max_by(|&&a, &&b| rates[a].total_cmp(&rates[b]).then(b.cmp(&a))).expect("nonempty");
            scenario.flows[l].bs
        })
        .collect()
}
