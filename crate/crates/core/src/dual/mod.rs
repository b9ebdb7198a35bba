//! Lagrangian duality for [`ProblemInstance`]s.
//!
//! The Lagrangian `L(θ, μ) = U(r) − μᵀ g(θ)` separates into one subproblem per
//! rate component and one per link, so the dual function
//! `L̄(μ) = max_{0 ≤ θ ≤ θ̄} L(θ, μ)` is cheap to evaluate. Any `L̄(μ)` with
//! `μ ≥ 0` upper-bounds the constrained maximum even when the utility or the
//! capacities are non-concave.

mod augmented;
mod components;
mod recovery;
mod subgradient;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::problem::{DecisionPoint, ProblemInstance};

pub use augmented::augmented_lagrangian_solve;
pub use components::{maximize_link_component, maximize_rate_component, LinkPrices, LinkProx, Prox1};
pub use recovery::recover_feasible;
pub use subgradient::{minimize_dual_bound, DualBoundResult, DualTraceRow};

/// Multipliers partitioned conformably with `g(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub resource: Vec<f64>,
    pub network: Vec<f64>,
    pub interference: Vec<f64>,
    pub capacity: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(inst: &ProblemInstance) -> Self {
        Self {
            resource: vec![0.0; inst.resources.len()],
            network: vec![0.0; inst.network.len()],
            interference: vec![0.0; inst.num_interference()],
            capacity: vec![0.0; inst.num_links()],
        }
    }

    pub fn check(&self, inst: &ProblemInstance) -> Result<()> {
        if self.resource.len() != inst.resources.len()
            || self.network.len() != inst.network.len()
            || self.interference.len() != inst.num_interference()
            || self.capacity.len() != inst.num_links()
        {
            return dim_err("multiplier blocks do not match the constraint blocks");
        }
        if self.iter().any(|m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Solver("multipliers must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.resource
            .iter()
            .chain(&self.network)
            .chain(&self.interference)
            .chain(&self.capacity)
            .copied()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.resource
            .iter_mut()
            .chain(self.network.iter_mut())
            .chain(self.interference.iter_mut())
            .chain(self.capacity.iter_mut())
    }

    /// Projected step `μ ← max(0, μ + step_k · g_k)` along the stacked order.
    pub(crate) fn ascend(&mut self, g: &[f64], steps: &[f64]) {
        for ((m, &gk), &sk) in self.iter_mut().zip(g).zip(steps) {
            *m = (*m + sk * gk).max(0.0);
        }
    }

    pub fn dot(&self, g: &[f64]) -> f64 {
        self.iter().zip(g).map(|(m, v)| m * v).sum()
    }
}

/// Quadratic augmenting function `Φ(θ, θᵗ) = ε ‖(θ − θᵗ) / θ̄‖²`, i.e. each
/// coordinate weighted by the inverse square of its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxSpec {
    pub weight: f64,
    pub center: DecisionPoint,
}

impl ProxSpec {
    fn coord(&self, center: f64, bound: f64) -> Prox1 {
        let weight = if bound > 0.0 { self.weight / (bound * bound) } else { self.weight };
        Prox1 { weight, center }
    }

    pub fn penalty(&self, inst: &ProblemInstance, theta: &DecisionPoint) -> f64 {
        let b = &inst.bounds;
        let part = |v: &[f64], c: &[f64], ub: &[f64]| -> f64 {
            v.iter()
                .zip(c)
                .zip(ub)
                .map(|((&v, &c), &u)| {
                    let p = self.coord(c, u);
                    p.weight * (v - c) * (v - c)
                })
                .sum()
        };
        part(&theta.r, &self.center.r, &b.r) + part(&theta.x, &self.center.x, &b.x) + part(&theta.z, &self.center.z, &b.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub dual_iterations: usize,
    pub al_iterations: usize,
    /// `α₀` in the `α₀/√t` subgradient schedule.
    pub dual_step: f64,
    /// Fixed multiplier step of the augmented Lagrangian iterations.
    pub al_step: f64,
    /// `ε` of the quadratic augmenting function (in bound-normalized units).
    pub prox_weight: f64,
    /// Points per axis for grid scans of link subproblems.
    pub grid_points: usize,
    pub feasibility_tol: f64,
    /// Consecutive iterations of growing violation that flag divergence.
    pub divergence_window: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dual_iterations: 500,
            al_iterations: 300,
            dual_step: 1.0,
            al_step: 0.05,
            prox_weight: 1e-2,
            grid_points: 256,
            feasibility_tol: 1e-9,
            divergence_window: 50,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("solver settings: {m}")));
        if self.dual_iterations == 0 || self.al_iterations == 0 {
            return bad("iteration counts must be ≥ 1");
        }
        if !(self.dual_step > 0.0) || !(self.al_step > 0.0) {
            return bad("step sizes must be positive");
        }
        if !(self.prox_weight >= 0.0) || !self.prox_weight.is_finite() {
            return bad("prox weight must be finite and ≥ 0");
        }
        if self.grid_points < 2 {
            return bad("grid needs at least 2 points");
        }
        if !(self.feasibility_tol >= 0.0) {
            return bad("feasibility tolerance must be ≥ 0");
        }
        if self.divergence_window == 0 {
            return bad("divergence window must be ≥ 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub dual_value: f64,
    pub primal_utility: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best_bound: f64,
    pub best_feasible: DecisionPoint,
    pub best_utility: f64,
    pub multipliers: DualPoint,
    pub trace: Vec<IterationRecord>,
    /// Set when the constraint violation grew for a full divergence window.
    pub diverged: bool,
}

impl SolveReport {
    /// Streams the trace as `iteration,dual_value,primal_utility,max_violation` rows.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for rec in &self.trace {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `L(θ, μ)`.
pub fn lagrangian(inst: &ProblemInstance, theta: &DecisionPoint, mu: &DualPoint) -> Result<f64> {
    mu.check(inst)?;
    let g = inst.evaluate_constraints(theta)?;
    Ok(inst.evaluate_utility(theta)? - mu.dot(&g))
}

/// Per-row normalization so one step size serves every constraint.
///
/// Each row's scale is the larger of its bound and the largest magnitude any
/// single term can reach inside the box; multiplier steps are divided by the
/// scale squared, which is a plain subgradient step on the normalized rows.
pub(crate) fn constraint_scales(inst: &ProblemInstance) -> Vec<f64> {
    let b = &inst.bounds;
    let mut out = Vec::with_capacity(inst.num_constraints());
    let row_scale = |row: &[(usize, f64)], ub: &[f64], rhs: f64| -> f64 {
        row.iter().map(|&(c, a)| (a * ub[c]).abs()).fold(rhs.abs(), f64::max)
    };
    for (row, &rhs) in inst.resources.a.rows().zip(&inst.resources.b) {
        out.push(row_scale(row, &b.x, rhs));
    }
    for (row, &rhs) in inst.network.a.rows().zip(&inst.network.b) {
        out.push(row_scale(row, &b.r, rhs));
    }
    if let Some(map) = &inst.interference {
        let gx = map.apply(&b.x);
        out.extend(b.z.iter().zip(&gx).map(|(&z, &g)| if z > 0.0 { z } else { g }));
    }
    for l in 0..inst.num_links() {
        let flows = inst.flows.link_flows(l).iter().map(|&s| b.r[s]).fold(0.0, f64::max);
        out.push(flows.max(inst.capacity(l, b.x[l], 0.0)));
    }
    for s in &mut out {
        if !(*s > 0.0 && s.is_finite()) {
            *s = 1.0;
        }
    }
    out
}

struct Prices {
    rate: Vec<f64>,
    link: Vec<LinkPrices>,
}

fn prices(inst: &ProblemInstance, mu: &DualPoint) -> Prices {
    let mut rate = inst.flows.incidence().mul_transpose_vec(&mu.capacity);
    for (p, q) in rate.iter_mut().zip(inst.network.a.mul_transpose_vec(&mu.network)) {
        *p += q;
    }
    let mut resource = inst.resources.a.mul_transpose_vec(&mu.resource);
    if let Some(map) = &inst.interference {
        for (p, q) in resource.iter_mut().zip(map.apply_transpose(&mu.interference)) {
            *p += q;
        }
    }
    let link = (0..inst.num_links())
        .map(|l| LinkPrices {
            capacity: mu.capacity[l],
            resource: resource[l],
            interference: mu.interference.get(l).copied().unwrap_or(0.0),
        })
        .collect();
    Prices { rate, link }
}

/// `argmax_{0 ≤ θ ≤ θ̄} L(θ, μ) − Φ(θ)` assembled from the separable components.
pub(crate) fn maximize_lagrangian(
    inst: &ProblemInstance,
    mu: &DualPoint,
    prox: Option<&ProxSpec>,
    grid_points: usize,
) -> DecisionPoint {
    let p = prices(inst, mu);
    let b = &inst.bounds;
    let r = (0..inst.num_rates())
        .map(|s| {
            let px = prox.map(|ps| ps.coord(ps.center.r[s], b.r[s]));
            maximize_rate_component(&inst.utilities[s], p.rate[s], b.r[s], px)
        })
        .collect();
    let coupled = inst.is_coupled();
    let mut x = Vec::with_capacity(inst.num_links());
    let mut z = Vec::with_capacity(inst.num_interference());
    for l in 0..inst.num_links() {
        let z_upper = if coupled { b.z[l] } else { 0.0 };
        let lp = prox.map(|ps| LinkProx {
            x: ps.coord(ps.center.x[l], b.x[l]),
            z: if coupled { ps.coord(ps.center.z[l], b.z[l]) } else { Prox1 { weight: 0.0, center: 0.0 } },
        });
        let (xl, zl) = maximize_link_component(&inst.capacities[l], p.link[l], b.x[l], z_upper, lp, grid_points);
        x.push(xl);
        if coupled {
            z.push(zl);
        }
    }
    DecisionPoint { r, x, z }
}

/// The dual function `L̄(μ)` and its maximizer `θ̂(μ)`.
pub fn dual_value(inst: &ProblemInstance, mu: &DualPoint) -> Result<(f64, DecisionPoint)> {
    mu.check(inst)?;
    let theta = maximize_lagrangian(inst, mu, None, 2);
    let value = lagrangian(inst, &theta, mu)?;
    Ok((value, theta))
}

/// Dual bound minimization followed by augmented Lagrangian iterations
/// warm-started at its best multipliers.
///
/// The AL run starts from `start` when given, else from the dual maximizer.
/// The reported bound is the smaller of the two phases' bounds.
pub fn solve(inst: &ProblemInstance, settings: &SolverSettings, start: Option<&DecisionPoint>) -> Result<SolveReport> {
    let dual = minimize_dual_bound(inst, settings, None)?;
    let theta0 = start.unwrap_or(&dual.maximizer);
    let mut report = augmented_lagrangian_solve(inst, settings, theta0, &dual.multipliers)?;
    if dual.best_bound < report.best_bound {
        report.best_bound = dual.best_bound;
        report.multipliers = dual.multipliers;
    }
    Ok(report)
}
