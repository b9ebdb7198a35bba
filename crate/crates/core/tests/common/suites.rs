//! Checks shared by the property tests and the acceptance report.

use hetnet_core::association::{select_biased, single_path, Method, TierBias};
use hetnet_core::cellular::{build_instance, InterferenceMode, Tier};
use hetnet_core::dual::{dual_value, lagrangian, recover_feasible, solve, DualPoint};
use hetnet_core::problem::{CapacityModel, DecisionPoint, ProblemInstance, Utility};
use hetnet_core::scenario::{make_drop, ScenarioConfig};
use proptest::prelude::*;
use rand::Rng;

use super::{quick_settings, random_instance, random_mu, random_point, random_scenario, rng, CapacityKind, Shape, UtilityKind};

pub fn dual_tol(bound: f64) -> f64 {
    1e-6 * (1.0 + bound.abs())
}

/// Solves `cases` random small instances; returns the largest
/// `utility − bound` seen (≤ tolerance when weak duality holds).
pub fn weak_duality_suite(seed: u64, cases: usize) -> Result<f64, String> {
    let mut rng = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..cases {
        let inst = random_instance(&mut rng, Shape::small());
        let rep = solve(&inst, &quick_settings(), None).map_err(|e| e.to_string())?;
        if !inst.is_feasible(&rep.best_feasible, 1e-9) {
            return Err(format!("case {case}: recovered point infeasible"));
        }
        let u = inst.evaluate_utility(&rep.best_feasible).map_err(|e| e.to_string())?;
        if (u - rep.best_utility).abs() > 1e-9 * (1.0 + u.abs()) {
            return Err(format!("case {case}: reported utility {} but point has {u}", rep.best_utility));
        }
        if u > rep.best_bound + dual_tol(rep.best_bound) {
            return Err(format!("case {case}: utility {u} above bound {}", rep.best_bound));
        }
        for t in &rep.trace {
            if t.primal_utility > t.dual_value + dual_tol(t.dual_value) {
                return Err(format!("case {case}, iteration {}: {} > {}", t.iteration, t.primal_utility, t.dual_value));
            }
        }
        worst = worst.max(u - rep.best_bound);
    }
    Ok(worst)
}

/// Lagrangian evaluated from dense copies of the instance data at a point
/// given by node indices into each coordinate's grid.
pub struct GridOracle {
    pub r_nodes: Vec<Vec<f64>>,
    r_values: Vec<Vec<f64>>,
    pub x_nodes: Vec<Vec<f64>>,
    pub z_nodes: Vec<Vec<f64>>,
    tables: Vec<Vec<Vec<f64>>>,
    a_x: Vec<Vec<f64>>,
    b_x: Vec<f64>,
    a_r: Vec<Vec<f64>>,
    b_r: Vec<f64>,
    g: Vec<Vec<f64>>,
    e: Vec<Vec<f64>>,
    mu: DualPoint,
}

pub struct GridMax {
    pub value: f64,
    pub r: Vec<usize>,
    pub x: Vec<usize>,
    pub z: Vec<usize>,
}

impl GridOracle {
    pub fn new(inst: &ProblemInstance, mu: &DualPoint) -> Self {
        let mut r_nodes = Vec::new();
        let mut r_values = Vec::new();
        for u in &inst.utilities {
            let Utility::PiecewiseLinear { knots, values } = u else { panic!("expected piecewise-linear utility") };
            r_nodes.push(knots.clone());
            r_values.push(values.clone());
        }
        let (mut x_nodes, mut z_nodes, mut tables) = (Vec::new(), Vec::new(), Vec::new());
        for c in &inst.capacities {
            let CapacityModel::Tabulated { x_grid, z_grid, values } = c else { panic!("expected a table") };
            x_nodes.push(x_grid.clone());
            z_nodes.push(z_grid.clone());
            tables.push(values.clone());
        }
        Self {
            r_nodes,
            r_values,
            x_nodes,
            z_nodes,
            tables,
            a_x: inst.resources.a.to_dense(),
            b_x: inst.resources.b.clone(),
            a_r: inst.network.a.to_dense(),
            b_r: inst.network.b.clone(),
            g: inst.interference.as_ref().expect("coupled instance").to_dense(),
            e: inst.flows.incidence().to_dense(),
            mu: mu.clone(),
        }
    }

    fn value(&self, ri: &[usize], xi: &[usize], zi: &[usize]) -> f64 {
        let r: Vec<f64> = ri.iter().enumerate().map(|(s, &i)| self.r_nodes[s][i]).collect();
        let x: Vec<f64> = xi.iter().enumerate().map(|(l, &i)| self.x_nodes[l][i]).collect();
        let z: Vec<f64> = zi.iter().enumerate().map(|(l, &i)| self.z_nodes[l][i]).collect();
        let dot = |a: &[f64], v: &[f64]| a.iter().zip(v).map(|(a, v)| a * v).sum::<f64>();
        let mut val: f64 = ri.iter().enumerate().map(|(s, &i)| self.r_values[s][i]).sum();
        for (k, row) in self.a_x.iter().enumerate() {
            val -= self.mu.resource[k] * (dot(row, &x) - self.b_x[k]);
        }
        for (k, row) in self.a_r.iter().enumerate() {
            val -= self.mu.network[k] * (dot(row, &r) - self.b_r[k]);
        }
        for (l, row) in self.g.iter().enumerate() {
            val -= self.mu.interference[l] * (dot(row, &x) - z[l]);
        }
        for (l, row) in self.e.iter().enumerate() {
            val -= self.mu.capacity[l] * (dot(row, &r) - self.tables[l][xi[l]][zi[l]]);
        }
        val
    }

    /// Exhaustive search over the product of every coordinate grid.
    pub fn joint_max(&self) -> GridMax {
        let radix: Vec<usize> = self.r_nodes.iter().chain(&self.x_nodes).chain(&self.z_nodes).map(Vec::len).collect();
        let (s, l) = (self.r_nodes.len(), self.x_nodes.len());
        let mut idx = vec![0usize; radix.len()];
        let mut best = GridMax { value: f64::NEG_INFINITY, r: Vec::new(), x: Vec::new(), z: Vec::new() };
        loop {
            let v = self.value(&idx[..s], &idx[s..s + l], &idx[s + l..]);
            if v > best.value {
                best = GridMax { value: v, r: idx[..s].to_vec(), x: idx[s..s + l].to_vec(), z: idx[s + l..].to_vec() };
            }
            let mut k = 0;
            loop {
                if k == radix.len() {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < radix[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

fn within_one_cell(v: f64, nodes: &[f64], best: usize) -> bool {
    let lo = nodes[best.saturating_sub(1)];
    let hi = nodes[(best + 1).min(nodes.len() - 1)];
    v >= lo - 1e-12 && v <= hi + 1e-12
}

/// Compares the separably assembled dual maximizer with exhaustive joint
/// grid search on `cases` instances with 7 × 3 capacity tables. Returns the
/// largest value discrepancy.
pub fn separable_maximizer_suite(seed: u64, cases: usize) -> Result<f64, String> {
    let shape = Shape {
        max_links: 3,
        max_rates: 4,
        capacity: CapacityKind::Tabulated { x_nodes: 7, z_nodes: 3 },
        utility: UtilityKind::PiecewiseLinear { knots: 3 },
        interference: true,
    };
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let inst = random_instance(&mut rng, shape);
        let mu = random_mu(&mut rng, &inst, 2.0);
        let (value, theta) = dual_value(&inst, &mu).map_err(|e| e.to_string())?;
        let oracle = GridOracle::new(&inst, &mu);
        let best = oracle.joint_max();

        let gap = (value - best.value).abs();
        worst = worst.max(gap);
        if gap > 1e-6 {
            return Err(format!("case {case}: separable {value} vs joint {}", best.value));
        }
        if (lagrangian(&inst, &theta, &mu).map_err(|e| e.to_string())? - value).abs() > 1e-9 {
            return Err(format!("case {case}: reported value differs from L at the maximizer"));
        }
        let coords = [("r", &theta.r, &oracle.r_nodes, &best.r), ("x", &theta.x, &oracle.x_nodes, &best.x), ("z", &theta.z, &oracle.z_nodes, &best.z)];
        for (name, got, nodes, idx) in coords {
            for (k, &i) in idx.iter().enumerate() {
                if !within_one_cell(got[k], &nodes[k], i) {
                    return Err(format!("case {case}: {name}[{k}] = {} not next to node {}", got[k], nodes[k][i]));
                }
            }
        }
    }
    Ok(worst)
}

pub fn zero_point_is_feasible(seed: u64) -> Result<(), TestCaseError> {
    let inst = random_instance(&mut rng(seed), Shape::small());
    prop_assert!(inst.is_feasible(&DecisionPoint::zeros(&inst), 0.0));
    Ok(())
}

pub fn recovered_point_is_feasible(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let inst = random_instance(&mut rng, Shape::small());
    let theta = random_point(&mut rng, &inst);
    let out = recover_feasible(&inst, &theta);
    prop_assert!(inst.is_feasible(&out, 1e-9));
    Ok(())
}

/// multiflow ≥ truncated + re-solved ≥ truncated, all feasible, single path.
pub fn truncation_dominance(seed: u64, pr: bool, backhaul: bool) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let scenario = random_scenario(&mut rng, backhaul);
    let mode = if pr { InterferenceMode::PowerReduction } else { InterferenceMode::FixedPower };
    let inst = build_instance(&scenario, mode).unwrap();
    let out = single_path(&inst, &scenario, Method::Optimizer, &quick_settings(), true).unwrap();
    let p = &inst.problem;

    prop_assert!(p.is_feasible(&out.truncated, 1e-9));
    prop_assert!(p.is_feasible(out.point(), 1e-9));
    for (i, members) in scenario.flows_by_ms().iter().enumerate() {
        let carrying = members.iter().filter(|&&l| out.point().r[inst.flow_index(l)] > 0.0).count();
        prop_assert!(carrying <= 1, "UE {} uses {} flows", i, carrying);
    }

    let multi = out.multiflow.best_utility;
    let reopt = out.utility();
    let trunc = out.truncated_utility;
    let tol = 1e-9 * (1.0 + multi.abs());
    prop_assert!(multi + tol >= reopt, "multiflow {} < re-solved {}", multi, reopt);
    prop_assert!(reopt + tol >= trunc, "re-solved {} < truncated {}", reopt, trunc);
    prop_assert!(multi <= out.multiflow.best_bound + dual_tol(out.multiflow.best_bound));
    Ok(())
}

fn random_tiers(rng: &mut impl Rng, cells: usize) -> Vec<Tier> {
    (0..cells).map(|k| if k == 0 || rng.gen_bool(0.3) { Tier::Macro } else { Tier::Pico }).collect()
}

pub fn selection_ignores_shift(seed: u64, shift: f64, bias: f64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let cells = rng.gen_range(2..8);
    let tiers = random_tiers(&mut rng, cells);
    // integer dB values produce ties, which must break the same way
    let rsrp: Vec<Vec<f64>> = (0..5).map(|_| (0..cells).map(|_| rng.gen_range(-120..-60) as f64).collect()).collect();
    let shifted: Vec<Vec<f64>> = rsrp.iter().map(|r| r.iter().map(|v| v + shift.round()).collect()).collect();
    let b = TierBias::pico(bias.round());
    prop_assert_eq!(select_biased(&rsrp, &tiers, b), select_biased(&shifted, &tiers, b));

    let shifted: Vec<Vec<f64>> = rsrp.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
    let b = TierBias::pico(bias);
    prop_assert_eq!(select_biased(&rsrp, &tiers, b), select_biased(&shifted, &tiers, b));
    Ok(())
}

pub fn unbiased_selection_ignores_monotone_maps(seed: u64, k: f64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let cells = rng.gen_range(2..8);
    let tiers = random_tiers(&mut rng, cells);
    let rsrp: Vec<Vec<f64>> = (0..5).map(|_| (0..cells).map(|_| rng.gen_range(-120.0..-60.0)).collect()).collect();
    let warped: Vec<Vec<f64>> = rsrp.iter().map(|r| r.iter().map(|v| (k * v / 50.0).exp() + v).collect()).collect();
    let b = TierBias::pico(0.0);
    prop_assert_eq!(select_biased(&rsrp, &tiers, b), select_biased(&warped, &tiers, b));
    Ok(())
}

pub fn shadowing_config() -> ScenarioConfig {
    ScenarioConfig { ues_per_macro: 3, picos_per_macro: 3, ..Default::default() }
}

/// Sample std of one drop's shadowing draws (≥ 10⁴ of them).
pub fn shadowing_std(seed: u64) -> Result<(), TestCaseError> {
    let (drop, _) = make_drop(seed, &shadowing_config()).unwrap();
    let v: Vec<f64> = drop.shadowing_db.iter().flatten().copied().collect();
    prop_assert!(v.len() >= 10_000);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    prop_assert!((std - 8.0).abs() <= 0.2, "std {}", std);
    Ok(())
}
