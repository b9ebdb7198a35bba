#![allow(dead_code)]

pub mod suites;

use hetnet_core::cellular::{enumerate_flows, BaseStation, CandidateSet, CellularScenario, Mobile, Tier};
use hetnet_core::dual::{DualPoint, SolverSettings};
use hetnet_core::problem::{
    Bounds, CapacityModel, DecisionPoint, FlowGraph, InterferenceMap, LinearConstraints, ProblemInstance,
    SpectralEfficiency, Utility,
};
use hetnet_core::sparse::SparseMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub enum CapacityKind {
    Mixed,
    Tabulated { x_nodes: usize, z_nodes: usize },
}

#[derive(Debug, Clone, Copy)]
pub enum UtilityKind {
    Mixed,
    PiecewiseLinear { knots: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_links: usize,
    pub max_rates: usize,
    pub capacity: CapacityKind,
    pub utility: UtilityKind,
    pub interference: bool,
}

impl Shape {
    pub fn small() -> Self {
        Self {
            max_links: 5,
            max_rates: 8,
            capacity: CapacityKind::Mixed,
            utility: UtilityKind::Mixed,
            interference: true,
        }
    }
}

/// Evenly spaced nodes `0, h, …, upper`.
pub fn nodes(upper: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| upper * i as f64 / (n - 1) as f64).collect()
}

/// Random instance with positive coefficients and a nonempty flow set per link.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: Shape) -> ProblemInstance {
    let links = rng.gen_range(1..=shape.max_links);
    let rates = rng.gen_range(links.min(shape.max_rates)..=shape.max_rates).max(1);

    let link_flows: Vec<Vec<usize>> = (0..links)
        .map(|_| {
            let k = rng.gen_range(1..=rates.min(3));
            let mut v = sample(rng, rates, k).into_vec();
            v.sort_unstable();
            v
        })
        .collect();
    let flows = FlowGraph::new(link_flows, rates).unwrap();

    let mut a_x = SparseMatrix::new(links);
    let mut b_x = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let row: Vec<(usize, f64)> = (0..links).filter_map(|c| rng.gen_bool(0.7).then(|| (c, rng.gen_range(0.5..1.5)))).collect();
        if !row.is_empty() {
            a_x.push_row(row).unwrap();
            b_x.push(rng.gen_range(0.5..2.0));
        }
    }
    let mut a_r = SparseMatrix::new(rates);
    let mut b_r = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let row: Vec<(usize, f64)> = (0..rates).filter_map(|c| rng.gen_bool(0.5).then(|| (c, rng.gen_range(0.5..1.5)))).collect();
        if !row.is_empty() {
            a_r.push_row(row).unwrap();
            b_r.push(rng.gen_range(0.5..2.0));
        }
    }

    let x_bar: Vec<f64> = (0..links).map(|_| rng.gen_range(0.5..2.0)).collect();
    let z_bar: Vec<f64> = (0..links).map(|_| rng.gen_range(0.5..2.0)).collect();

    let capacities: Vec<CapacityModel> = (0..links)
        .map(|l| match shape.capacity {
            CapacityKind::Mixed => match rng.gen_range(0..3) {
                0 => CapacityModel::Linear { slope: rng.gen_range(0.5..2.0) },
                1 => CapacityModel::Sinr {
                    signal: rng.gen_range(0.5..5.0),
                    noise: rng.gen_range(0.1..1.0),
                    efficiency: SpectralEfficiency::Shannon { loss: 2.0, cap: Some(4.8) },
                },
                _ => tabulated(rng, x_bar[l], z_bar[l], 4, 4),
            },
            CapacityKind::Tabulated { x_nodes, z_nodes } => tabulated(rng, x_bar[l], z_bar[l], x_nodes, z_nodes),
        })
        .collect();

    let r_bar: Vec<f64> = (0..rates).map(|_| rng.gen_range(1.0..3.0)).collect();
    let utilities: Vec<Utility> = (0..rates)
        .map(|s| match shape.utility {
            UtilityKind::Mixed => {
                if rng.gen_bool(0.7) {
                    Utility::Log { floor: rng.gen_range(1e-3..1e-1) }
                } else {
                    Utility::Zero
                }
            }
            UtilityKind::PiecewiseLinear { knots } => {
                let mut v = 0.0;
                let values = (0..knots)
                    .map(|_| {
                        v += rng.gen_range(0.0..1.0);
                        v
                    })
                    .collect();
                Utility::PiecewiseLinear { knots: nodes(r_bar[s], knots), values }
            }
        })
        .collect();

    let interference = shape.interference.then(|| {
        let dense: Vec<Vec<f64>> = (0..links)
            .map(|i| (0..links).map(|j| if i == j { 0.0 } else { rng.gen_range(0.0..0.5) }).collect())
            .collect();
        InterferenceMap::dense(&dense).unwrap()
    });
    let bounds = Bounds {
        r: r_bar,
        x: x_bar,
        z: if shape.interference { z_bar } else { Vec::new() },
    };
    ProblemInstance::new(
        flows,
        LinearConstraints::new(a_x, b_x).unwrap(),
        LinearConstraints::new(a_r, b_r).unwrap(),
        interference,
        capacities,
        utilities,
        bounds,
    )
    .unwrap()
}

/// Nondecreasing in `x`, nonincreasing in `z`, zero at `x = 0`.
fn tabulated(rng: &mut ChaCha8Rng, x_upper: f64, z_upper: f64, nx: usize, nz: usize) -> CapacityModel {
    let mut decay = 1.0;
    let profile: Vec<f64> = (0..nz)
        .map(|_| {
            let v = decay;
            decay *= rng.gen_range(0.4..1.0);
            v
        })
        .collect();
    let mut values = vec![vec![0.0; nz]];
    for i in 1..nx {
        let step = rng.gen_range(0.1..1.0);
        let row = values[i - 1].iter().zip(&profile).map(|(v, p)| v + step * p).collect();
        values.push(row);
    }
    CapacityModel::Tabulated { x_grid: nodes(x_upper, nx), z_grid: nodes(z_upper, nz), values }
}

/// Uniform point in a box 1.5 times the instance bounds.
pub fn random_point(rng: &mut ChaCha8Rng, inst: &ProblemInstance) -> DecisionPoint {
    let b = &inst.bounds;
    let draw = |rng: &mut ChaCha8Rng, ub: &[f64]| ub.iter().map(|&u| rng.gen_range(0.0..=1.5 * u)).collect::<Vec<_>>();
    DecisionPoint { r: draw(rng, &b.r), x: draw(rng, &b.x), z: draw(rng, &b.z) }
}

pub fn random_mu(rng: &mut ChaCha8Rng, inst: &ProblemInstance, hi: f64) -> DualPoint {
    let mut mu = DualPoint::zeros(inst);
    for m in mu.iter_mut() {
        *m = rng.gen_range(0.0..hi);
    }
    mu
}

/// A few macro and pico cells with random gains; some pico backhauls capped.
pub fn random_scenario(rng: &mut ChaCha8Rng, backhaul: bool) -> CellularScenario {
    let macros = rng.gen_range(1..=2);
    let picos = rng.gen_range(1..=3);
    let ues = rng.gen_range(1..=4);
    let stations: Vec<BaseStation> = (0..macros + picos)
        .map(|k| {
            let tier = if k < macros { Tier::Macro } else { Tier::Pico };
            BaseStation {
                tier,
                position: [k as f64, 0.0],
                bandwidth: 1e6,
                tx_psd: if tier == Tier::Macro { 1.0 } else { 0.1 },
                backhaul: (backhaul && tier == Tier::Pico && rng.gen_bool(0.5)).then(|| rng.gen_range(1e5..1e6)),
            }
        })
        .collect();
    let gains: Vec<Vec<f64>> = (0..ues)
        .map(|_| stations.iter().map(|_| 10f64.powf(rng.gen_range(-3.0..1.0))).collect())
        .collect();
    let rx: Vec<Vec<f64>> =
        gains.iter().map(|row| row.iter().zip(&stations).map(|(g, b)| g * b.tx_psd).collect()).collect();
    let tiers: Vec<Tier> = stations.iter().map(|b| b.tier).collect();
    let flows = enumerate_flows(&rx, &tiers, CandidateSet::default()).unwrap();
    let mobiles = (0..ues).map(|i| Mobile { position: [i as f64, 1.0], noise_psd: 1e-2 }).collect();
    let efficiency = SpectralEfficiency::Shannon { loss: 10f64.powf(0.3), cap: Some(4.8) };
    CellularScenario::new(stations, mobiles, gains, efficiency, flows).unwrap()
}

pub fn quick_settings() -> SolverSettings {
    SolverSettings {
        dual_iterations: 100,
        al_iterations: 60,
        al_step: 0.1,
        prox_weight: 0.3,
        grid_points: 16,
        ..Default::default()
    }
}
