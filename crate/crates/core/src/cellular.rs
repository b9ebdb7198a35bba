//! Mapping of a downlink cellular scenario onto a [`ProblemInstance`].
//!
//! Each candidate (base station, mobile) pair is a flow carried on its own
//! wireless link. The rate vector is `(r̄₁ … r̄_N, r₁ … r_L)`: per-mobile totals
//! first, then per-flow rates. Totals carry the log utility and are tied to
//! their flows by network rows `r̄ᵢ − Σ r_ℓ ≤ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    Bounds, CapacityModel, DecisionPoint, FlowGraph, InterferenceMap, LinearConstraints, ProblemInstance, SpectralEfficiency, Utility,
};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Macro,
    Pico,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub tier: Tier,
    pub position: [f64; 2],
    /// `w̄_j` in Hz.
    pub bandwidth: f64,
    /// Transmit power spectral density `P_j` in W/Hz.
    pub tx_psd: f64,
    /// Backhaul cap `B_j` in bps.
    pub backhaul: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mobile {
    pub position: [f64; 2],
    /// Receiver noise PSD `N` in W/Hz.
    pub noise_psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub bs: usize,
    pub ms: usize,
}

/// How many candidate cells of each tier a mobile may be served by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub macros: usize,
    pub picos: usize,
}

impl Default for CandidateSet {
    fn default() -> Self {
        Self { macros: 1, picos: 2 }
    }
}

/// Per mobile, the strongest `macros` macro cells and `picos` pico cells by
/// received power `rx[ms][bs]`, ordered by (mobile, base station).
pub fn enumerate_flows(rx: &[Vec<f64>], tiers: &[Tier], candidates: CandidateSet) -> Result<Vec<Flow>> {
    let mut flows = Vec::new();
    for (ms, row) in rx.iter().enumerate() {
        if row.len() != tiers.len() {
            return Err(Error::Dimension(format!("mobile {ms} has {} received powers for {} cells", row.len(), tiers.len())));
        }
        let mut chosen = Vec::new();
        for (tier, count) in [(Tier::Macro, candidates.macros), (Tier::Pico, candidates.picos)] {
            let mut cells: Vec<usize> = (0..tiers.len()).filter(|&k| tiers[k] == tier).collect();
            // strongest first, lower index on ties
            cells.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            chosen.extend(cells.into_iter().take(count));
        }
        if chosen.is_empty() {
            return Err(Error::Scenario(format!("mobile {ms} has no candidate cells")));
        }
        chosen.sort_unstable();
        flows.extend(chosen.into_iter().map(|bs| Flow { bs, ms }));
    }
    Ok(flows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Every cell transmits at full power over its whole band.
    FixedPower,
    /// Interference follows the bandwidth each cell actually uses.
    PowerReduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct CellularScenario {
    pub base_stations: Vec<BaseStation>,
    pub mobiles: Vec<Mobile>,
    /// Linear channel gain `gains[ms][bs]`. Every flow of a mobile shares its
    /// receiver, so gains are stored per mobile rather than per flow.
    pub gains: Vec<Vec<f64>>,
    pub efficiency: SpectralEfficiency,
    pub flows: Vec<Flow>,
}

impl CellularScenario {
    pub fn new(
        base_stations: Vec<BaseStation>,
        mobiles: Vec<Mobile>,
        gains: Vec<Vec<f64>>,
        efficiency: SpectralEfficiency,
        flows: Vec<Flow>,
    ) -> Result<Self> {
        let s = Self { base_stations, mobiles, gains, efficiency, flows };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        let nbs = self.base_stations.len();
        if self.gains.len() != self.mobiles.len() || self.gains.iter().any(|g| g.len() != nbs) {
            return Err(Error::Dimension("gains must be mobiles × base stations".into()));
        }
        if self.gains.iter().flatten().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return bad("channel gains must be positive and finite".into());
        }
        for (j, bs) in self.base_stations.iter().enumerate() {
            if !(bs.bandwidth > 0.0 && bs.bandwidth.is_finite()) || !(bs.tx_psd > 0.0 && bs.tx_psd.is_finite()) {
                return bad(format!("base station {j} needs positive bandwidth and power"));
            }
            if bs.backhaul.is_some_and(|b| !(b >= 0.0) || !b.is_finite()) {
                return bad(format!("base station {j} has an invalid backhaul cap"));
            }
        }
        if self.mobiles.iter().any(|m| !(m.noise_psd > 0.0) || !m.noise_psd.is_finite()) {
            return bad("noise PSD must be positive and finite".into());
        }
        for (l, f) in self.flows.iter().enumerate() {
            if f.bs >= nbs || f.ms >= self.mobiles.len() {
                return Err(Error::Dimension(format!("flow {l} references a missing node")));
            }
            if self.flows[..l].contains(f) {
                return bad(format!("flow {l} duplicates an earlier flow"));
            }
        }
        if let Some(i) = (0..self.mobiles.len()).find(|&i| !self.flows.iter().any(|f| f.ms == i)) {
            return bad(format!("mobile {i} has no flows"));
        }
        Ok(())
    }

    pub fn num_flows(&self) -> usize {
        self.flows.len()
    }

    /// Received signal PSD `H P` at mobile `ms` from base station `bs`.
    pub fn received_psd(&self, ms: usize, bs: usize) -> f64 {
        self.gains[ms][bs] * self.base_stations[bs].tx_psd
    }

    /// Received PSD for every (mobile, base station) pair.
    pub fn received_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.mobiles.len())
            .map(|i| (0..self.base_stations.len()).map(|j| self.received_psd(i, j)).collect())
            .collect()
    }

    /// Signal PSD of flow `ℓ` from its serving cell.
    pub fn signal(&self, flow: usize) -> f64 {
        let f = self.flows[flow];
        self.received_psd(f.ms, f.bs)
    }

    pub fn noise(&self, flow: usize) -> f64 {
        self.mobiles[self.flows[flow].ms].noise_psd
    }

    /// `γ_ℓ = H P / (z + N)`.
    pub fn sinr(&self, flow: usize, z: f64) -> f64 {
        self.signal(flow) / (z + self.noise(flow))
    }

    /// `x ρ(γ_ℓ(z))` in bps.
    pub fn link_capacity(&self, flow: usize, x: f64, z: f64) -> f64 {
        x * self.efficiency.eval(self.sinr(flow, z))
    }

    /// Interference PSD at flow `ℓ` when every other cell that carries a flow
    /// transmits at full power over its whole band.
    pub fn full_power_interference(&self, flow: usize) -> f64 {
        let f = self.flows[flow];
        let mut active = vec![false; self.base_stations.len()];
        self.flows.iter().for_each(|f| active[f.bs] = true);
        (0..self.base_stations.len())
            .filter(|&k| k != f.bs && active[k])
            .map(|k| self.received_psd(f.ms, k))
            .sum()
    }

    /// Flows transmitted by each base station.
    pub fn flows_by_bs(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.base_stations.len()];
        for (l, f) in self.flows.iter().enumerate() {
            out[f.bs].push(l);
        }
        out
    }

    /// Flows received by each mobile.
    pub fn flows_by_ms(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.mobiles.len()];
        for (l, f) in self.flows.iter().enumerate() {
            out[f.ms].push(l);
        }
        out
    }

    /// `G[ℓ][ℓ'] = H_ℓk P_k / w̄_k` for `ℓ'` served by `k ≠ serve(ℓ)`.
    pub fn gain_matrix(&self) -> InterferenceMap {
        let groups = self.base_stations.len();
        let mut coupling = vec![0.0; self.flows.len() * groups];
        for (l, f) in self.flows.iter().enumerate() {
            for (k, bs) in self.base_stations.iter().enumerate() {
                if k != f.bs {
                    coupling[l * groups + k] = self.received_psd(f.ms, k) / bs.bandwidth;
                }
            }
        }
        let link_group = self.flows.iter().map(|f| f.bs).collect();
        InterferenceMap::grouped(link_group, groups, coupling).expect("scenario gains are validated")
    }
}

/// A [`ProblemInstance`] built from a scenario, with the bookkeeping needed to
/// read cellular quantities back out of a [`DecisionPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellularInstance {
    pub problem: ProblemInstance,
    pub mode: InterferenceMode,
    /// Base station owning each bandwidth row of `A_x`.
    pub bandwidth_rows: Vec<usize>,
    /// Base station owning each backhaul row; these follow the coupling rows in `A_r`.
    pub backhaul_rows: Vec<usize>,
    pub num_mobiles: usize,
    pub num_flows: usize,
}

impl CellularInstance {
    /// Index of flow `ℓ`'s rate in `r`.
    pub fn flow_index(&self, flow: usize) -> usize {
        self.num_mobiles + flow
    }

    pub fn total_rates<'a>(&self, r: &'a [f64]) -> &'a [f64] {
        &r[..self.num_mobiles]
    }

    pub fn flow_rates<'a>(&self, r: &'a [f64]) -> &'a [f64] {
        &r[self.num_mobiles..]
    }

    /// Carries a fixed-power point of the same scenario into this instance.
    /// In power-reduction mode `z = Gx`, which never exceeds the full-power
    /// interference, so a feasible fixed-power point stays feasible.
    pub fn lift(&self, fixed: &DecisionPoint) -> DecisionPoint {
        let z = match &self.problem.interference {
            Some(g) => g.apply(&fixed.x),
            None => Vec::new(),
        };
        DecisionPoint { r: fixed.r.clone(), x: fixed.x.clone(), z }
    }
}

pub fn build_instance(scenario: &CellularScenario, mode: InterferenceMode) -> Result<CellularInstance> {
    let nms = scenario.mobiles.len();
    let nl = scenario.num_flows();
    let by_bs = scenario.flows_by_bs();
    let by_ms = scenario.flows_by_ms();

    let flows = FlowGraph::new((0..nl).map(|l| vec![nms + l]).collect(), nms + nl)?;

    let mut a_x = SparseMatrix::new(nl);
    let mut b_x = Vec::new();
    let mut bandwidth_rows = Vec::new();
    for (j, members) in by_bs.iter().enumerate().filter(|(_, m)| !m.is_empty()) {
        a_x.push_row(members.iter().map(|&l| (l, 1.0)).collect())?;
        b_x.push(scenario.base_stations[j].bandwidth);
        bandwidth_rows.push(j);
    }

    let mut a_r = SparseMatrix::new(nms + nl);
    let mut b_r = Vec::new();
    for (i, members) in by_ms.iter().enumerate() {
        let mut row = vec![(i, 1.0)];
        row.extend(members.iter().map(|&l| (nms + l, -1.0)));
        a_r.push_row(row)?;
        b_r.push(0.0);
    }
    let mut backhaul_rows = Vec::new();
    for (j, members) in by_bs.iter().enumerate().filter(|(_, m)| !m.is_empty()) {
        if let Some(cap) = scenario.base_stations[j].backhaul {
            a_r.push_row(members.iter().map(|&l| (nms + l, 1.0)).collect())?;
            b_r.push(cap);
            backhaul_rows.push(j);
        }
    }

    let capacities: Vec<CapacityModel> = (0..nl)
        .map(|l| {
            let fixed = match mode {
                InterferenceMode::FixedPower => scenario.full_power_interference(l),
                InterferenceMode::PowerReduction => 0.0,
            };
            CapacityModel::Sinr {
                signal: scenario.signal(l),
                noise: scenario.noise(l) + fixed,
                efficiency: scenario.efficiency.clone(),
            }
        })
        .collect();

    let x_bar: Vec<f64> = scenario.flows.iter().map(|f| scenario.base_stations[f.bs].bandwidth).collect();
    let (interference, z_bar) = match mode {
        InterferenceMode::FixedPower => (None, Vec::new()),
        InterferenceMode::PowerReduction => {
            // Interference peaks when every active cell uses its whole band.
            let z_bar = (0..nl).map(|l| scenario.full_power_interference(l)).collect();
            (Some(scenario.gain_matrix()), z_bar)
        }
    };
    let flow_bar: Vec<f64> = (0..nl).map(|l| capacities[l].eval(x_bar[l], 0.0)).collect();
    let mut r_bar: Vec<f64> = by_ms.iter().map(|m| m.iter().map(|&l| flow_bar[l]).sum()).collect();
    r_bar.extend(&flow_bar);

    let mut utilities = vec![Utility::log(); nms];
    utilities.extend(std::iter::repeat(Utility::Zero).take(nl));

    let problem = ProblemInstance::new(
        flows,
        LinearConstraints::new(a_x, b_x)?,
        LinearConstraints::new(a_r, b_r)?,
        interference,
        capacities,
        utilities,
        Bounds { r: r_bar, x: x_bar, z: z_bar },
    )?;
    Ok(CellularInstance { problem, mode, bandwidth_rows, backhaul_rows, num_mobiles: nms, num_flows: nl })
}

/// Wire form: positions in m, bandwidth in MHz, PSDs in dBm/Hz, gains in dB,
/// backhaul in Mbps.
#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    base_stations: Vec<BaseStationDoc>,
    mobiles: Vec<MobileDoc>,
    gains_db: Vec<Vec<f64>>,
    efficiency: SpectralEfficiency,
    flows: Vec<Flow>,
}

#[derive(Serialize, Deserialize)]
struct BaseStationDoc {
    tier: Tier,
    position_m: [f64; 2],
    bandwidth_mhz: f64,
    tx_psd_dbm_per_hz: f64,
    backhaul_mbps: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct MobileDoc {
    position_m: [f64; 2],
    noise_psd_dbm_per_hz: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// dBm (per Hz) to W (per Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

impl TryFrom<ScenarioDoc> for CellularScenario {
    type Error = Error;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        let base_stations = doc
            .base_stations
            .into_iter()
            .map(|b| BaseStation {
                tier: b.tier,
                position: b.position_m,
                bandwidth: b.bandwidth_mhz * 1e6,
                tx_psd: dbm_to_watts(b.tx_psd_dbm_per_hz),
                backhaul: b.backhaul_mbps.map(|m| m * 1e6),
            })
            .collect();
        let mobiles = doc
            .mobiles
            .into_iter()
            .map(|m| Mobile { position: m.position_m, noise_psd: dbm_to_watts(m.noise_psd_dbm_per_hz) })
            .collect();
        let gains = doc.gains_db.iter().map(|row| row.iter().map(|&g| db_to_linear(g)).collect()).collect();
        Self::new(base_stations, mobiles, gains, doc.efficiency, doc.flows)
    }
}

impl From<CellularScenario> for ScenarioDoc {
    fn from(s: CellularScenario) -> Self {
        Self {
            base_stations: s
                .base_stations
                .iter()
                .map(|b| BaseStationDoc {
                    tier: b.tier,
                    position_m: b.position,
                    bandwidth_mhz: b.bandwidth / 1e6,
                    tx_psd_dbm_per_hz: watts_to_dbm(b.tx_psd),
                    backhaul_mbps: b.backhaul.map(|c| c / 1e6),
                })
                .collect(),
            mobiles: s
                .mobiles
                .iter()
                .map(|m| MobileDoc { position_m: m.position, noise_psd_dbm_per_hz: watts_to_dbm(m.noise_psd) })
                .collect(),
            gains_db: s.gains.iter().map(|row| row.iter().map(|&g| linear_to_db(g)).collect()).collect(),
            efficiency: s.efficiency,
            flows: s.flows,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DecisionPoint;

    fn shannon() -> SpectralEfficiency {
        SpectralEfficiency::Shannon { loss: 10f64.powf(0.3), cap: Some(4.8) }
    }

    fn bs(tier: Tier, bandwidth: f64, tx_psd: f64) -> BaseStation {
        BaseStation { tier, position: [0.0, 0.0], bandwidth, tx_psd, backhaul: None }
    }

    fn mobile(noise: f64) -> Mobile {
        Mobile { position: [0.0, 0.0], noise_psd: noise }
    }

    /// Two mobiles, three cells: MS0 may use BS0 or BS1, MS1 may use BS1 or BS2.
    fn two_by_three() -> CellularScenario {
        CellularScenario::new(
            vec![bs(Tier::Macro, 1.0, 1.0), bs(Tier::Pico, 1.0, 2.0), bs(Tier::Pico, 1.0, 1.0)],
            vec![mobile(1.0), mobile(1.0)],
            vec![vec![1.0, 0.5, 0.1], vec![0.2, 0.1, 1.0]],
            shannon(),
            vec![Flow { bs: 0, ms: 0 }, Flow { bs: 1, ms: 0 }, Flow { bs: 1, ms: 1 }, Flow { bs: 2, ms: 1 }],
        )
        .unwrap()
    }

    #[test]
    fn candidate_selection() {
        let tiers = [Tier::Macro, Tier::Pico, Tier::Pico, Tier::Pico];
        let flows = enumerate_flows(&[vec![1.0, 0.3, 0.2, 0.5]], &tiers, CandidateSet::default()).unwrap();
        assert_eq!(flows.iter().map(|f| f.bs).collect::<Vec<_>>(), vec![0, 1, 3]);

        let flows = enumerate_flows(&[vec![1.0]], &[Tier::Macro], CandidateSet::default()).unwrap();
        assert_eq!(flows, vec![Flow { bs: 0, ms: 0 }]);

        let tiers = [Tier::Macro, Tier::Pico];
        let rx = vec![vec![0.1, 1.0], vec![0.2, 0.9]];
        let flows = enumerate_flows(&rx, &tiers, CandidateSet::default()).unwrap();
        let on_pico: Vec<_> = flows.iter().filter(|f| f.bs == 1).map(|f| f.ms).collect();
        assert_eq!(on_pico, vec![0, 1]);

        let none = CandidateSet { macros: 0, picos: 2 };
        assert!(matches!(enumerate_flows(&[vec![1.0]], &[Tier::Macro], none), Err(Error::Scenario(_))));
    }

    #[test]
    fn two_mobile_topology() {
        let s = two_by_three();
        let by_bs = s.flows_by_bs();
        assert_eq!(by_bs, vec![vec![0], vec![1, 2], vec![3]]);
        assert_eq!(s.flows_by_ms(), vec![vec![0, 1], vec![2, 3]]);
        let inst = build_instance(&s, InterferenceMode::PowerReduction).unwrap();
        assert_eq!(inst.num_flows, 4);
        assert_eq!(inst.problem.num_links(), 4);
        assert_eq!(inst.problem.num_rates(), 6);
    }

    #[test]
    fn gain_matrix_entries() {
        // flow 0 served by BS0; BS1 at P = 2 W/Hz over 1 Hz, gain 0.5 → 1.0
        let s = two_by_three();
        let g = s.gain_matrix();
        assert_eq!(g.entry(0, 1), 0.5 * 2.0);
        assert_eq!(g.entry(0, 2), 0.5 * 2.0);
        assert_eq!(g.entry(1, 2), 0.0);
        assert_eq!(g.entry(0, 0), 0.0);

        let single = CellularScenario::new(
            vec![BaseStation { tier: Tier::Macro, position: [0.0; 2], bandwidth: 1.0, tx_psd: 2.0, backhaul: None }],
            vec![mobile(1.0)],
            vec![vec![0.1]],
            shannon(),
            vec![Flow { bs: 0, ms: 0 }],
        )
        .unwrap();
        assert!(single.gain_matrix().to_dense().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn gain_matrix_normalizes_by_bandwidth() {
        let s = CellularScenario::new(
            vec![bs(Tier::Macro, 1.0, 1.0), bs(Tier::Pico, 1.0, 2.0)],
            vec![mobile(1.0), mobile(1.0)],
            vec![vec![1.0, 0.1], vec![1.0, 1.0]],
            shannon(),
            vec![Flow { bs: 0, ms: 0 }, Flow { bs: 1, ms: 1 }],
        )
        .unwrap();
        assert!((s.gain_matrix().entry(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sinr_and_capacity_examples() {
        let s = CellularScenario::new(
            vec![bs(Tier::Macro, 1e7, 1.0)],
            vec![mobile(1.0)],
            vec![vec![1.0]],
            shannon(),
            vec![Flow { bs: 0, ms: 0 }],
        )
        .unwrap();
        assert_eq!(s.sinr(0, 0.0), 1.0);
        assert_eq!(s.sinr(0, 1.0), 0.5);
        assert!(s.sinr(0, 1e6) < s.sinr(0, 1e3));
        assert_eq!(s.link_capacity(0, 0.0, 0.3), 0.0);

        let loss = 10f64.powf(0.3);
        let at_loss = CellularScenario { gains: vec![vec![loss]], ..s.clone() };
        assert!((at_loss.link_capacity(0, 1e6, 0.0) - 1e6).abs() < 1e-6);
        let strong = CellularScenario { gains: vec![vec![1e12]], ..s };
        assert_eq!(strong.link_capacity(0, 1e6, 0.0), 4.8e6);
    }

    #[test]
    fn fixed_power_single_cell_has_no_interference() {
        let s = CellularScenario::new(
            vec![bs(Tier::Macro, 2.0, 3.0)],
            vec![mobile(0.5)],
            vec![vec![0.25]],
            shannon(),
            vec![Flow { bs: 0, ms: 0 }],
        )
        .unwrap();
        let inst = build_instance(&s, InterferenceMode::FixedPower).unwrap();
        assert!(inst.problem.interference.is_none());
        let expected = 1.5 * shannon().eval(0.75 / 0.5);
        assert!((inst.problem.capacity(0, 1.5, 0.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn backhaul_row_layout() {
        let mut s = two_by_three();
        s.base_stations[1].backhaul = Some(1e6);
        let inst = build_instance(&s, InterferenceMode::FixedPower).unwrap();
        assert_eq!(inst.backhaul_rows, vec![1]);
        let a = &inst.problem.network.a;
        let row = a.row(a.nrows() - 1);
        assert_eq!(row, &[(inst.flow_index(1), 1.0), (inst.flow_index(2), 1.0)]);
        assert_eq!(*inst.problem.network.b.last().unwrap(), 1e6);
    }

    #[test]
    fn coupling_rows_and_bounds() {
        let s = two_by_three();
        let inst = build_instance(&s, InterferenceMode::PowerReduction).unwrap();
        let p = &inst.problem;
        assert_eq!(p.network.a.row(0), &[(0, 1.0), (2, -1.0), (3, -1.0)]);
        assert_eq!(p.network.b[0], 0.0);
        assert_eq!(inst.bandwidth_rows, vec![0, 1, 2]);
        assert_eq!(p.bounds.x, vec![1.0; 4]);
        let flows = inst.flow_rates(&p.bounds.r);
        assert!((inst.total_rates(&p.bounds.r)[0] - (flows[0] + flows[1])).abs() < 1e-12);
        assert!(matches!(p.utilities[0], Utility::Log { floor } if floor == 1e3));
        assert!(p.utilities[2].is_zero());
    }

    #[test]
    fn full_load_interference_matches_fixed_power() {
        let s = two_by_three();
        let pr = build_instance(&s, InterferenceMode::PowerReduction).unwrap();
        let by_bs = s.flows_by_bs();
        // each cell spends its band evenly over its flows
        let x: Vec<f64> =
            s.flows.iter().map(|f| s.base_stations[f.bs].bandwidth / by_bs[f.bs].len() as f64).collect();
        let z = pr.problem.interference.as_ref().unwrap().apply(&x);
        for (l, zl) in z.iter().enumerate() {
            assert!((zl - s.full_power_interference(l)).abs() < 1e-12);
            assert!((zl - pr.problem.bounds.z[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_point_is_feasible() {
        let s = two_by_three();
        for mode in [InterferenceMode::FixedPower, InterferenceMode::PowerReduction] {
            let inst = build_instance(&s, mode).unwrap();
            assert!(inst.problem.is_feasible(&DecisionPoint::zeros(&inst.problem), 0.0));
        }
    }

    #[test]
    fn scenario_json_round_trip() {
        let mut s = two_by_three();
        s.base_stations[2].backhaul = Some(1e6);
        let text = serde_json::to_string(&s).unwrap();
        let back: CellularScenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back.flows, s.flows);
        for (a, b) in back.gains.iter().flatten().zip(s.gains.iter().flatten()) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!((back.base_stations[2].backhaul.unwrap() - 1e6).abs() < 1e-6);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let s = two_by_three();
        let mut bad = s.clone();
        bad.gains[0][0] = 0.0;
        assert!(CellularScenario::new(bad.base_stations, bad.mobiles, bad.gains, bad.efficiency, bad.flows).is_err());
        let mut dup = s.flows.clone();
        dup.push(dup[0]);
        assert!(CellularScenario::new(s.base_stations.clone(), s.mobiles.clone(), s.gains.clone(), shannon(), dup)
            .is_err());
        let orphan = vec![Flow { bs: 0, ms: 0 }];
        assert!(CellularScenario::new(s.base_stations, s.mobiles, s.gains, shannon(), orphan).is_err());
    }
}
