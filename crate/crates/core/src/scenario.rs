//! Randomized two-tier drops on a 19-site hexagonal layout with wraparound.
//!
//! Random draws come from a ChaCha20 stream seeded with the drop seed, in
//! this order: pico positions (cell by cell), UE positions (cell by cell),
//! shadowing (UE-major, then cell), then the backhaul-capped pico subset.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cellular::{
    db_to_linear, dbm_to_watts, enumerate_flows, BaseStation, CandidateSet, CellularScenario, Mobile, Tier,
};
use crate::error::{Error, Result};
use crate::problem::SpectralEfficiency;

pub const NUM_SITES: usize = 19;
pub const SECTORS_PER_SITE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaParams {
    /// Boresight gain in dBi.
    pub max_gain_db: f64,
    /// Half-power beamwidth in degrees.
    pub beamwidth_deg: f64,
    /// Front-to-back attenuation cap in dB.
    pub max_attenuation_db: f64,
}

impl Default for AntennaParams {
    fn default() -> Self {
        Self { max_gain_db: 14.0, beamwidth_deg: 70.0, max_attenuation_db: 25.0 }
    }
}

impl AntennaParams {
    /// `G_max − min(12 (φ/φ₃)², A_m)` for `φ` in degrees.
    pub fn gain_db(&self, phi_deg: f64) -> f64 {
        let phi = wrap_degrees(phi_deg);
        self.max_gain_db - (12.0 * (phi / self.beamwidth_deg).powi(2)).min(self.max_attenuation_db)
    }
}

/// Wraps an angle into `[−180°, 180°]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 && a > 0.0 {
        180.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub inter_site_distance_m: f64,
    pub boresights_deg: [f64; SECTORS_PER_SITE],
    pub ues_per_macro: usize,
    pub picos_per_macro: usize,
    pub macro_tx_dbm: f64,
    pub pico_tx_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_ghz: f64,
    pub thermal_noise_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub shadowing_std_db: f64,
    pub macro_antenna: AntennaParams,
    pub pico_gain_db: f64,
    pub macro_min_distance_m: f64,
    pub pico_min_distance_m: f64,
    pub pico_macro_min_separation_m: f64,
    /// Fraction of picos whose backhaul is capped.
    pub backhaul_fraction: f64,
    pub backhaul_cap_bps: f64,
    pub candidates: CandidateSet,
    pub efficiency: SpectralEfficiency,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            inter_site_distance_m: 500.0,
            boresights_deg: [30.0, 150.0, 270.0],
            ues_per_macro: 10,
            picos_per_macro: 10,
            macro_tx_dbm: 46.0,
            pico_tx_dbm: 30.0,
            bandwidth_hz: 10e6,
            carrier_ghz: 2.1,
            thermal_noise_dbm_per_hz: -174.0,
            noise_figure_db: 7.0,
            shadowing_std_db: 8.0,
            macro_antenna: AntennaParams::default(),
            pico_gain_db: 5.0,
            macro_min_distance_m: 10.0,
            pico_min_distance_m: 2.0,
            pico_macro_min_separation_m: 35.0,
            backhaul_fraction: 0.0,
            backhaul_cap_bps: 1e6,
            candidates: CandidateSet::default(),
            efficiency: SpectralEfficiency::Shannon { loss: 10f64.powf(0.3), cap: Some(4.8) },
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("scenario: {m}")));
        if !(self.inter_site_distance_m > 0.0) {
            return bad("inter-site distance must be positive");
        }
        if self.ues_per_macro == 0 {
            return bad("need at least one UE per macro cell");
        }
        if !(0.0..=1.0).contains(&self.backhaul_fraction) {
            return bad("backhaul fraction must lie in [0, 1]");
        }
        if !(self.backhaul_cap_bps >= 0.0) || !self.backhaul_cap_bps.is_finite() {
            return bad("backhaul cap must be finite and ≥ 0");
        }
        if !(self.bandwidth_hz > 0.0) || !(self.shadowing_std_db >= 0.0) {
            return bad("bandwidth must be positive and shadowing std nonnegative");
        }
        if !(self.macro_min_distance_m > 0.0 && self.pico_min_distance_m > 0.0) {
            return bad("distance floors must be positive");
        }
        if self.pico_macro_min_separation_m >= self.inter_site_distance_m / 3.0 {
            return bad("pico–macro separation leaves no room in a sector");
        }
        if self.candidates.macros + self.candidates.picos == 0 {
            return bad("candidate set is empty");
        }
        Ok(())
    }

    /// Macro TX PSD in W/Hz.
    pub fn macro_psd(&self) -> f64 {
        dbm_to_watts(self.macro_tx_dbm) / self.bandwidth_hz
    }

    pub fn pico_psd(&self) -> f64 {
        dbm_to_watts(self.pico_tx_dbm) / self.bandwidth_hz
    }

    /// Receiver noise PSD in W/Hz, noise figure included.
    pub fn noise_psd(&self) -> f64 {
        dbm_to_watts(self.thermal_noise_dbm_per_hz + self.noise_figure_db)
    }
}

/// One macro sector cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorCell {
    pub site: usize,
    pub position: [f64; 2],
    pub boresight_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub isd: f64,
    pub sites: Vec<[f64; 2]>,
    pub cells: Vec<SectorCell>,
    /// Cluster translations; the identity comes first.
    pub offsets: Vec<[f64; 2]>,
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn add(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] + q[0], p[1] + q[1]]
}

fn rotate(p: [f64; 2], deg: f64) -> [f64; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

impl Layout {
    /// Canonical 19-site cluster: a centre site with two rings around it.
    pub fn generate(isd: f64, boresights_deg: [f64; SECTORS_PER_SITE]) -> Self {
        let mut sites = Vec::with_capacity(NUM_SITES);
        for ring in 0..=2i32 {
            for q in -2..=2i32 {
                for r in -2..=2i32 {
                    let s = -q - r;
                    if q.abs().max(r.abs()).max(s.abs()) == ring {
                        sites.push(axial(q, r, isd));
                    }
                }
            }
        }
        let cells = sites
            .iter()
            .enumerate()
            .flat_map(|(site, &position)| {
                boresights_deg.iter().map(move |&b| SectorCell { site, position, boresight_deg: b })
            })
            .collect();
        // The 19-site cluster tiles the plane under shifts by axial (3, 2)
        // and its rotations by multiples of 60°.
        let mut offsets = vec![[0.0, 0.0]];
        let (mut q, mut r) = (3, 2);
        for _ in 0..6 {
            offsets.push(axial(q, r, isd));
            (q, r) = (-r, q + r);
        }
        Self { isd, sites, cells, offsets }
    }

    /// Shortest distance from `p` to any cluster translate of `q`, and the
    /// translate that attains it.
    pub fn wrap(&self, p: [f64; 2], q: [f64; 2]) -> (f64, [f64; 2]) {
        self.offsets
            .iter()
            .map(|&o| {
                let image = add(q, o);
                (dist(p, image), image)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("identity offset is always present")
    }

    pub fn wraparound_distance(&self, p: [f64; 2], q: [f64; 2]) -> f64 {
        self.wrap(p, q).0
    }

    /// Circumradius of a sector hexagon.
    pub fn sector_radius(&self) -> f64 {
        self.isd / 3.0
    }

    /// Centre of the sector hexagon; the site sits on one of its vertices.
    pub fn sector_center(&self, cell: usize) -> [f64; 2] {
        let c = &self.cells[cell];
        let (s, co) = c.boresight_deg.to_radians().sin_cos();
        let r = self.sector_radius();
        [c.position[0] + r * co, c.position[1] + r * s]
    }

    /// True if `p` lies in the sector hexagon of `cell`.
    pub fn in_sector(&self, cell: usize, p: [f64; 2]) -> bool {
        let c = self.sector_center(cell);
        let b = self.cells[cell].boresight_deg;
        // rotate so the hexagon has vertices at 0°, 60°, … around the origin
        let d = rotate([p[0] - c[0], p[1] - c[1]], -b);
        let r = self.sector_radius();
        let apothem = r * 3f64.sqrt() / 2.0;
        (0..3).all(|k| {
            let n = rotate([1.0, 0.0], 30.0 + 60.0 * k as f64);
            (d[0] * n[0] + d[1] * n[1]).abs() <= apothem
        })
    }

    /// Uniform point in the sector hexagon by rejection from its bounding disc square.
    pub fn sample_in_sector<R: Rng>(&self, cell: usize, rng: &mut R) -> [f64; 2] {
        let c = self.sector_center(cell);
        let r = self.sector_radius();
        loop {
            let p = [c[0] + rng.gen_range(-r..r), c[1] + rng.gen_range(-r..r)];
            if self.in_sector(cell, p) {
                return p;
            }
        }
    }
}

fn axial(q: i32, r: i32, isd: f64) -> [f64; 2] {
    [isd * (q as f64 + r as f64 / 2.0), isd * r as f64 * 3f64.sqrt() / 2.0]
}

/// Path loss in dB with `R` in km, after flooring the distance.
pub fn path_loss_db(tier: Tier, distance_m: f64, config: &ScenarioConfig) -> f64 {
    match tier {
        Tier::Macro => 131.1 + 42.8 * (distance_m.max(config.macro_min_distance_m) / 1e3).log10(),
        Tier::Pico => 145.4 + 37.5 * (distance_m.max(config.pico_min_distance_m) / 1e3).log10(),
    }
}

/// Horizontal angle of `target` as seen from `from`, in degrees.
pub fn bearing_deg(from: [f64; 2], target: [f64; 2]) -> f64 {
    (target[1] - from[1]).atan2(target[0] - from[0]) * 180.0 / PI
}

/// Random realization of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub seed: u64,
    pub pico_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Macro cell whose sector each UE was dropped in.
    pub ue_home_cell: Vec<usize>,
    /// Shadowing in dB per (UE, base station).
    pub shadowing_db: Vec<Vec<f64>>,
    /// Indices (among picos) with a capped backhaul.
    pub capped_picos: Vec<usize>,
}

/// Base stations in scenario order: the 57 macro cells, then the picos.
pub fn base_stations(layout: &Layout, drop: &Drop, config: &ScenarioConfig) -> Vec<BaseStation> {
    let mut out: Vec<BaseStation> = layout
        .cells
        .iter()
        .map(|c| BaseStation {
            tier: Tier::Macro,
            position: c.position,
            bandwidth: config.bandwidth_hz,
            tx_psd: config.macro_psd(),
            backhaul: None,
        })
        .collect();
    out.extend(drop.pico_positions.iter().map(|&p| BaseStation {
        tier: Tier::Pico,
        position: p,
        bandwidth: config.bandwidth_hz,
        tx_psd: config.pico_psd(),
        backhaul: None,
    }));
    for &k in &drop.capped_picos {
        out[layout.cells.len() + k].backhaul = Some(config.backhaul_cap_bps);
    }
    out
}

/// Linear gain from base station `bs` to a UE at `ue` with the given shadowing.
pub fn channel_gain(layout: &Layout, bs: &BaseStation, cell: Option<&SectorCell>, ue: [f64; 2], shadow_db: f64, config: &ScenarioConfig) -> f64 {
    let (d, image) = layout.wrap(ue, bs.position);
    let antenna = match (bs.tier, cell) {
        (Tier::Macro, Some(c)) => config.macro_antenna.gain_db(bearing_deg(image, ue) - c.boresight_deg),
        _ => config.pico_gain_db,
    };
    db_to_linear(-path_loss_db(bs.tier, d, config) + antenna + shadow_db)
}

/// Draws one drop and assembles its scenario with candidate flows.
pub fn make_drop(seed: u64, config: &ScenarioConfig) -> Result<(Drop, CellularScenario)> {
    config.validate()?;
    let layout = Layout::generate(config.inter_site_distance_m, config.boresights_deg);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ncells = layout.cells.len();

    let mut pico_positions = Vec::with_capacity(ncells * config.picos_per_macro);
    for cell in 0..ncells {
        let site = layout.cells[cell].position;
        for _ in 0..config.picos_per_macro {
            let p = loop {
                let p = layout.sample_in_sector(cell, &mut rng);
                if dist(p, site) >= config.pico_macro_min_separation_m {
                    break p;
                }
            };
            pico_positions.push(p);
        }
    }
    let mut ue_positions = Vec::with_capacity(ncells * config.ues_per_macro);
    let mut ue_home_cell = Vec::with_capacity(ncells * config.ues_per_macro);
    for cell in 0..ncells {
        for _ in 0..config.ues_per_macro {
            ue_positions.push(layout.sample_in_sector(cell, &mut rng));
            ue_home_cell.push(cell);
        }
    }
    let nbs = ncells + pico_positions.len();
    let normal = Normal::new(0.0, config.shadowing_std_db).map_err(|e| Error::Config(e.to_string()))?;
    let shadowing_db: Vec<Vec<f64>> =
        (0..ue_positions.len()).map(|_| (0..nbs).map(|_| normal.sample(&mut rng)).collect()).collect();
    let num_capped = (config.backhaul_fraction * pico_positions.len() as f64).round() as usize;
    let mut capped_picos = sample(&mut rng, pico_positions.len(), num_capped).into_vec();
    capped_picos.sort_unstable();

    let drop = Drop { seed, pico_positions, ue_positions, ue_home_cell, shadowing_db, capped_picos };
    let scenario = assemble(&layout, &drop, config)?;
    Ok((drop, scenario))
}

/// Builds the scenario of a realized drop.
pub fn assemble(layout: &Layout, drop: &Drop, config: &ScenarioConfig) -> Result<CellularScenario> {
    let stations = base_stations(layout, drop, config);
    let gains: Vec<Vec<f64>> = drop
        .ue_positions
        .iter()
        .zip(&drop.shadowing_db)
        .map(|(&ue, shadow)| {
            stations
                .iter()
                .enumerate()
                .map(|(k, bs)| channel_gain(layout, bs, layout.cells.get(k), ue, shadow[k], config))
                .collect()
        })
        .collect();
    let mobiles = drop.ue_positions.iter().map(|&p| Mobile { position: p, noise_psd: config.noise_psd() }).collect();
    let rx: Vec<Vec<f64>> =
        gains.iter().map(|row| row.iter().zip(&stations).map(|(h, bs)| h * bs.tx_psd).collect()).collect();
    let tiers: Vec<Tier> = stations.iter().map(|b| b.tier).collect();
    let flows = enumerate_flows(&rx, &tiers, config.candidates)?;
    CellularScenario::new(stations, mobiles, gains, config.efficiency.clone(), flows)
}
