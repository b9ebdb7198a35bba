//! Experiment orchestration: drops, methods, metrics and result files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{
    dominant_cells, equal_share_rates, fixed_tier, range_expansion, single_path, Assignment, Method, TierBias,
};
use crate::cellular::{build_instance, CellularScenario, InterferenceMode, Tier};
use crate::dual::{solve, SolverSettings};
use crate::error::{Error, Result};
use crate::scenario::{make_drop, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// Range expansion, once per configured bias.
    Re,
    Optimizer,
    OptimizerPr,
    MacroOnly,
    PicoOnly,
    Multiflow,
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "re" => Self::Re,
            "optimizer" => Self::Optimizer,
            "optimizer_pr" => Self::OptimizerPr,
            "macro_only" => Self::MacroOnly,
            "pico_only" => Self::PicoOnly,
            "multiflow" => Self::Multiflow,
            other => return Err(Error::Config(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub drops: usize,
    pub seed_base: u64,
    pub methods: Vec<MethodKind>,
    pub re_biases_db: Vec<f64>,
    /// Interference mode of the `multiflow` method.
    pub mode: InterferenceMode,
    /// Re-solve bandwidth after truncation instead of keeping truncated rates.
    pub reoptimize: bool,
    pub scenario: ScenarioConfig,
    pub solver: SolverSettings,
    /// Worker threads for drops; 0 uses every available core.
    pub workers: usize,
    pub strict: bool,
    /// Not echoed into summaries, so results stay comparable across locations.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            drops: 20,
            seed_base: 1,
            methods: vec![MethodKind::Re, MethodKind::Optimizer, MethodKind::OptimizerPr],
            re_biases_db: vec![0.0, 6.0],
            mode: InterferenceMode::PowerReduction,
            reoptimize: true,
            scenario: ScenarioConfig::default(),
            solver: SolverSettings::default(),
            workers: 0,
            strict: false,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::Config("drop count must be ≥ 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.methods.contains(&MethodKind::Re) && self.re_biases_db.is_empty() {
            return Err(Error::Config("range expansion needs at least one bias".into()));
        }
        if self.re_biases_db.iter().any(|b| b.is_nan()) {
            return Err(Error::Config("bias must be a number".into()));
        }
        self.scenario.validate()?;
        self.solver.validate()
    }

    /// Reads TOML or JSON by extension. A results summary is accepted too:
    /// its `config` member is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config = if is_json { Self::from_json(&text)? } else { Self::from_toml(&text)? };
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Concrete methods in run order.
    pub fn method_list(&self) -> Vec<MethodId> {
        let mut kinds = self.methods.clone();
        kinds.sort();
        kinds.dedup();
        let mut out = Vec::new();
        for k in kinds {
            match k {
                MethodKind::Re => {
                    let mut biases = self.re_biases_db.clone();
                    biases.sort_by(f64::total_cmp);
                    biases.dedup();
                    out.extend(biases.into_iter().map(MethodId::Re));
                }
                MethodKind::Optimizer => out.push(MethodId::Optimizer),
                MethodKind::OptimizerPr => out.push(MethodId::OptimizerPr),
                MethodKind::MacroOnly => out.push(MethodId::MacroOnly),
                MethodKind::PicoOnly => out.push(MethodId::PicoOnly),
                MethodKind::Multiflow => out.push(MethodId::Multiflow),
            }
        }
        out
    }
}

/// One concrete method of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodId {
    Re(f64),
    Optimizer,
    OptimizerPr,
    MacroOnly,
    PicoOnly,
    Multiflow,
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Re(b) => write!(f, "re_{b}db"),
            Self::Optimizer => f.write_str("optimizer"),
            Self::OptimizerPr => f.write_str("optimizer_pr"),
            Self::MacroOnly => f.write_str("macro_only"),
            Self::PicoOnly => f.write_str("pico_only"),
            Self::Multiflow => f.write_str("multiflow"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub num_ues: usize,
    /// Mean UE rate over the system bandwidth, in bps/Hz.
    pub mean_spectral_efficiency: f64,
    pub edge_rate_bps: f64,
    pub median_rate_bps: f64,
    pub max_rate_bps: f64,
}

/// Lower empirical quantile: the sorted value at index `⌊q (n − 1)⌋`.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((q * (sorted.len() - 1) as f64).floor() as usize).min(sorted.len() - 1)]
}

pub fn compute_metrics(rates: &[f64], bandwidth_hz: f64) -> Result<Metrics> {
    if rates.is_empty() {
        return Err(Error::Config("no rates to summarize".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(Metrics {
        num_ues: rates.len(),
        mean_spectral_efficiency: mean / bandwidth_hz,
        edge_rate_bps: lower_quantile(&sorted, 0.05),
        median_rate_bps: lower_quantile(&sorted, 0.5),
        max_rate_bps: sorted[sorted.len() - 1],
    })
}

/// Sorted `(rate, cumulative fraction)` pairs.
pub fn empirical_cdf(rates: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(k, r)| (r, (k + 1) as f64 / n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeRate {
    pub ue_id: usize,
    pub drop: usize,
    pub cell_id: usize,
    pub rate_bps: f64,
}

/// Solver outcome of an optimizer method on one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSolve {
    pub drop: usize,
    /// Utility of the reported (single-path or multiflow) rates.
    pub utility: f64,
    /// Best dual bound of the multiflow problem.
    pub dual_bound: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    pub drop: usize,
    pub seed: u64,
    pub rates: Vec<Vec<UeRate>>,
    pub solves: Vec<Option<DropSolve>>,
    pub wall_clock_s: Vec<f64>,
}

impl DropOutcome {
    pub fn diverged(&self) -> bool {
        self.solves.iter().flatten().any(|s| s.diverged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub slug: String,
    pub rates: Vec<UeRate>,
    pub metrics: Metrics,
    pub solves: Vec<DropSolve>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub excluded_drops: Vec<usize>,
    pub methods: Vec<MethodResult>,
}

impl ExperimentResult {
    pub fn method(&self, slug: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.slug == slug)
    }
}

/// Optimizer pipeline for one mode: multiflow solve, truncation, then
/// (optionally) restricted re-optimization.
struct ModeSolve {
    rates: Vec<f64>,
    cells: Vec<usize>,
    utility: f64,
    bound: f64,
    diverged: bool,
}

fn solve_mode(scenario: &CellularScenario, mode: InterferenceMode, truncate: bool, config: &ExperimentConfig) -> Result<ModeSolve> {
    let inst = build_instance(scenario, mode)?;
    if !truncate {
        let multi = solve(&inst.problem, &config.solver, None)?;
        let theta = &multi.best_feasible;
        return Ok(ModeSolve {
            rates: inst.total_rates(&theta.r).to_vec(),
            cells: dominant_cells(&inst, scenario, theta),
            utility: multi.best_utility,
            bound: multi.best_bound,
            diverged: multi.diverged,
        });
    }
    let method = match mode {
        InterferenceMode::FixedPower => Method::Optimizer,
        InterferenceMode::PowerReduction => Method::OptimizerPr,
    };
    let out = single_path(&inst, scenario, method, &config.solver, config.reoptimize)?;
    Ok(ModeSolve {
        rates: inst.total_rates(&out.point().r).to_vec(),
        cells: cells_of(&out.assignment),
        utility: out.utility(),
        bound: out.multiflow.best_bound,
        diverged: out.diverged(),
    })
}

/// In power-reduction mode the fixed-power solution is a candidate too: it
/// lifts to a feasible point with the same rates (see [`crate::cellular::CellularInstance::lift`]).
/// The reported bound stays the power-reduction one.
fn optimizer_rates(
    scenario: &CellularScenario,
    mode: InterferenceMode,
    truncate: bool,
    config: &ExperimentConfig,
    drop: usize,
) -> Result<(Vec<f64>, Vec<usize>, DropSolve)> {
    let mut best = solve_mode(scenario, mode, truncate, config)?;
    if mode == InterferenceMode::PowerReduction {
        let fixed = solve_mode(scenario, InterferenceMode::FixedPower, truncate, config)?;
        best.diverged |= fixed.diverged;
        if fixed.utility > best.utility {
            best = ModeSolve { bound: best.bound, diverged: best.diverged, ..fixed };
        }
    }
    let solve = DropSolve { drop, utility: best.utility, dual_bound: best.bound, diverged: best.diverged };
    Ok((best.rates, best.cells, solve))
}

fn cells_of(a: &Assignment) -> Vec<usize> {
    a.cells.values().copied().collect()
}

/// Runs every method on drop `drop`.
pub fn run_drop(config: &ExperimentConfig, drop: usize) -> Result<DropOutcome> {
    let seed = config.seed_base.wrapping_add(drop as u64);
    let (_, scenario) = make_drop(seed, &config.scenario)?;
    let methods = config.method_list();
    let mut rates = Vec::with_capacity(methods.len());
    let mut solves = Vec::with_capacity(methods.len());
    let mut wall_clock_s = Vec::with_capacity(methods.len());
    for m in &methods {
        let start = Instant::now();
        let (r, cells, solve) = match *m {
            MethodId::Re(bias) => baseline(&scenario, range_expansion(&scenario, TierBias::pico(bias))?),
            MethodId::MacroOnly => baseline(&scenario, fixed_tier(&scenario, Tier::Macro)?),
            MethodId::PicoOnly => baseline(&scenario, fixed_tier(&scenario, Tier::Pico)?),
            MethodId::Optimizer => {
                let (r, c, s) = optimizer_rates(&scenario, InterferenceMode::FixedPower, true, config, drop)?;
                (r, c, Some(s))
            }
            MethodId::OptimizerPr => {
                let (r, c, s) = optimizer_rates(&scenario, InterferenceMode::PowerReduction, true, config, drop)?;
                (r, c, Some(s))
            }
            MethodId::Multiflow => {
                let (r, c, s) = optimizer_rates(&scenario, config.mode, false, config, drop)?;
                (r, c, Some(s))
            }
        };
        wall_clock_s.push(start.elapsed().as_secs_f64());
        rates.push(
            r.iter()
                .zip(&cells)
                .enumerate()
                .map(|(ue_id, (&rate_bps, &cell_id))| UeRate { ue_id, drop, cell_id, rate_bps })
                .collect(),
        );
        solves.push(solve);
    }
    info!("drop {drop} (seed {seed}) done");
    Ok(DropOutcome { drop, seed, rates, solves, wall_clock_s })
}

fn baseline(scenario: &CellularScenario, a: Assignment) -> (Vec<f64>, Vec<usize>, Option<DropSolve>) {
    let rates = equal_share_rates(&a, scenario);
    (rates, cells_of(&a), None)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<DropOutcome> =
        pool.install(|| (0..config.drops).into_par_iter().map(|d| run_drop(config, d)).collect::<Result<_>>())?;

    let mut excluded = Vec::new();
    for o in &outcomes {
        if o.diverged() {
            if config.strict {
                return Err(Error::Solver(format!("solver diverged on drop {} (seed {})", o.drop, o.seed)));
            }
            warn!("excluding drop {} after solver divergence", o.drop);
            excluded.push(o.drop);
        }
    }
    let kept: Vec<&DropOutcome> = outcomes.iter().filter(|o| !excluded.contains(&o.drop)).collect();
    if kept.is_empty() {
        return Err(Error::Solver("every drop diverged".into()));
    }

    let mut methods = Vec::new();
    for (k, id) in config.method_list().iter().enumerate() {
        let rates: Vec<UeRate> = kept.iter().flat_map(|o| o.rates[k].iter().cloned()).collect();
        let values: Vec<f64> = rates.iter().map(|r| r.rate_bps).collect();
        methods.push(MethodResult {
            slug: id.to_string(),
            metrics: compute_metrics(&values, config.scenario.bandwidth_hz)?,
            rates,
            solves: kept.iter().filter_map(|o| o.solves[k].clone()).collect(),
            wall_clock_s: kept.iter().map(|o| o.wall_clock_s[k]).sum(),
        });
    }
    Ok(ExperimentResult {
        config: config.clone(),
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        excluded_drops: excluded,
        methods,
    })
}

#[derive(Serialize)]
struct MethodSummary<'a> {
    metrics: &'a Metrics,
    solves: &'a [DropSolve],
    wall_clock_s: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    seeds: &'a [u64],
    excluded_drops: &'a [usize],
    methods: BTreeMap<&'a str, MethodSummary<'a>>,
}

/// Writes `summary.json`, `rates_<slug>.csv` and `cdf_<slug>.csv` into `dir`
/// and returns the paths written.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let summary = Summary {
        config: &result.config,
        seeds: &result.seeds,
        excluded_drops: &result.excluded_drops,
        methods: result
            .methods
            .iter()
            .map(|m| {
                (m.slug.as_str(), MethodSummary { metrics: &m.metrics, solves: &m.solves, wall_clock_s: m.wall_clock_s })
            })
            .collect(),
    };
    let mut written = Vec::new();
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);

    for m in &result.methods {
        let path = dir.join(format!("rates_{}.csv", m.slug));
        let mut w = csv::Writer::from_path(&path)?;
        for r in &m.rates {
            w.serialize(r)?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join(format!("cdf_{}.csv", m.slug));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["rate_bps", "cum_fraction"])?;
        for (rate, frac) in empirical_cdf(&m.rates.iter().map(|r| r.rate_bps).collect::<Vec<_>>()) {
            w.write_record([rate.to_string(), frac.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
