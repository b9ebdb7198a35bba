//! The general flow-and-interference utility maximization problem.
//!
//! A problem has `S` rate components `r`, and `L` wireless links each with a
//! resource allocation `x_ℓ` and an interference level `z_ℓ`. The constraints
//! are stacked as
//!
//! ```text
//!   g(θ) = [ A_x x − b_x ;  A_r r − b_r ;  G x − z ;  E r − C(x, z) ]  ≤ 0
//! ```
//!
//! and the objective is the separable utility `Σ_s U_s(r_s)` over the box
//! `0 ≤ θ ≤ θ̄`. When no interference map is present the `z` variables and
//! the `G x − z` block are absent; capacities then see `z = 0`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::sparse::SparseMatrix;

/// Flow indices carried by each wireless link, with the derived incidence `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    num_flows: usize,
    link_flows: Vec<Vec<usize>>,
    incidence: SparseMatrix,
}

impl FlowGraph {
    pub fn new(link_flows: Vec<Vec<usize>>, num_flows: usize) -> Result<Self> {
        let incidence = build_incidence(&link_flows, num_flows)?;
        let link_flows = incidence
            .rows()
            .map(|row| row.iter().map(|&(c, _)| c).collect())
            .collect();
        Ok(Self { num_flows, link_flows, incidence })
    }

    pub fn num_flows(&self) -> usize {
        self.num_flows
    }

    pub fn num_links(&self) -> usize {
        self.link_flows.len()
    }

    pub fn link_flows(&self, link: usize) -> &[usize] {
        &self.link_flows[link]
    }

    pub fn incidence(&self) -> &SparseMatrix {
        &self.incidence
    }
}

/// Builds the `L × S` 0/1 incidence matrix with `E[ℓ][s] = 1` iff `s ∈ Γ(ℓ)`.
pub fn build_incidence(link_flows: &[Vec<usize>], num_flows: usize) -> Result<SparseMatrix> {
    let mut e = SparseMatrix::new(num_flows);
    for (link, flows) in link_flows.iter().enumerate() {
        if flows.is_empty() {
            return dim_err(format!("link {link} carries no flows"));
        }
        if let Some(&s) = flows.iter().find(|&&s| s >= num_flows) {
            return dim_err(format!("link {link} references flow {s} but only {num_flows} flows exist"));
        }
        let mut cols: Vec<usize> = flows.clone();
        cols.sort_unstable();
        cols.dedup();
        e.push_row(cols.into_iter().map(|s| (s, 1.0)).collect())?;
    }
    Ok(e)
}

/// `A v ≤ b`. Used for both resource (`A_x x ≤ b_x`) and network
/// (`A_r r ≤ b_r`) constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraints {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
}

pub type ResourceConstraints = LinearConstraints;
pub type NetworkConstraints = LinearConstraints;

impl LinearConstraints {
    pub fn empty(cols: usize) -> Self {
        Self { a: SparseMatrix::new(cols), b: Vec::new() }
    }

    pub fn new(a: SparseMatrix, b: Vec<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return dim_err(format!("{} rows but {} bounds", a.nrows(), b.len()));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}

/// The linear interference map `z = G x`.
///
/// `Grouped` stores `G[ℓ][ℓ'] = coupling[ℓ][group(ℓ')]`: every link in a group
/// contributes identically to each receiver. This is the cellular structure,
/// where a base station's interference depends only on its total bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub enum InterferenceMap {
    Dense { links: usize, g: Vec<f64> },
    Grouped { link_group: Vec<usize>, groups: usize, coupling: Vec<f64> },
}

impl InterferenceMap {
    pub fn dense(rows: &[Vec<f64>]) -> Result<Self> {
        let links = rows.len();
        let mut g = Vec::with_capacity(links * links);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != links {
                return dim_err(format!("G row {i} has {} entries, expected {links}", row.len()));
            }
            g.extend_from_slice(row);
        }
        let map = Self::Dense { links, g };
        map.validate()?;
        Ok(map)
    }

    /// `coupling` is row-major `links × groups`.
    pub fn grouped(link_group: Vec<usize>, groups: usize, coupling: Vec<f64>) -> Result<Self> {
        if coupling.len() != link_group.len() * groups {
            return dim_err("coupling must be links × groups");
        }
        if link_group.iter().any(|&k| k >= groups) {
            return dim_err("link group out of range");
        }
        let map = Self::Grouped { link_group, groups, coupling };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        let values = match self {
            Self::Dense { g, .. } => g,
            Self::Grouped { coupling, .. } => coupling,
        };
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInstance("G must be finite and nonnegative".into()));
        }
        for l in 0..self.len() {
            if self.entry(l, l) != 0.0 {
                return Err(Error::InvalidInstance(format!("link {l} interferes with itself")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Dense { links, .. } => *links,
            Self::Grouped { link_group, .. } => link_group.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        match self {
            Self::Dense { links, g } => g[row * links + col],
            Self::Grouped { link_group, groups, coupling } => coupling[row * groups + link_group[col]],
        }
    }

    /// `G x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense { links, g } => g.chunks(*links).map(|row| dot(row, x)).collect(),
            Self::Grouped { link_group, groups, coupling } => {
                let mut load = vec![0.0; *groups];
                for (&k, &xl) in link_group.iter().zip(x) {
                    load[k] += xl;
                }
                coupling.chunks(*groups).map(|row| dot(row, &load)).collect()
            }
        }
    }

    /// `Gᵀ μ`
    pub fn apply_transpose(&self, mu: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense { links, g } => {
                let mut out = vec![0.0; *links];
                for (row, &m) in g.chunks(*links).zip(mu) {
                    if m != 0.0 {
                        for (o, &gv) in out.iter_mut().zip(row) {
                            *o += gv * m;
                        }
                    }
                }
                out
            }
            Self::Grouped { link_group, groups, coupling } => {
                let mut per_group = vec![0.0; *groups];
                for (row, &m) in coupling.chunks(*groups).zip(mu) {
                    if m != 0.0 {
                        for (o, &c) in per_group.iter_mut().zip(row) {
                            *o += c * m;
                        }
                    }
                }
                link_group.iter().map(|&k| per_group[k]).collect()
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }
}

impl Serialize for InterferenceMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_dense().serialize(s)
    }
}

impl<'de> Deserialize<'de> for InterferenceMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        InterferenceMap::dense(&rows).map_err(serde::de::Error::custom)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rate per unit resource as a function of SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralEfficiency {
    /// `ρ(γ) = γ`
    Linear,
    /// `ρ(γ) = min(log₂(1 + γ/loss), cap)`
    Shannon { loss: f64, cap: Option<f64> },
}

impl SpectralEfficiency {
    pub fn eval(&self, sinr: f64) -> f64 {
        match *self {
            Self::Linear => sinr,
            Self::Shannon { loss, cap } => {
                let se = (sinr / loss).ln_1p() / std::f64::consts::LN_2;
                cap.map_or(se, |c| se.min(c))
            }
        }
    }

    /// Smallest SINR at which the efficiency saturates, if it does.
    pub fn saturation_sinr(&self) -> Option<f64> {
        match *self {
            Self::Linear => None,
            Self::Shannon { loss, cap } => cap.map(|c| loss * (c.exp2() - 1.0)),
        }
    }
}

/// Per-link capacity `C_ℓ(x, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacityModel {
    /// `C = slope · x`, independent of interference.
    Linear { slope: f64 },
    /// `C = x · ρ(signal / (z + noise))`.
    Sinr { signal: f64, noise: f64, efficiency: SpectralEfficiency },
    /// Bilinear interpolation of `values[i][j] = C(x_grid[i], z_grid[j])`,
    /// clamped outside the table.
    Tabulated { x_grid: Vec<f64>, z_grid: Vec<f64>, values: Vec<Vec<f64>> },
}

impl CapacityModel {
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        match self {
            Self::Linear { slope } => slope * x,
            Self::Sinr { signal, noise, efficiency } => x * efficiency.eval(signal / (z + noise)),
            Self::Tabulated { x_grid, z_grid, values } => {
                let (i, tx) = locate(x_grid, x);
                let (j, tz) = locate(z_grid, z);
                let i1 = (i + 1).min(x_grid.len() - 1);
                let j1 = (j + 1).min(z_grid.len() - 1);
                let v00 = values[i][j];
                let v01 = values[i][j1];
                let v10 = values[i1][j];
                let v11 = values[i1][j1];
                (1.0 - tx) * ((1.0 - tz) * v00 + tz * v01) + tx * ((1.0 - tz) * v10 + tz * v11)
            }
        }
    }

    /// Spectral efficiency at interference `z` for capacities linear in `x`.
    pub(crate) fn efficiency_at(&self, z: f64) -> Option<f64> {
        match self {
            Self::Linear { slope } => Some(*slope),
            Self::Sinr { signal, noise, efficiency } => Some(efficiency.eval(signal / (z + noise))),
            Self::Tabulated { .. } => None,
        }
    }

    fn validate(&self, link: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInstance(format!("capacity of link {link}: {m}")));
        match self {
            Self::Linear { slope } => {
                if !slope.is_finite() || *slope < 0.0 {
                    return bad("slope must be finite and nonnegative");
                }
            }
            Self::Sinr { signal, noise, efficiency } => {
                if !signal.is_finite() || *signal < 0.0 || !noise.is_finite() || *noise <= 0.0 {
                    return bad("signal must be ≥ 0 and noise > 0");
                }
                if let SpectralEfficiency::Shannon { loss, cap } = efficiency {
                    if !(*loss > 0.0) || cap.is_some_and(|c| !(c > 0.0)) {
                        return bad("loss and cap must be positive");
                    }
                }
            }
            Self::Tabulated { x_grid, z_grid, values } => {
                let increasing = |g: &[f64]| g.len() >= 2 && g.windows(2).all(|w| w[0] < w[1]);
                if !increasing(x_grid) || !increasing(z_grid) || x_grid[0] != 0.0 || z_grid[0] < 0.0 {
                    return bad("grids must be strictly increasing with x_grid[0] = 0 and z ≥ 0");
                }
                if values.len() != x_grid.len() || values.iter().any(|r| r.len() != z_grid.len()) {
                    return bad("values must be |x_grid| × |z_grid|");
                }
                if values[0].iter().any(|&v| v != 0.0) {
                    return bad("C(0, z) must vanish");
                }
                for (i, row) in values.iter().enumerate() {
                    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return bad("values must be finite and nonnegative");
                    }
                    if row.windows(2).any(|w| w[1] > w[0]) {
                        return bad("capacity must be nonincreasing in z");
                    }
                    if i > 0 && row.iter().zip(&values[i - 1]).any(|(a, b)| a < b) {
                        return bad("capacity must be nondecreasing in x");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index of the table cell containing `v` and the fractional offset in it.
fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    let n = grid.len();
    if v <= grid[0] {
        return (0, 0.0);
    }
    if v >= grid[n - 1] {
        return (n - 1, 0.0);
    }
    let i = grid.partition_point(|&g| g <= v) - 1;
    (i, (v - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Per-component utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    /// Pure flow variable, no utility.
    Zero,
    /// `log(max(r, floor))`
    Log { floor: f64 },
    /// Continuous piecewise-linear through `(knots[i], values[i])`, constant
    /// outside the knot range. Need not be concave.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
}

/// Rate floor applied to log utilities, in bps.
pub const DEFAULT_RATE_FLOOR: f64 = 1e3;

impl Utility {
    pub fn log() -> Self {
        Self::Log { floor: DEFAULT_RATE_FLOOR }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Log { floor } => r.max(*floor).ln(),
            Self::PiecewiseLinear { knots, values } => {
                let (i, t) = locate(knots, r);
                let i1 = (i + 1).min(knots.len() - 1);
                (1.0 - t) * values[i] + t * values[i1]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    fn validate(&self, s: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInstance(format!("utility {s}: {m}")));
        match self {
            Self::Zero => Ok(()),
            Self::Log { floor } => {
                if !(floor.is_finite() && *floor > 0.0) {
                    return bad("log floor must be positive");
                }
                Ok(())
            }
            Self::PiecewiseLinear { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() || knots[0] < 0.0 {
                    return bad("need ≥ 2 knots with matching values, starting at r ≥ 0");
                }
                if knots.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("knots must be strictly increasing");
                }
                if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] < w[0]) {
                    return bad("values must be finite and nondecreasing");
                }
                Ok(())
            }
        }
    }
}

/// `θ = (r, x, z)`. `z` is empty when the instance has no interference map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl DecisionPoint {
    pub fn zeros(inst: &ProblemInstance) -> Self {
        Self {
            r: vec![0.0; inst.num_rates()],
            x: vec![0.0; inst.num_links()],
            z: vec![0.0; inst.num_interference()],
        }
    }

    pub fn z_at(&self, link: usize) -> f64 {
        self.z.get(link).copied().unwrap_or(0.0)
    }

    pub fn is_finite_nonneg(&self) -> bool {
        self.r.iter().chain(&self.x).chain(&self.z).all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Elementwise upper bounds `θ̄`.
pub type Bounds = DecisionPoint;

/// Index ranges of the four stacked constraint blocks in `g(θ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintBlocks {
    pub resource: Range<usize>,
    pub network: Range<usize>,
    pub interference: Range<usize>,
    pub capacity: Range<usize>,
}

impl ConstraintBlocks {
    pub fn len(&self) -> usize {
        self.capacity.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct ProblemInstance {
    pub flows: FlowGraph,
    pub resources: ResourceConstraints,
    pub network: NetworkConstraints,
    pub interference: Option<InterferenceMap>,
    pub capacities: Vec<CapacityModel>,
    pub utilities: Vec<Utility>,
    pub bounds: Bounds,
}

impl ProblemInstance {
    pub fn new(
        flows: FlowGraph,
        resources: ResourceConstraints,
        network: NetworkConstraints,
        interference: Option<InterferenceMap>,
        capacities: Vec<CapacityModel>,
        utilities: Vec<Utility>,
        bounds: Bounds,
    ) -> Result<Self> {
        let links = flows.num_links();
        let inst = Self {
            resources: LinearConstraints {
                a: resources.a.with_cols_if_empty(links),
                b: resources.b,
            },
            network: LinearConstraints {
                a: network.a.with_cols_if_empty(flows.num_flows()),
                b: network.b,
            },
            flows,
            interference,
            capacities,
            utilities,
            bounds,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let s = self.num_rates();
        let l = self.num_links();
        let inv = |m: String| Err(Error::InvalidInstance(m));
        if self.resources.a.ncols() != l || self.resources.a.nrows() != self.resources.b.len() {
            return dim_err("A_x must be m_x × L with matching b_x");
        }
        if self.network.a.ncols() != s || self.network.a.nrows() != self.network.b.len() {
            return dim_err("A_r must be m_r × S with matching b_r");
        }
        if self.resources.b.iter().chain(&self.network.b).any(|b| !b.is_finite() || *b < 0.0) {
            return inv("constraint bounds must be finite and nonnegative".into());
        }
        if let Some(i) = self.network.a.rows().position(<[_]>::is_empty) {
            return inv(format!("network constraint row {i} has no coefficients"));
        }
        if let Some(g) = &self.interference {
            if g.len() != l {
                return dim_err(format!("G is {0}×{0}, expected {l}×{l}", g.len()));
            }
        }
        if self.capacities.len() != l {
            return dim_err(format!("{} capacity models for {l} links", self.capacities.len()));
        }
        if self.utilities.len() != s {
            return dim_err(format!("{} utilities for {s} rate components", self.utilities.len()));
        }
        for (i, c) in self.capacities.iter().enumerate() {
            c.validate(i)?;
        }
        for (i, u) in self.utilities.iter().enumerate() {
            u.validate(i)?;
        }
        let b = &self.bounds;
        if b.r.len() != s || b.x.len() != l || b.z.len() != self.num_interference() {
            return dim_err("bounds do not match the decision dimensions");
        }
        if !b.is_finite_nonneg() {
            return inv("bounds must be finite and nonnegative".into());
        }
        Ok(())
    }

    pub fn num_rates(&self) -> usize {
        self.flows.num_flows()
    }

    pub fn num_links(&self) -> usize {
        self.flows.num_links()
    }

    pub fn is_coupled(&self) -> bool {
        self.interference.is_some()
    }

    /// Length of the `z` vector: `L` with an interference map, else 0.
    pub fn num_interference(&self) -> usize {
        if self.is_coupled() {
            self.num_links()
        } else {
            0
        }
    }

    pub fn blocks(&self) -> ConstraintBlocks {
        let mx = self.resources.len();
        let mr = self.network.len();
        let mz = self.num_interference();
        let l = self.num_links();
        ConstraintBlocks {
            resource: 0..mx,
            network: mx..mx + mr,
            interference: mx + mr..mx + mr + mz,
            capacity: mx + mr + mz..mx + mr + mz + l,
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.blocks().len()
    }

    pub fn capacity(&self, link: usize, x: f64, z: f64) -> f64 {
        self.capacities[link].eval(x, z)
    }

    pub fn check_dims(&self, theta: &DecisionPoint) -> Result<()> {
        if theta.r.len() != self.num_rates()
            || theta.x.len() != self.num_links()
            || theta.z.len() != self.num_interference()
        {
            return dim_err(format!(
                "decision point has (|r|, |x|, |z|) = ({}, {}, {}), expected ({}, {}, {})",
                theta.r.len(),
                theta.x.len(),
                theta.z.len(),
                self.num_rates(),
                self.num_links(),
                self.num_interference()
            ));
        }
        Ok(())
    }

    /// Stacked constraint vector `g(θ)`; `θ` is feasible iff every entry ≤ 0.
    pub fn evaluate_constraints(&self, theta: &DecisionPoint) -> Result<Vec<f64>> {
        self.check_dims(theta)?;
        let mut g = Vec::with_capacity(self.num_constraints());
        let ax = self.resources.a.mul_vec(&theta.x);
        g.extend(ax.iter().zip(&self.resources.b).map(|(a, b)| a - b));
        let ar = self.network.a.mul_vec(&theta.r);
        g.extend(ar.iter().zip(&self.network.b).map(|(a, b)| a - b));
        if let Some(map) = &self.interference {
            let gx = map.apply(&theta.x);
            g.extend(gx.iter().zip(&theta.z).map(|(a, z)| a - z));
        }
        let er = self.flows.incidence().mul_vec(&theta.r);
        g.extend(
            er.iter()
                .enumerate()
                .map(|(l, e)| e - self.capacity(l, theta.x[l], theta.z_at(l))),
        );
        Ok(g)
    }

    pub fn evaluate_utility(&self, theta: &DecisionPoint) -> Result<f64> {
        if theta.r.len() != self.num_rates() {
            return dim_err("rate vector length does not match the utility spec");
        }
        Ok(self.utility_of_rates(&theta.r))
    }

    pub(crate) fn utility_of_rates(&self, r: &[f64]) -> f64 {
        self.utilities
            .iter()
            .zip(r)
            .filter(|(u, _)| !u.is_zero())
            .map(|(u, &v)| u.eval(v))
            .sum()
    }

    /// True iff `max g(θ) ≤ tol` and `0 ≤ θ ≤ θ̄` (box checked with the same
    /// tolerance, relative to each bound).
    pub fn is_feasible(&self, theta: &DecisionPoint, tol: f64) -> bool {
        if self.check_dims(theta).is_err() || !theta.is_finite_nonneg() {
            return false;
        }
        let b = &self.bounds;
        let within = |v: &[f64], ub: &[f64]| v.iter().zip(ub).all(|(a, u)| *a <= u + tol * (1.0 + u));
        if !(within(&theta.r, &b.r) && within(&theta.x, &b.x) && within(&theta.z, &b.z)) {
            return false;
        }
        match self.evaluate_constraints(theta) {
            Ok(g) => g.iter().all(|&v| v <= tol),
            Err(_) => false,
        }
    }
}

/// Wire form of a [`ProblemInstance`].
#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    num_flows: usize,
    link_flows: Vec<Vec<usize>>,
    a_x: SparseMatrix,
    b_x: Vec<f64>,
    a_r: SparseMatrix,
    b_r: Vec<f64>,
    #[serde(rename = "G")]
    g: Option<InterferenceMap>,
    capacities: Vec<CapacityModel>,
    utilities: Vec<Utility>,
    bounds: Bounds,
}

impl TryFrom<InstanceDoc> for ProblemInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        let flows = FlowGraph::new(doc.link_flows, doc.num_flows)?;
        let links = flows.num_links();
        let resources = LinearConstraints::new(doc.a_x.with_cols_if_empty(links), doc.b_x)?;
        let network = LinearConstraints::new(doc.a_r.with_cols_if_empty(doc.num_flows), doc.b_r)?;
        ProblemInstance::new(flows, resources, network, doc.g, doc.capacities, doc.utilities, doc.bounds)
    }
}

impl From<ProblemInstance> for InstanceDoc {
    fn from(inst: ProblemInstance) -> Self {
        Self {
            num_flows: inst.flows.num_flows(),
            link_flows: inst.flows.link_flows.clone(),
            a_x: inst.resources.a,
            b_x: inst.resources.b,
            a_r: inst.network.a,
            b_r: inst.network.b,
            g: inst.interference,
            capacities: inst.capacities,
            utilities: inst.utilities,
            bounds: inst.bounds,
        }
    }
}
