//! Separable maximizers for the rate and link subproblems of the Lagrangian.
//!
//! Rate components are one-dimensional and solved exactly for every utility
//! kind, with or without the quadratic proximal term. Link components are
//! two-dimensional in `(x, z)`; for every capacity model the best `x` at a
//! fixed `z` is exact (capacities are linear or piecewise linear in `x`), which
//! leaves a one-dimensional search over `z`.

use crate::problem::{CapacityModel, Utility};

/// Quadratic proximal term `weight · (v − center)²` on one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prox1 {
    pub weight: f64,
    pub center: f64,
}

impl Prox1 {
    fn penalty(&self, v: f64) -> f64 {
        let d = v - self.center;
        self.weight * d * d
    }

    /// Maximizer of `slope · v − weight (v − center)²` on `[lo, hi]`.
    fn argmax_linear(&self, slope: f64, lo: f64, hi: f64) -> f64 {
        if self.weight > 0.0 {
            (self.center + slope / (2.0 * self.weight)).clamp(lo, hi)
        } else {
            bang_bang(slope, lo, hi)
        }
    }
}

fn penalty(prox: Option<Prox1>, v: f64) -> f64 {
    prox.map_or(0.0, |p| p.penalty(v))
}

/// Maximizer of `slope · v` on `[lo, hi]`; a zero slope picks `lo`.
fn bang_bang(slope: f64, lo: f64, hi: f64) -> f64 {
    if slope > 0.0 {
        hi
    } else {
        lo
    }
}

fn argmax_linear(prox: Option<Prox1>, slope: f64, lo: f64, hi: f64) -> f64 {
    match prox {
        Some(p) => p.argmax_linear(slope, lo, hi),
        None => bang_bang(slope, lo, hi),
    }
}

/// Picks the best candidate; earlier candidates win ties.
fn best_of(candidates: impl IntoIterator<Item = f64>, objective: impl Fn(f64) -> f64) -> f64 {
    let mut best = f64::NAN;
    let mut best_val = f64::NEG_INFINITY;
    for c in candidates {
        let v = objective(c);
        if v > best_val || best.is_nan() {
            best = c;
            best_val = v;
        }
    }
    best
}

/// Maximizes `U(r) − net_price · r − φ(r)` over `[0, upper]`.
pub fn maximize_rate_component(utility: &Utility, net_price: f64, upper: f64, prox: Option<Prox1>) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let objective = |r: f64| utility.eval(r) - net_price * r - penalty(prox, r);
    match utility {
        Utility::Zero => argmax_linear(prox, -net_price, 0.0, upper),
        Utility::Log { floor } => {
            let knee = floor.min(upper);
            // Below the floor the utility is constant, above it strictly concave.
            let flat = argmax_linear(prox, -net_price, 0.0, knee);
            let curved = match prox {
                Some(p) if p.weight > 0.0 => {
                    // 1/r − price − 2w(r − c) = 0  ⇔  2w r² + (price − 2wc) r − 1 = 0
                    let a = 2.0 * p.weight;
                    let b = net_price - 2.0 * p.weight * p.center;
                    let root = (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a);
                    root.clamp(knee, upper)
                }
                _ if net_price > 0.0 => (1.0 / net_price).clamp(knee, upper),
                _ => upper,
            };
            best_of([flat, curved], objective)
        }
        Utility::PiecewiseLinear { knots, .. } => {
            let mut breaks: Vec<f64> = std::iter::once(0.0)
                .chain(knots.iter().copied().filter(|&k| k > 0.0 && k < upper))
                .chain(std::iter::once(upper))
                .collect();
            breaks.dedup();
            let mut candidates = Vec::with_capacity(breaks.len() * 2);
            for w in breaks.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let slope = (utility.eval(hi) - utility.eval(lo)) / (hi - lo);
                candidates.push(lo);
                candidates.push(argmax_linear(prox, slope - net_price, lo, hi));
            }
            candidates.push(upper);
            best_of(candidates, objective)
        }
    }
}

/// Prices seen by one link: `μᶜ_ℓ`, the aggregated resource price
/// `(A_xᵀμˣ + Gᵀμᶻ)_ℓ`, and `μᶻ_ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPrices {
    pub capacity: f64,
    pub resource: f64,
    pub interference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProx {
    pub x: Prox1,
    pub z: Prox1,
}

/// Maximizes `μᶜ C(x, z) − p_x x + μᶻ z − φ(x, z)` over `[0, x̄] × [0, z̄]`.
///
/// Without a proximal term the maximum is found exactly from a finite
/// candidate set. With one, the `z` axis is scanned on `grid_points` points
/// (plus the structural candidates) and the best cell is polished by
/// golden-section search.
pub fn maximize_link_component(
    model: &CapacityModel,
    prices: LinkPrices,
    x_upper: f64,
    z_upper: f64,
    prox: Option<LinkProx>,
    grid_points: usize,
) -> (f64, f64) {
    let x_upper = x_upper.max(0.0);
    let z_upper = z_upper.max(0.0);
    let prox_x = prox.map(|p| p.x);
    let prox_z = prox.map(|p| p.z);

    if let CapacityModel::Linear { slope } = model {
        // Separable in x and z.
        let x = argmax_linear(prox_x, prices.capacity * slope - prices.resource, 0.0, x_upper);
        let z = argmax_linear(prox_z, prices.interference, 0.0, z_upper);
        return (x, z);
    }

    let eval_z = |z: f64| -> (f64, f64) {
        let x = best_x_at(model, prices, z, x_upper, prox_x);
        let val = prices.capacity * model.eval(x, z) - prices.resource * x - penalty(prox_x, x)
            + prices.interference * z
            - penalty(prox_z, z);
        (x, val)
    };

    let candidates = structural_z_candidates(model, z_upper);
    let mut best_z = 0.0;
    let (mut best_x, mut best_val) = eval_z(0.0);
    let consider = |z: f64, best_z: &mut f64, best_x: &mut f64, best_val: &mut f64| {
        let (x, v) = eval_z(z);
        if v > *best_val {
            *best_z = z;
            *best_x = x;
            *best_val = v;
        }
    };
    for &z in &candidates {
        consider(z, &mut best_z, &mut best_x, &mut best_val);
    }
    if prox.is_none() || z_upper == 0.0 {
        return (best_x, best_z);
    }

    let n = grid_points.max(2);
    let step = z_upper / (n - 1) as f64;
    let mut grid_best = 0usize;
    let mut grid_val = f64::NEG_INFINITY;
    for i in 0..n {
        let z = i as f64 * step;
        let (_, v) = eval_z(z);
        if v > grid_val {
            grid_val = v;
            grid_best = i;
        }
    }
    let z = grid_best as f64 * step;
    consider(z, &mut best_z, &mut best_x, &mut best_val);
    let lo = (grid_best.saturating_sub(1)) as f64 * step;
    let hi = ((grid_best + 1).min(n - 1)) as f64 * step;
    let polished = golden_section_max(|z| eval_z(z).1, lo, hi, 48);
    consider(polished, &mut best_z, &mut best_x, &mut best_val);
    // a structural candidate may sit inside the polished bracket
    let near = best_z;
    let lo = (near - step).max(0.0);
    let hi = (near + step).min(z_upper);
    let polished = golden_section_max(|z| eval_z(z).1, lo, hi, 48);
    consider(polished, &mut best_z, &mut best_x, &mut best_val);
    (best_x, best_z)
}

/// Points in `[0, z̄]` that contain the maximizer whenever no proximal term
/// is present.
///
/// For `x·ρ(γ(z))` with `ρ∘γ` convex decreasing, the best value over `x` is
/// convex in `z` away from the saturation point of `ρ` and linear on the
/// saturated side, so the maximum sits at `0`, at saturation, or at `z̄`. For
/// tables the objective is bilinear per cell, so its maximum is on a node.
fn structural_z_candidates(model: &CapacityModel, z_upper: f64) -> Vec<f64> {
    let mut out = vec![0.0, z_upper];
    match model {
        CapacityModel::Linear { .. } => {}
        CapacityModel::Sinr { signal, noise, efficiency } => {
            if let Some(knee) = efficiency.saturation_sinr() {
                let z = signal / knee - noise;
                if z > 0.0 && z < z_upper {
                    out.push(z);
                }
            }
        }
        CapacityModel::Tabulated { z_grid, .. } => {
            out.extend(z_grid.iter().copied().filter(|&z| z > 0.0 && z < z_upper));
        }
    }
    out
}

/// Exact maximizer over `x ∈ [0, x̄]` of `μᶜ C(x, z) − p x − φ(x)` at fixed `z`.
fn best_x_at(model: &CapacityModel, prices: LinkPrices, z: f64, x_upper: f64, prox: Option<Prox1>) -> f64 {
    if x_upper <= 0.0 {
        return 0.0;
    }
    if let Some(se) = model.efficiency_at(z) {
        return argmax_linear(prox, prices.capacity * se - prices.resource, 0.0, x_upper);
    }
    // piecewise linear in x between table nodes
    let CapacityModel::Tabulated { x_grid, .. } = model else {
        unreachable!("only tables lack a per-z efficiency");
    };
    let objective =
        |x: f64| prices.capacity * model.eval(x, z) - prices.resource * x - penalty(prox, x);
    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(x_grid.iter().copied().filter(|&x| x > 0.0 && x < x_upper))
        .chain(std::iter::once(x_upper))
        .collect();
    breaks.dedup();
    let mut candidates = Vec::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let slope = (model.eval(hi, z) - model.eval(lo, z)) / (hi - lo);
        candidates.push(lo);
        candidates.push(argmax_linear(prox, prices.capacity * slope - prices.resource, lo, hi));
    }
    candidates.push(x_upper);
    best_of(candidates, objective)
}

pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi <= lo {
        return lo;
    }
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    if fa >= fb {
        a
    } else {
        b
    }
}
