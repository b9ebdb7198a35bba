use serde::{Deserialize, Serialize};

use super::{constraint_scales, dual_value, DualPoint, SolverSettings};
use crate::error::{Error, Result};
use crate::problem::{DecisionPoint, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualTraceRow {
    pub iteration: usize,
    pub dual_value: f64,
    pub best_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualBoundResult {
    /// Multipliers attaining `best_bound`.
    pub multipliers: DualPoint,
    pub best_bound: f64,
    /// `θ̂` at the best multipliers.
    pub maximizer: DecisionPoint,
    pub trace: Vec<DualTraceRow>,
}

/// Minimizes the dual bound `L̄(μ)` by projected subgradient descent.
///
/// `−g(θ̂(μ))` is a subgradient of `L̄` at `μ`, so each step moves
/// `μ ← max(0, μ + α_t g(θ̂(μ)))` with `α_t = α₀/√t` on row-normalized
/// constraints. The smallest dual value seen is returned.
pub fn minimize_dual_bound(
    inst: &ProblemInstance,
    settings: &SolverSettings,
    start: Option<&DualPoint>,
) -> Result<DualBoundResult> {
    settings.validate()?;
    let mut mu = match start {
        Some(m) => {
            m.check(inst)?;
            m.clone()
        }
        None => DualPoint::zeros(inst),
    };
    let inv_sq: Vec<f64> = constraint_scales(inst).iter().map(|s| 1.0 / (s * s)).collect();
    let mut best: Option<(f64, DualPoint, DecisionPoint)> = None;
    let mut trace = Vec::with_capacity(settings.dual_iterations);
    let mut steps = vec![0.0; inv_sq.len()];

    for t in 1..=settings.dual_iterations {
        let (value, theta) = dual_value(inst, &mu)?;
        if !value.is_finite() {
            return Err(Error::Solver(format!("dual value became {value} at iteration {t}")));
        }
        if best.as_ref().map_or(true, |(b, _, _)| value < *b) {
            best = Some((value, mu.clone(), theta.clone()));
        }
        let best_bound = best.as_ref().map_or(value, |b| b.0);
        trace.push(DualTraceRow { iteration: t, dual_value: value, best_bound });

        let g = inst.evaluate_constraints(&theta)?;
        let alpha = settings.dual_step / (t as f64).sqrt();
        for (s, w) in steps.iter_mut().zip(&inv_sq) {
            *s = alpha * w;
        }
        mu.ascend(&g, &steps);
    }
    let (best_bound, multipliers, maximizer) = best.expect("at least one iteration");
    Ok(DualBoundResult { multipliers, best_bound, maximizer, trace })
}
