use log::warn;

use super::recovery::recover_feasible_filled;
use super::{
    constraint_scales, dual_value, maximize_lagrangian, recover_feasible, DualPoint, IterationRecord, ProxSpec,
    SolveReport, SolverSettings,
};
use crate::error::{Error, Result};
use crate::problem::{DecisionPoint, ProblemInstance};

/// Proximal augmented Lagrangian iterations
///
/// `θᵗ⁺¹ = argmax L(θ, μᵗ) − ε ‖(θ − θᵗ)/θ̄‖²` followed by the projected
/// multiplier step `μᵗ⁺¹ = max(0, μᵗ + α g(θᵗ⁺¹))` on normalized rows.
///
/// Every iterate is repaired with [`recover_feasible`] and the best repaired
/// point is kept; `L̄(μᵗ)` is evaluated each iteration and the smallest value
/// is reported as the bound.
pub fn augmented_lagrangian_solve(
    inst: &ProblemInstance,
    settings: &SolverSettings,
    theta0: &DecisionPoint,
    mu0: &DualPoint,
) -> Result<SolveReport> {
    settings.validate()?;
    inst.check_dims(theta0)?;
    mu0.check(inst)?;
    if !theta0.is_finite_nonneg() {
        return Err(Error::Solver("initial point must be finite and nonnegative".into()));
    }

    let scales = constraint_scales(inst);
    let steps: Vec<f64> = scales.iter().map(|s| settings.al_step / (s * s)).collect();

    let mut mu = mu0.clone();
    let mut theta = theta0.clone();
    let mut best_bound = f64::INFINITY;
    let mut best_mu = mu.clone();
    let mut best = Candidate::new(inst, DecisionPoint::zeros(inst));
    best.offer(inst, recover_feasible(inst, theta0));

    let mut g_prev = inst.evaluate_constraints(&theta)?;
    let mut avg = Average::new(inst);

    let mut trace = Vec::with_capacity(settings.al_iterations);
    let mut last_violation = f64::INFINITY;
    let mut growing = 0usize;
    let mut diverged = false;

    for t in 1..=settings.al_iterations {
        let (bound, _) = dual_value(inst, &mu)?;
        if !bound.is_finite() {
            return Err(Error::Solver(format!("dual value became {bound} at iteration {t}")));
        }
        if bound < best_bound {
            best_bound = bound;
            best_mu = mu.clone();
        }

        let prox = ProxSpec { weight: settings.prox_weight, center: theta };
        theta = maximize_lagrangian(inst, &mu, Some(&prox), settings.grid_points);
        let g = inst.evaluate_constraints(&theta)?;
        // extrapolated residual 2g(θᵗ⁺¹) − g(θᵗ)
        let g_bar: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| 2.0 * a - b).collect();
        mu.ascend(&g_bar, &steps);

        best.offer(inst, recover_feasible(inst, &theta));
        best.offer(inst, recover_feasible_filled(inst, &theta));
        avg.push(&theta);
        if t % AVERAGE_EVERY == 0 || t == settings.al_iterations {
            best.offer(inst, recover_feasible_filled(inst, &avg.mean));
        }

        let violation = g.iter().zip(&scales).map(|(v, s)| v / s).fold(0.0, f64::max);
        trace.push(IterationRecord {
            iteration: t,
            dual_value: bound,
            primal_utility: best.utility,
            max_violation: violation,
        });

        if violation > last_violation && violation > settings.feasibility_tol {
            growing += 1;
            if growing >= settings.divergence_window {
                warn!("constraint violation grew for {growing} consecutive iterations; stopping at {t}");
                diverged = true;
                break;
            }
        } else {
            growing = 0;
        }
        last_violation = violation;
        g_prev = g;
    }

    Ok(SolveReport {
        best_bound,
        best_utility: best.utility,
        best_feasible: best.theta,
        multipliers: best_mu,
        trace,
        diverged,
    })
}

const AVERAGE_EVERY: usize = 10;

/// Running mean of the primal iterates.
struct Average {
    mean: DecisionPoint,
    count: f64,
}

impl Average {
    fn new(inst: &ProblemInstance) -> Self {
        Self { mean: DecisionPoint::zeros(inst), count: 0.0 }
    }

    fn push(&mut self, theta: &DecisionPoint) {
        self.count += 1.0;
        let w = 1.0 / self.count;
        let mix = |m: &mut [f64], v: &[f64]| m.iter_mut().zip(v).for_each(|(m, v)| *m += w * (v - *m));
        mix(&mut self.mean.r, &theta.r);
        mix(&mut self.mean.x, &theta.x);
        mix(&mut self.mean.z, &theta.z);
    }
}

struct Candidate {
    theta: DecisionPoint,
    utility: f64,
}

impl Candidate {
    fn new(inst: &ProblemInstance, theta: DecisionPoint) -> Self {
        let utility = inst.utility_of_rates(&theta.r);
        Self { theta, utility }
    }

    fn offer(&mut self, inst: &ProblemInstance, theta: DecisionPoint) {
        let utility = inst.utility_of_rates(&theta.r);
        if utility > self.utility {
            self.theta = theta;
            self.utility = utility;
        }
    }
}
