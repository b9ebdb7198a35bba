//! Deterministic repair of an arbitrary box point into a feasible one.

use crate::problem::{DecisionPoint, ProblemInstance};
use crate::sparse::SparseMatrix;

const MAX_PASSES: usize = 200;
const SHRINK_MARGIN: f64 = 1e-12;

/// Repairs `θ` into a point satisfying every constraint.
///
/// 1. shrink `x` on each violated resource row;
/// 2. recompute `z = G x`;
/// 3. deflate the flows on each link to its capacity `C(x, z)`;
/// 4. shrink rates on each violated network row;
/// 5. raise utility-carrying rates into whatever slack remains.
///
/// The result satisfies every constraint with zero slack violation; when a
/// step cannot converge the offending block falls back to zero.
pub fn recover_feasible(inst: &ProblemInstance, theta: &DecisionPoint) -> DecisionPoint {
    repair(inst, theta, false)
}

/// Like [`recover_feasible`] but first fills unused link capacity with the
/// pure flow variables, so rates are limited only by `x`, `z` and the
/// network rows.
pub(crate) fn recover_feasible_filled(inst: &ProblemInstance, theta: &DecisionPoint) -> DecisionPoint {
    repair(inst, theta, true)
}

fn repair(inst: &ProblemInstance, theta: &DecisionPoint, fill: bool) -> DecisionPoint {
    let b = &inst.bounds;
    let clamp = |v: &[f64], ub: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(ub)
            .map(|(&v, &u)| if v.is_finite() { v.clamp(0.0, u) } else { 0.0 })
            .collect()
    };
    let mut r = clamp(&theta.r, &b.r);
    let mut x = clamp(&theta.x, &b.x);

    if !shrink_rows(&inst.resources.a, &inst.resources.b, &mut x) {
        x.iter_mut().for_each(|v| *v = 0.0);
    }

    let z = match &inst.interference {
        Some(map) => {
            let mut gx = map.apply(&x);
            let over = gx
                .iter()
                .zip(&b.z)
                .filter(|(g, _)| **g > 0.0)
                .map(|(g, u)| u / g)
                .fold(1.0, f64::min);
            if over < 1.0 {
                // Scaling x is the only way to pull G x back under z̄.
                let f = over * (1.0 - SHRINK_MARGIN);
                x.iter_mut().for_each(|v| *v *= f);
                gx = map.apply(&x);
            }
            gx
        }
        None => Vec::new(),
    };
    let point = |r: Vec<f64>, x: &[f64]| DecisionPoint { r, x: x.to_vec(), z: z.clone() };

    let cap: Vec<f64> = (0..inst.num_links())
        .map(|l| inst.capacity(l, x[l], z.get(l).copied().unwrap_or(0.0)))
        .collect();
    if fill {
        fill_links(inst, &cap, &mut r);
    }
    deflate_links(inst, &cap, &mut r);

    if !shrink_rows(&inst.network.a, &inst.network.b, &mut r) {
        r.iter_mut().for_each(|v| *v = 0.0);
        return point(r, &x);
    }

    raise_utility_rates(inst, &cap, &mut r);

    // Rounding can leave a residual of a few ulps on a tight row.
    for _ in 0..4 {
        let mut clean = shrink_rows(&inst.network.a, &inst.network.b, &mut r);
        clean &= deflate_links(inst, &cap, &mut r);
        if clean {
            let theta = point(r.clone(), &x);
            if inst.evaluate_constraints(&theta).is_ok_and(|g| g.iter().all(|&v| v <= 0.0)) {
                return theta;
            }
        }
    }
    let theta = point(r, &x);
    if inst.is_feasible(&theta, 0.0) {
        theta
    } else {
        DecisionPoint::zeros(inst)
    }
}

/// Repeatedly shrinks the positive-coefficient entries of every violated row
/// `a·v ≤ b` until all rows hold. Returns false if that does not settle.
fn shrink_rows(a: &SparseMatrix, rhs: &[f64], v: &mut [f64]) -> bool {
    for _ in 0..MAX_PASSES {
        let mut violated = false;
        for (k, (row, &b)) in a.rows().zip(rhs).enumerate() {
            // same summation order as the constraint evaluation
            if a.row_dot(k, v) <= b {
                continue;
            }
            let (mut pos, mut neg) = (0.0, 0.0);
            for &(c, coef) in row {
                let t = coef * v[c];
                if coef > 0.0 {
                    pos += t;
                } else {
                    neg += t;
                }
            }
            if pos > 0.0 {
                violated = true;
                let f = ((b - neg) / pos).clamp(0.0, 1.0) * (1.0 - SHRINK_MARGIN);
                for &(c, coef) in row {
                    if coef > 0.0 {
                        v[c] *= f;
                    }
                }
            }
        }
        if !violated {
            return true;
        }
    }
    false
}

/// Scales the flows of each overloaded link down to its capacity. Flows only
/// decrease, so a single pass settles every link. Returns false if any link
/// needed deflating.
fn deflate_links(inst: &ProblemInstance, cap: &[f64], r: &mut [f64]) -> bool {
    let mut clean = true;
    let e = inst.flows.incidence();
    for (l, &c) in cap.iter().enumerate() {
        let flows = inst.flows.link_flows(l);
        let sum = e.row_dot(l, r);
        if sum > c {
            clean = false;
            let f = if sum > 0.0 { (c / sum) * (1.0 - SHRINK_MARGIN) } else { 0.0 };
            for &s in flows {
                r[s] *= f;
            }
        }
    }
    clean
}

/// Raises pure flow variables so each link's flows use its full capacity.
fn fill_links(inst: &ProblemInstance, cap: &[f64], r: &mut [f64]) {
    let b = &inst.bounds;
    for (l, &c) in cap.iter().enumerate() {
        let flows: Vec<usize> = inst
            .flows
            .link_flows(l)
            .iter()
            .copied()
            .filter(|&s| inst.utilities[s].is_zero())
            .collect();
        if flows.is_empty() {
            continue;
        }
        let sum: f64 = inst.flows.link_flows(l).iter().map(|&s| r[s]).sum();
        let mut slack = c - sum;
        for (k, &s) in flows.iter().enumerate() {
            if slack <= 0.0 {
                break;
            }
            let share = slack / (flows.len() - k) as f64;
            let add = share.min(b.r[s] - r[s]).max(0.0);
            r[s] += add;
            slack -= add;
        }
    }
}

/// Greedily raises each utility-carrying rate by the smallest slack among the
/// rows it appears in with a positive coefficient.
fn raise_utility_rates(inst: &ProblemInstance, cap: &[f64], r: &mut [f64]) {
    let a = &inst.network.a;
    let mut row_slack: Vec<f64> = (0..a.nrows()).map(|k| inst.network.b[k] - a.row_dot(k, r)).collect();
    let er = inst.flows.incidence().mul_vec(r);
    let mut link_slack: Vec<f64> = cap.iter().zip(&er).map(|(c, e)| c - e).collect();

    let mut network_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.num_rates()];
    for (k, row) in a.rows().enumerate() {
        for &(c, coef) in row {
            network_cols[c].push((k, coef));
        }
    }
    let mut link_cols: Vec<Vec<usize>> = vec![Vec::new(); inst.num_rates()];
    for l in 0..inst.num_links() {
        for &s in inst.flows.link_flows(l) {
            link_cols[s].push(l);
        }
    }

    for s in 0..inst.num_rates() {
        if inst.utilities[s].is_zero() {
            continue;
        }
        let mut room = inst.bounds.r[s] - r[s];
        for &(k, coef) in &network_cols[s] {
            if coef > 0.0 {
                room = room.min(row_slack[k] / coef);
            }
        }
        for &l in &link_cols[s] {
            room = room.min(link_slack[l]);
        }
        if !(room > 0.0) {
            continue;
        }
        let delta = room * (1.0 - SHRINK_MARGIN);
        r[s] += delta;
        for &(k, coef) in &network_cols[s] {
            row_slack[k] -= coef * delta;
        }
        for &l in &link_cols[s] {
            link_slack[l] -= delta;
        }
    }
}
