//! Exact worst-case expected loss over a `p`-Wasserstein ball around a
//! discrete distribution on a finite sample space.
//!
//! With one budget constraint the transport LP is a fractional knapsack: each
//! atom's best achievable (cost, loss) trade-off is the upper concave hull of
//! its candidate moves, and filling hull segments in order of decreasing slope
//! is optimal. The last slope used is the optimal budget multiplier.

use crate::cost::Order;
use crate::ext::{ext_f64, ext_matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_SUPPORT: usize = 4096;
/// Slack for ordering checks between transport orders.
pub const ORDERING_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("support of {0} points exceeds the limit of {MAX_SUPPORT}")]
    InstanceTooLarge(usize),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// A support point: a scalar or a vector. Only the loss and cost matrix
/// enter the computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub support: Vec<SupportPoint>,
    pub loss: Vec<f64>,
    /// `(support index, weight)` pairs of the empirical distribution.
    pub atoms: Vec<(usize, f64)>,
    /// `cost[i][j] = d(z_j, z_i)`; `inf` forbids the move.
    #[serde(with = "ext_matrix")]
    pub cost: Vec<Vec<f64>>,
    pub p: Order,
    #[serde(with = "ext_f64")]
    pub eps: f64,
}

impl DiscreteInstance {
    pub fn validate(&self) -> Result<(), OracleError> {
        let n = self.support.len();
        if n > MAX_SUPPORT {
            return Err(OracleError::InstanceTooLarge(n));
        }
        let bad = |m: String| Err(OracleError::Invalid(m));
        if n == 0 {
            return bad("empty support".into());
        }
        if self.loss.len() != n || self.cost.len() != n || self.cost.iter().any(|row| row.len() != n) {
            return bad("loss and cost dimensions must match the support".into());
        }
        if self.loss.iter().any(|l| !l.is_finite()) {
            return bad("losses must be finite".into());
        }
        for (i, row) in self.cost.iter().enumerate() {
            if row.iter().any(|d| d.is_nan() || *d < 0.0) {
                return bad(format!("cost row {i} has a negative or NaN entry"));
            }
            if row[i] != 0.0 {
                return bad(format!("cost[{i}][{i}] must be 0"));
            }
        }
        if self.atoms.is_empty() {
            return bad("no atoms".into());
        }
        let mut total = 0.0;
        for &(i, w) in &self.atoms {
            if i >= n {
                return bad(format!("atom index {i} out of range"));
            }
            if !(w > 0.0) {
                return bad(format!("atom weight {w} must be positive"));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("atom weights sum to {total}"));
        }
        if !(self.eps >= 0.0) {
            return bad(format!("budget {} must be non-negative", self.eps));
        }
        Ok(())
    }

    pub fn empirical_risk(&self) -> f64 {
        self.atoms.iter().map(|&(i, w)| w * self.loss[i]).sum()
    }

    pub fn with_order(&self, p: Order) -> DiscreteInstance {
        DiscreteInstance { p, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> DiscreteInstance {
        DiscreteInstance { eps, ..self.clone() }
    }

    /// Transport cost of moving atom `i` to support point `j`: `d^p`.
    fn move_cost(&self, atom: usize, j: usize) -> f64 {
        let d = self.cost[self.atoms[atom].0][j];
        if d == 0.0 {
            0.0
        } else {
            d.powf(self.p.value())
        }
    }
}

/// Mass moved from an atom to a support point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub atom: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub value: f64,
    pub plan: Vec<Transfer>,
    /// `Σ π d^p` of the plan.
    pub budget_used: f64,
    /// Optimal multiplier of the budget constraint (0 when slack).
    pub multiplier: f64,
}

/// Hull vertices `(cost, loss, target)` of one atom, starting at the best
/// zero-cost move and keeping only increasing segments.
fn atom_frontier(inst: &DiscreteInstance, atom: usize) -> Vec<(f64, f64, usize)> {
    let n = inst.support.len();
    let mut pts: Vec<(f64, f64, usize)> = (0..n)
        .filter_map(|j| {
            let c = inst.move_cost(atom, j);
            c.is_finite().then(|| (c, inst.loss[j], j))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(last) = hull.last() {
            if p.1 <= last.1 {
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b.1 - a.1) * (p.0 - a.0) <= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Worst-case risk over `{Q : W_p(Q, P_N) ≤ ε}`.
pub fn dr_risk_exact(inst: &DiscreteInstance) -> Result<OracleSolution, OracleError> {
    inst.validate()?;
    if inst.p.is_infinite() {
        return Ok(ball_max(inst));
    }
    let budget = if inst.eps == 0.0 { 0.0 } else { inst.eps.powf(inst.p.value()) };
    struct Segment {
        slope: f64,
        atom: usize,
        index: usize,
    }
    let frontiers: Vec<Vec<(f64, f64, usize)>> = (0..inst.atoms.len()).map(|a| atom_frontier(inst, a)).collect();
    let mut segments = Vec::new();
    for (atom, f) in frontiers.iter().enumerate() {
        for index in 1..f.len() {
            let slope = (f[index].1 - f[index - 1].1) / (f[index].0 - f[index - 1].0);
            segments.push(Segment { slope, atom, index });
        }
    }
    segments.sort_by(|a, b| b.slope.total_cmp(&a.slope).then(a.atom.cmp(&b.atom)).then(a.index.cmp(&b.index)));

    // progress[a] = (vertex reached, fraction of the next segment filled)
    let mut progress = vec![(0usize, 0.0f64); inst.atoms.len()];
    let mut remaining = budget;
    let mut multiplier = 0.0;
    for s in &segments {
        if remaining <= 0.0 {
            break;
        }
        let w = inst.atoms[s.atom].1;
        let f = &frontiers[s.atom];
        let need = w * (f[s.index].0 - f[s.index - 1].0);
        if need <= remaining {
            remaining -= need;
            progress[s.atom] = (s.index, 0.0);
        } else {
            progress[s.atom] = (s.index - 1, remaining / need);
            remaining = 0.0;
            multiplier = s.slope;
        }
    }
    if remaining <= 0.0 && multiplier == 0.0 {
        multiplier = segments
            .iter()
            .find(|s| {
                let (reached, frac) = progress[s.atom];
                s.index > reached || (s.index == reached + 1 && frac < 1.0)
            })
            .map(|s| s.slope)
            .unwrap_or(0.0);
    }

    let mut value = 0.0;
    let mut used = 0.0;
    let mut plan = Vec::new();
    for (atom, f) in frontiers.iter().enumerate() {
        let w = inst.atoms[atom].1;
        let (reached, frac) = progress[atom];
        let (c0, l0, j0) = f[reached];
        if frac > 0.0 {
            let (c1, l1, j1) = f[reached + 1];
            value += w * ((1.0 - frac) * l0 + frac * l1);
            used += w * ((1.0 - frac) * c0 + frac * c1);
            plan.push(Transfer { atom, target: j0, mass: w * (1.0 - frac) });
            plan.push(Transfer { atom, target: j1, mass: w * frac });
        } else {
            value += w * l0;
            used += w * c0;
            plan.push(Transfer { atom, target: j0, mass: w });
        }
    }
    Ok(OracleSolution { value, plan, budget_used: used, multiplier })
}

fn ball_max(inst: &DiscreteInstance) -> OracleSolution {
    let mut value = 0.0;
    let mut plan = Vec::new();
    for (atom, &(i, w)) in inst.atoms.iter().enumerate() {
        let (target, best) = inst.cost[i]
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= inst.eps)
            .map(|(j, _)| (j, inst.loss[j]))
            .fold((i, inst.loss[i]), |acc, c| if c.1 > acc.1 { c } else { acc });
        value += w * best;
        plan.push(Transfer { atom, target, mass: w });
    }
    OracleSolution { value, plan, budget_used: 0.0, multiplier: 0.0 }
}

/// Dual objective `λ ε^p + Σ μ_i max_j (l_j − λ d_ij^p)`; equals the primal
/// value at the optimal multiplier.
pub fn dual_value(inst: &DiscreteInstance, multiplier: f64) -> f64 {
    let budget = if inst.eps == 0.0 { 0.0 } else { inst.eps.powf(inst.p.value()) };
    let mut total = multiplier * budget;
    for (atom, &(_, w)) in inst.atoms.iter().enumerate() {
        let best = (0..inst.support.len())
            .filter_map(|j| {
                let c = inst.move_cost(atom, j);
                c.is_finite().then(|| inst.loss[j] - crate::ext::mul0(multiplier, c))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += w * best;
    }
    total
}

/// Brute force over LP vertices: every atom moves to a single point except
/// at most one, which splits between two points so that the budget is tight.
/// Exponential in the number of atoms; meant for cross-checking.
pub fn dr_risk_enumerated(inst: &DiscreteInstance) -> Result<f64, OracleError> {
    inst.validate()?;
    if inst.p.is_infinite() {
        return Ok(ball_max(inst).value);
    }
    let budget = if inst.eps == 0.0 { 0.0 } else { inst.eps.powf(inst.p.value()) };
    let m = inst.atoms.len();
    let n = inst.support.len();
    let slack = 1e-12 * budget.max(1.0);
    let mut best = f64::NEG_INFINITY;
    let mut assign = vec![0usize; m];
    loop {
        let mut cost = 0.0;
        let mut value = 0.0;
        for (a, &j) in assign.iter().enumerate() {
            let w = inst.atoms[a].1;
            cost += w * inst.move_cost(a, j);
            value += w * inst.loss[j];
        }
        if cost <= budget + slack {
            best = best.max(value);
        }
        for split in 0..m {
            let w = inst.atoms[split].1;
            let j0 = assign[split];
            let c0 = inst.move_cost(split, j0);
            let base_cost = cost - w * c0;
            let base_value = value - w * inst.loss[j0];
            if !base_cost.is_finite() {
                continue;
            }
            for j1 in 0..n {
                let c1 = inst.move_cost(split, j1);
                if j1 == j0 || !c1.is_finite() || !c0.is_finite() || c1 == c0 {
                    continue;
                }
                let frac = ((budget - base_cost) / w - c0) / (c1 - c0);
                if (0.0..=1.0).contains(&frac) {
                    let v = base_value + w * ((1.0 - frac) * inst.loss[j0] + frac * inst.loss[j1]);
                    best = best.max(v);
                }
            }
        }
        let mut k = 0;
        loop {
            if k == m {
                return Ok(best);
            }
            assign[k] += 1;
            if assign[k] < n {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WpOrderingResult {
    pub passed: bool,
    pub values: Vec<f64>,
    pub first_violation: Option<(Order, Order)>,
}

/// Exact risks along `p_list` (ascending) must not increase.
pub fn wp_ordering_check(inst: &DiscreteInstance, p_list: &[Order]) -> Result<WpOrderingResult, OracleError> {
    let values: Vec<f64> = p_list
        .par_iter()
        .map(|&p| dr_risk_exact(&inst.with_order(p)).map(|s| s.value))
        .collect::<Result<_, _>>()?;
    let first_violation = (1..values.len())
        .find(|&k| values[k] > values[k - 1] + ORDERING_SLACK * values[k - 1].abs().max(1.0))
        .map(|k| (p_list[k - 1], p_list[k]));
    Ok(WpOrderingResult { passed: first_violation.is_none(), values, first_violation })
}

/// Instance on a 1-D grid with `|z_i − z_j|` costs.
pub fn line_instance(points: &[f64], loss: &[f64], atoms: Vec<(usize, f64)>, p: Order, eps: f64) -> DiscreteInstance {
    DiscreteInstance {
        support: points.iter().map(|&z| SupportPoint::Scalar(z)).collect(),
        loss: loss.to_vec(),
        atoms,
        cost: points.iter().map(|a| points.iter().map(|b| (a - b).abs()).collect()).collect(),
        p,
        eps,
    }
}
