//! Growth rates `Δ(z, t) = sup { l(z′) − l(z) : d(z′, z) ≤ t }` of a loss and
//! their pointwise maximum over a dataset.
//!
//! Closed forms are exact. Everything else goes through a bounded
//! projected-gradient search, which only ever under-estimates the rate.

use crate::advscore::GammaKind;
use crate::cost::{CostConfig, DataPoint, Norm};
use crate::curves::{Continuity, Curve, CurveError, Tail};
use crate::nn::{fgsm_direction, Head, Mlp, NnError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("budget grid must be sorted and start at 0")]
    InvalidGrid,
    #[error("power exponent must be positive, got {0}")]
    InvalidExponent(f64),
    #[error("weights must be positive and sum to 1 (sum {0})")]
    InvalidWeights(f64),
    #[error("the loss requires a log-softmax head")]
    HeadMismatch,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Network(#[from] NnError),
}

/// How a rate value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    /// Computed in closed form.
    Exact,
    /// Best value found by search; a lower estimate.
    Estimate,
    /// Search still improving when the step budget ran out.
    LowEstimate,
}

impl Quality {
    fn worst(self, other: Quality) -> Quality {
        self.max(other)
    }
}

/// A user-supplied loss; search uses central-difference gradients.
#[derive(Clone)]
pub struct CustomLoss {
    value: Arc<dyn Fn(&DataPoint) -> f64 + Send + Sync>,
}

impl CustomLoss {
    pub fn new(value: impl Fn(&DataPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value) }
    }

    pub fn eval(&self, z: &DataPoint) -> f64 {
        (self.value)(z)
    }
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomLoss")
    }
}

#[derive(Debug, Clone)]
pub enum LossKind {
    /// `|y − ⟨θ, x⟩|^α`.
    LinearPowerRegression { alpha: f64, theta: Vec<f64> },
    /// `⟨y, −log softmax(f(x))⟩`.
    MlpClassification(Mlp),
    /// `γ(|y − f(x)|)` for a scalar-output network.
    MlpRegression { net: Mlp, gamma: GammaKind },
    Custom(CustomLoss),
}

#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub cost: CostConfig,
}

impl LossSpec {
    pub fn new(kind: LossKind, cost: CostConfig) -> Result<Self, RateError> {
        match &kind {
            LossKind::LinearPowerRegression { alpha, .. } if !(*alpha > 0.0) => {
                return Err(RateError::InvalidExponent(*alpha));
            }
            LossKind::MlpClassification(net) if net.head() != Head::LogSoftmaxInner => {
                return Err(RateError::HeadMismatch);
            }
            LossKind::MlpRegression { net, .. } if net.output_dim() != 1 => {
                return Err(NnError::DimMismatch { expected: 1, found: net.output_dim() }.into());
            }
            _ => {}
        }
        Ok(Self { kind, cost })
    }

    pub fn value(&self, z: &DataPoint) -> Result<f64, RateError> {
        Ok(match &self.kind {
            LossKind::LinearPowerRegression { alpha, theta } => residual(theta, z).abs().powf(*alpha),
            LossKind::MlpClassification(net) => net.loss(z)?,
            LossKind::MlpRegression { net, gamma } => {
                let out = net.forward(&z.x)?;
                gamma.value((z.y[0] - out[0]).abs())
            }
            LossKind::Custom(f) => f.eval(z),
        })
    }

    /// Gradients of the loss in the features and in the label.
    pub fn gradients(&self, z: &DataPoint) -> Result<(Vec<f64>, Vec<f64>), RateError> {
        Ok(match &self.kind {
            LossKind::LinearPowerRegression { alpha, theta } => {
                let c = residual(theta, z);
                let sign = if c >= 0.0 { 1.0 } else { -1.0 };
                let outer = alpha * c.abs().max(if *alpha < 1.0 { 1e-12 } else { 0.0 }).powf(alpha - 1.0) * sign;
                (theta.iter().map(|t| -outer * t).collect(), vec![outer])
            }
            LossKind::MlpClassification(net) => {
                let (_, gx, gy) = net.loss_and_grad_z(z)?;
                (gx, gy)
            }
            LossKind::MlpRegression { net, gamma } => {
                let out = net.forward(&z.x)?;
                let u = z.y[0] - out[0];
                let sign = if u >= 0.0 { 1.0 } else { -1.0 };
                let outer = gamma.derivative(u.abs()) * sign;
                let (_, vjp) = net.output_and_vjp(&z.x, &[-outer])?;
                (vjp, vec![outer])
            }
            LossKind::Custom(f) => numeric_gradients(|p| f.eval(p), z),
        })
    }

    /// Dual norm of the loss gradient at `z` under the cost.
    pub fn gradient_dual_norm(&self, z: &DataPoint) -> Result<f64, RateError> {
        let (gx, gy) = self.gradients(z)?;
        Ok(self.cost.dual_norm(&gx, &gy))
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, LossKind::LinearPowerRegression { .. })
    }
}

fn residual(theta: &[f64], z: &DataPoint) -> f64 {
    z.y[0] - theta.iter().zip(&z.x).map(|(a, b)| a * b).sum::<f64>()
}

fn numeric_gradients(f: impl Fn(&DataPoint) -> f64, z: &DataPoint) -> (Vec<f64>, Vec<f64>) {
    let central = |bump: &dyn Fn(&mut DataPoint, f64), base: f64| {
        let h = 1e-6 * base.abs().max(1.0);
        let mut plus = z.clone();
        bump(&mut plus, h);
        let mut minus = z.clone();
        bump(&mut minus, -h);
        (f(&plus) - f(&minus)) / (2.0 * h)
    };
    let gx = (0..z.x.len()).map(|j| central(&|p, h| p.x[j] += h, z.x[j])).collect();
    let gy = (0..z.y.len()).map(|j| central(&|p, h| p.y[j] += h, z.y[j])).collect();
    (gx, gy)
}

/// Search settings for non-closed-form rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub starts: usize,
    pub steps: usize,
    /// Step length as a fraction of the feature radius.
    pub step_fraction: f64,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { starts: 16, steps: 200, step_fraction: 0.1, boundary_samples: 512, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub value: f64,
    pub quality: Quality,
}

/// `(min, max)` of `t^α‖θ‖_*^α` and `(|ĉ| + t‖θ‖_*)^α − |ĉ|^α`. The first is
/// the lower bound for `α ≥ 1`; for `α < 1` the roles swap.
pub fn power_loss_rate_bounds(alpha: f64, theta_dual_norm: f64, c_hat: f64, t: f64) -> (f64, f64) {
    let a = (t * theta_dual_norm).powf(alpha);
    let b = power_increment(alpha, c_hat.abs(), t * theta_dual_norm);
    (a.min(b), a.max(b))
}

/// `(c + s)^α − c^α` without cancellation.
fn power_increment(alpha: f64, c: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if alpha == 1.0 {
        return s;
    }
    if c == 0.0 {
        return s.powf(alpha);
    }
    if s.is_infinite() {
        return f64::INFINITY;
    }
    c.powf(alpha) * (alpha * (s / c).ln_1p()).exp_m1()
}

/// Worst-case residual growth per unit budget: the cheaper of moving features
/// (`‖θ‖_*`) or the label (`1/κ`).
fn linear_residual_rate(theta: &[f64], cost: &CostConfig) -> f64 {
    cost.r.dual().of(theta).max(cost.label_rate())
}

fn check_grid(grid: &[f64]) -> Result<(), RateError> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|t| !t.is_finite()) {
        return Err(RateError::InvalidGrid);
    }
    Ok(())
}

/// Rate of one data point at budget `t`.
pub fn estimate_rate_at(loss: &LossSpec, z: &DataPoint, t: f64, search: &SearchConfig) -> Result<RateEstimate, RateError> {
    if t <= 0.0 {
        return Ok(RateEstimate { value: 0.0, quality: Quality::Exact });
    }
    if let LossKind::LinearPowerRegression { alpha, theta } = &loss.kind {
        let value = power_increment(*alpha, residual(theta, z).abs(), t * linear_residual_rate(theta, &loss.cost));
        return Ok(RateEstimate { value, quality: Quality::Exact });
    }
    search_rate(loss, z, t, search)
}

/// `Δ(z, ·)` on `grid`. Search-based values are made monotone by a running
/// max, so refining the grid never lowers an estimate at a shared knot.
pub fn individual_rate(loss: &LossSpec, z: &DataPoint, grid: &[f64], search: &SearchConfig) -> Result<(Curve, Quality), RateError> {
    check_grid(grid)?;
    let mut pairs = Vec::with_capacity(grid.len());
    let mut quality = Quality::Exact;
    for &t in grid {
        let est = estimate_rate_at(loss, z, t, search)?;
        quality = quality.worst(est.quality);
        pairs.push((t, est.value));
    }
    let (tail, continuity) = match &loss.kind {
        LossKind::LinearPowerRegression { alpha, .. } if *alpha > 1.0 => (Tail::Infinite, Continuity::RightContinuous),
        LossKind::LinearPowerRegression { .. } => (Tail::LastSlopeExtension, Continuity::RightContinuous),
        // Network losses are continuous in the input, so the rate is continuous in the budget.
        LossKind::MlpClassification(_) | LossKind::MlpRegression { .. } => (Tail::Constant, Continuity::RightContinuous),
        LossKind::Custom(..) => (Tail::Constant, Continuity::Unknown),
    };
    Ok((Curve::from_samples(&pairs)?.with_tail(tail).with_continuity(continuity), quality))
}

/// Per-sample rates, their pointwise maximum and the sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    pub per_sample: Vec<Curve>,
    pub maximal: Curve,
    pub weights: Vec<f64>,
    pub quality: Quality,
}

impl RateProfile {
    pub fn new(per_sample: Vec<Curve>, weights: Vec<f64>, quality: Quality) -> Result<Self, RateError> {
        if per_sample.is_empty() || per_sample.len() != weights.len() {
            return Err(RateError::EmptyDataset);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(RateError::InvalidWeights(sum));
        }
        let maximal = Curve::pointwise_max(&per_sample)?;
        Ok(Self { per_sample, maximal, weights, quality })
    }

    pub fn uniform(per_sample: Vec<Curve>, quality: Quality) -> Result<Self, RateError> {
        let n = per_sample.len();
        let weights = uniform_weights(n);
        Self::new(per_sample, weights, quality)
    }
}

/// `1/N` weights, with the rounding remainder placed on the last entry so the
/// sum is exactly 1 up to one ulp.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let w = 1.0 / n as f64;
    let mut weights = vec![w; n];
    let rest: f64 = weights[..n - 1].iter().sum();
    weights[n - 1] = 1.0 - rest;
    weights
}

/// Rates of every sample (in parallel) and their maximum, uniformly weighted.
pub fn maximal_rate(loss: &LossSpec, dataset: &[DataPoint], grid: &[f64], search: &SearchConfig) -> Result<RateProfile, RateError> {
    if dataset.is_empty() {
        return Err(RateError::EmptyDataset);
    }
    let results: Vec<(Curve, Quality)> =
        dataset.par_iter().map(|z| individual_rate(loss, z, grid, search)).collect::<Result<_, _>>()?;
    let quality = results.iter().fold(Quality::Exact, |q, r| q.worst(r.1));
    RateProfile::uniform(results.into_iter().map(|r| r.0).collect(), quality)
}

/// Exact rates on a finite sample space: atom `i` may move to support point
/// `j` at cost `cost[a_i][j]` (`inf` forbids the move). The knots are every
/// distinct finite cost, so the step functions are represented exactly.
pub fn finite_support_profile(loss: &[f64], atoms: &[(usize, f64)], cost: &[Vec<f64>]) -> Result<RateProfile, RateError> {
    if atoms.is_empty() {
        return Err(RateError::EmptyDataset);
    }
    let mut grid: Vec<f64> = vec![0.0];
    for &(i, _) in atoms {
        grid.extend(cost[i].iter().copied().filter(|d| d.is_finite() && *d > 0.0));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let per_sample = atoms
        .iter()
        .map(|&(i, _)| {
            let base = loss[i];
            let pairs: Vec<(f64, f64)> = grid
                .iter()
                .map(|&t| {
                    let best = cost[i]
                        .iter()
                        .zip(loss)
                        .filter(|(d, _)| **d <= t)
                        .map(|(_, l)| *l)
                        .fold(base, f64::max);
                    (t, best - base)
                })
                .collect();
            Ok(Curve::from_samples(&pairs)?.with_continuity(Continuity::Steps))
        })
        .collect::<Result<Vec<_>, CurveError>>()?;
    RateProfile::new(per_sample, atoms.iter().map(|a| a.1).collect(), Quality::Exact)
}

/// `Σ μ_i l(z_i)`.
pub fn empirical_risk(loss: &LossSpec, dataset: &[DataPoint], weights: &[f64]) -> Result<f64, RateError> {
    if dataset.is_empty() {
        return Err(RateError::EmptyDataset);
    }
    let mut total = 0.0;
    for (z, w) in dataset.iter().zip(weights) {
        total += w * loss.value(z)?;
    }
    Ok(total)
}

/// Euclidean projection onto `{v : ‖v‖_r ≤ radius}`.
pub fn project_ball(v: &mut [f64], r: Norm, radius: f64) {
    let n = r.of(v);
    if n <= radius {
        return;
    }
    match r {
        Norm::L2 => v.iter_mut().for_each(|x| *x *= radius / n),
        Norm::LInf => v.iter_mut().for_each(|x| *x = x.clamp(-radius, radius)),
        Norm::L1 => {
            let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            let mut cumulative = 0.0;
            let mut theta = 0.0;
            for (k, m) in mags.iter().enumerate() {
                cumulative += m;
                let candidate = (cumulative - radius) / (k + 1) as f64;
                if *m > candidate {
                    theta = candidate;
                }
            }
            v.iter_mut().for_each(|x| *x = x.signum() * (x.abs() - theta).max(0.0));
        }
    }
}

fn random_boundary_point(rng: &mut ChaCha8Rng, dim: usize, r: Norm, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = match r {
        Norm::L2 => (0..dim).map(|_| StandardNormal.sample(rng)).collect(),
        Norm::L1 => (0..dim)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            })
            .collect(),
        Norm::LInf => (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect(),
    };
    if r == Norm::LInf && dim > 0 {
        let k = rng.random_range(0..dim);
        v[k] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let n = r.of(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= radius / n);
    }
    v
}

/// Best label for a given perturbed feature vector within an `ℓ₁` label
/// radius: exact for the network heads, vertex search for custom losses.
fn best_label(loss: &LossSpec, z: &DataPoint, x: &[f64], radius: f64) -> Result<(Vec<f64>, f64), RateError> {
    let probe = DataPoint::new(x.to_vec(), z.y.clone());
    if radius <= 0.0 {
        let v = loss.value(&probe)?;
        return Ok((z.y.clone(), v));
    }
    match &loss.kind {
        LossKind::MlpClassification(net) => {
            // Linear in y on the simplex: move mass from the cheapest classes to
            // the most expensive one.
            let out = net.forward(x)?;
            let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + out.iter().map(|o| (o - m).exp()).sum::<f64>().ln();
            let costs: Vec<f64> = out.iter().map(|o| lse - o).collect();
            let top = (0..costs.len()).fold(0, |b, j| if costs[j] > costs[b] { j } else { b });
            let mut y = z.y.clone();
            let mut budget = radius / 2.0;
            let mut order: Vec<usize> = (0..y.len()).filter(|&j| j != top).collect();
            order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
            for j in order {
                if budget <= 0.0 {
                    break;
                }
                let moved = y[j].min(budget);
                y[j] -= moved;
                y[top] += moved;
                budget -= moved;
            }
            let v = net.loss(&DataPoint::new(x.to_vec(), y.clone()))?;
            Ok((y, v))
        }
        LossKind::MlpRegression { net, gamma } => {
            let out = net.forward(x)?[0];
            let sign = if z.y[0] - out >= 0.0 { 1.0 } else { -1.0 };
            let y = z.y[0] + sign * radius;
            Ok((vec![y], gamma.value((y - out).abs())))
        }
        _ => {
            let mut best_y = z.y.clone();
            let mut best = loss.value(&probe)?;
            for j in 0..z.y.len() {
                for s in [-1.0, 1.0] {
                    let mut y = z.y.clone();
                    y[j] += s * radius;
                    let v = loss.value(&DataPoint::new(x.to_vec(), y.clone()))?;
                    if v > best {
                        best = v;
                        best_y = y;
                    }
                }
            }
            Ok((best_y, best))
        }
    }
}

/// Multi-start projected gradient ascent over the feature ball, with the label
/// channel solved per iterate, followed by boundary sampling.
fn search_rate(loss: &LossSpec, z: &DataPoint, t: f64, cfg: &SearchConfig) -> Result<RateEstimate, RateError> {
    let base = loss.value(z)?;
    let r = loss.cost.r;
    let dim = z.x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t.to_bits());
    let splits: &[f64] = if loss.cost.labels_fixed() { &[1.0] } else { &[1.0, 0.75, 0.5, 0.25, 0.0] };
    let mut best = base;
    let mut quality = Quality::Estimate;
    let objective = |x: &[f64], label_radius: f64| best_label(loss, z, x, label_radius);

    for start in 0..cfg.starts.max(1) {
        let feature_share = splits[start % splits.len()];
        let radius = feature_share * t;
        let label_radius = (1.0 - feature_share) * t / loss.cost.kappa();
        let mut delta = match start {
            0 => vec![0.0; dim],
            _ => {
                let mut d = random_boundary_point(&mut rng, dim, r, radius);
                let shrink: f64 = rng.random_range(0.0..=1.0);
                d.iter_mut().for_each(|x| *x *= shrink);
                d
            }
        };
        let step = cfg.step_fraction * radius;
        let mut last_improvement = 0;
        for it in 0..cfg.steps {
            let x: Vec<f64> = z.x.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let (y, value) = objective(&x, label_radius)?;
            if value > best {
                if value > best + 1e-12 * best.abs().max(1.0) {
                    last_improvement = it;
                }
                best = value;
            }
            if radius == 0.0 {
                break;
            }
            let (gx, _) = loss.gradients(&DataPoint::new(x, y))?;
            let Some(dir) = fgsm_direction(&gx, r) else { break };
            delta.iter_mut().zip(&dir).for_each(|(d, g)| *d += step * g);
            project_ball(&mut delta, r, radius);
        }
        if radius > 0.0 && cfg.steps > 10 && last_improvement >= cfg.steps - cfg.steps / 10 {
            quality = Quality::LowEstimate;
        }
    }
    for k in 0..cfg.boundary_samples {
        let feature_share = splits[k % splits.len()];
        let d = random_boundary_point(&mut rng, dim, r, feature_share * t);
        let x: Vec<f64> = z.x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let (_, value) = objective(&x, (1.0 - feature_share) * t / loss.cost.kappa())?;
        best = best.max(value);
    }
    Ok(RateEstimate { value: (best - base).max(0.0), quality })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(alpha: f64, theta: Vec<f64>, r: Norm) -> LossSpec {
        LossSpec::new(LossKind::LinearPowerRegression { alpha, theta }, CostConfig::features_only(r)).unwrap()
    }

    #[test]
    fn linear_rate_is_dual_norm_times_budget() {
        let loss = lin(1.0, vec![3.0, -4.0], Norm::LInf);
        let z = DataPoint::regression(vec![0.2, 0.1], 0.7);
        let (curve, q) = individual_rate(&loss, &z, &[0.0, 0.5, 1.0], &SearchConfig::default()).unwrap();
        assert_eq!(q, Quality::Exact);
        assert_eq!(curve.values(), &[0.0, 3.5, 7.0]);
    }

    #[test]
    fn quadratic_one_dimensional_rate() {
        let loss = LossSpec::new(
            LossKind::Custom(CustomLoss::new(|z| z.x[0] * z.x[0])),
            CostConfig::features_only(Norm::L2),
        )
        .unwrap();
        let z = DataPoint::regression(vec![1.0], 0.0);
        let est = estimate_rate_at(&loss, &z, 1.0, &SearchConfig::default()).unwrap();
        assert!((est.value - 3.0).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn power_bounds_examples() {
        assert_eq!(power_loss_rate_bounds(1.0, 2.0, 5.0, 0.5), (1.0, 1.0));
        assert_eq!(power_loss_rate_bounds(2.0, 1.0, 1.0, 1.0), (1.0, 3.0));
        assert_eq!(power_loss_rate_bounds(2.0, 1.0, 1.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn maximal_of_two_samples() {
        let a = Curve::from_samples(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let b = Curve::from_samples(&[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        let p = RateProfile::uniform(vec![a, b.clone()], Quality::Exact).unwrap();
        assert_eq!(p.maximal.values(), b.values());
        assert!(RateProfile::new(p.per_sample.clone(), vec![0.6, 0.6], Quality::Exact).is_err());
    }

    #[test]
    fn finite_support_steps() {
        let loss = [0.0, 1.0, 3.0];
        let cost = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let p = finite_support_profile(&loss, &[(0, 1.0)], &cost).unwrap();
        assert_eq!(p.per_sample[0].budgets(), &[0.0, 1.0, 2.0]);
        assert_eq!(p.per_sample[0].values(), &[0.0, 1.0, 3.0]);
    }

    #[test]
    fn l1_projection_lands_on_the_ball() {
        let mut v = vec![3.0, -1.0, 0.5];
        project_ball(&mut v, Norm::L1, 2.0);
        assert!((Norm::L1.of(&v) - 2.0).abs() < 1e-12);
        assert_eq!(v, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn label_channel_raises_linear_rate() {
        let loss = LossSpec::new(
            LossKind::LinearPowerRegression { alpha: 1.0, theta: vec![0.1] },
            CostConfig::new(Norm::L2, 0.5).unwrap(),
        )
        .unwrap();
        let est = estimate_rate_at(&loss, &DataPoint::regression(vec![0.0], 0.0), 1.0, &SearchConfig::default()).unwrap();
        assert_eq!(est.value, 2.0);
    }
}
