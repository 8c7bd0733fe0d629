//! Rademacher and adversarial Rademacher estimates, the ARC–RC and ACC–CC gap
//! bounds, and checks of the concave-complexity calculus on finite classes.

use crate::cost::{DataPoint, Norm};
use crate::curves::least_concave_majorant;
use crate::ext::approx_le;
use crate::rates::{finite_support_profile, RateError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DRAWS: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexityError {
    #[error("the parameter grid is empty")]
    EmptyClass,
    #[error("the sample is empty")]
    EmptySample,
    #[error("need at least one sign draw")]
    NoDraws,
    #[error("loss rows have different lengths")]
    RaggedLosses,
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Parameters of a norm-ball linear class `{x ↦ ⟨θ, x⟩ : ‖θ‖_* ≤ radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub radius: f64,
    /// Norm measuring `θ`, dual to the feature norm.
    pub dual: Norm,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub value: f64,
    #[serde(rename = "se")]
    pub std_error: f64,
    #[serde(rename = "draws")]
    pub n_sigma_draws: usize,
    #[serde(skip)]
    pub class_spec: Option<ClassSpec>,
}

/// Sign vector for draw `index`, from its own counter-based stream.
fn signs(seed: u64, index: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn summarize(samples: &[f64], class_spec: Option<ClassSpec>) -> ComplexityEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ComplexityEstimate { value: mean, std_error: (var / n).sqrt(), n_sigma_draws: samples.len(), class_spec }
}

/// Per-draw values `sup_θ (1/N) Σ σ_i l_θ(Z_i)`.
fn rc_samples(losses: &[Vec<f64>], draws: usize, seed: u64) -> Result<Vec<f64>, ComplexityError> {
    let n = losses.first().ok_or(ComplexityError::EmptyClass)?.len();
    if n == 0 {
        return Err(ComplexityError::EmptySample);
    }
    if losses.iter().any(|row| row.len() != n) {
        return Err(ComplexityError::RaggedLosses);
    }
    if draws == 0 {
        return Err(ComplexityError::NoDraws);
    }
    Ok((0..draws)
        .into_par_iter()
        .map(|d| {
            let sigma = signs(seed, d, n);
            losses
                .iter()
                .map(|row| row.iter().zip(&sigma).map(|(l, s)| l * s).sum::<f64>() / n as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Monte-Carlo Rademacher complexity of a finite class given as a
/// `Θ × N` loss matrix.
pub fn rademacher_mc(losses: &[Vec<f64>], draws: usize, seed: u64) -> Result<ComplexityEstimate, ComplexityError> {
    Ok(summarize(&rc_samples(losses, draws, seed)?, None))
}

/// Adversarial version: each loss is replaced by `l + Δ(Z_i, ε)` with the
/// supplied rates.
pub fn adversarial_rademacher_mc(
    losses: &[Vec<f64>],
    rates: &[Vec<f64>],
    draws: usize,
    seed: u64,
) -> Result<ComplexityEstimate, ComplexityError> {
    if rates.len() != losses.len() || rates.iter().zip(losses).any(|(r, l)| r.len() != l.len()) {
        return Err(ComplexityError::RaggedLosses);
    }
    let adversarial: Vec<Vec<f64>> =
        losses.iter().zip(rates).map(|(l, r)| l.iter().zip(r).map(|(a, b)| a + b).collect()).collect();
    rademacher_mc(&adversarial, draws, seed)
}

/// The class `{(x, y) ↦ 1 − y⟨θ, x⟩ : ‖θ‖_* ≤ radius}` on labels `y = ±1`,
/// a Lipschitz-1 hinge-type loss whose sup over the ball is explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHingeClass {
    /// Feature norm `r`; `θ` is measured in its dual.
    pub norm: Norm,
    pub radius: f64,
    pub sample: Vec<DataPoint>,
}

/// Paired RC and ARC estimates computed from the same sign draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedEstimate {
    pub rc: ComplexityEstimate,
    pub arc: ComplexityEstimate,
    /// Standard error of the per-draw difference `ARC − RC`.
    pub gap_std_error: f64,
}

impl LinearHingeClass {
    pub fn class_spec(&self) -> ClassSpec {
        ClassSpec { radius: self.radius, dual: self.norm.dual(), lipschitz: 1.0 }
    }

    /// Per draw, with `S = Σσ_i` and `v = (1/N) Σ σ_i y_i x_i`:
    /// `RC_σ = S/N + c‖v‖_r` and `ARC_σ = S/N + c·max(0, ‖v‖_r + εS/N)`.
    pub fn estimate(&self, eps: f64, draws: usize, seed: u64) -> Result<PairedEstimate, ComplexityError> {
        let n = self.sample.len();
        if n == 0 {
            return Err(ComplexityError::EmptySample);
        }
        if draws == 0 {
            return Err(ComplexityError::NoDraws);
        }
        let dim = self.sample[0].x.len();
        let pairs: Vec<(f64, f64)> = (0..draws)
            .into_par_iter()
            .map(|d| {
                let sigma = signs(seed, d, n);
                let mean_sign = sigma.iter().sum::<f64>() / n as f64;
                let mut v = vec![0.0; dim];
                for (z, s) in self.sample.iter().zip(&sigma) {
                    let w = s * z.y[0] / n as f64;
                    v.iter_mut().zip(&z.x).for_each(|(acc, x)| *acc += w * x);
                }
                let norm_v = self.norm.of(&v);
                let rc = mean_sign + self.radius * norm_v;
                let arc = mean_sign + self.radius * (norm_v + eps * mean_sign).max(0.0);
                (rc, arc)
            })
            .collect();
        let rc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let arc: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
        let spec = Some(self.class_spec());
        Ok(PairedEstimate { rc: summarize(&rc, spec), arc: summarize(&arc, spec), gap_std_error: summarize(&diff, None).std_error })
    }
}

/// `sup_θ Δ_θ^max(ε) / √N`.
pub fn arc_rc_gap_bound(sup_delta_max: f64, n: usize) -> f64 {
    sup_delta_max / (n.max(1) as f64).sqrt()
}

/// The ACC–CC gap bound is the global rate sup itself; unlike the ARC–RC
/// bound it does not shrink with `N`.
pub fn acc_cc_gap_bound(sup_rate_over_space: f64) -> f64 {
    sup_rate_over_space
}

/// `ε·Lip_f^K·Π‖W_k‖_r / √N` for a `K`-layer network.
pub fn mlp_gap_bound(layer_norms: &[f64], activation_lipschitz: f64, eps: f64, n: usize) -> f64 {
    let k = layer_norms.len() as i32;
    eps * activation_lipschitz.powi(k) * layer_norms.iter().product::<f64>() / (n.max(1) as f64).sqrt()
}

/// Slope of an ordinary least-squares line and its standard error.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    (slope, (sse / dof / sxx).sqrt())
}

/// A finite hypothesis class on a finite sample space: each member is a loss
/// vector over the support and the sample is a weighted set of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteClass {
    pub cost: Vec<Vec<f64>>,
    pub atoms: Vec<(usize, f64)>,
    pub members: Vec<Vec<f64>>,
}

impl FiniteClass {
    /// `𝒞_{Δ^max}(ε)` of one loss vector.
    pub fn member_complexity(&self, loss: &[f64], eps: f64) -> Result<f64, RateError> {
        let profile = finite_support_profile(loss, &self.atoms, &self.cost)?;
        Ok(least_concave_majorant(&profile.maximal).eval(eps))
    }

    /// `Ĉ(L, ε) = sup_θ 𝒞_{Δ_θ^max}(ε)`.
    pub fn concave_complexity(&self, eps: f64) -> Result<f64, RateError> {
        let mut best = 0.0_f64;
        for m in &self.members {
            best = best.max(self.member_complexity(m, eps)?);
        }
        Ok(best)
    }

    fn with_members(&self, members: Vec<Vec<f64>>) -> FiniteClass {
        FiniteClass { cost: self.cost.clone(), atoms: self.atoms.clone(), members }
    }

    /// `{c·l + b : l ∈ L}`.
    pub fn affine(&self, scale: f64, shift: f64) -> FiniteClass {
        self.with_members(self.members.iter().map(|m| m.iter().map(|l| scale * l + shift).collect()).collect())
    }

    /// The class together with `λ l_a + (1 − λ) l_b` for every pair and every
    /// `λ` on an evenly spaced grid of `points` weights.
    pub fn with_mixtures(&self, points: usize) -> FiniteClass {
        let mut members = self.members.clone();
        for a in 0..self.members.len() {
            for b in a + 1..self.members.len() {
                for k in 0..points {
                    let lambda = k as f64 / (points - 1).max(1) as f64;
                    members.push(
                        self.members[a].iter().zip(&self.members[b]).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect(),
                    );
                }
            }
        }
        self.with_members(members)
    }
}

/// A fixture for the contraction inequality: scores `F` over the support and
/// a Lipschitz outer loss applied to them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OuterLoss {
    /// `|s|`.
    Absolute,
    /// `max(0, 1 − s)`.
    Hinge,
    /// `c·tanh(s)`.
    ScaledTanh(f64),
}

impl OuterLoss {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            OuterLoss::Absolute => s.abs(),
            OuterLoss::Hinge => (1.0 - s).max(0.0),
            OuterLoss::ScaledTanh(c) => c * s.tanh(),
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            OuterLoss::Absolute | OuterLoss::Hinge => 1.0,
            OuterLoss::ScaledTanh(c) => c.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalculusCheck {
    pub property: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalculusReport {
    pub checks: Vec<CalculusCheck>,
}

impl CalculusReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_violation(&self) -> Option<&CalculusCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn within(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checks monotonicity in `ε`, subadditivity, affine scaling, class
/// monotonicity, convex-hull invariance and the contraction inequality. Each
/// property is recorded once per fixture with the first failing detail.
pub fn complexity_calculus_checks(
    fixtures: &[FiniteClass],
    outer: &[OuterLoss],
    eps_grid: &[f64],
) -> Result<CalculusReport, ComplexityError> {
    let mut checks = Vec::new();
    let mut record = |property: &str, failure: Option<String>| {
        checks.push(CalculusCheck {
            property: property.to_string(),
            passed: failure.is_none(),
            detail: failure.unwrap_or_default(),
        });
    };
    for (fi, class) in fixtures.iter().enumerate() {
        if class.members.is_empty() {
            return Err(ComplexityError::EmptyClass);
        }
        let values: Vec<f64> = eps_grid.iter().map(|&e| class.concave_complexity(e)).collect::<Result<_, _>>()?;

        let mut failure = None;
        for k in 1..values.len() {
            if !approx_le(values[k - 1], values[k]) {
                failure = Some(format!("fixture {fi}: Ĉ({}) = {} > Ĉ({}) = {}", eps_grid[k - 1], values[k - 1], eps_grid[k], values[k]));
                break;
            }
        }
        record("monotone", failure);

        let mut failure = None;
        'outer: for (i, &a) in eps_grid.iter().enumerate() {
            for (j, &b) in eps_grid.iter().enumerate().skip(i) {
                let joint = class.concave_complexity(a + b)?;
                if !approx_le(joint, values[i] + values[j]) {
                    failure = Some(format!("fixture {fi}: Ĉ({}) = {joint} > {}", a + b, values[i] + values[j]));
                    break 'outer;
                }
            }
        }
        record("subadditive", failure);

        let mut failure = None;
        for (scale, shift) in [(2.0, 0.5), (0.3, -1.0), (0.0, 4.0)] {
            let scaled = class.affine(scale, shift);
            for (k, &e) in eps_grid.iter().enumerate() {
                let v = scaled.concave_complexity(e)?;
                if !within(v, scale * values[k]) {
                    failure = Some(format!("fixture {fi}: Ĉ({scale}L + {shift}, {e}) = {v} ≠ {}", scale * values[k]));
                }
            }
        }
        record("affine_scaling", failure);

        let mut failure = None;
        if class.members.len() > 1 {
            let sub = class.with_members(class.members[..class.members.len() - 1].to_vec());
            for (k, &e) in eps_grid.iter().enumerate() {
                let v = sub.concave_complexity(e)?;
                if !approx_le(v, values[k]) {
                    failure = Some(format!("fixture {fi}: subclass Ĉ({e}) = {v} > {}", values[k]));
                }
            }
        }
        record("class_monotone", failure);

        let mut failure = None;
        let hull = class.with_mixtures(11);
        for (k, &e) in eps_grid.iter().enumerate() {
            let v = hull.concave_complexity(e)?;
            if !within(v, values[k]) {
                failure = Some(format!("fixture {fi}: hull Ĉ({e}) = {v} ≠ {}", values[k]));
            }
        }
        record("convex_hull", failure);

        let mut failure = None;
        for &ell in outer {
            let negated = class.affine(-1.0, 0.0);
            for m in &class.members {
                let composed: Vec<f64> = m.iter().map(|&s| ell.apply(s)).collect();
                for &e in eps_grid {
                    let lhs = class.member_complexity(&composed, e)?;
                    let rhs = ell.lipschitz() * class.concave_complexity(e)?.max(negated.concave_complexity(e)?);
                    if !approx_le(lhs, rhs) {
                        failure = Some(format!("fixture {fi}: {ell:?} gives {lhs} > {rhs} at ε = {e}"));
                    }
                }
            }
        }
        record("contraction", failure);
    }
    Ok(CalculusReport { checks })
}

/// Deterministic random fixtures: one-dimensional supports with `|z_i − z_j|`
/// costs, a few atoms and a few members.
pub fn calculus_fixtures(seed: u64, count: usize) -> Vec<FiniteClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let size = rng.random_range(4..=12);
            let mut points: Vec<f64> = (0..size).map(|_| rng.random_range(-2.0..2.0)).collect();
            points.sort_by(f64::total_cmp);
            let cost = points.iter().map(|a| points.iter().map(|b| (a - b).abs()).collect()).collect();
            let atom_count = rng.random_range(1..=size.min(4));
            let weights = crate::rates::uniform_weights(atom_count);
            let atoms = (0..atom_count).map(|k| (k * size / atom_count, weights[k])).collect();
            let member_count = rng.random_range(2..=4);
            let members = (0..member_count)
                .map(|_| {
                    let slope: f64 = rng.random_range(-2.0..2.0);
                    let curvature: f64 = rng.random_range(-1.0..1.0);
                    points.iter().map(|z| slope * z + curvature * z * z + rng.random_range(-0.2..0.2)).collect()
                })
                .collect();
            FiniteClass { cost, atoms, members }
        })
        .collect()
}
