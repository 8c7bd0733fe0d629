//! Closed-form adversarial scores: non-decreasing concave functions `F` with
//! `F(0) = 0` that bound how far a map's output can move under an input
//! perturbation of size `t`. Scores compose across layers, so a network is
//! certified by chaining per-layer scores and a head score.

use crate::cost::{CostConfig, Norm};
use crate::curves::{tv_csv_string, ConcaveCurve, CurveError};
use crate::nn::{opnorm, sigmoid, Activation, Head, Mlp};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

const GOLDEN_TOL: f64 = 1e-10;
const BARRON_A: f64 = 27.0 / 256.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdvScoreError {
    #[error("unknown activation {0:?}")]
    UnknownActivation(String),
    #[error("finite kappa needs a finite output bound M")]
    UnboundedOutput,
    #[error("not a valid adversarial score: {0}")]
    InvalidScore(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("head {0} does not match the requested score head")]
    HeadMismatch(Head),
}

/// Activations that have a dedicated score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivationKind {
    ReLU,
    Softplus,
    LogSoftmax,
    Sigmoid,
    Tanh,
    Softmax,
    Identity,
}

impl FromStr for ActivationKind {
    type Err = AdvScoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(ActivationKind::ReLU),
            "softplus" => Ok(ActivationKind::Softplus),
            "log_softmax" | "logsoftmax" => Ok(ActivationKind::LogSoftmax),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "softmax" => Ok(ActivationKind::Softmax),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            other => Err(AdvScoreError::UnknownActivation(other.to_string())),
        }
    }
}

impl From<Activation> for ActivationKind {
    fn from(a: Activation) -> Self {
        match a {
            Activation::ReLU => ActivationKind::ReLU,
            Activation::Tanh => ActivationKind::Tanh,
            Activation::Sigmoid => ActivationKind::Sigmoid,
            Activation::Identity => ActivationKind::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SaturatingKind {
    Sigmoid,
    Tanh,
    Softmax,
}

impl SaturatingKind {
    /// `φ(t/2) − φ(−t/2)` for the kind's own squashing function; the softmax
    /// reuses the sigmoid.
    fn base(self, t: f64) -> f64 {
        match self {
            SaturatingKind::Sigmoid | SaturatingKind::Softmax => sigmoid(t / 2.0) - sigmoid(-t / 2.0),
            SaturatingKind::Tanh => 2.0 * (t / 2.0).tanh(),
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            SaturatingKind::Sigmoid | SaturatingKind::Softmax => 0.25,
            SaturatingKind::Tanh => 1.0,
        }
    }
}

/// Robust regression losses `γ` applied to the absolute residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaKind {
    /// `c·u^α`.
    Holder { c: f64, alpha: f64 },
    /// `u²/2` up to `c`, then `c·u − c²/2`.
    Huber { c: f64 },
    /// `min(c²/2, u²/2)`.
    Truncated { c: f64 },
    /// `½·c²u²/(a c² + u²)` with `a = 27/256`.
    BarronRobust { c: f64 },
    /// `−u log u` up to `1/e`, then `1/e`.
    EntropyLike,
}

impl GammaKind {
    pub const ABSOLUTE: GammaKind = GammaKind::Holder { c: 1.0, alpha: 1.0 };

    pub fn value(self, u: f64) -> f64 {
        match self {
            GammaKind::Holder { c, alpha } => c * u.powf(alpha),
            GammaKind::Huber { c } => {
                if u <= c {
                    u * u / 2.0
                } else {
                    c * u - c * c / 2.0
                }
            }
            GammaKind::Truncated { c } => (u * u / 2.0).min(c * c / 2.0),
            GammaKind::BarronRobust { c } => 0.5 * c * c * u * u / (BARRON_A * c * c + u * u),
            GammaKind::EntropyLike => {
                let cap = (-1.0f64).exp();
                if u <= 0.0 {
                    0.0
                } else if u <= cap {
                    -u * u.ln()
                } else {
                    cap
                }
            }
        }
    }

    /// Right derivative of [`GammaKind::value`], finite everywhere (kinks at
    /// the origin use a tiny offset).
    pub fn derivative(self, u: f64) -> f64 {
        let u_pos = u.max(1e-12);
        match self {
            GammaKind::Holder { c, alpha } => c * alpha * u_pos.powf(alpha - 1.0),
            GammaKind::Huber { c } => u.min(c),
            GammaKind::Truncated { c } => {
                if u < c {
                    u
                } else {
                    0.0
                }
            }
            GammaKind::BarronRobust { c } => {
                let ac2 = BARRON_A * c * c;
                c * c * ac2 * u / (ac2 + u * u).powi(2)
            }
            GammaKind::EntropyLike => {
                if u < (-1.0f64).exp() {
                    -u_pos.ln() - 1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            GammaKind::Holder { c, alpha: 1.0 } => c,
            GammaKind::Holder { .. } | GammaKind::EntropyLike => f64::INFINITY,
            GammaKind::Huber { c } | GammaKind::Truncated { c } | GammaKind::BarronRobust { c } => c,
        }
    }

    fn validate(self) -> Result<(), AdvScoreError> {
        let positive = |c: f64| {
            if c > 0.0 && c.is_finite() {
                Ok(())
            } else {
                Err(AdvScoreError::InvalidParameter(format!("c must be positive, got {c}")))
            }
        };
        match self {
            GammaKind::Holder { c, alpha } => {
                positive(c)?;
                if !(alpha > 0.0) {
                    return Err(AdvScoreError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
                }
                if alpha > 1.0 {
                    return Err(AdvScoreError::InvalidScore(format!("Hölder loss with alpha {alpha} > 1 has no finite score")));
                }
                Ok(())
            }
            GammaKind::Huber { c } | GammaKind::Truncated { c } | GammaKind::BarronRobust { c } => positive(c),
            GammaKind::EntropyLike => Ok(()),
        }
    }

    /// `Γ(t) = sup_{s ≥ 0} γ(s + t) − γ(s)`.
    pub fn score(self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            GammaKind::Holder { alpha, .. } if alpha > 1.0 => f64::INFINITY,
            GammaKind::Holder { .. } | GammaKind::EntropyLike => self.value(t),
            GammaKind::Huber { c } => c * t,
            GammaKind::Truncated { c } => {
                if t <= c {
                    (2.0 * t * c - t * t) / 2.0
                } else {
                    c * c / 2.0
                }
            }
            GammaKind::BarronRobust { c } => barron_modulus(c, t),
        }
    }
}

/// The increment `γ(s + t) − γ(s)` of the Barron loss is largest for `s`
/// left of the peak of `γ′` at `c·√(a/3)`; it decreases in `s` beyond it.
fn barron_modulus(c: f64, t: f64) -> f64 {
    let gamma = GammaKind::BarronRobust { c };
    let gain = |s: f64| gamma.value(s + t) - gamma.value(s);
    let peak = c * (BARRON_A / 3.0).sqrt();
    const SAMPLES: usize = 64;
    let mut best_i = 0;
    let mut best = gain(0.0);
    for i in 1..=SAMPLES {
        let v = gain(peak * i as f64 / SAMPLES as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = peak * best_i.saturating_sub(1) as f64 / SAMPLES as f64;
    let hi = peak * (best_i + 1).min(SAMPLES) as f64 / SAMPLES as f64;
    best.max(golden_max(gain, lo, hi))
}

/// Maximum of a unimodal function on `[lo, hi]`, including both endpoints.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let endpoints = f(lo).max(f(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let tol = GOLDEN_TOL * hi.abs().max(1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    endpoints.max(f1).max(f2)
}

/// A score expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoreExpr {
    /// `a·t`.
    LinearGain(f64),
    /// Score of an element-wise squashing layer of the given width in `‖·‖_r`.
    Saturating { kind: SaturatingKind, width: usize, norm: Norm },
    Identity,
    Gamma(GammaKind),
    /// `outer ∘ inner`.
    Compose(Box<ScoreExpr>, Box<ScoreExpr>),
    /// `t ↦ sup_{τ ∈ [0, t]} inner(t − τ) + c·τ`.
    SupConvLinear(Box<ScoreExpr>, f64),
    /// Pointwise maximum; concave when the branches do not cross.
    PointwiseMax(Vec<ScoreExpr>),
}

impl ScoreExpr {
    pub fn compose(outer: ScoreExpr, inner: ScoreExpr) -> ScoreExpr {
        ScoreExpr::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn sup_conv(inner: ScoreExpr, c: f64) -> ScoreExpr {
        ScoreExpr::SupConvLinear(Box::new(inner), c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            ScoreExpr::LinearGain(a) => crate::ext::mul0(*a, t),
            ScoreExpr::Saturating { kind, width, norm } => {
                let scale = match norm {
                    Norm::L1 => *width as f64,
                    Norm::L2 => (*width as f64).sqrt(),
                    Norm::LInf => 1.0,
                };
                scale * kind.base(t / scale)
            }
            ScoreExpr::Identity => t,
            ScoreExpr::Gamma(g) => g.score(t),
            ScoreExpr::Compose(outer, inner) => outer.eval(inner.eval(t)),
            ScoreExpr::SupConvLinear(inner, c) => {
                if let Some(a) = inner.linear_gain() {
                    return a.max(*c) * t;
                }
                golden_max(|tau| inner.eval(t - tau) + c * tau, 0.0, t)
            }
            ScoreExpr::PointwiseMax(items) => items.iter().map(|e| e.eval(t)).fold(0.0, f64::max),
        }
    }

    /// `Some(a)` when the expression is exactly `t ↦ a·t`.
    pub fn linear_gain(&self) -> Option<f64> {
        match self {
            ScoreExpr::LinearGain(a) => Some(*a),
            ScoreExpr::Identity => Some(1.0),
            ScoreExpr::Gamma(GammaKind::Huber { c }) => Some(*c),
            ScoreExpr::Gamma(GammaKind::Holder { c, alpha }) if *alpha == 1.0 => Some(*c),
            ScoreExpr::Compose(outer, inner) => Some(outer.linear_gain()? * inner.linear_gain()?),
            ScoreExpr::SupConvLinear(inner, c) => Some(inner.linear_gain()?.max(*c)),
            ScoreExpr::PointwiseMax(items) => {
                items.iter().map(ScoreExpr::linear_gain).try_fold(0.0, |m, a| Some(f64::max(m, a?)))
            }
            _ => None,
        }
    }

    /// Slope at the origin, an upper bound on every chord slope.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ScoreExpr::LinearGain(a) => *a,
            ScoreExpr::Saturating { kind, .. } => kind.lipschitz(),
            ScoreExpr::Identity => 1.0,
            ScoreExpr::Gamma(g) => g.lipschitz(),
            ScoreExpr::Compose(outer, inner) => crate::ext::mul0(outer.lipschitz(), inner.lipschitz()),
            ScoreExpr::SupConvLinear(inner, c) => inner.lipschitz().max(*c),
            ScoreExpr::PointwiseMax(items) => items.iter().map(ScoreExpr::lipschitz).fold(0.0, f64::max),
        }
    }

    /// False for nodes that are not finite scores (Hölder exponent above 1).
    pub fn is_valid(&self) -> bool {
        match self {
            ScoreExpr::Gamma(g) => g.validate().is_ok(),
            ScoreExpr::Compose(o, i) => o.is_valid() && i.is_valid(),
            ScoreExpr::SupConvLinear(i, _) => i.is_valid(),
            ScoreExpr::PointwiseMax(items) => items.iter().all(ScoreExpr::is_valid),
            _ => true,
        }
    }

    /// Samples the score on `grid`; the tail continues with the last chord slope.
    pub fn to_curve(&self, grid: &[f64]) -> Result<ConcaveCurve, CurveError> {
        let pts: Vec<(f64, f64)> = grid.iter().map(|&t| (t, self.eval(t))).collect();
        let tail = match pts.len() {
            0 | 1 => 0.0,
            n => (pts[n - 1].1 - pts[n - 2].1) / (pts[n - 1].0 - pts[n - 2].0),
        };
        ConcaveCurve::from_knots(&pts, tail.max(0.0))
    }

    /// `t,v` CSV of the score on `grid`.
    pub fn to_csv_string(&self, grid: &[f64]) -> String {
        tv_csv_string(grid.iter().map(|&t| (t, self.eval(t))))
    }
}

impl fmt::Display for ScoreExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreExpr::LinearGain(a) => write!(f, "{a}·t"),
            ScoreExpr::Saturating { kind, width, norm } => write!(f, "{kind:?}[n={width}, r={norm}]"),
            ScoreExpr::Identity => f.write_str("t"),
            ScoreExpr::Gamma(g) => write!(f, "{g:?}"),
            ScoreExpr::Compose(o, i) => write!(f, "{o} ∘ {i}"),
            ScoreExpr::SupConvLinear(i, c) => write!(f, "supconv({i}, {c})"),
            ScoreExpr::PointwiseMax(items) => {
                f.write_str("max(")?;
                for (k, e) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Gain of `o ↦ ⟨y, −log softmax(o)⟩` for a fixed label `y` on the simplex:
/// the gradient is `softmax(o) − y`, whose dual norm is at most 1, `√2` or 2.
pub fn log_softmax_head_gain(r: Norm) -> f64 {
    match r {
        Norm::L1 => 1.0,
        Norm::L2 => std::f64::consts::SQRT_2,
        Norm::LInf => 2.0,
    }
}

/// Score of an element-wise activation layer of width `width`. Log-softmax is
/// scored together with the label inner product that consumes it.
pub fn activation_score(kind: ActivationKind, width: usize, r: Norm) -> Result<ScoreExpr, AdvScoreError> {
    if width == 0 {
        return Err(AdvScoreError::InvalidParameter("width must be at least 1".into()));
    }
    Ok(match kind {
        ActivationKind::ReLU | ActivationKind::Softplus | ActivationKind::Identity => ScoreExpr::Identity,
        ActivationKind::LogSoftmax => ScoreExpr::LinearGain(log_softmax_head_gain(r)),
        ActivationKind::Sigmoid => ScoreExpr::Saturating { kind: SaturatingKind::Sigmoid, width, norm: r },
        ActivationKind::Tanh => ScoreExpr::Saturating { kind: SaturatingKind::Tanh, width, norm: r },
        ActivationKind::Softmax => ScoreExpr::Saturating { kind: SaturatingKind::Sigmoid, width, norm: r },
    })
}

pub fn linear_layer_score(w: &DMatrix<f64>, r: Norm) -> ScoreExpr {
    ScoreExpr::LinearGain(opnorm(w, r))
}

/// Score of the margin map `x ↦ (max_{j≠i} x_j − x_i)_i` on `classes` outputs.
/// The Jacobian has one `−1` and one `+1` per row; the bound covers every
/// such pattern.
pub fn margin_loss_score(r: Norm, classes: usize) -> Result<ScoreExpr, AdvScoreError> {
    if classes < 2 {
        return Err(AdvScoreError::InvalidParameter("margin loss needs at least two classes".into()));
    }
    let gain = match r {
        Norm::LInf => 2.0,
        Norm::L1 => opnorm(&worst_margin_jacobian(classes), Norm::L1),
        Norm::L2 => (2.0 * classes as f64).sqrt(),
    };
    Ok(ScoreExpr::LinearGain(gain))
}

/// Jacobian pattern where every row's runner-up is class 0 (class 1 for
/// row 0), which maximizes the column sums.
pub fn worst_margin_jacobian(classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(classes, classes, |i, j| {
        let runner_up = if i == 0 { 1 } else { 0 };
        if j == i {
            -1.0
        } else if j == runner_up {
            1.0
        } else {
            0.0
        }
    })
}

pub fn compose(outer: ScoreExpr, inner: ScoreExpr) -> ScoreExpr {
    ScoreExpr::compose(outer, inner)
}

/// Classification score: `F` for fixed labels, otherwise the sup-convolution
/// with the label channel of slope `M/κ`.
pub fn classification_head_score(f: ScoreExpr, cost: &CostConfig, output_bound: f64) -> Result<ScoreExpr, AdvScoreError> {
    if cost.labels_fixed() {
        return Ok(f);
    }
    if !output_bound.is_finite() {
        return Err(AdvScoreError::UnboundedOutput);
    }
    Ok(ScoreExpr::sup_conv(f, output_bound / cost.kappa()))
}

pub fn gamma_score(kind: GammaKind) -> Result<ScoreExpr, AdvScoreError> {
    kind.validate()?;
    Ok(ScoreExpr::Gamma(kind))
}

/// Regression score `Γ ∘ F`, with the label channel of slope `1/κ` folded in
/// by sup-convolution when labels may move.
pub fn regression_head_score(f: ScoreExpr, gamma: ScoreExpr, cost: &CostConfig) -> ScoreExpr {
    if cost.labels_fixed() {
        ScoreExpr::compose(gamma, f)
    } else {
        ScoreExpr::compose(gamma, ScoreExpr::sup_conv(f, 1.0 / cost.kappa()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MlpHead {
    /// `⟨y, −log softmax(f(x))⟩` with `‖−log softmax(f(x))‖_∞ ≤ output_bound`.
    Classification { output_bound: f64 },
    /// `γ(|y − f(x)|)`.
    Regression { gamma: GammaKind },
}

/// Score of the network body `x ↦ f(x)`: layer gains interleaved with
/// activation scores.
pub fn network_score(net: &Mlp, r: Norm) -> ScoreExpr {
    let mut expr = ScoreExpr::Identity;
    for layer in net.layers() {
        expr = ScoreExpr::compose(linear_layer_score(&layer.weights, r), expr);
        let act = activation_score(layer.activation.into(), layer.output_dim(), r).expect("width is positive");
        if act != ScoreExpr::Identity {
            expr = ScoreExpr::compose(act, expr);
        }
    }
    expr
}

/// Certified score of the loss of `net` under `cost`.
pub fn mlp_score(net: &Mlp, cost: &CostConfig, head: MlpHead) -> Result<ScoreExpr, AdvScoreError> {
    let body = network_score(net, cost.r);
    match head {
        MlpHead::Classification { output_bound } => {
            if net.head() != Head::LogSoftmaxInner {
                return Err(AdvScoreError::HeadMismatch(net.head()));
            }
            let f = ScoreExpr::compose(ScoreExpr::LinearGain(log_softmax_head_gain(cost.r)), body);
            classification_head_score(f, cost, output_bound)
        }
        MlpHead::Regression { gamma } => {
            if net.output_dim() != 1 {
                return Err(AdvScoreError::HeadMismatch(net.head()));
            }
            Ok(regression_head_score(body, gamma_score(gamma)?, cost))
        }
    }
}
