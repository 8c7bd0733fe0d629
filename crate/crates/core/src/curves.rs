//! Sampled non-decreasing curves on the budget axis and their majorants.
//!
//! A [`Curve`] stores exact values at its knots plus a [`Tail`] describing how
//! the function continues past the last knot. Two majorants are built on top:
//!
//! - [`least_concave_majorant`] returns the upper hull of the knots, which is
//!   piecewise linear and therefore exact between knots as well.
//! - [`StarCurve`] evaluates the least star-shaped majorant as the sup of
//!   `t·f(u)/u` over knots `u ≥ t`, the value at the largest knot `≤ t`, and
//!   the tail. Every candidate is attained by the sampled function, so the
//!   result never exceeds the majorant of the underlying function.

use crate::ext::{format_value, parse_value, tolerance};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Slope ratio above which a final window with an [`Tail::Infinite`] tail is
/// treated as superlinear growth.
pub const DIVERGENCE_FACTOR: f64 = 1.0;

const CONCAVITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve needs at least one sample")]
    EmptyInput,
    #[error("budget {0} is negative")]
    NegativeBudget(f64),
    #[error("budget {0} is not finite")]
    NonFiniteBudget(f64),
    #[error("budget {0} appears more than once")]
    DuplicateBudget(f64),
    #[error("curve must start at budget 0, first sample is at {0}")]
    MissingOrigin(f64),
    #[error("value at budget {0} is NaN")]
    NotANumber(f64),
    #[error("domain end {end} lies before the last knot {last}")]
    DomainTooShort { end: f64, last: f64 },
    #[error("transform exponent must be finite and at least 1, got {0}")]
    InvalidExponent(f64),
    #[error("curves are sampled on different grids")]
    GridMismatch,
    #[error("malformed curve csv at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Behaviour past the last knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tail {
    /// The value stays at its last sample.
    Constant,
    /// Linear continuation with the final segment's slope, measured in the
    /// native budget (before any [`Curve::p_transform`]).
    LastSlopeExtension,
    /// Unbounded growth whose rate is judged from the final knots. A final
    /// window steeper than the one before signals superlinear growth and an
    /// infinite concave majorant; otherwise the last chord is continued.
    Infinite,
}

/// What is known about a curve between its knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Continuity {
    /// Only monotonicity.
    Unknown,
    /// Right-continuous, so the right limit at a knot is the knot value.
    RightContinuous,
    /// Constant between knots and right-continuous.
    Steps,
}

/// A non-decreasing function sampled at strictly increasing budgets from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    ts: Vec<f64>,
    vs: Vec<f64>,
    domain_end: f64,
    tail: Tail,
    /// Knot budgets are native budgets raised to this power.
    budget_power: f64,
    continuity: Continuity,
}

impl Curve {
    /// Sorts the samples and enforces monotonicity by a running max.
    pub fn from_samples(pairs: &[(f64, f64)]) -> Result<Self, CurveError> {
        if pairs.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        for &(t, v) in pairs {
            if t.is_nan() || v.is_nan() {
                return Err(CurveError::NotANumber(t));
            }
            if t < 0.0 {
                return Err(CurveError::NegativeBudget(t));
            }
            if t.is_infinite() {
                return Err(CurveError::NonFiniteBudget(t));
            }
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CurveError::DuplicateBudget(w[0].0));
        }
        if sorted[0].0 != 0.0 {
            return Err(CurveError::MissingOrigin(sorted[0].0));
        }
        let mut ts = Vec::with_capacity(sorted.len());
        let mut vs = Vec::with_capacity(sorted.len());
        let mut running = 0.0_f64;
        for (t, v) in sorted {
            running = running.max(v);
            ts.push(t);
            vs.push(running);
        }
        Ok(Self {
            ts,
            vs,
            domain_end: f64::INFINITY,
            tail: Tail::Constant,
            budget_power: 1.0,
            continuity: Continuity::Unknown,
        })
    }

    pub fn with_continuity(mut self, continuity: Continuity) -> Self {
        self.continuity = continuity;
        self
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    /// Restricts the domain to `[0, end]`; the tail then only covers
    /// `(horizon, end]`.
    pub fn with_domain_end(mut self, end: f64) -> Result<Self, CurveError> {
        if end < self.horizon() {
            return Err(CurveError::DomainTooShort { end, last: self.horizon() });
        }
        self.domain_end = end;
        Ok(self)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.vs.iter().copied())
    }

    pub fn budgets(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// Budget of the last knot.
    pub fn horizon(&self) -> f64 {
        *self.ts.last().expect("curves are non-empty")
    }

    pub fn last_value(&self) -> f64 {
        *self.vs.last().expect("curves are non-empty")
    }

    pub fn budget_power(&self) -> f64 {
        self.budget_power
    }

    pub fn has_infinite_value(&self) -> bool {
        self.last_value().is_infinite()
    }

    fn chord_slope(&self, i: usize) -> f64 {
        (self.vs[i] - self.vs[i - 1]) / (self.ts[i] - self.ts[i - 1])
    }

    /// Final segment slope in the native budget.
    fn native_last_slope(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        if self.budget_power == 1.0 {
            return self.chord_slope(n - 1);
        }
        let root = 1.0 / self.budget_power;
        let dt = self.ts[n - 1].powf(root) - self.ts[n - 2].powf(root);
        (self.vs[n - 1] - self.vs[n - 2]) / dt
    }

    /// Value of the [`Tail::LastSlopeExtension`] continuation at `u`.
    fn extension(&self, u: f64) -> f64 {
        let s = self.native_last_slope();
        if s == 0.0 {
            return self.last_value();
        }
        let root = 1.0 / self.budget_power;
        self.last_value() + s * (u.powf(root) - self.horizon().powf(root))
    }

    /// Continuation of the last chord in the current budget variable.
    fn chord_extension(&self, u: f64) -> f64 {
        let n = self.len();
        if n < 2 {
            return self.last_value();
        }
        self.last_value() + self.chord_slope(n - 1) * (u - self.horizon())
    }

    /// Whether an [`Tail::Infinite`] tail grows superlinearly, using
    /// [`DIVERGENCE_FACTOR`].
    pub fn tail_diverges(&self) -> bool {
        self.tail_diverges_with(DIVERGENCE_FACTOR)
    }

    pub fn tail_diverges_with(&self, factor: f64) -> bool {
        if self.tail != Tail::Infinite {
            return false;
        }
        if self.has_infinite_value() {
            return true;
        }
        let n = self.len();
        match n {
            1 => false,
            2 => self.chord_slope(1) > 0.0,
            _ => {
                let prev = factor * self.chord_slope(n - 2);
                self.chord_slope(n - 1) > prev + tolerance(prev)
            }
        }
    }

    /// Value at the largest knot `≤ t`. Past the horizon the tail is followed
    /// only where it is an exact continuation, so this never over-estimates a
    /// non-decreasing function that agrees with the knots.
    pub fn eval_lower(&self, t: f64) -> f64 {
        if t >= self.horizon() {
            let t = t.min(self.domain_end);
            return match self.tail {
                Tail::LastSlopeExtension if t > self.horizon() => self.extension(t),
                _ => self.last_value(),
            };
        }
        let idx = self.ts.partition_point(|&x| x <= t);
        self.vs[idx.saturating_sub(1)]
    }

    /// Value at the smallest knot `≥ t`. Past the horizon the tail is
    /// followed, with [`Tail::Infinite`] evaluating to infinity.
    pub fn eval_upper(&self, t: f64) -> f64 {
        if t > self.horizon() {
            let t = t.min(self.domain_end);
            if t <= self.horizon() {
                return self.last_value();
            }
            return match self.tail {
                Tail::Constant => self.last_value(),
                Tail::LastSlopeExtension => self.extension(t),
                Tail::Infinite => f64::INFINITY,
            };
        }
        let idx = self.ts.partition_point(|&x| x < t);
        self.vs[idx]
    }

    /// Conservative right limit `lim_{u↓t} f(u)`: the value at the smallest
    /// knot strictly greater than `t`, unless [`Continuity`] says more.
    pub fn eval_right_limit(&self, t: f64) -> f64 {
        match self.continuity {
            Continuity::Steps if t < self.horizon() => return self.eval_lower(t),
            Continuity::Steps | Continuity::RightContinuous => {
                let at = self.ts.partition_point(|&x| x < t);
                if at < self.len() && self.ts[at] == t {
                    return self.vs[at];
                }
            }
            Continuity::Unknown => {}
        }
        let idx = self.ts.partition_point(|&x| x <= t);
        if idx < self.len() {
            self.vs[idx]
        } else {
            self.eval_upper(t.max(self.horizon()) + f64::EPSILON * t.abs().max(1.0))
        }
    }

    /// The curve `t ↦ f(t^{1/p})`, with knots moved to `t_k^p`.
    pub fn p_transform(&self, p: f64) -> Result<Curve, CurveError> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(CurveError::InvalidExponent(p));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        let mut ts: Vec<f64> = Vec::with_capacity(self.len());
        let mut vs: Vec<f64> = Vec::with_capacity(self.len());
        for (t, v) in self.knots() {
            let u = t.powf(p);
            if ts.last() == Some(&u) {
                *vs.last_mut().expect("paired with ts") = v;
            } else {
                ts.push(u);
                vs.push(v);
            }
        }
        Ok(Curve {
            ts,
            vs,
            domain_end: self.domain_end.powf(p),
            tail: self.tail,
            budget_power: self.budget_power * p,
            continuity: self.continuity,
        })
    }

    /// Pointwise maximum of curves sampled on the same grid.
    pub fn pointwise_max(curves: &[Curve]) -> Result<Curve, CurveError> {
        let first = curves.first().ok_or(CurveError::EmptyInput)?;
        let mut vs = first.vs.clone();
        let mut tail = first.tail;
        let mut domain_end = first.domain_end;
        let mut continuity = first.continuity;
        for c in &curves[1..] {
            if c.ts != first.ts || c.budget_power != first.budget_power {
                return Err(CurveError::GridMismatch);
            }
            for (m, v) in vs.iter_mut().zip(&c.vs) {
                *m = m.max(*v);
            }
            tail = stronger_tail(tail, c.tail);
            domain_end = domain_end.max(c.domain_end);
            continuity = weaker_continuity(continuity, c.continuity);
        }
        Ok(Curve {
            ts: first.ts.clone(),
            vs,
            domain_end,
            tail,
            budget_power: first.budget_power,
            continuity,
        })
    }

    /// `t,v` CSV of the knots.
    pub fn to_csv_string(&self) -> String {
        tv_csv_string(self.knots())
    }

    /// Reads a `t,v` CSV; the tail defaults to [`Tail::Constant`].
    pub fn from_csv_str(text: &str) -> Result<Curve, CurveError> {
        Curve::from_samples(&parse_tv_csv(text)?)
    }
}

fn weaker_continuity(a: Continuity, b: Continuity) -> Continuity {
    use Continuity::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (RightContinuous, _) | (_, RightContinuous) => RightContinuous,
        _ => Steps,
    }
}

fn stronger_tail(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (Infinite, _) | (_, Infinite) => Infinite,
        (LastSlopeExtension, _) | (_, LastSlopeExtension) => LastSlopeExtension,
        _ => Constant,
    }
}

/// Equivalent to [`Curve::from_samples`].
pub fn curve_from_samples(pairs: &[(f64, f64)]) -> Result<Curve, CurveError> {
    Curve::from_samples(pairs)
}

/// `0` followed by `count` log-spaced budgets covering six decades up to
/// `horizon`.
pub fn log_grid(horizon: f64, count: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if count == 0 {
        return grid;
    }
    if count == 1 {
        grid.push(horizon);
        return grid;
    }
    let decades = 6.0;
    for k in 0..count {
        let e = -decades + decades * k as f64 / (count - 1) as f64;
        grid.push(horizon * 10f64.powf(e));
    }
    *grid.last_mut().expect("non-empty") = horizon;
    grid
}

/// Default budget grid: 256 log-spaced knots over `(0, horizon]` plus 0.
pub fn default_grid(horizon: f64) -> Vec<f64> {
    log_grid(horizon, 256)
}

/// [`default_grid`] over `[0, horizon]` with `budgets` merged in as knots, so
/// rates are exact at the budgets that will be queried.
pub fn grid_with_budgets(horizon: f64, budgets: &[f64]) -> Vec<f64> {
    let mut grid = default_grid(horizon);
    grid.extend(budgets.iter().copied().filter(|b| *b > 0.0 && b.is_finite()));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Piecewise-linear concave majorant `𝒞_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveCurve {
    ts: Vec<f64>,
    vs: Vec<f64>,
    tail_slope: f64,
    infinite: bool,
}

impl ConcaveCurve {
    /// Builds a piecewise-linear curve through the given knots without
    /// checking concavity; see [`ConcaveCurve::is_concave`].
    pub fn from_knots(pairs: &[(f64, f64)], tail_slope: f64) -> Result<Self, CurveError> {
        if pairs.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CurveError::DuplicateBudget(w[0].0));
        }
        Ok(Self {
            ts: sorted.iter().map(|p| p.0).collect(),
            vs: sorted.iter().map(|p| p.1).collect(),
            tail_slope,
            infinite: false,
        })
    }

    /// The majorant that is infinite for every `t > 0`.
    pub fn infinite(origin_value: f64) -> Self {
        Self { ts: vec![0.0], vs: vec![origin_value], tail_slope: f64::INFINITY, infinite: true }
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.vs.iter().copied())
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.ts[0] {
            return self.vs[0];
        }
        if self.infinite {
            return f64::INFINITY;
        }
        let n = self.ts.len();
        let last = self.ts[n - 1];
        if t >= last {
            let extra = t - last;
            return if extra == 0.0 { self.vs[n - 1] } else { self.vs[n - 1] + self.tail_slope * extra };
        }
        let idx = self.ts.partition_point(|&x| x < t);
        if self.ts[idx] == t {
            return self.vs[idx];
        }
        let (t0, t1) = (self.ts[idx - 1], self.ts[idx]);
        let (v0, v1) = (self.vs[idx - 1], self.vs[idx]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Three-slope test over consecutive knots and the tail.
    pub fn is_concave(&self) -> bool {
        if self.infinite {
            return true;
        }
        let mut pts: Vec<(f64, f64)> = self.knots().collect();
        if self.tail_slope.is_finite() {
            let (t, v) = pts[pts.len() - 1];
            pts.push((t + 1.0, v + self.tail_slope));
        }
        is_concave_points(&pts)
    }

    pub fn to_csv_string(&self) -> String {
        tv_csv_string(self.knots())
    }
}

/// See [`ConcaveCurve::is_concave`].
pub fn is_concave(f: &ConcaveCurve) -> bool {
    f.is_concave()
}

/// Three-slope concavity test on points sorted by budget: slopes of
/// consecutive chords must not increase beyond a `1e-12` relative tolerance.
pub fn is_concave_points(points: &[(f64, f64)]) -> bool {
    points.windows(3).all(|w| {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        if s1 == f64::INFINITY || (s1.is_nan() && s2.is_nan()) {
            return true;
        }
        s2 <= s1 + CONCAVITY_TOL * 1f64.max(s1.abs()).max(s2.abs())
    })
}

/// Upper hull of points sorted by budget; collinear points are kept.
fn upper_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &c in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let below = (b.1 - a.1) * (c.0 - a.0) < (c.1 - a.1) * (b.0 - a.0);
            if below {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

fn segment_slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

/// Least concave majorant of `f`, including its tail.
pub fn least_concave_majorant(f: &Curve) -> ConcaveCurve {
    if f.has_infinite_value() || f.tail_diverges() {
        return ConcaveCurve::infinite(f.vs[0]);
    }
    let mut points: Vec<(f64, f64)> = f.knots().collect();
    let bounded = f.domain_end.is_finite();
    if bounded && f.domain_end > f.horizon() {
        let end = f.domain_end;
        let v = match f.tail {
            Tail::Constant => f.last_value(),
            Tail::LastSlopeExtension => f.extension(end),
            Tail::Infinite => f.chord_extension(end),
        };
        points.push((end, v));
    }
    let mut hull = upper_hull(&points);
    let n = hull.len();
    let ray = if bounded {
        if n >= 2 {
            segment_slope(hull[n - 2], hull[n - 1])
        } else {
            0.0
        }
    } else {
        match f.tail {
            Tail::Constant => 0.0,
            Tail::LastSlopeExtension => tangent_slope(f),
            Tail::Infinite => {
                if f.len() >= 2 {
                    f.chord_slope(f.len() - 1)
                } else {
                    0.0
                }
            }
        }
    };
    if !bounded {
        while hull.len() >= 2 && segment_slope(hull[hull.len() - 2], hull[hull.len() - 1]) < ray {
            hull.pop();
        }
    }
    ConcaveCurve {
        ts: hull.iter().map(|p| p.0).collect(),
        vs: hull.iter().map(|p| p.1).collect(),
        tail_slope: ray,
        infinite: false,
    }
}

/// Slope of the tangent to the last-slope continuation at the horizon, which
/// dominates the continuation because it is concave in the current budget.
fn tangent_slope(f: &Curve) -> f64 {
    let s = f.native_last_slope();
    if s == 0.0 || f.budget_power == 1.0 {
        return s;
    }
    let root = 1.0 / f.budget_power;
    s * root * f.horizon().powf(root - 1.0)
}

/// Evaluation of a star-shaped majorant, with a flag telling whether the sup
/// was attained beyond the last knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarValue {
    pub value: f64,
    pub tail_contributed: bool,
}

/// Least star-shaped majorant `𝒮_f(t) = sup_{u ≥ t} t·f(u)/u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarCurve {
    source: Curve,
    /// `max_{j ≥ k, t_j > 0} v_j / t_j`.
    suffix_ratio: Vec<f64>,
}

impl StarCurve {
    pub fn new(source: &Curve) -> Self {
        let n = source.len();
        let mut suffix_ratio = vec![0.0_f64; n + 1];
        for k in (0..n).rev() {
            let ratio = if source.ts[k] > 0.0 { source.vs[k] / source.ts[k] } else { 0.0 };
            suffix_ratio[k] = suffix_ratio[k + 1].max(ratio);
        }
        suffix_ratio.truncate(n);
        Self { source: source.clone(), suffix_ratio }
    }

    pub fn source(&self) -> &Curve {
        &self.source
    }

    /// Majorant values at the source knots.
    pub fn anchors(&self) -> Vec<(f64, f64)> {
        self.source.budgets().iter().map(|&t| (t, self.eval(t))).collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_detail(t).value
    }

    pub fn eval_detail(&self, t: f64) -> StarValue {
        let f = &self.source;
        if t <= 0.0 {
            return StarValue { value: 0.0, tail_contributed: false };
        }
        if f.has_infinite_value() {
            return StarValue { value: f64::INFINITY, tail_contributed: false };
        }
        let t = t.min(f.domain_end);
        let idx = f.ts.partition_point(|&x| x < t);
        let knot_best = if idx < f.len() { t * self.suffix_ratio[idx] } else { 0.0 };
        let at_or_below = f.eval_lower(t);
        let known = knot_best.max(at_or_below);
        let tail_best = if f.domain_end > f.horizon() || f.tail == Tail::Infinite {
            let lo = t.max(f.horizon());
            t * self.tail_ratio_sup(lo, f.domain_end)
        } else {
            0.0
        };
        if tail_best > known {
            StarValue { value: tail_best, tail_contributed: true }
        } else {
            StarValue { value: known, tail_contributed: false }
        }
    }

    /// `sup_{u ∈ [lo, hi]} h(u)/u` for the tail continuation `h`.
    fn tail_ratio_sup(&self, lo: f64, hi: f64) -> f64 {
        let f = &self.source;
        let v = f.last_value();
        match f.tail {
            Tail::Constant => v / lo,
            Tail::Infinite if f.tail_diverges() => f64::INFINITY,
            Tail::Infinite => {
                let s = if f.len() >= 2 { f.chord_slope(f.len() - 1) } else { 0.0 };
                linear_ratio_sup(v - s * f.horizon(), s, lo, hi)
            }
            Tail::LastSlopeExtension => {
                let s = f.native_last_slope();
                if f.len() < 2 || s <= 0.0 {
                    return v / lo;
                }
                let q = f.budget_power;
                if q == 1.0 {
                    return linear_ratio_sup(v - s * f.horizon(), s, lo, hi);
                }
                let root = 1.0 / q;
                let a = v - s * f.horizon().powf(root);
                let ratio = |u: f64| (a + s * u.powf(root)) / u;
                let mut best = ratio(lo);
                if a < 0.0 {
                    let stationary = (-a * q / (s * (q - 1.0))).powf(q);
                    best = best.max(ratio(stationary.clamp(lo, hi)));
                }
                if hi.is_finite() {
                    best = best.max(ratio(hi));
                }
                best
            }
        }
    }
}

/// `sup_{u ∈ [lo, hi]} (a + s·u)/u`, monotone in `u`.
fn linear_ratio_sup(a: f64, s: f64, lo: f64, hi: f64) -> f64 {
    if a >= 0.0 {
        a / lo + s
    } else if hi.is_finite() {
        a / hi + s
    } else {
        s
    }
}

/// `𝒮_f(t)`; see [`StarCurve`].
pub fn least_star_majorant(f: &Curve, t: f64) -> f64 {
    StarCurve::new(f).eval(t)
}

/// `sup_{τ ∈ [0, t]} F(t − τ) + c·τ`. For piecewise-linear `F` the sup is
/// attained at `τ ∈ {0, t}` or where `t − τ` is a knot, so this is exact.
pub fn sup_convolution_linear(f: &ConcaveCurve, c: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return f.eval(0.0);
    }
    if f.is_infinite() {
        return f64::INFINITY;
    }
    let mut best = f.eval(t).max(f.eval(0.0) + c * t);
    for (tk, vk) in f.knots() {
        if tk > 0.0 && tk < t {
            best = best.max(vk + c * (t - tk));
        }
    }
    best
}

/// `t,v` CSV text for a sequence of points.
pub fn tv_csv_string(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::from("t,v\n");
    for (t, v) in points {
        let _ = writeln!(out, "{},{}", format_value(t), format_value(v));
    }
    out
}

/// Parses `t,v` CSV text.
pub fn parse_tv_csv(text: &str) -> Result<Vec<(f64, f64)>, CurveError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t,v" => {}
        _ => return Err(CurveError::Csv { line: 1, message: "expected header \"t,v\"".into() }),
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let mut fields = line.split(',');
        let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(CurveError::Csv { line: line_no, message: "expected two fields".into() });
        };
        let parse = |s: &str| {
            parse_value(s).ok_or_else(|| CurveError::Csv { line: line_no, message: format!("invalid number {s:?}") })
        };
        points.push((parse(t)?, parse(v)?));
    }
    Ok(points)
}
