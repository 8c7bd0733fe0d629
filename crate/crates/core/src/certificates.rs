//! Bounds on `R_p(ε) − R̂` from growth rates: the star-majorant lower bound
//! `lb_p`, the concave-majorant upper bound `cc_p`, and the Lipschitz and
//! gradient-dual baselines.

use crate::cost::Order;
use crate::curves::{least_concave_majorant, ConcaveCurve, Curve, CurveError, StarCurve};
use crate::ext::{ext_f64, ext_vec, mul0};
use crate::rates::RateProfile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack for ordering checks across `p`.
pub const ORDERING_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("budget grid is empty")]
    EmptyGrid,
    #[error("budgets must be positive and ascending, got {0}")]
    InvalidBudget(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A rate profile with its majorants built for one transport order.
#[derive(Debug, Clone)]
pub struct PreparedProfile {
    p: Order,
    weights: Vec<f64>,
    per_sample: Vec<Curve>,
    maximal: Curve,
    stars: Vec<StarCurve>,
    concave: Option<ConcaveCurve>,
    infinite: bool,
}

impl PreparedProfile {
    pub fn new(profile: &RateProfile, p: Order) -> Result<Self, CurveError> {
        if p.is_infinite() {
            let infinite = profile.maximal.has_infinite_value();
            return Ok(Self {
                p,
                weights: profile.weights.clone(),
                per_sample: profile.per_sample.clone(),
                maximal: profile.maximal.clone(),
                stars: Vec::new(),
                concave: None,
                infinite,
            });
        }
        let pv = p.value();
        let transformed: Vec<Curve> = profile.per_sample.iter().map(|c| c.p_transform(pv)).collect::<Result<_, _>>()?;
        let maximal = profile.maximal.p_transform(pv)?;
        let concave = least_concave_majorant(&maximal);
        let infinite = concave.is_infinite() || transformed.iter().any(|c| c.has_infinite_value() || c.tail_diverges());
        Ok(Self {
            p,
            weights: profile.weights.clone(),
            stars: transformed.iter().map(StarCurve::new).collect(),
            per_sample: transformed,
            maximal,
            concave: Some(concave),
            infinite,
        })
    }

    pub fn order(&self) -> Order {
        self.p
    }

    /// True when the robust risk is infinite for every positive budget.
    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    /// `lb_p(ε)`: `Σ μ_i 𝒮_{f_i}(ε^p)`, or `Σ μ_i Δ_i(ε)` for `p = ∞`.
    pub fn lower(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        if self.infinite {
            return f64::INFINITY;
        }
        if self.p.is_infinite() {
            return self.weights.iter().zip(&self.per_sample).map(|(w, c)| mul0(*w, c.eval_lower(eps))).sum();
        }
        let t = eps.powf(self.p.value());
        self.weights.iter().zip(&self.stars).map(|(w, s)| mul0(*w, s.eval(t))).sum()
    }

    /// Whether any per-sample star majorant at `ε^p` was attained beyond the
    /// last knot.
    pub fn lower_used_tail(&self, eps: f64) -> bool {
        if self.p.is_infinite() || eps <= 0.0 {
            return false;
        }
        let t = eps.powf(self.p.value());
        self.stars.iter().any(|s| s.eval_detail(t).tail_contributed)
    }

    /// `cc_p(ε)`: `𝒞_{f_max}(ε^p)`, or the right limit of `Δ_max` at `ε` for
    /// `p = ∞`.
    pub fn upper(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return self.upper_at_zero();
        }
        if self.infinite {
            return f64::INFINITY;
        }
        match &self.concave {
            None => self.maximal.eval_right_limit(eps),
            Some(c) => c.eval(eps.powf(self.p.value())),
        }
    }

    /// Value of the majorant at budget 0; positive only for rates that jump at
    /// the origin.
    pub fn upper_at_zero(&self) -> f64 {
        match &self.concave {
            None => self.maximal.eval_right_limit(0.0),
            Some(c) => c.eval(0.0),
        }
    }
}

pub fn lower_bound(profile: &RateProfile, p: Order, eps: f64) -> Result<f64, CurveError> {
    Ok(PreparedProfile::new(profile, p)?.lower(eps))
}

pub fn upper_bound(profile: &RateProfile, p: Order, eps: f64) -> Result<f64, CurveError> {
    Ok(PreparedProfile::new(profile, p)?.upper(eps))
}

/// `L·ε` with `0·∞ = 0`.
pub fn lipschitz_certificate(lipschitz: f64, eps: f64) -> f64 {
    mul0(lipschitz, eps)
}

/// `ε·(mean ‖g_i‖_*^q)^{1/q}` with `q` conjugate to `p`; `q = ∞` takes the max.
pub fn grad_dual_certificate(dual_norms: &[f64], p: Order, eps: f64) -> f64 {
    if dual_norms.is_empty() {
        return 0.0;
    }
    let q = p.conjugate();
    let aggregate = if q.is_infinite() {
        dual_norms.iter().cloned().fold(0.0, f64::max)
    } else {
        let mean = dual_norms.iter().map(|g| g.powf(q)).sum::<f64>() / dual_norms.len() as f64;
        mean.powf(1.0 / q)
    };
    mul0(eps, aggregate)
}

/// `sup_θ 𝒞_{Δ_θ^max}(ε)` over a finite set of parameters.
pub fn deterministic_generalization_gap(profiles: &[RateProfile], eps: f64) -> f64 {
    profiles
        .iter()
        .map(|p| least_concave_majorant(&p.maximal).eval(eps))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub p: Order,
    #[serde(with = "ext_vec")]
    pub eps: Vec<f64>,
    #[serde(with = "ext_vec")]
    pub lb: Vec<f64>,
    #[serde(with = "ext_vec")]
    pub cc: Vec<f64>,
    #[serde(with = "ext_vec")]
    pub lip: Vec<f64>,
    #[serde(with = "ext_vec")]
    pub grad_dual: Vec<f64>,
    pub finite: bool,
}

/// A report with the empirical risk and an optional score column, as written
/// by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedReport {
    #[serde(flatten)]
    pub report: CertificateReport,
    #[serde(with = "ext_f64")]
    pub empirical_risk: f64,
    #[serde(with = "ext_vec", default, skip_serializing_if = "Vec::is_empty")]
    pub advscore: Vec<f64>,
}

fn check_budgets(eps: &[f64]) -> Result<(), CertError> {
    if eps.is_empty() {
        return Err(CertError::EmptyGrid);
    }
    for (k, &e) in eps.iter().enumerate() {
        if !(e > 0.0 && e.is_finite()) || (k > 0 && e <= eps[k - 1]) {
            return Err(CertError::InvalidBudget(e));
        }
    }
    Ok(())
}

/// All certificates of `profile` at order `p` across `eps`.
pub fn certificate_report(
    profile: &RateProfile,
    p: Order,
    eps: &[f64],
    lipschitz: f64,
    grad_dual_norms: &[f64],
) -> Result<CertificateReport, CertError> {
    check_budgets(eps)?;
    let prepared = PreparedProfile::new(profile, p)?;
    Ok(CertificateReport {
        p,
        eps: eps.to_vec(),
        lb: eps.iter().map(|&e| prepared.lower(e)).collect(),
        cc: eps.iter().map(|&e| prepared.upper(e)).collect(),
        lip: eps.iter().map(|&e| lipschitz_certificate(lipschitz, e)).collect(),
        grad_dual: eps.iter().map(|&e| grad_dual_certificate(grad_dual_norms, p, e)).collect(),
        finite: !prepared.is_infinite(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingViolation {
    pub quantity: String,
    pub p_low: Order,
    pub p_high: Order,
    #[serde(with = "ext_f64")]
    pub eps: f64,
    #[serde(with = "ext_f64")]
    pub at_low: f64,
    #[serde(with = "ext_f64")]
    pub at_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub passed: bool,
    pub first_violation: Option<OrderingViolation>,
}

fn increased(low: f64, high: f64) -> bool {
    if high == f64::INFINITY {
        return low != f64::INFINITY;
    }
    high > low + ORDERING_SLACK * low.abs().max(1.0)
}

/// Checks that `lb_p(ε)` and `cc_p(ε)` do not increase along `p_list`.
pub fn p_ordering_check(profile: &RateProfile, eps: f64, p_list: &[Order]) -> Result<OrderingCheck, CurveError> {
    let values: Vec<(Order, f64, f64)> = p_list
        .iter()
        .map(|&p| PreparedProfile::new(profile, p).map(|pp| (p, pp.lower(eps), pp.upper(eps))))
        .collect::<Result<_, _>>()?;
    for w in values.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for (name, a, b) in [("lb", lo.1, hi.1), ("cc", lo.2, hi.2)] {
            if increased(a, b) {
                return Ok(OrderingCheck {
                    passed: false,
                    first_violation: Some(OrderingViolation {
                        quantity: name.to_string(),
                        p_low: lo.0,
                        p_high: hi.0,
                        eps,
                        at_low: a,
                        at_high: b,
                    }),
                });
            }
        }
    }
    Ok(OrderingCheck { passed: true, first_violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostConfig, DataPoint, Norm};
    use crate::curves::grid_with_budgets;
    use crate::rates::{maximal_rate, LossKind, LossSpec, SearchConfig};

    fn linear_profile(alpha: f64, theta: Vec<f64>, data: &[DataPoint], horizon: f64) -> RateProfile {
        let loss = LossSpec::new(LossKind::LinearPowerRegression { alpha, theta }, CostConfig::features_only(Norm::L2)).unwrap();
        maximal_rate(&loss, data, &grid_with_budgets(horizon, &[0.01, 0.3, 0.4, 0.5, 1.0]), &SearchConfig::default()).unwrap()
    }

    fn data() -> Vec<DataPoint> {
        vec![DataPoint::regression(vec![0.5, -0.2], 1.0), DataPoint::regression(vec![-1.0, 0.3], 0.0)]
    }

    #[test]
    fn linear_absolute_deviation_is_tight() {
        let profile = linear_profile(1.0, vec![3.0, 4.0], &data(), 2.0);
        for eps in [0.01, 0.3, 1.0] {
            assert!((lower_bound(&profile, Order::ONE, eps).unwrap() - 5.0 * eps).abs() < 1e-9);
            assert!((upper_bound(&profile, Order::ONE, eps).unwrap() - 5.0 * eps).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_loss_dichotomy() {
        let profile = linear_profile(2.0, vec![1.0, 0.0], &data(), 2.0);
        let one = PreparedProfile::new(&profile, Order::ONE).unwrap();
        assert!(one.is_infinite());
        assert_eq!(one.lower(0.5), f64::INFINITY);
        let two = PreparedProfile::new(&profile, Order::new(2.0).unwrap()).unwrap();
        assert!(!two.is_infinite());
        assert!(two.lower(0.5).is_finite() && two.upper(0.5).is_finite());
    }

    #[test]
    fn gradient_dual_examples() {
        assert!((grad_dual_certificate(&[1.0, 1.0], Order::ONE, 0.1) - 0.1).abs() < 1e-15);
        let v = grad_dual_certificate(&[1.0, 3.0], Order::new(2.0).unwrap(), 1.0);
        assert!((v - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(grad_dual_certificate(&[0.0, 0.0], Order::new(2.0).unwrap(), 1.0), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_certificate(2.0, 0.5), 1.0);
        assert_eq!(lipschitz_certificate(0.0, 0.5), 0.0);
    }

    #[test]
    fn report_serializes_expected_keys() {
        let profile = linear_profile(2.0, vec![1.0, 0.0], &data(), 2.0);
        let report = certificate_report(&profile, Order::ONE, &[0.1, 0.2], f64::INFINITY, &[1.0]).unwrap();
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 7);
        for k in ["p", "eps", "lb", "cc", "lip", "grad_dual", "finite"] {
            assert!(keys.contains(&k));
        }
        assert_eq!(json["cc"][0], "inf");
        assert!(certificate_report(&profile, Order::ONE, &[], 1.0, &[]).is_err());
    }

    #[test]
    fn two_parameter_gap_is_the_max() {
        let a = linear_profile(1.0, vec![1.0, 0.0], &data(), 2.0);
        let b = linear_profile(1.0, vec![0.0, 2.0], &data(), 2.0);
        let g = deterministic_generalization_gap(&[a, b], 0.5);
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordering_on_linear_profile() {
        let profile = linear_profile(1.0, vec![1.0, 1.0], &data(), 2.0);
        let ps = [Order::ONE, Order::new(2.0).unwrap(), Order::INFINITY];
        assert!(p_ordering_check(&profile, 0.4, &ps).unwrap().passed);
    }
}
