//! Ground cost on the sample space, norms, transport order and data points.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("unsupported norm {0:?}; expected 1, 2 or inf")]
    UnknownNorm(String),
    #[error("label weight kappa must be positive, got {0}")]
    InvalidKappa(f64),
    #[error("transport order must be at least 1, got {0}")]
    InvalidOrder(f64),
}

/// Feature norm `‖·‖_r` with `r ∈ {1, 2, ∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// `‖a − b‖_r`.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Norm::LInf => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }

    /// Norm of the all-ones vector of length `n`, i.e. `n^{1/r}`.
    pub fn ones(self, n: usize) -> f64 {
        match self {
            Norm::L1 => n as f64,
            Norm::L2 => (n as f64).sqrt(),
            Norm::LInf => 1.0,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::LInf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = CostError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "Inf" | "infinity" => Ok(Norm::LInf),
            other => Err(CostError::UnknownNorm(other.to_string())),
        }
    }
}

/// Transport order `p ∈ [1, ∞]` of the Wasserstein ball.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Order(f64);

impl Order {
    pub const ONE: Order = Order(1.0);
    pub const INFINITY: Order = Order(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self, CostError> {
        if p >= 1.0 {
            Ok(Order(p))
        } else {
            Err(CostError::InvalidOrder(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> f64 {
        if self.0 == 1.0 {
            f64::INFINITY
        } else if self.is_infinite() {
            1.0
        } else {
            self.0 / (self.0 - 1.0)
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Order {
    type Err = CostError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = crate::ext::parse_value(s).ok_or(CostError::InvalidOrder(f64::NAN))?;
        Order::new(p)
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        crate::ext::Ext(self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = crate::ext::Ext::deserialize(d)?.0;
        Order::new(p).map_err(serde::de::Error::custom)
    }
}

/// A sample `z = (x, y)`: features and a label vector (length one for regression,
/// a point of the simplex for classification).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DataPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    pub fn regression(x: Vec<f64>, y: f64) -> Self {
        Self { x, y: vec![y] }
    }
}

/// Cost `d(z′, z) = ‖x′ − x‖_r + κ‖y′ − y‖₁`; `κ = ∞` forbids label moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub r: Norm,
    #[serde(with = "crate::ext::ext_f64")]
    kappa: f64,
}

impl CostConfig {
    pub fn new(r: Norm, kappa: f64) -> Result<Self, CostError> {
        if kappa > 0.0 {
            Ok(Self { r, kappa })
        } else {
            Err(CostError::InvalidKappa(kappa))
        }
    }

    /// Feature-only cost.
    pub fn features_only(r: Norm) -> Self {
        Self { r, kappa: f64::INFINITY }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn labels_fixed(&self) -> bool {
        self.kappa.is_infinite()
    }

    /// Marginal loss increase per unit of budget spent on labels in the
    /// worst case for `1`-Lipschitz label dependence: `1/κ`.
    pub fn label_rate(&self) -> f64 {
        if self.labels_fixed() {
            0.0
        } else {
            1.0 / self.kappa
        }
    }

    pub fn distance(&self, a: &DataPoint, b: &DataPoint) -> f64 {
        let dx = self.r.distance(&a.x, &b.x);
        let label_moved = a.y.iter().zip(&b.y).any(|(u, v)| u != v);
        if !label_moved {
            return dx;
        }
        if self.labels_fixed() {
            return f64::INFINITY;
        }
        dx + self.kappa * Norm::L1.distance(&a.y, &b.y)
    }

    /// Dual norm of a gradient `(g_x, g_y)` with respect to this cost:
    /// `max(‖g_x‖_{r*}, ‖g_y‖_∞ / κ)`.
    pub fn dual_norm(&self, gx: &[f64], gy: &[f64]) -> f64 {
        let feature = self.r.dual().of(gx);
        if self.labels_fixed() {
            feature
        } else {
            feature.max(Norm::LInf.of(gy) / self.kappa)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_pairs() {
        assert_eq!(Norm::L1.dual(), Norm::LInf);
        assert_eq!(Norm::L2.dual(), Norm::L2);
        assert_eq!(Norm::LInf.dual(), Norm::L1);
    }

    #[test]
    fn norms_of_a_vector() {
        let v = [3.0, -4.0];
        assert_eq!(Norm::L1.of(&v), 7.0);
        assert_eq!(Norm::L2.of(&v), 5.0);
        assert_eq!(Norm::LInf.of(&v), 4.0);
    }

    #[test]
    fn cost_adds_label_term() {
        let c = CostConfig::new(Norm::L2, 2.0).unwrap();
        let a = DataPoint::regression(vec![0.0, 0.0], 1.0);
        let b = DataPoint::regression(vec![3.0, 4.0], 1.5);
        assert_eq!(c.distance(&a, &b), 6.0);
        let fixed = CostConfig::features_only(Norm::L2);
        assert_eq!(fixed.distance(&a, &b), f64::INFINITY);
        assert!(CostConfig::new(Norm::L1, 0.0).is_err());
    }

    #[test]
    fn order_conjugates() {
        assert_eq!(Order::ONE.conjugate(), f64::INFINITY);
        assert_eq!(Order::INFINITY.conjugate(), 1.0);
        assert_eq!(Order::new(2.0).unwrap().conjugate(), 2.0);
        assert!(Order::new(0.5).is_err());
        assert_eq!("inf".parse::<Order>().unwrap(), Order::INFINITY);
    }
}
