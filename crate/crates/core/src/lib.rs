//! Certified bounds on Wasserstein distributionally robust risk.
//!
//! The crate is organised bottom-up:
//!
//! - [`curves`]: sampled non-decreasing curves and their least concave and
//!   least star-shaped majorants.
//! - [`rates`]: growth-rate curves of a loss over a dataset.
//! - [`certificates`]: lower/upper bounds on the robust risk built from rates,
//!   plus the Lipschitz and gradient-dual baselines.
//! - [`advscore`]: closed-form adversarial scores for layer-wise certification.
//! - [`nn`]: a small feed-forward network with backprop and FGSM.
//! - [`complexity`]: Rademacher and adversarial Rademacher estimators and the
//!   concave complexity calculus.
//! - [`oracle`]: the exact robust risk on finite supports.

pub mod advscore;
pub mod certificates;
pub mod complexity;
pub mod cost;
pub mod curves;
pub mod ext;
pub mod nn;
pub mod oracle;
pub mod rates;

pub use cost::{CostConfig, DataPoint, Norm, Order};
pub use curves::{ConcaveCurve, Continuity, Curve, StarCurve, Tail};
