//! Run configuration shared by all subcommands.

use drcert::cost::CostError;
use drcert::{CostConfig, Norm, Order};
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("budget list is empty")]
    EmptyBudgets,
    #[error("cannot parse budget {0:?}")]
    BadBudget(String),
    #[error("budgets must be finite, non-negative and strictly ascending; got {0}")]
    UnorderedBudgets(f64),
    #[error("certificates need positive budgets; got {0}")]
    ZeroBudget(f64),
    #[error("{0}")]
    Cost(#[from] CostError),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Certify,
    RegressionDynamics,
    ClassificationGap,
    ComplexityCheck,
    OracleValidate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub task: Task,
    /// Dataset path, or `synthetic:` / `synthetic:<n>` for the built-in generator.
    pub data: Option<String>,
    /// Network weights CSV for `certify`.
    pub model: Option<PathBuf>,
    /// Linear coefficients for `certify` when no model is given.
    pub theta: Option<Vec<f64>>,
    #[serde(skip)]
    pub cost: CostConfig,
    pub p: Order,
    pub eps_grid: Vec<f64>,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub epochs: usize,
    pub lr: f64,
    pub adversarial: bool,
}

impl ExperimentConfig {
    pub fn new(task: Task, out: PathBuf) -> Self {
        let (r, kappa, eps, epochs, lr) = match task {
            Task::RegressionDynamics => (Norm::L2, 1e-4, vec![0.001, 0.005, 0.01, 0.05], 50, 1e-4),
            Task::ClassificationGap => (Norm::LInf, f64::INFINITY, vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.1], 15, 0.5),
            Task::ComplexityCheck => (Norm::L2, f64::INFINITY, vec![0.02, 0.04, 0.06, 0.08, 0.1], 0, 0.0),
            Task::Certify | Task::OracleValidate => (Norm::L2, f64::INFINITY, vec![0.01, 0.05, 0.1], 0, 0.0),
        };
        Self {
            task,
            data: None,
            model: None,
            theta: None,
            cost: CostConfig::new(r, kappa).expect("defaults are valid"),
            p: Order::ONE,
            eps_grid: eps,
            hidden: if task == Task::ClassificationGap { Vec::new() } else { vec![16, 16] },
            seed: 0,
            out,
            epochs,
            lr,
            adversarial: task == Task::ClassificationGap,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_budgets(&self.eps_grid)?;
        if self.task == Task::Certify {
            if let Some(&e) = self.eps_grid.iter().find(|e| **e <= 0.0) {
                return Err(ConfigError::ZeroBudget(e));
            }
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(ConfigError::Invalid(format!("learning rate must be finite and non-negative, got {}", self.lr)));
        }
        if self.hidden.contains(&0) {
            return Err(ConfigError::NotPositive("hidden width"));
        }
        Ok(())
    }
}

fn check_budgets(eps: &[f64]) -> Result<(), ConfigError> {
    if eps.is_empty() {
        return Err(ConfigError::EmptyBudgets);
    }
    for (k, &e) in eps.iter().enumerate() {
        if !(e >= 0.0 && e.is_finite()) || (k > 0 && e <= eps[k - 1]) {
            return Err(ConfigError::UnorderedBudgets(e));
        }
    }
    Ok(())
}

/// Comma-separated list of numbers; an empty string is an empty list.
pub fn parse_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| ConfigError::BadBudget(s.to_string())))
        .collect()
}

pub fn parse_widths(text: &str) -> Result<Vec<usize>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| ConfigError::Invalid(format!("bad width {s:?}"))))
        .collect()
}

pub fn parse_kappa(text: &str) -> Result<f64, ConfigError> {
    drcert::ext::parse_value(text).ok_or_else(|| ConfigError::Invalid(format!("bad kappa {text:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_lists() {
        assert_eq!(parse_list("0.01, 0.1").unwrap(), vec![0.01, 0.1]);
        assert!(parse_list("0.1,x").is_err());
        assert_eq!(check_budgets(&[]), Err(ConfigError::EmptyBudgets));
        assert_eq!(check_budgets(&[0.1, 0.1]), Err(ConfigError::UnorderedBudgets(0.1)));
        let mut cfg = ExperimentConfig::new(Task::Certify, PathBuf::from("out"));
        cfg.eps_grid = vec![0.0, 0.1];
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroBudget(0.0)));
    }

    #[test]
    fn regression_defaults() {
        let cfg = ExperimentConfig::new(Task::RegressionDynamics, PathBuf::from("out"));
        assert_eq!(cfg.cost.r, Norm::L2);
        assert_eq!(cfg.cost.kappa(), 1e-4);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn kappa_accepts_inf() {
        assert_eq!(parse_kappa("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_kappa("1e-4").unwrap(), 1e-4);
    }
}
