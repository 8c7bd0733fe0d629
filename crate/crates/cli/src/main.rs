use clap::{Args, Parser, Subcommand};
use drcert::{CostConfig, Norm, Order};
use drcert_cli::config::{parse_kappa, parse_list, parse_widths, ConfigError, ExperimentConfig, Task};
use drcert_cli::experiments as ex;
use drcert_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "drcert", version, about = "Distributionally robust risk certificates and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certificate report for a linear model or a saved network.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Network weights CSV as written by `regress`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Linear coefficients, comma separated, for `|y − ⟨θ, x⟩|`.
        #[arg(long)]
        theta: Option<String>,
    },
    /// Train a Tanh regressor and trace certificates per epoch.
    Regress {
        #[command(flatten)]
        common: Common,
        /// Hidden widths, comma separated.
        #[arg(long)]
        hidden: Option<String>,
    },
    /// FGSM training across budgets and image sizes; robust accuracy gaps.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Hidden widths, comma separated; empty for a linear model.
        #[arg(long)]
        hidden: Option<String>,
    },
    /// Rademacher gap measurements for linear classes and calculus checks.
    Complexity {
        #[command(flatten)]
        common: Common,
    },
    /// Exact risk of a discrete instance (JSON), or a randomized self-check.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Dataset path, or `synthetic:` / `synthetic:<n>` for regression.
    #[arg(long)]
    data: Option<String>,
    /// Feature norm: 1, 2 or inf.
    #[arg(long = "cost-r")]
    cost_r: Option<String>,
    /// Label weight in the cost; `inf` keeps labels fixed.
    #[arg(long)]
    kappa: Option<String>,
    /// Transport order, at least 1, or inf.
    #[arg(long)]
    p: Option<String>,
    /// Budgets, comma separated and ascending.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Train on FGSM-perturbed batches.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    adversarial: Option<bool>,
}

impl Common {
    fn into_config(self, task: Task) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::new(task, self.out);
        cfg.data = self.data;
        let r = match self.cost_r {
            Some(s) => s.parse::<Norm>().map_err(ConfigError::from)?,
            None => cfg.cost.r,
        };
        let kappa = match self.kappa {
            Some(s) => parse_kappa(&s)?,
            None => cfg.cost.kappa(),
        };
        cfg.cost = CostConfig::new(r, kappa).map_err(ConfigError::from)?;
        if let Some(p) = self.p {
            cfg.p = p.parse::<Order>().map_err(ConfigError::from)?;
        }
        if let Some(eps) = self.eps {
            cfg.eps_grid = parse_list(&eps)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if let Some(lr) = self.lr {
            cfg.lr = lr;
        }
        if let Some(adv) = self.adversarial {
            cfg.adversarial = adv;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Certify { common, model, theta } => {
            let mut cfg = common.into_config(Task::Certify)?;
            cfg.model = model;
            cfg.theta = theta.map(|t| parse_list(&t)).transpose()?;
            let result = ex::run_certify(&cfg)?;
            ex::write_certify(&cfg.out, &result)?;
            let r = &result.report.report;
            Ok(format!("certified {} budgets (finite: {}); wrote {}", r.eps.len(), r.finite, cfg.out.join("report.json").display()))
        }
        Command::Regress { common, hidden } => {
            let mut cfg = common.into_config(Task::RegressionDynamics)?;
            if let Some(h) = hidden {
                cfg.hidden = parse_widths(&h)?;
                cfg.validate()?;
            }
            let result = ex::run_regression_dynamics(&cfg)?;
            ex::write_regression(&cfg.out, &result)?;
            let last = result.trace.records.last().expect("epoch 0 is recorded");
            Ok(format!("trained {} epochs (test loss {:.4}); wrote {}", last.epoch, last.test_loss, cfg.out.join("trace.csv").display()))
        }
        Command::Classify { common, hidden } => {
            let mut cfg = common.into_config(Task::ClassificationGap)?;
            if let Some(h) = hidden {
                cfg.hidden = parse_widths(&h)?;
                cfg.validate()?;
            }
            let result = ex::run_classification_gap(&cfg)?;
            ex::write_classification(&cfg.out, &result)?;
            let flat = result.trend.iter().filter(|t| t.no_trend).count();
            Ok(format!(
                "{} runs; no gap trend in dimension at {}/{} budgets; wrote {}",
                result.runs.len(),
                flat,
                result.trend.len(),
                cfg.out.join("gap_table.csv").display()
            ))
        }
        Command::Complexity { common } => {
            let cfg = common.into_config(Task::ComplexityCheck)?;
            let result = ex::run_complexity_check(&cfg)?;
            ex::write_complexity(&cfg.out, &result)?;
            let within = result.rows.iter().filter(|r| r.within()).count();
            Ok(format!(
                "{within}/{} gap measurements within bound; calculus checks passed: {}; wrote {}",
                result.rows.len(),
                result.calculus.passed(),
                cfg.out.join("complexity.csv").display()
            ))
        }
        Command::Oracle { common } => {
            let cfg = common.into_config(Task::OracleValidate)?;
            let result = ex::run_oracle_validate(&cfg)?;
            ex::write_oracle(&cfg.out, &result)?;
            let summary = match &result {
                ex::OracleOutput::Instance(r) => format!("robust risk {}", drcert::ext::format_value(r.solution.value)),
                ex::OracleOutput::SelfCheck(c) => format!("self-check over {} instances passed: {}", c.trials, c.passed),
            };
            Ok(format!("{summary}; wrote {}", cfg.out.join("oracle.json").display()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
