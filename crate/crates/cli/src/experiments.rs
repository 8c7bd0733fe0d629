//! Experiment drivers behind each subcommand.

use crate::config::{ConfigError, ExperimentConfig};
use crate::ingest::{self, LabeledImage, CLASSES};
use crate::output::{write_atomic, write_json};
use crate::{synth, CliError};
use drcert::advscore::{gamma_score, log_softmax_head_gain, mlp_score, regression_head_score, GammaKind, MlpHead, ScoreExpr};
use drcert::certificates::{certificate_report, grad_dual_certificate, ExtendedReport};
use drcert::complexity::{
    arc_rc_gap_bound, calculus_fixtures, complexity_calculus_checks, ols_slope, CalculusReport, LinearHingeClass, OuterLoss,
    DEFAULT_DRAWS,
};
use drcert::curves::{grid_with_budgets, least_concave_majorant, log_grid};
use drcert::nn::{evaluate, train, Activation, CertColumns, Head, Layer, Mlp, TrainConfig, TrainingTrace};
use drcert::oracle::{dr_risk_enumerated, dr_risk_exact, wp_ordering_check, DiscreteInstance, OracleSolution, SupportPoint};
use drcert::rates::{empirical_risk, maximal_rate, LossKind, LossSpec, Quality, SearchConfig};
use drcert::{CostConfig, DataPoint, Norm, Order};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cell::RefCell;
use std::path::Path;

/// Knots of the search-based rate grid besides the budgets themselves.
const SEARCH_GRID_KNOTS: usize = 12;
pub const CURVES_HEADER: &str = "t,delta_max,concave_majorant,advscore";
pub const BUDGET_HEADER: &str = "epoch,eps,cert_lip,cert_grad_dual,cert_advscore";
pub const GAP_HEADER: &str =
    "side,dim,eps,runs,train_acc_mean,train_acc_std,test_acc_mean,test_acc_std,gap_mean,gap_std";
pub const RUNS_HEADER: &str = "side,dim,eps,seed,train_acc,test_acc,gap";
pub const TREND_HEADER: &str = "eps,slope,slope_se,no_trend";
pub const COMPLEXITY_HEADER: &str = "dim,n,eps,rc,rc_se,arc,arc_se,gap,gap_se,bound,within";
pub const SIDES: [usize; 3] = [8, 14, 16];
pub const GAP_SEEDS: u64 = 10;
const GAP_TRAIN: usize = 500;
const GAP_TEST: usize = 500;
const ORACLE_TRIALS: usize = 500;

fn fmt(v: f64) -> String {
    drcert::ext::format_value(v)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------- certify

/// What is being certified.
#[derive(Debug, Clone)]
pub enum Model {
    /// `|y − ⟨θ, x⟩|`.
    Linear(Vec<f64>),
    Network(Mlp),
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutput {
    #[serde(flatten)]
    pub report: ExtendedReport,
    pub rate_quality: Quality,
    #[serde(skip)]
    pub curves_csv: String,
}

pub fn load_model(cfg: &ExperimentConfig) -> Result<Model, CliError> {
    match (&cfg.model, &cfg.theta) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ingest::IngestError::Io { path: path.clone(), source })?;
            Mlp::from_weights_csv(&text).map(Model::Network).map_err(|e| ingest::IngestError::Invalid(e.to_string()).into())
        }
        (None, Some(theta)) => Ok(Model::Linear(theta.clone())),
        (None, None) => Err(ConfigError::Invalid("certify needs --model or --theta".into()).into()),
    }
}

fn load_points(cfg: &ExperimentConfig, model: &Model) -> Result<Vec<DataPoint>, CliError> {
    let source = cfg.data.as_deref().ok_or_else(|| ConfigError::Invalid("--data is required".into()))?;
    let points = match model {
        Model::Network(net) if net.head() == Head::LogSoftmaxInner => {
            let side = (net.input_dim() as f64).sqrt().round() as usize;
            if side * side != net.input_dim() {
                return Err(ConfigError::Invalid(format!("input size {} is not a square image", net.input_dim())).into());
            }
            ingest::ingest_classification(Path::new(source), side)?.iter().map(|im| im.to_point(CLASSES)).collect()
        }
        _ => ingest::ingest_regression(source, false, cfg.seed)?,
    };
    let want = match model {
        Model::Linear(theta) => theta.len(),
        Model::Network(net) => net.input_dim(),
    };
    if let Some(p) = points.iter().find(|p| p.x.len() != want) {
        return Err(ingest::IngestError::Invalid(format!("model expects {want} features, data has {}", p.x.len())).into());
    }
    Ok(points)
}

/// Bound on `‖−log softmax f(x)‖_∞` within `radius` of the data.
fn log_softmax_output_bound(net: &Mlp, points: &[DataPoint], r: Norm, radius: f64) -> Result<f64, CliError> {
    let mut range: f64 = 0.0;
    for p in points {
        let out = net.forward(&p.x).map_err(CliError::numeric)?;
        let (lo, hi) = out.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        range = range.max(hi - lo);
    }
    let classes = net.output_dim() as f64;
    Ok(range + classes.ln() + 2.0 * net.lipschitz_product(r) * radius)
}

/// Loss, certified score and Lipschitz constant of a model under `cost`.
fn model_setup(
    model: &Model,
    cost: CostConfig,
    points: &[DataPoint],
    horizon: f64,
) -> Result<(LossSpec, ScoreExpr, f64), CliError> {
    let label_rate = cost.label_rate();
    let (kind, score, lipschitz) = match model {
        Model::Linear(theta) => {
            let gain = cost.r.dual().of(theta);
            let score = regression_head_score(ScoreExpr::LinearGain(gain), gamma_score(GammaKind::ABSOLUTE).map_err(CliError::numeric)?, &cost);
            (LossKind::LinearPowerRegression { alpha: 1.0, theta: theta.clone() }, score, gain.max(label_rate))
        }
        Model::Network(net) => match net.head() {
            Head::AbsDeviation => {
                let gamma = GammaKind::ABSOLUTE;
                let score = mlp_score(net, &cost, MlpHead::Regression { gamma }).map_err(CliError::numeric)?;
                let lip = gamma.lipschitz() * net.lipschitz_product(cost.r).max(label_rate);
                (LossKind::MlpRegression { net: net.clone(), gamma }, score, lip)
            }
            Head::LogSoftmaxInner => {
                let bound = log_softmax_output_bound(net, points, cost.r, horizon)?;
                let score = mlp_score(net, &cost, MlpHead::Classification { output_bound: bound }).map_err(CliError::numeric)?;
                let lip = (log_softmax_head_gain(cost.r) * net.lipschitz_product(cost.r)).max(bound * label_rate);
                (LossKind::MlpClassification(net.clone()), score, lip)
            }
        },
    };
    let loss = LossSpec::new(kind, cost).map_err(CliError::numeric)?;
    Ok((loss, score, lipschitz))
}

pub fn run_certify(cfg: &ExperimentConfig) -> Result<CertifyOutput, CliError> {
    cfg.validate()?;
    let model = load_model(cfg)?;
    let points = load_points(cfg, &model)?;
    certify_points(cfg, &model, &points)
}

pub fn certify_points(cfg: &ExperimentConfig, model: &Model, points: &[DataPoint]) -> Result<CertifyOutput, CliError> {
    cfg.validate()?;
    let eps = &cfg.eps_grid;
    let horizon = 2.0 * eps.last().copied().unwrap_or(1.0);
    let (loss, score, lipschitz) = model_setup(model, cfg.cost, points, horizon)?;
    let grid = if loss.is_closed_form() {
        grid_with_budgets(horizon, eps)
    } else {
        let mut g = log_grid(horizon, SEARCH_GRID_KNOTS);
        g.extend(eps.iter().copied());
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let search = SearchConfig { seed: cfg.seed, ..SearchConfig::default() };
    let profile = maximal_rate(&loss, points, &grid, &search).map_err(CliError::numeric)?;
    let dual_norms = points.iter().map(|z| loss.gradient_dual_norm(z)).collect::<Result<Vec<_>, _>>().map_err(CliError::numeric)?;
    let report = certificate_report(&profile, cfg.p, eps, lipschitz, &dual_norms).map_err(CliError::numeric)?;
    let risk = empirical_risk(&loss, points, &profile.weights).map_err(CliError::numeric)?;
    let hull = least_concave_majorant(&profile.maximal);
    let mut curves_csv = format!("{CURVES_HEADER}\n");
    for (t, v) in profile.maximal.knots() {
        curves_csv.push_str(&format!("{},{},{},{}\n", fmt(t), fmt(v), fmt(hull.eval(t)), fmt(score.eval(t))));
    }
    Ok(CertifyOutput {
        report: ExtendedReport { report, empirical_risk: risk, advscore: eps.iter().map(|&e| score.eval(e)).collect() },
        rate_quality: profile.quality,
        curves_csv,
    })
}

pub fn write_certify(out: &Path, result: &CertifyOutput) -> Result<(), CliError> {
    write_json(&out.join("report.json"), result)?;
    write_atomic(&out.join("curves.csv"), result.curves_csv.as_bytes())?;
    Ok(())
}

// ------------------------------------------------------------- regression

#[derive(Debug, Clone)]
pub struct RegressionOutput {
    pub trace: TrainingTrace,
    pub budget_csv: String,
    /// `(epoch, eps, lipschitz, grad_dual, advscore)` rows.
    pub budget_rows: Vec<(usize, f64, CertColumns)>,
    pub net: Mlp,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Tanh body between frozen layers that standardize inputs and restore the
/// output scale, so the loss and every certificate stay in data units.
pub fn standardized_regressor(train: &[DataPoint], hidden: &[usize], rng: &mut ChaCha8Rng) -> Result<Mlp, CliError> {
    let dim = train[0].x.len();
    let stats: Vec<(f64, f64)> = (0..dim).map(|k| mean_std(train.iter().map(move |p| p.x[k]))).collect();
    let scale: Vec<f64> = stats.iter().map(|s| if s.1 > 0.0 { 1.0 / s.1 } else { 1.0 }).collect();
    let input = Layer::new(
        DMatrix::from_diagonal(&DVector::from_vec(scale.clone())),
        DVector::from_iterator(dim, stats.iter().zip(&scale).map(|(s, c)| -s.0 * c)),
        Activation::Identity,
    )
    .frozen();
    let (y_mean, y_std) = mean_std(train.iter().map(|p| p.y[0]));
    let output = Layer::new(DMatrix::from_element(1, 1, y_std.max(f64::MIN_POSITIVE)), DVector::from_element(1, y_mean), Activation::Identity).frozen();
    let mut sizes = vec![dim];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let mut acts = vec![Activation::Tanh; hidden.len()];
    acts.push(Activation::Identity);
    let body = Mlp::random(&sizes, &acts, Head::AbsDeviation, rng).map_err(CliError::numeric)?;
    let mut layers = vec![input];
    layers.extend(body.layers().iter().cloned());
    layers.push(output);
    Mlp::new(layers, Head::AbsDeviation).map_err(CliError::numeric)
}

fn split<T: Clone>(items: &[T], train_fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(rng);
    let cut = ((items.len() as f64 * train_fraction).round() as usize).clamp(1, items.len() - 1);
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
    (pick(&order[..cut]), pick(&order[cut..]))
}

/// Certificates of a regression network at each budget.
pub fn regression_certificates(net: &Mlp, cost: &CostConfig, train_set: &[DataPoint], eps: &[f64]) -> Result<Vec<CertColumns>, CliError> {
    let gamma = GammaKind::ABSOLUTE;
    let score = mlp_score(net, cost, MlpHead::Regression { gamma }).map_err(CliError::numeric)?;
    let lip = gamma.lipschitz() * net.lipschitz_product(cost.r).max(cost.label_rate());
    let loss = LossSpec::new(LossKind::MlpRegression { net: net.clone(), gamma }, *cost).map_err(CliError::numeric)?;
    let norms = train_set.iter().map(|z| loss.gradient_dual_norm(z)).collect::<Result<Vec<_>, _>>().map_err(CliError::numeric)?;
    Ok(eps
        .iter()
        .map(|&e| CertColumns {
            lipschitz: drcert::ext::mul0(lip, e),
            grad_dual: grad_dual_certificate(&norms, Order::ONE, e),
            advscore: score.eval(e),
        })
        .collect())
}

pub fn run_regression_dynamics(cfg: &ExperimentConfig) -> Result<RegressionOutput, CliError> {
    cfg.validate()?;
    let source = cfg.data.clone().unwrap_or_else(|| ingest::SYNTHETIC_PREFIX.to_string());
    let points = ingest::ingest_regression(&source, false, cfg.seed)?;
    if points.len() < 2 || points[0].x.is_empty() {
        return Err(ingest::IngestError::Invalid("regression needs at least 2 points with features".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_set, test_set) = split(&points, 0.8, &mut rng);
    let mut net = standardized_regressor(&train_set, &cfg.hidden, &mut rng)?;
    let rows: RefCell<Vec<(usize, f64, CertColumns)>> = RefCell::new(Vec::new());
    let failure: RefCell<Option<CliError>> = RefCell::new(None);
    let reference = *cfg.eps_grid.last().expect("validated");
    let monitor = |net: &Mlp| -> CertColumns {
        let epoch = rows.borrow().len() / cfg.eps_grid.len();
        match regression_certificates(net, &cfg.cost, &train_set, &cfg.eps_grid) {
            Ok(certs) => {
                let mut rows = rows.borrow_mut();
                rows.extend(cfg.eps_grid.iter().zip(&certs).map(|(&e, c)| (epoch, e, *c)));
                *certs.last().expect("validated")
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                CertColumns { lipschitz: f64::NAN, grad_dual: f64::NAN, advscore: f64::NAN }
            }
        }
    };
    let train_cfg = TrainConfig {
        lr: cfg.lr,
        epochs: cfg.epochs,
        eps: reference,
        r: cfg.cost.r,
        adversarial: cfg.adversarial,
        batch_size: 32,
        seed: cfg.seed,
    };
    let trace = train(&mut net, &train_set, &test_set, &train_cfg, Some(&monitor)).map_err(CliError::numeric)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let budget_rows = rows.into_inner();
    let mut budget_csv = format!("{BUDGET_HEADER}\n");
    for (epoch, e, c) in &budget_rows {
        budget_csv.push_str(&format!("{epoch},{},{},{},{}\n", fmt(*e), fmt(c.lipschitz), fmt(c.grad_dual), fmt(c.advscore)));
    }
    Ok(RegressionOutput { trace, budget_csv, budget_rows, net })
}

pub fn write_regression(out: &Path, result: &RegressionOutput) -> Result<(), CliError> {
    write_atomic(&out.join("trace.csv"), result.trace.to_csv_string().as_bytes())?;
    write_atomic(&out.join("budgets.csv"), result.budget_csv.as_bytes())?;
    write_atomic(&out.join("weights.csv"), result.net.to_weights_csv().as_bytes())?;
    Ok(())
}

// --------------------------------------------------------- classification

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRun {
    pub side: usize,
    pub eps: f64,
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
}

impl GapRun {
    pub fn gap(&self) -> f64 {
        self.train_acc - self.test_acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendRow {
    pub eps: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub no_trend: bool,
}

#[derive(Debug, Clone)]
pub struct ClassificationOutput {
    pub runs: Vec<GapRun>,
    pub trend: Vec<TrendRow>,
    pub table_csv: String,
    pub runs_csv: String,
    pub trend_csv: String,
}

fn classifier(dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Result<Mlp, CliError> {
    let mut sizes = vec![dim];
    sizes.extend_from_slice(hidden);
    sizes.push(CLASSES);
    let mut acts = vec![Activation::ReLU; hidden.len()];
    acts.push(Activation::Identity);
    Mlp::random(&sizes, &acts, Head::LogSoftmaxInner, rng).map_err(CliError::numeric)
}

fn gap_dataset(cfg: &ExperimentConfig, side: usize, seed: u64) -> Result<(Vec<DataPoint>, Vec<DataPoint>), CliError> {
    let images: Vec<LabeledImage> = match cfg.data.as_deref() {
        Some(path) => ingest::ingest_classification(Path::new(path), side)?,
        None => synth::digits(GAP_TRAIN + GAP_TEST, side, seed),
    };
    let points: Vec<DataPoint> = images.iter().map(|im| im.to_point(CLASSES)).collect();
    if points.len() < 2 {
        return Err(ingest::IngestError::Invalid("classification needs at least 2 images".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    Ok(split(&points, GAP_TRAIN as f64 / (GAP_TRAIN + GAP_TEST) as f64, &mut rng))
}

fn gap_run(cfg: &ExperimentConfig, side: usize, eps: f64, seed: u64) -> Result<GapRun, CliError> {
    // The same seed draws the same base images for every side and budget.
    let (train_set, test_set) = gap_dataset(cfg, side, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(side as u64));
    let mut net = classifier(side * side, &cfg.hidden, &mut rng)?;
    let tc = TrainConfig {
        lr: cfg.lr,
        epochs: cfg.epochs,
        eps,
        r: cfg.cost.r,
        adversarial: cfg.adversarial,
        batch_size: 32,
        seed,
    };
    train(&mut net, &train_set, &test_set, &tc, None).map_err(CliError::numeric)?;
    let attack = Some((eps, cfg.cost.r));
    let (_, train_acc) = evaluate(&net, &train_set, attack).map_err(CliError::numeric)?;
    let (_, test_acc) = evaluate(&net, &test_set, attack).map_err(CliError::numeric)?;
    Ok(GapRun { side, eps, seed, train_acc, test_acc })
}

pub fn run_classification_gap(cfg: &ExperimentConfig) -> Result<ClassificationOutput, CliError> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64, u64)> = SIDES
        .iter()
        .flat_map(|&side| cfg.eps_grid.iter().flat_map(move |&e| (0..GAP_SEEDS).map(move |s| (side, e, s))))
        .map(|(side, e, s)| (side, e, cfg.seed + s))
        .collect();
    let runs = jobs.par_iter().map(|&(side, e, s)| gap_run(cfg, side, e, s)).collect::<Result<Vec<_>, _>>()?;

    let mut table_csv = format!("{GAP_HEADER}\n");
    let mut runs_csv = format!("{RUNS_HEADER}\n");
    for r in &runs {
        runs_csv.push_str(&format!("{},{},{},{},{},{},{}\n", r.side, r.side * r.side, fmt(r.eps), r.seed, fmt(r.train_acc), fmt(r.test_acc), fmt(r.gap())));
    }
    for &side in &SIDES {
        for &e in &cfg.eps_grid {
            let group: Vec<&GapRun> = runs.iter().filter(|r| r.side == side && r.eps == e).collect();
            let stat = |f: fn(&GapRun) -> f64| mean_std(group.iter().map(|r| f(r)));
            let (trm, trs) = stat(|r| r.train_acc);
            let (tem, tes) = stat(|r| r.test_acc);
            let (gm, gs) = stat(GapRun::gap);
            table_csv.push_str(&format!(
                "{side},{},{},{},{}\n",
                side * side,
                fmt(e),
                group.len(),
                join(&[trm, trs, tem, tes, gm, gs])
            ));
        }
    }
    let mut trend = Vec::new();
    let mut trend_csv = format!("{TREND_HEADER}\n");
    for &e in &cfg.eps_grid {
        let group: Vec<&GapRun> = runs.iter().filter(|r| r.eps == e).collect();
        let xs: Vec<f64> = group.iter().map(|r| (r.side * r.side) as f64).collect();
        let ys: Vec<f64> = group.iter().map(|r| r.gap()).collect();
        let (slope, se) = ols_slope(&xs, &ys);
        let row = TrendRow { eps: e, slope, slope_se: se, no_trend: slope.abs() <= 3.0 * se };
        trend_csv.push_str(&format!("{},{},{},{}\n", fmt(e), fmt(slope), fmt(se), row.no_trend));
        trend.push(row);
    }
    Ok(ClassificationOutput { runs, trend, table_csv, runs_csv, trend_csv })
}

pub fn write_classification(out: &Path, result: &ClassificationOutput) -> Result<(), CliError> {
    write_atomic(&out.join("gap_table.csv"), result.table_csv.as_bytes())?;
    write_atomic(&out.join("gap_runs.csv"), result.runs_csv.as_bytes())?;
    write_atomic(&out.join("gap_trend.csv"), result.trend_csv.as_bytes())?;
    Ok(())
}

// ------------------------------------------------------------- complexity

pub const COMPLEXITY_DIMS: [usize; 3] = [16, 64, 256];
pub const COMPLEXITY_SIZES: [usize; 3] = [25, 100, 400];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub dim: usize,
    pub n: usize,
    pub eps: f64,
    pub rc: f64,
    pub rc_se: f64,
    pub arc: f64,
    pub arc_se: f64,
    pub gap_se: f64,
    pub bound: f64,
}

impl ComplexityRow {
    pub fn gap(&self) -> f64 {
        self.arc - self.rc
    }

    pub fn within(&self) -> bool {
        self.gap().abs() <= self.bound + 3.0 * self.gap_se
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityOutput {
    pub rows: Vec<ComplexityRow>,
    pub calculus: CalculusReport,
    #[serde(skip)]
    pub csv: String,
}

/// Points on the unit sphere of `norm` with random `±1` labels.
pub fn sphere_sample(dim: usize, n: usize, norm: Norm, seed: u64) -> Vec<DataPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(normal)).collect();
            let len = norm.of(&x);
            x.iter_mut().for_each(|v| *v /= len);
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            DataPoint::regression(x, y)
        })
        .collect()
}

pub fn run_complexity_check(cfg: &ExperimentConfig) -> Result<ComplexityOutput, CliError> {
    cfg.validate()?;
    let norm = cfg.cost.r;
    let radius = 1.0;
    let jobs: Vec<(usize, usize, f64)> = COMPLEXITY_DIMS
        .iter()
        .flat_map(|&d| COMPLEXITY_SIZES.iter().flat_map(move |&n| cfg.eps_grid.iter().map(move |&e| (d, n, e))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(dim, n, eps)| {
            let class = LinearHingeClass { norm, radius, sample: sphere_sample(dim, n, norm, cfg.seed ^ (dim * 7919 + n) as u64) };
            let est = class.estimate(eps, DEFAULT_DRAWS, cfg.seed).map_err(CliError::numeric)?;
            Ok(ComplexityRow {
                dim,
                n,
                eps,
                rc: est.rc.value,
                rc_se: est.rc.std_error,
                arc: est.arc.value,
                arc_se: est.arc.std_error,
                gap_se: est.gap_std_error,
                bound: arc_rc_gap_bound(eps * radius * class.class_spec().lipschitz, n),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let positive: Vec<f64> = cfg.eps_grid.iter().copied().filter(|e| *e > 0.0).collect();
    let outers = [OuterLoss::Absolute, OuterLoss::Hinge, OuterLoss::ScaledTanh(2.0)];
    let calculus = complexity_calculus_checks(&calculus_fixtures(cfg.seed, 6), &outers, &positive).map_err(CliError::numeric)?;
    let mut csv = format!("{COMPLEXITY_HEADER}\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.dim,
            r.n,
            fmt(r.eps),
            join(&[r.rc, r.rc_se, r.arc, r.arc_se, r.gap(), r.gap_se, r.bound]),
            r.within()
        ));
    }
    Ok(ComplexityOutput { rows, calculus, csv })
}

pub fn write_complexity(out: &Path, result: &ComplexityOutput) -> Result<(), CliError> {
    write_atomic(&out.join("complexity.csv"), result.csv.as_bytes())?;
    write_json(&out.join("calculus.json"), &result.calculus)?;
    Ok(())
}

// ----------------------------------------------------------------- oracle

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    #[serde(with = "drcert::ext::ext_f64")]
    pub empirical_risk: f64,
    pub solution: OracleSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumerated: Option<f64>,
    pub wp_ordering: drcert::oracle::WpOrderingResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSelfCheck {
    pub trials: usize,
    pub max_abs_difference: f64,
    pub ordering_failures: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum OracleOutput {
    Instance(OracleReport),
    SelfCheck(OracleSelfCheck),
}

pub fn ordering_grid() -> Vec<Order> {
    [1.0, 1.5, 2.0, 4.0].iter().map(|&p| Order::new(p).expect("valid order")).chain([Order::INFINITY]).collect()
}

/// Random two-dimensional instance with up to `max_support` points, up to
/// three atoms and some forbidden moves.
pub fn random_instance(rng: &mut ChaCha8Rng, max_support: usize) -> DiscreteInstance {
    let n = rng.random_range(2..=max_support.max(2));
    let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
    let mut cost: Vec<Vec<f64>> = coords.iter().map(|a| coords.iter().map(|b| Norm::L2.distance(a, b)).collect()).collect();
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            if i != j && rng.random_bool(0.1) {
                *c = f64::INFINITY;
            }
        }
    }
    let count = rng.random_range(1..=n.min(3));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let orders = ordering_grid();
    DiscreteInstance {
        support: coords.iter().map(|c| SupportPoint::Vector(c.to_vec())).collect(),
        loss: (0..n).map(|_| rng.random_range(-1.0..2.0)).collect(),
        atoms: idx.into_iter().take(count).zip(raw.into_iter().map(|w| w / total)).collect(),
        cost,
        p: orders[rng.random_range(0..orders.len())],
        eps: rng.random_range(0.0..0.8),
    }
}

pub fn oracle_self_check(seed: u64, trials: usize) -> Result<OracleSelfCheck, CliError> {
    let results = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let inst = random_instance(&mut rng, 12);
            let exact = dr_risk_exact(&inst).map_err(CliError::numeric)?.value;
            let brute = dr_risk_enumerated(&inst).map_err(CliError::numeric)?;
            let ordered = wp_ordering_check(&inst, &ordering_grid()).map_err(CliError::numeric)?.passed;
            Ok(((exact - brute).abs(), ordered))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let max_abs_difference = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let ordering_failures = results.iter().filter(|r| !r.1).count();
    Ok(OracleSelfCheck {
        trials,
        max_abs_difference,
        ordering_failures,
        passed: max_abs_difference <= 1e-9 && ordering_failures == 0,
    })
}

pub fn run_oracle_validate(cfg: &ExperimentConfig) -> Result<OracleOutput, CliError> {
    let Some(path) = cfg.data.as_deref() else {
        return oracle_self_check(cfg.seed, ORACLE_TRIALS).map(OracleOutput::SelfCheck);
    };
    let text = std::fs::read_to_string(path).map_err(|source| ingest::IngestError::Io { path: path.into(), source })?;
    let inst: DiscreteInstance = serde_json::from_str(&text).map_err(|e| ingest::IngestError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    inst.validate().map_err(|e| ingest::IngestError::Invalid(e.to_string()))?;
    let solution = dr_risk_exact(&inst).map_err(CliError::numeric)?;
    let enumerated = if inst.support.len() <= 12 && inst.atoms.len() <= 4 {
        Some(dr_risk_enumerated(&inst).map_err(CliError::numeric)?)
    } else {
        None
    };
    let wp_ordering = wp_ordering_check(&inst, &ordering_grid()).map_err(CliError::numeric)?;
    Ok(OracleOutput::Instance(OracleReport { empirical_risk: inst.empirical_risk(), solution, enumerated, wp_ordering }))
}

pub fn write_oracle(out: &Path, result: &OracleOutput) -> Result<(), CliError> {
    write_json(&out.join("oracle.json"), result)?;
    Ok(())
}
