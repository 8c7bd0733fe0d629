//! A small feed-forward network: forward pass, analytic backprop, induced
//! operator norms, FGSM perturbations and plain SGD training.
//!
//! Subgradients at kinks follow `sgn(0) = +1`: ReLU has slope 1 at 0 and the
//! absolute deviation `|y − f(x)|` has derivative `−1` in `f` when `y = f(x)`.

use crate::cost::{DataPoint, Norm};
use crate::ext::{format_value, parse_value};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

const POWER_ITERATIONS: usize = 200;
const POWER_REL_TOL: f64 = 1e-12;
const GRAM_ORACLE_MAX_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("network has no layers")]
    EmptyNetwork,
    #[error("layer {0} has non-finite weights")]
    NonFiniteWeights(usize),
    #[error("unknown activation {0:?}")]
    UnknownActivation(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("malformed weights csv at line {line}: {message}")]
    Weights { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if pre >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// Global Lipschitz constant of the scalar activation.
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Sigmoid => 0.25,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::ReLU => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = NnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::ReLU),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(NnError::UnknownActivation(other.to_string())),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// How network outputs turn into a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    /// `⟨y, −log softmax(f(x))⟩`.
    LogSoftmaxInner,
    /// `|y − f(x)|` for a scalar output.
    AbsDeviation,
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::LogSoftmaxInner => "log_softmax_inner",
            Head::AbsDeviation => "abs_deviation",
        })
    }
}

impl FromStr for Head {
    type Err = NnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "log_softmax_inner" => Ok(Head::LogSoftmaxInner),
            "abs_deviation" => Ok(Head::AbsDeviation),
            other => Err(NnError::UnknownActivation(other.to_string())),
        }
    }
}

/// `x ↦ act(W x + b)`. Frozen layers are skipped by the optimizer, which is
/// how fixed input/output standardization is expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
    pub frozen: bool,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activation: Activation) -> Self {
        Self { weights, bias, activation, frozen: false }
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    head: Head,
}

struct ForwardCache {
    inputs: Vec<DVector<f64>>,
    pre: Vec<DVector<f64>>,
    output: DVector<f64>,
}

/// Parameter gradients of one layer.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>, head: Head) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::EmptyNetwork);
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(NnError::DimMismatch { expected: l.output_dim(), found: l.bias.len() });
            }
            if k > 0 && layers[k - 1].output_dim() != l.input_dim() {
                return Err(NnError::DimMismatch { expected: layers[k - 1].output_dim(), found: l.input_dim() });
            }
            if l.weights.iter().chain(l.bias.iter()).any(|w| !w.is_finite()) {
                return Err(NnError::NonFiniteWeights(k));
            }
        }
        let net = Self { layers, head };
        if head == Head::AbsDeviation && net.output_dim() != 1 {
            return Err(NnError::DimMismatch { expected: 1, found: net.output_dim() });
        }
        Ok(net)
    }

    /// Gaussian initialization with variance `1/fan_in` and zero biases.
    /// `sizes` lists the input width followed by every layer's output width.
    pub fn random<R: Rng>(sizes: &[usize], activations: &[Activation], head: Head, rng: &mut R) -> Result<Self, NnError> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(NnError::EmptyNetwork);
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| {
                let normal = Normal::new(0.0, (1.0 / w[0] as f64).sqrt()).expect("positive std");
                let weights = DMatrix::from_fn(w[1], w[0], |_, _| normal.sample(rng));
                Layer::new(weights, DVector::zeros(w[1]), act)
            })
            .collect();
        Mlp::new(layers, head)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::DimMismatch { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }

    fn check_label(&self, y: &[f64]) -> Result<(), NnError> {
        if y.len() != self.output_dim() {
            return Err(NnError::DimMismatch { expected: self.output_dim(), found: y.len() });
        }
        Ok(())
    }

    fn run(&self, x: &[f64]) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = DVector::from_column_slice(x);
        for layer in &self.layers {
            let a = &layer.weights * &h + &layer.bias;
            let next = a.map(|v| layer.activation.apply(v));
            inputs.push(h);
            pre.push(a);
            h = next;
        }
        ForwardCache { inputs, pre, output: h }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        Ok(self.run(x).output.as_slice().to_vec())
    }

    /// Backpropagates `d_out` through the cached pass.
    fn backward(&self, cache: &ForwardCache, d_out: DVector<f64>, want_params: bool) -> (Vec<f64>, Vec<LayerGrad>) {
        let mut grads = Vec::new();
        let mut delta = d_out;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            let d_pre = delta.zip_map(&cache.pre[k], |d, a| d * act.derivative(a));
            if want_params {
                grads.push(LayerGrad { weights: &d_pre * cache.inputs[k].transpose(), bias: d_pre.clone() });
            }
            delta = layer.weights.tr_mul(&d_pre);
        }
        grads.reverse();
        (delta.as_slice().to_vec(), grads)
    }

    /// Loss, derivative in the output, and derivative in the label.
    fn head_terms(&self, out: &DVector<f64>, y: &[f64]) -> (f64, DVector<f64>, Vec<f64>) {
        match self.head {
            Head::LogSoftmaxInner => {
                let m = out.max();
                let sum: f64 = out.iter().map(|o| (o - m).exp()).sum();
                let lse = m + sum.ln();
                let total: f64 = y.iter().sum();
                let loss = total * lse - out.iter().zip(y).map(|(o, yi)| o * yi).sum::<f64>();
                let d_out = DVector::from_iterator(
                    out.len(),
                    out.iter().zip(y).map(|(o, yi)| total * (o - lse).exp() - yi),
                );
                let d_y = out.iter().map(|o| lse - o).collect();
                (loss, d_out, d_y)
            }
            Head::AbsDeviation => {
                let u = y[0] - out[0];
                let s = if u >= 0.0 { 1.0 } else { -1.0 };
                (u.abs(), DVector::from_element(1, -s), vec![s])
            }
        }
    }

    pub fn loss(&self, z: &DataPoint) -> Result<f64, NnError> {
        self.check_input(&z.x)?;
        self.check_label(&z.y)?;
        let out = self.run(&z.x).output;
        Ok(self.head_terms(&out, &z.y).0)
    }

    pub fn loss_and_grad_x(&self, z: &DataPoint) -> Result<(f64, Vec<f64>), NnError> {
        let (loss, gx, _) = self.loss_and_grad_z(z)?;
        Ok((loss, gx))
    }

    /// Loss with its gradients in the features and in the label.
    pub fn loss_and_grad_z(&self, z: &DataPoint) -> Result<(f64, Vec<f64>, Vec<f64>), NnError> {
        self.check_input(&z.x)?;
        self.check_label(&z.y)?;
        let cache = self.run(&z.x);
        let (loss, d_out, d_y) = self.head_terms(&cache.output, &z.y);
        let (gx, _) = self.backward(&cache, d_out, false);
        Ok((loss, gx, d_y))
    }

    /// Loss and parameter gradients.
    pub fn loss_and_param_grads(&self, z: &DataPoint) -> Result<(f64, Vec<LayerGrad>), NnError> {
        self.check_input(&z.x)?;
        self.check_label(&z.y)?;
        let cache = self.run(&z.x);
        let (loss, d_out, _) = self.head_terms(&cache.output, &z.y);
        let (_, grads) = self.backward(&cache, d_out, true);
        Ok((loss, grads))
    }

    /// Output and `∇_x ⟨cotangent, f(x)⟩`.
    pub fn output_and_vjp(&self, x: &[f64], cotangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        self.check_input(x)?;
        if cotangent.len() != self.output_dim() {
            return Err(NnError::DimMismatch { expected: self.output_dim(), found: cotangent.len() });
        }
        let cache = self.run(x);
        let (gx, _) = self.backward(&cache, DVector::from_column_slice(cotangent), false);
        Ok((cache.output.as_slice().to_vec(), gx))
    }

    /// Index of the largest output.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize, NnError> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Induced `r`-norms of the weight matrices, first layer first.
    pub fn layer_norms(&self, r: Norm) -> Vec<f64> {
        self.layers.iter().map(|l| opnorm(&l.weights, r)).collect()
    }

    /// `Π_k ‖W_k‖_r · Lip(act_k)`, a Lipschitz constant of `x ↦ f(x)` in `‖·‖_r`.
    pub fn lipschitz_product(&self, r: Norm) -> f64 {
        self.layers.iter().map(|l| opnorm(&l.weights, r) * l.activation.lipschitz()).product()
    }

    /// Applies `θ ← θ − lr·g` to every trainable layer.
    pub fn apply_step(&mut self, grads: &[LayerGrad], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            if layer.frozen {
                continue;
            }
            layer.weights -= &g.weights * lr;
            layer.bias -= &g.bias * lr;
        }
    }

    /// Layer-tagged CSV: `layer,param,row,col,value`.
    pub fn to_weights_csv(&self) -> String {
        let mut out = String::from("layer,param,row,col,value\n");
        let _ = writeln!(out, "-,head,0,0,{}", self.head);
        for (k, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "{k},activation,0,0,{}", l.activation);
            let _ = writeln!(out, "{k},frozen,0,0,{}", u8::from(l.frozen));
            for i in 0..l.output_dim() {
                for j in 0..l.input_dim() {
                    let _ = writeln!(out, "{k},W,{i},{j},{}", format_value(l.weights[(i, j)]));
                }
            }
            for i in 0..l.output_dim() {
                let _ = writeln!(out, "{k},b,{i},0,{}", format_value(l.bias[i]));
            }
        }
        out
    }

    pub fn from_weights_csv(text: &str) -> Result<Self, NnError> {
        #[derive(Default)]
        struct Partial {
            activation: Option<Activation>,
            frozen: bool,
            weights: BTreeMap<(usize, usize), f64>,
            bias: BTreeMap<usize, f64>,
        }
        let err = |line: usize, message: String| NnError::Weights { line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "layer,param,row,col,value" => {}
            _ => return Err(err(1, "expected header \"layer,param,row,col,value\"".into())),
        }
        let mut head = None;
        let mut partial: BTreeMap<usize, Partial> = BTreeMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(err(line_no, "expected five fields".into()));
            }
            if f[1] == "head" {
                head = Some(f[4].parse::<Head>().map_err(|e| err(line_no, e.to_string()))?);
                continue;
            }
            let k: usize = f[0].parse().map_err(|_| err(line_no, format!("invalid layer {:?}", f[0])))?;
            let row: usize = f[2].parse().map_err(|_| err(line_no, format!("invalid row {:?}", f[2])))?;
            let col: usize = f[3].parse().map_err(|_| err(line_no, format!("invalid column {:?}", f[3])))?;
            let entry = partial.entry(k).or_default();
            let number = || parse_value(f[4]).ok_or_else(|| err(line_no, format!("invalid number {:?}", f[4])));
            match f[1] {
                "activation" => entry.activation = Some(f[4].parse().map_err(|e: NnError| err(line_no, e.to_string()))?),
                "frozen" => entry.frozen = f[4] == "1",
                "W" => {
                    entry.weights.insert((row, col), number()?);
                }
                "b" => {
                    entry.bias.insert(row, number()?);
                }
                other => return Err(err(line_no, format!("unknown parameter {other:?}"))),
            }
        }
        let head = head.ok_or_else(|| err(0, "missing head row".into()))?;
        let mut layers = Vec::new();
        for (k, p) in partial {
            if k != layers.len() {
                return Err(err(0, format!("layer {} missing", layers.len())));
            }
            let rows = p.weights.keys().map(|(i, _)| i + 1).max().unwrap_or(0);
            let cols = p.weights.keys().map(|(_, j)| j + 1).max().unwrap_or(0);
            if p.weights.len() != rows * cols || p.bias.len() != rows {
                return Err(err(0, format!("layer {k} is incomplete")));
            }
            let weights = DMatrix::from_fn(rows, cols, |i, j| p.weights[&(i, j)]);
            let bias = DVector::from_fn(rows, |i, _| p.bias[&i]);
            let activation = p.activation.ok_or_else(|| err(0, format!("layer {k} has no activation")))?;
            layers.push(Layer { weights, bias, activation, frozen: p.frozen });
        }
        Mlp::new(layers, head)
    }
}

pub fn forward(net: &Mlp, x: &[f64]) -> Result<Vec<f64>, NnError> {
    net.forward(x)
}

pub fn loss_and_grad_x(net: &Mlp, z: &DataPoint) -> Result<(f64, Vec<f64>), NnError> {
    net.loss_and_grad_x(z)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Induced operator norm `‖W‖_{r→r}`.
pub fn opnorm(w: &DMatrix<f64>, r: Norm) -> f64 {
    match r {
        Norm::L1 => w.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        Norm::LInf => w.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        Norm::L2 => spectral_norm(w),
    }
}

/// Power iteration on the smaller Gram matrix, cross-checked against a
/// symmetric eigen-solve when that matrix is small enough.
fn spectral_norm(w: &DMatrix<f64>) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let gram = if w.nrows() <= w.ncols() { w * w.transpose() } else { w.transpose() * w };
    let k = gram.nrows();
    let mut v = DVector::from_fn(k, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let next = &gram * &v;
        let norm = next.norm();
        if norm == 0.0 {
            lambda = 0.0;
            break;
        }
        let estimate = v.dot(&next);
        v = next / norm;
        let done = (estimate - lambda).abs() <= POWER_REL_TOL * estimate.abs();
        lambda = estimate;
        if done {
            break;
        }
    }
    let power = lambda.max(0.0).sqrt();
    if k > GRAM_ORACLE_MAX_DIM {
        return power;
    }
    let exact = SymmetricEigen::new(gram).eigenvalues.iter().fold(0.0_f64, |m, &e| m.max(e)).sqrt();
    power.max(exact)
}

/// Steepest-ascent unit direction for the attack norm, or `None` for a zero
/// gradient.
pub fn fgsm_direction(g: &[f64], r: Norm) -> Option<Vec<f64>> {
    if g.iter().all(|&x| x == 0.0) {
        return None;
    }
    let sign = |x: f64| if x >= 0.0 { 1.0 } else { -1.0 };
    Some(match r {
        Norm::L1 => {
            let mut best = 0;
            for (j, x) in g.iter().enumerate() {
                if x.abs() > g[best].abs() {
                    best = j;
                }
            }
            let mut d = vec![0.0; g.len()];
            d[best] = sign(g[best]);
            d
        }
        Norm::L2 => {
            let n = Norm::L2.of(g);
            g.iter().map(|x| x / n).collect()
        }
        Norm::LInf => g.iter().map(|&x| sign(x)).collect(),
    })
}

/// `clip_[0,1](x + ε·Φ(∇_x l))`; a zero gradient leaves the point unchanged.
pub fn fgsm_perturb(net: &Mlp, z: &DataPoint, eps: f64, r: Norm) -> Result<DataPoint, NnError> {
    if eps == 0.0 {
        return Ok(z.clone());
    }
    let (_, g) = net.loss_and_grad_x(z)?;
    let Some(dir) = fgsm_direction(&g, r) else {
        return Ok(z.clone());
    };
    let x = z.x.iter().zip(&dir).map(|(x, d)| (x + eps * d).clamp(0.0, 1.0)).collect();
    Ok(DataPoint::new(x, z.y.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// FGSM budget used when `adversarial` is set.
    pub eps: f64,
    pub r: Norm,
    pub adversarial: bool,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.01, epochs: 50, eps: 0.0, r: Norm::LInf, adversarial: false, batch_size: 32, seed: 0 }
    }
}

/// Certificate values recorded alongside an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertColumns {
    pub lipschitz: f64,
    pub grad_dual: f64,
    pub advscore: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Accuracy for classification heads, NaN for regression.
    pub train_acc: f64,
    pub test_acc: f64,
    pub certs: Option<CertColumns>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
}

pub const TRACE_HEADER: &str = "epoch,train_loss,test_loss,train_acc,test_acc,cert_lip,cert_grad_dual,cert_advscore";

impl TrainingTrace {
    pub fn to_csv_string(&self) -> String {
        let mut out = format!("{TRACE_HEADER}\n");
        for r in &self.records {
            let (lip, grad, adv) = match r.certs {
                Some(c) => (format_value(c.lipschitz), format_value(c.grad_dual), format_value(c.advscore)),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{lip},{grad},{adv}",
                r.epoch,
                format_value(r.train_loss),
                format_value(r.test_loss),
                format_value(r.train_acc),
                format_value(r.test_acc),
            );
        }
        out
    }
}

/// Mean loss and accuracy, optionally on FGSM-perturbed copies of the data.
pub fn evaluate(net: &Mlp, data: &[DataPoint], attack: Option<(f64, Norm)>) -> Result<(f64, f64), NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for z in data {
        let point = match attack {
            Some((eps, r)) => fgsm_perturb(net, z, eps, r)?,
            None => z.clone(),
        };
        loss += net.loss(&point)?;
        if net.head == Head::LogSoftmaxInner && net.predict_class(&point.x)? == argmax(&point.y) {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    let acc = match net.head {
        Head::LogSoftmaxInner => correct as f64 / n,
        Head::AbsDeviation => f64::NAN,
    };
    Ok((loss / n, acc))
}

/// Mini-batch SGD on clean or FGSM-perturbed batches. Records epoch 0 (the
/// initial network) and every completed epoch.
pub fn train(
    net: &mut Mlp,
    train_set: &[DataPoint],
    test_set: &[DataPoint],
    cfg: &TrainConfig,
    monitor: Option<&dyn Fn(&Mlp) -> CertColumns>,
) -> Result<TrainingTrace, NnError> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut trace = TrainingTrace::default();
    let record = |net: &Mlp, epoch: usize| -> Result<EpochRecord, NnError> {
        let (train_loss, train_acc) = evaluate(net, train_set, None)?;
        let (test_loss, test_acc) = evaluate(net, test_set, None)?;
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(NnError::Divergence { epoch });
        }
        Ok(EpochRecord { epoch, train_loss, test_loss, train_acc, test_acc, certs: monitor.map(|m| m(net)) })
    };
    trace.records.push(record(net, 0)?);
    let batch = cfg.batch_size.max(1);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut acc: Option<Vec<LayerGrad>> = None;
            for &i in chunk {
                let z = if cfg.adversarial && cfg.eps > 0.0 {
                    fgsm_perturb(net, &train_set[i], cfg.eps, cfg.r)?
                } else {
                    train_set[i].clone()
                };
                let (_, grads) = net.loss_and_param_grads(&z)?;
                match acc.as_mut() {
                    None => acc = Some(grads),
                    Some(sum) => {
                        for (s, g) in sum.iter_mut().zip(grads) {
                            s.weights += g.weights;
                            s.bias += g.bias;
                        }
                    }
                }
            }
            if let Some(sum) = acc {
                net.apply_step(&sum, cfg.lr / chunk.len() as f64);
            }
        }
        if net.layers.iter().any(|l| l.weights.iter().any(|w| !w.is_finite())) {
            return Err(NnError::Divergence { epoch });
        }
        trace.records.push(record(net, epoch)?);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn operator_norms_of_fixture() {
        let w = dmatrix![1.0, -2.0; 3.0, 4.0];
        assert_eq!(opnorm(&w, Norm::L1), 6.0);
        assert_eq!(opnorm(&w, Norm::LInf), 7.0);
        assert!((opnorm(&w, Norm::L2) - 5.116_672_736_016_927).abs() < 1e-12);
    }

    #[test]
    fn identity_network_passes_input_through() {
        let l = Layer::new(DMatrix::identity(3, 3), DVector::zeros(3), Activation::Identity);
        let net = Mlp::new(vec![l], Head::LogSoftmaxInner).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
        assert!(matches!(net.forward(&[1.0]), Err(NnError::DimMismatch { .. })));
    }

    #[test]
    fn tanh_network_by_hand() {
        let l1 = Layer::new(dmatrix![1.0, 2.0; -1.0, 0.5], DVector::from_vec(vec![0.1, -0.2]), Activation::Tanh);
        let l2 = Layer::new(dmatrix![1.0, -1.0], DVector::from_vec(vec![0.3]), Activation::Identity);
        let net = Mlp::new(vec![l1, l2], Head::AbsDeviation).unwrap();
        let expected = 1.1f64.tanh() - (-1.2f64).tanh() + 0.3;
        assert!((net.forward(&[1.0, 0.0]).unwrap()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn perfect_logits_give_small_loss() {
        let l = Layer::new(DMatrix::identity(3, 3) * 50.0, DVector::zeros(3), Activation::Identity);
        let net = Mlp::new(vec![l], Head::LogSoftmaxInner).unwrap();
        let z = DataPoint::new(vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]);
        assert!(net.loss(&z).unwrap() < 1e-20);
    }

    #[test]
    fn abs_deviation_kink_uses_positive_sign() {
        let l = Layer::new(dmatrix![2.0], DVector::zeros(1), Activation::Identity);
        let net = Mlp::new(vec![l], Head::AbsDeviation).unwrap();
        let (loss, g) = net.loss_and_grad_x(&DataPoint::regression(vec![1.0], 2.0)).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g, vec![-2.0]);
    }

    #[test]
    fn fgsm_directions() {
        let g = [0.3, -0.9];
        assert_eq!(fgsm_direction(&g, Norm::L1).unwrap(), vec![0.0, -1.0]);
        assert_eq!(fgsm_direction(&g, Norm::LInf).unwrap(), vec![1.0, -1.0]);
        let d2 = fgsm_direction(&g, Norm::L2).unwrap();
        assert!((Norm::L2.of(&d2) - 1.0).abs() < 1e-15);
        assert_eq!(fgsm_direction(&[0.0, 0.0], Norm::L2), None);
    }

    #[test]
    fn weights_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net =
            Mlp::random(&[2, 4, 1], &[Activation::Tanh, Activation::Identity], Head::AbsDeviation, &mut rng).unwrap();
        net.layers[0].frozen = true;
        let text = net.to_weights_csv();
        assert_eq!(Mlp::from_weights_csv(&text).unwrap(), net);
    }

    #[test]
    fn zero_learning_rate_keeps_trace_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net =
            Mlp::random(&[2, 3, 2], &[Activation::Tanh, Activation::Identity], Head::LogSoftmaxInner, &mut rng).unwrap();
        let data: Vec<DataPoint> =
            (0..8).map(|i| DataPoint::new(vec![i as f64 / 8.0, 0.5], if i < 4 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })).collect();
        let cfg = TrainConfig { lr: 0.0, epochs: 3, ..TrainConfig::default() };
        let trace = train(&mut net, &data, &data, &cfg, None).unwrap();
        assert_eq!(trace.records.len(), 4);
        assert!(trace.records.windows(2).all(|w| w[0].train_loss == w[1].train_loss));
    }
}
