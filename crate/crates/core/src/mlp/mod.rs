//! One-hidden-layer ReLU network trained with per-output hinge losses
//! ReLU(β − y·(w_j·G(x))) under fixed or growing thresholds β.

pub mod idx;

use std::fmt;
use std::str::FromStr;

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::trace::{UpdateStep, UpdateTrace};

pub use idx::{load_idx, ImageSet, MnistFiles};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ScheduleKind {
    Fixed(f64),
    /// β(t) = t^c with c ∈ (0, 1).
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub kind: ScheduleKind,
    /// Count time per output neuron; otherwise one clock counts every
    /// example with a positive loss on some neuron.
    pub per_neuron_clock: bool,
}

impl BetaSchedule {
    pub fn fixed(beta: f64) -> Self {
        BetaSchedule {
            kind: ScheduleKind::Fixed(beta),
            per_neuron_clock: true,
        }
    }

    pub fn power(exponent: f64) -> Self {
        BetaSchedule {
            kind: ScheduleKind::Power(exponent),
            per_neuron_clock: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScheduleKind::Fixed(b) if !(b >= 0.0 && b.is_finite()) => Err(Error::InvalidParameter(
                format!("fixed beta must be a finite nonnegative number, got {b}"),
            )),
            ScheduleKind::Power(c) if !(c > 0.0 && c < 1.0) => Err(Error::InvalidParameter(
                format!("power exponent must lie in (0, 1), got {c}"),
            )),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn beta(&self, t: u64) -> f64 {
        match self.kind {
            ScheduleKind::Fixed(b) => b,
            ScheduleKind::Power(c) => (t as f64).powf(c),
        }
    }
}

impl fmt::Display for BetaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Fixed(b) => write!(f, "fixed:{b}"),
            ScheduleKind::Power(c) => write!(f, "power:{c}"),
        }
    }
}

impl FromStr for BetaSchedule {
    type Err = Error;

    /// `fixed:F` or `power:F`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("schedule must look like fixed:F or power:F, got {s:?}")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad schedule value {value:?}")))?;
        let sched = match kind {
            "fixed" => BetaSchedule::fixed(v),
            "power" => BetaSchedule::power(v),
            _ => return Err(Error::InvalidParameter(format!("unknown schedule kind {kind:?}"))),
        };
        sched.validate()?;
        Ok(sched)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum Batch {
    /// Step after every `B` examples.
    Fixed(usize),
    /// Step once `B` examples have had a positive loss.
    Dynamic(usize),
}

impl Batch {
    pub fn size(self) -> usize {
        match self {
            Batch::Fixed(b) | Batch::Dynamic(b) => b,
        }
    }
}

impl FromStr for Batch {
    type Err = Error;

    /// `fixed:N` or `dynamic:N`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("batch must look like fixed:N or dynamic:N, got {s:?}")))?;
        let n: usize = value
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad batch size {value:?}")))?;
        if n == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        match kind {
            "fixed" => Ok(Batch::Fixed(n)),
            "dynamic" => Ok(Batch::Dynamic(n)),
            _ => Err(Error::InvalidParameter(format!("unknown batch kind {kind:?}"))),
        }
    }
}

/// Whether a loss sitting exactly at the hinge (β = y·s) triggers an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinkRule {
    Inactive,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform in ±1/√fan_in.
    Uniform,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// `None` feeds the inputs straight to the output layer.
    pub hidden: Option<usize>,
    pub schedule: BetaSchedule,
    pub lr: f64,
    /// Learning rate of the hidden layer; `None` uses `lr`. Zero freezes it.
    pub hidden_lr: Option<f64>,
    pub epochs: usize,
    pub batch: Batch,
    pub seed: u64,
    pub shuffle: bool,
    pub kink: KinkRule,
    pub init: Init,
    pub reset_each_epoch: bool,
    /// Stop after the first epoch without a positive loss.
    pub stop_when_clean: bool,
    /// Record the index of every example with a positive loss.
    pub record_trace: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: Some(300),
            schedule: BetaSchedule::power(0.75),
            lr: 0.01,
            hidden_lr: None,
            epochs: 30,
            batch: Batch::Fixed(32),
            seed: 0,
            shuffle: true,
            kink: KinkRule::Inactive,
            init: Init::Uniform,
            reset_each_epoch: false,
            stop_when_clean: false,
            record_trace: false,
        }
    }
}

impl MlpConfig {
    /// No hidden layer, β = 0, unit steps one example at a time in order:
    /// the classic perceptron.
    pub fn perceptron_equivalent(max_epochs: usize) -> Self {
        MlpConfig {
            hidden: None,
            schedule: BetaSchedule::fixed(0.0),
            lr: 1.0,
            hidden_lr: None,
            epochs: max_epochs,
            batch: Batch::Fixed(1),
            seed: 0,
            shuffle: false,
            kink: KinkRule::Active,
            init: Init::Zero,
            reset_each_epoch: false,
            stop_when_clean: true,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.hidden == Some(0) {
            return Err(Error::InvalidParameter("hidden size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!("lr must be positive, got {}", self.lr)));
        }
        if let Some(h) = self.hidden_lr {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("hidden lr must be nonnegative, got {h}")));
            }
        }
        if self.batch.size() == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Targets of the output layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One output per class, trained one-vs-all; prediction is the argmax.
    Classes { labels: Vec<u8>, classes: usize },
    /// A single output; prediction is the sign.
    Binary(Vec<Label>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpDataset {
    pub inputs: Array2<f64>,
    pub targets: Targets,
}

impl MlpDataset {
    pub fn from_images(set: &ImageSet) -> Self {
        MlpDataset {
            inputs: set.images.clone(),
            targets: Targets::Classes {
                labels: set.labels.clone(),
                classes: 10,
            },
        }
    }

    pub fn binary(ds: &LabeledDataset) -> Self {
        let flat: Vec<f64> = ds.points().iter().flatten().copied().collect();
        MlpDataset {
            inputs: Array2::from_shape_vec((ds.len(), ds.dim()), flat).expect("rectangular dataset"),
            targets: Targets::Binary(ds.labels().to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn outputs(&self) -> usize {
        match &self.targets {
            Targets::Classes { classes, .. } => *classes,
            Targets::Binary(_) => 1,
        }
    }

    #[inline]
    fn target(&self, i: usize, j: usize) -> f64 {
        match &self.targets {
            Targets::Classes { labels, .. } => {
                if labels[i] as usize == j {
                    1.0
                } else {
                    -1.0
                }
            }
            Targets::Binary(l) => l[i].value(),
        }
    }

    fn is_correct(&self, i: usize, scores: &[f64]) -> bool {
        match &self.targets {
            Targets::Classes { labels, .. } => argmax(scores) == labels[i] as usize,
            Targets::Binary(l) => Label::from_sign(scores[0]) == l[i],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("training set is empty".into()));
        }
        let n = match &self.targets {
            Targets::Classes { labels, classes } => {
                if let Some(l) = labels.iter().find(|&&l| l as usize >= *classes) {
                    return Err(Error::InvalidParameter(format!("label {l} outside 0..{classes}")));
                }
                labels.len()
            }
            Targets::Binary(l) => l.len(),
        };
        if n != self.len() {
            return Err(Error::InvalidParameter(format!("{n} targets for {} inputs", self.len())));
        }
        Ok(())
    }
}

/// First index of the largest score.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// d × H.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub hidden: Option<HiddenLayer>,
    /// outputs × features, one row per output neuron.
    pub output: Array2<f64>,
    pub update_counters: Vec<u64>,
}

fn uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..=a))
}

impl MlpModel {
    pub fn new(inputs: usize, hidden: Option<usize>, outputs: usize, init: Init, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = hidden.unwrap_or(inputs);
        let hidden = hidden.map(|h| HiddenLayer {
            weights: match init {
                Init::Uniform => uniform(inputs, h, inputs, &mut rng),
                Init::Zero => Array2::zeros((inputs, h)),
            },
            bias: Array1::zeros(h),
        });
        let output = match init {
            Init::Uniform => uniform(outputs, features, features, &mut rng),
            Init::Zero => Array2::zeros((outputs, features)),
        };
        MlpModel {
            hidden,
            output,
            update_counters: vec![0; outputs],
        }
    }

    pub fn features(&self) -> usize {
        self.output.ncols()
    }

    /// Pre-activations of the hidden layer for a block of inputs.
    fn pre_activations(&self, x: ArrayView2<f64>) -> Option<Array2<f64>> {
        self.hidden.as_ref().map(|h| {
            let mut z = Array2::zeros((x.nrows(), h.weights.ncols()));
            general_mat_mul(1.0, &x, &h.weights, 0.0, &mut z);
            z += &h.bias;
            z
        })
    }

    /// G(x) for a block of inputs.
    pub fn hidden_features(&self, x: ArrayView2<f64>) -> Array2<f64> {
        match self.pre_activations(x) {
            Some(z) => z.mapv(|v| v.max(0.0)),
            None => x.to_owned(),
        }
    }

    #[inline]
    fn scores_into(&self, g: &[f64], out: &mut [f64]) {
        for (j, s) in out.iter_mut().enumerate() {
            *s = linalg::dot(self.output.row(j).as_slice().expect("standard layout"), g);
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let g = self.hidden_features(view);
        let mut out = vec![0.0; self.output.nrows()];
        self.scores_into(g.row(0).as_slice().expect("standard layout"), &mut out);
        out
    }
}

/// Fraction of examples the model gets wrong.
pub fn evaluate(model: &MlpModel, data: &MlpDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut wrong = 0;
    let mut scores = vec![0.0; model.output.nrows()];
    for start in (0..data.len()).step_by(1000) {
        let end = (start + 1000).min(data.len());
        let g = model.hidden_features(data.inputs.slice(s![start..end, ..]));
        for (r, row) in g.axis_iter(Axis(0)).enumerate() {
            model.scores_into(row.as_slice().expect("standard layout"), &mut scores);
            if !data.is_correct(start + r, &scores) {
                wrong += 1;
            }
        }
    }
    wrong as f64 / data.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mistakes made on examples as they were visited during the epoch.
    pub train_error: f64,
    pub test_error: Option<f64>,
    /// Parameter steps taken so far.
    pub steps: u64,
    /// Σ_j t_j so far.
    pub neuron_updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub config: MlpConfig,
    pub epochs: Vec<EpochRecord>,
    pub total_steps: u64,
    pub update_counters: Vec<u64>,
    pub final_test_error: Option<f64>,
    /// Index and threshold of every example with a positive loss, when
    /// recorded. `final_w` is the first output neuron.
    pub trace: Option<UpdateTrace>,
}

/// Pending gradient contributions, one row per example with a positive loss.
struct Pending {
    examples: Vec<usize>,
    coefs: Vec<f64>,
    features: Vec<f64>,
    deltas: Vec<f64>,
}

impl Pending {
    fn new() -> Self {
        Pending {
            examples: Vec::new(),
            coefs: Vec::new(),
            features: Vec::new(),
            deltas: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.examples.len()
    }

    fn clear(&mut self) {
        self.examples.clear();
        self.coefs.clear();
        self.features.clear();
        self.deltas.clear();
    }
}

struct Trainer<'a> {
    cfg: &'a MlpConfig,
    data: &'a MlpDataset,
    model: MlpModel,
    global_clock: u64,
    steps: u64,
    pending: Pending,
    trace: Option<Vec<UpdateStep>>,
}

impl Trainer<'_> {
    fn clock(&self, j: usize) -> u64 {
        if self.cfg.schedule.per_neuron_clock {
            self.model.update_counters[j]
        } else {
            self.global_clock
        }
    }

    /// Loss bookkeeping for one example. Returns whether it was classified
    /// correctly.
    fn visit(&mut self, i: usize, g: &[f64], z: Option<&[f64]>, scores: &mut [f64], coefs: &mut [f64]) -> Result<bool> {
        self.model.scores_into(g, scores);
        if let Some(j) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Divergence {
                epoch: 0,
                step: self.steps as usize,
                message: format!("output {j} scored {} on example {i}", scores[j]),
            });
        }
        let correct = self.data.is_correct(i, scores);
        let mut any = false;
        let mut first_beta = 0.0;
        for j in 0..scores.len() {
            let y = self.data.target(i, j);
            let beta = self.cfg.schedule.beta(self.clock(j));
            let loss = beta - y * scores[j];
            let active = match self.cfg.kink {
                KinkRule::Inactive => loss > 0.0,
                KinkRule::Active => loss >= 0.0,
            };
            if active {
                coefs[j] = -y;
                if !any {
                    first_beta = beta;
                }
                any = true;
                self.model.update_counters[j] += 1;
            } else {
                coefs[j] = 0.0;
            }
        }
        if any {
            if let Some(t) = self.trace.as_mut() {
                t.push(UpdateStep {
                    t: t.len(),
                    index: i,
                    beta: first_beta,
                });
            }
            self.global_clock += 1;
            self.pending.examples.push(i);
            self.pending.coefs.extend_from_slice(coefs);
            self.pending.features.extend_from_slice(g);
            if let (Some(z), Some(_)) = (z, self.model.hidden.as_ref()) {
                // dL/dG = Σ_j coef_j w_j, masked by the ReLU (subgradient 0 at 0)
                let h = z.len();
                let start = self.pending.deltas.len();
                self.pending.deltas.resize(start + h, 0.0);
                let delta = &mut self.pending.deltas[start..];
                for (j, &c) in coefs.iter().enumerate() {
                    if c != 0.0 {
                        linalg::add_scaled(delta, c, self.model.output.row(j).as_slice().expect("standard layout"));
                    }
                }
                for (d, &zv) in delta.iter_mut().zip(z) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        Ok(correct)
    }

    /// Applies lr·(sum of pending subgradients)/divisor.
    fn step(&mut self, divisor: f64) {
        let k = self.pending.len();
        if k == 0 {
            return;
        }
        let outputs = self.model.output.nrows();
        let f = self.model.features();
        let scale = -self.cfg.lr / divisor;
        for j in 0..outputs {
            let mut grad = vec![0.0; f];
            let mut touched = false;
            for r in 0..k {
                let c = self.pending.coefs[r * outputs + j];
                if c != 0.0 {
                    linalg::add_scaled(&mut grad, c, &self.pending.features[r * f..(r + 1) * f]);
                    touched = true;
                }
            }
            if touched {
                let row = self.model.output.row_mut(j).into_slice().expect("standard layout");
                linalg::add_scaled(row, scale, &grad);
            }
        }
        let hidden_lr = self.cfg.hidden_lr.unwrap_or(self.cfg.lr);
        if let Some(h) = self.model.hidden.as_mut() {
            if hidden_lr > 0.0 {
                let d = self.data.dim();
                let hs = h.weights.ncols();
                let mut xs = Array2::zeros((k, d));
                for (r, &i) in self.pending.examples.iter().enumerate() {
                    xs.row_mut(r).assign(&self.data.inputs.row(i));
                }
                let deltas = ArrayView2::from_shape((k, hs), &self.pending.deltas).expect("pending rows");
                let hscale = -hidden_lr / divisor;
                general_mat_mul(hscale, &xs.t(), &deltas, 1.0, &mut h.weights);
                h.bias.scaled_add(hscale, &deltas.sum_axis(Axis(0)));
            }
        }
        self.steps += 1;
        self.pending.clear();
    }
}

pub fn train_mlp(
    data: &MlpDataset,
    test: Option<&MlpDataset>,
    cfg: &MlpConfig,
) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    data.validate()?;
    if let Some(t) = test {
        t.validate()?;
        if t.dim() != data.dim() || t.outputs() != data.outputs() {
            return Err(Error::InvalidParameter("test set shape differs from the training set".into()));
        }
    }
    let n = data.len();
    let outputs = data.outputs();
    let mut tr = Trainer {
        cfg,
        data,
        model: MlpModel::new(data.dim(), cfg.hidden, outputs, cfg.init, cfg.seed),
        global_clock: 0,
        steps: 0,
        pending: Pending::new(),
        trace: cfg.record_trace.then(Vec::new),
    };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5851_f42d_4c95_7f2d);
    let mut order: Vec<usize> = (0..n).collect();
    let mut scores = vec![0.0; outputs];
    let mut coefs = vec![0.0; outputs];
    let b = cfg.batch.size();
    let mut chunk_hint = b;
    let mut log_epochs = Vec::new();

    for epoch in 0..cfg.epochs {
        if cfg.reset_each_epoch {
            tr.model.update_counters.iter_mut().for_each(|c| *c = 0);
            tr.global_clock = 0;
        }
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let clock_before = tr.global_clock;
        let steps_before = tr.steps;
        let mut mistakes = 0usize;
        let mut seen_in_batch = 0usize;
        let mut pos = 0;
        while pos < n {
            let len = match cfg.batch {
                Batch::Fixed(_) => (b - seen_in_batch).min(n - pos),
                Batch::Dynamic(_) => chunk_hint.min(n - pos),
            };
            let idx = &order[pos..pos + len];
            let mut xs = Array2::zeros((len, data.dim()));
            for (r, &i) in idx.iter().enumerate() {
                xs.row_mut(r).assign(&data.inputs.row(i));
            }
            let z = tr.model.pre_activations(xs.view());
            let g = match &z {
                Some(z) => z.mapv(|v| v.max(0.0)),
                None => xs,
            };
            let mut consumed = len;
            for (r, &i) in idx.iter().enumerate() {
                let zr = z.as_ref().map(|z| z.row(r).to_slice().expect("standard layout"));
                let gr = g.row(r);
                let correct = tr
                    .visit(i, gr.as_slice().expect("standard layout"), zr, &mut scores, &mut coefs)
                    .map_err(|e| match e {
                        Error::Divergence { step, message, .. } => Error::Divergence { epoch, step, message },
                        e => e,
                    })?;
                if !correct {
                    mistakes += 1;
                }
                seen_in_batch += 1;
                let trigger = match cfg.batch {
                    Batch::Fixed(_) => seen_in_batch == b,
                    Batch::Dynamic(_) => tr.pending.len() == b,
                };
                if trigger {
                    let divisor = b as f64;
                    let stepped = tr.pending.len() > 0;
                    tr.step(divisor);
                    seen_in_batch = 0;
                    if stepped {
                        // later rows of this block were computed with the old weights
                        consumed = r + 1;
                        break;
                    }
                }
            }
            if let Batch::Dynamic(_) = cfg.batch {
                chunk_hint = if consumed < len { consumed.max(b) } else { (2 * len).min(4096).max(b) };
            }
            pos += consumed;
        }
        if let Batch::Fixed(_) = cfg.batch {
            if seen_in_batch > 0 {
                tr.step(seen_in_batch as f64);
                seen_in_batch = 0;
            }
        }
        let _ = seen_in_batch;
        if let Some((j, _)) = tr
            .model
            .output
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Divergence {
                epoch,
                step: tr.steps as usize,
                message: format!("output weight {j} is not finite"),
            });
        }
        log_epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_error: mistakes as f64 / n as f64,
            test_error: test.map(|t| evaluate(&tr.model, t)),
            steps: tr.steps,
            neuron_updates: tr.model.update_counters.iter().sum(),
        });
        if cfg.stop_when_clean && tr.global_clock == clock_before && tr.steps == steps_before {
            break;
        }
    }
    // leftover errors of a dynamic batch
    tr.step(b as f64);

    let trace = tr.trace.take().map(|steps| UpdateTrace {
        steps,
        final_w: tr.model.output.row(0).to_vec(),
    });
    let final_test_error = test.map(|t| evaluate(&tr.model, t));
    let log = TrainLog {
        config: cfg.clone(),
        epochs: log_epochs,
        total_steps: tr.steps,
        update_counters: tr.model.update_counters.clone(),
        final_test_error,
        trace,
    };
    Ok((tr.model, log))
}
