//! Selection schemes, the perceptron as one, and the generalization harness.
//!
//! Logarithms are natural throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Hyperplane, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle;
use crate::planted::PlantedDistribution;
use crate::variants::{train_classic, VariantConfig};

/// A sub-sample with multiplicities, in the order it was selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedSample {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    /// Position of each entry in the sample it came from.
    pub source_indices: Vec<usize>,
}

impl CompressedSample {
    pub fn empty(dim: usize) -> Self {
        CompressedSample {
            dim,
            points: Vec::new(),
            labels: Vec::new(),
            source_indices: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Linear { hyperplane: Hyperplane },
    Constant { label: Label },
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> Label {
        match self {
            Hypothesis::Linear { hyperplane } => hyperplane.classify(x),
            Hypothesis::Constant { label } => *label,
        }
    }

    /// Fraction of misclassified examples; 0 on an empty set.
    pub fn error(&self, points: &[Vec<f64>], labels: &[Label]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let wrong = points
            .iter()
            .zip(labels)
            .filter(|(x, y)| self.predict(x) != **y)
            .count();
        wrong as f64 / points.len() as f64
    }
}

pub trait SelectionScheme {
    fn size_bound(&self) -> usize;
    fn compress(&self, sample: &LabeledDataset) -> Result<CompressedSample>;
    /// Must depend on `compressed` alone.
    fn reconstruct(&self, compressed: &CompressedSample) -> Hypothesis;
}

/// Keeps the update sequence of the classic perceptron when the sample has
/// normalized margin ε*/R ≥ eps, and nothing otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronScheme {
    eps: f64,
}

impl PerceptronScheme {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(PerceptronScheme { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl SelectionScheme for PerceptronScheme {
    fn size_bound(&self) -> usize {
        (1.0 / (self.eps * self.eps)).ceil() as usize
    }

    fn compress(&self, sample: &LabeledDataset) -> Result<CompressedSample> {
        let empty = CompressedSample::empty(sample.dim());
        if sample.is_empty() {
            return Ok(empty);
        }
        let r = sample.max_norm();
        if r == 0.0 {
            return Ok(empty);
        }
        let cert = oracle::optimal_margin(sample)?;
        if !cert.separable() || cert.eps_star / r < self.eps {
            return Ok(empty);
        }
        let cfg = VariantConfig::classic().with_max_updates(self.size_bound());
        let run = train_classic(sample, &cfg)?;
        if !run.terminated {
            return Ok(empty);
        }
        let idx: Vec<usize> = run.trace.steps.iter().map(|s| s.index).collect();
        Ok(CompressedSample {
            dim: sample.dim(),
            points: idx.iter().map(|&i| sample.point(i).to_vec()).collect(),
            labels: idx.iter().map(|&i| sample.label(i)).collect(),
            source_indices: idx,
        })
    }

    fn reconstruct(&self, compressed: &CompressedSample) -> Hypothesis {
        if compressed.is_empty() {
            return Hypothesis::Constant {
                label: Label::Positive,
            };
        }
        let mut w = vec![0.0; compressed.dim];
        for (x, y) in compressed.points.iter().zip(&compressed.labels) {
            linalg::add_scaled(&mut w, y.value(), x);
        }
        Hypothesis::Linear {
            hyperplane: Hyperplane::linear(w),
        }
    }
}

/// 50(d ln(m/d) + ln(1/δ))/m.
pub fn david_bound(d_comp: usize, m: usize, delta: f64) -> Result<f64> {
    if d_comp < 1 || m <= d_comp {
        return Err(Error::InvalidParameter(format!(
            "need m > d_comp >= 1, got m={m}, d_comp={d_comp}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (d, m) = (d_comp as f64, m as f64);
    Ok(50.0 * (d * (m / d).ln() + (1.0 / delta).ln()) / m)
}

/// 50(ln(ε²m) + ln(2/δ))/(ε²m), or `None` when ε²m ≤ 1.
pub fn perceptron_generalization_bound(eps: f64, m: usize, delta: f64) -> Option<f64> {
    let e2m = eps * eps * m as f64;
    (e2m > 1.0).then(|| 50.0 * (e2m.ln() + (2.0 / delta).ln()) / e2m)
}

/// |L_D − L_S| ≥ √(bound·L_S) + bound.
pub fn david_violated(l_d: f64, l_s: f64, bound: f64) -> bool {
    (l_d - l_s).abs() >= (bound * l_s).sqrt() + bound
}

/// A source of labelled examples.
pub trait LabeledSource {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Label);
}

impl LabeledSource for PlantedDistribution {
    fn dim(&self) -> usize {
        PlantedDistribution::dim(self)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Label) {
        let mut budget = u64::MAX;
        self.sample(rng, &mut budget).expect("unbounded budget")
    }
}

/// Always returns the same labelled point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub point: Vec<f64>,
    pub label: Label,
}

impl LabeledSource for PointMass {
    fn dim(&self) -> usize {
        self.point.len()
    }

    fn draw(&self, _rng: &mut ChaCha8Rng) -> (Vec<f64>, Label) {
        (self.point.clone(), self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub seed: u64,
    pub m: usize,
    pub eps: f64,
    pub delta: f64,
    pub d_comp: usize,
    pub compressed_size: usize,
    pub empirical_error: f64,
    pub true_error_estimate: f64,
    pub test_size: usize,
    /// `None` when m ≤ d_comp.
    pub bound_eps: Option<f64>,
    pub perceptron_bound: Option<f64>,
    /// The bound is missing or at least 1.
    pub vacuous: bool,
    pub violated: bool,
}

pub fn generalization_trial<S: LabeledSource>(
    source: &S,
    m: usize,
    eps: f64,
    delta: f64,
    test_size: usize,
    seed: u64,
) -> Result<GeneralizationReport> {
    if m == 0 || test_size == 0 {
        return Err(Error::InvalidParameter("m and test_size must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let scheme = PerceptronScheme::new(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, labels): (Vec<Vec<f64>>, Vec<Label>) = (0..m).map(|_| source.draw(&mut rng)).unzip();
    let sample = LabeledDataset::with_dim(source.dim(), points, labels)?;
    let compressed = scheme.compress(&sample)?;
    let h = scheme.reconstruct(&compressed);
    let empirical_error = h.error(sample.points(), sample.labels());

    let mut test_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut wrong = 0usize;
    for _ in 0..test_size {
        let (x, y) = source.draw(&mut test_rng);
        if h.predict(&x) != y {
            wrong += 1;
        }
    }
    let true_error_estimate = wrong as f64 / test_size as f64;

    let d_comp = scheme.size_bound();
    let bound_eps = david_bound(d_comp, m, delta).ok();
    let violated = bound_eps.is_some_and(|b| david_violated(true_error_estimate, empirical_error, b));
    Ok(GeneralizationReport {
        seed,
        m,
        eps,
        delta,
        d_comp,
        compressed_size: compressed.len(),
        empirical_error,
        true_error_estimate,
        test_size,
        bound_eps,
        perceptron_bound: perceptron_generalization_bound(eps, m, delta),
        vacuous: bound_eps.is_none_or(|b| b >= 1.0),
        violated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationSummary {
    pub trials: usize,
    pub violations: usize,
    pub violation_rate: f64,
    pub mean_empirical_error: f64,
    pub mean_true_error: f64,
    pub max_compressed_size: usize,
    pub reports: Vec<GeneralizationReport>,
}

/// Runs `trials` independent trials with seeds seed, seed+1, ...
pub fn generalization_experiment<S: LabeledSource>(
    source: &S,
    m: usize,
    eps: f64,
    delta: f64,
    test_size: usize,
    trials: usize,
    seed: u64,
) -> Result<GeneralizationSummary> {
    let reports = (0..trials as u64)
        .map(|i| generalization_trial(source, m, eps, delta, test_size, seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let n = reports.len().max(1) as f64;
    let violations = reports.iter().filter(|r| r.violated).count();
    Ok(GeneralizationSummary {
        trials,
        violations,
        violation_rate: violations as f64 / n,
        mean_empirical_error: reports.iter().map(|r| r.empirical_error).sum::<f64>() / n,
        mean_true_error: reports.iter().map(|r| r.true_error_estimate).sum::<f64>() / n,
        max_compressed_size: reports.iter().map(|r| r.compressed_size).max().unwrap_or(0),
        reports,
    })
}

/// A fresh planted source in `dim` dimensions drawn from `seed`.
pub fn planted_source(dim: usize, eps: f64, seed: u64) -> Result<PlantedDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _ = rng.random::<u64>();
    PlantedDistribution::random(dim, eps, &mut rng)
}
