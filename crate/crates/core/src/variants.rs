//! Perceptron variants and the bounds they guarantee.
//!
//! | algorithm       | update when        | threshold after update t            |
//! |-----------------|--------------------|-------------------------------------|
//! | `Classic`       | y w·x ≤ 0          | 0                                   |
//! | `BetaFixed`     | y w·x < β          | β                                   |
//! | `RIndependent`  | y w·x ≤ β          | 4‖x‖² whenever β < ‖x‖²             |
//! | `Infinity`      | y w·x ≤ β          | ½((t+1)^α − t^α − 1)                |
//! | `Combined`      | y w·x ≤ β          | R̂² · ½((t+1)^α − t^α − 1)           |
//!
//! R̂ is the largest norm among the examples updated so far. Scaling the data
//! by c scales both sides of every comparison of `Combined` by c², so its
//! trace is scale free and, whenever R̂ = 1, identical to `Infinity`.

use serde::{Deserialize, Serialize};

use crate::dataset::{Hyperplane, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle::MarginCertificate;
use crate::report::BoundCheck;
use crate::trace::{UpdateStep, UpdateTrace};

/// Absolute slack used when comparing observations against bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// Cap used when no margin is known.
pub const DEFAULT_MAX_UPDATES: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Classic,
    BetaFixed,
    RIndependent,
    Infinity,
    Combined,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Classic => "classic",
            Algorithm::BetaFixed => "beta",
            Algorithm::RIndependent => "r-indep",
            Algorithm::Infinity => "inf",
            Algorithm::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// Resume the search right after the last updated example, wrapping around.
    Cyclic,
    /// Always take the violator with the smallest index.
    FirstViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub alpha: f64,
    pub max_updates: usize,
    pub scan_order: ScanOrder,
    pub record_norms: bool,
}

impl VariantConfig {
    fn base(algorithm: Algorithm) -> Self {
        VariantConfig {
            algorithm,
            beta: 0.0,
            alpha: 1.5,
            max_updates: DEFAULT_MAX_UPDATES,
            scan_order: ScanOrder::Cyclic,
            record_norms: false,
        }
    }

    pub fn classic() -> Self {
        Self::base(Algorithm::Classic)
    }

    pub fn beta(beta: f64) -> Self {
        VariantConfig {
            beta,
            ..Self::base(Algorithm::BetaFixed)
        }
    }

    pub fn r_independent() -> Self {
        Self::base(Algorithm::RIndependent)
    }

    pub fn infinity(alpha: f64) -> Self {
        VariantConfig {
            alpha,
            ..Self::base(Algorithm::Infinity)
        }
    }

    pub fn combined(alpha: f64) -> Self {
        VariantConfig {
            alpha,
            ..Self::base(Algorithm::Combined)
        }
    }

    pub fn with_max_updates(mut self, max_updates: usize) -> Self {
        self.max_updates = max_updates;
        self
    }

    pub fn with_scan(mut self, scan_order: ScanOrder) -> Self {
        self.scan_order = scan_order;
        self
    }

    pub fn recording_norms(mut self) -> Self {
        self.record_norms = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_updates < 1 {
            return Err(Error::InvalidParameter("max_updates must be at least 1".into()));
        }
        match self.algorithm {
            Algorithm::BetaFixed if !(self.beta > 0.0 && self.beta.is_finite()) => Err(
                Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)),
            ),
            Algorithm::Infinity | Algorithm::Combined
                if !(self.alpha > 1.0 && self.alpha < 2.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "alpha must lie strictly inside (1, 2), got {}",
                    self.alpha
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        let mut p = serde_json::json!({
            "max_updates": self.max_updates,
            "scan_order": self.scan_order,
        });
        match self.algorithm {
            Algorithm::BetaFixed => p["beta"] = self.beta.into(),
            Algorithm::Infinity | Algorithm::Combined => p["alpha"] = self.alpha.into(),
            _ => {}
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub hyperplane: Hyperplane,
    pub trace: UpdateTrace,
    /// No example violates the loop condition at exit.
    pub terminated: bool,
    pub beta_final: f64,
    /// Number of times the threshold was raised by the R-independent rule.
    pub beta_changes: usize,
    /// ‖w^(t)‖ for t = 0..=T when requested.
    pub norm_history: Option<Vec<f64>>,
}

impl TrainResult {
    pub fn update_count(&self) -> usize {
        self.trace.update_count()
    }

    /// Normalized margin of the output, or `None` when w = 0.
    pub fn margin(&self, ds: &LabeledDataset) -> Option<f64> {
        crate::dataset::margin_report(ds, &self.hyperplane)
            .ok()
            .map(|r| r.margin)
    }
}

/// ½((t+1)^α − t^α − 1), evaluated without cancellation for large t.
pub fn aggressive_threshold(t: f64, alpha: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let growth = t.powf(alpha) * (alpha * (1.0 / t).ln_1p()).exp_m1();
    0.5 * (growth - 1.0)
}

/// The margin lower bound ½((t+1)^α − t^α − 1) / t^{α/2} of the ∞-perceptron.
pub fn infinity_margin_profile(t: f64, alpha: f64) -> f64 {
    aggressive_threshold(t, alpha) / t.powf(alpha / 2.0)
}

#[inline]
fn violates(algorithm: Algorithm, margin: f64, beta: f64) -> bool {
    match algorithm {
        Algorithm::Classic => margin <= 0.0,
        Algorithm::BetaFixed => margin < beta,
        Algorithm::RIndependent | Algorithm::Infinity | Algorithm::Combined => margin <= beta,
    }
}

pub fn train(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidParameter("cannot train on an empty dataset".into()));
    }
    if cfg.algorithm == Algorithm::Infinity {
        let r = ds.max_norm();
        if r > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "the infinity perceptron needs max norm <= 1 (got {r}); rescale the data or use the combined variant"
            )));
        }
    }

    let n = ds.len();
    let norms_sq: Vec<f64> = ds.points().iter().map(|x| linalg::norm_sq(x)).collect();
    let mut w = vec![0.0; ds.dim()];
    let mut steps = Vec::new();
    let mut t = 0usize;
    let mut beta = match cfg.algorithm {
        Algorithm::BetaFixed => cfg.beta,
        _ => 0.0,
    };
    let mut beta_changes = 0;
    let mut scale_sq: f64 = 0.0;
    let mut last: Option<usize> = None;
    let mut norms = cfg.record_norms.then(|| vec![0.0]);

    let terminated = loop {
        let start = match cfg.scan_order {
            ScanOrder::Cyclic => last.map_or(0, |i| (i + 1) % n),
            ScanOrder::FirstViolation => 0,
        };
        let violator = (0..n).map(|k| (start + k) % n).find(|&i| {
            let (x, y) = (ds.point(i), ds.label(i));
            violates(cfg.algorithm, y.value() * linalg::dot(&w, x), beta)
        });
        let Some(i) = violator else {
            break true;
        };
        if t >= cfg.max_updates {
            break false;
        }
        steps.push(UpdateStep { t, index: i, beta });
        linalg::add_scaled(&mut w, ds.label(i).value(), ds.point(i));
        t += 1;
        last = Some(i);
        match cfg.algorithm {
            Algorithm::Classic | Algorithm::BetaFixed => {}
            Algorithm::RIndependent => {
                if beta < norms_sq[i] {
                    beta = 4.0 * norms_sq[i];
                    beta_changes += 1;
                }
            }
            Algorithm::Infinity => beta = aggressive_threshold(t as f64, cfg.alpha),
            Algorithm::Combined => {
                scale_sq = scale_sq.max(norms_sq[i]);
                beta = scale_sq * aggressive_threshold(t as f64, cfg.alpha);
            }
        }
        if let Some(h) = norms.as_mut() {
            h.push(linalg::norm(&w));
        }
    };

    Ok(TrainResult {
        hyperplane: Hyperplane::linear(w.clone()),
        trace: UpdateTrace { steps, final_w: w },
        terminated,
        beta_final: beta,
        beta_changes,
        norm_history: norms,
    })
}

pub fn train_classic(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    train(ds, &VariantConfig { algorithm: Algorithm::Classic, ..cfg.clone() })
}

pub fn train_beta(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    train(ds, &VariantConfig { algorithm: Algorithm::BetaFixed, ..cfg.clone() })
}

pub fn train_r_independent(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    train(ds, &VariantConfig { algorithm: Algorithm::RIndependent, ..cfg.clone() })
}

pub fn train_infinity(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    train(ds, &VariantConfig { algorithm: Algorithm::Infinity, ..cfg.clone() })
}

pub fn train_combined(ds: &LabeledDataset, cfg: &VariantConfig) -> Result<TrainResult> {
    train(ds, &VariantConfig { algorithm: Algorithm::Combined, ..cfg.clone() })
}

/// Update-count bound for the algorithm given the optimal margin and R.
/// The R-independent bound uses the constant 32 from the summation in its
/// proof rather than the stated 10.
pub fn update_bound(cfg: &VariantConfig, eps_star: f64, r: f64) -> f64 {
    let e2 = eps_star * eps_star;
    match cfg.algorithm {
        Algorithm::Classic => r * r / e2,
        Algorithm::BetaFixed => (2.0 * cfg.beta + r * r) / e2,
        Algorithm::RIndependent => 32.0 * r * r / e2,
        Algorithm::Infinity => (1.0 / eps_star).powf(2.0 / (2.0 - cfg.alpha)),
        Algorithm::Combined => (r / eps_star).powf(2.0 / (2.0 - cfg.alpha)),
    }
}

/// 10 × the applicable update bound, capped to keep the loop finite.
pub fn default_max_updates(cfg: &VariantConfig, eps_star: Option<f64>, r: f64) -> usize {
    match eps_star {
        Some(e) if e > 0.0 => {
            let cap = 10.0 * update_bound(cfg, e, r);
            if cap.is_finite() {
                cap.ceil().clamp(1.0, 1e10) as usize
            } else {
                10_000_000_000
            }
        }
        _ => DEFAULT_MAX_UPDATES,
    }
}

/// Guaranteed margin of the output for the algorithm, when one exists.
pub fn margin_bound(cfg: &VariantConfig, eps_star: f64, r: f64) -> Option<f64> {
    match cfg.algorithm {
        Algorithm::Classic | Algorithm::Combined => None,
        Algorithm::BetaFixed => Some(cfg.beta * eps_star / (2.0 * cfg.beta + r * r)),
        Algorithm::RIndependent => Some(eps_star / 3.0),
        Algorithm::Infinity => {
            let a = cfg.alpha;
            Some(0.5 * a * eps_star - eps_star.powf(a / (2.0 - a)))
        }
    }
}

/// ε*(1 − 2δ − δ ln(1/δ)) with δ = 1 − α/2.
pub fn infinity_refined_margin_bound(alpha: f64, eps_star: f64) -> f64 {
    let delta = 1.0 - alpha / 2.0;
    eps_star * (1.0 - 2.0 * delta - delta * (1.0 / delta).ln())
}

/// Checks a run against the guarantees of its algorithm. Returns the asserted
/// checks and the informational ones separately.
pub fn bound_checks(
    ds: &LabeledDataset,
    cfg: &VariantConfig,
    result: &TrainResult,
    cert: &MarginCertificate,
) -> (Vec<BoundCheck>, Vec<BoundCheck>) {
    let mut checks = vec![BoundCheck::holds("terminated", result.terminated)];
    let mut info = Vec::new();
    let eps = cert.eps_star;
    let r = ds.max_norm();
    let updates = result.update_count() as f64;
    let margin = result.margin(ds).unwrap_or(f64::NEG_INFINITY);
    checks.push(BoundCheck::at_most(
        "margin_at_most_optimal",
        margin,
        cert.upper_bound,
        BOUND_SLACK,
    ));
    if !cert.separable() {
        return (checks, info);
    }
    checks.push(BoundCheck::at_most(
        "update_count",
        updates,
        update_bound(cfg, eps, r),
        BOUND_SLACK,
    ));
    match margin_bound(cfg, eps, r) {
        Some(b) => checks.push(BoundCheck::at_least("margin", margin, b, BOUND_SLACK)),
        None => checks.push(BoundCheck::at_least("margin_positive", margin, 0.0, 0.0)),
    }
    match cfg.algorithm {
        Algorithm::RIndependent => {
            info.push(BoundCheck::at_most(
                "update_count_stated_constant_10",
                updates,
                10.0 * r * r / (eps * eps),
                BOUND_SLACK,
            ));
            let rmin = ds.min_norm();
            if rmin > 0.0 {
                let changes = (r / rmin).log2().ceil().max(1.0);
                checks.push(BoundCheck::at_most(
                    "beta_changes",
                    result.beta_changes as f64,
                    changes,
                    0.0,
                ));
            }
        }
        Algorithm::Infinity => {
            info.push(BoundCheck::at_least(
                "margin_stated_alpha_eps_over_2",
                margin,
                0.5 * cfg.alpha * eps,
                BOUND_SLACK,
            ));
            info.push(BoundCheck::at_least(
                "margin_refined",
                margin,
                infinity_refined_margin_bound(cfg.alpha, eps),
                BOUND_SLACK,
            ));
        }
        Algorithm::Combined => {
            info.push(BoundCheck::at_least(
                "relative_margin_vs_0.9_eps",
                margin / r,
                0.9 * eps / r,
                BOUND_SLACK,
            ));
        }
        _ => {}
    }
    (checks, info)
}

/// The two-point family on which the ∞-perceptron needs
/// Ω((1/ε)^{2/(2−α)}) updates.
pub fn sharp_pair(eps: f64) -> Result<LabeledDataset> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let a = (1.0 - eps * eps).sqrt();
    LabeledDataset::new(
        vec![vec![a, eps], vec![a, -eps]],
        vec![crate::dataset::Label::Positive, crate::dataset::Label::Negative],
    )
}

/// Exact update count of the ∞-perceptron on [`sharp_pair`], from its
/// closed-form trajectory (either scan order gives the same one).
///
/// After an even number t of updates w = (0, tε), both examples have margin
/// tε²; after an odd number w = (a, tε) and the second example has margin
/// tε² − a². The run stops at the first t ≥ 1 whose margin exceeds β_t. Both
/// gaps tε² − β_t and tε² − a² − β_t are convex in t and non-positive at 0,
/// so their positive sets are rays and a doubling search finds the first
/// integer in each. The count is returned as `f64` because it overflows u64
/// for small ε.
pub fn sharp_pair_update_count(eps: f64, alpha: f64) -> f64 {
    let e2 = eps * eps;
    let a2 = 1.0 - e2;
    let even = first_index(|k| {
        let t = 2.0 * k;
        t * e2 - aggressive_threshold(t, alpha) > 0.0
    });
    let odd = first_index(|k| {
        let t = 2.0 * k + 1.0;
        t * e2 - a2 - aggressive_threshold(t, alpha) > 0.0
    });
    (2.0 * even.max(1.0)).min(2.0 * odd + 1.0)
}

/// Smallest integer k ≥ 0 with `pred(k)`, for a monotone predicate.
fn first_index(pred: impl Fn(f64) -> bool) -> f64 {
    if pred(0.0) {
        return 0.0;
    }
    let mut hi = 1.0f64;
    while !pred(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        lo = 0.0;
    }
    // invariant: !pred(lo), pred(hi)
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs_checked: u64,
    /// `(alpha, t_earlier, t_later, f_earlier_min, f_later)` for each failure.
    pub violations: Vec<(f64, f64, f64, f64, f64)>,
}

impl MonotonicityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies f(t₂) ≤ f(t₁) + 1e-12 for all t₁ < t₂ in the grid, where f is
/// [`infinity_margin_profile`].
pub fn check_threshold_monotonicity(alpha_grid: &[f64], t_grid: &[f64]) -> Result<MonotonicityReport> {
    if let Some(a) = alpha_grid.iter().find(|a| !(**a > 1.0 && **a < 2.0)) {
        return Err(Error::InvalidParameter(format!("alpha {a} outside (1, 2)")));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 1.0)) {
        return Err(Error::InvalidParameter(format!("t = {t} is below 1")));
    }
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut report = MonotonicityReport {
        pairs_checked: 0,
        violations: Vec::new(),
    };
    for &alpha in alpha_grid {
        let mut running_min = f64::INFINITY;
        let mut argmin = 0.0;
        for (j, &t) in ts.iter().enumerate() {
            let f = infinity_margin_profile(t, alpha);
            if j > 0 {
                report.pairs_checked += j as u64;
                if f > running_min + 1e-12 {
                    report.violations.push((alpha, argmin, t, running_min, f));
                }
            }
            if f < running_min {
                running_min = f;
                argmin = t;
            }
        }
    }
    Ok(report)
}

/// `n` log-spaced points covering [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
