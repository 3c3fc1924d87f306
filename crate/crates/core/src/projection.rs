//! Gaussian random projections and the counting of robust labelings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracle::{self, LabelingMargin};

/// Slack when comparing certified margins against a partition threshold.
pub const MARGIN_SLACK: f64 = 1e-9;

/// Default constant in k = ⌈C ln(n/δ)/ε⁴⌉.
pub const DEFAULT_C: f64 = 4.0;

/// A k×d matrix with i.i.d. N(0, 1/k) entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMatrix {
    pub k: usize,
    pub d: usize,
    pub seed: Option<u64>,
    pub scale: f64,
    pub entries: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn sample(d: usize, k: usize, seed: u64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "projection dimensions must be positive, got d={d}, k={k}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (k as f64).sqrt();
        let entries = (0..k * d)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(ProjectionMatrix {
            k,
            d,
            seed: Some(seed),
            scale,
            entries,
        })
    }

    /// The d×d identity; lets tests run the pipeline without distortion.
    pub fn identity(d: usize) -> Self {
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1.0;
        }
        ProjectionMatrix {
            k: d,
            d,
            seed: None,
            scale: 1.0,
            entries,
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.d..(r + 1) * self.d]
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
                index: 0,
            });
        }
        Ok((0..self.k).map(|r| linalg::dot(self.row(r), x)).collect())
    }

    pub fn apply_all(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        points
            .iter()
            .enumerate()
            .map(|(index, x)| {
                self.apply(x).map_err(|_| Error::DimensionMismatch {
                    expected: self.d,
                    found: x.len(),
                    index,
                })
            })
            .collect()
    }
}

/// Largest |Ax_i·Ax_j − x_i·x_j| over all pairs i ≤ j.
pub fn max_inner_product_distortion(points: &[Vec<f64>], projected: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..points.len() {
        for j in i..points.len() {
            let before = linalg::dot(&points[i], &points[j]);
            let after = linalg::dot(&projected[i], &projected[j]);
            worst = worst.max((after - before).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JlReport {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub max_distortion: f64,
    pub within_delta: bool,
}

/// Fraction of seeded projections under which some pair's inner product
/// moves by more than `eps`.
pub fn jl_check(
    points: &[Vec<f64>],
    k: usize,
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<JlReport> {
    let d = check_points(points)?;
    if let Some(i) = points.iter().position(|x| linalg::norm(x) > 1.0 + 1e-12) {
        return Err(Error::Precondition(format!("point {i} has norm above 1")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let mut failures = 0;
    let mut max_distortion: f64 = 0.0;
    for trial in 0..trials {
        let a = ProjectionMatrix::sample(d, k, seed.wrapping_add(trial as u64))?;
        let distortion = max_inner_product_distortion(points, &a.apply_all(points)?);
        max_distortion = max_distortion.max(distortion);
        if distortion > eps {
            failures += 1;
        }
    }
    let failure_rate = failures as f64 / trials as f64;
    Ok(JlReport {
        k,
        eps,
        delta,
        trials,
        failures,
        failure_rate,
        max_distortion,
        within_delta: failure_rate <= delta,
    })
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidParameter("the point set is empty".into()));
    };
    let d = first.len();
    for (index, x) in points.iter().enumerate() {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
                index,
            });
        }
    }
    Ok(d)
}

/// (2(n+1))^{1/ε²}, possibly infinite.
pub fn partition_count_bound(n: usize, eps: f64) -> f64 {
    (2.0 * (n as f64 + 1.0)).powf(1.0 / (eps * eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCensus {
    pub eps: f64,
    pub n: usize,
    pub count: usize,
    pub bound: f64,
    pub per_labeling_margins: Vec<LabelingMargin>,
}

impl PartitionCensus {
    pub fn within_bound(&self) -> bool {
        (self.count as f64) <= self.bound
    }
}

fn census_tol(points: &[Vec<f64>]) -> f64 {
    oracle::default_tol(points.iter().map(|x| linalg::norm(x)).fold(0.0, f64::max))
}

/// Counts the ε-partitions of `points` by enumerating all 2^n labelings.
pub fn census(points: &[Vec<f64>], eps: f64) -> Result<PartitionCensus> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let margins = oracle::enumerate_margins(points, census_tol(points))?;
    let count = margins.iter().filter(|m| m.margin >= eps - MARGIN_SLACK).count();
    Ok(PartitionCensus {
        eps,
        n: points.len(),
        count,
        bound: partition_count_bound(points.len(), eps),
        per_labeling_margins: margins,
    })
}

/// ⌈C ln(n/δ)/ε⁴⌉.
pub fn target_dimension(n: usize, eps: f64, delta: f64, c: f64) -> usize {
    (c * (n as f64 / delta).ln() / eps.powi(4)).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingMode {
    /// All 2^n labelings (n ≤ 20).
    Exhaustive,
    /// Labelings induced by `count` random signed multisets of size ⌈1/ε²⌉.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimredConfig {
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    pub seeds: Vec<u64>,
    pub mode: LabelingMode,
    /// Use the identity instead of a random matrix.
    pub identity: bool,
}

impl DimredConfig {
    pub fn new(eps: f64, delta: f64, trials: u64) -> Self {
        DimredConfig {
            eps,
            delta,
            c: DEFAULT_C,
            seeds: (0..trials).collect(),
            mode: LabelingMode::Exhaustive,
            identity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// ε-partitions of X whose margin on AX is below ε/2.
    pub forward_failures: usize,
    /// ε/2-partitions of AX whose margin on X is below ε/4.
    pub backward_failures: usize,
}

impl SeedOutcome {
    pub fn failed(&self) -> bool {
        self.forward_failures + self.backward_failures > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimredReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub labelings: usize,
    pub eps_partitions: usize,
    pub per_seed: Vec<SeedOutcome>,
    pub failures: usize,
    pub failure_rate: f64,
}

fn labeling_margins(points: &[Vec<f64>], labelings: &[Vec<Label>], tol: f64) -> Result<Vec<f64>> {
    labelings
        .iter()
        .map(|labels| {
            let ds = LabeledDataset::new(points.to_vec(), labels.clone())?;
            Ok(oracle::max_margin(&ds, tol)?.eps_star)
        })
        .collect()
}

/// Labelings sign(w·x) for w a sum of ⌈1/ε²⌉ randomly signed points.
pub fn sample_labelings(points: &[Vec<f64>], eps: f64, count: usize, seed: u64) -> Vec<Vec<Label>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = (1.0 / (eps * eps)).ceil() as usize;
    let d = points[0].len();
    (0..count)
        .map(|_| {
            let mut w = vec![0.0; d];
            for _ in 0..size {
                let i = rng.random_range(0..points.len());
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                linalg::add_scaled(&mut w, s, &points[i]);
            }
            points
                .iter()
                .map(|x| Label::from_sign(linalg::dot(&w, x)))
                .collect()
        })
        .collect()
}

/// Projects X with each seed and checks both directions of robust-partition
/// preservation.
pub fn dimred_experiment(points: &[Vec<f64>], cfg: &DimredConfig) -> Result<DimredReport> {
    let d = check_points(points)?;
    let n = points.len();
    if !(cfg.eps > 0.0 && cfg.delta > 0.0 && cfg.delta < 1.0 && cfg.c > 0.0) {
        return Err(Error::InvalidParameter(
            "eps and C must be positive and delta must lie in (0, 1)".into(),
        ));
    }
    let k = if cfg.identity {
        d
    } else {
        target_dimension(n, cfg.eps, cfg.delta, cfg.c)
    };
    let tol = census_tol(points);

    let (labelings, x_margins): (Vec<Vec<Label>>, Vec<f64>) = match &cfg.mode {
        LabelingMode::Exhaustive => oracle::enumerate_margins(points, tol)?
            .into_iter()
            .map(|m| (m.labels, m.margin))
            .unzip(),
        LabelingMode::Sampled { count, seed } => {
            let ls = sample_labelings(points, cfg.eps, *count, *seed);
            let ms = labeling_margins(points, &ls, tol)?;
            (ls, ms)
        }
    };
    let eps_partitions = x_margins
        .iter()
        .filter(|&&m| m >= cfg.eps - MARGIN_SLACK)
        .count();

    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let a = if cfg.identity {
            ProjectionMatrix::identity(d)
        } else {
            ProjectionMatrix::sample(d, k, seed)?
        };
        let ax = a.apply_all(points)?;
        let ax_margins = match &cfg.mode {
            LabelingMode::Exhaustive => oracle::enumerate_margins(&ax, census_tol(&ax))?
                .into_iter()
                .map(|m| m.margin)
                .collect(),
            LabelingMode::Sampled { .. } => labeling_margins(&ax, &labelings, census_tol(&ax))?,
        };
        let mut outcome = SeedOutcome {
            seed,
            forward_failures: 0,
            backward_failures: 0,
        };
        for (mx, max) in x_margins.iter().zip(&ax_margins) {
            if *mx >= cfg.eps - MARGIN_SLACK && *max < cfg.eps / 2.0 - MARGIN_SLACK {
                outcome.forward_failures += 1;
            }
            if *max >= cfg.eps / 2.0 - MARGIN_SLACK && *mx < cfg.eps / 4.0 - MARGIN_SLACK {
                outcome.backward_failures += 1;
            }
        }
        per_seed.push(outcome);
    }
    let failures = per_seed.iter().filter(|s| s.failed()).count();
    Ok(DimredReport {
        n,
        d,
        k,
        eps: cfg.eps,
        delta: cfg.delta,
        labelings: labelings.len(),
        eps_partitions,
        failure_rate: if per_seed.is_empty() {
            0.0
        } else {
            failures as f64 / per_seed.len() as f64
        },
        per_seed,
        failures,
    })
}

/// The n standard basis vectors of R^n.
pub fn basis_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_vector_maps_to_zero() {
        let a = ProjectionMatrix::sample(5, 3, 1).unwrap();
        assert_eq!(a.apply(&[0.0; 5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        assert_eq!(
            ProjectionMatrix::sample(4, 3, 9).unwrap(),
            ProjectionMatrix::sample(4, 3, 9).unwrap()
        );
        assert_ne!(
            ProjectionMatrix::sample(4, 3, 9).unwrap().entries,
            ProjectionMatrix::sample(4, 3, 10).unwrap().entries
        );
    }

    #[test]
    fn identity_preserves_margins() {
        let x = basis_vectors(3);
        let a = ProjectionMatrix::identity(3);
        assert_eq!(a.apply_all(&x).unwrap(), x);
    }

    #[test]
    fn dimension_mismatch() {
        let a = ProjectionMatrix::identity(3);
        assert!(a.apply(&[1.0]).is_err());
        assert!(ProjectionMatrix::sample(0, 2, 0).is_err());
    }

    #[test]
    fn orthonormal_pair_concentrates() {
        let x = basis_vectors(2);
        let r = jl_check(&x, 2000, 0.1, 0.05, 200, 0).unwrap();
        assert!(r.failure_rate <= 0.05, "{r:?}");
    }

    #[test]
    fn large_eps_never_fails() {
        let x = basis_vectors(3);
        let r = jl_check(&x, 200, 2.0, 0.05, 50, 0).unwrap();
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn jl_requires_unit_ball() {
        assert!(jl_check(&[vec![2.0]], 10, 0.1, 0.1, 1, 0).is_err());
    }

    #[test]
    fn census_examples() {
        let x = basis_vectors(2);
        let c = census(&x, 0.7).unwrap();
        assert_eq!(c.count, 4);
        assert_abs_diff_eq!(c.bound, 6f64.powf(1.0 / 0.49), epsilon = 1e-9);
        assert_eq!(census(&x, 0.8).unwrap().count, 0);
        let c = census(&[vec![1.0]], 1.0).unwrap();
        assert_eq!(c.count, 2);
        assert_eq!(c.bound, 4.0);
    }

    #[test]
    fn target_dimension_formula() {
        assert_eq!(target_dimension(8, 0.4, 0.1, 4.0), 685);
    }

    #[test]
    fn identity_mode_has_no_failures() {
        let mut cfg = DimredConfig::new(0.4, 0.1, 3);
        cfg.identity = true;
        let r = dimred_experiment(&basis_vectors(5), &cfg).unwrap();
        assert_eq!(r.k, 5);
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn single_point_preservation_is_trivial() {
        let cfg = DimredConfig::new(0.4, 0.1, 5);
        let r = dimred_experiment(&[vec![0.6, 0.8]], &cfg).unwrap();
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn sampled_labelings_are_consistent() {
        let x = basis_vectors(4);
        let ls = sample_labelings(&x, 0.5, 10, 3);
        assert_eq!(ls.len(), 10);
        assert!(ls.iter().all(|l| l.len() == 4));
    }
}
