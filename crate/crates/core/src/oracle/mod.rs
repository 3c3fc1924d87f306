//! Ground-truth margins.
//!
//! The optimal through-origin margin of a labelled sample equals the norm of
//! the minimum-norm point of conv{y_i x_i}, and its direction is the optimal
//! unit normal. The same solver, run on the Minkowski difference of two point
//! sets, gives the distance between their convex hulls.

mod wolfe;

use serde::{Deserialize, Serialize};

pub use wolfe::{min_norm_point, AtomSet, MinNormPoint, MinkowskiDifference, SignedAtoms, SolverOptions};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest point set whose 2^n labelings will be enumerated.
pub const MAX_ENUMERATION: usize = 20;

pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Default gap tolerance, 1e-9 × max(1, R).
pub fn default_tol(max_norm: f64) -> f64 {
    1e-9 * max_norm.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCertificate {
    /// Certified lower bound on the optimal margin: min_i y_i (w*·x_i).
    /// Zero when the sample is not separable through the origin.
    pub eps_star: f64,
    /// ‖v‖ for the final hull point v; the optimum lies in [eps_star, upper_bound].
    pub upper_bound: f64,
    pub w_star: Option<Vec<f64>>,
    pub duality_gap: f64,
    /// `(example index, convex weight)` of the hull point.
    pub support: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

impl MarginCertificate {
    pub fn separable(&self) -> bool {
        self.w_star.is_some()
    }
}

fn certify(points: &[Vec<f64>], signs: &[f64], tol: f64, max_iter: usize) -> MarginCertificate {
    let atoms = SignedAtoms { points, signs };
    let sol = min_norm_point(
        &atoms,
        &SolverOptions {
            tol,
            max_iter,
            record_history: false,
        },
    );
    if sol.upper <= tol {
        return MarginCertificate {
            eps_star: 0.0,
            upper_bound: sol.upper,
            w_star: None,
            duality_gap: sol.upper,
            support: sol.weights,
            iterations: sol.iterations,
            converged: sol.converged,
        };
    }
    let w = linalg::scaled(&sol.point, 1.0 / sol.upper);
    let eps_star = points
        .iter()
        .zip(signs)
        .map(|(x, s)| s * linalg::dot(&w, x))
        .fold(f64::INFINITY, f64::min);
    MarginCertificate {
        eps_star,
        upper_bound: sol.upper,
        w_star: Some(w),
        duality_gap: (sol.upper - eps_star).max(0.0),
        support: sol.weights,
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

/// Optimal margin ε* = max_{‖w‖=1} min_i y_i w·x_i with a certified gap.
pub fn max_margin(ds: &LabeledDataset, tol: f64) -> Result<MarginCertificate> {
    max_margin_with(ds, tol, DEFAULT_MAX_ITER)
}

pub fn max_margin_with(ds: &LabeledDataset, tol: f64, max_iter: usize) -> Result<MarginCertificate> {
    if ds.is_empty() {
        return Err(Error::InvalidParameter("oracle needs a nonempty dataset".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let signs: Vec<f64> = ds.labels().iter().map(|l| l.value()).collect();
    Ok(certify(ds.points(), &signs, tol, max_iter))
}

/// ε* with the default tolerance for the dataset's radius.
pub fn optimal_margin(ds: &LabeledDataset) -> Result<MarginCertificate> {
    max_margin(ds, default_tol(ds.max_norm()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullDistance {
    /// ‖p − q‖
    pub distance: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Convex weights over K and over L.
    pub p_weights: Vec<f64>,
    pub q_weights: Vec<f64>,
    /// The true distance lies in [distance − gap, distance].
    pub gap: f64,
    pub converged: bool,
}

fn check_point_set(name: &str, set: &[Vec<f64>]) -> Result<usize> {
    let dim = set
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidParameter(format!("point set {name} is empty")))?;
    for (index, p) in set.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
                index,
            });
        }
    }
    Ok(dim)
}

/// Distance between conv(K) and conv(L) with an explicit witness pair.
pub fn hull_distance(k: &[Vec<f64>], l: &[Vec<f64>], tol: f64) -> Result<HullDistance> {
    let dk = check_point_set("K", k)?;
    let dl = check_point_set("L", l)?;
    if dk != dl {
        return Err(Error::DimensionMismatch {
            expected: dk,
            found: dl,
            index: 0,
        });
    }
    let atoms = MinkowskiDifference { k, l };
    let sol = min_norm_point(
        &atoms,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    );
    let mut p_weights = vec![0.0; k.len()];
    let mut q_weights = vec![0.0; l.len()];
    for &(id, w) in &sol.weights {
        let (i, j) = atoms.split(id);
        p_weights[i] += w;
        q_weights[j] += w;
    }
    let combine = |set: &[Vec<f64>], weights: &[f64]| {
        let mut out = vec![0.0; dk];
        for (x, &w) in set.iter().zip(weights) {
            if w != 0.0 {
                linalg::add_scaled(&mut out, w, x);
            }
        }
        out
    };
    let p = combine(k, &p_weights);
    let q = combine(l, &q_weights);
    let distance = linalg::distance(&p, &q);
    let gap = if distance <= tol {
        distance
    } else {
        let v = linalg::sub(&p, &q);
        (distance - atoms.min_inner(&v).1 / distance).max(0.0)
    };
    Ok(HullDistance {
        distance,
        p,
        q,
        p_weights,
        q_weights,
        gap,
        converged: sol.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingMargin {
    pub labels: Vec<Label>,
    /// Certified optimal margin of the labeling, 0 when not separable.
    pub margin: f64,
}

/// Oracle margin of every one of the 2^n labelings of `points`.
///
/// Labeling `m` gives point `i` the label `Negative` iff bit `i` of `m` is
/// set. A labeling and its negation share a margin, so only half are solved.
pub fn enumerate_margins(points: &[Vec<f64>], tol: f64) -> Result<Vec<LabelingMargin>> {
    let n = points.len();
    if n > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUMERATION,
        });
    }
    if n == 0 {
        return Ok(vec![LabelingMargin {
            labels: vec![],
            margin: f64::INFINITY,
        }]);
    }
    check_point_set("X", points)?;
    let total = 1usize << n;
    let mut margins = vec![0.0; total];
    let mut signs = vec![0.0; n];
    for mask in 0..total / 2 {
        for (i, s) in signs.iter_mut().enumerate() {
            *s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        }
        let m = certify(points, &signs, tol, DEFAULT_MAX_ITER).eps_star;
        margins[mask] = m;
        margins[(total - 1) ^ mask] = m;
    }
    Ok(margins
        .into_iter()
        .enumerate()
        .map(|(mask, margin)| LabelingMargin {
            labels: (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        Label::Negative
                    } else {
                        Label::Positive
                    }
                })
                .collect(),
            margin,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ds(points: &[&[f64]], labels: &[i8]) -> LabeledDataset {
        LabeledDataset::new(
            points.iter().map(|p| p.to_vec()).collect(),
            labels.iter().map(|&l| Label::try_from(l).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_hull() {
        let c = max_margin(&ds(&[&[1.0, 0.0]], &[1]), 1e-12).unwrap();
        assert_abs_diff_eq!(c.eps_star, 1.0, epsilon = 1e-12);
        assert_eq!(c.w_star.unwrap(), vec![1.0, 0.0]);
        assert!(c.converged);
    }

    #[test]
    fn segment_minimum_at_its_midpoint() {
        let c = max_margin(&ds(&[&[0.0, 1.0], &[0.6, 0.8]], &[1, 1]), 1e-12).unwrap();
        assert_abs_diff_eq!(c.eps_star, 0.9f64.sqrt(), epsilon = 1e-12);
        let w = c.w_star.unwrap();
        assert_abs_diff_eq!(w[0], 0.1f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.9f64.sqrt(), epsilon = 1e-12);
        for &(_, weight) in &c.support {
            assert_abs_diff_eq!(weight, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn origin_inside_hull_is_degenerate() {
        let c = max_margin(&ds(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1, 1]), 1e-9).unwrap();
        assert_eq!(c.eps_star, 0.0);
        assert!(c.w_star.is_none());
        assert!(!c.separable());
    }

    #[test]
    fn rejects_empty_and_bad_tolerance() {
        let empty = LabeledDataset::with_dim(2, vec![], vec![]).unwrap();
        assert!(max_margin(&empty, 1e-9).is_err());
        assert!(max_margin(&ds(&[&[1.0]], &[1]), 0.0).is_err());
    }

    #[test]
    fn hull_distance_between_singletons() {
        let h = hull_distance(&[vec![0.5, 0.0]], &[vec![-0.5, 0.0]], 1e-12).unwrap();
        assert_abs_diff_eq!(h.distance, 1.0, epsilon = 1e-12);
        assert_eq!(h.p, vec![0.5, 0.0]);
        assert_eq!(h.q, vec![-0.5, 0.0]);
    }

    #[test]
    fn hull_distance_with_containment_is_zero() {
        let h = hull_distance(&[vec![0.0, 0.0], vec![1.0, 0.0]], &[vec![0.5, 0.0]], 1e-12).unwrap();
        assert!(h.distance <= 1e-12);
        assert_abs_diff_eq!(h.p_weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hull_distance_between_shifted_squares() {
        let square = |dx: f64| {
            vec![
                vec![dx, 0.0],
                vec![dx + 1.0, 0.0],
                vec![dx, 1.0],
                vec![dx + 1.0, 1.0],
            ]
        };
        let h = hull_distance(&square(2.0), &square(-2.0), 1e-12).unwrap();
        // right edge of L at x = -1, left edge of K at x = 2
        assert_abs_diff_eq!(h.distance, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(linalg::distance(&h.p, &h.q), h.distance, epsilon = 1e-12);
    }

    #[test]
    fn basis_pair_labelings_all_have_margin_one_over_root_two() {
        let all = enumerate_margins(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-12).unwrap();
        assert_eq!(all.len(), 4);
        for lm in all {
            assert_abs_diff_eq!(lm.margin, 0.5f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_point_has_two_labelings_of_margin_one() {
        let all = enumerate_margins(&[vec![1.0]], 1e-12).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|lm| (lm.margin - 1.0).abs() < 1e-12));
    }

    #[test]
    fn enumeration_guard() {
        let points = vec![vec![1.0]; 21];
        assert!(matches!(
            enumerate_margins(&points, 1e-9),
            Err(Error::TooLarge { n: 21, max: 20 })
        ));
    }
}
