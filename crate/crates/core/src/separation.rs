//! Constructive sparse separation of two point sets, and sparse strategies
//! for the Point player of the point/hyperplane game.
//!
//! Both procedures run the β = 1 perceptron. For separation the points are
//! first moved into a frame where every point has norm ≤ 1 and every cross
//! distance is ≤ 1, then lifted. The run either stops (all lifted margins
//! ≥ 1), giving a separator that is a signed sum of few input points, or
//! its average iterate w/t gets short, which pins down a close pair of
//! convex combinations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::report::BoundCheck;

/// Relative tolerance for comparing recomputed sums.
const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    K,
    L,
}

/// x ↦ (x − center) / scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub center: Vec<f64>,
    pub scale: f64,
    /// Largest distance between a point of K and a point of L.
    pub sup_distance: f64,
}

impl Frame {
    /// Picks a center with an approximate minimum enclosing ball and the
    /// scale max(sup cross distance, radius about that center).
    pub fn fit(k: &[Vec<f64>], l: &[Vec<f64>]) -> Frame {
        let all: Vec<&Vec<f64>> = k.iter().chain(l).collect();
        let mut center = all[0].clone();
        for i in 1..=200 {
            let far = all
                .iter()
                .max_by(|a, b| linalg::distance(a, &center).total_cmp(&linalg::distance(b, &center)))
                .unwrap();
            let step = 1.0 / (i as f64 + 1.0);
            for (c, x) in center.iter_mut().zip(far.iter()) {
                *c += step * (x - *c);
            }
        }
        let radius = all
            .iter()
            .map(|x| linalg::distance(x, &center))
            .fold(0.0, f64::max);
        let sup_distance = k
            .iter()
            .flat_map(|p| l.iter().map(move |q| linalg::distance(p, q)))
            .fold(0.0, f64::max);
        Frame {
            center,
            scale: sup_distance.max(radius),
            sup_distance,
        }
    }

    pub fn to_frame(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(v, c)| (v - c) / self.scale)
            .collect()
    }

    pub fn from_frame(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(v, c)| v * self.scale + c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contributor {
    pub side: Side,
    pub index: usize,
    pub multiplicity: usize,
}

/// A separator with the convention w·x + b > 0 on K and < 0 on L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseHyperplane {
    /// Coefficients in the original coordinates.
    pub w: Vec<f64>,
    pub b: f64,
    /// The perceptron's output in the normalized frame.
    pub w_frame: Vec<f64>,
    pub b_frame: f64,
    pub sparsity: usize,
    pub contributors: Vec<Contributor>,
    /// min over K of (w·p + b)/‖w‖ and max over L, in the normalized frame.
    pub min_k_margin: f64,
    pub max_l_margin: f64,
    /// max over t of ‖w^(t)‖/√(6t) during the run.
    pub peak_norm_ratio: f64,
    pub frame: Frame,
}

impl SparseHyperplane {
    /// The separator as a core hyperplane (score w·x − b').
    pub fn hyperplane(&self) -> crate::Hyperplane {
        crate::Hyperplane::affine(self.w.clone(), -self.b)
    }
}

/// Convex combinations p of K and q of L that are close in the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityWitness {
    pub p_weights: Vec<(usize, f64)>,
    pub q_weights: Vec<(usize, f64)>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// ‖p − q‖ in the normalized frame.
    pub distance: f64,
    /// ‖p − q‖ in the original coordinates.
    pub distance_original: f64,
    pub updates: usize,
    /// max over t of ‖w^(t)‖/√(6t) during the run.
    pub peak_norm_ratio: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparationOutcome {
    Hyperplane(SparseHyperplane),
    Proximity(ProximityWitness),
}

impl SeparationOutcome {
    pub fn is_hyperplane(&self) -> bool {
        matches!(self, SeparationOutcome::Hyperplane(_))
    }
}

/// ⌈(10/ε)²⌉.
pub fn sparsity_bound(eps: f64) -> usize {
    (10.0 / eps).powi(2).ceil() as usize
}

fn check_sets(k: &[Vec<f64>], l: &[Vec<f64>]) -> Result<usize> {
    if k.is_empty() || l.is_empty() {
        return Err(Error::InvalidParameter("both point sets must be nonempty".into()));
    }
    let dim = k[0].len();
    for (index, x) in k.iter().chain(l).enumerate() {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
                index,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("point {index} has a non-finite coordinate")));
        }
    }
    Ok(dim)
}

fn weights_from_counts(counts: &[usize], total: usize) -> Vec<(usize, f64)> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c as f64 / total as f64))
        .collect()
}

fn combination(points: &[Vec<f64>], weights: &[(usize, f64)], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for &(i, a) in weights {
        linalg::add_scaled(&mut out, a, &points[i]);
    }
    out
}

fn side_margins(k: &[Vec<f64>], l: &[Vec<f64>], w: &[f64], b: f64) -> (f64, f64) {
    let n = linalg::norm(w);
    let m = |x: &Vec<f64>| (linalg::dot(w, x) + b) / n;
    let min_k = k.iter().map(m).fold(f64::INFINITY, f64::min);
    let max_l = l.iter().map(m).fold(f64::NEG_INFINITY, f64::max);
    (min_k, max_l)
}

pub fn sparse_separate(k: &[Vec<f64>], l: &[Vec<f64>], eps: f64) -> Result<SeparationOutcome> {
    let dim = check_sets(k, l)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let frame = Frame::fit(k, l);
    if frame.scale == 0.0 {
        // every point coincides
        return Ok(SeparationOutcome::Proximity(ProximityWitness {
            p_weights: vec![(0, 1.0)],
            q_weights: vec![(0, 1.0)],
            p: k[0].clone(),
            q: l[0].clone(),
            distance: 0.0,
            distance_original: 0.0,
            updates: 0,
            peak_norm_ratio: 0.0,
            frame,
        }));
    }
    let lift = |x: &[f64]| {
        let mut v = frame.to_frame(x);
        v.push(1.0);
        v
    };
    let kf: Vec<Vec<f64>> = k.iter().map(|x| lift(x)).collect();
    let lf: Vec<Vec<f64>> = l.iter().map(|x| lift(x)).collect();
    let n = kf.len() + lf.len();
    let signed = |i: usize| -> (Side, usize, f64, &Vec<f64>) {
        if i < kf.len() {
            (Side::K, i, 1.0, &kf[i])
        } else {
            (Side::L, i - kf.len(), -1.0, &lf[i - kf.len()])
        }
    };

    let cap = sparsity_bound(eps) + 1;
    let mut w = vec![0.0; dim + 1];
    let mut sum_k = vec![0.0; dim];
    let mut sum_l = vec![0.0; dim];
    let mut count_k = vec![0usize; kf.len()];
    let mut count_l = vec![0usize; lf.len()];
    let (mut t1, mut t2) = (0usize, 0usize);
    let mut last: Option<usize> = None;
    let mut peak_norm_ratio: f64 = 0.0;

    for t in 1..=cap {
        let start = last.map_or(0, |i| (i + 1) % n);
        let violator = (0..n).map(|s| (start + s) % n).find(|&i| {
            let (_, _, y, x) = signed(i);
            y * linalg::dot(&w, x) < 1.0
        });
        let Some(i) = violator else {
            let (w_frame, b_frame) = (w[..dim].to_vec(), w[dim]);
            let kk: Vec<Vec<f64>> = kf.iter().map(|x| x[..dim].to_vec()).collect();
            let ll: Vec<Vec<f64>> = lf.iter().map(|x| x[..dim].to_vec()).collect();
            let (min_k_margin, max_l_margin) = side_margins(&kk, &ll, &w_frame, b_frame);
            let mut contributors = Vec::new();
            for (index, &c) in count_k.iter().enumerate().filter(|(_, c)| **c > 0) {
                contributors.push(Contributor { side: Side::K, index, multiplicity: c });
            }
            for (index, &c) in count_l.iter().enumerate().filter(|(_, c)| **c > 0) {
                contributors.push(Contributor { side: Side::L, index, multiplicity: c });
            }
            let b = frame.scale * b_frame - linalg::dot(&w_frame, &frame.center);
            return Ok(SeparationOutcome::Hyperplane(SparseHyperplane {
                w: w_frame.clone(),
                b,
                w_frame,
                b_frame,
                sparsity: t - 1,
                contributors,
                min_k_margin,
                max_l_margin,
                peak_norm_ratio,
                frame,
            }));
        };
        let (side, idx, y, x) = signed(i);
        linalg::add_scaled(&mut w, y, x);
        match side {
            Side::K => {
                linalg::add_scaled(&mut sum_k, 1.0, &x[..dim]);
                count_k[idx] += 1;
                t1 += 1;
            }
            Side::L => {
                linalg::add_scaled(&mut sum_l, 1.0, &x[..dim]);
                count_l[idx] += 1;
                t2 += 1;
            }
        }
        last = Some(i);
        let norm = linalg::norm(&w);
        peak_norm_ratio = peak_norm_ratio.max(norm / (6.0 * t as f64).sqrt());

        if t1 > 0 && t2 > 0 && norm / (t as f64) < eps / 4.0 {
            let p = linalg::scaled(&sum_k, 1.0 / t1 as f64);
            let q = linalg::scaled(&sum_l, 1.0 / t2 as f64);
            let distance = linalg::distance(&p, &q);
            if distance < eps {
                let p_weights = weights_from_counts(&count_k, t1);
                let q_weights = weights_from_counts(&count_l, t2);
                let p = combination(k, &p_weights, dim);
                let q = combination(l, &q_weights, dim);
                return Ok(SeparationOutcome::Proximity(ProximityWitness {
                    distance_original: linalg::distance(&p, &q),
                    p_weights,
                    q_weights,
                    p,
                    q,
                    distance,
                    updates: t,
                    peak_norm_ratio,
                    frame,
                }));
            }
        }
    }
    Err(Error::Internal(format!(
        "sparse separation reached neither exit within {cap} updates"
    )))
}

/// Re-derives every claim of an outcome from the raw point sets.
pub fn verify_outcome(
    outcome: &SeparationOutcome,
    k: &[Vec<f64>],
    l: &[Vec<f64>],
    eps: f64,
) -> Vec<BoundCheck> {
    let mut checks = Vec::new();
    let Ok(dim) = check_sets(k, l) else {
        checks.push(BoundCheck::holds("valid_inputs", false));
        return checks;
    };
    match outcome {
        SeparationOutcome::Hyperplane(h) => {
            let frame = &h.frame;
            checks.push(BoundCheck::holds("frame_scale_positive", frame.scale > 0.0));
            if frame.scale <= 0.0 {
                return checks;
            }
            let in_range = h.contributors.iter().all(|c| match c.side {
                Side::K => c.index < k.len(),
                Side::L => c.index < l.len(),
            });
            checks.push(BoundCheck::holds("contributors_in_range", in_range));
            if !in_range {
                return checks;
            }
            let mut w = vec![0.0; dim];
            let mut b = 0.0;
            let mut sparsity = 0;
            for c in &h.contributors {
                let (x, y) = match c.side {
                    Side::K => (&k[c.index], 1.0),
                    Side::L => (&l[c.index], -1.0),
                };
                let m = c.multiplicity as f64;
                linalg::add_scaled(&mut w, y * m, &frame.to_frame(x));
                b += y * m;
                sparsity += c.multiplicity;
            }
            let scale = 1.0 + linalg::norm(&h.w_frame) + h.b_frame.abs();
            let replay_err = (linalg::distance(&w, &h.w_frame) + (b - h.b_frame).abs()) / scale;
            checks.push(BoundCheck::at_most("replay_equality", replay_err, 0.0, REPLAY_TOL));
            checks.push(BoundCheck::at_most(
                "sparsity_recount",
                (sparsity as f64 - h.sparsity as f64).abs(),
                0.0,
                0.0,
            ));
            checks.push(BoundCheck::at_most(
                "sparsity",
                h.sparsity as f64,
                sparsity_bound(eps) as f64,
                0.0,
            ));
            let kk: Vec<Vec<f64>> = k.iter().map(|x| frame.to_frame(x)).collect();
            let ll: Vec<Vec<f64>> = l.iter().map(|x| frame.to_frame(x)).collect();
            let (min_k, max_l) = side_margins(&kk, &ll, &h.w_frame, h.b_frame);
            checks.push(BoundCheck {
                name: "k_side_margin".into(),
                bound: eps / 30.0,
                observed: min_k,
                pass: min_k > eps / 30.0,
            });
            checks.push(BoundCheck {
                name: "l_side_margin".into(),
                bound: -eps / 30.0,
                observed: max_l,
                pass: max_l < -eps / 30.0,
            });
            let (min_k_orig, max_l_orig) = side_margins(k, l, &h.w, h.b);
            checks.push(BoundCheck::holds(
                "original_coordinates_separate",
                min_k_orig > 0.0 && max_l_orig < 0.0,
            ));
            let expected_b = frame.scale * h.b_frame - linalg::dot(&h.w_frame, &frame.center);
            checks.push(BoundCheck::at_most(
                "original_coordinates_consistent",
                (expected_b - h.b).abs() / (1.0 + expected_b.abs()),
                0.0,
                REPLAY_TOL,
            ));
        }
        SeparationOutcome::Proximity(pw) => {
            let valid = |ws: &[(usize, f64)], n: usize| {
                ws.iter().all(|&(i, a)| i < n && a >= 0.0)
                    && (ws.iter().map(|w| w.1).sum::<f64>() - 1.0).abs() <= 1e-12
            };
            let pv = valid(&pw.p_weights, k.len());
            let qv = valid(&pw.q_weights, l.len());
            checks.push(BoundCheck::holds("p_weights_convex", pv));
            checks.push(BoundCheck::holds("q_weights_convex", qv));
            if !(pv && qv) {
                return checks;
            }
            let p = combination(k, &pw.p_weights, dim);
            let q = combination(l, &pw.q_weights, dim);
            let d_orig = linalg::distance(&p, &q);
            let d = if pw.frame.scale > 0.0 { d_orig / pw.frame.scale } else { 0.0 };
            checks.push(BoundCheck {
                name: "witness_distance".into(),
                bound: eps,
                observed: d,
                pass: d < eps,
            });
            checks.push(BoundCheck::at_most(
                "witness_distance_recomputed",
                (d - pw.distance).abs(),
                0.0,
                REPLAY_TOL,
            ));
        }
    }
    checks
}

/// Output of the perceptron played as the Point player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    /// Index of the point added at step t = 1..=T; μ_t is uniform over the
    /// first t entries.
    pub updates: Vec<usize>,
    /// ‖v^(t)‖ for t = 1..=T.
    pub values: Vec<f64>,
    pub terminated: bool,
    pub hyperplane_strategy: Option<Vec<f64>>,
    /// Payoff min_v v·w̃ guaranteed by w̃, a lower bound on the game value
    /// (0 when the run did not terminate).
    pub eps_star_game: f64,
    /// 1/√(3T) when terminated, else 0.
    pub value_lower: f64,
    /// min_t ‖v^(t)‖, an upper bound on the game value.
    pub value_upper: f64,
}

impl GameTranscript {
    pub fn steps(&self) -> usize {
        self.updates.len()
    }

    /// The mixed strategy μ_t as (point index, probability), t ≥ 1.
    pub fn strategy(&self, t: usize) -> Vec<(usize, f64)> {
        let mut counts = std::collections::BTreeMap::new();
        for &i in &self.updates[..t] {
            *counts.entry(i).or_insert(0usize) += 1;
        }
        counts
            .into_iter()
            .map(|(i, c)| (i, c as f64 / t as f64))
            .collect()
    }
}

pub fn game_strategies(v: &[Vec<f64>], t_max: usize) -> Result<GameTranscript> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("the point set is empty".into()));
    }
    check_sets(v, v)?;
    let r = v.iter().map(|x| linalg::norm(x)).fold(0.0, f64::max);
    if (r - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "the largest point norm must be 1, got {r}"
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidParameter("t_max must be at least 1".into()));
    }
    let n = v.len();
    let mut w = vec![0.0; v[0].len()];
    let mut updates = Vec::new();
    let mut values = Vec::new();
    let mut last: Option<usize> = None;
    let terminated = loop {
        let start = last.map_or(0, |i| (i + 1) % n);
        let Some(i) = (0..n)
            .map(|s| (start + s) % n)
            .find(|&i| linalg::dot(&w, &v[i]) < 1.0)
        else {
            break true;
        };
        if updates.len() >= t_max {
            break false;
        }
        linalg::add_scaled(&mut w, 1.0, &v[i]);
        updates.push(i);
        values.push(linalg::norm(&w) / updates.len() as f64);
        last = Some(i);
    };
    let value_upper = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (hyperplane_strategy, eps_star_game, value_lower) = if terminated {
        let wt = linalg::normalized(&w).ok_or_else(|| Error::Internal("terminated with w = 0".into()))?;
        let payoff = v.iter().map(|x| linalg::dot(x, &wt)).fold(f64::INFINITY, f64::min);
        (Some(wt), payoff, 1.0 / (3.0 * updates.len() as f64).sqrt())
    } else {
        (None, 0.0, 0.0)
    };
    Ok(GameTranscript {
        updates,
        values,
        terminated,
        hyperplane_strategy,
        eps_star_game,
        value_lower,
        value_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_points_are_separated() {
        let k = vec![vec![0.5, 0.0]];
        let l = vec![vec![-0.5, 0.0]];
        let out = sparse_separate(&k, &l, 0.5).unwrap();
        let SeparationOutcome::Hyperplane(h) = &out else {
            panic!("expected a hyperplane, got {out:?}");
        };
        assert!(h.sparsity <= 400);
        assert!(h.min_k_margin >= 0.5 / 30.0);
        assert!(h.max_l_margin <= -0.5 / 30.0);
        assert!(verify_outcome(&out, &k, &l, 0.5).iter().all(|c| c.pass));
        assert!(h.hyperplane().score(&k[0]) > 0.0);
        assert!(h.hyperplane().score(&l[0]) < 0.0);
    }

    #[test]
    fn identical_sets_give_proximity() {
        let k = vec![vec![0.0, 0.5]];
        let out = sparse_separate(&k, &k, 0.1).unwrap();
        let SeparationOutcome::Proximity(p) = &out else {
            panic!("expected proximity");
        };
        assert_eq!(p.distance, 0.0);
        assert!(verify_outcome(&out, &k, &k, 0.1).iter().all(|c| c.pass));
    }

    #[test]
    fn overlapping_sets_give_proximity() {
        let k = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let l = vec![vec![0.0, 1.0], vec![0.0, -1.0]];
        let out = sparse_separate(&k, &l, 0.3).unwrap();
        assert!(!out.is_hyperplane());
        assert!(verify_outcome(&out, &k, &l, 0.3).iter().all(|c| c.pass));
    }

    #[test]
    fn deleting_a_contributor_breaks_replay() {
        let k = vec![vec![0.5, 0.1], vec![0.4, -0.3]];
        let l = vec![vec![-0.5, 0.0], vec![-0.2, 0.4]];
        let out = sparse_separate(&k, &l, 0.5).unwrap();
        let SeparationOutcome::Hyperplane(mut h) = out else {
            panic!("expected a hyperplane");
        };
        h.contributors.remove(0);
        let checks = verify_outcome(&SeparationOutcome::Hyperplane(h), &k, &l, 0.5);
        let replay = checks.iter().find(|c| c.name == "replay_equality").unwrap();
        assert!(!replay.pass);
    }

    #[test]
    fn far_proximity_witness_fails_check() {
        let k = vec![vec![0.0, 0.0]];
        let l = vec![vec![1.0, 0.0]];
        let bogus = SeparationOutcome::Proximity(ProximityWitness {
            p_weights: vec![(0, 1.0)],
            q_weights: vec![(0, 1.0)],
            p: k[0].clone(),
            q: l[0].clone(),
            distance: 1.0,
            distance_original: 1.0,
            updates: 0,
            peak_norm_ratio: 0.0,
            frame: Frame::fit(&k, &l),
        });
        let checks = verify_outcome(&bogus, &k, &l, 0.5);
        assert!(!checks.iter().find(|c| c.name == "witness_distance").unwrap().pass);
    }

    #[test]
    fn eps_out_of_range() {
        let k = vec![vec![0.0]];
        assert!(sparse_separate(&k, &k, 1.0).is_err());
        assert!(sparse_separate(&k, &[], 0.5).is_err());
    }

    #[test]
    fn singleton_game() {
        let g = game_strategies(&[vec![1.0, 0.0]], 100).unwrap();
        assert!(g.terminated);
        assert_eq!(g.steps(), 1);
        assert_eq!(g.hyperplane_strategy, Some(vec![1.0, 0.0]));
        assert!(g.eps_star_game >= g.value_lower);
        assert_eq!(g.eps_star_game, 1.0);
    }

    #[test]
    fn antipodal_game_values_decay() {
        let g = game_strategies(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 1000).unwrap();
        assert!(!g.terminated);
        assert_eq!(g.steps(), 1000);
        for (t, v) in g.values.iter().enumerate() {
            assert!(*v <= (3.0 / (t + 1) as f64).sqrt());
        }
        assert!(g.value_upper <= (3.0f64 / 1000.0).sqrt());
        let mu = g.strategy(4);
        assert!(mu.len() <= 4);
        assert!((mu.iter().map(|m| m.1).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn game_requires_unit_radius() {
        assert!(matches!(
            game_strategies(&[vec![2.0, 0.0]], 10),
            Err(Error::Precondition(_))
        ));
    }
}
