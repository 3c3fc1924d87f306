//! Labeled point sets, hyperplanes and margin measurement.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A ±1 label. `sign(0)` maps to `Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_sign(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => write!(f, "1"),
            Label::Negative => write!(f, "-1"),
        }
    }
}

/// A finite set of points in R^d with ±1 labels.
///
/// Construction rejects ragged or non-finite points and samples in which the
/// same point appears with both labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    /// Builds a dataset, inferring the dimension from the first point.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidParameter("cannot infer dimension of an empty dataset".into())
        })?;
        Self::with_dim(dim, points, labels)
    }

    pub fn with_dim(dim: usize, points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                    index,
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {index} has a non-finite coordinate"
                )));
            }
        }
        check_consistent(&points, &labels)?;
        Ok(LabeledDataset {
            dim,
            points,
            labels,
        })
    }

    /// All points labelled positive.
    pub fn all_positive(points: Vec<Vec<f64>>) -> Result<Self> {
        let labels = vec![Label::Positive; points.len()];
        Self::new(points, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> + '_ {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    /// `y_i x_i`, the point reflected into the positive half-space.
    pub fn signed_point(&self, i: usize) -> Vec<f64> {
        linalg::scaled(&self.points[i], self.labels[i].value())
    }

    /// R = max ‖x_i‖ (0 for an empty set).
    pub fn max_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|p| linalg::norm(p))
            .fold(0.0, f64::max)
    }

    /// r = min ‖x_i‖ (+inf for an empty set).
    pub fn min_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|p| linalg::norm(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Same labels, every point multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> LabeledDataset {
        LabeledDataset {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| linalg::scaled(p, factor))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    /// Same points, each label replaced.
    pub fn relabeled(&self, labels: Vec<Label>) -> Result<LabeledDataset> {
        LabeledDataset::with_dim(self.dim, self.points.clone(), labels)
    }
}

fn check_consistent(points: &[Vec<f64>], labels: &[Label]) -> Result<()> {
    let mut seen: HashMap<Vec<u64>, (usize, Label)> = HashMap::with_capacity(points.len());
    for (i, (p, &y)) in points.iter().zip(labels).enumerate() {
        // +0.0 and -0.0 are the same point
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        match seen.get(&key) {
            Some(&(j, other)) if other != y => {
                return Err(Error::InconsistentLabels {
                    first: j,
                    second: i,
                })
            }
            Some(_) => {}
            None => {
                seen.insert(key, (i, y));
            }
        }
    }
    Ok(())
}

/// Appends a constant coordinate 1 to every point.
pub fn lift(ds: &LabeledDataset) -> LabeledDataset {
    let points = ds
        .points
        .iter()
        .map(|p| {
            let mut q = Vec::with_capacity(p.len() + 1);
            q.extend_from_slice(p);
            q.push(1.0);
            q
        })
        .collect();
    LabeledDataset {
        dim: ds.dim + 1,
        points,
        labels: ds.labels.clone(),
    }
}

/// The classifier `x ↦ sign(w·x − b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
    pub normalized: bool,
}

impl Hyperplane {
    pub fn linear(w: Vec<f64>) -> Self {
        Hyperplane {
            w,
            b: 0.0,
            normalized: false,
        }
    }

    pub fn affine(w: Vec<f64>, b: f64) -> Self {
        Hyperplane {
            w,
            b,
            normalized: false,
        }
    }

    /// Rescales `(w, b)` so that ‖w‖ = 1.
    pub fn normalize(&self) -> Result<Hyperplane> {
        let n = linalg::norm(&self.w);
        if n == 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok(Hyperplane {
            w: linalg::scaled(&self.w, 1.0 / n),
            b: self.b / n,
            normalized: true,
        })
    }

    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.w, x) - self.b
    }

    pub fn classify(&self, x: &[f64]) -> Label {
        Label::from_sign(self.score(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// min_i y_i (w·x_i − b) / ‖w‖; +inf on an empty dataset.
    pub margin: f64,
    /// Points whose normalized margin is ≤ 0.
    pub violations: usize,
    pub per_point_margins: Vec<f64>,
}

pub fn margin_report(ds: &LabeledDataset, h: &Hyperplane) -> Result<MarginReport> {
    if h.w.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            found: h.w.len(),
            index: 0,
        });
    }
    let n = linalg::norm(&h.w);
    if n == 0.0 {
        return Err(Error::ZeroWeight);
    }
    let per_point_margins: Vec<f64> = ds.iter().map(|(x, y)| y.value() * h.score(x) / n).collect();
    let margin = per_point_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = per_point_margins.iter().filter(|&&m| m <= 0.0).count();
    Ok(MarginReport {
        margin,
        violations,
        per_point_margins,
    })
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
    fn lift_appends_one() {
        let d = ds(&[&[1.0, 0.0]], &[1]);
        let lifted = lift(&d);
        assert_eq!(lifted.dim(), 3);
        assert_eq!(lifted.point(0), &[1.0, 0.0, 1.0]);
        assert_eq!(lifted.label(0), Label::Positive);
    }

    #[test]
    fn lift_of_empty_dataset() {
        let empty = LabeledDataset::with_dim(4, vec![], vec![]).unwrap();
        let lifted = lift(&empty);
        assert!(lifted.is_empty());
        assert_eq!(lifted.dim(), 5);
    }

    #[test]
    fn rejects_opposite_labels_on_same_point() {
        let err = LabeledDataset::new(
            vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![-0.0, 1.0]],
            vec![Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentLabels { first: 0, second: 2 }));
    }

    #[test]
    fn duplicate_points_with_equal_labels_are_fine() {
        ds(&[&[1.0, 1.0], &[1.0, 1.0]], &[-1, -1]);
    }

    #[test]
    fn rejects_ragged_points() {
        let err = LabeledDataset::new(
            vec![vec![0.0, 1.0], vec![1.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { index: 1, .. }));
    }

    #[test]
    fn sign_of_zero_is_positive() {
        let h = Hyperplane::linear(vec![1.0, 0.0]);
        assert_eq!(h.classify(&[0.0, 5.0]), Label::Positive);
        assert_eq!(h.classify(&[-1e-300, 5.0]), Label::Negative);
    }

    #[test]
    fn normalize_gives_unit_weight() {
        let h = Hyperplane::affine(vec![3.0, 4.0], 10.0).normalize().unwrap();
        assert!(h.normalized);
        assert_abs_diff_eq!(linalg::norm(&h.w), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.b, 2.0, epsilon = 1e-12);
        assert!(matches!(
            Hyperplane::linear(vec![0.0]).normalize(),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn margin_of_unit_alignment() {
        let r = margin_report(&ds(&[&[1.0, 0.0]], &[1]), &Hyperplane::linear(vec![1.0, 0.0])).unwrap();
        assert_eq!(r.margin, 1.0);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn margin_of_symmetric_pair() {
        let d = ds(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1, -1]);
        let r = margin_report(&d, &Hyperplane::linear(vec![1.0, 0.0])).unwrap();
        assert_eq!(r.margin, 1.0);
        assert_eq!(r.violations, 0);
        assert_eq!(r.per_point_margins, vec![1.0, 1.0]);
    }

    #[test]
    fn margin_on_segment_example() {
        let d = ds(&[&[0.0, 1.0], &[0.6, 0.8]], &[1, 1]);
        let r = margin_report(&d, &Hyperplane::linear(vec![0.3162, 0.9487])).unwrap();
        // min(0.9487, 0.6*0.3162 + 0.8*0.9487) / ‖w‖
        assert_abs_diff_eq!(r.margin, 0.9487, epsilon = 1e-4);
    }

    #[test]
    fn margin_counts_violations_and_rejects_zero_weight() {
        let d = ds(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]], &[1, 1, 1]);
        let r = margin_report(&d, &Hyperplane::linear(vec![2.0, 0.0])).unwrap();
        assert_eq!(r.violations, 2);
        assert_eq!(r.margin, -1.0);
        assert!(matches!(
            margin_report(&d, &Hyperplane::linear(vec![0.0, 0.0])),
            Err(Error::ZeroWeight)
        ));
    }
}
