//! Test-data factory: separable samples with a known margin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg;

/// Maximum number of sphere draws spent on a single dataset.
pub const MAX_DRAWS: u64 = 1_000_000;

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = linalg::normalized(&v) {
            return u;
        }
    }
}

/// Uniform distribution on the unit sphere conditioned on |w*·x| ≥ eps,
/// labelled by sign(w*·x). Every sample drawn from it has margin ≥ eps
/// with respect to `w_star`.
#[derive(Debug, Clone)]
pub struct PlantedDistribution {
    w_star: Vec<f64>,
    eps: f64,
}

impl PlantedDistribution {
    pub fn new(w_star: Vec<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "planted margin must lie in (0, 1), got {eps}"
            )));
        }
        let w_star = linalg::normalized(&w_star)
            .ok_or_else(|| Error::InvalidParameter("planted normal is zero".into()))?;
        Ok(PlantedDistribution { w_star, eps })
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, eps: f64, rng: &mut R) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Self::new(random_unit_vector(dim, rng), eps)
    }

    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Draws one labelled point, spending at most `*budget` sphere draws.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        budget: &mut u64,
    ) -> Option<(Vec<f64>, Label)> {
        while *budget > 0 {
            *budget -= 1;
            let x = random_unit_vector(self.dim(), rng);
            let s = linalg::dot(&self.w_star, &x);
            if s.abs() >= self.eps {
                return Some((x, Label::from_sign(s)));
            }
        }
        None
    }

    /// Draws `n` points with an unbounded budget.
    pub fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut budget = u64::MAX;
        (0..n)
            .map(|_| self.sample(rng, &mut budget).expect("unbounded budget"))
            .unzip()
    }
}

/// A planted sample together with the direction that certifies its margin.
#[derive(Debug, Clone)]
pub struct PlantedSample {
    pub dataset: LabeledDataset,
    pub w_star: Vec<f64>,
}

/// Separable dataset with max norm 1 whose margin is at least `eps_star`
/// and, for reasonable n, close to it: the point closest to the planted
/// hyperplane is pulled onto the band boundary |w*·x| = eps_star.
pub fn generate_planted(d: usize, n: usize, eps_star: f64, seed: u64) -> Result<LabeledDataset> {
    planted_sample(d, n, eps_star, seed).map(|s| s.dataset)
}

pub fn planted_sample(d: usize, n: usize, eps_star: f64, seed: u64) -> Result<PlantedSample> {
    if d < 2 || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "planted generation needs d >= 2 and n >= 2 (got d={d}, n={n})"
        )));
    }
    if !(eps_star > 0.0 && eps_star <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "planted margin must lie in (0, 1], got {eps_star}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_star = random_unit_vector(d, &mut rng);

    if eps_star == 1.0 {
        // only ±w* reach margin 1 on the unit sphere
        let neg = linalg::scaled(&w_star, -1.0);
        let (points, labels) = (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    (w_star.clone(), Label::Positive)
                } else {
                    (neg.clone(), Label::Negative)
                }
            })
            .unzip();
        let dataset = LabeledDataset::new(points, labels)?;
        return Ok(PlantedSample { dataset, w_star });
    }

    let dist = PlantedDistribution::new(w_star.clone(), eps_star)?;
    let mut budget = MAX_DRAWS;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        match dist.sample(&mut rng, &mut budget) {
            Some((x, y)) => {
                points.push(x);
                labels.push(y);
            }
            None => return Err(Error::GenerationFailed { draws: MAX_DRAWS }),
        }
    }

    let (closest, s) = points
        .iter()
        .enumerate()
        .map(|(i, x)| (i, linalg::dot(&w_star, x).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 2");
    let factor = eps_star / s;
    points[closest] = linalg::scaled(&points[closest], factor);

    let dataset = LabeledDataset::new(points, labels)?;
    Ok(PlantedSample { dataset, w_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn margin_one_gives_antipodal_pair() {
        let s = planted_sample(2, 2, 1.0, 3).unwrap();
        let ds = &s.dataset;
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.label(0), Label::Positive);
        assert_eq!(ds.label(1), Label::Negative);
        for i in 0..2 {
            assert_abs_diff_eq!(linalg::norm(ds.point(i)), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                ds.label(i).value() * linalg::dot(ds.point(i), &s.w_star),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn planted_direction_is_tight_and_radius_is_one() {
        let s = planted_sample(5, 100, 0.2, 7).unwrap();
        let ds = &s.dataset;
        assert_abs_diff_eq!(ds.max_norm(), 1.0, epsilon = 1e-12);
        let m = ds
            .iter()
            .map(|(x, y)| y.value() * linalg::dot(x, &s.w_star))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(m, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn thin_band_in_high_dimension_fails() {
        let err = generate_planted(50, 50, 0.99, 1).unwrap_err();
        assert!(matches!(err, Error::GenerationFailed { draws: MAX_DRAWS }));
    }

    #[test]
    fn thin_band_in_the_plane_still_succeeds() {
        // the |cos| >= 0.99 arcs cover about 9% of the circle
        assert!(generate_planted(2, 50, 0.99, 1).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_planted(1, 10, 0.1, 0).is_err());
        assert!(generate_planted(3, 1, 0.1, 0).is_err());
        assert!(generate_planted(3, 10, 0.0, 0).is_err());
        assert!(generate_planted(3, 10, 1.5, 0).is_err());
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        assert_eq!(
            generate_planted(4, 30, 0.3, 11).unwrap(),
            generate_planted(4, 30, 0.3, 11).unwrap()
        );
    }
}
