//! Minimum-norm point of a polytope given by its vertices ("atoms").
//!
//! Gilbert-style vertex selection (the atom minimizing ⟨x, a⟩) combined with
//! Wolfe's affine-minimizer correction over the active face. Every iterate x
//! is a convex combination of atoms, so for the optimum x*:
//!
//!   min_a ⟨x, a⟩ / ‖x‖  ≤  ‖x*‖  ≤  ‖x‖
//!
//! and the difference of the two sides is the certified gap.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

/// A finite set of vectors whose convex hull is searched.
pub trait AtomSet {
    fn dim(&self) -> usize;

    fn count(&self) -> usize;

    fn write_atom(&self, id: usize, out: &mut [f64]);

    /// `(argmin_a ⟨v, a⟩, min_a ⟨v, a⟩)`
    fn min_inner(&self, v: &[f64]) -> (usize, f64);

    fn atom(&self, id: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write_atom(id, &mut out);
        out
    }

    fn shortest_atom(&self) -> usize {
        let mut buf = vec![0.0; self.dim()];
        let mut best = (0, f64::INFINITY);
        for id in 0..self.count() {
            self.write_atom(id, &mut buf);
            let n = linalg::norm_sq(&buf);
            if n < best.1 {
                best = (id, n);
            }
        }
        best.0
    }
}

/// Atoms `s_i x_i` for signs `s_i ∈ {±1}`.
pub struct SignedAtoms<'a> {
    pub points: &'a [Vec<f64>],
    pub signs: &'a [f64],
}

impl AtomSet for SignedAtoms<'_> {
    fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn count(&self) -> usize {
        self.points.len()
    }

    fn write_atom(&self, id: usize, out: &mut [f64]) {
        let s = self.signs[id];
        for (o, v) in out.iter_mut().zip(&self.points[id]) {
            *o = s * v;
        }
    }

    fn min_inner(&self, v: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, (p, s)) in self.points.iter().zip(self.signs).enumerate() {
            let val = s * linalg::dot(v, p);
            if val < best.1 {
                best = (i, val);
            }
        }
        best
    }
}

/// Atoms `k_i − l_j`; conv of these is conv(K) − conv(L).
/// Atom id is `i * |L| + j`.
pub struct MinkowskiDifference<'a> {
    pub k: &'a [Vec<f64>],
    pub l: &'a [Vec<f64>],
}

impl MinkowskiDifference<'_> {
    pub fn split(&self, id: usize) -> (usize, usize) {
        (id / self.l.len(), id % self.l.len())
    }
}

impl AtomSet for MinkowskiDifference<'_> {
    fn dim(&self) -> usize {
        self.k.first().map_or(0, Vec::len)
    }

    fn count(&self) -> usize {
        self.k.len() * self.l.len()
    }

    fn write_atom(&self, id: usize, out: &mut [f64]) {
        let (i, j) = self.split(id);
        for ((o, a), b) in out.iter_mut().zip(&self.k[i]).zip(&self.l[j]) {
            *o = a - b;
        }
    }

    fn min_inner(&self, v: &[f64]) -> (usize, f64) {
        let (i, lo) = self
            .k
            .iter()
            .map(|p| linalg::dot(v, p))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
        let (j, hi) = self
            .l
            .iter()
            .map(|q| linalg::dot(v, q))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, s)| if s > acc.1 { (j, s) } else { acc });
        (i * self.l.len() + j, lo - hi)
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Stop when ‖x‖ − min⟨x,a⟩/‖x‖ ≤ tol, or when ‖x‖ ≤ tol.
    pub tol: f64,
    /// Cap on major plus minor iterations.
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 1_000_000,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Active atoms and their convex weights (positive, summing to 1).
    pub weights: Vec<(usize, f64)>,
    /// `min_a ⟨x,a⟩ / ‖x‖`, or `-inf` when x = 0.
    pub lower: f64,
    /// ‖x‖
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(lower, upper)` at every major iteration when requested.
    pub history: Vec<(f64, f64)>,
}

struct Active {
    ids: Vec<usize>,
    vecs: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl Active {
    fn point(&self, dim: usize) -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (v, &l) in self.vecs.iter().zip(&self.lambda) {
            linalg::add_scaled(&mut x, l, v);
        }
        x
    }

    fn renormalize(&mut self) {
        let s: f64 = self.lambda.iter().sum();
        for l in &mut self.lambda {
            *l /= s;
        }
    }

    fn retain(&mut self, keep: &[bool]) {
        let mut k = 0;
        for r in 0..keep.len() {
            if keep[r] {
                self.ids.swap(k, r);
                self.vecs.swap(k, r);
                self.lambda.swap(k, r);
                k += 1;
            }
        }
        self.ids.truncate(k);
        self.vecs.truncate(k);
        self.lambda.truncate(k);
    }

    /// Coefficients μ (summing to 1) of the point of minimum norm in the
    /// affine hull of the active atoms.
    fn affine_minimizer(&self) -> Option<Vec<f64>> {
        let s = self.vecs.len();
        let mut m = DMatrix::<f64>::zeros(s + 1, s + 1);
        for a in 0..s {
            for b in a..s {
                let g = linalg::dot(&self.vecs[a], &self.vecs[b]);
                m[(a, b)] = g;
                m[(b, a)] = g;
            }
            m[(a, s)] = 1.0;
            m[(s, a)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(s + 1);
        rhs[s] = 1.0;
        let sol = m.full_piv_lu().solve(&rhs)?;
        let mu: Vec<f64> = sol.iter().take(s).copied().collect();
        if mu.iter().all(|v| v.is_finite()) {
            Some(mu)
        } else {
            None
        }
    }
}

pub fn min_norm_point<A: AtomSet + ?Sized>(atoms: &A, opts: &SolverOptions) -> MinNormPoint {
    let dim = atoms.dim();
    let first = atoms.shortest_atom();
    let mut active = Active {
        ids: vec![first],
        vecs: vec![atoms.atom(first)],
        lambda: vec![1.0],
    };
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut x = active.point(dim);
    let mut lower = f64::NEG_INFINITY;
    let mut upper;
    let mut previous = f64::INFINITY;
    let mut stalls = 0;

    'major: loop {
        upper = linalg::norm(&x);
        if upper >= previous {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        }
        previous = upper;
        if upper <= opts.tol {
            lower = f64::NEG_INFINITY;
            converged = true;
            break;
        }
        let (j, xa) = atoms.min_inner(&x);
        lower = xa / upper;
        if opts.record_history {
            history.push((lower, upper));
        }
        if upper - lower <= opts.tol {
            converged = true;
            break;
        }
        if active.ids.contains(&j) || iterations >= opts.max_iter {
            // no further progress is possible in floating point
            break;
        }
        active.ids.push(j);
        active.vecs.push(atoms.atom(j));
        active.lambda.push(0.0);

        loop {
            iterations += 1;
            let Some(mu) = active.affine_minimizer() else {
                // the new atom made the active set affinely dependent
                let keep: Vec<bool> = (0..active.ids.len()).map(|k| k + 1 < active.ids.len()).collect();
                active.retain(&keep);
                break 'major;
            };
            if mu.iter().all(|&m| m > 0.0) {
                active.lambda = mu;
                active.renormalize();
                break;
            }
            let mut theta = f64::INFINITY;
            let mut argmin = 0;
            for (k, (&l, &m)) in active.lambda.iter().zip(&mu).enumerate() {
                if m <= 0.0 {
                    let step = l / (l - m);
                    if step < theta {
                        theta = step;
                        argmin = k;
                    }
                }
            }
            let theta = theta.clamp(0.0, 1.0);
            for (l, m) in active.lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let keep: Vec<bool> = active
                .lambda
                .iter()
                .enumerate()
                .map(|(k, &l)| k != argmin && l > 0.0)
                .collect();
            if keep.iter().all(|&k| !k) {
                break 'major;
            }
            active.retain(&keep);
            active.renormalize();
            if iterations >= opts.max_iter {
                break;
            }
        }
        x = active.point(dim);
    }

    // the loop exits before recomputing on some paths
    let point = active.point(dim);
    if linalg::norm(&point) != upper {
        upper = linalg::norm(&point);
        lower = if upper > 0.0 {
            atoms.min_inner(&point).1 / upper
        } else {
            f64::NEG_INFINITY
        };
        if upper <= opts.tol || upper - lower <= opts.tol {
            converged = true;
        }
    }

    MinNormPoint {
        weights: active.ids.iter().copied().zip(active.lambda.iter().copied()).collect(),
        point,
        lower,
        upper,
        iterations,
        converged,
        history,
    }
}
