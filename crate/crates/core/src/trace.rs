use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::linalg;

/// One perceptron update: at time `t` (updates made before it), example
/// `index` was added with its label while the threshold was `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStep {
    pub t: usize,
    pub index: usize,
    pub beta: f64,
}

/// Ordered record of the updates of a run. The final weight vector is the
/// signed sum of the updated examples, which makes the trace a compression
/// of the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateTrace {
    pub steps: Vec<UpdateStep>,
    pub final_w: Vec<f64>,
}

impl UpdateTrace {
    pub fn update_count(&self) -> usize {
        self.steps.len()
    }

    /// Recomputes `Σ y_i x_i` over the steps, in trace order.
    pub fn replay(&self, ds: &LabeledDataset) -> Vec<f64> {
        let mut w = vec![0.0; ds.dim()];
        for s in &self.steps {
            linalg::add_scaled(&mut w, ds.label(s.index).value(), ds.point(s.index));
        }
        w
    }

    /// ‖replay − final_w‖ / max(1, ‖final_w‖).
    pub fn replay_error(&self, ds: &LabeledDataset) -> f64 {
        let w = self.replay(ds);
        linalg::distance(&w, &self.final_w) / linalg::norm(&self.final_w).max(1.0)
    }

    /// Update multiplicity of every example.
    pub fn multiplicities(&self, n: usize) -> Vec<usize> {
        let mut counts = vec![0; n];
        for s in &self.steps {
            counts[s.index] += 1;
        }
        counts
    }

    /// Writes `t,i,beta` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,i,beta\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{}\n", s.t, s.index, s.beta));
        }
        out
    }
}
