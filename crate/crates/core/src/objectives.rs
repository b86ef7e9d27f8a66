//! Cost functionals evaluated by the composite trapezoid rule.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::integrator::{ControlGrid, Trajectory};
use crate::model::{ControlPair, State, Weights};
use crate::pmp::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveKind {
    pub tag: Objective,
    pub weights: Weights,
}

impl ObjectiveKind {
    pub fn new(tag: Objective, weights: Weights) -> Self {
        Self { tag, weights }
    }

    /// Integrand `kappa1 P + kappa2 u1^a + kappa3 u2^a` at one node.
    pub fn running_cost(&self, x: &State, u: &ControlPair) -> f64 {
        let w = &self.weights;
        match self.tag {
            Objective::L2 => w.kappa1 * x.p + w.kappa2 * u.u1 * u.u1 + w.kappa3 * u.u2 * u.u2,
            Objective::L1 => w.kappa1 * x.p + w.kappa2 * u.u1 + w.kappa3 * u.u2,
        }
    }
}

pub fn evaluate_cost(kind: &ObjectiveKind, x: &Trajectory<State>, u: &ControlGrid) -> Result<f64> {
    if x.grid != u.grid || x.values.len() != u.values.len() {
        return Err(invalid(
            "state and control trajectories are on different grids",
        ));
    }
    let samples: Vec<f64> = x
        .values
        .iter()
        .zip(&u.values)
        .map(|(x, u)| kind.running_cost(x, u))
        .collect();
    Ok(trapezoid(&samples, x.grid.step()))
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}
