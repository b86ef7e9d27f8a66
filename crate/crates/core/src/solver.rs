//! Forward-backward sweep.
//!
//! Each iteration integrates the state forward under the current controls,
//! integrates the costate backward from the zero terminal condition, and
//! moves the controls toward the maximum-principle law by a convex
//! combination. Iteration stops when every tracked quantity (R, C, P, p1,
//! p2, p3, u1, u2) passes the relative-change test.
//!
//! The returned controls are the law evaluated on the returned state and
//! costate, so they sit exactly on the control bounds wherever the law
//! saturates, and for the linear objective they agree in sign with the
//! returned switching functions at every node.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::{
    default_intervals, rk4_backward, rk4_forward, ControlGrid, TimeGrid, Trajectory,
};
use crate::model::{ControlPair, State};
use crate::objectives::{evaluate_cost, ObjectiveKind};
use crate::pmp::{
    control_law_l1, control_law_l2_unchecked, switching_functions_unchecked, Costate, Objective,
    SwitchingValues,
};
use crate::scenarios::Scenario;

/// Names of the eight tracked quantities, in residual order.
pub const TRACKED: [&str; 8] = ["R", "C", "P", "p1", "p2", "p3", "u1", "u2"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Weight of the fresh control in the update, in (0, 1].
    pub relaxation: f64,
    pub tol_delta: f64,
    pub max_iters: usize,
    /// Grid intervals; `None` uses 200 per unit of the horizon.
    pub intervals: Option<usize>,
    /// Half-width of the band around zero where a switching function is
    /// treated as singular.
    pub eps_singular: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            tol_delta: 1e-3,
            max_iters: 1000,
            intervals: None,
            eps_singular: 1e-9,
        }
    }
}

impl SweepSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(invalid(format!(
                "relaxation must be in (0, 1], got {}",
                self.relaxation
            )));
        }
        if !(self.tol_delta > 0.0 && self.tol_delta.is_finite()) {
            return Err(invalid(format!(
                "tol_delta must be > 0, got {}",
                self.tol_delta
            )));
        }
        if self.max_iters < 1 {
            return Err(invalid("max_iters must be >= 1"));
        }
        if let Some(n) = self.intervals {
            if n < 2 {
                return Err(invalid(format!("grid needs at least 2 intervals, got {n}")));
            }
        }
        if !(self.eps_singular >= 0.0 && self.eps_singular.is_finite()) {
            return Err(invalid(format!(
                "eps_singular must be >= 0, got {}",
                self.eps_singular
            )));
        }
        Ok(())
    }

    pub fn grid_for(&self, t_f: f64) -> Result<TimeGrid> {
        TimeGrid::new(
            0.0,
            t_f,
            self.intervals.unwrap_or_else(|| default_intervals(t_f)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub state: Trajectory<State>,
    pub costate: Trajectory<Costate>,
    pub controls: ControlGrid,
    /// Switching-function values on the grid (computed for both objectives).
    pub switching: Vec<SwitchingValues>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per node, whether either switching function sat in the singular band.
    /// Always false for the quadratic objective.
    pub singular_flags: Vec<bool>,
    /// Fraction of nodes where some control is strictly inside its bounds.
    pub non_extremal_fraction: f64,
    /// Per iteration, relative change `sum|new-old| / sum|new|` of each
    /// tracked quantity (infinite on the first iteration).
    pub residual_history: Vec<[f64; 8]>,
}

impl SolveResult {
    pub fn any_singular(&self) -> bool {
        self.singular_flags.iter().any(|&s| s)
    }
}

/// Relative-change stopping test: passes iff `tol * sum|new| - sum|new - old| >= 0`.
pub fn convergence_test(old: &[f64], new: &[f64], tol_delta: f64) -> Result<bool> {
    if old.len() != new.len() {
        return Err(invalid(format!(
            "convergence test needs equal lengths, got {} and {}",
            old.len(),
            new.len()
        )));
    }
    let (norm, diff) = sums(old, new);
    Ok(tol_delta * norm - diff >= 0.0)
}

fn sums(old: &[f64], new: &[f64]) -> (f64, f64) {
    old.iter().zip(new).fold((0.0, 0.0), |(n, d), (o, v)| {
        (n + v.abs(), d + (v - o).abs())
    })
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let (norm, diff) = sums(old, new);
    if diff == 0.0 {
        0.0
    } else {
        diff / norm
    }
}

/// Splits the three node series into columns.
fn columns<T: Copy>(values: &[T], get: impl Fn(T) -> [f64; 3]) -> [Vec<f64>; 3] {
    let mut out: [Vec<f64>; 3] = Default::default();
    for col in out.iter_mut() {
        col.reserve(values.len());
    }
    for &v in values {
        let a = get(v);
        for (col, x) in out.iter_mut().zip(a) {
            col.push(x);
        }
    }
    out
}

fn control_columns(u: &ControlGrid) -> [Vec<f64>; 2] {
    [
        u.values.iter().map(|v| v.u1).collect(),
        u.values.iter().map(|v| v.u2).collect(),
    ]
}

/// State and costate columns of one sweep.
fn sweep_columns(x: &Trajectory<State>, p: &Trajectory<Costate>) -> [Vec<f64>; 6] {
    let [r, c, pp] = columns(&x.values, State::to_array);
    let [p1, p2, p3] = columns(&p.values, Costate::to_array);
    [r, c, pp, p1, p2, p3]
}

struct LawOutput {
    controls: Vec<ControlPair>,
    switching: Vec<SwitchingValues>,
    singular: Vec<bool>,
}

fn apply_law(
    scenario: &Scenario,
    x: &Trajectory<State>,
    p: &Trajectory<Costate>,
    previous: &ControlGrid,
    eps_singular: f64,
) -> LawOutput {
    let params = &scenario.params;
    let weights = &scenario.weights;
    let n0 = x.first().total();
    let len = x.values.len();
    let mut controls = Vec::with_capacity(len);
    let mut switching = Vec::with_capacity(len);
    let mut singular = Vec::with_capacity(len);
    for ((xi, pi), prev) in x.values.iter().zip(&p.values).zip(&previous.values) {
        let phi = switching_functions_unchecked(xi, pi, params, weights, n0);
        match scenario.objective {
            Objective::L2 => {
                controls.push(control_law_l2_unchecked(xi, pi, params, weights, n0));
                singular.push(false);
            }
            Objective::L1 => {
                let bb = control_law_l1(&phi, params, prev, eps_singular);
                controls.push(bb.controls.project(params));
                singular.push(bb.singular[0] || bb.singular[1]);
            }
        }
        switching.push(phi);
    }
    LawOutput {
        controls,
        switching,
        singular,
    }
}

pub fn solve(scenario: &Scenario, settings: &SweepSettings) -> Result<SolveResult> {
    scenario.validate()?;
    settings.validate()?;
    let grid = settings.grid_for(scenario.t_f)?;
    let params = &scenario.params;
    let w = settings.relaxation;

    let mut u = ControlGrid::zeros(grid);
    let mut previous: Option<[Vec<f64>; 6]> = None;
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last: Option<(Trajectory<State>, Trajectory<Costate>, ControlGrid)> = None;

    for iter in 1..=settings.max_iters {
        iterations = iter;
        let wrap = |e: Error| Error::Diverged {
            iteration: iter,
            source: Box::new(e),
        };
        let x = rk4_forward(scenario.x0, &u, scenario).map_err(wrap)?;
        let p = rk4_backward(Costate::ZERO, &x, &u, &scenario.weights, scenario).map_err(wrap)?;

        let law = apply_law(scenario, &x, &p, &u, settings.eps_singular);
        let next: Vec<ControlPair> = law
            .controls
            .iter()
            .zip(&u.values)
            .map(|(fresh, old)| {
                ControlPair::new(
                    w * fresh.u1 + (1.0 - w) * old.u1,
                    w * fresh.u2 + (1.0 - w) * old.u2,
                )
                .project(params)
            })
            .collect();
        if next.iter().any(|c| !(c.u1.is_finite() && c.u2.is_finite())) {
            return Err(wrap(Error::NonFinite {
                what: "control",
                step: 0,
                t: 0.0,
            }));
        }
        let next = ControlGrid { grid, values: next };

        // state/costate against the previous sweep, controls against the
        // grid they were computed from
        let current = sweep_columns(&x, &p);
        let pairs = current
            .iter()
            .enumerate()
            .map(|(k, new)| (previous.as_ref().map(|old: &[Vec<f64>; 6]| &old[k]), new));
        let (u_old, u_new) = (control_columns(&u), control_columns(&next));
        let pairs = pairs.chain(u_old.iter().zip(&u_new).map(|(o, n)| (Some(o), n)));

        let mut residual = [f64::INFINITY; 8];
        let mut all_pass = true;
        for (res, (old, new)) in residual.iter_mut().zip(pairs) {
            match old {
                Some(old) => {
                    *res = relative_change(old, new);
                    all_pass &= convergence_test(old, new, settings.tol_delta)?;
                }
                None => all_pass = false,
            }
        }
        residual_history.push(residual);

        previous = Some(current);
        last = Some((x, p, u));
        u = next;
        if all_pass {
            converged = true;
            break;
        }
    }

    let (state, costate, u_used) = last.expect("max_iters >= 1");
    let law = apply_law(scenario, &state, &costate, &u_used, settings.eps_singular);
    let controls = ControlGrid {
        grid,
        values: law.controls,
    };
    let cost = evaluate_cost(
        &ObjectiveKind::new(scenario.objective, scenario.weights),
        &state,
        &controls,
    )?;
    let interior = controls
        .values
        .iter()
        .filter(|c| (c.u1 > 0.0 && c.u1 < params.u1_max) || (c.u2 > 0.0 && c.u2 < params.u2_max))
        .count();

    Ok(SolveResult {
        state,
        costate,
        non_extremal_fraction: interior as f64 / controls.values.len() as f64,
        controls,
        switching: law.switching,
        cost,
        iterations,
        converged,
        singular_flags: law.singular,
        residual_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{paper_preset, Preset};

    #[test]
    fn convergence_test_examples() {
        let old = [0.3, 1.2, 5.0];
        assert!(convergence_test(&old, &old, 1e-6).unwrap());
        assert!(!convergence_test(&old, &[0.0; 3], 1e-3).unwrap());
        let tol = 1e-3;
        let new: Vec<f64> = old.iter().map(|v| v * (1.0 + tol / 2.0)).collect();
        assert!(convergence_test(&old, &new, tol).unwrap());
        assert!(convergence_test(&old, &new[..2], tol).is_err());
    }

    #[test]
    fn settings_validation() {
        assert!(SweepSettings::default().validate().is_ok());
        for bad in [
            SweepSettings {
                relaxation: 0.0,
                ..Default::default()
            },
            SweepSettings {
                relaxation: 1.5,
                ..Default::default()
            },
            SweepSettings {
                tol_delta: 0.0,
                ..Default::default()
            },
            SweepSettings {
                max_iters: 0,
                ..Default::default()
            },
            SweepSettings {
                intervals: Some(1),
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn expensive_controls_collapse_to_no_control() {
        let mut s = paper_preset(Preset::Scenario1);
        s.weights.kappa2 *= 1e6;
        s.weights.kappa3 *= 1e6;
        let settings = SweepSettings::default();
        let res = solve(&s, &settings).unwrap();
        assert!(res.converged);
        let worst = res
            .controls
            .values
            .iter()
            .map(|c| c.u1.max(c.u2))
            .fold(0.0, f64::max);
        // the law caps u1 near kappa1 * t_f * P0 / (2 kappa2) ~ 2.3e-6
        let cap = s.weights.kappa1 * s.t_f * s.x0.p / (2.0 * s.weights.kappa2);
        assert!(worst <= cap, "{worst}");
        let grid = settings.grid_for(s.t_f).unwrap();
        let free = rk4_forward(s.x0, &ControlGrid::zeros(grid), &s).unwrap();
        // at most cap * t_f of the population can be moved by the control
        let moved = cap * s.t_f;
        for (a, b) in res.state.values.iter().zip(&free.values) {
            assert!((a.p - b.p).abs() <= moved && (a.r - b.r).abs() <= moved);
        }
    }

    #[test]
    fn iteration_cap_is_reported_not_thrown() {
        let s = paper_preset(Preset::Scenario1);
        let settings = SweepSettings {
            max_iters: 2,
            ..Default::default()
        };
        let res = solve(&s, &settings).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
        assert_eq!(res.residual_history.len(), 2);
        assert!(res.controls.within_bounds(&s.params));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let mut s = paper_preset(Preset::Scenario1);
        s.t_f = -1.0;
        assert!(matches!(
            solve(&s, &SweepSettings::default()),
            Err(Error::InvalidArgument(_))
        ));
        let s = paper_preset(Preset::Scenario1);
        let bad = SweepSettings {
            relaxation: 2.0,
            ..Default::default()
        };
        assert!(solve(&s, &bad).is_err());
    }
}
