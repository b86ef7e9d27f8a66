//! Fixed-step classical RK4 on a uniform grid, forward for the state and
//! backward for the costate.
//!
//! Controls live on grid nodes. Stages at a node use the nodal control; the
//! two midpoint stages use the average of the adjacent nodal controls (and,
//! for the costate sweep, the average of the adjacent nodal states).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{dynamics_unchecked, ControlPair, ModelParams, State, Weights};
use crate::pmp::{costate_rhs_unchecked, Costate};
use crate::scenarios::Scenario;

/// Grid points per unit time used when no explicit interval count is given.
pub const DEFAULT_INTERVALS_PER_UNIT: f64 = 200.0;

/// Most negative state component tolerated after a step.
pub const NEGATIVITY_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_f: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_f: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 intervals, got {n}")));
        }
        if !(t0.is_finite() && t_f.is_finite() && t_f > t0) {
            return Err(invalid(format!(
                "grid needs finite t0 < t_f, got [{t0}, {t_f}]"
            )));
        }
        Ok(Self { t0, t_f, n })
    }

    /// `[0, t_f]` with the default density of 200 intervals per unit time.
    pub fn with_default_density(t_f: f64) -> Result<Self> {
        Self::new(0.0, t_f, default_intervals(t_f))
    }

    pub fn step(&self) -> f64 {
        (self.t_f - self.t0) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step()
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.node(i))
    }
}

pub fn default_intervals(t_f: f64) -> usize {
    ((DEFAULT_INTERVALS_PER_UNIT * t_f).round() as usize).max(2)
}

/// One value per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub grid: TimeGrid,
    pub values: Vec<T>,
}

pub type ControlGrid = Trajectory<ControlPair>;

impl<T: Copy> Trajectory<T> {
    pub fn new(grid: TimeGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "trajectory has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.grid.node(i), v))
    }
}

impl ControlGrid {
    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, ControlPair::ZERO)
    }

    /// Builds a control grid, rejecting any pair outside the admissible box.
    pub fn checked(grid: TimeGrid, values: Vec<ControlPair>, params: &ModelParams) -> Result<Self> {
        let out = Self::new(grid, values)?;
        if let Some((i, u)) = out
            .values
            .iter()
            .enumerate()
            .find(|(_, u)| !u.within_bounds(params))
        {
            return Err(invalid(format!(
                "control {u:?} at node {i} is out of bounds"
            )));
        }
        Ok(out)
    }

    pub fn within_bounds(&self, params: &ModelParams) -> bool {
        self.values.iter().all(|u| u.within_bounds(params))
    }
}

#[inline]
fn axpy(y: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]]
}

#[inline]
fn combine(y: [f64; 3], h: f64, k: [[f64; 3]; 4]) -> [f64; 3] {
    let s = h / 6.0;
    std::array::from_fn(|j| y[j] + s * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]))
}

/// Integrates the controlled model forward from `x0` over `controls.grid`.
pub fn rk4_forward(
    x0: State,
    controls: &ControlGrid,
    scenario: &Scenario,
) -> Result<Trajectory<State>> {
    if !x0.is_finite() {
        return Err(invalid(format!("initial state must be finite, got {x0:?}")));
    }
    let n0 = x0.total();
    if !(n0 > 0.0) {
        return Err(invalid(format!("initial population must be > 0, got {n0}")));
    }
    let grid = controls.grid;
    let h = grid.step();
    let params = &scenario.params;
    let (beta, gamma) = (&scenario.beta, &scenario.gamma);
    let u = &controls.values;

    let rhs = |t: f64, y: [f64; 3], u: &ControlPair| {
        dynamics_unchecked(
            t,
            &State::from_array(y),
            u,
            params,
            beta.eval(t),
            gamma.eval(t),
            n0,
        )
        .to_array()
    };

    let mut values = Vec::with_capacity(grid.len());
    values.push(x0);
    let mut y = x0.to_array();
    for i in 0..grid.n {
        let t = grid.node(i);
        let t_mid = t + 0.5 * h;
        let t_next = grid.node(i + 1);
        let u_mid = u[i].midpoint(u[i + 1]);

        let k1 = rhs(t, y, &u[i]);
        let k2 = rhs(t_mid, axpy(y, 0.5 * h, k1), &u_mid);
        let k3 = rhs(t_mid, axpy(y, 0.5 * h, k2), &u_mid);
        let k4 = rhs(t_next, axpy(y, h, k3), &u[i + 1]);
        y = combine(y, h, [k1, k2, k3, k4]);

        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "state",
                step: i + 1,
                t: t_next,
            });
        }
        for (name, v) in ["R", "C", "P"].into_iter().zip(y) {
            if v < NEGATIVITY_FLOOR {
                return Err(Error::NegativeState {
                    component: name,
                    value: v,
                    step: i + 1,
                    t: t_next,
                });
            }
        }
        values.push(State::from_array(y));
    }
    Ok(Trajectory { grid, values })
}

/// Integrates the adjoint system from `terminal` at `t_f` back to `t0`,
/// reusing the already computed state trajectory. The result is indexed
/// forward in time and its last entry equals `terminal` exactly.
pub fn rk4_backward(
    terminal: Costate,
    states: &Trajectory<State>,
    controls: &ControlGrid,
    weights: &Weights,
    scenario: &Scenario,
) -> Result<Trajectory<Costate>> {
    if states.grid != controls.grid {
        return Err(invalid("state and control grids differ"));
    }
    if !terminal.is_finite() {
        return Err(invalid(format!(
            "terminal costate must be finite, got {terminal:?}"
        )));
    }
    let grid = states.grid;
    let h = grid.step();
    let n0 = states.first().total();
    let params = &scenario.params;
    let (beta, gamma) = (&scenario.beta, &scenario.gamma);
    let x = &states.values;
    let u = &controls.values;

    let rhs = |t: f64, x: &State, p: [f64; 3], u: &ControlPair| {
        costate_rhs_unchecked(
            x,
            &Costate::from_array(p),
            u,
            params,
            weights,
            beta.eval(t),
            gamma.eval(t),
            n0,
        )
        .to_array()
    };

    let mut values = vec![Costate::ZERO; grid.len()];
    values[grid.n] = terminal;
    let mut p = terminal.to_array();
    for i in (1..=grid.n).rev() {
        let t = grid.node(i);
        let t_prev = grid.node(i - 1);
        let t_mid = t_prev + 0.5 * h;
        let x_mid =
            State::from_array(axpy(x[i - 1].to_array(), 1.0, x[i].to_array()).map(|v| 0.5 * v));
        let u_mid = u[i - 1].midpoint(u[i]);

        // stepping with -h
        let k1 = rhs(t, &x[i], p, &u[i]);
        let k2 = rhs(t_mid, &x_mid, axpy(p, -0.5 * h, k1), &u_mid);
        let k3 = rhs(t_mid, &x_mid, axpy(p, -0.5 * h, k2), &u_mid);
        let k4 = rhs(t_prev, &x[i - 1], axpy(p, -h, k3), &u[i - 1]);
        p = combine(p, -h, [k1, k2, k3, k4]);

        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "costate",
                step: i - 1,
                t: t_prev,
            });
        }
        values[i - 1] = Costate::from_array(p);
    }
    Ok(Trajectory { grid, values })
}
