//! Strategy comparison and one-parameter sweeps over constant-rate scenarios.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::{default_intervals, rk4_forward, ControlGrid};
use crate::model::ControlPair;
use crate::objectives::{evaluate_cost, ObjectiveKind};
use crate::scenarios::{comparison_weights, RateFunction, Scenario};
use crate::solver::{solve, SolveResult, SweepSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    NoControl,
    Constant,
    /// Controls proportional to the uncontrolled `P(t)` and `P(t) R(t)`.
    FollowHeuristic,
    Optimal,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::NoControl,
        StrategyKind::Constant,
        StrategyKind::FollowHeuristic,
        StrategyKind::Optimal,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            StrategyKind::NoControl => "no-control",
            StrategyKind::Constant => "constant",
            StrategyKind::FollowHeuristic => "follow-heuristic",
            StrategyKind::Optimal => "optimal",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Gamma,
    Kappa2,
    Beta,
    #[serde(rename = "tf")]
    Horizon,
}

impl SweepParameter {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::Kappa2 => "kappa2",
            SweepParameter::Beta => "beta",
            SweepParameter::Horizon => "tf",
        }
    }

    /// Sample points used when none are given.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepParameter::Gamma => (1..=12).map(|i| i as f64 / 10.0).collect(),
            SweepParameter::Kappa2 => vec![1.0, 5.0, 10.0, 15.0, 25.0, 50.0, 100.0],
            SweepParameter::Beta => (0..=6).map(|i| i as f64 * 0.5).collect(),
            SweepParameter::Horizon => (2..=7).map(|i| 2.0 * i as f64).collect(),
        }
    }

    fn check_value(&self, v: f64) -> Result<()> {
        let ok = v.is_finite()
            && match self {
                SweepParameter::Gamma | SweepParameter::Kappa2 => v > 0.0,
                SweepParameter::Beta => (0.0..=3.0).contains(&v),
                SweepParameter::Horizon => (4.0..=14.0).contains(&v),
            };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "{} value {v} is outside the supported range",
                self.key()
            )))
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepParameter::Gamma),
            "kappa2" => Ok(SweepParameter::Kappa2),
            "beta" => Ok(SweepParameter::Beta),
            "tf" | "t_f" => Ok(SweepParameter::Horizon),
            _ => Err(invalid(format!(
                "unknown sweep parameter '{s}'; expected gamma, kappa2, beta or tf"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: Scenario,
    pub strategies: Vec<StrategyKind>,
}

impl SweepSpec {
    pub fn new(parameter: SweepParameter, base: Scenario) -> Self {
        Self {
            parameter,
            values: parameter.default_values(),
            base,
            strategies: StrategyKind::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid("sweep needs at least one value"));
        }
        if self.strategies.is_empty() {
            return Err(invalid("sweep needs at least one strategy"));
        }
        self.values
            .iter()
            .try_for_each(|&v| self.parameter.check_value(v))
    }

    /// The base scenario with the swept parameter set to `value`.
    /// Sweeping the horizon also resets `kappa1 = 1 / t_f`.
    pub fn scenario_at(&self, value: f64) -> Scenario {
        let mut s = self.base.clone();
        match self.parameter {
            SweepParameter::Gamma => s.gamma = RateFunction::constant(value),
            SweepParameter::Beta => s.beta = RateFunction::constant(value),
            SweepParameter::Kappa2 => s.weights.kappa2 = value,
            SweepParameter::Horizon => {
                s.t_f = value;
                s.weights.kappa1 = comparison_weights(value).kappa1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// `None` for a single-point comparison.
    pub param_value: Option<f64>,
    pub strategy: StrategyKind,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Error text when the cell could not be evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<SweepParameter>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn get(&self, param_value: Option<f64>, strategy: StrategyKind) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.param_value == param_value)
    }

    pub fn cost(&self, param_value: Option<f64>, strategy: StrategyKind) -> Option<f64> {
        self.get(param_value, strategy).map(|r| r.cost)
    }
}

/// Controls realised by `kind`. For [`StrategyKind::Optimal`] this runs the
/// full sweep and returns its controls.
pub fn strategy_controls(
    kind: StrategyKind,
    scenario: &Scenario,
    settings: &SweepSettings,
) -> Result<ControlGrid> {
    Ok(realise(kind, scenario, settings)?.0)
}

fn realise(
    kind: StrategyKind,
    scenario: &Scenario,
    settings: &SweepSettings,
) -> Result<(ControlGrid, Option<SolveResult>)> {
    let grid = settings.grid_for(scenario.t_f)?;
    let params = &scenario.params;
    let controls = match kind {
        StrategyKind::NoControl => ControlGrid::zeros(grid),
        StrategyKind::Constant => ControlGrid::constant(
            grid,
            ControlPair::new(
                (1.0 - params.alpha1) * params.u1_max / 2.0,
                params.alpha2 * params.u2_max / 2.0,
            ),
        ),
        StrategyKind::FollowHeuristic => {
            let free = rk4_forward(scenario.x0, &ControlGrid::zeros(grid), scenario)?;
            let values = free
                .values
                .iter()
                .map(|x| {
                    ControlPair::new(
                        (1.0 - params.alpha1) * params.u1_max * x.p,
                        params.alpha2 * params.u2_max * x.p * x.r,
                    )
                    .project(params)
                })
                .collect();
            ControlGrid::new(grid, values)?
        }
        StrategyKind::Optimal => {
            let res = solve(scenario, settings)?;
            return Ok((res.controls.clone(), Some(res)));
        }
    };
    Ok((controls, None))
}

fn evaluate_strategy(
    kind: StrategyKind,
    scenario: &Scenario,
    settings: &SweepSettings,
    param_value: Option<f64>,
) -> ComparisonRow {
    let outcome = realise(kind, scenario, settings).and_then(|(u, solved)| match solved {
        Some(res) => Ok((res.cost, res.converged, res.iterations)),
        None => {
            let x = rk4_forward(scenario.x0, &u, scenario)?;
            let kind = ObjectiveKind::new(scenario.objective, scenario.weights);
            Ok((evaluate_cost(&kind, &x, &u)?, true, 0))
        }
    });
    match outcome {
        Ok((cost, converged, iterations)) => ComparisonRow {
            param_value,
            strategy: kind,
            cost,
            converged,
            iterations,
            error: None,
        },
        Err(e) => ComparisonRow {
            param_value,
            strategy: kind,
            cost: f64::NAN,
            converged: false,
            iterations: 0,
            error: Some(e.to_string()),
        },
    }
}

fn compare_cell(
    scenario: &Scenario,
    settings: &SweepSettings,
    strategies: &[StrategyKind],
    param_value: Option<f64>,
) -> Vec<ComparisonRow> {
    strategies
        .iter()
        .map(|&k| evaluate_strategy(k, scenario, settings, param_value))
        .collect()
}

/// All four strategies on one scenario, costed with the scenario's objective.
pub fn compare_strategies(
    scenario: &Scenario,
    settings: &SweepSettings,
) -> Result<ComparisonTable> {
    scenario.validate()?;
    settings.validate()?;
    let rows = compare_cell(scenario, settings, &StrategyKind::ALL, None);
    if let Some(e) = rows.iter().find_map(|r| r.error.clone()) {
        return Err(invalid(e));
    }
    Ok(ComparisonTable {
        parameter: None,
        rows,
    })
}

/// Runs every (value, strategy) cell. Cells run in parallel; rows come out in
/// value order then strategy order regardless of completion order. Failed
/// cells are kept as rows with `converged = false` and an error message.
pub fn run_sweep(spec: &SweepSpec, settings: &SweepSettings) -> Result<ComparisonTable> {
    spec.validate()?;
    settings.validate()?;
    let rows: Vec<Vec<ComparisonRow>> = spec
        .values
        .par_iter()
        .map(|&v| {
            let scenario = spec.scenario_at(v);
            let mut cell_settings = *settings;
            if spec.parameter == SweepParameter::Horizon {
                // constant step across horizons
                cell_settings.intervals = Some(default_intervals(v));
            }
            if let Err(e) = scenario.validate() {
                return spec
                    .strategies
                    .iter()
                    .map(|&k| ComparisonRow {
                        param_value: Some(v),
                        strategy: k,
                        cost: f64::NAN,
                        converged: false,
                        iterations: 0,
                        error: Some(e.to_string()),
                    })
                    .collect();
            }
            compare_cell(&scenario, &cell_settings, &spec.strategies, Some(v))
        })
        .collect();
    Ok(ComparisonTable {
        parameter: Some(spec.parameter),
        rows: rows.into_iter().flatten().collect(),
    })
}
