//! Time-varying rates, parameter presets and named scenarios.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::model::{ModelParams, State, Weights};
use crate::pmp::Objective;

/// A closed-form rate `t -> value`.
///
/// Logistic forms are evaluated as `exp(-k*t + k*t0)` so that integer
/// products like `k*t0 = 8` reproduce the published expressions exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFunction {
    Constant {
        value: f64,
    },
    /// `base + amplitude / (1 + exp(-k t + k t0))`
    LogisticIncreasing {
        base: f64,
        amplitude: f64,
        steepness: f64,
        midpoint: f64,
    },
    /// `base + amplitude * (1 - 1 / (1 + exp(-k t + k t0)))`
    LogisticDecreasing {
        base: f64,
        amplitude: f64,
        steepness: f64,
        midpoint: f64,
    },
    /// `offset + scale * (1 - depth * cos(omega t + phase))`
    Sinusoidal {
        offset: f64,
        scale: f64,
        depth: f64,
        angular_frequency: f64,
        phase: f64,
    },
    /// Linear interpolation between `(t, value)` knots, held constant
    /// outside the knot range. Knots must be sorted by `t`.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
}

impl RateFunction {
    pub fn constant(value: f64) -> Self {
        RateFunction::Constant { value }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { value } => *value,
            RateFunction::LogisticIncreasing {
                base,
                amplitude,
                steepness,
                midpoint,
            } => base + amplitude / (1.0 + (-steepness * t + steepness * midpoint).exp()),
            RateFunction::LogisticDecreasing {
                base,
                amplitude,
                steepness,
                midpoint,
            } => {
                base + amplitude
                    * (1.0 - 1.0 / (1.0 + (-steepness * t + steepness * midpoint).exp()))
            }
            RateFunction::Sinusoidal {
                offset,
                scale,
                depth,
                angular_frequency,
                phase,
            } => offset + scale * (1.0 - depth * (angular_frequency * t + phase).cos()),
            RateFunction::PiecewiseLinear { points } => interpolate(points, t),
        }
    }

    /// Short human-readable identifier.
    pub fn describe(&self) -> String {
        match self {
            RateFunction::Constant { value } => format!("constant({value})"),
            RateFunction::LogisticIncreasing { .. } => "logistic-increasing".into(),
            RateFunction::LogisticDecreasing { .. } => "logistic-decreasing".into(),
            RateFunction::Sinusoidal { .. } => "sinusoidal".into(),
            RateFunction::PiecewiseLinear { points } => {
                format!("piecewise-linear({} knots)", points.len())
            }
        }
    }

    /// Checks structural validity and that the rate is finite and
    /// non-negative on a fine sampling of `[0, t_f]` plus every knot.
    pub fn validate(&self, t_f: f64) -> Result<()> {
        if let RateFunction::PiecewiseLinear { points } = self {
            if points.is_empty() {
                return Err(invalid("piecewise-linear rate needs at least one knot"));
            }
            for w in points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(invalid(
                        "piecewise-linear knots must be strictly increasing in t",
                    ));
                }
            }
            for &(t, v) in points {
                ensure_finite("rate knot time", t)?;
                ensure_finite("rate knot value", v)?;
                if v < 0.0 {
                    return Err(invalid(format!("rate knot value must be >= 0, got {v}")));
                }
            }
        }
        const SAMPLES: usize = 1000;
        for i in 0..=SAMPLES {
            let t = t_f * i as f64 / SAMPLES as f64;
            let v = self.eval(t);
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!(
                    "rate {} evaluates to {v} at t = {t}",
                    self.describe()
                )));
            }
        }
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let Some(first) = points.first() else {
        return f64::NAN;
    };
    if t <= first.0 {
        return first.1;
    }
    let last = points[points.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|&(tk, _)| tk <= t);
    let (t0, v0) = points[k - 1];
    let (t1, v1) = points[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

pub const GAMMA0: f64 = 0.10;

/// The recruitment rate `beta_index` (1: increasing, 2: decreasing, 3: periodic).
pub fn builtin_beta_fn(index: u8) -> Result<RateFunction> {
    match index {
        1 => Ok(RateFunction::LogisticIncreasing {
            base: 0.01,
            amplitude: 0.99,
            steepness: 2.0,
            midpoint: 4.0,
        }),
        2 => Ok(RateFunction::LogisticDecreasing {
            base: 0.01,
            amplitude: 0.99,
            steepness: 2.0,
            midpoint: 3.0,
        }),
        3 => Ok(RateFunction::Sinusoidal {
            offset: 0.01,
            scale: 0.49,
            depth: 1.0,
            angular_frequency: 2.0 * PI,
            phase: 0.26,
        }),
        _ => Err(invalid(format!(
            "unknown beta index {index}; expected 1, 2 or 3"
        ))),
    }
}

/// The defection rate `gamma_index` (1: constant, 2: increasing, 3: periodic).
pub fn builtin_gamma_fn(index: u8) -> Result<RateFunction> {
    match index {
        1 => Ok(RateFunction::Constant { value: GAMMA0 }),
        2 => Ok(RateFunction::LogisticIncreasing {
            base: 0.01,
            amplitude: 0.18,
            steepness: 2.0,
            midpoint: 3.5,
        }),
        3 => Ok(RateFunction::Sinusoidal {
            offset: 0.0,
            scale: GAMMA0,
            depth: 0.9,
            angular_frequency: 2.0 * PI,
            phase: 0.26,
        }),
        _ => Err(invalid(format!(
            "unknown gamma index {index}; expected 1, 2 or 3"
        ))),
    }
}

pub fn builtin_beta(index: u8, t: f64) -> Result<f64> {
    Ok(builtin_beta_fn(index)?.eval(t))
}

pub fn builtin_gamma(index: u8, t: f64) -> Result<f64> {
    Ok(builtin_gamma_fn(index)?.eval(t))
}

pub const INITIAL_STATE: State = State::new(0.001, 0.009, 0.99);
pub const DEFAULT_HORIZON: f64 = 7.0;

/// Table 1 rates with `lambda2 = lambda1 * C0 / R0` and the default control bounds.
pub fn table1_params() -> ModelParams {
    let lambda1 = 0.002;
    ModelParams {
        alpha1: 0.05,
        alpha2: 0.10,
        lambda1,
        lambda2: lambda1 * INITIAL_STATE.c / INITIAL_STATE.r,
        u1_max: 0.06,
        u2_max: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ModelParams,
    pub weights: Weights,
    pub beta: RateFunction,
    pub gamma: RateFunction,
    pub x0: State,
    pub t_f: f64,
    pub objective: Objective,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.weights.validate()?;
        ensure_finite("t_f", self.t_f)?;
        if self.t_f <= 0.0 {
            return Err(invalid(format!("t_f must be > 0, got {}", self.t_f)));
        }
        let x = self.x0;
        if !x.is_finite() || x.r < 0.0 || x.c < 0.0 || x.p < 0.0 {
            return Err(invalid(format!(
                "x0 components must be finite and >= 0, got {x:?}"
            )));
        }
        if x.total() <= 0.0 {
            return Err(invalid("x0 must not be identically zero"));
        }
        self.beta.validate(self.t_f)?;
        self.gamma.validate(self.t_f)?;
        Ok(())
    }

    /// Conserved total population.
    pub fn n0(&self) -> f64 {
        self.x0.total()
    }
}

/// Named scenario presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Scenario1,
    Scenario2,
    Scenario3,
    Scenario3L1,
    ComparisonDefault,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Scenario1,
        Preset::Scenario2,
        Preset::Scenario3,
        Preset::Scenario3L1,
        Preset::ComparisonDefault,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Preset::Scenario1 => "scenario1",
            Preset::Scenario2 => "scenario2",
            Preset::Scenario3 => "scenario3",
            Preset::Scenario3L1 => "scenario3-l1",
            Preset::ComparisonDefault => "comparison-default",
        }
    }

    pub fn valid_keys() -> String {
        Preset::ALL.map(|p| p.key()).join(", ")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown preset '{s}'; valid presets: {}",
                    Preset::valid_keys()
                ))
            })
    }
}

/// Weights used for the time-varying scenarios.
pub const SCENARIO_WEIGHTS: Weights = Weights::new(1.0, 1.5, 0.01);

/// Weights used for the strategy comparison, `kappa1 = 1 / t_f`.
pub fn comparison_weights(t_f: f64) -> Weights {
    Weights::new(1.0 / t_f, 15.0, 1.0)
}

pub fn paper_preset(preset: Preset) -> Scenario {
    let base = |index: u8, objective: Objective| Scenario {
        params: table1_params(),
        weights: SCENARIO_WEIGHTS,
        beta: builtin_beta_fn(index).expect("builtin index"),
        gamma: builtin_gamma_fn(index).expect("builtin index"),
        x0: INITIAL_STATE,
        t_f: DEFAULT_HORIZON,
        objective,
    };
    match preset {
        Preset::Scenario1 => base(1, Objective::L2),
        Preset::Scenario2 => base(2, Objective::L2),
        Preset::Scenario3 => base(3, Objective::L2),
        Preset::Scenario3L1 => base(3, Objective::L1),
        Preset::ComparisonDefault => Scenario {
            params: table1_params(),
            weights: comparison_weights(DEFAULT_HORIZON),
            beta: RateFunction::constant(1.0),
            gamma: RateFunction::constant(GAMMA0),
            x0: INITIAL_STATE,
            t_f: DEFAULT_HORIZON,
            objective: Objective::L2,
        },
    }
}
