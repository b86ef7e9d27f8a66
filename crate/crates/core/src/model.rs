//! The controlled three-compartment customer model.
//!
//! Compartments are referral customers `R`, regular customers `C` and
//! potential customers `P`. Two controls act on the flows out of `P`: direct
//! recruitment `u1` and a word-of-mouth boost `u2` added to the pull rate
//! `beta(t)`. The total population is conserved, so every denominator uses
//! the constant `n0` fixed from the initial state.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::scenarios::RateFunction;

/// Structural rates and control bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Share of directly recruited customers that become referrals.
    pub alpha1: f64,
    /// Share of word-of-mouth recruits that become referrals.
    pub alpha2: f64,
    /// Natural regular -> referral transition rate.
    pub lambda1: f64,
    /// Natural referral -> regular transition rate.
    pub lambda2: f64,
    pub u1_max: f64,
    pub u2_max: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("u1_max", self.u1_max),
            ("u2_max", self.u2_max),
        ];
        for (name, v) in fields {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.alpha1 > 1.0 || self.alpha2 > 1.0 {
            return Err(invalid("alpha1 and alpha2 must lie in [0, 1]"));
        }
        if self.u1_max <= 0.0 || self.u2_max <= 0.0 {
            return Err(invalid("control bounds u1_max and u2_max must be > 0"));
        }
        Ok(())
    }
}

/// Population fractions `(R, C, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub r: f64,
    pub c: f64,
    pub p: f64,
}

impl State {
    pub const fn new(r: f64, c: f64, p: f64) -> Self {
        Self { r, c, p }
    }

    pub fn total(&self) -> f64 {
        total_population(self)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.c, self.p]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.c.is_finite() && self.p.is_finite()
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub dr: f64,
    pub dc: f64,
    pub dp: f64,
}

impl StateDerivative {
    pub fn to_array(self) -> [f64; 3] {
        [self.dr, self.dc, self.dp]
    }

    pub fn sum(&self) -> f64 {
        self.dr + self.dc + self.dp
    }
}

/// Control values `(u1, u2)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlPair {
    pub u1: f64,
    pub u2: f64,
}

impl ControlPair {
    pub const ZERO: ControlPair = ControlPair { u1: 0.0, u2: 0.0 };

    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn midpoint(self, other: ControlPair) -> ControlPair {
        ControlPair::new(0.5 * (self.u1 + other.u1), 0.5 * (self.u2 + other.u2))
    }

    /// Clamp both components onto the admissible box.
    pub fn project(self, params: &ModelParams) -> ControlPair {
        ControlPair::new(
            self.u1.clamp(0.0, params.u1_max),
            self.u2.clamp(0.0, params.u2_max),
        )
    }

    pub fn within_bounds(&self, params: &ModelParams) -> bool {
        (0.0..=params.u1_max).contains(&self.u1) && (0.0..=params.u2_max).contains(&self.u2)
    }
}

/// Cost weights on `P`, `u1` and `u2`.
///
/// Fields are public so that degenerate weights can be built for analysis;
/// [`Weights::validate`] enforces the strictly positive contract used by
/// scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl Weights {
    pub const fn new(kappa1: f64, kappa2: f64, kappa3: f64) -> Self {
        Self {
            kappa1,
            kappa2,
            kappa3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
        ] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn total_population(x: &State) -> f64 {
    x.r + x.c + x.p
}

/// Right-hand side of the controlled model, checked.
#[allow(clippy::too_many_arguments)]
pub fn dynamics(
    t: f64,
    x: &State,
    u: &ControlPair,
    params: &ModelParams,
    beta: &RateFunction,
    gamma: &RateFunction,
    n0: f64,
) -> Result<StateDerivative> {
    ensure_finite("t", t)?;
    ensure_finite("n0", n0)?;
    if n0 <= 0.0 {
        return Err(invalid(format!("n0 must be > 0, got {n0}")));
    }
    if !x.is_finite() {
        return Err(invalid(format!("state must be finite, got {x:?}")));
    }
    ensure_finite("u1", u.u1)?;
    ensure_finite("u2", u.u2)?;
    Ok(dynamics_unchecked(
        t,
        x,
        u,
        params,
        beta.eval(t),
        gamma.eval(t),
        n0,
    ))
}

/// The same right-hand side with the rates already evaluated and no
/// validation. Used on the integrator's hot path.
pub(crate) fn dynamics_unchecked(
    _t: f64,
    x: &State,
    u: &ControlPair,
    params: &ModelParams,
    beta: f64,
    gamma: f64,
    n0: f64,
) -> StateDerivative {
    let State { r, c, p } = *x;
    let pull = beta + u.u2;
    // PR/N with the conserved total
    let contact = p * r / n0;
    let direct = u.u1 * p;

    let dr = -params.lambda2 * r + params.lambda1 * c - gamma * r
        + params.alpha1 * direct
        + params.alpha2 * pull * contact;
    let dc = -params.lambda1 * c + params.lambda2 * r - gamma * c
        + (1.0 - params.alpha2) * pull * contact
        + (1.0 - params.alpha1) * direct;
    let dp = -pull * contact - direct + gamma * r + gamma * c;
    StateDerivative { dr, dc, dp }
}
