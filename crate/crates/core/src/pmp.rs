//! Maximum-principle algebra: Hamiltonians, the adjoint system, the projected
//! quadratic-cost control law, switching functions and the bang-bang law.
//!
//! Brackets of the form `p3 - a*p1 - (1-a)*p2` appear everywhere: they are
//! the marginal value of moving one potential customer into the customer
//! compartments with referral share `a`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::model::{dynamics_unchecked, ControlPair, ModelParams, State, Weights};
use crate::scenarios::RateFunction;

/// Running-cost form for the controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// `kappa2 u1^2 + kappa3 u2^2`
    L2,
    /// `kappa2 u1 + kappa3 u2`
    L1,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::L2 => "l2",
            Objective::L1 => "l1",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Objective::L2),
            "l1" => Ok(Objective::L1),
            _ => Err(invalid(format!(
                "unknown objective '{s}'; expected l1 or l2"
            ))),
        }
    }
}

/// Adjoint variables paired with `(R, C, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Costate {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl Costate {
    pub const ZERO: Costate = Costate {
        p1: 0.0,
        p2: 0.0,
        p3: 0.0,
    };

    pub const fn new(p1: f64, p2: f64, p3: f64) -> Self {
        Self { p1, p2, p3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.p1.is_finite() && self.p2.is_finite() && self.p3.is_finite()
    }

    /// `p3 - share*p1 - (1-share)*p2`
    fn recruit_value(&self, share: f64) -> f64 {
        self.p3 - share * self.p1 - (1.0 - share) * self.p2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostateDerivative {
    pub dp1: f64,
    pub dp2: f64,
    pub dp3: f64,
}

impl CostateDerivative {
    pub fn to_array(self) -> [f64; 3] {
        [self.dp1, self.dp2, self.dp3]
    }
}

/// Values of the two switching functions at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchingValues {
    pub phi1: f64,
    pub phi2: f64,
}

/// Output of the bang-bang law. `singular[i]` is set when `|phi_i|` fell
/// inside the singular band and the previous value was held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBang {
    pub controls: ControlPair,
    pub singular: [bool; 2],
}

fn check_inputs(x: &State, p: &Costate, n0: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(invalid(format!("state must be finite, got {x:?}")));
    }
    if !p.is_finite() {
        return Err(invalid(format!("costate must be finite, got {p:?}")));
    }
    ensure_finite("n0", n0)?;
    if n0 <= 0.0 {
        return Err(invalid(format!("n0 must be > 0, got {n0}")));
    }
    Ok(())
}

/// Adjoint right-hand side `dp/dt = -dH/d(R, C, P)`.
#[allow(clippy::too_many_arguments)]
pub fn costate_rhs(
    t: f64,
    x: &State,
    p: &Costate,
    u: &ControlPair,
    params: &ModelParams,
    weights: &Weights,
    beta: &RateFunction,
    gamma: &RateFunction,
    n0: f64,
) -> Result<CostateDerivative> {
    ensure_finite("t", t)?;
    check_inputs(x, p, n0)?;
    ensure_finite("u1", u.u1)?;
    ensure_finite("u2", u.u2)?;
    Ok(costate_rhs_unchecked(
        x,
        p,
        u,
        params,
        weights,
        beta.eval(t),
        gamma.eval(t),
        n0,
    ))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn costate_rhs_unchecked(
    x: &State,
    p: &Costate,
    u: &ControlPair,
    params: &ModelParams,
    weights: &Weights,
    beta: f64,
    gamma: f64,
    n0: f64,
) -> CostateDerivative {
    let State { r, c, p: pot } = *x;
    let Costate { p1, p2, p3 } = *p;
    let pull = beta + u.u2;
    let n2 = n0 * n0;
    let direct_value = p.recruit_value(params.alpha1);
    let wom_value = p.recruit_value(params.alpha2);

    let dp1 =
        params.lambda2 * (p1 - p2) + gamma * (p1 - p3) + wom_value * pull * pot * (c + pot) / n2;
    let dp2 = params.lambda1 * (p2 - p1) + gamma * (p2 - p3) - wom_value * pull * pot * r / n2;
    let dp3 = -weights.kappa1 + direct_value * u.u1 + wom_value * pull * r * (c + r) / n2;
    CostateDerivative { dp1, dp2, dp3 }
}

/// Projected stationary point of the quadratic-cost Hamiltonian.
pub fn control_law_l2(
    x: &State,
    p: &Costate,
    params: &ModelParams,
    weights: &Weights,
    n0: f64,
) -> Result<ControlPair> {
    check_inputs(x, p, n0)?;
    if !(weights.kappa2 > 0.0 && weights.kappa3 > 0.0) {
        return Err(invalid(
            "kappa2 and kappa3 must be > 0 for the quadratic control law",
        ));
    }
    Ok(control_law_l2_unchecked(x, p, params, weights, n0))
}

pub(crate) fn control_law_l2_unchecked(
    x: &State,
    p: &Costate,
    params: &ModelParams,
    weights: &Weights,
    n0: f64,
) -> ControlPair {
    let u1 = p.recruit_value(params.alpha1) * x.p / (2.0 * weights.kappa2);
    let u2 = p.recruit_value(params.alpha2) * x.p * x.r / (2.0 * weights.kappa3 * n0);
    ControlPair::new(u1, u2).project(params)
}

/// Coefficients of `u1` and `u2` in the linear-cost Hamiltonian.
pub fn switching_functions(
    x: &State,
    p: &Costate,
    params: &ModelParams,
    weights: &Weights,
    n0: f64,
) -> Result<SwitchingValues> {
    check_inputs(x, p, n0)?;
    Ok(switching_functions_unchecked(x, p, params, weights, n0))
}

pub(crate) fn switching_functions_unchecked(
    x: &State,
    p: &Costate,
    params: &ModelParams,
    weights: &Weights,
    n0: f64,
) -> SwitchingValues {
    SwitchingValues {
        phi1: weights.kappa2 - p.recruit_value(params.alpha1) * x.p,
        phi2: weights.kappa3 - p.recruit_value(params.alpha2) * x.p * x.r / n0,
    }
}

/// Bang-bang law: off where `phi > eps`, full where `phi < -eps`, otherwise
/// hold `previous` and flag the component as singular.
pub fn control_law_l1(
    phi: &SwitchingValues,
    params: &ModelParams,
    previous: &ControlPair,
    eps_singular: f64,
) -> BangBang {
    let pick = |phi: f64, max: f64, prev: f64| {
        if phi > eps_singular {
            (0.0, false)
        } else if phi < -eps_singular {
            (max, false)
        } else {
            (prev, true)
        }
    };
    let (u1, s1) = pick(phi.phi1, params.u1_max, previous.u1);
    let (u2, s2) = pick(phi.phi2, params.u2_max, previous.u2);
    BangBang {
        controls: ControlPair::new(u1, u2),
        singular: [s1, s2],
    }
}

/// Running cost plus `p . f(t, x, u)`.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian(
    t: f64,
    x: &State,
    p: &Costate,
    u: &ControlPair,
    objective: Objective,
    params: &ModelParams,
    weights: &Weights,
    beta: &RateFunction,
    gamma: &RateFunction,
    n0: f64,
) -> f64 {
    let running = weights.kappa1 * x.p
        + match objective {
            Objective::L2 => weights.kappa2 * u.u1 * u.u1 + weights.kappa3 * u.u2 * u.u2,
            Objective::L1 => weights.kappa2 * u.u1 + weights.kappa3 * u.u2,
        };
    let f = dynamics_unchecked(t, x, u, params, beta.eval(t), gamma.eval(t), n0);
    running + p.p1 * f.dr + p.p2 * f.dc + p.p3 * f.dp
}
