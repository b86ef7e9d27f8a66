//! Optimal marketing control for a three-compartment customer model.
//!
//! Customers are split into referral (`R`), regular (`C`) and potential
//! (`P`) compartments. Two bounded controls, direct recruitment and a
//! word-of-mouth boost, are chosen to minimise the time integral of `P` plus
//! a quadratic or linear control cost. Optimal controls are computed with a
//! forward-backward sweep over fixed-step RK4 integrations of the state and
//! adjoint systems.
//!
//! ```no_run
//! use custctl_core::{paper_preset, solve, Preset, SweepSettings};
//!
//! let scenario = paper_preset(Preset::Scenario1);
//! let result = solve(&scenario, &SweepSettings::default()).unwrap();
//! println!("J = {} after {} iterations", result.cost, result.iterations);
//! ```

pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod objectives;
pub mod pmp;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
pub use experiments::{
    compare_strategies, run_sweep, strategy_controls, ComparisonRow, ComparisonTable, StrategyKind,
    SweepParameter, SweepSpec,
};
pub use integrator::{rk4_backward, rk4_forward, ControlGrid, TimeGrid, Trajectory};
pub use model::{
    dynamics, total_population, ControlPair, ModelParams, State, StateDerivative, Weights,
};
pub use objectives::{evaluate_cost, ObjectiveKind};
pub use pmp::{
    control_law_l1, control_law_l2, costate_rhs, hamiltonian, switching_functions, BangBang,
    Costate, CostateDerivative, Objective, SwitchingValues,
};
pub use scenarios::{builtin_beta, builtin_gamma, paper_preset, Preset, RateFunction, Scenario};
pub use solver::{convergence_test, solve, SolveResult, SweepSettings};
