//! Transshipment games among identical newsvendors with normally distributed
//! demand.
//!
//! The crate computes optimal coalition order quantities, expected profits and
//! transshipment amounts, their limits as the coalition grows, and the equal
//! allocation of the grand coalition's value together with its core test.
//! Every closed form has an independent check: Monte Carlo estimation of the
//! stochastic program ([`simulation`]), an exact second-stage transportation
//! solver ([`recourse`]) and grid search.

pub mod core_check;
pub mod error;
pub mod model;
pub mod normal;
pub mod recourse;
pub mod simulation;
pub mod solver;

#[cfg(test)]
pub(crate) mod testutil;

pub use core_check::{check_equal_allocation_core, characteristic_values, CoreReport};
pub use error::{Error, ParamError, Result};
pub use model::{
    classify_game, demand_feasibility_check, pooling_factor, validate_params, DerivedEconomics,
    FeasibilityReport, GameType, MarketParams, ParamOverrides,
};
pub use normal::{Probability, StandardizedQuantity};
pub use recourse::{
    solve_transshipment_plan, symmetric_recourse_value, validate_general_params, GeneralAgentParams,
    ProfitMatrix, SurplusShortage, TransshipmentPlan, Violation,
};
pub use simulation::{
    brute_force_optimal, estimate_profit, estimate_transshipment, sample_demands, DemandMatrix,
    GridOptimum, McEstimate,
};
pub use solver::{
    equal_allocation, expected_profit, expected_transshipment, limit_analysis,
    optimality_residual, quantity_sequence, solve_optimal_quantity, CutRegime, LimitResult,
    SolveResult,
};
