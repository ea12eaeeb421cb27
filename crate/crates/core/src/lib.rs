//! Clearing payments, bailouts, debt forgiveness and edge-removal games in
//! financial networks with default costs.
//!
//! Every algorithm is generic over [`Scalar`]: use [`Rational`] for exact
//! results and `f64` for speed.

pub mod analytics;
pub mod bailout;
pub mod clearing;
pub mod debt_relief;
pub mod document;
pub mod error;
pub mod games;
pub mod linalg;
pub mod lp;
pub mod network;
mod par;
pub mod scalar;
pub mod scenarios;

pub use analytics::{increased_liquidity, liquidity, threat_index, ThreatVector};
pub use bailout::{
    greedy_injections, min_budget_solvency, min_shift_amount, optimal_injections_enumerative, optimal_injections_lp,
    GreedyOutcome, GreedyRound, ShiftAmount,
};
pub use clearing::{greatest_clearing, is_clearing, least_clearing, phi, ClearingResult, ClearingViolation};
pub use debt_relief::{greedy_removal, optimal_removal, RemovalObjective, RemovalOutcome};
pub use document::{parse_network, NamedNetwork, NetworkDocument};
pub use error::{Error, ParseAmountError, Result};
pub use games::{
    best_response, br_dynamics, enumerate_equilibria, is_equilibrium, quality_report, utilities, Deviation, Dynamics,
    GameReport, PolicySpec, Ratio,
};
pub use network::{Edge, EdgeSet, FinancialNetwork, InjectionPlan, StrategyProfile, Violation};
pub use scalar::{ratio, Rational, Scalar, FLOAT_TOLERANCE};
