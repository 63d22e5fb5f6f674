//! Exact two-stage stochastic provisioning of quantum computers for
//! distributed quantum computing.
//!
//! An operator reserves computers before task demand, per-machine qubit
//! power and Bell-pair fidelity are known, then in each realized scenario
//! decides which reserved machines to use and how much on-demand capacity
//! to buy. Both the deterministic and the two-stage model are compiled
//! into a common form ([`formulation`]) and solved exactly ([`engine`]).

pub mod baselines;
pub mod engine;
pub mod exact;
pub mod experiments;
pub mod formulation;
pub mod instance;
pub mod model;
pub mod output;
pub mod par;
pub mod rng;
pub mod synth;

pub use exact::ExactNumber;
pub use instance::{default_instance, validate_instance, ValidInstance};
pub use model::{
    demand_bits, CostBreakdown, FirstStageDecision, ProblemInstance, ScenarioRecourse, Solution,
    SolutionStatus,
};
