//! Exact solvers for compiled problems.
//!
//! Costs are compared as integers scaled by the common probability
//! denominator, so every decision is exact. Equal-cost deployments are
//! ordered by [`prefer_mask`].

pub mod bnb;
pub mod bound;
pub mod exhaustive;
pub mod ondemand;
pub mod recourse;
pub mod report;

use crate::exact::ExactNumber;
use crate::formulation::{CompiledProblem, ModelKind};
use crate::model::{prefer_mask, CostBreakdown, FirstStageDecision, Solution, SolutionStatus};

pub use bnb::branch_and_bound;
pub use bound::{lower_bound, Bound, SearchNode};
pub use exhaustive::{exhaustive_solve, EXHAUSTIVE_MAX_COMPUTERS};
pub use recourse::{recourse_solve, Infeasible, RecourseOutcome};
pub use report::{SolverId, SolverReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("exhaustive search supports at most {max} computers, instance has {found}")]
    InstanceTooLarge { max: usize, found: usize },
}

/// A scored deployment: cost scaled by the probability denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scored {
    pub scaled_cost: u128,
    pub mask: u64,
}

impl Scored {
    /// Strict total order: cheaper first, then the preferred bit-vector.
    pub fn beats(&self, other: &Scored) -> bool {
        self.scaled_cost < other.scaled_cost
            || (self.scaled_cost == other.scaled_cost && prefer_mask(self.mask, other.mask))
    }
}

/// Full evaluation of one deployment: per-scenario recourse plus totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyEvaluation {
    pub mask: u64,
    pub deployment: u64,
    pub outcomes: Vec<RecourseOutcome>,
    pub scaled_cost: u128,
}

impl PolicyEvaluation {
    pub fn scored(&self) -> Scored {
        Scored {
            scaled_cost: self.scaled_cost,
            mask: self.mask,
        }
    }

    pub fn breakdown(&self, problem: &CompiledProblem) -> CostBreakdown {
        let mut compute = ExactNumber::zero();
        let mut bell = ExactNumber::zero();
        let mut on_demand = ExactNumber::zero();
        for (sc, out) in problem.scenarios.iter().zip(&self.outcomes) {
            let p = &sc.probability;
            compute = compute + p * &ExactNumber::from(out.compute);
            bell = bell + p * &ExactNumber::from(out.bell);
            on_demand = on_demand + p * &ExactNumber::from(out.on_demand_cost());
        }
        CostBreakdown::new(self.deployment, compute, bell, on_demand)
    }

    /// Expected number of on-demand units bought.
    pub fn expected_on_demand_units(&self, problem: &CompiledProblem) -> ExactNumber {
        problem
            .scenarios
            .iter()
            .zip(&self.outcomes)
            .map(|(sc, out)| &sc.probability * &ExactNumber::from(out.cover.units() as u64))
            .sum()
    }

    pub fn solution(&self, problem: &CompiledProblem) -> Solution {
        Solution {
            first_stage: FirstStageDecision::from_mask(self.mask, problem.num_computers()),
            recourse: self
                .outcomes
                .iter()
                .enumerate()
                .map(|(w, o)| o.to_recourse(problem, w))
                .collect(),
            cost: self.breakdown(problem),
            status: SolutionStatus::Optimal,
        }
    }
}

pub(crate) fn forced_for(problem: &CompiledProblem, deployed: u64) -> u64 {
    match problem.kind {
        ModelKind::Deterministic => deployed,
        ModelKind::Extensive => 0,
    }
}

pub(crate) fn deployment_cost(problem: &CompiledProblem, mask: u64) -> u64 {
    problem
        .deploy_cost
        .iter()
        .enumerate()
        .filter(|(c, _)| mask >> c & 1 == 1)
        .map(|(_, &d)| d)
        .sum()
}

/// Evaluates a complete deployment given as a mask.
pub fn evaluate_mask(problem: &CompiledProblem, mask: u64) -> Result<PolicyEvaluation, Infeasible> {
    let forced = forced_for(problem, mask);
    let deployment = deployment_cost(problem, mask);
    let mut scaled = problem.probability_denom * deployment as u128;
    let mut outcomes = Vec::with_capacity(problem.num_scenarios());
    for w in 0..problem.num_scenarios() {
        let out = recourse::solve_scenario(problem, w, mask, forced)
            .ok_or(Infeasible { scenario: w + 1 })?;
        scaled += problem.probability_weight[w] * out.total();
        outcomes.push(out);
    }
    Ok(PolicyEvaluation {
        mask,
        deployment,
        outcomes,
        scaled_cost: scaled,
    })
}

/// Deployment cost plus probability-weighted optimal recourse.
pub fn evaluate_policy(
    problem: &CompiledProblem,
    deployed: &FirstStageDecision,
) -> Result<CostBreakdown, Infeasible> {
    evaluate_mask(problem, deployed.mask()).map(|e| e.breakdown(problem))
}
