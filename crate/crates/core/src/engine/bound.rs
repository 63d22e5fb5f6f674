//! Fractional-cover lower bound on search nodes.
//!
//! Any recourse that covers `D` bits pays at least `D` times the cheapest
//! per-bit rate among the units it could use: available computers
//! (`compute_cost / power`) and on-demand offers (`cost / capacity`). Bell
//! charges, conflicts and undecided deployment costs are all non-negative
//! and are ignored.

use crate::exact::ExactNumber;
use crate::formulation::CompiledProblem;

use super::deployment_cost;

/// Partial first-stage assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchNode {
    pub fixed: Vec<Option<bool>>,
    pub committed_cost: ExactNumber,
    pub bound: ExactNumber,
}

impl SearchNode {
    pub fn root(j: usize) -> Self {
        SearchNode {
            fixed: vec![None; j],
            committed_cost: ExactNumber::zero(),
            bound: ExactNumber::zero(),
        }
    }

    pub fn with_fixed(fixed: Vec<Option<bool>>) -> Self {
        SearchNode {
            fixed,
            committed_cost: ExactNumber::zero(),
            bound: ExactNumber::zero(),
        }
    }

    /// Computers fixed to deployed.
    pub fn deployed_mask(&self) -> u64 {
        self.fixed
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Some(true))
            .fold(0, |m, (c, _)| m | 1 << c)
    }

    /// Computers deployed or still undecided.
    pub fn available_mask(&self) -> u64 {
        self.fixed
            .iter()
            .enumerate()
            .filter(|(_, f)| **f != Some(false))
            .fold(0, |m, (c, _)| m | 1 << c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Finite(ExactNumber),
    /// No completion can cover some scenario.
    Infinite,
}

impl Bound {
    pub fn finite(&self) -> Option<&ExactNumber> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Infinite => None,
        }
    }
}

/// Cheapest per-bit rate `(cost, capacity)` for one scenario, or `Err(())`
/// if the available units cannot reach the demand.
pub(crate) fn scenario_rate(
    problem: &CompiledProblem,
    scenario: usize,
    available: u64,
) -> Result<Option<(u128, u128)>, ()> {
    let sc = &problem.scenarios[scenario];
    let mut capacity = sc.total_offer_capacity();
    let mut rate: Option<(u128, u128)> = None;
    let mut consider = |cost: u128, cap: u128| {
        if cap == 0 {
            return;
        }
        rate = match rate {
            Some(best) if best.0 * cap <= cost * best.1 => Some(best),
            _ => Some((cost, cap)),
        };
    };
    for c in 0..problem.num_computers() {
        if available >> c & 1 == 1 {
            capacity += sc.power[c];
            consider(problem.compute_cost[c] as u128, sc.power[c]);
        }
    }
    for class in &sc.offer_classes {
        consider(class.cost as u128, class.capacity);
    }
    if capacity < sc.demand {
        return Err(());
    }
    Ok(rate)
}

/// Deployment cost of bits fixed to 1, plus for every scenario its
/// probability times demand times the cheapest per-bit rate.
pub fn lower_bound(problem: &CompiledProblem, node: &SearchNode) -> Bound {
    let available = node.available_mask();
    let mut total = ExactNumber::from(deployment_cost(problem, node.deployed_mask()));
    for (w, sc) in problem.scenarios.iter().enumerate() {
        let Ok(rate) = scenario_rate(problem, w, available) else {
            return Bound::Infinite;
        };
        if sc.demand == 0 {
            continue;
        }
        if let Some((cost, cap)) = rate {
            total = total
                + &sc.probability * &(ExactNumber::from(sc.demand) * ExactNumber::ratio(cost, cap));
        }
    }
    Bound::Finite(total)
}

/// Integer form of the per-scenario rate term, rounded up (recourse costs
/// are integers). `None` means infeasible.
pub(crate) fn scenario_rate_bound(
    problem: &CompiledProblem,
    scenario: usize,
    available: u64,
) -> Option<u128> {
    let demand = problem.scenarios[scenario].demand;
    let rate = scenario_rate(problem, scenario, available).ok()?;
    if demand == 0 {
        return Some(0);
    }
    Some(match rate {
        Some((cost, cap)) => demand
            .checked_mul(cost)
            .map(|x| x / cap + u128::from(x % cap != 0))
            .unwrap_or(0),
        None => 0,
    })
}
