//! Ground-truth solver: scores every first-stage vector.

use std::time::Instant;

use crate::formulation::CompiledProblem;
use crate::model::Solution;
use crate::par;

use super::{evaluate_mask, report::SolverId, Scored, SolveError, SolverReport};

pub const EXHAUSTIVE_MAX_COMPUTERS: usize = 20;

pub fn exhaustive_solve(problem: &CompiledProblem) -> Result<SolverReport, SolveError> {
    let j = problem.num_computers();
    if j > EXHAUSTIVE_MAX_COMPUTERS {
        return Err(SolveError::InstanceTooLarge {
            max: EXHAUSTIVE_MAX_COMPUTERS,
            found: j,
        });
    }
    let start = Instant::now();
    let vectors = 1u64 << j;
    let best = par::best_over_range(
        vectors,
        |mask| evaluate_mask(problem, mask).ok().map(|e| e.scored()),
        Scored::beats,
    );
    let solution = match best {
        Some(s) => evaluate_mask(problem, s.mask)
            .expect("winner was feasible")
            .solution(problem),
        None => Solution::infeasible(j),
    };
    Ok(SolverReport {
        solution,
        nodes_explored: vectors,
        wall_time: start.elapsed(),
        solver_id: SolverId::Exhaustive,
    })
}
