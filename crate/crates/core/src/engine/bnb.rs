//! Depth-first branch-and-bound over first-stage bits.
//!
//! Bits are fixed in index order, "not deployed" first. Each node is
//! bounded twice: the fractional-cover rate bound, then (if that does not
//! prune) the optimal recourse of every scenario when all still-available
//! computers may be used, which is never more expensive than the recourse
//! of any completion. A child reuses its parent's recourse whenever that
//! recourse stays admissible.
//!
//! The tree is cut at a fixed depth into independent subtrees that are
//! solved in parallel, each starting from the same seed incumbent. Results
//! and node counts therefore do not depend on the number of workers.

use std::time::Instant;

use crate::formulation::CompiledProblem;
use crate::model::{prefer_mask, Solution};
use crate::par;

use super::bound::scenario_rate_bound;
use super::recourse::{solve_scenario, RecourseOutcome};
use super::report::SolverId;
use super::{deployment_cost, evaluate_mask, forced_for, Scored, SolverReport};

/// Depth at which the tree is split into parallel subtrees.
pub const SPLIT_DEPTH: usize = 4;

#[derive(Clone)]
struct Node {
    depth: usize,
    deployed: u64,
    relaxation: Vec<RecourseOutcome>,
}

struct Search<'a> {
    problem: &'a CompiledProblem,
    j: usize,
    full: u64,
    incumbent: Option<Scored>,
    nodes: u64,
}

enum Visit {
    Pruned,
    Open(Node),
}

impl<'a> Search<'a> {
    fn new(problem: &'a CompiledProblem, incumbent: Option<Scored>) -> Self {
        let j = problem.num_computers();
        Search {
            problem,
            j,
            full: if j == 64 { u64::MAX } else { (1u64 << j) - 1 },
            incumbent,
            nodes: 0,
        }
    }

    fn undecided(&self, depth: usize) -> u64 {
        if depth >= 64 {
            0
        } else {
            self.full & !((1u64 << depth) - 1)
        }
    }

    /// Most preferred deployment reachable below a node.
    fn best_reachable(&self, depth: usize, deployed: u64) -> u64 {
        deployed | self.undecided(depth)
    }

    fn can_prune(&self, bound: u128, depth: usize, deployed: u64) -> bool {
        match &self.incumbent {
            None => false,
            Some(inc) => {
                bound > inc.scaled_cost
                    || (bound == inc.scaled_cost
                        && !prefer_mask(self.best_reachable(depth, deployed), inc.mask))
            }
        }
    }

    /// Bounds a node; returns it if it survives.
    fn visit(&mut self, depth: usize, deployed: u64, parent: Option<&[RecourseOutcome]>) -> Visit {
        self.nodes += 1;
        let p = self.problem;
        let available = deployed | self.undecided(depth);
        let base = p.probability_denom * deployment_cost(p, deployed) as u128;

        let mut rate = base;
        for w in 0..p.num_scenarios() {
            match scenario_rate_bound(p, w, available) {
                Some(b) => rate += p.probability_weight[w] * b,
                None => return Visit::Pruned,
            }
        }
        if self.can_prune(rate, depth, deployed) {
            return Visit::Pruned;
        }

        let forced = forced_for(p, deployed);
        let mut relaxation = Vec::with_capacity(p.num_scenarios());
        let mut bound = base;
        for w in 0..p.num_scenarios() {
            let reused = parent.and_then(|prev| {
                let out = &prev[w];
                (out.used & !available == 0 && forced & !out.used == 0).then(|| out.clone())
            });
            let out = match reused {
                Some(out) => out,
                None => match solve_scenario(p, w, available, forced) {
                    Some(out) => out,
                    None => return Visit::Pruned,
                },
            };
            bound += p.probability_weight[w] * out.total();
            relaxation.push(out);
        }
        if self.can_prune(bound, depth, deployed) {
            return Visit::Pruned;
        }
        if depth == self.j {
            // every computer decided: the relaxation is the true recourse
            let candidate = Scored {
                scaled_cost: bound,
                mask: deployed,
            };
            if self
                .incumbent
                .as_ref()
                .is_none_or(|inc| candidate.beats(inc))
            {
                self.incumbent = Some(candidate);
            }
            return Visit::Pruned;
        }
        Visit::Open(Node {
            depth,
            deployed,
            relaxation,
        })
    }

    fn children(&mut self, node: &Node, mut on_open: impl FnMut(&mut Self, Node)) {
        for deploy in [false, true] {
            let deployed = if deploy {
                node.deployed | 1 << node.depth
            } else {
                node.deployed
            };
            if let Visit::Open(child) = self.visit(node.depth + 1, deployed, Some(&node.relaxation))
            {
                on_open(self, child);
            }
        }
    }

    fn dfs(&mut self, node: Node) {
        self.children(&node, |s, child| s.dfs(child));
    }

    /// Expands the tree down to `split` and returns the open frontier.
    fn frontier(&mut self, split: usize) -> Vec<Node> {
        let mut out = Vec::new();
        let Visit::Open(root) = self.visit(0, 0, None) else {
            return out;
        };
        self.collect(root, split, &mut out);
        out
    }

    fn collect(&mut self, node: Node, split: usize, out: &mut Vec<Node>) {
        if node.depth >= split {
            out.push(node);
            return;
        }
        self.children(&node, |s, child| s.collect(child, split, out));
    }
}

fn seed(problem: &CompiledProblem, full: u64) -> Option<Scored> {
    [0u64, full]
        .into_iter()
        .filter_map(|m| evaluate_mask(problem, m).ok().map(|e| e.scored()))
        .fold(None, |best: Option<Scored>, s| match best {
            Some(b) if !s.beats(&b) => Some(b),
            _ => Some(s),
        })
}

pub fn branch_and_bound(problem: &CompiledProblem) -> SolverReport {
    let start = Instant::now();
    let j = problem.num_computers();
    let mut top = Search::new(problem, None);
    let seed = seed(problem, top.full);
    top.incumbent = seed;
    let frontier = top.frontier(SPLIT_DEPTH.min(j));
    let results = par::map(&frontier, |node| {
        let mut sub = Search::new(problem, seed);
        sub.dfs(node.clone());
        (sub.incumbent, sub.nodes)
    });
    let mut best = top.incumbent;
    let mut nodes = top.nodes;
    for (inc, n) in results {
        nodes += n;
        if let Some(c) = inc {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
    }
    let solution = match best {
        Some(s) => evaluate_mask(problem, s.mask)
            .expect("incumbent is feasible")
            .solution(problem),
        None => Solution::infeasible(j),
    };
    SolverReport {
        solution,
        nodes_explored: nodes,
        wall_time: start.elapsed(),
        solver_id: SolverId::BranchAndBound,
    }
}
