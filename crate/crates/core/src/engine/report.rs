//! Solver reports and their JSON form.

use std::time::Duration;

use serde::Serialize;

use crate::exact::ExactNumber;
use crate::model::{Solution, SolutionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverId {
    Exhaustive,
    BranchAndBound,
}

impl SolverId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::Exhaustive => "exhaustive",
            SolverId::BranchAndBound => "branch_and_bound",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: Solution,
    pub nodes_explored: u64,
    pub wall_time: Duration,
    pub solver_id: SolverId,
}

#[derive(Serialize)]
struct CostJson {
    deployment: String,
    expected_compute: ExactNumber,
    expected_bell: ExactNumber,
    expected_on_demand: ExactNumber,
    total: ExactNumber,
}

#[derive(Serialize)]
struct RecourseJson {
    scenario: usize,
    used: Vec<u8>,
    on_demand: Vec<u8>,
}

#[derive(Serialize)]
struct ReportJson {
    solver: SolverId,
    status: SolutionStatus,
    nodes_explored: u64,
    first_stage: Vec<u8>,
    recourse: Vec<RecourseJson>,
    cost: CostJson,
}

fn bits(v: &[bool]) -> Vec<u8> {
    v.iter().map(|&b| u8::from(b)).collect()
}

impl SolverReport {
    /// JSON document: 0/1 arrays for decisions, decimal strings for costs.
    /// Wall time is left out so reports are reproducible byte for byte.
    pub fn to_json(&self) -> String {
        let s = &self.solution;
        let doc = ReportJson {
            solver: self.solver_id,
            status: s.status,
            nodes_explored: self.nodes_explored,
            first_stage: bits(&s.first_stage.deployed),
            recourse: s
                .recourse
                .iter()
                .enumerate()
                .map(|(w, r)| RecourseJson {
                    scenario: w + 1,
                    used: bits(&r.used),
                    on_demand: bits(&r.on_demand),
                })
                .collect(),
            cost: CostJson {
                deployment: s.cost.deployment.to_string(),
                expected_compute: s.cost.expected_compute.clone(),
                expected_bell: s.cost.expected_bell.clone(),
                expected_on_demand: s.cost.expected_on_demand.clone(),
                total: s.cost.total.clone(),
            },
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
        out.push('\n');
        out
    }
}
