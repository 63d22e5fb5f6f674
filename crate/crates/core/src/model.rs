//! Problem data: computers, links, on-demand offers, scenarios, and the
//! decision/solution types shared by both formulations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exact::ExactNumber;

/// Largest qubit demand whose bit count `2^n` still fits in a machine word.
pub const MAX_DEMAND_QUBITS: u32 = 62;

/// Upper limit on any single cost coefficient; keeps scaled objective
/// arithmetic inside `u128`.
pub const MAX_COST: u64 = 1_000_000_000_000;

/// Upper limit on qubit counts and link capacities.
pub const MAX_CAPACITY: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumComputer {
    pub id: usize,
    pub base_qubits: u64,
    pub deploy_cost: u64,
    pub compute_cost: u64,
}

/// Square `J x J` link data. Diagonal entries are carried but never read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkTable {
    pub capacity: Vec<Vec<u64>>,
    pub base_fidelity: Vec<Vec<ExactNumber>>,
    pub bell_cost: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnDemandOffer {
    pub id: usize,
    pub capacity: u64,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub probability: ExactNumber,
    /// `None` means the scenario carries no computational task at all.
    #[serde(default)]
    pub demand_qubits: Option<u32>,
    pub power: Vec<u64>,
    pub fidelity: Vec<Vec<ExactNumber>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub computers: Vec<QuantumComputer>,
    pub links: LinkTable,
    pub on_demand: Vec<OnDemandOffer>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("demand of {0} qubits exceeds the supported maximum of {MAX_DEMAND_QUBITS}")]
    DemandTooLarge(u32),
}

/// Bits of classical demand represented by `n` qubits: `2^n`, or 0 when the
/// scenario has no task.
pub fn demand_bits(demand_qubits: Option<u32>) -> Result<u64, ModelError> {
    match demand_qubits {
        None => Ok(0),
        Some(n) if n > MAX_DEMAND_QUBITS => Err(ModelError::DemandTooLarge(n)),
        Some(n) => Ok(1u64 << n),
    }
}

impl ProblemInstance {
    pub fn num_computers(&self) -> usize {
        self.computers.len()
    }

    pub fn num_offers(&self) -> usize {
        self.on_demand.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }
}

/// Deployment bit-vector `x` over computers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FirstStageDecision {
    pub deployed: Vec<bool>,
}

impl FirstStageDecision {
    pub fn none(j: usize) -> Self {
        FirstStageDecision {
            deployed: vec![false; j],
        }
    }

    pub fn all(j: usize) -> Self {
        FirstStageDecision {
            deployed: vec![true; j],
        }
    }

    pub fn from_mask(mask: u64, j: usize) -> Self {
        FirstStageDecision {
            deployed: (0..j).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        bits_to_mask(&self.deployed)
    }

    pub fn count(&self) -> usize {
        self.deployed.iter().filter(|&&b| b).count()
    }

    pub fn bitmap(&self) -> String {
        bitmap(&self.deployed)
    }
}

impl fmt::Display for FirstStageDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitmap())
    }
}

/// Second-stage reaction in one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ScenarioRecourse {
    pub used: Vec<bool>,
    pub on_demand: Vec<bool>,
}

impl ScenarioRecourse {
    pub fn empty(j: usize, r: usize) -> Self {
        ScenarioRecourse {
            used: vec![false; j],
            on_demand: vec![false; r],
        }
    }

    pub fn used_count(&self) -> usize {
        self.used.iter().filter(|&&b| b).count()
    }

    pub fn on_demand_count(&self) -> usize {
        self.on_demand.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostBreakdown {
    pub deployment: u64,
    pub expected_compute: ExactNumber,
    pub expected_bell: ExactNumber,
    pub expected_on_demand: ExactNumber,
    pub total: ExactNumber,
}

impl CostBreakdown {
    pub fn new(
        deployment: u64,
        expected_compute: ExactNumber,
        expected_bell: ExactNumber,
        expected_on_demand: ExactNumber,
    ) -> Self {
        let total = ExactNumber::from(deployment)
            + &expected_compute
            + &expected_bell
            + &expected_on_demand;
        CostBreakdown {
            deployment,
            expected_compute,
            expected_bell,
            expected_on_demand,
            total,
        }
    }

    pub fn zero() -> Self {
        CostBreakdown::new(
            0,
            ExactNumber::zero(),
            ExactNumber::zero(),
            ExactNumber::zero(),
        )
    }

    pub fn second_stage(&self) -> ExactNumber {
        &(&self.expected_compute + &self.expected_bell) + &self.expected_on_demand
    }

    pub fn sums_to_total(&self) -> bool {
        ExactNumber::from(self.deployment) + self.second_stage() == self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub first_stage: FirstStageDecision,
    pub recourse: Vec<ScenarioRecourse>,
    pub cost: CostBreakdown,
    pub status: SolutionStatus,
}

impl Solution {
    pub fn infeasible(j: usize) -> Self {
        Solution {
            first_stage: FirstStageDecision::none(j),
            recourse: Vec::new(),
            cost: CostBreakdown::zero(),
            status: SolutionStatus::Infeasible,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolutionStatus::Optimal
    }
}

pub fn bits_to_mask(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |m, (i, &b)| if b { m | 1 << i } else { m })
}

pub fn mask_to_bits(mask: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| mask >> i & 1 == 1).collect()
}

pub fn bitmap(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Tie-break order on equal-cost bit-vectors: the vector whose bitmap string
/// reads greatest wins, so lower-indexed items are preferred (`{1..9}` over
/// `{2..10}`). Returns `true` if `a` is preferred over `b`.
pub fn prefer_bits(a: &[bool], b: &[bool]) -> bool {
    a > b
}

/// Same order as [`prefer_bits`] on masks where bit `i` is item `i`.
pub fn prefer_mask(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let lowest_diff = (a ^ b).trailing_zeros();
    a >> lowest_diff & 1 == 1
}
