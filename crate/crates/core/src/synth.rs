//! Random instance generator for property tests and benchmarks.

use crate::exact::ExactNumber;
use crate::instance::{validate_instance, ValidInstance};
use crate::model::{LinkTable, OnDemandOffer, ProblemInstance, QuantumComputer, Scenario};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub min_computers: usize,
    pub max_computers: usize,
    pub max_scenarios: usize,
    pub max_offers: usize,
    pub max_cost: u64,
    pub max_demand_qubits: u32,
    pub max_power: u64,
    pub max_link_capacity: u64,
    /// Fidelities are drawn from `{0, 1/steps, ..., 1}`.
    pub fidelity_steps: u64,
    /// Chance (in percent) that a scenario has no task.
    pub no_demand_percent: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            min_computers: 1,
            max_computers: 8,
            max_scenarios: 3,
            max_offers: 4,
            max_cost: 100_000,
            max_demand_qubits: 8,
            max_power: 100,
            max_link_capacity: 200,
            fidelity_steps: 10,
            no_demand_percent: 15,
        }
    }
}

fn fidelity(rng: &mut SplitMix64, steps: u64) -> ExactNumber {
    ExactNumber::ratio(rng.range(0, steps), steps)
}

pub fn random_instance(rng: &mut SplitMix64, cfg: &SynthConfig) -> ValidInstance {
    let j = rng.range(cfg.min_computers as u64, cfg.max_computers as u64) as usize;
    let computers = (1..=j)
        .map(|id| QuantumComputer {
            id,
            base_qubits: rng.range(0, cfg.max_power),
            deploy_cost: rng.range(0, cfg.max_cost),
            compute_cost: rng.range(0, cfg.max_cost),
        })
        .collect();
    let mut capacity = vec![vec![0u64; j]; j];
    let mut base_fidelity = vec![vec![ExactNumber::zero(); j]; j];
    let mut bell_cost = vec![vec![0u64; j]; j];
    for a in 0..j {
        for b in 0..j {
            if a != b {
                capacity[a][b] = rng.range(1, cfg.max_link_capacity);
                base_fidelity[a][b] = fidelity(rng, cfg.fidelity_steps);
                bell_cost[a][b] = rng.range(0, cfg.max_cost);
            }
        }
    }
    let r = rng.range(0, cfg.max_offers as u64) as usize;
    let on_demand = (1..=r)
        .map(|id| OnDemandOffer {
            id,
            capacity: rng.range(1, cfg.max_power.max(1)),
            cost: rng.range(1, cfg.max_cost.max(1)),
        })
        .collect();
    let s = rng.range(1, cfg.max_scenarios.max(1) as u64) as usize;
    let weights: Vec<u64> = (0..s).map(|_| rng.range(1, 5)).collect();
    let total: u64 = weights.iter().sum();
    let scenarios = (0..s)
        .map(|w| {
            let demand_qubits = if rng.range(0, 99) < cfg.no_demand_percent {
                None
            } else {
                Some(rng.range(0, cfg.max_demand_qubits as u64) as u32)
            };
            let mut fid = vec![vec![ExactNumber::zero(); j]; j];
            for (a, row) in fid.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    if a != b {
                        *v = fidelity(rng, cfg.fidelity_steps);
                    }
                }
            }
            Scenario {
                id: w + 1,
                probability: ExactNumber::ratio(weights[w], total),
                demand_qubits,
                power: (0..j).map(|_| rng.range(0, cfg.max_power)).collect(),
                fidelity: fid,
            }
        })
        .collect();
    validate_instance(ProblemInstance {
        computers,
        links: LinkTable {
            capacity,
            base_fidelity,
            bell_cost,
        },
        on_demand,
        scenarios,
    })
    .expect("generated instance is valid")
}
