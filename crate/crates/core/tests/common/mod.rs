//! Direct re-implementations of the model rules used as oracles by the
//! integration tests.

#![allow(dead_code)]

use qalloc::engine::branch_and_bound;
use qalloc::formulation::build_extensive_form;
use qalloc::model::demand_bits;
use qalloc::{ExactNumber, ValidInstance};

/// Per-scenario parameters as read straight from the instance.
pub struct Params<'a> {
    pub power: Vec<u64>,
    pub fidelity: &'a [Vec<ExactNumber>],
    pub demand: u64,
}

pub fn scenario_params(inst: &ValidInstance) -> Vec<Params<'_>> {
    inst.scenarios
        .iter()
        .map(|sc| Params {
            power: sc.power.clone(),
            fidelity: &sc.fidelity,
            demand: demand_bits(sc.demand_qubits).unwrap(),
        })
        .collect()
}

pub fn base_params(inst: &ValidInstance) -> Vec<Params<'_>> {
    vec![Params {
        power: inst.computers.iter().map(|c| c.base_qubits).collect(),
        fidelity: &inst.links.base_fidelity,
        demand: demand_bits(inst.scenarios[0].demand_qubits).unwrap(),
    }]
}

pub fn admissible_direct(inst: &ValidInstance, w: usize, set: u64) -> bool {
    admissible(inst, &scenario_params(inst)[w], set)
}

/// Admissibility of a set of computers by the pairwise rule.
pub fn admissible(inst: &ValidInstance, sc: &Params<'_>, set: u64) -> bool {
    let j = inst.computers.len();
    for a in 0..j {
        for b in 0..j {
            if a == b || set >> a & 1 == 0 || set >> b & 1 == 0 {
                continue;
            }
            let supported = ExactNumber::from(inst.links.capacity[a][b]) * &sc.fidelity[a][b];
            let need = sc.power[a].min(sc.power[b]);
            if supported < need {
                return false;
            }
        }
    }
    true
}

/// Brute-force objective of a binary point evaluated from the instance.
pub fn direct_cost(inst: &ValidInstance, deployed: u64, used: &[u64], od: &[u64]) -> ExactNumber {
    let probability: Vec<ExactNumber> = if used.len() == inst.scenarios.len() {
        inst.scenarios
            .iter()
            .map(|sc| sc.probability.clone())
            .collect()
    } else {
        vec![ExactNumber::one()]
    };
    let j = inst.computers.len();
    let mut total = ExactNumber::zero();
    for c in 0..j {
        if deployed >> c & 1 == 1 {
            total = total + ExactNumber::from(inst.computers[c].deploy_cost);
        }
    }
    for (w, pi) in probability.iter().enumerate() {
        let mut cost = 0u64;
        for a in 0..j {
            if used[w] >> a & 1 == 1 {
                cost += inst.computers[a].compute_cost;
                for b in 0..j {
                    if a != b && used[w] >> b & 1 == 1 {
                        cost += inst.links.bell_cost[a][b];
                    }
                }
            }
        }
        for (o, offer) in inst.on_demand.iter().enumerate() {
            if od[w] >> o & 1 == 1 {
                cost += offer.cost;
            }
        }
        total = total + pi * &ExactNumber::from(cost);
    }
    total
}

pub fn direct_feasible(
    inst: &ValidInstance,
    deployed: u64,
    used: &[u64],
    od: &[u64],
    tied: bool,
) -> bool {
    let j = inst.computers.len();
    let params = if tied {
        base_params(inst)
    } else {
        scenario_params(inst)
    };
    params.iter().enumerate().all(|(w, sc)| {
        if used[w] & !deployed != 0 || (tied && used[w] != deployed) {
            return false;
        }
        if !admissible(inst, sc, used[w]) {
            return false;
        }
        let mut cap: u128 = (0..j)
            .filter(|&c| used[w] >> c & 1 == 1)
            .map(|c| sc.power[c] as u128)
            .sum();
        cap += inst
            .on_demand
            .iter()
            .enumerate()
            .filter(|(o, _)| od[w] >> o & 1 == 1)
            .map(|(_, o)| o.capacity as u128)
            .sum::<u128>();
        cap >= sc.demand as u128
    })
}

pub fn optimum(inst: &ValidInstance) -> Option<ExactNumber> {
    let r = branch_and_bound(&build_extensive_form(inst));
    r.solution.is_optimal().then_some(r.solution.cost.total)
}

/// Infeasible counts as +infinity.
pub fn not_greater(a: &Option<ExactNumber>, b: &Option<ExactNumber>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}
