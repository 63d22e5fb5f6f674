//! Second-stage problem of one scenario: which available computers to use
//! and which on-demand offers to buy.

use crate::formulation::{CompiledProblem, CompiledScenario, ModelKind};
use crate::model::{mask_to_bits, FirstStageDecision, ScenarioRecourse};

use super::ondemand::{cheapest_cover, CoverChoice};

/// Cost-minimal second-stage reaction, costs not yet weighted by the
/// scenario probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecourseOutcome {
    pub used: u64,
    pub cover: CoverChoice,
    pub compute: u128,
    pub bell: u128,
}

impl RecourseOutcome {
    pub fn on_demand_cost(&self) -> u128 {
        self.cover.cost
    }

    pub fn total(&self) -> u128 {
        self.compute + self.bell + self.cover.cost
    }

    pub fn to_recourse(&self, problem: &CompiledProblem, scenario: usize) -> ScenarioRecourse {
        let sc = &problem.scenarios[scenario];
        ScenarioRecourse {
            used: mask_to_bits(self.used, problem.num_computers()),
            on_demand: self.cover.bits(&sc.offer_classes, problem.num_offers()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scenario {scenario} cannot be covered by the usable computers and on-demand offers")]
pub struct Infeasible {
    pub scenario: usize,
}

/// Public entry point: best reaction of scenario `scenario` (zero-based)
/// to a complete deployment.
pub fn recourse_solve(
    problem: &CompiledProblem,
    deployed: &FirstStageDecision,
    scenario: usize,
) -> Result<(ScenarioRecourse, RecourseOutcome), Infeasible> {
    let mask = deployed.mask();
    let forced = match problem.kind {
        ModelKind::Deterministic => mask,
        ModelKind::Extensive => 0,
    };
    let out = solve_scenario(problem, scenario, mask, forced).ok_or(Infeasible {
        scenario: scenario + 1,
    })?;
    Ok((out.to_recourse(problem, scenario), out))
}

/// Searches usage sets `U` with `forced ⊆ U ⊆ allowed`, conflict-free,
/// minimizing compute + Bell + on-demand cost. Ties go to the preferred
/// usage vector, then the preferred offer vector.
pub fn solve_scenario(
    problem: &CompiledProblem,
    scenario: usize,
    allowed: u64,
    forced: u64,
) -> Option<RecourseOutcome> {
    let sc = &problem.scenarios[scenario];
    if forced & !allowed != 0 || !sc.conflicts.admits(forced) {
        return None;
    }
    let candidates: Vec<usize> = (0..problem.num_computers())
        .filter(|&c| allowed >> c & 1 == 1)
        .collect();
    let mut suffix_power = vec![0u128; candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        suffix_power[i] = suffix_power[i + 1] + sc.power[candidates[i]];
    }
    let offer_capacity = sc.total_offer_capacity();
    if suffix_power[0] + offer_capacity < sc.demand {
        return None;
    }
    let offer_rate = sc
        .offer_classes
        .iter()
        .filter(|c| c.capacity > 0)
        .map(|c| (c.cost as u128, c.capacity))
        .min_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    let mut search = UsageSearch {
        problem,
        sc,
        candidates: &candidates,
        suffix_power: &suffix_power,
        offer_capacity,
        offer_rate,
        forced,
        best: None,
    };
    search.descend(0, 0, 0, 0, 0);
    search.best
}

struct UsageSearch<'a> {
    problem: &'a CompiledProblem,
    sc: &'a CompiledScenario,
    candidates: &'a [usize],
    suffix_power: &'a [u128],
    offer_capacity: u128,
    offer_rate: Option<(u128, u128)>,
    forced: u64,
    best: Option<RecourseOutcome>,
}

impl UsageSearch<'_> {
    /// Lower bound on the cost still to pay for `residual` capacity using
    /// candidates from `depth` on or offers, at the cheapest unit rate.
    fn remaining_bound(&self, depth: usize, residual: u128) -> u128 {
        if residual == 0 {
            return 0;
        }
        let mut rate = self.offer_rate;
        for &c in &self.candidates[depth..] {
            let power = self.sc.power[c];
            if power == 0 {
                continue;
            }
            let r = (self.problem.compute_cost[c] as u128, power);
            rate = match rate {
                Some(best) if best.0 * r.1 <= r.0 * best.1 => Some(best),
                _ => Some(r),
            };
        }
        match rate {
            Some((cost, cap)) => residual
                .checked_mul(cost)
                .map(|x| x / cap + u128::from(x % cap != 0))
                .unwrap_or(0),
            None => 0,
        }
    }

    fn descend(&mut self, depth: usize, used: u64, power: u128, compute: u128, bell: u128) {
        let residual = self.sc.demand.saturating_sub(power);
        if power + self.suffix_power[depth] + self.offer_capacity < self.sc.demand {
            return;
        }
        if let Some(best) = &self.best {
            // later leaves are never preferred on ties, so equality prunes
            if compute + bell + self.remaining_bound(depth, residual) >= best.total() {
                return;
            }
        }
        if depth == self.candidates.len() {
            let Some(cover) = cheapest_cover(&self.sc.offer_classes, residual) else {
                return;
            };
            let total = compute + bell + cover.cost;
            if self.best.as_ref().is_none_or(|b| total < b.total()) {
                self.best = Some(RecourseOutcome {
                    used,
                    cover,
                    compute,
                    bell,
                });
            }
            return;
        }
        let c = self.candidates[depth];
        let bit = 1u64 << c;
        if self.sc.conflicts.neighbours(c) & used == 0 {
            let mut extra = 0u128;
            let mut rest = used;
            while rest != 0 {
                let other = rest.trailing_zeros() as usize;
                extra += self.problem.pair_cost[c][other] as u128;
                rest &= rest - 1;
            }
            self.descend(
                depth + 1,
                used | bit,
                power + self.sc.power[c],
                compute + self.problem.compute_cost[c] as u128,
                bell + extra,
            );
        }
        if self.forced & bit == 0 {
            self.descend(depth + 1, used, power, compute, bell);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_deterministic, build_extensive_form};
    use crate::instance::default_instance;
    use crate::model::{bits_to_mask, prefer_mask};

    /// Enumerates every usage subset and every offer subset directly.
    fn brute(
        problem: &CompiledProblem,
        w: usize,
        allowed: u64,
        forced: u64,
    ) -> Option<(u128, u64, Vec<bool>)> {
        let j = problem.num_computers();
        let r = problem.num_offers();
        assert!(r <= 12);
        let sc = &problem.scenarios[w];
        let mut best: Option<(u128, u64, Vec<bool>)> = None;
        for used in 0u64..(1 << j) {
            if used & !allowed != 0 || forced & !used != 0 || !sc.conflicts.admits(used) {
                continue;
            }
            for om in 0u64..(1 << r) {
                let bits: Vec<bool> = (0..r).map(|i| om >> i & 1 == 1).collect();
                let cap: u128 = (0..j)
                    .filter(|&c| used >> c & 1 == 1)
                    .map(|c| sc.power[c])
                    .sum::<u128>()
                    + (0..r)
                        .filter(|&o| bits[o])
                        .map(|o| sc.offer_capacity[o])
                        .sum::<u128>();
                if cap < sc.demand {
                    continue;
                }
                let mut cost: u128 = (0..r)
                    .filter(|&o| bits[o])
                    .map(|o| problem.offer_cost[o] as u128)
                    .sum();
                for a in 0..j {
                    if used >> a & 1 == 0 {
                        continue;
                    }
                    cost += problem.compute_cost[a] as u128;
                    for b in (a + 1)..j {
                        if used >> b & 1 == 1 {
                            cost += problem.pair_cost[a][b] as u128;
                        }
                    }
                }
                let better = match &best {
                    None => true,
                    Some((bc, bu, bb)) => {
                        cost < *bc
                            || (cost == *bc
                                && (prefer_mask(used, *bu)
                                    || (used == *bu && crate::model::prefer_bits(&bits, bb))))
                    }
                };
                if better {
                    best = Some((cost, used, bits));
                }
            }
        }
        best
    }

    #[test]
    fn default_first_scenario_all_deployed() {
        let p = build_extensive_form(&default_instance());
        let (rec, out) = recourse_solve(&p, &FirstStageDecision::all(10), 0).unwrap();
        assert_eq!(out.total(), 41400);
        assert_eq!(bits_to_mask(&rec.used), 0b01_1111_1111);
        assert_eq!(rec.on_demand_count(), 0);
    }

    #[test]
    fn default_first_scenario_nothing_deployed() {
        let p = build_extensive_form(&default_instance());
        let (rec, out) = recourse_solve(&p, &FirstStageDecision::none(10), 0).unwrap();
        assert_eq!(out.total(), 225000);
        assert_eq!(rec.on_demand_count(), 9);
        assert!(rec.on_demand[..9].iter().all(|&b| b));
    }

    #[test]
    fn default_second_scenario_is_empty() {
        let p = build_extensive_form(&default_instance());
        for mask in [0u64, 0b1, 0b11_1111_1111] {
            let (rec, out) =
                recourse_solve(&p, &FirstStageDecision::from_mask(mask, 10), 1).unwrap();
            assert_eq!(out.total(), 0);
            assert_eq!(rec, ScenarioRecourse::empty(10, 32));
        }
    }

    #[test]
    fn deterministic_forces_usage() {
        let p = build_deterministic(&default_instance(), Some(10));
        let (rec, out) = recourse_solve(&p, &FirstStageDecision::all(10), 0).unwrap();
        assert_eq!(rec.used_count(), 10);
        assert_eq!(out.total(), 10_000 + 90 * 450);
        assert!(recourse_solve(&p, &FirstStageDecision::from_mask(0b1111_1111, 10), 0).is_err());
    }

    #[test]
    fn matches_enumeration_on_small_random_problems() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for case in 0..300 {
            let inst = crate::synth::random_instance(
                &mut rng,
                &crate::synth::SynthConfig {
                    max_computers: 5,
                    max_scenarios: 2,
                    max_offers: 4,
                    ..Default::default()
                },
            );
            let p = build_extensive_form(&inst);
            let j = p.num_computers();
            let allowed = rng.next_u64() & ((1 << j) - 1);
            let forced = if case % 3 == 0 {
                allowed & rng.next_u64()
            } else {
                0
            };
            for w in 0..p.num_scenarios() {
                let fast = solve_scenario(&p, w, allowed, forced).map(|o| {
                    (
                        o.total(),
                        o.used,
                        o.cover.bits(&p.scenarios[w].offer_classes, p.num_offers()),
                    )
                });
                assert_eq!(
                    fast,
                    brute(&p, w, allowed, forced),
                    "case {case} scenario {w}"
                );
            }
        }
    }
}
