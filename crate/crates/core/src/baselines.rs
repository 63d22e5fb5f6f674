//! Comparison policies: the expected-value formulation (EVF) and random
//! deployment. Each yields a first-stage vector that is then scored with
//! the true per-scenario recourse.

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::engine::{branch_and_bound, evaluate_mask, PolicyEvaluation};
use crate::exact::ExactNumber;
use crate::formulation::{
    build_deterministic_with, build_extensive_form, CompiledProblem, DeterministicParams,
};
use crate::instance::ValidInstance;
use crate::model::{demand_bits, FirstStageDecision};
use crate::par;
use crate::rng::SplitMix64;

/// Probability-weighted means of the uncertain parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AveragedParameters {
    pub demand_bits_avg: ExactNumber,
    pub demand_qubits_avg: ExactNumber,
    pub power_avg: Vec<ExactNumber>,
    pub fidelity_avg: Vec<Vec<ExactNumber>>,
}

impl AveragedParameters {
    pub fn of(instance: &ValidInstance) -> Self {
        let j = instance.num_computers();
        let mut demand_bits_avg = ExactNumber::zero();
        let mut demand_qubits_avg = ExactNumber::zero();
        let mut power_avg = vec![ExactNumber::zero(); j];
        let mut fidelity_avg = vec![vec![ExactNumber::zero(); j]; j];
        for sc in &instance.scenarios {
            let p = &sc.probability;
            let bits = demand_bits(sc.demand_qubits).expect("validated demand");
            demand_bits_avg = demand_bits_avg + p * &ExactNumber::from(bits);
            demand_qubits_avg =
                demand_qubits_avg + p * &ExactNumber::from(sc.demand_qubits.unwrap_or(0) as u64);
            for (avg, &k) in power_avg.iter_mut().zip(&sc.power) {
                *avg = &*avg + &(p * &ExactNumber::from(k));
            }
            for (row, src) in fidelity_avg.iter_mut().zip(&sc.fidelity) {
                for (avg, q) in row.iter_mut().zip(src) {
                    *avg = &*avg + &(p * q);
                }
            }
        }
        AveragedParameters {
            demand_bits_avg,
            demand_qubits_avg,
            power_avg,
            fidelity_avg,
        }
    }
}

/// How the EVF baseline averages demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvfMode {
    /// Average `2^n` (no task counts as 0 bits), then round up.
    #[default]
    Bits,
    /// Average `n` (no task counts as 0 qubits), round up, then `2^n`.
    Qubits,
}

impl FromStr for EvfMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bits" => Ok(EvfMode::Bits),
            "qubits" => Ok(EvfMode::Qubits),
            other => Err(format!(
                "unknown EVF mode {other:?} (expected bits or qubits)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvfError {
    #[error("the averaged deterministic model is infeasible")]
    EvfInfeasible,
    #[error("averaged parameters overflow the exact solver's range")]
    Overflow,
}

/// Deterministic model at the averaged parameters.
pub fn evf_problem(instance: &ValidInstance, mode: EvfMode) -> Result<CompiledProblem, EvfError> {
    let avg = AveragedParameters::of(instance);
    let demand = match mode {
        EvfMode::Bits => avg.demand_bits_avg.ceil(),
        EvfMode::Qubits => {
            let n = avg.demand_qubits_avg.ceil();
            num_traits::pow(
                num_bigint::BigInt::from(2u8),
                usize::try_from(n).map_err(|_| EvfError::Overflow)?,
            )
        }
    };
    let demand_bits = u64::try_from(demand).map_err(|_| EvfError::Overflow)?;
    let params = DeterministicParams {
        demand_bits,
        power: avg.power_avg,
        fidelity: avg.fidelity_avg,
    };
    build_deterministic_with(instance, &params).map_err(|_| EvfError::Overflow)
}

/// Deployment chosen by the deterministic model at averaged parameters.
pub fn evf_first_stage(
    instance: &ValidInstance,
    mode: EvfMode,
) -> Result<FirstStageDecision, EvfError> {
    let problem = evf_problem(instance, mode)?;
    let report = branch_and_bound(&problem);
    if report.solution.is_optimal() {
        Ok(report.solution.first_stage)
    } else {
        Err(EvfError::EvfInfeasible)
    }
}

/// Upper limit on redraws when infeasible random deployments are resampled.
pub const MAX_RESAMPLES: usize = 1000;

/// How the random baseline draws its deployments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomPolicy {
    /// Inclusion probability of each computer.
    pub probability: ExactNumber,
    /// Redraw (continuing the same seed's stream) while the draw is infeasible.
    pub resample_infeasible: bool,
}

impl Default for RandomPolicy {
    fn default() -> Self {
        RandomPolicy {
            probability: ExactNumber::ratio(1, 2),
            resample_infeasible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("random deployment probability must be in [0, 1] with a denominator below 2^63, got {0}")]
pub struct RandomPolicyError(pub String);

impl RandomPolicy {
    pub fn new(
        probability: ExactNumber,
        resample_infeasible: bool,
    ) -> Result<Self, RandomPolicyError> {
        let small = probability.denom() < &num_bigint::BigInt::from(1u64 << 63);
        if !probability.in_unit_interval() || !small {
            return Err(RandomPolicyError(probability.to_string()));
        }
        Ok(RandomPolicy {
            probability,
            resample_infeasible,
        })
    }

    /// One draw per computer in index order. A computer is deployed when
    /// `2^64 - 1 - x < p * 2^64` for the draw `x`, so at `p = 1/2` this is the
    /// top output bit.
    fn draw(&self, rng: &mut SplitMix64, j: usize) -> FirstStageDecision {
        let num = self
            .probability
            .numer()
            .to_u128()
            .expect("checked in [0, 1]");
        let den = self
            .probability
            .denom()
            .to_u128()
            .expect("checked below 2^63");
        FirstStageDecision {
            deployed: (0..j)
                .map(|_| ((u64::MAX - rng.next_u64()) as u128) * den < num << 64)
                .collect(),
        }
    }
}

/// Each computer deployed independently with probability 1/2, one
/// [`SplitMix64`] draw per computer in index order.
pub fn random_first_stage(instance: &ValidInstance, seed: u64) -> FirstStageDecision {
    random_first_stage_with(instance, seed, &RandomPolicy::default())
}

pub fn random_first_stage_with(
    instance: &ValidInstance,
    seed: u64,
    policy: &RandomPolicy,
) -> FirstStageDecision {
    policy.draw(&mut SplitMix64::new(seed), instance.num_computers())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyModel {
    Proposed,
    Evf,
    Random,
    RandomMean,
}

impl fmt::Display for PolicyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyModel::Proposed => "proposed",
            PolicyModel::Evf => "evf",
            PolicyModel::Random => "random",
            PolicyModel::RandomMean => "random_mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRow {
    pub model: PolicyModel,
    pub seed: Option<u64>,
    pub deployment_count: ExactNumber,
    pub on_demand_expected: ExactNumber,
    /// `None` when the policy is infeasible.
    pub total_cost: Option<ExactNumber>,
}

impl PolicyRow {
    pub fn feasible(&self) -> bool {
        self.total_cost.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTable {
    pub rows: Vec<PolicyRow>,
    /// The averaged model was infeasible and the empty deployment was scored.
    pub evf_fallback: bool,
    pub random_infeasible: usize,
}

impl ComparisonTable {
    pub fn row(&self, model: PolicyModel) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn random_rows(&self) -> impl Iterator<Item = &PolicyRow> {
        self.rows.iter().filter(|r| r.model == PolicyModel::Random)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "model",
            "seed",
            "deployment_count",
            "on_demand_expected",
            "total_cost",
            "feasible",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.model.to_string(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.deployment_count.to_string(),
                r.on_demand_expected.to_string(),
                r.total_cost
                    .as_ref()
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
                r.feasible().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

fn score(
    problem: &CompiledProblem,
    model: PolicyModel,
    seed: Option<u64>,
    deployed: &FirstStageDecision,
) -> PolicyRow {
    match evaluate_mask(problem, deployed.mask()) {
        Ok(eval) => row_from(problem, model, seed, &eval),
        Err(_) => PolicyRow {
            model,
            seed,
            deployment_count: ExactNumber::from(deployed.count() as u64),
            on_demand_expected: ExactNumber::zero(),
            total_cost: None,
        },
    }
}

fn row_from(
    problem: &CompiledProblem,
    model: PolicyModel,
    seed: Option<u64>,
    eval: &PolicyEvaluation,
) -> PolicyRow {
    PolicyRow {
        model,
        seed,
        deployment_count: ExactNumber::from(eval.mask.count_ones() as u64),
        on_demand_expected: eval.expected_on_demand_units(problem),
        total_cost: Some(eval.breakdown(problem).total),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyOptions {
    pub evf_mode: EvfMode,
    pub random: RandomPolicy,
}

pub fn score_policies(instance: &ValidInstance, seeds: &[u64], mode: EvfMode) -> ComparisonTable {
    let options = PolicyOptions {
        evf_mode: mode,
        ..PolicyOptions::default()
    };
    score_policies_with(instance, seeds, &options)
}

/// Scores the exact optimum, the EVF deployment and one random deployment
/// per seed on the same instance, plus the mean over feasible random draws.
pub fn score_policies_with(
    instance: &ValidInstance,
    seeds: &[u64],
    options: &PolicyOptions,
) -> ComparisonTable {
    let mode = options.evf_mode;
    let problem = build_extensive_form(instance);
    let j = instance.num_computers();
    let mut rows = Vec::with_capacity(seeds.len() + 3);

    let proposed = branch_and_bound(&problem);
    rows.push(score(
        &problem,
        PolicyModel::Proposed,
        None,
        &proposed.solution.first_stage,
    ));
    if !proposed.solution.is_optimal() {
        rows[0].total_cost = None;
    }

    let (evf, evf_fallback) = match evf_first_stage(instance, mode) {
        Ok(d) => (d, false),
        Err(_) => (FirstStageDecision::none(j), true),
    };
    rows.push(score(&problem, PolicyModel::Evf, None, &evf));

    let random_rows = par::map(seeds, |&seed| {
        let mut rng = SplitMix64::new(seed);
        let mut row = score(
            &problem,
            PolicyModel::Random,
            Some(seed),
            &options.random.draw(&mut rng, j),
        );
        if options.random.resample_infeasible {
            for _ in 0..MAX_RESAMPLES {
                if row.feasible() {
                    break;
                }
                row = score(
                    &problem,
                    PolicyModel::Random,
                    Some(seed),
                    &options.random.draw(&mut rng, j),
                );
            }
        }
        row
    });
    let feasible: Vec<&PolicyRow> = random_rows.iter().filter(|r| r.feasible()).collect();
    let random_infeasible = random_rows.len() - feasible.len();
    if !feasible.is_empty() {
        let n = ExactNumber::from(feasible.len() as u64);
        let mean = |f: &dyn Fn(&PolicyRow) -> ExactNumber| -> ExactNumber {
            feasible.iter().map(|r| f(r)).sum::<ExactNumber>() / n.clone()
        };
        let mean_row = PolicyRow {
            model: PolicyModel::RandomMean,
            seed: None,
            deployment_count: mean(&|r| r.deployment_count.clone()),
            on_demand_expected: mean(&|r| r.on_demand_expected.clone()),
            total_cost: Some(mean(&|r| r.total_cost.clone().expect("feasible"))),
        };
        rows.extend(random_rows);
        rows.push(mean_row);
    } else {
        rows.extend(random_rows);
    }
    ComparisonTable {
        rows,
        evf_fallback,
        random_infeasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{default_instance, validate_instance};

    #[test]
    fn averaged_default_parameters() {
        let avg = AveragedParameters::of(&default_instance());
        assert_eq!(avg.demand_bits_avg, "819.2".parse::<ExactNumber>().unwrap());
        assert_eq!(avg.demand_bits_avg.ceil(), 820.into());
        assert_eq!(avg.demand_qubits_avg, ExactNumber::from(8u64));
        assert_eq!(avg.power_avg[0], "101.6".parse::<ExactNumber>().unwrap());
        assert_eq!(
            avg.fidelity_avg[0][1],
            "0.8".parse::<ExactNumber>().unwrap()
        );
    }

    #[test]
    fn evf_default_deploys_nine() {
        let d = evf_first_stage(&default_instance(), EvfMode::Bits).unwrap();
        assert_eq!(d.count(), 9);
        assert_eq!(d.bitmap(), "1111111110");
        // 256 bits need three machines of 101.6 qubits
        let q = evf_first_stage(&default_instance(), EvfMode::Qubits).unwrap();
        assert_eq!(q.count(), 3);
    }

    #[test]
    fn evf_zero_demand_deploys_nothing() {
        let mut raw = default_instance().into_inner();
        raw.scenarios[0].demand_qubits = None;
        let d = evf_first_stage(&validate_instance(raw).unwrap(), EvfMode::Bits).unwrap();
        assert_eq!(d.count(), 0);
    }

    #[test]
    fn evf_infeasible_is_reported() {
        let mut raw = default_instance().into_inner();
        raw.scenarios[0].demand_qubits = Some(12);
        let inst = validate_instance(raw).unwrap();
        assert_eq!(
            evf_first_stage(&inst, EvfMode::Bits),
            Err(EvfError::EvfInfeasible)
        );
        let table = score_policies(&inst, &[1, 2], EvfMode::Bits);
        assert!(table.evf_fallback);
        assert_eq!(
            table.row(PolicyModel::Evf).unwrap().deployment_count,
            ExactNumber::zero()
        );
    }

    #[test]
    fn random_is_reproducible() {
        let inst = default_instance();
        assert_eq!(random_first_stage(&inst, 42), random_first_stage(&inst, 42));
        assert_ne!(random_first_stage(&inst, 42), random_first_stage(&inst, 43));
    }

    #[test]
    fn random_mean_count_near_half() {
        let inst = default_instance();
        let n = 10_000u64;
        let total: usize = (0..n).map(|s| random_first_stage(&inst, s).count()).sum();
        let mean = total as f64 / n as f64;
        let tol = 5.0 * 0.5 / (n as f64).sqrt() * 10f64.sqrt();
        assert!((mean - 5.0).abs() <= tol, "mean {mean} tol {tol}");
    }

    #[test]
    fn random_on_empty_instance() {
        let mut raw = default_instance().into_inner();
        raw.computers.clear();
        raw.links = crate::model::LinkTable {
            capacity: vec![],
            base_fidelity: vec![],
            bell_cost: vec![],
        };
        for s in raw.scenarios.iter_mut() {
            s.power.clear();
            s.fidelity.clear();
        }
        let inst = validate_instance(raw).unwrap();
        assert!(random_first_stage(&inst, 7).deployed.is_empty());
    }

    #[test]
    fn default_comparison() {
        let table = score_policies(&default_instance(), &[0, 1, 2, 3], EvfMode::Bits);
        let proposed = table
            .row(PolicyModel::Proposed)
            .unwrap()
            .total_cost
            .clone()
            .unwrap();
        let evf = table
            .row(PolicyModel::Evf)
            .unwrap()
            .total_cost
            .clone()
            .unwrap();
        assert_eq!(proposed, 78120u64);
        assert_eq!(evf, 78120u64);
        for r in table.random_rows() {
            assert!(r.total_cost.as_ref().unwrap() >= &proposed);
        }
        let csv = table.to_csv();
        assert!(
            csv.starts_with("model,seed,deployment_count,on_demand_expected,total_cost,feasible\n")
        );
        assert!(csv.contains("proposed,,9,0,78120,true"));
    }

    #[test]
    fn cheap_on_demand_beats_evf() {
        let mut raw = default_instance().into_inner();
        for o in raw.on_demand.iter_mut() {
            o.cost = 5000;
        }
        let table = score_policies(&validate_instance(raw).unwrap(), &[], EvfMode::Bits);
        let proposed = table.row(PolicyModel::Proposed).unwrap();
        assert_eq!(proposed.total_cost, Some(ExactNumber::from(36000u64)));
        assert_eq!(proposed.deployment_count, ExactNumber::zero());
        assert_eq!(
            proposed.on_demand_expected,
            "7.2".parse::<ExactNumber>().unwrap()
        );
        assert_eq!(
            table.row(PolicyModel::Evf).unwrap().total_cost,
            Some(ExactNumber::from(72200u64))
        );
        assert!(table.row(PolicyModel::RandomMean).is_none());
    }

    #[test]
    fn random_probability_extremes() {
        let inst = default_instance();
        let none = RandomPolicy::new(ExactNumber::zero(), false).unwrap();
        let all = RandomPolicy::new(ExactNumber::one(), false).unwrap();
        assert_eq!(random_first_stage_with(&inst, 5, &none).count(), 0);
        assert_eq!(random_first_stage_with(&inst, 5, &all).count(), 10);
        assert_eq!(
            random_first_stage_with(&inst, 5, &RandomPolicy::default()),
            random_first_stage(&inst, 5)
        );
        assert!(RandomPolicy::new(ExactNumber::ratio(3, 2), false).is_err());
    }

    #[test]
    fn coin_is_the_top_bit_at_one_half() {
        let inst = default_instance();
        let mut rng = SplitMix64::new(1234567);
        let want: Vec<bool> = (0..10).map(|_| rng.next_bool()).collect();
        assert_eq!(random_first_stage(&inst, 1234567).deployed, want);
    }

    #[test]
    fn resampling_replaces_infeasible_draws() {
        // no offers, and the demand needs at least 9 machines
        let mut raw = default_instance().into_inner();
        raw.on_demand.clear();
        let inst = validate_instance(raw).unwrap();
        let seeds: Vec<u64> = (0..30).collect();
        let plain = score_policies(&inst, &seeds, EvfMode::Bits);
        assert!(plain.random_infeasible > 0);
        let options = PolicyOptions {
            evf_mode: EvfMode::Bits,
            random: RandomPolicy::new(ExactNumber::ratio(1, 2), true).unwrap(),
        };
        let resampled = score_policies_with(&inst, &seeds, &options);
        assert_eq!(resampled.random_infeasible, 0);
        assert!(resampled.random_rows().all(|r| r.deployment_count >= 9u64));
    }
}
