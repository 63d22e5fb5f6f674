//! Compilation of the deterministic and two-stage stochastic models into a
//! common exact form.
//!
//! The min-type link constraint `C_ij * q_ij >= min(k_i x_i, k_j x_j)` is
//! compiled into a conflict graph: a pair is forbidden exactly when the
//! link cannot carry the smaller machine's qubits. Coverage constraints are
//! kept in integer form; when powers are rational (expected-value
//! baseline) both sides are multiplied by a common scale.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::exact::ExactNumber;
use crate::instance::ValidInstance;
use crate::model::{demand_bits, LinkTable, ProblemInstance};

/// Unordered computer pairs that may not be used together, stored as
/// per-computer neighbour masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictGraph {
    adjacency: Vec<u64>,
}

impl ConflictGraph {
    pub fn empty(j: usize) -> Self {
        ConflictGraph {
            adjacency: vec![0; j],
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    fn forbid(&mut self, i: usize, j: usize) {
        self.adjacency[i] |= 1 << j;
        self.adjacency[j] |= 1 << i;
    }

    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.adjacency[i] >> j & 1 == 1
    }

    pub fn neighbours(&self, i: usize) -> u64 {
        self.adjacency[i]
    }

    /// Forbidden pairs `(i, j)` with `i < j`, zero-based.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let j = self.adjacency.len();
        (0..j)
            .flat_map(|a| ((a + 1)..j).map(move |b| (a, b)))
            .filter(|&(a, b)| self.is_forbidden(a, b))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        let j = self.adjacency.len();
        (0..j).all(|i| self.adjacency[i].count_ones() as usize == j - 1)
    }

    /// True when no two members of `selection` conflict.
    pub fn admits(&self, selection: u64) -> bool {
        let mut rest = selection;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            if self.adjacency[i] & selection != 0 {
                return false;
            }
            rest &= rest - 1;
        }
        true
    }
}

/// Builds the conflict graph for one parameter set. `{i, j}` is forbidden
/// iff `C_ij * q_ij < min(k_i, k_j)` for either orientation. A zero-power
/// machine never conflicts.
pub fn compile_conflicts(
    powers: &[ExactNumber],
    capacity: &[Vec<u64>],
    fidelity: &[Vec<ExactNumber>],
) -> ConflictGraph {
    let j = powers.len();
    let mut graph = ConflictGraph::empty(j);
    for a in 0..j {
        for b in 0..j {
            if a == b {
                continue;
            }
            let supported = ExactNumber::from(capacity[a][b]) * &fidelity[a][b];
            let need = std::cmp::min(&powers[a], &powers[b]);
            if &supported < need {
                graph.forbid(a, b);
            }
        }
    }
    graph
}

/// Bell charge when both ends of `{i, j}` are used: the objective sums over
/// ordered pairs `i != j`, so each unordered pair pays both directions.
pub fn unordered_pair_charge(bell_cost: &[Vec<u64>], i: usize, j: usize) -> u64 {
    bell_cost[i][j] + bell_cost[j][i]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Single stage: every deployed computer is used.
    Deterministic,
    /// Two stages: usage and on-demand purchases react per scenario.
    Extensive,
}

/// Identical on-demand offers grouped together; ids ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OfferClass {
    pub capacity: u128,
    pub cost: u64,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompiledScenario {
    pub id: usize,
    pub probability: ExactNumber,
    /// Coverage right-hand side, multiplied by `capacity_scale`.
    pub demand: u128,
    /// Per-computer power, multiplied by `capacity_scale`.
    pub power: Vec<u128>,
    /// Per-offer capacity, multiplied by `capacity_scale`.
    pub offer_capacity: Vec<u128>,
    pub capacity_scale: u128,
    pub conflicts: ConflictGraph,
    pub offer_classes: Vec<OfferClass>,
}

impl CompiledScenario {
    pub fn total_offer_capacity(&self) -> u128 {
        self.offer_capacity.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompiledProblem {
    pub kind: ModelKind,
    pub deploy_cost: Vec<u64>,
    pub compute_cost: Vec<u64>,
    /// Symmetric: `pair_cost[i][j]` is the Bell charge for using `i` and `j`
    /// together.
    pub pair_cost: Vec<Vec<u64>>,
    pub offer_cost: Vec<u64>,
    pub scenarios: Vec<CompiledScenario>,
    /// `probability_i = probability_weight[i] / probability_denom`.
    pub probability_weight: Vec<u128>,
    pub probability_denom: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulationError {
    #[error("scaled coverage data overflows 128-bit arithmetic")]
    Overflow,
    #[error("instance has {0} computers; at most 64 are supported")]
    TooManyComputers(usize),
}

impl CompiledProblem {
    pub fn num_computers(&self) -> usize {
        self.deploy_cost.len()
    }

    pub fn num_offers(&self) -> usize {
        self.offer_cost.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Ordered Bell pairs `(i, j)` that carry a positive charge.
    pub fn ordered_bell_pairs(&self) -> usize {
        let j = self.num_computers();
        let mut n = 0;
        for a in 0..j {
            for b in 0..j {
                if a != b && self.pair_cost[a][b] > 0 {
                    n += 1;
                }
            }
        }
        n
    }
}

fn lcm_u128(values: impl Iterator<Item = BigInt>) -> Result<u128, FormulationError> {
    let l = values.fold(BigInt::from(1u8), |acc, v| acc.lcm(&v));
    l.to_u128().ok_or(FormulationError::Overflow)
}

fn scale_exact(value: &ExactNumber, scale: u128) -> Result<u128, FormulationError> {
    (value.clone() * ExactNumber::from(scale))
        .to_u128()
        .ok_or(FormulationError::Overflow)
}

fn offer_classes(capacity: &[u128], cost: &[u64]) -> Vec<OfferClass> {
    let mut classes: Vec<OfferClass> = Vec::new();
    for (r, (&cap, &c)) in capacity.iter().zip(cost).enumerate() {
        match classes
            .iter_mut()
            .find(|cl| cl.capacity == cap && cl.cost == c)
        {
            Some(cl) => cl.members.push(r),
            None => classes.push(OfferClass {
                capacity: cap,
                cost: c,
                members: vec![r],
            }),
        }
    }
    classes
}

/// Parameters of a single-scenario deterministic model. Powers and
/// fidelities may be rational; demand is in bits.
#[derive(Debug, Clone)]
pub struct DeterministicParams {
    pub demand_bits: u64,
    pub power: Vec<ExactNumber>,
    pub fidelity: Vec<Vec<ExactNumber>>,
}

fn pair_costs(links: &LinkTable, j: usize) -> Vec<Vec<u64>> {
    (0..j)
        .map(|a| {
            (0..j)
                .map(|b| {
                    if a == b {
                        0
                    } else {
                        unordered_pair_charge(&links.bell_cost, a, b)
                    }
                })
                .collect()
        })
        .collect()
}

/// Deterministic model over explicit parameters; used directly by the
/// expected-value baseline.
pub fn build_deterministic_with(
    instance: &ProblemInstance,
    params: &DeterministicParams,
) -> Result<CompiledProblem, FormulationError> {
    let j = instance.num_computers();
    if j > 64 {
        return Err(FormulationError::TooManyComputers(j));
    }
    let scale = lcm_u128(params.power.iter().map(|p| p.denom().clone()))?;
    let power = params
        .power
        .iter()
        .map(|p| scale_exact(p, scale))
        .collect::<Result<Vec<_>, _>>()?;
    let demand = (params.demand_bits as u128)
        .checked_mul(scale)
        .ok_or(FormulationError::Overflow)?;
    let conflicts = compile_conflicts(&params.power, &instance.links.capacity, &params.fidelity);
    let scenario = CompiledScenario {
        id: 1,
        probability: ExactNumber::one(),
        demand,
        power,
        offer_capacity: Vec::new(),
        capacity_scale: scale,
        conflicts,
        offer_classes: Vec::new(),
    };
    Ok(CompiledProblem {
        kind: ModelKind::Deterministic,
        deploy_cost: instance.computers.iter().map(|c| c.deploy_cost).collect(),
        compute_cost: instance.computers.iter().map(|c| c.compute_cost).collect(),
        pair_cost: pair_costs(&instance.links, j),
        offer_cost: Vec::new(),
        scenarios: vec![scenario],
        probability_weight: vec![1],
        probability_denom: 1,
    })
}

/// Deterministic model on base powers `k_j` and base fidelities `q_ij`,
/// with no on-demand capacity.
pub fn build_deterministic(
    instance: &ValidInstance,
    demand_qubits: Option<u32>,
) -> CompiledProblem {
    let params = DeterministicParams {
        demand_bits: demand_bits(demand_qubits).expect("validated demand"),
        power: instance
            .computers
            .iter()
            .map(|c| ExactNumber::from(c.base_qubits))
            .collect(),
        fidelity: instance.links.base_fidelity.clone(),
    };
    build_deterministic_with(instance, &params).expect("integer data never overflows")
}

/// Extensive-form deterministic equivalent of the two-stage model: one
/// copy of the usage and on-demand variables per scenario.
pub fn build_extensive_form(instance: &ValidInstance) -> CompiledProblem {
    let j = instance.num_computers();
    let offer_cost: Vec<u64> = instance.on_demand.iter().map(|o| o.cost).collect();
    let offer_capacity: Vec<u128> = instance
        .on_demand
        .iter()
        .map(|o| o.capacity as u128)
        .collect();
    let classes = offer_classes(&offer_capacity, &offer_cost);
    let denom = lcm_u128(
        instance
            .scenarios
            .iter()
            .map(|s| s.probability.denom().clone()),
    )
    .expect("validated probability denominators");
    let weights = instance
        .scenarios
        .iter()
        .map(|s| scale_exact(&s.probability, denom).expect("validated probability"))
        .collect();
    let scenarios = instance
        .scenarios
        .iter()
        .map(|s| {
            let powers: Vec<ExactNumber> = s.power.iter().map(|&k| ExactNumber::from(k)).collect();
            CompiledScenario {
                id: s.id,
                probability: s.probability.clone(),
                demand: demand_bits(s.demand_qubits).expect("validated demand") as u128,
                power: s.power.iter().map(|&k| k as u128).collect(),
                offer_capacity: offer_capacity.clone(),
                capacity_scale: 1,
                conflicts: compile_conflicts(&powers, &instance.links.capacity, &s.fidelity),
                offer_classes: classes.clone(),
            }
        })
        .collect();
    CompiledProblem {
        kind: ModelKind::Extensive,
        deploy_cost: instance.computers.iter().map(|c| c.deploy_cost).collect(),
        compute_cost: instance.computers.iter().map(|c| c.compute_cost).collect(),
        pair_cost: pair_costs(&instance.links, j),
        offer_cost,
        scenarios,
        probability_weight: weights,
        probability_denom: denom,
    }
}

impl fmt::Display for CompiledProblem {
    /// Canonical line-oriented dump, stable across runs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        let join128 = |v: &[u128]| v.iter().map(u128::to_string).collect::<Vec<_>>().join(" ");
        let kind = match self.kind {
            ModelKind::Deterministic => "deterministic",
            ModelKind::Extensive => "extensive",
        };
        writeln!(f, "model {kind}")?;
        writeln!(
            f,
            "computers {} offers {} scenarios {}",
            self.num_computers(),
            self.num_offers(),
            self.num_scenarios()
        )?;
        writeln!(f, "deploy_cost {}", join(&self.deploy_cost))?;
        writeln!(f, "compute_cost {}", join(&self.compute_cost))?;
        for (i, row) in self.pair_cost.iter().enumerate() {
            writeln!(f, "pair_cost {} {}", i + 1, join(row))?;
        }
        writeln!(f, "offer_cost {}", join(&self.offer_cost))?;
        for s in &self.scenarios {
            writeln!(f, "scenario {} probability {}", s.id, s.probability)?;
            writeln!(f, "  scale {} demand {}", s.capacity_scale, s.demand)?;
            writeln!(f, "  power {}", join128(&s.power))?;
            writeln!(f, "  offer_capacity {}", join128(&s.offer_capacity))?;
            let pairs = s
                .conflicts
                .pairs()
                .iter()
                .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(f, "  conflicts {pairs}")?;
        }
        Ok(())
    }
}

/// Variable roles in the linearized extensive form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Deploy(usize),
    Use {
        scenario: usize,
        computer: usize,
    },
    OnDemand {
        scenario: usize,
        offer: usize,
    },
    /// Product `u_i * u_j` for `i < j` in one scenario.
    Pair {
        scenario: usize,
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub terms: Vec<(usize, i128)>,
    pub sense: Sense,
    pub rhs: i128,
}

impl Row {
    fn holds(&self, point: &[bool]) -> bool {
        let lhs: i128 = self
            .terms
            .iter()
            .filter(|(v, _)| point[*v])
            .map(|(_, c)| c)
            .sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

/// Binary linear program equivalent to a [`CompiledProblem`]: bilinear
/// Bell terms replaced by product variables with the three standard
/// linking rows, conflicts as `u_i + u_j <= 1`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub vars: Vec<Var>,
    pub objective: Vec<ExactNumber>,
    pub rows: Vec<Row>,
    deploy_base: usize,
    scenario_base: Vec<usize>,
    j: usize,
    r: usize,
}

impl LinearModel {
    pub fn build(problem: &CompiledProblem) -> Self {
        let j = problem.num_computers();
        let r = problem.num_offers();
        let mut vars = Vec::new();
        let mut objective = Vec::new();
        let mut rows = Vec::new();
        for (c, &cost) in problem.deploy_cost.iter().enumerate() {
            vars.push(Var::Deploy(c));
            objective.push(ExactNumber::from(cost));
        }
        let mut scenario_base = Vec::new();
        for (w, sc) in problem.scenarios.iter().enumerate() {
            let base = vars.len();
            scenario_base.push(base);
            let p = &sc.probability;
            for c in 0..j {
                vars.push(Var::Use {
                    scenario: w,
                    computer: c,
                });
                objective.push(p * &ExactNumber::from(problem.compute_cost[c]));
            }
            for o in 0..r {
                vars.push(Var::OnDemand {
                    scenario: w,
                    offer: o,
                });
                objective.push(p * &ExactNumber::from(problem.offer_cost[o]));
            }
            let use_var = |c: usize| base + c;
            for a in 0..j {
                for b in (a + 1)..j {
                    let z = vars.len();
                    vars.push(Var::Pair {
                        scenario: w,
                        i: a,
                        j: b,
                    });
                    objective.push(p * &ExactNumber::from(problem.pair_cost[a][b]));
                    rows.push(Row {
                        terms: vec![(z, 1), (use_var(a), -1), (use_var(b), -1)],
                        sense: Sense::Ge,
                        rhs: -1,
                    });
                    rows.push(Row {
                        terms: vec![(z, 1), (use_var(a), -1)],
                        sense: Sense::Le,
                        rhs: 0,
                    });
                    rows.push(Row {
                        terms: vec![(z, 1), (use_var(b), -1)],
                        sense: Sense::Le,
                        rhs: 0,
                    });
                    if sc.conflicts.is_forbidden(a, b) {
                        rows.push(Row {
                            terms: vec![(use_var(a), 1), (use_var(b), 1)],
                            sense: Sense::Le,
                            rhs: 1,
                        });
                    }
                }
            }
            for c in 0..j {
                rows.push(Row {
                    terms: vec![(use_var(c), 1), (c, -1)],
                    sense: Sense::Le,
                    rhs: 0,
                });
                if problem.kind == ModelKind::Deterministic {
                    rows.push(Row {
                        terms: vec![(use_var(c), 1), (c, -1)],
                        sense: Sense::Ge,
                        rhs: 0,
                    });
                }
            }
            let mut cover: Vec<(usize, i128)> =
                (0..j).map(|c| (use_var(c), sc.power[c] as i128)).collect();
            cover.extend((0..r).map(|o| (base + j + o, sc.offer_capacity[o] as i128)));
            rows.push(Row {
                terms: cover,
                sense: Sense::Ge,
                rhs: sc.demand as i128,
            });
        }
        LinearModel {
            vars,
            objective,
            rows,
            deploy_base: 0,
            scenario_base,
            j,
            r,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn count(&self, pred: impl Fn(&Var) -> bool) -> usize {
        self.vars.iter().filter(|v| pred(v)).count()
    }

    /// Binary point from first-stage and per-scenario second-stage vectors;
    /// product variables are set to the product of their factors.
    pub fn point(
        &self,
        deployed: &[bool],
        used: &[Vec<bool>],
        on_demand: &[Vec<bool>],
    ) -> Vec<bool> {
        let mut point = vec![false; self.vars.len()];
        point[self.deploy_base..self.deploy_base + self.j].copy_from_slice(&deployed[..self.j]);
        for (w, &base) in self.scenario_base.iter().enumerate() {
            point[base..base + self.j].copy_from_slice(&used[w][..self.j]);
            point[base + self.j..base + self.j + self.r].copy_from_slice(&on_demand[w][..self.r]);
        }
        for (v, var) in self.vars.iter().enumerate() {
            if let Var::Pair { scenario, i, j } = *var {
                point[v] = used[scenario][i] && used[scenario][j];
            }
        }
        point
    }

    pub fn is_feasible(&self, point: &[bool]) -> bool {
        self.rows.iter().all(|row| row.holds(point))
    }

    pub fn objective_value(&self, point: &[bool]) -> ExactNumber {
        self.objective
            .iter()
            .zip(point)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c)
            .sum()
    }
}
