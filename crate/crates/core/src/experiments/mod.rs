//! Parameter sweeps over a base instance and the policy comparison, with
//! CSV tables and SVG charts.
//!
//! Sweeps only touch the first scenario (the one carrying the task) and,
//! for the probability axis, the probabilities of the first two scenarios.

pub mod chart;

use std::fmt;
use std::str::FromStr;

use crate::baselines::{
    score_policies_with, ComparisonTable, EvfMode, PolicyModel, PolicyOptions, RandomPolicy,
};
use crate::engine::{branch_and_bound, evaluate_mask, exhaustive_solve, SolverId};
use crate::exact::ExactNumber;
use crate::formulation::build_extensive_form;
use crate::instance::{validate_instance, ValidInstance};
use crate::model::{CostBreakdown, MAX_CAPACITY, MAX_COST, MAX_DEMAND_QUBITS};
use crate::par;

pub use chart::{BarChart, ChartError, Layout};

/// Largest instance for which sweeps re-solve every point exhaustively.
pub const ORACLE_MAX_COMPUTERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    DemandQubits,
    Power,
    Fidelity,
    OndemandCost,
    Probability,
    /// On-demand cost multiplier applied to the base offer costs; used by
    /// the policy comparison.
    OndemandCostComparison,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::DemandQubits,
        Axis::Power,
        Axis::Fidelity,
        Axis::OndemandCost,
        Axis::Probability,
        Axis::OndemandCostComparison,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::DemandQubits => "demand",
            Axis::Power => "power",
            Axis::Fidelity => "fidelity",
            Axis::OndemandCost => "ondemand_cost",
            Axis::Probability => "probability",
            Axis::OndemandCostComparison => "ondemand_cost_comparison",
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Axis::DemandQubits => "task demand (qubits)",
            Axis::Power => "computing power per computer (qubits)",
            Axis::Fidelity => "Bell-pair fidelity",
            Axis::OndemandCost => "on-demand computer cost",
            Axis::Probability => "probability of the demand scenario",
            Axis::OndemandCostComparison => "on-demand cost multiplier",
        }
    }

    /// Default grid for each axis.
    pub fn default_values(&self) -> Vec<ExactNumber> {
        let ints = |v: &[u64]| v.iter().map(|&x| ExactNumber::from(x)).collect();
        let tenths = || (0..=10u64).map(|i| ExactNumber::ratio(i, 10)).collect();
        match self {
            Axis::DemandQubits => ints(&[6, 7, 8, 9, 10, 11]),
            Axis::Power => ints(&[96, 112, 127, 160, 192, 257]),
            Axis::Fidelity => tenths(),
            Axis::OndemandCost => ints(&[5000, 12500, 25000, 50000, 75000]),
            Axis::Probability => tenths(),
            Axis::OndemandCostComparison => ["0.2", "0.5", "1", "2", "3"]
                .iter()
                .map(|s| s.parse().expect("literal"))
                .collect(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "demand" | "demand_qubits" => Ok(Axis::DemandQubits),
            "power" => Ok(Axis::Power),
            "fidelity" => Ok(Axis::Fidelity),
            "ondemand_cost" => Ok(Axis::OndemandCost),
            "probability" => Ok(Axis::Probability),
            "ondemand_cost_comparison" | "comparison" => Ok(Axis::OndemandCostComparison),
            other => Err(format!(
                "unknown axis {other:?}; expected one of demand, power, fidelity, ondemand_cost, probability, ondemand_cost_comparison"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SweepError {
    #[error("AxisDomainError: {axis} value {value} {reason}")]
    AxisDomain {
        axis: Axis,
        value: String,
        reason: &'static str,
    },
    #[error("sweep has no axis values")]
    Empty,
    #[error(
        "{axis} = {value}: branch-and-bound total {bnb} differs from exhaustive total {oracle}"
    )]
    OracleMismatch {
        axis: Axis,
        value: String,
        bnb: String,
        oracle: String,
    },
    #[error("{axis} sweeps are run with run_comparison")]
    WrongRunner { axis: Axis },
}

fn domain(axis: Axis, value: &ExactNumber, reason: &'static str) -> SweepError {
    SweepError::AxisDomain {
        axis,
        value: value.to_string(),
        reason,
    }
}

fn integer_in(axis: Axis, value: &ExactNumber, max: u64) -> Result<u64, SweepError> {
    if !value.is_integer() || value.is_negative() {
        return Err(domain(axis, value, "must be a non-negative integer"));
    }
    value
        .to_u128()
        .and_then(|v| u64::try_from(v).ok())
        .filter(|&v| v <= max)
        .ok_or_else(|| domain(axis, value, "is too large"))
}

/// Copy of `base` with one axis set to `value`.
pub fn apply_axis(
    base: &ValidInstance,
    axis: Axis,
    value: &ExactNumber,
) -> Result<ValidInstance, SweepError> {
    let mut inst = base.get().clone();
    if inst.scenarios.is_empty() {
        return Err(domain(axis, value, "needs at least one scenario"));
    }
    match axis {
        Axis::DemandQubits => {
            let n = integer_in(axis, value, MAX_DEMAND_QUBITS as u64)?;
            inst.scenarios[0].demand_qubits = Some(n as u32);
        }
        Axis::Power => {
            let k = integer_in(axis, value, MAX_CAPACITY)?;
            inst.scenarios[0].power.iter_mut().for_each(|p| *p = k);
        }
        Axis::Fidelity => {
            if !value.in_unit_interval() {
                return Err(domain(axis, value, "is outside [0, 1]"));
            }
            for (i, row) in inst.scenarios[0].fidelity.iter_mut().enumerate() {
                for (j, q) in row.iter_mut().enumerate() {
                    if i != j {
                        *q = value.clone();
                    }
                }
            }
        }
        Axis::OndemandCost => {
            let c = integer_in(axis, value, MAX_COST)?;
            inst.on_demand.iter_mut().for_each(|o| o.cost = c);
        }
        Axis::Probability => {
            if !value.in_unit_interval() {
                return Err(domain(axis, value, "is outside [0, 1]"));
            }
            if inst.scenarios.len() != 2 {
                return Err(domain(axis, value, "needs exactly two scenarios"));
            }
            inst.scenarios[0].probability = value.clone();
            inst.scenarios[1].probability = ExactNumber::one() - value.clone();
        }
        Axis::OndemandCostComparison => {
            if value.is_negative() {
                return Err(domain(axis, value, "must be non-negative"));
            }
            for o in inst.on_demand.iter_mut() {
                let scaled = ExactNumber::from(o.cost) * value;
                let c = scaled
                    .to_u128()
                    .and_then(|v| u64::try_from(v).ok())
                    .filter(|&v| v <= MAX_COST)
                    .ok_or_else(|| domain(axis, value, "does not give an integral offer cost"))?;
                o.cost = c;
            }
        }
    }
    validate_instance(inst).map_err(|_| domain(axis, value, "produces an invalid instance"))
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<ExactNumber>,
    pub base: ValidInstance,
    /// Random-policy seeds; only read by the comparison.
    pub seeds: Vec<u64>,
    pub oracle: bool,
    pub evf_mode: EvfMode,
    pub random: RandomPolicy,
}

impl SweepSpec {
    pub fn new(axis: Axis, values: Vec<ExactNumber>, base: ValidInstance) -> Self {
        SweepSpec {
            axis,
            values,
            base,
            seeds: Vec::new(),
            oracle: true,
            evf_mode: EvfMode::Bits,
            random: RandomPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub axis_value: ExactNumber,
    /// `None` when the model is infeasible at this point.
    pub cost: Option<CostBreakdown>,
    pub deployed_count: usize,
    pub ondemand_expected: ExactNumber,
    pub solver: SolverId,
    pub nodes: u64,
    pub oracle_total: Option<ExactNumber>,
}

fn solve_point(spec: &SweepSpec, value: &ExactNumber) -> Result<SweepRow, SweepError> {
    let inst = apply_axis(&spec.base, spec.axis, value)?;
    let problem = build_extensive_form(&inst);
    let report = branch_and_bound(&problem);
    let (cost, deployed_count, ondemand_expected) = if report.solution.is_optimal() {
        let eval = evaluate_mask(&problem, report.solution.first_stage.mask())
            .expect("optimal is feasible");
        (
            Some(report.solution.cost.clone()),
            report.solution.first_stage.count(),
            eval.expected_on_demand_units(&problem),
        )
    } else {
        (None, 0, ExactNumber::zero())
    };
    let oracle_total = if spec.oracle && problem.num_computers() <= ORACLE_MAX_COMPUTERS {
        let oracle = exhaustive_solve(&problem).expect("size checked");
        let oracle_cost = oracle
            .solution
            .is_optimal()
            .then(|| oracle.solution.cost.total.clone());
        if oracle_cost != cost.as_ref().map(|c| c.total.clone())
            || oracle.solution.first_stage != report.solution.first_stage
        {
            let show =
                |c: Option<&ExactNumber>| c.map_or("infeasible".to_string(), |v| v.to_string());
            return Err(SweepError::OracleMismatch {
                axis: spec.axis,
                value: value.to_string(),
                bnb: show(cost.as_ref().map(|c| &c.total)),
                oracle: show(oracle_cost.as_ref()),
            });
        }
        oracle_cost
    } else {
        None
    };
    Ok(SweepRow {
        axis_value: value.clone(),
        cost,
        deployed_count,
        ondemand_expected,
        solver: report.solver_id,
        nodes: report.nodes_explored,
        oracle_total,
    })
}

/// Solves every axis point (in parallel) and returns rows sorted by axis
/// value.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    if spec.axis == Axis::OndemandCostComparison {
        return Err(SweepError::WrongRunner { axis: spec.axis });
    }
    if spec.values.is_empty() {
        return Err(SweepError::Empty);
    }
    let mut values = spec.values.clone();
    values.sort();
    values.dedup();
    par::map(&values, |v| solve_point(spec, v))
        .into_iter()
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 12] = [
    "axis",
    "axis_value",
    "deployment_cost",
    "expected_compute",
    "expected_bell",
    "expected_ondemand",
    "total",
    "deployed_count",
    "ondemand_expected",
    "solver",
    "nodes",
    "oracle_total",
];

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>)) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w);
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn sweep_csv(axis: Axis, rows: &[SweepRow]) -> String {
    csv_string(|w| {
        w.write_record(SWEEP_CSV_HEADER).expect("in-memory write");
        for r in rows {
            let (dep, com, bell, ond, total) = match &r.cost {
                Some(c) => (
                    c.deployment.to_string(),
                    c.expected_compute.to_string(),
                    c.expected_bell.to_string(),
                    c.expected_on_demand.to_string(),
                    c.total.to_string(),
                ),
                None => Default::default(),
            };
            let total = if r.cost.is_none() {
                "infeasible".to_string()
            } else {
                total
            };
            w.write_record([
                axis.name().to_string(),
                r.axis_value.to_string(),
                dep,
                com,
                bell,
                ond,
                total,
                r.deployed_count.to_string(),
                r.ondemand_expected.to_string(),
                r.solver.as_str().to_string(),
                r.nodes.to_string(),
                r.oracle_total
                    .as_ref()
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    })
}

/// First-stage / second-stage / total view of the same rows.
pub fn stage_csv(axis: Axis, rows: &[SweepRow]) -> String {
    csv_string(|w| {
        w.write_record(["axis", "axis_value", "first_stage", "second_stage", "total"])
            .expect("in-memory write");
        for r in rows {
            let (first, second, total) = match &r.cost {
                Some(c) => (
                    c.deployment.to_string(),
                    c.second_stage().to_string(),
                    c.total.to_string(),
                ),
                None => (String::new(), String::new(), "infeasible".to_string()),
            };
            w.write_record([
                axis.name().to_string(),
                r.axis_value.to_string(),
                first,
                second,
                total,
            ])
            .expect("in-memory write");
        }
    })
}

/// Stacked cost-breakdown chart, one bar per axis value.
pub fn render_charts(axis: Axis, rows: &[SweepRow]) -> Result<String, ChartError> {
    let pick = |f: &dyn Fn(&CostBreakdown) -> ExactNumber| -> Vec<f64> {
        rows.iter()
            .map(|r| r.cost.as_ref().map_or(0.0, |c| f(c).to_f64()))
            .collect()
    };
    BarChart {
        title: format!("Cost breakdown vs {}", axis.label()),
        x_label: axis.label().to_string(),
        y_label: "expected cost".to_string(),
        categories: rows.iter().map(|r| r.axis_value.to_string()).collect(),
        series: vec![
            (
                "deployment".into(),
                pick(&|c| ExactNumber::from(c.deployment)),
            ),
            ("computing".into(), pick(&|c| c.expected_compute.clone())),
            ("Bell pairs".into(), pick(&|c| c.expected_bell.clone())),
            ("on-demand".into(), pick(&|c| c.expected_on_demand.clone())),
        ],
        layout: Layout::Stacked,
    }
    .render()
}

/// First-stage vs second-stage stacked chart.
pub fn render_stage_chart(axis: Axis, rows: &[SweepRow]) -> Result<String, ChartError> {
    let pick = |f: &dyn Fn(&CostBreakdown) -> ExactNumber| -> Vec<f64> {
        rows.iter()
            .map(|r| r.cost.as_ref().map_or(0.0, |c| f(c).to_f64()))
            .collect()
    };
    BarChart {
        title: format!("Cost structure vs {}", axis.label()),
        x_label: axis.label().to_string(),
        y_label: "expected cost".to_string(),
        categories: rows.iter().map(|r| r.axis_value.to_string()).collect(),
        series: vec![
            (
                "first stage".into(),
                pick(&|c| ExactNumber::from(c.deployment)),
            ),
            ("second stage".into(), pick(&|c| c.second_stage())),
        ],
        layout: Layout::Stacked,
    }
    .render()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonPoint {
    pub multiplier: ExactNumber,
    pub table: ComparisonTable,
}

/// Scores proposed / EVF / random policies at each on-demand cost
/// multiplier of the base offer costs.
pub fn run_comparison(spec: &SweepSpec) -> Result<Vec<ComparisonPoint>, SweepError> {
    if spec.values.is_empty() {
        return Err(SweepError::Empty);
    }
    let mut values = spec.values.clone();
    values.sort();
    values.dedup();
    let options = PolicyOptions {
        evf_mode: spec.evf_mode,
        random: spec.random.clone(),
    };
    let instances = values
        .iter()
        .map(|v| apply_axis(&spec.base, Axis::OndemandCostComparison, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(values
        .into_iter()
        .zip(instances)
        .map(|(multiplier, inst)| ComparisonPoint {
            multiplier,
            table: score_policies_with(&inst, &spec.seeds, &options),
        })
        .collect())
}

pub fn comparison_csv(points: &[ComparisonPoint]) -> String {
    csv_string(|w| {
        w.write_record([
            "multiplier",
            "model",
            "seed",
            "deployment_count",
            "on_demand_expected",
            "total_cost",
            "feasible",
        ])
        .expect("in-memory write");
        for p in points {
            for r in &p.table.rows {
                w.write_record([
                    p.multiplier.to_string(),
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
        }
    })
}

pub fn render_comparison_chart(points: &[ComparisonPoint]) -> Result<String, ChartError> {
    let total = |p: &ComparisonPoint, m: PolicyModel| {
        p.table
            .row(m)
            .and_then(|r| r.total_cost.as_ref())
            .map_or(0.0, |c| c.to_f64())
    };
    BarChart {
        title: "Total cost of proposed, EVF and random deployment".into(),
        x_label: Axis::OndemandCostComparison.label().into(),
        y_label: "expected total cost".into(),
        categories: points
            .iter()
            .map(|p| format!("{}x", p.multiplier))
            .collect(),
        series: [
            ("proposed", PolicyModel::Proposed),
            ("EVF", PolicyModel::Evf),
            ("random (mean)", PolicyModel::RandomMean),
        ]
        .iter()
        .map(|(name, m)| {
            (
                name.to_string(),
                points.iter().map(|p| total(p, *m)).collect(),
            )
        })
        .collect(),
        layout: Layout::Grouped,
    }
    .render()
}
