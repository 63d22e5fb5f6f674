//! Instance validation, the shipped default instance, and the JSON file
//! format.

use std::fmt;
use std::path::Path;

use crate::exact::ExactNumber;
use crate::model::{
    LinkTable, OnDemandOffer, ProblemInstance, QuantumComputer, Scenario, MAX_CAPACITY, MAX_COST,
    MAX_DEMAND_QUBITS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    ProbabilitySum,
    FidelityRange,
    Shape,
    NegativeCost,
    Range,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::ProbabilitySum => "ProbabilitySumError",
            ViolationKind::FidelityRange => "FidelityRangeError",
            ViolationKind::Shape => "ShapeError",
            ViolationKind::NegativeCost => "NegativeCostError",
            ViolationKind::Range => "RangeError",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// JSON-pointer-like path, e.g. `scenarios[1].fidelity[0][3]`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl ValidationError {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// An instance that passed [`validate_instance`]. Read-only from here on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidInstance(ProblemInstance);

impl ValidInstance {
    pub fn get(&self) -> &ProblemInstance {
        &self.0
    }

    pub fn into_inner(self) -> ProblemInstance {
        self.0
    }
}

impl std::ops::Deref for ValidInstance {
    type Target = ProblemInstance;
    fn deref(&self) -> &ProblemInstance {
        &self.0
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, kind: ViolationKind, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            kind,
            path: path.into(),
            message: message.into(),
        });
    }

    fn square<T>(&mut self, table: &[Vec<T>], j: usize, path: &str) -> bool {
        if table.len() != j {
            self.push(
                ViolationKind::Shape,
                path,
                format!("expected {j} rows, found {}", table.len()),
            );
            return false;
        }
        let mut ok = true;
        for (i, row) in table.iter().enumerate() {
            if row.len() != j {
                self.push(
                    ViolationKind::Shape,
                    format!("{path}[{i}]"),
                    format!("expected {j} columns, found {}", row.len()),
                );
                ok = false;
            }
        }
        ok
    }

    fn fidelities(&mut self, table: &[Vec<ExactNumber>], path: &str) {
        for (i, row) in table.iter().enumerate() {
            for (k, q) in row.iter().enumerate() {
                if i != k && !q.in_unit_interval() {
                    self.push(
                        ViolationKind::FidelityRange,
                        format!("{path}[{i}][{k}]"),
                        format!("fidelity {q} outside [0, 1]"),
                    );
                }
            }
        }
    }

    fn cost(&mut self, value: u64, path: String) {
        if value > MAX_COST {
            self.push(
                ViolationKind::Range,
                path,
                format!("cost {value} exceeds {MAX_COST}"),
            );
        }
    }

    fn capacity(&mut self, value: u64, path: String) {
        if value > MAX_CAPACITY {
            self.push(
                ViolationKind::Range,
                path,
                format!("capacity {value} exceeds {MAX_CAPACITY}"),
            );
        }
    }
}

/// Checks every structural and numeric invariant and reports all
/// violations at once.
pub fn validate_instance(instance: ProblemInstance) -> Result<ValidInstance, ValidationError> {
    let mut c = Collector(Vec::new());
    let j = instance.computers.len();
    if j > 64 {
        c.push(
            ViolationKind::Shape,
            "computers",
            format!("{j} computers exceeds 64"),
        );
    }

    for (idx, comp) in instance.computers.iter().enumerate() {
        if comp.id != idx + 1 {
            c.push(
                ViolationKind::Shape,
                format!("computers[{idx}].id"),
                format!("expected id {}, found {}", idx + 1, comp.id),
            );
        }
        c.capacity(comp.base_qubits, format!("computers[{idx}].base_qubits"));
        c.cost(comp.deploy_cost, format!("computers[{idx}].deploy_cost"));
        c.cost(comp.compute_cost, format!("computers[{idx}].compute_cost"));
    }

    let links = &instance.links;
    if c.square(&links.capacity, j, "links.capacity") {
        for (i, row) in links.capacity.iter().enumerate() {
            for (k, &cap) in row.iter().enumerate() {
                if i == k {
                    continue;
                }
                if cap == 0 {
                    c.push(
                        ViolationKind::Range,
                        format!("links.capacity[{i}][{k}]"),
                        "link capacity must be positive",
                    );
                }
                c.capacity(cap, format!("links.capacity[{i}][{k}]"));
            }
        }
    }
    if c.square(&links.base_fidelity, j, "links.base_fidelity") {
        c.fidelities(&links.base_fidelity, "links.base_fidelity");
    }
    if c.square(&links.bell_cost, j, "links.bell_cost") {
        for (i, row) in links.bell_cost.iter().enumerate() {
            for (k, &cost) in row.iter().enumerate() {
                if i != k {
                    c.cost(cost, format!("links.bell_cost[{i}][{k}]"));
                }
            }
        }
    }

    if instance.on_demand.len() > 4096 {
        c.push(ViolationKind::Shape, "on_demand", "more than 4096 offers");
    }
    for (idx, offer) in instance.on_demand.iter().enumerate() {
        if offer.id != idx + 1 {
            c.push(
                ViolationKind::Shape,
                format!("on_demand[{idx}].id"),
                format!("expected id {}, found {}", idx + 1, offer.id),
            );
        }
        c.capacity(offer.capacity, format!("on_demand[{idx}].capacity"));
        c.cost(offer.cost, format!("on_demand[{idx}].cost"));
    }

    if instance.scenarios.is_empty() {
        c.push(
            ViolationKind::Shape,
            "scenarios",
            "at least one scenario is required",
        );
    }
    let mut prob_sum = ExactNumber::zero();
    for (idx, sc) in instance.scenarios.iter().enumerate() {
        let path = format!("scenarios[{idx}]");
        if sc.id != idx + 1 {
            c.push(
                ViolationKind::Shape,
                format!("{path}.id"),
                format!("expected id {}, found {}", idx + 1, sc.id),
            );
        }
        if !sc.probability.in_unit_interval() {
            c.push(
                ViolationKind::ProbabilitySum,
                format!("{path}.probability"),
                format!("probability {} outside [0, 1]", sc.probability),
            );
        }
        // keeps the common probability denominator small enough for u128 objective arithmetic
        if sc.probability.denom().bits() > 60 {
            c.push(
                ViolationKind::Range,
                format!("{path}.probability"),
                "probability denominator too large",
            );
        }
        prob_sum = prob_sum + &sc.probability;
        if let Some(n) = sc.demand_qubits {
            if n > MAX_DEMAND_QUBITS {
                c.push(
                    ViolationKind::Range,
                    format!("{path}.demand_qubits"),
                    format!("DemandTooLarge: {n} > {MAX_DEMAND_QUBITS}"),
                );
            }
        }
        if sc.power.len() != j {
            c.push(
                ViolationKind::Shape,
                format!("{path}.power"),
                format!("expected {j} entries, found {}", sc.power.len()),
            );
        }
        for (k, &p) in sc.power.iter().enumerate() {
            c.capacity(p, format!("{path}.power[{k}]"));
        }
        let fpath = format!("{path}.fidelity");
        if c.square(&sc.fidelity, j, &fpath) {
            c.fidelities(&sc.fidelity, &fpath);
        }
    }
    if !instance.scenarios.is_empty() && prob_sum != ExactNumber::one() {
        c.push(
            ViolationKind::ProbabilitySum,
            "scenarios[*].probability",
            format!("probabilities sum to {prob_sum}, expected 1"),
        );
    }

    if c.0.is_empty() {
        Ok(ValidInstance(instance))
    } else {
        Err(ValidationError { violations: c.0 })
    }
}

pub const DEFAULT_COMPUTERS: usize = 10;
pub const DEFAULT_OFFERS: usize = 32;

fn uniform<T: Clone>(j: usize, off_diag: T, diag: T) -> Vec<Vec<T>> {
    (0..j)
        .map(|i| {
            (0..j)
                .map(|k| {
                    if i == k {
                        diag.clone()
                    } else {
                        off_diag.clone()
                    }
                })
                .collect()
        })
        .collect()
}

/// Ten identical computers, two scenarios (0.8: ten-qubit task on full
/// hardware; 0.2: nothing to do, dead hardware), 32 identical on-demand
/// offers.
pub fn default_instance() -> ValidInstance {
    let j = DEFAULT_COMPUTERS;
    let qubits = 127;
    let computers = (1..=j)
        .map(|id| QuantumComputer {
            id,
            base_qubits: qubits,
            deploy_cost: 5000,
            compute_cost: 1000,
        })
        .collect();
    let links = LinkTable {
        capacity: uniform(j, 257, 0),
        base_fidelity: uniform(j, ExactNumber::one(), ExactNumber::zero()),
        bell_cost: uniform(j, 450, 0),
    };
    let on_demand = (1..=DEFAULT_OFFERS)
        .map(|id| OnDemandOffer {
            id,
            capacity: 127,
            cost: 25000,
        })
        .collect();
    let scenarios = vec![
        Scenario {
            id: 1,
            probability: ExactNumber::ratio(4, 5),
            demand_qubits: Some(10),
            power: vec![qubits; j],
            fidelity: uniform(j, ExactNumber::one(), ExactNumber::zero()),
        },
        Scenario {
            id: 2,
            probability: ExactNumber::ratio(1, 5),
            demand_qubits: None,
            power: vec![0; j],
            fidelity: uniform(j, ExactNumber::zero(), ExactNumber::zero()),
        },
    ];
    validate_instance(ProblemInstance {
        computers,
        links,
        on_demand,
        scenarios,
    })
    .expect("default instance is valid")
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed instance JSON: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: invalid instance: {source}")]
    Invalid {
        path: String,
        #[source]
        source: ValidationError,
    },
}

/// Canonical JSON text: pretty-printed, trailing newline.
pub fn to_json(instance: &ProblemInstance) -> String {
    let mut s = serde_json::to_string_pretty(instance).expect("instance serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<ProblemInstance, serde_json::Error> {
    serde_json::from_str(text)
}

/// Negative numbers anywhere in a raw instance document. Every numeric
/// field of the format is unsigned, so any hit is a negative cost, power or
/// capacity.
pub fn negative_numbers(value: &serde_json::Value) -> Vec<Violation> {
    fn walk(v: &serde_json::Value, path: String, out: &mut Vec<Violation>) {
        match v {
            serde_json::Value::Number(n) if n.as_f64().is_some_and(|f| f < 0.0) => {
                out.push(Violation {
                    kind: ViolationKind::NegativeCost,
                    path,
                    message: format!("value {n} is negative"),
                })
            }
            serde_json::Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, format!("{path}[{i}]"), out);
                }
            }
            serde_json::Value::Object(map) => {
                for (k, item) in map {
                    let child = if path.is_empty() {
                        k.clone()
                    } else {
                        format!("{path}.{k}")
                    };
                    walk(item, child, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(value, String::new(), &mut out);
    out
}

pub fn load_instance(path: &Path) -> Result<ValidInstance, InstanceIoError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceIoError::Io {
        path: display.clone(),
        source,
    })?;
    let parse_err = |source| InstanceIoError::Parse {
        path: display.clone(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let negatives = negative_numbers(&value);
    if !negatives.is_empty() {
        return Err(InstanceIoError::Invalid {
            path: display,
            source: ValidationError {
                violations: negatives,
            },
        });
    }
    let raw: ProblemInstance = serde_json::from_value(value).map_err(parse_err)?;
    validate_instance(raw).map_err(|source| InstanceIoError::Invalid {
        path: display,
        source,
    })
}
