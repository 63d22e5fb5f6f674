mod common;

use std::time::{Duration, Instant};

use common::*;
use qalloc::baselines::{score_policies, EvfMode, PolicyModel};
use qalloc::engine::{branch_and_bound, evaluate_mask, exhaustive_solve};
use qalloc::experiments::{
    comparison_csv, render_charts, render_comparison_chart, render_stage_chart, run_comparison,
    run_sweep, stage_csv, sweep_csv, Axis, SweepRow, SweepSpec,
};
use qalloc::formulation::{build_deterministic, build_extensive_form, LinearModel};
use qalloc::model::mask_to_bits;
use qalloc::par;
use qalloc::rng::SplitMix64;
use qalloc::synth::{random_instance, SynthConfig};
use qalloc::{default_instance, validate_instance, ExactNumber};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn n(s: &str) -> ExactNumber {
    s.parse().unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sweep(axis: Axis, values: Vec<ExactNumber>) -> Result<Vec<SweepRow>, String> {
    run_sweep(&SweepSpec::new(axis, values, default_instance())).map_err(|e| e.to_string())
}

fn total(row: &SweepRow) -> Option<&ExactNumber> {
    row.cost.as_ref().map(|c| &c.total)
}

fn criterion_1() -> Outcome {
    let p = build_extensive_form(&default_instance());
    let start = Instant::now();
    let bnb = par::with_threads(Some(1), || branch_and_bound(&p));
    let elapsed = start.elapsed();
    let oracle = exhaustive_solve(&p).map_err(|e| e.to_string())?;
    let s = &bnb.solution;
    check(s.cost.total == 78120u64, || {
        format!("total {}", s.cost.total)
    })?;
    check(s.first_stage.count() == 9, || {
        format!("deployed {}", s.first_stage.count())
    })?;
    check(s.cost.expected_on_demand.is_zero(), || {
        "on-demand used".into()
    })?;
    check(s.recourse.iter().all(|r| r.on_demand_count() == 0), || {
        "on-demand units".into()
    })?;
    check(*s == oracle.solution, || {
        "branch-and-bound and oracle differ".into()
    })?;
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "total 78120, 9 deployed, {} nodes, {elapsed:?}",
        bnb.nodes_explored
    ))
}

fn criterion_2() -> Outcome {
    let p = build_deterministic(&default_instance(), Some(10));
    let r = branch_and_bound(&p);
    let oracle = exhaustive_solve(&p).map_err(|e| e.to_string())?;
    check(r.solution.cost.total == 86400u64, || {
        format!("total {}", r.solution.cost.total)
    })?;
    check(r.solution.first_stage.count() == 9, || {
        format!("deployed {}", r.solution.first_stage.count())
    })?;
    check(r.solution == oracle.solution, || "oracle differs".into())?;
    Ok("deterministic total 86400 with 9 deployed".into())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let values = (6..=11u64).map(ExactNumber::from).collect();
    let rows = sweep(Axis::DemandQubits, values)?;
    let elapsed = start.elapsed();
    let counts: Vec<usize> = rows.iter().map(|r| r.deployed_count).collect();
    check(counts == [1, 2, 3, 5, 9, 10], || {
        format!("deployed counts {counts:?}")
    })?;
    for r in &rows[..5] {
        check(r.ondemand_expected.is_zero(), || {
            format!("on-demand used at {}", r.axis_value)
        })?;
    }
    let last = &rows[5];
    check(total(last) == Some(&ExactNumber::from(230400u64)), || {
        format!("total at 11: {:?}", total(last))
    })?;
    check(last.ondemand_expected == n("5.6"), || {
        format!("expected on-demand {}", last.ondemand_expected)
    })?;
    // seven units in the demand scenario, none in the empty one
    let inst =
        qalloc::experiments::apply_axis(&default_instance(), Axis::DemandQubits, &n("11")).unwrap();
    let p = build_extensive_form(&inst);
    let sol = branch_and_bound(&p).solution;
    check(sol.recourse[0].on_demand_count() == 7, || {
        format!("units {}", sol.recourse[0].on_demand_count())
    })?;
    check(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "counts {counts:?}, 7 on-demand units at 11 (total 230400), {elapsed:?}"
    ))
}

fn criterion_4() -> Outcome {
    let rows = sweep(Axis::Fidelity, Axis::Fidelity.default_values())?;
    check(rows.len() == 11, || format!("{} rows", rows.len()))?;
    for r in &rows {
        let below = r.axis_value < n("0.5");
        let want = ExactNumber::from(if below { 165800u64 } else { 78120 });
        check(total(r) == Some(&want), || {
            format!("q = {}: total {:?}", r.axis_value, total(r))
        })?;
        check(below == !r.ondemand_expected.is_zero(), || {
            format!("q = {}: on-demand {}", r.axis_value, r.ondemand_expected)
        })?;
    }
    Ok("165800 for q <= 0.4, 78120 for q >= 0.5, on-demand only below 0.5".into())
}

fn criterion_5() -> Outcome {
    let rows = sweep(Axis::Probability, vec![n("0.1"), n("0.2"), n("0.3")])?;
    let got: Vec<(usize, Option<&ExactNumber>)> =
        rows.iter().map(|r| (r.deployed_count, total(r))).collect();
    let want = [(0usize, 22500u64), (0, 45000), (9, 57420)];
    for ((count, t), (wc, wt)) in got.iter().zip(want) {
        check(*count == wc && *t == Some(&ExactNumber::from(wt)), || {
            format!("got {got:?}")
        })?;
    }
    Ok("0.1 -> 22500 (0), 0.2 -> 45000 (0), 0.3 -> 57420 (9)".into())
}

fn criterion_6() -> Outcome {
    let mut spec = SweepSpec::new(
        Axis::OndemandCostComparison,
        Axis::OndemandCostComparison.default_values(),
        default_instance(),
    );
    spec.seeds = (0..100).collect();
    let points = run_comparison(&spec).map_err(|e| e.to_string())?;
    for p in &points {
        let proposed = p
            .table
            .row(PolicyModel::Proposed)
            .and_then(|r| r.total_cost.clone());
        let proposed = proposed.ok_or_else(|| format!("x{}: proposed infeasible", p.multiplier))?;
        if let Some(evf) = p
            .table
            .row(PolicyModel::Evf)
            .and_then(|r| r.total_cost.as_ref())
        {
            check(&proposed <= evf, || {
                format!("x{}: proposed {proposed} > EVF {evf}", p.multiplier)
            })?;
        }
        check(p.table.random_rows().count() == 100, || {
            "missing random rows".into()
        })?;
        for r in p.table.random_rows() {
            if let Some(t) = &r.total_cost {
                check(&proposed <= t, || {
                    format!(
                        "x{} seed {:?}: random {t} < proposed {proposed}",
                        p.multiplier, r.seed
                    )
                })?;
            }
        }
    }
    let cheap = &points[0];
    check(cheap.multiplier == n("0.2"), || {
        "first multiplier is not 0.2".into()
    })?;
    let proposed = cheap
        .table
        .row(PolicyModel::Proposed)
        .and_then(|r| r.total_cost.clone());
    let evf = cheap
        .table
        .row(PolicyModel::Evf)
        .and_then(|r| r.total_cost.clone());
    check(proposed == Some(ExactNumber::from(36000u64)), || {
        format!("x0.2 proposed {proposed:?}")
    })?;
    let evf = evf.ok_or("x0.2 EVF infeasible")?;
    check(evf == 78120u64, || {
        format!("dominance holds at every multiplier and proposed = 36000 at x0.2, but EVF at x0.2 scores {evf}, not 78120")
    })?;
    Ok(
        "proposed <= EVF and <= all 100 random seeds at every multiplier; x0.2: 36000 < 78120"
            .into(),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let cfg = SynthConfig::default();
    let mut feasible = 0;
    for i in 0..200 {
        let inst = random_instance(&mut rng, &cfg);
        let p = build_extensive_form(&inst);
        let bnb = branch_and_bound(&p).solution;
        let oracle = exhaustive_solve(&p).map_err(|e| e.to_string())?.solution;
        check(
            bnb.status == oracle.status && bnb.cost.total == oracle.cost.total,
            || {
                format!(
                    "instance {i}: bnb {} vs oracle {}",
                    bnb.cost.total, oracle.cost.total
                )
            },
        )?;
        feasible += usize::from(bnb.is_optimal());
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "200 instances agree ({feasible} feasible), {elapsed:?}"
    ))
}

fn structural_conflicts() -> Result<(), String> {
    let mut rng = SplitMix64::new(7);
    let cfg = SynthConfig {
        max_computers: 6,
        ..SynthConfig::default()
    };
    for _ in 0..30 {
        let inst = random_instance(&mut rng, &cfg);
        let p = build_extensive_form(&inst);
        for (w, sc) in p.scenarios.iter().enumerate() {
            for set in 0..1u64 << inst.computers.len() {
                check(
                    sc.conflicts.admits(set) == admissible_direct(&inst, w, set),
                    || format!("conflict mismatch on subset {set:b}"),
                )?;
            }
        }
    }
    Ok(())
}

fn structural_linearization() -> Result<(), String> {
    let mut rng = SplitMix64::new(8);
    let cfg = SynthConfig {
        max_computers: 4,
        max_offers: 3,
        max_scenarios: 2,
        ..SynthConfig::default()
    };
    for _ in 0..20 {
        let inst = random_instance(&mut rng, &cfg);
        let p = build_extensive_form(&inst);
        let model = LinearModel::build(&p);
        let (j, r, s) = (p.num_computers(), p.num_offers(), p.num_scenarios());
        for _ in 0..100 {
            let deployed = rng.next_u64() & ((1 << j) - 1);
            let used: Vec<u64> = (0..s).map(|_| rng.next_u64() & deployed).collect();
            let od: Vec<u64> = (0..s).map(|_| rng.next_u64() & ((1 << r) - 1)).collect();
            let point = model.point(
                &mask_to_bits(deployed, j),
                &used.iter().map(|&u| mask_to_bits(u, j)).collect::<Vec<_>>(),
                &od.iter().map(|&u| mask_to_bits(u, r)).collect::<Vec<_>>(),
            );
            check(
                model.is_feasible(&point) == direct_feasible(&inst, deployed, &used, &od, false),
                || "feasibility mismatch".into(),
            )?;
            check(
                model.objective_value(&point) == direct_cost(&inst, deployed, &used, &od),
                || "objective mismatch".into(),
            )?;
        }
    }
    Ok(())
}

fn structural_monotonicity() -> Result<(), String> {
    let mut rng = SplitMix64::new(9);
    let cfg = SynthConfig {
        max_computers: 6,
        ..SynthConfig::default()
    };
    for _ in 0..50 {
        let inst = random_instance(&mut rng, &cfg);
        let w = rng.range(0, inst.scenarios.len() as u64 - 1) as usize;
        let mut raised = inst.get().clone();
        let step = rng.range(0, 2) as u32;
        raised.scenarios[w].demand_qubits = Some(
            raised.scenarios[w]
                .demand_qubits
                .map_or(step, |q| q + 1 + step),
        );
        let raised = validate_instance(raised).unwrap();
        check(not_greater(&optimum(&inst), &optimum(&raised)), || {
            "demand monotonicity violated".into()
        })?;
    }
    for _ in 0..50 {
        let inst = random_instance(&mut rng, &cfg);
        let w = rng.range(0, inst.scenarios.len() as u64 - 1) as usize;
        let j = inst.computers.len();
        let mut raised = inst.get().clone();
        for a in 0..j {
            for b in 0..j {
                let up = ExactNumber::ratio(rng.range(0, 10), 10);
                if a != b && up > raised.scenarios[w].fidelity[a][b] {
                    raised.scenarios[w].fidelity[a][b] = up;
                }
            }
        }
        let raised = validate_instance(raised).unwrap();
        check(not_greater(&optimum(&raised), &optimum(&inst)), || {
            "fidelity monotonicity violated".into()
        })?;
    }
    Ok(())
}

/// Every sweep artifact, as bytes, plus a check that every row sums.
fn all_artifacts() -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for axis in [
        Axis::DemandQubits,
        Axis::Power,
        Axis::Fidelity,
        Axis::OndemandCost,
        Axis::Probability,
    ] {
        let rows = sweep(axis, axis.default_values())?;
        for r in &rows {
            if let Some(c) = &r.cost {
                check(c.sums_to_total(), || {
                    format!("{axis} = {}: breakdown does not sum", r.axis_value)
                })?;
            }
        }
        let csv = sweep_csv(axis, &rows);
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f[6] != "infeasible" {
                let parts: ExactNumber = f[2..6].iter().map(|v| n(v)).sum();
                check(parts == n(f[6]), || format!("csv row does not sum: {line}"))?;
            }
        }
        out.push((format!("{axis}.csv"), csv));
        out.push((
            format!("{axis}.svg"),
            render_charts(axis, &rows).map_err(|e| e.to_string())?,
        ));
        if axis == Axis::Power {
            out.push(("power_stages.csv".into(), stage_csv(axis, &rows)));
            out.push((
                "power_stages.svg".into(),
                render_stage_chart(axis, &rows).map_err(|e| e.to_string())?,
            ));
        }
    }
    let mut spec = SweepSpec::new(
        Axis::OndemandCostComparison,
        Axis::OndemandCostComparison.default_values(),
        default_instance(),
    );
    spec.seeds = (0..20).collect();
    let points = run_comparison(&spec).map_err(|e| e.to_string())?;
    out.push(("comparison.csv".into(), comparison_csv(&points)));
    out.push((
        "comparison.svg".into(),
        render_comparison_chart(&points).map_err(|e| e.to_string())?,
    ));
    Ok(out)
}

fn criterion_8() -> Outcome {
    structural_conflicts()?;
    structural_linearization()?;
    structural_monotonicity()?;
    let first = par::with_threads(Some(1), all_artifacts)?;
    let second = par::with_threads(Some(4), all_artifacts)?;
    check(first == second, || {
        "sweep artifacts differ between runs".into()
    })?;
    // policy scores also recompute identically from the optimum
    let inst = default_instance();
    let p = build_extensive_form(&inst);
    let sol = branch_and_bound(&p).solution;
    let again = evaluate_mask(&p, sol.first_stage.mask())
        .map_err(|e| e.to_string())?
        .breakdown(&p);
    check(again == sol.cost, || {
        "re-evaluated breakdown differs".into()
    })?;
    let table = score_policies(&inst, &[1, 2, 3], EvfMode::Bits);
    check(
        table == score_policies(&inst, &[1, 2, 3], EvfMode::Bits),
        || "comparison not reproducible".into(),
    )?;
    Ok(format!(
        "conflicts, linearization, monotonicity (50 + 50), sums, {} artifacts byte-identical",
        first.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("default-instance optimum", criterion_1),
        ("deterministic model", criterion_2),
        ("demand sweep", criterion_3),
        ("fidelity sweep", criterion_4),
        ("probability sweep", criterion_5),
        ("model comparison", criterion_6),
        ("oracle equivalence", criterion_7),
        ("structural properties", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                println!("FAIL criterion {} ({name}): {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
