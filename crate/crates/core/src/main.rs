use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qalloc::baselines::{EvfMode, PolicyModel, RandomPolicy};
use qalloc::engine::{branch_and_bound, exhaustive_solve, SolverReport};
use qalloc::experiments::{self, Axis, SweepSpec};
use qalloc::formulation::build_extensive_form;
use qalloc::instance::{load_instance, to_json, InstanceIoError};
use qalloc::output::{format_cost, write_atomic};
use qalloc::{default_instance, ExactNumber, ValidInstance};

#[derive(Parser)]
#[command(
    name = "qalloc",
    version,
    about = "Two-stage stochastic allocation of quantum computers"
)]
struct Cli {
    /// Worker threads (falls back to QALLOC_THREADS, then the machine's parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance JSON file.
    #[arg(conflicts_with = "default")]
    instance: Option<PathBuf>,
    /// Use the built-in default instance.
    #[arg(long)]
    default: bool,
}

impl InstanceArg {
    fn load(&self) -> Result<ValidInstance, Failure> {
        match &self.instance {
            Some(path) => load_instance(path).map_err(Failure::from),
            None => Ok(default_instance()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverChoice {
    Bnb,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the optimal deployment.
    Solve {
        #[command(flatten)]
        input: InstanceArg,
        #[arg(long, value_enum, default_value = "bnb")]
        solver: SolverChoice,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter of the task scenario.
    Sweep {
        #[command(flatten)]
        input: InstanceArg,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values (defaults to the axis grid).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<ExactNumber>>,
        /// Skip the exhaustive cross-check.
        #[arg(long)]
        no_oracle: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Compare proposed, EVF and random deployments across on-demand cost multipliers.
    Compare {
        #[command(flatten)]
        input: InstanceArg,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<ExactNumber>>,
        /// Comma-separated random seeds.
        #[arg(long, value_delimiter = ',', conflicts_with = "num_seeds")]
        seeds: Option<Vec<u64>>,
        /// Use seeds 0..N.
        #[arg(long, default_value_t = 100)]
        num_seeds: u64,
        #[arg(long, default_value = "bits")]
        evf_mode: EvfMode,
        /// Inclusion probability of each computer in the random baseline.
        #[arg(long, default_value = "0.5")]
        random_probability: ExactNumber,
        /// Redraw infeasible random deployments (same seed stream, bounded attempts).
        #[arg(long)]
        resample_infeasible: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Check an instance file.
    Validate { instance: PathBuf },
    /// Write the default instance as JSON.
    DefaultInstance { path: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible,
}

impl From<InstanceIoError> for Failure {
    fn from(e: InstanceIoError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<qalloc::output::OutputError> for Failure {
    fn from(e: qalloc::output::OutputError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("QALLOC_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "QALLOC_THREADS must be a positive integer, got {v:?}"
                ))
            }),
        _ => Ok(None),
    }
}

fn report_csv(report: &SolverReport) -> String {
    let s = &report.solution;
    let c = &s.cost;
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "solver",
        "status",
        "first_stage",
        "deployment_cost",
        "expected_compute",
        "expected_bell",
        "expected_ondemand",
        "total",
        "nodes",
    ]);
    let _ = w.write_record([
        report.solver_id.as_str().to_string(),
        if s.is_optimal() {
            "optimal"
        } else {
            "infeasible"
        }
        .to_string(),
        s.first_stage.bitmap(),
        c.deployment.to_string(),
        format_cost(&c.expected_compute),
        format_cost(&c.expected_bell),
        format_cost(&c.expected_on_demand),
        format_cost(&c.total),
        report.nodes_explored.to_string(),
    ]);
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn solve(
    input: &InstanceArg,
    solver: SolverChoice,
    format: Format,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let instance = input.load()?;
    let problem = build_extensive_form(&instance);
    let report = match solver {
        SolverChoice::Bnb => branch_and_bound(&problem),
        SolverChoice::Exhaustive => {
            exhaustive_solve(&problem).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    if let Some(path) = out {
        let body = match format {
            Format::Json => report.to_json(),
            Format::Csv => report_csv(&report),
        };
        write_atomic(path, body.as_bytes())?;
    }
    let s = &report.solution;
    if !s.is_optimal() {
        eprintln!("infeasible: no first-stage decision covers every scenario");
        return Err(Failure::Infeasible);
    }
    println!("total {}", format_cost(&s.cost.total));
    println!("deployment {}", s.first_stage.bitmap());
    println!(
        "breakdown deployment={} compute={} bell={} ondemand={}",
        s.cost.deployment,
        format_cost(&s.cost.expected_compute),
        format_cost(&s.cost.expected_bell),
        format_cost(&s.cost.expected_on_demand)
    );
    println!(
        "nodes {} ({})",
        report.nodes_explored,
        report.solver_id.as_str()
    );
    Ok(())
}

fn sweep(
    input: &InstanceArg,
    axis: Axis,
    values: Option<Vec<ExactNumber>>,
    oracle: bool,
    out: &Path,
) -> Result<(), Failure> {
    if axis == Axis::OndemandCostComparison {
        return Err(Failure::Usage(
            "use the compare command for ondemand_cost_comparison".into(),
        ));
    }
    let mut spec = SweepSpec::new(
        axis,
        values.unwrap_or_else(|| axis.default_values()),
        input.load()?,
    );
    spec.oracle = oracle;
    let rows = experiments::run_sweep(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let name = format!("fig_{}", axis.name());
    write_atomic(
        &out.join(format!("{name}.csv")),
        experiments::sweep_csv(axis, &rows).as_bytes(),
    )?;
    let svg = experiments::render_charts(axis, &rows).map_err(|e| Failure::Usage(e.to_string()))?;
    write_atomic(&out.join(format!("{name}.svg")), svg.as_bytes())?;
    if axis == Axis::Power {
        write_atomic(
            &out.join("fig_power_stages.csv"),
            experiments::stage_csv(axis, &rows).as_bytes(),
        )?;
        let svg = experiments::render_stage_chart(axis, &rows)
            .map_err(|e| Failure::Usage(e.to_string()))?;
        write_atomic(&out.join("fig_power_stages.svg"), svg.as_bytes())?;
    }
    for r in &rows {
        match &r.cost {
            Some(c) => println!(
                "{}={} total {} deployed {}",
                axis,
                r.axis_value,
                format_cost(&c.total),
                r.deployed_count
            ),
            None => println!("{}={} infeasible", axis, r.axis_value),
        }
    }
    println!("wrote {}", out.join(format!("{name}.csv")).display());
    Ok(())
}

fn compare(
    input: &InstanceArg,
    multipliers: Option<Vec<ExactNumber>>,
    seeds: Vec<u64>,
    evf_mode: EvfMode,
    random: RandomPolicy,
    out: &Path,
) -> Result<(), Failure> {
    let axis = Axis::OndemandCostComparison;
    let mut spec = SweepSpec::new(
        axis,
        multipliers.unwrap_or_else(|| axis.default_values()),
        input.load()?,
    );
    spec.seeds = seeds;
    spec.evf_mode = evf_mode;
    spec.random = random;
    let points = experiments::run_comparison(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let name = format!("fig_{}", axis.name());
    write_atomic(
        &out.join(format!("{name}.csv")),
        experiments::comparison_csv(&points).as_bytes(),
    )?;
    let svg =
        experiments::render_comparison_chart(&points).map_err(|e| Failure::Usage(e.to_string()))?;
    write_atomic(&out.join(format!("{name}.svg")), svg.as_bytes())?;
    let show = |p: &experiments::ComparisonPoint, m| {
        p.table
            .row(m)
            .and_then(|r| r.total_cost.as_ref())
            .map_or("infeasible".to_string(), format_cost)
    };
    for p in &points {
        println!(
            "x{} proposed {} evf {} random_mean {}",
            p.multiplier,
            show(p, PolicyModel::Proposed),
            show(p, PolicyModel::Evf),
            show(p, PolicyModel::RandomMean)
        );
    }
    println!("wrote {}", out.join(format!("{name}.csv")).display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = match cli.threads {
        Some(0) => return Err(Failure::Usage("--threads must be positive".into())),
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    qalloc::par::with_threads(threads, || match cli.command {
        Command::Solve {
            input,
            solver,
            format,
            out,
        } => solve(&input, solver, format, out.as_deref()),
        Command::Sweep {
            input,
            axis,
            values,
            no_oracle,
            out,
        } => sweep(&input, axis, values, !no_oracle, &out),
        Command::Compare {
            input,
            multipliers,
            seeds,
            num_seeds,
            evf_mode,
            random_probability,
            resample_infeasible,
            out,
        } => {
            let random = RandomPolicy::new(random_probability, resample_infeasible)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            compare(
                &input,
                multipliers,
                seeds.unwrap_or_else(|| (0..num_seeds).collect()),
                evf_mode,
                random,
                &out,
            )
        }
        Command::Validate { instance } => {
            load_instance(&instance)?;
            println!("{}: ok", instance.display());
            Ok(())
        }
        Command::DefaultInstance { path } => {
            write_atomic(&path, to_json(default_instance().get()).as_bytes())?;
            println!("wrote {}", path.display());
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
