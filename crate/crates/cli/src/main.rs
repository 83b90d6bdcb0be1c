//! `riskcr`: optimal strategies, bounds, δ-sweeps and Monte Carlo checks for
//! ski rental and one-max search under the CVaR competitive ratio.
//!
//! Exit codes: 0 ok, 2 usage, 3 solver failure, 4 I/O, 5 simulation mismatch.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use riskcr_core::one_max_search::{oms_solve_alpha, OmsProblem};
use riskcr_core::simulation::{simulate_csr, simulate_dsr, simulate_oms, SimConfig, SimReport};
use riskcr_core::ski_rental_continuous::csr_solve_optimal;
use riskcr_core::ski_rental_discrete::dsr_solve_optimal;
use riskcr_core::sweep::{
    format_csv_value, render_svg, run_sweep, series_value, write_sweep_csv, Problem, Series,
    SweepSpec,
};
use riskcr_core::{RiskLevel, SolverConfig};

/// Statistical tolerance of `simulate`, in standard errors.
const SIM_Z: f64 = 3.0;

#[derive(Debug, Parser)]
#[command(name = "riskcr", version, about = "CVaR-competitive online algorithms")]
struct Cli {
    #[command(subcommand)]
    problem: ProblemCmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum ProblemCmd {
    /// Continuous-time ski rental (buying cost 1).
    Csr {
        #[command(subcommand)]
        action: Action,
    },
    /// Discrete-time ski rental with integer buying cost `--B`.
    Dsr {
        #[command(subcommand)]
        action: Action,
    },
    /// One-max search with prices in `[--L, --U]`.
    Oms {
        #[command(subcommand)]
        action: Action,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Action {
    /// Optimal ratio at one δ, with bounds.
    Solve,
    /// Lower and upper bounds at one δ.
    Bounds,
    /// Ratio of the closed-form or risk-neutral strategy at one δ.
    Suboptimal,
    /// Every series over a list of δ values, as CSV (and optionally SVG).
    Sweep,
    /// Monte Carlo check of the optimal strategy's ratio curve.
    Simulate,
}

#[derive(Debug, Args)]
struct Opts {
    /// Risk level in [0, 1].
    #[arg(long, global = true, default_value_t = 0.0)]
    delta: f64,
    /// Comma-separated δ values for `sweep`.
    #[arg(long, global = true)]
    deltas: Option<String>,
    /// Comma-separated series for `sweep`: optimal, suboptimal, upper_bound, lower_bound.
    #[arg(long, global = true)]
    series: Option<String>,
    /// Buying cost (dsr).
    #[arg(long = "B", global = true)]
    buy_cost: Option<usize>,
    /// Lowest price (oms).
    #[arg(long = "L", global = true, default_value_t = 1.0)]
    low: f64,
    /// Highest price (oms).
    #[arg(long = "U", global = true)]
    high: Option<f64>,
    /// Bisection tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Strategy grid intervals.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: usize,
    /// Adversary decisions checked by `simulate` (continuous problems).
    #[arg(long, global = true, default_value_t = 20)]
    points: usize,
    /// Print a JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write an SVG plot of the sweep here.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(riskcr_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("simulation mismatch: max gap {gap:.3e} exceeds {z} standard errors ({stderr:.3e})")]
    Mismatch { gap: f64, stderr: f64, z: f64 },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Mismatch { .. } => 5,
        }
    }
}

impl From<riskcr_core::Error> for CliError {
    fn from(e: riskcr_core::Error) -> Self {
        use riskcr_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::Infeasible | E::Unbounded | E::GridTooCoarse { .. } => {
                CliError::Solver(e)
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskcr: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (problem, action) = resolve_problem(cli)?;
    let cfg = solver_config(&cli.opts)?;
    match action {
        Action::Solve => cmd_point(&problem, PointReport::Solve, &cli.opts, &cfg),
        Action::Bounds => cmd_point(&problem, PointReport::Bounds, &cli.opts, &cfg),
        Action::Suboptimal => cmd_point(&problem, PointReport::Suboptimal, &cli.opts, &cfg),
        Action::Sweep => cmd_sweep(problem, &cli.opts, &cfg),
        Action::Simulate => cmd_simulate(&problem, &cli.opts, &cfg),
    }
}

fn resolve_problem(cli: &Cli) -> Result<(Problem, Action), CliError> {
    let o = &cli.opts;
    Ok(match cli.problem {
        ProblemCmd::Csr { action } => (Problem::Csr, action),
        ProblemCmd::Dsr { action } => {
            let buy_cost = o
                .buy_cost
                .ok_or_else(|| CliError::Usage("dsr needs --B".into()))?;
            if buy_cost < 2 {
                return Err(CliError::Usage(format!("--B must be at least 2, got {buy_cost}")));
            }
            (Problem::Dsr { buy_cost }, action)
        }
        ProblemCmd::Oms { action } => {
            let high = o
                .high
                .ok_or_else(|| CliError::Usage("oms needs --U".into()))?;
            (Problem::Oms(OmsProblem::new(o.low, high)?), action)
        }
    })
}

fn solver_config(o: &Opts) -> Result<SolverConfig, CliError> {
    let mut cfg = SolverConfig::default();
    if let Some(t) = o.tol {
        cfg.bisect_tol = t;
    }
    if let Some(g) = o.grid {
        cfg.grid_points = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_json(problem: &Problem, cfg: &SolverConfig) -> Value {
    let mut m = Map::new();
    m.insert("grid_points".into(), json!(cfg.grid_points));
    m.insert("bisect_tol".into(), json!(cfg.bisect_tol));
    m.insert("max_bisect_iters".into(), json!(cfg.max_bisect_iters));
    m.insert("adversary_grid_points".into(), json!(cfg.adversary_grid_points));
    match problem {
        Problem::Csr => {}
        Problem::Dsr { buy_cost } => {
            m.insert("B".into(), json!(buy_cost));
        }
        Problem::Oms(p) => {
            m.insert("L".into(), json!(p.low()));
            m.insert("U".into(), json!(p.high()));
        }
    }
    Value::Object(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PointReport {
    Solve,
    Bounds,
    Suboptimal,
}

fn cmd_point(problem: &Problem, kind: PointReport, o: &Opts, cfg: &SolverConfig) -> Result<(), CliError> {
    let delta = RiskLevel::new(o.delta)?;
    let value = |s: Series| series_value(problem, s, delta, cfg);

    let mut fields: Vec<(&str, Value)> = Vec::new();
    let mut strategy: Option<Vec<f64>> = None;
    match kind {
        PointReport::Solve => {
            let alpha = match problem {
                Problem::Dsr { buy_cost } => {
                    let (a, s) = dsr_solve_optimal(*buy_cost, delta, cfg)?;
                    strategy = Some(s.probs().to_vec());
                    a
                }
                _ => value(Series::Optimal)?,
            };
            fields.push(("alpha", json!(alpha)));
            fields.push(("lower", json!(value(Series::LowerBound)?)));
            fields.push(("upper", json!(value(Series::UpperBound)?)));
        }
        PointReport::Bounds => {
            fields.push(("lower", json!(value(Series::LowerBound)?)));
            fields.push(("upper", json!(value(Series::UpperBound)?)));
        }
        PointReport::Suboptimal => {
            fields.push(("suboptimal", json!(value(Series::Suboptimal)?)));
        }
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let stdout_path = Path::new("<stdout>");
    if o.json {
        let mut m = Map::new();
        m.insert("problem".into(), json!(problem.name()));
        m.insert("delta".into(), json!(delta.value()));
        m.insert("config".into(), config_json(problem, cfg));
        for (k, v) in fields {
            m.insert(k.into(), v);
        }
        if let Some(p) = strategy {
            m.insert("strategy".into(), json!(p));
        }
        let text = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON values are finite");
        writeln!(out, "{text}").map_err(io_error(stdout_path))?;
    } else {
        let mut text = format!("problem: {}\n", problem.name());
        match problem {
            Problem::Csr => {}
            Problem::Dsr { buy_cost } => text += &format!("B: {buy_cost}\n"),
            Problem::Oms(p) => text += &format!("L: {}\nU: {}\n", p.low(), p.high()),
        }
        text += &format!("delta: {}\n", delta.value());
        for (k, v) in &fields {
            let x = v.as_f64().expect("numeric field");
            text += &format!("{k}: {}\n", format_csv_value(x));
        }
        if let Some(p) = strategy {
            let cells: Vec<String> = p.iter().map(|&x| format_csv_value(x)).collect();
            text += &format!("strategy: {}\n", cells.join(" "));
        }
        out.write_all(text.as_bytes()).map_err(io_error(stdout_path))?;
    }
    Ok(())
}

fn parse_list<T>(raw: &str, what: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).ok_or_else(|| CliError::Usage(format!("bad {what} {s:?}"))))
        .collect()
}

fn default_deltas(problem: &Problem) -> Vec<f64> {
    let (steps, count) = match problem {
        Problem::Csr => (10, 9),
        Problem::Dsr { .. } => (10, 10),
        Problem::Oms(_) => (20, 20),
    };
    (0..=count).map(|k| k as f64 / steps as f64).collect()
}

fn parse_series(name: &str) -> Option<Series> {
    Series::ALL.into_iter().find(|s| s.column() == name)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_error(path))
}

fn cmd_sweep(problem: Problem, o: &Opts, cfg: &SolverConfig) -> Result<(), CliError> {
    let deltas = match &o.deltas {
        Some(raw) => parse_list(raw, "δ", |s| s.parse::<f64>().ok())?,
        None => default_deltas(&problem),
    };
    let outputs: BTreeSet<Series> = match &o.series {
        Some(raw) => parse_list(raw, "series", parse_series)?.into_iter().collect(),
        None => Series::ALL.into_iter().collect(),
    };
    let spec = SweepSpec::new(problem, deltas, outputs)?;
    let rows = run_sweep(&spec, cfg)?;

    match &o.out {
        Some(path) => {
            let mut w = create(path)?;
            write_sweep_csv(&rows, &mut w)
                .and_then(|_| w.flush())
                .map_err(io_error(path))?;
        }
        None => write_sweep_csv(&rows, io::stdout().lock()).map_err(io_error(Path::new("<stdout>")))?,
    }
    if let Some(path) = &o.svg {
        let title = match problem {
            Problem::Csr => "Continuous ski rental".to_string(),
            Problem::Dsr { buy_cost } => format!("Discrete ski rental, B = {buy_cost}"),
            Problem::Oms(p) => format!("One-max search, θ = {}", format_csv_value(p.fluctuation())),
        };
        std::fs::write(path, render_svg(&rows, &title)).map_err(io_error(path))?;
    }
    Ok(())
}

fn write_sim_csv(report: &SimReport, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "decision,empirical,analytic,gap")?;
    for (((d, e), a), g) in report
        .decisions
        .iter()
        .zip(&report.empirical_ratios)
        .zip(&report.analytic_ratios)
        .zip(report.gaps())
    {
        writeln!(
            out,
            "{},{},{},{}",
            format_csv_value(*d),
            format_csv_value(*e),
            format_csv_value(*a),
            format_csv_value(g)
        )?;
    }
    out.flush()
}

fn cmd_simulate(problem: &Problem, o: &Opts, cfg: &SolverConfig) -> Result<(), CliError> {
    let delta = RiskLevel::new(o.delta)?;
    let sim = SimConfig::new(o.samples, o.seed, o.points)?;
    let report = match problem {
        Problem::Csr => simulate_csr(&csr_solve_optimal(delta, cfg)?.1, delta, &sim)?,
        Problem::Dsr { buy_cost } => simulate_dsr(&dsr_solve_optimal(*buy_cost, delta, cfg)?.1, delta, &sim)?,
        Problem::Oms(p) => simulate_oms(&oms_solve_alpha(p, delta, cfg)?.1, p, delta, &sim)?,
    };
    match &o.out {
        Some(path) => write_sim_csv(&report, create(path)?).map_err(io_error(path))?,
        None => write_sim_csv(&report, io::stdout().lock()).map_err(io_error(Path::new("<stdout>")))?,
    }
    eprintln!(
        "max_abs_gap {} stderr {}",
        format_csv_value(report.max_abs_gap),
        format_csv_value(report.stderr_estimate)
    );
    if report.within(SIM_Z) {
        Ok(())
    } else {
        Err(CliError::Mismatch {
            gap: report.max_abs_gap,
            stderr: report.stderr_estimate,
            z: SIM_Z,
        })
    }
}
