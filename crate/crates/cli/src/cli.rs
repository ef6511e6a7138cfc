//! Command-line surface.

use crate::bench::{run_bench, to_csv, BenchGrid, Method};
use crate::error::{CliError, Result};
use crate::generate::{generate_instance, GenerateSpec};
use crate::instance_file::{parse_norm_flag, read_points_csv, InstanceFile};
use crate::plot::plot_levelset;
use polyellipse::{
    solve_1d, solve_decomposition, solve_direct, solve_foci_selection, solve_lagrangean, solve_om, Exclusion, Instance,
    OrderedSpec, SelectionProblem, Solution, SolverConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "polyellipse", version, about = "Minimum-radius enclosing polyellipsoids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded random instance.
    Generate(GenerateArgs),
    /// Solve the covering problem for an instance.
    Solve(SolveArgs),
    /// Exact solver for one-dimensional instances.
    Solve1d(Solve1dArgs),
    /// Choose k foci from candidate points.
    SelectFoci(SelectArgs),
    /// Covering with an ordered-median gauge.
    Om(OmArgs),
    /// Run solvers over a grid of generated instances and write CSV.
    Bench(BenchArgs),
    /// Draw the covering polyellipse of a planar instance as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative radius tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the instance norm (l1, l2, linf, l<p>, hex).
    #[arg(long)]
    pub norm: Option<String>,
    /// Cap on dual, decomposition or subgradient iterations.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value = "l2")]
    pub norm: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random foci weights instead of 1/k.
    #[arg(long)]
    pub weighted: bool,
    /// Number of additional candidate foci to include.
    #[arg(long, default_value_t = 0)]
    pub candidates: usize,
    /// Ordered-median weights to store with the instance.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolveMethod {
    Direct,
    Lagrangean,
    Decomp,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "direct")]
    pub method: SolveMethod,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write an SVG of the covering (d = 2 only).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Write the iteration trace as CSV (decomp and lagrangean).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Grid cells per side for --plot.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct Solve1dArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExclusionArg {
    /// Exclude evaluated foci sets only.
    Subsets,
    /// Exclude every candidate used so far.
    Foci,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub instance: PathBuf,
    /// CSV of candidate points; defaults to the instance's `candidates`.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "subsets")]
    pub exclusion: ExclusionArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct OmArgs {
    pub instance: PathBuf,
    /// Non-increasing λ-weights; defaults to the instance's `lambda`.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    Unweighted,
    Weighted,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "l2")]
    pub norm: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "unweighted")]
    pub weights: Vec<Weighting>,
    /// First seed; runs use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per grid cell.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, value_delimiter = ',', default_value = "direct,decomp")]
    pub method: Vec<String>,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fill the time_ms column (output is then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub instance: PathBuf,
    /// SVG file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Translation to draw; solved for when omitted.
    #[arg(long, value_delimiter = ',', requires = "r")]
    pub x: Option<Vec<f64>>,
    /// Level to draw; the optimal radius when omitted.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Solve1d(a) => solve1d(a),
        Command::SelectFoci(a) => select_foci(a),
        Command::Om(a) => om(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(a),
    }
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    text
}

fn config(args: &SolverArgs) -> Result<SolverConfig> {
    let mut cfg = SolverConfig {
        seed: args.seed,
        ..SolverConfig::default().with_tol(args.tol)
    };
    if let Some(cap) = args.max_iter {
        cfg.max_outer = cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path, norm: Option<&str>) -> Result<InstanceFile> {
    let mut file = InstanceFile::load(path)?;
    if let Some(name) = norm {
        file.norm = parse_norm_flag(name)?;
        file.norm.check_dim(file.dim)?;
    }
    Ok(file)
}

fn solution_json(method: &str, s: &Solution) -> Value {
    json!({
        "method": method,
        "x": s.x,
        "r": s.radius,
        "support": s.support,
        "iterations": s.iterations,
        "inner_solves": s.inner_solves,
        "converged": s.converged,
        "residual": s.residual,
        "lower_bound": s.lower_bound(),
    })
}

/// Prints the result, then reports non-convergence through the exit code.
fn finish(output: &Output, value: &Value, converged: bool, what: &str) -> Result<()> {
    emit(output, &json_text(value))?;
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{what} stopped at its iteration cap")))
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = GenerateSpec {
        n: a.n,
        k: a.k,
        d: a.d,
        norm: parse_norm_flag(&a.norm)?,
        seed: a.seed,
        weighted: a.weighted,
        candidates: a.candidates,
    };
    let generated = generate_instance(&spec)?;
    let mut file = InstanceFile::from_instance(&generated.instance);
    file.candidates = generated.candidates;
    if let Some(l) = a.lambda {
        if l.len() != a.k {
            return Err(CliError::field("--lambda", format!("{} weights for {} foci", l.len(), a.k)));
        }
        OrderedSpec::new(l.clone()).map_err(|e| CliError::field("--lambda", e.to_string()))?;
        file.lambda = Some(l);
    }
    emit(&a.output, &file.to_json())
}

fn solve(a: SolveArgs) -> Result<()> {
    let file = load(&a.instance, a.solver.norm.as_deref())?;
    let inst = file.instance()?;
    let cfg = config(&a.solver)?;
    if a.plot.is_some() && inst.dim() != 2 {
        return Err(CliError::field("--plot", "plots need d = 2"));
    }
    let (mut value, solution, trace) = match a.method {
        SolveMethod::Direct => {
            if a.trace.is_some() {
                return Err(CliError::field("--trace", "needs --method decomp or lagrangean"));
            }
            let s = solve_direct(&inst, &cfg)?;
            (solution_json("direct", &s), s, None)
        }
        SolveMethod::Decomp => {
            let out = solve_decomposition(&inst, &cfg)?;
            let mut s = out.solution;
            s.iterations = out.trace.iterations();
            let mut v = solution_json("decomp", &s);
            v["max_active"] = json!(out.trace.max_active());
            (v, s, Some(out.trace.to_csv()))
        }
        SolveMethod::Lagrangean => {
            let out = solve_lagrangean(&inst, &cfg)?;
            let mut v = solution_json("lagrangean", &out.solution);
            v["dual_value"] = json!(out.certificate.dual_value);
            v["alpha"] = json!(out.certificate.alpha);
            v["gap"] = json!(out.gap);
            let mut csv = String::from("it,dual,primal,best,step\n");
            for (i, it) in out.trace.iter().enumerate() {
                let _ = writeln!(csv, "{i},{},{},{},{}", it.dual_value, it.primal_value, it.best_primal, it.step);
            }
            (v, out.solution, Some(csv))
        }
    };
    if let (Some(path), Some(csv)) = (&a.trace, &trace) {
        write_file(path, csv)?;
    }
    if let Some(path) = &a.plot {
        plot_levelset(&inst, &solution.x, solution.radius, path, a.resolution)?;
        value["plot"] = json!(path);
    }
    finish(&a.output, &value, solution.converged, "solver")
}

fn solve1d(a: Solve1dArgs) -> Result<()> {
    let file = load(&a.instance, None)?;
    if file.dim != 1 {
        return Err(CliError::field("dim", format!("solve1d needs dim = 1, got {}", file.dim)));
    }
    let inst = file.instance()?;
    let s = solve_1d(inst.demand().as_flat(), inst.foci().as_flat(), inst.weights())?;
    let branch = format!("{:?}", s.branch).to_lowercase();
    emit(&a.output, &json_text(&json!({ "x": s.x, "r": s.r, "branch": branch })))
}

fn select_foci(a: SelectArgs) -> Result<()> {
    let file = load(&a.instance, a.solver.norm.as_deref())?;
    let candidates = match (&a.candidates, &file.candidates) {
        (Some(path), _) => read_points_csv(path, file.dim)?,
        (None, Some(c)) => c.clone(),
        (None, None) => return Err(CliError::field("candidates", "missing; pass --candidates or add them to the instance")),
    };
    if a.k == 0 {
        return Err(CliError::field("--k", "must be positive"));
    }
    let weights = match &file.foci_weights {
        Some(w) if w.len() == a.k => w.clone(),
        _ => vec![1.0 / a.k as f64; a.k],
    };
    let problem = SelectionProblem::new(file.demand.clone(), candidates, a.k, weights, file.norm.clone())?;
    let rule = match a.exclusion {
        ExclusionArg::Subsets => Exclusion::Subsets,
        ExclusionArg::Foci => Exclusion::Foci,
    };
    let out = solve_foci_selection(&problem, rule, &config(&a.solver)?)?;
    let value = json!({
        "foci": out.foci,
        "points": problem.candidates.select(&out.foci).to_rows(),
        "x": out.solution.x,
        "r": out.solution.radius,
        "upper": out.state.upper,
        "lower": out.state.lower,
        "iterations": out.state.iterations,
        "evaluated": out.state.evaluated,
        "converged": out.solution.converged,
    });
    finish(&a.output, &value, out.solution.converged, "foci selection")
}

fn om(a: OmArgs) -> Result<()> {
    let file = load(&a.instance, a.solver.norm.as_deref())?;
    let inst: Instance = file.instance()?;
    let spec = match a.lambda {
        Some(l) => OrderedSpec::new(l).map_err(|e| CliError::field("--lambda", e.to_string()))?,
        None => file
            .ordered_spec()?
            .ok_or_else(|| CliError::field("lambda", "missing; pass --lambda or add it to the instance"))?,
    };
    if spec.len() != inst.k() {
        return Err(CliError::field("lambda", format!("{} weights for {} foci", spec.len(), inst.k())));
    }
    let s = solve_om(&inst, &spec, &config(&a.solver)?)?;
    let mut value = solution_json("om", &s);
    value["lambda"] = json!(spec.lambda());
    finish(&a.output, &value, s.converged, "ordered-median solver")
}

fn bench(a: BenchArgs) -> Result<()> {
    let methods = a.method.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    let grid = BenchGrid {
        n: a.n,
        k: a.k,
        d: a.d,
        norms: a.norm,
        weighted: a.weights.iter().map(|w| *w == Weighting::Weighted).collect(),
        seeds: (a.seed..a.seed + a.runs).collect(),
        methods,
        tol: a.tol,
    };
    let rows = match a.jobs {
        Some(0) => return Err(CliError::field("--jobs", "must be positive")),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(|| run_bench(&grid))?,
        None => run_bench(&grid)?,
    };
    emit(&a.output, &to_csv(&rows, a.timing)?)
}

fn plot(a: PlotArgs) -> Result<()> {
    let file = load(&a.instance, None)?;
    let inst = file.instance()?;
    if inst.dim() != 2 {
        return Err(CliError::field("dim", "plots need d = 2"));
    }
    let (x, r) = match (a.x, a.r) {
        (Some(x), Some(r)) => (x, r),
        (None, Some(r)) => (solve_direct(&inst, &SolverConfig::default())?.x, r),
        _ => {
            let s = solve_direct(&inst, &SolverConfig::default())?;
            (s.x, s.radius)
        }
    };
    if x.len() != 2 {
        return Err(CliError::field("--x", "needs two coordinates"));
    }
    plot_levelset(&inst, &x, r, &a.out, a.resolution)?;
    Ok(())
}
