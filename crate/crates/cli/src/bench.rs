//! Benchmark grid over generated instances and solvers.

use crate::error::{CliError, Result};
use crate::generate::{generate_instance, GenerateSpec};
use crate::instance_file::parse_norm_flag;
use polyellipse::{solve_decomposition, solve_direct, solve_lagrangean, Instance, SolverConfig};
use rayon::prelude::*;
use std::str::FromStr;
use std::time::Instant;

/// Relative radius difference still counted as agreement.
pub const AGREE_TOL: f64 = 1e-4;
pub const HEADER: [&str; 12] = [
    "n", "k", "d", "norm", "weighted", "method", "seed", "r", "time_ms", "iters", "smax", "agree",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Direct,
    Lagrangean,
    Decomp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Lagrangean => "lagrangean",
            Self::Decomp => "decomp",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "lagrangean" => Ok(Self::Lagrangean),
            "decomp" => Ok(Self::Decomp),
            _ => Err(CliError::field("--method", format!("unknown method `{s}`"))),
        }
    }
}

/// Result of one method on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub radius: f64,
    pub iterations: usize,
    /// Largest active set, for the decomposition.
    pub max_active: Option<usize>,
    pub converged: bool,
    pub elapsed_ms: f64,
}

pub fn run_method(inst: &Instance, method: Method, cfg: &SolverConfig) -> Result<MethodRun> {
    let start = Instant::now();
    let (solution, max_active) = match method {
        Method::Direct => (solve_direct(inst, cfg)?, None),
        Method::Lagrangean => (solve_lagrangean(inst, cfg)?.solution, None),
        Method::Decomp => {
            let out = solve_decomposition(inst, cfg)?;
            let smax = out.trace.max_active();
            let mut solution = out.solution;
            solution.iterations = out.trace.iterations();
            (solution, Some(smax))
        }
    };
    Ok(MethodRun {
        radius: solution.radius,
        iterations: solution.iterations,
        max_active,
        converged: solution.converged,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub d: Vec<usize>,
    /// Norm names as accepted by `--norm`.
    pub norms: Vec<String>,
    pub weighted: Vec<bool>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub norm: String,
    pub weighted: bool,
    pub method: Method,
    pub seed: u64,
    /// The run, or the reason it failed.
    pub outcome: std::result::Result<MethodRun, String>,
    /// Agreement with the first successful method on the same instance.
    pub agree: Option<bool>,
}

struct Cell {
    n: usize,
    k: usize,
    d: usize,
    norm: usize,
    weighted: bool,
    seed: u64,
}

/// Runs every method on every grid instance, in parallel across instances
/// on the current rayon pool. Rows come back in grid order regardless of
/// scheduling. Failures become rows rather than aborting the grid.
pub fn run_bench(grid: &BenchGrid) -> Result<Vec<BenchRow>> {
    let norms = grid
        .norms
        .iter()
        .map(|s| parse_norm_flag(s))
        .collect::<Result<Vec<_>>>()?;
    let cfg = SolverConfig::default().with_tol(grid.tol);
    cfg.validate()?;
    let mut cells = Vec::new();
    for &n in &grid.n {
        for &k in &grid.k {
            for &d in &grid.d {
                for norm in 0..norms.len() {
                    for &weighted in &grid.weighted {
                        for &seed in &grid.seeds {
                            cells.push(Cell { n, k, d, norm, weighted, seed });
                        }
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<BenchRow>> = cells
        .par_iter()
        .map(|c| {
            let spec = GenerateSpec {
                n: c.n,
                k: c.k,
                d: c.d,
                norm: norms[c.norm].clone(),
                seed: c.seed,
                weighted: c.weighted,
                candidates: 0,
            };
            let instance = generate_instance(&spec).map(|g| g.instance).map_err(|e| e.to_string());
            let outcomes: Vec<_> = grid
                .methods
                .iter()
                .map(|&m| match &instance {
                    Ok(inst) => run_method(inst, m, &cfg).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                })
                .collect();
            let reference = outcomes.iter().find_map(|o| o.as_ref().ok().map(|r| r.radius));
            grid.methods
                .iter()
                .zip(outcomes)
                .map(|(&method, outcome)| {
                    let agree = match (&outcome, reference) {
                        (Ok(run), Some(r0)) => Some((run.radius - r0).abs() <= AGREE_TOL * r0.abs().max(f64::MIN_POSITIVE)),
                        _ => None,
                    };
                    BenchRow {
                        n: c.n,
                        k: c.k,
                        d: c.d,
                        norm: grid.norms[c.norm].clone(),
                        weighted: c.weighted,
                        method,
                        seed: c.seed,
                        outcome,
                        agree,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// CSV report. Wall-clock times make output irreproducible, so `time_ms`
/// is left empty unless `timing` is set. Failed runs keep their grid
/// coordinates, leave the measurements empty and report `agree` as `error`.
pub fn to_csv(rows: &[BenchRow], timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Input(format!("writing CSV: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for row in rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let (r, time, iters, smax) = match &row.outcome {
            Ok(run) => (
                run.radius.to_string(),
                opt(timing.then(|| format!("{:.3}", run.elapsed_ms))),
                run.iterations.to_string(),
                opt(run.max_active.map(|s| s.to_string())),
            ),
            Err(_) => Default::default(),
        };
        let agree = match (row.agree, &row.outcome) {
            (_, Err(_)) => "error".to_string(),
            (Some(a), _) => a.to_string(),
            (None, _) => String::new(),
        };
        w.write_record([
            row.n.to_string(),
            row.k.to_string(),
            row.d.to_string(),
            row.norm.clone(),
            row.weighted.to_string(),
            row.method.as_str().to_string(),
            row.seed.to_string(),
            r,
            time,
            iters,
            smax,
            agree,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("writing CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}
