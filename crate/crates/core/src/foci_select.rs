//! Covering with foci chosen from a candidate set.
//!
//! The exact restricted problem (best `k` candidates for a handful of demand
//! points) is solved by enumerating `k`-subsets with incumbent pruning. The
//! outer loop alternates between that restricted problem, which yields a
//! lower bound and a foci set, and a full decomposition solve for that foci
//! set, which yields an upper bound and the next handful of demand points.

use crate::config::SolverConfig;
use crate::decomp::{solve_decomposition, DecompOutcome};
use crate::error::{invalid, Error, Result};
use crate::minimax::{solve_active, DirectOptions};
use crate::model::{normalize_weights, Instance, Solution};
use crate::norms::NormSpec;
use crate::points::PointSet;
use itertools::Itertools;
use std::collections::HashMap;

/// What an evaluated foci set rules out in later restricted problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exclusion {
    /// Only that exact subset. Keeps the loop exact.
    #[default]
    Subsets,
    /// Every subset sharing a candidate with it.
    Foci,
}

/// Progress of the selection loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    /// Foci sets already evaluated, as sorted candidate indices.
    pub evaluated: Vec<Vec<usize>>,
    pub upper: f64,
    pub lower: f64,
    pub best_foci: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Chosen candidate indices, ascending.
    pub foci: Vec<usize>,
    pub solution: Solution,
    pub state: SelectionState,
}

/// Problem data shared by the restricted and full solves. Weights are
/// attached to the selected candidates in ascending index order.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    pub demand: PointSet,
    pub candidates: PointSet,
    pub k: usize,
    pub weights: Vec<f64>,
    pub norm: NormSpec,
}

impl SelectionProblem {
    pub fn new(demand: PointSet, candidates: PointSet, k: usize, weights: Vec<f64>, norm: NormSpec) -> Result<Self> {
        if demand.is_empty() {
            return Err(invalid("demand set is empty"));
        }
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if candidates.dim() != demand.dim() {
            return Err(Error::DimensionMismatch {
                expected: demand.dim(),
                got: candidates.dim(),
            });
        }
        if candidates.len() < k {
            return Err(Error::Infeasible(format!(
                "{} candidates cannot supply {k} foci",
                candidates.len()
            )));
        }
        norm.check_dim(demand.dim())?;
        let weights = normalize_weights(weights, k)?;
        Ok(Self {
            demand,
            candidates,
            k,
            weights,
            norm,
        })
    }

    /// Same problem with all foci weighted `1/k`.
    pub fn unweighted(demand: PointSet, candidates: PointSet, k: usize, norm: NormSpec) -> Result<Self> {
        Self::new(demand, candidates, k, vec![1.0 / k.max(1) as f64; k], norm)
    }

    /// The covering instance for a given foci set over the whole demand.
    pub fn instance(&self, foci: &[usize]) -> Result<Instance> {
        Instance::new(
            self.demand.clone(),
            self.candidates.select(foci),
            self.weights.clone(),
            self.norm.clone(),
        )
    }
}

/// Best `k`-subset of the candidates for the demand points in `subset`,
/// skipping subsets ruled out by `evaluated` under `rule`.
///
/// Returns `None` when every subset is ruled out. Ties go to the
/// lexicographically smallest index set.
pub fn solve_restricted(
    problem: &SelectionProblem,
    subset: &[usize],
    evaluated: &[Vec<usize>],
    rule: Exclusion,
    cfg: &SolverConfig,
) -> Result<Option<(Vec<usize>, f64)>> {
    cfg.validate()?;
    if subset.is_empty() {
        return Err(invalid("restricted problem needs at least one demand point"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= problem.demand.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: problem.demand.len(),
        });
    }
    let demand = problem.demand.select(subset);
    let all: Vec<usize> = (0..demand.len()).collect();
    let used: Vec<usize> = evaluated.iter().flatten().copied().unique().collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for foci in (0..problem.candidates.len()).combinations(problem.k) {
        let excluded = match rule {
            Exclusion::Subsets => evaluated.contains(&foci),
            Exclusion::Foci => foci.iter().any(|f| used.contains(f)),
        };
        if excluded {
            continue;
        }
        let inst = Instance::new(
            demand.clone(),
            problem.candidates.select(&foci),
            problem.weights.clone(),
            problem.norm.clone(),
        )?;
        let opts = DirectOptions {
            abort_above: best.as_ref().map(|b| b.1),
            ..DirectOptions::default()
        };
        let out = solve_active(&inst, &all, cfg, &opts);
        if out.aborted {
            continue;
        }
        let r = out.solution.radius;
        if best.as_ref().is_none_or(|b| r < b.1 * (1.0 - 1e-9)) {
            best = Some((foci, r));
        }
    }
    Ok(best)
}

/// Alternates restricted solves (lower bounds) and full decompositions
/// (upper bounds) until the bounds meet or no foci set is left.
pub fn solve_foci_selection(problem: &SelectionProblem, rule: Exclusion, cfg: &SolverConfig) -> Result<SelectionOutcome> {
    cfg.validate()?;
    let mut state = SelectionState {
        evaluated: Vec::new(),
        upper: f64::INFINITY,
        lower: 0.0,
        best_foci: Vec::new(),
        iterations: 0,
    };
    let mut best_solution: Option<Solution> = None;
    let mut solved: HashMap<Vec<usize>, DecompOutcome> = HashMap::new();
    let mut decompose = |foci: &[usize]| -> Result<DecompOutcome> {
        if let Some(hit) = solved.get(foci) {
            return Ok(hit.clone());
        }
        let out = solve_decomposition(&problem.instance(foci)?, cfg)?;
        solved.insert(foci.to_vec(), out.clone());
        Ok(out)
    };
    // The demand points defining the covering for the first candidates seed
    // the restricted problems.
    let first: Vec<usize> = (0..problem.k).collect();
    let mut active = final_active(&decompose(&first)?);
    while state.upper > state.lower * (1.0 + 1e-6) {
        let Some((foci, r)) = solve_restricted(problem, &active, &state.evaluated, rule, cfg)? else {
            break;
        };
        let full = decompose(&foci)?;
        let next = final_active(&full);
        state.iterations += 1;
        if full.solution.radius < state.upper {
            state.upper = full.solution.radius;
            state.best_foci = foci.clone();
            best_solution = Some(full.solution);
        }
        // Either the optimum was evaluated already (then `upper` is optimal)
        // or it is a candidate of this restricted problem (then it is ≥ r).
        state.lower = state.lower.max(r.min(state.upper));
        state.evaluated.push(foci);
        active = next;
    }
    let solution = best_solution.ok_or_else(|| Error::Infeasible("no foci set could be evaluated".into()))?;
    Ok(SelectionOutcome {
        foci: state.best_foci.clone(),
        solution,
        state,
    })
}

fn final_active(out: &DecompOutcome) -> Vec<usize> {
    out.trace.steps.last().map(|s| s.active.clone()).unwrap_or_default()
}
