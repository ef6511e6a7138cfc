//! Active-set decomposition for the covering problem.
//!
//! Only a small subset of the demand points is ever solved for. After each
//! subproblem the farthest demand point is located; if it is not covered the
//! subset is updated by exchanging one point for it (keeping `d + 1` points)
//! or, when no exchange raises the radius, by adding it.

use crate::config::{DecompMode, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::minimax::{solve_active, DirectOptions};
use crate::model::{Instance, Solution, SUPPORT_REL_TOL};
use rayon::prelude::*;
use std::fmt::Write as _;

/// One subproblem of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompStep {
    /// Active demand indices `S^k`.
    pub active: Vec<usize>,
    /// Subproblem radius `r^k`.
    pub radius: f64,
    /// Largest coverage value `ρ^k` over all demand points at the subproblem
    /// optimum.
    pub farthest: f64,
    /// Index attaining `ρ^k`; it enters the next active set.
    pub entering: Option<usize>,
    /// Index removed by the exchange, `None` when the set grew.
    pub leaving: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecompTrace {
    pub steps: Vec<DecompStep>,
}

impl DecompTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// Largest active set over the run.
    pub fn max_active(&self) -> usize {
        self.steps.iter().map(|s| s.active.len()).max().unwrap_or(0)
    }

    /// CSV with columns `it,size,r,rho,enter,leave`; missing indices are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("it,size,r,rho,enter,leave\n");
        let opt = |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_default();
        for (it, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{it},{},{},{},{},{}",
                s.active.len(),
                s.radius,
                s.farthest,
                opt(s.entering),
                opt(s.leaving)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompOutcome {
    pub solution: Solution,
    pub trace: DecompTrace,
}

/// Covering problem restricted to the demand points in `subset`.
///
/// The returned support refers to indices of `inst`.
pub fn solve_subset(inst: &Instance, subset: &[usize], cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    check_subset(inst, subset)?;
    Ok(subset_solve(inst, subset, cfg, None))
}

fn check_subset(inst: &Instance, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(invalid("subset must be nonempty"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= inst.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: inst.n(),
        });
    }
    Ok(())
}

fn subset_solve(inst: &Instance, subset: &[usize], cfg: &SolverConfig, start: Option<&[f64]>) -> Solution {
    let opts = DirectOptions {
        start,
        ..DirectOptions::default()
    };
    solve_active(inst, subset, cfg, &opts).solution
}

/// Decomposition started from the default spread-out active set.
pub fn solve_decomposition(inst: &Instance, cfg: &SolverConfig) -> Result<DecompOutcome> {
    cfg.validate()?;
    let pool = inst.demand().distinct_indices();
    let initial = initial_active(inst, &pool);
    run(inst, &pool, initial, cfg)
}

/// Decomposition started from a caller-chosen active set.
pub fn solve_decomposition_from(inst: &Instance, initial: &[usize], cfg: &SolverConfig) -> Result<DecompOutcome> {
    cfg.validate()?;
    check_subset(inst, initial)?;
    let pool = inst.demand().distinct_indices();
    let mut active: Vec<usize> = Vec::new();
    for &i in initial {
        let rep = representative(inst, &pool, i);
        if !active.contains(&rep) {
            active.push(rep);
        }
    }
    run(inst, &pool, active, cfg)
}

fn representative(inst: &Instance, pool: &[usize], i: usize) -> usize {
    let row = inst.demand().row(i);
    *pool
        .iter()
        .find(|&&j| inst.demand().row(j) == row)
        .expect("every row has a representative")
}

/// The point extremal along the first coordinate, or every point when there
/// are at most `d + 1` of them. The run then grows the set by farthest-point
/// insertion until it has `d + 1` members.
fn initial_active(inst: &Instance, pool: &[usize]) -> Vec<usize> {
    if pool.len() <= inst.dim() + 1 {
        return pool.to_vec();
    }
    let first = |i: usize| inst.demand().row(i)[0];
    vec![*pool.iter().min_by(|&&a, &&b| first(a).total_cmp(&first(b))).unwrap()]
}

fn farthest(inst: &Instance, pool: &[usize], x: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, pool[0]);
    for &i in pool {
        let v = inst.phi_at(inst.demand().row(i), x);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

fn run(inst: &Instance, pool: &[usize], mut active: Vec<usize>, cfg: &SolverConfig) -> Result<DecompOutcome> {
    let exchange_only = match cfg.decomp_mode {
        DecompMode::Strict => true,
        DecompMode::Growing | DecompMode::Auto => false,
    };
    let mut trace = DecompTrace::default();
    let mut current = subset_solve(inst, &active, cfg, None);
    let mut inner_solves = current.inner_solves;
    let mut all_converged = current.converged;
    let mut best_lower = current.lower_bound();
    let mut finished = false;

    while trace.steps.len() < cfg.max_outer {
        let (rho, far) = farthest(inst, pool, &current.x);
        let covered = rho <= current.radius * (1.0 + cfg.tol_r) || active.contains(&far);
        let mut step = DecompStep {
            active: active.clone(),
            radius: current.radius,
            farthest: rho,
            entering: None,
            leaving: None,
        };
        if covered {
            trace.steps.push(step);
            finished = true;
            break;
        }
        step.entering = Some(far);

        let (next_active, next, leaving) = if active.len() < inst.dim() + 1 {
            let mut grown = active.clone();
            grown.push(far);
            let sol = subset_solve(inst, &grown, cfg, Some(&current.x));
            (grown, sol, None)
        } else {
            let candidates: Vec<(usize, Vec<usize>)> = active
                .iter()
                .map(|&b| {
                    let set: Vec<usize> = active
                        .iter()
                        .map(|&i| if i == b { far } else { i })
                        .collect();
                    (b, set)
                })
                .collect();
            let solve = |(b, set): &(usize, Vec<usize>)| (*b, subset_solve(inst, set, cfg, Some(&current.x)));
            let solved: Vec<(usize, Solution)> = if cfg.parallel {
                candidates.par_iter().map(solve).collect()
            } else {
                candidates.iter().map(solve).collect()
            };
            inner_solves += solved.iter().map(|(_, s)| s.inner_solves).sum::<usize>();
            all_converged &= solved.iter().all(|(_, s)| s.converged);
            // Largest radius wins; ties go to the earliest slot.
            let (slot, (b, best)) = solved
                .into_iter()
                .enumerate()
                .reduce(|acc, cand| if cand.1 .1.radius > acc.1 .1.radius { cand } else { acc })
                .expect("active set is nonempty");
            if exchange_only || best.radius > current.radius * (1.0 + cfg.tol_r) {
                (candidates[slot].1.clone(), best, Some(b))
            } else {
                let mut grown = active.clone();
                grown.push(far);
                let sol = subset_solve(inst, &grown, cfg, Some(&current.x));
                (grown, sol, None)
            }
        };
        step.leaving = leaving;
        trace.steps.push(step);
        inner_solves += next.inner_solves;
        all_converged &= next.converged;
        best_lower = best_lower.max(next.lower_bound());
        active = next_active;
        current = next;
    }

    let (radius, _) = farthest(inst, pool, &current.x);
    let cut = radius * (1.0 - SUPPORT_REL_TOL);
    let mut support: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| inst.phi_at(inst.demand().row(i), &current.x) >= cut)
        .collect();
    support.sort_unstable();
    let residual = (radius - best_lower).max(0.0);
    Ok(DecompOutcome {
        solution: Solution {
            x: current.x,
            radius,
            support,
            iterations: trace.steps.len(),
            inner_solves,
            converged: finished && all_converged,
            residual,
        },
        trace,
    })
}
