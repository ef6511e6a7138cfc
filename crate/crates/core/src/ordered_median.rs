//! Ordered-median polyellipsoids.
//!
//! The weighted distances `c_i = ω_i ‖a − u_i − x‖` are sorted non-increasingly
//! and combined with λ-weights, `Σ_i λ_i c_(i)`. With `λ` non-increasing and
//! nonnegative this is convex in `x`, and the covering problem
//! `min_x max_a` of it is solved by restarted subgradient descent.

use crate::config::SolverConfig;
use crate::error::{invalid, Error, Result};
use crate::minimax::{instance_scale, solve_direct};
use crate::model::{Instance, Solution, SUPPORT_REL_TOL};
use crate::points::euclid;
use itertools::Itertools;

/// Largest `k` accepted by [`om_rearrangement_check`].
pub const MAX_REARRANGEMENT_K: usize = 8;

/// Subgradient steps per fixed step length.
const EPOCH_LEN: usize = 200;

/// λ-weights of an ordered-median function, non-increasing and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpec {
    lambda: Vec<f64>,
}

impl OrderedSpec {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(invalid("lambda is empty"));
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(invalid(format!("lambda entries must be finite and nonnegative, found {bad}")));
        }
        if let Some(i) = (1..lambda.len()).find(|&i| lambda[i] > lambda[i - 1]) {
            return Err(invalid(format!(
                "lambda must be non-increasing, but entry {i} ({}) exceeds entry {} ({})",
                lambda[i],
                i - 1,
                lambda[i - 1]
            )));
        }
        Ok(Self { lambda })
    }

    /// All-ones weights: the plain sum of distances.
    pub fn sum(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k])
    }

    /// `(1, 0, …, 0)`: the largest weighted distance.
    pub fn max(k: usize) -> Result<Self> {
        let mut lambda = vec![0.0; k];
        if let Some(first) = lambda.first_mut() {
            *first = 1.0;
        }
        Self::new(lambda)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// `Σ_i λ_i c_(i)` with `c` sorted non-increasingly.
    pub fn apply(&self, c: &[f64]) -> f64 {
        let mut sorted = c.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.iter().zip(&self.lambda).map(|(c, l)| c * l).sum()
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.k() {
            return Err(Error::DimensionMismatch {
                expected: inst.k(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Ordered-median value at translation `x` for demand point `a_index`.
pub fn om_value(inst: &Instance, spec: &OrderedSpec, x: &[f64], a_index: usize) -> Result<f64> {
    check_point(inst, spec, x, a_index)?;
    Ok(value_at(inst, spec, inst.demand().row(a_index), x))
}

/// A subgradient in `x` of [`om_value`].
pub fn om_subgradient(inst: &Instance, spec: &OrderedSpec, x: &[f64], a_index: usize) -> Result<Vec<f64>> {
    check_point(inst, spec, x, a_index)?;
    let mut g = vec![0.0; inst.dim()];
    subgradient_at(inst, spec, inst.demand().row(a_index), x, &mut g);
    Ok(g)
}

/// `max_a` of the ordered-median value and the smallest index attaining it.
pub fn om_objective(inst: &Instance, spec: &OrderedSpec, x: &[f64]) -> Result<(f64, usize)> {
    check_point(inst, spec, x, 0)?;
    Ok(objective(inst, spec, x))
}

/// Minimum covering radius under the ordered-median gauge.
///
/// Starts from the plain covering solution, then runs normalized subgradient
/// steps in epochs of fixed length, halving the step and restarting from the
/// best point after each epoch. The residual is certified by
/// `Σ_i λ_i c_(i) ≥ (Σλ / k) Σ_i c_i`, which bounds the optimum below by a
/// multiple of the plain covering lower bound.
pub fn solve_om(inst: &Instance, spec: &OrderedSpec, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    spec.check(inst)?;
    let plain = solve_direct(inst, cfg)?;
    let scale = instance_scale(inst).max(f64::MIN_POSITIVE);
    let mut best_x = plain.x.clone();
    let (mut best, mut best_arg) = objective(inst, spec, &best_x);
    let mut step = 0.1 * scale;
    let floor = 1e-3 * cfg.tol_r * scale;
    let mut g = vec![0.0; inst.dim()];
    let mut x = best_x.clone();
    let mut iterations = 0;
    let mut epochs = 0;
    while step > floor && epochs < cfg.max_outer {
        epochs += 1;
        x.copy_from_slice(&best_x);
        let mut arg = best_arg;
        for _ in 0..EPOCH_LEN {
            subgradient_at(inst, spec, inst.demand().row(arg), &x, &mut g);
            let len = euclid(&g);
            if len == 0.0 {
                break;
            }
            for (xj, gj) in x.iter_mut().zip(&g) {
                *xj -= step * gj / len;
            }
            iterations += 1;
            let (v, a) = objective(inst, spec, &x);
            arg = a;
            if v < best {
                best = v;
                best_arg = a;
                best_x.copy_from_slice(&x);
            }
        }
        step *= 0.5;
    }
    let mass: f64 = spec.lambda.iter().sum::<f64>() / inst.k() as f64;
    let lower = mass * plain.lower_bound();
    let cut = best * (1.0 - SUPPORT_REL_TOL);
    let support = inst
        .demand()
        .rows()
        .enumerate()
        .filter(|(_, a)| value_at(inst, spec, a, &best_x) >= cut)
        .map(|(i, _)| i)
        .collect();
    Ok(Solution {
        x: best_x,
        radius: best,
        support,
        iterations,
        inner_solves: plain.inner_solves,
        converged: step <= floor && plain.converged,
        residual: (best - lower).max(0.0),
    })
}

/// True iff sorting `c` non-increasingly maximizes `Σ_i λ_i c_π(i)` over all
/// permutations `π`, checked exhaustively.
pub fn om_rearrangement_check(c: &[f64], spec: &OrderedSpec) -> Result<bool> {
    if c.len() != spec.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.len(),
            got: c.len(),
        });
    }
    if c.len() > MAX_REARRANGEMENT_K {
        return Err(Error::Unsupported(format!(
            "exhaustive check limited to k ≤ {MAX_REARRANGEMENT_K}"
        )));
    }
    let sorted = spec.apply(c);
    let best = (0..c.len())
        .permutations(c.len())
        .map(|p| p.iter().zip(&spec.lambda).map(|(&i, l)| c[i] * l).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * c.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    Ok((sorted - best).abs() <= slack)
}

fn check_point(inst: &Instance, spec: &OrderedSpec, x: &[f64], a_index: usize) -> Result<()> {
    spec.check(inst)?;
    if a_index >= inst.n() {
        return Err(Error::IndexOutOfRange {
            index: a_index,
            len: inst.n(),
        });
    }
    if x.len() != inst.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Weighted distances and the order sorting them non-increasingly, ties by
/// focus index.
fn sorted_distances(inst: &Instance, a: &[f64], x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let d = inst.dim();
    let mut v = vec![0.0; d];
    let c: Vec<f64> = inst
        .foci()
        .rows()
        .zip(inst.weights())
        .map(|(u, w)| {
            for j in 0..d {
                v[j] = a[j] - u[j] - x[j];
            }
            w * inst.norm().eval(&v)
        })
        .collect();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].total_cmp(&c[i]).then(i.cmp(&j)));
    (c, order)
}

fn value_at(inst: &Instance, spec: &OrderedSpec, a: &[f64], x: &[f64]) -> f64 {
    let (c, order) = sorted_distances(inst, a, x);
    order.iter().zip(&spec.lambda).map(|(&i, l)| l * c[i]).sum()
}

fn subgradient_at(inst: &Instance, spec: &OrderedSpec, a: &[f64], x: &[f64], g: &mut [f64]) {
    let d = inst.dim();
    let (_, order) = sorted_distances(inst, a, x);
    let mut v = vec![0.0; d];
    let mut gi = vec![0.0; d];
    g.iter_mut().for_each(|x| *x = 0.0);
    for (&i, l) in order.iter().zip(&spec.lambda) {
        let u = inst.foci().row(i);
        for j in 0..d {
            v[j] = a[j] - u[j] - x[j];
        }
        inst.norm().subgradient_into(&v, &mut gi);
        let scale = l * inst.weights()[i];
        for j in 0..d {
            g[j] -= scale * gi[j];
        }
    }
}

fn objective(inst: &Instance, spec: &OrderedSpec, x: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, a) in inst.demand().rows().enumerate() {
        let v = value_at(inst, spec, a, x);
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}
