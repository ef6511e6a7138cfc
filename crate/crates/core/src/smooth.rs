//! Smoothing continuation with damped Newton steps.
//!
//! A [`SmoothProblem`] supplies an exact convex objective together with a
//! smooth upper approximation `f_μ` satisfying `f ≤ f_μ ≤ f + c·μ`. The driver
//! halves μ stage by stage, minimizing `f_μ` at each stage by Newton steps with
//! an Armijo backtracking line search (warm-started from the previous stage).
//!
//! After every stage the driver also produces a certified lower bound on
//! `min f`:
//!
//! ```text
//! min f ≥ min f_μ − c·μ ≥ f_μ(x) − ‖∇f_μ(x)‖₂·dist(x, argmin f_μ) − c·μ
//! ```
//!
//! where the distance is bounded through [`SmoothProblem::level_radius`]. The
//! solve stops once the best exact value is within the requested tolerance of
//! the best lower bound.

use nalgebra::{DMatrix, DVector};

pub(crate) trait SmoothProblem {
    fn dim(&self) -> usize;

    /// `f_μ(x)`; fills `grad` and, if given, `hess` (row-major, overwritten).
    fn smoothed(&self, x: &[f64], mu: f64, grad: &mut [f64], hess: Option<&mut [f64]>) -> f64;

    fn exact(&self, x: &[f64]) -> f64;

    /// The constant `c` in `f_μ − f ≤ c·μ`.
    fn smoothing_gap(&self) -> f64;

    fn anchor(&self) -> &[f64];

    /// Euclidean radius around [`Self::anchor`] containing every `x` with
    /// `f(x) ≤ value`.
    fn level_radius(&self, value: f64) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct Continuation {
    pub mu0: f64,
    pub mu_min: f64,
    pub shrink: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_newton: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Stop as soon as the certified lower bound exceeds this value.
    pub abort_above: Option<f64>,
}

impl Continuation {
    pub fn new(mu0: f64, mu_min: f64, tol_rel: f64, tol_abs: f64, max_newton: usize) -> Self {
        Self {
            mu0,
            mu_min,
            shrink: 0.5,
            tol_rel,
            tol_abs,
            max_newton,
            armijo: 1e-4,
            backtrack: 0.5,
            abort_above: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub lower_bound: f64,
    pub stages: usize,
    pub newton_steps: usize,
    pub converged: bool,
    pub aborted: bool,
    /// Smoothed objective per accepted Newton step, tagged by stage.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<(usize, f64)>,
}

pub(crate) fn minimize<P: SmoothProblem>(problem: &P, x0: &[f64], cfg: &Continuation) -> Outcome {
    minimize_impl(problem, x0, cfg, false)
}

#[cfg(test)]
pub(crate) fn minimize_traced<P: SmoothProblem>(problem: &P, x0: &[f64], cfg: &Continuation) -> Outcome {
    minimize_impl(problem, x0, cfg, true)
}

fn minimize_impl<P: SmoothProblem>(problem: &P, x0: &[f64], cfg: &Continuation, trace: bool) -> Outcome {
    let d = problem.dim();
    let c = problem.smoothing_gap();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut trial = vec![0.0; d];
    let mut trial_grad = vec![0.0; d];

    let mut best_x = x.clone();
    let mut best_val = problem.exact(&x);
    let mut best_lb = f64::NEG_INFINITY;
    let mut mu = cfg.mu0.max(cfg.mu_min);
    let mut stages = 0;
    let mut newton_steps = 0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut aborted = false;

    loop {
        stages += 1;
        let mut f = problem.smoothed(&x, mu, &mut grad, Some(&mut hess));
        for _ in 0..cfg.max_newton {
            let gnorm = norm2(&grad);
            let reach = dist(&x, problem.anchor()) + problem.level_radius(f);
            if gnorm * reach <= 0.25 * c * mu || gnorm == 0.0 {
                break;
            }
            let step = newton_direction(&grad, &hess, d);
            let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                for j in 0..d {
                    trial[j] = x[j] + t * step[j];
                }
                let ft = problem.smoothed(&trial, mu, &mut trial_grad, None);
                let sufficient = ft <= f + cfg.armijo * t * slope;
                let flat = (ft - f).abs() <= 8.0 * f64::EPSILON * f.abs().max(1.0)
                    && norm2(&trial_grad) < gnorm;
                if sufficient || flat {
                    accepted = Some(ft);
                    break;
                }
                t *= cfg.backtrack;
            }
            let Some(_) = accepted else { break };
            x.copy_from_slice(&trial);
            f = problem.smoothed(&x, mu, &mut grad, Some(&mut hess));
            newton_steps += 1;
            if trace {
                history.push((stages, f));
            }
        }

        let gnorm = norm2(&grad);
        let reach = dist(&x, problem.anchor()) + problem.level_radius(f);
        let lb = f - c * mu - gnorm * reach;
        best_lb = best_lb.max(lb);
        let val = problem.exact(&x);
        if val < best_val {
            best_val = val;
            best_x.copy_from_slice(&x);
        }
        let target = cfg.tol_abs.max(cfg.tol_rel * best_val.abs());
        if best_val - best_lb <= target {
            converged = true;
            break;
        }
        if let Some(limit) = cfg.abort_above {
            if best_lb > limit {
                aborted = true;
                break;
            }
        }
        if mu <= cfg.mu_min {
            break;
        }
        mu = (mu * cfg.shrink).max(cfg.mu_min);
    }

    Outcome {
        x: best_x,
        value: best_val,
        lower_bound: best_lb.min(best_val),
        stages,
        newton_steps,
        converged,
        aborted,
        history,
    }
}

fn newton_direction(grad: &[f64], hess: &[f64], d: usize) -> Vec<f64> {
    let scale = (0..d).map(|i| hess[i * d + i].abs()).fold(0.0, f64::max).max(1e-300);
    let g = DVector::from_column_slice(grad);
    let mut shift = 1e-14 * scale;
    for _ in 0..12 {
        let h = DMatrix::from_fn(d, d, |i, j| {
            let sym = 0.5 * (hess[i * d + j] + hess[j * d + i]);
            if i == j {
                sym + shift
            } else {
                sym
            }
        });
        if let Some(chol) = h.cholesky() {
            let p = -chol.solve(&g);
            if p.iter().all(|v| v.is_finite()) && p.dot(&g) < 0.0 {
                return p.as_slice().to_vec();
            }
        }
        shift *= 100.0;
    }
    grad.iter().map(|v| -v / scale).collect()
}

#[inline]
pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
