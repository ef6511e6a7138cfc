//! Whole-instance covering solvers.
//!
//! [`solve_direct`] minimizes a smoothed maximum of smoothed coverage values,
//! `μ·log Σ_a exp(φ_μ(x; a)/μ)`, by continuation. [`solve_lagrangean`] works
//! on the dual side: it ascends `F(α) = min_x Σ_a α_a φ(x; a)` over the
//! demand simplex, each evaluation being one weighted Weber problem.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{DualCertificate, Instance, Solution};
use crate::points::PointSet;
use crate::smooth::{self, Continuation, SmoothProblem};
use crate::weber::{weber_solve_from, WeberConfig};
use nalgebra::{DMatrix, DVector};

/// Smoothed minimax over a subset of the demand points.
pub(crate) struct MinimaxProblem<'a> {
    inst: &'a Instance,
    active: Vec<usize>,
    anchor: Vec<f64>,
    gap_const: f64,
    kappa: f64,
}

impl<'a> MinimaxProblem<'a> {
    pub(crate) fn new(inst: &'a Instance, active: Vec<usize>) -> Self {
        let d = inst.dim();
        let mean = inst.foci_mean();
        let first = inst.demand().row(active[0]);
        let anchor = first.iter().zip(&mean).map(|(a, u)| a - u).collect();
        Self {
            gap_const: inst.norm().smoothing_bound(d) + (active.len() as f64).ln(),
            kappa: inst.norm().euclid_ratio(d),
            inst,
            active,
            anchor,
        }
    }

    /// Smoothed φ of one demand point; gradient/Hessian with respect to x are
    /// accumulated with factor `scale`.
    fn smoothed_phi(
        &self,
        a: &[f64],
        x: &[f64],
        mu: f64,
        scale: f64,
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
        v: &mut [f64],
    ) -> f64 {
        let d = x.len();
        let mut total = 0.0;
        let mut hess = hess;
        for (u, &w) in self.inst.foci().rows().zip(self.inst.weights()) {
            // The smoothed norms are even, so ‖a − u − x‖ is taken at x − a + u.
            for j in 0..d {
                v[j] = x[j] - a[j] + u[j];
            }
            let val = self
                .inst
                .norm()
                .smooth_accumulate(v, mu, scale * w, grad, hess.as_deref_mut());
            total += w * val;
        }
        total
    }
}

impl SmoothProblem for MinimaxProblem<'_> {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn smoothed(&self, x: &[f64], mu: f64, grad: &mut [f64], hess: Option<&mut [f64]>) -> f64 {
        let d = self.dim();
        let m = self.active.len();
        let mut v = vec![0.0; d];
        let mut values = Vec::with_capacity(m);
        let mut grads = vec![0.0; m * d];
        for (slot, &i) in self.active.iter().enumerate() {
            let a = self.inst.demand().row(i);
            let g = &mut grads[slot * d..(slot + 1) * d];
            values.push(self.smoothed_phi(a, x, mu, 1.0, g, None, &mut v));
        }
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = values.iter().map(|f| ((f - top) / mu).exp()).collect();
        let z: f64 = weights.iter().sum();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (slot, w) in weights.iter().enumerate() {
            let p = w / z;
            for j in 0..d {
                grad[j] += p * grads[slot * d + j];
            }
        }
        if let Some(h) = hess {
            h.iter_mut().for_each(|e| *e = 0.0);
            let mut scratch = vec![0.0; d];
            for (slot, w) in weights.iter().enumerate() {
                let p = w / z;
                if p < 1e-20 {
                    continue;
                }
                let a = self.inst.demand().row(self.active[slot]);
                self.smoothed_phi(a, x, mu, p, &mut scratch, Some(h), &mut v);
                let g = &grads[slot * d..(slot + 1) * d];
                for r in 0..d {
                    for c in 0..d {
                        h[r * d + c] += p * g[r] * g[c] / mu;
                    }
                }
            }
            for r in 0..d {
                for c in 0..d {
                    h[r * d + c] -= grad[r] * grad[c] / mu;
                }
            }
        }
        top + mu * z.ln()
    }

    fn exact(&self, x: &[f64]) -> f64 {
        self.active
            .iter()
            .map(|&i| self.inst.phi_at(self.inst.demand().row(i), x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn smoothing_gap(&self) -> f64 {
        self.gap_const
    }

    fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    fn level_radius(&self, value: f64) -> f64 {
        // φ(x; a) ≥ ‖a − ū − x‖ because Σ ω = 1.
        self.kappa * value
    }
}

/// Length scale of an instance: demand spread plus foci spread.
pub(crate) fn instance_scale(inst: &Instance) -> f64 {
    inst.demand().bbox_diameter() + inst.foci().bbox_diameter()
}

pub(crate) fn default_start(inst: &Instance, active: &[usize]) -> Vec<f64> {
    let sub = inst.demand().select(active);
    let (lo, hi) = sub.bounding_box();
    let mean = inst.foci_mean();
    lo.iter().zip(&hi).zip(&mean).map(|((l, h), u)| 0.5 * (l + h) - u).collect()
}

/// Knobs for a single smoothed minimax solve.
#[derive(Debug, Clone, Default)]
pub(crate) struct DirectOptions<'a> {
    pub start: Option<&'a [f64]>,
    pub abort_above: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DirectOutcome {
    pub solution: Solution,
    pub aborted: bool,
}

pub(crate) fn solve_active(
    inst: &Instance,
    active: &[usize],
    cfg: &SolverConfig,
    opts: &DirectOptions<'_>,
) -> DirectOutcome {
    let problem = MinimaxProblem::new(inst, active.to_vec());
    let x0 = opts
        .start
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| default_start(inst, active));
    let scale = instance_scale(inst).max(f64::MIN_POSITIVE);
    let mu0 = cfg.mu0.unwrap_or(0.1 * scale);
    let mu_min = cfg
        .mu_min
        .unwrap_or(1e-3 * cfg.tol_r * scale / problem.gap_const.max(1.0))
        .min(mu0);
    let mut cont = Continuation::new(mu0, mu_min, cfg.tol_r, 1e-15 * scale, cfg.max_inner);
    cont.abort_above = opts.abort_above;
    let out = smooth::minimize(&problem, &x0, &cont);
    let support = {
        let cut = out.value * (1.0 - crate::model::SUPPORT_REL_TOL);
        active
            .iter()
            .copied()
            .filter(|&i| inst.phi_at(inst.demand().row(i), &out.x) >= cut)
            .collect()
    };
    DirectOutcome {
        solution: Solution {
            residual: (out.value - out.lower_bound).max(0.0),
            x: out.x,
            radius: out.value,
            support,
            iterations: out.newton_steps,
            inner_solves: out.stages,
            converged: out.converged,
        },
        aborted: out.aborted,
    }
}

/// Minimum covering radius by smoothing continuation over all demand points.
pub fn solve_direct(inst: &Instance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let all: Vec<usize> = (0..inst.n()).collect();
    Ok(solve_active(inst, &all, cfg, &DirectOptions::default()).solution)
}

/// Solves `inst` and the same instance with foci moved by `shift`. True iff
/// the radii agree within 1e-6 relative and, for strictly convex norms, the
/// translations differ by `−shift` within 1e-4 of the instance scale.
pub fn translate_invariance_check(inst: &Instance, shift: &[f64], cfg: &SolverConfig) -> Result<bool> {
    let moved = inst.with_shifted_foci(shift)?;
    let a = solve_direct(inst, cfg)?;
    let b = solve_direct(&moved, cfg)?;
    let same_radius = (a.radius - b.radius).abs() <= 1e-6 * a.radius.abs().max(1e-12);
    if !inst.norm().strictly_convex() {
        return Ok(same_radius);
    }
    let slack = 1e-4 * instance_scale(inst).max(1.0);
    let shifted = a.x.iter().zip(&b.x).zip(shift).all(|((xa, xb), s)| (xb - (xa - s)).abs() <= slack);
    Ok(same_radius && shifted)
}

/// Euclidean projection onto the unit simplex by sorting and thresholding.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Absorb rounding so the result sums to one.
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    out
}

/// One dual evaluation recorded by [`solve_lagrangean`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualIterate {
    /// Certified lower bound on `F(α)` at the evaluated `α`.
    pub dual_value: f64,
    /// Covering radius at the Weber point of this `α`.
    pub primal_value: f64,
    /// Best covering radius seen so far.
    pub best_primal: f64,
    /// Projected-gradient step length in force.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeanOutcome {
    pub solution: Solution,
    pub certificate: DualCertificate,
    /// Best primal radius minus best dual value.
    pub gap: f64,
    pub trace: Vec<DualIterate>,
}

struct DualEval {
    x: Vec<f64>,
    lower: f64,
    upper: f64,
    phis: Vec<f64>,
}

impl DualEval {
    /// Directional derivative of `F` along `dir` (a supergradient pairing).
    fn slope(&self, dir: &[f64]) -> f64 {
        self.phis.iter().zip(dir).map(|(g, d)| g * d).sum()
    }
}

fn evaluate_dual(
    inst: &Instance,
    alpha: &[f64],
    tol: f64,
    start: Option<&[f64]>,
    max_iter: usize,
) -> Result<DualEval> {
    let d = inst.dim();
    let mut data = Vec::new();
    let mut weights = Vec::new();
    for (a, &w_a) in inst.demand().rows().zip(alpha) {
        if w_a <= 0.0 {
            continue;
        }
        for (u, &w_u) in inst.foci().rows().zip(inst.weights()) {
            data.extend(a.iter().zip(u).map(|(ac, uc)| ac - uc));
            weights.push(w_a * w_u);
        }
    }
    let points = PointSet::new(d, data)?;
    let wcfg = WeberConfig {
        tol,
        max_iter,
        ..WeberConfig::default()
    };
    let res = weber_solve_from(&points, &weights, inst.norm(), &wcfg, start)?;
    let phis = inst.demand().rows().map(|a| inst.phi_at(a, &res.x)).collect();
    Ok(DualEval {
        x: res.x,
        lower: res.lower_bound,
        upper: res.value,
        phis,
    })
}

/// Bookkeeping shared by all dual evaluations of one run.
struct Ascent<'a> {
    inst: &'a Instance,
    max_inner: usize,
    scale: f64,
    best_primal: f64,
    best_x: Vec<f64>,
    best_dual: f64,
    best_alpha: Vec<f64>,
    trace: Vec<DualIterate>,
    step: f64,
    evaluations: usize,
}

impl Ascent<'_> {
    fn gap(&self) -> f64 {
        self.best_primal - self.best_dual
    }

    fn inner_tol(&self) -> f64 {
        (1e-3 * self.gap()).clamp(1e-12 * self.scale, 1e-3 * self.scale)
    }

    fn evaluate(&mut self, alpha: &[f64], start: Option<&[f64]>) -> Result<DualEval> {
        let ev = evaluate_dual(self.inst, alpha, self.inner_tol(), start, self.max_inner)?;
        self.evaluations += 1;
        let primal = primal_of(&ev.phis);
        self.offer_primal(&ev.x, primal);
        if ev.lower > self.best_dual {
            self.best_dual = ev.lower;
            self.best_alpha = alpha.to_vec();
        }
        if weak_duality_violated(ev.lower, self.best_primal) {
            return Err(Error::Infeasible(format!(
                "weak duality violated: dual {} above primal {}",
                ev.lower, self.best_primal
            )));
        }
        self.trace.push(DualIterate {
            dual_value: ev.lower,
            primal_value: primal,
            best_primal: self.best_primal,
            step: self.step,
        });
        Ok(ev)
    }

    fn offer_primal(&mut self, x: &[f64], value: f64) {
        if value < self.best_primal {
            self.best_primal = value;
            self.best_x = x.to_vec();
        }
    }

    /// Maximizes `F` along `α + s·dir`, `s ∈ [0, 1]`.
    ///
    /// `F` is concave along the segment, so the search bisects on the sign of
    /// the directional derivative until the tangent lines at both ends of the
    /// bracket bound the remaining ascent.
    fn line_search(
        &mut self,
        alpha: &[f64],
        current: DualEval,
        dir: &[f64],
    ) -> Result<(f64, Vec<f64>, DualEval)> {
        let point = |s: f64| -> Vec<f64> {
            let raw: Vec<f64> = alpha.iter().zip(dir).map(|(a, d)| (a + s * d).max(0.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        };
        let full = self.evaluate(&point(1.0), Some(&current.x))?;
        if full.slope(dir) >= 0.0 {
            return Ok((1.0, point(1.0), full));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut lo_eval: Option<DualEval> = None;
        let mut hi_eval = full;
        for _ in 0..60 {
            let lo_ref = lo_eval.as_ref().unwrap_or(&current);
            let (f_lo, s_lo) = (lo_ref.upper, lo_ref.slope(dir));
            let (f_hi, s_hi) = (hi_eval.upper, hi_eval.slope(dir));
            let cross = (f_hi - f_lo + s_lo * lo - s_hi * hi) / (s_lo - s_hi);
            let bound = f_lo + s_lo * (cross - lo);
            let stuck = lo_eval.is_none() && hi <= 1e-8;
            if stuck || hi - lo <= 1e-12 || bound - f_lo.max(f_hi) <= 0.01 * self.gap() {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let start = lo_ref.x.clone();
            let ev = self.evaluate(&point(mid), Some(&start))?;
            if ev.slope(dir) >= 0.0 {
                lo = mid;
                lo_eval = Some(ev);
            } else {
                hi = mid;
                hi_eval = ev;
            }
        }
        let lo_x = lo_eval.as_ref().map_or(&current.x, |e| &e.x).clone();
        self.search_segment(&lo_x, &hi_eval.x);
        let lo_eval = lo_eval.unwrap_or(current);
        if hi_eval.upper > lo_eval.upper {
            Ok((hi, point(hi), hi_eval))
        } else if lo > 0.0 {
            Ok((lo, point(lo), lo_eval))
        } else {
            Ok((0.0, alpha.to_vec(), lo_eval))
        }
    }

    /// Minimizes the covering radius on the segment between two Weber points.
    ///
    /// Near a kink of `F` the Weber point jumps between the two sides; the
    /// primal optimum then lies between them.
    fn search_segment(&mut self, x0: &[f64], x1: &[f64]) {
        if x0 == x1 {
            return;
        }
        let at = |t: f64| -> Vec<f64> { x0.iter().zip(x1).map(|(a, b)| a + t * (b - a)).collect() };
        let f = |t: f64| self.inst.objective(&at(t)).0;
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut c = hi - ratio * (hi - lo);
        let mut e = lo + ratio * (hi - lo);
        let (mut fc, mut fe) = (f(c), f(e));
        for _ in 0..80 {
            if fc <= fe {
                hi = e;
                e = c;
                fe = fc;
                c = hi - ratio * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = e;
                fc = fe;
                e = lo + ratio * (hi - lo);
                fe = f(e);
            }
        }
        let t = 0.5 * (lo + hi);
        let x = at(t);
        let value = self.inst.objective(&x).0;
        self.offer_primal(&x, value);
    }
}

/// Projected gradient ascent on the Lagrangean dual over the demand simplex.
///
/// `F(α) = min_x Σ_a α_a φ(x; a)` is evaluated by one weighted Weber solve
/// over the points `{a − u}` with weights `α_a ω_u`; its supergradient is
/// `(φ(x_α; a))_a`. Each iteration moves toward `Π_Δ(α + η∇F)` with a line
/// search that bisects on the sign of the directional derivative, so kinks
/// of `F` are located rather than stepped over. The step `η` starts at
/// `1 / diameter` and adapts to the accepted fraction.
///
/// The primal answer is the best Weber point seen, refined along the
/// segment joining the Weber points on both sides of each bracketed kink.
/// Every evaluation asserts weak duality.
pub fn solve_lagrangean(inst: &Instance, cfg: &SolverConfig) -> Result<LagrangeanOutcome> {
    cfg.validate()?;
    let n = inst.n();
    let scale = instance_scale(inst).max(f64::MIN_POSITIVE);
    let mut run = Ascent {
        inst,
        max_inner: cfg.max_inner,
        scale,
        best_primal: f64::INFINITY,
        best_x: Vec::new(),
        best_dual: f64::NEG_INFINITY,
        best_alpha: Vec::new(),
        trace: Vec::new(),
        step: cfg.dual_step0.unwrap_or(1.0 / scale),
        evaluations: 0,
    };

    let mut alpha = vec![1.0 / n as f64; n];
    let mut current = run.evaluate(&alpha, None)?;
    let mut outer = 0;
    let mut stalls = 0;
    let mut try_newton = false;
    let mut newton_step = run.step;
    let mut recovered_from = f64::INFINITY;
    while run.gap() > target_gap(cfg.tol_r, run.best_primal) && outer < cfg.max_outer {
        outer += 1;
        let proposal: Vec<f64> = alpha
            .iter()
            .zip(&current.phis)
            .map(|(a, g)| a + run.step * g)
            .collect();
        let proposal = project_simplex(&proposal);
        let gradient_dir: Vec<f64> = proposal.iter().zip(&alpha).map(|(p, a)| p - a).collect();
        let slope0 = current.slope(&gradient_dir);
        if slope0 <= 1e-14 * scale * norm1(&gradient_dir) {
            // α maximizes the linearization: either the gap is closed up to
            // the inner accuracy, or the inner solves must be sharpened.
            stalls += 1;
            if stalls > 3 || run.inner_tol() <= 1e-12 * scale {
                break;
            }
            current = run.evaluate(&alpha, Some(&current.x))?;
            continue;
        }
        stalls = 0;

        if outer % RECOVERY_PERIOD == 0 && run.best_primal < recovered_from {
            recovered_from = run.best_primal;
            let band = run.gap();
            if let Some(candidate) = recover_dual(inst, &run.best_x, run.best_primal, band, scale) {
                let ev = run.evaluate(&candidate, Some(&run.best_x.clone()))?;
                if ev.upper > current.upper {
                    alpha = candidate;
                    current = ev;
                    try_newton = true;
                    continue;
                }
            }
        }

        let same_face = proposal.iter().zip(&alpha).all(|(p, a)| (*p > 0.0) == (*a > 0.0));
        let newton = if try_newton && same_face {
            face_newton_direction(inst, &alpha, &current.x, scale, newton_step)
                .filter(|dir| current.slope(dir) > 0.0)
        } else {
            None
        };
        let used_newton = newton.is_some();
        let dir = newton.unwrap_or(gradient_dir);
        let (s, next_alpha, next) = run.line_search(&alpha, current, &dir)?;
        alpha = next_alpha;
        current = next;
        if used_newton {
            try_newton = s > 0.0;
            newton_step *= if s >= 1.0 { 4.0 } else { (2.0 * s).clamp(1e-3, 1.0) };
        } else {
            try_newton = true;
            run.step *= if s >= 1.0 { 2.0 } else { (2.0 * s).clamp(1e-3, 1.0) };
        }
    }

    let radius = run.best_primal;
    let support = inst.support(&run.best_x, radius);
    let gap = run.gap().max(0.0);
    Ok(LagrangeanOutcome {
        gap,
        solution: Solution {
            x: run.best_x,
            radius,
            support,
            iterations: outer,
            inner_solves: run.evaluations,
            converged: gap <= target_gap(cfg.tol_r, radius),
            residual: gap,
        },
        certificate: DualCertificate {
            alpha: run.best_alpha,
            dual_value: run.best_dual,
        },
        trace: run.trace,
    })
}

/// Outer iterations between attempts to read a dual point off the best
/// primal point.
const RECOVERY_PERIOD: usize = 10;

/// Dual point suggested by the optimality conditions at a primal point.
///
/// At an optimal `x*` some convex combination of `∇ₓφ(x*; a)` over the
/// attaining points vanishes, and its coefficients maximize `F`. Ascent
/// alone approaches such `α` slowly when the Weber point is ill-conditioned
/// in `α`, so the combination of minimum norm over the points within `band`
/// of the radius is offered as a candidate.
fn recover_dual(inst: &Instance, x: &[f64], radius: f64, band: f64, scale: f64) -> Option<Vec<f64>> {
    let near: Vec<usize> = (0..inst.n())
        .filter(|&i| inst.phi_at(inst.demand().row(i), x) >= radius - band)
        .collect();
    if near.len() < 2 {
        return None;
    }
    let d = inst.dim();
    let mu = 1e-9 * scale;
    let mut v = vec![0.0; d];
    let mut g = DMatrix::zeros(d, near.len());
    for (slot, &i) in near.iter().enumerate() {
        let a = inst.demand().row(i);
        let mut grad = vec![0.0; d];
        for (u, &w) in inst.foci().rows().zip(inst.weights()) {
            for j in 0..d {
                v[j] = x[j] - a[j] + u[j];
            }
            inst.norm().smooth_accumulate(&v, mu, w, &mut grad, None);
        }
        g.column_mut(slot).copy_from_slice(&grad);
    }
    let coef = min_norm_combination(&g)?;
    let mut alpha = vec![0.0; inst.n()];
    for (slot, &i) in near.iter().enumerate() {
        alpha[i] = coef[slot];
    }
    Some(alpha)
}

/// Minimizes `‖G c‖₂` over the simplex by accelerated projected gradient.
fn min_norm_combination(g: &DMatrix<f64>) -> Option<Vec<f64>> {
    let m = g.ncols();
    let gram = g.transpose() * g;
    let lip = gram.clone().symmetric_eigenvalues().max();
    if !(lip > 0.0) {
        return None;
    }
    let mut c = DVector::from_element(m, 1.0 / m as f64);
    let mut y = c.clone();
    let mut t = 1.0f64;
    for _ in 0..5000 {
        let step = &y - (&gram * &y) / lip;
        let next = DVector::from_vec(project_simplex(step.as_slice()));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &c) * ((t - 1.0) / t_next);
        if (&next - &c).amax() <= 1e-15 {
            c = next;
            break;
        }
        c = next;
        t = t_next;
    }
    c.iter().all(|v| v.is_finite()).then(|| c.as_slice().to_vec())
}

/// Newton direction for `F` on the face of the simplex spanned by the
/// support of `α`.
///
/// Away from kinks, `∇²F = −Jᵀ H⁻¹ J` where `J` stacks `∇ₓφ(x_α; a)` and `H`
/// is the Hessian of the Weber objective at `x_α`. The direction maximizes
/// the quadratic model minus `‖Δ‖²/(2·step)` subject to `Σ Δ = 0`; the
/// proximal term takes over in directions where the model is flat, which
/// happens whenever the face is larger than `d + 1`.
fn face_newton_direction(
    inst: &Instance,
    alpha: &[f64],
    x: &[f64],
    scale: f64,
    step: f64,
) -> Option<Vec<f64>> {
    let face: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
    let m = face.len();
    if m < 2 {
        return None;
    }
    let d = inst.dim();
    let mu = 1e-9 * scale;
    let mut hess = vec![0.0; d * d];
    let mut jac = vec![0.0; m * d];
    let mut v = vec![0.0; d];
    for (slot, &i) in face.iter().enumerate() {
        let a = inst.demand().row(i);
        let g = &mut jac[slot * d..(slot + 1) * d];
        for (u, &w) in inst.foci().rows().zip(inst.weights()) {
            for j in 0..d {
                v[j] = x[j] - a[j] + u[j];
            }
            let mut h = vec![0.0; d * d];
            inst.norm().smooth_accumulate(&v, mu, w, g, Some(&mut h));
            for (acc, e) in hess.iter_mut().zip(&h) {
                *acc += alpha[i] * e;
            }
        }
    }
    let h = DMatrix::from_row_slice(d, d, &hess);
    let h = DMatrix::from_fn(d, d, |r, c| 0.5 * (h[(r, c)] + h[(c, r)]));
    let chol = h.cholesky()?;
    let j = DMatrix::from_fn(d, m, |r, c| jac[c * d + r]);
    let q = -(j.transpose() * chol.solve(&j));
    let ridge = 1.0 / step;
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    let phis: Vec<f64> = face.iter().map(|&i| inst.phi_at(inst.demand().row(i), x)).collect();
    for r in 0..m {
        for c in 0..m {
            kkt[(r, c)] = q[(r, c)];
        }
        kkt[(r, r)] -= ridge;
        kkt[(r, m)] = 1.0;
        kkt[(m, r)] = 1.0;
        rhs[r] = -phis[r];
    }
    let sol = kkt.lu().solve(&rhs)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let mut dir = vec![0.0; alpha.len()];
    for (slot, &i) in face.iter().enumerate() {
        dir[i] = sol[slot];
    }
    Some(dir)
}

fn target_gap(tol_r: f64, radius: f64) -> f64 {
    tol_r * radius.abs().max(f64::MIN_POSITIVE)
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn weak_duality_violated(dual: f64, primal: f64) -> bool {
    dual > primal + 1e-12 * primal.abs().max(1.0)
}

fn primal_of(phis: &[f64]) -> f64 {
    phis.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
