//! Weighted Weber (minisum) problem `min_x Σ_i w_i ‖x − p_i‖`.
//!
//! Solved on the smoothed objective with μ-continuation and damped Newton
//! steps; the result carries a certified lower bound on the optimal value.

use crate::error::{invalid, Error, Result};
use crate::norms::NormSpec;
use crate::points::PointSet;
use crate::smooth::{self, Continuation, SmoothProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct WeberConfig {
    /// Absolute accuracy on the optimal value.
    pub tol: f64,
    pub mu0: Option<f64>,
    pub mu_min: Option<f64>,
    /// Newton steps allowed per smoothing stage.
    pub max_iter: usize,
}

impl Default for WeberConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            mu0: None,
            mu_min: None,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeberResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Proven lower bound on the optimal value.
    pub lower_bound: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn weber_solve(
    points: &PointSet,
    weights: &[f64],
    norm: &NormSpec,
    cfg: &WeberConfig,
) -> Result<WeberResult> {
    weber_solve_from(points, weights, norm, cfg, None)
}

/// As [`weber_solve`], starting the first smoothing stage at `start`.
pub fn weber_solve_from(
    points: &PointSet,
    weights: &[f64],
    norm: &NormSpec,
    cfg: &WeberConfig,
    start: Option<&[f64]>,
) -> Result<WeberResult> {
    if weights.len() != points.len() {
        return Err(invalid(format!(
            "{} weights for {} points",
            weights.len(),
            points.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("Weber weights must be finite and nonnegative"));
    }
    if !(cfg.tol > 0.0) {
        return Err(invalid("Weber tolerance must be positive"));
    }
    norm.check_dim(points.dim())?;
    let keep: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(invalid("all Weber weights are zero"));
    }
    let problem = WeberProblem::new(
        points.select(&keep),
        keep.iter().map(|&i| weights[i]).collect(),
        norm,
    );
    if let Some(s) = start {
        if s.len() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                got: s.len(),
            });
        }
    }
    let x0 = start.map(<[f64]>::to_vec).unwrap_or_else(|| problem.centroid.clone());
    let diam = problem.points.bbox_diameter();
    let mu0 = cfg.mu0.unwrap_or(0.1 * diam).max(f64::MIN_POSITIVE);
    let mu_min = cfg
        .mu_min
        .unwrap_or(cfg.tol / (10.0 * problem.gap_const.max(1.0)))
        .min(mu0);
    let cont = Continuation::new(mu0, mu_min, 0.0, cfg.tol, cfg.max_iter);
    let out = smooth::minimize(&problem, &x0, &cont);
    Ok(WeberResult {
        x: out.x,
        value: out.value,
        lower_bound: out.lower_bound,
        converged: out.converged,
        iterations: out.newton_steps,
    })
}

pub(crate) struct WeberProblem<'a> {
    points: PointSet,
    weights: Vec<f64>,
    norm: &'a NormSpec,
    centroid: Vec<f64>,
    gap_const: f64,
    radius_per_value: f64,
}

impl<'a> WeberProblem<'a> {
    pub(crate) fn new(points: PointSet, weights: Vec<f64>, norm: &'a NormSpec) -> Self {
        let d = points.dim();
        let mass: f64 = weights.iter().sum();
        let mut centroid = vec![0.0; d];
        for (p, w) in points.rows().zip(&weights) {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += w * v / mass;
            }
        }
        Self {
            gap_const: norm.smoothing_bound(d) * mass,
            radius_per_value: norm.euclid_ratio(d) / mass,
            points,
            weights,
            norm,
            centroid,
        }
    }
}

impl SmoothProblem for WeberProblem<'_> {
    fn dim(&self) -> usize {
        self.points.dim()
    }

    fn smoothed(&self, x: &[f64], mu: f64, grad: &mut [f64], mut hess: Option<&mut [f64]>) -> f64 {
        let d = self.dim();
        grad.iter_mut().for_each(|g| *g = 0.0);
        if let Some(h) = hess.as_deref_mut() {
            h.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut v = vec![0.0; d];
        let mut total = 0.0;
        for (p, &w) in self.points.rows().zip(&self.weights) {
            for j in 0..d {
                v[j] = x[j] - p[j];
            }
            total += w * self.norm.smooth_accumulate(&v, mu, w, grad, hess.as_deref_mut());
        }
        total
    }

    fn exact(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut v = vec![0.0; d];
        self.points
            .rows()
            .zip(&self.weights)
            .map(|(p, w)| {
                for j in 0..d {
                    v[j] = x[j] - p[j];
                }
                w * self.norm.eval(&v)
            })
            .sum()
    }

    fn smoothing_gap(&self) -> f64 {
        self.gap_const
    }

    fn anchor(&self) -> &[f64] {
        &self.centroid
    }

    fn level_radius(&self, value: f64) -> f64 {
        self.radius_per_value * value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_median() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let r = weber_solve(&p, &[0.5, 0.5], &NormSpec::l2(), &WeberConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.x[1].abs() < 1e-6 && r.x[0] > -1e-6 && r.x[0] < 2.0 + 1e-6);
    }

    #[test]
    fn equilateral_triangle_has_central_fermat_point() {
        let h = 3f64.sqrt();
        let p = PointSet::from_rows(&[[0.0, 0.0], [2.0, 0.0], [1.0, h]]).unwrap();
        let w = [1.0 / 3.0; 3];
        let r = weber_solve(&p, &w, &NormSpec::l2(), &WeberConfig::default()).unwrap();
        assert!((r.value - 2.0 / h).abs() < 1e-9, "value {}", r.value);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - h / 3.0).abs() < 1e-6);
        assert!(r.lower_bound <= 2.0 / h + 1e-12);
    }

    #[test]
    fn zero_weight_points_are_ignored() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [2.0, 0.0], [100.0, 100.0]]).unwrap();
        let r = weber_solve(&p, &[0.5, 0.5, 0.0], &NormSpec::l1(), &WeberConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(weber_solve(&p, &[0.0; 3], &NormSpec::l2(), &WeberConfig::default()).is_err());
        assert!(weber_solve(&p, &[1.0, -1.0, 1.0], &NormSpec::l2(), &WeberConfig::default()).is_err());
    }

    #[test]
    fn smoothed_objective_never_increases_within_a_stage() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [7.0, 1.0], [3.0, 9.0], [-4.0, 2.0], [5.0, -6.0]]).unwrap();
        let norm = NormSpec::lp(1.5).unwrap();
        let problem = WeberProblem::new(p, vec![0.1, 0.3, 0.2, 0.25, 0.15], &norm);
        let cont = Continuation::new(1.0, 1e-9, 0.0, 1e-10, 100);
        let out = smooth::minimize_traced(&problem, &[20.0, -20.0], &cont);
        assert!(out.history.len() > 3);
        for w in out.history.windows(2) {
            if w[0].0 == w[1].0 {
                assert!(w[1].1 <= w[0].1 + 1e-15 * w[0].1.abs().max(1.0));
            }
        }
    }

    #[test]
    fn single_point_has_zero_value() {
        let p = PointSet::from_rows(&[[3.0, -1.0]]).unwrap();
        let r = weber_solve(&p, &[2.0], &NormSpec::hex(), &WeberConfig::default()).unwrap();
        assert!(r.value < 1e-9);
    }
}
