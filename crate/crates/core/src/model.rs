//! Instances, solutions and the coverage function
//! `φ(x; a) = Σ_u ω_u ‖a − u − x‖`.

use crate::error::{invalid, Error, Result};
use crate::norms::NormSpec;
use crate::points::PointSet;

/// Relative band used to decide which demand points attain the maximum.
pub const SUPPORT_REL_TOL: f64 = 1e-6;
/// Weight vectors whose sum is this close to 1 are silently normalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// Demand points, foci with normalized positive weights, and the gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    demand: PointSet,
    foci: PointSet,
    weights: Vec<f64>,
    norm: NormSpec,
}

impl Instance {
    pub fn new(demand: PointSet, foci: PointSet, weights: Vec<f64>, norm: NormSpec) -> Result<Self> {
        if demand.is_empty() {
            return Err(invalid("demand set is empty"));
        }
        if foci.is_empty() {
            return Err(invalid("foci set is empty"));
        }
        if demand.dim() != foci.dim() {
            return Err(Error::DimensionMismatch {
                expected: demand.dim(),
                got: foci.dim(),
            });
        }
        norm.check_dim(demand.dim())?;
        let weights = normalize_weights(weights, foci.len())?;
        Ok(Self {
            demand,
            foci,
            weights,
            norm,
        })
    }

    /// Instance with all foci weighted `1/k`.
    pub fn unweighted(demand: PointSet, foci: PointSet, norm: NormSpec) -> Result<Self> {
        let k = foci.len();
        Self::new(demand, foci, vec![1.0 / k as f64; k], norm)
    }

    pub fn demand(&self) -> &PointSet {
        &self.demand
    }

    pub fn foci(&self) -> &PointSet {
        &self.foci
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn dim(&self) -> usize {
        self.demand.dim()
    }

    pub fn n(&self) -> usize {
        self.demand.len()
    }

    pub fn k(&self) -> usize {
        self.foci.len()
    }

    /// The same problem with every focus shifted by `shift`.
    pub fn with_shifted_foci(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: shift.len(),
            });
        }
        Ok(Self {
            foci: self.foci.translated(shift),
            ..self.clone()
        })
    }

    /// The same foci and weights over a different demand set.
    pub fn with_demand(&self, demand: PointSet) -> Result<Self> {
        Self::new(demand, self.foci.clone(), self.weights.clone(), self.norm.clone())
    }

    /// Restriction to the demand points listed in `indices`.
    pub fn restricted(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("restriction to an empty demand subset"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n(),
            });
        }
        Ok(Self {
            demand: self.demand.select(indices),
            ..self.clone()
        })
    }

    /// Weighted mean of the foci, `ū = Σ ω_u u`.
    pub fn foci_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for (u, w) in self.foci.rows().zip(&self.weights) {
            for (m, c) in mean.iter_mut().zip(u) {
                *m += w * c;
            }
        }
        mean
    }

    /// φ(x; a_index).
    pub fn phi(&self, x: &[f64], a_index: usize) -> Result<f64> {
        if a_index >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: a_index,
                len: self.n(),
            });
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.phi_at(self.demand.row(a_index), x))
    }

    /// φ for an arbitrary demand location `a`.
    pub fn phi_at(&self, a: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        let mut buf = [0.0f64; 8];
        let mut heap = Vec::new();
        let v: &mut [f64] = if d <= 8 {
            &mut buf[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        let mut total = 0.0;
        for (u, w) in self.foci.rows().zip(&self.weights) {
            for j in 0..d {
                v[j] = a[j] - u[j] - x[j];
            }
            total += w * self.norm.eval(v);
        }
        total
    }

    /// `max_a φ(x; a)` and the smallest index attaining it.
    pub fn objective(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, a) in self.demand.rows().enumerate() {
            let v = self.phi_at(a, x);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Demand points with `φ(x; a) ≥ r·(1 − 1e-6)`.
    pub fn support(&self, x: &[f64], r: f64) -> Vec<usize> {
        let cut = r * (1.0 - SUPPORT_REL_TOL);
        self.demand
            .rows()
            .enumerate()
            .filter(|(_, a)| self.phi_at(a, x) >= cut)
            .map(|(i, _)| i)
            .collect()
    }
}

pub(crate) fn normalize_weights(weights: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    if weights.len() != k {
        return Err(invalid(format!(
            "foci_weights has {} entries for {k} foci",
            weights.len()
        )));
    }
    if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(invalid(format!("foci_weights must be positive, found {bad}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(invalid(format!("foci_weights sum to {sum}, expected 1")));
    }
    if weights.iter().all(|&w| w == weights[0]) {
        // Keep equal weights at exactly 1/k rather than w / Σw.
        return Ok(vec![1.0 / k as f64; k]);
    }
    Ok(weights.into_iter().map(|w| w / sum).collect())
}

/// Result of a covering solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Translation applied to the foci.
    pub x: Vec<f64>,
    /// Covering radius `max_a φ(x; a)` at `x`.
    pub radius: f64,
    /// Demand indices attaining the radius within the relative support band.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub inner_solves: usize,
    pub converged: bool,
    /// Certified optimality gap: `radius` minus a proven lower bound on the
    /// optimal radius.
    pub residual: f64,
}

impl Solution {
    pub fn lower_bound(&self) -> f64 {
        self.radius - self.residual
    }
}

/// A point on the demand simplex and the dual value it certifies.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub alpha: Vec<f64>,
    /// Lower bound on `F(α) = min_x Σ_a α_a φ(x; a)`, hence on the optimal radius.
    pub dual_value: f64,
}
