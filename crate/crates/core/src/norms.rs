//! Distance gauges: ℓp norms (including p = ∞) and polyhedral block norms.
//!
//! Besides plain evaluation every norm exposes a subgradient and a smooth
//! upper approximation with explicit gradient and Hessian. The smoothing is
//! componentwise hyperbolic, `(v_j² + μ²)^{1/2}`, composed with the ℓp norm for
//! finite p, and `μ·log Σ_e exp(e·v/μ)` over the polar extreme points for ℓ∞
//! and block norms. Both overshoot the exact norm by at most `c·μ` where
//! [`NormSpec::smoothing_bound`] gives `c`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::points::dot;

const POLARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// ℓp with `1 ≤ p ≤ ∞`; `p = f64::INFINITY` is evaluated as the max of
    /// absolute coordinates.
    Lp { p: f64 },
    Block(BlockNorm),
}

/// Polyhedral norm whose unit ball is the convex hull of `ball_extremes`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorm {
    dim: usize,
    ball_extremes: Vec<Vec<f64>>,
    polar_extremes: Vec<Vec<f64>>,
}

impl BlockNorm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ball_extremes(&self) -> &[Vec<f64>] {
        &self.ball_extremes
    }

    pub fn polar_extremes(&self) -> &[Vec<f64>] {
        &self.polar_extremes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    kind: NormKind,
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(invalid(format!("lp norm requires p >= 1, got {p}")));
        }
        Ok(Self {
            kind: NormKind::Lp { p },
        })
    }

    pub fn l1() -> Self {
        Self::lp(1.0).unwrap()
    }

    pub fn l2() -> Self {
        Self::lp(2.0).unwrap()
    }

    pub fn linf() -> Self {
        Self::lp(f64::INFINITY).unwrap()
    }

    /// The hexagonal block norm with unit-ball vertices ±(2,0), ±(1,2), ±(−1,2).
    pub fn hex() -> Self {
        Self::block(&[vec![2.0, 0.0], vec![1.0, 2.0], vec![-1.0, 2.0]]).unwrap()
    }

    /// Planar block norm from unit-ball extreme points. Missing antipodes are
    /// added; polar extremes are derived.
    pub fn block(ball_extremes: &[Vec<f64>]) -> Result<Self> {
        let ball = symmetric_completion(ball_extremes)?;
        let dim = ball[0].len();
        if dim != 2 {
            return Err(Error::Unsupported(format!(
                "deriving polar extremes needs d = 2 (got d = {dim}); supply them explicitly"
            )));
        }
        let polar = derive_polar_extremes(&ball)?;
        Self::block_with_polar(&ball, &polar)
    }

    /// Block norm in any dimension from ball and polar extreme points.
    pub fn block_with_polar(ball_extremes: &[Vec<f64>], polar_extremes: &[Vec<f64>]) -> Result<Self> {
        let ball = symmetric_completion(ball_extremes)?;
        let polar = symmetric_completion(polar_extremes)?;
        let dim = ball[0].len();
        if polar[0].len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: polar[0].len(),
            });
        }
        if rank(&ball) < dim {
            return Err(invalid("block norm ball extremes do not span the space"));
        }
        for b in &ball {
            let best = polar.iter().map(|e| dot(e, b)).fold(f64::NEG_INFINITY, f64::max);
            if (best - 1.0).abs() > POLARITY_TOL {
                return Err(invalid(format!(
                    "ball extreme {b:?} has gauge {best}, expected 1"
                )));
            }
            let tight: Vec<Vec<f64>> = polar
                .iter()
                .filter(|e| dot(e, b) >= 1.0 - POLARITY_TOL)
                .cloned()
                .collect();
            if rank(&tight) < dim {
                return Err(invalid(format!("{b:?} is not an extreme point of the unit ball")));
            }
        }
        for e in &polar {
            let best = ball.iter().map(|b| dot(e, b)).fold(f64::NEG_INFINITY, f64::max);
            if (best - 1.0).abs() > POLARITY_TOL {
                return Err(invalid(format!(
                    "polar extreme {e:?} has support value {best}, expected 1"
                )));
            }
        }
        Ok(Self {
            kind: NormKind::Block(BlockNorm {
                dim,
                ball_extremes: ball,
                polar_extremes: polar,
            }),
        })
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// True iff the unit ball is strictly convex (ℓp with 1 < p < ∞).
    pub fn strictly_convex(&self) -> bool {
        matches!(self.kind, NormKind::Lp { p } if p > 1.0 && p.is_finite())
    }

    /// Fixed dimension of a block norm; `None` for ℓp norms.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            NormKind::Lp { .. } => None,
            NormKind::Block(b) => Some(b.dim),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(expected) if expected != d => Err(Error::DimensionMismatch { expected, got: d }),
            _ => Ok(()),
        }
    }

    /// Short label used in reports, e.g. `l2`, `l1.5`, `linf`, `block6`.
    pub fn label(&self) -> String {
        match &self.kind {
            NormKind::Lp { p } if p.is_infinite() => "linf".to_string(),
            NormKind::Lp { p } => format!("l{p}"),
            NormKind::Block(b) => format!("block{}", b.ball_extremes.len()),
        }
    }

    /// ‖v‖ with a dimension check.
    pub fn norm_eval(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(self.eval(v))
    }

    /// ‖v‖ without the dimension check.
    #[inline]
    pub fn eval(&self, v: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_eval(*p, v),
            NormKind::Block(b) => b
                .polar_extremes
                .iter()
                .map(|e| dot(e, v))
                .fold(0.0, f64::max),
        }
    }

    /// Norm of `g` in the dual gauge.
    pub fn dual_eval(&self, g: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_eval(conjugate_exponent(*p), g),
            NormKind::Block(b) => b
                .ball_extremes
                .iter()
                .map(|e| dot(e, g))
                .fold(0.0, f64::max),
        }
    }

    /// An element of the subdifferential of ‖·‖ at `v`. At kinks the choice is
    /// deterministic: zero coordinates get 0 for ℓ1, ties go to the lowest
    /// index for ℓ∞ and block norms, and `v = 0` yields the zero vector.
    pub fn subgradient(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let mut g = vec![0.0; v.len()];
        self.subgradient_into(v, &mut g);
        Ok(g)
    }

    pub(crate) fn subgradient_into(&self, v: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|x| *x = 0.0);
        if v.iter().all(|&x| x == 0.0) {
            return;
        }
        match &self.kind {
            NormKind::Lp { p } if *p == 1.0 => {
                for (gj, &vj) in g.iter_mut().zip(v) {
                    *gj = if vj == 0.0 { 0.0 } else { vj.signum() };
                }
            }
            NormKind::Lp { p } if p.is_infinite() => {
                let mut best = 0;
                for (j, vj) in v.iter().enumerate() {
                    if vj.abs() > v[best].abs() {
                        best = j;
                    }
                }
                g[best] = v[best].signum();
            }
            NormKind::Lp { p } => {
                let n = lp_eval(*p, v);
                for (gj, &vj) in g.iter_mut().zip(v) {
                    *gj = vj.signum() * (vj.abs() / n).powf(p - 1.0);
                }
            }
            NormKind::Block(b) => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, e) in b.polar_extremes.iter().enumerate() {
                    let val = dot(e, v);
                    if val > best_val {
                        best_val = val;
                        best = i;
                    }
                }
                g.copy_from_slice(&b.polar_extremes[best]);
            }
        }
    }

    /// Value and gradient of the smooth upper approximation at `v`.
    pub fn smoothed_eval(&self, v: &[f64], mu: f64) -> Result<(f64, Vec<f64>)> {
        self.check_dim(v.len())?;
        if !(mu > 0.0) {
            return Err(invalid(format!("smoothing parameter must be positive, got {mu}")));
        }
        let mut grad = vec![0.0; v.len()];
        let value = self.smooth_accumulate(v, mu, 1.0, &mut grad, None);
        Ok((value, grad))
    }

    /// Constant `c` with `0 ≤ smoothed − exact ≤ c·μ` in dimension `d`.
    pub fn smoothing_bound(&self, d: usize) -> f64 {
        match &self.kind {
            NormKind::Lp { p } if p.is_infinite() => (2.0 * d as f64).ln(),
            NormKind::Lp { p } => (d as f64).powf(1.0 / p),
            NormKind::Block(b) => (b.polar_extremes.len() as f64).ln(),
        }
    }

    /// Smallest `κ` with `‖v‖₂ ≤ κ‖v‖` for all `v ∈ ℝᵈ`.
    pub fn euclid_ratio(&self, d: usize) -> f64 {
        match &self.kind {
            NormKind::Lp { p } if *p <= 2.0 => 1.0,
            NormKind::Lp { p } if p.is_infinite() => (d as f64).sqrt(),
            NormKind::Lp { p } => (d as f64).powf(0.5 - 1.0 / p),
            NormKind::Block(b) => b
                .ball_extremes
                .iter()
                .map(|e| crate::points::euclid(e))
                .fold(0.0, f64::max),
        }
    }

    /// Smallest `L` with `‖v‖ ≤ L‖v‖₂` for all `v ∈ ℝᵈ`.
    pub fn euclid_lipschitz(&self, d: usize) -> f64 {
        match &self.kind {
            NormKind::Lp { p } if *p >= 2.0 => 1.0,
            NormKind::Lp { p } => (d as f64).powf(1.0 / p - 0.5),
            NormKind::Block(b) => b
                .polar_extremes
                .iter()
                .map(|e| crate::points::euclid(e))
                .fold(0.0, f64::max),
        }
    }

    /// Adds `scale·∇` and (optionally) `scale·∇²` of the smoothed norm at `v`
    /// into `grad` / `hess` (row-major d×d) and returns the unscaled value.
    pub(crate) fn smooth_accumulate(
        &self,
        v: &[f64],
        mu: f64,
        scale: f64,
        grad: &mut [f64],
        hess: Option<&mut [f64]>,
    ) -> f64 {
        let d = v.len();
        match &self.kind {
            NormKind::Lp { p } if p.is_infinite() => {
                let forms = (0..2 * d).map(|m| {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    (m / 2, sign)
                });
                logsumexp_accumulate(
                    d,
                    forms.map(|(j, s)| Form::Axis(j, s)),
                    v,
                    mu,
                    scale,
                    grad,
                    hess,
                )
            }
            NormKind::Lp { p } => hyperbolic_lp_accumulate(*p, v, mu, scale, grad, hess),
            NormKind::Block(b) => logsumexp_accumulate(
                d,
                b.polar_extremes.iter().map(|e| Form::Dense(e)),
                v,
                mu,
                scale,
                grad,
                hess,
            ),
        }
    }
}

fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_eval(p: f64, v: &[f64]) -> f64 {
    if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        crate::points::euclid(v)
    } else if p.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else {
        let m = v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn hyperbolic_lp_accumulate(
    p: f64,
    v: &[f64],
    mu: f64,
    scale: f64,
    grad: &mut [f64],
    hess: Option<&mut [f64]>,
) -> f64 {
    let d = v.len();
    let mu2 = mu * mu;
    let mut s = [0.0f64; 8];
    let mut s_vec;
    let s: &mut [f64] = if d <= 8 {
        &mut s[..d]
    } else {
        s_vec = vec![0.0; d];
        &mut s_vec
    };
    for (sj, &vj) in s.iter_mut().zip(v) {
        *sj = (vj * vj + mu2).sqrt();
    }
    if p == 1.0 {
        let value: f64 = s.iter().sum();
        for j in 0..d {
            grad[j] += scale * v[j] / s[j];
        }
        if let Some(h) = hess {
            for j in 0..d {
                h[j * d + j] += scale * mu2 / (s[j] * s[j] * s[j]);
            }
        }
        return value;
    }
    let m = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let n = if p == 2.0 {
        s.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        m * s.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
    };
    // w_j = ∂N/∂s_j = (s_j/N)^{p-1}
    let ratio = |j: usize| s[j] / n;
    for j in 0..d {
        let w = if p == 2.0 { ratio(j) } else { ratio(j).powf(p - 1.0) };
        grad[j] += scale * w * v[j] / s[j];
    }
    if let Some(h) = hess {
        for i in 0..d {
            let wi = if p == 2.0 { ratio(i) } else { ratio(i).powf(p - 1.0) };
            let di = v[i] / s[i];
            for j in 0..d {
                let wj = if p == 2.0 { ratio(j) } else { ratio(j).powf(p - 1.0) };
                let dj = v[j] / s[j];
                let mut hs = -wi * wj;
                if i == j {
                    hs += if p == 2.0 { 1.0 } else { ratio(j).powf(p - 2.0) };
                }
                let mut val = (p - 1.0) / n * hs * di * dj;
                if i == j {
                    val += wi * mu2 / (s[i] * s[i] * s[i]);
                }
                h[i * d + j] += scale * val;
            }
        }
    }
    n
}

enum Form<'a> {
    Axis(usize, f64),
    Dense(&'a [f64]),
}

impl Form<'_> {
    #[inline]
    fn apply(&self, v: &[f64]) -> f64 {
        match self {
            Form::Axis(j, s) => s * v[*j],
            Form::Dense(e) => dot(e, v),
        }
    }

    #[inline]
    fn coord(&self, i: usize) -> f64 {
        match self {
            Form::Axis(j, s) => {
                if *j == i {
                    *s
                } else {
                    0.0
                }
            }
            Form::Dense(e) => e[i],
        }
    }
}

fn logsumexp_accumulate<'a>(
    d: usize,
    forms: impl Iterator<Item = Form<'a>> + Clone,
    v: &[f64],
    mu: f64,
    scale: f64,
    grad: &mut [f64],
    hess: Option<&mut [f64]>,
) -> f64 {
    let top = forms.clone().map(|f| f.apply(v)).fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut g = [0.0f64; 8];
    let mut outer = [0.0f64; 64];
    let small = d <= 8;
    let mut g_vec = Vec::new();
    let mut outer_vec = Vec::new();
    let (g, outer): (&mut [f64], &mut [f64]) = if small {
        (&mut g[..d], &mut outer[..d * d])
    } else {
        g_vec.resize(d, 0.0);
        outer_vec.resize(d * d, 0.0);
        (&mut g_vec, &mut outer_vec)
    };
    let want_hess = hess.is_some();
    for f in forms {
        let w = ((f.apply(v) - top) / mu).exp();
        total += w;
        for i in 0..d {
            let ci = f.coord(i);
            g[i] += w * ci;
            if want_hess {
                for j in 0..d {
                    outer[i * d + j] += w * ci * f.coord(j);
                }
            }
        }
    }
    for i in 0..d {
        g[i] /= total;
        grad[i] += scale * g[i];
    }
    if let Some(h) = hess {
        for i in 0..d {
            for j in 0..d {
                h[i * d + j] += scale * (outer[i * d + j] / total - g[i] * g[j]) / mu;
            }
        }
    }
    top + mu * total.ln()
}

fn rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let d = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    m.rank(1e-9)
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// Adds the antipode of every point that lacks one and drops duplicates.
fn symmetric_completion(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let first = points
        .first()
        .ok_or_else(|| invalid("block norm needs at least one extreme point"))?;
    let d = first.len();
    if d == 0 {
        return Err(invalid("extreme points must have positive dimension"));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(2 * points.len());
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("non-finite extreme point {p:?}")));
        }
        if p.iter().all(|&x| x == 0.0) {
            return Err(invalid("the origin cannot be an extreme point"));
        }
        let neg: Vec<f64> = p.iter().map(|x| -x).collect();
        for q in [p.clone(), neg] {
            if !out.iter().any(|o| same_point(o, &q)) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// Polar-ball extreme points of a planar block norm.
///
/// The ball extremes are ordered by angle; each pair of angular neighbours
/// `(b_i, b_{i+1})` spans a facet whose normal `e` satisfies `e·b_i = e·b_{i+1} = 1`.
pub fn derive_polar_extremes(ball_extremes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if ball_extremes.len() < 3 {
        return Err(invalid("need at least three ball extremes in the plane"));
    }
    if let Some(bad) = ball_extremes.iter().find(|b| b.len() != 2) {
        return Err(Error::Unsupported(format!(
            "polar derivation is planar only, got a point of dimension {}",
            bad.len()
        )));
    }
    let mut sorted: Vec<&Vec<f64>> = ball_extremes.iter().collect();
    sorted.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let m = sorted.len();
    let mut polar: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let b0 = sorted[i];
        let b1 = sorted[(i + 1) % m];
        let det = b0[0] * b1[1] - b0[1] * b1[0];
        let scale = crate::points::euclid(b0) * crate::points::euclid(b1);
        if det <= 1e-12 * scale {
            return Err(invalid(format!(
                "adjacent extremes {b0:?} and {b1:?} are collinear with the origin or not in convex position"
            )));
        }
        // Cramer's rule for e·b0 = 1, e·b1 = 1.
        let e = vec![(b1[1] - b0[1]) / det, (b0[0] - b1[0]) / det];
        if !polar.iter().any(|q| same_point(q, &e)) {
            polar.push(e);
        }
    }
    Ok(polar)
}
