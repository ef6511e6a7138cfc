//! Exact covering on the line.
//!
//! With `g(z) = Σ_u ω_u |z − u|` the problem is `min_x max(g(a⁰ − x),
//! g(a^f − x))` for the extreme demand points `a⁰ ≤ a^f`. `g` is convex and
//! piecewise linear with breakpoints at the foci, so the optimum is either on
//! the flat weighted-median piece of `g` or at the unique `t = a⁰ − x` with
//! `g(t) = g(t + D)`, `D = a^f − a⁰`. The latter is found by searching the
//! pieces `(s₀, s_f)` containing `t` and `t + D`.

use crate::error::{invalid, Result};
use crate::model::normalize_weights;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval1D {
    pub lo: f64,
    pub hi: f64,
}

impl Interval1D {
    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Which closed form produced a 1D solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch1D {
    /// Both extreme points fit on the weighted-median piece; `r` is the
    /// Weber value of the foci.
    Median,
    /// Every focus lies between the two extremes: `r = D/2`.
    Explicit,
    /// Found by the `(s₀, s_f)` piece search.
    PairSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution1D {
    pub x: f64,
    pub r: f64,
    pub branch: Branch1D,
}

/// Foci sorted ascending with duplicates merged, plus prefix sums
/// `W_s = Σ_{j≤s} ω_j` and `P_s = Σ_{j≤s} ω_j u_j` (1-based, `W_0 = P_0 = 0`).
#[derive(Debug, Clone)]
struct Foci {
    u: Vec<f64>,
    w: Vec<f64>,
    cum_w: Vec<f64>,
    cum_p: Vec<f64>,
    mean: f64,
}

impl Foci {
    fn new(u: &[f64], w: &[f64]) -> Result<Self> {
        if u.is_empty() {
            return Err(invalid("foci set is empty"));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(invalid("foci must be finite"));
        }
        let w = normalize_weights(w.to_vec(), u.len())?;
        let mut pairs: Vec<(f64, f64)> = u.iter().copied().zip(w).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut su: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut sw: Vec<f64> = Vec::with_capacity(pairs.len());
        for (p, q) in pairs {
            if su.last() == Some(&p) {
                *sw.last_mut().unwrap() += q;
            } else {
                su.push(p);
                sw.push(q);
            }
        }
        let mut cum_w = vec![0.0];
        let mut cum_p = vec![0.0];
        for (p, q) in su.iter().zip(&sw) {
            cum_w.push(cum_w.last().unwrap() + q);
            cum_p.push(cum_p.last().unwrap() + q * p);
        }
        let mean = *cum_p.last().unwrap();
        Ok(Self {
            u: su,
            w: sw,
            cum_w,
            cum_p,
            mean,
        })
    }

    fn k(&self) -> usize {
        self.u.len()
    }

    /// `u_s` with `u_0 = −∞` and `u_{k+1} = +∞` (1-based).
    fn at(&self, s: usize) -> f64 {
        if s == 0 {
            f64::NEG_INFINITY
        } else if s > self.k() {
            f64::INFINITY
        } else {
            self.u[s - 1]
        }
    }

    fn g(&self, z: f64) -> f64 {
        self.u.iter().zip(&self.w).map(|(u, w)| w * (z - u).abs()).sum()
    }

    /// Slope and intercept of `g` on piece `s`, i.e. for `u_s ≤ z ≤ u_{s+1}`.
    fn piece(&self, s: usize) -> (f64, f64) {
        (2.0 * self.cum_w[s] - 1.0, self.mean - 2.0 * self.cum_p[s])
    }

    /// The flat piece of `g`: its argmin interval and minimum value.
    fn median(&self) -> (Interval1D, f64) {
        // First s with W_s ≥ 1/2; the argmin is [u_s, u_{s+1}] if W_s = 1/2
        // exactly, else the single point u_s.
        let s = (1..=self.k()).find(|&s| self.cum_w[s] >= 0.5 - 1e-12).unwrap_or(self.k());
        let lo = self.u[s - 1];
        let hi = if (self.cum_w[s] - 0.5).abs() <= 1e-12 && s < self.k() {
            self.u[s]
        } else {
            lo
        };
        (Interval1D { lo, hi }, self.g(lo))
    }

    fn scale(&self) -> f64 {
        (self.u[self.k() - 1] - self.u[0]).abs().max(self.u[0].abs()).max(1.0)
    }
}

/// `{z : Σ_u ω_u |z − u| ≤ r}`, or `None` when `r` is below the Weber value.
pub fn polyellipse_interval(u: &[f64], w: &[f64], r: f64) -> Result<Option<Interval1D>> {
    let foci = Foci::new(u, w)?;
    Ok(interval_of(&foci, r))
}

fn interval_of(foci: &Foci, r: f64) -> Option<Interval1D> {
    let (flat, m) = foci.median();
    let slack = 1e-12 * foci.scale();
    if r < m - slack {
        return None;
    }
    if r <= m {
        return Some(flat);
    }
    let k = foci.k();
    // Left end: the decreasing piece where g crosses r.
    let mut lo = flat.lo;
    for s in 0..=k {
        let (slope, icpt) = foci.piece(s);
        if slope >= 0.0 {
            break;
        }
        if s == k || foci.g(foci.at(s + 1)) <= r {
            lo = (r - icpt) / slope;
            break;
        }
    }
    let mut hi = flat.hi;
    for s in (0..=k).rev() {
        let (slope, icpt) = foci.piece(s);
        if slope <= 0.0 {
            break;
        }
        if s == 0 || foci.g(foci.at(s)) <= r {
            hi = (r - icpt) / slope;
            break;
        }
    }
    Some(Interval1D { lo, hi })
}

/// Pieces `(s₀, s_f)` that pass the validity condition
/// `u_{s_f} − u_{s₀+1} < D < u_{s_f+1} − u_{s₀}` and whose crossing point is
/// consistent, i.e. actually lies on pieces `s₀` and `s_f`.
///
/// Foci are merged and sorted, so indices refer to distinct foci in
/// ascending order.
pub fn consistent_pairs(a: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<(usize, usize)>> {
    let foci = Foci::new(u, w)?;
    let (a0, af) = extremes(a)?;
    Ok(pair_candidates(&foci, af - a0)
        .filter(|c| c.consistent)
        .map(|c| (c.s0, c.sf))
        .collect())
}

struct PairCandidate {
    s0: usize,
    sf: usize,
    t: f64,
    consistent: bool,
}

fn pair_candidates(foci: &Foci, span: f64) -> impl Iterator<Item = PairCandidate> + '_ {
    let k = foci.k();
    let slack = 1e-12 * foci.scale().max(span);
    (0..=k).flat_map(move |s0| {
        (s0 + 1..=k).filter_map(move |sf| {
            let valid = foci.at(sf) - foci.at(s0 + 1) < span + slack && span < foci.at(sf + 1) - foci.at(s0) + slack;
            if !valid {
                return None;
            }
            // (2W₀ − 1)t − 2P₀ = (2W_f − 1)(t + D) − 2P_f
            let (w0, wf) = (foci.cum_w[s0], foci.cum_w[sf]);
            let (p0, pf) = (foci.cum_p[s0], foci.cum_p[sf]);
            let t = ((2.0 * wf - 1.0) * span - 2.0 * (pf - p0)) / (2.0 * (w0 - wf));
            let consistent = foci.at(s0) <= t + slack
                && t < foci.at(s0 + 1) + slack
                && foci.at(sf) <= t + span + slack
                && t + span < foci.at(sf + 1) + slack;
            Some(PairCandidate { s0, sf, t, consistent })
        })
    })
}

fn extremes(a: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() {
        return Err(invalid("demand set is empty"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("demand points must be finite"));
    }
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Minimum covering radius on the line and an optimal translation.
///
/// When the optimal translations form an interval the midpoint is returned.
pub fn solve_1d(a: &[f64], u: &[f64], w: &[f64]) -> Result<Solution1D> {
    let foci = Foci::new(u, w)?;
    let (a0, af) = extremes(a)?;
    let span = af - a0;

    let (flat, m) = foci.median();
    if span <= flat.len() {
        // Both extremes fit on the flat piece: t ∈ [flat.lo, flat.hi − D].
        let t = 0.5 * (flat.lo + flat.hi - span);
        return Ok(Solution1D {
            x: a0 - t,
            r: m,
            branch: Branch1D::Median,
        });
    }
    let (first, last) = (foci.u[0], foci.u[foci.k() - 1]);
    if 0.5 * span >= (foci.mean - first).max(last - foci.mean) {
        return Ok(Solution1D {
            x: 0.5 * (af + a0) - foci.mean,
            r: 0.5 * span,
            branch: Branch1D::Explicit,
        });
    }

    let cover = |t: f64| foci.g(t).max(foci.g(t + span));
    let mut best: Option<(f64, f64)> = None;
    for cand in pair_candidates(&foci, span) {
        if cand.consistent {
            // The crossing is unique, so the first consistent pair is optimal.
            let r = cover(cand.t);
            best = Some((r, cand.t));
            break;
        }
    }
    let (r, t) = match best {
        Some(found) => found,
        None => fallback_minimum(&foci, span),
    };
    Ok(Solution1D {
        x: a0 - t,
        r,
        branch: Branch1D::PairSearch,
    })
}

/// Minimum of `max(g(t), g(t + D))` over breakpoints and all piece
/// crossings; only reached when rounding defeats every consistency check.
fn fallback_minimum(foci: &Foci, span: f64) -> (f64, f64) {
    let cover = |t: f64| foci.g(t).max(foci.g(t + span));
    let mut ts: Vec<f64> = foci.u.iter().flat_map(|&u| [u, u - span]).collect();
    ts.extend(pair_candidates(foci, span).map(|c| c.t));
    ts.into_iter()
        .filter(|t| t.is_finite())
        .map(|t| (cover(t), t))
        .min_by(|p, q| p.0.total_cmp(&q.0))
        .expect("at least one focus")
}
