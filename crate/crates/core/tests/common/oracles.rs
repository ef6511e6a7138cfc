//! Independent reference computations, deliberately naive.

use itertools::Itertools;
use polyellipse::{solve_decomposition, NormSpec, PointSet, SelectionProblem, SolverConfig};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Minimum enclosing circle radius by trying every circle through two or
/// three points.
pub fn mec_radius(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    if n == 1 {
        return 0.0;
    }
    let covers = |c: &[f64; 2], r: f64| points.iter().all(|p| dist(p, c) <= r * (1.0 + 1e-12) + 1e-12);
    let mut best = f64::INFINITY;
    for (i, j) in (0..n).tuple_combinations() {
        let c = [(points[i][0] + points[j][0]) / 2.0, (points[i][1] + points[j][1]) / 2.0];
        let r = dist(&points[i], &c);
        if r < best && covers(&c, r) {
            best = r;
        }
    }
    for (i, j, k) in (0..n).tuple_combinations() {
        let (a, b, c) = (points[i], points[j], points[k]);
        let det = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        if det.abs() < 1e-12 {
            continue;
        }
        let sq = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1];
        let cx = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / det;
        let cy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / det;
        let center = [cx, cy];
        let r = dist(&a, &center);
        if r < best && covers(&center, r) {
            best = r;
        }
    }
    best
}

/// Minimum of `f` over a planar box by a coarse grid followed by repeated
/// zooming around the best cell. Reliable for convex `f`.
pub fn grid_min(f: impl Fn(&[f64]) -> f64, lo: [f64; 2], hi: [f64; 2], cells: usize, zooms: usize) -> (f64, [f64; 2]) {
    let (mut lo, mut hi) = (lo, hi);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for _ in 0..=zooms {
        let h = [(hi[0] - lo[0]) / cells as f64, (hi[1] - lo[1]) / cells as f64];
        for i in 0..=cells {
            for j in 0..=cells {
                let p = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]];
                let v = f(&p);
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
        let c = best.1;
        lo = [c[0] - 2.0 * h[0], c[1] - 2.0 * h[1]];
        hi = [c[0] + 2.0 * h[0], c[1] + 2.0 * h[1]];
    }
    best
}

/// Weighted sum of distances, evaluated directly.
pub fn weber_value(points: &PointSet, weights: &[f64], norm: &NormSpec, x: &[f64]) -> f64 {
    points
        .rows()
        .zip(weights)
        .map(|(p, w)| {
            let v: Vec<f64> = p.iter().zip(x).map(|(a, b)| b - a).collect();
            w * norm.eval(&v)
        })
        .sum()
}

/// Simplex projection by bisection on the threshold `θ` in
/// `Σ max(v_i − θ, 0) = 1`.
pub fn simplex_by_bisection(v: &[f64]) -> Vec<f64> {
    let excess = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - 1.0;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (max - 1.0, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).max(0.0)).collect()
}

/// Best radius over every `k`-subset of candidates, each solved in full.
pub fn brute_force_selection(problem: &SelectionProblem, cfg: &SolverConfig) -> (Vec<usize>, f64) {
    (0..problem.candidates.len())
        .combinations(problem.k)
        .map(|foci| {
            let r = solve_decomposition(&problem.instance(&foci).unwrap(), cfg).unwrap().solution.radius;
            (foci, r)
        })
        .fold((Vec::new(), f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}
