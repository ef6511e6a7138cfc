//! Property checks run through a deterministic proptest runner so the same
//! cases back both the property tests and the acceptance report.

use super::oracles::simplex_by_bisection;
use polyellipse::norms::derive_polar_extremes;
use polyellipse::weber::{weber_solve, WeberConfig};
use polyellipse::{
    om_rearrangement_check, om_subgradient, om_value, polyellipse_interval, project_simplex, Instance, NormSpec,
    OrderedSpec, PointSet,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::f64::consts::PI;

pub type Check = fn() -> Result<(), String>;

/// Every property with its name, in report order.
pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("norm axioms", norm_axioms as Check),
        ("norm subgradient inequality", norm_subgradients),
        ("smoothing bounds and gradients", smoothing_bounds),
        ("block polarity round-trip", polarity_round_trip),
        ("simplex projection vs bisection", simplex_projection),
        ("phi convexity", phi_convexity),
        ("ring containment", ring_containment),
        ("interval nesting and endpoints", interval_nesting),
        ("ordered-median convexity", om_convexity),
        ("ordered-median subgradient inequality", om_subgradients),
        ("ordered-median lambda monotonicity", om_monotonicity),
        ("ordered-median reductions", om_reductions),
        ("rearrangement identity", rearrangement),
    ]
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Regular `2m`-gon, rotated by `theta` and stretched vertically by `s`.
fn polygon_norm(theta: f64, m: usize, s: f64) -> NormSpec {
    let ball: Vec<Vec<f64>> = (0..2 * m)
        .map(|i| {
            let a = theta + i as f64 * PI / m as f64;
            vec![a.cos(), s * a.sin()]
        })
        .collect();
    NormSpec::block(&ball).unwrap()
}

/// A norm together with a dimension it accepts.
fn norm_and_dim() -> impl Strategy<Value = (NormSpec, usize)> {
    prop_oneof![
        (1.0f64..6.0, 1usize..=4).prop_map(|(p, d)| (NormSpec::lp(p).unwrap(), d)),
        (prop::sample::select(vec![1.0, 2.0, f64::INFINITY]), 1usize..=4).prop_map(|(p, d)| (NormSpec::lp(p).unwrap(), d)),
        Just((NormSpec::hex(), 2)),
        (0.0..PI, 2usize..=5, 0.3f64..3.0).prop_map(|(t, m, s)| (polygon_norm(t, m, s), 2)),
    ]
}

fn vec_of(d: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, d)
}

/// Norm, dimension and two vectors.
fn norm_pair() -> impl Strategy<Value = (NormSpec, Vec<f64>, Vec<f64>)> {
    norm_and_dim().prop_flat_map(|(norm, d)| (Just(norm), vec_of(d, 10.0), vec_of(d, 10.0)))
}

/// A single demand point with foci, weights and a norm.
fn one_point_instance() -> impl Strategy<Value = Instance> {
    (norm_and_dim(), 1usize..=5).prop_flat_map(|((norm, d), k)| {
        (
            Just(norm),
            vec_of(d, 10.0),
            prop::collection::vec(vec_of(d, 10.0), k),
            prop::collection::vec(0.05f64..1.0, k),
        )
            .prop_map(|(norm, a, foci, w)| {
                let sum: f64 = w.iter().sum();
                Instance::new(
                    PointSet::from_rows(&[a]).unwrap(),
                    PointSet::from_rows(&foci).unwrap(),
                    w.iter().map(|x| x / sum).collect(),
                    norm,
                )
                .unwrap()
            })
    })
}

/// A one-point instance with two translations in its dimension.
fn instance_and_points() -> impl Strategy<Value = (Instance, Vec<f64>, Vec<f64>, f64)> {
    one_point_instance().prop_flat_map(|inst| {
        let d = inst.dim();
        (Just(inst), vec_of(d, 20.0), vec_of(d, 20.0), 0.0f64..=1.0)
    })
}

/// Non-increasing nonnegative λ of length `k`.
fn lambda(k: usize) -> impl Strategy<Value = OrderedSpec> {
    prop::collection::vec(0.0f64..1.0, k).prop_map(|mut l| {
        l.sort_by(|a, b| b.total_cmp(a));
        OrderedSpec::new(l).unwrap()
    })
}

fn mix(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| t * a + (1.0 - t) * b).collect()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_axioms() -> Result<(), String> {
    run(1000, (norm_pair(), 0.0f64..10.0), |((norm, v, w), t)| {
        let nv = norm.eval(&v);
        let nw = norm.eval(&w);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = v.iter().map(|x| t * x).collect();
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        let tol = 1e-10 * (nv + nw).max(1e-300);
        prop_assert!((norm.eval(&neg) - nv).abs() <= tol, "symmetry");
        prop_assert!((norm.eval(&scaled) - t * nv).abs() <= 1e-10 * (t * nv).max(1e-300), "homogeneity");
        prop_assert!(norm.eval(&sum) <= nv + nw + tol, "triangle inequality");
        prop_assert!(nv >= 0.0);
        Ok(())
    })
}

pub fn norm_subgradients() -> Result<(), String> {
    run(1000, norm_pair(), |(norm, v, w)| {
        let g = norm.subgradient(&v).unwrap();
        let nv = norm.eval(&v);
        let scale = 1e-9 * (nv + norm.eval(&w)).max(1.0);
        prop_assert!((dot(&g, &v) - nv).abs() <= scale, "g·v = ‖v‖");
        prop_assert!(norm.dual_eval(&g) <= 1.0 + 1e-9, "dual norm of g");
        prop_assert!(norm.eval(&w) >= nv + dot(&g, &sub(&w, &v)) - scale, "subgradient inequality");
        Ok(())
    })
}

pub fn smoothing_bounds() -> Result<(), String> {
    let strategy = norm_and_dim().prop_flat_map(|(norm, d)| (Just(norm), vec_of(d, 10.0), -4.0f64..0.0));
    run(1000, strategy, |(norm, v, log_mu)| {
        let mu = 10f64.powf(log_mu);
        let (value, grad) = norm.smoothed_eval(&v, mu).unwrap();
        let exact = norm.eval(&v);
        let c = norm.smoothing_bound(v.len());
        prop_assert!(value >= exact - 1e-12 * exact.max(1.0), "smoothing is an upper bound");
        prop_assert!(value - exact <= c * mu * (1.0 + 1e-9) + 1e-12, "gap {} above {}", value - exact, c * mu);
        let h = 1e-3 * mu;
        for j in 0..v.len() {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (norm.smoothed_eval(&plus, mu).unwrap().0 - norm.smoothed_eval(&minus, mu).unwrap().0) / (2.0 * h);
            prop_assert!(
                (fd - grad[j]).abs() <= 1e-5 * grad[j].abs().max(1.0),
                "coordinate {j}: finite difference {fd} vs gradient {}",
                grad[j]
            );
        }
        Ok(())
    })
}

pub fn polarity_round_trip() -> Result<(), String> {
    run(256, (0.0..PI, 2usize..=6, 0.3f64..3.0), |(t, m, s)| {
        let norm = polygon_norm(t, m, s);
        let polyellipse::norms::NormKind::Block(block) = norm.kind() else {
            return Err(TestCaseError::fail("expected a block norm"));
        };
        let back = derive_polar_extremes(block.polar_extremes()).unwrap();
        prop_assert_eq!(back.len(), block.ball_extremes().len());
        for b in block.ball_extremes() {
            prop_assert!(
                back.iter().any(|q| (q[0] - b[0]).abs() <= 1e-9 && (q[1] - b[1]).abs() <= 1e-9),
                "ball extreme {:?} not recovered",
                b
            );
        }
        Ok(())
    })
}

pub fn simplex_projection() -> Result<(), String> {
    run(1000, prop::collection::vec(-5.0f64..5.0, 1..30), |v| {
        let p = project_simplex(&v);
        let q = simplex_by_bisection(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
        Ok(())
    })
}

pub fn phi_convexity() -> Result<(), String> {
    run(1000, instance_and_points(), |(inst, x, y, t)| {
        let z = mix(&x, &y, t);
        let (fx, fy, fz) = (inst.phi(&x, 0).unwrap(), inst.phi(&y, 0).unwrap(), inst.phi(&z, 0).unwrap());
        prop_assert!(fz <= t * fx + (1.0 - t) * fy + 1e-9);
        Ok(())
    })
}

/// With the Weber optimum `x*`, `r*` of `{a − u}`, every `z` on the level
/// `r = φ(z; a)` lies in the ring `r − r* ≤ ‖z − x*‖ ≤ r + r*`, and convex
/// combinations of points in a sublevel set stay in it.
pub fn ring_containment() -> Result<(), String> {
    run(300, instance_and_points(), |(inst, z1, z2, t)| {
        let a = inst.demand().row(0);
        let shifted: Vec<Vec<f64>> = inst.foci().rows().map(|u| sub(a, u)).collect();
        let weber = weber_solve(
            &PointSet::from_rows(&shifted).unwrap(),
            inst.weights(),
            inst.norm(),
            &WeberConfig::default(),
        )
        .unwrap();
        let r_star = weber.value;
        for z in [&z1, &z2] {
            let r = inst.phi(z, 0).unwrap();
            let dist = inst.norm().eval(&sub(z, &weber.x));
            let tol = 1e-9 * (r + r_star).max(1.0);
            prop_assert!(dist <= r + r_star + tol, "outer ring: {dist} > {r} + {r_star}");
            prop_assert!(dist >= r - r_star - tol, "inner ring: {dist} < {r} - {r_star}");
        }
        let r = inst.phi(&z1, 0).unwrap().max(inst.phi(&z2, 0).unwrap());
        prop_assert!(inst.phi(&mix(&z1, &z2, t), 0).unwrap() <= r + 1e-9 * r.max(1.0), "sublevel set convexity");
        Ok(())
    })
}

pub fn interval_nesting() -> Result<(), String> {
    let strategy = (1usize..=10).prop_flat_map(|k| {
        (
            prop::collection::vec(-50.0f64..50.0, k),
            prop::collection::vec(0.05f64..1.0, k),
            0.0f64..30.0,
            0.0f64..30.0,
        )
    });
    run(1000, strategy, |(mut u, w, e1, e2)| {
        u.sort_by(f64::total_cmp);
        let sum: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let g = |z: f64| u.iter().zip(&w).map(|(ui, wi)| wi * (z - ui).abs()).sum::<f64>();
        let r_star = u.iter().map(|&z| g(z)).fold(f64::INFINITY, f64::min);
        let (r1, r2) = (r_star + e1.min(e2), r_star + e1.max(e2));
        let i1 = polyellipse_interval(&u, &w, r1).unwrap().expect("level above the Weber value");
        let i2 = polyellipse_interval(&u, &w, r2).unwrap().expect("level above the Weber value");
        prop_assert!(i2.lo <= i1.lo + 1e-9 && i1.hi <= i2.hi + 1e-9, "nesting");
        for (iv, r) in [(i1, r1), (i2, r2)] {
            if r > r_star + 1e-9 {
                prop_assert!((g(iv.lo) - r).abs() <= 1e-9 * r.max(1.0), "lo round-trip");
                prop_assert!((g(iv.hi) - r).abs() <= 1e-9 * r.max(1.0), "hi round-trip");
            }
        }
        prop_assert!(polyellipse_interval(&u, &w, r_star - 1e-6 * r_star.max(1.0)).unwrap().is_none());
        Ok(())
    })
}

fn om_case() -> impl Strategy<Value = (Instance, OrderedSpec, Vec<f64>, Vec<f64>, f64)> {
    instance_and_points().prop_flat_map(|(inst, x, y, t)| {
        let k = inst.k();
        (Just(inst), lambda(k), Just(x), Just(y), Just(t))
    })
}

pub fn om_convexity() -> Result<(), String> {
    run(1000, om_case(), |(inst, spec, x, y, t)| {
        let z = mix(&x, &y, t);
        let f = |p: &[f64]| om_value(&inst, &spec, p, 0).unwrap();
        prop_assert!(f(&z) <= t * f(&x) + (1.0 - t) * f(&y) + 1e-9);
        Ok(())
    })
}

pub fn om_subgradients() -> Result<(), String> {
    run(1000, om_case(), |(inst, spec, x, y, _)| {
        let g = om_subgradient(&inst, &spec, &x, 0).unwrap();
        let fx = om_value(&inst, &spec, &x, 0).unwrap();
        let fy = om_value(&inst, &spec, &y, 0).unwrap();
        prop_assert!(fy >= fx + dot(&g, &sub(&y, &x)) - 1e-9 * fx.max(fy).max(1.0));
        Ok(())
    })
}

pub fn om_monotonicity() -> Result<(), String> {
    let strategy = om_case().prop_flat_map(|(inst, spec, x, _, _)| {
        let k = inst.k();
        (Just(inst), Just(spec), lambda(k), Just(x))
    });
    run(1000, strategy, |(inst, spec, extra, x)| {
        let bigger = OrderedSpec::new(spec.lambda().iter().zip(extra.lambda()).map(|(a, b)| a + b).collect()).unwrap();
        let lo = om_value(&inst, &spec, &x, 0).unwrap();
        let hi = om_value(&inst, &bigger, &x, 0).unwrap();
        prop_assert!(lo <= hi + 1e-12 * hi.max(1.0));
        Ok(())
    })
}

pub fn om_reductions() -> Result<(), String> {
    run(1000, instance_and_points(), |(inst, x, _, _)| {
        let k = inst.k();
        let phi = inst.phi(&x, 0).unwrap();
        let sum = om_value(&inst, &OrderedSpec::sum(k).unwrap(), &x, 0).unwrap();
        prop_assert!((sum - phi).abs() <= 1e-12 * phi.max(1.0), "all-ones gives φ");
        let a = inst.demand().row(0);
        let largest = inst
            .foci()
            .rows()
            .zip(inst.weights())
            .map(|(u, w)| w * inst.norm().eval(&sub(&sub(a, u), &x)))
            .fold(0.0, f64::max);
        let max = om_value(&inst, &OrderedSpec::max(k).unwrap(), &x, 0).unwrap();
        prop_assert!((max - largest).abs() <= 1e-12 * largest.max(1.0), "first unit vector gives the max");
        Ok(())
    })
}

pub fn rearrangement() -> Result<(), String> {
    let strategy = (1usize..=7).prop_flat_map(|k| (prop::collection::vec(0.0f64..100.0, k), lambda(k)));
    run(1000, strategy, |(c, spec)| {
        prop_assert!(om_rearrangement_check(&c, &spec).unwrap());
        Ok(())
    })
}
