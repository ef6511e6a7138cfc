use polyellipse::{Instance, NormSpec, PointSet, SelectionProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points uniform in `[0, scale]^d`.
pub fn points(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> PointSet {
    let data = (0..n * d).map(|_| rng.gen::<f64>() * scale).collect();
    PointSet::new(d, data).unwrap()
}

/// Random positive weights summing to one.
pub fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.1 + rng.gen::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Demand and foci uniform in `[0, 100]^d`.
pub fn instance(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize, norm: NormSpec, weighted: bool) -> Instance {
    let demand = points(rng, n, d, 100.0);
    let foci = points(rng, k, d, 100.0);
    let w = if weighted { weights(rng, k) } else { vec![1.0 / k as f64; k] };
    Instance::new(demand, foci, w, norm).unwrap()
}

pub fn vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| (2.0 * rng.gen::<f64>() - 1.0) * scale).collect()
}

/// Planar ℓ2 foci selection with `n ≤ 20`, `|B| ≤ 8` and `k ≤ 3`.
pub fn selection(rng: &mut ChaCha8Rng) -> SelectionProblem {
    let n = rng.gen_range(5..=20);
    let b = rng.gen_range(3..=8);
    let k = rng.gen_range(1..=3.min(b));
    SelectionProblem::unweighted(points(rng, n, 2, 100.0), points(rng, b, 2, 100.0), k, NormSpec::l2()).unwrap()
}
