//! Seeded random instances: demand uniform in `[0, 100]^d`, foci drawn from
//! the demand points without replacement.

use crate::error::{CliError, Result};
use polyellipse::{Instance, NormSpec, PointSet};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BOX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub norm: NormSpec,
    pub seed: u64,
    /// Random normalized foci weights instead of `1/k`.
    pub weighted: bool,
    /// Number of extra candidate foci, uniform in the same box.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    pub candidates: Option<PointSet>,
}

pub fn generate_instance(spec: &GenerateSpec) -> Result<Generated> {
    if spec.n == 0 || spec.k == 0 || spec.d == 0 {
        return Err(CliError::Input("n, k and d must be positive".into()));
    }
    if spec.n < spec.k {
        return Err(CliError::Input(format!(
            "cannot draw {} foci from {} demand points",
            spec.k, spec.n
        )));
    }
    spec.norm.check_dim(spec.d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let demand = uniform_points(&mut rng, spec.n, spec.d)?;
    let mut picks = sample(&mut rng, spec.n, spec.k).into_vec();
    picks.sort_unstable();
    let foci = demand.select(&picks);
    let weights = if spec.weighted {
        // 1 − U(0,1) lies in (0, 1], so every weight is positive.
        let raw: Vec<f64> = (0..spec.k).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    } else {
        vec![1.0 / spec.k as f64; spec.k]
    };
    let candidates = (spec.candidates > 0)
        .then(|| uniform_points(&mut rng, spec.candidates, spec.d))
        .transpose()?;
    let instance = Instance::new(demand, foci, weights, spec.norm.clone())?;
    Ok(Generated { instance, candidates })
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<PointSet> {
    let data = (0..n * d).map(|_| rng.gen::<f64>() * BOX).collect();
    Ok(PointSet::new(d, data)?)
}
