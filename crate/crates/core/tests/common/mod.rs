#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as choose;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surveycal::design::{make_srswor_sample, DesignSample, FinitePopulation, SrsworDesign};

/// Dense KKT solve of `min sum (w - d)^2 / (2 m)` subject to `A w = b`,
/// where each row of `a` is one constraint over the units.
pub fn kkt_calibrate(d: &[f64], metric: &[f64], a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let k = a.len();
    let mut m = DMatrix::<f64>::zeros(n + k, n + k);
    let mut rhs = DVector::<f64>::zeros(n + k);
    for i in 0..n {
        m[(i, i)] = 1.0 / metric[i];
        rhs[i] = d[i] / metric[i];
    }
    for (r, row) in a.iter().enumerate() {
        for i in 0..n {
            m[(n + r, i)] = row[i];
            m[(i, n + r)] = row[i];
        }
        rhs[n + r] = b[r];
    }
    let sol = m.lu().solve(&rhs).expect("nonsingular KKT system");
    sol.iter().take(n).copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive, spread-out x with a noisy linear y.
pub fn random_population(rng: &mut ChaCha8Rng, size: usize) -> FinitePopulation {
    let a = rng.random_range(-20.0..40.0);
    let b = rng.random_range(0.2..3.0);
    let x: Vec<f64> = (0..size).map(|_| rng.random_range(1.0..100.0)).collect();
    let y = x
        .iter()
        .map(|&v| a + b * v + rng.random_range(-15.0..15.0))
        .collect();
    FinitePopulation::new(y, x).unwrap()
}

pub struct Instance {
    pub pop: FinitePopulation,
    pub design: SrsworDesign,
    pub sample: DesignSample,
}

/// An SRSWOR sample of size in `[n_min, n_max]` from a random population of
/// at most `big_n_max` units.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    big_n_max: usize,
    n_min: usize,
    n_max: usize,
) -> Instance {
    let n = rng.random_range(n_min..=n_max);
    let big_n = rng.random_range((n + 1).max(n_max)..=big_n_max);
    let pop = random_population(rng, big_n);
    let design = SrsworDesign::new(big_n, n).unwrap();
    let mut idx = choose(rng, big_n, n).into_vec();
    idx.sort_unstable();
    let sample = make_srswor_sample(&pop, &design, &idx).unwrap();
    Instance {
        pop,
        design,
        sample,
    }
}

pub fn random_q(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}
