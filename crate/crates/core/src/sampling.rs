//! Deterministic low-discrepancy sampling of unit hypercubes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Additive recurrence `x_i = frac(shift + i·α)` with `α` built from the
/// generalized golden ratio of the dimension. The seed only draws the
/// Cranley–Patterson shift, so every seed gives an equally uniform point set.
#[derive(Clone, Debug)]
pub struct Kronecker {
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        // root of x^{d+1} = x + 1
        let mut phi = 2.0_f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|k| (1.0 / phi.powi(k as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self { alpha, shift }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.shift)
            .map(|(a, s)| (s + (i as f64 + 1.0) * a).fract())
            .collect()
    }
}
