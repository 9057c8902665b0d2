//! Deterministic sampling for verification runs.
//!
//! All randomness comes from ChaCha8 seeded with a `u64`, so a report is
//! reproducible from its seed on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expression;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point uniform in `[-1, 1]^dim`.
pub fn unit_cube(rng: &mut SampleRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Random polynomial of total degree at most `degree` (0, 1 or 2) in
/// `vars`, with coefficients uniform in `[-1, 1]`.
pub fn random_polynomial(rng: &mut SampleRng, vars: &[String], degree: u32) -> Expression {
    let mut poly = Expression::constant(rng.gen_range(-1.0..=1.0));
    if degree >= 1 {
        for v in vars {
            let c = rng.gen_range(-1.0..=1.0);
            poly = poly + Expression::constant(c) * Expression::var(v.as_str());
        }
    }
    if degree >= 2 {
        for (i, v) in vars.iter().enumerate() {
            for w in &vars[i..] {
                let c = rng.gen_range(-1.0..=1.0);
                poly = poly
                    + Expression::constant(c)
                        * Expression::var(v.as_str())
                        * Expression::var(w.as_str());
            }
        }
    }
    poly
}

/// Vector of `len` random polynomials.
pub fn random_section(
    rng: &mut SampleRng,
    vars: &[String],
    len: usize,
    degree: u32,
) -> Vec<Expression> {
    (0..len).map(|_| random_polynomial(rng, vars, degree)).collect()
}
