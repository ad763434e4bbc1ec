//! Seeded random scalars, vectors and point clouds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linspace::Vector;
use crate::scalars::{FieldSpec, PAdic, Scalar};

/// Radii used by [`mixed_cloud`].
pub const CLOUD_RADII: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unit<R: Rng>(prime: u64, precision: u32, rng: &mut R) -> u64 {
    let modulus = prime.pow(precision);
    let mut u = rng.gen_range(1..modulus);
    if u % prime == 0 {
        u = if u + 1 < modulus { u + 1 } else { u - 1 };
    }
    u
}

/// Random scalar with `|x| <= magnitude`.
pub fn random_scalar<R: Rng>(field: FieldSpec, magnitude: f64, rng: &mut R) -> Scalar {
    match field {
        FieldSpec::RealPower { exponent } => {
            let r = magnitude.powf(1.0 / exponent);
            Scalar::Real(rng.gen_range(-r..=r))
        }
        FieldSpec::PAdic { prime, precision } => {
            if rng.gen_bool(0.05) {
                return field.zero();
            }
            let p = prime as f64;
            // smallest valuation v with p^{-v} <= magnitude
            let vmin = (-(magnitude.ln() / p.ln()) - 1e-9).ceil() as i64;
            let v = vmin + rng.gen_range(0..5);
            Scalar::PAdic(PAdic::from_parts(prime, precision, v, random_unit(prime, precision, rng)))
        }
    }
}

pub fn random_vector<R: Rng>(field: FieldSpec, dim: usize, magnitude: f64, rng: &mut R) -> Vector {
    Vector::new(field, (0..dim).map(|_| random_scalar(field, magnitude, rng)).collect())
}

/// Random vector in the open coordinate-max ball `||x|| < radius`.
pub fn vector_in_ball<R: Rng>(field: FieldSpec, dim: usize, radius: f64, rng: &mut R) -> Vector {
    match field {
        FieldSpec::RealPower { exponent } => {
            let r = radius.powf(1.0 / exponent) * (1.0 - 1e-12);
            let coords = (0..dim).map(|_| Scalar::Real(rng.gen_range(-r..r))).collect();
            Vector::new(field, coords)
        }
        FieldSpec::PAdic { prime, .. } => {
            let p = prime as f64;
            // largest power of p strictly below radius
            let v = (-(radius.ln() / p.ln()) + 1e-9).floor() as i64 + 1;
            random_vector(field, dim, p.powi(-v as i32), rng)
        }
    }
}

/// Point cloud with radii cycling through [`CLOUD_RADII`].
pub fn mixed_cloud(field: FieldSpec, dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| random_vector(field, dim, CLOUD_RADII[i % CLOUD_RADII.len()], &mut r))
        .collect()
}

/// Point cloud inside the open ball of the given radius.
pub fn ball_cloud(field: FieldSpec, dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let mut r = rng(seed);
    (0..count).map(|_| vector_in_ball(field, dim, radius, &mut r)).collect()
}

/// Pairs `(x, y)` with `x` drawn from a mixed cloud and `y` a perturbation
/// of `x` at a random scale, so that both near and far pairs occur.
pub fn pair_cloud(field: FieldSpec, dim: usize, count: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let x = random_vector(field, dim, CLOUD_RADII[i % CLOUD_RADII.len()], &mut r);
            let scale = CLOUD_RADII[r.gen_range(0..CLOUD_RADII.len())];
            let y = &x + &random_vector(field, dim, scale, &mut r);
            (x, y)
        })
        .collect()
}
