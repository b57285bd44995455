//! Initial-condition samplers.

use std::f64::consts::TAU;

use rand::Rng;

use crate::{IbmError, Result};

pub fn uniform_positions<R: Rng>(n: usize, l: f64, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.gen::<f64>() * l, rng.gen::<f64>() * l]).collect()
}

pub fn uniform_angles<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * TAU).collect()
}

/// Angles with density ∝ exp(cos(θ − mean)/d), by rejection from the uniform
/// law with acceptance exp((cos u − 1)/d).
pub fn vmf_angles<R: Rng>(n: usize, d: f64, mean: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(d.is_finite() && d > 0.0) {
        return Err(IbmError::Param(format!("noise ratio must be positive, got {d}")));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u = rng.gen::<f64>() * TAU;
        if rng.gen::<f64>() < ((u.cos() - 1.0) / d).exp() {
            out.push((u + mean).rem_euclid(TAU));
        }
    }
    Ok(out)
}
