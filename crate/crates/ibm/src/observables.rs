//! Global order, histograms and coarse fields.

use std::f64::consts::TAU;

use crate::system::ParticleSystem;
use crate::{IbmError, Result};

#[derive(Debug, Clone)]
pub struct Observables {
    /// J = (1/N) Σ V_j.
    pub flux: [f64; 2],
    pub order: f64,
    pub mean_direction: f64,
    /// Heading counts per W bin, `n_angle` bins on [0, 2π) each.
    pub w_histograms: Vec<Vec<usize>>,
    /// Particles per W bin.
    pub w_counts: Vec<usize>,
    /// Number density per cell, row-major ny × nx.
    pub density: Vec<f64>,
    /// Σ V / cell area per cell.
    pub flux_field: Vec<[f64; 2]>,
}

pub fn global_flux(theta: &[f64]) -> [f64; 2] {
    let n = theta.len() as f64;
    let (s, c) = theta.iter().fold((0.0, 0.0), |(s, c), t| {
        let (a, b) = t.sin_cos();
        (s + a, c + b)
    });
    [c / n, s / n]
}

pub fn observables(sys: &ParticleSystem, w_edges: &[f64], n_angle: usize, dims: (usize, usize)) -> Result<Observables> {
    if sys.n() == 0 {
        return Err(IbmError::Param("empty system".into()));
    }
    if w_edges.len() < 2 || w_edges.windows(2).any(|e| !(e[1] > e[0])) {
        return Err(IbmError::Param("W bin edges must be increasing, at least two".into()));
    }
    let (nx, ny) = dims;
    if n_angle == 0 || nx == 0 || ny == 0 {
        return Err(IbmError::Param("histogram and field sizes must be positive".into()));
    }
    let flux = global_flux(&sys.theta);
    let nb = w_edges.len() - 1;
    let mut w_histograms = vec![vec![0usize; n_angle]; nb];
    let mut w_counts = vec![0usize; nb];
    for (&t, &w) in sys.theta.iter().zip(sys.w()) {
        let b = w_edges.partition_point(|&e| e <= w);
        if b == 0 || (b > nb && w > w_edges[nb]) {
            continue;
        }
        let b = (b - 1).min(nb - 1);
        let a = ((t / TAU * n_angle as f64) as usize).min(n_angle - 1);
        w_histograms[b][a] += 1;
        w_counts[b] += 1;
    }
    let l = sys.params.box_len;
    let area = (l / nx as f64) * (l / ny as f64);
    let mut density = vec![0.0; nx * ny];
    let mut flux_field = vec![[0.0; 2]; nx * ny];
    for (p, &t) in sys.pos.iter().zip(&sys.theta) {
        let i = ((p[0] / l * nx as f64) as usize).min(nx - 1);
        let j = ((p[1] / l * ny as f64) as usize).min(ny - 1);
        let (s, c) = t.sin_cos();
        density[j * nx + i] += 1.0 / area;
        flux_field[j * nx + i][0] += c / area;
        flux_field[j * nx + i][1] += s / area;
    }
    Ok(Observables {
        flux,
        order: flux[0].hypot(flux[1]),
        mean_direction: flux[1].atan2(flux[0]).rem_euclid(TAU),
        w_histograms,
        w_counts,
        density,
        flux_field,
    })
}

/// Density histogram (integrates to 1) of θ − reference over [0, 2π).
pub fn relative_histogram(theta: &[f64], reference: f64, n_bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; n_bins];
    let width = TAU / n_bins as f64;
    for &t in theta {
        let u = (t - reference).rem_euclid(TAU);
        h[((u / width) as usize).min(n_bins - 1)] += 1.0;
    }
    let scale = 1.0 / (theta.len() as f64 * width);
    h.iter_mut().for_each(|v| *v *= scale);
    h
}

/// Σ |h_i − p_i| Δ over equal bins on [0, 2π).
pub fn l1_distance(h: &[f64], p: &[f64]) -> f64 {
    let width = TAU / h.len() as f64;
    h.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() * width
}

/// Bin averages of a density sampled on a uniform periodic grid whose size is
/// a multiple of the bin count.
pub fn bin_average(samples: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 || samples.len() % n_bins != 0 {
        return Err(IbmError::Param(format!("{} samples do not split into {n_bins} bins", samples.len())));
    }
    let per = samples.len() / n_bins;
    // Bin i covers [iΔ, (i+1)Δ]; trapezoid over its per+1 nodes.
    Ok((0..n_bins)
        .map(|i| {
            let s: f64 = (0..=per)
                .map(|q| {
                    let v = samples[(i * per + q) % samples.len()];
                    if q == 0 || q == per {
                        0.5 * v
                    } else {
                        v
                    }
                })
                .sum();
            s / per as f64
        })
        .collect())
}
