//! Periodic angular grids, quadrature and modified Bessel functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};

pub const DEFAULT_N: usize = 512;

/// Uniform grid on [0, 2π) with the periodic trapezoid weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    n: usize,
    nodes: Vec<f64>,
    weight: f64,
}

/// Build a grid with `n` nodes θ_j = 2πj/n.
pub fn periodic_grid(n: usize) -> Result<AngularGrid> {
    if n < 8 || n % 2 != 0 {
        return Err(CoreError::Grid(format!("n must be even and ≥ 8, got {n}")));
    }
    let h = 2.0 * PI / n as f64;
    let nodes = (0..n).map(|j| j as f64 * h).collect();
    Ok(AngularGrid { n, nodes, weight: h })
}

impl AngularGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Index of the node at −θ_j.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Sample `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&t| f(t)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(CoreError::Grid(format!(
                "sample length {len} does not match grid size {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Periodic trapezoid rule: weight · Σ samples.
pub fn trapezoid_periodic(grid: &AngularGrid, samples: &[f64]) -> Result<f64> {
    grid.check_len(samples.len())?;
    Ok(grid.weight * samples.iter().sum::<f64>())
}

/// Quadrature of a product of sampled functions and an integrand factor.
pub(crate) fn integrate_with(grid: &AngularGrid, f: impl Fn(usize, f64) -> f64) -> f64 {
    grid.weight * grid.nodes.iter().enumerate().map(|(j, &t)| f(j, t)).sum::<f64>()
}

/// Derivative of order `order` of periodic samples, by FFT.
///
/// For odd orders the Nyquist mode is dropped so the result stays real.
pub fn spectral_derivative(grid: &AngularGrid, samples: &[f64], order: u32) -> Result<Vec<f64>> {
    grid.check_len(samples.len())?;
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    for (m, c) in buf.iter_mut().enumerate() {
        let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        if m == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        *c *= Complex64::new(0.0, k).powu(order);
    }
    inv.process(&mut buf);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

const SERIES_LIMIT: f64 = 15.0;
const BESSEL_QUAD_N: usize = 1024;
/// Largest argument before e^x overflows.
pub const BESSEL_MAX_X: f64 = 700.0;

/// Modified Bessel function of the first kind I_k(x) for k ∈ {0, 1, 2}.
pub fn bessel_i(k: u32, x: f64) -> Result<f64> {
    if k > 2 {
        return Err(CoreError::Domain(format!("Bessel order {k} not supported")));
    }
    if !(x >= 0.0) {
        return Err(CoreError::Domain(format!("Bessel argument must be ≥ 0, got {x}")));
    }
    if x > BESSEL_MAX_X {
        return Err(CoreError::Domain(format!("Bessel argument {x} overflows (limit {BESSEL_MAX_X})")));
    }
    if x <= SERIES_LIMIT {
        Ok(bessel_series(k, x))
    } else {
        Ok(bessel_quadrature(k, x))
    }
}

fn bessel_series(k: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut lead = 1.0;
    for i in 1..=k {
        lead *= 0.5 * x / i as f64;
    }
    let mut term = lead;
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= q / (m * (m + k as f64));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        m += 1.0;
    }
    sum
}

fn bessel_quadrature(k: u32, x: f64) -> f64 {
    // (1/2π) ∮ e^{x cos θ} cos kθ dθ, with e^x factored out
    let h = 2.0 * PI / BESSEL_QUAD_N as f64;
    let s: f64 = (0..BESSEL_QUAD_N)
        .map(|j| {
            let t = j as f64 * h;
            (x * (t.cos() - 1.0)).exp() * (k as f64 * t).cos()
        })
        .sum();
    s / BESSEL_QUAD_N as f64 * x.exp()
}

/// Gauss–Legendre nodes and weights on [−1, 1], m ≥ 2.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for l in 2..=m {
                let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Running integral F(θ_j) = ∫_0^{θ_j} f, exact per cell up to Gauss–Legendre order.
pub(crate) fn cumulative_integral(grid: &AngularGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(10);
    let h = grid.weight;
    let mut out = Vec::with_capacity(grid.n);
    let mut acc = 0.0;
    for &a in &grid.nodes {
        out.push(acc);
        let mid = a + 0.5 * h;
        acc += 0.5 * h * gx.iter().zip(&gw).map(|(&x, &w)| w * f(mid + 0.5 * h * x)).sum::<f64>();
    }
    out
}

/// Wrap an angle to [0, 2π).
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Wrap an angle difference to (−π, π].
pub fn wrap_diff(t: f64) -> f64 {
    let r = wrap_angle(t + PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}
