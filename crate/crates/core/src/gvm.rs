//! Generalized von Mises equilibria Φ_W and the scalars derived from them.

use std::f64::consts::PI;

use crate::angular::{gauss_legendre, integrate_with, spectral_derivative, AngularGrid};
use crate::error::{CoreError, Result};
use crate::vmf::NoiseParam;

/// Largest admissible |w|·2π/d.
pub const EXPONENT_GUARD: f64 = 700.0;

#[derive(Debug, Clone)]
pub struct GvmProfile {
    pub d: NoiseParam,
    pub w: f64,
    pub grid: AngularGrid,
    pub phi: Vec<f64>,
    pub c1_tilde: f64,
    pub psi: f64,
    pub lambda: f64,
    pub c_const: f64,
}

pub fn check_overflow_guard(d: NoiseParam, w: f64) -> Result<()> {
    let e = w.abs() * 2.0 * PI / d.value();
    if !w.is_finite() || e > EXPONENT_GUARD {
        return Err(CoreError::Overflow(format!(
            "|w|·2π/d = {e:.3} exceeds {EXPONENT_GUARD} (w={w}, d={})",
            d.value()
        )));
    }
    Ok(())
}

/// Solve for Φ_W on `grid`.
///
/// Uses the periodic form Φ(θ) ∝ ∫_0^{2π} exp((Wu + cos θ − cos(θ−u))/d) du,
/// which is the closed form with the two cumulative integrals merged into
/// one window. The exponent is shifted by its global maximum.
pub fn solve_gvm(d: NoiseParam, w: f64, grid: &AngularGrid) -> Result<GvmProfile> {
    check_overflow_guard(d, w)?;
    let dv = d.value();
    let shift = (2.0 * PI * w.max(0.0) + 2.0) / dv;

    let panels = (((w.abs() + 2.0) * 2.0 * PI / dv) / 3.0).ceil().max(16.0) as usize;
    let (gx, gw) = gauss_legendre(16);
    let ph = 2.0 * PI / panels as f64;
    let mut us = Vec::with_capacity(panels * gx.len());
    let mut uw = Vec::with_capacity(panels * gx.len());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * ph;
        for (x, wt) in gx.iter().zip(&gw) {
            us.push(mid + 0.5 * ph * x);
            uw.push(0.5 * ph * wt);
        }
    }

    let raw: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&t| {
            let ct = t.cos();
            us.iter()
                .zip(&uw)
                .map(|(&u, &q)| q * ((w * u + ct - (t - u).cos()) / dv - shift).exp())
                .sum::<f64>()
        })
        .collect();
    let delta = grid.weight() * raw.iter().sum::<f64>();
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(CoreError::Numerical(format!("normalization {delta:e} not positive (w={w}, d={dv})")));
    }
    let phi: Vec<f64> = raw.iter().map(|v| v / delta).collect();
    if let Some(j) = phi.iter().position(|&v| !(v > 0.0)) {
        return Err(CoreError::Numerical(format!("Φ not positive at node {j} (w={w}, d={dv})")));
    }

    // −(e^{H(2π)} − 1)/Δ with both factors carrying the same e^{−shift}
    let jump = if w > 0.0 {
        (2.0 * PI * w / dv - shift).exp() - (-shift).exp()
    } else {
        (2.0 * PI * w / dv).exp_m1() * (-shift).exp()
    };
    let c_const = -jump / delta;

    let (fc, fs) = flux(grid, &phi);
    let c1_tilde = fc.hypot(fs);
    if c1_tilde < 1e-12 {
        return Err(CoreError::Numerical(format!("degenerate flux |u| = {c1_tilde:e} (w={w}, d={dv})")));
    }
    let psi = fs.atan2(fc);
    let lambda = integrate_with(grid, |j, t| t.sin() * (t - psi).sin() * phi[j]) / (dv * c1_tilde);

    Ok(GvmProfile { d, w, grid: grid.clone(), phi, c1_tilde, psi, lambda, c_const })
}

fn flux(grid: &AngularGrid, phi: &[f64]) -> (f64, f64) {
    let fc = integrate_with(grid, |j, t| phi[j] * t.cos());
    let fs = integrate_with(grid, |j, t| phi[j] * t.sin());
    (fc, fs)
}

impl GvmProfile {
    /// C(W) from the integrated equation: (∫Φ sin θ − W)/(2πd).
    pub fn c_const_from_flux(&self) -> f64 {
        let (_, fs) = flux(&self.grid, &self.phi);
        (fs - self.w) / (2.0 * PI * self.d.value())
    }

    /// Sup norm of Φ'' − (1/d)((W − sin θ)Φ)', spectrally differentiated.
    pub fn ode_residual(&self) -> Result<f64> {
        let dv = self.d.value();
        let p2 = spectral_derivative(&self.grid, &self.phi, 2)?;
        let q: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.phi)
            .map(|(&t, &p)| (self.w - t.sin()) * p / dv)
            .collect();
        let q1 = spectral_derivative(&self.grid, &q, 1)?;
        Ok(p2.iter().zip(&q1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// ∫Φ sin(θ − ψ), zero when ψ is exact.
    pub fn compat_integral(&self) -> f64 {
        integrate_with(&self.grid, |j, t| self.phi[j] * (t - self.psi).sin())
    }

    pub fn mass(&self) -> f64 {
        self.grid.weight() * self.phi.iter().sum::<f64>()
    }
}

/// Parity report for ±w.
#[derive(Debug, Clone)]
pub struct GvmParity {
    pub plus: GvmProfile,
    pub minus: GvmProfile,
    pub profile_defect: f64,
}

/// Solve at ±w and check Φ_{−W}(θ) = Φ_W(−θ).
pub fn gvm_parity_pair(d: NoiseParam, w: f64, grid: &AngularGrid) -> Result<GvmParity> {
    let plus = solve_gvm(d, w, grid)?;
    let minus = solve_gvm(d, -w, grid)?;
    let defect = (0..grid.n())
        .map(|j| (minus.phi[j] - plus.phi[grid.mirror(j)]).abs())
        .fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(CoreError::Numerical(format!("parity defect {defect:e} at w={w}")));
    }
    Ok(GvmParity { plus, minus, profile_defect: defect })
}

/// ω_Ω(W): Ω rotated by −ψ.
pub fn omega_direction(psi: f64, omega: [f64; 2]) -> Result<[f64; 2]> {
    let norm = omega[0].hypot(omega[1]);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(CoreError::Domain(format!("direction not unit: |Ω| = {norm}")));
    }
    let (s, c) = (-psi).sin_cos();
    Ok([c * omega[0] - s * omega[1], s * omega[0] + c * omega[1]])
}
