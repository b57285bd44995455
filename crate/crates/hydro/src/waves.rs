//! Plane-wave measurements on 1D meshes: initialize a small linear mode,
//! evolve it, and read speeds or frequencies off one Fourier coefficient.

use crate::large::{max_stable_dt_l, step_sohr_l, HydroStateL};
use crate::mesh::Mesh;
use crate::small::{step_sohr_s, wrap_angle, HydroStateS, SmallParams};
use crate::{HydroError, Result, StepOptions, CFL_LIMIT};
use num_complex::Complex64;
use rotalign_core::coefficients::{CoefficientTable, WDensity};
use std::f64::consts::PI;
use std::sync::Arc;

/// Basis vectors e^{−ikx} at the cell centers of a line mesh, for mode m.
fn basis(mesh: &Mesh, mode: usize) -> Vec<Complex64> {
    let k = 2.0 * PI * mode as f64 / mesh.lx;
    (0..mesh.cells()).map(|c| Complex64::from_polar(1.0, -k * mesh.center(c)[0])).collect()
}

pub fn fourier_mode(mesh: &Mesh, values: &[f64], mode: usize) -> Complex64 {
    let b = basis(mesh, mode);
    values.iter().zip(&b).map(|(v, e)| e * v).sum::<Complex64>() / values.len() as f64
}

/// Least-squares slope of the unwrapped phase, as a speed −dφ/dt / k.
pub fn phase_speed(times: &[f64], modes: &[Complex64], k: f64) -> Result<f64> {
    if times.len() < 3 || times.len() != modes.len() {
        return Err(HydroError::Param("need at least three samples".into()));
    }
    let mut phases = Vec::with_capacity(modes.len());
    let mut prev = modes[0].arg();
    let mut acc = prev;
    for z in modes {
        acc += wrap_angle(z.arg() - prev);
        prev = z.arg();
        phases.push(acc);
    }
    let n = times.len() as f64;
    let tm = times.iter().sum::<f64>() / n;
    let pm = phases.iter().sum::<f64>() / n;
    let num: f64 = times.iter().zip(&phases).map(|(t, p)| (t - tm) * (p - pm)).sum();
    let den: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    Ok(-num / den / k)
}

/// Angular frequency from the linearly interpolated zero crossings.
pub fn standing_frequency(times: &[f64], values: &[f64]) -> Result<f64> {
    let mut crossings = Vec::new();
    for i in 1..times.len().min(values.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a == 0.0 || a.signum() != b.signum() && b != 0.0 {
            crossings.push(times[i - 1] + (times[i] - times[i - 1]) * a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return Err(HydroError::Param(format!("only {} zero crossings", crossings.len())));
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Ok(PI * (crossings.len() - 1) as f64 / span)
}

#[derive(Debug, Clone, Copy)]
pub struct WaveSetup {
    pub cells: usize,
    pub length: f64,
    pub amplitude: f64,
    /// Fraction of the CFL limit used for dt.
    pub cfl_fraction: f64,
}

impl Default for WaveSetup {
    fn default() -> Self {
        WaveSetup { cells: 1024, length: 1.0, amplitude: 1e-4, cfl_fraction: 0.8 }
    }
}

/// Measured speeds of the two modes of the small angular velocity system
/// about (ρ, φ) = (1, θ) with Y = 0, for a wave along x. Each run starts
/// from a right eigenvector of the linearized system and tracks the phase
/// of the dominant component. Returned in the order (slow, fast).
pub fn sohr_s_plane_wave(p: SmallParams, theta: f64, setup: WaveSetup) -> Result<(f64, f64)> {
    let mesh = Mesh::line(setup.cells, setup.length)?;
    let (s, c) = theta.sin_cos();
    let a = [[p.c1 * c, -p.c1 * s], [-p.d * s, p.c2 * c]];
    let (g_lo, g_hi) = crate::eigen::soh_linearized_speeds(p.c1, p.c2, p.d, theta);
    let speed = p.c1.abs().max(p.c2.abs()).max(p.d.sqrt());
    let dt = setup.cfl_fraction * CFL_LIMIT / (speed * mesh.inv_spacing_sum());
    let k = 2.0 * PI / mesh.lx;
    let b = basis(&mesh, 1);
    let mut out = [0.0; 2];
    for (slot, g) in [g_lo, g_hi].into_iter().enumerate() {
        let r = eigenvector(a, g);
        let dominant = if r[0].abs() >= r[1].abs() { 0 } else { 1 };
        let n = mesh.cells();
        let rho: Vec<f64> = (0..n).map(|i| 1.0 + setup.amplitude * r[0] * (k * mesh.center(i)[0]).cos()).collect();
        let phi: Vec<f64> = (0..n).map(|i| theta + setup.amplitude * r[1] * (k * mesh.center(i)[0]).cos()).collect();
        let mut st = HydroStateS::new(mesh, rho, vec![0.0; n], phi)?;
        let t_end = 0.5 * mesh.lx / g.abs().max(0.1);
        let steps = (t_end / dt).ceil() as usize;
        let every = (steps / 60).max(1);
        let (mut times, mut modes) = (Vec::new(), Vec::new());
        for i in 0..=steps {
            if i % every == 0 {
                let z: Complex64 = if dominant == 0 {
                    st.rho.iter().zip(&b).map(|(v, e)| e * (v - 1.0)).sum()
                } else {
                    st.phi.iter().zip(&b).map(|(v, e)| e * wrap_angle(v - theta)).sum()
                };
                times.push(st.time);
                modes.push(z);
            }
            if i < steps {
                step_sohr_s(&mut st, p, dt, StepOptions::default())?;
            }
        }
        out[slot] = phase_speed(&times, &modes, k)?;
    }
    Ok((out[0], out[1]))
}

fn eigenvector(a: [[f64; 2]; 2], g: f64) -> [f64; 2] {
    let tiny = 1e-12;
    let r = if a[0][1].abs() > tiny {
        [a[0][1], g - a[0][0]]
    } else if a[1][0].abs() > tiny {
        [g - a[1][1], a[1][0]]
    } else if (g - a[0][0]).abs() <= (g - a[1][1]).abs() {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let m = r[0].abs().max(r[1].abs());
    [r[0] / m, r[1] / m]
}

/// Oscillation frequency of the direction field of the large angular
/// velocity system about the uniform state (ρ_W, φ = π/2) for a wave along
/// x, started from a pure direction perturbation. For an even ρ_W the
/// direction mode is a standing wave with frequency equal to the positive
/// dispersion root at ξ = 2π/length, θ = π/2.
pub fn sohr_l_transverse_frequency(table: Arc<CoefficientTable>, rho0: &WDensity, setup: WaveSetup) -> Result<f64> {
    let mesh = Mesh::line(setup.cells, setup.length)?;
    let phi0 = PI / 2.0;
    let mut st = HydroStateL::uniform(mesh, table, rho0, phi0)?;
    let k = 2.0 * PI / mesh.lx;
    for c in 0..mesh.cells() {
        st.phi[c] += setup.amplitude * (k * mesh.center(c)[0]).cos();
    }
    let dt = setup.cfl_fraction * max_stable_dt_l(&st);
    let b = basis(&mesh, 1);
    let (mut times, mut values): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let read = |st: &HydroStateL| st.phi.iter().zip(&b).map(|(v, e)| e.re * (v - phi0)).sum::<f64>();
    let mut crossings = 0;
    let max_steps = 2_000_000;
    for _ in 0..max_steps {
        let v = read(&st);
        if let Some(&last) = values.last() {
            if last.signum() != v.signum() {
                crossings += 1;
            }
        }
        times.push(st.time);
        values.push(v);
        if crossings >= 3 {
            return standing_frequency(&times, &values);
        }
        step_sohr_l(&mut st, dt, StepOptions::default())?;
    }
    Err(HydroError::Param("no oscillation within the step budget".into()))
}
