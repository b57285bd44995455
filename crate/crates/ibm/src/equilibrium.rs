//! Homogeneous equilibrium recipe: a globally coupled system with a single
//! intrinsic angular velocity, compared against the kinetic equilibrium Φ_W.

use rotalign_core::angular::periodic_grid;
use rotalign_core::gvm::solve_gvm;
use rotalign_core::vmf::NoiseParam;

use crate::observables::{bin_average, global_flux, l1_distance, relative_histogram};
use crate::psi::PsiTable;
use crate::sampling::{uniform_positions, vmf_angles};
use crate::system::{init_rng, IbmParams, Law, ParticleSystem};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumSpec {
    pub law: Law,
    pub n: usize,
    /// Intrinsic angular velocity shared by all particles.
    pub w: f64,
    /// D/ν with ν = 1.
    pub d: f64,
    pub dt: f64,
    /// Burn-in duration in units of 1/ν.
    pub burn_in: f64,
    pub snapshots: usize,
    /// Time between snapshots.
    pub spacing: f64,
    pub bins: usize,
    pub seed: u64,
    pub serial: bool,
}

impl Default for EquilibriumSpec {
    fn default() -> Self {
        EquilibriumSpec {
            law: Law::S,
            n: 100_000,
            w: 0.0,
            d: 0.2,
            dt: 0.01,
            burn_in: 50.0,
            snapshots: 10,
            spacing: 1.0,
            bins: 64,
            seed: 20_240_601,
            serial: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub l1: f64,
    pub psi: f64,
    pub order: f64,
    pub histogram: Vec<f64>,
    pub reference: Vec<f64>,
}

pub fn run_equilibrium(spec: &EquilibriumSpec) -> Result<EquilibriumResult> {
    let d = NoiseParam::new(spec.d)?;
    let grid = periodic_grid(spec.bins * 8)?;
    let gvm = solve_gvm(d, spec.w, &grid)?;
    let psi_table = match spec.law {
        Law::S => None,
        Law::L => Some(PsiTable::from_pairs(vec![(spec.w, gvm.psi)])?),
    };
    let psi = if spec.law == Law::L { gvm.psi } else { 0.0 };
    let params = IbmParams { box_len: 1.0, nu: 1.0, diff: spec.d, speed: 1.0, radius: 1.0, dt: spec.dt, zero_flux_tol: 1e-12 };
    let mut rng = init_rng(spec.seed);
    let pos = uniform_positions(spec.n, 1.0, &mut rng);
    let theta = vmf_angles(spec.n, spec.d, 0.0, &mut rng)?;
    let mut sys = ParticleSystem::new(params, spec.law, pos, theta, vec![spec.w; spec.n], psi_table, spec.seed)?;
    sys.serial = spec.serial;

    let steps = |t: f64| (t / spec.dt).round() as u64;
    sys.run(steps(spec.burn_in))?;
    let mut hist = vec![0.0; spec.bins];
    let mut order = 0.0;
    for s in 0..spec.snapshots.max(1) {
        if s > 0 {
            sys.run(steps(spec.spacing))?;
        }
        let j = global_flux(&sys.theta);
        order += j[0].hypot(j[1]);
        // Frame of the force direction: mean direction rotated back by ψ.
        let h = relative_histogram(&sys.theta, j[1].atan2(j[0]) - psi, spec.bins);
        hist.iter_mut().zip(&h).for_each(|(a, b)| *a += b);
    }
    let m = spec.snapshots.max(1) as f64;
    hist.iter_mut().for_each(|v| *v /= m);
    let reference = bin_average(&gvm.phi, spec.bins)?;
    Ok(EquilibriumResult { l1: l1_distance(&hist, &reference), psi, order: order / m, histogram: hist, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_aligned_system_near_vmf() {
        let spec = EquilibriumSpec { n: 5000, burn_in: 10.0, snapshots: 5, ..Default::default() };
        let r = run_equilibrium(&spec).unwrap();
        assert!(r.l1 < 0.15, "{}", r.l1);
        assert!((r.histogram.iter().sum::<f64>() * std::f64::consts::TAU / 64.0 - 1.0).abs() < 1e-12);
    }
}
