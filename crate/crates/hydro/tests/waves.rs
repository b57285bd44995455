use rotalign_core::angular::periodic_grid;
use rotalign_core::coefficients::{build_table_on, small_zeta_coeffs, WDensity};
use rotalign_core::dispersion::DispersionProblem;
use rotalign_core::gci::solve_perturbations;
use rotalign_core::vmf::{c1, c2, c5, NoiseParam};
use rotalign_hydro::waves::{sohr_l_transverse_frequency, sohr_s_plane_wave, WaveSetup};
use rotalign_hydro::{
    soh_eigenvalues, soh_linearized_speeds, step_reduced, step_sohr_l, step_sohr_s, HydroStateL, HydroStateS, Mesh,
    ReducedCoeffs, SmallParams, StepOptions,
};
use std::f64::consts::PI;
use std::sync::Arc;

fn params(d: f64) -> SmallParams {
    let nd = NoiseParam::new(d).unwrap();
    SmallParams { c1: c1(nd).unwrap(), c2: c2(nd).unwrap(), d }
}

#[test]
fn momentum_blob_moves_at_c1() {
    let p = params(1.0);
    let mesh = Mesh::line(800, 4.0).unwrap();
    let n = mesh.cells();
    let (x0, w) = (1.0, 0.1);
    let ry: Vec<f64> = (0..n).map(|c| 1e-6 * (-(mesh.center(c)[0] - x0).powi(2) / (2.0 * w * w)).exp()).collect();
    let mut s = HydroStateS::new(mesh, vec![1.0; n], ry, vec![0.0; n]).unwrap();
    let centroid = |s: &HydroStateS| {
        let m: f64 = s.rho_y.iter().sum();
        (0..n).map(|c| s.rho_y[c] * mesh.center(c)[0]).sum::<f64>() / m
    };
    let dt = 0.002;
    while s.time < 2.0 - 1e-12 {
        step_sohr_s(&mut s, p, dt, StepOptions::default()).unwrap();
    }
    let speed = (centroid(&s) - x0) / s.time;
    assert!((speed / p.c1 - 1.0).abs() < 0.03, "speed {speed} vs {}", p.c1);
}

#[test]
fn aligned_plane_waves_match_characteristic_speeds() {
    let p = params(1.0);
    let (lo, hi) = sohr_s_plane_wave(p, 0.0, WaveSetup::default()).unwrap();
    let (g_lo, g_hi) = soh_eigenvalues(p.c1, p.c2, p.d, 0.0);
    assert!((lo / g_lo - 1.0).abs() < 0.05, "{lo} vs {g_lo}");
    assert!((hi / g_hi - 1.0).abs() < 0.05, "{hi} vs {g_hi}");
}

#[test]
fn oblique_plane_waves_follow_the_linearization() {
    let p = params(1.0);
    for theta in [PI / 4.0, PI / 2.0] {
        let (lo, hi) = sohr_s_plane_wave(p, theta, WaveSetup::default()).unwrap();
        let (g_lo, g_hi) = soh_linearized_speeds(p.c1, p.c2, p.d, theta);
        assert!((lo / g_lo - 1.0).abs() < 0.05, "θ={theta}: {lo} vs {g_lo}");
        assert!((hi / g_hi - 1.0).abs() < 0.05, "θ={theta}: {hi} vs {g_hi}");
    }
}

#[test]
fn transverse_wave_matches_dispersion_root() {
    let d = NoiseParam::new(1.0).unwrap();
    let grid = periodic_grid(256).unwrap();
    let table = Arc::new(build_table_on(d, 6.0, 32, &grid).unwrap());
    let rho = WDensity::gaussian(6.0, 32, 0.0, 1.5, 1.0).unwrap();
    let xi = 2.0 * PI;
    let prob = DispersionProblem::new(&table, &rho, xi, PI / 2.0).unwrap();
    let root = prob.closed_form().unwrap()[1];
    let measured = sohr_l_transverse_frequency(table.clone(), &rho, WaveSetup::default()).unwrap();
    assert!((measured / root - 1.0).abs() < 0.05, "{measured} vs {root}");
}

/// One step of the W-resolved system on ζ-compressed densities against one
/// step of the reduced model, with shared dissipation.
fn reduced_gap(zeta: f64) -> f64 {
    let d = NoiseParam::new(1.0).unwrap();
    let grid = periodic_grid(256).unwrap();
    let (w_half, n_w) = (6.0, 32);
    let table = Arc::new(build_table_on(d, zeta * w_half, n_w, &grid).unwrap());
    let base = WDensity::gaussian(zeta * w_half, n_w, zeta, zeta, 1.0).unwrap();
    let pert = solve_perturbations(d, &grid).unwrap();
    let sz = small_zeta_coeffs(&pert).unwrap();
    let coeffs = ReducedCoeffs {
        c1: c1(d).unwrap(),
        c2: c2(d).unwrap(),
        c3: sz.c3,
        c4: sz.c4,
        c5: c5(d).unwrap(),
        c6: sz.c6,
        zeta,
    };

    let mesh = Mesh::line(64, 1.0).unwrap();
    let n = mesh.cells();
    let shape: Vec<f64> = (0..n).map(|c| 1.0 + 0.2 * (2.0 * PI * mesh.center(c)[0]).sin()).collect();
    let phi: Vec<f64> = (0..n).map(|c| 0.3 + 0.4 * (2.0 * PI * mesh.center(c)[0]).cos()).collect();
    let rho_w: Vec<f64> = shape.iter().flat_map(|s| base.values.iter().map(move |v| v * s)).collect();
    let mut large = HydroStateL::new(mesh, table, rho_w, phi.clone()).unwrap();
    let (mass, mom) = (base.mass(), base.angular_momentum() / zeta);
    let mut small = HydroStateS::new(
        mesh,
        shape.iter().map(|s| s * mass).collect(),
        shape.iter().map(|s| s * mom).collect(),
        phi,
    )
    .unwrap();
    let opts = StepOptions { viscosity_speed: Some(2.0), serial: false };
    let dt = 1e-3;
    step_sohr_l(&mut large, dt, opts).unwrap();
    step_reduced(&mut small, coeffs, dt, opts).unwrap();
    let mut gap: f64 = 0.0;
    for c in 0..n {
        gap = gap.max((large.phi[c] - small.phi[c]).abs());
        gap = gap.max((large.cell_mass(c) - small.rho[c]).abs());
    }
    gap / dt
}

#[test]
fn reduced_model_is_second_order_consistent() {
    let gaps: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&z| reduced_gap(z)).collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..4.8).contains(&ratio), "gaps {gaps:?}");
    }
}
