//! Density / angular-momentum / direction systems: the small angular
//! velocity model, its Y ≡ 0 limit and the small-ζ reduction of the large
//! angular velocity model. All share one splitting kernel.

use crate::mesh::{map_cells, Axis, Mesh};
use crate::{HydroError, Result, StepOptions, CFL_LIMIT, VACUUM_FRACTION};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallParams {
    pub c1: f64,
    pub c2: f64,
    pub d: f64,
}

/// Coefficients of the O(ζ) model. c5 plays the role of the pressure
/// coefficient, c3, c4, c6 multiply ζ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroStateS {
    pub mesh: Mesh,
    pub rho: Vec<f64>,
    /// ρY, the angular momentum density.
    pub rho_y: Vec<f64>,
    pub phi: Vec<f64>,
    pub time: f64,
}

impl HydroStateS {
    pub fn new(mesh: Mesh, rho: Vec<f64>, rho_y: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let n = mesh.cells();
        if rho.len() != n || rho_y.len() != n || phi.len() != n {
            return Err(HydroError::Param(format!("fields must have {n} cells")));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(HydroError::Positivity("initial density must be positive".into()));
        }
        if rho_y.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(HydroError::Param("non-finite initial field".into()));
        }
        Ok(HydroStateS { mesh, rho, rho_y, phi, time: 0.0 })
    }

    pub fn uniform(mesh: Mesh, rho: f64, y: f64, phi: f64) -> Result<Self> {
        let n = mesh.cells();
        Self::new(mesh, vec![rho; n], vec![rho * y; n], vec![phi; n])
    }

    pub fn y(&self, c: usize) -> f64 {
        self.rho_y[c] / self.rho[c]
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.mesh.cell_area()
    }

    pub fn angular_momentum(&self) -> f64 {
        self.rho_y.iter().sum::<f64>() * self.mesh.cell_area()
    }
}

/// φ_t + c2(Ω·∇)φ + (P/ρ)(Ω⊥·∇)ρ + ζ(c3+c4)Y(Ω⊥·∇)φ + (ζc6/ρ)(Ω·∇)(ρY) = rot·Y
#[derive(Debug, Clone, Copy)]
struct AngleModel {
    c1: f64,
    c2: f64,
    pressure: f64,
    rotation: bool,
    zy: f64,
    zc6: f64,
}

impl AngleModel {
    fn check(&self) -> Result<()> {
        let v = [self.c1, self.c2, self.pressure, self.zy, self.zc6];
        if v.iter().any(|x| !x.is_finite()) || self.pressure < 0.0 {
            return Err(HydroError::Param(format!("bad model coefficients {v:?}")));
        }
        Ok(())
    }

    fn cfl_speed(&self, y_max: f64) -> f64 {
        self.c1.abs().max(self.c2.abs()).max(self.pressure.sqrt())
            + (self.zy.abs() + self.zc6.abs()) * y_max
    }

    fn dissipation_speed(&self, y_max: f64) -> f64 {
        self.c1.abs().max(self.c2.abs())
            + (self.c1.abs() * self.pressure).sqrt()
            + (self.zy.abs() + self.zc6.abs()) * y_max
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

pub fn step_sohr_s(state: &mut HydroStateS, p: SmallParams, dt: f64, opts: StepOptions) -> Result<()> {
    let model = AngleModel { c1: p.c1, c2: p.c2, pressure: p.d, rotation: true, zy: 0.0, zc6: 0.0 };
    step_kernel(state, model, dt, opts)
}

/// The Y ≡ 0 limit: ρY is carried along but never feeds back.
pub fn step_soh(state: &mut HydroStateS, p: SmallParams, dt: f64, opts: StepOptions) -> Result<()> {
    let model = AngleModel { c1: p.c1, c2: p.c2, pressure: p.d, rotation: false, zy: 0.0, zc6: 0.0 };
    step_kernel(state, model, dt, opts)
}

pub fn step_reduced(state: &mut HydroStateS, r: ReducedCoeffs, dt: f64, opts: StepOptions) -> Result<()> {
    let model = AngleModel {
        c1: r.c1,
        c2: r.c2,
        pressure: r.c5,
        rotation: false,
        zy: r.zeta * (r.c3 + r.c4),
        zc6: r.zeta * r.c6,
    };
    step_kernel(state, model, dt, opts)
}

fn step_kernel(state: &mut HydroStateS, model: AngleModel, dt: f64, opts: StepOptions) -> Result<()> {
    model.check()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(HydroError::Param(format!("dt must be positive, got {dt}")));
    }
    let mesh = state.mesh;
    let y_max = (0..mesh.cells()).map(|c| state.y(c).abs()).fold(0.0, f64::max);
    let cfl = dt * model.cfl_speed(y_max) * mesh.inv_spacing_sum();
    if cfl > CFL_LIMIT {
        return Err(HydroError::Cfl(format!("dt={dt} gives {cfl:.4} > {CFL_LIMIT}")));
    }
    let a = opts.viscosity_speed.unwrap_or_else(|| model.dissipation_speed(y_max));
    let floor = VACUUM_FRACTION * state.rho.iter().sum::<f64>() / mesh.cells() as f64;

    let mut rho = state.rho.clone();
    let mut rho_y = state.rho_y.clone();
    let mut phi = state.phi.clone();
    for axis in mesh.axes() {
        let h = mesh.spacing(axis);
        let next = map_cells(mesh.cells(), opts.serial, |c| {
            let (l, r) = mesh.neighbors(c, axis);
            sweep_cell(&model, axis, a, dt, h, floor, [l, c, r], &rho, &rho_y, &phi)
        });
        for (c, (nr, ny, np)) in next.into_iter().enumerate() {
            rho[c] = nr;
            rho_y[c] = ny;
            phi[c] = np;
        }
    }
    if model.rotation {
        for c in 0..mesh.cells() {
            if rho[c] >= floor {
                phi[c] += dt * (rho_y[c] / rho[c]);
            }
        }
    }
    if let Some(c) = rho.iter().position(|r| !(*r > 0.0)) {
        return Err(HydroError::Positivity(format!("density {} at cell {c}", rho[c])));
    }
    if phi.iter().chain(&rho_y).any(|v| !v.is_finite()) {
        return Err(HydroError::Positivity("non-finite field after step".into()));
    }
    state.rho = rho;
    state.rho_y = rho_y;
    state.phi = phi;
    state.time += dt;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_cell(
    m: &AngleModel,
    axis: Axis,
    a: f64,
    dt: f64,
    h: f64,
    floor: f64,
    [l, c, r]: [usize; 3],
    rho: &[f64],
    rho_y: &[f64],
    phi: &[f64],
) -> (f64, f64, f64) {
    let along = |k: usize| axis.project(phi[k]).0;
    let flux = |u: &[f64], i: usize, j: usize| {
        let fi = m.c1 * u[i] * along(i);
        let fj = m.c1 * u[j] * along(j);
        0.5 * (fi + fj) - 0.5 * a * (u[j] - u[i])
    };
    let k = dt / h;
    let new_rho = rho[c] - k * (flux(rho, c, r) - flux(rho, l, c));
    let new_rho_y = rho_y[c] - k * (flux(rho_y, c, r) - flux(rho_y, l, c));

    if rho[c] < floor {
        return (new_rho, new_rho_y, phi[c]);
    }
    let dr = wrap_angle(phi[r] - phi[c]);
    let dl = wrap_angle(phi[c] - phi[l]);
    let g_phi = (dr + dl) / (2.0 * h);
    let g_rho = (rho[r] - rho[l]) / (2.0 * h);
    let g_rho_y = (rho_y[r] - rho_y[l]) / (2.0 * h);
    let (oe, pe) = axis.project(phi[c]);
    let y = rho_y[c] / rho[c];
    let rate = m.c2 * oe * g_phi
        + m.pressure / rho[c] * pe * g_rho
        + m.zy * y * pe * g_phi
        + m.zc6 / rho[c] * oe * g_rho_y;
    let new_phi = phi[c] - dt * rate + 0.5 * k * a * (dr - dl);
    (new_rho, new_rho_y, new_phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SmallParams {
        SmallParams { c1: 0.45, c2: 0.7, d: 1.0 }
    }

    fn bumpy(mesh: Mesh, y_amp: f64) -> HydroStateS {
        let n = mesh.cells();
        let mut rho = vec![0.0; n];
        let mut ry = vec![0.0; n];
        let mut phi = vec![0.0; n];
        for c in 0..n {
            let [x, yy] = mesh.center(c);
            let s = (2.0 * PI * x / mesh.lx).sin() * (2.0 * PI * yy / mesh.ly).cos();
            rho[c] = 1.0 + 0.3 * s;
            ry[c] = rho[c] * y_amp * (2.0 * PI * x / mesh.lx).cos();
            phi[c] = 0.4 + 0.5 * (2.0 * PI * yy / mesh.ly).sin();
        }
        HydroStateS::new(mesh, rho, ry, phi).unwrap()
    }

    #[test]
    fn uniform_state_is_fixed() {
        let mesh = Mesh::new(16, 8, 1.0, 1.0).unwrap();
        let mut s = HydroStateS::uniform(mesh, 2.0, 0.0, 0.3).unwrap();
        let s0 = s.clone();
        for _ in 0..50 {
            step_sohr_s(&mut s, params(), 0.005, StepOptions::default()).unwrap();
        }
        for c in 0..mesh.cells() {
            assert!((s.rho[c] - 2.0).abs() < 1e-13);
            assert!((s.phi[c] - s0.phi[c]).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_rotation() {
        let mesh = Mesh::new(8, 8, 1.0, 1.0).unwrap();
        let (y0, phi0) = (0.8, -0.2);
        let mut s = HydroStateS::uniform(mesh, 1.0, y0, phi0).unwrap();
        let dt = 0.01;
        for _ in 0..200 {
            step_sohr_s(&mut s, params(), dt, StepOptions::default()).unwrap();
        }
        let expect = phi0 + y0 * s.time;
        for c in 0..mesh.cells() {
            assert!(wrap_angle(s.phi[c] - expect).abs() < 1e-12);
            assert!((s.rho[c] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_and_momentum_conserved() {
        let mesh = Mesh::new(32, 24, 2.0, 1.5).unwrap();
        let mut s = bumpy(mesh, 0.5);
        let (m0, l0) = (s.mass(), s.angular_momentum());
        for _ in 0..300 {
            step_sohr_s(&mut s, params(), 0.004, StepOptions::default()).unwrap();
        }
        assert!((s.mass() - m0).abs() < 1e-12 * m0);
        assert!((s.angular_momentum() - l0).abs() < 1e-12 * m0);
    }

    #[test]
    fn zero_momentum_matches_soh_bitwise() {
        let mesh = Mesh::new(20, 10, 1.0, 1.0).unwrap();
        let mut a = bumpy(mesh, 0.0);
        let mut b = a.clone();
        for _ in 0..100 {
            step_sohr_s(&mut a, params(), 0.005, StepOptions::default()).unwrap();
            step_soh(&mut b, params(), 0.005, StepOptions::default()).unwrap();
        }
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn reduced_at_zero_zeta_is_soh_with_c5() {
        let mesh = Mesh::new(20, 10, 1.0, 1.0).unwrap();
        let mut a = bumpy(mesh, 0.7);
        let mut b = a.clone();
        let r = ReducedCoeffs { c1: 0.45, c2: 0.7, c3: 0.3, c4: -0.2, c5: 0.9, c6: 0.1, zeta: 0.0 };
        let p = SmallParams { c1: 0.45, c2: 0.7, d: 0.9 };
        for _ in 0..100 {
            step_reduced(&mut a, r, 0.005, StepOptions::default()).unwrap();
            step_soh(&mut b, p, 0.005, StepOptions::default()).unwrap();
        }
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.rho_y, b.rho_y);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mesh = Mesh::new(16, 16, 1.0, 1.0).unwrap();
        let mut a = bumpy(mesh, 0.5);
        let mut b = a.clone();
        for _ in 0..20 {
            step_sohr_s(&mut a, params(), 0.005, StepOptions::default()).unwrap();
            step_sohr_s(&mut b, params(), 0.005, StepOptions { serial: true, ..Default::default() }).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn cfl_and_input_guards() {
        let mesh = Mesh::line(100, 1.0).unwrap();
        let mut s = HydroStateS::uniform(mesh, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(step_sohr_s(&mut s, params(), 0.01, StepOptions::default()), Err(HydroError::Cfl(_))));
        assert!(step_sohr_s(&mut s, params(), -1.0, StepOptions::default()).is_err());
        assert!(HydroStateS::uniform(mesh, 0.0, 0.0, 0.0).is_err());
        assert!(HydroStateS::new(mesh, vec![1.0; 3], vec![0.0; 3], vec![0.0; 3]).is_err());
    }

    #[test]
    fn vacuum_cells_keep_direction() {
        let mesh = Mesh::line(64, 1.0).unwrap();
        let mut rho = vec![1.0; 64];
        rho[10] = 1e-14;
        let phi: Vec<f64> = (0..64).map(|i| 0.01 * i as f64).collect();
        let mut s = HydroStateS::new(mesh, rho, vec![0.0; 64], phi.clone()).unwrap();
        step_soh(&mut s, params(), 0.002, StepOptions::default()).unwrap();
        assert_eq!(s.phi[10], phi[10]);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.1) - 0.1).abs() < 1e-14);
    }
}
