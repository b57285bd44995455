//! W-resolved densities ρ_W transported at c̃1(W) and a single direction
//! field driven by the moments m_k[ρ_W] = ∫ a_k(W) ρ_W dW.

use crate::mesh::{map_cells, Mesh};
use crate::small::wrap_angle;
use crate::{HydroError, Result, StepOptions, CFL_LIMIT, VACUUM_FRACTION};
use rotalign_core::coefficients::{CoefficientTable, WDensity};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct HydroStateL {
    pub mesh: Mesh,
    pub table: Arc<CoefficientTable>,
    /// Cell-major: bin b of cell c is at c·n_w + b.
    pub rho_w: Vec<f64>,
    pub phi: Vec<f64>,
    pub time: f64,
}

/// m1..m6 plus m5, m6 weighted by c̃1, used for the speed bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellMoments {
    pub m: [f64; 6],
    pub mass: f64,
    pub m5c: f64,
    pub m6c: f64,
}

impl HydroStateL {
    pub fn new(mesh: Mesh, table: Arc<CoefficientTable>, rho_w: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let n = mesh.cells();
        let nw = table.n_w();
        if rho_w.len() != n * nw || phi.len() != n {
            return Err(HydroError::Param(format!("expected {n} cells of {nw} bins")));
        }
        if rho_w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || phi.iter().any(|v| !v.is_finite()) {
            return Err(HydroError::Positivity("densities must be finite and nonnegative".into()));
        }
        Ok(HydroStateL { mesh, table, rho_w, phi, time: 0.0 })
    }

    pub fn uniform(mesh: Mesh, table: Arc<CoefficientTable>, density: &WDensity, phi: f64) -> Result<Self> {
        if density.n_w() != table.n_w() || density.w_max != table.w_max {
            return Err(HydroError::Param("density grid does not match the table".into()));
        }
        let rho_w = density.values.repeat(mesh.cells());
        Self::new(mesh, table, rho_w, vec![phi; mesh.cells()])
    }

    pub fn n_w(&self) -> usize {
        self.table.n_w()
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let nw = self.n_w();
        &self.rho_w[c * nw..(c + 1) * nw]
    }

    pub fn cell_mass(&self, c: usize) -> f64 {
        self.cell(c).iter().sum::<f64>() * self.table.dw()
    }

    pub fn mass(&self) -> f64 {
        (0..self.mesh.cells()).map(|c| self.cell_mass(c)).sum::<f64>() * self.mesh.cell_area()
    }

    /// Mass in each W bin over the whole domain.
    pub fn bin_masses(&self) -> Vec<f64> {
        let nw = self.n_w();
        let mut out = vec![0.0; nw];
        for c in 0..self.mesh.cells() {
            for (o, v) in out.iter_mut().zip(self.cell(c)) {
                *o += v;
            }
        }
        let s = self.table.dw() * self.mesh.cell_area();
        out.iter().map(|v| v * s).collect()
    }

    pub fn moments_at(&self, c: usize) -> CellMoments {
        cell_moments(&self.table, self.cell(c))
    }
}

fn cell_moments(table: &CoefficientTable, bins: &[f64]) -> CellMoments {
    let dw = table.dw();
    let mut out = CellMoments::default();
    for (row, &v) in table.rows.iter().zip(bins) {
        let w = v * dw;
        for (k, m) in out.m.iter_mut().enumerate() {
            *m += row.a.get(k + 1) * w;
        }
        out.mass += w;
        out.m5c += row.a.a5 * row.c1_tilde * w;
        out.m6c += row.a.a6 * row.c1_tilde * w;
    }
    out
}

fn speed_bound(table: &CoefficientTable, mo: &CellMoments) -> f64 {
    let c_max = table.rows.iter().map(|r| r.c1_tilde.abs()).fold(0.0, f64::max);
    if mo.m[0] <= 0.0 {
        return c_max;
    }
    let m1 = mo.m[0];
    let direction = (mo.m[1].abs() + (mo.m[2] + mo.m[3]).abs() + mo.m6c.abs()) / m1 + (mo.m5c.abs() / m1).sqrt();
    c_max.max(direction)
}

pub fn step_sohr_l(state: &mut HydroStateL, dt: f64, opts: StepOptions) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(HydroError::Param(format!("dt must be positive, got {dt}")));
    }
    let mesh = state.mesh;
    let table = state.table.clone();
    let nw = table.n_w();
    let n = mesh.cells();
    let c1t: Vec<f64> = table.rows.iter().map(|r| r.c1_tilde).collect();
    let floor = VACUUM_FRACTION * (0..n).map(|c| state.cell_mass(c)).sum::<f64>() / n as f64;

    let mut rho_w = state.rho_w.clone();
    let mut phi = state.phi.clone();
    for (pass, axis) in mesh.axes().into_iter().enumerate() {
        let h = mesh.spacing(axis);
        let mo: Vec<CellMoments> = map_cells(n, opts.serial, |c| cell_moments(&table, &rho_w[c * nw..(c + 1) * nw]));
        for (c, m) in mo.iter().enumerate() {
            if m.mass >= floor && !(m.m[0] > 0.0) {
                return Err(HydroError::Positivity(format!("m1 = {} at cell {c}", m.m[0])));
            }
        }
        let bound = mo.iter().map(|m| speed_bound(&table, m)).fold(0.0, f64::max);
        if pass == 0 {
            let cfl = dt * bound * mesh.inv_spacing_sum();
            if cfl > CFL_LIMIT {
                return Err(HydroError::Cfl(format!("dt={dt} gives {cfl:.4} > {CFL_LIMIT}")));
            }
        }
        let a = opts.viscosity_speed.unwrap_or(bound);
        let k = dt / h;
        let next = map_cells(n, opts.serial, |c| {
            let (l, r) = mesh.neighbors(c, axis);
            let (ol, oc, or) = (axis.project(phi[l]).0, axis.project(phi[c]).0, axis.project(phi[r]).0);
            let bins = |i: usize| &rho_w[i * nw..(i + 1) * nw];
            let (bl, bc, br) = (bins(l), bins(c), bins(r));
            let flux = |ui: f64, uj: f64, oi: f64, oj: f64, s: f64| 0.5 * s * (ui * oi + uj * oj) - 0.5 * a * (uj - ui);
            let new_bins: Vec<f64> = (0..nw)
                .map(|b| bc[b] - k * (flux(bc[b], br[b], oc, or, c1t[b]) - flux(bl[b], bc[b], ol, oc, c1t[b])))
                .collect();
            if mo[c].mass < floor {
                return (new_bins, phi[c]);
            }
            let dr = wrap_angle(phi[r] - phi[c]);
            let dl = wrap_angle(phi[c] - phi[l]);
            let g_phi = (dr + dl) / (2.0 * h);
            let g5 = (mo[r].m[4] - mo[l].m[4]) / (2.0 * h);
            let g6 = (mo[r].m[5] - mo[l].m[5]) / (2.0 * h);
            let m = &mo[c].m;
            let (oe, pe) = axis.project(phi[c]);
            let rate = (m[1] * oe * g_phi + (m[2] + m[3]) * pe * g_phi + pe * g5 + oe * g6) / m[0];
            (new_bins, phi[c] - dt * rate + 0.5 * k * a * (dr - dl))
        });
        for (c, (bins, p)) in next.into_iter().enumerate() {
            rho_w[c * nw..(c + 1) * nw].copy_from_slice(&bins);
            phi[c] = p;
        }
    }
    if let Some(i) = rho_w.iter().position(|v| !(*v >= 0.0)) {
        return Err(HydroError::Positivity(format!("ρ_W = {} at cell {}, bin {}", rho_w[i], i / nw, i % nw)));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(HydroError::Positivity("non-finite direction after step".into()));
    }
    state.rho_w = rho_w;
    state.phi = phi;
    state.time += dt;
    Ok(())
}

/// Largest dt passing the CFL guard for the current state.
pub fn max_stable_dt_l(state: &HydroStateL) -> f64 {
    let bound = (0..state.mesh.cells())
        .map(|c| speed_bound(&state.table, &state.moments_at(c)))
        .fold(0.0, f64::max);
    CFL_LIMIT / (bound * state.mesh.inv_spacing_sum())
}
