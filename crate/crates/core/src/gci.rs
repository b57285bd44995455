//! Generalized collision invariants X_W and the first-order perturbation
//! profiles Φ1, X1 of the small angular velocity expansion.

use crate::angular::{integrate_with, spectral_derivative, AngularGrid};
use crate::bvp::{solve_periodic, PeriodicProblem, Stencil};
use crate::error::{CoreError, Result};
use crate::gvm::{solve_gvm, GvmProfile};
use crate::vmf::{c1, NoiseParam};

/// Largest accepted |∫Φ_W · RHS| before projection.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Placement of d in the angle ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GciForm {
    /// −d X'' + (sin θ − W) X' = sin(θ − ψ); X0 = g/d.
    Consistent,
    /// −X'' + (sin θ − W) X' = sin(θ − ψ), as printed.
    Literal,
}

#[derive(Debug, Clone, Copy)]
pub struct GciOptions {
    pub form: GciForm,
    pub stencil: Stencil,
}

impl Default for GciOptions {
    fn default() -> Self {
        GciOptions { form: GciForm::Consistent, stencil: Stencil::Richardson }
    }
}

#[derive(Debug, Clone)]
pub struct GciProfile {
    pub d: NoiseParam,
    pub w: f64,
    pub grid: AngularGrid,
    pub x: Vec<f64>,
    pub psi_used: f64,
    pub residual_norm: f64,
    pub compat_residual: f64,
}

impl GciProfile {
    pub fn mean(&self) -> f64 {
        self.grid.weight() * self.x.iter().sum::<f64>()
    }

    /// Same profile with X multiplied by `beta`.
    pub fn scaled(&self, beta: f64) -> GciProfile {
        GciProfile {
            x: self.x.iter().map(|v| beta * v).collect(),
            residual_norm: beta.abs() * self.residual_norm,
            ..self.clone()
        }
    }
}

pub fn solve_gci(gvm: &GvmProfile) -> Result<GciProfile> {
    solve_gci_with(gvm, GciOptions::default())
}

pub fn solve_gci_with(gvm: &GvmProfile, opts: GciOptions) -> Result<GciProfile> {
    let grid = &gvm.grid;
    let n = grid.n();
    let psi = gvm.psi;
    let lead = match opts.form {
        GciForm::Consistent => -gvm.d.value(),
        GciForm::Literal => -1.0,
    };
    let raw = grid.sample(|t| (t - psi).sin());
    let (rhs, compat) = project_out(grid, &gvm.phi, &raw)?;
    let problem = PeriodicProblem {
        a: vec![lead; n],
        b: grid.sample(|t| t.sin() - gvm.w),
        c: vec![0.0; n],
        rhs,
    };
    let sol = solve_periodic(grid, &problem, opts.stencil)?;
    let residual_norm = problem.residual(grid, &sol.x)?;
    Ok(GciProfile {
        d: gvm.d,
        w: gvm.w,
        grid: grid.clone(),
        x: sol.x,
        psi_used: psi,
        residual_norm,
        compat_residual: compat,
    })
}

/// Remove the Φ-component of `rhs` so that ∫Φ·rhs = 0; returns |∫Φ·rhs| before.
fn project_out(grid: &AngularGrid, phi: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let pr = integrate_with(grid, |j, _| phi[j] * rhs[j]);
    if pr.abs() > SOLVABILITY_TOL {
        return Err(CoreError::Solvability(format!("|∫Φ·rhs| = {:e}", pr.abs())));
    }
    let pp = integrate_with(grid, |j, _| phi[j] * phi[j]);
    let out = rhs.iter().zip(phi).map(|(r, p)| r - pr / pp * p).collect();
    Ok((out, pr.abs()))
}

#[derive(Debug, Clone)]
pub struct GciParityReport {
    pub w: f64,
    pub defect: f64,
    pub pass: bool,
}

/// sup_j |X_{−W}(θ_j) + X_W(−θ_j)|; passes below 1e-8.
pub fn gci_parity_check(d: NoiseParam, w: f64, grid: &AngularGrid) -> Result<GciParityReport> {
    let xp = solve_gci(&solve_gvm(d, w, grid)?)?;
    let xm = solve_gci(&solve_gvm(d, -w, grid)?)?;
    let defect = (0..grid.n())
        .map(|j| (xm.x[j] + xp.x[grid.mirror(j)]).abs())
        .fold(0.0, f64::max);
    Ok(GciParityReport { w, defect, pass: defect < 1e-8 })
}

/// Zeroth and first order profiles of the small-ζ expansion.
#[derive(Debug, Clone)]
pub struct PerturbationProfiles {
    pub d: NoiseParam,
    pub grid: AngularGrid,
    pub c1: f64,
    pub phi0: Vec<f64>,
    pub x0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub x1: Vec<f64>,
    pub beta: f64,
    pub phi1_residual: f64,
    pub x1_residual: f64,
    pub x1_compat: f64,
}

/// Φ1'' + (1/d)(sin θ Φ1)' = Φ0'/d and −d X1'' + sin θ X1' = X0' − (β/c1) cos θ,
/// both with zero mean.
pub fn solve_perturbations(d: NoiseParam, grid: &AngularGrid) -> Result<PerturbationProfiles> {
    let dv = d.value();
    let n = grid.n();
    let base = solve_gvm(d, 0.0, grid)?;
    let x0 = solve_gci(&base)?.x;
    let phi0 = base.phi.clone();
    let c1v = c1(d)?;

    let phi0_prime: Vec<f64> = grid.nodes().iter().zip(&phi0).map(|(&t, &p)| -t.sin() * p / dv).collect();
    let p1 = PeriodicProblem {
        a: vec![1.0; n],
        b: grid.sample(|t| t.sin() / dv),
        c: grid.sample(|t| t.cos() / dv),
        rhs: phi0_prime.iter().map(|v| v / dv).collect(),
    };
    let phi1 = solve_periodic(grid, &p1, Stencil::Richardson)?.x;
    let phi1_residual = p1.residual(grid, &phi1)?;
    let beta = integrate_with(grid, |j, t| phi1[j] * t.sin());

    let x0_prime = spectral_derivative(grid, &x0, 1)?;
    let raw: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&x0_prime)
        .map(|(&t, &xp)| xp - beta / c1v * t.cos())
        .collect();
    let (rhs, x1_compat) = project_out(grid, &phi0, &raw)?;
    let p2 = PeriodicProblem {
        a: vec![-dv; n],
        b: grid.sample(f64::sin),
        c: vec![0.0; n],
        rhs,
    };
    let x1 = solve_periodic(grid, &p2, Stencil::Richardson)?.x;
    let x1_residual = p2.residual(grid, &x1)?;

    Ok(PerturbationProfiles {
        d,
        grid: grid.clone(),
        c1: c1v,
        phi0,
        x0,
        phi1,
        x1,
        beta,
        phi1_residual,
        x1_residual,
        x1_compat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::periodic_grid;
    use crate::vmf::g_profile;

    fn nd(d: f64) -> NoiseParam {
        NoiseParam::new(d).unwrap()
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_w_matches_g_over_d() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.2, 1.0, 5.0] {
            let x = solve_gci(&solve_gvm(nd(d), 0.0, &grid).unwrap()).unwrap();
            let g: Vec<f64> = g_profile(nd(d), &grid).unwrap().iter().map(|v| v / d).collect();
            let err = sup_diff(&x.x, &g);
            assert!(err < 1e-7, "d={d} err={err:e}");
            for j in 0..512 {
                assert!((x.x[j] + x.x[grid.mirror(j)]).abs() < 1e-9);
            }
            assert!(x.mean().abs() < 1e-10);
            assert!(x.residual_norm < 1e-7, "d={d} residual={:e}", x.residual_norm);
            assert!(x.compat_residual < 1e-12);
        }
    }

    #[test]
    fn central_stencil_is_second_order() {
        let d = 1.0;
        let errs: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&n| {
                let grid = periodic_grid(n).unwrap();
                let gvm = solve_gvm(nd(d), 0.0, &grid).unwrap();
                let opts = GciOptions { form: GciForm::Consistent, stencil: Stencil::Central2 };
                let x = solve_gci_with(&gvm, opts).unwrap();
                let g: Vec<f64> = g_profile(nd(d), &grid).unwrap().iter().map(|v| v / d).collect();
                sup_diff(&x.x, &g)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        }
    }

    #[test]
    fn nonzero_w_against_refined_solve() {
        let d = nd(1.0);
        let coarse = solve_gci(&solve_gvm(d, 5.0, &periodic_grid(512).unwrap()).unwrap()).unwrap();
        let fine_grid = periodic_grid(2048).unwrap();
        let fine = solve_gci(&solve_gvm(d, 5.0, &fine_grid).unwrap()).unwrap();
        let err = (0..512).map(|j| (coarse.x[j] - fine.x[4 * j]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "err={err:e}");
        assert!(coarse.residual_norm < 1e-7);
        assert!(coarse.mean().abs() < 1e-10);
    }

    #[test]
    fn residuals_across_matrix() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.2, 1.0, 5.0] {
            for w in [-10.0, -2.0, 0.5, 1.0, 5.0, 10.0] {
                let x = solve_gci(&solve_gvm(nd(d), w, &grid).unwrap()).unwrap();
                assert!(x.residual_norm < 1e-7, "d={d} w={w} r={:e}", x.residual_norm);
                assert!(x.mean().abs() < 1e-10);
                assert!(x.compat_residual < 1e-10);
            }
        }
    }

    #[test]
    fn parity_checks() {
        let grid = periodic_grid(512).unwrap();
        assert!(gci_parity_check(nd(1.0), 0.0, &grid).unwrap().pass);
        assert!(gci_parity_check(nd(0.2), 1.0, &grid).unwrap().pass);
        let r = gci_parity_check(nd(5.0), 10.0, &grid).unwrap();
        assert!(r.pass, "defect {:e}", r.defect);
    }

    #[test]
    fn literal_form_differs_by_factor_d() {
        let grid = periodic_grid(256).unwrap();
        let gvm = solve_gvm(nd(0.5), 0.0, &grid).unwrap();
        let a = solve_gci(&gvm).unwrap();
        let b = solve_gci_with(&gvm, GciOptions { form: GciForm::Literal, stencil: Stencil::Richardson }).unwrap();
        // at W = 0 the consistent form is X = g/d; the literal one solves a different ODE
        assert!(sup_diff(&a.x, &b.x) > 1e-3);
        let at_one = solve_gvm(nd(1.0), 0.7, &grid).unwrap();
        let c = solve_gci(&at_one).unwrap();
        let e = solve_gci_with(&at_one, GciOptions { form: GciForm::Literal, stencil: Stencil::Richardson }).unwrap();
        assert!(sup_diff(&c.x, &e.x) < 1e-14);
    }

    #[test]
    fn linearity_in_rhs() {
        let grid = periodic_grid(256).unwrap();
        let gvm = solve_gvm(nd(1.0), 2.0, &grid).unwrap();
        let x = solve_gci(&gvm).unwrap();
        let n = grid.n();
        let p = PeriodicProblem {
            a: vec![-1.0; n],
            b: grid.sample(|t| t.sin() - 2.0),
            c: vec![0.0; n],
            rhs: grid.sample(|t| 3.7 * (t - gvm.psi).sin()),
        };
        let (rhs, _) = project_out(&grid, &gvm.phi, &p.rhs).unwrap();
        let y = solve_periodic(&grid, &PeriodicProblem { rhs, ..p }, Stencil::Richardson).unwrap();
        let err = y.x.iter().zip(&x.x).map(|(a, b)| (a - 3.7 * b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn perturbation_invariants() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.2, 1.0, 5.0] {
            let p = solve_perturbations(nd(d), &grid).unwrap();
            let mean = |v: &[f64]| grid.weight() * v.iter().sum::<f64>();
            assert!(mean(&p.phi1).abs() < 1e-10);
            assert!(mean(&p.x1).abs() < 1e-10);
            for j in 0..512 {
                let m = grid.mirror(j);
                assert!((p.phi1[j] + p.phi1[m]).abs() < 1e-9, "Φ1 odd");
                assert!((p.x1[j] - p.x1[m]).abs() < 1e-9, "X1 even");
            }
            assert!(p.phi1_residual < 1e-7, "d={d} {:e}", p.phi1_residual);
            assert!(p.x1_residual < 1e-7, "d={d} {:e}", p.x1_residual);
            assert!(p.x1_compat < 1e-10, "d={d} compat {:e}", p.x1_compat);
        }
    }

    #[test]
    fn phi1_is_derivative_in_w() {
        // (Φ_ε − Φ_0)/ε → Φ1 at rate O(ε); Φ is even in θ at ε² order, so the
        // error is dominated by the ε² Φ2 term
        let grid = periodic_grid(512).unwrap();
        let d = nd(1.0);
        let p = solve_perturbations(d, &grid).unwrap();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| {
                let pe = solve_gvm(d, e, &grid).unwrap();
                let fd: Vec<f64> = pe.phi.iter().zip(&p.phi0).map(|(a, b)| (a - b) / e).collect();
                sup_diff(&fd, &p.phi1)
            })
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((r - 2.0).abs() < 0.3, "ratio {r}");
        }
    }

    #[test]
    fn x1_is_derivative_in_w() {
        // X is odd in θ at even orders; (X_ε − X_{−ε})/(2ε) → X1 at O(ε²)
        let grid = periodic_grid(512).unwrap();
        let d = nd(1.0);
        let p = solve_perturbations(d, &grid).unwrap();
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&e| {
                let xp = solve_gci(&solve_gvm(d, e, &grid).unwrap()).unwrap();
                let xm = solve_gci(&solve_gvm(d, -e, &grid).unwrap()).unwrap();
                let fd: Vec<f64> = xp.x.iter().zip(&xm.x).map(|(a, b)| (a - b) / (2.0 * e)).collect();
                sup_diff(&fd, &p.x1)
            })
            .collect();
        assert!(errs[1] < 1e-3, "errors {errs:?}");
        let r = errs[0] / errs[1];
        assert!((r - 4.0).abs() < 0.8, "ratio {r}");
    }

    #[test]
    fn beta_refinement() {
        let a = solve_perturbations(nd(1.0), &periodic_grid(512).unwrap()).unwrap().beta;
        let b = solve_perturbations(nd(1.0), &periodic_grid(2048).unwrap()).unwrap().beta;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
