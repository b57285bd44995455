//! Small-angular-velocity equilibrium: von Mises profile, c1, g, c2, c5.

use std::f64::consts::PI;

use crate::angular::{bessel_i, cumulative_integral, integrate_with, spectral_derivative, AngularGrid};
use crate::error::{CoreError, Result};

pub const D_MIN: f64 = 0.05;
pub const D_MAX: f64 = 20.0;

/// Dimensionless noise d = D/ν.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseParam(f64);

impl NoiseParam {
    pub fn new(d: f64) -> Result<Self> {
        if !(D_MIN..=D_MAX).contains(&d) {
            return Err(CoreError::Domain(format!(
                "d = {d} outside supported range [{D_MIN}, {D_MAX}]"
            )));
        }
        Ok(NoiseParam(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct VmfProfile {
    pub d: NoiseParam,
    pub grid: AngularGrid,
    pub values: Vec<f64>,
    pub z_d: f64,
}

pub fn vmf_profile(d: NoiseParam, grid: &AngularGrid) -> Result<VmfProfile> {
    let k = 1.0 / d.0;
    let z_d = 2.0 * PI * bessel_i(0, k)?;
    let mut values = grid.sample(|t| (k * t.cos()).exp() / z_d);
    for j in grid.n() / 2 + 1..grid.n() {
        values[j] = values[grid.mirror(j)];
    }
    Ok(VmfProfile { d, grid: grid.clone(), values, z_d })
}

/// Order parameter I1(1/d)/I0(1/d).
pub fn c1(d: NoiseParam) -> Result<f64> {
    let k = 1.0 / d.0;
    Ok(bessel_i(1, k)? / bessel_i(0, k)?)
}

/// Order parameter by quadrature of the VMF.
pub fn c1_quadrature(d: NoiseParam, grid: &AngularGrid) -> Result<f64> {
    let k = 1.0 / d.0;
    // shift the exponent by its maximum; the ratio is unaffected
    let num = integrate_with(grid, |_, t| (k * (t.cos() - 1.0)).exp() * t.cos());
    let den = integrate_with(grid, |_, t| (k * (t.cos() - 1.0)).exp());
    Ok(num / den)
}

/// Closed-form g(θ) = dθ − dπ F(θ)/F(π), F(θ) = ∫_0^θ e^{−cos φ/d} dφ.
pub fn g_profile(d: NoiseParam, grid: &AngularGrid) -> Result<Vec<f64>> {
    let dv = d.0;
    let f = |t: f64| ((-t.cos() - 1.0) / dv).exp();
    let cum = cumulative_integral(grid, f);
    let half = grid.n() / 2;
    let f_pi = cum[half];
    let mut g: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&cum)
        .map(|(&t, &c)| dv * t - dv * PI * c / f_pi)
        .collect();
    // exact zeros at 0 and π, and exact oddness
    g[0] = 0.0;
    g[half] = 0.0;
    for j in 1..half {
        let m = grid.mirror(j);
        let odd = 0.5 * (g[j] - g[m]);
        g[j] = odd;
        g[m] = -odd;
    }
    Ok(g)
}

/// Sup norm of −(e^{cos θ/d} g')' − sin θ e^{cos θ/d}, scaled by e^{−1/d}.
pub fn g_residual(d: NoiseParam, grid: &AngularGrid, g: &[f64]) -> Result<f64> {
    let dv = d.0;
    let gp = spectral_derivative(grid, g, 1)?;
    let flux: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&gp)
        .map(|(&t, &v)| ((t.cos() - 1.0) / dv).exp() * v)
        .collect();
    let dflux = spectral_derivative(grid, &flux, 1)?;
    Ok(grid
        .nodes()
        .iter()
        .zip(&dflux)
        .map(|(&t, &v)| (-v - t.sin() * ((t.cos() - 1.0) / dv).exp()).abs())
        .fold(0.0, f64::max))
}

/// The three equivalent formulations of c2.
#[derive(Debug, Clone, Copy)]
pub struct C2Forms {
    /// Full circle, through h(cos θ) = g/sin θ.
    pub full_circle: f64,
    /// Half range [0, π], through h.
    pub half_range: f64,
    /// Half range [0, π], directly in g.
    pub g_form: f64,
}

pub fn c2_forms(d: NoiseParam, grid: &AngularGrid) -> Result<C2Forms> {
    let dv = d.0;
    let g = g_profile(d, grid)?;
    let w = |t: f64| ((t.cos() - 1.0) / dv).exp();
    let half = grid.n() / 2;
    let h = |j: usize, t: f64| if j == 0 || j == half { 0.0 } else { g[j] / t.sin() };
    let sin2 = |t: f64| 1.0 - t.cos() * t.cos();

    let fc_num = integrate_with(grid, |j, t| w(t) * sin2(t) * h(j, t) * t.cos());
    let fc_den = integrate_with(grid, |j, t| w(t) * sin2(t) * h(j, t));

    // half range trapezoid: end weights ½ at 0 and π (both integrands vanish there)
    let half_sum = |f: &dyn Fn(usize, f64) -> f64| {
        let nodes = grid.nodes();
        let mut s = 0.5 * (f(0, nodes[0]) + f(half, nodes[half]));
        for j in 1..half {
            s += f(j, nodes[j]);
        }
        s * grid.weight()
    };
    let hr_num = half_sum(&|j, t| w(t) * sin2(t) * h(j, t) * t.cos());
    let hr_den = half_sum(&|j, t| w(t) * sin2(t) * h(j, t));
    let g_num = half_sum(&|j, t| w(t) * g[j] * t.sin() * t.cos());
    let g_den = half_sum(&|j, t| w(t) * g[j] * t.sin());

    for den in [fc_den, hr_den, g_den] {
        if den.abs() < 1e-14 {
            return Err(CoreError::Numerical(format!("c2 denominator {den:e} below 1e-14")));
        }
    }
    Ok(C2Forms {
        full_circle: fc_num / fc_den,
        half_range: hr_num / hr_den,
        g_form: g_num / g_den,
    })
}

/// Convection constant c2(d), g-form at the default resolution.
pub fn c2(d: NoiseParam) -> Result<f64> {
    let grid = crate::angular::periodic_grid(crate::angular::DEFAULT_N)?;
    Ok(c2_forms(d, &grid)?.g_form)
}

/// Pressure constant c5 by quadrature: ∫e^{cos/d} sin² / ∫e^{cos/d} cos.
pub fn c5_quadrature(d: NoiseParam, grid: &AngularGrid) -> Result<f64> {
    let dv = d.0;
    let w = |t: f64| ((t.cos() - 1.0) / dv).exp();
    let num = integrate_with(grid, |_, t| w(t) * t.sin() * t.sin());
    let den = integrate_with(grid, |_, t| w(t) * t.cos());
    Ok(num / den)
}

/// Pressure constant c5 = ½(I0 − I2)/I1 at argument 1/d.
pub fn c5_bessel(d: NoiseParam) -> Result<f64> {
    let k = 1.0 / d.0;
    Ok(0.5 * (bessel_i(0, k)? - bessel_i(2, k)?) / bessel_i(1, k)?)
}

pub fn c5(d: NoiseParam) -> Result<f64> {
    c5_bessel(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{periodic_grid, trapezoid_periodic};
    use proptest::prelude::*;

    fn nd(d: f64) -> NoiseParam {
        NoiseParam::new(d).unwrap()
    }

    fn d_grid() -> Vec<f64> {
        let mut v = vec![0.05];
        let mut d: f64 = 0.1;
        while d <= 20.0 + 1e-12 {
            v.push(d);
            d = if d < 1.0 { d + 0.1 } else { d + 0.5 };
        }
        v
    }

    #[test]
    fn noise_range() {
        assert!(NoiseParam::new(0.01).is_err());
        assert!(NoiseParam::new(25.0).is_err());
        assert!(NoiseParam::new(f64::NAN).is_err());
        assert!(NoiseParam::new(1.0).is_ok());
    }

    #[test]
    fn vmf_invariants() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.05, 0.2, 1.0, 5.0, 20.0] {
            let p = vmf_profile(nd(d), &grid).unwrap();
            assert!(p.values.iter().all(|&v| v > 0.0));
            assert!((trapezoid_periodic(&grid, &p.values).unwrap() - 1.0).abs() < 1e-12);
            for j in 1..512 {
                assert_eq!(p.values[j], p.values[grid.mirror(j)]);
            }
            // quadrature of the unnormalized profile against z_d
            let z = trapezoid_periodic(&grid, &grid.sample(|t| (t.cos() / d).exp())).unwrap();
            assert!((z / p.z_d - 1.0).abs() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn vmf_examples() {
        let grid = periodic_grid(512).unwrap();
        let p = vmf_profile(nd(20.0), &grid).unwrap();
        let flat = 1.0 / (2.0 * PI);
        // linearized bound e^{x} − 1 ≈ x at x = 1/d, with 10% slack for I0(1/d) ≠ 1
        let bound = 1.1 / 20.0 / (2.0 * PI);
        assert!(p.values.iter().all(|&v| (v - flat).abs() < bound));
        let p = vmf_profile(nd(1.0), &grid).unwrap();
        assert!((p.values[0] - 1f64.exp() / (2.0 * PI * 1.266_065_877_752_008_4)).abs() < 1e-14);
        assert!((p.z_d - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }

    #[test]
    fn c1_values() {
        // I1(1)/I0(1) from the series
        assert!((c1(nd(1.0)).unwrap() - 0.446_389_965_896_534_5).abs() < 1e-12);
        assert!(c1(nd(0.05)).unwrap() > 0.97);
        let v = c1(nd(20.0)).unwrap();
        assert!((v / 0.025 - 1.0).abs() < 0.05);
    }

    #[test]
    fn c1_two_routes_agree() {
        let grid = periodic_grid(512).unwrap();
        for d in d_grid() {
            let a = c1(nd(d)).unwrap();
            let b = c1_quadrature(nd(d), &grid).unwrap();
            assert!((a - b).abs() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn c1_monotone_and_bounded() {
        let vals: Vec<f64> = d_grid().into_iter().map(|d| c1(nd(d)).unwrap()).collect();
        assert!(vals.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn g_basic_properties() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.05, 0.2, 1.0, 5.0, 20.0] {
            let g = g_profile(nd(d), &grid).unwrap();
            assert_eq!(g[0], 0.0);
            assert_eq!(g[256], 0.0);
            for j in 1..512 {
                assert!((g[j] + g[grid.mirror(j)]).abs() < 1e-12);
            }
            let r = g_residual(nd(d), &grid, &g).unwrap();
            assert!(r < 1e-6, "d={d} residual={r:e}");
        }
    }

    #[test]
    fn g_quarter_point_against_refined_trapezoid() {
        // oracle: plain running trapezoid at n=4096 with Richardson over n=2048
        let d: f64 = 1.0;
        let run = |n: usize| {
            let h = 2.0 * PI / n as f64;
            let f = |t: f64| (-t.cos() / d).exp();
            let cum = |m: usize| (0..m).map(|i| 0.5 * h * (f(i as f64 * h) + f((i + 1) as f64 * h))).sum::<f64>();
            let q = cum(n / 4);
            let p = cum(n / 2);
            d * PI / 2.0 - d * PI * q / p
        };
        let oracle = (4.0 * run(4096) - run(2048)) / 3.0;
        let grid = periodic_grid(512).unwrap();
        let g = g_profile(nd(d), &grid).unwrap();
        assert!((g[128] - oracle).abs() < 1e-8, "{} vs {}", g[128], oracle);
    }

    #[test]
    fn c2_formulations_agree() {
        let grid = periodic_grid(512).unwrap();
        for d in [0.05, 0.2, 1.0, 5.0] {
            let f = c2_forms(nd(d), &grid).unwrap();
            assert!((f.g_form - f.half_range).abs() < 1e-9, "d={d}");
            assert!((f.g_form - f.full_circle).abs() < 1e-9, "d={d}");
        }
        let v = c2(nd(0.05)).unwrap();
        assert!(v > 0.9 && v < 1.0, "c2(0.05)={v}");
    }

    #[test]
    fn c2_refinement() {
        let fine = c2_forms(nd(1.0), &periodic_grid(4096).unwrap()).unwrap().g_form;
        let coarse = c2(nd(1.0)).unwrap();
        assert!((fine - coarse).abs() < 1e-11);
    }

    #[test]
    fn c5_equals_d() {
        let grid = periodic_grid(512).unwrap();
        for d in d_grid() {
            let b = c5_bessel(nd(d)).unwrap();
            let q = c5_quadrature(nd(d), &grid).unwrap();
            assert!((b - q).abs() < 1e-10 * d.max(1.0), "d={d}");
            assert!((b - d).abs() < 1e-10 * d.max(1.0), "d={d} c5={b}");
        }
    }

    proptest! {
        #[test]
        fn c1_in_unit_interval(d in 0.05f64..20.0) {
            let v = c1(nd(d)).unwrap();
            prop_assert!(v > 0.0 && v < 1.0);
        }
    }
}
