//! Hydrodynamic coefficients a1..a6 of the large angular velocity model,
//! their tabulation over W, W-moments and the small-ζ slopes.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::angular::{integrate_with, periodic_grid, AngularGrid, DEFAULT_N};
use crate::error::{CoreError, Result};
use crate::gci::{solve_gci, GciProfile, PerturbationProfiles};
use crate::gvm::{check_overflow_guard, solve_gvm, GvmProfile};
use crate::vmf::NoiseParam;

pub const TABLE_HEADER: &str = "w,a1,a2,a3,a4,a5,a6,c1_tilde,psi,lambda";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AVector {
    pub w: f64,
    pub d: NoiseParam,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

impl AVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.a1, self.a2, self.a3, self.a4, self.a5, self.a6]
    }

    /// a_k for k in 1..=6.
    pub fn get(&self, k: usize) -> f64 {
        self.as_array()[k - 1]
    }
}

/// Coefficients from a GVM and the GCI solved against it.
pub fn compute_avector(gvm: &GvmProfile, gci: &GciProfile) -> Result<AVector> {
    if gvm.d != gci.d || gvm.w != gci.w || gvm.grid.n() != gci.grid.n() {
        return Err(CoreError::Domain(format!(
            "gvm (d={}, w={}, n={}) and gci (d={}, w={}, n={}) disagree",
            gvm.d.value(),
            gvm.w,
            gvm.grid.n(),
            gci.d.value(),
            gci.w,
            gci.grid.n()
        )));
    }
    if gvm.lambda.abs() < 1e-12 {
        return Err(CoreError::Numerical(format!("degenerate λ = {:e}", gvm.lambda)));
    }
    let grid = &gvm.grid;
    let (phi, x) = (&gvm.phi, &gci.x);
    let (d, w, psi, lam, c) = (gvm.d.value(), gvm.w, gvm.psi, gvm.lambda, gvm.c_const);
    let px = |j: usize| phi[j] * x[j];

    let a1 = integrate_with(grid, |j, t| (t.sin() - w) * px(j)) / (lam * d);
    let a2 = integrate_with(grid, |j, t| (t.sin() - w) * (t - psi).cos() * px(j)) / (lam * d)
        - c / lam * integrate_with(grid, |j, t| (t - psi).cos() * x[j]);
    let a3 = integrate_with(grid, |j, t| (t.sin() - w) * (t - psi).sin() * px(j)) / (lam * d)
        - c / lam * integrate_with(grid, |j, t| (t - psi).sin() * x[j]);
    let a4 = -gvm.c1_tilde * integrate_with(grid, |j, _| px(j));
    let a5 = integrate_with(grid, |j, t| (t - psi).sin() * px(j));
    let a6 = integrate_with(grid, |j, t| ((t - psi).cos() - gvm.c1_tilde) * px(j));
    let av = AVector { w, d: gvm.d, a1, a2, a3, a4, a5, a6 };
    if av.as_array().iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Numerical(format!("non-finite coefficient at w={w}")));
    }
    Ok(av)
}

/// Solve GVM and GCI at one node and return the row.
pub fn node_row(d: NoiseParam, w: f64, grid: &AngularGrid) -> Result<TableRow> {
    let at = |e: CoreError| CoreError::AtNode { d: d.value(), w, source: Box::new(e) };
    let gvm = solve_gvm(d, w, grid).map_err(at)?;
    let gci = solve_gci(&gvm).map_err(at)?;
    let a = compute_avector(&gvm, &gci).map_err(at)?;
    Ok(TableRow { a, c1_tilde: gvm.c1_tilde, psi: gvm.psi, lambda: gvm.lambda })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub a: AVector,
    pub c1_tilde: f64,
    pub psi: f64,
    pub lambda: f64,
}

/// Rows at the midpoints w_i = −w_max + (i + ½)Δw.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub d: NoiseParam,
    pub w_max: f64,
    pub rows: Vec<TableRow>,
}

fn midpoints(w_max: f64, n_w: usize) -> Vec<f64> {
    let dw = 2.0 * w_max / n_w as f64;
    (0..n_w).map(|i| -w_max + (i as f64 + 0.5) * dw).collect()
}

fn check_w_grid(w_max: f64, n_w: usize) -> Result<()> {
    if n_w == 0 || n_w % 2 != 0 {
        return Err(CoreError::Grid(format!("n_w must be even and positive, got {n_w}")));
    }
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(CoreError::Grid(format!("w_max must be positive, got {w_max}")));
    }
    Ok(())
}

pub fn build_table(d: NoiseParam, w_max: f64, n_w: usize) -> Result<CoefficientTable> {
    build_table_on(d, w_max, n_w, &periodic_grid(DEFAULT_N)?)
}

pub fn build_table_on(d: NoiseParam, w_max: f64, n_w: usize, grid: &AngularGrid) -> Result<CoefficientTable> {
    check_w_grid(w_max, n_w)?;
    check_overflow_guard(d, w_max)?;
    let rows = midpoints(w_max, n_w)
        .into_par_iter()
        .map(|w| node_row(d, w, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTable { d, w_max, rows })
}

/// Largest parity defect over mirrored rows: even columns a1, a2, a5, c̃1, λ
/// compared by difference, odd columns a3, a4, a6, ψ by sum.
#[derive(Debug, Clone, Copy)]
pub struct TableParity {
    pub even_defect: f64,
    pub odd_defect: f64,
}

impl TableParity {
    pub fn pass(&self, tol: f64) -> bool {
        self.even_defect <= tol && self.odd_defect <= tol
    }
}

impl CoefficientTable {
    pub fn n_w(&self) -> usize {
        self.rows.len()
    }

    pub fn dw(&self) -> f64 {
        2.0 * self.w_max / self.n_w() as f64
    }

    pub fn w_nodes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.a.w).collect()
    }

    pub fn column(&self, f: impl Fn(&TableRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn parity(&self) -> TableParity {
        let n = self.n_w();
        let mut p = TableParity { even_defect: 0.0, odd_defect: 0.0 };
        for i in 0..n / 2 {
            let (r, m) = (&self.rows[i], &self.rows[n - 1 - i]);
            for (u, v) in [
                (r.a.a1, m.a.a1),
                (r.a.a2, m.a.a2),
                (r.a.a5, m.a.a5),
                (r.c1_tilde, m.c1_tilde),
                (r.lambda, m.lambda),
            ] {
                p.even_defect = p.even_defect.max((u - v).abs());
            }
            for (u, v) in [(r.a.a3, m.a.a3), (r.a.a4, m.a.a4), (r.a.a6, m.a.a6), (r.psi, m.psi)] {
                p.odd_defect = p.odd_defect.max((u + v).abs());
            }
        }
        p
    }

    /// Row linearly interpolated at `w`; the half cells beyond the outer
    /// nodes are extrapolated from the end segments.
    pub fn interpolate(&self, w: f64) -> Result<TableRow> {
        if !(w.abs() <= self.w_max) {
            return Err(CoreError::Domain(format!("w={w} outside [−{0}, {0}]", self.w_max)));
        }
        let n = self.n_w();
        if n == 1 {
            return Ok(TableRow { a: AVector { w, ..self.rows[0].a }, ..self.rows[0] });
        }
        let s = (w + self.w_max) / self.dw() - 0.5;
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        let t = s - i as f64;
        let (l, r) = (&self.rows[i], &self.rows[i + 1]);
        let mix = |u: f64, v: f64| u + t * (v - u);
        Ok(TableRow {
            a: AVector {
                w,
                d: self.d,
                a1: mix(l.a.a1, r.a.a1),
                a2: mix(l.a.a2, r.a.a2),
                a3: mix(l.a.a3, r.a.a3),
                a4: mix(l.a.a4, r.a.a4),
                a5: mix(l.a.a5, r.a.a5),
                a6: mix(l.a.a6, r.a.a6),
            },
            c1_tilde: mix(l.c1_tilde, r.c1_tilde),
            psi: mix(l.psi, r.psi),
            lambda: mix(l.lambda, r.lambda),
        })
    }

    /// CSV with one comment line of parameters, the column header and one
    /// line per node. Floats use the shortest representation that parses back
    /// to the same bits.
    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &str) -> std::io::Result<()> {
        writeln!(out, "# d={} w_max={} n_w={} {}", self.d.value(), self.w_max, self.n_w(), meta)?;
        writeln!(out, "{TABLE_HEADER}")?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            let a = &r.a;
            let _ = write!(
                line,
                "{},{},{},{},{},{},{},{},{},{}",
                a.w, a.a1, a.a2, a.a3, a.a4, a.a5, a.a6, r.c1_tilde, r.psi, r.lambda
            );
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<CoefficientTable> {
        let bad = |m: String| CoreError::Domain(format!("table csv: {m}"));
        let mut lines = input.lines();
        let mut next = || lines.next().transpose().map_err(|e| bad(e.to_string()));
        let meta = next()?.ok_or_else(|| bad("empty file".into()))?;
        let mut d = None;
        let mut w_max = None;
        for tok in meta.trim_start_matches('#').split_whitespace() {
            // The leading fields win over anything repeated in the trailing metadata.
            if let Some(v) = tok.strip_prefix("d=").filter(|_| d.is_none()) {
                d = v.parse::<f64>().ok();
            } else if let Some(v) = tok.strip_prefix("w_max=").filter(|_| w_max.is_none()) {
                w_max = v.parse::<f64>().ok();
            }
        }
        let d = NoiseParam::new(d.ok_or_else(|| bad("missing d in header".into()))?)?;
        let w_max = w_max.ok_or_else(|| bad("missing w_max in header".into()))?;
        match next()? {
            Some(h) if h.trim() == TABLE_HEADER => {}
            other => return Err(bad(format!("unexpected column header {other:?}"))),
        }
        let mut rows = Vec::new();
        while let Some(line) = next()? {
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("{e} in {line:?}")))?;
            if v.len() != 10 {
                return Err(bad(format!("expected 10 fields, got {}", v.len())));
            }
            rows.push(TableRow {
                a: AVector { w: v[0], d, a1: v[1], a2: v[2], a3: v[3], a4: v[4], a5: v[5], a6: v[6] },
                c1_tilde: v[7],
                psi: v[8],
                lambda: v[9],
            });
        }
        check_w_grid(w_max, rows.len())?;
        Ok(CoefficientTable { d, w_max, rows })
    }
}

/// Density in W per unit W on the midpoint grid of a coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct WDensity {
    pub w_max: f64,
    pub values: Vec<f64>,
}

impl WDensity {
    pub fn new(w_max: f64, values: Vec<f64>) -> Result<Self> {
        check_w_grid(w_max, values.len())?;
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CoreError::Domain("densities must be finite and nonnegative".into()));
        }
        Ok(WDensity { w_max, values })
    }

    /// Gaussian in W sampled at the midpoints and rescaled to the given mass.
    pub fn gaussian(w_max: f64, n_w: usize, center: f64, sigma: f64, mass: f64) -> Result<Self> {
        check_w_grid(w_max, n_w)?;
        if !(sigma > 0.0 && mass >= 0.0) {
            return Err(CoreError::Domain(format!("sigma={sigma}, mass={mass}")));
        }
        let raw: Vec<f64> =
            midpoints(w_max, n_w).iter().map(|w| (-(w - center).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = raw.iter().sum::<f64>() * 2.0 * w_max / n_w as f64;
        let mut values: Vec<f64> = raw.iter().map(|v| v * mass / total).collect();
        if center == 0.0 {
            for i in 0..n_w / 2 {
                values[n_w - 1 - i] = values[i];
            }
        }
        WDensity::new(w_max, values)
    }

    /// Unit mass concentrated in bin `i`.
    pub fn point_mass(w_max: f64, n_w: usize, i: usize) -> Result<Self> {
        check_w_grid(w_max, n_w)?;
        if i >= n_w {
            return Err(CoreError::Grid(format!("bin {i} out of {n_w}")));
        }
        let mut values = vec![0.0; n_w];
        values[i] = n_w as f64 / (2.0 * w_max);
        WDensity::new(w_max, values)
    }

    pub fn n_w(&self) -> usize {
        self.values.len()
    }

    pub fn dw(&self) -> f64 {
        2.0 * self.w_max / self.n_w() as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dw()
    }

    /// ρY = Σ w ρ_w Δw.
    pub fn angular_momentum(&self) -> f64 {
        midpoints(self.w_max, self.n_w()).iter().zip(&self.values).map(|(w, r)| w * r).sum::<f64>() * self.dw()
    }

    pub fn scaled(&self, alpha: f64) -> WDensity {
        WDensity { w_max: self.w_max, values: self.values.iter().map(|v| alpha * v).collect() }
    }

    /// Largest |ρ_w − ρ_{−w}| relative to the largest value.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.n_w();
        let top = self.values.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        (0..n / 2).map(|i| (self.values[i] - self.values[n - 1 - i]).abs()).fold(0.0, f64::max) / top
    }
}

fn check_match(table: &CoefficientTable, w_max: f64, n_w: usize) -> Result<()> {
    if table.n_w() != n_w || table.w_max != w_max {
        return Err(CoreError::Grid(format!(
            "density grid (w_max={w_max}, n_w={n_w}) does not match table (w_max={}, n_w={})",
            table.w_max,
            table.n_w()
        )));
    }
    Ok(())
}

/// m_k[ρ] = Σ a_k(w_i) ρ_i Δw for k = 1..6.
pub fn moments(table: &CoefficientTable, rho: &WDensity) -> Result<[f64; 6]> {
    check_match(table, rho.w_max, rho.n_w())?;
    let mut m = [0.0; 6];
    for (row, r) in table.rows.iter().zip(&rho.values) {
        for (k, a) in row.a.as_array().iter().enumerate() {
            m[k] += a * r;
        }
    }
    let dw = table.dw();
    Ok(m.map(|v| v * dw))
}

/// m_k of an arbitrary (possibly complex-weighted) per-node density, used for
/// bracket moments such as m5[c̃1 ρ].
pub fn moment_of<T>(table: &CoefficientTable, k: usize, values: &[T]) -> Result<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
{
    check_match(table, table.w_max, values.len())?;
    if !(1..=6).contains(&k) {
        return Err(CoreError::Domain(format!("no moment m{k}")));
    }
    let dw = table.dw();
    Ok(table.rows.iter().zip(values).map(|(row, &v)| v * (row.a.get(k) * dw)).sum())
}

/// First-order slopes a_k(ζW) ≈ a_k¹ ζW for k = 3, 4, 6 and c_k = a_k¹/a1(0).
#[derive(Debug, Clone, Copy)]
pub struct SmallZetaCoeffs {
    pub a1_0: f64,
    pub a3_1: f64,
    pub a4_1: f64,
    pub a6_1: f64,
    pub c3: f64,
    pub c4: f64,
    pub c6: f64,
}

struct ZeroOrder {
    lambda0: f64,
    a1_0: f64,
    cross: Vec<f64>,
}

fn zero_order(pert: &PerturbationProfiles) -> ZeroOrder {
    let grid = &pert.grid;
    let d = pert.d.value();
    let (p0, x0) = (&pert.phi0, &pert.x0);
    let lambda0 = integrate_with(grid, |j, t| t.sin().powi(2) * p0[j]) / (d * pert.c1);
    let a1_0 = integrate_with(grid, |j, t| t.sin() * p0[j] * x0[j]) / (d * lambda0);
    let cross = (0..grid.n()).map(|j| p0[j] * pert.x1[j] + pert.phi1[j] * x0[j]).collect();
    ZeroOrder { lambda0, a1_0, cross }
}

fn with_ratios(z: &ZeroOrder, a3_1: f64, a4_1: f64, a6_1: f64) -> SmallZetaCoeffs {
    SmallZetaCoeffs {
        a1_0: z.a1_0,
        a3_1,
        a4_1,
        a6_1,
        c3: a3_1 / z.a1_0,
        c4: a4_1 / z.a1_0,
        c6: a6_1 / z.a1_0,
    }
}

/// Slopes obtained by differentiating the coefficient definitions at W = 0,
/// including the rotation by ψ ≈ (β/c1)W and the C(W) correction.
pub fn small_zeta_coeffs(pert: &PerturbationProfiles) -> Result<SmallZetaCoeffs> {
    let grid = &pert.grid;
    let d = pert.d.value();
    let z = zero_order(pert);
    let (p0, x0, c1) = (&pert.phi0, &pert.x0, pert.c1);
    let bc = pert.beta / c1;
    let c_slope = (pert.beta - 1.0) / (2.0 * std::f64::consts::PI * d);
    let a3_1 = integrate_with(grid, |j, t| {
        let (s, c) = t.sin_cos();
        -s * p0[j] * x0[j] - bc * s * c * p0[j] * x0[j] + s * s * z.cross[j]
    }) / (d * z.lambda0)
        - c_slope / z.lambda0 * integrate_with(grid, |j, t| t.sin() * x0[j]);
    let a4_1 = -c1 * integrate_with(grid, |j, _| z.cross[j]);
    let a6_1 = integrate_with(grid, |j, t| (t.cos() - c1) * z.cross[j])
        + bc * integrate_with(grid, |j, t| t.sin() * p0[j] * x0[j]);
    Ok(with_ratios(&z, a3_1, a4_1, a6_1))
}

/// The slope formulas exactly as printed, evaluated on the same profiles.
pub fn printed_small_zeta_coeffs(pert: &PerturbationProfiles) -> Result<SmallZetaCoeffs> {
    let grid = &pert.grid;
    let d = pert.d.value();
    let z = zero_order(pert);
    let (p0, x0, c1) = (&pert.phi0, &pert.x0, pert.c1);
    let a3_1 = integrate_with(grid, |j, t| {
        let s = t.sin();
        -s * p0[j] * x0[j] * (1.0 + pert.beta / c1) + s * s * z.cross[j]
    }) / (d * z.lambda0);
    let a4_1 = c1 * integrate_with(grid, |j, _| z.cross[j]);
    let a6_1 = integrate_with(grid, |j, t| (t.cos() - c1) * z.cross[j]);
    Ok(with_ratios(&z, a3_1, a4_1, a6_1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gci::solve_perturbations;
    use crate::vmf::{c2, g_profile, vmf_profile};
    use proptest::prelude::*;

    fn nd(d: f64) -> NoiseParam {
        NoiseParam::new(d).unwrap()
    }

    fn grid() -> AngularGrid {
        periodic_grid(DEFAULT_N).unwrap()
    }

    fn avec(d: f64, w: f64) -> AVector {
        node_row(nd(d), w, &grid()).unwrap().a
    }

    #[test]
    fn zero_w_identities() {
        for d in [0.2, 1.0, 5.0] {
            let g = grid();
            let gvm = solve_gvm(nd(d), 0.0, &g).unwrap();
            let a = compute_avector(&gvm, &solve_gci(&gvm).unwrap()).unwrap();
            assert!(a.a3.abs() < 1e-10 && a.a4.abs() < 1e-10 && a.a6.abs() < 1e-10, "{a:?}");
            assert!((a.a5 - d * gvm.lambda * a.a1).abs() < 1e-9);
            assert!((a.a2 / a.a1 - c2(nd(d)).unwrap()).abs() < 1e-8, "d={d}");
            assert!((gvm.lambda - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn a1_at_zero_matches_closed_form() {
        for d in [0.2, 1.0, 5.0] {
            let g = grid();
            let m = vmf_profile(nd(d), &g).unwrap().values;
            let gg = g_profile(nd(d), &g).unwrap();
            // λ(0) = 1 by the Bessel identity ∫sin²θ M = d c1, and X0 = g/d.
            let oracle = integrate_with(&g, |j, t| m[j] * gg[j] / d * t.sin()) / d;
            let z = small_zeta_coeffs(&solve_perturbations(nd(d), &g).unwrap()).unwrap();
            assert!((z.a1_0 - oracle).abs() < 1e-9, "d={d}: {} vs {oracle}", z.a1_0);
            assert!((avec(d, 0.0).a1 - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_profiles_rejected() {
        let g = grid();
        let a = solve_gvm(nd(1.0), 0.5, &g).unwrap();
        let b = solve_gvm(nd(1.0), 0.7, &g).unwrap();
        assert!(compute_avector(&a, &solve_gci(&b).unwrap()).is_err());
    }

    #[test]
    fn gci_scale_homogeneity() {
        let beta = 3.7;
        let g = grid();
        let gvm = solve_gvm(nd(1.0), 1.3, &g).unwrap();
        let gci = solve_gci(&gvm).unwrap();
        let a = compute_avector(&gvm, &gci).unwrap().as_array();
        let b = compute_avector(&gvm, &gci.scaled(beta)).unwrap().as_array();
        for k in 0..6 {
            assert!((b[k] - beta * a[k]).abs() <= 1e-12 * (1.0 + a[k].abs()), "k={k}");
            assert!((b[k] / b[0] - a[k] / a[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn table_parity_and_positivity() {
        let t = build_table(nd(1.0), 10.0, 64).unwrap();
        assert_eq!(t.n_w(), 64);
        let p = t.parity();
        assert!(p.pass(1e-8), "{p:?}");
        assert!(t.rows.iter().all(|r| r.a.a1 > 0.0 && r.a.a5 > 0.0));
        let w = t.w_nodes();
        assert!(w.windows(2).all(|s| s[1] > s[0]));
        assert!((w[0] + 10.0 - t.dw() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn a6_decays_like_inverse_w() {
        // Φ → 1/2π and X ≈ cos(θ − ψ)/W for large W, so a6 ≈ 1/(2W).
        for (d, w) in [(1.0, 10.0), (0.2, 20.0)] {
            let a6 = avec(d, w).a6;
            assert!((2.0 * w * a6 - 1.0).abs() < 0.05, "d={d} w={w} a6={a6}");
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let t = build_table(nd(0.7), 4.0, 8).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, "run d=0.2,1,5 w_max=99").unwrap();
        let back = CoefficientTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), TABLE_HEADER);
    }

    #[test]
    fn bad_table_requests() {
        assert!(build_table(nd(1.0), 10.0, 63).is_err());
        assert!(matches!(build_table(nd(1.0), 1e6, 64), Err(CoreError::Overflow(_))));
    }

    #[test]
    fn interpolation_hits_nodes_and_refines() {
        let g = periodic_grid(128).unwrap();
        let coarse = build_table_on(nd(1.0), 4.0, 16, &g).unwrap();
        let fine = build_table_on(nd(1.0), 4.0, 32, &g).unwrap();
        for r in &coarse.rows {
            assert_eq!(coarse.interpolate(r.a.w).unwrap().a.a2, r.a.a2);
        }
        // Fine nodes sit a quarter cell from coarse nodes; linear interpolation
        // error is O(Δw²).
        let err = fine
            .rows
            .iter()
            .map(|r| (coarse.interpolate(r.a.w).unwrap().psi - r.psi).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
        assert!(coarse.interpolate(4.5).is_err());
    }

    #[test]
    fn moments_basic() {
        let g = periodic_grid(128).unwrap();
        let t = build_table_on(nd(1.0), 4.0, 16, &g).unwrap();
        let pm = WDensity::point_mass(4.0, 16, 11).unwrap();
        assert!((pm.mass() - 1.0).abs() < 1e-14);
        let m = moments(&t, &pm).unwrap();
        for k in 0..6 {
            assert!((m[k] - t.rows[11].a.as_array()[k]).abs() < 1e-14);
        }
        let rho = WDensity::gaussian(4.0, 16, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(rho.evenness_defect(), 0.0);
        assert!((rho.mass() - 2.0).abs() < 1e-13);
        let m = moments(&t, &rho).unwrap();
        for k in [2, 3, 5] {
            assert!(m[k].abs() < 1e-8 * rho.mass(), "m{} = {}", k + 1, m[k]);
        }
        let m2 = moments(&t, &rho.scaled(2.5)).unwrap();
        for k in 0..6 {
            assert!((m2[k] - 2.5 * m[k]).abs() <= 1e-13 * (1.0 + m[k].abs()));
        }
        let wrong = WDensity::gaussian(4.0, 18, 0.0, 1.0, 1.0).unwrap();
        assert!(moments(&t, &wrong).is_err());
        let zero = WDensity::new(4.0, vec![0.0; 16]).unwrap();
        assert_eq!(moments(&t, &zero).unwrap(), [0.0; 6]);
    }

    #[test]
    fn density_validation() {
        assert!(WDensity::new(1.0, vec![1.0, -1.0]).is_err());
        assert!(WDensity::new(1.0, vec![1.0, 1.0, 1.0]).is_err());
        let r = WDensity::gaussian(5.0, 64, 1.0, 0.5, 1.0).unwrap();
        assert!((r.angular_momentum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn even_coefficients_are_flat_to_second_order() {
        let base = avec(1.0, 0.0).as_array();
        let errs: Vec<[f64; 6]> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&z| {
                let a = avec(1.0, z).as_array();
                std::array::from_fn(|k| (a[k] - base[k]).abs())
            })
            .collect();
        for k in [0, 1, 4] {
            for i in 0..2 {
                let r = errs[i][k] / errs[i + 1][k];
                assert!((r - 4.0).abs() < 0.8, "a{} ratio {r}", k + 1);
            }
        }
    }

    #[test]
    fn odd_slopes_match_small_zeta_coefficients() {
        let z = small_zeta_coeffs(&solve_perturbations(nd(1.0), &grid()).unwrap()).unwrap();
        let slopes = [z.a3_1, z.a4_1, z.a6_1];
        let errs: Vec<[f64; 3]> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&zeta| {
                let a = avec(1.0, zeta);
                let got = [a.a3 / zeta, a.a4 / zeta, a.a6 / zeta];
                std::array::from_fn(|k| (got[k] - slopes[k]).abs())
            })
            .collect();
        // e(ζ)/ζ² must not grow as ζ shrinks; a constant or O(ζ) defect would.
        let zetas = [0.2, 0.1, 0.05];
        for k in 0..3 {
            let norm: Vec<f64> = (0..3).map(|i| errs[i][k] / (zetas[i] * zetas[i])).collect();
            assert!(norm[2] <= 1.5 * norm[0].max(norm[1]), "k={k} {norm:?}");
            assert!(errs[2][k] < 1e-2 * slopes[k].abs(), "k={k} {errs:?}");
        }
    }

    #[test]
    fn printed_slopes_differ() {
        let p = solve_perturbations(nd(1.0), &grid()).unwrap();
        let ours = small_zeta_coeffs(&p).unwrap();
        let printed = printed_small_zeta_coeffs(&p).unwrap();
        assert!((ours.a4_1 + printed.a4_1).abs() < 1e-12);
        assert_eq!(ours.a1_0, printed.a1_0);
        assert!((ours.c3 - ours.a3_1 / ours.a1_0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn moments_are_linear(
            vals in proptest::collection::vec(0.0f64..3.0, 8),
            alpha in 0.1f64..5.0,
        ) {
            let g = periodic_grid(64).unwrap();
            let t = build_table_on(nd(1.0), 2.0, 8, &g).unwrap();
            let rho = WDensity::new(2.0, vals).unwrap();
            let a = moments(&t, &rho).unwrap();
            let b = moments(&t, &rho.scaled(alpha)).unwrap();
            for k in 0..6 {
                prop_assert!((b[k] - alpha * a[k]).abs() <= 1e-12 * (1.0 + a[k].abs()));
            }
        }
    }
}
