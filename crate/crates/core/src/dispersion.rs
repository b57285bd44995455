//! Linearized plane-wave dispersion relation of the large angular velocity
//! model about a uniform state (ρ0_W, Ω0).
//!
//! With Ω0 at angle θ to the wave vector, the frequency μ solves
//!
//! D(μ) = −μ m1 + m2 ξ cos θ − (m3 + m4) ξ sin θ
//!        − m5[B] ξ² sin²θ + m6[B] ξ² cos θ sin θ = 0,
//!
//! where B_W = c̃1 ρ0_W / (−μ + c̃1 ξ cos θ) and m_k are moments over W.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coefficients::{moment_of, moments, CoefficientTable, WDensity};
use crate::error::{CoreError, Result};

pub const MULLER_MAX_ITER: usize = 100;
pub const MULLER_TOL: f64 = 1e-12;
pub const ACCEPT_TOL: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-8;
pub const STABILITY_TOL: f64 = 1e-7;
pub const REPORT_HEADER: &str = "xi,theta,root_re,root_im,residual,flags";

#[derive(Debug, Clone)]
pub struct DispersionProblem<'a> {
    pub table: &'a CoefficientTable,
    pub rho0: &'a WDensity,
    pub xi: f64,
    pub theta_wave: f64,
    m: [f64; 6],
    /// c̃1(w) ρ0(w) per node.
    weights: Vec<f64>,
    /// c̃1(w) ξ cos θ per node.
    poles: Vec<f64>,
    coupled: bool,
}

impl<'a> DispersionProblem<'a> {
    pub fn new(table: &'a CoefficientTable, rho0: &'a WDensity, xi: f64, theta_wave: f64) -> Result<Self> {
        let m = moments(table, rho0)?;
        if !(rho0.mass() > 0.0) {
            return Err(CoreError::Domain("ρ0 has zero mass".into()));
        }
        if !(m[0] > 0.0) {
            return Err(CoreError::Domain(format!("m1 = {} is not positive", m[0])));
        }
        if !(xi.is_finite() && theta_wave.is_finite()) {
            return Err(CoreError::Domain(format!("xi={xi}, theta={theta_wave}")));
        }
        let (s, c) = theta_wave.sin_cos();
        let weights = table.rows.iter().zip(&rho0.values).map(|(r, v)| r.c1_tilde * v).collect();
        let poles = table.rows.iter().map(|r| r.c1_tilde * xi * c).collect();
        Ok(DispersionProblem {
            table,
            rho0,
            xi,
            theta_wave,
            m,
            weights,
            poles,
            coupled: xi != 0.0 && s != 0.0,
        })
    }

    pub fn moments(&self) -> [f64; 6] {
        self.m
    }

    /// Typical size of the terms of D, used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        let pmax = self.poles.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        self.m[0] * (1.0 + pmax + self.xi.abs() * (self.m[1].abs() / self.m[0]).max(1.0))
    }

    /// Real parts at which the bracket density has poles; empty when the
    /// bracket terms carry a zero factor.
    pub fn pole_range(&self) -> Option<(f64, f64)> {
        if !self.coupled {
            return None;
        }
        let lo = self.poles.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.poles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    fn resonance_eps(&self, mu: Complex64) -> f64 {
        1e-12 * (1.0 + mu.norm())
    }

    /// m5[B] and m6[B].
    fn bracket_moments(&self, mu: Complex64) -> Result<(Complex64, Complex64)> {
        let eps = self.resonance_eps(mu);
        let mut b = Vec::with_capacity(self.weights.len());
        for (w, p) in self.weights.iter().zip(&self.poles) {
            let den = -mu + p;
            if den.norm() < eps {
                return Err(CoreError::Domain(format!("μ = {mu} resonates with pole {p}")));
            }
            b.push(*w / den);
        }
        Ok((moment_of(self.table, 5, &b)?, moment_of(self.table, 6, &b)?))
    }

    pub fn eval(&self, mu: Complex64) -> Result<Complex64> {
        let (s, c) = self.theta_wave.sin_cos();
        let xi = self.xi;
        let m = &self.m;
        let mut d = -mu * m[0] + m[1] * xi * c - (m[2] + m[3]) * xi * s;
        if self.coupled {
            let (m5b, m6b) = self.bracket_moments(mu)?;
            d += -m5b * (xi * xi * s * s) + m6b * (xi * xi * c * s);
        }
        Ok(d)
    }

    /// m1 + m5[c̃1ρ0 / ((c̃1ξcosθ − α)² + β²)] ξ² sin²θ. A complex root α + iβ
    /// with β ≠ 0 of the even relation requires this to vanish.
    pub fn imaginary_identity_gap(&self, alpha: f64, beta: f64) -> Result<f64> {
        let s = self.theta_wave.sin();
        let b: Vec<f64> =
            self.weights.iter().zip(&self.poles).map(|(w, p)| w / ((p - alpha).powi(2) + beta * beta)).collect();
        Ok(self.m[0] + moment_of(self.table, 5, &b)? * self.xi * self.xi * s * s)
    }

    /// Closed-form roots for propagation along (θ = 0) or across (θ = π/2) Ω0.
    pub fn closed_form(&self) -> Option<Vec<f64>> {
        let (s, c) = self.theta_wave.sin_cos();
        if s.abs() < 1e-15 {
            return Some(vec![self.m[1] * self.xi * c / self.m[0]]);
        }
        if c.abs() < 1e-15 {
            let m5c = moment_of(self.table, 5, &self.weights).ok()?;
            let r = (m5c / self.m[0]).sqrt() * self.xi.abs();
            return Some(vec![-r, r]);
        }
        None
    }
}

pub fn dispersion_eval(p: &DispersionProblem, mu: Complex64) -> Result<Complex64> {
    p.eval(mu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRoot {
    pub mu: Complex64,
    pub residual: f64,
    /// Real root inside the pole range of the bracket density.
    pub resonant: bool,
}

#[derive(Debug, Clone)]
pub struct RootReport {
    pub roots: Vec<DispersionRoot>,
    /// Seeds whose Müller iteration did not reach the residual tolerance.
    pub failed_seeds: usize,
}

impl RootReport {
    pub fn non_resonant(&self) -> impl Iterator<Item = &DispersionRoot> {
        self.roots.iter().filter(|r| !r.resonant)
    }
}

fn muller(f: &dyn Fn(Complex64) -> Result<Complex64>, z: Complex64, tol: f64) -> Option<(Complex64, f64)> {
    let h = Complex64::new(1e-3 * (1.0 + z.norm()), 0.0);
    let mut x = [z - h, z + h, z];
    let mut fx = [f(x[0]).ok()?, f(x[1]).ok()?, f(x[2]).ok()?];
    for _ in 0..MULLER_MAX_ITER {
        if fx[2].norm() <= tol {
            return Some((x[2], fx[2].norm()));
        }
        let h1 = x[1] - x[0];
        let h2 = x[2] - x[1];
        let d1 = (fx[1] - fx[0]) / h1;
        let d2 = (fx[2] - fx[1]) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * fx[2] * a).sqrt();
        let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
        if !den.is_finite() || den.norm() == 0.0 {
            return None;
        }
        let dx = -2.0 * fx[2] / den;
        let x3 = x[2] + dx;
        let f3 = f(x3).ok()?;
        x = [x[1], x[2], x3];
        fx = [fx[1], fx[2], f3];
        if dx.norm() <= 1e-15 * (1.0 + x3.norm()) {
            return Some((x3, f3.norm()));
        }
    }
    Some((x[2], fx[2].norm()))
}

/// Bisection for a sign change of the real function g on [a, b].
fn bisect(g: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut b: f64) -> Option<f64> {
    let mut ga = g(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Some(m);
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Distinct pole positions, merging clusters closer than a relative 1e-12.
fn pole_clusters(poles: &[f64]) -> Vec<f64> {
    let mut p = poles.to_vec();
    p.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for v in p {
        match out.last() {
            Some(&l) if (v - l).abs() <= 1e-12 * (1.0 + v.abs()) => {}
            _ => out.push(v),
        }
    }
    out
}

fn sign_change_roots(g: &dyn Fn(f64) -> Option<f64>, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let pts: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
    let vals: Vec<Option<f64>> = pts.iter().map(|&x| g(x)).collect();
    for i in 0..samples {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a == 0.0 {
                out.push(pts[i]);
            } else if (a > 0.0) != (b > 0.0) {
                if let Some(r) = bisect(g, pts[i], pts[i + 1]) {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// All roots reachable from the closed forms, a real-axis scan and complex
/// offsets of those seeds.
pub fn find_roots(p: &DispersionProblem) -> Result<RootReport> {
    let scale = p.scale();
    let f = |z: Complex64| p.eval(z);
    let g = |x: f64| p.eval(Complex64::new(x, 0.0)).ok().map(|v| v.re);

    let m = p.moments();
    let m5c = moment_of(p.table, 5, &p.weights)?.abs();
    let reach = 4.0 * ((m[1] * p.xi).abs() / m[0] + (m5c / m[0]).sqrt() * p.xi.abs()) + 1.0;

    let mut seeds: Vec<Complex64> = Vec::new();
    let mut real_hits: Vec<f64> = Vec::new();
    if let Some(cf) = p.closed_form() {
        seeds.extend(cf.iter().map(|&r| Complex64::new(r, 0.0)));
    }
    match p.pole_range() {
        None => real_hits.extend(sign_change_roots(&g, -reach, reach, 400)),
        Some((lo, hi)) => {
            let gap = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            real_hits.extend(sign_change_roots(&g, lo - reach, lo - gap, 400));
            real_hits.extend(sign_change_roots(&g, hi + gap, hi + reach, 400));
            let cl = pole_clusters(&p.poles);
            for w in cl.windows(2) {
                let eps = 1e-9 * (w[1] - w[0]);
                if w[1] - w[0] > 1e-9 * (1.0 + w[1].abs()) {
                    real_hits.extend(sign_change_roots(&g, w[0] + eps, w[1] - eps, 4));
                }
            }
        }
    }
    seeds.extend(real_hits.iter().map(|&r| Complex64::new(r, 0.0)));
    let base: Vec<Complex64> = seeds.clone();
    for z in base.iter().filter(|z| !p.pole_range().is_some_and(|(lo, hi)| z.re >= lo && z.re <= hi)) {
        let off = 0.1 * (1.0 + z.norm());
        seeds.push(z + Complex64::new(0.0, off));
        seeds.push(z - Complex64::new(0.0, off));
    }
    let off = 0.5 * reach;
    seeds.extend([Complex64::new(0.0, off), Complex64::new(0.0, -off), Complex64::new(off, off), Complex64::new(-off, off)]);

    let mut roots: Vec<DispersionRoot> = Vec::new();
    let mut failed = 0;
    let push = |mu: Complex64, residual: f64, roots: &mut Vec<DispersionRoot>| {
        let resonant = mu.im.abs() <= DEDUP_TOL * (1.0 + mu.norm())
            && p.pole_range().is_some_and(|(lo, hi)| mu.re >= lo && mu.re <= hi);
        match roots.iter_mut().find(|r| (r.mu - mu).norm() <= DEDUP_TOL * (1.0 + mu.norm())) {
            Some(r) if r.residual > residual => *r = DispersionRoot { mu, residual, resonant },
            Some(_) => {}
            None => roots.push(DispersionRoot { mu, residual, resonant }),
        }
    };
    // Bracketed real roots are kept as found; polishing them with Müller can
    // step across a nearby pole.
    for &x in &real_hits {
        let z = Complex64::new(x, 0.0);
        if let Ok(v) = f(z) {
            if v.norm() <= ACCEPT_TOL * scale {
                push(z, v.norm(), &mut roots);
                continue;
            }
        }
        failed += 1;
    }
    for z in &seeds {
        if real_hits.iter().any(|&x| x == z.re && z.im == 0.0) {
            continue;
        }
        match muller(&f, *z, MULLER_TOL * scale) {
            Some((mu, res)) if res <= ACCEPT_TOL * scale => push(mu, res, &mut roots),
            _ => failed += 1,
        }
    }
    roots.sort_by(|a, b| a.mu.re.total_cmp(&b.mu.re).then(a.mu.im.total_cmp(&b.mu.im)));
    Ok(RootReport { roots, failed_seeds: failed })
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub xi: f64,
    pub theta: f64,
    pub root: DispersionRoot,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub rows: Vec<ScanRow>,
    /// max |Im μ| over non-resonant roots.
    pub max_imag: f64,
    /// Largest relative deviation from the closed forms at θ = 0, π/2.
    pub closed_form_defect: f64,
    pub failed_seeds: usize,
    pub pass: bool,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{REPORT_HEADER}");
        for r in &self.rows {
            let flag = if r.root.resonant { "resonant" } else { "ok" };
            let _ = writeln!(s, "{},{},{},{},{},{}", r.xi, r.theta, r.root.mu.re, r.root.mu.im, r.root.residual, flag);
        }
        s
    }
}

/// Relative distance from each closed-form root to the nearest found root.
pub fn closed_form_defect(p: &DispersionProblem, report: &RootReport) -> Option<f64> {
    let cf = p.closed_form()?;
    Some(
        cf.iter()
            .map(|&c| {
                report
                    .non_resonant()
                    .map(|r| (r.mu - Complex64::new(c, 0.0)).norm() / c.abs().max(1e-300))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max),
    )
}

pub fn stability_scan(
    table: &CoefficientTable,
    rho0_even: &WDensity,
    xi_grid: &[f64],
    theta_grid: &[f64],
) -> Result<StabilityReport> {
    let defect = rho0_even.evenness_defect();
    if defect > 1e-12 {
        return Err(CoreError::Domain(format!("ρ0 is not even (defect {defect:e})")));
    }
    let pairs: Vec<(f64, f64)> = xi_grid.iter().flat_map(|&x| theta_grid.iter().map(move |&t| (x, t))).collect();
    let found = pairs
        .par_iter()
        .map(|&(xi, theta)| {
            let p = DispersionProblem::new(table, rho0_even, xi, theta)?;
            let rep = find_roots(&p)?;
            let cf = closed_form_defect(&p, &rep).unwrap_or(0.0);
            Ok((xi, theta, rep, cf))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut max_imag = 0.0f64;
    let mut cf_defect = 0.0f64;
    let mut failed = 0;
    for (xi, theta, rep, cf) in found {
        failed += rep.failed_seeds;
        cf_defect = cf_defect.max(cf);
        for r in rep.roots {
            if !r.resonant {
                max_imag = max_imag.max(r.mu.im.abs());
            }
            rows.push(ScanRow { xi, theta, root: r });
        }
    }
    Ok(StabilityReport {
        rows,
        max_imag,
        closed_form_defect: cf_defect,
        failed_seeds: failed,
        pass: max_imag < STABILITY_TOL,
    })
}
