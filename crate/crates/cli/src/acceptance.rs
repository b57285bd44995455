//! The acceptance matrix. Each criterion runs at the stated scale and
//! reports one PASS/FAIL line built from named sub-checks.

use crate::commands::{cmd_coeffs, cmd_profiles};
use crate::config::Config;
use crate::{CliError, Result, RunContext};
use rotalign_core::angular::{periodic_grid, AngularGrid};
use rotalign_core::bvp::Stencil;
use rotalign_core::coefficients::{build_table_on, node_row, small_zeta_coeffs, CoefficientTable, WDensity};
use rotalign_core::dispersion::{stability_scan, DispersionProblem};
use rotalign_core::gci::{gci_parity_check, solve_gci, solve_gci_with, solve_perturbations, GciForm, GciOptions};
use rotalign_core::gvm::{gvm_parity_pair, solve_gvm};
use rotalign_core::vmf::{c1, c2, c5_bessel, c5_quadrature, g_profile, vmf_profile, NoiseParam};
use rotalign_hydro::waves::{sohr_l_transverse_frequency, sohr_s_plane_wave, WaveSetup};
use rotalign_hydro::{soh_eigenvalues, soh_linearized_speeds, SmallParams};
use rotalign_ibm::equilibrium::{run_equilibrium, EquilibriumSpec};
use rotalign_ibm::sampling::{uniform_angles, uniform_positions};
use rotalign_ibm::system::init_rng;
use rotalign_ibm::{neighbor_flux, neighbor_flux_brute, IbmParams, Law, NeighborIndex, ParticleSystem};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

pub const CRITERIA: [(u8, &str, &str); 11] = [
    (1, "equilibrium", "closed-form equilibrium at W = 0"),
    (2, "gci", "GCI oracle at W = 0 and second-order convergence"),
    (3, "parity", "parity of profiles and coefficients"),
    (4, "positivity", "a1 > 0 and a5 > 0 on |W| <= 10"),
    (5, "identities", "identities at W = 0"),
    (6, "small_zeta", "small-zeta rates"),
    (7, "dispersion", "real dispersion roots"),
    (8, "hydro", "hydro plane waves against dispersion and eigenvalues"),
    (9, "ibm", "particle histograms against equilibria"),
    (10, "figures", "figure-data features"),
    (11, "neighbors", "neighbor search and determinism"),
];

/// Sub-checks that fail for documented reasons, as (criterion, sub-check).
pub const KNOWN_DEVIATIONS: &[(u8, &str)] = &[(10, "a6_plateau")];

#[derive(Debug, Clone)]
pub struct SubCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub tag: &'static str,
    pub title: &'static str,
    pub checks: Vec<SubCheck>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn status(&self) -> &'static str {
        if self.pass() {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// Failing sub-checks not listed in [`KNOWN_DEVIATIONS`].
    pub fn unexpected_failures(&self) -> Vec<&SubCheck> {
        self.checks
            .iter()
            .filter(|c| !c.pass && !KNOWN_DEVIATIONS.contains(&(self.id, c.name.as_str())))
            .collect()
    }

    pub fn detail(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{}{}: {}", if c.pass { "" } else { "!" }, c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn line(&self) -> String {
        format!("{} [{:>2} {}] {} | {}", self.status(), self.id, self.tag, self.title, self.detail())
    }
}

/// Criterion ids for tags ("all", a tag name, or a number).
pub fn select(tags: &[String]) -> Result<Vec<u8>> {
    let mut ids = Vec::new();
    for t in tags {
        let t = t.trim();
        if t == "all" {
            ids.extend(CRITERIA.iter().map(|c| c.0));
            continue;
        }
        let id = CRITERIA
            .iter()
            .find(|(id, tag, _)| *tag == t || t.parse::<u8>().ok() == Some(*id))
            .map(|c| c.0)
            .ok_or_else(|| CliError::Config(format!("unknown validation tag '{t}'")))?;
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

struct Checks(Vec<SubCheck>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        self.0.push(SubCheck { name: name.into(), pass, detail });
    }
}

fn nd(d: f64) -> NoiseParam {
    NoiseParam::new(d).expect("criterion parameters are in range")
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const DS: [f64; 3] = [0.2, 1.0, 5.0];

pub fn run_criterion(id: u8, scratch: &Path, ctx: &RunContext) -> Result<CriterionResult> {
    let (_, tag, title) = *CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| CliError::Config(format!("no criterion {id}")))?;
    let mut c = Checks(Vec::new());
    let g512 = periodic_grid(512)?;
    match id {
        1 => equilibrium(&mut c, &g512)?,
        2 => gci_oracle(&mut c, &g512)?,
        3 => parity(&mut c, &g512)?,
        4 => positivity(&mut c, &g512)?,
        5 => identities(&mut c, &g512)?,
        6 => small_zeta(&mut c, &g512)?,
        7 => dispersion(&mut c, &g512)?,
        8 => hydro(&mut c)?,
        9 => ibm(&mut c, ctx)?,
        10 => figures(&mut c, scratch, ctx)?,
        11 => neighbors(&mut c, ctx)?,
        _ => unreachable!(),
    }
    Ok(CriterionResult { id, tag, title, checks: c.0 })
}

fn equilibrium(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    for d in DS {
        let e = sup(&solve_gvm(nd(d), 0.0, g)?.phi, &vmf_profile(nd(d), g)?.values);
        c.add(format!("d={d}"), e <= 1e-10, format!("{e:.2e}"));
    }
    Ok(())
}

fn gci_oracle(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    let oracle = |d: f64, grid: &AngularGrid| -> Result<Vec<f64>> {
        Ok(g_profile(nd(d), grid)?.iter().map(|v| v / d).collect())
    };
    for d in DS {
        let x = solve_gci(&solve_gvm(nd(d), 0.0, g)?)?;
        let e = sup(&x.x, &oracle(d, g)?);
        c.add(format!("d={d}"), e <= 1e-7, format!("{e:.2e}"));
        let errs = [128, 256, 512]
            .iter()
            .map(|&n| {
                let grid = periodic_grid(n)?;
                let opts = GciOptions { form: GciForm::Consistent, stencil: Stencil::Central2 };
                let x = solve_gci_with(&solve_gvm(nd(d), 0.0, &grid)?, opts)?;
                Ok(sup(&x.x, &oracle(d, &grid)?))
            })
            .collect::<Result<Vec<f64>>>()?;
        let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
        let ok = ratios.iter().all(|r| (3.2..=4.8).contains(r));
        c.add(format!("order d={d}"), ok, format!("ratios {:.2}, {:.2}", ratios[0], ratios[1]));
    }
    Ok(())
}

fn parity(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    let (mut even, mut odd, mut prof): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for d in DS {
        for w in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let (p, m) = (node_row(nd(d), w, g)?, node_row(nd(d), -w, g)?);
            for (a, b) in [
                (p.c1_tilde, m.c1_tilde),
                (p.lambda, m.lambda),
                (p.a.a1, m.a.a1),
                (p.a.a2, m.a.a2),
                (p.a.a5, m.a.a5),
            ] {
                even = even.max((a - b).abs());
            }
            let pair = gvm_parity_pair(nd(d), w, g)?;
            for (a, b) in [
                (p.psi, m.psi),
                (pair.plus.c_const, pair.minus.c_const),
                (p.a.a3, m.a.a3),
                (p.a.a4, m.a.a4),
                (p.a.a6, m.a.a6),
            ] {
                odd = odd.max((a + b).abs());
            }
            prof = prof.max(pair.profile_defect).max(gci_parity_check(nd(d), w, g)?.defect);
        }
    }
    c.add("even", even <= 1e-8, format!("{even:.2e}"));
    c.add("odd", odd <= 1e-8, format!("{odd:.2e}"));
    c.add("profiles", prof <= 1e-8, format!("{prof:.2e}"));
    let mut zero: f64 = 0.0;
    for d in DS {
        let r = node_row(nd(d), 0.0, g)?;
        zero = zero.max(r.a.a3.abs()).max(r.a.a4.abs()).max(r.a.a6.abs());
    }
    c.add("odd_at_zero", zero <= 1e-10, format!("{zero:.2e}"));
    Ok(())
}

fn positivity(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    for d in DS {
        let t = build_table_on(nd(d), 10.0, 64, g)?;
        let a1 = t.rows.iter().map(|r| r.a.a1).fold(f64::INFINITY, f64::min);
        let a5 = t.rows.iter().map(|r| r.a.a5).fold(f64::INFINITY, f64::min);
        c.add(format!("d={d}"), a1 > 0.0 && a5 > 0.0, format!("min a1 {a1:.3e}, min a5 {a5:.3e}"));
    }
    Ok(())
}

fn identities(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    for d in DS {
        let r = node_row(nd(d), 0.0, g)?;
        let e5 = (r.a.a5 - d * r.lambda * r.a.a1).abs();
        let e2 = (r.a.a2 / r.a.a1 - c2(nd(d))?).abs();
        let el = (r.lambda - 1.0).abs();
        let ec = (c5_bessel(nd(d))? - d).abs().max((c5_quadrature(nd(d), g)? - d).abs());
        c.add(format!("a5 d={d}"), e5 <= 1e-9, format!("{e5:.1e}"));
        c.add(format!("c2 d={d}"), e2 <= 1e-8, format!("{e2:.1e}"));
        c.add(format!("lambda d={d}"), el <= 1e-10, format!("{el:.1e}"));
        c.add(format!("c5 d={d}"), ec <= 1e-10, format!("{ec:.1e}"));
    }
    Ok(())
}

fn small_zeta(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    let d = nd(1.0);
    let zetas = [0.2, 0.1, 0.05];
    let base = node_row(d, 0.0, g)?.a.as_array();
    let rows = zetas.iter().map(|&z| Ok(node_row(d, z, g)?.a.as_array())).collect::<Result<Vec<_>>>()?;
    for k in [0, 1, 4] {
        let e: Vec<f64> = rows.iter().map(|r| (r[k] - base[k]).abs()).collect();
        let ratios = [e[0] / e[1], e[1] / e[2]];
        let ok = ratios.iter().all(|r| (3.2..=4.8).contains(r));
        c.add(format!("a{}", k + 1), ok, format!("ratios {:.3}, {:.3}", ratios[0], ratios[1]));
    }
    let sz = small_zeta_coeffs(&solve_perturbations(d, g)?)?;
    for (k, slope) in [(2, sz.a3_1), (3, sz.a4_1), (5, sz.a6_1)] {
        let e: Vec<f64> = rows.iter().zip(zetas).map(|(r, z)| (r[k] / z - slope).abs()).collect();
        let norm: Vec<f64> = e.iter().zip(zetas).map(|(e, z)| e / (z * z)).collect();
        let ok = norm[2] <= 1.5 * norm[0].max(norm[1]) && e[2] < 1e-2 * slope.abs();
        c.add(
            format!("a{}'", k + 1),
            ok,
            format!("slope {slope:.5}, e/zeta^2 {:.3e} {:.3e} {:.3e}", norm[0], norm[1], norm[2]),
        );
    }
    Ok(())
}

fn dispersion(c: &mut Checks, g: &AngularGrid) -> Result<()> {
    let xi = [0.5, 1.0, 2.0, 4.0];
    let theta: Vec<f64> = (0..5).map(|i| i as f64 * PI / 8.0).collect();
    for d in [0.2, 1.0] {
        let table = build_table_on(nd(d), 10.0, 64, g)?;
        let rho = WDensity::gaussian(10.0, 64, 0.0, 1.0, 1.0)?;
        let r = stability_scan(&table, &rho, &xi, &theta)?;
        c.add(format!("imag d={d}"), r.pass, format!("max |Im| {:.2e}", r.max_imag));
        c.add(
            format!("closed d={d}"),
            r.closed_form_defect <= 1e-6,
            format!("{:.2e}", r.closed_form_defect),
        );
    }
    Ok(())
}

fn hydro(c: &mut Checks) -> Result<()> {
    let d = nd(1.0);
    let grid = periodic_grid(256)?;
    let table = Arc::new(build_table_on(d, 8.0, 32, &grid)?);
    let rho = WDensity::gaussian(8.0, 32, 0.0, 1.0, 1.0)?;
    let setup = WaveSetup::default();
    let xi = 2.0 * PI / setup.length;
    let root = DispersionProblem::new(&table, &rho, xi, PI / 2.0)?
        .closed_form()
        .and_then(|r| r.last().copied())
        .ok_or_else(|| CliError::Run("no closed-form root".into()))?;
    let f = sohr_l_transverse_frequency(table, &rho, setup)?;
    let rel = (f / root - 1.0).abs();
    c.add("sohr_l", rel < 0.05, format!("frequency {f:.5} vs root {root:.5} ({:.2}%)", 100.0 * rel));

    let p = SmallParams { c1: c1(d)?, c2: c2(d)?, d: 1.0 };
    let (lo, hi) = sohr_s_plane_wave(p, 0.0, setup)?;
    let (glo, ghi) = soh_eigenvalues(p.c1, p.c2, p.d, 0.0);
    let rel = (lo / glo - 1.0).abs().max((hi / ghi - 1.0).abs());
    c.add(
        "sohr_s",
        rel < 0.05,
        format!("speeds ({lo:.5}, {hi:.5}) vs ({glo:.5}, {ghi:.5}) ({:.2}%)", 100.0 * rel),
    );
    let t = PI / 2.0;
    let (lo, hi) = sohr_s_plane_wave(p, t, setup)?;
    let (llo, lhi) = soh_linearized_speeds(p.c1, p.c2, p.d, t);
    let (plo, phi) = soh_eigenvalues(p.c1, p.c2, p.d, t);
    let rel = (lo / llo - 1.0).abs().max((hi / lhi - 1.0).abs());
    c.add(
        "sohr_s transverse",
        rel < 0.05,
        format!("speeds ({lo:.4}, {hi:.4}) vs linearized ({llo:.4}, {lhi:.4}); printed ({plo:.4}, {phi:.4})"),
    );
    Ok(())
}

fn ibm(c: &mut Checks, ctx: &RunContext) -> Result<()> {
    for (law, w) in [(Law::L, 1.0), (Law::S, 0.0)] {
        let spec = EquilibriumSpec { law, w, d: 0.2, seed: ctx.seed, serial: ctx.serial, ..Default::default() };
        let r = run_equilibrium(&spec)?;
        c.add(format!("law {law}"), r.l1 < 0.05, format!("L1 {:.4}", r.l1));
    }
    Ok(())
}

fn read_csv_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let f = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.starts_with('#') || line.starts_with(|ch: char| ch.is_alphabetic()) {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::Run(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_table(path: &Path) -> Result<CoefficientTable> {
    Ok(CoefficientTable::read_csv(BufReader::new(File::open(path)?))?)
}

fn figures(c: &mut Checks, scratch: &Path, ctx: &RunContext) -> Result<()> {
    let sub = RunContext { out: scratch.join("figures"), ..ctx.clone() };
    let mut cfg = Config::default();
    cfg.set("coeffs", "d", "0.2,1,5")?;
    cfg.set("coeffs", "w_max", "10")?;
    cfg.set("coeffs", "n_w", "64")?;
    cmd_coeffs(&cfg, &sub)?;
    cmd_profiles(&cfg, &sub)?;

    let t02 = read_table(&sub.out.join("coeffs_d0.2.csv"))?;
    let psi = t02.interpolate(1.0)?.psi;
    c.add("psi", (0.5..=1.5).contains(&psi), format!("psi(W=1, d=0.2) = {psi:.4} rad"));

    let uniform = 1.0 / (2.0 * PI);
    let mut dev: f64 = 0.0;
    for d in DS {
        let rows = read_csv_columns(&sub.out.join(format!("profile_d{d}_w20.csv")))?;
        dev = dev.max(rows.iter().map(|r| (r[1] - uniform).abs()).fold(0.0, f64::max));
    }
    c.add("gvm_w20_uniform", dev < 0.02, format!("sup |Phi - 1/2pi| = {dev:.4}"));

    let mut odd: f64 = 0.0;
    for d in DS {
        let rows = read_csv_columns(&sub.out.join(format!("profile_d{d}_w0.csv")))?;
        let n = rows.len();
        odd = odd.max((0..n).map(|j| (rows[j][2] + rows[(n - j) % n][2]).abs()).fold(0.0, f64::max));
    }
    c.add("gci_w0_odd", odd <= 1e-9, format!("{odd:.2e}"));

    let t1 = read_table(&sub.out.join("coeffs_d1.csv"))?;
    let (a8, a10) = (t1.interpolate(8.0)?.a.a6, t1.interpolate(10.0)?.a.a6);
    let rel = (a10 - a8).abs() / a10.abs();
    c.add(
        "a6_plateau",
        rel < 0.2,
        format!("a6(8) = {a8:.4}, a6(10) = {a10:.4}, relative change {rel:.3}"),
    );
    Ok(())
}

fn neighbors(c: &mut Checks, ctx: &RunContext) -> Result<()> {
    let build = |n: usize, seed: u64| -> Result<ParticleSystem> {
        let params = IbmParams { radius: 0.1, ..Default::default() };
        let mut rng = init_rng(seed);
        let pos = uniform_positions(n, params.box_len, &mut rng);
        let theta = uniform_angles(n, &mut rng);
        Ok(ParticleSystem::new(params, Law::S, pos, theta, vec![0.0; n], None, seed)?)
    };
    let sys = build(500, ctx.seed)?;
    let index = NeighborIndex::build(&sys);
    let cells = matches!(index, NeighborIndex::Cells { .. });
    let mut err: f64 = 0.0;
    for k in 0..sys.n() {
        let a = neighbor_flux(&sys, &index, k);
        let b = neighbor_flux_brute(&sys, k).0;
        err = err.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
    }
    c.add("hash_grid", cells && err <= 1e-12, format!("cell index {cells}, max diff {err:.1e}"));

    let run = |serial: bool| -> Result<u64> {
        let mut s = build(1000, ctx.seed)?;
        s.serial = serial;
        s.run(100)?;
        Ok(s.checksum())
    };
    let (a, b, p) = (run(true)?, run(true)?, run(false)?);
    c.add("serial_repeat", a == b, format!("{a:016x} / {b:016x}"));
    c.add("parallel_match", a == p, format!("{p:016x}"));
    Ok(())
}
