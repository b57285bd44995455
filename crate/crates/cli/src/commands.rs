//! The subcommands. Each reads its own config section, validates every
//! parameter before computing, and writes CSV files with a header line.

use crate::acceptance;
use crate::config::Config;
use crate::{header, CliError, Outcome, Result, RunContext};
use rotalign_core::angular::{periodic_grid, AngularGrid, DEFAULT_N};
use rotalign_core::coefficients::{build_table_on, small_zeta_coeffs, CoefficientTable, WDensity};
use rotalign_core::dispersion::{stability_scan, DispersionProblem};
use rotalign_core::gci::{solve_gci, solve_perturbations};
use rotalign_core::gvm::{check_overflow_guard, solve_gvm};
use rotalign_core::vmf::{c1, c2, c5, NoiseParam};
use rotalign_hydro::waves::{sohr_l_transverse_frequency, sohr_s_plane_wave, WaveSetup};
use rotalign_hydro::{
    soh_eigenvalues, soh_linearized_speeds, step_reduced, step_soh, step_sohr_l, step_sohr_s, HydroStateL,
    HydroStateS, Mesh, ReducedCoeffs, SmallParams, StepOptions, CFL_LIMIT,
};
use rotalign_ibm::checkpoint::write_checkpoint;
use rotalign_ibm::equilibrium::{run_equilibrium, EquilibriumSpec};
use rotalign_ibm::observables::global_flux;
use rotalign_ibm::sampling::{uniform_angles, uniform_positions};
use rotalign_ibm::system::init_rng;
use rotalign_ibm::{IbmParams, Law, ParticleSystem, PsiTable};
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn noise(d: f64) -> Result<NoiseParam> {
    NoiseParam::new(d).map_err(config_err)
}

fn grid(n: usize) -> Result<AngularGrid> {
    periodic_grid(n).map_err(config_err)
}

fn create(ctx: &RunContext, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(&ctx.out)?;
    let path = ctx.out.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

fn w_grid_check(w_max: f64, n_w: usize) -> Result<()> {
    if n_w == 0 || n_w % 2 != 0 {
        return Err(CliError::Config(format!("n_w must be even and positive, got {n_w}")));
    }
    if !(w_max > 0.0) {
        return Err(CliError::Config(format!("w_max must be positive, got {w_max}")));
    }
    Ok(())
}

pub fn cmd_coeffs(cfg: &Config, ctx: &RunContext) -> Result<Outcome> {
    let p = cfg.section("coeffs");
    let ds = p.list_f64("d", "0.2,1,5")?;
    let w_max = p.f64("w_max", 10.0)?;
    let n_w = p.usize("n_w", 64)?;
    let grid = grid(p.usize("n_theta", DEFAULT_N)?)?;
    w_grid_check(w_max, n_w)?;
    let nds = ds.iter().map(|&d| noise(d)).collect::<Result<Vec<_>>>()?;
    for &nd in &nds {
        check_overflow_guard(nd, w_max).map_err(config_err)?;
    }
    let meta = header("coeffs", ctx, &p.used());

    let mut out = Outcome { ok: true, ..Default::default() };
    for (d, nd) in ds.iter().zip(nds) {
        let table = build_table_on(nd, w_max, n_w, &grid)?;
        let (path, mut f) = create(ctx, &format!("coeffs_d{d}.csv"))?;
        table.write_csv(&mut f, &meta)?;
        f.flush()?;
        out.files.push(path);
        let parity = table.parity().pass(1e-8);
        let positive = table.rows.iter().zip(table.w_nodes()).filter(|(_, w)| w.abs() <= 10.0).all(|(r, _)| r.a.a1 > 0.0 && r.a.a5 > 0.0);
        let tag = |b: bool| if b { "PASS" } else { "FAIL" };
        out.lines.push(format!("d={d}: {} rows, parity: {}, positivity: {}", table.n_w(), tag(parity), tag(positive)));
        out.ok &= parity && positive;
    }
    Ok(out)
}

pub fn cmd_profiles(cfg: &Config, ctx: &RunContext) -> Result<Outcome> {
    let p = cfg.section("profiles");
    let ds = p.list_f64("d", "0.2,1,5")?;
    let ws = p.list_f64("w", "0,1,5,20")?;
    let grid = grid(p.usize("n_theta", DEFAULT_N)?)?;
    let nds = ds.iter().map(|&d| noise(d)).collect::<Result<Vec<_>>>()?;
    for &nd in &nds {
        for &w in &ws {
            check_overflow_guard(nd, w).map_err(config_err)?;
        }
    }
    let meta = header("profiles", ctx, &p.used());
    let mut out = Outcome { ok: true, ..Default::default() };
    for (d, &nd) in ds.iter().zip(&nds) {
        for &w in &ws {
            let gvm = solve_gvm(nd, w, &grid)?;
            let gci = solve_gci(&gvm)?;
            let (path, mut f) = create(ctx, &format!("profile_d{d}_w{w}.csv"))?;
            writeln!(f, "{meta} d={d} w={w} psi={} c1_tilde={}", gvm.psi, gvm.c1_tilde)?;
            writeln!(f, "theta,phi,x")?;
            for (j, t) in grid.nodes().iter().enumerate() {
                writeln!(f, "{t},{},{}", gvm.phi[j], gci.x[j])?;
            }
            f.flush()?;
            out.files.push(path);
        }
    }
    out.lines.push(format!("{} profile files", out.files.len()));
    Ok(out)
}

pub fn cmd_ibm(cfg: &Config, ctx: &RunContext) -> Result<Outcome> {
    let p = cfg.section("ibm");
    let task = p.str("task", "run");
    let law: Law = p.str("law", "S").parse().map_err(config_err)?;
    match task.as_str() {
        "run" => ibm_run(cfg, ctx, law),
        "equilibrium" => ibm_equilibrium(cfg, ctx, law),
        other => Err(CliError::Config(format!("ibm.task must be run or equilibrium, got '{other}'"))),
    }
}

fn ibm_run(cfg: &Config, ctx: &RunContext, law: Law) -> Result<Outcome> {
    let p = cfg.section("ibm");
    p.str("task", "run");
    p.str("law", "S");
    let n = p.usize("n", 1000)?;
    let steps = p.u64("steps", 100)?;
    let ws = p.list_f64("w", "0")?;
    let dump_every = p.u64("dump_every", 10)?.max(1);
    let params = IbmParams {
        box_len: p.f64("box", 1.0)?,
        nu: p.f64("nu", 1.0)?,
        diff: p.f64("diff", 0.2)?,
        speed: p.f64("speed", 1.0)?,
        radius: p.f64("radius", 0.1)?,
        dt: p.f64("dt", 0.01)?,
        zero_flux_tol: p.f64("zero_flux_tol", 1e-12)?,
    };
    let psi_path = p.str("psi_table", "");
    let psi_table = match (law, psi_path.as_str()) {
        (Law::L, "") => return Err(CliError::Config("law L requires ibm.psi_table (a coefficient table CSV)".into())),
        (_, "") => None,
        (_, path) => {
            let f = File::open(path).map_err(|e| CliError::Config(format!("psi_table {path}: {e}")))?;
            let table = CoefficientTable::read_csv(BufReader::new(f)).map_err(config_err)?;
            Some(PsiTable::from_table(&table).map_err(config_err)?)
        }
    };
    let mut rng = init_rng(ctx.seed);
    let pos = uniform_positions(n, params.box_len, &mut rng);
    let theta = uniform_angles(n, &mut rng);
    let w: Vec<f64> = (0..n).map(|k| ws[k % ws.len()]).collect();
    let mut sys = ParticleSystem::new(params, law, pos, theta, w, psi_table, ctx.seed).map_err(config_err)?;
    sys.serial = ctx.serial;

    let meta = header("ibm", ctx, &p.used());
    let (series_path, mut series) = create(ctx, "ibm_series.csv")?;
    writeln!(series, "{meta}")?;
    writeln!(series, "step,time,order,direction")?;
    let dump = |sys: &ParticleSystem, f: &mut BufWriter<File>| -> Result<()> {
        let j = global_flux(&sys.theta);
        writeln!(f, "{},{},{},{}", sys.steps, sys.time, j[0].hypot(j[1]), j[1].atan2(j[0]))?;
        Ok(())
    };
    dump(&sys, &mut series)?;
    for s in 1..=steps {
        sys.step()?;
        if s % dump_every == 0 || s == steps {
            dump(&sys, &mut series)?;
        }
    }
    series.flush()?;
    let (final_path, mut fin) = create(ctx, "ibm_final.csv")?;
    writeln!(fin, "{meta}")?;
    write_checkpoint(&sys, &mut fin)?;
    fin.flush()?;
    Ok(Outcome {
        files: vec![series_path, final_path],
        lines: vec![format!("checksum={:016x} after {} steps", sys.checksum(), sys.steps)],
        ok: true,
    })
}

fn ibm_equilibrium(cfg: &Config, ctx: &RunContext, law: Law) -> Result<Outcome> {
    let p = cfg.section("ibm");
    p.str("task", "run");
    p.str("law", "S");
    let def = EquilibriumSpec::default();
    let ws = p.list_f64("w", "0")?;
    if ws.len() != 1 {
        return Err(CliError::Config("the equilibrium task takes a single ibm.w".into()));
    }
    let spec = EquilibriumSpec {
        law,
        n: p.usize("n", def.n)?,
        w: ws[0],
        d: p.f64("diff", def.d)?,
        dt: p.f64("dt", def.dt)?,
        burn_in: p.f64("burn_in", def.burn_in)?,
        snapshots: p.usize("snapshots", def.snapshots)?,
        spacing: p.f64("spacing", def.spacing)?,
        bins: p.usize("bins", def.bins)?,
        seed: ctx.seed,
        serial: ctx.serial,
    };
    noise(spec.d)?;
    if spec.n == 0 || spec.bins == 0 || !(spec.dt > 0.0) {
        return Err(CliError::Config("n, bins and dt must be positive".into()));
    }
    let res = run_equilibrium(&spec)?;
    let meta = header("ibm", ctx, &p.used());
    let (path, mut f) = create(ctx, "ibm_equilibrium.csv")?;
    writeln!(f, "{meta} psi={} order={} l1={}", res.psi, res.order, res.l1)?;
    writeln!(f, "bin,theta,histogram,reference")?;
    let bw = 2.0 * PI / spec.bins as f64;
    for (i, (h, r)) in res.histogram.iter().zip(&res.reference).enumerate() {
        writeln!(f, "{i},{},{h},{r}", -PI + (i as f64 + 0.5) * bw)?;
    }
    f.flush()?;
    Ok(Outcome {
        files: vec![path],
        lines: vec![format!("law {law}: L1 distance {:.5}, psi {:.5}, order {:.5}", res.l1, res.psi, res.order)],
        ok: true,
    })
}

enum Model {
    Small(SmallParams, bool),
    Reduced(ReducedCoeffs),
    Large,
}

pub fn cmd_hydro(cfg: &Config, ctx: &RunContext) -> Result<Outcome> {
    let p = cfg.section("hydro");
    let task = p.str("task", "run");
    let model = p.str("model", "sohr_s");
    let dv = p.f64("d", 1.0)?;
    let nd = noise(dv)?;
    let mesh = Mesh::new(p.usize("nx", 256)?, p.usize("ny", 1)?, p.f64("lx", 1.0)?, p.f64("ly", 1.0)?)?;
    let amplitude = p.f64("amplitude", if task == "plane_wave" { 1e-4 } else { 0.0 })?;
    let small = SmallParams { c1: c1(nd)?, c2: c2(nd)?, d: dv };
    let large_setup = |p: &crate::config::Params| -> Result<(Arc<CoefficientTable>, WDensity)> {
        let w_max = p.f64("w_max", 6.0)?;
        let n_w = p.usize("n_w", 32)?;
        w_grid_check(w_max, n_w)?;
        check_overflow_guard(nd, w_max).map_err(config_err)?;
        let g = grid(p.usize("n_theta", 256)?)?;
        let rho = WDensity::gaussian(w_max, n_w, p.f64("w_center", 0.0)?, p.f64("sigma_w", 1.0)?, p.f64("rho0", 1.0)?)
            .map_err(config_err)?;
        Ok((Arc::new(build_table_on(nd, w_max, n_w, &g)?), rho))
    };

    if task == "plane_wave" {
        let setup = WaveSetup { cells: mesh.nx, length: mesh.lx, amplitude, cfl_fraction: 0.8 };
        let (columns, row, line) = match model.as_str() {
            "sohr_s" | "soh" => {
                let theta = p.f64("theta", 0.0)?;
                let (lo, hi) = sohr_s_plane_wave(small, theta, setup)?;
                let pr = soh_eigenvalues(small.c1, small.c2, dv, theta);
                let li = soh_linearized_speeds(small.c1, small.c2, dv, theta);
                (
                    "theta,measured_slow,measured_fast,printed_slow,printed_fast,linearized_slow,linearized_fast",
                    format!("{theta},{lo},{hi},{},{},{},{}", pr.0, pr.1, li.0, li.1),
                    format!(
                        "theta={theta}: measured ({lo:.5}, {hi:.5}), printed ({:.5}, {:.5}), linearized ({:.5}, {:.5})",
                        pr.0, pr.1, li.0, li.1
                    ),
                )
            }
            "sohr_l" => {
                let (table, rho) = large_setup(&p)?;
                let xi = 2.0 * PI / mesh.lx;
                let prob = DispersionProblem::new(&table, &rho, xi, PI / 2.0)?;
                let root = prob.closed_form().and_then(|r| r.last().copied()).unwrap_or(f64::NAN);
                let measured = sohr_l_transverse_frequency(table.clone(), &rho, setup)?;
                (
                    "xi,measured,root",
                    format!("{xi},{measured},{root}"),
                    format!("xi={xi:.5}: measured frequency {measured:.6}, dispersion root {root:.6}"),
                )
            }
            other => return Err(CliError::Config(format!("plane_wave supports sohr_s, soh and sohr_l, not '{other}'"))),
        };
        let (path, mut f) = create(ctx, "plane_wave.csv")?;
        writeln!(f, "{}", header("hydro", ctx, &p.used()))?;
        writeln!(f, "{columns}")?;
        writeln!(f, "{row}")?;
        f.flush()?;
        return Ok(Outcome { files: vec![path], lines: vec![line], ok: true });
    }
    if task != "run" {
        return Err(CliError::Config(format!("hydro.task must be run or plane_wave, got '{task}'")));
    }

    let rho0 = p.f64("rho0", 1.0)?;
    let y0 = p.f64("y0", 0.0)?;
    let phi0 = p.f64("phi0", 0.0)?;
    let t_end = p.f64("t_end", 1.0)?;
    let dump_every = p.usize("dump_every", 0)?;
    let kind = match model.as_str() {
        "sohr_s" => Model::Small(small, true),
        "soh" => Model::Small(small, false),
        "reduced" => {
            let g = grid(p.usize("n_theta", DEFAULT_N)?)?;
            let sz = small_zeta_coeffs(&solve_perturbations(nd, &g)?)?;
            Model::Reduced(ReducedCoeffs {
                c1: small.c1,
                c2: small.c2,
                c3: sz.c3,
                c4: sz.c4,
                c5: c5(nd)?,
                c6: sz.c6,
                zeta: p.f64("zeta", 0.1)?,
            })
        }
        "sohr_l" => Model::Large,
        other => return Err(CliError::Config(format!("unknown hydro.model '{other}'"))),
    };
    let shape: Vec<f64> = (0..mesh.cells()).map(|c| 1.0 + amplitude * (2.0 * PI * mesh.center(c)[0] / mesh.lx).cos()).collect();
    let opts = StepOptions { viscosity_speed: None, serial: ctx.serial };

    enum State {
        S(HydroStateS),
        L(HydroStateL),
    }
    let mut state = match kind {
        Model::Large => {
            let (table, rho) = large_setup(&p)?;
            let rho_w = shape.iter().flat_map(|s| rho.values.iter().map(move |v| v * s)).collect();
            State::L(HydroStateL::new(mesh, table, rho_w, vec![phi0; mesh.cells()])?)
        }
        _ => State::S(HydroStateS::new(
            mesh,
            shape.iter().map(|s| rho0 * s).collect(),
            shape.iter().map(|s| rho0 * s * y0).collect(),
            vec![phi0; mesh.cells()],
        )?),
    };
    let dt = match p.opt_f64("dt")? {
        Some(dt) => dt,
        None => match (&state, &kind) {
            (State::L(s), _) => 0.8 * rotalign_hydro::large::max_stable_dt_l(s),
            (_, Model::Small(sp, _)) => 0.8 * CFL_LIMIT / (sp.c1.abs().max(sp.c2.abs()).max(sp.d.sqrt()) * mesh.inv_spacing_sum()),
            (_, Model::Reduced(r)) => {
                let ymax = y0.abs();
                let speed = r.c1.abs().max(r.c2.abs()).max(r.c5.sqrt()) + r.zeta.abs() * ((r.c3 + r.c4).abs() + r.c6.abs()) * ymax;
                0.8 * CFL_LIMIT / (speed * mesh.inv_spacing_sum())
            }
            _ => unreachable!(),
        },
    };
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(CliError::Config(format!("dt={dt}, t_end={t_end}")));
    }
    let meta = header("hydro", ctx, &format!("{} dt={dt}", p.used()));
    let steps = (t_end / dt).round() as usize;

    let (series_path, mut series) = create(ctx, "hydro_series.csv")?;
    writeln!(series, "{meta}")?;
    writeln!(series, "step,time,mass,max_drho,max_dphi")?;
    let init_rho: Vec<f64> = match &state {
        State::S(s) => s.rho.clone(),
        State::L(s) => (0..mesh.cells()).map(|c| s.cell_mass(c)).collect(),
    };
    let init_phi = vec![phi0; mesh.cells()];
    let record = |state: &State, step: usize, f: &mut BufWriter<File>| -> Result<(f64, f64)> {
        let (time, mass, rho, phi): (f64, f64, Vec<f64>, &Vec<f64>) = match state {
            State::S(s) => (s.time, s.mass(), s.rho.clone(), &s.phi),
            State::L(s) => (s.time, s.mass(), (0..mesh.cells()).map(|c| s.cell_mass(c)).collect(), &s.phi),
        };
        let dr = rho.iter().zip(&init_rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dp = phi.iter().zip(&init_phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        writeln!(f, "{step},{time},{mass},{dr},{dp}")?;
        Ok((dr, dp))
    };
    record(&state, 0, &mut series)?;
    let mut last = (0.0, 0.0);
    for s in 1..=steps {
        match (&mut state, &kind) {
            (State::S(st), Model::Small(sp, true)) => step_sohr_s(st, *sp, dt, opts)?,
            (State::S(st), Model::Small(sp, false)) => step_soh(st, *sp, dt, opts)?,
            (State::S(st), Model::Reduced(r)) => step_reduced(st, *r, dt, opts)?,
            (State::L(st), _) => step_sohr_l(st, dt, opts)?,
            _ => unreachable!(),
        }
        if s == steps || (dump_every > 0 && s % dump_every == 0) {
            last = record(&state, s, &mut series)?;
        }
    }
    series.flush()?;

    let (final_path, mut fin) = create(ctx, "hydro_final.csv")?;
    writeln!(fin, "{meta}")?;
    match &state {
        State::S(s) => {
            writeln!(fin, "x,y,rho,rho_y,phi")?;
            for c in 0..mesh.cells() {
                let [x, y] = mesh.center(c);
                writeln!(fin, "{x},{y},{},{},{}", s.rho[c], s.rho_y[c], s.phi[c])?;
            }
        }
        State::L(s) => {
            writeln!(fin, "x,y,rho,phi")?;
            for c in 0..mesh.cells() {
                let [x, y] = mesh.center(c);
                writeln!(fin, "{x},{y},{},{}", s.cell_mass(c), s.phi[c])?;
            }
        }
    }
    fin.flush()?;
    Ok(Outcome {
        files: vec![series_path, final_path],
        lines: vec![format!("{model}: {steps} steps of dt={dt}; max |Δρ| = {:.3e}, max |Δφ| = {:.3e}", last.0, last.1)],
        ok: true,
    })
}

pub fn cmd_dispersion(cfg: &Config, ctx: &RunContext) -> Result<Outcome> {
    let p = cfg.section("dispersion");
    let ds = p.list_f64("d", "1")?;
    let w_max = p.f64("w_max", 10.0)?;
    let n_w = p.usize("n_w", 64)?;
    let g = grid(p.usize("n_theta", DEFAULT_N)?)?;
    let sigma = p.f64("sigma", 1.0)?;
    let xi = p.list_f64("xi", "0.5,1,2,4")?;
    let theta = p.list_f64("theta", &default_thetas())?;
    w_grid_check(w_max, n_w)?;
    let nds = ds.iter().map(|&d| noise(d)).collect::<Result<Vec<_>>>()?;
    for &nd in &nds {
        check_overflow_guard(nd, w_max).map_err(config_err)?;
    }
    let rho = WDensity::gaussian(w_max, n_w, 0.0, sigma, 1.0).map_err(config_err)?;
    let meta = header("dispersion", ctx, &p.used());
    let mut out = Outcome { ok: true, ..Default::default() };
    for (d, nd) in ds.iter().zip(nds) {
        let table = build_table_on(nd, w_max, n_w, &g)?;
        let report = stability_scan(&table, &rho, &xi, &theta)?;
        let (path, mut f) = create(ctx, &format!("dispersion_d{d}.csv"))?;
        writeln!(f, "{meta} d={d}")?;
        write!(f, "{}", report.to_csv())?;
        f.flush()?;
        out.files.push(path);
        let ok = report.pass && report.closed_form_defect <= 1e-6;
        out.lines.push(format!(
            "d={d}: {} roots, max |Im| = {:.3e}, closed-form defect = {:.3e}: {}",
            report.rows.len(),
            report.max_imag,
            report.closed_form_defect,
            if ok { "PASS" } else { "FAIL" }
        ));
        out.ok &= ok;
    }
    Ok(out)
}

fn default_thetas() -> String {
    (0..5).map(|i| (i as f64 * PI / 8.0).to_string()).collect::<Vec<_>>().join(",")
}

pub fn cmd_validate(cfg: &Config, ctx: &RunContext, tags: &[String]) -> Result<Outcome> {
    let p = cfg.section("validate");
    let tags = if tags.is_empty() { p.list_str("tags", "all") } else { tags.to_vec() };
    let ids = acceptance::select(&tags)?;
    let scratch = ctx.out.join("validate_scratch");
    let mut out = Outcome { ok: true, ..Default::default() };
    let (path, mut f) = create(ctx, "validate.csv")?;
    writeln!(f, "{}", header("validate", ctx, &format!("tags={}", tags.join(","))))?;
    writeln!(f, "id,tag,status,detail")?;
    for id in ids {
        let r = acceptance::run_criterion(id, &scratch, ctx)?;
        writeln!(f, "{},{},{},\"{}\"", r.id, r.tag, r.status(), r.detail().replace('"', "'"))?;
        out.lines.push(r.line());
        out.ok &= r.pass();
    }
    f.flush()?;
    out.files.push(path);
    Ok(out)
}

/// Output directory helper for callers that run commands programmatically.
pub fn context_in(dir: &Path, seed: u64, serial: bool) -> RunContext {
    RunContext { out: dir.to_path_buf(), serial, seed }
}
