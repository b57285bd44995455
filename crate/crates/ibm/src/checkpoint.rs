//! CSV checkpoints: a parameter header, then one row per particle with its
//! generator position so a reloaded run continues bit for bit.

use std::io::{BufRead, Write};

use crate::psi::PsiTable;
use crate::system::{IbmParams, Law, ParticleSystem};
use crate::{IbmError, Result};

pub const CHECKPOINT_HEADER: &str = "x,y,theta,w,rng_word";

pub fn write_checkpoint<W: Write>(sys: &ParticleSystem, out: &mut W) -> Result<()> {
    let p = &sys.params;
    writeln!(
        out,
        "# n={} box_len={} nu={} diff={} speed={} radius={} dt={} zero_flux_tol={} law={} seed={} steps={}",
        sys.n(),
        p.box_len,
        p.nu,
        p.diff,
        p.speed,
        p.radius,
        p.dt,
        p.zero_flux_tol,
        sys.law,
        sys.seed,
        sys.steps
    )?;
    writeln!(out, "{CHECKPOINT_HEADER}")?;
    for k in 0..sys.n() {
        writeln!(
            out,
            "{},{},{},{},{}",
            sys.pos[k][0],
            sys.pos[k][1],
            sys.theta[k],
            sys.w()[k],
            sys.rng_word_pos(k)
        )?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: R, psi_table: Option<PsiTable>) -> Result<ParticleSystem> {
    let bad = |m: String| IbmError::Checkpoint(m);
    let mut lines = input.lines();
    let meta = lines.next().ok_or_else(|| bad("empty checkpoint".into()))??;
    let mut kv = std::collections::HashMap::new();
    for tok in meta.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            kv.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| kv.get(k).cloned().ok_or_else(|| bad(format!("missing {k} in header")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|e| bad(format!("{k}: {e}"))) };
    let params = IbmParams {
        box_len: num("box_len")?,
        nu: num("nu")?,
        diff: num("diff")?,
        speed: num("speed")?,
        radius: num("radius")?,
        dt: num("dt")?,
        zero_flux_tol: num("zero_flux_tol")?,
    };
    let law: Law = get("law")?.parse()?;
    let seed: u64 = get("seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
    let steps: u64 = get("steps")?.parse().map_err(|e| bad(format!("steps: {e}")))?;
    match lines.next() {
        Some(Ok(h)) if h.trim() == CHECKPOINT_HEADER => {}
        other => return Err(bad(format!("unexpected column header {other:?}"))),
    }
    let (mut pos, mut theta, mut w, mut words) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields in {line:?}")));
        }
        let p = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{e} in {line:?}")));
        pos.push([p(f[0])?, p(f[1])?]);
        theta.push(p(f[2])?);
        w.push(p(f[3])?);
        words.push(f[4].trim().parse::<u128>().map_err(|e| bad(format!("{e} in {line:?}")))?);
    }
    let mut sys = ParticleSystem::new(params, law, pos, theta, w, psi_table, seed)?;
    for (k, wp) in words.into_iter().enumerate() {
        sys.set_rng_word_pos(k, wp);
    }
    sys.steps = steps;
    sys.time = steps as f64 * params.dt;
    Ok(sys)
}
