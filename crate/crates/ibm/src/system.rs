//! Particle state and the Euler–Maruyama step in angle form:
//! dθ = ν sin(θ̄ − θ) dt + W dt + √(2D) dB, dX = c (cos θ, sin θ) dt.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rotalign_core::angular::{wrap_angle, wrap_diff};

use crate::neighbors::NeighborIndex;
use crate::psi::PsiTable;
use crate::{IbmError, Result};

/// Largest accepted dt·ν and dt·max|W|.
pub const DT_GUARD: f64 = 0.05;

/// Alignment law: toward the local mean direction (small angular velocities)
/// or toward that direction rotated back by ψ(W) (large angular velocities).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    S,
    L,
}

impl std::fmt::Display for Law {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Law::S => "S",
            Law::L => "L",
        })
    }
}

impl std::str::FromStr for Law {
    type Err = IbmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(Law::S),
            "L" | "l" => Ok(Law::L),
            _ => Err(IbmError::Param(format!("unknown law {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbmParams {
    /// Side of the periodic square box.
    pub box_len: f64,
    /// Alignment rate.
    pub nu: f64,
    /// Angular diffusivity D.
    pub diff: f64,
    pub speed: f64,
    /// Interaction radius R.
    pub radius: f64,
    pub dt: f64,
    /// Fluxes with |J_k| below zero_flux_tol·(neighbors/N) exert no alignment.
    pub zero_flux_tol: f64,
}

impl Default for IbmParams {
    fn default() -> Self {
        IbmParams { box_len: 1.0, nu: 1.0, diff: 0.2, speed: 1.0, radius: 0.1, dt: 0.01, zero_flux_tol: 1e-12 }
    }
}

impl IbmParams {
    fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(IbmError::Param(format!("{name} must be positive, got {v}")))
            }
        };
        pos("box_len", self.box_len)?;
        pos("radius", self.radius)?;
        pos("dt", self.dt)?;
        for (name, v) in [("nu", self.nu), ("diff", self.diff), ("speed", self.speed), ("zero_flux_tol", self.zero_flux_tol)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(IbmError::Param(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.dt * self.nu > DT_GUARD {
            return Err(IbmError::Guard(format!("dt·nu = {} exceeds {DT_GUARD}", self.dt * self.nu)));
        }
        Ok(())
    }

    /// d = D/ν.
    pub fn noise_ratio(&self) -> f64 {
        self.diff / self.nu
    }
}

#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub params: IbmParams,
    pub law: Law,
    pub pos: Vec<[f64; 2]>,
    pub theta: Vec<f64>,
    w: Vec<f64>,
    psi_table: Option<PsiTable>,
    /// ψ(W_k/ν) per particle; zero under law S.
    psi: Vec<f64>,
    pub seed: u64,
    rngs: Vec<ChaCha8Rng>,
    pub time: f64,
    pub steps: u64,
    /// Compute fluxes and updates on one thread.
    pub serial: bool,
}

/// Generator for particle `k`: one master seed, one stream per particle.
pub fn particle_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k as u64);
    r
}

/// Generator for initial conditions, disjoint from all particle streams.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(u64::MAX);
    r
}

pub(crate) fn wrap_coord(x: f64, l: f64) -> f64 {
    let y = x.rem_euclid(l);
    if y >= l {
        0.0
    } else {
        y
    }
}

impl ParticleSystem {
    pub fn new(
        params: IbmParams,
        law: Law,
        pos: Vec<[f64; 2]>,
        theta: Vec<f64>,
        w: Vec<f64>,
        psi_table: Option<PsiTable>,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let n = pos.len();
        if n == 0 {
            return Err(IbmError::Param("empty system".into()));
        }
        if theta.len() != n || w.len() != n {
            return Err(IbmError::Param(format!(
                "length mismatch: {} positions, {} angles, {} velocities",
                n,
                theta.len(),
                w.len()
            )));
        }
        if pos.iter().flatten().chain(&theta).chain(&w).any(|v| !v.is_finite()) {
            return Err(IbmError::Param("non-finite particle data".into()));
        }
        let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if params.dt * wmax > DT_GUARD {
            return Err(IbmError::Guard(format!("dt·max|w| = {} exceeds {DT_GUARD}", params.dt * wmax)));
        }
        let psi = match (law, &psi_table) {
            (Law::S, _) => vec![0.0; n],
            (Law::L, None) => return Err(IbmError::Param("law L requires a ψ table".into())),
            (Law::L, Some(t)) => {
                if params.nu == 0.0 {
                    return Err(IbmError::Param("law L requires nu > 0".into()));
                }
                w.iter().map(|&wk| t.eval(wk / params.nu)).collect::<Result<Vec<_>>>()?
            }
        };
        let l = params.box_len;
        let pos = pos.into_iter().map(|[x, y]| [wrap_coord(x, l), wrap_coord(y, l)]).collect();
        let theta = theta.into_iter().map(wrap_angle).collect();
        let rngs = (0..n).map(|k| particle_rng(seed, k)).collect();
        Ok(ParticleSystem { params, law, pos, theta, w, psi_table, psi, seed, rngs, time: 0.0, steps: 0, serial: false })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Intrinsic angular velocities; fixed for the lifetime of the system.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn psi_table(&self) -> Option<&PsiTable> {
        self.psi_table.as_ref()
    }

    pub fn psi_of(&self, k: usize) -> f64 {
        self.psi[k]
    }

    pub(crate) fn rng_word_pos(&self, k: usize) -> u128 {
        self.rngs[k].get_word_pos()
    }

    pub(crate) fn set_rng_word_pos(&mut self, k: usize, pos: u128) {
        self.rngs[k].set_word_pos(pos);
    }

    /// Fluxes J_k and neighbor counts for the current positions.
    pub fn fluxes(&self) -> Vec<([f64; 2], usize)> {
        let index = NeighborIndex::build(self);
        if self.serial {
            (0..self.n()).map(|k| index.flux(self, k)).collect()
        } else {
            (0..self.n()).into_par_iter().map(|k| index.flux(self, k)).collect()
        }
    }

    /// Alignment target angle for particle k given its flux, or None when the
    /// flux is too small to define a direction.
    fn target(&self, k: usize, j: [f64; 2], count: usize) -> Option<f64> {
        let norm = j[0].hypot(j[1]);
        if norm < self.params.zero_flux_tol * count as f64 / self.n() as f64 || norm == 0.0 {
            return None;
        }
        Some(j[1].atan2(j[0]) - self.psi[k])
    }

    pub fn step(&mut self) -> Result<()> {
        let fl = self.fluxes();
        let targets: Vec<Option<f64>> = fl.iter().enumerate().map(|(k, &(j, c))| self.target(k, j, c)).collect();
        let p = self.params;
        let noise = (2.0 * p.diff * p.dt).sqrt();
        let update = |((((th, x), rng), &wk), tg): ((((&mut f64, &mut [f64; 2]), &mut ChaCha8Rng), &f64), &Option<f64>)| {
            let align = tg.map_or(0.0, |t| p.nu * wrap_diff(t - *th).sin());
            let xi: f64 = StandardNormal.sample(rng);
            let nt = *th + (align + wk) * p.dt + noise * xi;
            let (s, c) = nt.sin_cos();
            *th = wrap_angle(nt);
            x[0] = wrap_coord(x[0] + p.speed * p.dt * c, p.box_len);
            x[1] = wrap_coord(x[1] + p.speed * p.dt * s, p.box_len);
        };
        if self.serial {
            self.theta
                .iter_mut()
                .zip(self.pos.iter_mut())
                .zip(self.rngs.iter_mut())
                .zip(&self.w)
                .zip(&targets)
                .for_each(update);
        } else {
            self.theta
                .par_iter_mut()
                .zip(self.pos.par_iter_mut())
                .zip(self.rngs.par_iter_mut())
                .zip(self.w.par_iter())
                .zip(targets.par_iter())
                .for_each(update);
        }
        self.steps += 1;
        self.time = self.steps as f64 * p.dt;
        Ok(())
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// FNV-1a over the bit patterns of positions and angles.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.pos.iter().flatten().chain(&self.theta) {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
