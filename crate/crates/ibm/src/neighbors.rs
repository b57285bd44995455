//! Local flux J_k = (1/N) Σ_{|X_j − X_k| ≤ R} V_j under the periodic
//! minimum-image metric, particle k included.

use std::f64::consts::SQRT_2;

use crate::system::ParticleSystem;

/// Search structure rebuilt from a snapshot of the positions.
#[derive(Debug, Clone)]
pub enum NeighborIndex {
    /// R reaches every point of the box: all particles see the same flux.
    Global { flux: [f64; 2], count: usize },
    /// Uniform buckets of side ≥ R, at least 3 per axis.
    Cells { per_axis: usize, cell: f64, buckets: Vec<Vec<usize>> },
    /// Fewer than 3 buckets per axis would revisit cells; scan all pairs.
    Brute,
}

pub fn min_image(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

fn dist2(a: [f64; 2], b: [f64; 2], l: f64) -> f64 {
    let dx = min_image(b[0] - a[0], l);
    let dy = min_image(b[1] - a[1], l);
    dx * dx + dy * dy
}

impl NeighborIndex {
    pub fn build(sys: &ParticleSystem) -> Self {
        let l = sys.params.box_len;
        let r = sys.params.radius;
        let n = sys.n();
        if r >= l / SQRT_2 {
            let mut f = [0.0, 0.0];
            for &t in &sys.theta {
                let (s, c) = t.sin_cos();
                f[0] += c;
                f[1] += s;
            }
            return NeighborIndex::Global { flux: [f[0] / n as f64, f[1] / n as f64], count: n };
        }
        let per_axis = (l / r).floor() as usize;
        if per_axis < 3 {
            return NeighborIndex::Brute;
        }
        let cell = l / per_axis as f64;
        let mut buckets = vec![Vec::new(); per_axis * per_axis];
        for (k, p) in sys.pos.iter().enumerate() {
            let (cx, cy) = Self::cell_of(*p, cell, per_axis);
            buckets[cy * per_axis + cx].push(k);
        }
        NeighborIndex::Cells { per_axis, cell, buckets }
    }

    fn cell_of(p: [f64; 2], cell: f64, per_axis: usize) -> (usize, usize) {
        let c = |x: f64| ((x / cell) as usize).min(per_axis - 1);
        (c(p[0]), c(p[1]))
    }

    /// (J_k, number of neighbors including k).
    pub fn flux(&self, sys: &ParticleSystem, k: usize) -> ([f64; 2], usize) {
        match self {
            NeighborIndex::Global { flux, count } => (*flux, *count),
            NeighborIndex::Brute => neighbor_flux_brute(sys, k),
            NeighborIndex::Cells { per_axis, cell, buckets } => {
                let l = sys.params.box_len;
                let r2 = sys.params.radius * sys.params.radius;
                let m = *per_axis as isize;
                let pk = sys.pos[k];
                let (cx, cy) = Self::cell_of(pk, *cell, *per_axis);
                let mut f = [0.0, 0.0];
                let mut count = 0;
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let bx = (cx as isize + dx).rem_euclid(m) as usize;
                        let by = (cy as isize + dy).rem_euclid(m) as usize;
                        for &j in &buckets[by * per_axis + bx] {
                            if dist2(pk, sys.pos[j], l) <= r2 {
                                let (s, c) = sys.theta[j].sin_cos();
                                f[0] += c;
                                f[1] += s;
                                count += 1;
                            }
                        }
                    }
                }
                let n = sys.n() as f64;
                ([f[0] / n, f[1] / n], count)
            }
        }
    }
}

pub fn neighbor_flux(sys: &ParticleSystem, index: &NeighborIndex, k: usize) -> [f64; 2] {
    index.flux(sys, k).0
}

/// O(N) scan over all particles for one k.
pub fn neighbor_flux_brute(sys: &ParticleSystem, k: usize) -> ([f64; 2], usize) {
    let l = sys.params.box_len;
    let r2 = sys.params.radius * sys.params.radius;
    let pk = sys.pos[k];
    let mut f = [0.0, 0.0];
    let mut count = 0;
    for (p, &t) in sys.pos.iter().zip(&sys.theta) {
        if dist2(pk, *p, l) <= r2 {
            let (s, c) = t.sin_cos();
            f[0] += c;
            f[1] += s;
            count += 1;
        }
    }
    let n = sys.n() as f64;
    ([f[0] / n, f[1] / n], count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{uniform_angles, uniform_positions};
    use crate::system::{init_rng, IbmParams, Law};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn system(n: usize, l: f64, r: f64, seed: u64) -> ParticleSystem {
        let mut rng = init_rng(seed);
        let pos = uniform_positions(n, l, &mut rng);
        let th = uniform_angles(n, &mut rng);
        let p = IbmParams { box_len: l, radius: r, ..IbmParams::default() };
        ParticleSystem::new(p, Law::S, pos, th, vec![0.0; n], None, seed).unwrap()
    }

    #[test]
    fn single_particle_sees_itself() {
        let s = system(1, 1.0, 0.1, 0);
        let idx = NeighborIndex::build(&s);
        let j = neighbor_flux(&s, &idx, 0);
        assert!((j[0] - s.theta[0].cos()).abs() < 1e-15 && (j[1] - s.theta[0].sin()).abs() < 1e-15);
    }

    #[test]
    fn opposite_coincident_particles_cancel() {
        let p = IbmParams { box_len: 1.0, radius: 0.1, ..IbmParams::default() };
        let s = ParticleSystem::new(p, Law::S, vec![[0.5, 0.5]; 2], vec![0.0, PI], vec![0.0; 2], None, 0).unwrap();
        let idx = NeighborIndex::build(&s);
        let j = neighbor_flux(&s, &idx, 0);
        assert!(j[0].abs() < 1e-15 && j[1].abs() < 1e-15);
    }

    #[test]
    fn cells_match_brute_force_at_500() {
        let s = system(500, 1.0, 0.1, 42);
        let idx = NeighborIndex::build(&s);
        assert!(matches!(idx, NeighborIndex::Cells { .. }));
        for k in 0..s.n() {
            let (a, ca) = idx.flux(&s, k);
            let (b, cb) = neighbor_flux_brute(&s, k);
            assert_eq!(ca, cb);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn wrap_across_boundary() {
        let p = IbmParams { box_len: 1.0, radius: 0.1, ..IbmParams::default() };
        let s = ParticleSystem::new(p, Law::S, vec![[0.01, 0.5], [0.99, 0.5]], vec![0.0, 0.0], vec![0.0; 2], None, 0)
            .unwrap();
        assert_eq!(NeighborIndex::build(&s).flux(&s, 0).1, 2);
    }

    #[test]
    fn global_and_brute_modes() {
        let s = system(100, 1.0, 0.8, 1);
        let idx = NeighborIndex::build(&s);
        assert!(matches!(idx, NeighborIndex::Global { .. }));
        for k in [0, 50, 99] {
            let (a, _) = idx.flux(&s, k);
            let (b, cb) = neighbor_flux_brute(&s, k);
            assert_eq!(cb, 100);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        assert!(matches!(NeighborIndex::build(&system(10, 1.0, 0.4, 1)), NeighborIndex::Brute));
    }

    proptest! {
        #[test]
        fn min_image_symmetric_and_bounded(a in 0.0f64..3.0, b in 0.0f64..3.0, c in 0.0f64..3.0, d in 0.0f64..3.0) {
            let l = 3.0;
            let d1 = dist2([a, b], [c, d], l);
            prop_assert!((d1 - dist2([c, d], [a, b], l)).abs() < 1e-12);
            prop_assert!(d1.sqrt() <= l * SQRT_2 / 2.0 + 1e-12);
        }

        #[test]
        fn cells_match_brute_force(seed in 0u64..1000, r in 0.05f64..0.3) {
            let s = system(150, 1.0, r, seed);
            let idx = NeighborIndex::build(&s);
            for k in 0..s.n() {
                let (a, ca) = idx.flux(&s, k);
                let (b, cb) = neighbor_flux_brute(&s, k);
                prop_assert_eq!(ca, cb);
                prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }
}
