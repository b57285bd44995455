use crate::{HydroError, Result};

/// Periodic rectangle of nx × ny cells, row-major (index j·nx + i). A mesh
/// with ny = 1 is one-dimensional along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(HydroError::Param(format!("bad mesh {nx}x{ny} on {lx}x{ly}")));
        }
        Ok(Mesh { nx, ny, lx, ly })
    }

    pub fn line(n: usize, l: f64) -> Result<Self> {
        Self::new(n, 1, l, l)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Σ 1/h over axes with more than one cell.
    pub fn inv_spacing_sum(&self) -> f64 {
        let mut s = 1.0 / self.dx();
        if self.ny > 1 {
            s += 1.0 / self.dy();
        }
        s
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, j) = (c % self.nx, c / self.nx);
        [(i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy()]
    }

    /// (left, right) neighbors of cell c along the axis.
    pub(crate) fn neighbors(&self, c: usize, axis: Axis) -> (usize, usize) {
        let (i, j) = (c % self.nx, c / self.nx);
        match axis {
            Axis::X => {
                let l = (i + self.nx - 1) % self.nx;
                let r = (i + 1) % self.nx;
                (j * self.nx + l, j * self.nx + r)
            }
            Axis::Y => {
                let d = (j + self.ny - 1) % self.ny;
                let u = (j + 1) % self.ny;
                (d * self.nx + i, u * self.nx + i)
            }
        }
    }

    pub(crate) fn axes(&self) -> Vec<Axis> {
        if self.ny > 1 {
            vec![Axis::X, Axis::Y]
        } else {
            vec![Axis::X]
        }
    }

    pub(crate) fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx(),
            Axis::Y => self.dy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

impl Axis {
    /// (Ω·e, Ω⊥·e) for Ω = (cos φ, sin φ), Ω⊥ = (−sin φ, cos φ).
    pub(crate) fn project(self, phi: f64) -> (f64, f64) {
        let (s, c) = phi.sin_cos();
        match self {
            Axis::X => (c, -s),
            Axis::Y => (s, c),
        }
    }
}

/// Map over cells, in parallel unless `serial`.
pub(crate) fn map_cells<T: Send>(n: usize, serial: bool, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    if serial {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}
