//! Second-order periodic boundary value problems
//! a(θ) x'' + b(θ) x' + c(θ) x = r(θ) with a zero-mean constraint.
//!
//! The operator is assumed to have a one-dimensional kernel whose element
//! does not vanish at θ = 0 and has nonzero mean. The bordered system
//! A x + μ·1 = r, Σ x = 0 is solved in O(n): pin x_0, solve the remaining
//! tridiagonal system, recover μ from row 0 and add the kernel element to
//! fix the mean. μ measures the discrete incompatibility of r.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::angular::{periodic_grid, spectral_derivative, AngularGrid};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Plain second-order central differences.
    Central2,
    /// Central differences on n, 2n and 4n nodes, combined by two Richardson steps.
    Richardson,
}

/// Coefficients and right-hand side sampled on a grid.
#[derive(Debug, Clone)]
pub struct PeriodicProblem {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub x: Vec<f64>,
    pub multiplier: f64,
}

impl PeriodicProblem {
    /// Sup norm of a x'' + b x' + c x − r with spectral derivatives.
    pub fn residual(&self, grid: &AngularGrid, x: &[f64]) -> Result<f64> {
        let d1 = spectral_derivative(grid, x, 1)?;
        let d2 = spectral_derivative(grid, x, 2)?;
        Ok((0..grid.n())
            .map(|j| (self.a[j] * d2[j] + self.b[j] * d1[j] + self.c[j] * x[j] - self.rhs[j]).abs())
            .fold(0.0, f64::max))
    }

    fn refine(&self, grid: &AngularGrid) -> Result<PeriodicProblem> {
        Ok(PeriodicProblem {
            a: spectral_refine(grid, &self.a)?,
            b: spectral_refine(grid, &self.b)?,
            c: spectral_refine(grid, &self.c)?,
            rhs: spectral_refine(grid, &self.rhs)?,
        })
    }
}

pub fn solve_periodic(grid: &AngularGrid, p: &PeriodicProblem, stencil: Stencil) -> Result<BvpSolution> {
    let n = grid.n();
    for v in [&p.a, &p.b, &p.c, &p.rhs] {
        if v.len() != n {
            return Err(CoreError::Grid(format!("coefficient length {} does not match grid {n}", v.len())));
        }
    }
    match stencil {
        Stencil::Central2 => {
            let (x, mu, _) = solve_fd(grid, p)?;
            Ok(BvpSolution { x, multiplier: mu })
        }
        Stencil::Richardson => {
            let (x1, mu1, kernel) = solve_fd(grid, p)?;
            let g2 = periodic_grid(2 * n)?;
            let p2 = p.refine(grid)?;
            let (x2, mu2, _) = solve_fd(&g2, &p2)?;
            let g4 = periodic_grid(4 * n)?;
            let (x4, mu4, _) = solve_fd(&g4, &p2.refine(&g2)?)?;
            let romberg = |a: f64, b: f64, c: f64| {
                let ab = (4.0 * b - a) / 3.0;
                let bc = (4.0 * c - b) / 3.0;
                (16.0 * bc - ab) / 15.0
            };
            let mut x: Vec<f64> = (0..n).map(|j| romberg(x1[j], x2[2 * j], x4[4 * j])).collect();
            remove_mean(&mut x, &kernel);
            Ok(BvpSolution { x, multiplier: romberg(mu1, mu2, mu4) })
        }
    }
}

fn remove_mean(x: &mut [f64], kernel: &[f64]) {
    let t = x.iter().sum::<f64>() / kernel.iter().sum::<f64>();
    for (v, k) in x.iter_mut().zip(kernel) {
        *v -= t * k;
    }
}

/// Returns (solution, multiplier, kernel element with κ_0 = 1).
fn solve_fd(grid: &AngularGrid, p: &PeriodicProblem) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = grid.n();
    let h = grid.weight();
    let sub: Vec<f64> = (0..n).map(|j| p.a[j] / (h * h) - p.b[j] / (2.0 * h)).collect();
    let sup: Vec<f64> = (0..n).map(|j| p.a[j] / (h * h) + p.b[j] / (2.0 * h)).collect();
    let diag: Vec<f64> = (0..n).map(|j| -2.0 * p.a[j] / (h * h) + p.c[j]).collect();

    // rows/unknowns 1..n−1
    let m = n - 1;
    let dl: Vec<f64> = (2..n).map(|j| sub[j]).collect();
    let dd: Vec<f64> = (1..n).map(|j| diag[j]).collect();
    let du: Vec<f64> = (1..n - 1).map(|j| sup[j]).collect();
    let r_rhs: Vec<f64> = (1..n).map(|j| p.rhs[j]).collect();
    let p_rhs = vec![1.0; m];
    let mut k_rhs = vec![0.0; m];
    k_rhs[0] -= sub[1];
    k_rhs[m - 1] -= sup[n - 1];
    let mut sols = [r_rhs, p_rhs, k_rhs];
    solve_tridiagonal(dl, dd, du, &mut sols)?;
    let [yr, yp, yk] = sols;

    let den = 1.0 - sub[0] * yp[m - 1] - sup[0] * yp[0];
    if den.abs() < 1e-300 {
        return Err(CoreError::Numerical("bordered system singular".into()));
    }
    let mu = (p.rhs[0] - sub[0] * yr[m - 1] - sup[0] * yr[0]) / den;

    let mut x = vec![0.0; n];
    let mut kernel = vec![1.0; n];
    for j in 1..n {
        x[j] = yr[j - 1] - mu * yp[j - 1];
        kernel[j] = yk[j - 1];
    }
    remove_mean(&mut x, &kernel);
    Ok((x, mu, kernel))
}

/// Tridiagonal solve with partial pivoting, several right-hand sides.
///
/// `dl[i]` is entry (i+1, i), `du[i]` is entry (i, i+1).
pub(crate) fn solve_tridiagonal(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>, rhs: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    let singular = || CoreError::Numerical("singular tridiagonal system".into());
    if n == 1 {
        if d[0] == 0.0 {
            return Err(singular());
        }
        for b in rhs.iter_mut() {
            b[0] /= d[0];
        }
        return Ok(());
    }
    // du2 holds the fill-in second superdiagonal
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(singular());
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            for b in rhs.iter_mut() {
                b[i + 1] -= fact * b[i];
            }
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i < n - 2 {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            for b in rhs.iter_mut() {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - fact * b[i + 1];
            }
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return Err(singular());
    }
    for b in rhs.iter_mut() {
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n - 2).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    }
    Ok(())
}

/// Trigonometric interpolation of periodic samples onto the 2n-node grid.
pub fn spectral_refine(grid: &AngularGrid, samples: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n();
    if samples.len() != n {
        return Err(CoreError::Grid(format!("sample length {} does not match grid {n}", samples.len())));
    }
    let m = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n / 2 {
        big[k] = buf[k];
    }
    for k in 1..n / 2 {
        big[m - k] = buf[n - k];
    }
    // split the Nyquist mode symmetrically
    big[n / 2] = buf[n / 2] * 0.5;
    big[m - n / 2] = buf[n / 2] * 0.5;
    planner.plan_fft_inverse(m).process(&mut big);
    Ok(big.iter().map(|c| c.re / n as f64).collect())
}
