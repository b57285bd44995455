//! Characteristic speeds of the density/direction system about (ρ0, Ω0), for
//! a plane wave at angle θ to Ω0.

/// ½[(c1 + c2) cos θ ± √((c2 − c1)² cos²θ + 4d sin²θ)], as printed for the
/// SOH model.
pub fn soh_eigenvalues(c1: f64, c2: f64, d: f64, theta: f64) -> (f64, f64) {
    speeds(c1, c2, 4.0 * d, theta)
}

/// Eigenvalues of the linearized angle system
/// [[c1 cos θ, −c1 ρ0 sin θ], [−(d/ρ0) sin θ, c2 cos θ]], whose coupling term
/// is 4 c1 d sin²θ.
pub fn soh_linearized_speeds(c1: f64, c2: f64, d: f64, theta: f64) -> (f64, f64) {
    speeds(c1, c2, 4.0 * c1 * d, theta)
}

fn speeds(c1: f64, c2: f64, coupling: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let mid = 0.5 * (c1 + c2) * c;
    let rad = 0.5 * ((c2 - c1).powi(2) * c * c + coupling * s * s).sqrt();
    (mid - rad, mid + rad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn aligned_and_transverse() {
        let (a, b) = soh_eigenvalues(0.4, 0.7, 1.3, 0.0);
        assert!((a - 0.4).abs() < 1e-15 && (b - 0.7).abs() < 1e-15);
        let (a, b) = soh_eigenvalues(0.4, 0.7, 1.3, PI / 2.0);
        assert!((a + 1.3f64.sqrt()).abs() < 1e-12 && (b - 1.3f64.sqrt()).abs() < 1e-12);
        let (a, b) = soh_linearized_speeds(0.4, 0.7, 1.3, PI / 2.0);
        assert!((b - (0.4 * 1.3f64).sqrt()).abs() < 1e-12 && a < 0.0);
    }

    #[test]
    fn equal_speeds() {
        let (c, d, t) = (0.6, 2.0, 0.9);
        let (a, b) = soh_eigenvalues(c, c, d, t);
        let r = d.sqrt() * t.sin().abs();
        assert!((a - (c * t.cos() - r)).abs() < 1e-14);
        assert!((b - (c * t.cos() + r)).abs() < 1e-14);
    }

    #[test]
    fn linearized_matches_matrix_trace_and_determinant() {
        let (c1, c2, d, t) = (0.45, 0.8, 1.0, 0.7);
        let (a, b) = soh_linearized_speeds(c1, c2, d, t);
        let (s, c) = t.sin_cos();
        assert!((a + b - (c1 + c2) * c).abs() < 1e-14);
        assert!((a * b - (c1 * c2 * c * c - c1 * d * s * s)).abs() < 1e-14);
    }
}
