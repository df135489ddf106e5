//! Coordinate models of hyperbolic space: Hermitian matrices, Minkowski
//! coordinates, the Poincaré ball and the upper half space.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::loopcore::Matrix2;

/// (ξ₀, ξ₁, ξ₂, ξ₃) with f = ξ₀e₀ + ξ₁e₁ + ξ₂e₂ + ξ₃e₃. Hermitian input assumed;
/// anti-Hermitian parts are dropped.
pub fn to_minkowski(f: &Matrix2) -> [f64; 4] {
    let (a, b, c, d) = (f.a(), f.b(), f.c(), f.d());
    [((a + d) * 0.5).re, ((a - d) * 0.5).re, ((c - b) / C64::new(0.0, 2.0)).re, ((b + c) * 0.5).re]
}

pub fn from_minkowski(x: [f64; 4]) -> Matrix2 {
    Matrix2::new(
        C64::new(x[0] + x[1], 0.0),
        C64::new(x[3], -x[2]),
        C64::new(x[3], x[2]),
        C64::new(x[0] - x[1], 0.0),
    )
}

/// −ξ₀η₀ + ξ₁η₁ + ξ₂η₂ + ξ₃η₃.
pub fn minkowski_dot(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]
}

pub fn check_h3(x: &[f64; 4], tol: f64) -> Result<()> {
    let q = minkowski_dot(x, x);
    if !(x[0] > 0.0) || (q + 1.0).abs() > tol * (1.0 + x[0] * x[0]) {
        return Err(Error::NotInH3(format!("xi0 = {:e}, <xi,xi> = {:e}", x[0], q)));
    }
    Ok(())
}

/// bᵢ = ξᵢ/(1+ξ₀) for points of H³.
pub fn to_poincare_ball(x: &[f64; 4], tol: f64) -> Result<[f64; 3]> {
    check_h3(x, tol)?;
    Ok(ball_coords_raw(x))
}

/// The same formula without the H³ check. Backward-sheet points land outside the unit ball.
pub fn ball_coords_raw(x: &[f64; 4]) -> [f64; 3] {
    let s = 1.0 + x[0];
    [x[1] / s, x[2] / s, x[3] / s]
}

/// Inverse of the ball map on the open unit ball.
pub fn from_poincare_ball(b: &[f64; 3]) -> [f64; 4] {
    let r2 = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
    let s = 1.0 - r2;
    [(1.0 + r2) / s, 2.0 * b[0] / s, 2.0 * b[1] / s, 2.0 * b[2] / s]
}

/// u₃ = 1/f₂₂ and u₁ + iu₂ = f₁₂/f₂₂, from f = s s† with s upper triangular.
pub fn to_upper_half_space(f: &Matrix2, tol: f64) -> Result<[f64; 3]> {
    check_h3(&to_minkowski(f), tol)?;
    Ok(upper_half_space_raw(f))
}

/// The same formula without the H³ check; backward-sheet points get u₃ < 0.
pub fn upper_half_space_raw(f: &Matrix2) -> [f64; 3] {
    let f22 = f.d().re;
    let w = f.b() / f22;
    [w.re, w.im, 1.0 / f22]
}

pub fn from_upper_half_space(u: &[f64; 3]) -> Matrix2 {
    let w = C64::new(u[0], u[1]);
    let s = Matrix2::new(C64::new(u[2].sqrt(), 0.0), w / u[2].sqrt(), C64::new(0.0, 0.0), C64::new(1.0 / u[2].sqrt(), 0.0));
    s * s.dagger()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_basis() {
        assert_eq!(to_minkowski(&Matrix2::identity()), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(to_minkowski(&Matrix2::basis(2)), [0.0, 0.0, 1.0, 0.0]);
        for k in 0..4 {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            assert_eq!(from_minkowski(e), Matrix2::basis(k));
        }
    }

    #[test]
    fn ball_examples() {
        assert_eq!(to_poincare_ball(&[1.0, 0.0, 0.0, 0.0], 1e-12).unwrap(), [0.0, 0.0, 0.0]);
        let t = 0.7f64;
        let b = to_poincare_ball(&[t.cosh(), t.sinh(), 0.0, 0.0], 1e-12).unwrap();
        assert!((b[0] - (t / 2.0).tanh()).abs() < 1e-15);
        assert!(to_poincare_ball(&[-1.0, 0.0, 0.0, 0.0], 1e-12).is_err());
    }

    #[test]
    fn upper_half_space_examples() {
        assert_eq!(to_upper_half_space(&Matrix2::identity(), 1e-12).unwrap(), [0.0, 0.0, 1.0]);
        let e = std::f64::consts::E;
        let u = to_upper_half_space(&Matrix2::real(e, 0.0, 0.0, 1.0 / e), 1e-12).unwrap();
        assert!((u[2] - e).abs() < 1e-15 && u[0] == 0.0 && u[1] == 0.0);
    }
}
