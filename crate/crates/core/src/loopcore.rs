//! Twisted Laurent loops of complex 2x2 matrices and the involutions acting on them.

use std::f64::consts::FRAC_PI_4;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// i^m for any integer m.
pub fn i_pow(m: i32) -> C64 {
    match m.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Row-major 2x2 complex matrix `[a11, a12, a21, a22]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Matrix2(pub [C64; 4]);

impl Matrix2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Matrix2([a, b, c, d])
    }
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2([a.into(), b.into(), c.into(), d.into()])
    }
    pub const fn zero() -> Self {
        Matrix2([ZERO; 4])
    }
    pub const fn identity() -> Self {
        Matrix2([ONE, ZERO, ZERO, ONE])
    }
    pub fn diag(a: C64, d: C64) -> Self {
        Matrix2([a, ZERO, ZERO, d])
    }
    pub fn offdiag(b: C64, c: C64) -> Self {
        Matrix2([ZERO, b, c, ZERO])
    }
    /// Unit upper-right matrix.
    pub fn e12() -> Self {
        Matrix2::offdiag(ONE, ZERO)
    }
    pub fn e21() -> Self {
        Matrix2::offdiag(ZERO, ONE)
    }
    /// Basis of Hermitian matrices: e0 = Id, e1 = diag(1,-1), e2 = [[0,-i],[i,0]], e3 = [[0,1],[1,0]].
    pub fn basis(k: usize) -> Self {
        match k {
            0 => Matrix2::identity(),
            1 => Matrix2::real(1.0, 0.0, 0.0, -1.0),
            2 => Matrix2::offdiag(-I, I),
            3 => Matrix2::real(0.0, 1.0, 1.0, 0.0),
            _ => panic!("basis index out of range"),
        }
    }
    /// R = diag(e^{-i pi/4}, e^{i pi/4}), the matrix used in the order-four involution.
    pub fn r_twist() -> Self {
        Matrix2::diag(C64::from_polar(1.0, -FRAC_PI_4), C64::from_polar(1.0, FRAC_PI_4))
    }

    pub fn a(&self) -> C64 {
        self.0[0]
    }
    pub fn b(&self) -> C64 {
        self.0[1]
    }
    pub fn c(&self) -> C64 {
        self.0[2]
    }
    pub fn d(&self) -> C64 {
        self.0[3]
    }
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[2 * r + c]
    }
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.0[2 * r + c] = v;
    }

    pub fn det(&self) -> C64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }
    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }
    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Matrix2([m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()])
    }
    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Matrix2([m[0], m[2], m[1], m[3]])
    }
    pub fn conj(&self) -> Self {
        let m = &self.0;
        Matrix2([m[0].conj(), m[1].conj(), m[2].conj(), m[3].conj()])
    }
    /// Adjugate [[d,-b],[-c,a]]; the inverse when det = 1.
    pub fn adjugate(&self) -> Self {
        let m = &self.0;
        Matrix2([m[3], -m[1], -m[2], m[0]])
    }
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == 0.0 {
            return None;
        }
        Some(self.adjugate().scale(det.inv()))
    }
    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Matrix2([m[0] * s, m[1] * s, m[2] * s, m[3] * s])
    }
    pub fn scale_re(&self, s: f64) -> Self {
        let m = &self.0;
        Matrix2([m[0] * s, m[1] * s, m[2] * s, m[3] * s])
    }
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
    pub fn diag_part(&self) -> Self {
        Matrix2::diag(self.0[0], self.0[3])
    }
    pub fn offdiag_part(&self) -> Self {
        Matrix2::offdiag(self.0[1], self.0[2])
    }
    /// Ad(R): multiplies the (1,2) entry by -i and the (2,1) entry by i.
    pub fn ad_r(&self) -> Self {
        let m = &self.0;
        Matrix2([m[0], m[1] * -I, m[2] * I, m[3]])
    }
    /// Conjugation by sigma = e1: negates the off-diagonal entries.
    pub fn sigma(&self) -> Self {
        let m = &self.0;
        Matrix2([m[0], -m[1], -m[2], m[3]])
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.dagger()).norm() <= tol
    }
    pub fn is_unit_det(&self, tol: f64) -> bool {
        (self.det() - ONE).norm() <= tol
    }
    pub fn is_su2(&self, tol: f64) -> bool {
        self.is_unit_det(tol) && (*self * self.dagger() - Matrix2::identity()).norm() <= tol
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &o.0);
        Matrix2([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl AddAssign for Matrix2 {
    fn add_assign(&mut self, o: Matrix2) {
        for k in 0..4 {
            self.0[k] += o.0[k];
        }
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &o.0);
        Matrix2([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        let a = &self.0;
        Matrix2([-a[0], -a[1], -a[2], -a[3]])
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &o.0);
        Matrix2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }
}

impl Mul<C64> for Matrix2 {
    type Output = Matrix2;
    fn mul(self, s: C64) -> Matrix2 {
        self.scale(s)
    }
}

/// Truncation and sampling tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopTolerance {
    pub tail_tol: f64,
    pub eval_samples: usize,
}

impl Default for LoopTolerance {
    fn default() -> Self {
        LoopTolerance { tail_tol: 1e-13, eval_samples: 64 }
    }
}

/// A finite Laurent polynomial sum_{j=lo}^{hi} c_j lambda^j with 2x2 coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLoop {
    lo: i32,
    coeffs: Vec<Matrix2>,
    twisted: bool,
}

fn twist_violation(power: i32, m: &Matrix2) -> f64 {
    if power.rem_euclid(2) == 0 {
        m.offdiag_part().norm()
    } else {
        m.diag_part().norm()
    }
}

impl MatrixLoop {
    /// Builds a loop, trimming exact zero coefficients at both ends.
    /// With `twisted` set, coefficients violating the layout by more than 1e-13 are rejected.
    pub fn make_loop(lo: i32, coeffs: Vec<Matrix2>, twisted: bool) -> Result<Self> {
        Self::make_loop_tol(lo, coeffs, twisted, LoopTolerance::default().tail_tol)
    }

    pub fn make_loop_tol(lo: i32, coeffs: Vec<Matrix2>, twisted: bool, tol: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("empty coefficient list".into()));
        }
        let mut coeffs = coeffs;
        if twisted {
            for (k, c) in coeffs.iter_mut().enumerate() {
                let p = lo + k as i32;
                let v = twist_violation(p, c);
                if v > tol {
                    return Err(Error::Twisting { power: p, norm: v });
                }
                *c = if p.rem_euclid(2) == 0 { c.diag_part() } else { c.offdiag_part() };
            }
        }
        Ok(Self::from_parts(lo, coeffs, twisted))
    }

    /// Unchecked constructor; trims exact zeros.
    pub fn from_parts(lo: i32, coeffs: Vec<Matrix2>, twisted: bool) -> Self {
        let mut l = MatrixLoop { lo, coeffs, twisted };
        l.trim();
        l
    }

    fn trim(&mut self) {
        let zero = Matrix2::zero();
        let first = self.coeffs.iter().position(|c| *c != zero);
        match first {
            None => {
                self.lo = 0;
                self.coeffs = vec![zero];
            }
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| *c != zero).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..f);
                self.lo += f as i32;
            }
        }
    }

    pub fn identity() -> Self {
        Self::constant(Matrix2::identity())
    }
    pub fn zero() -> Self {
        Self::constant(Matrix2::zero())
    }
    /// A lambda-independent loop; twisted iff the matrix is diagonal.
    pub fn constant(m: Matrix2) -> Self {
        let tw = m.offdiag_part() == Matrix2::zero();
        Self::from_parts(0, vec![m], tw)
    }
    /// Single term m lambda^p.
    pub fn monomial(p: i32, m: Matrix2) -> Self {
        let tw = twist_violation(p, &m) == 0.0;
        Self::from_parts(p, vec![m], tw)
    }
    /// omega0 = [[0, lambda^-1], [-lambda, 0]].
    pub fn omega0() -> Self {
        Self::from_parts(
            -1,
            vec![Matrix2::e12(), Matrix2::zero(), Matrix2::e21().scale_re(-1.0)],
            true,
        )
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }
    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }
    pub fn is_twisted(&self) -> bool {
        self.twisted
    }
    pub fn coeffs(&self) -> &[Matrix2] {
        &self.coeffs
    }
    /// Coefficient of lambda^m (zero outside the stored range).
    pub fn coeff(&self, m: i32) -> Matrix2 {
        let k = m - self.lo;
        if k < 0 || k as usize >= self.coeffs.len() {
            Matrix2::zero()
        } else {
            self.coeffs[k as usize]
        }
    }

    /// Largest violation of the twisting layout over all coefficients.
    pub fn twisting_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| twist_violation(self.lo + k as i32, c))
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, lambda: C64) -> Result<Matrix2> {
        if lambda.norm() == 0.0 {
            if self.lo < 0 {
                return Err(Error::Domain("evaluation at lambda = 0 of a loop with negative powers".into()));
            }
            return Ok(self.coeff(0));
        }
        Ok(self.eval_nonzero(lambda))
    }

    /// Evaluation for lambda != 0 (Horner in lambda, then scaled by lambda^lo).
    pub fn eval_nonzero(&self, lambda: C64) -> Matrix2 {
        let mut acc = Matrix2::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(lambda) + *c;
        }
        acc.scale(lambda.powi(self.lo))
    }

    pub fn mul(&self, o: &MatrixLoop) -> MatrixLoop {
        let n = self.coeffs.len() + o.coeffs.len() - 1;
        let mut out = vec![Matrix2::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Matrix2::zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += *a * *b;
            }
        }
        MatrixLoop::from_parts(self.lo + o.lo, out, self.twisted && o.twisted)
    }

    /// Product restricted to the powers lo..=hi (the other coefficients are never formed).
    pub fn mul_window(&self, o: &MatrixLoop, lo: i32, hi: i32) -> MatrixLoop {
        let mut out = vec![Matrix2::zero(); (hi - lo + 1).max(1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            let pa = self.lo + i as i32;
            let jmin = (lo - pa - o.lo).max(0);
            let jmax = (hi - pa - o.lo).min(o.coeffs.len() as i32 - 1);
            for j in jmin..=jmax {
                let p = pa + o.lo + j;
                out[(p - lo) as usize] += *a * o.coeffs[j as usize];
            }
        }
        MatrixLoop::from_parts(lo, out, self.twisted && o.twisted)
    }

    fn zip(&self, o: &MatrixLoop, f: impl Fn(Matrix2, Matrix2) -> Matrix2) -> MatrixLoop {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        let coeffs = (lo..=hi).map(|m| f(self.coeff(m), o.coeff(m))).collect();
        MatrixLoop::from_parts(lo, coeffs, self.twisted && o.twisted)
    }

    pub fn add(&self, o: &MatrixLoop) -> MatrixLoop {
        self.zip(o, |a, b| a + b)
    }
    pub fn sub(&self, o: &MatrixLoop) -> MatrixLoop {
        self.zip(o, |a, b| a - b)
    }
    /// self + s * o, coefficientwise.
    pub fn axpy(&self, s: C64, o: &MatrixLoop) -> MatrixLoop {
        self.zip(o, |a, b| a + b.scale(s))
    }
    pub fn scale(&self, s: C64) -> MatrixLoop {
        self.map(|c| c.scale(s))
    }
    pub fn map(&self, f: impl Fn(Matrix2) -> Matrix2) -> MatrixLoop {
        MatrixLoop::from_parts(self.lo, self.coeffs.iter().map(|c| f(*c)).collect(), self.twisted)
    }
    pub fn left_mul_const(&self, m: &Matrix2) -> MatrixLoop {
        let tw = self.twisted && m.offdiag_part() == Matrix2::zero();
        MatrixLoop::from_parts(self.lo, self.coeffs.iter().map(|c| *m * *c).collect(), tw)
    }
    pub fn right_mul_const(&self, m: &Matrix2) -> MatrixLoop {
        let tw = self.twisted && m.offdiag_part() == Matrix2::zero();
        MatrixLoop::from_parts(self.lo, self.coeffs.iter().map(|c| *c * *m).collect(), tw)
    }

    /// Coefficientwise adjugate; the inverse loop when det = 1 identically.
    pub fn adjugate(&self) -> MatrixLoop {
        self.map(|c| c.adjugate())
    }

    /// The scalar Laurent polynomial det(g)(lambda), indices lo..hi relative to `2 * self.lo`.
    pub fn det_loop(&self) -> Vec<C64> {
        let n = self.coeffs.len();
        let mut out = vec![ZERO; 2 * n - 1];
        for i in 0..n {
            let a = &self.coeffs[i].0;
            for j in 0..n {
                let b = &self.coeffs[j].0;
                out[i + j] += a[0] * b[3] - a[1] * b[2];
            }
        }
        out
    }

    /// Deviation of the det loop from the constant 1 (sum of coefficient moduli).
    pub fn unimodular_defect(&self) -> f64 {
        let d = self.det_loop();
        let lo = 2 * self.lo;
        d.iter()
            .enumerate()
            .map(|(k, v)| if lo + k as i32 == 0 { (*v - ONE).norm() } else { v.norm() })
            .sum()
    }

    /// Inverse of a loop with det = 1, checked against `tol.tail_tol`.
    pub fn inverse(&self, tol: &LoopTolerance) -> Result<MatrixLoop> {
        let defect = self.unimodular_defect();
        if defect > tol.tail_tol * (1.0 + self.l1_norm().powi(2)) {
            return Err(Error::NotUnimodular(defect));
        }
        Ok(self.adjugate())
    }

    /// c_j -> (c_{-j})^dagger, i.e. g(1/conj(lambda))^* on the unit circle.
    pub fn star_reflect(&self) -> MatrixLoop {
        let coeffs = self.coeffs.iter().rev().map(|c| c.dagger()).collect();
        MatrixLoop::from_parts(-self.hi(), coeffs, self.twisted)
    }

    /// Coefficients d_m = i^m (c_{-m})^dagger, i.e. g(i/conj(lambda))^*.
    pub fn reflect4(&self) -> MatrixLoop {
        let lo = -self.hi();
        let coeffs = self
            .coeffs
            .iter()
            .rev()
            .enumerate()
            .map(|(k, c)| c.dagger().scale(i_pow(lo + k as i32)))
            .collect();
        MatrixLoop::from_parts(lo, coeffs, self.twisted)
    }

    /// Ad(R) applied coefficientwise.
    pub fn ad_r(&self) -> MatrixLoop {
        self.map(|c| c.ad_r())
    }

    /// tau3(g) = (g(1/conj(lambda))^*)^{-1}.
    pub fn tau3_group(&self, tol: &LoopTolerance) -> Result<MatrixLoop> {
        self.star_reflect().inverse(tol)
    }

    /// tau3 on the Lie algebra: X -> -X(1/conj(lambda))^*.
    pub fn tau3_algebra(&self) -> MatrixLoop {
        self.star_reflect().scale(-ONE)
    }

    /// tau4(g) = Ad(R) (h^{-1}) with h_m = i^m (c_{-m})^dagger.
    pub fn tau4_group(&self, tol: &LoopTolerance) -> Result<MatrixLoop> {
        Ok(self.reflect4().inverse(tol)?.ad_r())
    }

    /// tau4 without the unimodularity check (adjugate in place of the inverse).
    pub fn tau4_group_unchecked(&self) -> MatrixLoop {
        self.reflect4().adjugate().ad_r()
    }

    /// tau4 on the Lie algebra: X -> -Ad(R) X(i/conj(lambda))^*.
    pub fn tau4_algebra(&self) -> MatrixLoop {
        self.reflect4().ad_r().scale(-ONE)
    }

    /// Restricts to powers lo..=hi; returns the loop and the Frobenius mass dropped.
    pub fn truncate(&self, lo: i32, hi: i32) -> (MatrixLoop, f64) {
        let mut dropped = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let p = self.lo + k as i32;
            if p < lo || p > hi {
                dropped += c.norm();
            }
        }
        let lo2 = lo.max(self.lo);
        let hi2 = hi.min(self.hi());
        if lo2 > hi2 {
            return (MatrixLoop::from_parts(0, vec![Matrix2::zero()], self.twisted), dropped);
        }
        let coeffs = (lo2..=hi2).map(|m| self.coeff(m)).collect();
        (MatrixLoop::from_parts(lo2, coeffs, self.twisted), dropped)
    }

    /// Sum of coefficient norms (an upper bound of the sup norm on the unit circle).
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Sum of coefficient norms of self - o.
    pub fn l1_distance(&self, o: &MatrixLoop) -> f64 {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        (lo..=hi).map(|m| (self.coeff(m) - o.coeff(m)).norm()).sum()
    }

    /// Max over `n` equally spaced unit-circle samples of |self(lambda) - o(lambda)|.
    pub fn circle_distance(&self, o: &MatrixLoop, n: usize) -> f64 {
        circle_points(n)
            .map(|l| (self.eval_nonzero(l) - o.eval_nonzero(l)).norm())
            .fold(0.0, f64::max)
    }
}

/// n equally spaced points on the unit circle, offset by half a step from 1.
pub fn circle_points(n: usize) -> impl Iterator<Item = C64> {
    (0..n).map(move |k| C64::from_polar(1.0, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn make_loop_twisting() {
        let id = MatrixLoop::make_loop(0, vec![Matrix2::identity()], true).unwrap();
        assert_eq!(id, MatrixLoop::identity());
        assert!(MatrixLoop::make_loop(-1, vec![Matrix2::e12()], true).is_ok());
        let e = MatrixLoop::make_loop(-1, vec![Matrix2::real(1.0, 0.0, 0.0, -1.0)], true).unwrap_err();
        assert_eq!(e.code(), "ERR_TWISTING");
    }

    #[test]
    fn trimming_is_canonical() {
        let l = MatrixLoop::from_parts(-2, vec![Matrix2::zero(), Matrix2::e12(), Matrix2::zero()], true);
        assert_eq!(l.lo(), -1);
        assert_eq!(l.hi(), -1);
    }

    #[test]
    fn eval_examples() {
        let l = MatrixLoop::monomial(-1, Matrix2::e12());
        assert_eq!(l.eval(c(2.0, 0.0)).unwrap(), Matrix2::e12().scale_re(0.5));
        assert_eq!(MatrixLoop::identity().eval(c(0.3, -2.0)).unwrap(), Matrix2::identity());
        let cz = MatrixLoop::identity().add(&MatrixLoop::monomial(-1, Matrix2::e12()));
        assert_eq!(cz.eval(ONE).unwrap(), Matrix2::real(1.0, 1.0, 0.0, 1.0));
        assert_eq!(l.eval(ZERO).unwrap_err().code(), "ERR_DOMAIN");
    }

    #[test]
    fn mul_examples() {
        let a = Matrix2::real(1.0, 2.0, 3.0, 4.0);
        let b = Matrix2::real(0.0, 1.0, -1.0, 2.0);
        let p = MatrixLoop::monomial(-1, a).mul(&MatrixLoop::monomial(1, b));
        assert_eq!(p.lo(), 0);
        assert_eq!(p.coeff(0), a * b);
        let g = MatrixLoop::monomial(1, Matrix2::e21()).add(&MatrixLoop::constant(Matrix2::diag(c(2.0, 0.0), c(0.5, 0.0))));
        assert_eq!(MatrixLoop::identity().mul(&g), g);
    }

    #[test]
    fn inverse_examples() {
        let tol = LoopTolerance::default();
        assert_eq!(MatrixLoop::identity().inverse(&tol).unwrap(), MatrixLoop::identity());
        let z = c(0.3, 0.4);
        let cz = MatrixLoop::identity().add(&MatrixLoop::monomial(-1, Matrix2::e12().scale(z)));
        let inv = cz.inverse(&tol).unwrap();
        let expect = MatrixLoop::identity().add(&MatrixLoop::monomial(-1, Matrix2::e12().scale(-z)));
        assert_eq!(inv, expect);
        let bad = MatrixLoop::constant(Matrix2::diag(c(2.0, 0.0), c(2.0, 0.0)));
        assert_eq!(bad.inverse(&tol).unwrap_err().code(), "ERR_NOT_UNIMODULAR");
    }

    #[test]
    fn star_reflect_examples() {
        let l = MatrixLoop::monomial(1, Matrix2::e12());
        assert_eq!(l.star_reflect(), MatrixLoop::monomial(-1, Matrix2::e21()));
        assert_eq!(MatrixLoop::identity().star_reflect(), MatrixLoop::identity());
    }

    #[test]
    fn tau3_examples() {
        let tol = LoopTolerance::default();
        assert_eq!(MatrixLoop::identity().tau3_group(&tol).unwrap(), MatrixLoop::identity());
        let t = 0.7f64;
        let u = Matrix2::new(c(t.cos(), 0.0), c(0.0, t.sin()), c(0.0, t.sin()), c(t.cos(), 0.0));
        let ul = MatrixLoop::constant(u);
        assert!(ul.tau3_group(&tol).unwrap().l1_distance(&ul) < 1e-15);
        let d = MatrixLoop::constant(Matrix2::diag(c(2.0, 0.0), c(0.5, 0.0)));
        assert_eq!(d.tau3_group(&tol).unwrap(), MatrixLoop::constant(Matrix2::diag(c(0.5, 0.0), c(2.0, 0.0))));
    }

    #[test]
    fn tau4_identity_and_ad_r() {
        let tol = LoopTolerance::default();
        assert_eq!(MatrixLoop::identity().tau4_group(&tol).unwrap(), MatrixLoop::identity());
        let r = Matrix2::r_twist();
        let x = Matrix2::real(1.0, 2.0, 3.0, 4.0);
        let direct = r * x * r.inverse().unwrap();
        assert!((direct - x.ad_r()).norm() < 1e-15);
    }

    #[test]
    fn tau4_algebra_examples() {
        assert_eq!(MatrixLoop::zero().tau4_algebra(), MatrixLoop::zero());
        let a0 = MatrixLoop::constant(Matrix2::diag(c(0.0, 0.7), c(0.0, -0.7)));
        assert!(a0.tau4_algebra().l1_distance(&a0) < 1e-16);
        // (Lax) with u = 0, Q = 0, H = i: dz part lambda^-1 [[0, -i/2],[0,0]], dzbar part its image.
        let dz = MatrixLoop::monomial(-1, Matrix2::offdiag(c(0.0, -0.5), ZERO));
        let img = dz.tau4_algebra();
        // direct substitution X(i/conj(l))^* for X = c l^-1 E12: (c conj(l)/ -i ... ) evaluated pointwise
        for l in circle_points(16) {
            let mu = I / l.conj();
            let direct = -(Matrix2::r_twist() * dz.eval_nonzero(mu).dagger() * Matrix2::r_twist().inverse().unwrap());
            assert!((img.eval_nonzero(l) - direct).norm() < 1e-14);
        }
        assert_eq!(img.lo(), 1);
    }

    #[test]
    fn omega0_squares_to_minus_identity() {
        let w = MatrixLoop::omega0();
        assert_eq!(w.mul(&w), MatrixLoop::identity().scale(-ONE));
    }

    #[test]
    fn truncate_reports_mass() {
        let l = MatrixLoop::from_parts(-1, vec![Matrix2::e12(), Matrix2::identity(), Matrix2::e21().scale_re(2.0)], true);
        let (t, m) = l.truncate(-1, 0);
        assert_eq!(t.hi(), 0);
        assert!((m - 2.0).abs() < 1e-15);
    }
}
