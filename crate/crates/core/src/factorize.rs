//! Birkhoff, tau3- and tau4-Iwasawa factorizations of loops via truncated block-Toeplitz solves,
//! plus the finite SL2C = S . SU2 splitting.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::loopcore::{circle_points, Matrix2, MatrixLoop, ONE, ZERO};

/// Options shared by every factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorOptions {
    /// Working degree: number of unknown coefficients per factor.
    pub n: usize,
    /// Reciprocal condition threshold below which the input is declared outside the big cell.
    pub rcond_min: f64,
    /// Allowed variation of the tau4 middle factor k (relative).
    pub k_tol: f64,
}

impl FactorOptions {
    pub fn new(n: usize) -> Self {
        FactorOptions { n, rcond_min: 1e-10, k_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffFactors {
    pub minus: MatrixLoop,
    pub plus: MatrixLoop,
    pub rcond: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    #[serde(rename = "CELL_ID")]
    Id,
    #[serde(rename = "CELL_OMEGA0")]
    Omega0,
}

impl Cell {
    pub fn matrix(&self) -> MatrixLoop {
        match self {
            Cell::Id => MatrixLoop::identity(),
            Cell::Omega0 => MatrixLoop::omega0(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaResult {
    pub frame: MatrixLoop,
    pub cell: Cell,
    pub plus: MatrixLoop,
    /// Diagonal invariant of the tau4 middle factor (1 for tau3).
    pub k0: f64,
    /// max(reconstruction, reality) residual, both as coefficient l1 norms.
    pub residual: f64,
    pub diag: IwasawaDiagnostics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IwasawaDiagnostics {
    pub rcond: f64,
    pub k_variation: f64,
    pub reconstruction: f64,
    pub reality: f64,
    /// Mass of the frame beyond the working degree (first two dropped coefficients).
    pub frame_tail: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    /// (X G)_m = rhs_m
    Left,
    /// (G X)_m = rhs_m
    Right,
}

fn allowed(p: i32, base: usize, twisted: bool) -> Vec<usize> {
    if !twisted {
        vec![0, 1]
    } else if p.rem_euclid(2) == 0 {
        vec![base]
    } else {
        vec![1 - base]
    }
}

/// Solves for the coefficients X_k, k in `unknowns`, of a loop acting on `g` from `side`
/// such that the product's coefficients at `eqs` equal `rhs`. Twisted inputs split into
/// two scalar systems per side; untwisted into two 2x block systems.
fn toeplitz_solve(
    g: &MatrixLoop,
    side: Side,
    unknowns: &[i32],
    eqs: &[i32],
    rhs: &dyn Fn(i32) -> Matrix2,
    twisted: bool,
) -> Result<(Vec<Matrix2>, f64)> {
    let mut out = vec![Matrix2::zero(); unknowns.len()];
    let mut rcond = f64::INFINITY;
    for fixed in 0..2usize {
        // Left: `fixed` is the row of X; Right: the column of X.
        let unk: Vec<(usize, usize)> = unknowns
            .iter()
            .enumerate()
            .flat_map(|(u, &k)| allowed(k, fixed, twisted).into_iter().map(move |c| (u, c)))
            .collect();
        let eq: Vec<(i32, usize)> = eqs
            .iter()
            .flat_map(|&m| allowed(m, fixed, twisted).into_iter().map(move |c| (m, c)))
            .collect();
        let n = unk.len();
        if eq.len() != n {
            return Err(Error::Domain("Toeplitz system is not square".into()));
        }
        let mut a = DenseMatrix::zeros(n);
        let mut b = vec![ZERO; n];
        for (e, &(m, j)) in eq.iter().enumerate() {
            for (col, &(u, c)) in unk.iter().enumerate() {
                let gm = g.coeff(m - unknowns[u]);
                let v = match side {
                    Side::Left => gm.get(c, j),
                    Side::Right => gm.get(j, c),
                };
                a.set(e, col, v);
            }
            let r = rhs(m);
            b[e] = match side {
                Side::Left => r.get(fixed, j),
                Side::Right => r.get(j, fixed),
            };
        }
        let lu = Lu::factor(&a).ok_or(Error::NotBigCell { rcond: 0.0 })?;
        let rc = lu.rcond();
        rcond = rcond.min(rc);
        let x = lu.solve(&b);
        for (col, &(u, c)) in unk.iter().enumerate() {
            match side {
                Side::Left => out[u].set(fixed, c, x[col]),
                Side::Right => out[u].set(c, fixed, x[col]),
            }
        }
    }
    Ok((out, rcond))
}

fn delta_id(m: i32) -> Matrix2 {
    if m == 0 {
        Matrix2::identity()
    } else {
        Matrix2::zero()
    }
}

fn check_rcond(rcond: f64, opts: &FactorOptions) -> Result<()> {
    if !(rcond >= opts.rcond_min) {
        return Err(Error::NotBigCell { rcond });
    }
    Ok(())
}

/// g = minus . plus with minus(infinity) = Id.
pub fn birkhoff_left(g: &MatrixLoop, opts: &FactorOptions) -> Result<BirkhoffFactors> {
    let m = opts.n as i32;
    let tw = g.is_twisted();
    // h = minus^-1: h_0 = Id, (h g)_k = 0 for k = -1..-M
    let unk: Vec<i32> = (-m..=-1).collect();
    let eqs: Vec<i32> = (-m..=-1).rev().collect();
    let (hc, rc1) = toeplitz_solve(g, Side::Left, &unk, &eqs, &|k| -g.coeff(k), tw)?;
    let mut hcoef = hc;
    hcoef.push(Matrix2::identity());
    let h = MatrixLoop::from_parts(-m, hcoef, tw);
    // p = plus^-1: (g p)_k = delta_k0 Id for k = 0..M
    let unk: Vec<i32> = (0..=m).collect();
    let (pc, rc2) = toeplitz_solve(g, Side::Right, &unk, &unk, &delta_id, tw)?;
    let p = MatrixLoop::from_parts(0, pc, tw);
    let rcond = rc1.min(rc2);
    check_rcond(rcond, opts)?;
    let plus = h.mul_window(g, 0, m.max(g.hi()));
    let minus = g.mul_window(&p, -m.max(-g.lo()), 0);
    Ok(BirkhoffFactors { minus, plus, rcond })
}

struct RightParts {
    bplus: MatrixLoop,
    bminus: MatrixLoop,
    /// bplus^-1
    p: MatrixLoop,
    rcond: f64,
}

fn birkhoff_right_parts(g: &MatrixLoop, opts: &FactorOptions) -> Result<RightParts> {
    let m = opts.n as i32;
    let tw = g.is_twisted();
    // P = B+^-1, P_0 = Id: sum_{k=1..M} P_k G_{j-k} = -G_j, j = 1..M
    let unk: Vec<i32> = (1..=m).collect();
    let (pc, rc1) = toeplitz_solve(g, Side::Left, &unk, &unk, &|k| -g.coeff(k), tw)?;
    let mut pcoef = vec![Matrix2::identity()];
    pcoef.extend(pc);
    let p = MatrixLoop::from_parts(0, pcoef, tw);
    // Q = B-^-1: (G Q)_j = delta_j0 Id, j = 0..-M
    let unk: Vec<i32> = (-m..=0).collect();
    let eqs: Vec<i32> = (-m..=0).rev().collect();
    let (qc, rc2) = toeplitz_solve(g, Side::Right, &unk, &eqs, &delta_id, tw)?;
    let q = MatrixLoop::from_parts(-m, qc, tw);
    let rcond = rc1.min(rc2);
    check_rcond(rcond, opts)?;
    let bplus = g.mul_window(&q, 0, m.max(g.hi()));
    let bminus = p.mul_window(g, -m.max(-g.lo()), 0);
    Ok(RightParts { bplus, bminus, p, rcond })
}

/// g = plus_star . minus with plus_star(0) = Id. Returns (plus_star, minus, rcond).
pub fn birkhoff_right(g: &MatrixLoop, opts: &FactorOptions) -> Result<(MatrixLoop, MatrixLoop, f64)> {
    let r = birkhoff_right_parts(g, opts)?;
    Ok((r.bplus, r.bminus, r.rcond))
}

fn cholesky_upper(m: &Matrix2) -> Result<Matrix2> {
    let a = m.a().re;
    if !(a > 0.0) {
        return Err(Error::NotPositive("leading entry not positive".into()));
    }
    let r11 = a.sqrt();
    let r12 = m.b() / r11;
    let d = m.d().re - r12.norm_sqr();
    if !(d > 0.0) {
        return Err(Error::NotPositive("Schur complement not positive".into()));
    }
    Ok(Matrix2::new(r11.into(), r12, ZERO, d.sqrt().into()))
}

fn hermitian_min_eig(m: &Matrix2) -> f64 {
    let a = m.a().re;
    let d = m.d().re;
    let b = m.b();
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    mid - rad
}

/// Returns W+ (no negative powers, W+(0) upper triangular with positive diagonal; diagonal for
/// twisted input) with star_reflect(W+) . W+ = P.
pub fn spectral_factor_positive(p: &MatrixLoop, opts: &FactorOptions) -> Result<MatrixLoop> {
    let sym = p.l1_distance(&p.star_reflect());
    if sym > 1e-9 * (1.0 + p.l1_norm()) {
        return Err(Error::NotPositive(format!("input is not self-adjoint on the circle (defect {sym:e})")));
    }
    let samples = (4 * (p.hi() - p.lo() + 1) as usize).max(64);
    for l in circle_points(samples) {
        let v = p.eval_nonzero(l);
        let e = hermitian_min_eig(&v);
        if !(e > opts.rcond_min * v.norm()) {
            return Err(Error::NotPositive(format!("eigenvalue {e:e} at lambda = {l}")));
        }
    }
    let m = opts.n as i32;
    let tw = p.is_twisted();
    let unk: Vec<i32> = (0..=m).collect();
    let (yc, rc) = toeplitz_solve(p, Side::Right, &unk, &unk, &delta_id, tw)?;
    if !(rc >= opts.rcond_min) {
        return Err(Error::NotPositive(format!("Toeplitz block reciprocal condition {rc:e}")));
    }
    let y = MatrixLoop::from_parts(0, yc, tw);
    let y0inv = y.coeff(0).inverse().ok_or_else(|| Error::NotPositive("singular constant term".into()))?;
    let herm = (y0inv + y0inv.dagger()).scale_re(0.5);
    let w0 = cholesky_upper(&herm)?;
    let winv = y.right_mul_const(&w0.dagger());
    let star_w = p.mul_window(&winv, -m, 0);
    let w = star_w.star_reflect();
    Ok(w)
}

fn frame_tail(full: &MatrixLoop, lo: i32, hi: i32) -> f64 {
    full.coeff(hi + 1).norm() + full.coeff(hi + 2).norm() + full.coeff(lo - 1).norm() + full.coeff(lo - 2).norm()
}

/// C = frame . plus with frame unitary on the unit circle.
pub fn iwasawa_tau3(c: &MatrixLoop, opts: &FactorOptions) -> Result<IwasawaResult> {
    let n = opts.n as i32;
    let m = n;
    let p = c.star_reflect().mul_window(c, -m, m);
    let w = spectral_factor_positive(&p, opts)?;
    let winv = w.adjugate();
    let full = c.mul_window(&winv, -n - 2, n + 2);
    let tail = frame_tail(&full, -n, n);
    let (frame, _) = full.truncate(-n, n);
    let reality = frame.l1_distance(&frame.star_reflect().adjugate());
    let reconstruction = frame.mul(&w).l1_distance(c);
    Ok(IwasawaResult {
        residual: reality.max(reconstruction),
        frame,
        cell: Cell::Id,
        plus: w,
        k0: 1.0,
        diag: IwasawaDiagnostics { rcond: f64::NAN, k_variation: 0.0, reconstruction, reality, frame_tail: tail },
    })
}

/// Two-cell Iwasawa for the order-four involution: C = frame . cell . plus, frame fixed by tau4.
pub fn iwasawa_tau4(c: &MatrixLoop, opts: &FactorOptions) -> Result<IwasawaResult> {
    if !c.is_twisted() {
        return Err(Error::Domain("tau4 Iwasawa needs a twisted loop".into()));
    }
    let n = opts.n as i32;
    let m = n;
    let g = c.adjugate().mul_window(&c.tau4_group_unchecked(), -m, m);
    let parts = birkhoff_right_parts(&g, opts)?;
    let k = parts.bminus.mul(&parts.p.reflect4().ad_r());
    let k00 = k.coeff(0);
    let k0 = k00.a().re;
    let scale = k0.abs() + 1.0 / k0.abs();
    let mut var = 0.0;
    for (idx, cf) in k.coeffs().iter().enumerate() {
        if k.lo() + idx as i32 != 0 {
            var += cf.norm();
        }
    }
    var += k00.b().norm() + k00.c().norm() + k00.a().im.abs() + (k00.d() * k00.a() - ONE).norm();
    let k_variation = var / scale;
    if !(k_variation <= opts.k_tol) {
        return Err(Error::KNotConstant(k_variation));
    }
    let cb = c.mul_window(&parts.bplus, -n - 3, n + 3);
    let s = k0.abs().sqrt();
    let kt = Matrix2::diag(C64::new(s, 0.0), C64::new(1.0 / s, 0.0));
    let kt_inv = Matrix2::diag(C64::new(1.0 / s, 0.0), C64::new(s, 0.0));
    let plus = parts.p.left_mul_const(&kt_inv);
    let (full, cell, lo, hi) = if k0 > 0.0 {
        (cb.right_mul_const(&kt), Cell::Id, -n, n)
    } else {
        let f = cb.right_mul_const(&kt).mul(&MatrixLoop::omega0()).scale(-ONE);
        (f, Cell::Omega0, -n - 1, n + 1)
    };
    let tail = frame_tail(&full, lo, hi);
    let (frame, _) = full.truncate(lo, hi);
    let reality = frame.l1_distance(&frame.tau4_group_unchecked());
    let reconstruction = frame.mul(&cell.matrix()).mul(&plus).l1_distance(c);
    Ok(IwasawaResult {
        residual: reality.max(reconstruction),
        frame,
        cell,
        plus,
        k0,
        diag: IwasawaDiagnostics { rcond: parts.rcond, k_variation, reconstruction, reality, frame_tail: tail },
    })
}

/// g = s . u with u in SU2 and s = [[sqrt(u3), w/sqrt(u3)], [0, 1/sqrt(u3)]], u3 > 0.
pub fn finite_iwasawa(g: &Matrix2) -> (Matrix2, Matrix2) {
    let f = *g * g.dagger();
    let f22 = f.d().re;
    let u3 = 1.0 / f22;
    let w = f.b() / f22;
    let r = u3.sqrt();
    let s = Matrix2::new(r.into(), w / r, ZERO, (1.0 / r).into());
    let u = s.adjugate() * *g;
    (s, u)
}
