//! From extended frames to surfaces in H³: Sym formulas, finite-difference
//! fundamental forms, curvature residuals, Gauss maps, parallel fronts, the
//! Lawson deformation, primitivity and finite-type checks.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::models::{from_minkowski, minkowski_dot, to_minkowski, ball_coords_raw};
use crate::factorize::{finite_iwasawa, Cell};
use crate::frameflow::{DomainGrid, FrameField, NodeCell};
use crate::loopcore::{Matrix2, MatrixLoop, ONE, ZERO};
use crate::potential::Regime;

/// ⟨ξ, η⟩ = −½ tr(ξ e₂ ηᵀ e₂), complex bilinear.
pub fn pairing(a: &Matrix2, b: &Matrix2) -> C64 {
    let e2 = Matrix2::basis(2);
    (*a * e2 * b.transpose() * e2).trace() * -0.5
}

fn d0_matrix(q: f64) -> Matrix2 {
    Matrix2::diag(C64::new((-q / 2.0).exp(), 0.0), C64::new((q / 2.0).exp(), 0.0))
}

fn n0_matrix(q: f64) -> Matrix2 {
    Matrix2::diag(C64::new((-q / 2.0).exp(), 0.0), C64::new(-(q / 2.0).exp(), 0.0))
}

/// A point of the Legendre lift (f, n). `sheet` is −1 for backward-sheet points
/// produced from CELL_OMEGA0 frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymPoint {
    pub f: Matrix2,
    pub n: Matrix2,
    pub sheet: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub det_f: f64,
    pub trace_sign: bool,
    pub det_n: f64,
    pub pairing: f64,
}

impl Membership {
    pub fn worst(&self) -> f64 {
        self.det_f.max(self.det_n).max(self.pairing)
    }
}

impl SymPoint {
    pub fn membership(&self) -> Membership {
        Membership {
            det_f: (self.f.det() - ONE).norm(),
            trace_sign: self.sheet * self.f.trace().re > 0.0,
            det_n: (self.n.det() + ONE).norm(),
            pairing: pairing(&self.f, &self.n).norm(),
        }
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let m = self.membership();
        if !m.trace_sign || m.worst() > tol || !self.f.is_hermitian(tol * (1.0 + self.f.norm())) {
            return Err(Error::NotInH3(format!(
                "|det f - 1| = {:e}, |det n + 1| = {:e}, |<f,n>| = {:e}, sheet {}",
                m.det_f, m.det_n, m.pairing, self.sheet
            )));
        }
        Ok(())
    }
}

pub fn spectral_point(q: f64, theta: f64) -> C64 {
    C64::from_polar((-q / 2.0).exp(), theta)
}

/// f = ±Φ(ν)D₀Φ(ν)†, n = ±Φ(ν)diag(e^{−q/2}, −e^{q/2})Φ(ν)† from a frame value at ν.
pub fn sym_from_value(phi: &Matrix2, q: f64, sheet: f64) -> SymPoint {
    let pd = phi.dagger();
    SymPoint { f: (*phi * d0_matrix(q) * pd).scale_re(sheet), n: (*phi * n0_matrix(q) * pd).scale_re(sheet), sheet }
}

/// The Sym formula at ν = e^{−q/2}e^{iθ}. CELL_OMEGA0 frames already carry ω₀;
/// their output is negated and lies on the backward sheet. The formula is the
/// same in both regimes.
pub fn sym_point(frame: &MatrixLoop, cell: Cell, q: f64, theta: f64, _regime: Regime, tol: f64) -> Result<SymPoint> {
    let phi = frame.eval(spectral_point(q, theta))?;
    let sheet = match cell {
        Cell::Id => 1.0,
        Cell::Omega0 => -1.0,
    };
    let p = sym_from_value(&phi, q, sheet);
    p.check(tol)?;
    Ok(p)
}

/// Surface data on a grid. `group` is the node cell code (−1 when absent).
#[derive(Clone, Debug)]
pub struct SurfaceField {
    pub grid: DomainGrid,
    pub f: Vec<Option<Matrix2>>,
    pub n: Vec<Option<Matrix2>>,
    pub sheet: Vec<f64>,
    pub group: Vec<i32>,
    /// Frame values Φ(ν) where available.
    pub phi: Vec<Option<Matrix2>>,
    /// Error code for nodes with a frame whose Sym output failed membership.
    pub rejected: Vec<Option<&'static str>>,
}

impl SurfaceField {
    pub fn valid(&self, idx: usize) -> bool {
        self.f[idx].is_some()
    }
    pub fn valid_count(&self) -> usize {
        self.f.iter().filter(|x| x.is_some()).count()
    }
    pub fn sample(&self, idx: usize) -> Option<SymPoint> {
        Some(SymPoint { f: self.f[idx]?, n: self.n[idx]?, sheet: self.sheet[idx] })
    }

    /// A field sharing grid and validity, with f and n replaced pointwise.
    pub fn map(&self, g: impl Fn(&Matrix2, &Matrix2) -> (Matrix2, Matrix2)) -> SurfaceField {
        let mut out = self.clone();
        for idx in 0..self.f.len() {
            if let (Some(f), Some(n)) = (self.f[idx], self.n[idx]) {
                let (a, b) = g(&f, &n);
                out.f[idx] = Some(a);
                out.n[idx] = Some(b);
            }
        }
        out
    }
}

pub fn surface_field(field: &FrameField, theta: f64, tol: f64) -> SurfaceField {
    let total = field.grid.len();
    let nu = spectral_point(field.q, theta);
    let mut s = SurfaceField {
        grid: field.grid.clone(),
        f: vec![None; total],
        n: vec![None; total],
        sheet: vec![1.0; total],
        group: vec![-1; total],
        phi: vec![None; total],
        rejected: vec![None; total],
    };
    for idx in 0..total {
        let (Some(frame), Some(cell)) = (&field.frame[idx], field.cell[idx].cell()) else { continue };
        s.phi[idx] = Some(frame.eval_nonzero(nu));
        match sym_point(frame, cell, field.q, theta, field.regime, tol) {
            Ok(p) => {
                s.f[idx] = Some(p.f);
                s.n[idx] = Some(p.n);
                s.sheet[idx] = p.sheet;
                s.group[idx] = field.cell[idx].code();
            }
            Err(e) => s.rejected[idx] = Some(e.code()),
        }
    }
    s
}

/// Nodes within Chebyshev distance 2 of a SINGULAR node or of a grid edge across
/// which k₀ changes sign.
pub fn exclusion_mask(field: &FrameField) -> Vec<bool> {
    let g = &field.grid;
    let mut seed = vec![false; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            if field.cell[idx] == NodeCell::Singular {
                seed[idx] = true;
                continue;
            }
            for (di, dj) in [(1usize, 0usize), (0, 1)] {
                let (a, b) = (i + di, j + dj);
                if a < g.nx && b < g.ny {
                    let o = g.index(a, b);
                    if field.cell[o] != NodeCell::Singular && field.cell[o] != field.cell[idx] {
                        seed[idx] = true;
                        seed[o] = true;
                    }
                }
            }
        }
    }
    dilate(g, &seed, 2)
}

fn dilate(g: &DomainGrid, seed: &[bool], r: usize) -> Vec<bool> {
    let mut out = vec![false; seed.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !seed[g.index(i, j)] {
                continue;
            }
            for b in j.saturating_sub(r)..(j + r + 1).min(g.ny) {
                for a in i.saturating_sub(r)..(i + r + 1).min(g.nx) {
                    out[g.index(a, b)] = true;
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    fn width(&self) -> usize {
        match self {
            FdOrder::Second => 3,
            FdOrder::Fourth => 5,
        }
    }
}

/// Finite-difference weights for the m-th derivative at 0 from the given offsets (Fornberg).
pub fn fd_weights(offsets: &[f64], m: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Finite differences over a grid with per-node validity and grouping; stencils
/// never mix groups and never touch invalid nodes.
pub struct Differ<'a> {
    pub grid: &'a DomainGrid,
    pub group: &'a [i32],
    pub order: FdOrder,
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

impl Differ<'_> {
    fn step(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.grid.hx(),
            Axis::Y => self.grid.hy(),
        }
    }

    fn window(&self, axis: Axis, i: usize, j: usize, centered: bool) -> Option<(Vec<usize>, Vec<f64>)> {
        let (len, pos) = match axis {
            Axis::X => (self.grid.nx, i),
            Axis::Y => (self.grid.ny, j),
        };
        let w = self.order.width();
        if len < w {
            return None;
        }
        let half = w / 2;
        let start = pos.saturating_sub(half).min(len - w);
        if centered && start + half != pos {
            return None;
        }
        let idx: Vec<usize> = (start..start + w)
            .map(|k| match axis {
                Axis::X => self.grid.index(k, j),
                Axis::Y => self.grid.index(i, k),
            })
            .collect();
        let offs: Vec<f64> = (start..start + w).map(|k| k as f64 - pos as f64).collect();
        Some((idx, offs))
    }

    fn combine<const K: usize>(&self, vals: &[Option<[f64; K]>], center: usize, idx: &[usize], w: &[f64], scale: f64) -> Option<[f64; K]> {
        let g = self.group[center];
        let mut out = [0.0; K];
        for (&k, &wk) in idx.iter().zip(w) {
            if self.group[k] != g {
                return None;
            }
            let v = vals[k]?;
            if wk != 0.0 {
                for c in 0..K {
                    out[c] += wk * v[c];
                }
            }
        }
        for o in out.iter_mut() {
            *o *= scale;
        }
        Some(out)
    }

    /// First derivative; one-sided stencils at the grid border.
    fn d1<const K: usize>(&self, vals: &[Option<[f64; K]>], i: usize, j: usize, axis: Axis) -> Option<[f64; K]> {
        let center = self.grid.index(i, j);
        vals[center]?;
        let (idx, offs) = self.window(axis, i, j, false)?;
        let w = fd_weights(&offs, 1);
        self.combine(vals, center, &idx, &w, 1.0 / self.step(axis))
    }

    /// Second derivative along one axis; interior nodes only.
    fn d2<const K: usize>(&self, vals: &[Option<[f64; K]>], i: usize, j: usize, axis: Axis) -> Option<[f64; K]> {
        let center = self.grid.index(i, j);
        vals[center]?;
        let (idx, offs) = self.window(axis, i, j, true)?;
        let w = fd_weights(&offs, 2);
        let h = self.step(axis);
        self.combine(vals, center, &idx, &w, 1.0 / (h * h))
    }

    /// Mixed derivative as the tensor product of centered first-derivative stencils.
    fn dxy<const K: usize>(&self, vals: &[Option<[f64; K]>], i: usize, j: usize) -> Option<[f64; K]> {
        let center = self.grid.index(i, j);
        vals[center]?;
        let (_, ox) = self.window(Axis::X, i, j, true)?;
        let (_, oy) = self.window(Axis::Y, i, j, true)?;
        let wx = fd_weights(&ox, 1);
        let wy = fd_weights(&oy, 1);
        let g = self.group[center];
        let mut out = [0.0; K];
        for (a, &dx) in ox.iter().enumerate() {
            for (b, &dy) in oy.iter().enumerate() {
                let w = wx[a] * wy[b];
                let k = self.grid.index((i as isize + dx as isize) as usize, (j as isize + dy as isize) as usize);
                if self.group[k] != g {
                    return None;
                }
                let v = vals[k]?;
                if w != 0.0 {
                    for c in 0..K {
                        out[c] += w * v[c];
                    }
                }
            }
        }
        let s = 1.0 / (self.grid.hx() * self.grid.hy());
        for o in out.iter_mut() {
            *o *= s;
        }
        Some(out)
    }
}

fn minkowski_field(v: &[Option<Matrix2>]) -> Vec<Option<[f64; 4]>> {
    v.iter().map(|m| m.as_ref().map(to_minkowski)).collect()
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    minkowski_dot(a, b)
}

fn add4(a: &[f64; 4], b: &[f64; 4], s: f64) -> [f64; 4] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]]
}

/// Per-node metric factor u, Hopf coefficient Q and mean curvature estimate H.
#[derive(Clone, Debug)]
pub struct FormsField {
    pub u: Vec<f64>,
    pub q: Vec<C64>,
    pub h: Vec<f64>,
    /// |⟨f_z, f_z⟩| e^{−u}, zero for conformal parametrizations.
    pub conformal: Vec<f64>,
    /// Nodes where e^u < 1e−12.
    pub nonimmersion: Vec<bool>,
    pub order: FdOrder,
}

impl FormsField {
    pub fn valid(&self, idx: usize) -> bool {
        self.u[idx].is_finite() && self.h[idx].is_finite()
    }
}

/// e^u = 2⟨f_z, f_z̄⟩, Q = ⟨f_zz, n⟩, H = 2e^{−u}⟨f_zz̄, n⟩ from central differences.
/// H uses the general first/second fundamental form quotient so that
/// non-conformal parametrizations (parallel fronts) are handled too.
pub fn fundamental_forms(s: &SurfaceField, order: FdOrder) -> FormsField {
    let g = &s.grid;
    let fv = minkowski_field(&s.f);
    let nv = minkowski_field(&s.n);
    let d = Differ { grid: g, group: &s.group, order };
    let total = g.len();
    let mut out = FormsField {
        u: vec![f64::NAN; total],
        q: vec![C64::new(f64::NAN, f64::NAN); total],
        h: vec![f64::NAN; total],
        conformal: vec![f64::NAN; total],
        nonimmersion: vec![false; total],
        order,
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            let Some(n) = nv[idx] else { continue };
            let (Some(fx), Some(fy), Some(fxx), Some(fyy), Some(fxy)) =
                (d.d1(&fv, i, j, Axis::X), d.d1(&fv, i, j, Axis::Y), d.d2(&fv, i, j, Axis::X), d.d2(&fv, i, j, Axis::Y), d.dxy(&fv, i, j))
            else {
                continue;
            };
            let xx = dot(&fx, &fx);
            let yy = dot(&fy, &fy);
            let xy = dot(&fx, &fy);
            let eu = 0.5 * (xx + yy);
            if !(eu >= 1e-12) {
                out.nonimmersion[idx] = true;
                continue;
            }
            out.u[idx] = eu.ln();
            out.conformal[idx] = C64::new(0.25 * (xx - yy), -0.5 * xy).norm() / eu;
            // (LG − 2MF + NE) / 2(EG − F²); equals 2e^{−u}⟨f_zz̄, n⟩ for conformal f
            let (l, m, nn) = (dot(&fxx, &n), dot(&fxy, &n), dot(&fyy, &n));
            out.h[idx] = (l * yy - 2.0 * m * xy + nn * xx) / (2.0 * (xx * yy - xy * xy));
            let re = dot(&add4(&fxx, &fyy, -1.0), &n);
            let im = -2.0 * dot(&fxy, &n);
            out.q[idx] = C64::new(re, im) * 0.25;
        }
    }
    out
}

/// Gauss u_zz̄ + ½(H²−1)e^u − 2|Q|²e^{−u} and Codazzi Q_z̄ − ½H_z e^u residuals.
pub fn gauss_codazzi_residual(forms: &FormsField, grid: &DomainGrid, group: &[i32]) -> (Vec<f64>, Vec<f64>) {
    let d = Differ { grid, group, order: forms.order };
    let total = grid.len();
    let fin = |x: f64| x.is_finite();
    let uv: Vec<Option<[f64; 1]>> = forms.u.iter().map(|&u| fin(u).then_some([u])).collect();
    let hv: Vec<Option<[f64; 1]>> = forms.h.iter().map(|&h| fin(h).then_some([h])).collect();
    let qv: Vec<Option<[f64; 2]>> = forms.q.iter().map(|q| (fin(q.re) && fin(q.im)).then_some([q.re, q.im])).collect();
    let mut gauss = vec![f64::NAN; total];
    let mut codazzi = vec![f64::NAN; total];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.index(i, j);
            let (Some(u), Some(h), Some(q)) = (uv[idx], hv[idx], qv[idx]) else { continue };
            let eu = u[0].exp();
            let qq = C64::new(q[0], q[1]);
            if let (Some(uxx), Some(uyy)) = (d.d2(&uv, i, j, Axis::X), d.d2(&uv, i, j, Axis::Y)) {
                let uzzb = 0.25 * (uxx[0] + uyy[0]);
                gauss[idx] = (uzzb + 0.5 * (h[0] * h[0] - 1.0) * eu - 2.0 * qq.norm_sqr() / eu).abs();
            }
            if let (Some(qx), Some(qy), Some(hx), Some(hy)) =
                (d.d1(&qv, i, j, Axis::X), d.d1(&qv, i, j, Axis::Y), d.d1(&hv, i, j, Axis::X), d.d1(&hv, i, j, Axis::Y))
            {
                let qzb = (C64::new(qx[0], qx[1]) + C64::i() * C64::new(qy[0], qy[1])) * 0.5;
                let hz = C64::new(hx[0], -hy[0]) * 0.5;
                codazzi[idx] = (qzb - hz * (0.5 * eu)).norm();
            }
        }
    }
    (gauss, codazzi)
}

/// |∂_z̄ Q| by finite differences.
pub fn hopf_dbar(forms: &FormsField, grid: &DomainGrid, group: &[i32]) -> Vec<f64> {
    let d = Differ { grid, group, order: forms.order };
    let qv: Vec<Option<[f64; 2]>> = forms.q.iter().map(|q| (q.re.is_finite() && q.im.is_finite()).then_some([q.re, q.im])).collect();
    let mut out = vec![f64::NAN; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if let (Some(qx), Some(qy)) = (d.d1(&qv, i, j, Axis::X), d.d1(&qv, i, j, Axis::Y)) {
                out[grid.index(i, j)] = ((C64::new(qx[0], qx[1]) + C64::i() * C64::new(qy[0], qy[1])) * 0.5).norm();
            }
        }
    }
    out
}

/// max(|⟨f_x, n⟩|, |⟨f_y, n⟩|) per node.
pub fn legendre_residual(s: &SurfaceField, order: FdOrder) -> Vec<f64> {
    let g = &s.grid;
    let fv = minkowski_field(&s.f);
    let nv = minkowski_field(&s.n);
    let d = Differ { grid: g, group: &s.group, order };
    let mut out = vec![f64::NAN; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            if let (Some(n), Some(fx), Some(fy)) = (nv[idx], d.d1(&fv, i, j, Axis::X), d.d1(&fv, i, j, Axis::Y)) {
                out[idx] = dot(&fx, &n).abs().max(dot(&fy, &n).abs());
            }
        }
    }
    out
}

/// 2(⟨f_y, n_x⟩ − ⟨f_x, n_y⟩): the pullback of the symplectic form on the
/// space of oriented geodesics under the hyperbolic Gauss map.
pub fn lagrangian_residual(s: &SurfaceField, order: FdOrder) -> Vec<f64> {
    let g = &s.grid;
    let fv = minkowski_field(&s.f);
    let nv = minkowski_field(&s.n);
    let d = Differ { grid: g, group: &s.group, order };
    let mut out = vec![f64::NAN; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            if let (Some(fx), Some(fy), Some(nx), Some(ny)) =
                (d.d1(&fv, i, j, Axis::X), d.d1(&fv, i, j, Axis::Y), d.d1(&nv, i, j, Axis::X), d.d1(&nv, i, j, Axis::Y))
            {
                out[idx] = (2.0 * (dot(&fy, &nx) - dot(&fx, &ny))).abs();
            }
        }
    }
    out
}

/// F = (f, n) with its membership residuals.
pub fn gauss_map(p: &SymPoint) -> (Matrix2, Matrix2, Membership) {
    (p.f, p.n, p.membership())
}

/// The normal as a point of de Sitter space (det n = −1).
pub fn obata_gauss(p: &SymPoint, tol: f64) -> Result<[f64; 4]> {
    let d = (p.n.det() + ONE).norm();
    if d > tol {
        return Err(Error::NotInH3(format!("normal is off de Sitter space by {d:e}")));
    }
    Ok(to_minkowski(&p.n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolicGauss {
    pub plus: Matrix2,
    pub minus: Matrix2,
    /// |det(f ± n)|, zero for light-like matrices.
    pub det_plus: f64,
    pub det_minus: f64,
    pub boundary_plus: [f64; 3],
    pub boundary_minus: [f64; 3],
}

fn projectivize(x: [f64; 4]) -> [f64; 3] {
    [x[1] / x[0], x[2] / x[0], x[3] / x[0]]
}

/// The endpoints on the sphere at infinity of the normal geodesic: f ± n, projectivized.
pub fn hyperbolic_gauss(p: &SymPoint) -> HyperbolicGauss {
    let plus = p.f + p.n;
    let minus = p.f - p.n;
    HyperbolicGauss {
        plus,
        minus,
        det_plus: plus.det().norm(),
        det_minus: minus.det().norm(),
        boundary_plus: projectivize(to_minkowski(&plus)),
        boundary_minus: projectivize(to_minkowski(&minus)),
    }
}

/// κ = Ad(u)e₁ in the basis (e₁, e₂, e₃), where the frame value splits as s·u.
pub fn normal_gauss(phi: &Matrix2) -> [f64; 3] {
    let (_, u) = finite_iwasawa(phi);
    let m = u * Matrix2::basis(1) * u.dagger();
    let comp = |k: usize| ((m * Matrix2::basis(k)).trace() * 0.5).re;
    [comp(1), comp(2), comp(3)]
}

/// f_r = cosh r·f + sinh r·n, checked to lie in H³ (on the sheet of f).
pub fn parallel_front(p: &SymPoint, r: f64, tol: f64) -> Result<SymPoint> {
    let f = p.f.scale_re(r.cosh()) + p.n.scale_re(r.sinh());
    let n = p.f.scale_re(r.sinh()) + p.n.scale_re(r.cosh());
    let out = SymPoint { f, n, sheet: p.sheet };
    let d = (f.det() - ONE).norm();
    if d > tol || p.sheet * f.trace().re <= 0.0 {
        return Err(Error::NotInH3(format!("parallel front at r = {r}: |det - 1| = {d:e}")));
    }
    Ok(out)
}

/// f̌_r = sinh r·f + cosh r·n, checked to lie in de Sitter space.
pub fn de_sitter_parallel(p: &SymPoint, r: f64, tol: f64) -> Result<Matrix2> {
    let f = p.f.scale_re(r.sinh()) + p.n.scale_re(r.cosh());
    let d = (f.det() + ONE).norm();
    if d > tol {
        return Err(Error::NotInH3(format!("de Sitter parallel at r = {r}: |det + 1| = {d:e}")));
    }
    Ok(f)
}

/// Per-node Gram matrix entries (E, F, G) of a map given in Minkowski coordinates.
pub fn induced_metric(vals: &[Option<[f64; 4]>], grid: &DomainGrid, group: &[i32], order: FdOrder) -> Vec<Option<[f64; 3]>> {
    let d = Differ { grid, group, order };
    let mut out = vec![None; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if let (Some(x), Some(y)) = (d.d1(vals, i, j, Axis::X), d.d1(vals, i, j, Axis::Y)) {
                out[grid.index(i, j)] = Some([dot(&x, &x), dot(&x, &y), dot(&y, &y)]);
            }
        }
    }
    out
}

/// Principal curvatures H ± 2|Q|e^{−u}.
pub fn principal_curvatures(h: f64, q: C64, u: f64) -> (f64, f64) {
    let d = 2.0 * q.norm() * (-u).exp();
    (h + d, h - d)
}

/// Mean curvature of the parallel front at distance r predicted from the
/// principal curvatures of f: κ ↦ (κ cosh r − sinh r)/(cosh r − κ sinh r).
pub fn parallel_mean_curvature(h: f64, q: C64, u: f64, r: f64) -> f64 {
    let (k1, k2) = principal_curvatures(h, q, u);
    let t = |k: f64| (k * r.cosh() - r.sinh()) / (r.cosh() - k * r.sinh());
    0.5 * (t(k1) + t(k2))
}

/// Unit vector orthogonal to f, f_x, f_y in Minkowski space (generalized cross product).
pub fn cross_normal(f: &[f64; 4], fx: &[f64; 4], fy: &[f64; 4]) -> [f64; 4] {
    let m = [f, fx, fy];
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let a = |r: usize, c: usize| m[r][cols[c]];
        a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
    };
    // Euclidean cofactors, then lower the index so that the result is Minkowski-orthogonal.
    let mut v = [0.0; 4];
    for k in 0..4 {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        v[k] = s * minor(k);
    }
    v[0] = -v[0];
    let norm = dot(&v, &v).abs().sqrt();
    [v[0] / norm, v[1] / norm, v[2] / norm, v[3] / norm]
}

#[derive(Clone, Debug)]
pub struct LawsonResult {
    pub surface: SurfaceField,
    /// cosh q′ − H sinh q′; the deformed surface lies on det f′ = 1/c².
    pub c: f64,
    pub h_expected: f64,
    pub k_expected: f64,
    /// Nodes where the Sym-type normal failed the Legendre test and the cross-product normal was used.
    pub normal_fallbacks: usize,
}

/// The Lawson correspondent at parameter q′: evaluate the frame at
/// ν = e^{−q/2}e^{q′/2} and scale by 1/(cosh q′ − H sinh q′).
pub fn lawson_deform(field: &FrameField, qp: f64, tol: f64) -> Result<LawsonResult> {
    let q = field.q;
    let h = field.regime.mean_curvature(q);
    let c = qp.cosh() - h * qp.sinh();
    if !(c > tol) {
        return Err(Error::LawsonDegenerate(c));
    }
    let nu = C64::new((qp / 2.0 - q / 2.0).exp(), 0.0);
    let s = ((qp - q) / 2.0).exp();
    let dm = Matrix2::diag(C64::new(s, 0.0), C64::new(1.0 / s, 0.0));
    let nm = Matrix2::diag(C64::new(s, 0.0), C64::new(-1.0 / s, 0.0));
    let g = &field.grid;
    let total = g.len();
    let mut surf = SurfaceField {
        grid: g.clone(),
        f: vec![None; total],
        n: vec![None; total],
        sheet: vec![1.0; total],
        group: vec![-1; total],
        phi: vec![None; total],
        rejected: vec![None; total],
    };
    for idx in 0..total {
        let (Some(frame), Some(cell)) = (&field.frame[idx], field.cell[idx].cell()) else { continue };
        let sheet = if cell == Cell::Id { 1.0 } else { -1.0 };
        let phi = frame.eval_nonzero(nu);
        surf.phi[idx] = Some(phi);
        surf.f[idx] = Some((phi * dm * phi.dagger()).scale_re(sheet / c));
        surf.n[idx] = Some((phi * nm * phi.dagger()).scale_re(sheet));
        surf.sheet[idx] = sheet;
        surf.group[idx] = field.cell[idx].code();
    }
    // Replace normals that fail the Legendre condition by the cross-product normal.
    let leg = legendre_residual(&surf, FdOrder::Fourth);
    let fv = minkowski_field(&surf.f);
    let d = Differ { grid: g, group: &surf.group, order: FdOrder::Fourth };
    let mut fallbacks = 0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            let Some(n) = surf.n[idx] else { continue };
            if leg[idx].is_finite() && leg[idx] <= 1e-6 * (1.0 + surf.f[idx].map(|f| f.norm()).unwrap_or(0.0)) {
                continue;
            }
            if let (Some(f), Some(fx), Some(fy)) = (fv[idx], d.d1(&fv, i, j, Axis::X), d.d1(&fv, i, j, Axis::Y)) {
                let mut v = cross_normal(&f, &fx, &fy);
                if dot(&v, &to_minkowski(&n)) < 0.0 {
                    v = [-v[0], -v[1], -v[2], -v[3]];
                }
                surf.n[idx] = Some(from_minkowski(v));
                fallbacks += 1;
            }
        }
    }
    Ok(LawsonResult { surface: surf, c, h_expected: h * qp.cosh() - qp.sinh(), k_expected: -c * c, normal_fallbacks: fallbacks })
}

/// Sectional curvature of the ambient model a surface lives in: −1/det f.
pub fn ambient_curvature(f: &Matrix2) -> f64 {
    -1.0 / f.det().re
}

/// The eigenspace components x₁…x₅ of the Gauss-map Maurer–Cartan form, each as
/// (dz, dz̄) coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitivityTerms {
    pub x1: (C64, C64),
    pub x2: (C64, C64),
    pub x3: (C64, C64),
    pub x4: (C64, C64),
    pub x5: (C64, C64),
}

impl PrimitivityTerms {
    pub fn new(u: f64, u_z: C64, q: C64, h: f64, c: f64) -> Self {
        let e = (u / 2.0).exp();
        let ei = (-u / 2.0).exp();
        let s = c.abs().sqrt() / 2.0 * e;
        let z = ZERO;
        PrimitivityTerms {
            x1: (u_z * 0.25, -u_z.conj() * 0.25),
            x2: (C64::new(s, 0.0), z),
            x3: (-q * ei, C64::new(-h / 2.0 * e, 0.0)),
            x4: (C64::new(h / 2.0 * e, 0.0), q.conj() * ei),
            x5: (z, C64::new(s, 0.0)),
        }
    }

    /// The dz part of x₄: the component that must vanish for a primitive Gauss map.
    pub fn residual(&self) -> f64 {
        self.x4.0.norm()
    }
}

/// Per-node primitivity residual in an ambient space of curvature c.
pub fn primitivity_residual(forms: &FormsField, grid: &DomainGrid, group: &[i32], c: f64) -> Vec<f64> {
    let d = Differ { grid, group, order: forms.order };
    let uv: Vec<Option<[f64; 1]>> = forms.u.iter().map(|&u| u.is_finite().then_some([u])).collect();
    let mut out = vec![f64::NAN; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.index(i, j);
            if !forms.valid(idx) {
                continue;
            }
            let uz = match (d.d1(&uv, i, j, Axis::X), d.d1(&uv, i, j, Axis::Y)) {
                (Some(x), Some(y)) => C64::new(x[0], -y[0]) * 0.5,
                _ => ZERO,
            };
            out[idx] = PrimitivityTerms::new(forms.u[idx], uz, forms.q[idx], forms.h[idx], c).residual();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaurerCartan {
    pub e_half_u: f64,
    pub abs_q: f64,
    /// Mass of α(∂x), α(∂y) outside powers −1..1.
    pub higher_terms: f64,
    /// Off-diagonal and real-diagonal parts of the λ⁰ coefficients.
    pub alpha0_defect: f64,
    pub nonimmersion: bool,
}

/// 𝓗 = i e^{−q}(H+1) for H < 1 and e^{−q}(H+1) for H > 1.
pub fn script_h(regime: Regime, q: f64) -> C64 {
    let h = regime.mean_curvature(q);
    let v = (-q).exp() * (h + 1.0);
    match regime {
        Regime::HLess1 => C64::new(0.0, v),
        Regime::HGreater1 => C64::new(v, 0.0),
    }
}

/// α = Φ^{−1}dΦ by central differences of the loop coefficients at an interior node.
pub fn maurer_cartan_extract(field: &FrameField, i: usize, j: usize) -> Result<MaurerCartan> {
    let g = &field.grid;
    if i == 0 || j == 0 || i + 1 >= g.nx || j + 1 >= g.ny {
        return Err(Error::Domain("Maurer-Cartan extraction needs an interior node".into()));
    }
    let at = |a: usize, b: usize| -> Result<&MatrixLoop> {
        let idx = g.index(a, b);
        if field.cell[idx] != field.cell[g.index(i, j)] {
            return Err(Error::Domain("stencil crosses a cell boundary".into()));
        }
        field.frame[idx].as_ref().ok_or(Error::NotBigCell { rcond: 0.0 })
    };
    let phi = at(i, j)?;
    let dx = at(i + 1, j)?.sub(at(i - 1, j)?).scale(C64::new(0.5 / g.hx(), 0.0));
    let dy = at(i, j + 1)?.sub(at(i, j - 1)?).scale(C64::new(0.5 / g.hy(), 0.0));
    let inv = phi.adjugate();
    let ax = inv.mul(&dx);
    let ay = inv.mul(&dy);
    let az = ax.axpy(-C64::i(), &ay).scale(C64::new(0.5, 0.0));
    let am1 = az.coeff(-1);
    let sh = script_h(field.regime, field.q).norm();
    let e_half_u = 2.0 * am1.b().norm() / sh;
    let abs_q = am1.c().norm() * e_half_u;
    let mut higher = 0.0;
    for a in [&ax, &ay] {
        for (k, c) in a.coeffs().iter().enumerate() {
            let m = a.lo() + k as i32;
            if !(-1..=1).contains(&m) {
                higher += c.norm();
            }
        }
    }
    let d0 = |a: &MatrixLoop| {
        let c = a.coeff(0);
        c.b().norm() + c.c().norm() + c.a().re.abs() + c.d().re.abs()
    };
    Ok(MaurerCartan { e_half_u, abs_q, higher_terms: higher, alpha0_defect: d0(&ax).max(d0(&ay)), nonimmersion: e_half_u < 1e-6 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteTypeReport {
    /// max over spine nodes of ‖Φ^{−1}ξ°Φ − ξ_Lax‖ (coefficient l1).
    pub max_deviation: f64,
    /// max over all valid nodes of the variation of det ξ(z) (hence of its eigenvalues).
    pub eigen_variation: f64,
    pub spine_nodes: usize,
}

/// α_ξ(∂_z) = λ^{−1}ξ_{−d} + ½ξ_{−d+1}; the ∂_z̄ part is its image under the real form.
fn lax_alpha(xi: &MatrixLoop, d: i32, regime: Regime) -> MatrixLoop {
    let a1 = MatrixLoop::from_parts(-1, vec![xi.coeff(-d), xi.coeff(-d + 1).scale_re(0.5)], true);
    let a2 = match regime {
        Regime::HLess1 => a1.tau4_algebra(),
        Regime::HGreater1 => a1.tau3_algebra(),
    };
    a1.add(&a2)
}

fn commutator(a: &MatrixLoop, b: &MatrixLoop) -> MatrixLoop {
    a.mul(b).sub(&b.mul(a))
}

/// Compares ξ = Φ^{−1}ξ°Φ with an independent integration of dξ = [ξ, α_ξ] along the spine.
/// α_ξ is rebuilt from ξ, so ξ° must carry the normalization of the potential
/// itself (e.g. ξ° = A for the revolution family); a rescaled ξ° such as iA is
/// accepted by the reality check but integrates against a rescaled α.
pub fn finite_type_check(xi0: &MatrixLoop, field: &FrameField) -> Result<FiniteTypeReport> {
    let scale = 1.0 + xi0.l1_norm();
    let fixed = match field.regime {
        Regime::HLess1 => xi0.tau4_algebra(),
        Regime::HGreater1 => xi0.tau3_algebra(),
    };
    let defect = fixed.l1_distance(xi0).min(fixed.l1_distance(&xi0.scale(-ONE)));
    if defect > 1e-10 * scale {
        return Err(Error::NotFixed(defect));
    }
    let d = (-xi0.lo()).max(xi0.hi()).max(1);
    let g = &field.grid;
    let conj = |idx: usize| -> Option<MatrixLoop> {
        let f = field.frame[idx].as_ref()?;
        Some(f.adjugate().mul(xi0).mul(f).truncate(-d, d).0)
    };
    let (i0, j0) = g.base_node();
    let base = g.index(i0, j0);
    let start = conj(base).ok_or_else(|| Error::Domain("basepoint frame is singular".into()))?;
    let det0 = start.det_loop();
    let mut eigen_variation: f64 = 0.0;
    for idx in 0..g.len() {
        if let Some(x) = conj(idx) {
            let dl = x.det_loop();
            let n = dl.len().max(det0.len());
            let mut s = 0.0;
            for k in 0..n {
                s += (dl.get(k).copied().unwrap_or(ZERO) - det0.get(k).copied().unwrap_or(ZERO)).norm();
            }
            eigen_variation = eigen_variation.max(s);
        }
    }
    let rhs = |x: &MatrixLoop| commutator(x, &lax_alpha(x, d, field.regime)).truncate(-d, d).0;
    let substeps = 4;
    let mut max_dev: f64 = 0.0;
    let mut count = 1;
    for dir in [1i64, -1] {
        let mut xi = start.clone();
        let mut i = i0 as i64;
        loop {
            let next = i + dir;
            if next < 0 || next >= g.nx as i64 {
                break;
            }
            let h = C64::new(dir as f64 * g.hx() / substeps as f64, 0.0);
            for _ in 0..substeps {
                let k1 = rhs(&xi);
                let k2 = rhs(&xi.axpy(h * 0.5, &k1));
                let k3 = rhs(&xi.axpy(h * 0.5, &k2));
                let k4 = rhs(&xi.axpy(h, &k3));
                let inc = k1.add(&k2.scale(C64::new(2.0, 0.0))).add(&k3.scale(C64::new(2.0, 0.0))).add(&k4);
                xi = xi.axpy(h / 6.0, &inc);
            }
            i = next;
            let Some(want) = conj(g.index(i as usize, j0)) else { break };
            max_dev = max_dev.max(want.l1_distance(&xi));
            count += 1;
        }
    }
    Ok(FiniteTypeReport { max_deviation: max_dev, eigen_variation, spine_nodes: count })
}

/// Backward-sheet aware ball coordinates of a Sym point.
pub fn ball_point(p: &SymPoint) -> [f64; 3] {
    ball_coords_raw(&to_minkowski(&p.f))
}
