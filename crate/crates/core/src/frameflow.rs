//! Integration of dC = Cη over a planar grid, per-node Iwasawa splitting into
//! extended frames, the singular set S₀ and normalized potentials.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{birkhoff_left, iwasawa_tau3, iwasawa_tau4, Cell, FactorOptions};
use crate::loopcore::{Matrix2, MatrixLoop};
use crate::potential::{PotentialSpec, Regime};

#[derive(Clone, Debug, PartialEq)]
pub struct DomainGrid {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub basepoint: C64,
}

impl DomainGrid {
    pub fn new(re_range: [f64; 2], im_range: [f64; 2], nx: usize, ny: usize, basepoint: C64) -> Result<Self> {
        let g = DomainGrid { re_range, im_range, nx, ny, basepoint };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok(self.re_range) || !ok(self.im_range) {
            return Err(Error::Domain("grid ranges must be finite and increasing".into()));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Domain("grid needs nx, ny >= 2".into()));
        }
        if !self.contains(self.basepoint) {
            return Err(Error::Domain(format!("basepoint {} outside the grid", self.basepoint)));
        }
        let (i, j) = self.nearest(self.basepoint);
        if (self.point(i, j) - self.basepoint).norm() > 1e-9 * (1.0 + self.hx().max(self.hy())) {
            return Err(Error::Domain(format!("basepoint {} is not a grid node", self.basepoint)));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.re_range[1] - self.re_range[0]) / (self.nx - 1) as f64
    }
    pub fn hy(&self) -> f64 {
        (self.im_range[1] - self.im_range[0]) / (self.ny - 1) as f64
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }
    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re_range[0] + i as f64 * self.hx(), self.im_range[0] + j as f64 * self.hy())
    }
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_range[0] && z.re <= self.re_range[1] && z.im >= self.im_range[0] && z.im <= self.im_range[1]
    }
    pub fn nearest(&self, z: C64) -> (usize, usize) {
        let i = ((z.re - self.re_range[0]) / self.hx()).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((z.im - self.im_range[0]) / self.hy()).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
    pub fn base_node(&self) -> (usize, usize) {
        self.nearest(self.basepoint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathOrder {
    /// Horizontal spine through the basepoint, then vertical columns.
    SpineColumns,
    /// Vertical column through the basepoint, then horizontal rows.
    ColumnsSpine,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub n: usize,
    /// Local error tolerance per step (relative to the l1 size of C).
    pub tol: f64,
    pub order: PathOrder,
    /// Truncated coefficients are weighted by r^|m| in the ledger (r = e^{q/2}).
    pub ledger_weight: f64,
    pub max_halvings: u32,
}

impl IntegrateOptions {
    pub fn new(n: usize, tol: f64) -> Self {
        IntegrateOptions { n, tol, order: PathOrder::SpineColumns, ledger_weight: 1.0, max_halvings: 24 }
    }
}

#[derive(Clone, Debug)]
pub struct CField {
    pub c: Vec<MatrixLoop>,
    /// |det C − 1| as the unimodular defect of the loop.
    pub det_drift: Vec<f64>,
    /// Weighted mass discarded by truncation along the path to each node.
    pub ledger: Vec<f64>,
    pub path_length: Vec<f64>,
}

fn weighted_tail(l: &MatrixLoop, lo: i32, hi: i32, r: f64) -> f64 {
    let mut s = 0.0;
    for (k, c) in l.coeffs().iter().enumerate() {
        let m = l.lo() + k as i32;
        if m < lo || m > hi {
            s += c.norm() * r.powi(m.abs());
        }
    }
    s
}

struct Stepper<'a> {
    p: &'a PotentialSpec,
    n: i32,
    tol: f64,
    r: f64,
    max_halvings: u32,
}

impl Stepper<'_> {
    fn rk4(&self, c: &MatrixLoop, e0: &MatrixLoop, em: &MatrixLoop, e1: &MatrixLoop) -> MatrixLoop {
        let half = C64::new(0.5, 0.0);
        let k1 = c.mul(e0);
        let k2 = c.axpy(half, &k1).mul(em);
        let k3 = c.axpy(half, &k2).mul(em);
        let k4 = c.add(&k3).mul(e1);
        let inc = k1.add(&k2.scale(C64::new(2.0, 0.0))).add(&k3.scale(C64::new(2.0, 0.0))).add(&k4);
        c.axpy(C64::new(1.0 / 6.0, 0.0), &inc)
    }

    fn eta(&self, z: C64, dz: C64) -> Result<MatrixLoop> {
        Ok(self.p.eval(z)?.scale(dz))
    }

    /// Advances C from z0 to z0 + dz, bisecting the segment while the Richardson
    /// estimate exceeds tolerance.
    fn advance(&self, c: &MatrixLoop, z0: C64, dz: C64, depth: u32, ledger: &mut f64) -> Result<MatrixLoop> {
        let q = dz * 0.25;
        let e: Vec<MatrixLoop> = (0..5).map(|k| self.eta(z0 + q * k as f64, dz)).collect::<Result<_>>()?;
        let half = C64::new(0.5, 0.0);
        let full = self.rk4(c, &e[0], &e[2], &e[4]);
        let h: Vec<MatrixLoop> = e.iter().map(|x| x.scale(half)).collect();
        let mid = self.rk4(c, &h[0], &h[1], &h[2]);
        let two = self.rk4(&mid, &h[2], &h[3], &h[4]);
        let err = two.l1_distance(&full) / 15.0;
        if err <= self.tol * two.l1_norm().max(1.0) {
            *ledger += weighted_tail(&two, -self.n, self.n, self.r);
            return Ok(two.truncate(-self.n, self.n).0);
        }
        if depth >= self.max_halvings {
            return Err(Error::Step(format!("{}", z0)));
        }
        let dh = dz * 0.5;
        let c1 = self.advance(c, z0, dh, depth + 1, ledger)?;
        self.advance(&c1, z0 + dh, dh, depth + 1, ledger)
    }

    fn segment(&self, c: &MatrixLoop, z0: C64, z1: C64, ledger: &mut f64) -> Result<MatrixLoop> {
        let dz = z1 - z0;
        for pole in &self.p.declared_poles {
            let t = (((pole - z0) * dz.conj()).re / dz.norm_sqr()).clamp(0.0, 1.0);
            if (z0 + dz * t - pole).norm() < 1e-9 {
                return Err(Error::Pole(format!("integration path from {z0} to {z1} touches the declared pole {pole}")));
            }
        }
        self.advance(c, z0, dz, 0, ledger)
    }
}

/// C with dC = Cη along a path tree rooted at the basepoint, C(basepoint) = Id.
pub fn integrate_frame(p: &PotentialSpec, grid: &DomainGrid, n: usize, tol: f64) -> Result<CField> {
    integrate_frame_with(p, grid, &IntegrateOptions::new(n, tol))
}

pub fn integrate_frame_with(p: &PotentialSpec, grid: &DomainGrid, opts: &IntegrateOptions) -> Result<CField> {
    grid.check()?;
    let st = Stepper { p, n: opts.n as i32, tol: opts.tol, r: opts.ledger_weight, max_halvings: opts.max_halvings };
    let total = grid.len();
    let mut c: Vec<Option<MatrixLoop>> = vec![None; total];
    let mut ledger = vec![0.0; total];
    let mut length = vec![0.0; total];
    let (i0, j0) = grid.base_node();
    let base = grid.index(i0, j0);
    c[base] = Some(MatrixLoop::identity());

    // Visits (from, to) pairs in an order where `from` is always done already.
    let mut edges: Vec<((usize, usize), (usize, usize))> = Vec::with_capacity(total);
    let line = |edges: &mut Vec<_>, start: (usize, usize), horizontal: bool| {
        let (len, s) = if horizontal { (grid.nx, start.0) } else { (grid.ny, start.1) };
        let at = |k: usize| if horizontal { (k, start.1) } else { (start.0, k) };
        for k in s + 1..len {
            edges.push((at(k - 1), at(k)));
        }
        for k in (0..s).rev() {
            edges.push((at(k + 1), at(k)));
        }
    };
    match opts.order {
        PathOrder::SpineColumns => {
            line(&mut edges, (i0, j0), true);
            for i in 0..grid.nx {
                line(&mut edges, (i, j0), false);
            }
        }
        PathOrder::ColumnsSpine => {
            line(&mut edges, (i0, j0), false);
            for j in 0..grid.ny {
                line(&mut edges, (i0, j), true);
            }
        }
    }
    for ((fi, fj), (ti, tj)) in edges {
        let from = grid.index(fi, fj);
        let to = grid.index(ti, tj);
        let z0 = grid.point(fi, fj);
        let z1 = grid.point(ti, tj);
        let mut l = ledger[from];
        let cf = c[from].as_ref().expect("path tree visits parents first");
        let next = st.segment(cf, z0, z1, &mut l)?;
        c[to] = Some(next);
        ledger[to] = l;
        length[to] = length[from] + (z1 - z0).norm();
    }
    let c: Vec<MatrixLoop> = c.into_iter().map(|x| x.expect("every node reached")).collect();
    let det_drift = c.iter().map(|l| l.unimodular_defect()).collect();
    Ok(CField { c, det_drift, ledger, path_length: length })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeCell {
    #[serde(rename = "CELL_ID")]
    Id,
    #[serde(rename = "CELL_OMEGA0")]
    Omega0,
    #[serde(rename = "SINGULAR")]
    Singular,
}

impl NodeCell {
    pub fn name(&self) -> &'static str {
        match self {
            NodeCell::Id => "CELL_ID",
            NodeCell::Omega0 => "CELL_OMEGA0",
            NodeCell::Singular => "SINGULAR",
        }
    }
    pub fn code(&self) -> i32 {
        match self {
            NodeCell::Id => 0,
            NodeCell::Omega0 => 1,
            NodeCell::Singular => -1,
        }
    }
    pub fn cell(&self) -> Option<Cell> {
        match self {
            NodeCell::Id => Some(Cell::Id),
            NodeCell::Omega0 => Some(Cell::Omega0),
            NodeCell::Singular => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: DomainGrid,
    pub regime: Regime,
    pub q: f64,
    pub n: usize,
    pub c: Vec<MatrixLoop>,
    /// None at SINGULAR nodes.
    pub frame: Vec<Option<MatrixLoop>>,
    pub plus: Vec<Option<MatrixLoop>>,
    pub cell: Vec<NodeCell>,
    /// NaN at SINGULAR nodes.
    pub k0: Vec<f64>,
    /// Estimated change of the Sym output f from truncating at N.
    pub truncation_ledger: Vec<f64>,
    /// Reconstruction residual of C = frame·cell·plus.
    pub residual: Vec<f64>,
    /// Distance of the frame from its real form.
    pub reality: Vec<f64>,
    pub det_drift: Vec<f64>,
    /// Error code that made a node SINGULAR.
    pub singular_reason: Vec<Option<&'static str>>,
}

impl FrameField {
    pub fn singular_fraction(&self) -> f64 {
        self.cell.iter().filter(|c| **c == NodeCell::Singular).count() as f64 / self.cell.len().max(1) as f64
    }
    pub fn count(&self, cell: NodeCell) -> usize {
        self.cell.iter().filter(|c| **c == cell).count()
    }
    pub fn frame_at(&self, i: usize, j: usize) -> Option<&MatrixLoop> {
        self.frame[self.grid.index(i, j)].as_ref()
    }
}

/// Per-node Iwasawa splitting of C: τ₃ for H > 1, τ₄ (two cells) for H < 1.
/// Nodes where the splitting fails are marked SINGULAR.
pub fn build_frames(cf: CField, grid: &DomainGrid, regime: Regime, q: f64, opts: &FactorOptions) -> FrameField {
    let total = cf.c.len();
    let mut frame = Vec::with_capacity(total);
    let mut plus = Vec::with_capacity(total);
    let mut cell = Vec::with_capacity(total);
    let mut k0 = Vec::with_capacity(total);
    let mut residual = Vec::with_capacity(total);
    let mut reality = Vec::with_capacity(total);
    let mut reason = Vec::with_capacity(total);
    let mut ledger = cf.ledger.clone();
    let r = (q / 2.0).exp();
    for (idx, c) in cf.c.iter().enumerate() {
        let res = match regime {
            Regime::HGreater1 => iwasawa_tau3(c, opts),
            Regime::HLess1 => iwasawa_tau4(c, opts),
        };
        match res {
            Ok(w) => {
                // first-order effect on f = ΦD₀Φ† at |ν| = e^{−q/2}
                let amp = 2.0 * w.frame.eval_nonzero(C64::new(1.0 / r, 0.0)).norm() * r;
                ledger[idx] = amp * (ledger[idx] + w.diag.frame_tail * r.powi(opts.n as i32 + 1));
                cell.push(match w.cell {
                    Cell::Id => NodeCell::Id,
                    Cell::Omega0 => NodeCell::Omega0,
                });
                k0.push(w.k0);
                residual.push(w.diag.reconstruction);
                reality.push(w.diag.reality);
                frame.push(Some(w.frame));
                plus.push(Some(w.plus));
                reason.push(None);
            }
            Err(e) => {
                cell.push(NodeCell::Singular);
                k0.push(f64::NAN);
                residual.push(f64::NAN);
                reality.push(f64::NAN);
                frame.push(None);
                plus.push(None);
                reason.push(Some(e.code()));
            }
        }
    }
    FrameField {
        grid: grid.clone(),
        regime,
        q,
        n: opts.n,
        c: cf.c,
        frame,
        plus,
        cell,
        k0,
        truncation_ledger: ledger,
        residual,
        reality,
        det_drift: cf.det_drift,
        singular_reason: reason,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    /// Cell on the left of the direction of travel (k₀ > 0 side).
    pub left: NodeCell,
    pub right: NodeCell,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

/// Zero contour of k₀ by marching squares. SINGULAR nodes count as k₀ = 0,
/// which is where the τ₄ splitting degenerates.
pub fn detect_singular_set(field: &FrameField) -> Vec<Polyline> {
    if field.regime != Regime::HLess1 {
        return Vec::new();
    }
    let g = &field.grid;
    let val = |i: usize, j: usize| {
        let v = field.k0[g.index(i, j)];
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    let pos = |i: usize, j: usize| -> [f64; 2] {
        let z = g.point(i, j);
        [z.re, z.im]
    };
    let crossing = |e: EdgeKey| -> [f64; 2] {
        let (a, b) = match e {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
        let t = if va == vb { 0.5 } else { (va / (va - vb)).clamp(0.0, 1.0) };
        let (pa, pb) = (pos(a.0, a.1), pos(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };
    // Directed segments with the positive region on the left.
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let edges = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let p: Vec<bool> = corners.iter().map(|&(a, b)| val(a, b) > 0.0).collect();
            let center_pos = corners.iter().map(|&(a, b)| val(a, b)).sum::<f64>() > 0.0;
            // Edge k joins corner k and k+1. Walking the boundary counterclockwise,
            // an entry edge goes from negative to positive.
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for k in 0..4 {
                let (a, b) = (p[k], p[(k + 1) % 4]);
                if !a && b {
                    ins.push(k);
                } else if a && !b {
                    outs.push(k);
                }
            }
            // A segment from an exit edge to an entry edge has the positive side on its left.
            match outs.len() {
                0 => {}
                1 => segs.push((edges[outs[0]], edges[ins[0]])),
                _ => {
                    // saddle: pair each exit with the entry that keeps the center's sign connected
                    let (o0, o1) = (outs[0], outs[1]);
                    let next_in = |o: usize| *ins.iter().min_by_key(|&&x| (x + 4 - o) % 4).unwrap();
                    let prev_in = |o: usize| *ins.iter().min_by_key(|&&x| (o + 4 - x) % 4).unwrap();
                    if center_pos {
                        segs.push((edges[o0], edges[next_in(o0)]));
                        segs.push((edges[o1], edges[next_in(o1)]));
                    } else {
                        segs.push((edges[o0], edges[prev_in(o0)]));
                        segs.push((edges[o1], edges[prev_in(o1)]));
                    }
                }
            }
        }
    }
    let mut by_start: HashMap<EdgeKey, usize> = HashMap::new();
    let mut by_end: HashMap<EdgeKey, usize> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        by_start.insert(s.0, k);
        by_end.insert(s.1, k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    for k in 0..segs.len() {
        if used[k] {
            continue;
        }
        // walk backwards to the chain start (or around a loop)
        let mut start = k;
        loop {
            match by_end.get(&segs[start].0) {
                Some(&prev) if !used[prev] && prev != k => start = prev,
                _ => break,
            }
        }
        let mut pts = vec![crossing(segs[start].0)];
        let mut cur = start;
        let mut closed = false;
        loop {
            used[cur] = true;
            pts.push(crossing(segs[cur].1));
            match by_start.get(&segs[cur].1) {
                Some(&nx) if nx == start => {
                    closed = true;
                    break;
                }
                Some(&nx) if !used[nx] => cur = nx,
                _ => break,
            }
        }
        if closed {
            pts.pop();
        }
        out.push(Polyline { points: pts, closed, left: NodeCell::Id, right: NodeCell::Omega0 });
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPotential {
    /// ξ₋₁ with ξ = λ^{-1} ξ₋₁ dz.
    pub xi: Matrix2,
    /// l1 norm of ∂_z̄ Φ₋ by central differences.
    pub dbar_residual: f64,
    /// l1 mass of Φ₋^{-1}∂_zΦ₋ away from power −1.
    pub off_power: f64,
}

fn minus_factor(field: &FrameField, i: usize, j: usize) -> Result<MatrixLoop> {
    let g = &field.grid;
    let f = field.frame[g.index(i, j)].as_ref().ok_or(Error::NotBigCell { rcond: 0.0 })?;
    let opts = FactorOptions::new(field.n + 1);
    Ok(birkhoff_left(f, &opts)?.minus)
}

/// Left Birkhoff frame = Φ₋Φ₊ around a node and ξ = Φ₋^{-1}∂_zΦ₋ by central differences.
pub fn normalized_potential(field: &FrameField, i: usize, j: usize) -> Result<NormalizedPotential> {
    let g = &field.grid;
    if i == 0 || j == 0 || i + 1 >= g.nx || j + 1 >= g.ny {
        return Err(Error::Domain("normalized potential needs an interior node".into()));
    }
    let m0 = minus_factor(field, i, j)?;
    let mxp = minus_factor(field, i + 1, j)?;
    let mxm = minus_factor(field, i - 1, j)?;
    let myp = minus_factor(field, i, j + 1)?;
    let mym = minus_factor(field, i, j - 1)?;
    let dx = mxp.sub(&mxm).scale(C64::new(0.5 / g.hx(), 0.0));
    let dy = myp.sub(&mym).scale(C64::new(0.5 / g.hy(), 0.0));
    let half = C64::new(0.5, 0.0);
    let dz = dx.axpy(-C64::i(), &dy).scale(half);
    let dzb = dx.axpy(C64::i(), &dy).scale(half);
    let inv = m0.adjugate();
    let xi = inv.mul(&dz);
    let mut off = 0.0;
    for (k, c) in xi.coeffs().iter().enumerate() {
        if xi.lo() + k as i32 != -1 {
            off += c.norm();
        }
    }
    Ok(NormalizedPotential { xi: xi.coeff(-1), dbar_residual: dzb.l1_norm(), off_power: off })
}

/// The unit loop used as a stand-in for η = 0 checks.
pub fn is_identity_field(field: &FrameField, tol: f64) -> bool {
    let id = MatrixLoop::identity();
    field.frame.iter().all(|f| f.as_ref().map(|f| f.l1_distance(&id) <= tol).unwrap_or(false))
        && field.c.iter().all(|c| c.l1_distance(&id) <= tol)
}
