//! Dense complex LU with partial pivoting and a 1-norm condition estimate.

use num_complex::Complex64 as C64;

use crate::loopcore::{ONE, ZERO};

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    pub n: usize,
    pub a: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, a: vec![ZERO; n * n] }
    }
    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.a[r * self.n + c]
    }
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.a[r * self.n + c] = v;
    }
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|c| (0..self.n).map(|r| self.at(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    piv: Vec<usize>,
    anorm: f64,
}

impl Lu {
    /// Returns None when an exact zero pivot is met.
    pub fn factor(m: &DenseMatrix) -> Option<Lu> {
        let n = m.n;
        let anorm = m.norm1();
        let mut a = m.a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm();
            for r in k + 1..n {
                let v = a[r * n + k].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let inv = a[k * n + k].inv();
            for r in k + 1..n {
                let f = a[r * n + k] * inv;
                a[r * n + k] = f;
                if f == ZERO {
                    continue;
                }
                for c in k + 1..n {
                    let t = a[k * n + c];
                    a[r * n + c] -= f * t;
                }
            }
        }
        Some(Lu { n, lu: a, piv, anorm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.piv.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }

    /// Solves A^H x = b.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        // A = P^T L U, so A^H = U^H L^H P.
        let mut y = b.to_vec();
        for r in 0..n {
            let mut s = y[r];
            for c in 0..r {
                s -= self.lu[c * n + r].conj() * y[c];
            }
            y[r] = s / self.lu[r * n + r].conj();
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.lu[c * n + r].conj() * y[c];
            }
            y[r] = s;
        }
        let mut x = vec![ZERO; n];
        for (k, &p) in self.piv.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    /// Reciprocal 1-norm condition number, with ||A^-1||_1 from the Hager-Higham estimator.
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 || self.anorm == 0.0 {
            return 0.0;
        }
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            let ynorm: f64 = y.iter().map(|v| v.norm()).sum();
            if !ynorm.is_finite() {
                return 0.0;
            }
            if ynorm <= est {
                break;
            }
            est = ynorm;
            let xi: Vec<C64> = y.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { ONE }).collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(k, v)| (k, v.norm()))
                .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![ZERO; n];
            x[j] = ONE;
        }
        // Higham's alternative lower bound guards against the classic failure cases.
        let alt: Vec<C64> = (0..n)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(s * (1.0 + k as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        let inv_norm = est.max(alt_est);
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (self.anorm * inv_norm)
    }
}
