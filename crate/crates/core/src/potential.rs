//! Holomorphic potentials η = Σ_{j≥−1} λ^j η_j(z) dz and the built-in catalog.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, BinOp, HoloExpr};
use crate::frameflow::DomainGrid;
use crate::loopcore::{Matrix2, MatrixLoop, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "H_GREATER_1")]
    HGreater1,
    #[serde(rename = "H_LESS_1")]
    HLess1,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::HGreater1 => "H_GREATER_1",
            Regime::HLess1 => "H_LESS_1",
        }
    }
    /// Mean curvature of the surfaces produced with parameter q.
    pub fn mean_curvature(&self, q: f64) -> f64 {
        match self {
            Regime::HLess1 => q.tanh(),
            Regime::HGreater1 => 1.0 / q.tanh(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeHint {
    #[serde(rename = "H_GREATER_1")]
    HGreater1,
    #[serde(rename = "H_LESS_1")]
    HLess1,
    #[serde(rename = "EITHER")]
    Either,
}

/// Entry key: (row, col, λ-power), rows and columns 1-based.
pub type EntryKey = (u8, u8, i32);

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub entries: BTreeMap<EntryKey, HoloExpr>,
    pub declared_poles: Vec<C64>,
    pub regime_hint: RegimeHint,
}

const POLE_RADIUS: f64 = 1e-12;

impl PotentialSpec {
    pub fn new(regime_hint: RegimeHint) -> Self {
        PotentialSpec { entries: BTreeMap::new(), declared_poles: Vec::new(), regime_hint }
    }

    pub fn with(mut self, row: u8, col: u8, power: i32, e: HoloExpr) -> Self {
        self.entries.insert((row, col, power), e);
        self
    }

    /// Builds a spec from expression strings keyed by (row, col, power).
    pub fn from_strings(entries: &[(EntryKey, &str)], poles: Vec<C64>, hint: RegimeHint) -> Result<Self> {
        let mut p = PotentialSpec::new(hint);
        for (k, s) in entries {
            p.entries.insert(*k, parse_expr(s)?);
        }
        p.declared_poles = poles;
        Ok(p)
    }

    pub fn min_power(&self) -> i32 {
        self.entries.keys().map(|k| k.2).min().unwrap_or(0)
    }
    pub fn max_power(&self) -> i32 {
        self.entries.keys().map(|k| k.2).max().unwrap_or(0)
    }

    pub fn near_pole(&self, z: C64) -> Option<C64> {
        self.declared_poles.iter().copied().find(|p| (z - p).norm() < POLE_RADIUS)
    }

    /// η(z) as a Laurent loop in λ. Entries that break the twisting layout are
    /// kept so that validation can see them; the loop is flagged untwisted then.
    pub fn eval(&self, z: C64) -> Result<MatrixLoop> {
        if let Some(p) = self.near_pole(z) {
            return Err(Error::Pole(format!("z = {z} is the declared pole {p}")));
        }
        if self.entries.is_empty() {
            return Ok(MatrixLoop::zero());
        }
        let lo = self.min_power();
        let hi = self.max_power();
        let mut coeffs = vec![Matrix2::zero(); (hi - lo + 1) as usize];
        let mut twisted = true;
        for (&(r, c, m), e) in &self.entries {
            if !(1..=2).contains(&r) || !(1..=2).contains(&c) {
                return Err(Error::Domain(format!("entry ({r},{c}) out of range")));
            }
            let v = e.eval(z)?;
            if !v.is_finite() {
                return Err(Error::Pole(format!("entry ({r},{c},{m}) is not finite at z = {z}")));
            }
            let slot = &mut coeffs[(m - lo) as usize];
            slot.set((r - 1) as usize, (c - 1) as usize, slot.get((r - 1) as usize, (c - 1) as usize) + v);
            if (m.rem_euclid(2) == 0) != (r == c) {
                twisted = false;
            }
        }
        Ok(MatrixLoop::from_parts(lo, coeffs, twisted))
    }

    /// Twisting layout of the declared entries, independent of z.
    pub fn layout_violations(&self) -> Vec<EntryKey> {
        self.entries.keys().copied().filter(|&(r, c, m)| (m.rem_euclid(2) == 0) != (r == c)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationIssue {
    pub check: &'static str,
    pub detail: String,
    pub location: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self.issues.iter().map(|i| i.check).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

const MAX_ISSUES_PER_CHECK: usize = 20;

/// Checks twisting, trace-freeness, the immersion condition (λ^{-1} upper-right
/// entry nonvanishing) and that no declared pole lies in the grid rectangle.
pub fn validate_potential(p: &PotentialSpec, grid: &DomainGrid) -> ValidationReport {
    let mut issues = Vec::new();
    for (r, c, m) in p.layout_violations() {
        issues.push(ValidationIssue {
            check: "twisting",
            detail: format!("entry ({r},{c}) at power {m} breaks the twisting layout"),
            location: None,
        });
    }
    for &(r, c, m) in p.entries.keys() {
        if m < -1 {
            issues.push(ValidationIssue { check: "powers", detail: format!("entry ({r},{c}) has power {m} < -1"), location: None });
        }
        if !(1..=2).contains(&r) || !(1..=2).contains(&c) {
            issues.push(ValidationIssue { check: "powers", detail: format!("entry ({r},{c}) out of range"), location: None });
        }
    }
    for pole in &p.declared_poles {
        if grid.contains(*pole) {
            issues.push(ValidationIssue {
                check: "pole",
                detail: format!("declared pole {pole} lies inside the domain"),
                location: Some([pole.re, pole.im]),
            });
        }
    }
    let upper = p.entries.get(&(1, 2, -1));
    let (mut trace_bad, mut imm_bad, mut eval_bad) = (0, 0, 0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.point(i, j);
            if p.near_pole(z).is_some() {
                continue;
            }
            let loc = Some([z.re, z.im]);
            let mut powers: Vec<i32> = p.entries.keys().filter(|k| k.0 == k.1).map(|k| k.2).collect();
            powers.sort_unstable();
            powers.dedup();
            for m in powers {
                let a = p.entries.get(&(1, 1, m)).map(|e| e.eval(z)).unwrap_or(Ok(ZERO));
                let d = p.entries.get(&(2, 2, m)).map(|e| e.eval(z)).unwrap_or(Ok(ZERO));
                if let (Ok(a), Ok(d)) = (a, d) {
                    if (a + d).norm() > 1e-12 * (1.0 + a.norm() + d.norm()) && trace_bad < MAX_ISSUES_PER_CHECK {
                        trace_bad += 1;
                        issues.push(ValidationIssue { check: "trace", detail: format!("trace {} at power {m}", a + d), location: loc });
                    }
                }
            }
            let v = match upper {
                None => Ok(ZERO),
                Some(e) => e.eval(z),
            };
            match v {
                Ok(v) if v.norm() > 1e-12 && v.is_finite() => {}
                Ok(v) => {
                    if imm_bad < MAX_ISSUES_PER_CHECK {
                        issues.push(ValidationIssue {
                            check: "immersion",
                            detail: format!("lambda^-1 upper-right entry is {v}"),
                            location: loc,
                        });
                    }
                    imm_bad += 1;
                }
                Err(e) => {
                    if eval_bad < MAX_ISSUES_PER_CHECK {
                        issues.push(ValidationIssue { check: "evaluation", detail: e.to_string(), location: loc });
                    }
                    eval_bad += 1;
                }
            }
        }
    }
    ValidationReport { passed: issues.is_empty(), issues }
}

fn num(v: f64) -> HoloExpr {
    HoloExpr::real(v)
}

/// η = λ^{-1} E₁₂ dz.
pub fn builtin_umbilic() -> PotentialSpec {
    PotentialSpec::new(RegimeHint::Either).with(1, 2, -1, num(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RootChoice {
    #[default]
    Larger,
    Other,
}

/// Real roots of b² + ab(e^q − e^{−q}) − (a² + 1/4) = 0, larger first.
pub fn revolution_b_roots(a: f64, q: f64) -> Result<(f64, f64)> {
    let s = a * q.sinh();
    let disc = s * s + a * a + 0.25;
    if disc < 0.0 || !disc.is_finite() {
        return Err(Error::NoRealRoot(disc));
    }
    let r = disc.sqrt();
    // the root without cancellation first, the other from the product of roots
    let c = -(a * a + 0.25);
    let (big, small) = if s >= 0.0 {
        let b1 = -s - r;
        (c / b1, b1)
    } else {
        let b1 = -s + r;
        (b1, c / b1)
    };
    Ok(if big >= small { (big, small) } else { (small, big) })
}

pub fn revolution_constraint(a: f64, b: f64, q: f64) -> f64 {
    b * b - a * a + a * b * (q.exp() - (-q).exp()) - 0.25
}

/// Constant potential with entries λ^{-1}a + λb and λ^{-1}b − λa.
pub fn builtin_revolution(a: f64, q: f64, root: RootChoice) -> Result<(PotentialSpec, f64)> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Constraint("revolution potential needs a != 0".into()));
    }
    let (b1, b2) = revolution_b_roots(a, q)?;
    let b = match root {
        RootChoice::Larger => b1,
        RootChoice::Other => b2,
    };
    let p = PotentialSpec::new(RegimeHint::HLess1)
        .with(1, 2, -1, num(a))
        .with(1, 2, 1, num(b))
        .with(2, 1, -1, num(b))
        .with(2, 1, 1, num(-a));
    Ok((p, b))
}

/// η = [[0, λ^{-1}], [z^k λ^{-1}, 0]] dz.
pub fn builtin_radial(k: u32) -> Result<PotentialSpec> {
    if k == 0 {
        return Err(Error::Constraint("radial potential needs k >= 1".into()));
    }
    let zk = HoloExpr::bin(BinOp::Pow, HoloExpr::Z, num(k as f64));
    Ok(PotentialSpec::new(RegimeHint::Either).with(1, 2, -1, num(1.0)).with(2, 1, -1, zk))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosingDiagnostic {
    pub period: f64,
    pub integral: [f64; 2],
    pub closes: bool,
}

const CLOSING_SAMPLES: usize = 1024;
const CLOSING_TOL: f64 = 1e-9;

/// ∫₀^p h(t) dt by the trapezoidal rule, which is spectrally accurate for periodic h.
pub fn period_integral(h: &HoloExpr, p: f64) -> Result<C64> {
    let n = CLOSING_SAMPLES;
    let step = p / n as f64;
    let mut s = ZERO;
    for k in 0..n {
        s += h.eval(C64::new(k as f64 * step, 0.0))?;
    }
    Ok(s * step)
}

/// Entries (aλ^{-1} + bλ)h(z) and (−bλ^{-1} + aλ)·conj(h(conj z)) with b = a e^{-q}.
pub fn builtin_cylinder(h: &HoloExpr, p: f64, a: f64, q: f64) -> Result<(PotentialSpec, ClosingDiagnostic)> {
    if p == 0.0 || !p.is_finite() {
        return Err(Error::Constraint("cylinder period must be a nonzero real".into()));
    }
    let b = a * (-q).exp();
    let hr = h.conj_reflect();
    let times = |c: f64, e: &HoloExpr| HoloExpr::bin(BinOp::Mul, num(c), e.clone());
    let spec = PotentialSpec::new(RegimeHint::HLess1)
        .with(1, 2, -1, times(a, h))
        .with(1, 2, 1, times(b, h))
        .with(2, 1, -1, times(-b, &hr))
        .with(2, 1, 1, times(a, &hr));
    let integral = period_integral(h, p)?;
    let scale = 1.0 + p.abs();
    let closing = ClosingDiagnostic { period: p, integral: [integral.re, integral.im], closes: integral.norm() <= CLOSING_TOL * scale };
    Ok((spec, closing))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrinoidDiagnostic {
    /// b² − a² equals the square of an integer.
    pub square_violation: bool,
    /// Sample angles (radians) where |−1 + 4 sin²(πX)| fell below tolerance.
    pub condition_violations: Vec<f64>,
    pub min_condition: f64,
}

pub const TRINOID_SAMPLES: usize = 256;
const TRINOID_TOL: f64 = 1e-8;

/// −1 + 4 sin²(πX) with X² = b² − a² + ab(λ^{-2} − λ²).
pub fn trinoid_condition(a: f64, b: f64, lambda: C64) -> C64 {
    let x2 = C64::new(b * b - a * a, 0.0) + (lambda.powi(-2) - lambda.powi(2)) * (a * b);
    let s = (x2.sqrt() * PI).sin();
    s * s * 4.0 - 1.0
}

/// The three-term potential with poles at 0 and 1, λX² expanded into Laurent terms.
pub fn builtin_trinoid(a: f64, b: f64, q: f64) -> Result<(PotentialSpec, TrinoidDiagnostic)> {
    let defect = revolution_constraint(a, b, q);
    if defect.abs() > 1e-12 || !defect.is_finite() {
        return Err(Error::Constraint(format!("b^2 - a^2 + ab(e^q - e^-q) - 1/4 = {defect:e}")));
    }
    // w = −1/z + 1/(z−1)
    let w = HoloExpr::bin(
        BinOp::Add,
        HoloExpr::negate(HoloExpr::bin(BinOp::Div, num(1.0), HoloExpr::Z)),
        HoloExpr::bin(BinOp::Div, num(1.0), HoloExpr::bin(BinOp::Sub, HoloExpr::Z, num(1.0))),
    );
    let lin = |c0: f64, c1: f64| {
        // c0·w + c1
        HoloExpr::bin(BinOp::Add, HoloExpr::bin(BinOp::Mul, num(c0), w.clone()), num(c1))
    };
    let ab = a * b;
    let d = b * b - a * a;
    let spec = PotentialSpec {
        entries: BTreeMap::from([
            ((1, 2, -1), w.clone()),
            ((2, 1, -1), lin(ab, ab)),
            ((2, 1, 1), lin(d, d - 0.25)),
            ((2, 1, 3), lin(-ab, -ab)),
        ]),
        declared_poles: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        regime_hint: RegimeHint::HLess1,
    };
    let square_violation = d >= -1e-12 && {
        let r = d.max(0.0).sqrt().round();
        (r * r - d).abs() < 1e-12
    };
    let mut condition_violations = Vec::new();
    let mut min_condition = f64::INFINITY;
    for k in 0..TRINOID_SAMPLES {
        let t = 2.0 * PI * k as f64 / TRINOID_SAMPLES as f64;
        let g = trinoid_condition(a, b, C64::from_polar(1.0, t)).norm();
        min_condition = min_condition.min(g);
        if g < TRINOID_TOL {
            condition_violations.push(t);
        }
    }
    Ok((spec, TrinoidDiagnostic { square_violation, condition_violations, min_condition }))
}
