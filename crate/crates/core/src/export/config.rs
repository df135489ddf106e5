//! The run configuration file (TOML).
//!
//! ```toml
//! schema = 1
//!
//! [surface]
//! regime = "H_LESS_1"        # or "H_GREATER_1"
//! q = 0.3
//! theta = 0.0
//! truncation = 24
//! fd_order = "second"        # or "fourth"
//!
//! [surface.tolerances]
//! integrate = 1e-12
//! membership = 1e-9
//!
//! [domain]
//! re = [-1.0, 1.0]
//! im = [0.0, 6.283185307179586]
//! nx = 201
//! ny = 201
//! basepoint = [0.0, 0.0]
//!
//! [potential]
//! kind = "revolution"        # umbilic | revolution | radial | cylinder | trinoid | custom
//! a = 0.3
//!
//! [output]
//! mesh = "surface.ply"
//! format = "ply"             # or "obj"
//! model = "poincare_ball"    # or "upper_half_space", "minkowski"
//! report = "report.json"
//! singular_curves = "s0.json"
//! timings = false
//! ```
//!
//! A custom potential lists its entries as `[[potential.entries]]` tables with
//! `row`, `col`, `power` and `expr`, plus optional `poles = [[re, im], ...]`.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::factorize::FactorOptions;
use crate::frameflow::DomainGrid;
use crate::geometry::FdOrder;
use crate::potential::{
    builtin_cylinder, builtin_radial, builtin_revolution, builtin_trinoid, builtin_umbilic, revolution_b_roots, ClosingDiagnostic,
    PotentialSpec, Regime, RegimeHint, RootChoice, TrinoidDiagnostic,
};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub surface: SurfaceConfig,
    pub domain: DomainConfig,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub regime: Regime,
    pub q: f64,
    #[serde(default)]
    pub theta: f64,
    pub truncation: usize,
    #[serde(default)]
    pub fd_order: FdOrderName,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdOrderName {
    #[default]
    Second,
    Fourth,
}

impl FdOrderName {
    pub fn order(&self) -> FdOrder {
        match self {
            FdOrderName::Second => FdOrder::Second,
            FdOrderName::Fourth => FdOrder::Fourth,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Local RK4 error per step.
    #[serde(default = "default_integrate")]
    pub integrate: f64,
    /// det/trace/pairing tolerance for Sym outputs.
    #[serde(default = "default_membership")]
    pub membership: f64,
    /// Reciprocal condition number below which a node is outside the big cell.
    #[serde(default = "default_rcond")]
    pub rcond: f64,
}

fn default_integrate() -> f64 {
    1e-12
}
fn default_membership() -> f64 {
    1e-9
}
fn default_rcond() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { integrate: default_integrate(), membership: default_membership(), rcond: default_rcond() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub basepoint: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Umbilic,
    Revolution {
        a: f64,
        #[serde(default)]
        root: RootChoice,
    },
    Radial {
        k: u32,
    },
    Cylinder {
        h: String,
        period: f64,
        a: f64,
    },
    /// b is solved from the same constraint as the revolution family.
    Trinoid {
        a: f64,
        #[serde(default)]
        root: RootChoice,
    },
    Custom {
        entries: Vec<EntryConfig>,
        #[serde(default)]
        poles: Vec<[f64; 2]>,
        #[serde(default = "default_hint")]
        hint: RegimeHint,
    },
}

fn default_hint() -> RegimeHint {
    RegimeHint::Either
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub row: u8,
    pub col: u8,
    pub power: i32,
    pub expr: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    #[default]
    Ply,
    Obj,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    PoincareBall,
    UpperHalfSpace,
    Minkowski,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(default)]
    pub format: MeshFormat,
    #[serde(default)]
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_curves: Option<String>,
    /// Wall-clock timings in the report. Off by default so reports are reproducible.
    #[serde(default)]
    pub timings: bool,
}

/// Parameters derived while building a potential.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PotentialInfo {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closing: Option<ClosingDiagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trinoid: Option<TrinoidDiagnostic>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl PotentialConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            PotentialConfig::Umbilic => "umbilic",
            PotentialConfig::Revolution { .. } => "revolution",
            PotentialConfig::Radial { .. } => "radial",
            PotentialConfig::Cylinder { .. } => "cylinder",
            PotentialConfig::Trinoid { .. } => "trinoid",
            PotentialConfig::Custom { .. } => "custom",
        }
    }

    pub fn build(&self, q: f64) -> Result<(PotentialSpec, PotentialInfo)> {
        let mut info = PotentialInfo { kind: self.kind().to_string(), ..Default::default() };
        let spec = match self {
            PotentialConfig::Umbilic => builtin_umbilic(),
            PotentialConfig::Revolution { a, root } => {
                let (p, b) = builtin_revolution(*a, q, *root).map_err(|e| field_err("potential.a", e))?;
                info.b = Some(b);
                p
            }
            PotentialConfig::Radial { k } => builtin_radial(*k).map_err(|e| field_err("potential.k", e))?,
            PotentialConfig::Cylinder { h, period, a } => {
                let he = parse_expr(h).map_err(|e| field_err("potential.h", e))?;
                let (p, closing) = builtin_cylinder(&he, *period, *a, q).map_err(|e| field_err("potential", e))?;
                info.b = Some(a * (-q).exp());
                info.closing = Some(closing);
                p
            }
            PotentialConfig::Trinoid { a, root } => {
                let (b1, b2) = revolution_b_roots(*a, q).map_err(|e| field_err("potential.a", e))?;
                let b = match root {
                    RootChoice::Larger => b1,
                    RootChoice::Other => b2,
                };
                let (p, diag) = builtin_trinoid(*a, b, q).map_err(|e| field_err("potential.a", e))?;
                info.b = Some(b);
                info.trinoid = Some(diag);
                p
            }
            PotentialConfig::Custom { entries, poles, hint } => {
                let mut p = PotentialSpec::new(*hint);
                for (k, e) in entries.iter().enumerate() {
                    let ex = parse_expr(&e.expr).map_err(|err| field_err(&format!("potential.entries[{k}].expr"), err))?;
                    if p.entries.contains_key(&(e.row, e.col, e.power)) {
                        return Err(field_err(
                            &format!("potential.entries[{k}]"),
                            format!("duplicate entry ({},{},{})", e.row, e.col, e.power),
                        ));
                    }
                    p = p.with(e.row, e.col, e.power, ex);
                }
                p.declared_poles = poles.iter().map(|z| C64::new(z[0], z[1])).collect();
                p
            }
        };
        Ok((spec, info))
    }
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks that need no computation: ranges, sizes, the basepoint, the
    /// regime/potential pairing and that output directories exist.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(field_err("schema", format!("unsupported version {} (expected {CONFIG_SCHEMA})", self.schema)));
        }
        let s = &self.surface;
        if !(s.q.is_finite() && s.q >= 0.0) {
            return Err(field_err("surface.q", "must be finite and >= 0"));
        }
        if s.regime == Regime::HGreater1 && s.q == 0.0 {
            return Err(field_err("surface.q", "H_GREATER_1 needs q > 0 (H = coth q)"));
        }
        if !s.theta.is_finite() {
            return Err(field_err("surface.theta", "must be finite"));
        }
        if s.truncation == 0 || s.truncation > 200 {
            return Err(field_err("surface.truncation", "must be in 1..=200"));
        }
        let t = &s.tolerances;
        for (name, v) in [("integrate", t.integrate), ("membership", t.membership), ("rcond", t.rcond)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(field_err(&format!("surface.tolerances.{name}"), "must be finite and > 0"));
            }
        }
        let d = &self.domain;
        if d.nx < 2 || d.ny < 2 {
            return Err(field_err("domain", "nx and ny must be >= 2 (empty grid)"));
        }
        if d.nx.saturating_mul(d.ny) > 4_000_000 {
            return Err(field_err("domain", "grid larger than 4e6 nodes"));
        }
        self.grid().map_err(|e| field_err("domain", e))?;
        let hint = match &self.potential {
            PotentialConfig::Revolution { .. } | PotentialConfig::Cylinder { .. } | PotentialConfig::Trinoid { .. } => None,
            PotentialConfig::Custom { hint, entries, .. } => {
                if entries.is_empty() {
                    return Err(field_err("potential.entries", "at least one entry is required"));
                }
                Some(*hint)
            }
            _ => None,
        };
        match hint {
            Some(RegimeHint::HLess1) if s.regime != Regime::HLess1 => {
                return Err(field_err("surface.regime", "potential is declared for H_LESS_1"));
            }
            Some(RegimeHint::HGreater1) if s.regime != Regime::HGreater1 => {
                return Err(field_err("surface.regime", "potential is declared for H_GREATER_1"));
            }
            _ => {}
        }
        match &self.potential {
            PotentialConfig::Cylinder { h, period, .. } => {
                parse_expr(h).map_err(|e| field_err("potential.h", e))?;
                if !(period.is_finite() && *period != 0.0) {
                    return Err(field_err("potential.period", "must be a nonzero real"));
                }
            }
            PotentialConfig::Custom { entries, poles, .. } => {
                for (k, e) in entries.iter().enumerate() {
                    parse_expr(&e.expr).map_err(|err| field_err(&format!("potential.entries[{k}].expr"), err))?;
                }
                if poles.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err(field_err("potential.poles", "must be finite"));
                }
            }
            PotentialConfig::Revolution { a, .. } | PotentialConfig::Trinoid { a, .. } if !a.is_finite() => {
                return Err(field_err("potential.a", "must be finite"));
            }
            _ => {}
        }
        let o = &self.output;
        for (name, p) in [("output.mesh", &o.mesh), ("output.report", &o.report), ("output.singular_curves", &o.singular_curves)] {
            if let Some(p) = p {
                check_writable(name, p)?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<DomainGrid> {
        let d = &self.domain;
        DomainGrid::new(d.re, d.im, d.nx, d.ny, C64::new(d.basepoint[0], d.basepoint[1]))
    }

    pub fn factor_options(&self) -> FactorOptions {
        let mut o = FactorOptions::new(self.surface.truncation);
        o.rcond_min = self.surface.tolerances.rcond;
        o
    }
}

fn check_writable(field: &str, p: &str) -> Result<()> {
    if p.is_empty() {
        return Err(field_err(field, "empty path"));
    }
    let path = Path::new(p);
    if path.is_dir() {
        return Err(field_err(field, format!("{p} is a directory")));
    }
    let parent = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(field_err(field, format!("directory {} does not exist", parent.display())));
    }
    Ok(())
}

pub const EXAMPLE_NAMES: [&str; 5] = ["umbilic", "revolution", "radial", "cylinder", "trinoid"];

/// A ready-made configuration for each example family.
pub fn example_config(name: &str) -> Result<RunConfig> {
    let surface = |regime, q: f64, truncation| SurfaceConfig {
        regime,
        q,
        theta: 0.0,
        truncation,
        fd_order: FdOrderName::Fourth,
        tolerances: Tolerances::default(),
    };
    let output = |stem: &str| OutputConfig {
        mesh: Some(format!("{stem}.ply")),
        format: MeshFormat::Ply,
        model: Model::PoincareBall,
        report: Some(format!("{stem}.report.json")),
        singular_curves: None,
        timings: false,
    };
    let cfg = match name {
        "umbilic" => RunConfig {
            schema: CONFIG_SCHEMA,
            surface: surface(Regime::HLess1, 1.0, 8),
            domain: DomainConfig { re: [-0.3, 0.3], im: [-0.3, 0.3], nx: 121, ny: 121, basepoint: [0.0, 0.0] },
            potential: PotentialConfig::Umbilic,
            output: OutputConfig { singular_curves: Some("umbilic.s0.json".into()), ..output("umbilic") },
        },
        "revolution" => RunConfig {
            schema: CONFIG_SCHEMA,
            surface: surface(Regime::HLess1, 0.3, 24),
            domain: DomainConfig { re: [-0.5, 0.5], im: [0.0, std::f64::consts::TAU], nx: 101, ny: 161, basepoint: [0.0, 0.0] },
            potential: PotentialConfig::Revolution { a: 0.3, root: RootChoice::Larger },
            output: output("revolution"),
        },
        "radial" => RunConfig {
            schema: CONFIG_SCHEMA,
            surface: surface(Regime::HLess1, 0.5, 16),
            domain: DomainConfig { re: [-0.3, 0.3], im: [-0.3, 0.3], nx: 121, ny: 121, basepoint: [0.0, 0.0] },
            potential: PotentialConfig::Radial { k: 1 },
            output: output("radial"),
        },
        "cylinder" => RunConfig {
            schema: CONFIG_SCHEMA,
            surface: surface(Regime::HLess1, 0.3, 24),
            domain: DomainConfig { re: [0.0, std::f64::consts::TAU], im: [-0.2, 0.2], nx: 201, ny: 41, basepoint: [0.0, 0.0] },
            potential: PotentialConfig::Cylinder { h: "exp(1i*z)".into(), period: std::f64::consts::TAU, a: 0.3 },
            output: output("cylinder"),
        },
        "trinoid" => RunConfig {
            schema: CONFIG_SCHEMA,
            surface: surface(Regime::HLess1, 0.3, 24),
            domain: DomainConfig { re: [0.45, 0.55], im: [-0.05, 0.05], nx: 101, ny: 101, basepoint: [0.5, 0.0] },
            potential: PotentialConfig::Trinoid { a: 0.1, root: RootChoice::Larger },
            output: output("trinoid"),
        },
        other => {
            return Err(Error::Config(format!("unknown example '{other}' (expected one of {})", EXAMPLE_NAMES.join(", "))));
        }
    };
    Ok(cfg)
}
