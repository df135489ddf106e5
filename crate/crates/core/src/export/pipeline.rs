//! The generate / validate / deform / diagnose drivers behind the CLI.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::config::{RunConfig, PotentialInfo};
use crate::export::mesh::{build_mesh, write_mesh, MeshData};
use crate::export::report::{
    write_json, write_report, GeometryReport, ResidualRow, SingularSummary, Timings, TruncationSummary, REPORT_SCHEMA,
};
use crate::frameflow::{build_frames, detect_singular_set, integrate_frame, FrameField, NodeCell, Polyline};
use crate::geometry::{
    ambient_curvature, exclusion_mask, fundamental_forms, gauss_codazzi_residual, hopf_dbar, lawson_deform, legendre_residual,
    primitivity_residual, surface_field, FdOrder, FormsField, SurfaceField,
};
use crate::potential::{validate_potential, PotentialSpec, ValidationReport};

pub const TOL_CURVATURE: f64 = 1e-4;
pub const TOL_GAUSS: f64 = 1e-3;
pub const TOL_CODAZZI: f64 = 1e-4;
pub const TOL_LEGENDRE: f64 = 1e-6;
pub const TOL_MEMBERSHIP: f64 = 1e-9;
pub const TOL_REALITY: f64 = 1e-8;
pub const TOL_UNIMODULAR: f64 = 1e-9;
pub const TOL_HOPF: f64 = 1e-4;
pub const TOL_PRIMITIVITY: f64 = 1e-5;
pub const TOL_LAWSON: f64 = 1e-3;

/// Everything a run computes.
#[derive(Clone, Debug)]
pub struct Run {
    pub config: RunConfig,
    pub potential: PotentialSpec,
    pub info: PotentialInfo,
    pub field: FrameField,
    pub surface: SurfaceField,
    pub forms: FormsField,
    pub excluded: Vec<bool>,
    pub curves: Vec<Polyline>,
    pub report: GeometryReport,
}

/// Builds the potential and runs its checks; failures become ERR_CONFIG
/// naming each offending check and entry.
pub fn checked_potential(cfg: &RunConfig) -> Result<(PotentialSpec, PotentialInfo, ValidationReport)> {
    let grid = cfg.grid()?;
    let (spec, info) = cfg.potential.build(cfg.surface.q)?;
    let vr = validate_potential(&spec, &grid);
    Ok((spec, info, vr))
}

fn rejection(vr: &ValidationReport) -> Error {
    let details: Vec<String> = vr.issues.iter().take(5).map(|i| format!("{}: {}", i.check, i.detail)).collect();
    Error::Config(format!("potential failed [{}]: {}", vr.failed_checks().join(", "), details.join("; ")))
}

/// Steps 1–4 and the diagnostics.
pub fn run(cfg: &RunConfig) -> Result<Run> {
    cfg.validate()?;
    let t_start = Instant::now();
    let grid = cfg.grid()?;
    let (spec, info, vr) = checked_potential(cfg)?;
    if !vr.passed {
        return Err(rejection(&vr));
    }
    let s = &cfg.surface;
    let cf = integrate_frame(&spec, &grid, s.truncation, s.tolerances.integrate)?;
    let t_int = t_start.elapsed().as_secs_f64();
    let field = build_frames(cf, &grid, s.regime, s.q, &cfg.factor_options());
    let t_fac = t_start.elapsed().as_secs_f64() - t_int;
    let surface = surface_field(&field, s.theta, s.tolerances.membership);
    let order = s.fd_order.order();
    let forms = fundamental_forms(&surface, order);
    let excluded = exclusion_mask(&field);
    let curves = detect_singular_set(&field);
    let h_target = s.regime.mean_curvature(s.q);

    let total = grid.len();
    let keep = |idx: usize| !excluded[idx];
    let fd_row = |name: &str, v: &[f64], tol: f64| ResidualRow::from_values(name, (0..total).filter(|&i| keep(i)).map(|i| v[i]), tol);
    let mut rows = Vec::new();
    let herr: Vec<f64> = forms.h.iter().map(|h| (h - h_target).abs()).collect();
    rows.push(fd_row("curvature", &herr, TOL_CURVATURE));
    let (gauss, codazzi) = gauss_codazzi_residual(&forms, &grid, &surface.group);
    rows.push(fd_row("gauss", &gauss, TOL_GAUSS));
    rows.push(fd_row("codazzi", &codazzi, TOL_CODAZZI));
    // first derivatives only; the five-point stencil keeps truncation error below the tolerance
    let leg = legendre_residual(&surface, FdOrder::Fourth);
    rows.push(fd_row("legendre", &leg, TOL_LEGENDRE));
    rows.push(fd_row("hopf_holomorphy", &hopf_dbar(&forms, &grid, &surface.group), TOL_HOPF));
    if h_target.abs() < 1e-12 {
        rows.push(fd_row("primitivity", &primitivity_residual(&forms, &grid, &surface.group, -1.0), TOL_PRIMITIVITY));
    }
    let members: Vec<_> = (0..total).filter_map(|i| surface.sample(i)).map(|p| p.membership()).collect();
    rows.push(ResidualRow::from_values("det_f", members.iter().map(|m| m.det_f), TOL_MEMBERSHIP));
    rows.push(ResidualRow::from_values("det_n", members.iter().map(|m| m.det_n), TOL_MEMBERSHIP));
    rows.push(ResidualRow::from_values("pairing", members.iter().map(|m| m.pairing), TOL_MEMBERSHIP));
    rows.push(ResidualRow::from_values(
        "trace_sign",
        members.iter().map(|m| if m.trace_sign { 0.0 } else { 1.0 }),
        0.0,
    ));
    let framed = |v: &[f64]| (0..total).filter(|&i| field.frame[i].is_some()).map(|i| v[i]).collect::<Vec<_>>();
    rows.push(ResidualRow::from_values("reality", framed(&field.reality), TOL_REALITY));
    rows.push(ResidualRow::from_values("unimodularity", field.det_drift.iter().copied(), TOL_UNIMODULAR));

    let mut summary = SingularSummary {
        nodes: total,
        cell_id: field.count(NodeCell::Id),
        cell_omega0: field.count(NodeCell::Omega0),
        singular: field.count(NodeCell::Singular),
        rejected: surface.rejected.iter().filter(|r| r.is_some()).count(),
        excluded: excluded.iter().filter(|&&e| e).count(),
        backward_sheet_vertices: (0..total).filter(|&i| surface.valid(i) && surface.sheet[i] < 0.0).count(),
        curves: curves.len(),
        curve_points: curves.iter().map(|c| c.points.len()).sum(),
        ..Default::default()
    };
    for code in field.singular_reason.iter().flatten() {
        *summary.reasons.entry(code.to_string()).or_insert(0) += 1;
    }
    let ledger = &field.truncation_ledger;
    let truncation = TruncationSummary {
        truncation: s.truncation,
        max_ledger: ledger.iter().fold(0.0, |a: f64, &b| a.max(b)),
        mean_ledger: ledger.iter().sum::<f64>() / total as f64,
    };
    let t_total = t_start.elapsed().as_secs_f64();
    let timings = cfg.output.timings.then_some(Timings {
        integrate_s: t_int,
        factorize_s: t_fac,
        geometry_s: t_total - t_int - t_fac,
        total_s: t_total,
    });
    let passed = rows.iter().all(|r| r.pass);
    let report = GeometryReport {
        schema_version: REPORT_SCHEMA,
        config: cfg.clone(),
        potential: info.clone(),
        regime: s.regime,
        h_target,
        residuals: rows,
        singular_set: summary,
        truncation,
        timings,
        passed,
    };
    Ok(Run { config: cfg.clone(), potential: spec, info, field, surface, forms, excluded, curves, report })
}

pub fn mesh_of(run: &Run) -> MeshData {
    build_mesh(&run.surface, &run.forms.h, &run.forms.u, run.config.output.model)
}

#[derive(Serialize)]
struct CurvesFile<'a> {
    schema_version: u32,
    curves: &'a [Polyline],
}

/// Writes whatever outputs the config names. The mesh is skipped when `mesh` is false.
pub fn write_outputs(run: &Run, mesh: bool) -> Result<()> {
    let o = &run.config.output;
    if mesh {
        if let Some(p) = &o.mesh {
            write_mesh(&mesh_of(run), Path::new(p), o.format)?;
        }
    }
    if let Some(p) = &o.report {
        write_report(&run.report, Path::new(p))?;
    }
    if let Some(p) = &o.singular_curves {
        write_json(&CurvesFile { schema_version: REPORT_SCHEMA, curves: &run.curves }, Path::new(p))?;
    }
    Ok(())
}

/// `generate`: returns whether every residual passed.
pub fn generate(cfg: &RunConfig) -> Result<Run> {
    let r = run(cfg)?;
    write_outputs(&r, true)?;
    Ok(r)
}

/// `diagnose`: report and curves only.
pub fn diagnose(cfg: &RunConfig) -> Result<Run> {
    let r = run(cfg)?;
    write_outputs(&r, false)?;
    Ok(r)
}

/// `validate`: configuration and potential checks, no integration.
pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let (_, _, vr) = checked_potential(cfg)?;
    if !vr.passed {
        return Err(rejection(&vr));
    }
    Ok(vr)
}

/// Parses `a:b:n` into n evenly spaced values from a to b inclusive.
pub fn parse_q_range(s: &str) -> Result<Vec<f64>> {
    let err = |m: &str| Error::Config(format!("--q-range '{s}': {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(err("expected a:b:n"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| err("bad start"))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| err("bad end"))?;
    let n: usize = parts[2].trim().parse().map_err(|_| err("bad count"))?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(err("bounds must be finite"));
    }
    if n == 0 || n > 1000 {
        return Err(err("count must be in 1..=1000"));
    }
    if n == 1 {
        if a != b {
            return Err(err("a single sample needs a == b"));
        }
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeformEntry {
    pub q_prime: f64,
    /// cosh q′ − H sinh q′.
    pub c: f64,
    pub h_expected: f64,
    pub h_mean: f64,
    pub h_max_error: f64,
    pub k_expected: f64,
    pub k_mean: f64,
    /// max |H_λ² + K_λ − (H² − 1)| over the sampled nodes, with measured H_λ and K_λ.
    pub identity_error: f64,
    pub normal_fallbacks: usize,
    pub nodes: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeformReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub h: f64,
    pub entries: Vec<DeformEntry>,
    pub passed: bool,
}

/// The Lawson family of a computed run, one entry (and surface) per q′.
pub fn deform_sweep(run: &Run, qs: &[f64]) -> Result<(DeformReport, Vec<(SurfaceField, FormsField)>)> {
    let h = run.report.h_target;
    let grid = &run.field.grid;
    let order = run.config.surface.fd_order.order();
    let mut entries = Vec::new();
    let mut surfaces = Vec::new();
    for &qp in qs {
        let lw = lawson_deform(&run.field, qp, 1e-12)?;
        let forms = fundamental_forms(&lw.surface, order);
        let (mut n, mut hsum, mut hmax, mut ksum, mut ident) = (0usize, 0.0, 0.0f64, 0.0, 0.0f64);
        for idx in 0..grid.len() {
            if run.excluded[idx] || !forms.h[idx].is_finite() {
                continue;
            }
            let Some(f) = lw.surface.f[idx] else { continue };
            let hl = forms.h[idx];
            let k = ambient_curvature(&f);
            n += 1;
            hsum += hl;
            ksum += k;
            hmax = hmax.max((hl - lw.h_expected).abs());
            ident = ident.max((hl * hl + k - (h * h - 1.0)).abs());
        }
        let d = n.max(1) as f64;
        entries.push(DeformEntry {
            q_prime: qp,
            c: lw.c,
            h_expected: lw.h_expected,
            h_mean: hsum / d,
            h_max_error: hmax,
            k_expected: lw.k_expected,
            k_mean: ksum / d,
            identity_error: ident,
            normal_fallbacks: lw.normal_fallbacks,
            nodes: n,
            pass: n > 0 && hmax <= TOL_LAWSON && ident <= TOL_LAWSON,
        });
        surfaces.push((lw.surface, forms));
    }
    let passed = entries.iter().all(|e| e.pass);
    Ok((DeformReport { schema_version: REPORT_SCHEMA, config: run.config.clone(), h, entries, passed }, surfaces))
}

/// `deform`: runs the base surface, sweeps q′ and writes the sweep report to
/// the report path and one mesh per q′ next to the mesh path (`name.k.ext`).
pub fn deform(cfg: &RunConfig, qs: &[f64]) -> Result<DeformReport> {
    let base = run(cfg)?;
    let (report, surfaces) = deform_sweep(&base, qs)?;
    let o = &cfg.output;
    if let Some(p) = &o.mesh {
        let path = Path::new(p);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
        let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("ply");
        for (k, (surf, forms)) in surfaces.iter().enumerate() {
            let m = build_mesh(surf, &forms.h, &forms.u, o.model);
            write_mesh(&m, &path.with_file_name(format!("{stem}.{k}.{ext}")), o.format)?;
        }
    }
    if let Some(p) = &o.report {
        write_json(&report, Path::new(p))?;
    }
    Ok(report)
}
