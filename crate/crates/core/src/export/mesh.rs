//! Quad meshes over the valid part of the grid, written as OBJ or ASCII PLY.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::export::config::{MeshFormat, Model};
use crate::export::models::{ball_coords_raw, to_minkowski, upper_half_space_raw};
use crate::geometry::SurfaceField;
use crate::loopcore::Matrix2;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshData {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise in the parameter plane.
    pub faces: Vec<[usize; 4]>,
    pub h_est: Vec<f64>,
    pub u: Vec<f64>,
    /// Node cell code: 0 for CELL_ID, 1 for CELL_OMEGA0.
    pub cell: Vec<i32>,
    /// Grid index of each vertex.
    pub node: Vec<usize>,
}

pub fn model_coords(f: &Matrix2, model: Model) -> [f64; 3] {
    match model {
        Model::PoincareBall => ball_coords_raw(&to_minkowski(f)),
        Model::UpperHalfSpace => upper_half_space_raw(f),
        Model::Minkowski => {
            let x = to_minkowski(f);
            [x[1], x[2], x[3]]
        }
    }
}

/// One vertex per node with a Sym point; one quad per grid cell whose four
/// corners are valid and lie in the same Iwasawa cell.
pub fn build_mesh(s: &SurfaceField, h_est: &[f64], u: &[f64], model: Model) -> MeshData {
    let g = &s.grid;
    let mut mesh = MeshData::default();
    let mut vid = vec![usize::MAX; g.len()];
    for idx in 0..g.len() {
        let Some(f) = s.f[idx] else { continue };
        vid[idx] = mesh.vertices.len();
        mesh.vertices.push(model_coords(&f, model));
        mesh.h_est.push(h_est.get(idx).copied().unwrap_or(f64::NAN));
        mesh.u.push(u.get(idx).copied().unwrap_or(f64::NAN));
        mesh.cell.push(s.group[idx]);
        mesh.node.push(idx);
    }
    for j in 0..g.ny.saturating_sub(1) {
        for i in 0..g.nx.saturating_sub(1) {
            let c = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            if c.iter().all(|&k| vid[k] != usize::MAX && s.group[k] == s.group[c[0]]) {
                mesh.faces.push(c.map(|k| vid[k]));
            }
        }
    }
    mesh
}

fn num(out: &mut String, v: f64) {
    if v.is_finite() {
        write!(out, "{v:e}").unwrap();
    } else {
        out.push_str("nan");
    }
}

pub fn mesh_to_string(mesh: &MeshData, format: MeshFormat) -> String {
    let mut out = String::new();
    match format {
        MeshFormat::Obj => {
            for v in &mesh.vertices {
                out.push('v');
                for x in v {
                    out.push(' ');
                    num(&mut out, *x);
                }
                out.push('\n');
            }
            for f in &mesh.faces {
                writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1).unwrap();
            }
        }
        MeshFormat::Ply => {
            out.push_str("ply\nformat ascii 1.0\n");
            writeln!(out, "element vertex {}", mesh.vertices.len()).unwrap();
            for p in ["x", "y", "z", "h_est", "u"] {
                writeln!(out, "property double {p}").unwrap();
            }
            out.push_str("property int cell\n");
            writeln!(out, "element face {}", mesh.faces.len()).unwrap();
            out.push_str("property list uchar int vertex_indices\nend_header\n");
            for (k, v) in mesh.vertices.iter().enumerate() {
                for x in v.iter().chain([&mesh.h_est[k], &mesh.u[k]]) {
                    num(&mut out, *x);
                    out.push(' ');
                }
                writeln!(out, "{}", mesh.cell[k]).unwrap();
            }
            for f in &mesh.faces {
                writeln!(out, "4 {} {} {} {}", f[0], f[1], f[2], f[3]).unwrap();
            }
        }
    }
    out
}

pub fn write_mesh(mesh: &MeshData, path: &Path, format: MeshFormat) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh, format)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
