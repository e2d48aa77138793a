//! VTK legacy ASCII export of meshes and solution snapshots.
//!
//! Output is a version 2.0 `UNSTRUCTURED_GRID` with cell type 25 (quadratic
//! hexahedron): nodal displacement vectors under POINT_DATA and the selected
//! per-cell scalars under CELL_DATA. Floats are written with a fixed
//! scientific format, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::analysis::c_eq;
use crate::assembly::Discretization;
use crate::io::config::CellField;
use crate::material;
use crate::mesh::{Formulation, Mesh};

/// Solution fields sampled for export: nodal displacements plus per-cell
/// values at the element centroid.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub displacements: Vec<[f64; 3]>,
    pub f11: Vec<f64>,
    pub f12: Vec<f64>,
    pub det_f: Vec<f64>,
    pub c_eq: Vec<f64>,
    pub sm_norm: Vec<f64>,
}

impl FieldSnapshot {
    /// Samples the converged fields of a run.
    pub fn new(disc: &Discretization, d: &[f64]) -> Self {
        let n_nodes = disc.mesh.n_nodes();
        let mut displacements = Vec::with_capacity(n_nodes);
        for n in 0..n_nodes {
            displacements.push([d[3 * n], d[3 * n + 1], d[3 * n + 2]]);
        }
        let ne = disc.mesh.n_elements();
        let mut f11 = Vec::with_capacity(ne);
        let mut f12 = Vec::with_capacity(ne);
        let mut det_f = Vec::with_capacity(ne);
        let mut ceq = Vec::with_capacity(ne);
        let mut sm_norm = Vec::with_capacity(ne);
        for e in 0..ne {
            let s = disc.point_state(e, d, [0.0; 3]);
            f11.push(s.f[(0, 0)]);
            f12.push(s.f[(0, 1)]);
            det_f.push(s.f.det());
            ceq.push(c_eq(&disc.params, &s.f));
            let sm = if disc.formulation == Formulation::Mixed {
                material::relative_stress(&disc.params, &s.f, &s.chi).norm()
            } else {
                0.0
            };
            sm_norm.push(sm);
        }
        Self {
            displacements,
            f11,
            f12,
            det_f,
            c_eq: ceq,
            sm_norm,
        }
    }

    pub fn cell_values(&self, field: CellField) -> &[f64] {
        match field {
            CellField::F11 => &self.f11,
            CellField::F12 => &self.f12,
            CellField::DetF => &self.det_f,
            CellField::Ceq => &self.c_eq,
            CellField::SmNorm => &self.sm_norm,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// Renders the VTK text for a mesh and snapshot.
pub fn render_vtk(mesh: &Mesh, snapshot: &FieldSnapshot, fields: &[CellField]) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 2.0\n");
    s.push_str("gradpoly snapshot\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let n = mesh.n_nodes();
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {ne} {}", ne * 21);
    for conn in &mesh.elements {
        s.push_str("20");
        for &node in conn.iter() {
            let _ = write!(s, " {node}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("25\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    s.push_str("VECTORS displacement double\n");
    for u in &snapshot.displacements {
        let _ = writeln!(s, "{} {} {}", fmt_f64(u[0]), fmt_f64(u[1]), fmt_f64(u[2]));
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {ne}");
        for &field in fields {
            let _ = writeln!(s, "SCALARS {} double 1", field.name());
            s.push_str("LOOKUP_TABLE default\n");
            for &v in snapshot.cell_values(field) {
                // the equivalent strain is an indicator in [0, 1]
                let v = if field == CellField::Ceq {
                    v.clamp(0.0, 1.0)
                } else {
                    v
                };
                let _ = writeln!(s, "{}", fmt_f64(v));
            }
        }
    }
    s
}

/// Writes the snapshot to a VTK legacy file.
pub fn export_vtk(
    mesh: &Mesh,
    snapshot: &FieldSnapshot,
    fields: &[CellField],
    path: &Path,
) -> io::Result<()> {
    fs::write(path, render_vtk(mesh, snapshot, fields))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Reads back the POINTS count of a legacy VTK file (self-read check).
pub fn vtk_point_count(text: &str) -> Option<usize> {
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("POINTS ") {
            return rest.split_whitespace().next()?.parse().ok();
        }
    }
    None
}
