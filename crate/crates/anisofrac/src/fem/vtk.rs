//! Legacy-text VTK writer for unstructured triangle grids.
//!
//! Point data: displacement vector `u` and damage scalar `d`; cell data:
//! crack-driving energy density `psi_t`.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{Field, Mesh};
use crate::{Error, Result};

pub fn vtk_to_text(mesh: &Mesh, u: &Field, d: &Field, psi_t: &[f64], title: &str) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{:.12e} {:.12e} 0.0", p[0], p[1]);
    }
    let m = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {} {}", m, 4 * m);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {m}");
    for _ in 0..m {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.n_nodes());
    out.push_str("VECTORS u double\n");
    for n in 0..mesh.n_nodes() {
        let _ = writeln!(out, "{:.12e} {:.12e} 0.0", u.get(n, 0), u.get(n, 1));
    }
    out.push_str("SCALARS d double 1\nLOOKUP_TABLE default\n");
    for n in 0..mesh.n_nodes() {
        let _ = writeln!(out, "{:.12e}", d.get(n, 0));
    }
    let _ = writeln!(out, "CELL_DATA {m}");
    out.push_str("SCALARS psi_t double 1\nLOOKUP_TABLE default\n");
    for &v in psi_t {
        let _ = writeln!(out, "{v:.12e}");
    }
    out
}

pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    u: &Field,
    d: &Field,
    psi_t: &[f64],
    title: &str,
) -> Result<()> {
    std::fs::write(path, vtk_to_text(mesh, u, d, psi_t, title))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn writer_emits_wellformed_legacy_vtk() {
        let mesh = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            node_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
            slit: None,
        };
        let u = Field::zeros(3, 2);
        let d = Field::zeros(3, 1);
        let text = vtk_to_text(&mesh, &u, &d, &[42.0], "step 3");
        assert!(text.starts_with("# vtk DataFile Version 3.0\nstep 3\nASCII\n"));
        assert!(text.contains("POINTS 3 double"));
        assert!(text.contains("CELLS 1 4"));
        assert!(text.contains("CELL_TYPES 1\n5\n"));
        assert!(text.contains("VECTORS u double"));
        assert!(text.contains("SCALARS d double 1"));
        assert!(text.contains("SCALARS psi_t double 1"));
        assert!(text.contains("4.200000000000e1"));
    }
}
