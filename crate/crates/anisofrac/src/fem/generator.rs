//! Built-in generator for the single-edge-notched square plate.
//!
//! Square plate of side `length` centered at the origin, horizontal slit
//! from the left edge midheight to the center. The grid is uniform in `x`
//! and graded in `y`: spacing `h_band` inside `|y| <= band_halfwidth`,
//! geometric growth (capped at `h_coarse`) outside. Cells are split into
//! triangles with alternating diagonals, mirrored about `y = 0` so the mesh
//! is exactly symmetric under reflection.

use std::collections::BTreeMap;

use super::mesh::{Mesh, Slit};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SenPlateParams {
    /// Plate side length (m).
    pub length: f64,
    /// Target element size inside the refinement band (m).
    pub h_band: f64,
    /// Half-width of the fine band around `y = 0` (m).
    pub band_halfwidth: f64,
    /// Cap on the coarse element size outside the band (m).
    pub h_coarse: f64,
    /// Geometric growth factor of row heights beyond the band.
    pub growth: f64,
    /// Insert the slit as a duplicated-node seam. When false the mesh has no
    /// seam and the caller models the crack through the damage field.
    pub with_slit: bool,
}

impl SenPlateParams {
    pub fn new(length: f64, h_band: f64, band_halfwidth: f64) -> SenPlateParams {
        SenPlateParams {
            length,
            h_band,
            band_halfwidth,
            h_coarse: 4.0 * h_band,
            growth: 1.5,
            with_slit: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.length > 0.0
            && self.h_band > 0.0
            && self.length >= 8.0 * self.h_band
            && self.band_halfwidth >= self.h_band
            && self.band_halfwidth <= 0.5 * self.length + 1e-12 * self.length
            && self.h_coarse >= self.h_band
            && self.growth > 1.0;
        if !ok {
            return Err(Error::Mesh(format!(
                "infeasible plate sizing: L={}, h_band={}, band_halfwidth={}, h_coarse={}, growth={}",
                self.length, self.h_band, self.band_halfwidth, self.h_coarse, self.growth
            )));
        }
        Ok(())
    }
}

/// Row levels for the upper half `[0, L/2]`; mirrored for the lower half.
fn upper_levels(p: &SenPlateParams) -> Vec<f64> {
    let half = 0.5 * p.length;
    let mut levels = vec![0.0f64];
    let mut h = p.h_band;
    loop {
        let y = *levels.last().unwrap();
        if y >= half {
            break;
        }
        if y + 0.5 * p.h_band >= p.band_halfwidth {
            h = (h * p.growth).min(p.h_coarse);
        } else {
            h = p.h_band;
        }
        let next = y + h;
        if next >= half - 0.45 * h {
            levels.push(half);
            break;
        }
        levels.push(next);
    }
    levels
}

pub fn generate_sen_plate(p: &SenPlateParams) -> Result<Mesh> {
    p.validate()?;
    let half = 0.5 * p.length;

    // Uniform x grid with an even cell count so x = 0 is a grid line.
    let mut nx = (p.length / p.h_band).round() as usize;
    if nx % 2 == 1 {
        nx += 1;
    }
    nx = nx.max(4);

    let upper = upper_levels(p);
    let mut ys: Vec<f64> = upper.iter().skip(1).map(|&y| -y).collect();
    ys.reverse();
    ys.extend_from_slice(&upper);
    let ny = ys.len() - 1; // cell rows
    let j0 = ny / 2; // index of the y = 0 level
    debug_assert_eq!(ys[j0], 0.0);

    let node_id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for i in 0..=nx {
            let x = (i as f64 / nx as f64 - 0.5) * p.length;
            nodes.push([x, y]);
        }
    }

    // Alternating diagonals, mirrored about the crack line.
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let above = j >= j0;
        let band_row = if above { j - j0 } else { j0 - 1 - j };
        for i in 0..nx {
            let bl = node_id(i, j);
            let br = node_id(i + 1, j);
            let tl = node_id(i, j + 1);
            let tr = node_id(i + 1, j + 1);
            let slash = ((i + band_row) % 2 == 0) == above;
            if slash {
                triangles.push([bl, br, tr]);
                triangles.push([bl, tr, tl]);
            } else {
                triangles.push([bl, br, tl]);
                triangles.push([br, tr, tl]);
            }
        }
    }

    let mut mesh = Mesh {
        nodes,
        triangles,
        node_sets: BTreeMap::new(),
        edge_sets: BTreeMap::new(),
        slit: None,
    };

    if p.with_slit {
        // Duplicate nodes along y = 0, x < 0; elements below the line move to
        // the duplicate. The tip node at the center stays shared.
        let i_center = nx / 2;
        let mut pairs = Vec::new();
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..i_center {
            let upper_id = node_id(i, j0);
            let lower_id = mesh.nodes.len();
            mesh.nodes.push(mesh.nodes[upper_id]);
            pairs.push((upper_id, lower_id));
            remap.insert(upper_id, lower_id);
        }
        for e in 0..mesh.triangles.len() {
            let cy = mesh.centroid(e)[1];
            if cy < 0.0 {
                for v in mesh.triangles[e].iter_mut() {
                    if let Some(&dup) = remap.get(v) {
                        *v = dup;
                    }
                }
            }
        }
        mesh.slit = Some(Slit {
            pairs,
            tip_node: node_id(i_center, j0),
            mouth: [-half, 0.0],
        });
    }

    build_boundary_sets(&mut mesh, half);
    mesh.validate()?;
    Ok(mesh)
}

/// Classifies boundary edges (edges used by exactly one triangle) into the
/// four plate sides and derives the matching node sets.
fn build_boundary_sets(mesh: &mut Mesh, half: f64) {
    let mut edge_count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let entry = edge_count.entry(key).or_insert((0, [a, b]));
            entry.0 += 1;
        }
    }
    let tol = 1e-9 * 2.0 * half;
    let mut sides: BTreeMap<&str, Vec<[usize; 2]>> = BTreeMap::new();
    for (_, (count, edge)) in edge_count {
        if count != 1 {
            continue;
        }
        let pa = mesh.nodes[edge[0]];
        let pb = mesh.nodes[edge[1]];
        let side = if (pa[1] + half).abs() <= tol && (pb[1] + half).abs() <= tol {
            "bottom"
        } else if (pa[1] - half).abs() <= tol && (pb[1] - half).abs() <= tol {
            "top"
        } else if (pa[0] + half).abs() <= tol && (pb[0] + half).abs() <= tol {
            "left"
        } else if (pa[0] - half).abs() <= tol && (pb[0] - half).abs() <= tol {
            "right"
        } else {
            continue; // slit faces
        };
        sides.entry(side).or_default().push(edge);
    }
    for (name, edges) in sides {
        let mut node_set: Vec<usize> = edges.iter().flat_map(|e| e.iter().copied()).collect();
        node_set.sort_unstable();
        node_set.dedup();
        mesh.node_sets.insert(name.to_string(), node_set);
        mesh.edge_sets.insert(name.to_string(), edges);
    }
}
