//! Unstructured triangular meshes with an optional slit seam.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Duplicated-node seam describing the initial crack.
///
/// Each pair holds coincident (upper, lower) node ids; elements above the
/// seam reference the upper copy, elements below the lower one. The tip node
/// is shared between both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Slit {
    pub pairs: Vec<(usize, usize)>,
    pub tip_node: usize,
    /// Point where the seam meets the boundary.
    pub mouth: [f64; 2],
}

/// Triangular mesh with named boundary groups.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub edge_sets: BTreeMap<String, Vec<[usize; 2]>>,
    pub slit: Option<Slit>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `e` (positive for counter-clockwise).
    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let pc = self.nodes[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[e];
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) / 3.0,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) / 3.0,
        ]
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Node-to-node adjacency through element edges, sorted per node.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        adj[tri[i]].push(tri[j]);
                    }
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Structural checks: index ranges, orientation/area, set validity, and
    /// seam integrity.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.triangles.is_empty() {
            return Err(Error::Mesh("mesh has no nodes or no triangles".into()));
        }
        let (lo, hi) = self.bbox();
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let min_area = 1e-12 * span * span;
        for (e, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= self.nodes.len() {
                    return Err(Error::Mesh(format!(
                        "triangle {e} references node {v} out of range"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {e} has repeated vertices")));
            }
            let area = self.area(e);
            if area <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {e} is inverted or degenerate (signed area {area:.3e})"
                )));
            }
            if area < min_area {
                return Err(Error::Mesh(format!(
                    "triangle {e} is degenerate (area {area:.3e} below {min_area:.3e})"
                )));
            }
        }
        for (name, set) in &self.node_sets {
            for &v in set {
                if v >= self.nodes.len() {
                    return Err(Error::Mesh(format!(
                        "node set '{name}' references node {v} out of range"
                    )));
                }
            }
        }
        for (name, set) in &self.edge_sets {
            for &[a, b] in set {
                if a >= self.nodes.len() || b >= self.nodes.len() {
                    return Err(Error::Mesh(format!(
                        "edge set '{name}' references a node out of range"
                    )));
                }
            }
        }
        if let Some(slit) = &self.slit {
            if slit.tip_node >= self.nodes.len() {
                return Err(Error::Mesh("slit tip node out of range".into()));
            }
            for &(upper, lower) in &slit.pairs {
                if upper >= self.nodes.len() || lower >= self.nodes.len() {
                    return Err(Error::Mesh("slit pair node out of range".into()));
                }
                if self.nodes[upper] != self.nodes[lower] {
                    return Err(Error::Mesh(format!(
                        "slit pair ({upper}, {lower}) is not coincident"
                    )));
                }
                for (e, tri) in self.triangles.iter().enumerate() {
                    let has_upper = tri.contains(&upper);
                    let has_lower = tri.contains(&lower);
                    if has_upper && has_lower {
                        return Err(Error::Mesh(format!(
                            "triangle {e} stitches both sides of slit pair ({upper}, {lower})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Nodal field: `ncomp` values per node, dof = node * ncomp + comp.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(n_nodes: usize, ncomp: usize) -> Field {
        Field {
            ncomp,
            values: vec![0.0; n_nodes * ncomp],
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.ncomp + comp]
    }

    #[inline]
    pub fn set(&mut self, node: usize, comp: usize, v: f64) {
        self.values[node * self.ncomp + comp] = v;
    }
}

/// Simulation state at one load step.
#[derive(Debug, Clone)]
pub struct SimState {
    pub mesh: std::sync::Arc<Mesh>,
    /// Displacement (m), 2 components per node.
    pub u: Field,
    /// Damage, 1 component per node.
    pub d: Field,
    /// Damage at the last accepted step (irreversibility floor).
    pub d_prev: Field,
    pub step: usize,
    /// Applied boundary displacement (m).
    pub ubar: f64,
    /// Reaction on the loaded edge in the loading direction (N/m).
    pub reaction: f64,
    pub converged: bool,
    pub stagger_iters: usize,
}

impl SimState {
    pub fn pristine(mesh: std::sync::Arc<Mesh>) -> SimState {
        let n = mesh.n_nodes();
        SimState {
            mesh,
            u: Field::zeros(n, 2),
            d: Field::zeros(n, 1),
            d_prev: Field::zeros(n, 1),
            step: 0,
            ubar: 0.0,
            reaction: 0.0,
            converged: true,
            stagger_iters: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square_two_triangles() -> Mesh {
        let mut mesh = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            ..Default::default()
        };
        mesh.node_sets.insert("bottom".into(), vec![0, 1]);
        mesh.node_sets.insert("top".into(), vec![2, 3]);
        mesh.edge_sets.insert("bottom".into(), vec![[0, 1]]);
        mesh.edge_sets.insert("top".into(), vec![[3, 2]]);
        mesh
    }

    #[test]
    fn two_triangle_square_validates() {
        let mesh = unit_square_two_triangles();
        mesh.validate().unwrap();
        assert_eq!(mesh.n_nodes(), 4);
        assert_eq!(mesh.n_triangles(), 2);
        assert!((mesh.area(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let mut mesh = unit_square_two_triangles();
        mesh.triangles.push([0, 1, 1]);
        assert!(matches!(mesh.validate(), Err(Error::Mesh(_))));

        let mut mesh = unit_square_two_triangles();
        mesh.nodes.push([0.5, 0.0]);
        mesh.triangles.push([0, 4, 1]); // collinear: zero area
        assert!(matches!(mesh.validate(), Err(Error::Mesh(_))));
    }

    #[test]
    fn inverted_triangle_rejected() {
        let mut mesh = unit_square_two_triangles();
        mesh.triangles[0] = [0, 2, 1];
        let err = mesh.validate().unwrap_err();
        assert!(err.to_string().contains("inverted"));
    }

    #[test]
    fn stitched_slit_rejected() {
        let mut mesh = unit_square_two_triangles();
        // Fake a slit pair out of two coincident nodes both used by one
        // triangle.
        mesh.nodes.push([1.0, 0.0]);
        mesh.triangles.push([0, 1, 4]);
        // 1 and 4 coincide; triangle 2 uses both.
        mesh.slit = Some(Slit {
            pairs: vec![(1, 4)],
            tip_node: 0,
            mouth: [0.0, 0.0],
        });
        let err = mesh.validate().unwrap_err();
        assert!(err.to_string().contains("degenerate") || err.to_string().contains("stitches"));
    }

    #[test]
    fn adjacency_is_sorted_and_symmetric() {
        let mesh = unit_square_two_triangles();
        let adj = mesh.node_adjacency();
        assert_eq!(adj[0], vec![1, 2, 3]);
        assert_eq!(adj[1], vec![0, 2]);
        for (i, list) in adj.iter().enumerate() {
            for &j in list {
                assert!(adj[j].contains(&i));
            }
        }
    }
}
