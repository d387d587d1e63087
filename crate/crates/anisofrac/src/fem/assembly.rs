//! Element kernels and global assembly for linear triangles.
//!
//! Constant-strain triangles: one-point quadrature is exact for the elastic
//! terms; the damage mass-type terms use the exact closed forms (equal to
//! the three-point edge-midpoint rule for the quadratic integrands present).
//! Plane strain embeds element strains into the 3D Kelvin 6-space with zero
//! out-of-plane components, so the constitutive split always runs its full
//! 3D kernels.

use std::f64::consts::SQRT_2;

use super::mesh::{Field, Mesh};
use super::sparse::CsrMatrix;
use crate::kelvin::{KelvinMat, SymTensor2};
use crate::phasefield::PFModel;

/// Shape-function gradients and area of a linear triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriShape {
    pub area: f64,
    /// `grads[i] = (dN_i/dx, dN_i/dy)`, constant over the element.
    pub grads: [[f64; 2]; 3],
}

pub fn tri_shape(mesh: &Mesh, e: usize) -> TriShape {
    let [a, b, c] = mesh.triangles[e];
    let pa = mesh.nodes[a];
    let pb = mesh.nodes[b];
    let pc = mesh.nodes[c];
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let area = 0.5 * det;
    let inv = 1.0 / det;
    TriShape {
        area,
        grads: [
            [(pb[1] - pc[1]) * inv, (pc[0] - pb[0]) * inv],
            [(pc[1] - pa[1]) * inv, (pa[0] - pc[0]) * inv],
            [(pa[1] - pb[1]) * inv, (pb[0] - pa[0]) * inv],
        ],
    }
}

/// Element strain (constant for linear triangles), embedded into the 3D
/// Kelvin space with `e33 = e23 = e13 = 0`.
pub fn strain_at_qp(mesh: &Mesh, e: usize, u: &Field) -> SymTensor2 {
    let tri = mesh.triangles[e];
    let shape = tri_shape(mesh, e);
    let mut e11 = 0.0;
    let mut e22 = 0.0;
    let mut e12 = 0.0;
    for i in 0..3 {
        let ux = u.get(tri[i], 0);
        let uy = u.get(tri[i], 1);
        let [bx, by] = shape.grads[i];
        e11 += bx * ux;
        e22 += by * uy;
        e12 += 0.5 * (by * ux + bx * uy);
    }
    SymTensor2::from_components(e11, e22, 0.0, 0.0, 0.0, e12)
}

/// In-plane displacement gradient `du_i/dx_j` of an element (2x2, generally
/// non-symmetric).
pub fn displacement_gradient(mesh: &Mesh, e: usize, u: &Field) -> [[f64; 2]; 2] {
    let tri = mesh.triangles[e];
    let shape = tri_shape(mesh, e);
    let mut g = [[0.0; 2]; 2];
    for i in 0..3 {
        let ux = u.get(tri[i], 0);
        let uy = u.get(tri[i], 1);
        let [bx, by] = shape.grads[i];
        g[0][0] += ux * bx;
        g[0][1] += ux * by;
        g[1][0] += uy * bx;
        g[1][1] += uy * by;
    }
    g
}

/// Exact element mean of `(1 - d)^2` for a linear damage field.
pub fn element_degradation(d: &Field, tri: &[usize; 3]) -> f64 {
    let d0 = d.get(tri[0], 0);
    let d1 = d.get(tri[1], 0);
    let d2 = d.get(tri[2], 0);
    let mean = (d0 + d1 + d2) / 3.0;
    let mean_sq = (d0 * d0 + d1 * d1 + d2 * d2 + d0 * d1 + d0 * d2 + d1 * d2) / 6.0;
    1.0 - 2.0 * mean + mean_sq
}

/// Sparsity pattern for a `ncomp`-component nodal field.
fn dof_pattern(mesh: &Mesh, ncomp: usize) -> Vec<Vec<usize>> {
    let adj = mesh.node_adjacency();
    let mut rows = Vec::with_capacity(mesh.n_nodes() * ncomp);
    for (node, neighbors) in adj.iter().enumerate() {
        for _comp in 0..ncomp {
            let mut cols = Vec::with_capacity((neighbors.len() + 1) * ncomp);
            for &other in neighbors.iter().chain(std::iter::once(&node)) {
                for c in 0..ncomp {
                    cols.push(other * ncomp + c);
                }
            }
            rows.push(cols);
        }
    }
    rows
}

pub fn u_dof_pattern(mesh: &Mesh) -> Vec<Vec<usize>> {
    dof_pattern(mesh, 2)
}

pub fn d_dof_pattern(mesh: &Mesh) -> Vec<Vec<usize>> {
    dof_pattern(mesh, 1)
}

/// Plane-strain block of a Kelvin operator: rows/cols (11, 22, sqrt2*12).
#[inline]
fn plane_block(c: &KelvinMat) -> [[f64; 3]; 3] {
    const P: [usize; 3] = [0, 1, 5];
    let mut out = [[0.0; 3]; 3];
    for (bi, &i) in P.iter().enumerate() {
        for (bj, &j) in P.iter().enumerate() {
            out[bi][bj] = c[(i, j)];
        }
    }
    out
}

/// Element B-matrix rows for the plane Kelvin components: column layout
/// `(u1x, u1y, u2x, u2y, u3x, u3y)`.
fn b_matrix(shape: &TriShape) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        let [bx, by] = shape.grads[i];
        b[0][2 * i] = bx;
        b[1][2 * i + 1] = by;
        b[2][2 * i] = by / SQRT_2;
        b[2][2 * i + 1] = bx / SQRT_2;
    }
    b
}

/// Assembles the tangent stiffness from per-element constitutive states.
///
/// `use_fallback` replaces the one-sided split tangent with the damped
/// split-free operator `g(d) C` for robustness near switching surfaces.
pub fn assemble_u_stiffness(
    mesh: &Mesh,
    states: &[crate::phasefield::ElementConstitutive],
    use_fallback: bool,
    model: &crate::elasticity::ElasticModel,
    k: &mut CsrMatrix,
) {
    use rayon::prelude::*;
    let element_matrices: Vec<([usize; 3], [[f64; 6]; 6])> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| {
            let st = &states[e];
            let tangent = if use_fallback {
                KelvinMat::from(st.g_elem * model.c.mat)
            } else {
                st.g_elem * st.split.c_t.mat + st.split.c_c.mat
            };
            let shape = tri_shape(mesh, e);
            let cb = plane_block(&tangent);
            let b = b_matrix(&shape);
            let mut ke = [[0.0; 6]; 6];
            for r in 0..3 {
                for s in 0..3 {
                    let c_rs = cb[r][s] * shape.area;
                    for p in 0..6 {
                        if b[r][p] == 0.0 {
                            continue;
                        }
                        for q in 0..6 {
                            ke[p][q] += b[r][p] * c_rs * b[s][q];
                        }
                    }
                }
            }
            (mesh.triangles[e], ke)
        })
        .collect();

    for (tri, ke) in element_matrices {
        for (p, ke_row) in ke.iter().enumerate() {
            let gi = tri[p / 2] * 2 + p % 2;
            for (q, &v) in ke_row.iter().enumerate() {
                let gj = tri[q / 2] * 2 + q % 2;
                k.add(gi, gj, v);
            }
        }
    }
}

/// Internal nodal forces from per-element stresses: `f_e = A B^T sigma`.
pub fn internal_forces(mesh: &Mesh, sigmas: &[SymTensor2]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_nodes() * 2];
    for e in 0..mesh.n_triangles() {
        let tri = mesh.triangles[e];
        let shape = tri_shape(mesh, e);
        let s = &sigmas[e];
        let s11 = s.vec[0];
        let s22 = s.vec[1];
        let s12 = s.vec[5] / SQRT_2;
        for i in 0..3 {
            let [bx, by] = shape.grads[i];
            f[tri[i] * 2] += shape.area * (bx * s11 + by * s12);
            f[tri[i] * 2 + 1] += shape.area * (by * s22 + bx * s12);
        }
    }
    f
}

/// Assembles the damage system `A d = b` from element crack-driving
/// energies. The weak form is affine in `d` for both AT1 and AT2:
///
/// ```text
/// A = M (2 psi_t + Gc w1 / (4 c_w ell)) + K Gc ell / (2 c_w)
/// b = (2 psi_t - Gc w0 / (4 c_w ell)) * A_e / 3 per node
/// ```
///
/// with `w'(d) = w0 + w1 d` and the exact element mass matrix.
pub fn assemble_d_system(
    mesh: &Mesh,
    psi_t: &[f64],
    pf: &PFModel,
    a: &mut CsrMatrix,
    rhs: &mut [f64],
) {
    let (w0, w1) = pf.w_prime_coeffs();
    let c_w = pf.c_w();
    let mass_coeff_pf = pf.gc * w1 / (4.0 * c_w * pf.ell);
    let grad_coeff = pf.gc * pf.ell / (2.0 * c_w);
    let load_pf = pf.gc * w0 / (4.0 * c_w * pf.ell);

    for e in 0..mesh.n_triangles() {
        let tri = mesh.triangles[e];
        let shape = tri_shape(mesh, e);
        let area = shape.area;
        let psi = psi_t[e];
        let mass_scale = (2.0 * psi + mass_coeff_pf) * area / 12.0;
        let load = (2.0 * psi - load_pf) * area / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                let mass = if i == j { 2.0 } else { 1.0 };
                let lap = grad_coeff
                    * area
                    * (shape.grads[i][0] * shape.grads[j][0]
                        + shape.grads[i][1] * shape.grads[j][1]);
                a.add(tri[i], tri[j], mass_scale * mass + lap);
            }
            rhs[tri[i]] += load;
        }
    }
}

/// Sum of a force component over a named node set (reaction recovery).
pub fn reaction_component(mesh: &Mesh, forces: &[f64], node_set: &str, comp: usize) -> f64 {
    mesh.node_sets
        .get(node_set)
        .map(|set| set.iter().map(|&n| forces[n * 2 + comp]).sum())
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{benchmark_orthotropic, ElasticModel};
    use crate::phasefield::{PFModel, PFVariant};
    use crate::split::SplitLaw;
    use std::collections::BTreeMap;

    fn unit_square() -> Mesh {
        let mut mesh = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            node_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
            slit: None,
        };
        mesh.node_sets.insert("top".into(), vec![2, 3]);
        mesh.node_sets.insert("bottom".into(), vec![0, 1]);
        mesh
    }

    #[test]
    fn rigid_translation_has_zero_strain() {
        let mesh = unit_square();
        let mut u = Field::zeros(4, 2);
        for n in 0..4 {
            u.set(n, 0, 0.3);
            u.set(n, 1, -0.7);
        }
        for e in 0..2 {
            assert!(strain_at_qp(&mesh, e, &u).norm() <= 1e-15);
        }
    }

    #[test]
    fn linear_field_gives_uniform_strain() {
        let mesh = unit_square();
        let a = 2.5e-3;
        let mut u = Field::zeros(4, 2);
        for n in 0..4 {
            u.set(n, 0, a * mesh.nodes[n][0]);
        }
        for e in 0..2 {
            let eps = strain_at_qp(&mesh, e, &u);
            assert!((eps.vec[0] - a).abs() < 1e-15);
            assert!(eps.vec[1].abs() < 1e-15);
            assert!(eps.vec[5].abs() < 1e-15);
        }
    }

    #[test]
    fn small_rotation_is_strain_free() {
        // Antisymmetric gradient: u = theta * (-y, x).
        let mesh = unit_square();
        let theta = 1e-4;
        let mut u = Field::zeros(4, 2);
        for n in 0..4 {
            u.set(n, 0, -theta * mesh.nodes[n][1]);
            u.set(n, 1, theta * mesh.nodes[n][0]);
        }
        for e in 0..2 {
            assert!(strain_at_qp(&mesh, e, &u).norm() <= 1e-18);
        }
    }

    #[test]
    fn single_element_stiffness_matches_hand_assembly() {
        // One CST with the plane-strain condensed orthotropic stiffness,
        // assembled independently in engineering (Voigt) form.
        let mesh = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            node_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
            slit: None,
        };
        let model = benchmark_orthotropic();
        let d = Field::zeros(3, 1);
        let u = Field::zeros(3, 2);
        let states = crate::phasefield::evaluate_elements(&mesh, &u, &d, &model, SplitLaw::None);
        let mut k = CsrMatrix::from_pattern(u_dof_pattern(&mesh));
        assemble_u_stiffness(&mesh, &states, false, &model, &mut k);

        // Voigt D-matrix from the Kelvin block: strains (e11, e22, gamma12).
        let c = &model.c.mat;
        let dmat = [
            [c[(0, 0)], c[(0, 1)], c[(0, 5)] / SQRT_2],
            [c[(1, 0)], c[(1, 1)], c[(1, 5)] / SQRT_2],
            [c[(5, 0)] / SQRT_2, c[(5, 1)] / SQRT_2, c[(5, 5)] / 2.0],
        ];
        // B for this right triangle (area 1/2): dN = [(-1,-1), (1,0), (0,1)].
        let grads: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut b = [[0.0; 6]; 3];
        for i in 0..3 {
            b[0][2 * i] = grads[i][0];
            b[1][2 * i + 1] = grads[i][1];
            b[2][2 * i] = grads[i][1];
            b[2][2 * i + 1] = grads[i][0];
        }
        let area = 0.5;
        for p in 0..6 {
            for q in 0..6 {
                let mut expect = 0.0;
                for r in 0..3 {
                    for s in 0..3 {
                        expect += b[r][p] * dmat[r][s] * b[s][q];
                    }
                }
                expect *= area;
                let got = k.get(p, q);
                assert!(
                    (got - expect).abs() <= 1e-9 * model.c.norm(),
                    "entry ({p},{q}): {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn patch_test_uniform_strain_exact() {
        // Linear Dirichlet data on all boundary nodes reproduces the uniform
        // strain exactly (no interior nodes here, so verify the residual of
        // the exact solution vanishes).
        let mesh = unit_square();
        let model = ElasticModel::from_young_poisson(1e9, 0.3).unwrap();
        let exx = 1e-3;
        let mut u = Field::zeros(4, 2);
        for n in 0..4 {
            u.set(n, 0, exx * mesh.nodes[n][0]);
        }
        let d = Field::zeros(4, 1);
        let f = crate::phasefield::residual_u(&mesh, &u, &d, &model, SplitLaw::None);
        // Interior equilibrium: force balance at every node against the
        // uniform stress field; total must vanish.
        let sum_x: f64 = (0..4).map(|n| f[2 * n]).sum();
        let sum_y: f64 = (0..4).map(|n| f[2 * n + 1]).sum();
        assert!(sum_x.abs() <= 1e-6 && sum_y.abs() <= 1e-6);
        for e in 0..2 {
            let eps = strain_at_qp(&mesh, e, &u);
            assert!((eps.vec[0] - exx).abs() <= 1e-15);
        }
    }

    #[test]
    fn plane_strain_sigma33_from_poisson_effect() {
        // Uniaxial plane-strain patch with isotropic C: sigma33 =
        // nu * (sigma11 + sigma22) while eps33 = 0.
        let nu = 0.3;
        let model = ElasticModel::from_young_poisson(2.1e11, nu).unwrap();
        let mesh = unit_square();
        let mut u = Field::zeros(4, 2);
        for n in 0..4 {
            u.set(n, 0, 1e-3 * mesh.nodes[n][0]);
        }
        let eps = strain_at_qp(&mesh, 0, &u);
        assert_eq!(eps.vec[2], 0.0);
        let sigma = model.c.apply(&eps);
        let expect = nu * (sigma.vec[0] + sigma.vec[1]);
        assert!((sigma.vec[2] - expect).abs() <= 1e-9 * sigma.norm());
        assert!(sigma.vec[2].abs() > 0.0);
    }

    #[test]
    fn damage_system_recovers_homogeneous_stationarity() {
        // Uniform psi_t with natural BCs: the solution is the homogeneous
        // stationarity value at every node.
        let mesh = unit_square();
        let pf = PFModel::new(PFVariant::At2, 0.1, 50.0).unwrap();
        let psi = 400.0;
        let psi_t = vec![psi; mesh.n_triangles()];
        let mut a = CsrMatrix::from_pattern(d_dof_pattern(&mesh));
        let mut rhs = vec![0.0; mesh.n_nodes()];
        assemble_d_system(&mesh, &psi_t, &pf, &mut a, &mut rhs);
        let (d, _) = crate::fem::sparse::solve_spd(&a, &rhs).unwrap();
        let expect = pf.homogeneous_damage(psi);
        assert!(expect > 0.01);
        for &v in &d {
            assert!((v - expect).abs() <= 1e-10, "{v} vs {expect}");
        }
    }

    #[test]
    fn zero_driving_force_keeps_damage_zero() {
        let mesh = unit_square();
        let pf = PFModel::new(PFVariant::At2, 0.1, 50.0).unwrap();
        let psi_t = vec![0.0; mesh.n_triangles()];
        let mut a = CsrMatrix::from_pattern(d_dof_pattern(&mesh));
        let mut rhs = vec![0.0; mesh.n_nodes()];
        assemble_d_system(&mesh, &psi_t, &pf, &mut a, &mut rhs);
        let (d, _) = crate::fem::sparse::solve_spd(&a, &rhs).unwrap();
        for &v in &d {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn reaction_sums_over_named_set() {
        let mesh = unit_square();
        let mut forces = vec![0.0; 8];
        forces[2 * 2 + 1] = 3.0;
        forces[3 * 2 + 1] = 4.0;
        assert_eq!(reaction_component(&mesh, &forces, "top", 1), 7.0);
        assert_eq!(reaction_component(&mesh, &forces, "missing", 1), 0.0);
    }
}
