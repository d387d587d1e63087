//! Energy-release-rate post-processing by virtual domain perturbation.
//!
//! The perturbation field is `theta = f(r) t` with `t = (cos a, sin a)` the
//! trial extension direction and `f` equal to 1 inside `r_inner`, 0 outside
//! `r_outer`, linear in between. The release rate is the domain integral
//!
//! ```text
//! G = int  sigma : (grad u  grad theta) - 1/2 (sigma : grad u) div theta
//! ```
//!
//! with the degraded stress. The tensile variant replaces `sigma` by the
//! undegraded crack-driving stress `sigma_t = C eps_t` and `grad u` by
//! `grad u_t = grad u - eps_c`, which removes the persistent (compressive)
//! energy flux from the estimate and points the maximum along the actual
//! propagation direction.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::elasticity::ElasticModel;
use crate::fem::assembly::{displacement_gradient, element_degradation, strain_at_qp, tri_shape};
use crate::fem::mesh::SimState;
use crate::split::{split, SplitLaw};
use crate::{Error, Result};

/// Annulus radii of the virtual perturbation.
#[derive(Debug, Clone, Copy)]
pub struct ThetaAnnulus {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl ThetaAnnulus {
    /// Defaults tied to the regularization length: `r_i = 4 ell`,
    /// `r_o = 2.5 r_i`.
    pub fn from_length_scale(ell: f64) -> ThetaAnnulus {
        let r_inner = 4.0 * ell;
        ThetaAnnulus {
            r_inner,
            r_outer: 2.5 * r_inner,
        }
    }
}

/// Plateau-ramp radial profile of the perturbation.
pub fn ramp(r: f64, annulus: &ThetaAnnulus) -> f64 {
    if r < annulus.r_inner {
        1.0
    } else if r > annulus.r_outer {
        0.0
    } else {
        (r - annulus.r_outer) / (annulus.r_inner - annulus.r_outer)
    }
}

/// Release-rate fan at one state.
#[derive(Debug, Clone)]
pub struct GThetaCurve {
    pub step: usize,
    pub ubar: f64,
    pub angles_deg: Vec<f64>,
    pub g_standard: Vec<f64>,
    pub g_tensile: Vec<f64>,
}

impl GThetaCurve {
    /// Angle (degrees) of the largest tensile release rate.
    pub fn argmax_tensile(&self) -> Option<f64> {
        argmax(&self.angles_deg, &self.g_tensile)
    }

    pub fn argmax_standard(&self) -> Option<f64> {
        argmax(&self.angles_deg, &self.g_standard)
    }

    pub fn max_tensile(&self) -> Option<f64> {
        self.g_tensile.iter().copied().reduce(f64::max)
    }
}

fn argmax(angles: &[f64], values: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&a, &v) in angles.iter().zip(values) {
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((a, v));
        }
    }
    best.map(|(a, _)| a)
}

/// Crack-tip estimate: the farthest point of the damage band connected to
/// the slit.
///
/// Nodes with `d >= threshold` form a subgraph seeded at the slit tip (or
/// the highest-damage node when the mesh carries no slit); the tip is the
/// node at maximal arc-length distance from the seed, which itself sits at
/// maximal distance from the slit mouth. A pristine state returns the
/// geometric slit tip.
pub fn locate_tip(state: &SimState, threshold: f64) -> [f64; 2] {
    let mesh = state.mesh.as_ref();
    let seed = match &mesh.slit {
        Some(slit) => slit.tip_node,
        None => {
            let mut best = 0;
            for n in 1..mesh.n_nodes() {
                if state.d.get(n, 0) > state.d.get(best, 0) {
                    best = n;
                }
            }
            best
        }
    };
    let in_band = |n: usize| state.d.get(n, 0) >= threshold;

    let adj = mesh.node_adjacency();
    let n = mesh.n_nodes();
    let mut dist = vec![f64::INFINITY; n];
    dist[seed] = 0.0;
    // Dijkstra over the damage subgraph with edge lengths; ties resolved by
    // node index for determinism.
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(std::cmp::Reverse((ordered(0.0), seed)));
    while let Some(std::cmp::Reverse((d_ord, node))) = heap.pop() {
        let d_cur = f64::from_bits(d_ord.0);
        if d_cur > dist[node] {
            continue;
        }
        for &next in &adj[node] {
            if !in_band(next) {
                continue;
            }
            let pa = mesh.nodes[node];
            let pb = mesh.nodes[next];
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let cand = d_cur + len;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(std::cmp::Reverse((ordered(cand), next)));
            }
        }
    }
    let mut tip = seed;
    for node in 0..n {
        if dist[node].is_finite() && dist[node] > dist[tip] {
            tip = node;
        }
    }
    mesh.nodes[tip]
}

/// Total-order key for non-negative finite distances.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct OrderedBits(u64);

fn ordered(x: f64) -> OrderedBits {
    OrderedBits(x.to_bits())
}

fn check_annulus(state: &SimState, tip: [f64; 2], annulus: &ThetaAnnulus) -> Result<()> {
    let (lo, hi) = state.mesh.bbox();
    let inside_x = tip[0] + annulus.r_outer > lo[0] && tip[0] - annulus.r_outer < hi[0];
    let inside_y = tip[1] + annulus.r_outer > lo[1] && tip[1] - annulus.r_outer < hi[1];
    if !(inside_x && inside_y) {
        return Err(Error::AnnulusOutsideDomain {
            x: tip[0],
            y: tip[1],
            r_inner: annulus.r_inner,
            r_outer: annulus.r_outer,
        });
    }
    Ok(())
}

/// True when the annulus sticks out of the mesh bounding box (the integral
/// is then clipped at the boundary).
pub fn annulus_clipped(state: &SimState, tip: [f64; 2], annulus: &ThetaAnnulus) -> bool {
    let (lo, hi) = state.mesh.bbox();
    tip[0] - annulus.r_outer < lo[0]
        || tip[0] + annulus.r_outer > hi[0]
        || tip[1] - annulus.r_outer < lo[1]
        || tip[1] + annulus.r_outer > hi[1]
}

fn embed2(g: &[[f64; 2]; 2]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(0, 0)] = g[0][0];
    m[(0, 1)] = g[0][1];
    m[(1, 0)] = g[1][0];
    m[(1, 1)] = g[1][1];
    m
}

fn contract(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += a[(i, j)] * b[(i, j)];
        }
    }
    acc
}

#[derive(Clone, Copy)]
enum Integrand {
    Standard,
    Tensile,
}

#[allow(clippy::too_many_arguments)]
fn gtheta_integral(
    state: &SimState,
    model: &ElasticModel,
    law: SplitLaw,
    tip: [f64; 2],
    angle: f64,
    annulus: &ThetaAnnulus,
    which: Integrand,
) -> Result<f64> {
    check_annulus(state, tip, annulus)?;
    let mesh = state.mesh.as_ref();
    let (ty, tx) = angle.sin_cos();

    // Nodal perturbation magnitudes.
    let f_node: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|p| {
            let r = ((p[0] - tip[0]).powi(2) + (p[1] - tip[1]).powi(2)).sqrt();
            ramp(r, annulus)
        })
        .collect();

    let total: f64 = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| {
            let tri = mesh.triangles[e];
            let fs = [f_node[tri[0]], f_node[tri[1]], f_node[tri[2]]];
            // Constant theta over the element: both terms carry grad theta.
            if fs[0] == fs[1] && fs[1] == fs[2] {
                return 0.0;
            }
            let shape = tri_shape(mesh, e);
            let mut grad_f = [0.0; 2];
            for i in 0..3 {
                grad_f[0] += shape.grads[i][0] * fs[i];
                grad_f[1] += shape.grads[i][1] * fs[i];
            }
            // grad theta[i][j] = t_i df/dx_j.
            let grad_theta = embed2(&[
                [tx * grad_f[0], tx * grad_f[1]],
                [ty * grad_f[0], ty * grad_f[1]],
            ]);
            let div_theta = grad_theta[(0, 0)] + grad_theta[(1, 1)];

            let grad_u = embed2(&displacement_gradient(mesh, e, &state.u));
            let eps = strain_at_qp(mesh, e, &state.u);
            let st = split(law, model, &eps);

            let (sigma, grad_u_eff) = match which {
                Integrand::Standard => {
                    let g_elem = element_degradation(&state.d, &tri);
                    let sigma = st.sigma_t * g_elem + st.sigma_c;
                    (sigma.to_dense(), grad_u)
                }
                Integrand::Tensile => {
                    // Undegraded crack-driving stress; the persistent strain
                    // is removed from the displacement gradient.
                    (st.sigma_t.to_dense(), grad_u - st.eps_c.to_dense())
                }
            };
            let term1 = contract(&sigma, &(grad_u_eff * grad_theta));
            let term2 = 0.5 * contract(&sigma, &grad_u_eff) * div_theta;
            shape.area * (term1 - term2)
        })
        .sum();
    Ok(total)
}

/// Standard release rate with the degraded stress.
pub fn gtheta(
    state: &SimState,
    model: &ElasticModel,
    law: SplitLaw,
    tip: [f64; 2],
    angle: f64,
    annulus: &ThetaAnnulus,
) -> Result<f64> {
    gtheta_integral(state, model, law, tip, angle, annulus, Integrand::Standard)
}

/// Tensile release rate: crack-driving stress and `grad u - eps_c`.
pub fn gtheta_tensile(
    state: &SimState,
    model: &ElasticModel,
    law: SplitLaw,
    tip: [f64; 2],
    angle: f64,
    annulus: &ThetaAnnulus,
) -> Result<f64> {
    gtheta_integral(state, model, law, tip, angle, annulus, Integrand::Tensile)
}

/// Evaluates both release rates across a fan of directions.
pub fn sweep(
    state: &SimState,
    model: &ElasticModel,
    law: SplitLaw,
    tip: [f64; 2],
    angles_deg: &[f64],
    annulus: &ThetaAnnulus,
) -> Result<GThetaCurve> {
    let mut g_standard = Vec::with_capacity(angles_deg.len());
    let mut g_tensile = Vec::with_capacity(angles_deg.len());
    for &deg in angles_deg {
        let a = deg.to_radians();
        g_standard.push(gtheta(state, model, law, tip, a, annulus)?);
        g_tensile.push(gtheta_tensile(state, model, law, tip, a, annulus)?);
    }
    Ok(GThetaCurve {
        step: state.step,
        ubar: state.ubar,
        angles_deg: angles_deg.to_vec(),
        g_standard,
        g_tensile,
    })
}
