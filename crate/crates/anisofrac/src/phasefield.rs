//! AT1/AT2 phase-field energies and the staggered evolution.
//!
//! The displacement subproblem is solved by Newton on the one-sided
//! consistent tangent `g(d) C_t + C_c`; the damage subproblem is a single
//! SPD linear solve for AT2 (the weak form is affine in `d`) and a
//! bound-constrained solve (`d >= 0`) for AT1. Irreversibility is enforced
//! by clamping `d` node-wise against the last accepted step. Alternate
//! minimization iterates the two solves until the damage increment drops
//! below tolerance.

use serde::{Deserialize, Serialize};

use crate::elasticity::ElasticModel;
use crate::fem::assembly::{self, element_degradation, internal_forces, strain_at_qp, tri_shape};
use crate::fem::mesh::{Field, Mesh, SimState};
use crate::fem::sparse::{self, CsrMatrix};
use crate::split::{split, SplitLaw, SplitState};
use crate::{Error, Result};

/// AT1 or AT2 crack geometric function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PFVariant {
    #[serde(rename = "AT1", alias = "at1")]
    At1,
    #[serde(rename = "AT2", alias = "at2")]
    At2,
}

/// Phase-field model parameters.
#[derive(Debug, Clone, Copy)]
pub struct PFModel {
    pub variant: PFVariant,
    /// Regularization length (m).
    pub ell: f64,
    /// Critical energy release rate (N/m).
    pub gc: f64,
}

impl PFModel {
    pub fn new(variant: PFVariant, ell: f64, gc: f64) -> Result<Self> {
        if ell <= 0.0 || gc <= 0.0 {
            return Err(Error::Config(format!(
                "phase-field parameters must be positive (ell={ell}, gc={gc})"
            )));
        }
        Ok(PFModel { variant, ell, gc })
    }

    /// Crack geometric function `w(d)`.
    pub fn w(&self, d: f64) -> f64 {
        match self.variant {
            PFVariant::At1 => d,
            PFVariant::At2 => d * d,
        }
    }

    /// `w'(d)` as affine coefficients `(w0, w1)` with `w'(d) = w0 + w1 d`.
    pub fn w_prime_coeffs(&self) -> (f64, f64) {
        match self.variant {
            PFVariant::At1 => (1.0, 0.0),
            PFVariant::At2 => (0.0, 2.0),
        }
    }

    pub fn w_prime(&self, d: f64) -> f64 {
        let (w0, w1) = self.w_prime_coeffs();
        w0 + w1 * d
    }

    /// Normalization constant `c_w = integral_0^1 sqrt(w(d)) dd`.
    pub fn c_w(&self) -> f64 {
        match self.variant {
            PFVariant::At1 => 2.0 / 3.0,
            PFVariant::At2 => 0.5,
        }
    }

    /// Degradation function `g(d) = (1 - d)^2`.
    pub fn g(&self, d: f64) -> f64 {
        (1.0 - d) * (1.0 - d)
    }

    pub fn g_prime(&self, d: f64) -> f64 {
        -2.0 * (1.0 - d)
    }

    /// Homogeneous damage solving `g'(d) psi + Gc w'(d) / (4 c_w ell) = 0`,
    /// clamped to `[0, 1]`; the pointwise stationarity oracle.
    pub fn homogeneous_damage(&self, psi: f64) -> f64 {
        let c = self.gc / (4.0 * self.c_w() * self.ell);
        let (w0, w1) = self.w_prime_coeffs();
        // -2 (1 - d) psi + c (w0 + w1 d) = 0.
        let d = (2.0 * psi - c * w0) / (2.0 * psi + c * w1);
        d.clamp(0.0, 1.0)
    }
}

/// Crack surface density per unit volume
/// `(1 / 4 c_w) (w(d)/ell + ell |grad d|^2)`.
pub fn crack_density(pf: &PFModel, d: f64, grad_d: [f64; 2]) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::DamageOutOfRange(d));
    }
    let g2 = grad_d[0] * grad_d[0] + grad_d[1] * grad_d[1];
    Ok((pf.w(d) / pf.ell + pf.ell * g2) / (4.0 * pf.c_w()))
}

/// Staggered-loop controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StaggeredConfig {
    /// Maximum alternate-minimization iterations per load step.
    pub max_iters: usize,
    /// Convergence threshold on the damage increment (infinity norm).
    pub tol_d: f64,
    /// Relative residual threshold for the displacement solve.
    pub tol_u: f64,
    /// Newton iteration cap inside each displacement solve.
    pub max_newton: usize,
}

impl Default for StaggeredConfig {
    fn default() -> Self {
        StaggeredConfig {
            max_iters: 200,
            tol_d: 1e-4,
            tol_u: 1e-8,
            max_newton: 25,
        }
    }
}

/// Dirichlet data: fixed dofs with prescribed values.
#[derive(Debug, Clone, Default)]
pub struct DirichletSet {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

impl DirichletSet {
    pub fn push(&mut self, dof: usize, value: f64) {
        self.dofs.push(dof);
        self.values.push(value);
    }

    pub fn apply_to(&self, field: &mut Field) {
        for (&dof, &v) in self.dofs.iter().zip(&self.values) {
            field.values[dof] = v;
        }
    }
}

/// Per-element constitutive snapshot at the current strain.
pub struct ElementConstitutive {
    pub split: SplitState,
    pub g_elem: f64,
}

/// Evaluates the split at every element for the current displacement field.
///
/// Elements are independent; the map runs in parallel but the output order
/// is fixed by element index, so results are bitwise reproducible for any
/// thread count.
pub fn evaluate_elements(
    mesh: &Mesh,
    u: &Field,
    d: &Field,
    model: &ElasticModel,
    law: SplitLaw,
) -> Vec<ElementConstitutive> {
    use rayon::prelude::*;
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|e| {
            let eps = strain_at_qp(mesh, e, u);
            ElementConstitutive {
                split: split(law, model, &eps),
                g_elem: element_degradation(d, &mesh.triangles[e]),
            }
        })
        .collect()
}

/// Total regularized energy per unit thickness (J/m). Traction and body
/// force work terms are part of the contract but zero for the shipped
/// benchmarks, so only the stored terms appear.
pub fn total_energy(
    mesh: &Mesh,
    u: &Field,
    d: &Field,
    model: &ElasticModel,
    law: SplitLaw,
    pf: &PFModel,
) -> f64 {
    let states = evaluate_elements(mesh, u, d, model, law);
    let mut energy = 0.0;
    for (e, st) in states.iter().enumerate() {
        let area = mesh.area(e);
        energy += area * (st.g_elem * st.split.psi_t + st.split.psi_c);
        energy += crack_energy_element(mesh, e, d, pf);
    }
    energy
}

/// Exact element integral of `Gc gamma(d, grad d)`.
fn crack_energy_element(mesh: &Mesh, e: usize, d: &Field, pf: &PFModel) -> f64 {
    let tri = mesh.triangles[e];
    let shape = tri_shape(mesh, e);
    let area = shape.area;
    let dn = [d.get(tri[0], 0), d.get(tri[1], 0), d.get(tri[2], 0)];
    let mean = (dn[0] + dn[1] + dn[2]) / 3.0;
    let w_int = match pf.variant {
        PFVariant::At1 => area * mean,
        // Exact integral of d^2 for linear d.
        PFVariant::At2 => {
            area / 6.0
                * (dn[0] * dn[0]
                    + dn[1] * dn[1]
                    + dn[2] * dn[2]
                    + dn[0] * dn[1]
                    + dn[0] * dn[2]
                    + dn[1] * dn[2])
        }
    };
    let (gx, gy) = {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for i in 0..3 {
            gx += shape.grads[i][0] * dn[i];
            gy += shape.grads[i][1] * dn[i];
        }
        (gx, gy)
    };
    pf.gc / (4.0 * pf.c_w()) * (w_int / pf.ell + pf.ell * area * (gx * gx + gy * gy))
}

/// Nodal residual of the displacement problem (internal forces; external
/// loads are zero in the shipped benchmarks).
pub fn residual_u(
    mesh: &Mesh,
    u: &Field,
    d: &Field,
    model: &ElasticModel,
    law: SplitLaw,
) -> Vec<f64> {
    let states = evaluate_elements(mesh, u, d, model, law);
    element_stress_forces(mesh, &states)
}

fn element_stress_forces(mesh: &Mesh, states: &[ElementConstitutive]) -> Vec<f64> {
    let sigmas: Vec<_> = states
        .iter()
        .map(|st| st.split.sigma_t * st.g_elem + st.split.sigma_c)
        .collect();
    internal_forces(mesh, &sigmas)
}

/// Nodal residual of the damage problem at the current fields.
pub fn residual_d(
    mesh: &Mesh,
    u: &Field,
    d: &Field,
    model: &ElasticModel,
    law: SplitLaw,
    pf: &PFModel,
) -> Vec<f64> {
    let states = evaluate_elements(mesh, u, d, model, law);
    let psi_t: Vec<f64> = states.iter().map(|st| st.split.psi_t).collect();
    let mut a = CsrMatrix::from_pattern(assembly::d_dof_pattern(mesh));
    let mut rhs = vec![0.0; mesh.n_nodes()];
    assembly::assemble_d_system(mesh, &psi_t, pf, &mut a, &mut rhs);
    let mut out = vec![0.0; mesh.n_nodes()];
    a.matvec(&d.values, &mut out);
    for i in 0..out.len() {
        out[i] -= rhs[i];
    }
    out
}

/// Outcome of one displacement solve.
#[derive(Debug, Clone, Copy)]
pub struct NewtonInfo {
    pub iterations: usize,
    pub residual_ratio: f64,
    pub converged: bool,
}

/// Newton solve of the displacement subproblem at fixed damage.
///
/// Convergence: free residual norm below `tol_u` times the reaction-force
/// norm (with the initial residual as fallback scale). On stagnation the
/// iteration falls back to the damped split-free operator `g(d) C`.
pub fn solve_u(
    mesh: &Mesh,
    u: &mut Field,
    d: &Field,
    model: &ElasticModel,
    law: SplitLaw,
    bc: &DirichletSet,
    cfg: &StaggeredConfig,
    u_pattern: &CsrMatrix,
) -> Result<NewtonInfo> {
    if bc.dofs.is_empty() {
        return Err(Error::LinearSolve(
            "no displacement constraints: rigid modes make the system singular".into(),
        ));
    }
    bc.apply_to(u);
    let n_dofs = u.n_dofs();
    let mut constrained = vec![false; n_dofs];
    for &dof in &bc.dofs {
        constrained[dof] = true;
    }

    let norm_where = |r: &[f64], want: bool| -> f64 {
        r.iter()
            .enumerate()
            .filter(|(i, _)| constrained[*i] == want)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    };

    let mut states = evaluate_elements(mesh, u, d, model, law);
    let mut residual = element_stress_forces(mesh, &states);
    let mut res_free = norm_where(&residual, false);
    let scale0 = res_free.max(norm_where(&residual, true));
    let mut last_res = res_free;
    let mut use_fallback = false;

    for it in 0..cfg.max_newton {
        let scale = norm_where(&residual, true).max(scale0);
        if res_free <= cfg.tol_u * scale || res_free == 0.0 {
            return Ok(NewtonInfo {
                iterations: it,
                residual_ratio: if scale > 0.0 { res_free / scale } else { 0.0 },
                converged: true,
            });
        }

        let mut k = u_pattern.clone();
        k.reset();
        assembly::assemble_u_stiffness(mesh, &states, use_fallback, model, &mut k);
        let mut rhs: Vec<f64> = residual.iter().map(|v| -v).collect();
        k.eliminate_dirichlet(&mut rhs, &bc.dofs);
        let (delta, _) = sparse::solve_spd(&k, &rhs)?;

        // Backtracking on the free residual norm.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let mut trial = u.clone();
            for i in 0..n_dofs {
                trial.values[i] += step * delta[i];
            }
            let trial_states = evaluate_elements(mesh, &trial, d, model, law);
            let trial_residual = element_stress_forces(mesh, &trial_states);
            let trial_free = norm_where(&trial_residual, false);
            if trial_free <= res_free || step < 0.2 {
                *u = trial;
                states = trial_states;
                residual = trial_residual;
                res_free = trial_free;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || (it > 0 && res_free > 0.99 * last_res) {
            use_fallback = true;
        }
        last_res = res_free;
    }
    let scale = norm_where(&residual, true).max(scale0);
    Ok(NewtonInfo {
        iterations: cfg.max_newton,
        residual_ratio: if scale > 0.0 { res_free / scale } else { 0.0 },
        converged: res_free <= cfg.tol_u * scale,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DamageSolveInfo {
    /// Infinity norm of the damage update.
    pub max_delta: f64,
    /// Nodes outside [0, 1] before clamping (AT2 unconstrained solve).
    pub bound_violations: usize,
}

/// Damage subproblem at fixed displacement, then the irreversibility clamp.
///
/// AT2: one SPD solve, clamped into `[0, 1]` afterwards (violations are
/// counted before clamping). AT1: projected SOR with bounds `[0, 1]`.
/// Both paths finish with the node-wise clamp `d >= d_prev`.
pub fn solve_d(
    mesh: &Mesh,
    u: &Field,
    d: &mut Field,
    d_prev: &Field,
    model: &ElasticModel,
    law: SplitLaw,
    pf: &PFModel,
    d_pattern: &CsrMatrix,
) -> Result<DamageSolveInfo> {
    let states = evaluate_elements(mesh, u, d, model, law);
    let psi_t: Vec<f64> = states.iter().map(|st| st.split.psi_t).collect();
    let mut a = d_pattern.clone();
    a.reset();
    let mut rhs = vec![0.0; mesh.n_nodes()];
    assembly::assemble_d_system(mesh, &psi_t, pf, &mut a, &mut rhs);

    let raw = match pf.variant {
        PFVariant::At2 => sparse::solve_spd(&a, &rhs)?.0,
        PFVariant::At1 => {
            let lower = vec![0.0; mesh.n_nodes()];
            let upper = vec![1.0; mesh.n_nodes()];
            sparse::solve_spd_bounded(&a, &rhs, &lower, &upper, 1e-10, 50_000)?.0
        }
    };

    let mut bound_violations = 0usize;
    let mut max_delta = 0.0f64;
    for i in 0..mesh.n_nodes() {
        let v = raw[i];
        if !(0.0..=1.0).contains(&v) {
            bound_violations += 1;
        }
        let clamped = v.clamp(0.0, 1.0).max(d_prev.values[i]);
        max_delta = max_delta.max((clamped - d.values[i]).abs());
        d.values[i] = clamped;
    }
    Ok(DamageSolveInfo {
        max_delta,
        bound_violations,
    })
}

/// Applies a boundary displacement target and alternates `solve_u` /
/// `solve_d` until the damage increment stalls. Returns the new state; a
/// step that exhausts `max_iters` is flagged non-converged, not fatal.
#[allow(clippy::too_many_arguments)]
pub fn staggered_step(
    state: &SimState,
    ubar_next: f64,
    bc_builder: &dyn Fn(f64) -> DirichletSet,
    model: &ElasticModel,
    law: SplitLaw,
    pf: &PFModel,
    cfg: &StaggeredConfig,
    u_pattern: &CsrMatrix,
    d_pattern: &CsrMatrix,
    reaction_set: &str,
    reaction_comp: usize,
) -> Result<SimState> {
    let mesh = state.mesh.as_ref();
    let mut u = state.u.clone();
    let mut d = state.d.clone();
    let d_prev = state.d.clone();
    let bc = bc_builder(ubar_next);

    let mut converged = false;
    let mut iters = 0;
    for it in 0..cfg.max_iters {
        iters = it + 1;
        solve_u(mesh, &mut u, &d, model, law, &bc, cfg, u_pattern)?;
        let info = solve_d(mesh, &u, &mut d, &d_prev, model, law, pf, d_pattern)?;
        if info.max_delta < cfg.tol_d {
            converged = true;
            break;
        }
    }
    // Re-equilibrate displacements for the final damage before reporting.
    solve_u(mesh, &mut u, &d, model, law, &bc, cfg, u_pattern)?;

    let forces = residual_u(mesh, &u, &d, model, law);
    let reaction = assembly::reaction_component(mesh, &forces, reaction_set, reaction_comp);

    Ok(SimState {
        mesh: state.mesh.clone(),
        u,
        d_prev: d.clone(),
        d,
        step: state.step + 1,
        ubar: ubar_next,
        reaction,
        converged,
        stagger_iters: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crack_function_families() {
        let at1 = PFModel::new(PFVariant::At1, 1e-2, 1.0).unwrap();
        let at2 = PFModel::new(PFVariant::At2, 1e-2, 1.0).unwrap();
        assert_eq!(at1.w(0.5), 0.5);
        assert_eq!(at2.w(0.5), 0.25);
        assert_eq!(at1.c_w(), 2.0 / 3.0);
        assert_eq!(at2.c_w(), 0.5);
        for pf in [at1, at2] {
            assert_eq!(pf.g(0.0), 1.0);
            assert_eq!(pf.g(1.0), 0.0);
            assert_eq!(pf.g_prime(1.0), 0.0);
            assert_eq!(pf.w_prime(0.3), {
                let (w0, w1) = pf.w_prime_coeffs();
                w0 + w1 * 0.3
            });
        }
    }

    #[test]
    fn normalization_constant_matches_quadrature() {
        // c_w = integral_0^1 sqrt(w(d)) dd, midpoint rule.
        for variant in [PFVariant::At1, PFVariant::At2] {
            let pf = PFModel::new(variant, 1e-2, 1.0).unwrap();
            let n = 200_000;
            let mut acc = 0.0;
            for k in 0..n {
                let d = (k as f64 + 0.5) / n as f64;
                acc += pf.w(d).sqrt();
            }
            acc /= n as f64;
            assert!(
                (acc - pf.c_w()).abs() <= 1e-6,
                "{variant:?}: {acc} vs {}",
                pf.c_w()
            );
        }
    }

    #[test]
    fn crack_density_values() {
        let ell = 2.5e-3;
        let at2 = PFModel::new(PFVariant::At2, ell, 1.0).unwrap();
        let at1 = PFModel::new(PFVariant::At1, ell, 1.0).unwrap();
        assert_eq!(crack_density(&at2, 0.0, [0.0, 0.0]).unwrap(), 0.0);
        let v = crack_density(&at2, 1.0, [0.0, 0.0]).unwrap();
        assert!((v - 1.0 / (2.0 * ell)).abs() < 1e-15);
        let v = crack_density(&at1, 1.0, [0.0, 0.0]).unwrap();
        assert!((v - 3.0 / (8.0 * ell)).abs() < 1e-15 / ell);
        assert!(crack_density(&at2, 1.3, [0.0, 0.0]).is_err());
    }

    #[test]
    fn homogeneous_damage_oracle() {
        // AT2 closed form d = 2 psi / (2 psi + Gc / ell).
        let pf = PFModel::new(PFVariant::At2, 1e-2, 100.0).unwrap();
        for psi in [0.0, 1.0, 1e3, 1e6] {
            let d = pf.homogeneous_damage(psi);
            let expect = 2.0 * psi / (2.0 * psi + pf.gc / pf.ell);
            assert!((d - expect).abs() <= 1e-12);
            // Stationarity residual vanishes.
            let res = pf.g_prime(d) * psi + pf.gc * pf.w_prime(d) / (4.0 * pf.c_w() * pf.ell);
            assert!(res.abs() <= 1e-9 * (psi + pf.gc / pf.ell));
        }
        // AT1 has an elastic phase: zero damage below threshold.
        let pf1 = PFModel::new(PFVariant::At1, 1e-2, 100.0).unwrap();
        let threshold = 3.0 * pf1.gc / (16.0 * pf1.ell);
        assert_eq!(pf1.homogeneous_damage(0.5 * threshold), 0.0);
        assert!(pf1.homogeneous_damage(2.0 * threshold) > 0.0);
    }
}
