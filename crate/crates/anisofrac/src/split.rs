//! Tension-compression decomposition of anisotropic constitutive models.
//!
//! Every law works in the transformed space `e~ = C^{1/2} e`, where the
//! elastic energy is the plain Euclidean norm and splitting reduces to a
//! projection onto a convex cone:
//!
//! - `VolDev`: crack-driving part = positive transformed volumetric
//!   expansion plus the full transformed deviator (cone: trace >= 0),
//! - `NoTension`: crack-driving part = positive-semidefinite spectral part
//!   of the transformed strain (cone: PSD tensors),
//! - `None`: symmetric response, everything drives the crack.
//!
//! The split is orthogonal in the energy norm by construction, which makes
//! the energy partition exact: `C e_t . e_c = 0` and `Psi_t + Psi_c = Psi`.
//! [`oracle_projection`] computes the crack-driving strain by direct cone
//! projection and serves as the independent check on the projector route.

use nalgebra::Matrix3;

use crate::elasticity::ElasticModel;
use crate::kelvin::{
    basis_transform, eig_sym2, eig_tie_tolerance, heaviside, KelvinMat, KelvinOperator,
    SymTensor2,
};
use crate::{Error, Result};

/// Which tension-compression asymmetry law to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLaw {
    /// Symmetric response: tension and compression both drive the crack.
    None,
    /// Volumetric-deviatoric: volumetric compression is persistent.
    VolDev,
    /// No-tension: only the positive-semidefinite spectral part drives.
    NoTension,
}

/// Full decomposition at a material point.
#[derive(Debug, Clone)]
pub struct SplitState {
    pub eps_t: SymTensor2,
    pub eps_c: SymTensor2,
    pub sigma_t: SymTensor2,
    pub sigma_c: SymTensor2,
    pub c_t: KelvinOperator,
    pub c_c: KelvinOperator,
    /// Crack-driving energy density (J/m^3).
    pub psi_t: f64,
    /// Persistent energy density (J/m^3).
    pub psi_c: f64,
    /// Projector `d eps~_t / d eps~` in the working basis.
    pub d_t: KelvinOperator,
    /// Projector `d eps~_c / d eps~` in the working basis.
    pub d_c: KelvinOperator,
}

/// Dispatches to the law-specific split.
pub fn split(law: SplitLaw, model: &ElasticModel, eps: &SymTensor2) -> SplitState {
    match law {
        SplitLaw::None => split_none(model, eps),
        SplitLaw::VolDev => split_voldev(model, eps),
        SplitLaw::NoTension => split_notension(model, eps),
    }
}

/// Symmetric response: `eps_t = eps`, `eps_c = 0`.
pub fn split_none(model: &ElasticModel, eps: &SymTensor2) -> SplitState {
    let sigma = model.c.apply(eps);
    SplitState {
        eps_t: *eps,
        eps_c: SymTensor2::zero(),
        sigma_t: sigma,
        sigma_c: SymTensor2::zero(),
        c_t: model.c,
        c_c: KelvinOperator::zero(),
        psi_t: 0.5 * sigma.dot(eps),
        psi_c: 0.0,
        d_t: KelvinOperator::identity(),
        d_c: KelvinOperator::zero(),
    }
}

/// Volumetric-deviatoric split in the transformed space.
pub fn split_voldev(model: &ElasticModel, eps: &SymTensor2) -> SplitState {
    debug_assert!(eps.is_finite());
    let tilde = model.c_half.apply(eps);
    let tr = tilde.trace();

    let tilde_t = tilde.dev() + SymTensor2::identity() * (tr.max(0.0) / 3.0);
    let tilde_c = SymTensor2::identity() * (tr.min(0.0) / 3.0);

    let one_one = KelvinOperator::one_outer_one().mat;
    let d_t_mat = (heaviside(tr) / 3.0) * one_one + (KelvinMat::identity() - one_one / 3.0);
    let d_c_mat = (heaviside(-tr) / 3.0) * one_one;
    let d_t = KelvinOperator::from_symmetric_part(d_t_mat);
    let d_c = KelvinOperator::from_symmetric_part(d_c_mat);

    let (c_t, c_c) = if tr >= 0.0 {
        // D_t is the full identity: the tangent split is trivial.
        (model.c, KelvinOperator::zero())
    } else {
        (sandwich(&model.c_half, &d_t), sandwich(&model.c_half, &d_c))
    };

    finish_split(model, tilde_t, tilde_c, c_t, c_c, d_t, d_c)
}

/// No-tension split: spectral clipping of the transformed strain.
pub fn split_notension(model: &ElasticModel, eps: &SymTensor2) -> SplitState {
    debug_assert!(eps.is_finite());
    let tilde = model.c_half.apply(eps);
    let spec = eig_sym2(&tilde);
    let eigs = spec.eigenvalues;

    let mut tilde_t = SymTensor2::zero();
    for i in 0..3 {
        if eigs[i] > 0.0 {
            tilde_t = tilde_t + spec.mode(i) * eigs[i];
        }
    }
    let tilde_c = tilde - tilde_t;

    let (dt_principal, dc_principal) = notension_projectors_principal(&eigs);
    let r = Matrix3::from_columns(&spec.eigenvectors);
    let b = basis_transform(&r);
    let d_t = KelvinOperator::from_symmetric_part(b * dt_principal * b.transpose());
    let d_c = KelvinOperator::from_symmetric_part(b * dc_principal * b.transpose());

    let c_t = sandwich(&model.c_half, &d_t);
    let c_c = sandwich(&model.c_half, &d_c);

    finish_split(model, tilde_t, tilde_c, c_t, c_c, d_t, d_c)
}

/// No-tension projectors `D_t`, `D_c` in the principal (eigen) basis.
///
/// Diagonal Kelvin matrices: normal slots carry `H(+-e_i)`, the shear slot
/// for the pair `(i, j)` carries `(a_j - a_i) / (e_j - e_i)` (resp. the `b`
/// ratio), replaced by its limit `H(+-e_i)` when the pair is closer than the
/// tie tolerance. Shear slots follow the crate ordering: slot 4 pairs the
/// 2nd/3rd principal values, slot 5 the 1st/3rd, slot 6 the 1st/2nd.
pub fn notension_projectors_principal(eigs: &[f64; 3]) -> (KelvinMat, KelvinMat) {
    let a = [eigs[0].max(0.0), eigs[1].max(0.0), eigs[2].max(0.0)];
    let b = [eigs[0] - a[0], eigs[1] - a[1], eigs[2] - a[2]];
    let max_abs = eigs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let tau = eig_tie_tolerance(max_abs);

    let mut d_t = KelvinMat::zeros();
    let mut d_c = KelvinMat::zeros();
    for i in 0..3 {
        d_t[(i, i)] = heaviside(eigs[i]);
        d_c[(i, i)] = heaviside(-eigs[i]);
    }
    const PAIRS: [(usize, usize, usize); 3] = [(3, 1, 2), (4, 0, 2), (5, 0, 1)];
    for (slot, i, j) in PAIRS {
        let de = eigs[j] - eigs[i];
        if de.abs() < tau {
            d_t[(slot, slot)] = heaviside(eigs[i]);
            d_c[(slot, slot)] = heaviside(-eigs[i]);
        } else {
            d_t[(slot, slot)] = (a[j] - a[i]) / de;
            d_c[(slot, slot)] = (b[j] - b[i]) / de;
        }
    }
    (d_t, d_c)
}

/// `C^{1/2} D C^{1/2}`.
fn sandwich(c_half: &KelvinOperator, d: &KelvinOperator) -> KelvinOperator {
    KelvinOperator::from_symmetric_part(c_half.mat * d.mat * c_half.mat)
}

fn finish_split(
    model: &ElasticModel,
    tilde_t: SymTensor2,
    tilde_c: SymTensor2,
    c_t: KelvinOperator,
    c_c: KelvinOperator,
    d_t: KelvinOperator,
    d_c: KelvinOperator,
) -> SplitState {
    let eps_t = model.c_half_inv.apply(&tilde_t);
    let eps_c = model.c_half_inv.apply(&tilde_c);
    // sigma_t = C eps_t = C^{1/2} eps~_t, one matvec instead of two.
    let sigma_t = model.c_half.apply(&tilde_t);
    let sigma_c = model.c_half.apply(&tilde_c);
    SplitState {
        eps_t,
        eps_c,
        sigma_t,
        sigma_c,
        c_t,
        c_c,
        psi_t: 0.5 * tilde_t.dot(&tilde_t),
        psi_c: 0.5 * tilde_c.dot(&tilde_c),
        d_t,
        d_c,
    }
}

/// Crack-driving strain by direct minimization of `C(e - e_t).(e - e_t)`
/// over the law's cone: Euclidean projection in the transformed space,
/// mapped back with `C^{-1/2}`.
///
/// Independent of the projector route in [`split`]; used as its oracle.
pub fn oracle_projection(law: SplitLaw, model: &ElasticModel, eps: &SymTensor2) -> SymTensor2 {
    let tilde = model.c_half.apply(eps);
    let projected = match law {
        SplitLaw::None => tilde,
        SplitLaw::VolDev => {
            // Projection onto {tr >= 0}: clip the trace at zero.
            let tr = tilde.trace();
            if tr >= 0.0 {
                tilde
            } else {
                tilde.dev()
            }
        }
        SplitLaw::NoTension => {
            // Projection onto the PSD cone: clip negative eigenvalues.
            let spec = eig_sym2(&tilde);
            let mut out = SymTensor2::zero();
            for i in 0..3 {
                if spec.eigenvalues[i] > 0.0 {
                    out = out + spec.mode(i) * spec.eigenvalues[i];
                }
            }
            out
        }
    };
    model.c_half_inv.apply(&projected)
}

/// Degraded stress `g(d) sigma_t + sigma_c`.
pub fn degraded_stress(state: &SplitState, d: f64, g: impl Fn(f64) -> f64) -> Result<SymTensor2> {
    check_damage(d)?;
    Ok(state.sigma_t * g(d) + state.sigma_c)
}

/// Degraded tangent `g(d) C_t + C_c`; positive semi-definite for `g >= 0`.
pub fn degraded_tangent(
    state: &SplitState,
    d: f64,
    g: impl Fn(f64) -> f64,
) -> Result<KelvinOperator> {
    check_damage(d)?;
    Ok(KelvinOperator::from_symmetric_part(
        g(d) * state.c_t.mat + state.c_c.mat,
    ))
}

fn check_damage(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::DamageOutOfRange(d));
    }
    Ok(())
}
