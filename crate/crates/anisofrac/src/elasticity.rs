//! Anisotropic elasticity tensors with cached square roots.
//!
//! An [`ElasticModel`] carries the stiffness `C`, the compliance `S = C^-1`
//! and the four operator roots `C^{1/2}`, `C^{-1/2}`, `S^{1/2}`, `S^{-1/2}`,
//! all computed from a single spectral decomposition so they stay mutually
//! consistent. Constructors cover isotropic, cubic, orthotropic and fully
//! anisotropic symmetry in the crate's Kelvin convention.
//!
//! Constitutive work always happens in the full 3D Kelvin 6-space; plane
//! strain is realized upstream by embedding with zero out-of-plane strain
//! components, since the transformed strain `C^{1/2} e` is generally 3D even
//! for plane-strain inputs.

use serde::{Deserialize, Serialize};

use crate::kelvin::{
    check_spd, eig_sym4, rotation_about_z, KelvinMat, KelvinOperator,
};
use crate::{Error, Result};

/// Structural symmetry class of a stiffness tensor in its material frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    Isotropic,
    Cubic,
    Orthotropic,
    Full,
}

/// Which modulus normalizes the orthotropic Poisson ratios.
///
/// `RowNormalized` places `-nu_ij / E_i` at compliance entry `(i, j)`;
/// `ColumnNormalized` uses `-nu_ij / E_j`. Sources differ on this convention,
/// so both are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuConvention {
    #[default]
    RowNormalized,
    ColumnNormalized,
}

/// Validated stiffness tensor with cached roots and inverse.
#[derive(Debug, Clone)]
pub struct ElasticModel {
    /// Stiffness `C` (Pa).
    pub c: KelvinOperator,
    /// Compliance `S = C^-1` (1/Pa).
    pub s: KelvinOperator,
    /// `C^{1/2}`.
    pub c_half: KelvinOperator,
    /// `C^{-1/2}`.
    pub c_half_inv: KelvinOperator,
    /// `S^{1/2} = C^{-1/2}`.
    pub s_half: KelvinOperator,
    /// `S^{-1/2} = C^{1/2}`.
    pub s_half_inv: KelvinOperator,
    pub symmetry_class: SymmetryClass,
    /// Accumulated in-plane rotation applied via [`ElasticModel::rotated`].
    pub orientation: f64,
}

impl ElasticModel {
    /// Builds a model from a stiffness matrix, computing and validating all
    /// cached operators.
    pub fn from_stiffness(c: KelvinOperator) -> Result<Self> {
        let spec = eig_sym4(&c);
        check_spd(&spec).map_err(|e| match e {
            Error::NotPositiveDefinite { eigenvalue, threshold } => {
                Error::InadmissibleElasticity(format!(
                    "stiffness not positive-definite (eigenvalue {eigenvalue:.6e}, threshold {threshold:.6e})"
                ))
            }
            other => other,
        })?;
        let s = spec.map(|l| 1.0 / l);
        let c_half = spec.map(f64::sqrt);
        let c_half_inv = spec.map(|l| 1.0 / l.sqrt());
        let symmetry_class = classify(&c.mat);
        let model = ElasticModel {
            c,
            s,
            c_half,
            c_half_inv,
            s_half: c_half_inv,
            s_half_inv: c_half,
            symmetry_class,
            orientation: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    /// Isotropic stiffness from the Lame constants.
    pub fn from_lame(lambda: f64, mu: f64) -> Result<Self> {
        if mu <= 0.0 || 3.0 * lambda + 2.0 * mu <= 0.0 {
            return Err(Error::InadmissibleElasticity(format!(
                "lame constants lambda={lambda}, mu={mu} give a non-SPD stiffness"
            )));
        }
        let mat = lambda * KelvinOperator::one_outer_one().mat + 2.0 * mu * KelvinMat::identity();
        Self::from_stiffness(KelvinOperator::from_matrix(mat)?)
    }

    /// Isotropic stiffness from Young's modulus and Poisson ratio.
    pub fn from_young_poisson(e: f64, nu: f64) -> Result<Self> {
        if e <= 0.0 || nu <= -1.0 || nu >= 0.5 {
            return Err(Error::InadmissibleElasticity(format!(
                "E={e}, nu={nu} outside the admissible isotropic range"
            )));
        }
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        Self::from_lame(lambda, mu)
    }

    /// Cubic stiffness from its three independent constants.
    pub fn from_cubic(c1111: f64, c1122: f64, c2323: f64) -> Result<Self> {
        let mut m = KelvinMat::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = if i == j { c1111 } else { c1122 };
            }
            m[(i + 3, i + 3)] = 2.0 * c2323;
        }
        Self::from_stiffness(KelvinOperator::from_matrix(m)?)
    }

    /// Orthotropic stiffness from engineering constants, inverting the
    /// compliance assembled per `convention`.
    ///
    /// Shear Kelvin diagonals are `1 / (2 G_ij)` so that the physical
    /// relation `eps_23 = sigma_23 / (2 G_23)` holds.
    pub fn from_orthotropic(
        e: [f64; 3],
        nu: [f64; 3], // (nu23, nu13, nu12)
        g: [f64; 3],  // (G23, G13, G12)
        convention: NuConvention,
    ) -> Result<Self> {
        if e.iter().any(|&x| x <= 0.0) || g.iter().any(|&x| x <= 0.0) {
            return Err(Error::InadmissibleElasticity(
                "moduli must be positive".into(),
            ));
        }
        let (nu23, nu13, nu12) = (nu[0], nu[1], nu[2]);
        let mut s = KelvinMat::zeros();
        s[(0, 0)] = 1.0 / e[0];
        s[(1, 1)] = 1.0 / e[1];
        s[(2, 2)] = 1.0 / e[2];
        let (s12, s13, s23) = match convention {
            NuConvention::RowNormalized => (-nu12 / e[0], -nu13 / e[0], -nu23 / e[1]),
            NuConvention::ColumnNormalized => (-nu12 / e[1], -nu13 / e[2], -nu23 / e[2]),
        };
        s[(0, 1)] = s12;
        s[(1, 0)] = s12;
        s[(0, 2)] = s13;
        s[(2, 0)] = s13;
        s[(1, 2)] = s23;
        s[(2, 1)] = s23;
        s[(3, 3)] = 1.0 / (2.0 * g[0]);
        s[(4, 4)] = 1.0 / (2.0 * g[1]);
        s[(5, 5)] = 1.0 / (2.0 * g[2]);

        let compliance = KelvinOperator::from_matrix(s)?;
        let spec = eig_sym4(&compliance);
        check_spd(&spec).map_err(|_| {
            Error::InadmissibleElasticity(format!(
                "orthotropic constants E={e:?}, nu={nu:?}, G={g:?} give a non-SPD compliance"
            ))
        })?;
        Self::from_stiffness(spec.map(|l| 1.0 / l))
    }

    /// Fully anisotropic stiffness from the 21 independent Kelvin entries
    /// (upper triangle, row-major: 6 + 5 + 4 + 3 + 2 + 1).
    pub fn from_full(upper: &[f64; 21]) -> Result<Self> {
        let mut m = KelvinMat::zeros();
        let mut k = 0;
        for i in 0..6 {
            for j in i..6 {
                m[(i, j)] = upper[k];
                m[(j, i)] = upper[k];
                k += 1;
            }
        }
        Self::from_stiffness(KelvinOperator::from_matrix(m)?)
    }

    /// Full constructor from an entire 6x6 Kelvin matrix.
    pub fn from_full_matrix(mat: KelvinMat) -> Result<Self> {
        Self::from_stiffness(KelvinOperator::from_matrix(mat)?)
    }

    /// Expresses the model in a basis rotated by `alpha` about the z-axis:
    /// every cached operator is conjugated with the same `P`, which keeps the
    /// roots exactly equivariant (`(P C P^T)^{1/2} = P C^{1/2} P^T`).
    pub fn rotated(&self, alpha: f64) -> ElasticModel {
        let p = rotation_about_z(alpha);
        let rot =
            |op: &KelvinOperator| KelvinOperator::from_symmetric_part(p * op.mat * p.transpose());
        let c_half = rot(&self.c_half);
        let c_half_inv = rot(&self.c_half_inv);
        ElasticModel {
            c: rot(&self.c),
            s: rot(&self.s),
            c_half,
            c_half_inv,
            s_half: c_half_inv,
            s_half_inv: c_half,
            symmetry_class: self.symmetry_class,
            orientation: self.orientation + alpha,
        }
    }

    /// Strain energy density `1/2 e . C e`.
    pub fn energy(&self, eps: &crate::kelvin::SymTensor2) -> f64 {
        0.5 * self.c.quad(eps)
    }

    /// Consistency of all cached operators.
    fn validate(&self) -> Result<()> {
        let id = KelvinMat::identity();
        let cnorm = self.c.norm();
        let checks = [
            (
                (self.c.mat * self.s.mat - id).norm(),
                1e-9 * 6.0_f64.sqrt(),
                "C S = I",
            ),
            (
                (self.c_half.mat * self.c_half.mat - self.c.mat).norm(),
                1e-10 * cnorm,
                "C_half^2 = C",
            ),
            (
                (self.c_half.mat * self.c_half_inv.mat - id).norm(),
                1e-9 * 6.0_f64.sqrt(),
                "C_half C_half_inv = I",
            ),
        ];
        for (residual, tol, what) in checks {
            if !(residual <= tol) {
                return Err(Error::InadmissibleElasticity(format!(
                    "cached-operator consistency failed: {what} residual {residual:.3e} > {tol:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Detects the structural symmetry class of a Kelvin stiffness matrix.
fn classify(m: &KelvinMat) -> SymmetryClass {
    let tol = 1e-8 * m.norm();
    let coupling_zero = (0..3).all(|i| (3..6).all(|j| m[(i, j)].abs() <= tol))
        && (3..6).all(|i| (3..6).filter(|&j| j != i).all(|j| m[(i, j)].abs() <= tol));
    if !coupling_zero {
        return SymmetryClass::Full;
    }
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    let diag_equal = eq(m[(0, 0)], m[(1, 1)]) && eq(m[(1, 1)], m[(2, 2)]);
    let offdiag_equal = eq(m[(0, 1)], m[(0, 2)]) && eq(m[(0, 2)], m[(1, 2)]);
    let shear_equal = eq(m[(3, 3)], m[(4, 4)]) && eq(m[(4, 4)], m[(5, 5)]);
    if diag_equal && offdiag_equal && shear_equal {
        // Kelvin shear diagonal is 2 mu; isotropy additionally ties it to the
        // normal block via C1111 - C1122 = 2 mu.
        if eq(m[(3, 3)], m[(0, 0)] - m[(0, 1)]) {
            return SymmetryClass::Isotropic;
        }
        return SymmetryClass::Cubic;
    }
    SymmetryClass::Orthotropic
}

/// Material data matching the orthotropic benchmark set: E = (210, 70, 210)
/// GPa, nu = (0.17, 0.3, 0.52), G = (46.63, 80.77, 46.63) GPa, in Pa.
pub fn benchmark_orthotropic() -> ElasticModel {
    ElasticModel::from_orthotropic(
        [210e9, 70e9, 210e9],
        [0.17, 0.30, 0.52],
        [46.63e9, 80.77e9, 46.63e9],
        NuConvention::RowNormalized,
    )
    .expect("benchmark orthotropic constants are admissible")
}
