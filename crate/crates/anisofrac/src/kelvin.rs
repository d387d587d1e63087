//! Kelvin-notation tensor algebra.
//!
//! Symmetric second-order tensors are stored as 6-vectors and fourth-order
//! tensors with minor and major symmetry as symmetric 6x6 matrices, using the
//! orthonormal Kelvin convention. Component ordering is fixed crate-wide as
//!
//! ```text
//! (11, 22, 33, sqrt(2)*23, sqrt(2)*13, sqrt(2)*12)
//! ```
//!
//! so inner products of 6-vectors equal full double contractions of the
//! underlying 3x3 tensors, and 6x6 matrix algebra equals fourth-order tensor
//! algebra. Shear diagonals of operators carry a factor 2 and mixed
//! normal-shear couplings a factor sqrt(2).

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use std::f64::consts::SQRT_2;

use crate::{Error, Result};

/// 6-vector in Kelvin ordering.
pub type KelvinVec = SVector<f64, 6>;
/// 6x6 matrix in Kelvin ordering.
pub type KelvinMat = SMatrix<f64, 6, 6>;

/// Relative asymmetry tolerance for dense 3x3 inputs.
pub const ASYM_TOL: f64 = 1e-10;
/// Relative asymmetry tolerance for 6x6 operator inputs.
pub const OPERATOR_SYM_TOL: f64 = 1e-12;
/// Relative threshold below which an operator eigenvalue counts as non-SPD.
pub const SPD_TOL: f64 = 1e-10;
/// Absolute tolerance on `P P^T - I` for Kelvin-orthogonal matrices.
pub const ORTHO_TOL: f64 = 1e-12;

/// Tolerance under which two eigenvalues are treated as repeated.
///
/// Branch selection in the no-tension projection needs an explicit tie rule;
/// eigenvalues closer than this are handled by the equal-eigenvalue limit.
pub fn eig_tie_tolerance(lambda_max_abs: f64) -> f64 {
    1e-9 * lambda_max_abs.max(1.0)
}

/// Heaviside step with the convention `H(0) = 1`.
#[inline]
pub fn heaviside(a: f64) -> f64 {
    if a >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Symmetric second-order tensor as a Kelvin 6-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor2 {
    pub vec: KelvinVec,
}

impl SymTensor2 {
    pub fn new(vec: KelvinVec) -> Self {
        SymTensor2 { vec }
    }

    pub fn zero() -> Self {
        SymTensor2 { vec: KelvinVec::zeros() }
    }

    /// The second-order identity `1` = (1,1,1,0,0,0).
    pub fn identity() -> Self {
        SymTensor2::new(KelvinVec::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0))
    }

    /// Builds from components `(t11, t22, t33, t23, t13, t12)` of the dense
    /// tensor (physical shears, not yet scaled by sqrt(2)).
    pub fn from_components(t11: f64, t22: f64, t33: f64, t23: f64, t13: f64, t12: f64) -> Self {
        SymTensor2::new(KelvinVec::new(
            t11,
            t22,
            t33,
            SQRT_2 * t23,
            SQRT_2 * t13,
            SQRT_2 * t12,
        ))
    }

    /// Vectorizes a dense symmetric 3x3 matrix, rejecting asymmetry above
    /// [`ASYM_TOL`] relative to the matrix norm.
    pub fn from_dense(dense: &Matrix3<f64>) -> Result<Self> {
        let scale = dense.norm().max(f64::MIN_POSITIVE);
        let asym = ((dense - dense.transpose()).norm()) / scale;
        if asym > ASYM_TOL {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tolerance: ASYM_TOL,
            });
        }
        Ok(Self::from_dense_symmetrized(dense))
    }

    /// Vectorizes after exact symmetrization; for internal products that are
    /// symmetric up to round-off.
    pub(crate) fn from_dense_symmetrized(dense: &Matrix3<f64>) -> Self {
        SymTensor2::from_components(
            dense[(0, 0)],
            dense[(1, 1)],
            dense[(2, 2)],
            0.5 * (dense[(1, 2)] + dense[(2, 1)]),
            0.5 * (dense[(0, 2)] + dense[(2, 0)]),
            0.5 * (dense[(0, 1)] + dense[(1, 0)]),
        )
    }

    pub fn to_dense(&self) -> Matrix3<f64> {
        let v = &self.vec;
        let s23 = v[3] / SQRT_2;
        let s13 = v[4] / SQRT_2;
        let s12 = v[5] / SQRT_2;
        Matrix3::new(v[0], s12, s13, s12, v[1], s23, s13, s23, v[2])
    }

    pub fn trace(&self) -> f64 {
        self.vec[0] + self.vec[1] + self.vec[2]
    }

    /// Deviatoric part `t - tr(t)/3 * 1`.
    pub fn dev(&self) -> SymTensor2 {
        let m = self.trace() / 3.0;
        let mut v = self.vec;
        v[0] -= m;
        v[1] -= m;
        v[2] -= m;
        SymTensor2::new(v)
    }

    /// Kelvin inner product; equals the full double contraction of the dense
    /// forms.
    pub fn dot(&self, other: &SymTensor2) -> f64 {
        self.vec.dot(&other.vec)
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    /// Dyadic product `self (x) other` as a Kelvin operator.
    pub fn outer(&self, other: &SymTensor2) -> KelvinMat {
        self.vec * other.vec.transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.vec.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.vec + rhs.vec)
    }
}

impl std::ops::Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.vec - rhs.vec)
    }
}

impl std::ops::Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, rhs: f64) -> SymTensor2 {
        SymTensor2::new(self.vec * rhs)
    }
}

impl std::ops::Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2::new(-self.vec)
    }
}

/// Fourth-order tensor with minor and major symmetry as a symmetric Kelvin
/// 6x6 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinOperator {
    pub mat: KelvinMat,
}

impl KelvinOperator {
    /// Wraps a matrix, rejecting major-symmetry violations above
    /// [`OPERATOR_SYM_TOL`] and symmetrizing exactly below it.
    pub fn from_matrix(mat: KelvinMat) -> Result<Self> {
        let scale = mat.norm().max(f64::MIN_POSITIVE);
        let asym = (mat - mat.transpose()).norm() / scale;
        if asym > OPERATOR_SYM_TOL {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tolerance: OPERATOR_SYM_TOL,
            });
        }
        Ok(Self::from_symmetric_part(mat))
    }

    /// Exact symmetrization without a tolerance gate; for products that are
    /// symmetric up to round-off (congruences, spectral reconstructions).
    pub(crate) fn from_symmetric_part(mat: KelvinMat) -> Self {
        KelvinOperator {
            mat: 0.5 * (mat + mat.transpose()),
        }
    }

    pub fn zero() -> Self {
        KelvinOperator { mat: KelvinMat::zeros() }
    }

    /// The fourth-order symmetric identity (identity matrix in Kelvin form).
    pub fn identity() -> Self {
        KelvinOperator { mat: KelvinMat::identity() }
    }

    /// The volumetric dyad `1 (x) 1` (3x3 block of ones, zero shear).
    pub fn one_outer_one() -> Self {
        let one = SymTensor2::identity();
        KelvinOperator { mat: one.outer(&one) }
    }

    /// Applies the operator to a tensor (double contraction).
    pub fn apply(&self, t: &SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.mat * t.vec)
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Quadratic form `t . (A t) / ...`; energy-style contraction.
    pub fn quad(&self, t: &SymTensor2) -> f64 {
        t.vec.dot(&(self.mat * t.vec))
    }
}

/// Spectral decomposition of a symmetric second-order tensor.
///
/// Eigenvalues sorted descending; eigenvector signs fixed so that the
/// largest-magnitude component of each is positive (first index on ties),
/// which makes repeated calls bitwise identical.
#[derive(Debug, Clone, Copy)]
pub struct Spectral2 {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Vector3<f64>; 3],
}

impl Spectral2 {
    /// Reconstructs `sum_i lambda_i n_i (x) n_i`.
    pub fn reconstruct(&self) -> SymTensor2 {
        let mut dense = Matrix3::zeros();
        for i in 0..3 {
            let n = &self.eigenvectors[i];
            dense += self.eigenvalues[i] * n * n.transpose();
        }
        SymTensor2::from_dense_symmetrized(&dense)
    }

    /// Kelvin vector of the eigenprojector `n_i (x) n_i`.
    pub fn mode(&self, i: usize) -> SymTensor2 {
        let n = &self.eigenvectors[i];
        SymTensor2::from_dense_symmetrized(&(n * n.transpose()))
    }
}

/// Spectral decomposition of a Kelvin operator: 6 eigenvalues with
/// orthonormal second-order eigentensors.
#[derive(Debug, Clone)]
pub struct Spectral4 {
    pub eigenvalues: [f64; 6],
    pub eigentensors: [SymTensor2; 6],
}

impl Spectral4 {
    /// Reconstructs `sum_i Lambda_i w_i (x) w_i`.
    pub fn reconstruct(&self) -> KelvinOperator {
        let mut mat = KelvinMat::zeros();
        for i in 0..6 {
            mat += self.eigenvalues[i] * self.eigentensors[i].outer(&self.eigentensors[i]);
        }
        KelvinOperator::from_symmetric_part(mat)
    }

    /// Applies `f` to the spectrum and reassembles the operator.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> KelvinOperator {
        let mut mat = KelvinMat::zeros();
        for i in 0..6 {
            mat += f(self.eigenvalues[i]) * self.eigentensors[i].outer(&self.eigentensors[i]);
        }
        KelvinOperator::from_symmetric_part(mat)
    }
}

fn sign_fix<const N: usize>(v: &mut SVector<f64, N>) {
    let mut arg = 0;
    let mut best = -1.0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            arg = k;
        }
    }
    if v[arg] < 0.0 {
        *v = -*v;
    }
}

/// Cyclic Jacobi eigensolver for small symmetric matrices.
///
/// Converges to round-off in a handful of sweeps, is exact on diagonal
/// input (no rotation is ever applied), and is bitwise deterministic.
fn jacobi_eigen<const N: usize>(
    input: &SMatrix<f64, N, N>,
) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let mut a = *input;
    let mut v = SMatrix::<f64, N, N>::identity();
    let scale = a.norm();
    if scale == 0.0 {
        return (SVector::zeros(), v);
    }
    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..N {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}

fn sorted_descending<const N: usize>(values: &SVector<f64, N>) -> [usize; N] {
    let mut order = [0usize; N];
    for (k, slot) in order.iter_mut().enumerate() {
        *slot = k;
    }
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    order
}

/// Symmetric eigendecomposition of a second-order tensor, sorted descending.
pub fn eig_sym2(t: &SymTensor2) -> Spectral2 {
    let (values, vectors) = jacobi_eigen(&t.to_dense());
    let order = sorted_descending(&values);
    let mut eigenvalues = [0.0; 3];
    let mut eigenvectors = [Vector3::zeros(); 3];
    for (slot, &col) in order.iter().enumerate() {
        eigenvalues[slot] = values[col];
        let mut v = vectors.column(col).into_owned();
        sign_fix(&mut v);
        eigenvectors[slot] = v;
    }
    Spectral2 {
        eigenvalues,
        eigenvectors,
    }
}

/// Symmetric eigendecomposition of a Kelvin operator, sorted descending.
pub fn eig_sym4(a: &KelvinOperator) -> Spectral4 {
    let (values, vectors) = jacobi_eigen(&a.mat);
    let order = sorted_descending(&values);
    let mut eigenvalues = [0.0; 6];
    let mut eigentensors = [SymTensor2::zero(); 6];
    for (slot, &col) in order.iter().enumerate() {
        eigenvalues[slot] = values[col];
        let mut v: KelvinVec = vectors.column(col).into_owned();
        sign_fix(&mut v);
        eigentensors[slot] = SymTensor2::new(v);
    }
    Spectral4 {
        eigenvalues,
        eigentensors,
    }
}

/// Spectral square root `sum_i Lambda_i^{1/2} w_i (x) w_i`.
///
/// Rejects operators with any eigenvalue below `SPD_TOL * Lambda_max`.
pub fn operator_sqrt(a: &KelvinOperator) -> Result<KelvinOperator> {
    let spec = eig_sym4(a);
    check_spd(&spec)?;
    Ok(spec.map(f64::sqrt))
}

pub(crate) fn check_spd(spec: &Spectral4) -> Result<()> {
    let lambda_max = spec.eigenvalues[0];
    let threshold = SPD_TOL * lambda_max.abs();
    let lambda_min = spec.eigenvalues[5];
    if !(lambda_max > 0.0) || lambda_min <= threshold {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: lambda_min,
            threshold,
        });
    }
    Ok(())
}

/// Congruence transform `P A P^T` with a Kelvin-orthogonal `P`.
pub fn rotate_operator(a: &KelvinOperator, p: &KelvinMat) -> Result<KelvinOperator> {
    let deviation = (p * p.transpose() - KelvinMat::identity()).norm();
    if deviation > ORTHO_TOL * 6.0_f64.sqrt() {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(KelvinOperator::from_symmetric_part(p * a.mat * p.transpose()))
}

/// Transforms a tensor's Kelvin components with the same `P` used for
/// operators.
pub fn rotate_tensor(t: &SymTensor2, p: &KelvinMat) -> SymTensor2 {
    SymTensor2::new(p * t.vec)
}

/// Kelvin transformation matrix for a rotation about the z-axis by `alpha`.
///
/// Expresses tensor components in a basis rotated by `alpha`; applied as
/// `P A P^T` it is the inverse operation of rotating the tensor itself by
/// `alpha`, so a material whose principal axes sit at `-alpha` in the frame
/// of `A` ends up aligned.
pub fn rotation_about_z(alpha: f64) -> KelvinMat {
    let (s, c) = alpha.sin_cos();
    let cs = c * s;
    let mut p = KelvinMat::zeros();
    p[(0, 0)] = c * c;
    p[(0, 1)] = s * s;
    p[(0, 5)] = SQRT_2 * cs;
    p[(1, 0)] = s * s;
    p[(1, 1)] = c * c;
    p[(1, 5)] = -SQRT_2 * cs;
    p[(2, 2)] = 1.0;
    p[(3, 3)] = c;
    p[(3, 4)] = -s;
    p[(4, 3)] = s;
    p[(4, 4)] = c;
    p[(5, 0)] = -SQRT_2 * cs;
    p[(5, 1)] = SQRT_2 * cs;
    p[(5, 5)] = c * c - s * s;
    p
}

/// Kelvin transformation matrix `B(R)` of an orthogonal 3x3 matrix `R`,
/// defined column-wise by `B e_k = kelvin(R E_k R^T)` over the Kelvin basis
/// tensors `E_k`. Satisfies `kelvin(R T R^T) = B kelvin(T)`.
pub fn basis_transform(r: &Matrix3<f64>) -> KelvinMat {
    let mut b = KelvinMat::zeros();
    for k in 0..6 {
        let e = kelvin_basis_dense(k);
        let col = SymTensor2::from_dense_symmetrized(&(r * e * r.transpose()));
        b.set_column(k, &col.vec);
    }
    b
}

/// Dense form of the k-th orthonormal Kelvin basis tensor.
pub(crate) fn kelvin_basis_dense(k: usize) -> Matrix3<f64> {
    let mut e = Matrix3::zeros();
    match k {
        0 => e[(0, 0)] = 1.0,
        1 => e[(1, 1)] = 1.0,
        2 => e[(2, 2)] = 1.0,
        3 => {
            e[(1, 2)] = 1.0 / SQRT_2;
            e[(2, 1)] = 1.0 / SQRT_2;
        }
        4 => {
            e[(0, 2)] = 1.0 / SQRT_2;
            e[(2, 0)] = 1.0 / SQRT_2;
        }
        5 => {
            e[(0, 1)] = 1.0 / SQRT_2;
            e[(1, 0)] = 1.0 / SQRT_2;
        }
        _ => unreachable!("kelvin index out of range"),
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut impl Rng, scale: f64) -> SymTensor2 {
        SymTensor2::from_components(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    pub(crate) fn random_spd_operator(rng: &mut impl Rng) -> KelvinOperator {
        let mut m = KelvinMat::zeros();
        for i in 0..6 {
            for j in 0..6 {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let spd = m.transpose() * m + KelvinMat::identity() * 0.5;
        KelvinOperator::from_symmetric_part(spd)
    }

    #[test]
    fn identity_maps_to_unit_normals() {
        let one = SymTensor2::from_dense(&Matrix3::identity()).unwrap();
        assert_eq!(one.vec, KelvinVec::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn pure_shear_carries_sqrt2() {
        let gamma = 0.3;
        let mut dense = Matrix3::zeros();
        dense[(0, 1)] = gamma;
        dense[(1, 0)] = gamma;
        let t = SymTensor2::from_dense(&dense).unwrap();
        assert_eq!(t.vec, KelvinVec::new(0.0, 0.0, 0.0, 0.0, 0.0, SQRT_2 * gamma));
    }

    #[test]
    fn inner_product_matches_double_contraction() {
        // a*1 + pure shear: |t|^2 = 3a^2 + 2 gamma^2.
        let a = 1.7;
        let gamma = -0.4;
        let mut dense = Matrix3::identity() * a;
        dense[(0, 1)] = gamma;
        dense[(1, 0)] = gamma;
        let t = SymTensor2::from_dense(&dense).unwrap();
        let full: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| dense[(i, j)] * dense[(i, j)])
            .sum();
        assert_relative_eq!(t.dot(&t), full, max_relative = 1e-14);
        assert_relative_eq!(t.dot(&t), 3.0 * a * a + 2.0 * gamma * gamma, max_relative = 1e-14);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut dense = Matrix3::identity();
        dense[(0, 1)] = 1e-3;
        assert!(matches!(
            SymTensor2::from_dense(&dense),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn round_trip_dense_kelvin_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = random_sym(&mut rng, 2.0);
            let back = SymTensor2::from_dense(&t.to_dense()).unwrap();
            assert_eq!(t.vec, back.vec);
        }
    }

    #[test]
    fn eig_sym2_identity_and_diagonal() {
        let spec = eig_sym2(&SymTensor2::identity());
        assert_eq!(spec.eigenvalues, [1.0, 1.0, 1.0]);

        let t = SymTensor2::from_components(3.0, -1.0, 2.0, 0.0, 0.0, 0.0);
        let spec = eig_sym2(&t);
        assert_eq!(spec.eigenvalues, [3.0, 2.0, -1.0]);
        assert_relative_eq!(spec.eigenvectors[0].dot(&Vector3::x()).abs(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvectors[1].dot(&Vector3::z()).abs(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(spec.eigenvectors[2].dot(&Vector3::y()).abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_sym2_reconstructs_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t = random_sym(&mut rng, 3.0);
            let spec = eig_sym2(&t);
            assert!(spec.eigenvalues[0] >= spec.eigenvalues[1]);
            assert!(spec.eigenvalues[1] >= spec.eigenvalues[2]);
            let err = (spec.reconstruct() - t).norm();
            assert!(err <= 1e-12 * t.norm().max(1e-30), "err {err}");
            for i in 0..3 {
                for j in 0..3 {
                    let d = spec.eigenvectors[i].dot(&spec.eigenvectors[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(d, expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn eig_sym2_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let t = random_sym(&mut rng, 1.0);
            let a = eig_sym2(&t);
            let b = eig_sym2(&t);
            assert_eq!(a.eigenvalues, b.eigenvalues);
            for i in 0..3 {
                assert_eq!(a.eigenvectors[i], b.eigenvectors[i]);
            }
        }
    }

    #[test]
    fn eig_sym4_identity() {
        let spec = eig_sym4(&KelvinOperator::identity());
        for l in spec.eigenvalues {
            assert_relative_eq!(l, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_sym4_isotropic_spectrum() {
        // lambda = mu = 1: eigenvalues 3*lambda + 2*mu = 5 once, 2*mu = 2 five times.
        let (lambda, mu) = (1.0, 1.0);
        let mat = lambda * KelvinOperator::one_outer_one().mat
            + 2.0 * mu * KelvinMat::identity();
        let c = KelvinOperator::from_matrix(mat).unwrap();
        let spec = eig_sym4(&c);
        assert_relative_eq!(spec.eigenvalues[0], 3.0 * lambda + 2.0 * mu, epsilon = 1e-12);
        for i in 1..6 {
            assert_relative_eq!(spec.eigenvalues[i], 2.0 * mu, epsilon = 1e-12);
        }
        let err = (spec.reconstruct().mat - c.mat).norm();
        assert!(err <= 1e-12 * c.norm());
    }

    #[test]
    fn eig_sym4_orthonormal_eigentensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let a = random_spd_operator(&mut rng);
            let spec = eig_sym4(&a);
            for i in 0..6 {
                for j in 0..6 {
                    let d = spec.eigentensors[i].dot(&spec.eigentensors[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(d, expect, epsilon = 1e-12);
                }
            }
            let err = (spec.reconstruct().mat - a.mat).norm();
            assert!(err <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let s = operator_sqrt(&KelvinOperator::identity()).unwrap();
        assert!((s.mat - KelvinMat::identity()).norm() < 1e-14);

        let d = KelvinOperator::from_matrix(KelvinMat::from_diagonal(&KelvinVec::new(
            4.0, 9.0, 1.0, 1.0, 1.0, 1.0,
        )))
        .unwrap();
        let s = operator_sqrt(&d).unwrap();
        let expect = KelvinMat::from_diagonal(&KelvinVec::new(2.0, 3.0, 1.0, 1.0, 1.0, 1.0));
        assert!((s.mat - expect).norm() < 1e-12);
    }

    #[test]
    fn sqrt_isotropic_spectrum() {
        let mat = KelvinOperator::one_outer_one().mat + 2.0 * KelvinMat::identity();
        let c = KelvinOperator::from_matrix(mat).unwrap();
        let s = operator_sqrt(&c).unwrap();
        let spec = eig_sym4(&s);
        assert_relative_eq!(spec.eigenvalues[0], 5.0_f64.sqrt(), epsilon = 1e-12);
        for i in 1..6 {
            assert_relative_eq!(spec.eigenvalues[i], 2.0_f64.sqrt(), epsilon = 1e-12);
        }
        let err = (s.mat * s.mat - c.mat).norm();
        assert!(err <= 1e-10 * c.norm());
    }

    #[test]
    fn sqrt_squared_recovers_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let a = random_spd_operator(&mut rng);
            let s = operator_sqrt(&a).unwrap();
            let err = (s.mat * s.mat - a.mat).norm();
            assert!(err <= 1e-10 * a.norm(), "err {err}");
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let mut mat = KelvinMat::identity();
        mat[(0, 0)] = -1.0;
        let a = KelvinOperator::from_matrix(mat).unwrap();
        assert!(matches!(
            operator_sqrt(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rotation_about_z_zero_is_identity() {
        let p = rotation_about_z(0.0);
        assert!((p - KelvinMat::identity()).norm() < 1e-15);
    }

    #[test]
    fn rotation_about_z_quarter_turn_entries() {
        // c = 0, s = 1: 11 and 22 rows swap, in-plane shear flips sign,
        // out-of-plane shears rotate into each other.
        let p = rotation_about_z(std::f64::consts::FRAC_PI_2);
        let tol = 1e-15;
        assert!((p[(0, 1)] - 1.0).abs() < tol && p[(0, 0)].abs() < tol);
        assert!((p[(1, 0)] - 1.0).abs() < tol && p[(1, 1)].abs() < tol);
        assert!((p[(2, 2)] - 1.0).abs() < tol);
        assert!(p[(3, 3)].abs() < tol && (p[(3, 4)] + 1.0).abs() < tol);
        assert!((p[(4, 3)] - 1.0).abs() < tol && p[(4, 4)].abs() < tol);
        assert!((p[(5, 5)] + 1.0).abs() < tol);
        assert!(p[(0, 5)].abs() < tol && p[(5, 0)].abs() < tol);
    }

    #[test]
    fn rotation_about_z_is_orthogonal() {
        for alpha in [0.0, 0.3, std::f64::consts::FRAC_PI_4, -1.2, 2.9] {
            let p = rotation_about_z(alpha);
            assert!((p * p.transpose() - KelvinMat::identity()).norm() < 1e-14);
        }
        // alpha = pi/4: the 11-12 coupling entry equals sqrt(2)*c*s = sqrt(2)/2.
        let p = rotation_about_z(std::f64::consts::FRAC_PI_4);
        assert_relative_eq!(p[(0, 5)], SQRT_2 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_matches_transposed_basis_transform() {
        // P(alpha) expresses components in a rotated basis; the tensor-rotation
        // matrix B(Rz(alpha)) is its transpose.
        for alpha in [0.4, -1.1, 2.2] {
            let p = rotation_about_z(alpha);
            let (s, c) = alpha.sin_cos();
            let rz = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
            let b = basis_transform(&rz);
            assert!((p - b.transpose()).norm() < 1e-14);
        }
    }

    #[test]
    fn basis_transform_matches_dense_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            // Random rotation from QR of a random matrix.
            let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0_f64));
            let qr = m.qr();
            let r = qr.q();
            let b = basis_transform(&r);
            assert!((b * b.transpose() - KelvinMat::identity()).norm() < 1e-13);
            let t = random_sym(&mut rng, 2.0);
            let rotated = SymTensor2::from_dense_symmetrized(&(r * t.to_dense() * r.transpose()));
            let via_kelvin = rotate_tensor(&t, &b);
            assert!((rotated - via_kelvin).norm() < 1e-13 * t.norm().max(1.0));
        }
    }

    #[test]
    fn rotate_operator_identity_rotation_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_spd_operator(&mut rng);
        let p = rotation_about_z(0.0);
        let rotated = rotate_operator(&a, &p).unwrap();
        assert!((rotated.mat - a.mat).norm() < 1e-14 * a.norm());
    }

    #[test]
    fn rotate_operator_isotropic_invariant() {
        let mat = 1.3 * KelvinOperator::one_outer_one().mat + 2.0 * 0.9 * KelvinMat::identity();
        let c = KelvinOperator::from_matrix(mat).unwrap();
        for alpha in [0.3, std::f64::consts::FRAC_PI_4, -2.0] {
            let p = rotation_about_z(alpha);
            let rotated = rotate_operator(&c, &p).unwrap();
            assert!((rotated.mat - c.mat).norm() < 1e-12 * c.norm());
        }
    }

    #[test]
    fn rotate_operator_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_spd_operator(&mut rng);
        let alpha = 0.77;
        let fwd = rotate_operator(&a, &rotation_about_z(alpha)).unwrap();
        let back = rotate_operator(&fwd, &rotation_about_z(-alpha)).unwrap();
        assert!((back.mat - a.mat).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn rotate_operator_rejects_non_orthogonal() {
        let a = KelvinOperator::identity();
        let mut p = KelvinMat::identity();
        p[(0, 0)] = 2.0;
        assert!(matches!(
            rotate_operator(&a, &p),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn sqrt_commutes_with_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let a = random_spd_operator(&mut rng);
            let p = rotation_about_z(rng.gen_range(-3.0..3.0));
            let rotated_then_sqrt = operator_sqrt(&rotate_operator(&a, &p).unwrap()).unwrap();
            let sqrt_then_rotated = rotate_operator(&operator_sqrt(&a).unwrap(), &p).unwrap();
            let err = (rotated_then_sqrt.mat - sqrt_then_rotated.mat).norm();
            assert!(err <= 1e-9 * a.norm(), "err {err}");
        }
    }

    #[test]
    fn kelvin_inner_product_preserved_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..1000 {
            let a = random_sym(&mut rng, 2.0);
            let b = random_sym(&mut rng, 2.0);
            let da = a.to_dense();
            let db = b.to_dense();
            let full: f64 = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| da[(i, j)] * db[(i, j)])
                .sum();
            let scale = (a.norm() * b.norm()).max(1e-30);
            assert!((a.dot(&b) - full).abs() <= 1e-12 * scale);
        }
    }
}
