//! CSR matrices and a preconditioned conjugate-gradient solver.
//!
//! The solver targets the SPD systems this crate assembles (elasticity
//! tangents and damage systems). Preconditioning is incomplete Cholesky on
//! the matrix sparsity (IC(0)) with a Jacobi fallback when the
//! factorization breaks down on nearly singular late-damage states. All
//! paths are sequential and bitwise deterministic.

use crate::{Error, Result};

/// Compressed sparse row symmetric matrix (full pattern stored).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix from per-row column lists (need not be sorted;
    /// duplicates are merged).
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> CsrMatrix {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in rows.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn reset(&mut self) {
        self.values.fill(0.0);
    }

    /// Adds `v` at `(i, j)`; the entry must exist in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k] += v,
            Err(_) => panic!("entry ({i}, {j}) not in sparsity pattern"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// Symmetric elimination of Dirichlet dofs for a homogeneous constraint:
    /// zeroes row and column, puts the row's diagonal scale on the diagonal,
    /// and zeroes the rhs entry.
    pub fn eliminate_dirichlet(&mut self, rhs: &mut [f64], dofs: &[usize]) {
        let mut constrained = vec![false; self.n];
        for &d in dofs {
            constrained[d] = true;
        }
        // Representative scale keeps the matrix well conditioned.
        let mut diag_scale = 0.0;
        for i in 0..self.n {
            diag_scale += self.get(i, i).abs();
        }
        diag_scale = (diag_scale / self.n as f64).max(1.0);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if constrained[i] || constrained[j] {
                    self.values[k] = if i == j { diag_scale } else { 0.0 };
                }
            }
        }
        for &d in dofs {
            rhs[d] = 0.0;
        }
    }
}

/// Result of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// IC(0) factor: lower triangle with the matrix's own sparsity.
struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    fn new(a: &CsrMatrix) -> Option<IncompleteCholesky> {
        let n = a.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.col_idx[k] <= i {
                    col_idx.push(a.col_idx[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut values = vec![0.0; col_idx.len()];
        let mut diag_pos = vec![0usize; n];
        for i in 0..n {
            // Row i ends with its diagonal (columns sorted ascending).
            diag_pos[i] = row_ptr[i + 1] - 1;
            if col_idx[diag_pos[i]] != i {
                return None; // structurally missing diagonal
            }
        }
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[k];
                let a_ij = a.get(i, j);
                // Sparse dot of rows i and j over columns < j.
                let mut sum = 0.0;
                let (mut pi, mut pj) = (row_ptr[i], row_ptr[j]);
                let (ei, ej) = (row_ptr[i + 1], row_ptr[j + 1]);
                while pi < ei && pj < ej {
                    let (ci, cj) = (col_idx[pi], col_idx[pj]);
                    if ci >= j || cj >= j {
                        break;
                    }
                    match ci.cmp(&cj) {
                        std::cmp::Ordering::Less => pi += 1,
                        std::cmp::Ordering::Greater => pj += 1,
                        std::cmp::Ordering::Equal => {
                            sum += values[pi] * values[pj];
                            pi += 1;
                            pj += 1;
                        }
                    }
                }
                if j < i {
                    let ljj = values[diag_pos[j]];
                    values[k] = (a_ij - sum) / ljj;
                } else {
                    let pivot = a_ij - sum;
                    if pivot <= 0.0 || !pivot.is_finite() {
                        return None;
                    }
                    values[k] = pivot.sqrt();
                }
            }
        }
        Some(IncompleteCholesky {
            row_ptr,
            col_idx,
            values,
        })
    }

    /// z = (L L^T)^{-1} r.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.row_ptr.len() - 1;
        // Forward solve L y = r.
        for i in 0..n {
            let mut acc = r[i];
            let end = self.row_ptr[i + 1] - 1;
            for k in self.row_ptr[i]..end {
                acc -= self.values[k] * z[self.col_idx[k]];
            }
            z[i] = acc / self.values[end];
        }
        // Backward solve L^T z = y, traversing rows of L.
        for i in (0..n).rev() {
            let end = self.row_ptr[i + 1] - 1;
            z[i] /= self.values[end];
            let zi = z[i];
            for k in self.row_ptr[i]..end {
                z[self.col_idx[k]] -= self.values[k] * zi;
            }
        }
    }
}

enum Preconditioner {
    Ic(IncompleteCholesky),
    Jacobi(Vec<f64>),
}

impl Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Ic(ic) => ic.apply(r, z),
            Preconditioner::Jacobi(inv_diag) => {
                for i in 0..r.len() {
                    z[i] = r[i] * inv_diag[i];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for SPD `A` with preconditioned CG.
///
/// Targets a relative residual of 1e-12 and reports failure if it cannot
/// reach 1e-10 within the iteration budget.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
    const TOL_TARGET: f64 = 1e-12;
    const TOL_ACCEPT: f64 = 1e-10;

    let n = a.n;
    assert_eq!(b.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveInfo {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    for i in 0..n {
        let d = a.get(i, i);
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::LinearSolve(format!(
                "non-positive diagonal {d:.3e} at dof {i}; system singular or not SPD"
            )));
        }
    }
    let precond = match IncompleteCholesky::new(a) {
        Some(ic) => Preconditioner::Ic(ic),
        None => {
            let inv_diag = (0..n).map(|i| 1.0 / a.get(i, i)).collect();
            Preconditioner::Jacobi(inv_diag)
        }
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let max_iter = (20 * n).max(200);
    let mut best_rel = 1.0_f64;

    for it in 0..max_iter {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(Error::LinearSolve(format!(
                "curvature p.Ap = {pq:.3e} at iteration {it}; matrix not SPD"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        best_rel = best_rel.min(rel);
        if rel <= TOL_TARGET {
            return Ok((
                x,
                SolveInfo {
                    iterations: it + 1,
                    relative_residual: rel,
                },
            ));
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if best_rel <= TOL_ACCEPT {
        return Ok((
            x,
            SolveInfo {
                iterations: max_iter,
                relative_residual: best_rel,
            },
        ));
    }
    Err(Error::LinearSolve(format!(
        "CG stalled at relative residual {best_rel:.3e} after {max_iter} iterations"
    )))
}

/// Projected SOR for the bound-constrained SPD system
/// `min 1/2 x^T A x - b^T x  s.t.  lower <= x <= upper`.
pub fn solve_spd_bounded(
    a: &CsrMatrix,
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n;
    let mut x: Vec<f64> = lower.to_vec();
    let omega = 1.5;
    let mut last_change = f64::INFINITY;
    for sweep in 0..max_sweeps {
        last_change = 0.0;
        for i in 0..n {
            let mut sigma = 0.0;
            let mut diag = 0.0;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if j == i {
                    diag = a.values[k];
                } else {
                    sigma += a.values[k] * x[j];
                }
            }
            if diag <= 0.0 {
                return Err(Error::LinearSolve(format!(
                    "non-positive diagonal {diag:.3e} at dof {i} in bounded solve"
                )));
            }
            let target = (b[i] - sigma) / diag;
            let candidate = x[i] + omega * (target - x[i]);
            let clipped = candidate.max(lower[i]).min(upper[i]);
            last_change = last_change.max((clipped - x[i]).abs());
            x[i] = clipped;
        }
        if last_change <= tol {
            return Ok((
                x,
                SolveInfo {
                    iterations: sweep + 1,
                    relative_residual: last_change,
                },
            ));
        }
    }
    Err(Error::ConstrainedSolve {
        iterations: max_sweeps,
        residual: last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_pattern(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|_| (0..n).collect()).collect()
    }

    #[test]
    fn identity_system_returns_rhs() {
        let mut a = CsrMatrix::from_pattern(vec![vec![0], vec![1], vec![2]]);
        for i in 0..3 {
            a.add(i, i, 1.0);
        }
        let b = vec![3.0, -1.0, 2.0];
        let (x, info) = solve_spd(&a, &b).unwrap();
        assert_eq!(x, b);
        assert!(info.relative_residual <= 1e-12);
    }

    #[test]
    fn laplacian_matches_closed_form() {
        // 1D Poisson -u'' = 1 on (0,1), u(0)=u(1)=0, P1 elements:
        // nodal values of the exact solution x(1-x)/2.
        let m = 40;
        let h = 1.0 / m as f64;
        let n = m - 1;
        let mut rows = Vec::new();
        for i in 0..n {
            let mut cols = vec![i];
            if i > 0 {
                cols.push(i - 1);
            }
            if i + 1 < n {
                cols.push(i + 1);
            }
            rows.push(cols);
        }
        let mut a = CsrMatrix::from_pattern(rows);
        let mut b = vec![h; n];
        for i in 0..n {
            a.add(i, i, 2.0 / h);
            if i > 0 {
                a.add(i, i - 1, -1.0 / h);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0 / h);
            }
        }
        let (x, _) = solve_spd(&a, &b).unwrap();
        for i in 0..n {
            let xi = (i + 1) as f64 * h;
            let exact = xi * (1.0 - xi) / 2.0;
            assert!((x[i] - exact).abs() <= 1e-10, "node {i}: {} vs {exact}", x[i]);
        }
        // Same system with Dirichlet elimination wired in.
        b[0] += 0.0;
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        a2.eliminate_dirichlet(&mut b2, &[0]);
        let (x2, _) = solve_spd(&a2, &b2).unwrap();
        assert_eq!(x2[0], 0.0);
    }

    #[test]
    fn random_spd_matches_dense_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        for _ in 0..3 {
            let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let spd = &m * m.transpose() + DMatrix::identity(n, n) * (n as f64);
            let mut a = CsrMatrix::from_pattern(dense_pattern(n));
            for i in 0..n {
                for j in 0..n {
                    a.add(i, j, spd[(i, j)]);
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (x, _) = solve_spd(&a, &b).unwrap();
            let oracle = spd
                .clone()
                .cholesky()
                .unwrap()
                .solve(&nalgebra::DVector::from_column_slice(&b));
            for i in 0..n {
                assert!((x[i] - oracle[i]).abs() <= 1e-9 * oracle.norm());
            }
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let mut a = CsrMatrix::from_pattern(dense_pattern(2));
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(0, 1, 0.0);
        a.add(1, 0, 0.0);
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0]),
            Err(Error::LinearSolve(_))
        ));
    }

    #[test]
    fn bounded_solve_clips_at_active_set() {
        // min 1/2 x^T A x - b^T x with A = I: unconstrained solution is b.
        let n = 4;
        let mut a = CsrMatrix::from_pattern((0..n).map(|i| vec![i]).collect());
        for i in 0..n {
            a.add(i, i, 1.0);
        }
        let b = vec![-0.5, 0.3, 1.7, 0.9];
        let lower = vec![0.0; n];
        let upper = vec![1.0; n];
        let (x, _) = solve_spd_bounded(&a, &b, &lower, &upper, 1e-12, 1000).unwrap();
        let expect = [0.0, 0.3, 1.0, 0.9];
        for i in 0..n {
            assert!((x[i] - expect[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn bounded_solve_matches_unbounded_inside_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20;
        let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &m * m.transpose() + DMatrix::identity(n, n) * (2.0 * n as f64);
        let mut a = CsrMatrix::from_pattern(dense_pattern(n));
        for i in 0..n {
            for j in 0..n {
                a.add(i, j, spd[(i, j)]);
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let (x_free, _) = solve_spd(&a, &b).unwrap();
        let lower = vec![-1e3; n];
        let upper = vec![1e3; n];
        let (x_box, _) = solve_spd_bounded(&a, &b, &lower, &upper, 1e-13, 20_000).unwrap();
        for i in 0..n {
            assert!((x_free[i] - x_box[i]).abs() <= 1e-8);
        }
    }
}
