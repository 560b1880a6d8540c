//! Compressed sparse symmetric matrices and a conjugate gradient solver.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Row offsets and sorted column indices shared by every matrix assembled on
/// the same mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from per-row column lists. Columns are sorted and
    /// deduplicated; the diagonal is always included.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for (i, mut cols) in rows.into_iter().enumerate() {
            cols.push(i);
            cols.sort_unstable();
            cols.dedup();
            col_indices.extend(cols);
            row_offsets.push(col_indices.len());
        }
        SparsityPattern {
            row_offsets,
            col_indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Storage position of entry `(i, j)`, if it is part of the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }
}

/// Symmetric matrix stored as full CSR (both triangles) over a shared pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseSymmetricMatrix { pattern, values }
    }

    /// Diagonal matrix on the diagonal-only pattern.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let pattern = Arc::new(SparsityPattern::from_rows(vec![Vec::new(); diag.len()]));
        SparseSymmetricMatrix {
            pattern,
            values: diag.to_vec(),
        }
    }

    /// Dense symmetric input, keeping entries that are exactly nonzero.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols[i].push(j);
                }
            }
        }
        let pattern = Arc::new(SparsityPattern::from_rows(cols));
        let mut m = SparseSymmetricMatrix::zeros(pattern);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.add_to(i, j, v);
                }
            }
        }
        if !m.is_symmetric(1e-13) {
            return Err(Error::InvalidParameter("matrix is not symmetric".into()));
        }
        Ok(m)
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    /// Adds `v` at `(i, j)`. Panics if the entry is outside the pattern.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is outside the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let range = p.row_offsets[i]..p.row_offsets[i + 1];
            let mut s = 0.0;
            for (&j, &a) in p.col_indices[range.clone()].iter().zip(&self.values[range]) {
                s += a * x[j];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn sum_entries(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `alpha·self + beta·other`; both operands must share one pattern.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && self.pattern != other.pattern {
            return Err(Error::InvalidParameter(
                "matrices have different sparsity patterns".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(SparseSymmetricMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        })
    }

    /// Entry `(i, j)` equals `(j, i)` up to `rel_tol` relative to the largest entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        (0..self.dim()).all(|i| {
            self.pattern
                .row(i)
                .iter()
                .all(|&j| (self.get(i, j) - self.get(j, i)).abs() <= rel_tol * scale)
        })
    }

    /// Matrix Market coordinate format, lower triangle, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let entries: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| {
                self.pattern
                    .row(i)
                    .iter()
                    .filter(move |&&j| j <= i)
                    .map(move |&j| (i, j, self.get(i, j)))
            })
            .collect();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{n} {n} {}", entries.len())?;
        for (i, j, v) in entries {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradient settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop when `‖Ax − b‖ ≤ tolerance·‖b‖`.
    pub tolerance: f64,
    /// Iteration cap; `None` means ten times the system size.
    pub max_iterations: Option<usize>,
    /// Diagonal (Jacobi) preconditioning.
    pub jacobi: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: None,
            jacobi: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig {
            tolerance,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance {} outside (0, 1)",
                self.tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidParameter(
                "max iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n.max(1))
    }
}

/// Result of a converged solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖Ax − b‖/‖b‖` at exit.
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &SparseSymmetricMatrix, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    conjugate_gradient(a, b, cfg).map(|s| s.x)
}

/// Conjugate gradients from a zero initial guess. Convergence is declared on
/// the true residual: when the recurrence residual meets the tolerance the
/// residual is recomputed and the iteration restarted from it if needed.
pub fn conjugate_gradient(
    a: &SparseSymmetricMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(Solution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Option<Vec<f64>> = cfg
        .jacobi
        .then(|| a.diagonal().iter().map(|d| 1.0 / d).collect());
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => z
            .iter_mut()
            .zip(r)
            .zip(d)
            .for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };

    let cap = cfg.iteration_cap(n);
    let target = cfg.tolerance * b_norm;
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut r_norm = b_norm;

    for it in 1..=cap {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::InvalidParameter(
                "matrix is not positive definite along the search direction".into(),
            ));
        }
        let alpha = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        r_norm = norm(&r);
        let mut restart = false;
        if r_norm <= target {
            a.mul_vec_into(&x, &mut ap);
            r.iter_mut()
                .zip(b.iter().zip(&ap))
                .for_each(|(ri, (bi, ai))| *ri = bi - ai);
            r_norm = norm(&r);
            if r_norm <= target {
                return Ok(Solution {
                    x,
                    iterations: it,
                    residual: r_norm / b_norm,
                });
            }
            restart = true;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = if restart { 0.0 } else { rz_new / rz };
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        rz = rz_new;
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: r_norm / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
                        s + if i == j { n as f64 * 0.1 } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting, independent of CG.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(r, &bi)| {
                let mut r = r.clone();
                r.push(bi);
                r
            })
            .collect();
        for c in 0..n {
            let piv = (c..n)
                .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
                .unwrap();
            m.swap(c, piv);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
            x[r] = (m[r][n] - s) / m[r][r];
        }
        x
    }

    #[test]
    fn cg_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for jacobi in [false, true] {
            let dense = random_spd(10, &mut rng);
            let a = SparseSymmetricMatrix::from_dense(&dense).unwrap();
            let b: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cfg = SolverConfig {
                tolerance: 1e-13,
                jacobi,
                ..Default::default()
            };
            let x = solve_spd(&a, &b, &cfg).unwrap();
            let oracle = dense_solve(&dense, &b);
            for (u, v) in x.iter().zip(&oracle) {
                assert!((u - v).abs() < 1e-8, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn diagonal_system() {
        let d = [1.0, 2.0, 4.0, 0.5];
        let a = SparseSymmetricMatrix::from_diagonal(&d);
        let b = [3.0, -1.0, 2.0, 7.0];
        let x = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        for i in 0..4 {
            assert!((x[i] - b[i] / d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let a = SparseSymmetricMatrix::from_diagonal(&[1.0, 2.0]);
        let s = conjugate_gradient(&a, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense = random_spd(10, &mut rng);
        let a = SparseSymmetricMatrix::from_dense(&dense).unwrap();
        let b = vec![1.0; 10];
        let cfg = SolverConfig {
            tolerance: 1e-12,
            max_iterations: Some(2),
            jacobi: false,
        };
        match conjugate_gradient(&a, &b, &cfg) {
            Err(Error::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let a = SparseSymmetricMatrix::from_diagonal(&[1.0]);
        for tol in [0.0, 1.0, -1.0, f64::NAN] {
            assert!(solve_spd(&a, &[1.0], &SolverConfig::with_tolerance(tol)).is_err());
        }
        let cfg = SolverConfig {
            max_iterations: Some(0),
            ..Default::default()
        };
        assert!(solve_spd(&a, &[1.0], &cfg).is_err());
        assert!(matches!(
            solve_spd(&a, &[1.0, 2.0], &SolverConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matrix_market_lower_triangle() {
        let a = SparseSymmetricMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let mut out = Vec::new();
        a.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real symmetric");
        assert_eq!(lines[1], "2 2 3");
        assert_eq!(lines[2], "1 1 2e0");
        assert_eq!(lines[3], "2 1 -1e0");
        assert_eq!(lines[4], "2 2 2e0");
    }

    #[test]
    fn asymmetric_dense_rejected() {
        assert!(SparseSymmetricMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }
}
