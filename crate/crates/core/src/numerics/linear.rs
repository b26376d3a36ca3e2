//! Dense and banded linear solves, Cholesky, and exact quadratic minimization.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Relative pivot threshold shared by the LU-based solvers.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// LU factorization with partial pivoting of a column-equilibrated matrix.
///
/// Columns are scaled to unit max-norm before elimination, so a pivot is
/// rejected when it falls below `PIVOT_TOLERANCE` relative to the largest
/// entry of the equilibrated matrix. Column scaling only rescales the
/// unknowns, which matters for bases mixing `e^t` and `e^{100 t}`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    col_scale: Vec<f64>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        a.check_finite()?;
        let n = a.rows();
        let col_scale: Vec<f64> = (0..n)
            .map(|j| {
                let m = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, j)].abs()));
                if m > 0.0 {
                    1.0 / m
                } else {
                    1.0
                }
            })
            .collect();
        let mut lu: Vec<f64> = (0..n * n).map(|k| a.as_slice()[k] * col_scale[k % n]).collect();
        let scale = lu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let threshold = PIVOT_TOLERANCE * scale;
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold {
                return Err(Error::SingularMatrix { pivot, threshold });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, col_scale })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} entries, matrix has {n} rows",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        for (xi, s) in x.iter_mut().zip(&self.col_scale) {
            *xi *= s;
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.n {
            return Err(Error::DimensionMismatch("row count differs".into()));
        }
        let mut out = Matrix::zeros(self.n, b.cols());
        let mut col = vec![0.0; self.n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            let x = self.solve(&col)?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Solves `A x = b` by partial-pivoting LU.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    Lu::factor(a)?.solve_matrix(&Matrix::identity(a.rows()))
}

/// Cholesky factor `L` with `A = L Lᵀ`, stored as a lower-triangular matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Returns `argmin pᵀ Q p + 2 gᵀ p`, i.e. the solution of `Q p = -g`.
pub fn minimize_quadratic(q: &Matrix, g: &[f64]) -> Result<Vec<f64>> {
    if q.rows() != g.len() || !q.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "quadratic form {}x{} with linear term of length {}",
            q.rows(),
            q.cols(),
            g.len()
        )));
    }
    let sym_tol = 1e-12 * q.max_abs().max(1.0);
    for i in 0..q.rows() {
        for j in 0..i {
            if (q[(i, j)] - q[(j, i)]).abs() > sym_tol {
                return Err(Error::InvalidArgument("quadratic form is not symmetric".into()));
            }
        }
    }
    let l = cholesky(q)?;
    let n = g.len();
    // L y = -g, then Lᵀ p = y
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (-g[i] - s) / l[(i, i)];
    }
    let mut p = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * p[k]).sum();
        p[i] = (y[i] - s) / l[(i, i)];
    }
    Ok(p)
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, factored in
/// place by Gaussian elimination with partial pivoting.
///
/// Storage keeps `kl` extra super-diagonals per row for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            j + self.kl >= i && j <= i + self.ku + self.kl,
            "({i}, {j}) outside band"
        );
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside declared band"
        );
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// `A x` for the matrix as assembled (before factoring).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch("banded right-hand side length".into()));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite banded entry".into()));
        }
        let threshold = PIVOT_TOLERANCE * self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let span = self.kl + self.ku;
        let mut rhs = b.to_vec();
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + span).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold {
                return Err(Error::SingularMatrix { pivot: best, threshold });
            }
            if p != k {
                for j in k..=last_col {
                    let (a, c) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, c);
                }
                rhs.swap(k, p);
            }
            let d = self.get(k, k);
            for i in k + 1..=last_row {
                let f = self.get(i, k) / d;
                if f == 0.0 {
                    continue;
                }
                let s = self.slot(i, k);
                self.data[s] = 0.0;
                for j in k + 1..=last_col {
                    let src = self.data[self.slot(k, j)];
                    let dst = self.slot(i, j);
                    self.data[dst] -= f * src;
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + span).min(n - 1);
            let s: f64 = (i + 1..=last_col).map(|j| self.get(i, j) * x[j]).sum();
            x[i] = (rhs[i] - s) / self.get(i, i);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let x = solve_linear(&Matrix::identity(2), &[1.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn hand_invertible_two_by_two() {
        let a = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let x = solve_linear(&a, &[1.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &[1.0, 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn rhs_length_checked() {
        assert!(matches!(
            solve_linear(&Matrix::identity(3), &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let q = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            minimize_quadratic(&q, &[0.0, 0.0]),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn quadratic_identity_zero() {
        let p = minimize_quadratic(&Matrix::identity(3), &[0.0; 3]).unwrap();
        assert_eq!(p, vec![0.0; 3]);
    }

    #[test]
    fn quartic_polynomial_minimizer() {
        // cost 13/630 a^2 + a/30 + 11/7  =>  Q = 13/630, g = 1/60
        let q = Matrix::from_rows(&[vec![13.0 / 630.0]]).unwrap();
        let a = minimize_quadratic(&q, &[1.0 / 60.0]).unwrap()[0];
        assert!((a + 21.0 / 26.0).abs() < 1e-15);
    }

    #[test]
    fn banded_matches_dense() {
        let n = 9;
        let (kl, ku) = (2, 1);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // tiny diagonal forces row exchanges
                let v = if i == j {
                    1e-3
                } else {
                    ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.5
                };
                band.set(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let xd = solve_linear(&dense, &b).unwrap();
        let xb = band.solve(&b).unwrap();
        for (u, v) in xd.iter().zip(&xb) {
            assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()), "{u} vs {v}");
        }
    }
}
