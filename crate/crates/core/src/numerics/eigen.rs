//! Eigendecomposition of small dense real matrices.
//!
//! Eigenvalues come from a real Schur form (nalgebra) of the balanced matrix;
//! eigenvectors from complex inverse iteration on the same balanced matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const SCHUR_MAX_ITER: usize = 10_000;
const MAX_CONDITION: f64 = 1e12;

/// Eigenpairs ordered by real part, then imaginary part.
#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    pub values: Vec<Complex64>,
    /// `vectors[j]` belongs to `values[j]`, normalized to unit 2-norm with
    /// its largest component real and positive.
    pub vectors: Vec<Vec<Complex64>>,
}

impl ComplexSpectrum {
    /// Largest `|Av − μv| / ((1 + |μ|)|v|)` over all pairs.
    pub fn max_residual(&self, a: &Matrix) -> f64 {
        let n = a.rows();
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(mu, v)| {
                let r: f64 = (0..n)
                    .map(|i| {
                        let av: Complex64 = (0..n).map(|j| v[j] * a[(i, j)]).sum();
                        (av - mu * v[i]).norm_sqr()
                    })
                    .sum::<f64>()
                    .sqrt();
                r / ((1.0 + mu.norm()) * cnorm(v))
            })
            .fold(0.0, f64::max)
    }

    /// `V diag(μ) V⁻¹`, which is real up to rounding for a real input.
    pub fn reconstruct(&self) -> Result<Matrix> {
        let n = self.values.len();
        let v = self.vector_matrix();
        let vinv = complex_inverse(&v)?;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|k| v[i][k] * self.values[k] * vinv[k][j]).sum();
                out[(i, j)] = s.re;
            }
        }
        Ok(out)
    }

    /// `V diag(e^{μt}) V⁻¹`, the modal form of the matrix exponential.
    pub fn exponential(&self, t: f64) -> Result<Matrix> {
        let n = self.values.len();
        let v = self.vector_matrix();
        let vinv = complex_inverse(&v)?;
        let growth: Vec<Complex64> = self.values.iter().map(|mu| (mu * t).exp()).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|k| v[i][k] * growth[k] * vinv[k][j]).sum();
                if !s.re.is_finite() {
                    return Err(Error::Overflow);
                }
                out[(i, j)] = s.re;
            }
        }
        Ok(out)
    }

    /// Eigenvector matrix, one column per eigenpair.
    pub fn vector_matrix(&self) -> Vec<Vec<Complex64>> {
        let n = self.values.len();
        (0..n).map(|i| (0..n).map(|k| self.vectors[k][i]).collect()).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Diagonal similarity `D⁻¹ A D` with power-of-two entries that roughly
/// equalizes row and column norms. Returns the balanced matrix and `diag(D)`.
pub fn balance(a: &Matrix) -> (Matrix, Vec<f64>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut d = vec![1.0; n];
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / radix {
                c2 *= radix;
                r2 /= radix;
                f *= radix;
            }
            while c2 >= r2 * radix {
                c2 /= radix;
                r2 *= radix;
                f /= radix;
            }
            if (c2 + r2) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    (m, d)
}

/// Eigenvalues only, sorted by real part then imaginary part.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    a.check_finite()?;
    let (bal, _) = balance(a);
    let schur = nalgebra::linalg::Schur::try_new(bal.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut values: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(values)
}

pub fn eigendecompose(a: &Matrix) -> Result<ComplexSpectrum> {
    let values = eigenvalues(a)?;
    let n = a.rows();
    let (bal, d) = balance(a);
    let scale = bal.norm_one().max(f64::MIN_POSITIVE);
    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (j, mu) in values.iter().enumerate() {
        // earlier members of the same eigenvalue cluster, for deflation
        let cluster: Vec<usize> = (0..j)
            .filter(|&k| (values[k] - mu).norm() <= 1e-8 * (1.0 + mu.norm()))
            .collect();
        let shift = mu + Complex64::new(1e-13 * scale, 0.0);
        let shifted: Vec<Vec<Complex64>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        let v = Complex64::new(bal[(r, c)], 0.0);
                        if r == c {
                            v - shift
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let lu = ComplexLu::factor(shifted, 1e-15 * scale);
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| {
                let base = if i == cluster.len() % n { 1.0 } else { 0.0 };
                Complex64::new(base + 0.1 / (1.0 + i as f64), 0.05 * i as f64)
            })
            .collect();
        // a defective cluster collapses onto one direction here and is
        // caught by the conditioning test below
        for &k in &cluster {
            let u: Vec<Complex64> = vectors[k].iter().zip(&d).map(|(x, s)| x / s).collect();
            let u = normalize(u);
            let proj: Complex64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, ui) in v.iter_mut().zip(&u) {
                *vi -= proj * ui;
            }
        }
        v = normalize(v);
        for _ in 0..4 {
            v = normalize(lu.solve(&v));
        }
        let back: Vec<Complex64> = v.iter().zip(&d).map(|(x, s)| x * s).collect();
        vectors.push(canonical_phase(normalize(back)));
    }
    let spectrum = ComplexSpectrum { values, vectors };
    let vm = spectrum.vector_matrix();
    let condition = match complex_inverse(&vm) {
        Ok(inv) => complex_norm_one(&vm) * complex_norm_one(&inv),
        Err(_) => f64::INFINITY,
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DefectiveMatrix { condition });
    }
    Ok(spectrum)
}

/// Largest `|μ_i + μ_j|/(1 + |μ_i|)` after pairing each eigenvalue with the
/// closest negated partner; zero for a perfectly Hamiltonian spectrum.
pub fn pairing_residual(values: &[Complex64]) -> f64 {
    values
        .iter()
        .map(|mu| {
            values
                .iter()
                .map(|nu| (mu + nu).norm() / (1.0 + mu.norm()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: Vec<Complex64>) -> Vec<Complex64> {
    let s = cnorm(&v);
    if s == 0.0 || !s.is_finite() {
        return v;
    }
    v.into_iter().map(|z| z / s).collect()
}

fn canonical_phase(v: Vec<Complex64>) -> Vec<Complex64> {
    let big = v.iter().copied().fold(Complex64::new(0.0, 0.0), |m, z| {
        if z.norm() > m.norm() * (1.0 + 1e-12) {
            z
        } else {
            m
        }
    });
    if big.norm() == 0.0 {
        return v;
    }
    let phase = big.conj() / big.norm();
    v.into_iter().map(|z| z * phase).collect()
}

fn complex_norm_one(m: &[Vec<Complex64>]) -> f64 {
    let n = m.len();
    (0..n)
        .map(|j| (0..n).map(|i| m[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Complex LU with partial pivoting; tiny pivots are replaced by `floor`
/// so inverse iteration on an (almost) singular shift still proceeds.
pub(crate) struct ComplexLu {
    lu: Vec<Vec<Complex64>>,
    perm: Vec<usize>,
    singular: bool,
}

impl ComplexLu {
    pub(crate) fn factor(mut a: Vec<Vec<Complex64>>, floor: f64) -> ComplexLu {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm()))
                .unwrap_or(k);
            a.swap(k, p);
            perm.swap(k, p);
            if a[k][k].norm() <= floor {
                singular = true;
                a[k][k] = Complex64::new(floor.max(f64::MIN_POSITIVE), 0.0);
            }
            let d = a[k][k];
            for i in k + 1..n {
                let f = a[i][k] / d;
                a[i][k] = f;
                let (upper, lower) = a.split_at_mut(i);
                for (dst, src) in lower[0][k + 1..].iter_mut().zip(&upper[k][k + 1..]) {
                    *dst -= f * src;
                }
            }
        }
        ComplexLu { lu: a, perm, singular }
    }

    pub(crate) fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.len();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

/// Solves a dense complex system, failing on an exactly singular pivot.
pub(crate) fn complex_solve(a: Vec<Vec<Complex64>>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, z| m.max(z.norm()));
    let lu = ComplexLu::factor(a, 1e-14 * scale);
    if lu.singular {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold: 1e-14 * scale,
        });
    }
    Ok(lu.solve(b))
}

fn complex_inverse(m: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0_f64, |s, z| s.max(z.norm()));
    let lu = ComplexLu::factor(m.to_vec(), 1e-14 * scale);
    if lu.singular {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold: 1e-14 * scale,
        });
    }
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        cols.push(lu.solve(&e));
    }
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}
