//! Inverse engineering over fixed bases.
//!
//! A trajectory `x(t) = Σ aᵢ fᵢ(t)` is postulated in a polynomial,
//! trigonometric or exponential basis. The boundary conditions are eliminated
//! by an affine map from free parameters to coefficients, after which the
//! cost is an exact quadratic form in the free parameters and is minimized by
//! one linear solve.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Columns, ControlProblem, Evaluator, ProtocolSolution, SolutionKind, StateSample, Trajectory};
use crate::numerics::{
    exponential_integral, graded_breaks, integrate_panels, minimize_quadratic, solve_linear, Matrix, DEFAULT_NODES,
};

/// Relative agreement demanded between the cofactor and linear-solve paths
/// of the exponential family.
pub const EXPONENTIAL_CROSS_CHECK: f64 = 1e-9;
/// Hadamard ratio of the boundary matrix below which the exponential basis is
/// treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    Polynomial(usize),
    Trigonometric(usize),
    Exponential(f64),
}

impl FamilyKind {
    pub fn solution_kind(self) -> SolutionKind {
        match self {
            FamilyKind::Polynomial(_) => SolutionKind::StaPolynomial,
            FamilyKind::Trigonometric(_) => SolutionKind::StaTrigonometric,
            FamilyKind::Exponential(_) => SolutionKind::StaExponential,
        }
    }
}

/// Basis functions with exact derivatives and exact pairwise integrals.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// `(t/T)^d` for each listed degree.
    Monomial { degrees: Vec<u32>, horizon: f64 },
    /// `sin(ω t)` for each listed frequency.
    Sine { frequencies: Vec<f64>, horizon: f64 },
    /// `e^{r (t − c)}` for each (rate, anchor) pair; anchors keep every
    /// function bounded by `e^{|r|T}` only where the rate is of order one.
    Exponential { terms: Vec<(f64, f64)>, horizon: f64 },
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Monomial { degrees, .. } => degrees.len(),
            Basis::Sine { frequencies, .. } => frequencies.len(),
            Basis::Exponential { terms, .. } => terms.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Basis::Monomial { horizon, .. } | Basis::Sine { horizon, .. } | Basis::Exponential { horizon, .. } => {
                *horizon
            }
        }
    }

    /// `d^k fᵢ / dt^k` at `t`.
    pub fn derivative(&self, i: usize, t: f64, k: usize) -> f64 {
        match self {
            Basis::Monomial { degrees, horizon } => {
                let d = degrees[i] as usize;
                if k > d {
                    return 0.0;
                }
                let s = t / horizon;
                falling(d, k) * s.powi((d - k) as i32) / horizon.powi(k as i32)
            }
            Basis::Sine { frequencies, .. } => {
                let w = frequencies[i];
                let amp = w.powi(k as i32);
                match k % 4 {
                    0 => amp * (w * t).sin(),
                    1 => amp * (w * t).cos(),
                    2 => -amp * (w * t).sin(),
                    _ => -amp * (w * t).cos(),
                }
            }
            Basis::Exponential { terms, .. } => {
                let (r, c) = terms[i];
                r.powi(k as i32) * (r * (t - c)).exp()
            }
        }
    }

    /// `∫₀ᵀ fᵢ^{(a)} fⱼ^{(b)} dt` in closed form.
    pub fn moment(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        match self {
            Basis::Monomial { degrees, horizon } => {
                let (di, dj) = (degrees[i] as usize, degrees[j] as usize);
                if a > di || b > dj {
                    return 0.0;
                }
                let p = (di - a + dj - b) as f64;
                falling(di, a) * falling(dj, b) * horizon.powi(1 - (a + b) as i32) / (p + 1.0)
            }
            Basis::Sine { frequencies, horizon } => {
                let (wi, wj) = (frequencies[i], frequencies[j]);
                let amp = wi.powi(a as i32) * wj.powi(b as i32);
                // fᵢ^{(a)} = σ·ω^a·(sin | cos)
                let (si, ci) = sine_phase(a);
                let (sj, cj) = sine_phase(b);
                let t = *horizon;
                let (sum, diff) = (wi + wj, wi - wj);
                let base = match (ci, cj) {
                    (false, false) => 0.5 * (cos_integral(diff, t) - cos_integral(sum, t)),
                    (true, true) => 0.5 * (cos_integral(diff, t) + cos_integral(sum, t)),
                    (false, true) => 0.5 * (sin_integral(sum, t) + sin_integral(diff, t)),
                    (true, false) => 0.5 * (sin_integral(sum, t) - sin_integral(diff, t)),
                };
                si * sj * amp * base
            }
            Basis::Exponential { terms, horizon } => {
                let (ri, ci) = terms[i];
                let (rj, cj) = terms[j];
                ri.powi(a as i32) * rj.powi(b as i32) * exponential_integral(ri + rj, ri * ci + rj * cj, *horizon)
            }
        }
    }

    /// Same integral by graded composite Gauss–Legendre; the oracle for
    /// [`Basis::moment`].
    pub fn moment_quadrature(&self, i: usize, j: usize, a: usize, b: usize) -> Result<f64> {
        let breaks = graded_breaks(self.horizon(), self.rate());
        integrate_panels(
            |t| self.derivative(i, t, a) * self.derivative(j, t, b),
            &breaks,
            DEFAULT_NODES,
        )
    }

    fn rate(&self) -> f64 {
        match self {
            Basis::Exponential { terms, .. } => terms.iter().fold(1.0, |m, &(r, _)| m.max(r.abs())),
            _ => 1.0,
        }
    }

    /// Full Gram matrix of `∫[fᵢfⱼ + fᵢ'fⱼ' + λ(fᵢ''+fᵢ')(fⱼ''+fⱼ')]dt`.
    pub fn gram(&self, lambda: f64) -> Matrix {
        self.gram_with(lambda, |i, j, a, b| self.moment(i, j, a, b))
    }

    pub fn gram_quadrature(&self, lambda: f64) -> Result<Matrix> {
        let n = self.len();
        let mut err = None;
        let g = self.gram_with(lambda, |i, j, a, b| match self.moment_quadrature(i, j, a, b) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        match err {
            Some(e) => Err(e),
            None => {
                debug_assert_eq!(g.rows(), n);
                Ok(g)
            }
        }
    }

    fn gram_with(&self, lambda: f64, mut m: impl FnMut(usize, usize, usize, usize) -> f64) -> Matrix {
        let n = self.len();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut v = m(i, j, 0, 0) + m(i, j, 1, 1);
                if lambda > 0.0 {
                    v += lambda * (m(i, j, 2, 2) + m(i, j, 2, 1) + m(i, j, 1, 2) + m(i, j, 1, 1));
                }
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|j| (n - j) as f64).product()
}

/// Sign and sin/cos selector of the `a`-th derivative of `sin`.
fn sine_phase(a: usize) -> (f64, bool) {
    match a % 4 {
        0 => (1.0, false),
        1 => (1.0, true),
        2 => (-1.0, false),
        _ => (-1.0, true),
    }
}

fn cos_integral(w: f64, t: f64) -> f64 {
    if w == 0.0 {
        t
    } else {
        (w * t).sin() / w
    }
}

fn sin_integral(w: f64, t: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        (1.0 - (w * t).cos()) / w
    }
}

/// A basis plus an affine map `coefficients = offset + R·p` whose image
/// satisfies `x(0) = 0`, `x(T) = 1`, `ẋ(0) = ẋ(T) = 0`.
#[derive(Debug, Clone)]
pub struct AnsatzFamily {
    pub kind: FamilyKind,
    pub basis: Basis,
    /// `R`, absent when there are no free parameters.
    pub map: Option<Matrix>,
    pub offset: Vec<f64>,
    pub free_dim: usize,
    pub coefficient_names: Vec<String>,
    pub free_names: Vec<String>,
}

impl AnsatzFamily {
    pub fn horizon(&self) -> f64 {
        self.basis.horizon()
    }

    pub fn coefficients(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.free_dim, "wrong number of free parameters");
        match &self.map {
            None => self.offset.clone(),
            Some(r) => r.mul_vec(free).iter().zip(&self.offset).map(|(a, b)| a + b).collect(),
        }
    }

    /// `x^{(k)}(t)` for the given coefficient vector.
    pub fn x_derivative(&self, coeffs: &[f64], t: f64, k: usize) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.basis.derivative(i, t, k))
            .sum()
    }

    /// Largest violation of the four boundary conditions.
    pub fn boundary_residual(&self, coeffs: &[f64]) -> f64 {
        let t = self.horizon();
        [
            self.x_derivative(coeffs, 0.0, 0).abs(),
            (self.x_derivative(coeffs, t, 0) - 1.0).abs(),
            self.x_derivative(coeffs, 0.0, 1).abs(),
            self.x_derivative(coeffs, t, 1).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

const FREE_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn free_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| FREE_NAMES.get(i).map_or_else(|| format!("p{i}"), |s| s.to_string()))
        .collect()
}

fn check_order(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidOrder {
            order: n,
            reason: "basis order must be at least 3",
        });
    }
    if n > 40 {
        return Err(Error::InvalidOrder {
            order: n,
            reason: "basis order above 40 is numerically meaningless",
        });
    }
    Ok(())
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be positive and finite"
        )))
    }
}

/// `x = Σ_{k=2}^{N} a_k (t/T)^k` with `a₂, a₃` dependent.
pub fn build_polynomial(n: usize, horizon: f64) -> Result<AnsatzFamily> {
    check_order(n)?;
    check_horizon(horizon)?;
    let dim = n - 1;
    let free_dim = n - 3;
    // Σa_k = 1 and Σk·a_k = 0 solved for a₂, a₃
    let mut offset = vec![0.0; dim];
    offset[0] = 3.0;
    offset[1] = -2.0;
    let map = (free_dim > 0).then(|| {
        Matrix::from_fn(dim, free_dim, |row, col| {
            let k = (col + 4) as f64;
            match row {
                0 => k - 3.0,
                1 => 2.0 - k,
                r if r == col + 2 => 1.0,
                _ => 0.0,
            }
        })
    });
    Ok(AnsatzFamily {
        kind: FamilyKind::Polynomial(n),
        basis: Basis::Monomial {
            degrees: (2..=n as u32).collect(),
            horizon,
        },
        map,
        offset,
        free_dim,
        coefficient_names: (2..=n).map(|k| format!("a{k}")).collect(),
        free_names: free_names(free_dim),
    })
}

/// `x = Σ_{k=1}^{N} a_k sin(kπt/2T)` with `a₁, a₂, a₃` dependent.
///
/// For `N = 5` the free parameters are `(a, b)` with `a₄ = a − b`, `a₅ = b`,
/// the parametrization under which the published coefficient table is given.
pub fn build_trigonometric(n: usize, horizon: f64) -> Result<AnsatzFamily> {
    check_order(n)?;
    check_horizon(horizon)?;
    let free_dim = n - 3;
    // exact values of sin(kπ/2) and cos(kπ/2)
    let sin_q = |k: usize| [0.0, 1.0, 0.0, -1.0][k % 4];
    let cos_q = |k: usize| [1.0, 0.0, -1.0, 0.0][k % 4];
    // dependent coefficients as affine functions of the tail a₄..a_N:
    //   a₂ = ½ Σ k cos(kπ/2) a_k
    //   a₃ = (−2a₂ − Σ k a_k − 1 + Σ sin(kπ/2) a_k) / 4
    //   a₁ = 1 − Σ sin(kπ/2) a_k + a₃
    let tail_row = |k: usize| -> [f64; 3] {
        let kf = k as f64;
        let a2 = 0.5 * kf * cos_q(k);
        let a3 = (-2.0 * a2 - kf + sin_q(k)) / 4.0;
        let a1 = -sin_q(k) + a3;
        [a1, a2, a3]
    };
    let offset_a3 = -0.25;
    let mut offset = vec![0.0; n];
    offset[0] = 1.0 + offset_a3;
    offset[2] = offset_a3;
    let mut tail = Matrix::zeros(n, free_dim.max(1));
    for col in 0..free_dim {
        let k = col + 4;
        let dep = tail_row(k);
        for (r, v) in dep.iter().enumerate() {
            tail[(r, col)] = *v;
        }
        tail[(col + 3, col)] = 1.0;
    }
    let map = (free_dim > 0).then(|| {
        if n == 5 {
            let change = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 1.0]]).expect("constant");
            tail.matmul(&change)
        } else {
            tail.block(0, 0, n, free_dim)
        }
    });
    Ok(AnsatzFamily {
        kind: FamilyKind::Trigonometric(n),
        basis: Basis::Sine {
            frequencies: (1..=n).map(|k| k as f64 * PI / (2.0 * horizon)).collect(),
            horizon,
        },
        map,
        offset,
        free_dim,
        coefficient_names: (1..=n).map(|k| format!("a{k}")).collect(),
        free_names: free_names(free_dim),
    })
}

/// `x = a eᵗ + b e⁻ᵗ + c e^{kt} + d e^{−kt}`, fully determined by the
/// boundary conditions.
///
/// Internally `|k|` is used with the basis `eᵗ, e⁻ᵗ, e^{|k|(t−T)}, e^{−|k|t}`,
/// which is the published one with the growing coefficient multiplied by
/// `e^{|k|T}`; this keeps every quantity finite for very large `k`.
pub fn build_exponential(k: f64, horizon: f64) -> Result<AnsatzFamily> {
    check_horizon(horizon)?;
    if !k.is_finite() {
        return Err(Error::InvalidArgument(format!("rate k = {k} is not finite")));
    }
    let kk = k.abs();
    let basis = Basis::Exponential {
        terms: vec![(1.0, 0.0), (-1.0, 0.0), (kk, horizon), (-kk, 0.0)],
        horizon,
    };
    let b = exponential_boundary_matrix(&basis);
    let relative_det = hadamard_ratio(&b);
    if kk == 0.0 || kk == 1.0 || !(relative_det >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateBasis { k, relative_det });
    }
    let cofactor = exponential_cofactors(kk, horizon);
    let linear = solve_linear(&b, &[0.0, 1.0, 0.0, 0.0])?;
    let scale = cofactor.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = cofactor
        .iter()
        .zip(&linear)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if !(gap <= EXPONENTIAL_CROSS_CHECK * scale) {
        return Err(Error::CrossCheck(format!(
            "exponential coefficients: cofactor and linear solve differ by {gap:e} (scale {scale:e})"
        )));
    }
    Ok(AnsatzFamily {
        kind: FamilyKind::Exponential(k),
        basis,
        map: None,
        offset: cofactor,
        free_dim: 0,
        coefficient_names: vec!["a".into(), "b".into(), "c_scaled".into(), "d".into()],
        free_names: vec![],
    })
}

/// Rows `x(0), x(T), ẋ(0), ẋ(T)` of the basis.
fn exponential_boundary_matrix(basis: &Basis) -> Matrix {
    let t = basis.horizon();
    Matrix::from_fn(4, basis.len(), |row, col| match row {
        0 => basis.derivative(col, 0.0, 0),
        1 => basis.derivative(col, t, 0),
        2 => basis.derivative(col, 0.0, 1),
        _ => basis.derivative(col, t, 1),
    })
}

/// `|det B| / Π‖colⱼ‖`, in `[0, 1]`.
fn hadamard_ratio(b: &Matrix) -> f64 {
    let det = b.to_nalgebra().determinant().abs();
    let cols: f64 = (0..b.cols())
        .map(|j| (0..b.rows()).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .product();
    if cols == 0.0 {
        0.0
    } else {
        det / cols
    }
}

/// Cofactor solution for `(a, b, c̃, d)` with `c̃ = c·e^{kT}`, written in
/// `E = e^T`, `q = e^{−kT}` so only decaying exponentials of `k` appear.
pub fn exponential_cofactors(k: f64, horizon: f64) -> Vec<f64> {
    let e = horizon.exp();
    let q = (-k * horizon).exp();
    let det =
        -(1.0 - k).powi(2) * q * q / e - (1.0 - k).powi(2) * e + (1.0 + k).powi(2) / e + (1.0 + k).powi(2) * e * q * q
            - 8.0 * k * q;
    let a = k * (-2.0 * q / e + (1.0 + k) * q * q + (1.0 - k)) / det;
    let b = k * (-2.0 * e * q + (1.0 - k) * q * q + (1.0 + k)) / det;
    let c = k * ((1.0 + 1.0 / k) / e + (1.0 - 1.0 / k) * e - 2.0 * q) / det;
    let d = k * ((1.0 - 1.0 / k) * q / e + (1.0 + 1.0 / k) * e * q - 2.0) / det;
    vec![a, b, c, d]
}

/// Cost `C(p) = pᵀQp + 2gᵀp + c0` over the free parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GramForm {
    pub q: Option<Matrix>,
    pub g: Vec<f64>,
    pub c0: f64,
}

impl GramForm {
    pub fn cost(&self, p: &[f64]) -> f64 {
        match &self.q {
            None => self.c0,
            Some(q) => {
                let qp = q.mul_vec(p);
                let quad: f64 = p.iter().zip(&qp).map(|(a, b)| a * b).sum();
                let lin: f64 = p.iter().zip(&self.g).map(|(a, b)| a * b).sum();
                quad + 2.0 * lin + self.c0
            }
        }
    }

    pub fn minimize(&self) -> Result<Vec<f64>> {
        match &self.q {
            None => Ok(vec![]),
            Some(q) => minimize_quadratic(q, &self.g),
        }
    }
}

/// Exact Gram form of the cost pulled back through the constraint map.
pub fn assemble_gram(family: &AnsatzFamily, lambda: f64) -> Result<GramForm> {
    pull_back(family, &family.basis.gram(lambda))
}

/// As [`assemble_gram`] with every basis integral done by quadrature.
pub fn assemble_gram_quadrature(family: &AnsatzFamily, lambda: f64) -> Result<GramForm> {
    pull_back(family, &family.basis.gram_quadrature(lambda)?)
}

fn pull_back(family: &AnsatzFamily, g: &Matrix) -> Result<GramForm> {
    let o = &family.offset;
    let go = g.mul_vec(o);
    let c0: f64 = o.iter().zip(&go).map(|(a, b)| a * b).sum();
    match &family.map {
        None => Ok(GramForm { q: None, g: vec![], c0 }),
        Some(r) => {
            let rt = r.transpose();
            let q = rt.matmul(g).matmul(r);
            // symmetrize away rounding
            let q = q.add(&q.transpose()).scaled(0.5);
            crate::numerics::cholesky(&q)?;
            Ok(GramForm {
                q: Some(q),
                g: rt.mul_vec(&go),
                c0,
            })
        }
    }
}

struct StaEvaluator {
    basis: Basis,
    coeffs: Vec<f64>,
}

impl StaEvaluator {
    fn x(&self, t: f64, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.basis.derivative(i, t, k))
            .sum()
    }
}

impl Evaluator for StaEvaluator {
    fn sample(&self, t: f64) -> StateSample {
        let x = self.x(t, 0);
        let xdot = self.x(t, 1);
        let xddot = self.x(t, 2);
        StateSample {
            t,
            x,
            xdot,
            u: x + xdot,
            v: xdot + xddot,
            y: None,
            z: vec![],
            p: vec![],
        }
    }

    fn x_derivative(&self, t: f64, k: usize) -> f64 {
        self.x(t, k)
    }

    fn rate(&self) -> f64 {
        self.basis.rate()
    }
}

/// Minimizes the cost over the family and returns the optimal protocol.
pub fn solve_sta(family: &AnsatzFamily, problem: &ControlProblem) -> Result<ProtocolSolution> {
    if problem.order != 1 {
        return Err(Error::InvalidOrder {
            order: problem.order,
            reason: "basis families implement first-order boundary conditions only",
        });
    }
    if (problem.horizon - family.horizon()).abs() > 1e-14 * problem.horizon {
        return Err(Error::InvalidArgument(format!(
            "family built for horizon {} but problem has {}",
            family.horizon(),
            problem.horizon
        )));
    }
    let gram = assemble_gram(family, problem.lambda)?;
    let free = gram.minimize()?;
    let coeffs = family.coefficients(&free);

    let mut named: Vec<(String, f64)> = family.free_names.iter().cloned().zip(free.iter().copied()).collect();
    match family.kind {
        FamilyKind::Exponential(k) => {
            let t = family.horizon();
            let kk = k.abs();
            // undo the e^{kT} scaling for the published labelling, where c
            // multiplies e^{kt}
            let grow = coeffs[2] * (-kk * t).exp();
            let (c, d) = if k > 0.0 { (grow, coeffs[3]) } else { (coeffs[3], grow) };
            named.extend([
                ("a".to_string(), coeffs[0]),
                ("b".to_string(), coeffs[1]),
                ("c".to_string(), c),
                ("d".to_string(), d),
                ("c_scaled".to_string(), coeffs[2]),
                ("k".to_string(), k),
            ]);
        }
        _ => named.extend(family.coefficient_names.iter().cloned().zip(coeffs.iter().copied())),
    }

    let evaluator = StaEvaluator {
        basis: family.basis.clone(),
        coeffs,
    };
    let trajectory = Trajectory::new(Arc::new(evaluator), problem.horizon, Columns::default());
    ProtocolSolution::assemble(*problem, family.kind.solution_kind(), named, trajectory, vec![])
}

/// Convenience: build the family for `kind` at the problem horizon and solve.
pub fn solve_family(kind: FamilyKind, problem: &ControlProblem) -> Result<ProtocolSolution> {
    let family = match kind {
        FamilyKind::Polynomial(n) => build_polynomial(n, problem.horizon)?,
        FamilyKind::Trigonometric(n) => build_trigonometric(n, problem.horizon)?,
        FamilyKind::Exponential(k) => build_exponential(k, problem.horizon)?,
    };
    solve_sta(&family, problem)
}
