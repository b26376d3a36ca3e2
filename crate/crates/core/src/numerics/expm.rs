//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13, selected from the 1-norm of the argument.

use crate::error::{Error, Result};
use crate::numerics::linear::Lu;
use crate::numerics::Matrix;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^{A t}`.
///
/// Returns [`Error::Overflow`] when the result (or an intermediate square)
/// leaves the representable range.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "matrix exponential of a non-square matrix".into(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    a.check_finite()?;
    let n = a.rows();
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let at = a.scaled(t);
    if !at.is_finite() {
        return Err(Error::Overflow);
    }
    let norm = at.norm_one();
    let ident = Matrix::identity(n);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(&at, &ident, coeffs);
            return finish(&u, &v);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(Error::Overflow);
    }
    let scaled = at.scaled(2f64.powi(-squarings));
    let (u, v) = pade_13(&scaled, &ident);
    let mut r = finish(&u, &v)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
        if !r.is_finite() {
            return Err(Error::Overflow);
        }
    }
    Ok(r)
}

fn pade_low(a: &Matrix, ident: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let a2 = a.matmul(a);
    let mut even = ident.clone();
    let mut u_acc = ident.scaled(b[1]);
    let mut v_acc = ident.scaled(b[0]);
    let mut k = 2;
    while k < b.len() {
        even = even.matmul(&a2);
        v_acc = v_acc.add(&even.scaled(b[k]));
        u_acc = u_acc.add(&even.scaled(b[k + 1]));
        k += 2;
    }
    (a.matmul(&u_acc), v_acc)
}

fn pade_13(a: &Matrix, ident: &Matrix) -> (Matrix, Matrix) {
    let b = &B13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = a6.scaled(b[13]).add(&a4.scaled(b[11])).add(&a2.scaled(b[9]));
    let u = a6
        .matmul(&inner_u)
        .add(&a6.scaled(b[7]))
        .add(&a4.scaled(b[5]))
        .add(&a2.scaled(b[3]))
        .add(&ident.scaled(b[1]));
    let u = a.matmul(&u);
    let inner_v = a6.scaled(b[12]).add(&a4.scaled(b[10])).add(&a2.scaled(b[8]));
    let v = a6
        .matmul(&inner_v)
        .add(&a6.scaled(b[6]))
        .add(&a4.scaled(b[4]))
        .add(&a2.scaled(b[2]))
        .add(&ident.scaled(b[0]));
    (u, v)
}

fn finish(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let p = v.add(u);
    let q = v.sub(u);
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::Overflow);
    }
    let r = Lu::factor(&q).map_err(|_| Error::Overflow)?.solve_matrix(&p)?;
    if !r.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(r)
}
