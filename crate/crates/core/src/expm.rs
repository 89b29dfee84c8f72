//! Dense matrix exponential by scaling and squaring with a diagonal Padé
//! approximant (Higham 2005).

use ndarray::Array2;

use crate::error::{Error, Result};

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
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
const PADE_13: [f64; 14] = [
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

// 1-norm bounds below which the [m/m] approximant is accurate to unit roundoff.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

/// `exp(m)` to double precision.
///
/// `tolerance` is the relative accuracy the caller needs. The approximant
/// always works at unit roundoff, so anything at or above `f64::EPSILON` is
/// met and anything tighter is rejected.
pub fn matrix_exponential(m: &Array2<f64>, tolerance: f64) -> Result<Array2<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Parameter(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if !(tolerance.is_finite() && tolerance >= f64::EPSILON) {
        return Err(Error::Parameter(format!(
            "tolerance {tolerance} is not attainable in double precision"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("matrix has non-finite entries".into()));
    }
    if m.iter().all(|&v| v == 0.0) {
        return Ok(Array2::eye(n));
    }

    let norm = one_norm(m);
    for (theta, coeffs) in [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ] {
        if norm <= theta {
            let (u, v) = pade_low(m, coeffs);
            return pade_quotient(&u, &v);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);
    let (u, v) = pade_13(&scaled);
    let mut result = pade_quotient(&u, &v)?;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Maximum absolute column sum.
pub fn one_norm(m: &Array2<f64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_low(a: &Array2<f64>, b: &[f64]) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut odd = Array2::<f64>::eye(n) * b[1];
    let mut even = Array2::<f64>::eye(n) * b[0];
    let mut power = Array2::<f64>::eye(n);
    for j in 1..b.len() / 2 {
        power = power.dot(&a2);
        odd.scaled_add(b[2 * j + 1], &power);
        even.scaled_add(b[2 * j], &power);
    }
    (a.dot(&odd), even)
}

fn pade_13(a: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let b = &PADE_13;
    let n = a.nrows();
    let id = Array2::<f64>::eye(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let mut inner_u = &a6 * b[13];
    inner_u.scaled_add(b[11], &a4);
    inner_u.scaled_add(b[9], &a2);
    let mut u = a6.dot(&inner_u);
    u.scaled_add(b[7], &a6);
    u.scaled_add(b[5], &a4);
    u.scaled_add(b[3], &a2);
    u.scaled_add(b[1], &id);
    let u = a.dot(&u);

    let mut inner_v = &a6 * b[12];
    inner_v.scaled_add(b[10], &a4);
    inner_v.scaled_add(b[8], &a2);
    let mut v = a6.dot(&inner_v);
    v.scaled_add(b[6], &a6);
    v.scaled_add(b[4], &a4);
    v.scaled_add(b[2], &a2);
    v.scaled_add(b[0], &id);
    (u, v)
}

/// Solves `(V - U) R = (V + U)`.
fn pade_quotient(u: &Array2<f64>, v: &Array2<f64>) -> Result<Array2<f64>> {
    let q = v - u;
    let p = v + u;
    solve(q, p)
}

/// Solves `a x = b` for a matrix right-hand side by LU with partial pivoting.
pub fn solve(mut a: Array2<f64>, mut b: Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: b.nrows(),
        });
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .unwrap_or(col);
        if a[[pivot, col]] == 0.0 {
            return Err(Error::Numerical("singular matrix in linear solve".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            for k in 0..b.ncols() {
                b.swap([pivot, k], [col, k]);
            }
        }
        let d = a[[col, col]];
        let pivot_b = b.row(col).to_owned();
        for row in col + 1..n {
            let factor = a[[row, col]] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[[row, k]] -= factor * a[[col, k]];
            }
            b.row_mut(row).scaled_add(-factor, &pivot_b);
        }
    }
    for col in (0..n).rev() {
        let d = a[[col, col]];
        for k in 0..b.ncols() {
            let mut acc = b[[col, k]];
            for j in col + 1..n {
                acc -= a[[col, j]] * b[[j, k]];
            }
            b[[col, k]] = acc / d;
        }
    }
    Ok(b)
}
