//! Dense Hermitian helpers on top of faer.

use crate::error::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

pub type CMat = Mat<faer::c64>;

#[inline]
pub fn to_faer(z: C64) -> faer::c64 {
    faer::c64::new(z.re, z.im)
}

#[inline]
pub fn from_faer(z: faer::c64) -> C64 {
    C64::new(z.re, z.im)
}

/// Ascending eigenvalues of a Hermitian matrix; reads the lower triangle.
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let mut ev = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// Ascending eigenvalues of a small Hermitian matrix given row-major.
pub fn eigvalsh_small(n: usize, a: &[C64]) -> Result<Vec<f64>> {
    match n {
        0 => Ok(vec![]),
        1 => Ok(vec![a[0].re]),
        2 => {
            let (p, q, b) = (a[0].re, a[3].re, a[2]);
            let mean = 0.5 * (p + q);
            let rad = (0.25 * (p - q) * (p - q) + b.norm_sqr()).sqrt();
            Ok(vec![mean - rad, mean + rad])
        }
        _ => {
            let m = Mat::<faer::c64>::from_fn(n, n, |i, j| to_faer(a[i * n + j]));
            eigvalsh(&m)
        }
    }
}

/// max |A - A*| entrywise.
pub fn hermitian_residual(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            let x = from_faer(a[(i, j)]) - from_faer(a[(j, i)]).conj();
            r = r.max(x.norm());
        }
    }
    r
}
