//! Double-double kernels for the parts of the pipeline whose output feeds
//! `-ln lambda` of tiny reduced-density-matrix eigenvalues.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

const JACOBI_TOL: f64 = 1e-30;
const MAX_SWEEPS: usize = 60;
/// Squared column norms below this are numerically zero; rotating them
/// would underflow the double-double products.
const NEGLIGIBLE_NORM2: f64 = 1e-200;

pub(crate) fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

pub(crate) fn dot(a: &[TwoFloat], b: &[TwoFloat]) -> TwoFloat {
    a.iter().zip(b).fold(dd(0.0), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

/// One-sided (Hestenes) Jacobi orthogonalization of the columns of `A`.
///
/// Returns the squared singular values `sigma_k^2` and the orthogonal `V`
/// with `A V` having orthogonal columns, i.e. the eigenpairs of `A^T A`.
/// Small singular values keep high relative accuracy.
pub fn jacobi_gram(mut columns: Vec<Vec<TwoFloat>>) -> (Vec<TwoFloat>, DMatrix<f64>) {
    let n = columns.len();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&columns[p], &columns[p]);
                let beta = dot(&columns[q], &columns[q]);
                let gamma = dot(&columns[p], &columns[q]);
                if alpha.hi() < NEGLIGIBLE_NORM2 || beta.hi() < NEGLIGIBLE_NORM2 {
                    continue;
                }
                if gamma.abs().hi() <= JACOBI_TOL * (alpha * beta).sqrt().hi() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma * 2.0);
                let t = if zeta.abs().hi() > 1e100 {
                    (zeta * 2.0).recip()
                } else {
                    let t = (zeta.abs() + (zeta * zeta + 1.0).sqrt()).recip();
                    if zeta.hi() < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = (t * t + 1.0).sqrt().recip();
                let s = c * t;
                let (left, right) = columns.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                let (c, s) = (to_f64(c), to_f64(s));
                for r in 0..n {
                    let (xp, yq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * xp - s * yq;
                    v[(r, q)] = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma2 = columns.iter().map(|c| dot(c, c)).collect();
    (sigma2, v)
}
