//! Small dense kernels not provided by nalgebra in the form needed here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{cln, to_f64, Float};

/// LU factorization without pivoting for matrices with positive-definite
/// Hermitian part.
///
/// Every Schur complement of such a matrix again has positive-definite
/// Hermitian part, so all pivots lie in the open right half-plane. Summing
/// their principal logarithms therefore gives the branch of ln det that is
/// continuous from the identity, with no phase tracking required.
pub(crate) struct AccretiveLu<T: Float> {
    lu: DMatrix<Complex<T>>,
    log_det: Complex<T>,
}

impl<T: Float> AccretiveLu<T> {
    pub fn new(mut m: DMatrix<Complex<T>>) -> Result<Self> {
        let n = m.nrows();
        debug_assert_eq!(n, m.ncols());
        let mut log_det = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            let pivot = m[(k, k)];
            if !(pivot.re > T::zero()) || !pivot.im.is_finite() {
                return Err(Error::ConvergenceViolation {
                    pivot: k,
                    real_part: to_f64(pivot.re),
                });
            }
            log_det += cln(pivot);
            for i in k + 1..n {
                let factor = m[(i, k)] / pivot;
                m[(i, k)] = factor;
                for j in k + 1..n {
                    let update = factor * m[(k, j)];
                    m[(i, j)] -= update;
                }
            }
        }
        Ok(Self { lu: m, log_det })
    }

    pub fn log_det(&self) -> Complex<T> {
        self.log_det
    }

    pub fn solve(&self, b: &DVector<Complex<T>>) -> DVector<Complex<T>> {
        let n = self.lu.nrows();
        let mut x = b.clone();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
        let mut out = b.clone();
        for c in 0..b.ncols() {
            let col = self.solve(&b.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }
}


/// Bilinear (non-conjugating) product xᵀy.
pub(crate) fn bilinear<T: Float>(x: &DVector<Complex<T>>, y: &DVector<Complex<T>>) -> Complex<T> {
    x.iter()
        .zip(y.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
}

/// 2-norm condition number from the singular values.
pub(crate) fn condition_number<T: Float>(m: &DMatrix<T>) -> T {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > T::zero() {
        max / min
    } else {
        T::max_value().unwrap_or_else(T::one)
    }
}
