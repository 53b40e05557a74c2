//! Normal modes of a crystal about one of its equilibria.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::crystal::{potential_hessian, CrystalParams, EquilibriumConfiguration, State};
use crate::error::{Error, Result};
use crate::num::{lit, to_f64, Float};

/// Smallest ω² accepted for a mode of a stable structure.
pub const MIN_SQUARED_FREQUENCY: f64 = 1e-9;

/// Orthogonal mode matrix (columns are modes) and ascending frequencies in
/// units of ν_x.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeBasis<T: Float> {
    pub state: State,
    pub mode_matrix: DMatrix<T>,
    pub frequencies: DVector<T>,
    pub equilibrium: EquilibriumConfiguration<T>,
}

impl<T: Float> NormalModeBasis<T> {
    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    /// Returns the basis with the sign of mode column `l` flipped.
    pub fn with_flipped_mode(&self, l: usize) -> Self {
        let mut out = self.clone();
        out.mode_matrix.column_mut(l).neg_mut();
        out
    }
}

/// Mass-scaled Hessian V̄ of the state-dependent potential at `config`.
pub fn hessian<T: Float>(
    config: &EquilibriumConfiguration<T>,
    params: &CrystalParams<T>,
    state: State,
) -> Result<DMatrix<T>> {
    potential_hessian(&config.positions, params, state)
}

fn fix_sign<T: Float>(mut column: DVector<T>) -> DVector<T> {
    let tie: T = lit(1e-12);
    let largest = column.amax();
    let pivot = column
        .iter()
        .position(|v| v.abs() >= largest * (T::one() - tie))
        .unwrap_or(0);
    if column[pivot] < T::zero() {
        column.neg_mut();
    }
    column
}

fn lexicographic<T: Float>(a: &DVector<T>, b: &DVector<T>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Diagonalizes `hess` into normal modes about `equilibrium`.
///
/// Columns are sign-fixed so their largest-magnitude entry is positive (ties
/// go to the lowest index), sorted by frequency, and degenerate groups are
/// ordered lexicographically by their entries.
pub fn normal_modes<T: Float>(
    hess: &DMatrix<T>,
    equilibrium: EquilibriumConfiguration<T>,
) -> Result<NormalModeBasis<T>> {
    let n = hess.nrows();
    if hess.ncols() != n || n != equilibrium.positions.len() {
        return Err(Error::InvalidInput("Hessian shape does not match configuration".into()));
    }
    let scale = hess.amax().max(T::one());
    if (hess - hess.transpose()).amax() > scale * lit(1e-12) {
        return Err(Error::InvalidInput("Hessian is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(hess.clone());
    let min = eig.eigenvalues.min();
    if min < lit(MIN_SQUARED_FREQUENCY) {
        return Err(Error::UnstableStructure {
            state: equilibrium.state,
            min_eigenvalue: to_f64(min),
        });
    }
    let degenerate: T = lit(1e-10);
    let mut modes: Vec<(T, DVector<T>)> = (0..n)
        .map(|l| (eig.eigenvalues[l], fix_sign(eig.eigenvectors.column(l).into_owned())))
        .collect();
    modes.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= degenerate * a.0.abs().max(T::one()) {
            lexicographic(&a.1, &b.1)
        } else {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal)
        }
    });
    let mode_matrix = DMatrix::from_fn(n, n, |k, l| modes[l].1[k]);
    let frequencies = DVector::from_iterator(n, modes.iter().map(|m| m.0.sqrt()));
    Ok(NormalModeBasis {
        state: equilibrium.state,
        mode_matrix,
        frequencies,
        equilibrium,
    })
}

/// Hessian plus diagonalization in one call.
pub fn modes_of<T: Float>(
    config: &EquilibriumConfiguration<T>,
    params: &CrystalParams<T>,
) -> Result<NormalModeBasis<T>> {
    let h = hessian(config, params, config.state)?;
    normal_modes(&h, config.clone())
}
