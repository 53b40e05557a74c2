//! Bogoliubov map between the phonon bases of the two internal states.
//!
//! With the mode overlap T = M_gᵀM_e and mode displacements D = M_gᵀ(r_e − r_g)
//! the ground-state ladder operators read
//! `b_g = u·b_e − v·b_e† + β_g`, and the g-vacuum is the (unnormalized)
//! two-mode-squeezed, displaced e-vacuum `Z·D(β_e)·exp(½ b_e†·A·b_e†)|0_e⟩`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::crystal::{State, Structure};
use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::modes::NormalModeBasis;
use crate::num::{lit, to_f64, Float};

/// Largest condition number of `u` accepted before A = u⁻¹v is distrusted.
pub const MAX_CONDITION: f64 = 1e12;

/// Everything needed to evolve the g-vacuum under the e-Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchMap<T: Float> {
    /// T_jl = Σ_k M^g_kj M^e_kl.
    pub mode_overlap: DMatrix<T>,
    /// D_j = Σ_k M^g_kj (r^e_k − r^g_k).
    pub displacement: DVector<T>,
    pub beta_g: DVector<T>,
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    /// u⁻¹v, symmetrized; see `raw_a_asymmetry` for the solve's own residual.
    pub a: DMatrix<T>,
    /// max |A − Aᵀ| of the linear solve before symmetrization.
    pub raw_a_asymmetry: T,
    /// Orthogonal Λ diagonalizing A, and its eigenvalues.
    pub takagi_vectors: DMatrix<T>,
    pub takagi_values: DVector<T>,
    /// γ = −(u + v)ᵀβ_g.
    pub beta_e: DVector<T>,
    /// det(1 − A²)^{1/4}.
    pub z: T,
    pub xi: DMatrix<T>,
    /// ln 𝒢₀; kept in log form since 𝒢₀ underflows for large displacements.
    pub ln_g0: T,
    pub omega_g: DVector<T>,
    pub omega_e: DVector<T>,
    pub hbar_tilde: T,
    pub condition_u: T,
}

/// Residuals of the identities a valid map satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapResiduals<T> {
    /// max |TᵀT − 1|.
    pub orthogonality: T,
    /// max |uuᵀ − vvᵀ − 1|.
    pub normalization: T,
    /// max |uvᵀ − vuᵀ|.
    pub symmetry: T,
    /// max |A − Aᵀ| before symmetrization.
    pub a_asymmetry: T,
    /// |Z − det(1 − A²)^{1/4}| / Z, determinant taken by LU.
    pub z_determinant: T,
}

impl<T: Float> MapResiduals<T> {
    pub fn max(&self) -> T {
        self.orthogonality
            .max(self.normalization)
            .max(self.symmetry)
            .max(self.a_asymmetry)
            .max(self.z_determinant)
    }
}

impl<T: Float> QuenchMap<T> {
    pub fn dim(&self) -> usize {
        self.omega_e.len()
    }

    /// 𝒢₀ = ⟨0_e|0_g⟩.
    pub fn g0(&self) -> T {
        self.ln_g0.exp()
    }

    /// Builds the map straight from mode data, bypassing any crystal.
    ///
    /// `mode_overlap` and `displacement` follow Q_g = T·Q_e + D.
    pub fn from_mode_data(
        omega_g: DVector<T>,
        omega_e: DVector<T>,
        mode_overlap: DMatrix<T>,
        displacement: DVector<T>,
        hbar_tilde: T,
    ) -> Result<Self> {
        let n = omega_g.len();
        if omega_e.len() != n
            || displacement.len() != n
            || mode_overlap.nrows() != n
            || mode_overlap.ncols() != n
        {
            return Err(Error::InvalidInput("mode data dimensions disagree".into()));
        }
        if omega_g.iter().chain(omega_e.iter()).any(|w| !(*w > T::zero())) {
            return Err(Error::InvalidInput("mode frequencies must be positive".into()));
        }
        if !(hbar_tilde > T::zero()) {
            return Err(Error::InvalidInput("hbar_tilde must be positive".into()));
        }
        let half: T = lit(0.5);
        let two: T = lit(2.0);

        let beta_g = DVector::from_fn(n, |j, _| (omega_g[j] / (two * hbar_tilde)).sqrt() * displacement[j]);
        let ratio = |j: usize, k: usize| (omega_e[k] / omega_g[j]).sqrt();
        let u = DMatrix::from_fn(n, n, |j, k| {
            half * mode_overlap[(j, k)] * (ratio(j, k) + T::one() / ratio(j, k))
        });
        let v = DMatrix::from_fn(n, n, |j, k| {
            half * mode_overlap[(j, k)] * (ratio(j, k) - T::one() / ratio(j, k))
        });

        let condition_u = condition_number(&u);
        if !(condition_u <= lit(MAX_CONDITION)) {
            return Err(Error::IllConditioned {
                condition: to_f64(condition_u),
            });
        }
        let raw_a = u
            .clone()
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Numeric("u is singular".into()))?;
        let raw_a_asymmetry = (&raw_a - raw_a.transpose()).amax();
        let a = (&raw_a + raw_a.transpose()) * half;

        let beta_e = -((&u + &v).transpose() * &beta_g);
        let (takagi_vectors, takagi_values) = takagi_symmetric(&a)?;
        let xi = squeezing_parameters(&takagi_vectors, &takagi_values)?;
        let quarter: T = lit(0.25);
        let ln_z = takagi_values
            .iter()
            .fold(T::zero(), |acc, &x| acc + quarter * (T::one() - x * x).ln());

        let mut map = Self {
            mode_overlap,
            displacement,
            beta_g,
            u,
            v,
            a,
            raw_a_asymmetry,
            takagi_vectors,
            takagi_values,
            beta_e,
            z: ln_z.exp(),
            xi,
            ln_g0: T::zero(),
            omega_g,
            omega_e,
            hbar_tilde,
            condition_u,
        };
        map.ln_g0 = ln_ground_state_overlap(&map);
        Ok(map)
    }

    pub fn residuals(&self) -> MapResiduals<T> {
        let n = self.dim();
        let id = DMatrix::<T>::identity(n, n);
        let t = &self.mode_overlap;
        let orthogonality = (t.transpose() * t - &id).amax();
        let normalization = (&self.u * self.u.transpose() - &self.v * self.v.transpose() - &id).amax();
        let symmetry = (&self.u * self.v.transpose() - &self.v * self.u.transpose()).amax();
        let one_minus = &id - &self.a * &self.a;
        let det = one_minus.lu().determinant();
        let z_det = det.powf(lit(0.25));
        let z_determinant = (self.z - z_det).abs() / self.z;
        MapResiduals {
            orthogonality,
            normalization,
            symmetry,
            a_asymmetry: self.raw_a_asymmetry,
            z_determinant,
        }
    }
}

/// Builds the map between the g- and e-state phonon vacua.
pub fn build_quench_map<T: Float>(
    basis_g: &NormalModeBasis<T>,
    basis_e: &NormalModeBasis<T>,
    hbar_tilde: T,
) -> Result<QuenchMap<T>> {
    if basis_g.dim() != basis_e.dim() {
        return Err(Error::InvalidInput("bases have different dimensions".into()));
    }
    if basis_g.state != State::Ground || basis_e.state != State::Excited {
        return Err(Error::InvalidInput("expected a ground-state and an excited-state basis".into()));
    }
    let (cg, ce) = (&basis_g.equilibrium, &basis_e.equilibrium);
    if cg.structure == Structure::Zigzag && ce.structure == Structure::Zigzag {
        let c = cg.ion_count() / 2;
        if cg.y(c) * ce.y(c) < T::zero() {
            return Err(Error::InvalidInput(
                "equilibria lie on opposite zigzag branches".into(),
            ));
        }
    }
    let d = &ce.positions - &cg.positions;
    let mode_overlap = basis_g.mode_matrix.transpose() * &basis_e.mode_matrix;
    let displacement = basis_g.mode_matrix.transpose() * d;
    QuenchMap::from_mode_data(
        basis_g.frequencies.clone(),
        basis_e.frequencies.clone(),
        mode_overlap,
        displacement,
        hbar_tilde,
    )
}

/// Orthogonal factorization A = Λ·diag(a)·Λᵀ of a real symmetric A.
///
/// Eigenvalues come out ascending, each column sign-fixed so its
/// largest-magnitude entry is positive. Fails if any |a_l| ≥ 1.
pub fn takagi_symmetric<T: Float>(a: &DMatrix<T>) -> Result<(DMatrix<T>, DVector<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput("A must be square".into()));
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    if let Some(bad) = values.iter().find(|x| !(x.abs() < T::one())) {
        return Err(Error::NonPhysicalMap {
            eigenvalue: to_f64(*bad),
        });
    }
    let mut vectors = DMatrix::from_fn(n, n, |k, l| eig.eigenvectors[(k, order[l])]);
    for l in 0..n {
        let col = vectors.column(l);
        let big = col.amax();
        let first = col
            .iter()
            .position(|x| x.abs() >= big * (T::one() - lit(1e-12)))
            .unwrap_or(0);
        if col[first] < T::zero() {
            vectors.column_mut(l).neg_mut();
        }
    }
    Ok((vectors, values))
}

/// ξ = Λ·diag(atanh a)·Λᵀ.
pub fn squeezing_parameters<T: Float>(lambda: &DMatrix<T>, a: &DVector<T>) -> Result<DMatrix<T>> {
    if let Some(bad) = a.iter().find(|x| !(x.abs() < T::one())) {
        return Err(Error::Domain {
            value: to_f64(bad.abs()),
        });
    }
    let chi = DMatrix::from_diagonal(&a.map(|x| x.atanh()));
    Ok(lambda * chi * lambda.transpose())
}

fn ln_ground_state_overlap<T: Float>(map: &QuenchMap<T>) -> T {
    let half: T = lit(0.5);
    let beta = &map.beta_e;
    let pairing = beta.dot(&(&map.a * beta));
    map.z.ln() + half * pairing - half * beta.dot(beta)
}

/// 𝒢₀ = Z·exp(½ β_eᵀAβ_e)·exp(−½|β_e|²).
pub fn ground_state_overlap<T: Float>(map: &QuenchMap<T>) -> T {
    ln_ground_state_overlap(map).exp()
}
