//! Brute-force reference for 𝒪(t) on one or two modes.
//!
//! The g-vacuum is found as the ground state of H_g written in the truncated
//! Fock basis of the e-modes (Q_g = T·Q_e + D, P_g = T·P_e) and then evolved
//! with the diagonal e-Hamiltonian. Nothing here shares code with the
//! closed-form path beyond the shape of its inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

/// Smallest and largest per-mode truncation accepted.
pub const MIN_CUTOFF: usize = 20;
pub const MAX_CUTOFF: usize = 120;
/// Largest L1 change of the populations accepted when the cutoff is raised.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;
/// Basis size up to which the ground state is found by dense diagonalization.
pub const DENSE_LIMIT: usize = 400;

const LANCZOS_RESIDUAL: f64 = 1e-11;
const LANCZOS_MAX_STEPS: usize = 800;

/// A one- or two-mode quench described directly by mode data.
#[derive(Debug, Clone, PartialEq)]
pub struct FockInstance {
    pub omega_g: DVector<f64>,
    pub omega_e: DVector<f64>,
    /// Q_g = T·Q_e + D.
    pub mode_overlap: DMatrix<f64>,
    pub displacement: DVector<f64>,
    pub cutoff: usize,
    pub hbar_tilde: f64,
}

impl FockInstance {
    pub fn new(
        omega_g: DVector<f64>,
        omega_e: DVector<f64>,
        mode_overlap: DMatrix<f64>,
        displacement: DVector<f64>,
        cutoff: usize,
        hbar_tilde: f64,
    ) -> Result<Self> {
        let n = omega_g.len();
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidInput("the oracle handles one or two modes".into()));
        }
        if omega_e.len() != n || displacement.len() != n || mode_overlap.shape() != (n, n) {
            return Err(Error::InvalidInput("mode data dimensions disagree".into()));
        }
        if omega_g.iter().chain(omega_e.iter()).any(|w| !(*w > 0.0)) || !(hbar_tilde > 0.0) {
            return Err(Error::InvalidInput("frequencies and hbar_tilde must be positive".into()));
        }
        if (mode_overlap.transpose() * &mode_overlap - DMatrix::identity(n, n)).amax() > 1e-12 {
            return Err(Error::InvalidInput("mode overlap is not orthogonal".into()));
        }
        if !(MIN_CUTOFF..=MAX_CUTOFF).contains(&cutoff) {
            return Err(Error::InvalidInput(format!(
                "cutoff {cutoff} outside [{MIN_CUTOFF}, {MAX_CUTOFF}]"
            )));
        }
        Ok(Self {
            omega_g,
            omega_e,
            mode_overlap,
            displacement,
            cutoff,
            hbar_tilde,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.omega_g.len()
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_modes() as u32)
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self {
            cutoff,
            ..self.clone()
        }
    }
}

/// 2×2 rotation by `theta`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

struct Ladder<'a> {
    inst: &'a FockInstance,
}

impl Ladder<'_> {
    fn occupation(&self, idx: usize, mode: usize) -> usize {
        let c = self.inst.cutoff;
        if mode == 0 {
            idx % c
        } else {
            idx / c
        }
    }

    fn stride(&self, mode: usize) -> usize {
        if mode == 0 {
            1
        } else {
            self.inst.cutoff
        }
    }

    /// Applies x·(a + a†) + y·(a† − a) of one mode and accumulates into `out`.
    fn apply(&self, mode: usize, x: f64, y: f64, v: &[f64], out: &mut [f64]) {
        let c = self.inst.cutoff;
        let s = self.stride(mode);
        for (idx, o) in out.iter_mut().enumerate() {
            let n = self.occupation(idx, mode);
            let mut acc = 0.0;
            // a v: component n receives √(n+1) v[n+1]
            if n + 1 < c {
                acc += (x - y) * ((n + 1) as f64).sqrt() * v[idx + s];
            }
            // a† v: component n receives √n v[n−1]
            if n > 0 {
                acc += (x + y) * (n as f64).sqrt() * v[idx - s];
            }
            *o += acc;
        }
    }

    /// H_g/ħ̃ applied to `v`.
    fn hamiltonian(&self, v: &[f64]) -> Vec<f64> {
        let inst = self.inst;
        let m = inst.n_modes();
        let dim = v.len();
        let scale = inst.hbar_tilde.sqrt();
        let mut out = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];
        let mut tmp2 = vec![0.0; dim];
        for j in 0..m {
            // X_j = Σ_k T_jk (a+a†)/√(2ω_k) + D_j/√ħ̃
            let shift = inst.displacement[j] / scale;
            let position = |src: &[f64], dst: &mut [f64]| {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = shift * s;
                }
                for k in 0..m {
                    let x = inst.mode_overlap[(j, k)] / (2.0 * inst.omega_e[k]).sqrt();
                    self.apply(k, x, 0.0, src, dst);
                }
            };
            position(v, &mut tmp);
            position(&tmp, &mut tmp2);
            let w2 = inst.omega_g[j] * inst.omega_g[j];
            for (o, t) in out.iter_mut().zip(&tmp2) {
                *o += 0.5 * w2 * t;
            }
            // Y_j = Σ_k T_jk √(ω_k/2)(a† − a); contributes −½Y_j².
            let momentum = |src: &[f64], dst: &mut [f64]| {
                dst.iter_mut().for_each(|d| *d = 0.0);
                for k in 0..m {
                    let y = inst.mode_overlap[(j, k)] * (inst.omega_e[k] / 2.0).sqrt();
                    self.apply(k, 0.0, y, src, dst);
                }
            };
            momentum(v, &mut tmp);
            momentum(&tmp, &mut tmp2);
            for (o, t) in out.iter_mut().zip(&tmp2) {
                *o -= 0.5 * t;
            }
        }
        out
    }
}

fn dense_ground_state(ladder: &Ladder<'_>, dim: usize) -> Vec<f64> {
    let mut h = DMatrix::zeros(dim, dim);
    let mut unit = vec![0.0; dim];
    for c in 0..dim {
        unit[c] = 1.0;
        let col = ladder.hamiltonian(&unit);
        unit[c] = 0.0;
        for (r, x) in col.into_iter().enumerate() {
            h[(r, c)] = x;
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let lowest = eig.eigenvalues.imin();
    eig.eigenvectors.column(lowest).iter().copied().collect()
}

fn lanczos_ground_state(ladder: &Ladder<'_>, dim: usize) -> Result<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut q = vec![0.0; dim];
    q[0] = 1.0;
    let mut residual = f64::INFINITY;
    for step in 0..LANCZOS_MAX_STEPS {
        let mut w = ladder.hamiltonian(&q);
        let alpha: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        basis.push(q);
        alphas.push(alpha);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
                w.iter_mut().zip(b).for_each(|(a, c)| *a -= proj * c);
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let k = alphas.len();
        if step % 10 == 9 || beta < 1e-14 {
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let lowest = eig.eigenvalues.imin();
            let y = eig.eigenvectors.column(lowest);
            residual = beta * y[k - 1].abs();
            if residual < LANCZOS_RESIDUAL || beta < 1e-14 {
                let mut v = vec![0.0; dim];
                for (b, &c) in basis.iter().zip(y.iter()) {
                    v.iter_mut().zip(b).for_each(|(a, x)| *a += c * x);
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                return Ok(v);
            }
        }
        betas.push(beta);
        q = w.into_iter().map(|x| x / beta).collect();
    }
    Err(Error::Convergence {
        iterations: LANCZOS_MAX_STEPS,
        gradient_norm: residual,
        last_iterate: Vec::new(),
    })
}

/// The g-vacuum expanded in the e-mode Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub cutoff: usize,
    pub n_modes: usize,
    /// |⟨n_e|0_g⟩|², index n₁ + cutoff·n₂.
    pub populations: Vec<f64>,
    /// Σ_k ω^e_k n_k for each basis state.
    pub energies: Vec<f64>,
}

impl FockState {
    /// Ground state at the instance's own cutoff, without certification.
    pub fn at_cutoff(inst: &FockInstance) -> Result<Self> {
        let ladder = Ladder { inst };
        let dim = inst.dim();
        let amplitudes = if dim <= DENSE_LIMIT {
            dense_ground_state(&ladder, dim)
        } else {
            lanczos_ground_state(&ladder, dim)?
        };
        let populations = amplitudes.iter().map(|a| a * a).collect();
        let energies = (0..dim)
            .map(|idx| {
                (0..inst.n_modes())
                    .map(|k| inst.omega_e[k] * ladder.occupation(idx, k) as f64)
                    .sum()
            })
            .collect();
        Ok(Self {
            cutoff: inst.cutoff,
            n_modes: inst.n_modes(),
            populations,
            energies,
        })
    }

    /// Ground state at `inst.cutoff`, certified against a doubled cutoff
    /// (capped at [`MAX_CUTOFF`]).
    pub fn certified(inst: &FockInstance) -> Result<Self> {
        let coarse = Self::at_cutoff(inst)?;
        let finer = (2 * inst.cutoff).min(MAX_CUTOFF);
        if finer == inst.cutoff {
            return Err(Error::InvalidInput("no room left to certify the cutoff".into()));
        }
        let fine = Self::at_cutoff(&inst.with_cutoff(finer))?;
        let change = coarse.distance(&fine);
        if change < CERTIFY_TOLERANCE {
            Ok(fine)
        } else {
            Err(Error::Cutoff {
                cutoff: inst.cutoff,
                change,
                suggested: finer,
            })
        }
    }

    /// Doubles the cutoff from `inst.cutoff` until certification passes.
    pub fn converged(inst: &FockInstance) -> Result<Self> {
        let mut cutoff = inst.cutoff;
        let mut current = Self::at_cutoff(inst)?;
        loop {
            let next = (2 * cutoff).min(MAX_CUTOFF);
            if next == cutoff {
                return Err(Error::Cutoff {
                    cutoff,
                    change: f64::NAN,
                    suggested: 2 * cutoff,
                });
            }
            let refined = Self::at_cutoff(&inst.with_cutoff(next))?;
            let change = current.distance(&refined);
            if change < CERTIFY_TOLERANCE {
                return Ok(refined);
            }
            if next == MAX_CUTOFF {
                return Err(Error::Cutoff {
                    cutoff: next,
                    change,
                    suggested: 2 * next,
                });
            }
            cutoff = next;
            current = refined;
        }
    }

    fn occupations(&self, idx: usize) -> (usize, usize) {
        if self.n_modes == 1 {
            (idx, 0)
        } else {
            (idx % self.cutoff, idx / self.cutoff)
        }
    }

    /// L1 distance of the populations, states matched by occupation numbers.
    pub fn distance(&self, other: &Self) -> f64 {
        let (small, large) = if self.cutoff <= other.cutoff {
            (self, other)
        } else {
            (other, self)
        };
        let mut total = 0.0;
        for (idx, &p) in large.populations.iter().enumerate() {
            let (n1, n2) = large.occupations(idx);
            let q = if n1 < small.cutoff && n2 < small.cutoff.max(1) && (small.n_modes == 2 || n2 == 0) {
                small.populations[n1 + small.cutoff * n2]
            } else {
                0.0
            };
            total += (p - q).abs();
        }
        total
    }

    /// 𝒪(t) = Σ_n p_n e^{−iE_n t}.
    pub fn overlap(&self, t: f64) -> Complex<f64> {
        self.populations
            .iter()
            .zip(&self.energies)
            .map(|(&p, &e)| Complex::from_polar(p, -e * t))
            .sum()
    }

    /// Var(H_e)/ħ̃², the negated short-time curvature of |𝒪|.
    pub fn energy_variance(&self) -> f64 {
        let mean: f64 = self.populations.iter().zip(&self.energies).map(|(p, e)| p * e).sum();
        self.populations
            .iter()
            .zip(&self.energies)
            .map(|(p, e)| p * (e - mean) * (e - mean))
            .sum()
    }

    pub fn total_population(&self) -> f64 {
        self.populations.iter().sum()
    }
}

/// Certified reference overlap at one time.
pub fn fock_overlap(inst: &FockInstance, t: f64) -> Result<Complex<f64>> {
    Ok(FockState::certified(inst)?.overlap(t))
}
