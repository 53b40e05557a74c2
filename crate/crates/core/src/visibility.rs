//! The motional overlap 𝒪(t) = ⟨0_g| e^{iH_g t} e^{−iH_e t} |0_g⟩ and the
//! Ramsey visibility 𝒱(t) = |𝒪(t)|.
//!
//! 𝒪(t) is a Gaussian integral with the complex symmetric kernel
//!
//! ```text
//! Ω = [[1 − Λ⁺, −iΛ⁻], [−iΛ⁻, 1 + Λ⁺]],   Λ±_jk = ½A_jk (e_j e_k ± 1),  e_j = e^{−iω^e_j t}
//! ```
//!
//! and 𝒪 = exp(¼ wᵀΩ⁻¹w) · det(Ω)^{−1/2} · 𝒢₀². Everything is carried in log
//! form, and the determinant is accumulated from pivots of Ω (or of its Schur
//! blocks) that all lie in the right half-plane, which selects the branch
//! continuous from t = 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{bilinear, AccretiveLu};
use crate::num::{cexp, lit, modulus, to_f64, Float};
use crate::pipeline::{ChainContext, Scenario};
use crate::quench::QuenchMap;

/// Largest 𝒱 accepted as a probability amplitude bound.
pub const MODULUS_SLACK: f64 = 1e-9;

/// 𝒱 threshold used to detect collapse and revival.
pub const REVIVAL_THRESHOLD: f64 = 0.05;

/// 𝒪(t) and 𝒱(t) on a time grid (t in 1/ν_x).
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilitySeries<T: Float> {
    pub times: Vec<T>,
    pub overlap: Vec<Complex<T>>,
    pub visibility: Vec<T>,
}

/// The matrices and vectors of the Gaussian integral at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaAssembly<T: Float> {
    pub lambda_plus: DMatrix<Complex<T>>,
    pub lambda_minus: DMatrix<Complex<T>>,
    pub s_plus: DVector<Complex<T>>,
    pub s_minus: DVector<Complex<T>>,
    pub omega: DMatrix<Complex<T>>,
    pub w: DVector<Complex<T>>,
}

/// How the Gaussian integral is reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationPath {
    /// Two N-sized solves through the Schur complement of 1 + Λ⁺.
    #[default]
    Schur,
    /// One factorization of the full 2n×2n Ω.
    Direct,
}

fn phases<T: Float>(map: &QuenchMap<T>, t: T) -> DVector<Complex<T>> {
    map.omega_e.map(|w| {
        let phi = w * t;
        Complex::new(phi.cos(), -phi.sin())
    })
}

/// Builds Λ±, S±, Ω and w at time t.
pub fn assemble_omega<T: Float>(map: &QuenchMap<T>, t: T) -> OmegaAssembly<T> {
    let n = map.dim();
    let half: T = lit(0.5);
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let e = phases(map, t);
    let lambda = |sign: T| {
        DMatrix::from_fn(n, n, |j, k| (e[j] * e[k] + one * sign) * (map.a[(j, k)] * half))
    };
    let lambda_plus = lambda(T::one());
    let lambda_minus = lambda(-T::one());
    let s = &map.a * &map.beta_e - &map.beta_e;
    let s_plus = DVector::from_fn(n, |j, _| (one + e[j]) * s[j]);
    let s_minus = DVector::from_fn(n, |j, _| (one - e[j]) * s[j]);

    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { one } else { Complex::new(T::zero(), T::zero()) };
            omega[(j, k)] = delta - lambda_plus[(j, k)];
            omega[(n + j, n + k)] = delta + lambda_plus[(j, k)];
            omega[(j, n + k)] = -i * lambda_minus[(j, k)];
            omega[(n + j, k)] = -i * lambda_minus[(j, k)];
        }
    }
    let w = DVector::from_fn(2 * n, |j, _| if j < n { s_plus[j] } else { -i * s_minus[j - n] });
    OmegaAssembly {
        lambda_plus,
        lambda_minus,
        s_plus,
        s_minus,
        omega,
        w,
    }
}

/// ln 𝒪(t) via the production (Schur) path.
pub fn log_overlap_at<T: Float>(map: &QuenchMap<T>, t: T) -> Result<Complex<T>> {
    log_overlap_with(map, t, EvaluationPath::Schur)
}

/// ln 𝒪(t) via the chosen path.
pub fn log_overlap_with<T: Float>(map: &QuenchMap<T>, t: T, path: EvaluationPath) -> Result<Complex<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be finite and non-negative, got {}", to_f64(t))));
    }
    let zero = Complex::new(T::zero(), T::zero());
    if t == T::zero() {
        return Ok(zero);
    }
    let n = map.dim();
    let asm = assemble_omega(map, t);
    let quarter: T = lit(0.25);
    let half: T = lit(0.5);
    let (quadratic, log_det) = match path {
        EvaluationPath::Direct => {
            let lu = AccretiveLu::new(asm.omega)?;
            let x = lu.solve(&asm.w);
            (bilinear(&asm.w, &x), lu.log_det())
        }
        EvaluationPath::Schur => {
            let i = Complex::new(T::zero(), T::one());
            let w1 = asm.w.rows(0, n).into_owned();
            let w2 = asm.w.rows(n, n).into_owned();
            let xi = asm.omega.view((n, n), (n, n)).into_owned();
            let upsilon = asm.omega.view((0, 0), (n, n)).into_owned();
            let xi_lu = AccretiveLu::new(xi)?;
            let xi_inv_lm = xi_lu.solve_matrix(&asm.lambda_minus);
            let theta = upsilon + &asm.lambda_minus * xi_inv_lm;
            let theta_lu = AccretiveLu::new(theta)?;
            let rhs = w1.clone() + (&asm.lambda_minus * xi_lu.solve(&w2)) * i;
            let x1 = theta_lu.solve(&rhs);
            let x2 = xi_lu.solve(&(w2.clone() + (&asm.lambda_minus * &x1) * i));
            (
                bilinear(&w1, &x1) + bilinear(&w2, &x2),
                xi_lu.log_det() + theta_lu.log_det(),
            )
        }
    };
    let two: T = lit(2.0);
    let out = quadratic * quarter - log_det * half + Complex::new(two * map.ln_g0, T::zero());
    if !out.re.is_finite() || !out.im.is_finite() {
        return Err(Error::Numeric(format!("non-finite overlap at t = {}", to_f64(t))));
    }
    Ok(out)
}

/// 𝒪(t).
pub fn overlap_at<T: Float>(map: &QuenchMap<T>, t: T) -> Result<Complex<T>> {
    Ok(cexp(log_overlap_at(map, t)?))
}

/// 𝒪(t) through an explicit evaluation path.
pub fn overlap_with<T: Float>(map: &QuenchMap<T>, t: T, path: EvaluationPath) -> Result<Complex<T>> {
    Ok(cexp(log_overlap_with(map, t, path)?))
}

/// Evaluates 𝒪 on a sorted, non-negative grid, in parallel.
pub fn visibility_series<T: Float>(map: &QuenchMap<T>, times: &[T]) -> Result<VisibilitySeries<T>> {
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("time grid must be sorted".into()));
    }
    let overlap = times
        .par_iter()
        .map(|&t| overlap_at(map, t))
        .collect::<Result<Vec<_>>>()?;
    let visibility = overlap.iter().map(|&o| modulus(o)).collect();
    Ok(VisibilitySeries {
        times: times.to_vec(),
        overlap,
        visibility,
    })
}

/// `samples` equally spaced times on [0, t_max].
pub fn uniform_grid<T: Float>(t_max: T, samples: usize) -> Vec<T> {
    if samples < 2 {
        return vec![T::zero(); samples];
    }
    let step = t_max / T::from_usize(samples - 1).unwrap_or_else(T::one);
    (0..samples)
        .map(|k| {
            if k == samples - 1 {
                t_max
            } else {
                step * T::from_usize(k).unwrap_or_else(T::zero)
            }
        })
        .collect()
}

/// 𝒫_g = ½(1 + Re[e^{iφ}𝒪]).
pub fn ramsey_probability<T: Float>(overlap: Complex<T>, phi: T) -> Result<T> {
    if !(modulus(overlap) <= T::one() + lit(MODULUS_SLACK)) {
        return Err(Error::InvalidInput(format!(
            "overlap modulus {} exceeds 1",
            to_f64(modulus(overlap))
        )));
    }
    let rotated = Complex::new(phi.cos(), phi.sin()) * overlap;
    let p: T = (T::one() + rotated.re) * lit(0.5);
    Ok(p.max(T::zero()).min(T::one()))
}

/// η in 𝒱(t) ≈ 1 + ηt²/2, by Richardson-extrapolated second differences.
pub fn curvature<T: Float>(map: &QuenchMap<T>) -> Result<T> {
    let w_max = map.omega_e.max();
    let h: T = lit::<T>(1e-3) / w_max;
    let two: T = lit(2.0);
    let second = |step: T| -> Result<T> {
        let re = log_overlap_at(map, step)?.re;
        Ok(two * re.exp_m1() / (step * step))
    };
    let coarse = second(h)?;
    let fine = second(h / two)?;
    let eta = (lit::<T>(4.0) * fine - coarse) / lit(3.0);
    if eta > lit(1e-9) {
        return Err(Error::NumericConsistency(format!(
            "positive short-time curvature {}",
            to_f64(eta)
        )));
    }
    Ok(eta.min(T::zero()))
}

/// η over a (Δ, g) grid; entry [(i, j)] belongs to (delta[i], g[j]).
///
/// Points where a structure is unstable or any step fails keep their error.
pub fn curvature_surface<T: Float>(
    ctx: &ChainContext<T>,
    delta_grid: &[T],
    g_grid: &[T],
) -> Vec<Vec<Result<T>>> {
    delta_grid
        .par_iter()
        .map(|&delta| {
            g_grid
                .par_iter()
                .map(|&g| Scenario::build(ctx, g, delta).and_then(|s| curvature(&s.map)))
                .collect()
        })
        .collect()
}

/// Indices of samples strictly above both neighbours.
pub fn local_maxima<T: Float>(values: &[T]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] > values[k + 1])
        .collect()
}

/// First local maximum with 𝒱 > `threshold` after 𝒱 first drops below it.
pub fn first_revival<T: Float>(series: &VisibilitySeries<T>, threshold: T) -> Option<usize> {
    let v = &series.visibility;
    let dropped = v.iter().position(|&x| x < threshold)?;
    local_maxima(v)
        .into_iter()
        .find(|&k| k > dropped && v[k] > threshold)
}

/// Times of all local maxima of 𝒱 above `threshold`.
pub fn revival_times<T: Float>(series: &VisibilitySeries<T>, threshold: T) -> Vec<T> {
    local_maxima(&series.visibility)
        .into_iter()
        .filter(|&k| series.visibility[k] > threshold)
        .map(|k| series.times[k])
        .collect()
}
