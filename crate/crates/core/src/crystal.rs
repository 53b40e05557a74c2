//! State-dependent potential energy surface of a planar ion chain, its
//! classical equilibria, and the linear/zigzag critical lines.
//!
//! Coordinates are stored as a length-2N vector `(x_1..x_N, y_1..y_N)` in
//! units of ℓ, with ions ordered along the trap axis.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::num::{lit, to_f64, Float};

/// Internal state of the central ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Ground,
    Excited,
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::Ground => "g",
            State::Excited => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Linear,
    Zigzag,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Linear => "linear",
            Structure::Zigzag => "zigzag",
        })
    }
}

/// Transverse displacement below which a configuration counts as linear (units of ℓ).
pub const LINEAR_DEADBAND: f64 = 1e-6;
/// Gradient max-norm accepted as an equilibrium.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
/// Most negative Hessian eigenvalue still accepted as stable.
pub const STABILITY_TOLERANCE: f64 = -1e-9;

const COINCIDENCE_RADIUS: f64 = 1e-12;
const NEWTON_ITERATIONS: usize = 500;

/// The three numbers that fix the dimensionless potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams<T> {
    pub ion_count: usize,
    /// ν_y²/ν_x².
    pub alpha: T,
    /// ν_dip²/ν_x², acting on the central ion in state `e` only.
    pub alpha_dip: T,
}

impl<T: Float> CrystalParams<T> {
    pub fn new(ion_count: usize, alpha: T, alpha_dip: T) -> Self {
        Self {
            ion_count,
            alpha,
            alpha_dip,
        }
    }

    /// Index of the ion carrying the spin-dependent potential.
    pub fn central_ion(&self) -> usize {
        self.ion_count / 2
    }

    fn transverse_stiffness(&self, ion: usize, state: State) -> T {
        if state == State::Excited && ion == self.central_ion() {
            self.alpha + self.alpha_dip
        } else {
            self.alpha
        }
    }

    fn check(&self, positions: &DVector<T>) -> Result<()> {
        if self.ion_count < 2 {
            return Err(Error::InvalidInput("need at least two ions".into()));
        }
        if positions.len() != 2 * self.ion_count {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                2 * self.ion_count,
                positions.len()
            )));
        }
        Ok(())
    }
}

/// A classical equilibrium of the chain for one internal state.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumConfiguration<T: Float> {
    pub state: State,
    pub positions: DVector<T>,
    pub energy: T,
    pub structure: Structure,
}

impl<T: Float> EquilibriumConfiguration<T> {
    pub fn ion_count(&self) -> usize {
        self.positions.len() / 2
    }

    pub fn x(&self, ion: usize) -> T {
        self.positions[ion]
    }

    pub fn y(&self, ion: usize) -> T {
        self.positions[self.ion_count() + ion]
    }

    /// The degenerate partner obtained by y → −y.
    pub fn reflected(&self) -> Self {
        let n = self.ion_count();
        let mut positions = self.positions.clone();
        for i in 0..n {
            positions[n + i] = -positions[n + i];
        }
        Self {
            positions,
            ..self.clone()
        }
    }

    /// Largest transverse displacement, the zigzag order parameter.
    pub fn max_transverse(&self) -> T {
        let n = self.ion_count();
        (0..n).fold(T::zero(), |m, i| m.max(self.y(i).abs()))
    }
}

/// Structure labels of both internal states at one point of the (g, Δ) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<T> {
    pub g: T,
    pub delta: T,
    pub structure_g: Structure,
    pub structure_e: Structure,
}

fn pair_geometry<T: Float>(
    positions: &DVector<T>,
    n: usize,
    i: usize,
    l: usize,
) -> Result<(T, T, T)> {
    let dx = positions[i] - positions[l];
    let dy = positions[n + i] - positions[n + l];
    let r = (dx * dx + dy * dy).sqrt();
    if !(r > lit(COINCIDENCE_RADIUS)) {
        return Err(Error::SingularConfiguration {
            first: i.min(l),
            second: i.max(l),
        });
    }
    Ok((dx, dy, r))
}

/// ½Σ(x² + αy²) + Σ_{i<l} 1/r_il (+ ½α_dip y_c² in state `e`).
pub fn potential_energy<T: Float>(
    positions: &DVector<T>,
    params: &CrystalParams<T>,
    state: State,
) -> Result<T> {
    params.check(positions)?;
    let n = params.ion_count;
    let half: T = lit(0.5);
    let mut energy = T::zero();
    for i in 0..n {
        let (x, y) = (positions[i], positions[n + i]);
        energy += half * (x * x + params.transverse_stiffness(i, state) * y * y);
    }
    for i in 0..n {
        for l in i + 1..n {
            let (_, _, r) = pair_geometry(positions, n, i, l)?;
            energy += T::one() / r;
        }
    }
    Ok(energy)
}

/// Analytic gradient of [`potential_energy`].
pub fn potential_gradient<T: Float>(
    positions: &DVector<T>,
    params: &CrystalParams<T>,
    state: State,
) -> Result<DVector<T>> {
    params.check(positions)?;
    let n = params.ion_count;
    let mut grad = DVector::zeros(2 * n);
    for i in 0..n {
        grad[i] = positions[i];
        grad[n + i] = params.transverse_stiffness(i, state) * positions[n + i];
    }
    for i in 0..n {
        for l in i + 1..n {
            let (dx, dy, r) = pair_geometry(positions, n, i, l)?;
            let r3 = r * r * r;
            let (fx, fy) = (dx / r3, dy / r3);
            grad[i] -= fx;
            grad[l] += fx;
            grad[n + i] -= fy;
            grad[n + l] += fy;
        }
    }
    Ok(grad)
}

/// Analytic Hessian of [`potential_energy`] (per unit mass, so the normal-mode
/// frequencies come out in units of ν_x).
pub fn potential_hessian<T: Float>(
    positions: &DVector<T>,
    params: &CrystalParams<T>,
    state: State,
) -> Result<DMatrix<T>> {
    params.check(positions)?;
    let n = params.ion_count;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(i, i)] = T::one();
        h[(n + i, n + i)] = params.transverse_stiffness(i, state);
    }
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    for i in 0..n {
        for l in i + 1..n {
            let (dx, dy, r) = pair_geometry(positions, n, i, l)?;
            let r5 = r.powi(5);
            let hxx = (two * dx * dx - dy * dy) / r5;
            let hyy = (two * dy * dy - dx * dx) / r5;
            let hxy = three * dx * dy / r5;
            let block = [(0, 0, hxx), (0, 1, hxy), (1, 0, hxy), (1, 1, hyy)];
            for &(a, b, value) in &block {
                let (ia, ib) = (a * n + i, b * n + i);
                let (la, lb) = (a * n + l, b * n + l);
                h[(ia, ib)] += value;
                h[(la, lb)] += value;
                h[(ia, lb)] -= value;
                h[(la, ib)] -= value;
            }
        }
    }
    Ok(h)
}

fn max_norm<T: Float>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn smallest_eigenvalue<T: Float>(m: DMatrix<T>) -> T {
    SymmetricEigen::new(m).eigenvalues.min()
}

struct Minimum<T: Float> {
    positions: DVector<T>,
    energy: T,
    min_curvature: T,
}

/// Damped Newton iteration with backtracking line search.
///
/// Where the Hessian is indefinite the step uses |λ| in place of each
/// eigenvalue, which keeps it a descent direction while still escaping
/// shallow saddles quickly.
fn minimize<T: Float>(
    start: DVector<T>,
    params: &CrystalParams<T>,
    state: State,
) -> Result<Minimum<T>> {
    let target: T = lit(1e-13);
    let accept: T = lit(GRADIENT_TOLERANCE);
    let floor: T = lit(1e-10);
    let armijo: T = lit(1e-4);
    let half: T = lit(0.5);

    let mut x = start;
    let mut energy = potential_energy(&x, params, state)?;
    let mut grad = potential_gradient(&x, params, state)?;
    let mut iterations = 0;
    loop {
        let gnorm = max_norm(&grad);
        if gnorm < target {
            break;
        }
        if iterations == NEWTON_ITERATIONS {
            if gnorm < accept {
                break;
            }
            return Err(Error::Convergence {
                iterations,
                gradient_norm: to_f64(gnorm),
                last_iterate: x.iter().map(|&v| to_f64(v)).collect(),
            });
        }
        iterations += 1;

        let hess = potential_hessian(&x, params, state)?;
        let eig = SymmetricEigen::new(hess);
        let projected = eig.eigenvectors.transpose() * &grad;
        let scaled = DVector::from_iterator(
            projected.len(),
            projected
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(&p, &lambda)| p / lambda.abs().max(floor)),
        );
        let direction = -(&eig.eigenvectors * scaled);
        let slope = grad.dot(&direction);

        let mut step = T::one();
        let mut moved = false;
        for _ in 0..60 {
            let trial = &x + &direction * step;
            if let Ok(e_trial) = potential_energy(&trial, params, state) {
                let sufficient = e_trial <= energy + armijo * step * slope;
                // Near the minimum energy differences drown in round-off; a
                // shrinking gradient is then the better acceptance test.
                let g_trial = potential_gradient(&trial, params, state)?;
                if sufficient || (step == T::one() && max_norm(&g_trial) < gnorm) {
                    x = trial;
                    energy = e_trial;
                    grad = g_trial;
                    moved = true;
                    break;
                }
            }
            step *= half;
        }
        if !moved {
            if gnorm < accept {
                break;
            }
            return Err(Error::Convergence {
                iterations,
                gradient_norm: to_f64(gnorm),
                last_iterate: x.iter().map(|&v| to_f64(v)).collect(),
            });
        }
    }
    let min_curvature = smallest_eigenvalue(potential_hessian(&x, params, state)?);
    Ok(Minimum {
        positions: x,
        energy,
        min_curvature,
    })
}

/// Equally spaced chain on the trap axis.
fn linear_ansatz<T: Float>(n: usize) -> DVector<T> {
    let nf: T = lit(n as f64);
    let spacing = (lit::<T>(4.0) * nf.ln().max(lit(0.5)) / nf).cbrt();
    let centre: T = lit((n as f64 - 1.0) / 2.0);
    let mut v = DVector::zeros(2 * n);
    for i in 0..n {
        v[i] = (lit::<T>(i as f64) - centre) * spacing;
    }
    v
}

fn zigzag_ansatz<T: Float>(n: usize) -> DVector<T> {
    let mut v = linear_ansatz::<T>(n);
    let amplitude = if n > 1 { (v[1] - v[0]) * lit(0.1) } else { lit(0.1) };
    let c = n / 2;
    for i in 0..n {
        let sign = if (i + c) % 2 == 0 { T::one() } else { -T::one() };
        v[n + i] = sign * amplitude;
    }
    v
}

/// Linear if every |y_i| is inside [`LINEAR_DEADBAND`].
pub fn classify_structure<T: Float>(config: &EquilibriumConfiguration<T>) -> Structure {
    if config.max_transverse() < lit(LINEAR_DEADBAND) {
        Structure::Linear
    } else {
        Structure::Zigzag
    }
}

/// Puts a zigzag on the branch whose central ion has y > 0.
fn canonical_branch<T: Float>(positions: &mut DVector<T>) {
    let n = positions.len() / 2;
    let tiny: T = lit(LINEAR_DEADBAND);
    let reference = if positions[n + n / 2].abs() > tiny {
        positions[n + n / 2]
    } else {
        (0..n)
            .map(|i| positions[n + i])
            .find(|y| y.abs() > tiny)
            .unwrap_or_else(T::zero)
    };
    if reference < T::zero() {
        for i in 0..n {
            positions[n + i] = -positions[n + i];
        }
    }
}

/// Locates a stable classical equilibrium for `state`.
///
/// Without a seed two searches are run (linear ansatz and a zigzag-perturbed
/// copy of it) and the lower-energy stable result wins; zigzags are returned
/// on the canonical branch (central ion at y > 0). A seeded search runs once
/// and keeps whatever branch the seed selects.
pub fn find_equilibrium<T: Float>(
    params: &CrystalParams<T>,
    state: State,
    seed: Option<&DVector<T>>,
) -> Result<EquilibriumConfiguration<T>> {
    let n = params.ion_count;
    if n < 2 {
        return Err(Error::InvalidInput("need at least two ions".into()));
    }
    let stable = |m: &Minimum<T>| m.min_curvature > lit(STABILITY_TOLERANCE);
    let best = match seed {
        Some(seed) => {
            params.check(seed)?;
            let m = minimize(seed.clone(), params, state)?;
            if !stable(&m) {
                return Err(Error::UnstableStructure {
                    state,
                    min_eigenvalue: to_f64(m.min_curvature),
                });
            }
            m
        }
        None => {
            let linear = minimize(linear_ansatz(n), params, state);
            let zigzag = minimize(zigzag_ansatz(n), params, state);
            let tie: T = lit(1e-12);
            let candidates: Vec<Minimum<T>> = [linear, zigzag]
                .into_iter()
                .filter_map(|m| m.ok())
                .filter(|m| stable(m))
                .collect();
            let mut best: Option<Minimum<T>> = None;
            for m in candidates {
                best = match best {
                    None => Some(m),
                    Some(b) if m.energy < b.energy - tie * b.energy.abs().max(T::one()) => Some(m),
                    keep => keep,
                };
            }
            let mut best = best.ok_or_else(|| {
                Error::Numeric(format!("no stable equilibrium found for state {state}"))
            })?;
            canonical_branch(&mut best.positions);
            best
        }
    };
    let mut config = EquilibriumConfiguration {
        state,
        positions: best.positions,
        energy: best.energy,
        structure: Structure::Linear,
    };
    config.structure = classify_structure(&config);
    Ok(config)
}

/// Axial equilibrium of the straight chain (y ≡ 0); independent of α.
pub fn linear_chain<T: Float>(n: usize) -> Result<DVector<T>> {
    // α only scales the transverse block, which the y ≡ 0 search never probes
    // beyond its diagonal; any stable value works.
    let params = CrystalParams::new(n, lit(10.0 * (n * n) as f64), T::zero());
    Ok(minimize(linear_ansatz(n), &params, State::Ground)?.positions)
}

/// Transverse Coulomb block of the straight chain: H_yy = α·1 + C.
fn transverse_coulomb<T: Float>(axial: &DVector<T>, n: usize) -> DMatrix<T> {
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for l in 0..n {
            if i != l {
                let d = (axial[i] - axial[l]).abs();
                let k = T::one() / (d * d * d);
                c[(i, l)] = k;
                c[(i, i)] -= k;
            }
        }
    }
    c
}

fn bisect<T: Float, F: Fn(T) -> T>(
    what: &'static str,
    f: F,
    lo: T,
    hi: T,
    tol: T,
) -> Result<T> {
    let edge: T = lit(1e-13);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.abs() <= edge {
        return Ok(a);
    }
    if fb.abs() <= edge {
        return Ok(b);
    }
    if fa.is_sign_positive() == fb.is_sign_positive() {
        return Err(Error::Search {
            what,
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let negative_at_a = fa < T::zero();
    let half: T = lit(0.5);
    while b - a > tol {
        let mid = (a + b) * half;
        let fm = f(mid);
        if (fm < T::zero()) == negative_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a + b) * half)
}

/// α at which the softest transverse mode of the straight chain vanishes.
pub fn critical_aspect_ratio<T: Float>(n: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidInput("critical aspect ratio needs N >= 2".into()));
    }
    let axial = linear_chain::<T>(n)?;
    let coulomb = transverse_coulomb(&axial, n);
    let identity = DMatrix::<T>::identity(n, n);
    bisect(
        "critical aspect ratio",
        |alpha| smallest_eigenvalue(&identity * alpha + &coulomb),
        T::one(),
        lit(10.0 * (n * n) as f64),
        lit(1e-12),
    )
}

/// g_c(Δ): where the excited-state straight chain loses transverse stability.
pub fn phase_boundary<T: Float>(n: usize, delta: T) -> Result<T> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidInput("delta must be non-negative".into()));
    }
    let alpha_c = critical_aspect_ratio::<T>(n)?;
    phase_boundary_with(n, delta, alpha_c)
}

/// [`phase_boundary`] for a caller that already knows α_c(N).
pub fn phase_boundary_with<T: Float>(n: usize, delta: T, alpha_c: T) -> Result<T> {
    if delta == T::zero() {
        return Ok(T::zero());
    }
    let axial = linear_chain::<T>(n)?;
    let coulomb = transverse_coulomb(&axial, n);
    let centre = n / 2;
    let softest = |g: T| {
        let mut h = coulomb.clone();
        for i in 0..n {
            h[(i, i)] += (T::one() + g) * alpha_c;
        }
        h[(centre, centre)] += delta * alpha_c;
        smallest_eigenvalue(h)
    };
    bisect("phase boundary", softest, lit(-0.5), T::zero(), lit(1e-12))
}

/// Structures of both internal states at (g, Δ).
pub fn phase_point<T: Float>(n: usize, alpha_c: T, g: T, delta: T) -> Result<PhasePoint<T>> {
    let params = CrystalParams::new(n, (T::one() + g) * alpha_c, delta * alpha_c);
    let ground = find_equilibrium(&params, State::Ground, None)?;
    let excited = find_equilibrium(&params, State::Excited, None)?;
    Ok(PhasePoint {
        g,
        delta,
        structure_g: ground.structure,
        structure_e: excited.structure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, alpha: f64, alpha_dip: f64) -> CrystalParams<f64> {
        CrystalParams::new(n, alpha, alpha_dip)
    }

    fn fd_gradient(x: &DVector<f64>, p: &CrystalParams<f64>, s: State) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_fn(x.len(), |k, _| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[k] += h;
            minus[k] -= h;
            (potential_energy(&plus, p, s).unwrap() - potential_energy(&minus, p, s).unwrap())
                / (2.0 * h)
        })
    }

    #[test]
    fn two_ion_energy() {
        let a = 0.25f64.cbrt();
        let x = DVector::from_vec(vec![-a, a, 0.0, 0.0]);
        let e = potential_energy(&x, &params(2, 3.0, 0.0), State::Ground).unwrap();
        assert!((e - 3.0 * 0.25f64.powf(2.0 / 3.0)).abs() < 1e-14);
        assert!((e - 1.1906).abs() < 1e-4);
    }

    #[test]
    fn dip_term_is_only_difference() {
        let x = DVector::from_vec(vec![-1.1, 0.05, 1.0, 0.2, -0.3, 0.15]);
        let p = params(3, 2.2, 0.06);
        let eg = potential_energy(&x, &p, State::Ground).unwrap();
        let ee = potential_energy(&x, &p, State::Excited).unwrap();
        assert!((ee - eg - 0.5 * 0.06 * 0.3f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn coincident_ions_are_an_error() {
        let x = DVector::from_vec(vec![0.5, 0.5, 0.0, 0.1, 0.1, 0.0]);
        let p = params(3, 2.0, 0.0);
        assert_eq!(
            potential_energy(&x, &p, State::Ground),
            Err(Error::SingularConfiguration { first: 0, second: 1 })
        );
        assert!(potential_gradient(&x, &p, State::Ground).is_err());
        assert!(potential_hessian(&x, &p, State::Ground).is_err());
    }

    #[test]
    fn three_ion_linear_chain() {
        let c = find_equilibrium(&params(3, 3.0, 0.0), State::Ground, None).unwrap();
        let a = 1.25f64.cbrt();
        assert!((c.x(0) + a).abs() < 1e-12 && c.x(1).abs() < 1e-12 && (c.x(2) - a).abs() < 1e-12);
        assert!((a - 1.0772).abs() < 1e-4);
        assert_eq!(c.structure, Structure::Linear);
        assert_eq!(c.max_transverse(), 0.0);
    }

    #[test]
    fn transverse_gradient_of_displaced_centre() {
        let a = 1.25f64.cbrt();
        let alpha = 2.9;
        let eps = 1e-4;
        let x = DVector::from_vec(vec![-a, 0.0, a, 0.0, eps, 0.0]);
        let g = potential_gradient(&x, &params(3, alpha, 0.0), State::Ground).unwrap();
        // Central row of the transverse Hessian: α − 2/a³ = α − 8/5; the
        // linear response is (α − 8/5)·ε, the (α − 12/5) combination belongs
        // to the symmetric zigzag mode which also moves the end ions.
        assert!((g[4] - (alpha - 1.6) * eps).abs() < 1e-10, "{}", g[4]);
        // Displacing along the zigzag mode (−½, 1, −½) probes α − 12/5.
        let mode = [-0.5, 1.0, -0.5];
        let norm2: f64 = mode.iter().map(|m| m * m).sum();
        let y = DVector::from_vec(
            [-a, 0.0, a].iter().copied().chain(mode.iter().map(|m| m * eps)).collect(),
        );
        let g = potential_gradient(&y, &params(3, alpha, 0.0), State::Ground).unwrap();
        let along: f64 = (0..3).map(|i| g[3 + i] * mode[i]).sum::<f64>() / norm2;
        assert!((along - (alpha - 2.4) * eps).abs() < 1e-10, "{along}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = DVector::from_vec(vec![-1.3, -0.1, 1.2, 0.3, -0.2, 0.25]);
        for state in [State::Ground, State::Excited] {
            let p = params(3, 2.1, 0.07);
            let g = potential_gradient(&x, &p, state).unwrap();
            let fd = fd_gradient(&x, &p, state);
            for k in 0..6 {
                assert!((g[k] - fd[k]).abs() <= 1e-8 * g[k].abs().max(1.0), "{k}");
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let x = DVector::from_vec(vec![-2.0, -0.9, 0.1, 1.0, 2.1, 0.3, -0.4, 0.2, -0.1, 0.35]);
        let p = params(5, 3.0, 0.1);
        let h = potential_hessian(&x, &p, State::Excited).unwrap();
        assert_eq!(h, h.transpose());
        let step = 1e-6;
        for k in 0..10 {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[k] += step;
            minus[k] -= step;
            let col = (potential_gradient(&plus, &p, State::Excited).unwrap()
                - potential_gradient(&minus, &p, State::Excited).unwrap())
                / (2.0 * step);
            for j in 0..10 {
                assert!((col[j] - h[(j, k)]).abs() < 1e-7, "({j},{k})");
            }
        }
    }

    #[test]
    fn zigzag_just_below_threshold() {
        let c = find_equilibrium(&params(3, 2.4 - 0.01, 0.0), State::Ground, None).unwrap();
        assert_eq!(c.structure, Structure::Zigzag);
        let g = potential_gradient(&c.positions, &params(3, 2.39, 0.0), State::Ground).unwrap();
        assert!(max_norm(&g) < 1e-10);
        assert!(c.y(1) > 0.0);
        assert!(c.max_transverse() < 0.2);
        let closer = find_equilibrium(&params(3, 2.4 - 0.001, 0.0), State::Ground, None).unwrap();
        assert!(closer.max_transverse() < c.max_transverse());
    }

    #[test]
    fn seeded_at_equilibrium_is_fixed_point() {
        let p = params(5, 3.5, 0.0);
        let c = find_equilibrium(&p, State::Ground, None).unwrap();
        let again = find_equilibrium(&p, State::Ground, Some(&c.positions)).unwrap();
        assert!((&again.positions - &c.positions).amax() < 1e-12);
    }

    #[test]
    fn unstable_seed_is_rejected() {
        let p = params(3, 2.0, 0.0);
        let straight = linear_chain::<f64>(3).unwrap();
        assert!(matches!(
            find_equilibrium(&p, State::Ground, Some(&straight)),
            Err(Error::UnstableStructure { state: State::Ground, .. })
        ));
    }

    #[test]
    fn classification_deadband() {
        let mk = |y: f64| EquilibriumConfiguration {
            state: State::Ground,
            positions: DVector::from_vec(vec![-1.0, 0.0, 1.0, 0.0, y, 0.0]),
            energy: 0.0,
            structure: Structure::Linear,
        };
        assert_eq!(classify_structure(&mk(0.0)), Structure::Linear);
        assert_eq!(classify_structure(&mk(0.3)), Structure::Zigzag);
        assert_eq!(classify_structure(&mk(1e-7)), Structure::Linear);
    }

    #[test]
    fn critical_ratios() {
        let a3: f64 = critical_aspect_ratio(3).unwrap();
        assert!((a3 - 2.4).abs() < 1e-10, "{a3}");
        let a2: f64 = critical_aspect_ratio(2).unwrap();
        assert!((a2 - 1.0).abs() < 1e-10, "{a2}");
        let a5: f64 = critical_aspect_ratio(5).unwrap();
        assert!(a5 > a3);
        // Dense scan of the softest transverse eigenvalue.
        let axial = linear_chain::<f64>(5).unwrap();
        let c = transverse_coulomb(&axial, 5);
        let scan = (0..30000)
            .map(|k| 1.0 + k as f64 * 1e-3)
            .find(|&alpha| smallest_eigenvalue(DMatrix::identity(5, 5) * alpha + &c) > 0.0)
            .unwrap();
        assert!((scan - a5).abs() <= 1e-3, "{scan} vs {a5}");
    }

    #[test]
    fn phase_boundaries() {
        let gc: f64 = phase_boundary(3, 0.025).unwrap();
        assert!((gc + 0.0165).abs() < 5e-4, "{gc}");
        // Analytic N = 3 boundary: (α − 0.8)(α − 1.6 + α_dip) = 1.28.
        let dip: f64 = 0.025 * 2.4;
        let b = 2.4 - dip;
        let alpha = (b + (b * b - 4.0 * (0.8 * (1.6 - dip) - 1.28)).sqrt()) / 2.0;
        assert!((gc - (alpha / 2.4 - 1.0)).abs() < 1e-9);
        assert_eq!(phase_boundary::<f64>(3, 0.0).unwrap(), 0.0);
        let small: f64 = phase_boundary(3, 0.005).unwrap();
        assert!(small < 0.0 && small > gc);
        let mut last = 0.0;
        for k in 1..=10 {
            let g: f64 = phase_boundary(3, 0.005 * k as f64).unwrap();
            assert!(g < last);
            last = g;
        }
        assert!(phase_boundary(3, -0.1f64).is_err());
        assert!(matches!(phase_boundary(3, 50.0f64), Err(Error::Search { .. })));
    }

    #[test]
    fn sign_of_g_selects_ground_structure() {
        let alpha_c = 2.4;
        for &g in &[0.05, 0.01, 1e-3, 2e-4] {
            for &d in &[0.0, 0.025] {
                let p = phase_point(3, alpha_c, g, d).unwrap();
                assert_eq!(p.structure_g, Structure::Linear);
                let p = phase_point(3, alpha_c, -g, d).unwrap();
                assert_eq!(p.structure_g, Structure::Zigzag);
            }
        }
        let p = phase_point(3, alpha_c, -0.005, 0.025).unwrap();
        assert_eq!((p.structure_g, p.structure_e), (Structure::Zigzag, Structure::Linear));
        let p = phase_point(3, alpha_c, -0.1, 0.025).unwrap();
        assert_eq!((p.structure_g, p.structure_e), (Structure::Zigzag, Structure::Zigzag));
    }

    #[test]
    fn order_parameter_exponent() {
        let alpha_c = 2.4;
        let gs = [-0.02, -0.01, -0.005, -0.002, -0.001];
        let pts: Vec<(f64, f64)> = gs
            .iter()
            .map(|&g| {
                let c = find_equilibrium(&params(3, (1.0 + g) * alpha_c, 0.0), State::Ground, None)
                    .unwrap();
                ((-g).ln(), c.max_transverse().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((0.45..=0.55).contains(&slope), "{slope}");
    }

    #[test]
    fn equilibrium_invariants_for_larger_chains() {
        for &n in &[5usize, 7] {
            let alpha_c: f64 = critical_aspect_ratio(n).unwrap();
            for &g in &[-0.05, 0.05] {
                let p = params(n, (1.0 + g) * alpha_c, 0.025 * alpha_c);
                for state in [State::Ground, State::Excited] {
                    let c = find_equilibrium(&p, state, None).unwrap();
                    let grad = potential_gradient(&c.positions, &p, state).unwrap();
                    assert!(max_norm(&grad) < 1e-10);
                    let h = potential_hessian(&c.positions, &p, state).unwrap();
                    assert!(smallest_eigenvalue(h) > -1e-9);
                    for i in 0..n {
                        assert!((c.x(i) + c.x(n - 1 - i)).abs() < 1e-9);
                        assert!((c.y(i).abs() - c.y(n - 1 - i).abs()).abs() < 1e-9);
                    }
                    // Seed sign independence up to reflection.
                    let flipped = find_equilibrium(&p, state, Some(&c.reflected().positions)).unwrap();
                    assert!((&flipped.positions - &c.reflected().positions).amax() < 1e-9);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn energy_symmetries(
            coords in proptest::collection::vec(-2.0f64..2.0, 6),
            alpha in 1.0f64..4.0,
            dip in 0.0f64..0.2,
        ) {
            let p = params(3, alpha, dip);
            let x = DVector::from_vec(coords.clone());
            prop_assume!(potential_energy(&x, &p, State::Ground).is_ok());
            for state in [State::Ground, State::Excited] {
                let e = potential_energy(&x, &p, state).unwrap();
                // Reflection through the trap centre.
                let reflected = -x.clone();
                prop_assert!((potential_energy(&reflected, &p, state).unwrap() - e).abs() < 1e-9 * e.abs().max(1.0));
                // Swapping the two outer ions leaves the central ion in place.
                let mut swapped = x.clone();
                swapped.swap_rows(0, 2);
                swapped.swap_rows(3, 5);
                prop_assert!((potential_energy(&swapped, &p, state).unwrap() - e).abs() < 1e-9 * e.abs().max(1.0));
            }
        }
    }
}
