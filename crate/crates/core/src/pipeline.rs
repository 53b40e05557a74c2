//! End-to-end assembly of one (g, Δ) point: equilibria, modes and map.

use crate::crystal::{
    critical_aspect_ratio, find_equilibrium, phase_boundary_with, CrystalParams,
    EquilibriumConfiguration, State,
};
use crate::error::{Error, Result};
use crate::modes::{modes_of, NormalModeBasis};
use crate::params::DimensionlessParams;
use crate::quench::{build_quench_map, QuenchMap};
use crate::num::Float;

/// The N-dependent constants shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainContext<T> {
    pub ion_count: usize,
    pub alpha_c: T,
    pub hbar_tilde: T,
}

impl<T: Float> ChainContext<T> {
    /// Computes α_c(N) once.
    pub fn new(ion_count: usize, hbar_tilde: T) -> Result<Self> {
        if !(hbar_tilde > T::zero()) {
            return Err(Error::InvalidInput("hbar_tilde must be positive".into()));
        }
        Ok(Self {
            ion_count,
            alpha_c: critical_aspect_ratio(ion_count)?,
            hbar_tilde,
        })
    }

    pub fn from_params(p: &DimensionlessParams<T>) -> Self {
        Self {
            ion_count: p.ion_count,
            alpha_c: p.alpha_c,
            hbar_tilde: p.hbar_tilde,
        }
    }

    pub fn crystal(&self, g: T, delta: T) -> CrystalParams<T> {
        CrystalParams::new(self.ion_count, (T::one() + g) * self.alpha_c, delta * self.alpha_c)
    }

    pub fn phase_boundary(&self, delta: T) -> Result<T> {
        phase_boundary_with(self.ion_count, delta, self.alpha_c)
    }
}

/// Everything computed for one quench.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Float> {
    pub g: T,
    pub delta: T,
    pub crystal: CrystalParams<T>,
    pub basis_g: NormalModeBasis<T>,
    pub basis_e: NormalModeBasis<T>,
    pub map: QuenchMap<T>,
}

impl<T: Float> Scenario<T> {
    pub fn build(ctx: &ChainContext<T>, g: T, delta: T) -> Result<Self> {
        let crystal = ctx.crystal(g, delta);
        let eq_g = find_equilibrium(&crystal, State::Ground, None)?;
        let eq_e = find_equilibrium(&crystal, State::Excited, None)?;
        Self::from_equilibria(ctx, g, delta, &eq_g, &eq_e)
    }

    pub fn from_params(p: &DimensionlessParams<T>) -> Result<Self> {
        Self::build(&ChainContext::from_params(p), p.g, p.delta)
    }

    /// Builds from given equilibria, e.g. the reflected zigzag branch.
    pub fn from_equilibria(
        ctx: &ChainContext<T>,
        g: T,
        delta: T,
        eq_g: &EquilibriumConfiguration<T>,
        eq_e: &EquilibriumConfiguration<T>,
    ) -> Result<Self> {
        let crystal = ctx.crystal(g, delta);
        let basis_g = modes_of(eq_g, &crystal)?;
        let basis_e = modes_of(eq_e, &crystal)?;
        let map = build_quench_map(&basis_g, &basis_e, ctx.hbar_tilde)?;
        Ok(Self {
            g,
            delta,
            crystal,
            basis_g,
            basis_e,
            map,
        })
    }

    /// Same point with both structures on the y → −y branch.
    pub fn reflected(&self, ctx: &ChainContext<T>) -> Result<Self> {
        Self::from_equilibria(
            ctx,
            self.g,
            self.delta,
            &self.basis_g.equilibrium.reflected(),
            &self.basis_e.equilibrium.reflected(),
        )
    }

    /// ω₁ᵉ, the lowest excited-state frequency.
    pub fn lowest_frequency(&self) -> T {
        self.basis_e.frequencies[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::Structure;

    #[test]
    fn quench_structures() {
        let ctx = ChainContext::<f64>::new(3, 2.1e-5).unwrap();
        let a = Scenario::build(&ctx, 0.0205, 0.025).unwrap();
        assert_eq!(a.basis_g.equilibrium.structure, Structure::Linear);
        assert_eq!(a.basis_e.equilibrium.structure, Structure::Linear);
        let b = Scenario::build(&ctx, -0.0054, 0.025).unwrap();
        assert_eq!(b.basis_g.equilibrium.structure, Structure::Zigzag);
        assert_eq!(b.basis_e.equilibrium.structure, Structure::Linear);
        let c = Scenario::build(&ctx, -0.0996, 0.025).unwrap();
        assert_eq!(c.basis_g.equilibrium.structure, Structure::Zigzag);
        assert_eq!(c.basis_e.equilibrium.structure, Structure::Zigzag);
        for s in [&a, &b, &c] {
            assert!(s.map.residuals().max() < 1e-10);
        }
    }

    #[test]
    fn no_dip_linear_is_identity() {
        let ctx = ChainContext::<f64>::new(3, 1e-4).unwrap();
        let s = Scenario::build(&ctx, 0.05, 0.0).unwrap();
        assert!((s.map.g0() - 1.0).abs() < 1e-12);
        assert!(s.map.a.amax() < 1e-12);
    }

    #[test]
    fn reflection_keeps_map_invariants() {
        let ctx = ChainContext::<f64>::new(3, 2.1e-5).unwrap();
        let s = Scenario::build(&ctx, -0.05, 0.025).unwrap();
        let r = s.reflected(&ctx).unwrap();
        assert!((s.map.ln_g0 - r.map.ln_g0).abs() < 1e-10);
    }
}
