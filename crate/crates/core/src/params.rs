//! Unit system and the conversion between physical trap settings and the
//! dimensionless control parameters (α, α_dip, g, Δ).
//!
//! Lengths are measured in ℓ = (q²/(4πε₀ m ν_x²))^{1/3}, times in 1/ν_x and
//! energies in m ν_x² ℓ². Planck's constant only survives as
//! `hbar_tilde = ħ/(m ν_x ℓ²)`.

use crate::crystal::CrystalParams;
use crate::error::{Error, Result};
use crate::num::{lit, Float};

/// Physical constants (SI), frozen at ten significant digits.
pub mod constants {
    pub const VACUUM_PERMITTIVITY: f64 = 8.854187813e-12;
    pub const HBAR: f64 = 1.054571817e-34;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660539067e-27;
    pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
    /// Mass of ⁹Be⁺ in atomic mass units.
    pub const BERYLLIUM_9_MASS: f64 = 9.0122;
}

/// Physical description of the trap, the ions and the spin-dependent force.
///
/// Frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapSpec<T> {
    pub ion_count: usize,
    /// Ion mass in atomic mass units.
    pub ion_mass: T,
    /// Ion charge in elementary charges.
    pub ion_charge: T,
    pub nu_x: T,
    pub nu_y: T,
    /// Extra transverse stiffness felt by the central ion in state `e`.
    pub nu_dip: T,
}

impl<T: Float> TrapSpec<T> {
    /// Builds a spec from the phase-diagram coordinates (g, Δ) relative to the
    /// critical aspect ratio `alpha_c` of this ion number.
    pub fn from_g_delta(
        ion_count: usize,
        ion_mass: T,
        ion_charge: T,
        nu_x: T,
        g: T,
        delta: T,
        alpha_c: T,
    ) -> Result<Self> {
        if !(alpha_c > T::zero()) {
            return Err(Error::InvalidInput("alpha_c must be positive".into()));
        }
        if !(g > -T::one()) {
            return Err(Error::InvalidInput(format!(
                "g = {} would make the transverse confinement vanish",
                crate::num::to_f64(g)
            )));
        }
        let nu_c = critical_frequency(nu_x, alpha_c);
        let spec = Self {
            ion_count,
            ion_mass,
            ion_charge,
            nu_x,
            nu_y: nu_c * (T::one() + g).sqrt(),
            nu_dip: dip_from_delta(delta, nu_c)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ion_count < 3 || self.ion_count % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "ion_count must be odd and >= 3, got {}",
                self.ion_count
            )));
        }
        if !(self.ion_mass > T::zero()) {
            return Err(Error::InvalidInput("ion_mass must be positive".into()));
        }
        if !(self.ion_charge > T::zero()) {
            return Err(Error::InvalidInput("ion_charge must be positive".into()));
        }
        if !(self.nu_x > T::zero()) || !(self.nu_y > T::zero()) {
            return Err(Error::InvalidInput(
                "trap frequencies nu_x and nu_y must be positive".into(),
            ));
        }
        if !(self.nu_dip >= T::zero()) {
            return Err(Error::InvalidInput("nu_dip must be non-negative".into()));
        }
        Ok(())
    }
}

/// The dimensionless parameter set every numerical module works with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams<T> {
    pub ion_count: usize,
    /// ℓ in meters.
    pub length_unit: T,
    /// 1/ν_x in seconds.
    pub time_unit: T,
    pub hbar_tilde: T,
    /// ν_y²/ν_x².
    pub alpha: T,
    /// ν_dip²/ν_x².
    pub alpha_dip: T,
    /// (ν_y² − ν_c²)/ν_c².
    pub g: T,
    /// ν_dip²/ν_c².
    pub delta: T,
    /// ν_c²/ν_x² for this ion number.
    pub alpha_c: T,
}

impl<T: Float> DimensionlessParams<T> {
    pub fn crystal(&self) -> CrystalParams<T> {
        CrystalParams {
            ion_count: self.ion_count,
            alpha: self.alpha,
            alpha_dip: self.alpha_dip,
        }
    }

    /// Converts a dimensionless time to microseconds.
    pub fn time_to_us(&self, t: T) -> T {
        t * self.time_unit * lit(1e6)
    }

    /// Converts microseconds to a dimensionless time.
    pub fn time_from_us(&self, t_us: T) -> T {
        t_us / (self.time_unit * lit(1e6))
    }
}

/// Critical transverse angular frequency ν_c = ν_x √α_c.
pub fn critical_frequency<T: Float>(nu_x: T, alpha_c: T) -> T {
    nu_x * alpha_c.sqrt()
}

/// ℓ = (q²/(4πε₀ m ν_x²))^{1/3} in meters, for mass in u and charge in e.
pub fn length_unit<T: Float>(ion_mass: T, ion_charge: T, nu_x: T) -> T {
    let e: T = lit(constants::ELEMENTARY_CHARGE);
    let four_pi_eps0 = T::two_pi() + T::two_pi();
    let four_pi_eps0 = four_pi_eps0 * lit(constants::VACUUM_PERMITTIVITY);
    let q = ion_charge * e;
    // q/(4πε₀) first keeps q² out of the f32 subnormal range.
    let coulomb = (q / four_pi_eps0) * q;
    let mass = ion_mass * lit(constants::ATOMIC_MASS_UNIT);
    (coulomb / (mass * nu_x * nu_x)).cbrt()
}

/// Converts physical trap parameters into the dimensionless set.
pub fn derive_dimensionless<T: Float>(spec: &TrapSpec<T>, alpha_c: T) -> Result<DimensionlessParams<T>> {
    spec.validate()?;
    if !(alpha_c > T::zero()) {
        return Err(Error::InvalidInput("alpha_c must be positive".into()));
    }
    let length = length_unit(spec.ion_mass, spec.ion_charge, spec.nu_x);
    let mass = spec.ion_mass * lit(constants::ATOMIC_MASS_UNIT);
    let hbar: T = lit(constants::HBAR);
    let hbar_tilde = ((hbar / mass) / spec.nu_x) / (length * length);
    let alpha = (spec.nu_y / spec.nu_x).powi(2);
    let alpha_dip = (spec.nu_dip / spec.nu_x).powi(2);
    Ok(DimensionlessParams {
        ion_count: spec.ion_count,
        length_unit: length,
        time_unit: T::one() / spec.nu_x,
        hbar_tilde,
        alpha,
        alpha_dip,
        g: alpha / alpha_c - T::one(),
        delta: alpha_dip / alpha_c,
        alpha_c,
    })
}

/// ν_dip = ν_c √Δ.
pub fn dip_from_delta<T: Float>(delta: T, nu_c: T) -> Result<T> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "delta must be non-negative, got {}",
            crate::num::to_f64(delta)
        )));
    }
    Ok(nu_c * delta.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const MHZ: f64 = TAU * 1e6;

    fn beryllium(nu_y: f64, nu_dip: f64) -> TrapSpec<f64> {
        TrapSpec {
            ion_count: 3,
            ion_mass: constants::BERYLLIUM_9_MASS,
            ion_charge: 1.0,
            nu_x: MHZ,
            nu_y,
            nu_dip,
        }
    }

    #[test]
    fn beryllium_units() {
        let p = derive_dimensionless(&beryllium(1.6 * MHZ, 0.0), 2.4).unwrap();
        // Independent arithmetic: e²/(4πε₀) = 2.307077e-28 J m, m = 1.496512e-26 kg.
        let coulomb = 1.602176634e-19f64.powi(2) / (4.0 * std::f64::consts::PI * 8.854187813e-12);
        let m = 9.0122 * 1.660539067e-27;
        let ell = (coulomb / (m * MHZ * MHZ)).cbrt();
        assert!((p.length_unit - ell).abs() / ell < 1e-12);
        assert!((p.length_unit - 7.3e-6).abs() < 0.05e-6, "{}", p.length_unit);
        assert!((p.hbar_tilde - 2.1e-5).abs() < 0.05e-5, "{}", p.hbar_tilde);
        assert!((p.time_unit - 1.0 / MHZ).abs() < 1e-24);
    }

    #[test]
    fn critical_point_is_origin() {
        let alpha_c = 2.4;
        let nu_c = critical_frequency(MHZ, alpha_c);
        let p = derive_dimensionless(&beryllium(nu_c, 0.0), alpha_c).unwrap();
        assert!(p.g.abs() < 1e-14);
        assert_eq!(p.delta, 0.0);
    }

    #[test]
    fn linear_side_g() {
        let p = derive_dimensionless(&beryllium(1.565 * MHZ, 0.0), 1.549f64.powi(2)).unwrap();
        assert!((p.g - 0.021).abs() < 5e-4, "{}", p.g);
    }

    #[test]
    fn dip_frequency_from_delta() {
        let nu_c = 1.549 * MHZ;
        let nu = dip_from_delta(0.025, nu_c).unwrap();
        assert!((nu / TAU - 245e3).abs() < 1e3, "{}", nu / TAU);
        assert_eq!(dip_from_delta(0.0, nu_c).unwrap(), 0.0);
        let nu = dip_from_delta(0.005, nu_c).unwrap();
        assert!((nu / TAU - 110e3).abs() < 1e3);
        assert!(matches!(dip_from_delta(-0.1, nu_c), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = beryllium(MHZ, 0.0);
        s.nu_x = 0.0;
        assert!(derive_dimensionless(&s, 2.4).is_err());
        let mut s = beryllium(MHZ, 0.0);
        s.ion_mass = -1.0;
        assert!(derive_dimensionless(&s, 2.4).is_err());
        let mut s = beryllium(MHZ, 0.0);
        s.ion_count = 4;
        assert!(s.validate().is_err());
        let mut s = beryllium(MHZ, 0.0);
        s.nu_dip = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn g_delta_round_trip_and_scaling() {
        let alpha_c = 2.4;
        for &(g, delta) in &[(0.02, 0.025), (-0.1, 0.005), (-0.0165, 0.0), (0.3, 0.1)] {
            let spec = TrapSpec::from_g_delta(3, 9.0122, 1.0, MHZ, g, delta, alpha_c).unwrap();
            let p = derive_dimensionless(&spec, alpha_c).unwrap();
            assert!((p.g - g).abs() <= 1e-12 * g.abs().max(1.0), "{} vs {}", p.g, g);
            assert!((p.delta - delta).abs() <= 1e-12 * delta.max(1e-300));
            assert!((p.alpha - (1.0 + g) * alpha_c).abs() <= 1e-12 * p.alpha);

            let doubled = TrapSpec {
                nu_x: 2.0 * spec.nu_x,
                nu_y: 2.0 * spec.nu_y,
                nu_dip: 2.0 * spec.nu_dip,
                ..spec
            };
            let q = derive_dimensionless(&doubled, alpha_c).unwrap();
            assert!((q.alpha - p.alpha).abs() < 1e-13);
            assert!((q.g - p.g).abs() < 1e-13);
            assert!((q.delta - p.delta).abs() < 1e-13);
        }
    }

    #[test]
    fn single_precision_units() {
        let spec = TrapSpec::<f32> {
            ion_count: 3,
            ion_mass: 9.0122,
            ion_charge: 1.0,
            nu_x: MHZ as f32,
            nu_y: 1.6 * MHZ as f32,
            nu_dip: 0.0,
        };
        let p = derive_dimensionless(&spec, 2.4).unwrap();
        assert!((p.length_unit - 7.31e-6).abs() < 0.02e-6);
        assert!((p.hbar_tilde - 2.1e-5).abs() < 0.05e-5);
    }
}
