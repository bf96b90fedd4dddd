//! Physical constants and unit conversions.
//!
//! Internal unit system: lengths in Angstrom, energies in meV, temperatures
//! in Kelvin, masses in amu. Frequencies are carried in cm^-1 at module
//! boundaries and enter formulas as quantum energies `hbar*omega` in meV.
//! Planck's constant never appears alone: everything is expressed through
//! `hbar^2/2m` (meV A^2) and `hbar*omega` (meV).

use crate::error::{Error, Result};

/// 1 cm^-1 in meV (h*c in meV*cm).
pub const CM1_TO_MEV: f64 = 0.1239842;

/// Boltzmann constant in meV/K.
pub const KB_MEV_PER_K: f64 = 0.08617333;

/// `hbar^2 / (2 m_p)` for the proton, in meV*A^2.
pub const HBAR2_OVER_2M_PROTON: f64 = 2.0753;

/// Proton mass in amu.
pub const PROTON_MASS_AMU: f64 = 1.0073;

/// `hbar^2` in meV * A^2 * amu, i.e. `2 m * (hbar^2/2m)` at m = 1 amu.
pub const HBAR2_MEV_A2_AMU: f64 = 2.0 * HBAR2_OVER_2M_PROTON * PROTON_MASS_AMU;

/// `hbar^2 / (2 m)` in meV*A^2 for a particle of `mass_amu`.
#[inline]
pub fn hbar2_over_2m(mass_amu: f64) -> f64 {
    HBAR2_OVER_2M_PROTON * PROTON_MASS_AMU / mass_amu
}

/// `kB * T` in meV.
#[inline]
pub fn kb_t(temperature_k: f64) -> f64 {
    KB_MEV_PER_K * temperature_k
}

/// Phonon frequency in cm^-1 from a dynamical-matrix eigenvalue in
/// meV / (A^2 amu). Negative eigenvalues map to negative cm^-1 values
/// (imaginary modes), preserving magnitude.
#[inline]
pub fn omega_cm1_from_dyn_eigenvalue(lambda: f64) -> f64 {
    let hw = (lambda.abs() * HBAR2_MEV_A2_AMU).sqrt();
    hw.copysign(lambda) / CM1_TO_MEV
}

/// Harmonic force constant `M omega^2` in meV/A^2 for `omega` in cm^-1.
#[inline]
pub fn force_constant(omega_cm1: f64, mass_amu: f64) -> f64 {
    let hw = omega_cm1 * CM1_TO_MEV;
    hw * hw / (2.0 * hbar2_over_2m(mass_amu))
}

/// Energy unit tags accepted by [`convert_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    /// Wavenumber, cm^-1.
    InverseCm,
    /// Milli-electronvolt.
    Mev,
    /// Temperature in K read as kB*T.
    KelvinKb,
}

impl EnergyUnit {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "cm-1" | "cm^-1" | "cm1" | "wavenumber" => Ok(EnergyUnit::InverseCm),
            "mev" => Ok(EnergyUnit::Mev),
            "k" | "kelvin" | "kb*t" | "kbt" => Ok(EnergyUnit::KelvinKb),
            other => Err(Error::Usage(format!(
                "unknown energy unit '{other}' (expected cm-1, meV or K)"
            ))),
        }
    }

    fn to_mev_factor(self) -> f64 {
        match self {
            EnergyUnit::InverseCm => CM1_TO_MEV,
            EnergyUnit::Mev => 1.0,
            EnergyUnit::KelvinKb => KB_MEV_PER_K,
        }
    }
}

/// Exact linear conversion between energy units.
pub fn convert_energy(value: f64, from: EnergyUnit, to: EnergyUnit) -> f64 {
    value * from.to_mev_factor() / to.to_mev_factor()
}

/// Bundle of the constants above; a value of this type documents which
/// unit system a computation ran in.
#[derive(Debug, Clone, Copy)]
pub struct UnitSystem {
    pub hbar2_over_2m_proton: f64,
    pub kb: f64,
    pub cm1_to_mev: f64,
    pub proton_mass_amu: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            hbar2_over_2m_proton: HBAR2_OVER_2M_PROTON,
            kb: KB_MEV_PER_K,
            cm1_to_mev: CM1_TO_MEV,
            proton_mass_amu: PROTON_MASS_AMU,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_pinned() {
        assert_relative_eq!(CM1_TO_MEV, 0.1239842, max_relative = 1e-6);
        assert_relative_eq!(KB_MEV_PER_K, 0.08617333, max_relative = 1e-6);
        // mass scaling: hbar^2/2m = 2.0753 * (1.0073 / m)
        assert_relative_eq!(hbar2_over_2m(1.0073), 2.0753, max_relative = 1e-4);
        assert_relative_eq!(hbar2_over_2m(2.0146), 2.0753 / 2.0, max_relative = 1e-4);
    }

    #[test]
    fn energy_conversions() {
        assert_relative_eq!(
            convert_energy(1.0, EnergyUnit::InverseCm, EnergyUnit::Mev),
            0.1239842,
            max_relative = 1e-12
        );
        assert_eq!(convert_energy(0.0, EnergyUnit::KelvinKb, EnergyUnit::Mev), 0.0);
        // 269 K as kB*T
        assert_relative_eq!(
            convert_energy(269.0, EnergyUnit::KelvinKb, EnergyUnit::Mev),
            23.181,
            epsilon = 1e-3
        );
        // round trip
        let x = convert_energy(1234.5, EnergyUnit::InverseCm, EnergyUnit::KelvinKb);
        assert_relative_eq!(
            convert_energy(x, EnergyUnit::KelvinKb, EnergyUnit::InverseCm),
            1234.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn unit_tags() {
        assert_eq!(EnergyUnit::parse("meV").unwrap(), EnergyUnit::Mev);
        assert_eq!(EnergyUnit::parse("cm-1").unwrap(), EnergyUnit::InverseCm);
        assert!(EnergyUnit::parse("joule").is_err());
    }

    #[test]
    fn dyn_eigenvalue_round_trip() {
        // force constant of a 3017.6 cm^-1 proton mode, back through the
        // dynamical-matrix eigenvalue lambda = k/m
        let k = force_constant(3017.6, PROTON_MASS_AMU);
        let omega = omega_cm1_from_dyn_eigenvalue(k / PROTON_MASS_AMU);
        assert_relative_eq!(omega, 3017.6, max_relative = 1e-12);
    }
}
