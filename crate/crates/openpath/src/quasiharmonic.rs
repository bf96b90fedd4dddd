//! Quasi-harmonic maps between spatial variances and principal
//! frequencies, per-mode kinetic energies, the potential of mean force,
//! isotropic best-fit models and classical-spread comparisons.
//!
//! The central relation is
//! `1/sigma_k^2 = (M omega_k / 2 hbar) coth(hbar omega_k / 2 kB T)`,
//! implemented through the dimensionless product `x coth x` with
//! `x = hbar omega / 2 kB T` so the free-particle limit `omega -> 0`
//! is exact.

use crate::error::{Error, Result};
use crate::estimator::{spherical_end_to_end, PrincipalSpectrum, RadialCurve, RadialKind};
use crate::linalg::{SymMatrix3, Vec3};
use crate::numerics::{golden_minimize, integrate_uniform};
use crate::units::{hbar2_over_2m, kb_t, CM1_TO_MEV, KB_MEV_PER_K};

/// `x * coth(x)`, smooth through x = 0 (value 1).
#[inline]
pub fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x / x.tanh()
    }
}

fn check_t_m(temperature_k: f64, mass_amu: f64) -> Result<()> {
    if !(temperature_k > 0.0) || !temperature_k.is_finite() {
        return Err(Error::Usage(format!(
            "temperature must be positive and finite, got {temperature_k}"
        )));
    }
    if !(mass_amu > 0.0) || !mass_amu.is_finite() {
        return Err(Error::Usage(format!(
            "mass must be positive and finite, got {mass_amu}"
        )));
    }
    Ok(())
}

/// Free-particle spatial variance bound `hbar^2 / (M kB T)` in A^2.
pub fn free_particle_sigma2(temperature_k: f64, mass_amu: f64) -> f64 {
    2.0 * hbar2_over_2m(mass_amu) / kb_t(temperature_k)
}

/// Inverse spatial variance `1/sigma^2` in A^-2 for a harmonic mode.
/// Equals the momentum-space variance in units of hbar^2.
pub fn inverse_sigma2_from_omega(omega_cm1: f64, temperature_k: f64, mass_amu: f64) -> f64 {
    let x = omega_cm1 * CM1_TO_MEV / (2.0 * kb_t(temperature_k));
    x_coth_x(x) / free_particle_sigma2(temperature_k, mass_amu)
}

/// Spatial variance `sigma^2` in A^2 for a harmonic mode of `omega_cm1`;
/// `omega = 0` returns the free-particle value.
pub fn sigma2_from_omega(omega_cm1: f64, temperature_k: f64, mass_amu: f64) -> Result<f64> {
    check_t_m(temperature_k, mass_amu)?;
    if omega_cm1 < 0.0 || !omega_cm1.is_finite() {
        return Err(Error::Usage(format!(
            "frequency must be >= 0 and finite, got {omega_cm1} cm^-1"
        )));
    }
    Ok(1.0 / inverse_sigma2_from_omega(omega_cm1, temperature_k, mass_amu))
}

/// Frequency bracket upper bound for the inverse map.
pub const OMEGA_BRACKET_MAX_CM1: f64 = 1.0e5;

/// Invert the variance map: the unique `omega` with
/// `sigma2_from_omega(omega) = sigma2`.
pub fn omega_from_sigma2(sigma2: f64, temperature_k: f64, mass_amu: f64) -> Result<f64> {
    check_t_m(temperature_k, mass_amu)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Usage(format!(
            "sigma^2 must be positive and finite, got {sigma2}"
        )));
    }
    let bound = free_particle_sigma2(temperature_k, mass_amu);
    if sigma2 >= bound {
        return Err(Error::NoBoundState { sigma2, bound });
    }
    // solve x coth x = y, strictly increasing in x
    let y = bound / sigma2;
    let x_max = OMEGA_BRACKET_MAX_CM1 * CM1_TO_MEV / (2.0 * kb_t(temperature_k));
    if y > x_coth_x(x_max) {
        return Err(Error::Numerical(format!(
            "sigma^2 = {sigma2:.6e} A^2 requires omega beyond the {OMEGA_BRACKET_MAX_CM1:.0e} cm^-1 bracket"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, (y + 1.0).min(x_max));
    // 200-iteration bisection cap; the interval halves each step
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if x_coth_x(mid) > y {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(x * 2.0 * kb_t(temperature_k) / CM1_TO_MEV)
}

/// Kinetic energy of one harmonic mode, `(hbar omega / 4) coth(hbar omega / 2 kB T)`,
/// in meV. Mass-independent; `omega = 0` gives the classical `kB T / 2`.
pub fn mode_kinetic_energy(omega_cm1: f64, temperature_k: f64) -> f64 {
    let kt = kb_t(temperature_k);
    let x = omega_cm1 * CM1_TO_MEV / (2.0 * kt);
    0.5 * kt * x_coth_x(x)
}

/// Classical thermal spread `sqrt(kB T / (M omega^2))` in A.
pub fn classical_spread(omega_cm1: f64, temperature_k: f64, mass_amu: f64) -> Result<f64> {
    check_t_m(temperature_k, mass_amu)?;
    if !(omega_cm1 > 0.0) {
        return Err(Error::Usage(
            "classical spread diverges at omega = 0".to_string(),
        ));
    }
    let hw = omega_cm1 * CM1_TO_MEV;
    Ok((2.0 * kb_t(temperature_k) * hbar2_over_2m(mass_amu)).sqrt() / hw)
}

/// Quantal ground-state spread `sqrt(hbar / 2 M omega)` in A.
pub fn ground_state_spread(omega_cm1: f64, mass_amu: f64) -> Result<f64> {
    if !(omega_cm1 > 0.0) {
        return Err(Error::Usage(
            "ground-state spread diverges at omega = 0".to_string(),
        ));
    }
    Ok((hbar2_over_2m(mass_amu) / (omega_cm1 * CM1_TO_MEV)).sqrt())
}

/// Effective harmonic potential of mean force `V(r) = (M/2) r^T A r`.
#[derive(Debug, Clone)]
pub struct MeanForceMatrix {
    /// `A = sum_k omega_k^2 v_k v_k^T` in cm^-2.
    pub matrix_cm2: SymMatrix3,
    /// Eigenvalues `omega_k^2` in cm^-2, frequency-descending order.
    pub omega2_cm2: [f64; 3],
    /// Force constants `M omega_k^2` in meV/A^2, same order.
    pub force_constants_mev_a2: [f64; 3],
    /// Principal directions, same order as the spectrum.
    pub directions: [Vec3; 3],
}

pub fn potential_of_mean_force(spectrum: &PrincipalSpectrum) -> MeanForceMatrix {
    let omega2 = [
        spectrum.omega_cm1[0] * spectrum.omega_cm1[0],
        spectrum.omega_cm1[1] * spectrum.omega_cm1[1],
        spectrum.omega_cm1[2] * spectrum.omega_cm1[2],
    ];
    let matrix = SymMatrix3::from_principal(&spectrum.directions, &omega2);
    let fc = [
        crate::units::force_constant(spectrum.omega_cm1[0], spectrum.mass_amu),
        crate::units::force_constant(spectrum.omega_cm1[1], spectrum.mass_amu),
        crate::units::force_constant(spectrum.omega_cm1[2], spectrum.mass_amu),
    ];
    MeanForceMatrix {
        matrix_cm2: matrix,
        omega2_cm2: omega2,
        force_constants_mev_a2: fc,
        directions: spectrum.directions,
    }
}

/// Which spherical distribution an isotropic model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSpace {
    EndToEnd,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    LeastSquares,
    MomentMatch,
}

#[derive(Debug, Clone)]
pub struct IsotropicFitResult {
    pub omega_bar_cm1: f64,
    pub kinetic_energy_mev: f64,
    /// Temperature of the classical Maxwell-Boltzmann distribution with the
    /// same kinetic energy: `2 E_K / (3 kB)`.
    pub effective_temperature_k: f64,
    /// Normalized RMS misfit of the fitted curve (0 for moment matching).
    pub fit_residual: f64,
    pub method: FitMethod,
    pub space: FitSpace,
}

fn finish_fit(
    omega: f64,
    temperature_k: f64,
    residual: f64,
    method: FitMethod,
    space: FitSpace,
) -> IsotropicFitResult {
    let ek = 3.0 * mode_kinetic_energy(omega, temperature_k);
    IsotropicFitResult {
        omega_bar_cm1: omega,
        kinetic_energy_mev: ek,
        effective_temperature_k: 2.0 * ek / (3.0 * KB_MEV_PER_K),
        fit_residual: residual,
        method,
        space,
    }
}

/// Closed-form isotropic spherical density `n(x)` with per-axis width `s`:
/// `sqrt(2/pi) s^-3 exp(-x^2 / 2 s^2)`.
#[inline]
fn isotropic_density(x: f64, s: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() / (s * s * s) * (-0.5 * x * x / (s * s)).exp()
}

/// Least-squares isotropic frequency against a tabulated spherical curve,
/// minimizing `integral x^2 (n_iso(x; omega) - n(x))^2 dx`.
fn least_squares_omega(
    curve: &RadialCurve,
    temperature_k: f64,
    mass_amu: f64,
    space: FitSpace,
) -> Result<(f64, f64)> {
    let h = curve.grid[1] - curve.grid[0];
    let width_of = |omega: f64| -> f64 {
        let s2 = 1.0 / inverse_sigma2_from_omega(omega, temperature_k, mass_amu);
        match space {
            FitSpace::EndToEnd => s2.sqrt(),
            FitSpace::Momentum => 1.0 / s2.sqrt(),
        }
    };
    let objective = |omega: f64| -> f64 {
        let s = width_of(omega);
        let vals: Vec<f64> = curve
            .grid
            .iter()
            .zip(&curve.values)
            .map(|(&x, &n)| {
                let d = isotropic_density(x, s) - n;
                x * x * d * d
            })
            .collect();
        integrate_uniform(&vals, h)
    };

    // coarse log-spaced scan to bracket the minimum, then golden section
    let (lo, hi) = (10.0f64, OMEGA_BRACKET_MAX_CM1);
    let n_scan = 96;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=n_scan {
        let w = lo * (hi / lo).powf(i as f64 / n_scan as f64);
        let j = objective(w);
        if j < best.0 {
            best = (j, w);
        }
    }
    let ratio = (hi / lo).powf(1.0 / n_scan as f64);
    let (a, b) = (best.1 / ratio, best.1 * ratio);
    let (omega, jmin) = golden_minimize(objective, a, b, 1e-12, 300);

    // dimensionless residual
    let norm_vals: Vec<f64> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(&x, &n)| x * x * n * n)
        .collect();
    let norm = integrate_uniform(&norm_vals, h);
    if !jmin.is_finite() || norm <= 0.0 {
        return Err(Error::Accuracy {
            context: "isotropic least-squares fit",
            achieved: f64::NAN,
            required: 0.0,
        });
    }
    Ok((omega, (jmin / norm).sqrt()))
}

/// Isotropic best-fit model for a principal spectrum.
///
/// Least squares fits the spherical curve of the requested space; moment
/// matching solves `3 sigma_iso^2 = sum_k sigma_k^2` (end-to-end) or
/// `3 / sigma_iso^2 = sum_k 1/sigma_k^2` (momentum).
pub fn isotropic_fit(
    spectrum: &PrincipalSpectrum,
    space: FitSpace,
    method: FitMethod,
) -> Result<IsotropicFitResult> {
    let (t, m) = (spectrum.temperature_k, spectrum.mass_amu);
    match method {
        FitMethod::MomentMatch => {
            let s2 = match space {
                FitSpace::EndToEnd => {
                    (spectrum.sigma2_a2[0] + spectrum.sigma2_a2[1] + spectrum.sigma2_a2[2]) / 3.0
                }
                FitSpace::Momentum => {
                    3.0 / spectrum
                        .sigma2_a2
                        .iter()
                        .map(|s2| 1.0 / s2)
                        .sum::<f64>()
                }
            };
            let omega = omega_from_sigma2(s2, t, m)?;
            Ok(finish_fit(omega, t, 0.0, method, space))
        }
        FitMethod::LeastSquares => {
            let curve = match space {
                FitSpace::EndToEnd => spherical_end_to_end(spectrum, None)?,
                FitSpace::Momentum => {
                    crate::estimator::momentum_distribution(spectrum, None)?.spherical
                }
            };
            let (omega, residual) = least_squares_omega(&curve, t, m, space)?;
            Ok(finish_fit(omega, t, residual, method, space))
        }
    }
}

/// Isotropic fit against an externally supplied spherical curve.
pub fn isotropic_fit_curve(
    curve: &RadialCurve,
    temperature_k: f64,
    mass_amu: f64,
    method: FitMethod,
) -> Result<IsotropicFitResult> {
    check_t_m(temperature_k, mass_amu)?;
    let space = match curve.kind {
        RadialKind::EndToEnd => FitSpace::EndToEnd,
        RadialKind::Momentum => FitSpace::Momentum,
    };
    match method {
        FitMethod::MomentMatch => {
            let h = curve.grid[1] - curve.grid[0];
            let vals: Vec<f64> = curve
                .grid
                .iter()
                .zip(&curve.values)
                .map(|(&x, &n)| x * x * x * x * n)
                .collect();
            let second_moment = integrate_uniform(&vals, h);
            let s2 = match space {
                FitSpace::EndToEnd => second_moment / 3.0,
                FitSpace::Momentum => 3.0 / second_moment,
            };
            let omega = omega_from_sigma2(s2, temperature_k, mass_amu)?;
            Ok(finish_fit(omega, temperature_k, 0.0, method, space))
        }
        FitMethod::LeastSquares => {
            let (omega, residual) = least_squares_omega(curve, temperature_k, mass_amu, space)?;
            Ok(finish_fit(omega, temperature_k, residual, method, space))
        }
    }
}
