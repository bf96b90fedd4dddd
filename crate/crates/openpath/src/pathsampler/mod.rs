//! End-to-end sample generation: exact sampling for harmonic models and
//! open-chain path-integral Monte Carlo for anharmonic model potentials,
//! plus the exact 1D grid oracle and the effective-potential fit.

mod oracle;
mod potfit;
pub mod sampler;

pub use oracle::{oracle_1d, Oracle1dConfig, Oracle1dResult};
pub use potfit::{fit_effective_potential_1d, PotentialFit, PotentialFitConfig};
pub use sampler::{
    sample_open_pimc, MoveScheme, OpenChainConfig, ProposalRecord, SamplerDiagnostics,
};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::estimator::{EndToEndSampleSet, Provenance};
use crate::linalg::Vec3;
use crate::quasiharmonic::sigma2_from_omega;
use crate::units::{force_constant, kb_t, HBAR2_MEV_A2_AMU};

/// Model potentials for the sampler and the 1D oracles. Energies in meV,
/// lengths in A; coefficients are mass-free (frequencies enter through
/// constructors that take the particle mass).
#[derive(Debug, Clone)]
pub enum ModelPotential {
    /// V = 0; reference case for the free-particle end-to-end law. The
    /// chain centroid random-walks but end-to-end statistics are exact.
    Free,
    /// `V(r) = 1/2 sum_k k_k (r . v_k)^2` with force constants in meV/A^2.
    Harmonic3D {
        force_constants: [f64; 3],
        frame: [Vec3; 3],
    },
    /// `V = c2 u^2 + c3 u^3 + c4 u^4` along `axis` (u = r . axis) plus
    /// `1/2 kt` times the squared transverse displacement.
    Polynomial1D {
        c2: f64,
        c3: f64,
        c4: f64,
        axis: Vec3,
        transverse_k: f64,
    },
    /// Symmetric double well along `axis`: wells at +-separation/2, barrier
    /// height at the midpoint; harmonic transverse confinement.
    DoubleWell1D {
        barrier_mev: f64,
        separation_a: f64,
        axis: Vec3,
        transverse_k: f64,
    },
}

impl ModelPotential {
    /// Separable harmonic potential from frequencies in cm^-1.
    pub fn harmonic_from_omegas(omega_cm1: [f64; 3], frame: [Vec3; 3], mass_amu: f64) -> Self {
        ModelPotential::Harmonic3D {
            force_constants: [
                force_constant(omega_cm1[0], mass_amu),
                force_constant(omega_cm1[1], mass_amu),
                force_constant(omega_cm1[2], mass_amu),
            ],
            frame,
        }
    }

    /// Ice-like stretch potential: harmonic curvature of a 3017.6 cm^-1
    /// proton mode softened by a cubic term tuned (against the 1D oracle at
    /// 269 K) so the effective end-to-end frequency comes out near
    /// 2639 cm^-1, with a quartic term keeping the well confining.
    /// Transverse modes are harmonic at 1172.5 cm^-1.
    pub fn ice_cubic_preset(mass_amu: f64) -> Self {
        let c2 = 0.5 * force_constant(3017.6, mass_amu);
        ModelPotential::Polynomial1D {
            c2,
            c3: ICE_CUBIC_C3_PER_C2_A * c2,
            c4: ICE_CUBIC_C4_PER_C2_A2 * c2,
            axis: [1.0, 0.0, 0.0],
            transverse_k: force_constant(1172.5, mass_amu),
        }
    }

    pub fn energy(&self, r: &Vec3) -> f64 {
        match self {
            ModelPotential::Free => 0.0,
            ModelPotential::Harmonic3D {
                force_constants,
                frame,
            } => {
                let mut v = 0.0;
                for k in 0..3 {
                    let u = crate::linalg::dot(r, &frame[k]);
                    v += 0.5 * force_constants[k] * u * u;
                }
                v
            }
            ModelPotential::Polynomial1D {
                c2,
                c3,
                c4,
                axis,
                transverse_k,
            } => {
                let u = crate::linalg::dot(r, axis);
                let t2 = crate::linalg::dot(r, r) - u * u;
                c2 * u * u + c3 * u * u * u + c4 * u * u * u * u + 0.5 * transverse_k * t2
            }
            ModelPotential::DoubleWell1D {
                barrier_mev,
                separation_a,
                axis,
                transverse_k,
            } => {
                let u = crate::linalg::dot(r, axis);
                let t2 = crate::linalg::dot(r, r) - u * u;
                let f = 4.0 * u * u / (separation_a * separation_a) - 1.0;
                barrier_mev * f * f + 0.5 * transverse_k * t2
            }
        }
    }

    /// 1D potential along the distinguished axis (u measured in A).
    pub fn axis_energy(&self, u: f64) -> f64 {
        match self {
            ModelPotential::Free => 0.0,
            ModelPotential::Harmonic3D {
                force_constants, ..
            } => 0.5 * force_constants[0] * u * u,
            ModelPotential::Polynomial1D { c2, c3, c4, .. } => {
                c2 * u * u + c3 * u * u * u + c4 * u * u * u * u
            }
            ModelPotential::DoubleWell1D {
                barrier_mev,
                separation_a,
                ..
            } => {
                let f = 4.0 * u * u / (separation_a * separation_a) - 1.0;
                barrier_mev * f * f
            }
        }
    }

    /// The distinguished axis, if the potential has one.
    pub fn axis(&self) -> Vec3 {
        match self {
            ModelPotential::Free => [1.0, 0.0, 0.0],
            ModelPotential::Harmonic3D { frame, .. } => frame[0],
            ModelPotential::Polynomial1D { axis, .. } => *axis,
            ModelPotential::DoubleWell1D { axis, .. } => *axis,
        }
    }

    /// Reject parameterizations whose Boltzmann weight is non-normalizable.
    pub fn check_confining(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Usage(msg));
        match self {
            ModelPotential::Free => Ok(()),
            ModelPotential::Harmonic3D {
                force_constants, ..
            } => {
                if force_constants.iter().all(|k| *k > 0.0) {
                    Ok(())
                } else {
                    bad("harmonic force constants must be positive".into())
                }
            }
            ModelPotential::Polynomial1D {
                c2,
                c3,
                c4,
                transverse_k,
                ..
            } => {
                let axis_ok = *c4 > 0.0 || (*c4 == 0.0 && *c3 == 0.0 && *c2 > 0.0);
                if axis_ok && *transverse_k > 0.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "polynomial potential not confining (c2={c2}, c3={c3}, c4={c4}, kt={transverse_k})"
                    ))
                }
            }
            ModelPotential::DoubleWell1D {
                barrier_mev,
                separation_a,
                transverse_k,
                ..
            } => {
                if *barrier_mev > 0.0 && *separation_a > 0.0 && *transverse_k > 0.0 {
                    Ok(())
                } else {
                    bad("double well needs positive barrier, separation and transverse constant".into())
                }
            }
        }
    }

    /// Rough upper bound on the local curvature, used for the Trotter
    /// sanity warning.
    pub fn max_curvature(&self) -> f64 {
        match self {
            ModelPotential::Free => 0.0,
            ModelPotential::Harmonic3D {
                force_constants, ..
            } => force_constants.iter().cloned().fold(0.0, f64::max),
            ModelPotential::Polynomial1D {
                c2, transverse_k, ..
            } => (2.0 * c2).max(*transverse_k),
            ModelPotential::DoubleWell1D {
                barrier_mev,
                separation_a,
                transverse_k,
                ..
            } => (32.0 * barrier_mev / (separation_a * separation_a)).max(*transverse_k),
        }
    }
}

/// Cubic softening of the ice preset relative to its harmonic c2, per A.
/// Tuned against the 1D oracle (see `ice_preset_effective_frequency` test).
pub const ICE_CUBIC_C3_PER_C2_A: f64 = -2.872;
/// Quartic confinement of the ice preset relative to c2, per A^2.
pub const ICE_CUBIC_C4_PER_C2_A2: f64 = 3.0;

/// Draw `n` exact end-to-end vectors of a harmonic model: independent
/// Gaussians with per-axis variance from the quasi-harmonic map, rotated
/// into the frame. Deterministic for a fixed seed.
pub fn sample_harmonic_exact(
    omega_cm1: [f64; 3],
    frame: [Vec3; 3],
    temperature_k: f64,
    mass_amu: f64,
    n: usize,
    seed: u64,
) -> Result<EndToEndSampleSet> {
    if !omega_cm1.iter().all(|w| *w > 0.0) {
        return Err(Error::Usage(
            "exact harmonic sampling needs positive frequencies".into(),
        ));
    }
    let sigma: Vec<f64> = omega_cm1
        .iter()
        .map(|&w| sigma2_from_omega(w, temperature_k, mass_amu).map(f64::sqrt))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut set = EndToEndSampleSet::new(temperature_k, mass_amu, Provenance::Simulated);
    set.proton_ids.reserve(n);
    set.displacements.reserve(n);
    for _ in 0..n {
        let mut x = [0.0; 3];
        for k in 0..3 {
            let amp = sigma[k] * normal.sample(&mut rng);
            x[0] += amp * frame[k][0];
            x[1] += amp * frame[k][1];
            x[2] += amp * frame[k][2];
        }
        set.push(0, x);
    }
    Ok(set)
}

/// Exact end-to-end variance of the discretized open chain (primitive
/// action, trapezoidal endpoint weights) for a 1D harmonic mode.
///
/// The discrete chain is Gaussian, so the variance is a tridiagonal
/// solve: `var = d^T A^-1 d` with `d = e_P - e_1` and
/// `A = 2a L + tau k diag(1/2, 1, ..., 1, 1/2)`. Used as the
/// deterministic reference for the Trotter-order analysis.
pub fn discrete_harmonic_end_to_end_variance(
    omega_cm1: f64,
    temperature_k: f64,
    mass_amu: f64,
    beads: usize,
) -> f64 {
    assert!(beads >= 2);
    let links = beads - 1;
    let beta = 1.0 / kb_t(temperature_k);
    let tau = beta / links as f64;
    let hbar2 = HBAR2_MEV_A2_AMU;
    let a = mass_amu / (2.0 * hbar2 * tau);
    let k = force_constant(omega_cm1, mass_amu);

    // precision matrix A (tridiagonal, SPD)
    let mut diag = vec![0.0; beads];
    let mut off = vec![-2.0 * a; beads - 1];
    for (i, d) in diag.iter_mut().enumerate() {
        let laplacian = if i == 0 || i == beads - 1 { 1.0 } else { 2.0 };
        let w = if i == 0 || i == beads - 1 { 0.5 } else { 1.0 };
        *d = 2.0 * a * laplacian + tau * k * w;
    }

    // Thomas solve A y = e_last - e_first (no pivoting needed: SPD)
    let mut rhs = vec![0.0; beads];
    rhs[0] = -1.0;
    rhs[beads - 1] = 1.0;
    for i in 1..beads {
        let m = off[i - 1] / diag[i - 1];
        diag[i] -= m * off[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= m * prev;
        off[i - 1] = m; // reuse storage for the multiplier
    }
    let mut y = vec![0.0; beads];
    y[beads - 1] = rhs[beads - 1] / diag[beads - 1];
    for i in (0..beads - 1).rev() {
        y[i] = (rhs[i] - (-2.0 * a) * y[i + 1]) / diag[i];
    }
    y[beads - 1] - y[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{accumulate_correlation_pooled, fit_principal_spectrum};
    use crate::units::PROTON_MASS_AMU;
    use approx::assert_relative_eq;

    const T: f64 = 269.0;
    const AXES: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn exact_sampler_recovers_generator_variances() {
        let omegas = [2639.0, 1164.0, 775.0];
        let set = sample_harmonic_exact(omegas, AXES, T, PROTON_MASS_AMU, 1_000_000, 42).unwrap();
        let est = accumulate_correlation_pooled(&set).unwrap();
        let spec = fit_principal_spectrum(&est.matrix, T, PROTON_MASS_AMU).unwrap();
        for k in 0..3 {
            let rel = (spec.omega_cm1[k] - omegas[k]).abs() / omegas[k];
            assert!(rel < 0.01, "omega_{k} off by {:.3}%", rel * 100.0);
        }
        // sample mean within 4 standard errors of zero
        for (k, &m) in est.mean.iter().enumerate() {
            let sigma = sigma2_from_omega(omegas[2], T, PROTON_MASS_AMU)
                .unwrap()
                .sqrt();
            let se = sigma / (set.len() as f64).sqrt();
            assert!(m.abs() < 4.0 * se, "mean[{k}] = {m}");
        }
    }

    #[test]
    fn exact_sampler_is_deterministic() {
        let a = sample_harmonic_exact([1000.0; 3], AXES, T, PROTON_MASS_AMU, 100, 7).unwrap();
        let b = sample_harmonic_exact([1000.0; 3], AXES, T, PROTON_MASS_AMU, 100, 7).unwrap();
        assert_eq!(a.displacements, b.displacements);
    }

    #[test]
    fn discrete_variance_approaches_continuum() {
        let exact = sigma2_from_omega(2639.0, T, PROTON_MASS_AMU).unwrap();
        let coarse = discrete_harmonic_end_to_end_variance(2639.0, T, PROTON_MASS_AMU, 16);
        let fine = discrete_harmonic_end_to_end_variance(2639.0, T, PROTON_MASS_AMU, 100_000);
        assert_relative_eq!(fine, exact, max_relative = 1e-7);
        assert!((coarse - exact).abs() > (fine - exact).abs());
    }

    #[test]
    fn discrete_variance_trotter_slope() {
        // error vs bead count on a log-log grid has slope -2 (P^-2 with the
        // mild P/(P-1) correction from the link count)
        let exact = sigma2_from_omega(2639.0, T, PROTON_MASS_AMU).unwrap();
        let beads = [16usize, 32, 64, 128];
        let pts: Vec<(f64, f64)> = beads
            .iter()
            .map(|&p| {
                let err = (discrete_harmonic_end_to_end_variance(2639.0, T, PROTON_MASS_AMU, p)
                    - exact)
                    .abs()
                    / exact;
                ((p as f64).ln(), err.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (slope + 2.0).abs() < 0.3,
            "Trotter slope = {slope:.3}, expected -2"
        );
    }

    #[test]
    fn free_potential_is_allowed_others_validated() {
        assert!(ModelPotential::Free.check_confining().is_ok());
        let bad = ModelPotential::Polynomial1D {
            c2: 100.0,
            c3: -500.0,
            c4: 0.0,
            axis: [1.0, 0.0, 0.0],
            transverse_k: 100.0,
        };
        assert!(bad.check_confining().is_err());
        let good = ModelPotential::ice_cubic_preset(PROTON_MASS_AMU);
        assert!(good.check_confining().is_ok());
    }

    #[test]
    fn double_well_geometry() {
        let dw = ModelPotential::DoubleWell1D {
            barrier_mev: 100.0,
            separation_a: 0.5,
            axis: [1.0, 0.0, 0.0],
            transverse_k: 1000.0,
        };
        assert_relative_eq!(dw.axis_energy(0.0), 100.0, max_relative = 1e-14);
        assert_relative_eq!(dw.axis_energy(0.25), 0.0, epsilon = 1e-12);
        assert_relative_eq!(dw.axis_energy(-0.25), 0.0, epsilon = 1e-12);
    }
}
