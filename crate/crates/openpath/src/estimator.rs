//! Estimation of correlation matrices, principal spectra and spherical
//! distributions from end-to-end displacement samples.
//!
//! The correlation matrix is the raw second moment `<x_a x_b>` with no
//! mean subtraction; the sample mean is carried along as a drift
//! diagnostic.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{principal_decomposition, SymMatrix3, Vec3};
use crate::numerics::{gauss_legendre, integrate_uniform, ks_statistic_sorted, moments, quantile_sorted};
use crate::quasiharmonic::{
    mode_kinetic_energy, omega_from_sigma2, sigma2_from_omega,
};
use crate::units::hbar2_over_2m;

/// Where a sample set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Simulated,
    Imported,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Simulated => "simulated",
            Provenance::Imported => "imported",
        }
    }
}

/// Tagged end-to-end displacement samples (A) at a single temperature.
#[derive(Debug, Clone)]
pub struct EndToEndSampleSet {
    pub proton_ids: Vec<u32>,
    pub displacements: Vec<Vec3>,
    pub temperature_k: f64,
    pub mass_amu: f64,
    pub provenance: Provenance,
}

impl EndToEndSampleSet {
    pub fn new(temperature_k: f64, mass_amu: f64, provenance: Provenance) -> Self {
        EndToEndSampleSet {
            proton_ids: Vec::new(),
            displacements: Vec::new(),
            temperature_k,
            mass_amu,
            provenance,
        }
    }

    pub fn push(&mut self, proton_id: u32, x: Vec3) {
        self.proton_ids.push(proton_id);
        self.displacements.push(x);
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    /// Distinct proton ids in ascending order.
    pub fn unique_protons(&self) -> Vec<u32> {
        let mut ids = self.proton_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.proton_ids.len() != self.displacements.len() {
            return Err(Error::Data("tag/displacement length mismatch".into()));
        }
        for x in &self.displacements {
            if !x.iter().all(|c| c.is_finite()) {
                return Err(Error::Data("non-finite displacement component".into()));
            }
        }
        Ok(())
    }
}

/// Second-moment matrix of one proton's displacements plus diagnostics.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub matrix: SymMatrix3,
    /// Sample mean displacement (drift diagnostic; not subtracted).
    pub mean: Vec3,
    pub count: usize,
}

fn correlation_of(displacements: impl Iterator<Item = Vec3>) -> (SymMatrix3, Vec3, usize) {
    let mut m = SymMatrix3::zero();
    let mut mean = [0.0; 3];
    let mut n = 0usize;
    for x in displacements {
        m.add_outer(&x, 1.0);
        mean[0] += x[0];
        mean[1] += x[1];
        mean[2] += x[2];
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        m = m.scaled(inv);
        mean = [mean[0] * inv, mean[1] * inv, mean[2] * inv];
    }
    (m, mean, n)
}

/// `C_ab = < x_a x_b >` over the samples of one proton.
pub fn accumulate_correlation(
    samples: &EndToEndSampleSet,
    proton_id: u32,
) -> Result<CorrelationEstimate> {
    samples.validate()?;
    let (matrix, mean, count) = correlation_of(
        samples
            .proton_ids
            .iter()
            .zip(&samples.displacements)
            .filter(|(id, _)| **id == proton_id)
            .map(|(_, x)| *x),
    );
    if count < 2 {
        return Err(Error::InsufficientData {
            context: "accumulate_correlation",
            needed: 2,
            got: count,
        });
    }
    Ok(CorrelationEstimate {
        matrix,
        mean,
        count,
    })
}

/// Pooled correlation over all protons in the set.
pub fn accumulate_correlation_pooled(samples: &EndToEndSampleSet) -> Result<CorrelationEstimate> {
    samples.validate()?;
    let (matrix, mean, count) = correlation_of(samples.displacements.iter().copied());
    if count < 2 {
        return Err(Error::InsufficientData {
            context: "accumulate_correlation",
            needed: 2,
            got: count,
        });
    }
    Ok(CorrelationEstimate {
        matrix,
        mean,
        count,
    })
}

/// Principal spectrum of one proton: variances, frequencies and
/// directions keyed by descending frequency (omega_1 >= omega_2 >= omega_3,
/// equivalently ascending sigma^2).
#[derive(Debug, Clone)]
pub struct PrincipalSpectrum {
    pub sigma2_a2: [f64; 3],
    pub omega_cm1: [f64; 3],
    pub directions: [Vec3; 3],
    pub temperature_k: f64,
    pub mass_amu: f64,
    /// Set when two variances coincide within 1e-8 A^2; the directions in
    /// a degenerate pair span the eigenspace but are individually
    /// arbitrary.
    pub degenerate: bool,
}

impl PrincipalSpectrum {
    /// Build directly from frequencies (cm^-1) and an orthonormal frame.
    pub fn from_omegas(
        omega_cm1: [f64; 3],
        directions: [Vec3; 3],
        temperature_k: f64,
        mass_amu: f64,
    ) -> Result<Self> {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| omega_cm1[b].partial_cmp(&omega_cm1[a]).unwrap());
        let mut omega = [0.0; 3];
        let mut dirs = [[0.0; 3]; 3];
        let mut sigma2 = [0.0; 3];
        for (k, &src) in order.iter().enumerate() {
            omega[k] = omega_cm1[src];
            dirs[k] = directions[src];
            sigma2[k] = sigma2_from_omega(omega_cm1[src], temperature_k, mass_amu)?;
        }
        let degenerate =
            (sigma2[0] - sigma2[1]).abs() < 1e-8 || (sigma2[1] - sigma2[2]).abs() < 1e-8;
        Ok(PrincipalSpectrum {
            sigma2_a2: sigma2,
            omega_cm1: omega,
            directions: dirs,
            temperature_k,
            mass_amu,
            degenerate,
        })
    }

    /// Correlation matrix `sum_k sigma_k^2 v_k v_k^T`.
    pub fn correlation_matrix(&self) -> SymMatrix3 {
        SymMatrix3::from_principal(&self.directions, &self.sigma2_a2)
    }

    /// Momentum-space correlation eigenvalues `1/sigma_k^2` (units of
    /// hbar^2, i.e. A^-2 for the wavevector p/hbar), frequency-descending.
    pub fn momentum_variances(&self) -> [f64; 3] {
        [
            1.0 / self.sigma2_a2[0],
            1.0 / self.sigma2_a2[1],
            1.0 / self.sigma2_a2[2],
        ]
    }
}

/// Fit a principal spectrum to a correlation matrix: eigenvalues are the
/// `sigma_k^2`, frequencies come from the inverse variance map.
pub fn fit_principal_spectrum(
    c: &SymMatrix3,
    temperature_k: f64,
    mass_amu: f64,
) -> Result<PrincipalSpectrum> {
    let (vals_desc, vecs_desc) = principal_decomposition(c)?;
    if vals_desc[2] <= 0.0 {
        return Err(Error::InvalidCorrelation(format!(
            "correlation matrix is singular (smallest eigenvalue {:.3e})",
            vals_desc[2]
        )));
    }
    // descending sigma^2 corresponds to ascending frequency; store by
    // descending frequency
    let sigma2 = [vals_desc[2], vals_desc[1], vals_desc[0]];
    let directions = [vecs_desc[2], vecs_desc[1], vecs_desc[0]];
    let omega = [
        omega_from_sigma2(sigma2[0], temperature_k, mass_amu)?,
        omega_from_sigma2(sigma2[1], temperature_k, mass_amu)?,
        omega_from_sigma2(sigma2[2], temperature_k, mass_amu)?,
    ];
    let degenerate = (sigma2[0] - sigma2[1]).abs() < 1e-8 || (sigma2[1] - sigma2[2]).abs() < 1e-8;
    Ok(PrincipalSpectrum {
        sigma2_a2: sigma2,
        omega_cm1: omega,
        directions,
        temperature_k,
        mass_amu,
        degenerate,
    })
}

/// Total kinetic energy in meV: `sum_k (hbar omega_k / 4) coth(...)`.
/// The equivalent route `(hbar^2/2M) sum_k 1/sigma_k^2` agrees to the
/// root-finder tolerance; see [`kinetic_energy_both`].
pub fn kinetic_energy(spectrum: &PrincipalSpectrum) -> f64 {
    spectrum
        .omega_cm1
        .iter()
        .map(|&w| mode_kinetic_energy(w, spectrum.temperature_k))
        .sum()
}

/// Both kinetic-energy routes: (frequency sum, variance sum).
pub fn kinetic_energy_both(spectrum: &PrincipalSpectrum) -> (f64, f64) {
    let via_omega = kinetic_energy(spectrum);
    let via_sigma = hbar2_over_2m(spectrum.mass_amu)
        * spectrum.sigma2_a2.iter().map(|s2| 1.0 / s2).sum::<f64>();
    (via_omega, via_sigma)
}

// ---------------------------------------------------------------------------
// Spherical distributions (Eq.-2-type angular quadrature)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    /// End-to-end displacement density over radius in A.
    EndToEnd,
    /// Momentum density over wavevector p/hbar in A^-1.
    Momentum,
}

/// Spherically averaged density on a uniform radial grid, normalized so
/// that `integral x^2 n(x) dx = 1`.
#[derive(Debug, Clone)]
pub struct RadialCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: RadialKind,
    /// Angular quadrature order that met the convergence target.
    pub angular_order: usize,
}

impl RadialCurve {
    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// `integral x^2 n(x) dx` on the curve's own grid.
    pub fn normalization(&self) -> f64 {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &n)| x * x * n)
            .collect();
        integrate_uniform(&vals, self.step())
    }

    /// `integral x^4 n(x) dx` (= sum of the three axis variances).
    pub fn second_moment(&self) -> f64 {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &n)| x * x * x * x * n)
            .collect();
        integrate_uniform(&vals, self.step())
    }
}

/// Uniform radial grid specification: `intervals + 1` points on [0, max].
#[derive(Debug, Clone, Copy)]
pub struct RadialGrid {
    pub max: f64,
    pub intervals: usize,
}

impl RadialGrid {
    pub fn points(&self) -> Vec<f64> {
        let h = self.max / self.intervals as f64;
        (0..=self.intervals).map(|i| i as f64 * h).collect()
    }
}

/// Default end-to-end grid: 0 to 1.2 A in 600 intervals.
pub const DEFAULT_END_TO_END_GRID: RadialGrid = RadialGrid {
    max: 1.2,
    intervals: 600,
};

const ANGULAR_TOL: f64 = 1e-8;
const MAX_ANGULAR_ORDER: usize = 512;

/// Spherical average of an anisotropic Gaussian with per-axis widths
/// `s = (s1, s2, s3)` evaluated on `radii`, by product Gauss-Legendre
/// (cos theta) x uniform (phi) quadrature at fixed order.
fn spherical_average_fixed_order(radii: &[f64], s: &[f64; 3], order: usize) -> Vec<f64> {
    let (u_nodes, u_weights) = gauss_legendre(order);
    let n_phi = 2 * order;
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let inv2 = [
        1.0 / (s[0] * s[0]),
        1.0 / (s[1] * s[1]),
        1.0 / (s[2] * s[2]),
    ];

    // assemble (weight, exponent coefficient) per angular node
    let mut coeffs = Vec::with_capacity(order * n_phi);
    for (u, wu) in u_nodes.iter().zip(&u_weights) {
        let ssq = 1.0 - u * u;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            let (sp, cp) = phi.sin_cos();
            let c = ssq * (cp * cp * inv2[0] + sp * sp * inv2[1]) + u * u * inv2[2];
            coeffs.push((wu * dphi, 0.5 * c));
        }
    }

    let prefactor = 1.0 / ((8.0 * std::f64::consts::PI.powi(3)).sqrt() * s[0] * s[1] * s[2]);
    radii
        .iter()
        .map(|&x| {
            let x2 = x * x;
            let integral: f64 = coeffs.iter().map(|&(w, c)| w * (-c * x2).exp()).sum();
            prefactor * integral
        })
        .collect()
}

fn spherical_average_adaptive(
    radii: &[f64],
    s: &[f64; 3],
    kind: RadialKind,
) -> Result<(Vec<f64>, usize)> {
    let mut order = 16usize;
    let mut prev = spherical_average_fixed_order(radii, s, order);
    let mut achieved = f64::INFINITY;
    while order < MAX_ANGULAR_ORDER {
        let next_order = order * 2;
        let next = spherical_average_fixed_order(radii, s, next_order);
        achieved = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = next;
        order = next_order;
        if achieved <= ANGULAR_TOL {
            return Ok((prev, order));
        }
    }
    let _ = kind;
    Err(Error::Accuracy {
        context: "spherical angular quadrature",
        achieved,
        required: ANGULAR_TOL,
    })
}

/// Spherically averaged end-to-end distribution of a principal spectrum.
///
/// `grid = None` uses the default 0..1.2 A / 600-interval grid. The curve
/// is analytically normalized; truncation of the tail by a short grid
/// shows up in [`RadialCurve::normalization`].
pub fn spherical_end_to_end(
    spectrum: &PrincipalSpectrum,
    grid: Option<RadialGrid>,
) -> Result<RadialCurve> {
    let g = grid.unwrap_or(DEFAULT_END_TO_END_GRID);
    let radii = g.points();
    let s = [
        spectrum.sigma2_a2[0].sqrt(),
        spectrum.sigma2_a2[1].sqrt(),
        spectrum.sigma2_a2[2].sqrt(),
    ];
    if !s.iter().all(|v| *v > 0.0) {
        return Err(Error::InvalidCorrelation(
            "spherical average needs strictly positive widths".into(),
        ));
    }
    let (values, angular_order) = spherical_average_adaptive(&radii, &s, RadialKind::EndToEnd)?;
    Ok(RadialCurve {
        grid: radii,
        values,
        kind: RadialKind::EndToEnd,
        angular_order,
    })
}

/// Anisotropic momentum density evaluator, `nu(p) ~ exp(-p.C p / 2 hbar^2)`.
///
/// Momenta are wavevectors `p/hbar` in A^-1; along principal direction k
/// the variance is `1/sigma_k^2`.
#[derive(Debug, Clone)]
pub struct MomentumAxis {
    pub directions: [Vec3; 3],
    /// Per-axis momentum standard deviations `1/sigma_k` in A^-1.
    pub widths: [f64; 3],
}

impl MomentumAxis {
    /// Normalized 3D momentum density at wavevector `kappa` (A^-1).
    pub fn density(&self, kappa: &Vec3) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).powf(1.5)
            * self.widths[0]
            * self.widths[1]
            * self.widths[2];
        let mut q = 0.0;
        for k in 0..3 {
            let t = crate::linalg::dot(kappa, &self.directions[k]) / self.widths[k];
            q += t * t;
        }
        (-0.5 * q).exp() / norm
    }
}

#[derive(Debug, Clone)]
pub struct MomentumDistribution {
    pub spherical: RadialCurve,
    pub directional: MomentumAxis,
}

/// Spherically averaged momentum distribution plus the directional
/// evaluator. Default grid spans 8 momentum widths of the broadest axis
/// in 800 intervals.
pub fn momentum_distribution(
    spectrum: &PrincipalSpectrum,
    grid: Option<RadialGrid>,
) -> Result<MomentumDistribution> {
    let widths = [
        1.0 / spectrum.sigma2_a2[0].sqrt(),
        1.0 / spectrum.sigma2_a2[1].sqrt(),
        1.0 / spectrum.sigma2_a2[2].sqrt(),
    ];
    let g = grid.unwrap_or_else(|| RadialGrid {
        max: 8.0 * widths[0].max(widths[1]).max(widths[2]),
        intervals: 800,
    });
    let radii = g.points();
    let (values, angular_order) = spherical_average_adaptive(&radii, &widths, RadialKind::Momentum)?;
    Ok(MomentumDistribution {
        spherical: RadialCurve {
            grid: radii,
            values,
            kind: RadialKind::Momentum,
            angular_order,
        },
        directional: MomentumAxis {
            directions: spectrum.directions,
            widths,
        },
    })
}

// ---------------------------------------------------------------------------
// Gaussianity diagnostics
// ---------------------------------------------------------------------------

pub const QUANTILE_LEVELS: [f64; 9] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99];

#[derive(Debug, Clone)]
pub struct AxisGaussianity {
    /// Principal-axis index (frequency-descending, matching the spectrum).
    pub axis: usize,
    pub sigma_a: f64,
    /// (level, empirical quantile, Gaussian quantile) triples.
    pub quantiles: Vec<(f64, f64, f64)>,
    pub max_quantile_gap_a: f64,
    pub ks_statistic: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub bimodal: bool,
}

#[derive(Debug, Clone)]
pub struct GaussianityReport {
    pub axes: Vec<AxisGaussianity>,
    pub sample_count: usize,
    /// Set when fewer than 1000 samples were available.
    pub low_statistics: bool,
}

/// Per-axis quantile table and KS statistics of the projected samples
/// against the fitted Gaussians.
pub fn gaussianity_report(
    samples: &EndToEndSampleSet,
    spectrum: &PrincipalSpectrum,
) -> Result<GaussianityReport> {
    samples.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData {
            context: "gaussianity_report",
            needed: 2,
            got: 0,
        });
    }
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut axes = Vec::with_capacity(3);
    for k in 0..3 {
        let v = spectrum.directions[k];
        let mut proj: Vec<f64> = samples
            .displacements
            .iter()
            .map(|x| crate::linalg::dot(x, &v))
            .collect();
        proj.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sigma = spectrum.sigma2_a2[k].sqrt();

        let mut quantiles = Vec::with_capacity(QUANTILE_LEVELS.len());
        let mut max_gap = 0.0f64;
        for &q in &QUANTILE_LEVELS {
            let emp = quantile_sorted(&proj, q);
            let gauss = sigma * unit_normal.inverse_cdf(q);
            max_gap = max_gap.max((emp - gauss).abs());
            quantiles.push((q, emp, gauss));
        }
        let ks = ks_statistic_sorted(&proj, |x| unit_normal.cdf(x / sigma));
        let (_, _, skew, kurt) = moments(&proj);
        axes.push(AxisGaussianity {
            axis: k,
            sigma_a: sigma,
            quantiles,
            max_quantile_gap_a: max_gap,
            ks_statistic: ks,
            skewness: skew,
            excess_kurtosis: kurt,
            // symmetric bimodal distributions have strongly negative excess
            // kurtosis; combined with a large KS this flags a double well
            bimodal: kurt < -0.5 && ks > 0.05,
        });
    }
    Ok(GaussianityReport {
        axes,
        sample_count: samples.len(),
        low_statistics: samples.len() < 1000,
    })
}

// ---------------------------------------------------------------------------
// Statistical error estimates for fitted frequencies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FrequencyErrors {
    /// Leave-one-proton-out jackknife standard error per frequency (cm^-1).
    pub jackknife_cm1: [f64; 3],
    /// Block-over-samples standard error per frequency (cm^-1).
    pub blocking_cm1: [f64; 3],
    pub blocks: usize,
}

fn omegas_of_matrix(c: &SymMatrix3, t: f64, m: f64) -> Option<[f64; 3]> {
    fit_principal_spectrum(c, t, m).ok().map(|s| s.omega_cm1)
}

/// Jackknife-over-protons and block-over-samples error bars for the pooled
/// principal frequencies. Protons or blocks whose reduced fit fails are
/// skipped.
pub fn frequency_errors(samples: &EndToEndSampleSet, blocks: usize) -> Result<FrequencyErrors> {
    samples.validate()?;
    let (t, m) = (samples.temperature_k, samples.mass_amu);
    let protons = samples.unique_protons();

    // jackknife over protons
    let mut jack = [0.0; 3];
    if protons.len() >= 2 {
        let mut reduced = Vec::new();
        for leave in &protons {
            let (c, _, n) = correlation_of(
                samples
                    .proton_ids
                    .iter()
                    .zip(&samples.displacements)
                    .filter(|(id, _)| **id != *leave)
                    .map(|(_, x)| *x),
            );
            if n >= 2 {
                if let Some(w) = omegas_of_matrix(&c, t, m) {
                    reduced.push(w);
                }
            }
        }
        let nj = reduced.len() as f64;
        if reduced.len() >= 2 {
            for k in 0..3 {
                let mean = reduced.iter().map(|w| w[k]).sum::<f64>() / nj;
                let ss = reduced.iter().map(|w| (w[k] - mean).powi(2)).sum::<f64>();
                jack[k] = ((nj - 1.0) / nj * ss).sqrt();
            }
        }
    }

    // blocking over samples (in recorded order)
    let blocks = blocks.max(2);
    let n = samples.len();
    let mut block_omegas = Vec::new();
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        if hi - lo < 2 {
            continue;
        }
        let (c, _, cnt) = correlation_of(samples.displacements[lo..hi].iter().copied());
        if cnt >= 2 {
            if let Some(w) = omegas_of_matrix(&c, t, m) {
                block_omegas.push(w);
            }
        }
    }
    let mut blocking = [0.0; 3];
    let nb = block_omegas.len() as f64;
    if block_omegas.len() >= 2 {
        for k in 0..3 {
            let mean = block_omegas.iter().map(|w| w[k]).sum::<f64>() / nb;
            let var = block_omegas.iter().map(|w| (w[k] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            blocking[k] = (var / nb).sqrt();
        }
    }

    Ok(FrequencyErrors {
        jackknife_cm1: jack,
        blocking_cm1: blocking,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PROTON_MASS_AMU;
    use approx::assert_relative_eq;

    const T: f64 = 269.0;

    fn table_spectrum() -> PrincipalSpectrum {
        PrincipalSpectrum::from_omegas(
            [2639.0, 1164.0, 775.0],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            T,
            PROTON_MASS_AMU,
        )
        .unwrap()
    }

    #[test]
    fn two_point_correlation() {
        let mut set = EndToEndSampleSet::new(T, PROTON_MASS_AMU, Provenance::Imported);
        let a = 0.3;
        set.push(7, [a, 0.0, 0.0]);
        set.push(7, [-a, 0.0, 0.0]);
        let est = accumulate_correlation(&set, 7).unwrap();
        assert_relative_eq!(est.matrix.xx, a * a, max_relative = 1e-14);
        assert_eq!(est.matrix.yy, 0.0);
        assert_eq!(est.mean, [0.0, 0.0, 0.0]);
        // a single sample is not enough
        set.push(8, [0.1, 0.0, 0.0]);
        assert!(accumulate_correlation(&set, 8).is_err());
    }

    #[test]
    fn identical_samples_give_rank_one() {
        let mut set = EndToEndSampleSet::new(T, PROTON_MASS_AMU, Provenance::Imported);
        let x = [0.1, -0.2, 0.05];
        for _ in 0..5 {
            set.push(0, x);
        }
        let est = accumulate_correlation(&set, 0).unwrap();
        let mut expect = SymMatrix3::zero();
        expect.add_outer(&x, 1.0);
        assert_relative_eq!(est.matrix.xx, expect.xx, max_relative = 1e-14);
        assert_relative_eq!(est.matrix.xy, expect.xy, max_relative = 1e-14);
        let eig = est.matrix.eigh();
        assert!(eig.eigenvalues[0].abs() < 1e-15 && eig.eigenvalues[1].abs() < 1e-15);
        assert!(eig.eigenvalues[2] > 0.0);
    }

    #[test]
    fn table_variances_give_table_frequencies() {
        let c = SymMatrix3::diagonal([0.025371, 0.057292, 0.083692]);
        let spec = fit_principal_spectrum(&c, T, PROTON_MASS_AMU).unwrap();
        assert!((spec.omega_cm1[0] - 2639.0).abs() < 1.0);
        assert!((spec.omega_cm1[1] - 1164.0).abs() < 1.0);
        assert!((spec.omega_cm1[2] - 775.0).abs() < 1.0);
        // sigma^2 stored ascending alongside descending frequency
        assert!(spec.sigma2_a2[0] < spec.sigma2_a2[1] && spec.sigma2_a2[1] < spec.sigma2_a2[2]);
    }

    #[test]
    fn isotropic_matrix_is_degenerate_with_equal_frequencies() {
        let c = SymMatrix3::diagonal([0.05, 0.05, 0.05]);
        let spec = fit_principal_spectrum(&c, T, PROTON_MASS_AMU).unwrap();
        assert!(spec.degenerate);
        assert_relative_eq!(spec.omega_cm1[0], spec.omega_cm1[2], max_relative = 1e-9);
    }

    #[test]
    fn kinetic_energy_table_values() {
        let ek = kinetic_energy(&table_spectrum());
        assert!((ek - 142.8).abs() < 0.1, "E_K = {ek}");
        let harm = PrincipalSpectrum::from_omegas(
            [3017.6, 1172.5, 870.3],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            T,
            PROTON_MASS_AMU,
        )
        .unwrap();
        let ek = kinetic_energy(&harm);
        assert!((ek - 157.5).abs() < 0.3, "E_K = {ek}");
    }

    #[test]
    fn kinetic_energy_routes_agree() {
        let (a, b) = kinetic_energy_both(&table_spectrum());
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    #[test]
    fn kinetic_energy_monotone_in_each_frequency() {
        let base = table_spectrum();
        let ek0 = kinetic_energy(&base);
        for k in 0..3 {
            let mut omega = base.omega_cm1;
            omega[k] += 50.0;
            let spec = PrincipalSpectrum::from_omegas(
                omega,
                base.directions,
                base.temperature_k,
                base.mass_amu,
            )
            .unwrap();
            assert!(kinetic_energy(&spec) > ek0);
        }
    }

    #[test]
    fn isotropic_closed_form_agreement() {
        let spec = PrincipalSpectrum::from_omegas(
            [1000.0, 1000.0, 1000.0],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            T,
            PROTON_MASS_AMU,
        )
        .unwrap();
        let curve = spherical_end_to_end(&spec, None).unwrap();
        let s = spec.sigma2_a2[0].sqrt();
        for (x, n) in curve.grid.iter().zip(&curve.values) {
            let closed = (2.0 / std::f64::consts::PI).sqrt() / (s * s * s)
                * (-0.5 * x * x / (s * s)).exp();
            assert!(
                (n - closed).abs() <= 1e-8,
                "x = {x}, err = {:.3e}",
                (n - closed).abs()
            );
        }
    }

    #[test]
    fn spherical_moments() {
        let spec = table_spectrum();
        // extended grid so the tail is captured
        let curve = spherical_end_to_end(
            &spec,
            Some(RadialGrid {
                max: 8.0 * spec.sigma2_a2[2].sqrt(),
                intervals: 1200,
            }),
        )
        .unwrap();
        assert!(
            (curve.normalization() - 1.0).abs() < 1e-6,
            "normalization = {}",
            curve.normalization()
        );
        let want: f64 = spec.sigma2_a2.iter().sum();
        assert_relative_eq!(curve.second_moment(), want, max_relative = 1e-6);
    }

    #[test]
    fn angular_order_doubling_is_converged() {
        let spec = table_spectrum();
        let s = [
            spec.sigma2_a2[0].sqrt(),
            spec.sigma2_a2[1].sqrt(),
            spec.sigma2_a2[2].sqrt(),
        ];
        let radii = DEFAULT_END_TO_END_GRID.points();
        let curve = spherical_end_to_end(&spec, None).unwrap();
        let doubled = spherical_average_fixed_order(&radii, &s, curve.angular_order * 2);
        let max_diff = curve
            .values
            .iter()
            .zip(&doubled)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-8, "doubling changed curve by {max_diff:.3e}");
    }

    #[test]
    fn momentum_kinetic_energy_and_fourier_pair() {
        let spec = table_spectrum();
        let dist = momentum_distribution(&spec, None).unwrap();
        // <p^2>/2M from the spherical momentum curve
        let ek = hbar2_over_2m(PROTON_MASS_AMU) * dist.spherical.second_moment();
        assert!((ek - 143.0).abs() < 2.0, "E_K from curve = {ek}");
        // position/momentum variance product is 1 (hbar^2 in physical units)
        for k in 0..3 {
            let prod = spec.sigma2_a2[k] * dist.directional.widths[k] * dist.directional.widths[k];
            assert_relative_eq!(prod, 1.0, max_relative = 1e-12);
        }
        // directions coincide for C and C^-1
        for k in 0..3 {
            assert_eq!(spec.directions[k], dist.directional.directions[k]);
        }
    }

    #[test]
    fn maxwell_boltzmann_limit() {
        // sigma^2 at the free-particle bound makes the momentum distribution
        // classical Maxwell-Boltzmann at T
        let spec = PrincipalSpectrum::from_omegas(
            [0.0, 0.0, 0.0],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            T,
            PROTON_MASS_AMU,
        )
        .unwrap();
        let dist = momentum_distribution(&spec, None).unwrap();
        let ek = hbar2_over_2m(PROTON_MASS_AMU) * dist.spherical.second_moment();
        assert_relative_eq!(ek, 1.5 * crate::units::kb_t(T), max_relative = 1e-5);
    }

    #[test]
    fn gaussianity_of_mirror_symmetric_input() {
        let spec = table_spectrum();
        let mut set = EndToEndSampleSet::new(T, PROTON_MASS_AMU, Provenance::Imported);
        // deterministic symmetric cloud
        let mut state = 1u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..4000 {
            let x = [0.3 * next(), 0.3 * next(), 0.3 * next()];
            set.push(0, x);
            set.push(0, [-x[0], -x[1], -x[2]]);
            let _ = i;
        }
        let report = gaussianity_report(&set, &spec).unwrap();
        for ax in &report.axes {
            assert!(ax.skewness.abs() < 1e-12, "skew = {}", ax.skewness);
        }
        assert!(!report.low_statistics);
    }
}
