//! Open-chain path-integral Monte Carlo with the primitive action.
//!
//! A chain of P beads spans the full imaginary time beta through P-1
//! links of duration tau = beta/(P-1); the Boltzmann exponent is
//!
//! `S = sum_links M |dr|^2 / (2 hbar^2 tau) + tau * sum' V(r_s)`
//!
//! with trapezoidal endpoint weights (1/2 on the first and last bead).
//! Interior segments are redrawn by exact free-particle (Levy) bridges,
//! chain ends by free propagation, so acceptance only involves the
//! potential action. The recorded observable is the end-to-end vector
//! `r_P - r_1`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{EndToEndSampleSet, Provenance};
use crate::linalg::Vec3;
use crate::numerics::integrated_autocorrelation_time;
use crate::units::{kb_t, omega_cm1_from_dyn_eigenvalue, CM1_TO_MEV, HBAR2_MEV_A2_AMU};

use super::ModelPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveScheme {
    /// Levy-bridge staging over interior segments plus endpoint regrowth
    /// and whole-chain translation.
    Staging { segment_links: usize },
    /// Single-bead Gaussian displacements only.
    SingleBead,
}

#[derive(Debug, Clone)]
pub struct OpenChainConfig {
    /// Bead count P (>= 8); the chain has P-1 links.
    pub beads: usize,
    pub temperature_k: f64,
    pub mass_amu: f64,
    pub scheme: MoveScheme,
    /// Total MC sweeps including burn-in.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Record the end-to-end vector every `thinning` sweeps.
    pub thinning: usize,
    pub seed: u64,
    /// Independent chains, merged in chain-id order.
    pub chains: usize,
}

impl OpenChainConfig {
    pub fn new(beads: usize, temperature_k: f64, mass_amu: f64, seed: u64) -> Self {
        let segment = (beads / 8).clamp(2, beads.saturating_sub(1).max(2));
        OpenChainConfig {
            beads,
            temperature_k,
            mass_amu,
            scheme: MoveScheme::Staging {
                segment_links: segment,
            },
            sweeps: 0,
            burn_in: 2000,
            thinning: 4,
            seed,
            chains: 1,
        }
    }

    /// Set sweeps so that `n` samples are kept after burn-in and thinning,
    /// split evenly over the configured chains.
    pub fn with_target_samples(mut self, n: usize) -> Self {
        let per_chain = n.div_ceil(self.chains);
        self.sweeps = self.burn_in + per_chain * self.thinning;
        self
    }

    pub fn kept_per_chain(&self) -> usize {
        (self.sweeps.saturating_sub(self.burn_in)) / self.thinning
    }

    fn validate(&self) -> Result<()> {
        if self.beads < 8 {
            return Err(Error::Usage(format!(
                "open chain needs at least 8 beads, got {}",
                self.beads
            )));
        }
        if !(self.temperature_k > 0.0) || !(self.mass_amu > 0.0) {
            return Err(Error::Usage(
                "temperature and mass must be positive".into(),
            ));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::Usage(
                "sweeps must exceed burn-in; use with_target_samples".into(),
            ));
        }
        if self.thinning == 0 || self.chains == 0 {
            return Err(Error::Usage("thinning and chains must be >= 1".into()));
        }
        if let MoveScheme::Staging { segment_links } = self.scheme {
            if segment_links < 2 || segment_links > self.beads - 1 {
                return Err(Error::Usage(format!(
                    "staging segment must be in [2, {}], got {segment_links}",
                    self.beads - 1
                )));
            }
        }
        Ok(())
    }
}

/// One logged Metropolis proposal, for detailed-balance audits.
#[derive(Debug, Clone, Copy)]
pub struct ProposalRecord {
    pub delta_action: f64,
    pub uniform: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MoveStats {
    pub attempts: u64,
    pub accepts: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepts as f64 / self.attempts as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplerDiagnostics {
    pub staging: MoveStats,
    pub endpoint: MoveStats,
    pub translate: MoveStats,
    pub single_bead: MoveStats,
    /// Integrated autocorrelation time of the end-to-end x component,
    /// in sweeps (chain 0).
    pub autocorrelation_sweeps: f64,
    pub kept_samples: usize,
    pub warnings: Vec<String>,
    /// First proposals of chain 0 (up to 1000), for exact replay of the
    /// acceptance rule.
    pub audit: Vec<ProposalRecord>,
    /// Quantiles of bead displacement relative to the chain centroid along
    /// the potential axis: (1%, 50%, 99%) in A.
    pub centroid_span_a: (f64, f64, f64),
}

struct Chain<'a> {
    potential: &'a ModelPotential,
    beads: Vec<Vec3>,
    tau: f64,
    link_var: f64,
    trans_step: f64,
    bead_step: f64,
    rng: ChaCha12Rng,
    stats: [MoveStats; 4], // staging, endpoint, translate, single-bead
    audit: Vec<ProposalRecord>,
    record_audit: bool,
}

const AUDIT_CAP: usize = 1000;

impl<'a> Chain<'a> {
    fn new(potential: &'a ModelPotential, config: &OpenChainConfig, chain_id: u64) -> Self {
        let links = (config.beads - 1) as f64;
        let beta = 1.0 / kb_t(config.temperature_k);
        let tau = beta / links;
        let link_var = HBAR2_MEV_A2_AMU * tau / config.mass_amu;

        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(chain_id);

        // free-particle initial path from the origin
        let normal = Normal::new(0.0, link_var.sqrt()).expect("normal");
        let mut beads = Vec::with_capacity(config.beads);
        let mut r = [0.0f64; 3];
        beads.push(r);
        for _ in 1..config.beads {
            for c in r.iter_mut() {
                *c += normal.sample(&mut rng);
            }
            beads.push(r);
        }

        // fixed proposal scales from the free-particle thermal width
        let thermal = (HBAR2_MEV_A2_AMU * beta / config.mass_amu).sqrt();
        Chain {
            potential,
            beads,
            tau,
            link_var,
            trans_step: 0.25 * thermal,
            bead_step: 0.5 * link_var.sqrt(),
            rng,
            stats: Default::default(),
            audit: Vec::new(),
            record_audit: chain_id == 0,
        }
    }

    /// Metropolis acceptance with an always-consumed uniform draw so the
    /// audit log can replay the rule exactly.
    fn metropolis(&mut self, delta_action: f64, kind: usize) -> bool {
        let u: f64 = self.rng.random();
        let accepted = u < (-delta_action).exp();
        self.stats[kind].attempts += 1;
        if accepted {
            self.stats[kind].accepts += 1;
        }
        if self.record_audit && self.audit.len() < AUDIT_CAP {
            self.audit.push(ProposalRecord {
                delta_action,
                uniform: u,
                accepted,
            });
        }
        accepted
    }

    fn potential_weight(&self, bead: usize) -> f64 {
        if bead == 0 || bead == self.beads.len() - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Levy-bridge redraw of beads start+1 .. start+links-1 between fixed
    /// anchors; accept on the potential-action change.
    fn staging_move(&mut self, start: usize, links: usize) {
        let normal = Normal::new(0.0, 1.0).expect("normal");
        let end = start + links;
        let old: Vec<Vec3> = self.beads[start + 1..end].to_vec();
        let mut old_pot = 0.0;
        for b in &old {
            old_pot += self.potential.energy(b);
        }

        let mut new = Vec::with_capacity(links - 1);
        let mut prev = self.beads[start];
        let target = self.beads[end];
        for j in 1..links {
            let remain = (links - j) as f64;
            let w = 1.0 / (remain + 1.0);
            let sd = (self.link_var * remain * w).sqrt();
            let mut r = [0.0; 3];
            for d in 0..3 {
                let mean = (remain * prev[d] + target[d]) * w;
                r[d] = mean + sd * normal.sample(&mut self.rng);
            }
            new.push(r);
            prev = r;
        }
        let mut new_pot = 0.0;
        for b in &new {
            new_pot += self.potential.energy(b);
        }

        let delta = self.tau * (new_pot - old_pot);
        if self.metropolis(delta, 0) {
            self.beads[start + 1..end].copy_from_slice(&new);
        }
    }

    /// Regrow `links` beads from a free end by exact free propagation.
    fn endpoint_move(&mut self, tail: bool, links: usize) {
        let normal = Normal::new(0.0, self.link_var.sqrt()).expect("normal");
        let n = self.beads.len();
        let (anchor, indices): (usize, Vec<usize>) = if tail {
            (n - 1 - links, ((n - links)..n).collect())
        } else {
            (links, (0..links).rev().collect())
        };

        let mut old_pot = 0.0;
        for &i in &indices {
            old_pot += self.potential_weight(i) * self.potential.energy(&self.beads[i]);
        }
        let mut prev = self.beads[anchor];
        let mut new = Vec::with_capacity(links);
        for _ in 0..links {
            let mut r = prev;
            for c in r.iter_mut() {
                *c += normal.sample(&mut self.rng);
            }
            new.push(r);
            prev = r;
        }
        let mut new_pot = 0.0;
        for (&i, b) in indices.iter().zip(&new) {
            new_pot += self.potential_weight(i) * self.potential.energy(b);
        }

        let delta = self.tau * (new_pot - old_pot);
        if self.metropolis(delta, 1) {
            for (&i, b) in indices.iter().zip(&new) {
                self.beads[i] = *b;
            }
        }
    }

    /// Rigid translation of the whole chain.
    fn translate_move(&mut self) {
        let normal = Normal::new(0.0, self.trans_step).expect("normal");
        let shift = [
            normal.sample(&mut self.rng),
            normal.sample(&mut self.rng),
            normal.sample(&mut self.rng),
        ];
        let mut delta = 0.0;
        for (i, b) in self.beads.iter().enumerate() {
            let w = if i == 0 || i == self.beads.len() - 1 {
                0.5
            } else {
                1.0
            };
            let moved = [b[0] + shift[0], b[1] + shift[1], b[2] + shift[2]];
            delta += w * (self.potential.energy(&moved) - self.potential.energy(b));
        }
        if self.metropolis(self.tau * delta, 2) {
            for b in self.beads.iter_mut() {
                b[0] += shift[0];
                b[1] += shift[1];
                b[2] += shift[2];
            }
        }
    }

    /// Gaussian displacement of one bead; springs enter the action here.
    fn single_bead_move(&mut self, i: usize) {
        let normal = Normal::new(0.0, self.bead_step).expect("normal");
        let old = self.beads[i];
        let mut new = old;
        for c in new.iter_mut() {
            *c += normal.sample(&mut self.rng);
        }
        let n = self.beads.len();
        let mut delta = 0.0;
        let spring = 1.0 / (2.0 * self.link_var);
        if i > 0 {
            let p = self.beads[i - 1];
            delta += spring * (dist2(&new, &p) - dist2(&old, &p));
        }
        if i + 1 < n {
            let q = self.beads[i + 1];
            delta += spring * (dist2(&new, &q) - dist2(&old, &q));
        }
        delta += self.tau
            * self.potential_weight(i)
            * (self.potential.energy(&new) - self.potential.energy(&old));
        if self.metropolis(delta, 3) {
            self.beads[i] = new;
        }
    }

    fn sweep(&mut self, scheme: MoveScheme) {
        let n = self.beads.len();
        match scheme {
            MoveScheme::Staging { segment_links } => {
                let seg = segment_links.min(n - 1);
                let n_staging = ((n - 2) / (seg - 1).max(1)).max(1);
                for _ in 0..n_staging {
                    let start = self.rng.random_range(0..n - seg);
                    self.staging_move(start, seg);
                }
                let max_regrow = seg.min(n - 2);
                let l1 = self.rng.random_range(1..=max_regrow);
                self.endpoint_move(true, l1);
                let l2 = self.rng.random_range(1..=max_regrow);
                self.endpoint_move(false, l2);
                self.translate_move();
            }
            MoveScheme::SingleBead => {
                for _ in 0..n {
                    let i = self.rng.random_range(0..n);
                    self.single_bead_move(i);
                }
            }
        }
    }

    fn end_to_end(&self) -> Vec3 {
        let n = self.beads.len();
        [
            self.beads[n - 1][0] - self.beads[0][0],
            self.beads[n - 1][1] - self.beads[0][1],
            self.beads[n - 1][2] - self.beads[0][2],
        ]
    }
}

#[inline]
fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

struct ChainOutput {
    samples: Vec<Vec3>,
    stats: [MoveStats; 4],
    audit: Vec<ProposalRecord>,
    autocorr_series: Vec<f64>,
    centroid_offsets: Vec<f64>,
}

fn run_chain(potential: &ModelPotential, config: &OpenChainConfig, chain_id: u64) -> ChainOutput {
    let mut chain = Chain::new(potential, config, chain_id);
    let mut samples = Vec::with_capacity(config.kept_per_chain());
    let mut series = Vec::new();
    let mut centroid_offsets = Vec::new();
    let axis = potential.axis();
    for sweep in 0..config.sweeps {
        chain.sweep(config.scheme);
        if sweep >= config.burn_in {
            let done = sweep - config.burn_in;
            if chain_id == 0 && series.len() < 8192 {
                series.push(chain.end_to_end()[0]);
            }
            if done % config.thinning == 0 && samples.len() < config.kept_per_chain() {
                samples.push(chain.end_to_end());
                // bead cloud relative to the centroid, projected on the axis
                if chain_id == 0 && centroid_offsets.len() < 65536 {
                    let n = chain.beads.len() as f64;
                    let mut centroid = 0.0;
                    for b in &chain.beads {
                        centroid += crate::linalg::dot(b, &axis);
                    }
                    centroid /= n;
                    for b in &chain.beads {
                        centroid_offsets.push(crate::linalg::dot(b, &axis) - centroid);
                    }
                }
            }
        }
    }
    ChainOutput {
        samples,
        stats: chain.stats,
        audit: chain.audit,
        autocorr_series: series,
        centroid_offsets,
    }
}

/// Metropolis sampling of the open chain; returns the end-to-end sample
/// set (one tag per chain) and run diagnostics. Deterministic for a fixed
/// seed, independent of thread count.
pub fn sample_open_pimc(
    potential: &ModelPotential,
    config: &OpenChainConfig,
) -> Result<(EndToEndSampleSet, SamplerDiagnostics)> {
    config.validate()?;
    potential.check_confining()?;

    let mut warnings = Vec::new();
    let kmax = potential.max_curvature();
    if kmax > 0.0 {
        let omega = omega_cm1_from_dyn_eigenvalue(kmax / config.mass_amu);
        let beta_hw = omega * CM1_TO_MEV / kb_t(config.temperature_k);
        let ratio = beta_hw / (config.beads - 1) as f64;
        if ratio > 0.5 {
            warnings.push(format!(
                "Trotter sanity: beta*hbar*omega_max/links = {ratio:.2} > 0.5; increase beads"
            ));
        }
    }

    let outputs: Vec<ChainOutput> = (0..config.chains as u64)
        .into_par_iter()
        .map(|id| run_chain(potential, config, id))
        .collect();

    let mut set = EndToEndSampleSet::new(
        config.temperature_k,
        config.mass_amu,
        Provenance::Simulated,
    );
    let mut stats: [MoveStats; 4] = Default::default();
    for (id, out) in outputs.iter().enumerate() {
        for x in &out.samples {
            set.push(id as u32, *x);
        }
        for (acc, s) in stats.iter_mut().zip(&out.stats) {
            acc.attempts += s.attempts;
            acc.accepts += s.accepts;
        }
    }

    let names = ["staging", "endpoint", "translation", "single-bead"];
    for (name, s) in names.iter().zip(&stats) {
        if s.attempts > 0 {
            let r = s.rate();
            if !(0.05..=0.95).contains(&r) {
                warnings.push(format!(
                    "{name} acceptance {:.1}% outside [5%, 95%]; tune segment length or steps",
                    100.0 * r
                ));
            }
        }
    }

    let first = &outputs[0];
    let mut offsets = first.centroid_offsets.clone();
    let span = if offsets.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (
            crate::numerics::quantile_sorted(&offsets, 0.01),
            crate::numerics::quantile_sorted(&offsets, 0.50),
            crate::numerics::quantile_sorted(&offsets, 0.99),
        )
    };

    let diagnostics = SamplerDiagnostics {
        staging: stats[0].clone(),
        endpoint: stats[1].clone(),
        translate: stats[2].clone(),
        single_bead: stats[3].clone(),
        autocorrelation_sweeps: integrated_autocorrelation_time(&first.autocorr_series),
        kept_samples: set.len(),
        warnings,
        audit: first.audit.clone(),
        centroid_span_a: span,
    };
    Ok((set, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::accumulate_correlation_pooled;
    use crate::quasiharmonic::sigma2_from_omega;
    use crate::units::PROTON_MASS_AMU;

    const T: f64 = 269.0;

    fn variance_1d(set: &EndToEndSampleSet, axis: usize) -> f64 {
        let n = set.len() as f64;
        set.displacements.iter().map(|x| x[axis] * x[axis]).sum::<f64>() / n
    }

    #[test]
    fn free_particle_end_to_end_variance() {
        let config = OpenChainConfig::new(16, T, PROTON_MASS_AMU, 11).with_target_samples(40_000);
        let (set, diag) = sample_open_pimc(&ModelPotential::Free, &config).unwrap();
        let want = 2.0 * crate::units::hbar2_over_2m(PROTON_MASS_AMU) / kb_t(T);
        for axis in 0..3 {
            let got = variance_1d(&set, axis);
            let rel = (got - want).abs() / want;
            assert!(rel < 0.03, "axis {axis}: sigma2 {got:.5} vs {want:.5}");
        }
        assert!(diag.kept_samples == 40_000);
    }

    #[test]
    fn harmonic_chain_matches_discrete_law() {
        // the sampler samples the discretized action: compare against the
        // exact Gaussian law of the discrete chain at modest P
        let beads = 16;
        let omega = 2639.0;
        let pot = ModelPotential::harmonic_from_omegas(
            [omega, omega, omega],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            PROTON_MASS_AMU,
        );
        let config =
            OpenChainConfig::new(beads, T, PROTON_MASS_AMU, 23).with_target_samples(60_000);
        let (set, diag) = sample_open_pimc(&pot, &config).unwrap();
        let want = super::super::discrete_harmonic_end_to_end_variance(
            omega,
            T,
            PROTON_MASS_AMU,
            beads,
        );
        let got = variance_1d(&set, 0);
        // 3 standard errors with a conservative autocorrelation allowance
        let n_eff = set.len() as f64 / (2.0 * diag.autocorrelation_sweeps).max(1.0);
        let tol = 3.0 * want * (2.0 / n_eff).sqrt();
        assert!(
            (got - want).abs() < tol,
            "discrete-law mismatch: {got:.6} vs {want:.6} (tol {tol:.6}, tau {:.1})",
            diag.autocorrelation_sweeps
        );
    }

    #[test]
    fn audit_replays_metropolis_rule() {
        let pot = ModelPotential::ice_cubic_preset(PROTON_MASS_AMU);
        let config = OpenChainConfig::new(32, T, PROTON_MASS_AMU, 5).with_target_samples(2_000);
        let (_, diag) = sample_open_pimc(&pot, &config).unwrap();
        assert_eq!(diag.audit.len(), 1000);
        for rec in &diag.audit {
            let should_accept = rec.uniform < (-rec.delta_action).exp();
            assert_eq!(rec.accepted, should_accept);
        }
    }

    #[test]
    fn deterministic_across_repeat_runs() {
        let pot = ModelPotential::ice_cubic_preset(PROTON_MASS_AMU);
        let config = OpenChainConfig::new(16, T, PROTON_MASS_AMU, 99)
            .with_target_samples(500);
        let (a, _) = sample_open_pimc(&pot, &config).unwrap();
        let (b, _) = sample_open_pimc(&pot, &config).unwrap();
        assert_eq!(a.displacements, b.displacements);
    }

    #[test]
    fn multi_chain_merge_is_ordered_and_deterministic() {
        let pot = ModelPotential::ice_cubic_preset(PROTON_MASS_AMU);
        let mut config = OpenChainConfig::new(16, T, PROTON_MASS_AMU, 99);
        config.chains = 4;
        let config = config.with_target_samples(2000);
        let (a, _) = sample_open_pimc(&pot, &config).unwrap();
        let (b, _) = sample_open_pimc(&pot, &config).unwrap();
        assert_eq!(a.displacements, b.displacements);
        assert_eq!(a.unique_protons(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_bead_scheme_works() {
        let pot = ModelPotential::harmonic_from_omegas(
            [800.0, 800.0, 800.0],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            PROTON_MASS_AMU,
        );
        let mut config = OpenChainConfig::new(16, T, PROTON_MASS_AMU, 3);
        config.scheme = MoveScheme::SingleBead;
        config.burn_in = 5000;
        config.thinning = 10;
        let config = config.with_target_samples(20_000);
        let (set, _) = sample_open_pimc(&pot, &config).unwrap();
        let want = super::super::discrete_harmonic_end_to_end_variance(
            800.0,
            T,
            PROTON_MASS_AMU,
            16,
        );
        let got = variance_1d(&set, 0);
        assert!(
            (got - want).abs() / want < 0.1,
            "single-bead sigma2 {got:.5} vs {want:.5}"
        );
    }

    #[test]
    fn non_confining_rejected_and_bad_config_rejected() {
        let bad = ModelPotential::Polynomial1D {
            c2: -10.0,
            c3: 0.0,
            c4: 0.0,
            axis: [1.0, 0.0, 0.0],
            transverse_k: 1.0,
        };
        let config = OpenChainConfig::new(16, T, PROTON_MASS_AMU, 1).with_target_samples(10);
        assert!(sample_open_pimc(&bad, &config).is_err());

        let mut tiny = OpenChainConfig::new(4, T, PROTON_MASS_AMU, 1);
        tiny.sweeps = 100;
        assert!(sample_open_pimc(&ModelPotential::Free, &tiny).is_err());
    }

    #[test]
    fn quantal_spread_exceeds_classical_at_269k() {
        // sampled end-to-end spread vs the classical thermal spread for an
        // ice-like stretch frequency
        let omega = 2639.0;
        let pot = ModelPotential::harmonic_from_omegas(
            [omega, omega, omega],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            PROTON_MASS_AMU,
        );
        let config =
            OpenChainConfig::new(32, T, PROTON_MASS_AMU, 17).with_target_samples(20_000);
        let (set, _) = sample_open_pimc(&pot, &config).unwrap();
        let sampled = variance_1d(&set, 0).sqrt();
        let classical = crate::quasiharmonic::classical_spread(omega, T, PROTON_MASS_AMU).unwrap();
        assert!(
            sampled > classical,
            "quantal {sampled:.4} should exceed classical {classical:.4}"
        );
        // and it should be near the Eq.-1 width
        let eq1 = sigma2_from_omega(omega, T, PROTON_MASS_AMU).unwrap().sqrt();
        assert!((sampled - eq1).abs() / eq1 < 0.05);
    }
}
