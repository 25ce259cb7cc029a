//! Importance-sampling power study for tests on tables with fixed margins,
//! and the Gaussian contrast between a likelihood-ratio region and a
//! one-sided Bayes region.
//!
//! Realizations from a multinomial alternative truncated to the tables with
//! the study margins are obtained by drawing null tables, weighting each by
//! the ratio of the alternative and null probabilities, and resampling.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, StandardNormal};

use crate::math;
use crate::hypotheses::Hypothesis;
use crate::null_dist::{LnFactorials, RxCMargins, RxcNull, RxcSampler};
use crate::posterior::{count_event_successes, DirichletParams, DirichletSampler};
use crate::seed::{content_key, StreamKey, TAG_GAUSSIAN, TAG_POSTERIOR, TAG_PROPOSAL, TAG_REFERENCE, TAG_RESAMPLE};
use crate::sum::NeumaierSum;
use crate::table::{ConcordanceCounts, ContingencyTable, ProbabilityVector};
use crate::{Error, Result};

/// `log Pr(cells)` under a multinomial with the given cell probabilities.
pub fn multinomial_log_pmf(cells: &[u64], probs: &[f64], lnfact: &LnFactorials) -> f64 {
    let n: u64 = cells.iter().sum();
    let mut out = lnfact.get(n);
    for (&x, &p) in cells.iter().zip(probs) {
        if x > 0 {
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            out += x as f64 * math::ln(p) - lnfact.get(x);
        }
    }
    out
}

/// Alternative-to-null probability ratio of a table with the study margins.
pub fn importance_weights(proposal: &ContingencyTable, alternative: &ProbabilityVector) -> Result<f64> {
    if proposal.shape() != alternative.shape() {
        return Err(Error::ShapeMismatch("alternative and table shapes differ"));
    }
    let null = RxcNull::new(RxCMargins::of_table(proposal)?);
    Ok(math::exp(log_weight(proposal.counts(), alternative.values(), &null)))
}

fn log_weight(cells: &[u64], alternative: &[f64], null: &RxcNull) -> f64 {
    multinomial_log_pmf(cells, alternative, null.ln_factorials()) - null.log_pmf(cells)
}

/// Weights rescaled by the largest one, so that `exp` cannot overflow.
pub fn weights_from_logs(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > f64::NEG_INFINITY) || max.is_nan() {
        return Err(Error::AllZeroWeights);
    }
    Ok(log_weights.iter().map(|&w| math::exp(w - max)).collect())
}

/// `m` indices drawn with replacement, index `i` with probability
/// proportional to `weights[i]`.
pub fn weighted_resample<R: Rng + ?Sized>(weights: &[f64], m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::InvalidArgument("resample size must be positive"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative"));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let alias = WeightedAliasIndex::new(weights.to_vec()).map_err(|_| Error::AllZeroWeights)?;
    Ok((0..m).map(|_| alias.sample(rng)).collect())
}

/// Resampling of arbitrary items, see [`weighted_resample`].
pub fn weighted_resample_items<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    weights: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if items.len() != weights.len() {
        return Err(Error::ShapeMismatch("one weight per item"));
    }
    Ok(weighted_resample(weights, m, rng)?.into_iter().map(|i| items[i].clone()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerStudyConfig {
    pub margins: RxCMargins,
    /// Multinomial cell probabilities of the alternative.
    pub alternative: ProbabilityVector,
    pub n_proposals: u64,
    pub n_resample: u64,
    pub n_reference: u64,
    /// Posterior draws per table for the posterior-probability statistic.
    pub n_posterior: u64,
    pub prior: f64,
    pub seed: u64,
    /// Thresholds `t` at which `Pr(p < t)` is reported.
    pub alpha_grid: Vec<f64>,
}

impl PowerStudyConfig {
    /// 10⁵ proposals, 10⁴ realizations, 10⁴ reference tables, 10³ posterior
    /// draws per table.
    pub fn desk(margins: RxCMargins, alternative: ProbabilityVector, seed: u64) -> Self {
        PowerStudyConfig {
            margins,
            alternative,
            n_proposals: 100_000,
            n_resample: 10_000,
            n_reference: 10_000,
            n_posterior: 1_000,
            prior: crate::posterior::DEFAULT_PRIOR_CONCENTRATION,
            seed,
            alpha_grid: vec![0.10, 0.05],
        }
    }

    /// Ten times the desk sizes in every stage.
    pub fn full_scale(margins: RxCMargins, alternative: ProbabilityVector, seed: u64) -> Self {
        PowerStudyConfig {
            n_proposals: 1_000_000,
            n_resample: 100_000,
            n_reference: 100_000,
            n_posterior: 10_000,
            ..Self::desk(margins, alternative, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_proposals == 0 || self.n_resample == 0 || self.n_reference == 0 || self.n_posterior == 0 {
            return Err(Error::InvalidArgument("all sample sizes must be positive"));
        }
        if self.alternative.shape() != self.margins.shape() {
            return Err(Error::ShapeMismatch("alternative shape differs from the margins"));
        }
        if !(self.prior > 0.0) || !self.prior.is_finite() {
            return Err(Error::NonPositivePrior(self.prior));
        }
        if self.alpha_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidArgument("alpha grid values must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// The two statistics compared by the study, for one table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedStatistics {
    pub gamma_hat: f64,
    pub posterior: f64,
}

/// Prepared state of a study; every stage is a function of an index range
/// so drivers can split the work freely.
#[derive(Clone, Debug)]
pub struct PowerStudy {
    config: PowerStudyConfig,
    sampler: RxcSampler,
    null: RxcNull,
    root: StreamKey,
}

impl PowerStudy {
    pub fn new(config: PowerStudyConfig) -> Result<Self> {
        config.validate()?;
        Ok(PowerStudy {
            sampler: RxcSampler::new(config.margins.clone()),
            null: RxcNull::new(config.margins.clone()),
            root: StreamKey::new(config.seed),
            config,
        })
    }

    pub fn config(&self) -> &PowerStudyConfig {
        &self.config
    }

    pub fn cells_len(&self) -> usize {
        let s = self.config.margins.shape();
        s[0] * s[1]
    }

    /// Proposal `i`, a null draw. Proposals are regenerated on demand
    /// instead of stored.
    pub fn proposal(&self, i: u64, cells: &mut [u64]) -> Result<()> {
        self.sampler.sample_into(&mut self.root.child(TAG_PROPOSAL).child(i).rng(), cells)
    }

    pub fn reference(&self, i: u64, cells: &mut [u64]) -> Result<()> {
        self.sampler.sample_into(&mut self.root.child(TAG_REFERENCE).child(i).rng(), cells)
    }

    pub fn log_weights(&self, range: Range<u64>) -> Result<Vec<f64>> {
        let mut cells = vec![0; self.cells_len()];
        range
            .map(|i| {
                self.proposal(i, &mut cells)?;
                Ok(log_weight(&cells, self.config.alternative.values(), &self.null))
            })
            .collect()
    }

    /// Proposal indices of the realizations, drawn in one sequential pass.
    pub fn resample(&self, log_weights: &[f64]) -> Result<Vec<usize>> {
        let w = weights_from_logs(log_weights)?;
        weighted_resample(&w, self.config.n_resample as usize, &mut self.root.child(TAG_RESAMPLE).rng())
    }

    /// Both statistics of a table. Posterior draws are keyed by the table's
    /// counts, so equal tables always get equal estimates.
    pub fn statistics(&self, cells: &[u64]) -> Result<PairedStatistics> {
        let shape = self.config.margins.shape();
        let gamma_hat = ConcordanceCounts::from_cells(shape[0], shape[1], cells).gamma().score();
        let alpha = cells.iter().map(|&n| n as f64 + self.config.prior).collect();
        let sampler = DirichletSampler::new(&DirichletParams::new(alpha, &shape)?)?;
        let key = content_key(self.root.child(TAG_POSTERIOR), cells);
        let hits = count_event_successes(&sampler, &Hypothesis::Concordance, key, 0..self.config.n_posterior)?;
        Ok(PairedStatistics {
            gamma_hat,
            posterior: hits as f64 / self.config.n_posterior as f64,
        })
    }

    pub fn proposal_statistics(&self, i: u64) -> Result<PairedStatistics> {
        let mut cells = vec![0; self.cells_len()];
        self.proposal(i, &mut cells)?;
        self.statistics(&cells)
    }

    pub fn reference_statistics(&self, range: Range<u64>) -> Result<Vec<PairedStatistics>> {
        let mut cells = vec![0; self.cells_len()];
        range
            .map(|i| {
                self.reference(i, &mut cells)?;
                self.statistics(&cells)
            })
            .collect()
    }
}

/// Distinct proposal indices in increasing order.
pub fn distinct_indices(indices: &[usize]) -> Vec<usize> {
    let mut d = indices.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// `(Σw)² / Σw²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: NeumaierSum = weights.iter().copied().collect();
    let q: NeumaierSum = weights.iter().map(|w| w * w).collect();
    s.value() * s.value() / q.value()
}

/// Proportion of the reference values at least as large as each statistic.
pub fn p_values(reference: &[f64], statistics: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = reference.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("statistics are never NaN"));
    let n = sorted.len() as f64;
    statistics
        .iter()
        .map(|s| {
            let below = sorted.partition_point(|r| r < s);
            (sorted.len() - below) as f64 / n
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fraction {
    pub threshold: f64,
    pub fraction: f64,
    pub std_error: f64,
}

/// Distribution summary of one statistic's p-values.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmSummary {
    pub mean: f64,
    pub mean_se: f64,
    pub median: f64,
    /// Half the distance between the order statistics `n/2 ± √n/2`.
    pub median_se: f64,
    /// `Pr(p < t)` for every `t` of the alpha grid.
    pub below: Vec<Fraction>,
}

impl ArmSummary {
    pub fn fraction_below(&self, threshold: f64) -> Option<f64> {
        self.below.iter().find(|f| f.threshold == threshold).map(|f| f.fraction)
    }
}

pub fn summarize(p_values: &[f64], alpha_grid: &[f64]) -> Result<ArmSummary> {
    if p_values.is_empty() {
        return Err(Error::InvalidArgument("no p-values to summarize"));
    }
    let n = p_values.len();
    let nf = n as f64;
    let mean = p_values.iter().copied().collect::<NeumaierSum>().value() / nf;
    let var = p_values.iter().map(|p| (p - mean) * (p - mean)).collect::<NeumaierSum>().value()
        / (nf - 1.0).max(1.0);
    let mut sorted = p_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("p-values are never NaN"));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let half = math::sqrt(nf) / 2.0;
    let lo = (math::floor(nf / 2.0 - half).max(0.0) as usize).min(n - 1);
    let hi = (math::ceil(nf / 2.0 + half) as usize).min(n - 1);
    let below = alpha_grid
        .iter()
        .map(|&t| {
            let f = sorted.partition_point(|&p| p < t) as f64 / nf;
            Fraction {
                threshold: t,
                fraction: f,
                std_error: math::sqrt(f * (1.0 - f) / nf),
            }
        })
        .collect();
    Ok(ArmSummary {
        mean,
        mean_se: math::sqrt(var / nf),
        median,
        median_se: (sorted[hi] - sorted[lo]) / 2.0,
        below,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSummary {
    pub gamma_hat: ArmSummary,
    pub posterior: ArmSummary,
    pub n_realizations: u64,
    pub n_reference: u64,
    pub distinct_realizations: u64,
    pub effective_sample_size: f64,
}

/// Combines the stage outputs: per-realization p-values for both
/// statistics against the same reference sample.
pub fn assemble_summary(
    config: &PowerStudyConfig,
    log_weights: &[f64],
    realizations: &[usize],
    distinct: &[usize],
    distinct_stats: &[PairedStatistics],
    reference: &[PairedStatistics],
) -> Result<PowerSummary> {
    let lookup = |i: usize| distinct_stats[distinct.binary_search(&i).expect("realization is a distinct index")];
    let ref_gamma: Vec<f64> = reference.iter().map(|s| s.gamma_hat).collect();
    let ref_post: Vec<f64> = reference.iter().map(|s| s.posterior).collect();
    let real_gamma: Vec<f64> = realizations.iter().map(|&i| lookup(i).gamma_hat).collect();
    let real_post: Vec<f64> = realizations.iter().map(|&i| lookup(i).posterior).collect();
    Ok(PowerSummary {
        gamma_hat: summarize(&p_values(&ref_gamma, &real_gamma), &config.alpha_grid)?,
        posterior: summarize(&p_values(&ref_post, &real_post), &config.alpha_grid)?,
        n_realizations: realizations.len() as u64,
        n_reference: reference.len() as u64,
        distinct_realizations: distinct.len() as u64,
        effective_sample_size: effective_sample_size(&weights_from_logs(log_weights)?),
    })
}

/// Sequential power study.
pub fn power_study(config: &PowerStudyConfig) -> Result<PowerSummary> {
    let study = PowerStudy::new(config.clone())?;
    let log_weights = study.log_weights(0..config.n_proposals)?;
    let realizations = study.resample(&log_weights)?;
    let distinct = distinct_indices(&realizations);
    let distinct_stats = distinct
        .iter()
        .map(|&i| study.proposal_statistics(i as u64))
        .collect::<Result<Vec<_>>>()?;
    let reference = study.reference_statistics(0..config.n_reference)?;
    assemble_summary(config, &log_weights, &realizations, &distinct, &distinct_stats, &reference)
}

/// Rejection counts of the two Gaussian regions for draws in `range`:
/// `‖y‖² ≥ chi2_crit` and `y₁ ≥ z_crit`, with `y ~ N((mu1, 0, …, 0), I_k)`.
pub fn gaussian_rejections(k: usize, mu1: f64, chi2_crit: f64, z_crit: f64, seed: u64, range: Range<u64>) -> (u64, u64) {
    let key = StreamKey::new(seed).child(TAG_GAUSSIAN);
    let (mut lrt, mut bayes) = (0, 0);
    for i in range {
        let mut rng = key.child(i).rng();
        let z: f64 = StandardNormal.sample(&mut rng);
        let y1 = mu1 + z;
        let mut norm2 = y1 * y1;
        for _ in 1..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            norm2 += z * z;
        }
        lrt += (norm2 >= chi2_crit) as u64;
        bayes += (y1 >= z_crit) as u64;
    }
    (lrt, bayes)
}

/// Monte Carlo powers `(lrt, bayes)` of the two regions.
pub fn gaussian_power(k: usize, mu1: f64, chi2_crit: f64, z_crit: f64, n_mc: u64, seed: u64) -> Result<(f64, f64)> {
    if k == 0 || n_mc == 0 {
        return Err(Error::InvalidArgument("dimension and draw count must be positive"));
    }
    let (lrt, bayes) = gaussian_rejections(k, mu1, chi2_crit, z_crit, seed, 0..n_mc);
    Ok((lrt as f64 / n_mc as f64, bayes as f64 / n_mc as f64))
}
