//! Rayon drivers over the core's range- and shard-based stages.
//!
//! Work is cut into fixed-size chunks that do not depend on the number of
//! threads, integer tallies are summed and float tallies are merged in chunk
//! order, so every result is identical for any worker count.

use std::ops::Range;

use ctexact_core::engine::{
    mc_exceedances, null_table_key, point_key, tally_shard, EnumerationTally, McPValue, PointScore,
    PosteriorRatioStatistic, TableStatistic,
};
use ctexact_core::null_dist::{RxCMargins, RxcEnumerator, RxcNull, RxcSampler, StratifiedNull};
use ctexact_core::posterior::{count_event_successes, posterior_key, posterior_params, DirichletSampler, EventEstimate};
use ctexact_core::power::{
    assemble_summary, distinct_indices, gaussian_rejections, PairedStatistics, PowerStudy, PowerStudyConfig,
    PowerSummary,
};
use ctexact_core::{ContingencyTable, Error, EventPredicate, Result};
use rayon::prelude::*;

/// Environment variable that sets the worker count when no flag does.
pub const WORKERS_ENV: &str = "CTEXACT_WORKERS";

const DRAW_CHUNK: u64 = 1 << 15;
const TABLE_CHUNK: u64 = 64;
const PROPOSAL_CHUNK: u64 = 1 << 12;

pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Pool with `workers` threads, or rayon's default when `None`.
pub fn worker_pool(workers: Option<usize>) -> std::result::Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build()
}

fn chunks(n: u64, size: u64) -> Vec<Range<u64>> {
    (0..n.div_ceil(size)).map(|k| k * size..((k + 1) * size).min(n)).collect()
}

fn sum_counts(parts: Vec<Result<u64>>) -> Result<u64> {
    parts.into_iter().sum()
}

/// Parallel version of the core's posterior event probability, with the
/// same streams.
pub fn event_probability<E: EventPredicate + Sync + ?Sized>(
    table: &ContingencyTable,
    event: &E,
    prior: f64,
    n_samples: u64,
    seed: u64,
) -> Result<EventEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive"));
    }
    event.check_shape(table.shape())?;
    let sampler = DirichletSampler::new(&posterior_params(table, prior)?)?;
    let key = posterior_key(seed);
    let hits = sum_counts(
        chunks(n_samples, DRAW_CHUNK)
            .into_par_iter()
            .map(|r| count_event_successes(&sampler, event, key, r))
            .collect(),
    )?;
    Ok(EventEstimate::from_counts(hits, n_samples, seed))
}

/// Scores of every point of a stratified space, in enumeration order.
pub fn point_scores(null: &StratifiedNull, statistic: &PosteriorRatioStatistic, seed: u64) -> Result<Vec<PointScore>> {
    let space = null.enumerate();
    space
        .par_iter()
        .enumerate()
        .map(|(i, p)| statistic.evaluate(&null.table_at(p)?, point_key(seed, i as u64), seed))
        .collect()
}

/// Exact enumerated test with shards processed in parallel.
pub fn enumerated_tally<T, F>(margins: &RxCMargins, statistic: F, observed: &ContingencyTable) -> Result<EnumerationTally>
where
    T: PartialOrd + Send + Sync,
    F: Fn(&[u64]) -> T + Sync,
{
    if observed.shape() != margins.shape() || !margins.matches(observed.counts()) {
        return Err(Error::InvalidArgument("observed table does not have these margins"));
    }
    let target = statistic(observed.counts());
    let enumerator = RxcEnumerator::new(margins.clone());
    let null = RxcNull::new(margins.clone());
    let tallies: Vec<Result<EnumerationTally>> = enumerator
        .shards()
        .par_iter()
        .map(|row| tally_shard(&enumerator, &null, row, &mut |c| statistic(c), &target))
        .collect();
    let mut total = EnumerationTally::default();
    for t in tallies {
        total.merge(&t?);
    }
    Ok(total)
}

/// Number of tables with the given margins, counted by a parallel walk.
pub fn enumerated_count(margins: &RxCMargins) -> Result<u64> {
    let enumerator = RxcEnumerator::new(margins.clone());
    sum_counts(enumerator.shards().par_iter().map(|row| enumerator.visit_shard(row, |_| {})).collect())
}

pub fn mc_significance(
    margins: &RxCMargins,
    statistic: &TableStatistic,
    observed_stat: f64,
    n_null: u64,
    seed: u64,
) -> Result<McPValue> {
    if n_null == 0 {
        return Err(Error::InvalidArgument("n_null must be positive"));
    }
    let sampler = RxcSampler::new(margins.clone());
    let key = null_table_key(seed);
    let hits = sum_counts(
        chunks(n_null, TABLE_CHUNK)
            .into_par_iter()
            .map(|r| mc_exceedances(&sampler, statistic, observed_stat, key, r))
            .collect(),
    )?;
    Ok(McPValue::from_counts(hits, n_null))
}

/// Parallel version of the core's sequential power study.
pub fn power_study(config: &PowerStudyConfig) -> Result<PowerSummary> {
    let study = PowerStudy::new(config.clone())?;
    let mut log_weights = Vec::with_capacity(config.n_proposals as usize);
    let parts: Vec<Result<Vec<f64>>> = chunks(config.n_proposals, PROPOSAL_CHUNK)
        .into_par_iter()
        .map(|r| study.log_weights(r))
        .collect();
    for p in parts {
        log_weights.extend(p?);
    }
    let realizations = study.resample(&log_weights)?;
    let distinct = distinct_indices(&realizations);
    let distinct_stats = distinct
        .par_iter()
        .map(|&i| study.proposal_statistics(i as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut reference: Vec<PairedStatistics> = Vec::with_capacity(config.n_reference as usize);
    let parts: Vec<Result<Vec<PairedStatistics>>> = chunks(config.n_reference, TABLE_CHUNK)
        .into_par_iter()
        .map(|r| study.reference_statistics(r))
        .collect();
    for p in parts {
        reference.extend(p?);
    }
    assemble_summary(config, &log_weights, &realizations, &distinct, &distinct_stats, &reference)
}

pub fn gaussian_power(k: usize, mu1: f64, chi2_crit: f64, z_crit: f64, n_mc: u64, seed: u64) -> Result<(f64, f64)> {
    if k == 0 || n_mc == 0 {
        return Err(Error::InvalidArgument("dimension and draw count must be positive"));
    }
    let (lrt, bayes) = chunks(n_mc, DRAW_CHUNK)
        .into_par_iter()
        .map(|r| gaussian_rejections(k, mu1, chi2_crit, z_crit, seed, r))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((lrt as f64 / n_mc as f64, bayes as f64 / n_mc as f64))
}
