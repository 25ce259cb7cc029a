//! Dirichlet posteriors and Monte Carlo estimates of event probabilities.

use alloc::vec::Vec;
use core::ops::Range;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::math;
use crate::hypotheses::EventPredicate;
use crate::seed::{StreamKey, TAG_POSTERIOR};
use crate::table::{ContingencyTable, ProbabilityVector};
use crate::{Error, Result};

/// Symmetric Jeffreys-type prior used unless configured otherwise.
pub const DEFAULT_PRIOR_CONCENTRATION: f64 = 0.5;

/// Redraws allowed when every gamma variate underflows to zero.
const MAX_DEGENERATE_RETRIES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    shape: Vec<usize>,
    concentration: Vec<f64>,
}

impl DirichletParams {
    pub fn new(concentration: Vec<f64>, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != concentration.len() || concentration.is_empty() {
            return Err(Error::ShapeMismatch("concentration length does not match shape"));
        }
        if let Some(&a) = concentration.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::NonPositivePrior(a));
        }
        Ok(DirichletParams {
            shape: shape.to_vec(),
            concentration,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn mean(&self) -> ProbabilityVector {
        ProbabilityVector::from_weights(&self.concentration, &self.shape)
            .expect("validated concentration")
    }
}

/// Conjugate update `n + a` of a symmetric prior.
pub fn posterior_params(table: &ContingencyTable, prior_concentration: f64) -> Result<DirichletParams> {
    if !(prior_concentration > 0.0) || !prior_concentration.is_finite() {
        return Err(Error::NonPositivePrior(prior_concentration));
    }
    let alpha = table
        .counts()
        .iter()
        .map(|&n| n as f64 + prior_concentration)
        .collect();
    DirichletParams::new(alpha, table.shape())
}

/// Normalized independent gamma variates.
#[derive(Clone, Debug)]
pub struct DirichletSampler {
    shape: Vec<usize>,
    gammas: Vec<Gamma<f64>>,
}

impl DirichletSampler {
    pub fn new(params: &DirichletParams) -> Result<Self> {
        let gammas = params
            .concentration
            .iter()
            .map(|&a| Gamma::new(a, 1.0).map_err(|_| Error::NonPositivePrior(a)))
            .collect::<Result<_>>()?;
        Ok(DirichletSampler {
            shape: params.shape.clone(),
            gammas,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// A vector of the right shape for [`Self::sample_into`].
    pub fn buffer(&self) -> ProbabilityVector {
        ProbabilityVector::buffer(&self.shape)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut ProbabilityVector) -> Result<()> {
        if out.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch("output buffer has the wrong shape"));
        }
        let values = out.values_mut();
        for _ in 0..MAX_DEGENERATE_RETRIES {
            let mut total = 0.0;
            for (v, g) in values.iter_mut().zip(&self.gammas) {
                *v = g.sample(rng);
                total += *v;
            }
            if total > 0.0 && total.is_finite() {
                // divide rather than scale: 1/total overflows for subnormal totals
                values.iter_mut().for_each(|v| *v /= total);
                return Ok(());
            }
        }
        Err(Error::DegenerateDraw)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProbabilityVector> {
        let mut out = self.buffer();
        self.sample_into(rng, &mut out)?;
        Ok(out)
    }
}

pub fn sample_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> Result<ProbabilityVector> {
    DirichletSampler::new(params)?.sample(rng)
}

/// Monte Carlo estimate of a posterior event probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub successes: u64,
    pub seed: u64,
}

impl EventEstimate {
    pub fn from_counts(successes: u64, n_samples: u64, seed: u64) -> Self {
        let p = successes as f64 / n_samples as f64;
        EventEstimate {
            estimate: p,
            std_error: math::sqrt(p * (1.0 - p) / n_samples as f64),
            n_samples,
            successes,
            seed,
        }
    }
}

/// Counts draws in `draws` that land in the event. Draw `d` uses the stream
/// `key.child(d)`, so any partition of the draw range gives the same total.
pub fn count_event_successes<E: EventPredicate + ?Sized>(
    sampler: &DirichletSampler,
    event: &E,
    key: StreamKey,
    draws: Range<u64>,
) -> Result<u64> {
    event.check_shape(sampler.shape())?;
    let mut p = sampler.buffer();
    let mut hits = 0;
    for d in draws {
        sampler.sample_into(&mut key.child(d).rng(), &mut p)?;
        hits += event.holds(&p) as u64;
    }
    Ok(hits)
}

/// Root key of the posterior draws for a master seed.
pub fn posterior_key(seed: u64) -> StreamKey {
    StreamKey::new(seed).child(TAG_POSTERIOR)
}

/// `P(event | table)` under the posterior from a symmetric prior.
pub fn event_probability<E: EventPredicate + ?Sized>(
    table: &ContingencyTable,
    event: &E,
    prior_concentration: f64,
    n_samples: u64,
    seed: u64,
) -> Result<EventEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive"));
    }
    event.check_shape(table.shape())?;
    let sampler = DirichletSampler::new(&posterior_params(table, prior_concentration)?)?;
    let hits = count_event_successes(&sampler, event, posterior_key(seed), 0..n_samples)?;
    Ok(EventEstimate::from_counts(hits, n_samples, seed))
}
