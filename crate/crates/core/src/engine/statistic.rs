use alloc::string::String;

use crate::hypotheses::{EventPredicate, Hypothesis};
use crate::posterior::{count_event_successes, posterior_params, DirichletParams, DirichletSampler, EventEstimate};
use crate::seed::{StreamKey, TAG_NON_DISCOVERY, TAG_POINT, TAG_POSTERIOR};
use crate::table::{ConcordanceCounts, ContingencyTable};
use crate::{Error, Result};

use super::region::posterior_ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvaluationMode {
    Deterministic,
    /// Posterior Monte Carlo; per-item streams are derived from the seed.
    PosteriorMc { n_samples: u64, seed: u64 },
}

/// Description of a statistic as echoed in reports. Estimated values are
/// compared as they are, with no tie tolerance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatisticSpec {
    pub name: String,
    pub mode: EvaluationMode,
}

/// Statistic of a two-way table used by the enumerated and sampled tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TableStatistic {
    /// Sample gamma; undefined values score `-∞`.
    GammaHat,
    /// Posterior probability of an event.
    Posterior {
        event: Hypothesis,
        prior: f64,
        n_samples: u64,
    },
}

impl TableStatistic {
    pub fn name(&self) -> &str {
        match self {
            TableStatistic::GammaHat => "gamma-hat",
            TableStatistic::Posterior { event, .. } => event.name(),
        }
    }

    pub fn spec(&self, seed: u64) -> StatisticSpec {
        let mode = match *self {
            TableStatistic::GammaHat => EvaluationMode::Deterministic,
            TableStatistic::Posterior { n_samples, .. } => EvaluationMode::PosteriorMc { n_samples, seed },
        };
        StatisticSpec {
            name: self.name().into(),
            mode,
        }
    }

    pub fn check(&self, shape: &[usize]) -> Result<()> {
        match self {
            TableStatistic::GammaHat if shape.len() != 2 => {
                Err(Error::ShapeMismatch("gamma needs a two-dimensional table"))
            }
            TableStatistic::GammaHat => Ok(()),
            TableStatistic::Posterior { event, prior, n_samples } => {
                if *n_samples == 0 {
                    return Err(Error::InvalidArgument("n_samples must be positive"));
                }
                if !(*prior > 0.0) || !prior.is_finite() {
                    return Err(Error::NonPositivePrior(*prior));
                }
                event.check_shape(shape)
            }
        }
    }

    /// Value at a table given by its cells; posterior draws use `key`.
    pub fn evaluate(&self, cells: &[u64], shape: &[usize], key: StreamKey) -> Result<f64> {
        match *self {
            TableStatistic::GammaHat => {
                if shape.len() != 2 {
                    return Err(Error::ShapeMismatch("gamma needs a two-dimensional table"));
                }
                Ok(ConcordanceCounts::from_cells(shape[0], shape[1], cells).gamma().score())
            }
            TableStatistic::Posterior { event, prior, n_samples } => {
                let alpha = cells.iter().map(|&n| n as f64 + prior).collect();
                let sampler = DirichletSampler::new(&DirichletParams::new(alpha, shape)?)?;
                let hits = count_event_successes(&sampler, &event, key, 0..n_samples)?;
                Ok(hits as f64 / n_samples as f64)
            }
        }
    }
}

/// Root key of the draws for the point with the given index.
pub fn point_key(seed: u64, index: u64) -> StreamKey {
    StreamKey::new(seed).child(TAG_POINT).child(index)
}

/// `P(discovery | n)`, optionally divided by `P(non-discovery | n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorRatioStatistic {
    pub discovery: Hypothesis,
    pub n_discovery: u64,
    pub non_discovery: Option<(Hypothesis, u64)>,
    pub prior: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointScore {
    pub discovery: EventEstimate,
    pub non_discovery: Option<EventEstimate>,
    pub value: f64,
}

impl PosteriorRatioStatistic {
    pub fn name(&self) -> &'static str {
        match self.non_discovery {
            None => "posterior",
            Some(_) => "posterior-ratio",
        }
    }

    pub fn check(&self, shape: &[usize]) -> Result<()> {
        self.discovery.check_shape(shape)?;
        if self.n_discovery == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive"));
        }
        if let Some((event, n)) = self.non_discovery {
            event.check_shape(shape)?;
            if n == 0 {
                return Err(Error::InvalidArgument("n_samples must be positive"));
            }
        }
        Ok(())
    }

    /// Score of a table; draws come from `key.child(TAG_POSTERIOR)` and
    /// `key.child(TAG_NON_DISCOVERY)`. `seed` is only recorded.
    pub fn evaluate(&self, table: &ContingencyTable, key: StreamKey, seed: u64) -> Result<PointScore> {
        self.check(table.shape())?;
        let sampler = DirichletSampler::new(&posterior_params(table, self.prior)?)?;
        let hits = count_event_successes(&sampler, &self.discovery, key.child(TAG_POSTERIOR), 0..self.n_discovery)?;
        let discovery = EventEstimate::from_counts(hits, self.n_discovery, seed);
        let non_discovery = match self.non_discovery {
            None => None,
            Some((event, n)) => {
                let hits = count_event_successes(&sampler, &event, key.child(TAG_NON_DISCOVERY), 0..n)?;
                Some(EventEstimate::from_counts(hits, n, seed))
            }
        };
        let value = match non_discovery {
            None => discovery.estimate,
            Some(p0) => posterior_ratio(discovery.estimate, p0.estimate),
        };
        Ok(PointScore {
            discovery,
            non_discovery,
            value,
        })
    }
}
