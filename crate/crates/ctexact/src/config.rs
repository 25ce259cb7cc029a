//! Run configuration. Command-line flags override a TOML file, which
//! overrides defaults; `--full-scale` swaps in the full reference sample sizes
//! for every size the user did not set.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact or Monte Carlo test of the table.
    Test,
    /// Size of the conditional sample space.
    Enumerate,
    /// Level-alpha Bayes rejection region over a stratified space.
    Region,
    /// Importance-sampling power study at the table's plug-in alternative.
    Power,
    /// Gaussian power comparison; needs no table.
    Demo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TestName {
    Simpson,
    SimpsonRatio,
    GammaExact,
    Concordance,
    PositiveDependence,
}

impl TestName {
    pub fn as_str(self) -> &'static str {
        match self {
            TestName::Simpson => "simpson",
            TestName::SimpsonRatio => "simpson-ratio",
            TestName::GammaExact => "gamma-exact",
            TestName::Concordance => "concordance",
            TestName::PositiveDependence => "positive-dependence",
        }
    }

    fn stratified(self) -> bool {
        matches!(self, TestName::Simpson | TestName::SimpsonRatio)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Toml(String),
    #[error("command `test` needs --test")]
    MissingTest,
    #[error("--seed is required for this run")]
    MissingSeed,
    #[error("test {test} does not support mode {mode}")]
    UnsupportedCombination { test: &'static str, mode: &'static str },
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: &'static str },
}

/// One layer of settings; unset fields fall through to the next layer.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RawConfig {
    pub test: Option<TestName>,
    pub prior: Option<f64>,
    pub epsilon: Option<f64>,
    pub n_posterior: Option<u64>,
    pub n_posterior_non_discovery: Option<u64>,
    pub n_posterior_observed: Option<u64>,
    pub n_null: Option<u64>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub full_scale: Option<bool>,
    pub long_run: Option<bool>,
    pub alpha: Option<f64>,
    pub n_proposals: Option<u64>,
    pub n_resample: Option<u64>,
    pub n_reference: Option<u64>,
    pub k: Option<usize>,
    pub mu1: Option<f64>,
    pub n_mc: Option<u64>,
    pub output: Option<PathBuf>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))
    }

    /// Fields of `self`, with `fallback` filling the gaps.
    pub fn or(self, fallback: RawConfig) -> RawConfig {
        RawConfig {
            test: self.test.or(fallback.test),
            prior: self.prior.or(fallback.prior),
            epsilon: self.epsilon.or(fallback.epsilon),
            n_posterior: self.n_posterior.or(fallback.n_posterior),
            n_posterior_non_discovery: self.n_posterior_non_discovery.or(fallback.n_posterior_non_discovery),
            n_posterior_observed: self.n_posterior_observed.or(fallback.n_posterior_observed),
            n_null: self.n_null.or(fallback.n_null),
            seed: self.seed.or(fallback.seed),
            mode: self.mode.or(fallback.mode),
            full_scale: self.full_scale.or(fallback.full_scale),
            long_run: self.long_run.or(fallback.long_run),
            alpha: self.alpha.or(fallback.alpha),
            n_proposals: self.n_proposals.or(fallback.n_proposals),
            n_resample: self.n_resample.or(fallback.n_resample),
            n_reference: self.n_reference.or(fallback.n_reference),
            k: self.k.or(fallback.k),
            mu1: self.mu1.or(fallback.mu1),
            n_mc: self.n_mc.or(fallback.n_mc),
            output: self.output.or(fallback.output),
        }
    }
}

/// Fully resolved settings, echoed verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub test: Option<TestName>,
    pub mode: Option<Mode>,
    pub prior: f64,
    pub epsilon: f64,
    /// Posterior draws per point or per null table.
    pub n_posterior: u64,
    /// Draws for the non-discovery probability of the ratio statistic.
    pub n_posterior_non_discovery: u64,
    /// Draws for the statistic at the observed table in Monte Carlo tests.
    pub n_posterior_observed: u64,
    pub n_null: u64,
    pub seed: Option<u64>,
    pub full_scale: bool,
    pub long_run: bool,
    pub alpha: f64,
    pub n_proposals: u64,
    pub n_resample: u64,
    pub n_reference: u64,
    pub k: usize,
    pub mu1: f64,
    pub n_mc: u64,
    pub output: Option<PathBuf>,
}

fn positive_count(field: &'static str, v: u64) -> Result<u64, ConfigError> {
    if v == 0 {
        return Err(ConfigError::Invalid {
            field,
            reason: "must be at least 1",
        });
    }
    Ok(v)
}

fn positive_real(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(ConfigError::Invalid {
            field,
            reason: "must be positive and finite",
        });
    }
    Ok(v)
}

impl RunConfig {
    pub fn resolve(command: Command, raw: RawConfig) -> Result<Self, ConfigError> {
        let full = raw.full_scale.unwrap_or(false);
        let long_run = raw.long_run.unwrap_or(false);
        let test = match command {
            Command::Test => Some(raw.test.ok_or(ConfigError::MissingTest)?),
            Command::Region => {
                let t = raw.test.unwrap_or(TestName::SimpsonRatio);
                if !t.stratified() {
                    return Err(ConfigError::UnsupportedCombination {
                        test: t.as_str(),
                        mode: "region",
                    });
                }
                Some(t)
            }
            _ => None,
        };
        let mode = match test {
            Some(t) if command == Command::Test => {
                let default = if matches!(t, TestName::Concordance | TestName::PositiveDependence) {
                    Mode::Mc
                } else {
                    Mode::Exact
                };
                let m = raw.mode.unwrap_or(default);
                let ok = match (t, m) {
                    (_, Mode::Exact) if !t.stratified() && t != TestName::GammaExact => long_run,
                    (_, Mode::Exact) => true,
                    (TestName::Concordance | TestName::PositiveDependence, Mode::Mc) => true,
                    _ => false,
                };
                if !ok {
                    return Err(ConfigError::UnsupportedCombination {
                        test: t.as_str(),
                        mode: match m {
                            Mode::Exact => "exact (needs --long-run)",
                            Mode::Mc => "mc",
                        },
                    });
                }
                Some(m)
            }
            _ => None,
        };

        let two_way_mc = matches!(test, Some(TestName::Concordance | TestName::PositiveDependence));
        let default_posterior = match (command, full) {
            (Command::Power, false) => 1_000,
            (Command::Power, true) => 10_000,
            _ if two_way_mc && full => 10_000,
            (_, true) => 2_000_000,
            (_, false) => 100_000,
        };
        let n_posterior = positive_count("n-posterior", raw.n_posterior.unwrap_or(default_posterior))?;
        let default_non_discovery = if full { 1_000_000 } else { n_posterior };
        let default_observed = if full { 10_000_000 } else { n_posterior };
        let (d_prop, d_res, d_ref) = if full {
            (1_000_000, 100_000, 100_000)
        } else {
            (100_000, 10_000, 10_000)
        };

        let needs_seed = match command {
            Command::Enumerate => false,
            Command::Test => test != Some(TestName::GammaExact),
            _ => true,
        };
        if needs_seed && raw.seed.is_none() {
            return Err(ConfigError::MissingSeed);
        }
        let alpha = raw.alpha.unwrap_or(0.05);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ConfigError::Invalid {
                field: "alpha",
                reason: "must lie in [0, 1]",
            });
        }
        if command == Command::Demo && (alpha == 0.0 || alpha == 1.0) {
            return Err(ConfigError::Invalid {
                field: "alpha",
                reason: "the demo needs 0 < alpha < 1",
            });
        }
        let mu1 = raw.mu1.unwrap_or(3.2);
        if !mu1.is_finite() {
            return Err(ConfigError::Invalid {
                field: "mu1",
                reason: "must be finite",
            });
        }
        let k = raw.k.unwrap_or(100);
        if k == 0 {
            return Err(ConfigError::Invalid {
                field: "k",
                reason: "must be at least 1",
            });
        }

        Ok(RunConfig {
            command,
            test,
            mode,
            prior: positive_real("prior", raw.prior.unwrap_or(0.5))?,
            epsilon: positive_real("epsilon", raw.epsilon.unwrap_or(0.1))?,
            n_posterior,
            n_posterior_non_discovery: positive_count(
                "n-posterior-non-discovery",
                raw.n_posterior_non_discovery.unwrap_or(default_non_discovery),
            )?,
            n_posterior_observed: positive_count(
                "n-posterior-observed",
                raw.n_posterior_observed.unwrap_or(default_observed),
            )?,
            n_null: positive_count("n-null", raw.n_null.unwrap_or(if full { 50_000 } else { 10_000 }))?,
            seed: raw.seed,
            full_scale: full,
            long_run,
            alpha,
            n_proposals: positive_count("n-proposals", raw.n_proposals.unwrap_or(d_prop))?,
            n_resample: positive_count("n-resample", raw.n_resample.unwrap_or(d_res))?,
            n_reference: positive_count("n-reference", raw.n_reference.unwrap_or(d_ref))?,
            k,
            mu1,
            n_mc: positive_count("n-mc", raw.n_mc.unwrap_or(1_000_000))?,
            output: raw.output,
        })
    }

    /// Seed of a sampling run; resolution guarantees it is present.
    pub fn sampling_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::MissingSeed)
    }
}

/// Command-line arguments.
#[derive(Clone, Debug, Parser)]
#[command(name = "ctexact", version, about = "Exact conditional tests for contingency tables")]
pub struct Cli {
    pub command: Command,
    /// Table file; not needed by `demo`.
    pub table: Option<PathBuf>,
    /// TOML file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; overrides the CTEXACT_WORKERS environment variable.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub test: Option<TestName>,
    /// Symmetric Dirichlet prior concentration.
    #[arg(long)]
    pub prior: Option<f64>,
    /// Half-width of the log odds-ratio band of the non-discovery event.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_posterior: Option<u64>,
    #[arg(long)]
    pub n_posterior_non_discovery: Option<u64>,
    #[arg(long)]
    pub n_posterior_observed: Option<u64>,
    /// Null tables for Monte Carlo significance levels.
    #[arg(long)]
    pub n_null: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub full_scale: bool,
    /// Allow exact enumeration with posterior statistics.
    #[arg(long)]
    pub long_run: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_proposals: Option<u64>,
    #[arg(long)]
    pub n_resample: Option<u64>,
    #[arg(long)]
    pub n_reference: Option<u64>,
    /// Dimension of the Gaussian demo.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub n_mc: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl Cli {
    /// The flags as a configuration layer; boolean switches count as set
    /// only when given.
    pub fn raw(&self) -> RawConfig {
        RawConfig {
            test: self.test,
            prior: self.prior,
            epsilon: self.epsilon,
            n_posterior: self.n_posterior,
            n_posterior_non_discovery: self.n_posterior_non_discovery,
            n_posterior_observed: self.n_posterior_observed,
            n_null: self.n_null,
            seed: self.seed,
            mode: self.mode,
            full_scale: self.full_scale.then_some(true),
            long_run: self.long_run.then_some(true),
            alpha: self.alpha,
            n_proposals: self.n_proposals,
            n_resample: self.n_resample,
            n_reference: self.n_reference,
            k: self.k,
            mu1: self.mu1,
            n_mc: self.n_mc,
            output: self.output.clone(),
        }
    }
}
