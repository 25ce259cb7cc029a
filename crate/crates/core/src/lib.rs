//! Exact conditional inference for cross-tabulated counts.
//!
//! The crate builds Bayes-optimal ("mean most powerful") significance tests
//! for composite alternatives on contingency tables: the test statistic of a
//! data point is the posterior probability (or posterior odds) of a discovery
//! event, and its significance level is computed under a conditional null
//! distribution that fixes the table margins.
//!
//! Everything here is `no_std` with `alloc`. Parallel drivers, file formats
//! and the command-line front end live in the `ctexact` crate, which reuses
//! the per-shard functions exposed here so that results do not depend on the
//! number of worker threads.
#![no_std]
#![forbid(unsafe_code)]
extern crate alloc;

pub mod engine;
pub mod error;
pub mod hypotheses;
mod math;
pub mod null_dist;
pub mod posterior;
pub mod power;
pub mod seed;
pub mod sum;
pub mod table;

pub use error::{Error, Result};
pub use hypotheses::{EventPredicate, Hypothesis};
pub use table::{ContingencyTable, ProbabilityVector};

/// Tables used throughout the tests and the acceptance suite.
pub mod datasets {
    /// Death-penalty verdicts by victim race (stratum), defendant race (row)
    /// and verdict (column), shape `[2, 2, 2]`.
    pub const DEATH_PENALTY: [u64; 8] = [19, 132, 11, 52, 0, 9, 6, 97];

    /// Income (rows) by job satisfaction (columns), shape `[4, 4]`.
    pub const JOB_SATISFACTION: [u64; 16] = [1, 3, 10, 6, 2, 3, 10, 7, 1, 6, 14, 12, 0, 1, 9, 11];
}
