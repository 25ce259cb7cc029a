//! Conditional null distributions on sample spaces with fixed margins.
//!
//! Two families are covered: products of independent hypergeometric laws,
//! one per stratum of a stack of 2×2 tables, and the multivariate
//! hypergeometric law of an R×C table given both margin vectors.

mod lnfact;
mod rxc;
mod stratified;

pub use lnfact::{hypergeom_log_pmf, LnFactorials};
pub use rxc::{
    rxc_count, rxc_enumerate, rxc_log_pmf, rxc_sample, RxCMargins, RxcEnumerator, RxcNull,
    RxcSampler,
};
pub use stratified::{
    enumerate_stratified_space, stratified_null_pmf, StratifiedMargins, StratifiedNull,
    StratifiedPoint, StratumMargins,
};
