//! Significance levels, Bayes rejection regions and finite-model checks.

mod finite;
mod pvalue;
mod region;
mod report;
mod statistic;

pub use finite::{average_risk, bayes_factor, mean_power, mean_significance, FiniteModel, Label};
pub use pvalue::{
    exact_p_value, exact_p_value_enumerated, mc_exceedances, mc_significance, null_table_key,
    p_value_from_scores, tally_shard, EnumerationTally, ExactPValue, McPValue,
};
pub use region::{
    bayes_region, bayes_region_alpha, conditional_bayes_region, posterior_ratio, AlphaRegion,
    Region,
};
pub use report::{Method, TestReport};
pub use statistic::{
    point_key, EvaluationMode, PointScore, PosteriorRatioStatistic, StatisticSpec, TableStatistic,
};
