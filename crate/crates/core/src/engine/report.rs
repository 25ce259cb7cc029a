use alloc::string::String;

use super::pvalue::{EnumerationTally, ExactPValue, McPValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactEnumeration,
    McSignificance,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactEnumeration => "exact-enumeration",
            Method::McSignificance => "mc-significance",
        }
    }
}

/// Outcome of one test. Exact methods report a zero p-value standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub statistic_name: String,
    pub statistic: f64,
    pub statistic_se: Option<f64>,
    pub p_value: f64,
    pub p_value_se: f64,
    pub method: Method,
    /// Points or tables whose statistic reaches the observed one.
    pub qualifying_count: Option<u64>,
    pub space_size: Option<u64>,
    pub seed: Option<u64>,
    pub n_samples: Option<u64>,
    pub n_null: Option<u64>,
}

impl TestReport {
    pub fn exact(name: impl Into<String>, statistic: f64, statistic_se: Option<f64>, p: &ExactPValue) -> Self {
        TestReport {
            statistic_name: name.into(),
            statistic,
            statistic_se,
            p_value: p.p_value,
            p_value_se: 0.0,
            method: Method::ExactEnumeration,
            qualifying_count: Some(p.qualifying_count),
            space_size: Some(p.space_size),
            seed: None,
            n_samples: None,
            n_null: None,
        }
    }

    pub fn enumerated(name: impl Into<String>, statistic: f64, tally: &EnumerationTally) -> Self {
        TestReport {
            statistic_name: name.into(),
            statistic,
            statistic_se: None,
            p_value: tally.p_value(),
            p_value_se: 0.0,
            method: Method::ExactEnumeration,
            qualifying_count: Some(tally.qualifying),
            space_size: Some(tally.tables),
            seed: None,
            n_samples: None,
            n_null: None,
        }
    }

    pub fn mc(name: impl Into<String>, statistic: f64, statistic_se: Option<f64>, p: &McPValue, seed: u64) -> Self {
        TestReport {
            statistic_name: name.into(),
            statistic,
            statistic_se,
            p_value: p.p_value,
            p_value_se: p.std_error,
            method: Method::McSignificance,
            qualifying_count: Some(p.exceedances),
            space_size: None,
            seed: Some(seed),
            n_samples: None,
            n_null: Some(p.n_null),
        }
    }

    pub fn with_sampling(mut self, seed: u64, n_samples: u64) -> Self {
        self.seed = Some(seed);
        self.n_samples = Some(n_samples);
        self
    }
}
