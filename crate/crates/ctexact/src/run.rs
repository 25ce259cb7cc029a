//! Command pipeline and exit codes: 0 on success, 2 for bad input or
//! configuration, 3 when a computation fails.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use ctexact_core::engine::{
    bayes_region_alpha, null_table_key, p_value_from_scores, PointScore, PosteriorRatioStatistic, TableStatistic,
    TestReport,
};
use ctexact_core::null_dist::{rxc_count, RxCMargins, StratifiedMargins, StratifiedNull, StratifiedPoint};
use ctexact_core::power::{ArmSummary, PowerStudyConfig};
use ctexact_core::seed::content_key;
use ctexact_core::table::{plugin_probs, ConcordanceCounts};
use ctexact_core::{ContingencyTable, Error, EventPredicate, Hypothesis};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{Cli, Command, ConfigError, Mode, RawConfig, RunConfig, TestName};
use crate::parallel;
use crate::parse::{parse_table, ParseError};
use crate::report::{num, opt_num, render, Outcome};
use crate::demo::gaussian_demo;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("table file: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("command needs a table file")]
    MissingTable,
    #[error("{0}")]
    Core(#[from] Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) => match e {
                Error::NegativeCount { .. }
                | Error::ShapeMismatch(_)
                | Error::EmptyTable
                | Error::InconsistentMargins
                | Error::NonPositivePrior(_)
                | Error::InvalidArgument(_)
                | Error::ObservedNotInSpace => 2,
                _ => 3,
            },
            RunError::Pool(_) => 3,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses, resolves and runs the command line; returns the exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    match run_cli_inner(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ctexact: {e}");
            e.exit_code()
        }
    }
}

fn run_cli_inner(cli: &Cli) -> Result<(), RunError> {
    let file = match &cli.config {
        Some(p) => RawConfig::from_toml(&read(p)?)?,
        None => RawConfig::default(),
    };
    let config = RunConfig::resolve(cli.command, cli.raw().or(file))?;
    let table = match (&cli.table, config.command) {
        (Some(p), _) => Some(parse_table(&read(p)?)?),
        (None, Command::Demo) => None,
        (None, _) => return Err(RunError::MissingTable),
    };
    let workers = cli.workers.or_else(parallel::workers_from_env);
    let pool = parallel::worker_pool(workers).map_err(|e| RunError::Pool(e.to_string()))?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(&config, table.as_ref()))?;
    let text = render(&config, table.as_ref(), &outcome, start.elapsed().as_secs_f64());
    match &config.output {
        Some(p) => std::fs::write(p, text).map_err(|source| RunError::Io { path: p.clone(), source })?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs a resolved command on the current rayon pool.
pub fn execute(config: &RunConfig, table: Option<&ContingencyTable>) -> Result<Outcome, RunError> {
    if config.command == Command::Demo {
        return demo(config);
    }
    let table = table.ok_or(RunError::MissingTable)?;
    match config.command {
        Command::Test => match config.test.ok_or(ConfigError::MissingTest)? {
            t @ (TestName::Simpson | TestName::SimpsonRatio) => simpson_test(config, table, t),
            TestName::GammaExact => gamma_exact(table),
            t @ (TestName::Concordance | TestName::PositiveDependence) => {
                let event = if t == TestName::Concordance {
                    Hypothesis::Concordance
                } else {
                    Hypothesis::PositiveDependence
                };
                match config.mode {
                    Some(Mode::Exact) => posterior_exact(config, table, event),
                    _ => posterior_mc(config, table, event),
                }
            }
        },
        Command::Enumerate => enumerate(table),
        Command::Region => region(config, table),
        Command::Power => power(config, table),
        Command::Demo => unreachable!("handled above"),
    }
}

fn two_way(table: &ContingencyTable) -> Result<RxCMargins, RunError> {
    if !table.is_two_way() {
        return Err(Error::ShapeMismatch("this command needs a two-way table").into());
    }
    Ok(RxCMargins::of_table(table)?)
}

fn estimate_json(e: &ctexact_core::posterior::EventEstimate) -> Value {
    json!({
        "estimate": num(e.estimate),
        "std_error": num(e.std_error),
        "successes": e.successes,
        "n_samples": e.n_samples,
    })
}

fn ratio_statistic(config: &RunConfig, test: TestName) -> Result<PosteriorRatioStatistic, RunError> {
    let non_discovery = match test {
        TestName::SimpsonRatio => Some((Hypothesis::epsilon_null(config.epsilon)?, config.n_posterior_non_discovery)),
        _ => None,
    };
    Ok(PosteriorRatioStatistic {
        discovery: Hypothesis::Simpson,
        n_discovery: config.n_posterior,
        non_discovery,
        prior: config.prior,
    })
}

struct ScoredSpace {
    space: Vec<StratifiedPoint>,
    null_probs: Vec<f64>,
    scores: Vec<PointScore>,
    observed: usize,
}

fn score_space(config: &RunConfig, table: &ContingencyTable, stat: &PosteriorRatioStatistic) -> Result<ScoredSpace, RunError> {
    stat.check(table.shape())?;
    let null = StratifiedNull::new(StratifiedMargins::from_table(table)?);
    let space = null.enumerate();
    let point = StratifiedNull::point_of(table)?;
    let observed = space.iter().position(|p| *p == point).ok_or(Error::ObservedNotInSpace)?;
    let null_probs = space.iter().map(|p| null.pmf(p)).collect();
    let scores = parallel::point_scores(&null, stat, config.sampling_seed()?)?;
    Ok(ScoredSpace {
        space,
        null_probs,
        scores,
        observed,
    })
}

/// Delta-method standard error of `p1 / p0`.
fn ratio_se(s: &PointScore) -> Option<f64> {
    let p0 = s.non_discovery?;
    let p1 = s.discovery;
    if p1.estimate == 0.0 || p0.estimate == 0.0 {
        return None;
    }
    let r = p1.estimate / p0.estimate;
    Some(r * ((p1.std_error / p1.estimate).powi(2) + (p0.std_error / p0.estimate).powi(2)).sqrt())
}

fn points_json(s: &ScoredSpace) -> Value {
    Value::Array(
        s.space
            .iter()
            .zip(&s.null_probs)
            .zip(&s.scores)
            .map(|((p, &q), sc)| json!({ "point": p.0, "null_prob": num(q), "statistic": num(sc.value) }))
            .collect(),
    )
}

fn simpson_test(config: &RunConfig, table: &ContingencyTable, test: TestName) -> Result<Outcome, RunError> {
    let stat = ratio_statistic(config, test)?;
    let s = score_space(config, table, &stat)?;
    let values: Vec<f64> = s.scores.iter().map(|x| x.value).collect();
    let p = p_value_from_scores(&s.null_probs, &values, values[s.observed])?;
    let obs = &s.scores[s.observed];
    let se = match test {
        TestName::SimpsonRatio => ratio_se(obs),
        _ => Some(obs.discovery.std_error),
    };
    let seed = config.sampling_seed()?;
    let report = TestReport::exact(test.as_str(), obs.value, se, &p).with_sampling(seed, config.n_posterior);
    let mut details = Map::new();
    details.insert("observed_point".into(), json!(s.space[s.observed].0));
    details.insert("discovery".into(), estimate_json(&obs.discovery));
    details.insert(
        "non_discovery".into(),
        obs.non_discovery.as_ref().map_or(Value::Null, estimate_json),
    );
    details.insert("points".into(), points_json(&s));
    Ok(Outcome {
        test: Some(report),
        details,
    })
}

fn gamma_exact(table: &ContingencyTable) -> Result<Outcome, RunError> {
    let margins = two_way(table)?;
    let [r, c] = margins.shape();
    let observed = ConcordanceCounts::from_table(table)?.gamma();
    let tally = parallel::enumerated_tally(&margins, |cells| ConcordanceCounts::from_cells(r, c, cells).gamma(), table)?;
    let mut details = Map::new();
    details.insert("gamma_defined".into(), json!(observed.to_f64().is_some()));
    details.insert("space_size_recursive".into(), json!(rxc_count(&margins).to_string()));
    Ok(Outcome {
        test: Some(TestReport::enumerated("gamma-hat", observed.score(), &tally)),
        details,
    })
}

fn posterior_mc(config: &RunConfig, table: &ContingencyTable, event: Hypothesis) -> Result<Outcome, RunError> {
    let margins = two_way(table)?;
    let seed = config.sampling_seed()?;
    let observed = parallel::event_probability(table, &event, config.prior, config.n_posterior_observed, seed)?;
    let stat = TableStatistic::Posterior {
        event,
        prior: config.prior,
        n_samples: config.n_posterior,
    };
    let mc = parallel::mc_significance(&margins, &stat, observed.estimate, config.n_null, seed)?;
    let report = TestReport::mc(event.name(), observed.estimate, Some(observed.std_error), &mc, seed)
        .with_sampling(seed, config.n_posterior);
    let mut details = Map::new();
    details.insert("observed".into(), estimate_json(&observed));
    details.insert("n_posterior_null".into(), json!(config.n_posterior));
    Ok(Outcome {
        test: Some(report),
        details,
    })
}

/// Full enumeration with a posterior statistic per table; draws for a table
/// are keyed by its cells.
fn posterior_exact(config: &RunConfig, table: &ContingencyTable, event: Hypothesis) -> Result<Outcome, RunError> {
    let margins = two_way(table)?;
    let seed = config.sampling_seed()?;
    let shape = margins.shape();
    let stat = TableStatistic::Posterior {
        event,
        prior: config.prior,
        n_samples: config.n_posterior,
    };
    stat.check(&shape)?;
    let key = null_table_key(seed);
    let failure = Mutex::new(None);
    let score = |cells: &[u64]| match stat.evaluate(cells, &shape, content_key(key, cells)) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().expect("lock").get_or_insert(e);
            f64::NAN
        }
    };
    let tally = parallel::enumerated_tally(&margins, score, table)?;
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e.into());
    }
    let observed = stat.evaluate(table.counts(), &shape, content_key(key, table.counts()))?;
    let report = TestReport::enumerated(event.name(), observed, &tally).with_sampling(seed, config.n_posterior);
    Ok(Outcome {
        test: Some(report),
        details: Map::new(),
    })
}

fn enumerate(table: &ContingencyTable) -> Result<Outcome, RunError> {
    let mut details = Map::new();
    if table.is_two_way() {
        let margins = RxCMargins::of_table(table)?;
        details.insert("space_size_recursive".into(), json!(rxc_count(&margins).to_string()));
        details.insert("space_size_enumerated".into(), json!(parallel::enumerated_count(&margins)?));
    } else {
        let margins = StratifiedMargins::from_table(table)?;
        let per_stratum: Vec<u64> = margins
            .strata()
            .iter()
            .map(|s| s.support().end() - s.support().start() + 1)
            .collect();
        let null = StratifiedNull::new(margins);
        details.insert("space_size_enumerated".into(), json!(null.enumerate().len()));
        details.insert("support_sizes".into(), json!(per_stratum));
    }
    Ok(Outcome { test: None, details })
}

fn region(config: &RunConfig, table: &ContingencyTable) -> Result<Outcome, RunError> {
    let test = config.test.unwrap_or(TestName::SimpsonRatio);
    let stat = ratio_statistic(config, test)?;
    let s = score_space(config, table, &stat)?;
    let values: Vec<f64> = s.scores.iter().map(|x| x.value).collect();
    let r = bayes_region_alpha(&s.null_probs, &values, config.alpha)?;
    let mut details = Map::new();
    details.insert(
        "region".into(),
        Value::Array(r.region.indices().map(|i| json!(s.space[i].0)).collect()),
    );
    details.insert("region_size".into(), json!(r.region.len()));
    details.insert("delta_alpha".into(), opt_num(r.delta));
    details.insert("null_mass".into(), num(r.null_mass));
    details.insert("observed_point".into(), json!(s.space[s.observed].0));
    details.insert("observed_in_region".into(), json!(r.region.contains(s.observed)));
    details.insert("points".into(), points_json(&s));
    Ok(Outcome { test: None, details })
}

fn arm_json(a: &ArmSummary) -> Value {
    json!({
        "mean": num(a.mean),
        "mean_se": num(a.mean_se),
        "median": num(a.median),
        "median_se": num(a.median_se),
        "fraction_below": a.below.iter().map(|f| json!({
            "threshold": num(f.threshold),
            "fraction": num(f.fraction),
            "std_error": num(f.std_error),
        })).collect::<Vec<_>>(),
    })
}

fn power(config: &RunConfig, table: &ContingencyTable) -> Result<Outcome, RunError> {
    let margins = two_way(table)?;
    let study = PowerStudyConfig {
        margins,
        alternative: plugin_probs(table)?,
        n_proposals: config.n_proposals,
        n_resample: config.n_resample,
        n_reference: config.n_reference,
        n_posterior: config.n_posterior,
        prior: config.prior,
        seed: config.sampling_seed()?,
        alpha_grid: vec![0.10, 0.05],
    };
    let s = parallel::power_study(&study)?;
    let mut details = Map::new();
    details.insert("gamma_hat".into(), arm_json(&s.gamma_hat));
    details.insert("posterior".into(), arm_json(&s.posterior));
    details.insert("n_realizations".into(), json!(s.n_realizations));
    details.insert("n_reference".into(), json!(s.n_reference));
    details.insert("distinct_realizations".into(), json!(s.distinct_realizations));
    details.insert("effective_sample_size".into(), num(s.effective_sample_size));
    Ok(Outcome { test: None, details })
}

fn demo(config: &RunConfig) -> Result<Outcome, RunError> {
    let d = gaussian_demo(config.k, config.mu1, config.alpha, config.n_mc, config.sampling_seed()?)?;
    let details = match serde_json::to_value(&d).expect("demo serializes") {
        Value::Object(m) => m,
        _ => unreachable!("struct serializes to an object"),
    };
    Ok(Outcome { test: None, details })
}
