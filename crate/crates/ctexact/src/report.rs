//! JSON reports. Keys are sorted and non-finite numbers are written as the
//! strings `"inf"`, `"-inf"` and `"nan"`, so a report is a pure function of
//! its inputs apart from `wall_clock_seconds`.

use ctexact_core::engine::TestReport;
use ctexact_core::ContingencyTable;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Result of one command before rendering.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub test: Option<TestReport>,
    pub details: Map<String, Value>,
}

pub fn render(config: &RunConfig, table: Option<&ContingencyTable>, outcome: &Outcome, wall_clock_seconds: f64) -> String {
    let mut obj = Map::new();
    obj.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    obj.insert(
        "table".into(),
        table.map_or(Value::Null, |t| json!({ "shape": t.shape(), "counts": t.counts() })),
    );
    let t = outcome.test.as_ref();
    obj.insert("statistic_name".into(), t.map_or(Value::Null, |r| json!(r.statistic_name)));
    obj.insert("statistic".into(), t.map_or(Value::Null, |r| num(r.statistic)));
    obj.insert("statistic_se".into(), opt_num(t.and_then(|r| r.statistic_se)));
    obj.insert("p_value".into(), t.map_or(Value::Null, |r| num(r.p_value)));
    obj.insert("p_value_se".into(), t.map_or(Value::Null, |r| num(r.p_value_se)));
    obj.insert("method".into(), t.map_or(Value::Null, |r| json!(r.method.as_str())));
    obj.insert("qualifying_count".into(), json!(t.and_then(|r| r.qualifying_count)));
    obj.insert("space_size".into(), json!(t.and_then(|r| r.space_size)));
    obj.insert("seed".into(), json!(t.and_then(|r| r.seed).or(config.seed)));
    obj.insert("n_samples".into(), json!(t.and_then(|r| r.n_samples)));
    obj.insert("n_null".into(), json!(t.and_then(|r| r.n_null)));
    obj.insert("details".into(), Value::Object(outcome.details.clone()));
    obj.insert("wall_clock_seconds".into(), num(wall_clock_seconds));
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
    s.push('\n');
    s
}
