//! JSON and CSV rendering. Both are pure functions of the config and report.

use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig, Value};
use crate::run::{Body, Cell, Fields, Report};

pub const UNITS: &str = idqhe_core::UNITS;
pub const MISSING: &str = "NA";

pub fn render(cfg: &RunConfig, report: &Report) -> String {
    match cfg.format {
        Format::Json => json_text(cfg, report),
        Format::Csv => csv_text(cfg, report),
    }
}

fn cell_json(c: &Cell) -> Json {
    match c {
        Cell::Num(x) => Json::from(*x),
        Cell::Int(k) => Json::from(*k),
        Cell::Text(s) => Json::from(s.as_str()),
        Cell::Bool(b) => Json::from(*b),
        Cell::Missing => Json::Null,
    }
}

fn fields_json(fields: &Fields) -> Json {
    Json::Object(fields.iter().map(|(k, c)| (k.to_string(), cell_json(c))).collect())
}

fn param_json(v: &Value) -> Json {
    match v {
        Value::Real(x) => Json::from(*x),
        Value::Count(k) => Json::from(*k as u64),
        Value::Choice(s) => Json::from(*s),
    }
}

fn json_text(cfg: &RunConfig, report: &Report) -> String {
    let params: Map<String, Json> = cfg
        .params
        .iter()
        .map(|(k, v)| (k.to_string(), param_json(v)))
        .collect();
    let mut root = Map::new();
    root.insert("tool".into(), json!("idqhe"));
    root.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    root.insert("command".into(), json!(cfg.command.name()));
    root.insert("units".into(), json!(UNITS));
    root.insert("format".into(), json!(cfg.format.name()));
    root.insert("params".into(), Json::Object(params));
    root.insert("tolerances".into(), fields_json(&report.tolerances));
    if !report.summary.is_empty() {
        root.insert("summary".into(), fields_json(&report.summary));
    }
    match &report.body {
        Body::Record(fields) => {
            root.insert("result".into(), fields_json(fields));
        }
        Body::Table { columns, rows } => {
            root.insert("columns".into(), json!(columns));
            let rows: Vec<Json> = rows
                .iter()
                .map(|r| Json::Array(r.iter().map(cell_json).collect()))
                .collect();
            root.insert("rows".into(), Json::Array(rows));
        }
    }
    let mut text = serde_json::to_string_pretty(&Json::Object(root)).expect("json values serialize");
    text.push('\n');
    text
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return MISSING.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn cell_csv(c: &Cell) -> String {
    match c {
        Cell::Num(x) => sig12(*x),
        Cell::Int(k) => k.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Missing => MISSING.to_string(),
    }
}

fn csv_text(cfg: &RunConfig, report: &Report) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("# idqhe {}", env!("CARGO_PKG_VERSION")));
    line(format!("# command {}", cfg.command.name()));
    line(format!("# units {UNITS}"));
    line(format!("# format {}", cfg.format.name()));
    for (k, v) in &cfg.params {
        line(format!("# param {k} = {}", v.render()));
    }
    for (k, c) in &report.tolerances {
        line(format!("# tolerance {k} = {}", cell_csv(c)));
    }
    for (k, c) in &report.summary {
        line(format!("# summary {k} = {}", cell_csv(c)));
    }
    match &report.body {
        Body::Record(fields) => {
            line(fields.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","));
            line(fields.iter().map(|(_, c)| cell_csv(c)).collect::<Vec<_>>().join(","));
        }
        Body::Table { columns, rows } => {
            line(columns.join(","));
            for r in rows {
                line(r.iter().map(cell_csv).collect::<Vec<_>>().join(","));
            }
        }
    }
    out
}
