//! Machine-readable run reports (`"schema": 1`).

use crate::config::SCHEMA;
use crate::error::CliError;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Passes for a degenerate reason, e.g. `c = 0` or an empty grid.
    Trivial,
    /// Not applicable to this metric.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Point {
    Sample { x: Vec<f64>, y: Vec<f64> },
    Grid { b2: f64, s: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Largest residual seen; `null` when nothing was evaluated or it is NaN.
    pub worst: Option<f64>,
    pub tolerance: Option<f64>,
    pub worst_point: Option<Point>,
    pub detail: String,
}

impl Check {
    pub fn new(name: &'static str, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name,
            status,
            worst: None,
            tolerance: None,
            worst_point: None,
            detail: detail.into(),
        }
    }

    /// A residual check: passes when `worst < tol`.
    pub fn residual(name: &'static str, worst: Worst, tol: f64, detail: impl Into<String>) -> Self {
        let status = match worst.value {
            _ if worst.count == 0 => Status::Trivial,
            Some(v) if v < tol && worst.errors == 0 => Status::Pass,
            _ => Status::Fail,
        };
        let mut detail = detail.into();
        if worst.errors > 0 {
            detail = format!(
                "{detail}; {} of {} evaluations failed: {}",
                worst.errors,
                worst.count,
                worst.first_error.unwrap_or_default()
            );
        }
        Self {
            name,
            status,
            worst: worst.value,
            tolerance: Some(tol),
            worst_point: worst.point,
            detail,
        }
    }
}

/// Running maximum of a residual, with NaN and failures dominating.
#[derive(Debug, Clone, Default)]
pub struct Worst {
    pub value: Option<f64>,
    pub point: Option<Point>,
    pub count: usize,
    pub errors: usize,
    pub first_error: Option<String>,
}

impl Worst {
    pub fn push(&mut self, r: Result<f64, String>, at: Point) {
        self.count += 1;
        match r {
            Ok(v) => {
                let v = v.abs();
                let worse = match self.value {
                    None => self.point.is_none(),
                    Some(w) => v > w || v.is_nan(),
                };
                if worse {
                    self.value = (!v.is_nan()).then_some(v);
                    self.point = Some(at);
                }
                if v.is_nan() {
                    self.errors += 1;
                    self.first_error
                        .get_or_insert_with(|| "NaN residual".into());
                }
            }
            Err(e) => {
                self.errors += 1;
                self.first_error.get_or_insert(e);
                if self.point.is_none() {
                    self.point = Some(at);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub status: Status,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Value>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self {
            schema: SCHEMA,
            command,
            version: env!("CARGO_PKG_VERSION"),
            status: Status::Pass,
            config,
            verdict: None,
            checks: vec![],
            table: None,
            entries: None,
            wall_time_s: 0.0,
        }
    }

    /// Overall status: any failing check fails the report.
    pub fn finish(&mut self) {
        self.status = if self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
    }

    pub fn exit_code(&self) -> u8 {
        u8::from(self.status == Status::Fail)
    }
}

pub fn error_body(command: &str, e: &CliError) -> Value {
    serde_json::json!({
        "schema": SCHEMA,
        "command": command,
        "status": "error",
        "error": { "kind": e.kind(), "message": e.to_string() },
    })
}
