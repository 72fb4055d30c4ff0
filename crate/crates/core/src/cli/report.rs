use serde::Serialize;
use serde_json::{json, Value};

/// One pass/fail line of a suite. Soft checks are reported but never fail a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub hard: bool,
    pub detail: String,
    pub measured: Value,
}

/// A CSV written next to the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    #[serde(skip)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: usize,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// constants measured along the way
    pub measured: Value,
    pub runtime_seconds: f64,
    pub budget_seconds: f64,
    pub over_budget: bool,
    pub passed: bool,
}

impl SuiteReport {
    pub fn new(suite: &str, criterion: usize) -> Self {
        Self {
            suite: suite.into(),
            criterion,
            checks: Vec::new(),
            tables: Vec::new(),
            measured: json!({}),
            runtime_seconds: 0.0,
            budget_seconds: 0.0,
            over_budget: false,
            passed: true,
        }
    }

    pub fn hard(&mut self, id: &str, passed: bool, detail: impl Into<String>, measured: Value) {
        self.push(id, passed, true, detail.into(), measured);
    }

    pub fn soft(&mut self, id: &str, passed: bool, detail: impl Into<String>, measured: Value) {
        self.push(id, passed, false, detail.into(), measured);
    }

    fn push(&mut self, id: &str, passed: bool, hard: bool, detail: String, measured: Value) {
        self.checks.push(Check { id: format!("{}/{id}", self.suite), passed, hard, detail, measured });
        self.passed = self.checks.iter().all(|c| c.passed || !c.hard);
    }

    pub fn table(&mut self, name: &str, body: String) {
        self.tables.push(Table { name: name.into(), body });
    }

    pub fn measure(&mut self, key: &str, v: Value) {
        self.measured[key] = v;
    }

    /// Hard checks that failed.
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.hard && !c.passed).collect()
    }
}

/// Finite floats as numbers, others as strings, so JSON stays valid.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}
