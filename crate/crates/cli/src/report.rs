use serde::Serialize;
use serde_json::{json, Map, Value};

/// Machine-readable result of one command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub lhs: Value,
    pub rhs: Value,
    pub tolerance: Value,
}

/// JSON cannot carry non-finite floats, so they become strings.
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

pub fn log(x: f64) -> Value {
    json!({ "scale": "log", "value": num(x) })
}

pub fn linear(x: f64) -> Value {
    json!({ "scale": "linear", "value": num(x) })
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport { command: command.to_string(), inputs: Map::new(), outputs: Map::new(), checks: Vec::new() }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.inputs.insert(key.to_string(), to_value(v));
        self
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.outputs.insert(key.to_string(), to_value(v));
        self
    }

    pub fn check(&mut self, name: &str, pass: bool, lhs: Value, rhs: Value, tolerance: Value) -> &mut Self {
        self.checks.push(Check { name: name.to_string(), pass, lhs, rhs, tolerance });
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or_else(|e| json!(format!("unserializable: {e}")))
}
