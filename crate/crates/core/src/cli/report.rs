//! Report assembly and the deterministic JSON writer.
//!
//! Object keys are sorted, floats are written with 17 significant digits and
//! non-finite values become `null`, so a fixed configuration always yields the
//! same bytes.

use serde::Serialize;
use serde_json::{Map, Value};

/// A pass/fail check aggregated over all points.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Largest per-point value.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-point output of a subcommand.
#[derive(Debug, Clone, Default)]
pub struct PointBlock {
    /// Named check values, compared against the tolerance table.
    pub checks: Vec<(String, f64)>,
    /// Informational data, not judged.
    pub info: Map<String, Value>,
}

impl PointBlock {
    pub fn check(&mut self, name: &str, value: f64) {
        self.checks.push((name.to_string(), value));
    }

    pub fn info<T: Serialize>(&mut self, name: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.info.insert(name.to_string(), v);
    }
}

/// Aggregates per-point checks: the report value of a check is the maximum
/// over points, and a check missing at some points is judged where present.
pub fn aggregate(points: &[PointBlock], tolerances: &dyn Fn(&str) -> f64) -> Vec<Check> {
    let mut names: Vec<String> = Vec::new();
    for p in points {
        for (n, _) in &p.checks {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mut value: f64 = 0.0;
            let mut finite = true;
            for p in points {
                for (n, v) in &p.checks {
                    if *n == name {
                        finite &= v.is_finite();
                        value = value.max(*v);
                    }
                }
            }
            let tolerance = tolerances(&name);
            let value = if finite { value } else { f64::NAN };
            Check {
                pass: finite && value < tolerance,
                name,
                value,
                tolerance,
            }
        })
        .collect()
}

/// Builds a point's JSON object: coordinates, checks and info merged.
pub fn point_json(index: usize, coords: &[f64], block: &PointBlock) -> Value {
    let mut m = block.info.clone();
    m.insert("index".into(), Value::from(index));
    m.insert("coords".into(), serde_json::to_value(coords).unwrap_or(Value::Null));
    let mut checks = Map::new();
    for (n, v) in &block.checks {
        checks.insert(n.clone(), num(*v));
    }
    m.insert("checks".into(), Value::Object(checks));
    Value::Object(m)
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Pretty JSON with sorted keys and fixed float formatting.
pub fn to_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, 0, &mut s);
    s.push('\n');
    s
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&format!("{x:.16e}")),
                    _ => out.push_str("null"),
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            if a.iter().all(|x| !x.is_object() && !x.is_array()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 1, out);
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&m[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits_and_keys_sort() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": null});
        let s = to_json(&v);
        assert_eq!(s, "{\n  \"a\": [1, 2.5000000000000000e0],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": null\n}\n");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn aggregate_is_max_and_nan_fails() {
        let mut a = PointBlock::default();
        a.check("x", 1e-12);
        let mut b = PointBlock::default();
        b.check("x", 3e-10);
        b.check("y", f64::NAN);
        let checks = aggregate(&[a, b], &|_| 1e-9);
        assert_eq!(checks[0].value, 3e-10);
        assert!(checks[0].pass);
        assert!(!checks[1].pass);
    }
}
