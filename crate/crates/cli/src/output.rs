//! Deterministic serialization: fixed significant-digit float formatting,
//! manual CSV assembly, and a JSON pass that rounds every float to the same
//! digit budget.  Identical inputs must produce byte-identical output.

use std::path::PathBuf;

use serde_json::Value;

use crate::CliError;

/// Scientific notation with `sig` significant digits, e.g. sig = 15 gives
/// `6.66666666666667e-1`.
pub fn fmt_float(value: f64, sig: usize) -> String {
    format!("{:.*e}", sig.saturating_sub(1), value)
}

/// Round a float to `sig` significant digits (via its decimal form), the
/// value a JSON document carries for it.
fn round_sig(value: f64, sig: usize) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    fmt_float(value, sig).parse().expect("formatted float reparses")
}

/// Recursively round every fractional number in a JSON tree to `sig`
/// significant digits; integers pass through untouched.
pub fn round_json_floats(value: Value, sig: usize) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let rounded = round_sig(n.as_f64().expect("checked f64"), sig);
                Value::Number(
                    serde_json::Number::from_f64(rounded).expect("rounded float stays finite"),
                )
            } else {
                Value::Number(n)
            }
        }
        Value::Array(items) => {
            Value::Array(items.into_iter().map(|v| round_json_floats(v, sig)).collect())
        }
        Value::Object(map) => Value::Object(
            map.into_iter().map(|(k, v)| (k, round_json_floats(v, sig))).collect(),
        ),
        other => other,
    }
}

/// Serialize to pretty JSON with the float digit budget applied.
pub fn to_json_payload<T: serde::Serialize>(value: &T, sig: usize) -> Result<String, CliError> {
    let tree = serde_json::to_value(value)
        .map_err(|e| CliError::Io(format!("JSON serialization failed: {e}")))?;
    let rounded = round_json_floats(tree, sig);
    let mut text = serde_json::to_string_pretty(&rounded)
        .map_err(|e| CliError::Io(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Assemble a CSV document from a header and pre-formatted rows.
pub fn csv_payload(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Where a command's payload goes, plus the chatter switch.
pub struct Emitter {
    pub path: Option<PathBuf>,
    pub quiet: bool,
}

impl Emitter {
    /// Write the payload to the configured file (announcing it unless quiet)
    /// or to stdout when no file is set.
    pub fn emit(&self, payload: &str, rows: usize, label: &str) -> Result<(), CliError> {
        match &self.path {
            Some(path) => {
                std::fs::write(path, payload).map_err(|e| {
                    CliError::Io(format!("cannot write {}: {e}", path.display()))
                })?;
                if !self.quiet {
                    println!("wrote {rows} {label} rows to {}", path.display());
                }
                Ok(())
            }
            None => {
                print!("{payload}");
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fifteen_significant_digits() {
        assert_eq!(fmt_float(2.0 / 3.0, 15), "6.66666666666667e-1");
        assert_eq!(fmt_float(2.0, 15), "2.00000000000000e0");
        assert_eq!(fmt_float(-0.05, 15), "-5.00000000000000e-2");
    }

    #[test]
    fn json_floats_are_rounded_but_integers_are_not() {
        let tree = serde_json::json!({ "x": 2.0f64 / 3.0, "n": 12, "list": [0.1f64 + 0.2] });
        let rounded = round_json_floats(tree, 15);
        assert_eq!(rounded["x"], serde_json::json!(0.666666666666667));
        assert_eq!(rounded["n"], serde_json::json!(12));
        assert_eq!(rounded["list"][0], serde_json::json!(0.3));
    }

    #[test]
    fn csv_assembly_is_plain_lines() {
        let payload = csv_payload("a,b", &[vec!["1".into(), "2".into()]]);
        assert_eq!(payload, "a,b\n1,2\n");
    }
}
