//! Deterministic JSON emission.
//!
//! Output files must be byte-identical across reruns: object keys keep
//! struct declaration order and floats are written with 17 significant
//! digits, enough to round-trip any f64.

use serde::Serialize;
use serde_json::Value;

/// Serializes a value to JSON text with a stable float format.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report type serializes");
    let mut out = String::new();
    render(&v, 0, &mut out);
    out.push('\n');
    out
}

fn render(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap()));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).unwrap());
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                render(item, indent + 1, out);
            }
            newline(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                render(item, indent + 1, out);
            }
            newline(indent, out);
            out.push('}');
        }
    }
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// 17 significant digits; NaN and infinities have no JSON encoding and
/// are mapped to null.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Demo {
        schema: u32,
        name: String,
        value: f64,
        seq: Vec<f64>,
        flag: bool,
    }

    #[test]
    fn stable_field_order_and_float_format() {
        let d = Demo {
            schema: 1,
            name: "x".into(),
            value: 0.1,
            seq: vec![1.0, f64::NAN],
            flag: false,
        };
        let s = to_canonical_json(&d);
        let schema_pos = s.find("\"schema\"").unwrap();
        let name_pos = s.find("\"name\"").unwrap();
        let value_pos = s.find("\"value\"").unwrap();
        assert!(schema_pos < name_pos && name_pos < value_pos);
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("null"));
        // byte-identical on rerun
        assert_eq!(s, to_canonical_json(&d));
    }

    #[test]
    fn floats_round_trip() {
        for &x in &[0.1, -3.5e-300, 1.0 / 3.0, 9.87654321e18] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
