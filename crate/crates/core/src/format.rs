//! Number formatting shared by the CSV and JSON writers.

use serde_json::Value;

/// Significant digits kept in every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `v` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest text that reads back as `round_sig(v)`; "NaN", "inf", "-inf"
/// for non-finite values.
pub fn fmt_num(v: f64) -> String {
    format!("{:?}", round_sig(v))
}

/// Rounds every number inside a JSON document in place. Non-finite floats
/// already serialize as null.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
