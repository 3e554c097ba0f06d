//! Fixed-format number rendering shared by every CSV/JSON emitter.

/// Round-trip representation with 17 significant digits, so identical runs
/// produce byte-identical files.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number, with non-finite values mapped to `null`.
pub fn json_f64(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}
