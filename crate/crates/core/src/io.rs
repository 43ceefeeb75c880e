//! Number formatting and small CSV/JSON helpers shared by the CLI and tests.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Number, Value};

use crate::error::{Error, Result};

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf` for
/// non-finite input.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// JSON number carrying exactly the [`fmt_f64`] digits; `null` when
/// non-finite.
pub fn json_f64(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let n: Number = serde_json::from_str(&fmt_f64(v)).expect("formatted float parses");
    Value::Number(n)
}

pub fn json_f64s(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| json_f64(x)).collect())
}

/// Reads a whole file, naming the path in the error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Rewrites every non-integer number in a JSON tree with [`fmt_f64`] digits,
/// so serialized structs print like hand-built objects.
pub fn precise(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => match n.as_f64() {
            Some(v) => json_f64(v),
            None => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(precise).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, precise(v))).collect()),
        other => other,
    }
}

/// CSV text from a header and numeric rows.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Matrix in coordinate text format, one `row col value` line per entry.
pub fn triplet_text(entries: &[(usize, usize, f64)]) -> String {
    let mut out = String::new();
    for &(i, j, v) in entries {
        let _ = writeln!(out, "{i} {j} {}", fmt_f64(v));
    }
    out
}

/// Eigenvalues as CSV `index,eigenvalue`.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_f64(*v));
    }
    out
}
