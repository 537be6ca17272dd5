//! Curve and report formatting.

use std::fs;
use std::path::Path;

use bubble_core::PriceCurve;

use crate::error::{CliError, Result};

pub const CURVE_HEADER: &str = "D,intrinsic,price,bubble,relative";

/// `x` with 12 significant digits: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// CSV text for `curve`, preceded by `# note` lines.
pub fn render_curve(curve: &PriceCurve, notes: &[String]) -> Result<String> {
    if curve.is_empty() {
        return Err(CliError::Usage("refusing to write an empty curve".into()));
    }
    let mut out = String::new();
    for n in notes {
        out.push_str("# ");
        out.push_str(n);
        out.push('\n');
    }
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for i in 0..curve.len() {
        let row = [
            curve.grid[i],
            curve.intrinsic[i],
            curve.price[i],
            curve.bubble[i],
            curve.relative[i],
        ];
        let cells: Vec<String> = row.iter().map(|&v| fmt_sig(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes `curve` to `path`. Nothing is created when the curve is empty.
pub fn emit_curve(curve: &PriceCurve, path: &Path, notes: &[String]) -> Result<()> {
    let text = render_curve(curve, notes)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `key=value` lines.
pub fn render_report(lines: &[(String, String)]) -> String {
    lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
