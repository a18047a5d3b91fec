//! Boundary parsing: SI time suffixes and input polarization states.

use std::str::FromStr;

use num_complex::Complex64;
use sagnac_core::engine::JonesVector;
use sagnac_core::JonesVector64;

/// Parses `"32ns"`, `"1.5us"`, `"2ms"`, `"10ps"`, `"3s"` or a bare number of seconds.
pub fn parse_seconds(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = [
        ("ps", 1e-12),
        ("ns", 1e-9),
        ("us", 1e-6),
        ("µs", 1e-6),
        ("ms", 1e-3),
        ("s", 1.0),
    ]
    .iter()
    .find_map(|(suffix, k)| t.strip_suffix(suffix).map(|n| (n, *k)))
    .unwrap_or((t, 1.0));
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("invalid duration `{s}` (expected e.g. 32ns, 1.5us, 2ms, 1e-9)"))?;
    if !v.is_finite() {
        return Err(format!("duration `{s}` is not finite"));
    }
    Ok(v * scale)
}

/// `H`, `V`, `D`, `A`, or a custom `α,β` pair such as `0.6,0.8i`. Custom
/// pairs are normalized.
pub fn parse_input_state(s: &str) -> Result<JonesVector64, String> {
    match s.trim() {
        "H" | "h" => return Ok(JonesVector::horizontal()),
        "V" | "v" => return Ok(JonesVector::vertical()),
        "D" | "d" => return Ok(JonesVector::diagonal()),
        "A" | "a" => return Ok(JonesVector::antidiagonal()),
        _ => {}
    }
    let bad = || format!("invalid input state `{s}` (expected H, V, D, A or `alpha,beta`)");
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a = Complex64::from_str(a.trim()).map_err(|_| bad())?;
    let b = Complex64::from_str(b.trim()).map_err(|_| bad())?;
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(format!("input state `{s}` has zero or non-finite norm"));
    }
    JonesVector::new(a / norm, b / norm).map_err(|e| e.to_string())
}
