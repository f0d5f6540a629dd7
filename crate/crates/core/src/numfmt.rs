/// Decimal rendering with `sig` significant digits, trailing zeros trimmed.
/// Falls back to exponent notation for very large or small magnitudes.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    // Round first so the exponent reflects the rounded value (9.9999999996 -> 10).
    let sci = format!("{:.*e}", sig - 1, x);
    let (_, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-5..sig as i32).contains(&exp) {
        return sci;
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Score rendering used by every TSV output.
pub fn fmt9(x: f64) -> String {
    format_sig(x, 9)
}
