//! Value parsers for flags that clap cannot handle on its own.

use std::str::FromStr;

use freiman_core::{GroupSpec, Rational};

/// Parses `m1xm2x...` where each factor is `m` or `m^n`, e.g. `2x2x4`,
/// `2^5`, `3^2x9`.
pub fn parse_group(s: &str) -> Result<GroupSpec, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty group description".into());
    }
    let mut moduli = Vec::new();
    for token in s.split(['x', 'X']) {
        let (base, reps) = match token.split_once('^') {
            Some((b, n)) => (b, parse_uint(n, token)?),
            None => (token, 1),
        };
        let m = parse_uint(base, token)?;
        if m > u32::MAX as u64 {
            return Err(format!("modulus {m} is too large"));
        }
        if reps == 0 {
            return Err(format!("factor `{token}` has exponent 0"));
        }
        if reps > 64 {
            return Err(format!("factor `{token}` repeats more than 64 times"));
        }
        moduli.extend(std::iter::repeat(m as u32).take(reps as usize));
    }
    GroupSpec::new(moduli).map_err(|e| e.to_string())
}

fn parse_uint(s: &str, token: &str) -> Result<u64, String> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("malformed group factor `{token}`"));
    }
    s.parse().map_err(|_| format!("group factor `{token}` is out of range"))
}

/// Accepts `p/q` or an integer `p`. Decimal and exponent notation are
/// rejected so that no value ever passes through floating point.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let num_ok = digits(num.strip_prefix('-').unwrap_or(num));
    if !num_ok || !den.map_or(true, digits) {
        return Err(format!("`{s}` is not a rational of the form p/q"));
    }
    if den.is_some_and(|d| d.bytes().all(|b| b == b'0')) {
        return Err(format!("`{s}` has a zero denominator"));
    }
    Rational::from_str(s).map_err(|e| format!("`{s}`: {e}"))
}
