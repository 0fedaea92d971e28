//! Exact decimal parsing and half-even display rounding over big rationals.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Parses `[-]digits[.digits]` exactly. No exponent, no grouping.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if whole.is_empty() || !digits_ok(whole) || !digits_ok(frac) || (body.contains('.') && frac.is_empty()) {
        return None;
    }
    let numer: BigInt = format!("{whole}{frac}").parse().ok()?;
    let denom = BigInt::from(10u32).pow(frac.len() as u32);
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Nearest integer, ties to even.
pub fn round_half_even_int(value: &BigRational) -> BigInt {
    let (q, r) = value.numer().div_mod_floor(value.denom());
    let twice = r * 2u32;
    match twice.cmp(value.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1u32,
        std::cmp::Ordering::Equal if q.is_even() => q,
        std::cmp::Ordering::Equal => q + 1u32,
    }
}

/// Renders `value` with exactly `places` decimals, rounding half to even.
pub fn round_half_even(value: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = round_half_even_int(&(value * BigRational::from_integer(scale)));
    let negative = scaled.sign() == Sign::Minus;
    let digits = scaled.abs().to_string();
    let places = places as usize;
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    let sign = if negative && !scaled.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// `MM:SS` with seconds rounded half-even; minutes are not capped at 59.
pub fn format_mmss(seconds: &BigRational) -> String {
    let total = round_half_even_int(seconds);
    let (m, s) = total.div_mod_floor(&BigInt::from(60u32));
    format!("{m:02}:{s:02}")
}
