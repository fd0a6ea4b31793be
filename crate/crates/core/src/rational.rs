//! Exact rational numbers and their textual forms.
//!
//! Every coefficient in a [`Network`](crate::Network) is an arbitrary-precision
//! rational. Literals are parsed straight from their decimal text so that
//! `"0.1"` is exactly `1/10`, never the nearest binary float.

use alloc::format;
use alloc::string::{String, ToString};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational used for weights, inputs, outputs and solver models.
pub type Rational = num_rational::BigRational;

/// Failure to read a numeric literal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid numeric literal `{literal}`: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

fn bad(literal: &str, reason: &'static str) -> ParseRationalError {
    ParseRationalError {
        literal: literal.to_string(),
        reason,
    }
}

/// Builds an integer-valued rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Builds `num/den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u32), exp as usize)
}

/// Parses a decimal literal exactly.
///
/// Accepted forms: `12`, `-0.125`, `+3.`, `.5`, `1e-6`, `2.5E3`, and the
/// quotient form `7/2` (each side an integer, denominator nonzero).
pub fn parse_decimal(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(bad(text, "empty"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = parse_integer(n.trim()).ok_or_else(|| bad(text, "bad numerator"))?;
        let den: BigInt = parse_integer(d.trim()).ok_or_else(|| bad(text, "bad denominator"))?;
        if den.is_zero() {
            return Err(bad(text, "zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }

    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp_text = &body[pos + 1..];
            let exp: i64 = exp_text.parse().map_err(|_| bad(text, "bad exponent"))?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(text, "no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad(text, "unexpected character"));
    }
    if exponent.unsigned_abs() > 4096 {
        return Err(bad(text, "exponent out of range"));
    }

    let mut digits = String::with_capacity(int_part.len() + frac_part.len());
    digits.push_str(int_part);
    digits.push_str(frac_part);
    let mut numer: BigInt = digits.parse().map_err(|_| bad(text, "no digits"))?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let value = if scale >= 0 {
        Rational::from_integer(numer * pow10(scale as u32))
    } else {
        Rational::new(numer, pow10((-scale) as u32))
    };
    Ok(value)
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Finite decimal expansion if one exists (denominator of the form 2^a·5^b).
pub fn to_exact_decimal(r: &Rational) -> Option<String> {
    if r.is_integer() {
        return Some(r.numer().to_string());
    }
    let mut den = r.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = r * Rational::from_integer(pow10(places));
    debug_assert!(scaled.is_integer());
    let digits = scaled.numer().abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        let mut p = "0".repeat(places + 1 - digits.len());
        p.push_str(&digits);
        p
    } else {
        digits
    };
    let split = padded.len() - places;
    let sign = if r.is_negative() { "-" } else { "" };
    Some(format!("{sign}{}.{}", &padded[..split], &padded[split..]))
}

/// Exact text suitable for model files: finite decimal when possible,
/// otherwise `p/q`.
pub fn to_exact_string(r: &Rational) -> String {
    to_exact_decimal(r).unwrap_or_else(|| format!("{}/{}", r.numer(), r.denom()))
}

/// Rounded decimal rendering with `places` fractional digits, for humans.
pub fn to_approx_string(r: &Rational, places: u32) -> String {
    let scale = Rational::from_integer(pow10(places));
    let scaled = (r * scale).round();
    let n = scaled.numer();
    let digits = n.abs().to_string();
    let places = places as usize;
    let padded = if digits.len() <= places {
        let mut p = "0".repeat(places + 1 - digits.len());
        p.push_str(&digits);
        p
    } else {
        digits
    };
    let split = padded.len() - places;
    let sign = if n.sign() == Sign::Minus { "-" } else { "" };
    if places == 0 {
        format!("{sign}{padded}")
    } else {
        format!("{sign}{}.{}", &padded[..split], &padded[split..])
    }
}

/// Nearest `f64`, used only for cross-checks and display.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fallback for magnitudes outside the direct conversion path.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}
