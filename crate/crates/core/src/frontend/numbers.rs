//! Numeric literal parsing for WAT immediates.

fn strip_underscores(s: &str) -> Option<String> {
    if s.starts_with('_') || s.ends_with('_') || s.contains("__") {
        return None;
    }
    Some(s.replace('_', ""))
}

/// Parses an integer literal of `bits` width. Accepts the signed and the
/// unsigned range; the result is the two's-complement bit pattern.
pub fn parse_int(text: &str, bits: u32) -> Option<u64> {
    let (neg, rest) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let clean = strip_underscores(rest)?;
    let magnitude: u128 = if let Some(hex) = clean.strip_prefix("0x") {
        u128::from_str_radix(hex, 16).ok()?
    } else {
        if clean.is_empty() || !clean.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        clean.parse::<u128>().ok()?
    };
    let limit_unsigned: u128 = 1u128 << bits;
    let limit_neg: u128 = 1u128 << (bits - 1);
    if neg {
        if magnitude > limit_neg {
            return None;
        }
        let v = (limit_unsigned - magnitude) % limit_unsigned;
        Some(v as u64)
    } else {
        if magnitude >= limit_unsigned {
            return None;
        }
        Some(magnitude as u64)
    }
}

fn parse_hex_float(body: &str) -> Option<f64> {
    let (mantissa, exp) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut value = 0f64;
    for c in int_part.chars() {
        value = value * 16.0 + c.to_digit(16)? as f64;
    }
    let mut scale = 1.0 / 16.0;
    for c in frac_part.chars() {
        value += c.to_digit(16)? as f64 * scale;
        scale /= 16.0;
    }
    Some(value * 2f64.powi(exp))
}

/// Parses a float literal: decimal, hexadecimal, `inf`, `nan`, `nan:0x..`.
/// NaN payloads are reduced to the canonical NaN of the target width.
pub fn parse_float(text: &str) -> Option<f64> {
    let (neg, rest) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let clean = strip_underscores(rest)?;
    let magnitude = if clean == "inf" {
        f64::INFINITY
    } else if clean == "nan" || clean.starts_with("nan:0x") {
        f64::NAN
    } else if let Some(hex) = clean.strip_prefix("0x") {
        parse_hex_float(hex)?
    } else {
        if !clean.starts_with(|c: char| c.is_ascii_digit()) {
            return None;
        }
        clean.parse::<f64>().ok()?
    };
    Some(if neg { -magnitude } else { magnitude })
}

/// Parses an unsigned 32-bit index or `key=value` immediate value.
pub fn parse_u32(text: &str) -> Option<u32> {
    let clean = strip_underscores(text)?;
    if let Some(hex) = clean.strip_prefix("0x") {
        u32::from_str_radix(hex, 16).ok()
    } else if clean.bytes().all(|b| b.is_ascii_digit()) && !clean.is_empty() {
        clean.parse().ok()
    } else {
        None
    }
}
