//! Float formatting for emitted data: 17 significant decimal digits plus an
//! exact hexfloat.

/// Round-trippable decimal, 17 significant digits.
pub fn dec(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// C99-style hexfloat, e.g. 0x1.8p+1 for 3.
pub fn hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{mant:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let es = if e >= 0 { format!("+{e}") } else { format!("{e}") };
    format!("{sign}0x{lead}{frac}p{es}")
}

/// Inverse of [`hex`], for round-trip checks.
pub fn parse_hex(s: &str) -> Option<f64> {
    let (neg, t) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let t = t.strip_prefix("0x")?;
    let (m, e) = t.split_once('p')?;
    let e: i32 = e.parse().ok()?;
    let (ip, fp) = m.split_once('.').unwrap_or((m, ""));
    let mut v = u64::from_str_radix(ip, 16).ok()? as f64;
    let mut scale = 1.0 / 16.0;
    for c in fp.chars() {
        v += c.to_digit(16)? as f64 * scale;
        scale /= 16.0;
    }
    let r = v * 2f64.powi(e);
    Some(if neg { -r } else { r })
}

/// "decimal,hex" pair for CSV cells.
pub fn csv_pair(x: f64) -> String {
    format!("{},{}", dec(x), hex(x))
}
