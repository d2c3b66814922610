//! Quantities with unit suffixes on the command line.

/// Parses a time such as `30ns`, `-5e-8s` or `12` (nanoseconds). Returns
/// seconds.
pub fn parse_time(text: &str) -> Result<f64, String> {
    let (number, scale) = if let Some(v) = text.strip_suffix("ns") {
        (v, 1e-9)
    } else if let Some(v) = text.strip_suffix('s') {
        (v, 1.0)
    } else {
        (text, 1e-9)
    };
    let value = parse_number(number, text)?;
    // Dividing keeps "30ns" identical to the config's ns→s conversion.
    Ok(if scale == 1.0 { value } else { value / 1e9 })
}

/// Parses an angle such as `-30deg`, `0.5rad` or `45` (degrees). Returns
/// radians.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    if let Some(v) = text.strip_suffix("deg") {
        Ok(parse_number(v, text)?.to_radians())
    } else if let Some(v) = text.strip_suffix("rad") {
        parse_number(v, text)
    } else {
        Ok(parse_number(text, text)?.to_radians())
    }
}

fn parse_number(number: &str, original: &str) -> Result<f64, String> {
    let v: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse '{original}' as a number with an optional unit"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{original}' is not finite"))
    }
}
