//! Parsing of numbers with SI suffixes (`10k`, `33n`, `4.104M`).

use crate::error::{Error, Result};

/// Parses a finite number with an optional trailing SI prefix
/// (`p n u µ m k M G`).
pub fn parse_si(text: &str) -> Result<f64> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::invalid("empty number"));
    }
    let value = match t.parse::<f64>() {
        Ok(v) => v,
        Err(_) => {
            let last = t.chars().last().unwrap_or(' ');
            let exp: i32 = match last {
                'p' => -12,
                'n' => -9,
                'u' | 'µ' => -6,
                'm' => -3,
                'k' | 'K' => 3,
                'M' => 6,
                'G' => 9,
                _ => return Err(Error::invalid(format!("not a number: {t:?}"))),
            };
            let head = &t[..t.len() - last.len_utf8()];
            let bad = || Error::invalid(format!("not a number: {t:?}"));
            if head.contains(['e', 'E']) {
                head.parse::<f64>().map_err(|_| bad())? * 10f64.powi(exp)
            } else {
                // "33" + "e-9" parses correctly rounded, unlike 33.0 * 1e-9
                format!("{head}e{exp}").parse::<f64>().map_err(|_| bad())?
            }
        }
    };
    if !value.is_finite() {
        return Err(Error::invalid(format!("not finite: {t:?}")));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_si("10k").unwrap(), 10_000.0);
        assert!((parse_si("33n").unwrap() - 33e-9).abs() < 1e-24);
        assert_eq!(parse_si("4.104M").unwrap(), 4_104_000.0);
        assert!((parse_si("653u").unwrap() - 653e-6).abs() < 1e-18);
        assert!((parse_si("653µ").unwrap() - 653e-6).abs() < 1e-18);
        assert_eq!(parse_si("2.5").unwrap(), 2.5);
        assert_eq!(parse_si("1e-9").unwrap(), 1e-9);
        assert!((parse_si("10m").unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_si("").is_err());
        assert!(parse_si("k").is_err());
        assert!(parse_si("12x").is_err());
        assert!(parse_si("inf").is_err());
    }
}
