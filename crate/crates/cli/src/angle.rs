//! Angle and list parsing for the command line.
//!
//! Accepted forms: raw radians (`1.25`, `-0.5`) and multiples of π such as
//! `pi`, `2pi`, `-pi/2`, `3*pi/4`, `0.5pi`. Fractions of π are evaluated as
//! `coefficient·π / denominator` so that integer multiples are exact.

use std::f64::consts::PI;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty angle".into());
    }
    let Some(at) = s.find("pi") else {
        return parse_finite(&s).map_err(|_| format!("invalid angle '{text}'"));
    };
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coefficient = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => parse_finite(h).map_err(|_| format!("invalid coefficient in angle '{text}'"))?,
    };
    let denominator = match tail {
        "" => 1.0,
        t => {
            let d = t
                .strip_prefix('/')
                .ok_or_else(|| format!("unexpected '{t}' after pi in '{text}'"))?;
            let d = parse_finite(d).map_err(|_| format!("invalid denominator in angle '{text}'"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in angle '{text}'"));
            }
            d
        }
    };
    Ok(coefficient * PI / denominator)
}

fn parse_finite(s: &str) -> Result<f64, ()> {
    s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or(())
}

/// Comma-separated list of angles or reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_angle).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    #[test]
    fn multiples_of_pi() {
        assert_eq!(parse_angle("2pi").unwrap(), TAU);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -FRAC_PI_2);
        assert_eq!(parse_angle("pi/6").unwrap(), PI / 6.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle(" 0.5 PI ").unwrap(), 0.5 * PI);
    }

    #[test]
    fn raw_radians() {
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert_eq!(parse_angle("-3").unwrap(), -3.0);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "pie", "2pi/0", "x", "pi/", "nan", "inf", "2pi3"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("pi/6, pi/3").unwrap(), vec![PI / 6.0, PI / 3.0]);
        assert_eq!(parse_list("0.5,-1").unwrap(), vec![0.5, -1.0]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("1,,2").is_err());
    }
}
