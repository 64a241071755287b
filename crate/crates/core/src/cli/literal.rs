//! Command-line literals: comma-separated lists of `<float>[+|-]<float>i`
//! complex numbers, plain reals, or integers.

use num_complex::Complex64;

use super::CliError;
use crate::algebra::QuadInt;

fn bad(token: &str) -> CliError {
    CliError::Usage(format!("cannot parse `{token}`"))
}

fn parse_real(s: &str, token: &str) -> Result<f64, CliError> {
    // reject words such as `inf` or `nan` that `f64::from_str` accepts
    if s.is_empty()
        || !s
            .bytes()
            .all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b))
    {
        return Err(bad(token));
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(token))
}

/// One complex number: `3`, `-2.5`, `1+2i`, `1e-3-4i`, `2i`, `-i`.
pub fn parse_complex(token: &str) -> Result<Complex64, CliError> {
    let Some(body) = token.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(token, token)?, 0.0));
    };
    // split at the last sign that is not the leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(s, token),
    };
    match split {
        Some(i) => Ok(Complex64::new(
            parse_real(&body[..i], token)?,
            imag(&body[i..])?,
        )),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn tokens(literal: &str) -> Result<Vec<&str>, CliError> {
    if literal.is_empty() || literal.chars().any(char::is_whitespace) {
        return Err(CliError::Usage(format!(
            "malformed list literal `{literal}`"
        )));
    }
    Ok(literal.split(',').collect())
}

pub fn parse_complex_list(literal: &str) -> Result<Vec<Complex64>, CliError> {
    tokens(literal)?.into_iter().map(parse_complex).collect()
}

pub fn parse_int_list(literal: &str) -> Result<Vec<i64>, CliError> {
    tokens(literal)?
        .into_iter()
        .map(|t| t.parse::<i64>().map_err(|_| bad(t)))
        .collect()
}

/// Ring coordinates `a + bξ` written `a+bi`; plain integers have `b = 0`.
pub fn parse_ring_list(literal: &str) -> Result<Vec<QuadInt>, CliError> {
    tokens(literal)?
        .into_iter()
        .map(|t| {
            let z = parse_complex(t)?;
            let int = |x: f64| {
                if x.fract() == 0.0 && x.abs() < 9.0e15 {
                    Ok(x as i64)
                } else {
                    Err(bad(t))
                }
            };
            Ok(QuadInt::new(int(z.re)?, int(z.im)?))
        })
        .collect()
}
