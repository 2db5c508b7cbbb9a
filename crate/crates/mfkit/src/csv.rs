//! Plot-ready CSV: a `# key=value ...` header echoing the run configuration,
//! then `abscissa,value` rows with floats in `%.12g` style.

use std::fmt::Write as _;

use mfkit_core::spectra::SpectrumCurve;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// exponent form outside `1e-4 ..= 1e12`.
pub fn g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header line from ordered `key=value` pairs.
pub fn header(fields: &[(&str, String)]) -> String {
    let mut out = String::from("#");
    for (k, v) in fields {
        let _ = write!(out, " {k}={v}");
    }
    out.push('\n');
    out
}

pub fn rows(samples: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (x, y) in samples {
        let _ = writeln!(out, "{},{}", g12(*x), g12(*y));
    }
    out
}

/// Full CSV for a curve; `kind` always leads the header.
pub fn curve(c: &SpectrumCurve, fields: &[(&str, String)]) -> String {
    let mut all = vec![("kind", c.kind().name().to_string())];
    all.extend(fields.iter().cloned());
    let mut out = header(&all);
    out.push_str(&rows(c.samples()));
    out
}
