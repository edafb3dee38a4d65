//! Minimal CSV building with C-style `%.12g` number formatting.

const SIG_DIGITS: usize = 12;

/// Formats like C's `%.12g`: shortest of fixed/scientific, trailing zeros
/// removed.
pub fn fmt_g(x: f64) -> String {
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
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows of already formatted cells under a fixed header.
pub struct Table {
    width: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            width: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width must match header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn num(x: f64) -> String {
    fmt_g(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}
