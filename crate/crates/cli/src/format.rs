//! Locale-independent number formatting.

/// Environment variable overriding the number of significant digits.
pub const PRECISION_ENV: &str = "GHZLHV_PRECISION";
pub const DEFAULT_PRECISION: usize = 12;

pub fn precision() -> usize {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|p| (1..=17).contains(p))
        .unwrap_or(DEFAULT_PRECISION)
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%g`-style formatting with `digits` significant digits.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_fraction(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

/// [`sig`] at the configured precision.
pub fn num(x: f64) -> String {
    sig(x, precision())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(sig(0.0, 12), "0");
        assert_eq!(sig(4.0, 12), "4");
        assert_eq!(sig(-1.0, 12), "-1");
        assert_eq!(sig(0.92, 12), "0.92");
        assert_eq!(sig(1.0 / 1.0864, 12), "0.920471281296");
        assert_eq!(sig(6e-7, 12), "6e-7");
        assert_eq!(sig(6.0194e-7, 3), "6.02e-7");
        assert_eq!(sig(1e10, 12), "10000000000");
        assert_eq!(sig(1e12, 12), "1e12");
        assert_eq!(sig(123456.0, 3), "1.23e5");
        assert_eq!(sig(0.000123, 12), "0.000123");
        assert_eq!(sig(2.0 / 3.0, 4), "0.6667");
    }

    #[test]
    fn round_trips_at_requested_digits() {
        for &x in &[0.1, 1.0 / 3.0, 6.019e-7, 123.456, -0.999999999999, 7.19566] {
            let s = sig(x, 12);
            let back: f64 = s.parse().unwrap();
            assert_eq!(sig(back, 12), s);
        }
    }
}
