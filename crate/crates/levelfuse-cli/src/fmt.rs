//! Numeric display with 12 significant digits, in the style of `%g`.

pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let formatted = format!("{:.*e}", 11, x);
    // Split "d.dddddddddddEsnn" into mantissa and exponent.
    let (mantissa, exp) = formatted.split_once('e').expect("exponential form");
    let exp: i32 = exp.parse().expect("exponent");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    if (-4..12).contains(&exp) {
        // Re-render as plain decimal at the same precision.
        let digits = 11 - exp;
        let s = if digits >= 0 {
            format!("{:.*}", digits as usize, x)
        } else {
            format!("{x:.0}")
        };
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{mantissa}e{exp}")
    }
}
